//! Dispatch from a validated configuration to the library operations.

use std::path::Path;
use std::time::Instant;

use hmprate::belief::{backward_step_into, forward_step_into};
use hmprate::family::ParametrizedFamily;
use hmprate::quadrature::DEFAULT_ORDER;
use hmprate::series::entropy_series_at;
use hmprate::{
    capacity_expansion_report, default_burn_in, detect_high_noise_point, edge_occupancy_entropy_derivative, entropy_derivative_mc,
    entropy_rate_exact, entropy_rate_mc_with, isi_edge_optimizer, isi_graph, simulate_path, ChannelLaw, HiddenMarkovModel,
};
use rayon::prelude::*;

use crate::check::check;
use crate::config::{DerivMode, ExperimentConfig, Operation};
use crate::error::{CliError, Result};
use crate::files::{ChannelFile, ModelFile};
use crate::record::{Cell, Column, ResultRecord};

/// Runs the configured operation and writes the result to `--out` when given.
pub fn run(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    let start = Instant::now();
    let mut record = match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build().map_err(|e| CliError::config(format!("--workers: {e}")))?;
            pool.install(|| dispatch(config))?
        }
        None => dispatch(config)?,
    };
    record.seed = config.seed;
    record.units = config.units;
    record.inputs = config.echo();
    record.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(out) = &config.out {
        write_file(out, &record.render(config.format)?)?;
    }
    Ok(record)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    match cfg.operation {
        Operation::Entropy => entropy(cfg, &load_model(cfg)?),
        Operation::EntropyExact => entropy_exact(cfg, &load_model(cfg)?),
        Operation::Deriv(DerivMode::Observation) => derivative(cfg, &load_model(cfg)?),
        Operation::Deriv(DerivMode::Edge) => edge_derivative(cfg, &load_model(cfg)?),
        Operation::Series => series(cfg, &load_model(cfg)?),
        Operation::CapacityExpansion => capacity(cfg, &load_channel(cfg)?),
        Operation::IsiOptimize => isi(&load_channel(cfg)?),
        Operation::Check => {
            let file = load_model(cfg)?;
            let theta = cfg.theta.values()?.first().copied();
            let model = file.model_at(theta)?;
            let derivs = match (theta, &file.family) {
                (Some(t), Some(f)) => Some(f.derivatives(t)?),
                _ => None,
            };
            check(&model, derivs.as_ref(), cfg.samples, cfg.burn_in, cfg.seed)
        }
    }
}

fn load_model(cfg: &ExperimentConfig) -> Result<ModelFile> {
    ModelFile::load(cfg.model.as_deref().expect("validated"))
}

fn load_channel(cfg: &ExperimentConfig) -> Result<ChannelFile> {
    ChannelFile::load(cfg.channel.as_deref().expect("validated"))
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.expect("validated")
}

fn entropy(cfg: &ExperimentConfig, file: &ModelFile) -> Result<ResultRecord> {
    let n = cfg.n.expect("validated");
    let points = cfg.theta.points()?;
    let mut record = ResultRecord::new(
        "entropy",
        vec![Column::plain("theta"), Column::info("entropy"), Column::info("std_error"), Column::plain("n"), Column::plain("burnin")],
    );
    let rows = points
        .par_iter()
        .map(|&t| {
            let model = file.model_at(t)?;
            let burn = cfg.burn_in.unwrap_or_else(|| default_burn_in(&model));
            let est = entropy_rate_mc_with(&model, n, burn, seed(cfg))?;
            Ok(vec![t.into(), est.estimate.into(), est.std_error.into(), n.into(), burn.into()])
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| record.push(r));
    if let Some(path) = &cfg.beliefs {
        let model = file.model_at(points[0])?;
        write_file(path, &belief_dump(&model, n, seed(cfg))?)?;
    }
    Ok(record)
}

/// Rows `t, α_t, β_t, ψ_t` along the path the estimator simulates; β runs
/// backward from `β_n = 1`.
fn belief_dump(model: &HiddenMarkovModel, n: usize, seed: u64) -> Result<String> {
    let path = simulate_path(model, n, seed);
    let q = model.num_states();
    let obs = model.observations();
    let mut m = hmprate::Matrix::zeros(q, q);
    let mut alphas = vec![model.pi().to_vec()];
    let mut psis = vec![None];
    for &y in &path.outputs {
        obs.fill(y, &mut m);
        let mut next = vec![0.0; q];
        let psi = forward_step_into(alphas.last().expect("nonempty"), &m, &mut next)?;
        alphas.push(next);
        psis.push(Some(psi));
    }
    let mut betas = vec![vec![1.0; q]; n + 1];
    for t in (0..n).rev() {
        obs.fill(path.outputs[t], &mut m);
        let (later, earlier) = (betas[t + 1].clone(), &mut betas[t]);
        backward_step_into(&later, &m, model.pi(), earlier)?;
    }
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        let mut header = vec!["t".to_string()];
        header.extend((0..q).map(|i| format!("alpha_{i}")));
        header.extend((0..q).map(|i| format!("beta_{i}")));
        header.push("psi".into());
        w.write_record(&header).map_err(io)?;
        for t in 0..=n {
            let mut row = vec![t.to_string()];
            row.extend(alphas[t].iter().map(|x| x.to_string()));
            row.extend(betas[t].iter().map(|x| x.to_string()));
            row.push(psis[t].map_or(String::new(), |p| p.to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| CliError::Io(e.to_string()))
}

fn entropy_exact(cfg: &ExperimentConfig, file: &ModelFile) -> Result<ResultRecord> {
    let n = cfg.n.expect("validated");
    let mut record = ResultRecord::new("entropy-exact", vec![Column::plain("theta"), Column::plain("n"), Column::info("entropy")]);
    let rows = cfg
        .theta
        .points()?
        .par_iter()
        .map(|&t| Ok(vec![t.into(), n.into(), entropy_rate_exact(&file.model_at(t)?, n)?.into()]))
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| record.push(r));
    Ok(record)
}

fn derivative(cfg: &ExperimentConfig, file: &ModelFile) -> Result<ResultRecord> {
    let family = file.require_family()?;
    let samples = cfg.samples.expect("validated");
    let mut record = ResultRecord::new(
        "deriv-observation",
        vec![Column::plain("theta"), Column::info("derivative"), Column::info("std_error"), Column::plain("samples")],
    );
    for t in cfg.theta.values()? {
        let est = entropy_derivative_mc(family, t, samples, cfg.burn_in, seed(cfg))?;
        record.push(vec![t.into(), est.estimate.into(), est.std_error.into(), samples.into()]);
    }
    Ok(record)
}

fn edge_derivative(cfg: &ExperimentConfig, file: &ModelFile) -> Result<ResultRecord> {
    let perturbation =
        file.edge_perturbation.as_ref().ok_or_else(|| CliError::config("deriv --mode edge needs `edge_perturbation` in the model file"))?;
    let samples = cfg.samples.expect("validated");
    let mut record = ResultRecord::new(
        "deriv-edge",
        vec![Column::plain("theta"), Column::info("derivative"), Column::info("std_error"), Column::plain("samples")],
    );
    for t in cfg.theta.points()? {
        let model = file.model_at(t)?;
        let est = edge_occupancy_entropy_derivative(&model, perturbation, samples, cfg.window, seed(cfg))?;
        record.push(vec![t.into(), est.estimate.into(), est.std_error.into(), samples.into()]);
    }
    Ok(record)
}

fn series(cfg: &ExperimentConfig, file: &ModelFile) -> Result<ResultRecord> {
    let family = file.require_family()?;
    let theta_star = family.high_noise_point().ok_or_else(|| hmprate::Error::NotHighNoise("family has no designated high-noise point".into()))?;
    let point = detect_high_noise_point(family, theta_star)?;
    let s = entropy_series_at(family, &point, DEFAULT_ORDER)?;
    let mut columns = vec![Column::plain("theta_star"), Column::info("c0"), Column::info("c1"), Column::info("c2"), Column::plain("residual")];
    let head: Vec<Cell> = vec![s.theta_star.into(), s.c0.into(), s.c1.into(), s.c2.into(), point.residual.into()];
    let thetas = cfg.theta.values()?;
    if thetas.is_empty() {
        let mut record = ResultRecord::new("series", columns);
        record.push(head);
        return Ok(record);
    }
    columns.extend([Column::plain("theta"), Column::info("predicted")]);
    let mut record = ResultRecord::new("series", columns);
    for t in thetas {
        let mut row = head.clone();
        row.extend([t.into(), s.predict(t).into()]);
        record.push(row);
    }
    Ok(record)
}

fn capacity(cfg: &ExperimentConfig, file: &ChannelFile) -> Result<ResultRecord> {
    let family = file.require_family()?;
    if file.input_laws.is_empty() {
        return Err(CliError::config("capacity-expansion needs `input_law` or `input_laws` in the channel file"));
    }
    let n = cfg.n.expect("validated");
    let mut record = ResultRecord::new(
        "capacity-expansion",
        vec![
            Column::plain("input_id"),
            Column::info("c2"),
            Column::plain("theta_check"),
            Column::info("I_mc"),
            Column::info("stderr"),
            Column::info("predicted"),
        ],
    );
    for t in cfg.theta.values()? {
        let report = capacity_expansion_report(family, &file.input_laws, t, n, cfg.burn_in, seed(cfg))?;
        for row in report.rows {
            record.push(vec![
                row.input_id.into(),
                row.c2.into(),
                row.theta_check.into(),
                row.i_mc.into(),
                row.std_error.into(),
                row.predicted.into(),
            ]);
        }
    }
    Ok(record)
}

fn isi(file: &ChannelFile) -> Result<ResultRecord> {
    let channel = file.require_channel()?;
    let ChannelLaw::IsiGaussian { variance, .. } = channel.law() else {
        return Err(CliError::config("isi-optimize needs a channel file with `isi_means`"));
    };
    let (graph, weights) = isi_graph(channel)?;
    let opt = isi_edge_optimizer(&graph, &weights)?;
    let mut columns =
        vec![Column::plain("value"), Column::info("c2"), Column::plain("gap"), Column::plain("kkt_residual"), Column::plain("iterations")];
    columns.extend(graph.edges().iter().map(|&(a, b)| Column::plain(&format!("e[{}->{}]", file.states[a], file.states[b]))));
    let mut row: Vec<Cell> =
        vec![opt.value.into(), (opt.value / variance).into(), opt.gap_trace.last().copied().into(), opt.kkt_residual.into(), opt.iterations.into()];
    row.extend(opt.occupancy.values().iter().map(|&e| Cell::from(e)));
    let mut record = ResultRecord::new("isi-optimize", columns);
    record.push(row);
    Ok(record)
}
