//! Model and channel files.
//!
//! A model file describes a hidden Markov process whose outputs attach to
//! transitions:
//!
//! ```json
//! {
//!   "states": ["good", "bad"],
//!   "P": [[0.9, 0.1], [0.5, 0.5]],
//!   "alphabet": ["0", "1"],
//!   "h": { "*->good": [0.9, 0.1], "*->bad": [0.1, 0.9] },
//!   "family": { "type": "bsc", "labels": [0, 1] }
//! }
//! ```
//!
//! `h` maps an edge `from->to` to a law over the alphabet; `*` matches any
//! state and an exact edge beats a wildcard. Gaussian outputs replace the
//! alphabet with `{"gaussian": {"means": [[..]], "variance": 1.0}}` and need
//! no `h`. The optional `family` is one of `bsc`, `linear` (with
//! `direction`, optional `curvature`, `domain`, `theta_star`) or
//! `gaussian_scale` (with `domain`). An optional `edge_perturbation` matrix
//! feeds the edge-occupancy derivative.
//!
//! A channel file gives `channel_states`, `inputs`, and either the kernel
//! `W[s][x][y][s']` or Gaussian intersymbol interference through
//! `isi_means[s][x]`, optional `next_state[s][x]` and `variance`. Input laws
//! come as `input_law` or a list `input_laws`, each one of `table` (with
//! `memory`), `iid`, `first_order` or `rll01`.

use std::path::Path;

use hmprate::family::ParametrizedFamily;
use hmprate::{
    ChannelFamily, EdgePerturbation, FiniteStateChannel, GaussianScaleFamily, HiddenMarkovModel, MarkovChain, MarkovInput, Matrix, OutputFamily,
    PolynomialFamily,
};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::json::Field;

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::model("", format!("{} is not valid JSON: {e}", path.display())))
}

/// Moves a core validation error under `to` when its path starts with `from`.
fn relocate(e: hmprate::Error, from: &str, to: &str) -> CliError {
    relocate_any(e, &[(from, to)])
}

/// Rewrites the first matching path prefix of a core validation error.
fn relocate_any(e: hmprate::Error, moves: &[(&str, &str)]) -> CliError {
    match e {
        hmprate::Error::InvalidModel { path, message } => match moves.iter().find(|(from, _)| path.starts_with(from)) {
            Some((from, to)) => CliError::model(format!("{to}{}", &path[from.len()..]), message),
            None => CliError::model(path, message),
        },
        other => other.into(),
    }
}

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub symbols: Option<Vec<String>>,
    pub chain: MarkovChain,
    /// The model exactly as written, when the file fixes its outputs.
    pub base: Option<HiddenMarkovModel>,
    pub family: Option<OutputFamily>,
    pub edge_perturbation: Option<EdgePerturbation>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(&read_json(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::model("", format!("not valid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let root = Field::root(value);
        let states = root.require("states")?.names()?;
        let n = states.len();
        let p = root.require("P")?.matrix(n, n)?;
        let chain = MarkovChain::new(p)?;

        let alphabet = root.require("alphabet")?;
        let mut symbols = None;
        let mut gaussian = None;
        if let Some(g) = alphabet.get("gaussian") {
            let means = g.require("means")?.matrix(n, n)?;
            let variance = match g.get("variance") {
                Some(v) => v.f64()?,
                None => 1.0,
            };
            gaussian = Some((means, variance));
        } else {
            symbols = Some(alphabet.names()?);
        }

        let kernels = match (root.get("h"), &symbols) {
            (Some(h), Some(sym)) => Some(edge_table(&h, &states, &chain, sym.len(), true)?),
            (Some(h), None) => return Err(h.error("Gaussian models take their outputs from `alphabet.gaussian`")),
            (None, _) => None,
        };
        let base = match (&kernels, &gaussian) {
            (Some(h), _) => Some(
                HiddenMarkovModel::finite(chain.clone(), h).map_err(|e| name_edges(e, &states))?.with_symbols(symbols.clone().unwrap_or_default())?,
            ),
            (None, Some((means, variance))) => Some(HiddenMarkovModel::gaussian(chain.clone(), means.clone(), *variance)?),
            (None, None) => None,
        };

        let family = match root.get("family") {
            None => None,
            Some(f) => Some(parse_family(&f, &states, &chain, symbols.as_deref(), kernels.as_deref(), gaussian.as_ref())?),
        };
        if base.is_none() && family.is_none() {
            return Err(CliError::model("h", "missing field (or give a `family`)"));
        }

        let edge_perturbation = match root.get("edge_perturbation") {
            None => None,
            Some(f) => {
                let delta = f.matrix(n, n)?;
                Some(EdgePerturbation::new(&chain, delta).map_err(|e| f.error(e.to_string()))?)
            }
        };
        Ok(ModelFile { states, symbols, chain, base, family, edge_perturbation })
    }

    /// The model at `theta` (needs a family) or the model as written.
    pub fn model_at(&self, theta: Option<f64>) -> Result<HiddenMarkovModel> {
        match theta {
            Some(t) => Ok(self.require_family()?.model_at(t)?),
            None => self.base.clone().ok_or_else(|| CliError::config("the model file defines its outputs only through `family`; pass --theta")),
        }
    }

    pub fn require_family(&self) -> Result<&OutputFamily> {
        self.family.as_ref().ok_or_else(|| CliError::config("this operation needs a model file with a `family`"))
    }
}

/// Rewrites core paths `h[i->j]` to use state names.
fn name_edges(e: hmprate::Error, states: &[String]) -> CliError {
    if let hmprate::Error::InvalidModel { path, message } = &e {
        if let Some(rest) = path.strip_prefix("h[") {
            if let Some((edge, tail)) = rest.split_once(']') {
                if let Some((a, b)) = edge.split_once("->") {
                    if let (Ok(i), Ok(j)) = (a.parse::<usize>(), b.parse::<usize>()) {
                        if i < states.len() && j < states.len() {
                            return CliError::model(format!("h[{}->{}]{tail}", states[i], states[j]), message.clone());
                        }
                    }
                }
            }
        }
    }
    e.into()
}

/// Per-symbol tables `[y][(i, j)]` from an edge map. Edges missing from the
/// map are an error when `complete`, zero otherwise.
fn edge_table(map: &Field, states: &[String], chain: &MarkovChain, ny: usize, complete: bool) -> Result<Vec<Matrix>> {
    let n = states.len();
    let lookup = |name: &str, field: &Field| -> Result<Option<usize>> {
        if name == "*" {
            return Ok(None);
        }
        states.iter().position(|s| s == name).map(Some).ok_or_else(|| field.error(format!("unknown state `{name}`")))
    };
    // (specificity, key) of the entry that set each edge.
    let mut chosen: Vec<Option<(u8, String, Vec<f64>)>> = vec![None; n * n];
    for (key, field) in map.entries()? {
        let (a, b) = key.split_once("->").ok_or_else(|| field.error("edge keys look like `from->to`"))?;
        let (from, to) = (lookup(a.trim(), &field)?, lookup(b.trim(), &field)?);
        let law = field.vec_f64()?;
        if law.len() != ny {
            return Err(field.error(format!("expected {ny} entries, got {}", law.len())));
        }
        let rank = from.is_some() as u8 + to.is_some() as u8;
        for i in (0..n).filter(|&i| from.is_none_or(|f| f == i)) {
            for j in (0..n).filter(|&j| to.is_none_or(|t| t == j)) {
                match &chosen[i * n + j] {
                    Some((r, other, _)) if *r == rank => {
                        return Err(field.error(format!("overlaps `{other}` on edge {}->{}", states[i], states[j])));
                    }
                    Some((r, _, _)) if *r > rank => {}
                    _ => chosen[i * n + j] = Some((rank, key.to_string(), law.clone())),
                }
            }
        }
    }
    let mut tables = vec![Matrix::zeros(n, n); ny];
    for (i, j) in chain.valid_edges() {
        match &chosen[i * n + j] {
            Some((_, _, law)) => {
                for (y, &v) in law.iter().enumerate() {
                    tables[y][(i, j)] = v;
                }
            }
            None if complete => return Err(CliError::model(format!("{}[{}->{}]", map.path, states[i], states[j]), "missing law for this edge")),
            None => {}
        }
    }
    Ok(tables)
}

fn parse_family(
    f: &Field,
    states: &[String],
    chain: &MarkovChain,
    symbols: Option<&[String]>,
    kernels: Option<&[Matrix]>,
    gaussian: Option<&(Matrix, f64)>,
) -> Result<OutputFamily> {
    let kind = f.require("type")?;
    match kind.str()? {
        "bsc" => {
            if symbols.is_none_or(|s| s.len() != 2) {
                return Err(kind.error("a bsc family needs a two-symbol alphabet"));
            }
            let labels = match f.get("labels") {
                Some(l) => l.items()?.iter().map(|x| x.usize()).collect::<Result<Vec<_>>>()?,
                None if states.len() == 2 => vec![0, 1],
                None => return Err(CliError::model(format!("{}.labels", f.path), "needed unless there are exactly two states")),
            };
            Ok(OutputFamily::Finite(PolynomialFamily::bsc(chain.clone(), &labels)?))
        }
        "linear" => {
            let (Some(symbols), Some(h0)) = (symbols, kernels) else {
                return Err(kind.error("a linear family needs a finite alphabet and base kernels `h`"));
            };
            let ny = symbols.len();
            let direction = edge_table(&f.require("direction")?, states, chain, ny, false)?;
            let curvature = match f.get("curvature") {
                Some(c) => edge_table(&c, states, chain, ny, false)?,
                None => vec![Matrix::zeros(states.len(), states.len()); ny],
            };
            let domain = f.require("domain")?.interval()?;
            let theta_star = f.get("theta_star").map(|t| t.f64()).transpose()?;
            Ok(OutputFamily::Finite(
                PolynomialFamily::new(chain.clone(), h0.to_vec(), direction, curvature, domain, theta_star)
                    .map_err(|e| relocate(e, "family", &f.path))?,
            ))
        }
        "gaussian_scale" => {
            let Some((means, variance)) = gaussian else {
                return Err(kind.error("a gaussian_scale family needs `alphabet.gaussian`"));
            };
            let domain = f.require("domain")?.interval()?;
            Ok(OutputFamily::Gaussian(GaussianScaleFamily::new(chain.clone(), means.clone(), *variance, domain)?))
        }
        other => Err(kind.error(format!("unknown family type `{other}` (expected bsc, linear or gaussian_scale)"))),
    }
}

#[derive(Debug, Clone)]
pub struct ChannelFile {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub channel: Option<FiniteStateChannel>,
    pub family: Option<ChannelFamily>,
    pub input_laws: Vec<(String, MarkovInput)>,
}

impl ChannelFile {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(&read_json(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::model("", format!("not valid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let root = Field::root(value);
        let states = match root.get("channel_states") {
            Some(f) => f.names()?,
            None => vec!["0".to_string()],
        };
        let inputs = root.require("inputs")?.names()?;
        let (ns, nx) = (states.len(), inputs.len());

        let channel =
            match (root.get("W"), root.get("isi_means")) {
                (Some(_), Some(m)) => return Err(m.error("give either `W` or `isi_means`, not both")),
                (Some(w), None) => {
                    let (ny, flat) = kernel_tensor(&w, ns, nx)?;
                    Some(FiniteStateChannel::finite(ns, nx, ny, flat)?)
                }
                (None, Some(m)) => {
                    let means = m.matrix(ns, nx)?;
                    let next_state = match root.get("next_state") {
                        Some(f) => next_state_table(&f, &states, nx)?,
                        None => shift_register(ns, nx).ok_or_else(|| CliError::model("next_state", "required unless states are input histories"))?,
                    };
                    let variance = root.get("variance").map(|v| v.f64()).transpose()?.unwrap_or(1.0);
                    Some(FiniteStateChannel::isi(ns, nx, next_state, means.as_slice().to_vec(), variance).map_err(|e| {
                        relocate_any(e, &[("isi.means", "isi_means"), ("isi.next_state", "next_state"), ("isi.variance", "variance")])
                    })?)
                }
                (None, None) => None,
            };

        let family = match root.get("family") {
            Some(f) => Some(parse_channel_family(&f, ns, nx, channel.as_ref())?),
            None => match &channel {
                Some(c) if c.is_gaussian() => Some(ChannelFamily::isi(c.clone(), (f64::NEG_INFINITY, f64::INFINITY))?),
                _ => None,
            },
        };
        if channel.is_none() && family.is_none() {
            return Err(CliError::model("W", "missing field (or give `isi_means`, or a bsc `family`)"));
        }

        let mut input_laws = Vec::new();
        if let Some(law) = root.get("input_law") {
            input_laws.push(("input".to_string(), parse_input_law(&law, nx)?));
        }
        if let Some(list) = root.get("input_laws") {
            for (k, law) in list.items()?.iter().enumerate() {
                let id = match law.get("id") {
                    Some(id) => id.str()?.to_string(),
                    None => format!("input{k}"),
                };
                input_laws.push((id, parse_input_law(law, nx)?));
            }
        }
        Ok(ChannelFile { states, inputs, channel, family, input_laws })
    }

    pub fn require_family(&self) -> Result<&ChannelFamily> {
        self.family.as_ref().ok_or_else(|| CliError::config("this operation needs a channel file with a `family`"))
    }

    pub fn require_channel(&self) -> Result<&FiniteStateChannel> {
        self.channel.as_ref().ok_or_else(|| CliError::config("this operation needs a channel file with `W` or `isi_means`"))
    }
}

/// Flattens `W[s][x][y][s']`, returning the output alphabet size.
fn kernel_tensor(w: &Field, ns: usize, nx: usize) -> Result<(usize, Vec<f64>)> {
    let rows = w.items()?;
    if rows.len() != ns {
        return Err(w.error(format!("expected {ns} states, got {}", rows.len())));
    }
    let mut ny = None;
    let mut flat = Vec::new();
    for row in &rows {
        let by_input = row.items()?;
        if by_input.len() != nx {
            return Err(row.error(format!("expected {nx} inputs, got {}", by_input.len())));
        }
        for cell in &by_input {
            let by_output = cell.items()?;
            let expected = *ny.get_or_insert(by_output.len());
            if by_output.len() != expected || expected == 0 {
                return Err(cell.error(format!("expected {expected} outputs, got {}", by_output.len())));
            }
            for out in &by_output {
                let next = out.vec_f64()?;
                if next.len() != ns {
                    return Err(out.error(format!("expected {ns} next-state entries, got {}", next.len())));
                }
                flat.extend(next);
            }
        }
    }
    Ok((ny.unwrap_or(0), flat))
}

fn next_state_table(f: &Field, states: &[String], nx: usize) -> Result<Vec<usize>> {
    let rows = f.items()?;
    if rows.len() != states.len() {
        return Err(f.error(format!("expected {} rows, got {}", states.len(), rows.len())));
    }
    let mut table = Vec::new();
    for row in &rows {
        let cells = row.items()?;
        if cells.len() != nx {
            return Err(row.error(format!("expected {nx} entries, got {}", cells.len())));
        }
        for cell in &cells {
            let s = match cell.value {
                Value::String(name) => states.iter().position(|s| s == name).ok_or_else(|| cell.error(format!("unknown state `{name}`")))?,
                _ => cell.usize()?,
            };
            table.push(s);
        }
    }
    Ok(table)
}

/// Next state `(s |X| + x) mod |S|` when `|S| = |X|^m`: the state holds the last `m` inputs.
fn shift_register(ns: usize, nx: usize) -> Option<Vec<usize>> {
    let mut size = 1;
    while size < ns {
        size *= nx.max(2);
    }
    (size == ns).then(|| (0..ns).flat_map(|s| (0..nx).map(move |x| (s * nx + x) % ns)).collect())
}

fn parse_channel_family(f: &Field, ns: usize, nx: usize, channel: Option<&FiniteStateChannel>) -> Result<ChannelFamily> {
    let kind = f.require("type")?;
    match kind.str()? {
        "bsc" => {
            if ns != 1 || nx != 2 || channel.is_some_and(|c| c.num_outputs() != Some(2)) {
                return Err(kind.error("a bsc family needs one state, two inputs and two outputs"));
            }
            Ok(ChannelFamily::bsc()?)
        }
        "linear" => {
            let base = channel.filter(|c| !c.is_gaussian()).ok_or_else(|| kind.error("a linear family needs a kernel `W`"))?;
            let direction_field = f.require("direction")?;
            let (ny, direction) = kernel_tensor(&direction_field, ns, nx)?;
            if Some(ny) != base.num_outputs() {
                return Err(direction_field.error("must have the same shape as `W`"));
            }
            let domain = f.require("domain")?.interval()?;
            let theta_star = f.get("theta_star").map(|t| t.f64()).transpose()?;
            ChannelFamily::linear(base.clone(), direction, domain, theta_star).map_err(|e| relocate(e, "family", &f.path))
        }
        "isi_scale" => {
            let base = channel.filter(|c| c.is_gaussian()).ok_or_else(|| kind.error("an isi_scale family needs `isi_means`"))?;
            let domain = match f.get("domain") {
                Some(d) => d.interval()?,
                None => (f64::NEG_INFINITY, f64::INFINITY),
            };
            Ok(ChannelFamily::isi(base.clone(), domain)?)
        }
        other => Err(kind.error(format!("unknown family type `{other}` (expected bsc, linear or isi_scale)"))),
    }
}

fn parse_input_law(f: &Field, nx: usize) -> Result<MarkovInput> {
    let relocated = |e: hmprate::Error| relocate(e, "input_law", &f.path);
    if let Some(t) = f.get("table") {
        let memory = f.get("memory").map(|m| m.usize()).transpose()?.unwrap_or(1);
        let histories = nx.checked_pow(memory as u32).ok_or_else(|| CliError::model(format!("{}.memory", f.path), "too large"))?;
        let table = t.matrix(histories, nx)?;
        return MarkovInput::new(memory, nx, table.as_slice().to_vec()).map_err(relocated);
    }
    if let Some(p) = f.get("iid") {
        let probs = p.vec_f64()?;
        if probs.len() != nx {
            return Err(p.error(format!("expected {nx} entries, got {}", probs.len())));
        }
        return MarkovInput::iid(&probs).map_err(relocated);
    }
    if let Some(p) = f.get("first_order") {
        return MarkovInput::first_order(&p.matrix(nx, nx)?).map_err(relocated);
    }
    if let Some(p) = f.get("rll01") {
        if nx != 2 {
            return Err(p.error("needs a binary input alphabet"));
        }
        return MarkovInput::rll01(p.f64()?).map_err(relocated);
    }
    Err(f.error("expected one of `table`, `iid`, `first_order`, `rll01`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BSC_MARKOV: &str = r#"{
        "states": ["0", "1"],
        "P": [[0.9, 0.1], [0.5, 0.5]],
        "alphabet": ["0", "1"],
        "family": {"type": "bsc"}
    }"#;

    fn path_of(e: CliError) -> String {
        match e {
            CliError::Model { path, .. } => path,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn family_only_model() {
        let file = ModelFile::parse(BSC_MARKOV).unwrap();
        assert!(file.base.is_none());
        let m = file.model_at(Some(0.1)).unwrap();
        assert!((m.emission(0, 0, hmprate::Output::Symbol(0)) - 0.6).abs() < 1e-15);
        assert!(matches!(file.model_at(None), Err(CliError::Config(_))));
    }

    #[test]
    fn row_sum_error_names_the_row() {
        let text = r#"{"states": 2, "P": [[0.89, 0.1], [0.5, 0.5]], "alphabet": ["a"], "h": {"*->*": [1.0]}}"#;
        assert_eq!(path_of(ModelFile::parse(text).unwrap_err()), "P[0]");
    }

    #[test]
    fn flat_p_is_row_major() {
        let text = r#"{"states": 2, "P": [0.9, 0.1, 0.5, 0.5], "alphabet": ["a"], "h": {"*->*": [1.0]}}"#;
        let file = ModelFile::parse(text).unwrap();
        assert_eq!(file.chain.prob(0, 1), 0.1);
    }

    #[test]
    fn exact_edges_override_wildcards() {
        let text = r#"{"states": ["a", "b"], "P": [[0.5, 0.5], [0.5, 0.5]], "alphabet": ["x", "y"],
            "h": {"*->*": [0.5, 0.5], "a->b": [0.9, 0.1]}}"#;
        let m = ModelFile::parse(text).unwrap().base.unwrap();
        assert_eq!(m.emission(0, 1, hmprate::Output::Symbol(0)), 0.9);
        assert_eq!(m.emission(1, 1, hmprate::Output::Symbol(0)), 0.5);
    }

    #[test]
    fn kernel_errors_use_state_names() {
        let missing = r#"{"states": ["a", "b"], "P": [[0.5, 0.5], [0.5, 0.5]], "alphabet": ["x", "y"], "h": {"a->*": [0.5, 0.5]}}"#;
        assert_eq!(path_of(ModelFile::parse(missing).unwrap_err()), "h[b->a]");
        let bad_sum = r#"{"states": ["a", "b"], "P": [[0.5, 0.5], [0.5, 0.5]], "alphabet": ["x", "y"],
            "h": {"*->*": [0.5, 0.5], "b->a": [0.5, 0.6]}}"#;
        assert_eq!(path_of(ModelFile::parse(bad_sum).unwrap_err()), "h[b->a]");
        let ambiguous = r#"{"states": ["a", "b"], "P": [[0.5, 0.5], [0.5, 0.5]], "alphabet": ["x", "y"],
            "h": {"a->*": [0.5, 0.5], "*->a": [0.5, 0.5]}}"#;
        assert!(path_of(ModelFile::parse(ambiguous).unwrap_err()).starts_with("h["));
    }

    #[test]
    fn gaussian_model_and_family() {
        let text = r#"{"states": 2, "P": [[0.5, 0.5], [0.5, 0.5]],
            "alphabet": {"gaussian": {"means": [[0, -2], [2, 0]], "variance": 1.0}},
            "family": {"type": "gaussian_scale", "domain": [-1, 1]}}"#;
        let file = ModelFile::parse(text).unwrap();
        assert!(file.base.unwrap().is_gaussian());
        assert!(matches!(file.family, Some(OutputFamily::Gaussian(_))));
        let bad = text.replace("\"variance\": 1.0", "\"variance\": -1.0");
        assert_eq!(path_of(ModelFile::parse(&bad).unwrap_err()), "alphabet.gaussian.variance");
    }

    #[test]
    fn linear_family_direction_must_balance() {
        let text = r#"{"states": 2, "P": [[0.5, 0.5], [0.5, 0.5]], "alphabet": ["x", "y"], "h": {"*->*": [0.5, 0.5]},
            "family": {"type": "linear", "direction": {"*->0": [1, -1], "*->1": [-1, 0.5]}, "domain": [-0.2, 0.2], "theta_star": 0}}"#;
        assert!(path_of(ModelFile::parse(text).unwrap_err()).starts_with("family.direction"));
    }

    #[test]
    fn channel_files() {
        let bsc = r#"{"inputs": 2, "family": {"type": "bsc"}, "input_laws": [{"id": "a", "rll01": 0.2}, {"iid": [0.5, 0.5]}]}"#;
        let file = ChannelFile::parse(bsc).unwrap();
        assert_eq!(file.input_laws.len(), 2);
        assert_eq!(file.input_laws[1].0, "input1");

        let dicode = r#"{"channel_states": 2, "inputs": 2, "isi_means": [[0, -2], [2, 0]], "input_law": {"iid": [0.5, 0.5]}}"#;
        let file = ChannelFile::parse(dicode).unwrap();
        assert!(file.require_channel().unwrap().is_gaussian());
        assert!(file.family.is_some());

        let w = r#"{"inputs": 2, "W": [[[[0.9], [0.1]], [[0.2], [0.7]]]]}"#;
        assert_eq!(path_of(ChannelFile::parse(w).unwrap_err()), "W[0][1]");

        let law = r#"{"inputs": 2, "family": {"type": "bsc"}, "input_laws": [{"table": [[0.5, 0.5], [0.3, 0.6]]}]}"#;
        assert_eq!(path_of(ChannelFile::parse(law).unwrap_err()), "input_laws[0].table[1]");
    }
}
