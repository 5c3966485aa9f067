use hmprate::channel::compose;
use hmprate::{
    capacity_expansion_report, capacity_second_derivative, isi_edge_optimizer, isi_graph, max_mean_cycle, mutual_information_rate_mc_with,
    rll_bsc_capacity_coefficient, vertex_enumeration_optimum, ChannelFamily, Digraph, FiniteStateChannel, MarkovInput,
};
use proptest::prelude::*;

fn rll_grid() -> Vec<(String, MarkovInput)> {
    (0..10).map(|k| k as f64 / 10.0).map(|p| (format!("p00={p:.1}"), MarkovInput::rll01(p).unwrap())).collect()
}

#[test]
fn rll_curvature_follows_closed_form() {
    let family = ChannelFamily::bsc().unwrap();
    for (id, input) in rll_grid() {
        let p00: f64 = id[4..].parse().unwrap();
        let c2 = capacity_second_derivative(&family, &input).unwrap();
        assert!((c2 / 2.0 - rll_bsc_capacity_coefficient(p00)).abs() < 1e-10, "{id}: {c2}");
    }
}

#[test]
fn rll_grid_report() {
    let family = ChannelFamily::bsc().unwrap();
    let report = capacity_expansion_report(&family, &rll_grid(), 0.05, 1_000_000, None, 11).unwrap();
    assert_eq!(report.argmax, 0);
    assert!((report.rows[0].c2 / 2.0 - 2.0).abs() < 1e-10);
    // p00 = 0 makes the input a deterministic alternation: H(X) = 0, so I = 0 for every θ.
    let periodic = &report.rows[0];
    assert!(periodic.i_mc.abs() <= 3.0 * periodic.std_error, "{periodic:?}");
    for row in &report.rows[1..] {
        let rel = (row.i_mc - row.predicted).abs() / row.predicted;
        assert!(rel < 0.15, "{}: I = {} ± {} vs {}", row.input_id, row.i_mc, row.std_error, row.predicted);
    }
}

#[test]
fn mutual_information_respects_data_processing() {
    for (p00, eps) in [(0.3, 0.1), (0.6, 0.25), (0.0, 0.4)] {
        let input = MarkovInput::rll01(p00).unwrap();
        let channel = FiniteStateChannel::bsc(eps).unwrap();
        let est = mutual_information_rate_mc_with(&channel, &input, 400_000, Some(2000), 2).unwrap();
        let h_x = input_entropy(p00);
        let h_y_max = 2f64.ln();
        let h_cond = -(eps * eps.ln() + (1.0 - eps) * (1.0 - eps).ln());
        assert!(est.estimate >= -3.0 * est.std_error, "{est:?}");
        assert!(est.estimate <= h_x + 3.0 * est.std_error, "{est:?} vs H(X) = {h_x}");
        assert!(est.estimate <= h_y_max - h_cond + 3.0 * est.std_error);
    }
}

/// Entropy rate of the (0,1)-RLL input chain.
fn input_entropy(p00: f64) -> f64 {
    let h = |p: f64| if p > 0.0 && p < 1.0 { -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) } else { 0.0 };
    let pi0 = 1.0 / (2.0 - p00);
    pi0 * h(p00)
}

#[test]
fn composition_rejects_periodic_input() {
    let channel = FiniteStateChannel::bsc(0.2).unwrap();
    assert!(compose(&channel, &MarkovInput::rll01(0.0).unwrap()).is_err());
    assert!(compose(&channel, &MarkovInput::rll01(0.4).unwrap()).is_ok());
}

#[test]
fn dicode_optimum() {
    let channel = FiniteStateChannel::dicode(1.0).unwrap();
    let (graph, weights) = isi_graph(&channel).unwrap();
    let opt = isi_edge_optimizer(&graph, &weights).unwrap();
    assert!((opt.value - 4.0).abs() < 1e-8);
    let e = opt.occupancy.to_matrix();
    assert!((e[(0, 1)] + e[(1, 0)] - 1.0).abs() < 1e-8);
    let (_, reference) = vertex_enumeration_optimum(&graph, &weights).unwrap();
    assert!((reference - opt.value).abs() < 1e-8);
}

/// Graphs with at most 8 edges: every node has a self-loop or a cycle through it.
fn small_graphs() -> Vec<Digraph> {
    let specs: Vec<(usize, Vec<(usize, usize)>)> = vec![
        (1, vec![(0, 0)]),
        (2, vec![(0, 1), (1, 0)]),
        (2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]),
        (3, vec![(0, 1), (1, 2), (2, 0)]),
        (3, vec![(0, 1), (1, 2), (2, 0), (1, 0), (2, 1), (0, 2)]),
        (3, vec![(0, 0), (0, 1), (1, 2), (2, 0), (2, 2), (1, 0)]),
        (4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (2, 0), (1, 1), (3, 3)]),
        (4, vec![(0, 0), (0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2), (3, 3)]),
    ];
    specs.into_iter().map(|(n, e)| Digraph::new(n, e).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimizer_matches_enumeration(graph_index in 0..8usize, raw in prop::collection::vec(-3.0f64..3.0, 8)) {
        let graph = &small_graphs()[graph_index];
        let weights = &raw[..graph.num_edges()];
        let opt = isi_edge_optimizer(graph, weights).unwrap();
        let (_, reference) = vertex_enumeration_optimum(graph, weights).unwrap();
        prop_assert!((opt.value - reference).abs() < 1e-8, "{} vs {}", opt.value, reference);
        prop_assert!(opt.occupancy.flow_imbalance() < 1e-12);
    }

    #[test]
    fn zero_mean_instances_pick_the_heaviest_cycle(a in 0.1f64..3.0, b in 0.1f64..3.0) {
        // Mirrored weights: the loops at ±a and the two-cycle ±b all mix to zero mean.
        let graph = Digraph::new(2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let weights = [a, b, -b, -a];
        let opt = isi_edge_optimizer(&graph, &weights).unwrap();
        let squares: Vec<f64> = weights.iter().map(|m| m * m).collect();
        let (_, best) = max_mean_cycle(&graph, &squares).unwrap();
        prop_assert!(opt.value >= best - 1e-8, "{} < {}", opt.value, best);
        prop_assert!((opt.value - best).abs() < 1e-8);
    }
}
