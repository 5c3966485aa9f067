//! Maximizing `Σ e m² − (Σ e m)²` over edge occupancies of a state graph.
//!
//! Every vertex of the circulation polytope is the uniform measure on a simple
//! cycle. The objective only sees `A = Σ e m²` and `B = Σ e m` and increases
//! in `A`, so its maximum over the hull of any set of cycles lies on a segment
//! between two of them. Both the optimizer's corrective step and the
//! exhaustive reference search use that reduction.

use serde::Serialize;

use crate::channel::{ChannelLaw, FiniteStateChannel};
use crate::error::{Error, Result};
use crate::graph::{max_mean_cycle, Digraph};
use crate::linalg::Matrix;

pub const GAP_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 500;
const FEASIBILITY_TOL: f64 = 1e-10;
/// Cap on the number of simple cycles the exhaustive search will pair up.
pub const ENUMERATION_LIMIT: usize = 20_000;

/// Stationary edge probabilities `e_ij` on a fixed graph, indexed like its edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeOccupancy {
    graph: Digraph,
    values: Vec<f64>,
}

impl EdgeOccupancy {
    /// Checks `e >= 0`, `Σ e = 1` and flow balance within 1e-10.
    pub fn new(graph: Digraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.num_edges() {
            return Err(Error::InvalidArgument(format!("{} values for {} edges", values.len(), graph.num_edges())));
        }
        if let Some(k) = values.iter().position(|&v| !(v >= -FEASIBILITY_TOL)) {
            return Err(Error::InvalidArgument(format!("edge {k} has negative mass {}", values[k])));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::InvalidArgument(format!("edge masses sum to {total}")));
        }
        let occupancy = EdgeOccupancy { graph, values };
        let imbalance = occupancy.flow_imbalance();
        if imbalance > FEASIBILITY_TOL {
            return Err(Error::InvalidArgument(format!("flow imbalance {imbalance}")));
        }
        Ok(occupancy)
    }

    /// Uniform mass on the edges of a cycle.
    pub fn from_cycle(graph: &Digraph, cycle: &[usize]) -> Self {
        let mut values = vec![0.0; graph.num_edges()];
        for &e in cycle {
            values[e] += 1.0 / cycle.len() as f64;
        }
        EdgeOccupancy { graph: graph.clone(), values }
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_i |Σ_j e_ij − Σ_j e_ji|`.
    pub fn flow_imbalance(&self) -> f64 {
        let mut net = vec![0.0; self.graph.num_nodes()];
        for (&(i, j), &v) in self.graph.edges().iter().zip(&self.values) {
            net[i] += v;
            net[j] -= v;
        }
        net.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node-by-node matrix with `e_ij` on the graph's edges.
    pub fn to_matrix(&self) -> Matrix {
        let n = self.graph.num_nodes();
        let mut m = Matrix::zeros(n, n);
        for (&(i, j), &v) in self.graph.edges().iter().zip(&self.values) {
            m[(i, j)] = v;
        }
        m
    }

    /// `Σ e m² − (Σ e m)²`.
    pub fn objective(&self, weights: &[f64]) -> f64 {
        let (a, b) = moments(&self.values, weights);
        a - b * b
    }
}

fn moments(values: &[f64], weights: &[f64]) -> (f64, f64) {
    values.iter().zip(weights).fold((0.0, 0.0), |(a, b), (&e, &m)| (a + e * m * m, b + e * m))
}

#[derive(Debug, Clone, Serialize)]
pub struct IsiOptimum {
    #[serde(skip)]
    pub occupancy: EdgeOccupancy,
    pub value: f64,
    /// Certified bound on the distance to the optimum after each iteration; non-increasing.
    pub gap_trace: Vec<f64>,
    /// Largest first-order improvement still available at the returned point.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// A simple cycle with its moments `A = mean m²` and `B = mean m`.
#[derive(Debug, Clone)]
struct Atom {
    cycle: Vec<usize>,
    a: f64,
    b: f64,
}

impl Atom {
    fn new(cycle: Vec<usize>, weights: &[f64]) -> Self {
        let len = cycle.len() as f64;
        let a = cycle.iter().map(|&e| weights[e] * weights[e]).sum::<f64>() / len;
        let b = cycle.iter().map(|&e| weights[e]).sum::<f64>() / len;
        Atom { cycle, a, b }
    }
}

/// Best point `λ x + (1 − λ) y` on the segment between two atoms: `(λ, value)`.
fn best_on_segment(x: &Atom, y: &Atom) -> (f64, f64) {
    let (da, db) = (x.a - y.a, x.b - y.b);
    let f = |l: f64| {
        let (a, b) = (y.a + l * da, y.b + l * db);
        a - b * b
    };
    let mut lambda = if db == 0.0 {
        if da > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        ((da - 2.0 * db * y.b) / (2.0 * db * db)).clamp(0.0, 1.0)
    };
    // Endpoints guard against rounding in the stationary point.
    for end in [0.0, 1.0] {
        if f(end) > f(lambda) {
            lambda = end;
        }
    }
    (lambda, f(lambda))
}

/// Exact maximum over the hull of `atoms`: `(i, j, λ, value)` for the point `λ atoms[i] + (1 − λ) atoms[j]`.
fn best_in_hull(atoms: &[Atom]) -> (usize, usize, f64, f64) {
    let mut best = (0, 0, 1.0, atoms[0].a - atoms[0].b * atoms[0].b);
    for i in 0..atoms.len() {
        let single = atoms[i].a - atoms[i].b * atoms[i].b;
        if single > best.3 {
            best = (i, i, 1.0, single);
        }
        for j in i + 1..atoms.len() {
            let (lambda, value) = best_on_segment(&atoms[i], &atoms[j]);
            if value > best.3 {
                best = (i, j, lambda, value);
            }
        }
    }
    best
}

fn mix(graph: &Digraph, atoms: &[Atom], i: usize, j: usize, lambda: f64) -> EdgeOccupancy {
    let mut values = vec![0.0; graph.num_edges()];
    for (atom, w) in [(&atoms[i], lambda), (&atoms[j], 1.0 - lambda)] {
        if w > 0.0 {
            for &e in &atom.cycle {
                values[e] += w / atom.cycle.len() as f64;
            }
        }
    }
    EdgeOccupancy { graph: graph.clone(), values }
}

/// Frank–Wolfe over the circulation polytope with a maximum-mean-cycle linear
/// oracle. Each new cycle joins the active set and the iterate moves to the
/// exact optimum over the active set's hull, so the method stops after finitely
/// many oracle calls. Starts from uniform mass on a shortest cycle.
pub fn isi_edge_optimizer(graph: &Digraph, weights: &[f64]) -> Result<IsiOptimum> {
    if weights.len() != graph.num_edges() {
        return Err(Error::InvalidArgument(format!("{} weights for {} edges", weights.len(), graph.num_edges())));
    }
    if !graph.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let start = graph.shortest_cycle().ok_or(Error::NoCycle)?;
    let mut atoms = vec![Atom::new(start, weights)];
    let mut current = (0, 0, 1.0, atoms[0].a - atoms[0].b * atoms[0].b);
    let mut upper = f64::INFINITY;
    let mut gap_trace = Vec::new();
    for iteration in 1..=MAX_ITERATIONS {
        let point = mix(graph, &atoms, current.0, current.1, current.2);
        let (a, b) = moments(point.values(), weights);
        let value = a - b * b;
        let gradient: Vec<f64> = weights.iter().map(|&m| m * m - 2.0 * b * m).collect();
        let (cycle, best_linear) = max_mean_cycle(graph, &gradient)?;
        let fw_gap = (best_linear - (a - 2.0 * b * b)).max(0.0);
        upper = upper.min(value + fw_gap);
        let gap = (upper - value).max(0.0);
        gap_trace.push(gap);
        if gap <= GAP_TOL {
            return Ok(IsiOptimum { occupancy: point, value, gap_trace, kkt_residual: fw_gap, iterations: iteration });
        }
        let mut sorted = cycle.clone();
        sorted.sort_unstable();
        let known = atoms.iter().any(|at| {
            let mut c = at.cycle.clone();
            c.sort_unstable();
            c == sorted
        });
        if !known {
            atoms.push(Atom::new(cycle, weights));
        }
        let candidate = best_in_hull(&atoms);
        if candidate.3 >= current.3 {
            current = candidate;
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS, gap: gap_trace.last().copied().unwrap_or(f64::INFINITY) })
}

/// Reference optimum from every simple cycle and every pair of cycles.
pub fn vertex_enumeration_optimum(graph: &Digraph, weights: &[f64]) -> Result<(EdgeOccupancy, f64)> {
    if weights.len() != graph.num_edges() {
        return Err(Error::InvalidArgument(format!("{} weights for {} edges", weights.len(), graph.num_edges())));
    }
    let cycles = graph.simple_cycles();
    if cycles.is_empty() {
        return Err(Error::NoCycle);
    }
    if cycles.len() > ENUMERATION_LIMIT {
        return Err(Error::InvalidArgument(format!("{} simple cycles exceed the enumeration limit", cycles.len())));
    }
    let atoms: Vec<Atom> = cycles.into_iter().map(|c| Atom::new(c, weights)).collect();
    let (i, j, lambda, value) = best_in_hull(&atoms);
    Ok((mix(graph, &atoms, i, j, lambda), value))
}

/// State graph of an ISI channel: an edge `s → next(s, x)` per input, weighted by its mean.
pub fn isi_graph(channel: &FiniteStateChannel) -> Result<(Digraph, Vec<f64>)> {
    let ChannelLaw::IsiGaussian { next_state, means, .. } = channel.law() else {
        return Err(Error::InvalidArgument("state graph needs an ISI channel".into()));
    };
    let nx = channel.num_inputs();
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for s in 0..channel.num_states() {
        for x in 0..nx {
            let edge = (s, next_state[s * nx + x]);
            if edges.contains(&edge) {
                return Err(Error::InvalidArgument(format!("two inputs share the state transition {}->{}", edge.0, edge.1)));
            }
            edges.push(edge);
            weights.push(means[s * nx + x]);
        }
    }
    Ok((Digraph::new(channel.num_states(), edges)?, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::max_mean_cycle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dicode() -> (Digraph, Vec<f64>) {
        isi_graph(&FiniteStateChannel::dicode(1.0).unwrap()).unwrap()
    }

    #[test]
    fn dicode_optimum_alternates() {
        let (g, w) = dicode();
        let opt = isi_edge_optimizer(&g, &w).unwrap();
        assert!((opt.value - 4.0).abs() < 1e-12);
        let e = opt.occupancy.to_matrix();
        assert!((e[(0, 1)] - 0.5).abs() < 1e-12 && (e[(1, 0)] - 0.5).abs() < 1e-12);
        assert!(opt.kkt_residual <= 1e-6);
    }

    #[test]
    fn equal_weights_give_zero_at_a_cycle() {
        let g = Digraph::support(&Matrix::from_fn(3, 3, |_, _| 1.0));
        let w = vec![1.5; g.num_edges()];
        let opt = isi_edge_optimizer(&g, &w).unwrap();
        assert!(opt.value.abs() < 1e-12);
        assert_eq!(opt.iterations, 1);
        assert!(opt.occupancy.flow_imbalance() < 1e-12);
    }

    #[test]
    fn zero_mean_optimum_is_max_mean_cycle_of_squares() {
        let (g, w) = dicode();
        let squares: Vec<f64> = w.iter().map(|m| m * m).collect();
        let (_, best) = max_mean_cycle(&g, &squares).unwrap();
        assert!((isi_edge_optimizer(&g, &w).unwrap().value - best).abs() < 1e-8);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = Digraph::new(2, vec![(0, 0), (1, 1)]).unwrap();
        assert!(matches!(isi_edge_optimizer(&g, &[1.0, 2.0]), Err(Error::NotStronglyConnected)));
    }

    #[test]
    fn interior_optimum_mixes_two_cycles() {
        // Loops with means −1 and 3: the optimum mixes them to balance A − B².
        let g = Digraph::new(2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let w = vec![-1.0, 0.0, 0.0, 3.0];
        let opt = isi_edge_optimizer(&g, &w).unwrap();
        let (_, reference) = vertex_enumeration_optimum(&g, &w).unwrap();
        assert!((opt.value - reference).abs() < 1e-12);
        // Pure loops give 0 each; the best mix of the two loops alone gives 4.
        assert!(opt.value >= 4.0 - 1e-12);
    }

    #[test]
    fn concavity_along_feasible_directions() {
        let (g, w) = dicode();
        let opt = isi_edge_optimizer(&g, &w).unwrap();
        let cycles = g.simple_cycles();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            // Differences of cycle measures are feasible directions.
            let a = EdgeOccupancy::from_cycle(&g, &cycles[rng.random_range(0..cycles.len())]);
            let b = EdgeOccupancy::from_cycle(&g, &cycles[rng.random_range(0..cycles.len())]);
            let slope: f64 = a.values().iter().zip(b.values()).zip(&w).map(|((x, y), m)| (x - y) * m).sum();
            assert!(-(slope * slope) <= 0.0);
            assert!(opt.value >= a.objective(&w) - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(mask in 1u32..(1 << 9), ws in prop::collection::vec(-3.0f64..3.0, 9)) {
            let edges: Vec<(usize, usize)> = (0..9).filter(|b| mask >> b & 1 == 1).map(|b| (b / 3, b % 3)).collect();
            prop_assume!(edges.len() <= 8);
            let weights: Vec<f64> = (0..9).filter(|b| mask >> b & 1 == 1).map(|b| ws[b as usize]).collect();
            let g = Digraph::new(3, edges).unwrap();
            prop_assume!(g.is_strongly_connected());
            let opt = isi_edge_optimizer(&g, &weights).unwrap();
            let (_, reference) = vertex_enumeration_optimum(&g, &weights).unwrap();
            prop_assert!((opt.value - reference).abs() < 1e-8, "{} vs {}", opt.value, reference);
            prop_assert!(opt.gap_trace.windows(2).all(|p| p[1] <= p[0]));
            prop_assert!(*opt.gap_trace.last().unwrap() <= GAP_TOL);
            prop_assert!(opt.occupancy.flow_imbalance() < 1e-10);
            prop_assert!((opt.occupancy.values().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!((opt.occupancy.objective(&weights) - opt.value).abs() < 1e-12);
        }
    }
}
