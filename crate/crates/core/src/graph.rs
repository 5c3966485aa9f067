//! Small directed graphs: strong components, cycles, and Karp's maximum mean cycle.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Directed graph on nodes `0..n` with an ordered edge list (no parallel edges).
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, &(i, j)) in edges.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("edge {i}->{j} leaves the node range 0..{n}")));
            }
            if out[i].iter().any(|&e| edges[e].1 == j) {
                return Err(Error::InvalidArgument(format!("edge {i}->{j} listed twice")));
            }
            out[i].push(k);
        }
        Ok(Digraph { n, edges, out })
    }

    /// Edges where `m` is positive, in row-major order.
    pub fn support(m: &Matrix) -> Self {
        let edges = (0..m.rows()).flat_map(|i| (0..m.cols()).map(move |j| (i, j))).filter(|&(i, j)| m[(i, j)] > 0.0).collect();
        Digraph::new(m.rows(), edges).expect("support edges are distinct")
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Indices of edges leaving `i`.
    pub fn out_edges(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.out[i].iter().copied().find(|&e| self.edges[e].1 == j)
    }

    /// Strongly connected components (Tarjan), each sorted, listed in reverse topological order.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        const UNSEEN: usize = usize::MAX;
        let n = self.n;
        let (mut index, mut low, mut on_stack) = (vec![UNSEEN; n], vec![0; n], vec![false; n]);
        let (mut stack, mut comps, mut counter) = (Vec::new(), Vec::new(), 0);
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            // Explicit DFS frames: (node, next out-edge position).
            let mut frames = vec![(root, 0usize)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
                if *pos < self.out[v].len() {
                    let w = self.edges[self.out[v][*pos]].1;
                    *pos += 1;
                    if index[w] == UNSEEN {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        frames.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
        comps
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.n > 0 && self.strongly_connected_components().len() == 1
    }

    /// Components with no edge leaving them.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let comps = self.strongly_connected_components();
        let mut label = vec![0; self.n];
        for (c, comp) in comps.iter().enumerate() {
            for &v in comp {
                label[v] = c;
            }
        }
        comps
            .iter()
            .enumerate()
            .filter(|(c, comp)| comp.iter().all(|&v| self.out[v].iter().all(|&e| label[self.edges[e].1] == *c)))
            .map(|(_, comp)| comp.clone())
            .collect()
    }

    /// Every simple directed cycle, as edge-index lists starting at the cycle's smallest node.
    pub fn simple_cycles(&self) -> Vec<Vec<usize>> {
        let mut cycles = Vec::new();
        let mut visited = vec![false; self.n];
        let mut path = Vec::new();
        for start in 0..self.n {
            self.extend_cycles(start, start, &mut visited, &mut path, &mut cycles);
        }
        cycles
    }

    fn extend_cycles(&self, start: usize, v: usize, visited: &mut [bool], path: &mut Vec<usize>, cycles: &mut Vec<Vec<usize>>) {
        for &e in &self.out[v] {
            let w = self.edges[e].1;
            if w == start {
                path.push(e);
                cycles.push(path.clone());
                path.pop();
            } else if w > start && !visited[w] {
                visited[w] = true;
                path.push(e);
                self.extend_cycles(start, w, visited, path, cycles);
                path.pop();
                visited[w] = false;
            }
        }
    }

    /// A cycle with the fewest edges, by breadth-first search from every node.
    pub fn shortest_cycle(&self) -> Option<Vec<usize>> {
        let mut best: Option<Vec<usize>> = None;
        for s in 0..self.n {
            let mut via = vec![usize::MAX; self.n];
            let mut queue = std::collections::VecDeque::new();
            let mut closing = None;
            queue.push_back(s);
            'bfs: while let Some(v) = queue.pop_front() {
                for &e in &self.out[v] {
                    let w = self.edges[e].1;
                    if w == s {
                        closing = Some(e);
                        break 'bfs;
                    }
                    if via[w] == usize::MAX {
                        via[w] = e;
                        queue.push_back(w);
                    }
                }
            }
            if let Some(last) = closing {
                let mut cycle = vec![last];
                let mut v = self.edges[last].0;
                while v != s {
                    cycle.push(via[v]);
                    v = self.edges[via[v]].0;
                }
                cycle.reverse();
                if best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
                    best = Some(cycle);
                }
            }
        }
        best
    }
}

/// Mean of `weights` over a cycle given as edge indices.
pub fn cycle_mean(cycle: &[usize], weights: &[f64]) -> f64 {
    cycle.iter().map(|&e| weights[e]).sum::<f64>() / cycle.len() as f64
}

/// A cycle of largest mean edge weight and that mean.
///
/// Karp's recurrence over walks of exactly `k` edges from any start node; the
/// cycle is read off the optimal `n`-edge walk, whose cycles are all optimal.
pub fn max_mean_cycle(graph: &Digraph, weights: &[f64]) -> Result<(Vec<usize>, f64)> {
    let n = graph.num_nodes();
    if weights.len() != graph.num_edges() {
        return Err(Error::InvalidArgument(format!("{} weights for {} edges", weights.len(), graph.num_edges())));
    }
    if n == 0 {
        return Err(Error::NoCycle);
    }
    let ninf = f64::NEG_INFINITY;
    // d[k][v]: best weight of a k-edge walk ending at v; pred[k][v]: its last edge.
    let mut d = vec![vec![ninf; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    d[0].iter_mut().for_each(|x| *x = 0.0);
    for k in 1..=n {
        for (e, &(i, j)) in graph.edges().iter().enumerate() {
            if d[k - 1][i] > ninf {
                let cand = d[k - 1][i] + weights[e];
                if cand > d[k][j] {
                    d[k][j] = cand;
                    pred[k][j] = e;
                }
            }
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for v in 0..n {
        if d[n][v] == ninf {
            continue;
        }
        let worst = (0..n).filter(|&k| d[k][v] > ninf).map(|k| (d[n][v] - d[k][v]) / (n - k) as f64).fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(_, b)| worst > b) {
            best = Some((v, worst));
        }
    }
    let (v, _) = best.ok_or(Error::NoCycle)?;
    // Walk the optimal n-edge walk backwards and cut out its cycles.
    let mut walk = Vec::with_capacity(n);
    let mut node = v;
    for k in (1..=n).rev() {
        let e = pred[k][node];
        walk.push(e);
        node = graph.edges()[e].0;
    }
    walk.reverse();
    let mut best_cycle: Option<(Vec<usize>, f64)> = None;
    let mut seen_at = vec![usize::MAX; n];
    let mut nodes = vec![graph.edges()[walk[0]].0];
    nodes.extend(walk.iter().map(|&e| graph.edges()[e].1));
    for (pos, &u) in nodes.iter().enumerate() {
        if seen_at[u] != usize::MAX {
            let cycle = walk[seen_at[u]..pos].to_vec();
            let mean = cycle_mean(&cycle, weights);
            if best_cycle.as_ref().is_none_or(|(_, b)| mean > *b) {
                best_cycle = Some((cycle, mean));
            }
        }
        seen_at[u] = pos;
    }
    best_cycle.ok_or(Error::NoCycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_loop_mean() {
        let g = Digraph::new(1, vec![(0, 0)]).unwrap();
        assert_eq!(max_mean_cycle(&g, &[2.5]).unwrap(), (vec![0], 2.5));
    }

    #[test]
    fn self_loop_beats_two_cycle() {
        let g = Digraph::new(2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        let (cycle, mean) = max_mean_cycle(&g, &[3.0, 1.0, 4.0]).unwrap();
        assert_eq!((cycle, mean), (vec![0], 3.0));
    }

    #[test]
    fn dicode_squares_pick_the_cross_cycle() {
        let g = Digraph::new(2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let (mut cycle, mean) = max_mean_cycle(&g, &[0.0, 4.0, 4.0, 0.0]).unwrap();
        cycle.sort();
        assert_eq!((cycle, mean), (vec![1, 2], 4.0));
    }

    #[test]
    fn acyclic_graph_has_no_cycle() {
        let g = Digraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert!(matches!(max_mean_cycle(&g, &[1.0, 1.0]), Err(Error::NoCycle)));
    }

    #[test]
    fn components_and_closed_classes() {
        // 0 -> {1 <-> 2}, 3 <-> 3.
        let g = Digraph::new(4, vec![(0, 1), (1, 2), (2, 1), (3, 3)]).unwrap();
        assert_eq!(g.strongly_connected_components().len(), 3);
        let mut closed = g.closed_classes();
        closed.sort();
        assert_eq!(closed, vec![vec![1, 2], vec![3]]);
        assert!(!g.is_strongly_connected());
        assert!(Digraph::new(2, vec![(0, 1), (1, 0)]).unwrap().is_strongly_connected());
    }

    #[test]
    fn complete_graph_cycle_count() {
        // Simple cycles of the complete digraph with loops on 3 nodes: 3 loops, 3 two-cycles, 2 three-cycles.
        let g = Digraph::support(&Matrix::from_fn(3, 3, |_, _| 1.0));
        assert_eq!(g.simple_cycles().len(), 8);
        assert_eq!(g.shortest_cycle().unwrap().len(), 1);
        let ring = Digraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(ring.shortest_cycle().unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn duplicate_edges_rejected() {
        assert!(Digraph::new(2, vec![(0, 1), (0, 1)]).is_err());
        assert!(Digraph::new(2, vec![(0, 2)]).is_err());
    }

    proptest! {
        #[test]
        fn karp_matches_enumeration(mask in 1u32..(1 << 16), ws in prop::collection::vec(-5.0f64..5.0, 16)) {
            let edges: Vec<(usize, usize)> = (0..16).filter(|b| mask >> b & 1 == 1).map(|b| (b / 4, b % 4)).collect();
            let weights: Vec<f64> = (0..16).filter(|b| mask >> b & 1 == 1).map(|b| ws[b as usize]).collect();
            let g = Digraph::new(4, edges).unwrap();
            let cycles = g.simple_cycles();
            match max_mean_cycle(&g, &weights) {
                Ok((cycle, mean)) => {
                    let best = cycles.iter().map(|c| cycle_mean(c, &weights)).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!((mean - best).abs() < 1e-12);
                    prop_assert!((cycle_mean(&cycle, &weights) - mean).abs() < 1e-12);
                }
                Err(_) => prop_assert!(cycles.is_empty()),
            }
        }
    }
}
