//! Pairwise distances, ε-neighbor graphs and the ε sampling grid shared by
//! the Betti and Laplacian pipelines.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::embedding::PointCloud;
use crate::error::{Error, Result};

/// Symmetric Euclidean distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    /// Largest pairwise distance (0 for a single point).
    pub fn max_distance(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// `min_i max_j d(i, j)`: the radius of the smallest ball centred on a
    /// data point that contains the whole cloud.
    pub fn enclosing_radius(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().copied().fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distances `d(i, j)` for `i < j`, in row-major order.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.get(i, j))))
    }
}

pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    let n = cloud.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let p = cloud.point(i);
        for j in i + 1..n {
            let q = cloud.point(j);
            let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    DistanceMatrix { n, d }
}

/// Simple undirected graph as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: usize,
}

impl Graph {
    /// Self-loops are rejected; duplicate edges are collapsed.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v || u >= n || v >= n {
                return Err(Error::ShapeMismatch(format!("invalid edge ({u}, {v}) in graph of order {n}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let edges = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(Self { adj, edges })
    }

    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Vertex sets of the connected components, in order of smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }
}

/// Edge `(i, j)` iff `d(i, j) < eps` (strict).
pub fn epsilon_graph(dm: &DistanceMatrix, eps: f64) -> Graph {
    let n = dm.len();
    let mut adj = vec![Vec::new(); n];
    let mut edges = 0;
    for i in 0..n {
        for j in i + 1..n {
            if dm.get(i, j) < eps {
                adj[i].push(j);
                adj[j].push(i);
                edges += 1;
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    Graph { adj, edges }
}

/// How the upper end of the ε-grid is chosen for each cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusPolicy {
    #[default]
    MaxDistance,
    EnclosingRadius,
}

impl fmt::Display for RadiusPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RadiusPolicy::MaxDistance => "max_distance",
            RadiusPolicy::EnclosingRadius => "enclosing_radius",
        })
    }
}

impl FromStr for RadiusPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "max_distance" => Ok(RadiusPolicy::MaxDistance),
            "enclosing_radius" => Ok(RadiusPolicy::EnclosingRadius),
            other => Err(format!("unknown radius policy `{other}`")),
        }
    }
}

/// Uniform samples `r_max·k/steps` for `k = 1..=steps`; zero is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGrid {
    values: Vec<f64>,
    r_max: f64,
}

impl EpsilonGrid {
    pub fn uniform(r_max: f64, steps: usize) -> Result<Self> {
        if r_max.is_nan() || r_max <= 0.0 || r_max.is_infinite() {
            return Err(Error::DegenerateCloud);
        }
        if steps < 2 {
            return Err(Error::Config {
                key: "epsilon_steps".into(),
                message: format!("needs at least 2 steps, got {steps}"),
            });
        }
        let mut values: Vec<f64> = (1..=steps).map(|k| r_max * k as f64 / steps as f64).collect();
        values[steps - 1] = r_max;
        Ok(Self { values, r_max })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn epsilon_grid(dm: &DistanceMatrix, steps: usize, policy: RadiusPolicy) -> Result<EpsilonGrid> {
    if dm.len() < 2 {
        return Err(Error::DegenerateCloud);
    }
    let r_max = match policy {
        RadiusPolicy::MaxDistance => dm.max_distance(),
        RadiusPolicy::EnclosingRadius => dm.enclosing_radius(),
    };
    EpsilonGrid::uniform(r_max, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> DistanceMatrix {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        pairwise_distances(&PointCloud::from_points(&pts).unwrap())
    }

    #[test]
    fn distance_examples() {
        let two = PointCloud::from_points(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(pairwise_distances(&two).get(0, 1), 5.0);
        let one = PointCloud::from_points(&[vec![1.0, 2.0]]).unwrap();
        let dm = pairwise_distances(&one);
        assert_eq!((dm.len(), dm.get(0, 0)), (1, 0.0));
        let sq = square();
        assert_eq!(sq.get(0, 1), 1.0);
        assert_eq!(sq.get(0, 2), 2f64.sqrt());
        assert_eq!(sq.get(1, 3), 2f64.sqrt());
        assert_eq!(sq.enclosing_radius(), 2f64.sqrt());
    }

    #[test]
    fn epsilon_graph_examples() {
        let sq = square();
        let g = epsilon_graph(&sq, 1.2);
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && g.has_edge(2, 3) && g.has_edge(0, 3));
        assert!(!g.has_edge(0, 2));
        assert_eq!(epsilon_graph(&sq, 1.0).edge_count(), 0);
        assert_eq!(epsilon_graph(&sq, 1.5).edge_count(), 6);
    }

    #[test]
    fn grid_examples() {
        let g = EpsilonGrid::uniform(2.0, 4).unwrap();
        assert_eq!(g.values(), &[0.5, 1.0, 1.5, 2.0]);
        let sq = square();
        let g = epsilon_grid(&sq, 300, RadiusPolicy::MaxDistance).unwrap();
        assert_eq!(g.len(), 300);
        assert_eq!(*g.values().last().unwrap(), sq.max_distance());
        let same = PointCloud::from_points(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            epsilon_grid(&pairwise_distances(&same), 10, RadiusPolicy::MaxDistance),
            Err(Error::DegenerateCloud)
        ));
    }

    #[test]
    fn components_of_graph() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (4, 5)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3], vec![4, 5]]);
        assert!(Graph::from_edges(3, &[(1, 1)]).is_err());
    }

    fn cloud_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5f64..5.0, 3), 2..25)
    }

    proptest! {
        #[test]
        fn metric_properties(pts in cloud_strategy()) {
            let dm = pairwise_distances(&PointCloud::from_points(&pts).unwrap());
            let n = dm.len();
            for i in 0..n {
                prop_assert_eq!(dm.get(i, i), 0.0);
                for j in 0..n {
                    prop_assert_eq!(dm.get(i, j), dm.get(j, i));
                    for k in 0..n {
                        prop_assert!(dm.get(i, k) <= dm.get(i, j) + dm.get(j, k) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn filtration_is_monotone(pts in cloud_strategy(), a in 0f64..15.0, b in 0f64..15.0) {
            let dm = pairwise_distances(&PointCloud::from_points(&pts).unwrap());
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = epsilon_graph(&dm, lo);
            let large = epsilon_graph(&dm, hi);
            for (u, v) in small.edges() {
                prop_assert!(large.has_edge(u, v));
            }
        }

        #[test]
        fn kth_distance_gives_k_edges(pts in cloud_strategy()) {
            let dm = pairwise_distances(&PointCloud::from_points(&pts).unwrap());
            let mut ds: Vec<f64> = dm.upper_triangle().map(|(_, _, d)| d).collect();
            ds.sort_by(f64::total_cmp);
            prop_assume!(ds.windows(2).all(|w| w[1] - w[0] > 1e-9));
            for k in 1..=ds.len() {
                let above = if k < ds.len() { (ds[k - 1] + ds[k]) / 2.0 } else { ds[k - 1] + 1.0 };
                prop_assert_eq!(epsilon_graph(&dm, above).edge_count(), k);
            }
        }
    }
}
