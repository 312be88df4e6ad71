//! Vietoris–Rips filtrations and persistent Betti numbers over GF(2).
//!
//! A simplex enters the filtration at its diameter. Because the ε-complex
//! keeps simplices with diameter strictly below ε, a persistence interval
//! `[birth, death)` contributes to β_k(ε) exactly when `birth < ε ≤ death`.
//!
//! The barcode is computed once per cloud. Dimension 0 is handled by
//! union–find over the edges; dimensions 1 and 2 by reducing coboundary
//! columns in reverse filtration order, skipping every column already known
//! to be a death in the dimension below. This yields the same pairs as the
//! boundary-matrix reduction while never touching the (numerous, mostly
//! positive) tetrahedron columns.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::{EpsilonSeries, FeatureKind};
use crate::neighbor_graph::{DistanceMatrix, EpsilonGrid};

pub const DEFAULT_SIMPLEX_CAP: usize = 50_000_000;

/// Point-count limit of [`betti_naive`].
pub const ORACLE_MAX_POINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredSimplex {
    vertices: [u32; 4],
    dim: u8,
    pub diameter: f64,
}

impl FilteredSimplex {
    fn new(vs: &[u32], diameter: f64) -> Self {
        let mut vertices = [0; 4];
        vertices[..vs.len()].copy_from_slice(vs);
        Self {
            vertices,
            dim: (vs.len() - 1) as u8,
            diameter,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Strictly increasing vertex indices.
    pub fn vertices(&self) -> &[u32] {
        &self.vertices[..=self.dim as usize]
    }

    fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.diameter
            .total_cmp(&other.diameter)
            .then(self.dim.cmp(&other.dim))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

/// Simplices sorted by (diameter, dimension, lexicographic vertices), which
/// places every face before its cofaces.
#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<FilteredSimplex>,
    n_vertices: usize,
    max_dim: usize,
    r_max: f64,
}

impl Filtration {
    pub fn simplices(&self) -> &[FilteredSimplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            counts[s.dim()] += 1;
        }
        counts
    }
}

/// Rips complex up to `max_dim` (1..=3) on all simplices of diameter ≤ `r_max`.
///
/// Higher simplices are grown by intersecting neighborhoods, so a k-simplex
/// is only generated when all of its edges are present.
pub fn rips_filtration(dm: &DistanceMatrix, max_dim: usize, r_max: f64, cap: usize) -> Result<Filtration> {
    assert!((1..=3).contains(&max_dim), "max_dim must be 1, 2 or 3");
    let n = dm.len();
    let adjacent = |i: usize, j: usize| dm.get(i, j) <= r_max;
    // Forward neighbors only: j > i.
    let forward: Vec<Vec<u32>> = (0..n)
        .map(|i| (i + 1..n).filter(|&j| adjacent(i, j)).map(|j| j as u32).collect())
        .collect();

    let mut simplices: Vec<FilteredSimplex> = Vec::new();
    let push = |s: FilteredSimplex, simplices: &mut Vec<FilteredSimplex>| -> Result<()> {
        if simplices.len() >= cap {
            return Err(Error::ComplexityCap {
                count: simplices.len() + 1,
                cap,
            });
        }
        simplices.push(s);
        Ok(())
    };

    for v in 0..n as u32 {
        push(FilteredSimplex::new(&[v], 0.0), &mut simplices)?;
    }
    for i in 0..n {
        for &j in &forward[i] {
            let d = dm.get(i, j as usize);
            push(FilteredSimplex::new(&[i as u32, j], d), &mut simplices)?;
            if max_dim < 2 {
                continue;
            }
            for &k in &forward[j as usize] {
                let ku = k as usize;
                if !adjacent(i, ku) {
                    continue;
                }
                let d3 = d.max(dm.get(i, ku)).max(dm.get(j as usize, ku));
                push(FilteredSimplex::new(&[i as u32, j, k], d3), &mut simplices)?;
                if max_dim < 3 {
                    continue;
                }
                for &l in &forward[ku] {
                    let lu = l as usize;
                    if !adjacent(i, lu) || !adjacent(j as usize, lu) {
                        continue;
                    }
                    let d4 = d3.max(dm.get(i, lu)).max(dm.get(j as usize, lu)).max(dm.get(ku, lu));
                    push(FilteredSimplex::new(&[i as u32, j, k, l], d4), &mut simplices)?;
                }
            }
        }
    }

    simplices.sort_unstable_by(FilteredSimplex::filtration_cmp);
    Ok(Filtration {
        simplices,
        n_vertices: n,
        max_dim,
        r_max,
    })
}

/// One persistence interval; `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Barcode {
    pub intervals: Vec<Interval>,
}

impl Barcode {
    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(move |iv| iv.dim == dim)
    }

    /// β_dim(ε): intervals with `birth < ε ≤ death`.
    pub fn betti_at(&self, dim: usize, eps: f64) -> usize {
        self.in_dim(dim).filter(|iv| iv.birth < eps && iv.death >= eps).count()
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Combinatorial-number-system code of a sorted vertex tuple.
struct SimplexCodes {
    table: Vec<[u64; 5]>,
}

impl SimplexCodes {
    fn new(n: usize) -> Self {
        let table = (0..=n as u64)
            .map(|v| [0, binomial(v, 1), binomial(v, 2), binomial(v, 3), binomial(v, 4)])
            .collect();
        Self { table }
    }

    fn code(&self, sorted: &[u32]) -> u64 {
        sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| self.table[v as usize][i + 1])
            .sum()
    }
}

/// Code → filtration position for the simplices of one dimension.
enum PositionIndex {
    Dense(Vec<u32>),
    Sorted(Vec<(u64, u32)>),
}

impl PositionIndex {
    const DENSE_LIMIT: u64 = 1 << 26;

    fn build(entries: Vec<(u64, u32)>, universe: u64) -> Self {
        if universe <= Self::DENSE_LIMIT {
            let mut dense = vec![u32::MAX; universe as usize];
            for (code, pos) in entries {
                dense[code as usize] = pos;
            }
            PositionIndex::Dense(dense)
        } else {
            let mut sorted = entries;
            sorted.sort_unstable();
            PositionIndex::Sorted(sorted)
        }
    }

    fn get(&self, code: u64) -> Option<u32> {
        match self {
            PositionIndex::Dense(d) => d.get(code as usize).copied().filter(|&p| p != u32::MAX),
            PositionIndex::Sorted(s) => s
                .binary_search_by_key(&code, |&(c, _)| c)
                .ok()
                .map(|i| s[i].1),
        }
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

/// Symmetric difference of two ascending lists.
fn add_columns(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Persistence barcode in dimensions `0..max_dim` of the filtration.
///
/// Zero-length intervals are kept; they never contribute to β(ε).
pub fn reduce(filtration: &Filtration) -> Barcode {
    let simplices = &filtration.simplices;
    let n = filtration.n_vertices;
    let top = filtration.max_dim;
    let codes = SimplexCodes::new(n);

    let mut by_dim: Vec<Vec<u32>> = vec![Vec::new(); top + 1];
    for (pos, s) in simplices.iter().enumerate() {
        by_dim[s.dim()].push(pos as u32);
    }
    let index: Vec<PositionIndex> = (0..=top)
        .map(|k| {
            let entries = by_dim[k]
                .iter()
                .map(|&p| (codes.code(simplices[p as usize].vertices()), p))
                .collect();
            PositionIndex::build(entries, binomial(n as u64, k as u64 + 1))
        })
        .collect();

    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut adjacent = vec![false; n * n];
    for &p in &by_dim.get(1).cloned().unwrap_or_default() {
        let vs = simplices[p as usize].vertices();
        let (a, b) = (vs[0] as usize, vs[1] as usize);
        neighbors[a].push(vs[1]);
        neighbors[b].push(vs[0]);
        adjacent[a * n + b] = true;
        adjacent[b * n + a] = true;
    }

    let mut intervals = Vec::new();
    let mut cleared = vec![false; simplices.len()];

    let mut uf = UnionFind::new(n);
    for &p in &by_dim[1] {
        let vs = simplices[p as usize].vertices();
        if uf.union(vs[0], vs[1]) {
            intervals.push(Interval {
                dim: 0,
                birth: 0.0,
                death: simplices[p as usize].diameter,
            });
            cleared[p as usize] = true;
        }
    }
    let roots = (0..n as u32).filter(|&v| uf.find(v) == v).count();
    intervals.extend((0..roots).map(|_| Interval {
        dim: 0,
        birth: 0.0,
        death: f64::INFINITY,
    }));

    let mut scratch = [0u32; 4];
    for k in 1..top {
        let cofaces = &index[k + 1];
        let coboundary = |vs: &[u32], scratch: &mut [u32; 4]| -> Vec<u32> {
            let mut col = Vec::new();
            for &w in &neighbors[vs[0] as usize] {
                if vs.contains(&w) || !vs[1..].iter().all(|&u| adjacent[u as usize * n + w as usize]) {
                    continue;
                }
                let len = vs.len() + 1;
                let at = vs.partition_point(|&u| u < w);
                scratch[..at].copy_from_slice(&vs[..at]);
                scratch[at] = w;
                scratch[at + 1..len].copy_from_slice(&vs[at..]);
                let pos = cofaces
                    .get(codes.code(&scratch[..len]))
                    .expect("clique complex contains every coface up to max_dim");
                col.push(pos);
            }
            col.sort_unstable();
            col
        };

        let mut reduced: HashMap<u32, Vec<u32>> = HashMap::new();
        for &p in by_dim[k].iter().rev() {
            if cleared[p as usize] {
                continue;
            }
            let s = &simplices[p as usize];
            let mut col = coboundary(s.vertices(), &mut scratch);
            while let Some(other) = col.first().and_then(|pivot| reduced.get(pivot)) {
                col = add_columns(&col, other);
            }
            match col.first() {
                None => intervals.push(Interval {
                    dim: k,
                    birth: s.diameter,
                    death: f64::INFINITY,
                }),
                Some(&pivot) => {
                    intervals.push(Interval {
                        dim: k,
                        birth: s.diameter,
                        death: simplices[pivot as usize].diameter,
                    });
                    cleared[pivot as usize] = true;
                    reduced.insert(pivot, col);
                }
            }
        }
    }

    Barcode { intervals }
}

/// β_k(ε) channels for each requested dimension on every grid value.
pub fn betti_series(barcode: &Barcode, grid: &EpsilonGrid, dims: &[usize]) -> EpsilonSeries {
    let channels = dims
        .iter()
        .map(|&k| {
            let mut births: Vec<f64> = barcode.in_dim(k).map(|iv| iv.birth).collect();
            let mut deaths: Vec<f64> = barcode.in_dim(k).map(|iv| iv.death).collect();
            births.sort_by(f64::total_cmp);
            deaths.sort_by(f64::total_cmp);
            grid.values()
                .iter()
                .map(|&eps| {
                    // birth ≤ death, so every interval dead before ε was also born before ε.
                    let born = births.partition_point(|&b| b < eps);
                    let died = deaths.partition_point(|&d| d < eps);
                    (born - died) as f64
                })
                .collect()
        })
        .collect();
    EpsilonSeries {
        channels,
        grid: grid.clone(),
        kind: FeatureKind::Betti,
    }
}

/// Rank of a GF(2) matrix given as bit-packed columns.
fn gf2_rank(mut cols: Vec<Vec<u64>>) -> usize {
    let mut rank = 0;
    let mut pivots: Vec<(usize, Vec<u64>)> = Vec::new();
    for mut col in cols.drain(..) {
        for (bit, basis) in &pivots {
            if col[bit / 64] >> (bit % 64) & 1 == 1 {
                for (c, b) in col.iter_mut().zip(basis) {
                    *c ^= b;
                }
            }
        }
        let lead = col
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize);
        if let Some(bit) = lead {
            // Keep the basis fully reduced on its pivot bits.
            for (_, basis) in pivots.iter_mut() {
                if basis[bit / 64] >> (bit % 64) & 1 == 1 {
                    for (b, c) in basis.iter_mut().zip(&col) {
                        *b ^= c;
                    }
                }
            }
            pivots.push((bit, col));
            rank += 1;
        }
    }
    rank
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, size, cur, out);
            cur.pop();
        }
    }
    go(0, n, size, &mut cur, &mut out);
    out
}

/// Simplices of dimension `k` in the ε-complex (all pairwise distances < ε).
pub fn naive_simplices(dm: &DistanceMatrix, eps: f64, k: usize) -> Vec<Vec<usize>> {
    subsets(dm.len(), k + 1)
        .into_iter()
        .filter(|s| s.iter().enumerate().all(|(a, &i)| s[a + 1..].iter().all(|&j| dm.get(i, j) < eps)))
        .collect()
}

fn boundary_rank(faces: &[Vec<usize>], simplices: &[Vec<usize>]) -> usize {
    if faces.is_empty() || simplices.is_empty() {
        return 0;
    }
    let row: HashMap<&[usize], usize> = faces.iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect();
    let words = faces.len().div_ceil(64);
    let cols = simplices
        .iter()
        .map(|s| {
            let mut col = vec![0u64; words];
            for omit in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != omit).map(|(_, &v)| v).collect();
                let r = row[face.as_slice()];
                col[r / 64] ^= 1 << (r % 64);
            }
            col
        })
        .collect();
    gf2_rank(cols)
}

/// β_k of the ε-complex (truncated at dimension 3) from explicit boundary
/// ranks: `dim C_k − rank ∂_k − rank ∂_{k+1}`. Exponential; test scale only.
pub fn betti_naive(dm: &DistanceMatrix, eps: f64, k: usize) -> Result<usize> {
    if dm.len() > ORACLE_MAX_POINTS {
        return Err(Error::OracleScale {
            n: dm.len(),
            cap: ORACLE_MAX_POINTS,
        });
    }
    assert!(k <= 3, "complex is truncated at dimension 3");
    let chain = naive_simplices(dm, eps, k);
    let rank_k = if k == 0 {
        0
    } else {
        boundary_rank(&naive_simplices(dm, eps, k - 1), &chain)
    };
    let rank_up = if k == 3 {
        0
    } else {
        boundary_rank(&chain, &naive_simplices(dm, eps, k + 1))
    };
    Ok(chain.len() - rank_k - rank_up)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::PointCloud;
    use crate::neighbor_graph::{epsilon_graph, pairwise_distances};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dm_of(pts: &[Vec<f64>]) -> DistanceMatrix {
        pairwise_distances(&PointCloud::from_points(pts).unwrap())
    }

    fn square() -> DistanceMatrix {
        dm_of(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]])
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DistanceMatrix {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        dm_of(&pts)
    }

    #[test]
    fn filtration_sizes() {
        let tri = dm_of(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(rips_filtration(&tri, 3, 2.0, 100).unwrap().len(), 7);
        let two = dm_of(&[vec![0.0], vec![0.7]]);
        let f = rips_filtration(&two, 3, 1.0, 100).unwrap();
        assert_eq!(f.count_by_dim(), vec![2, 1, 0, 0]);
        assert_eq!(f.simplices()[2].diameter, 0.7);
        let f = rips_filtration(&square(), 3, 1.2, 100).unwrap();
        assert_eq!(f.count_by_dim(), vec![4, 4, 0, 0]);
        // The diagonals (√2 < 1.5) are present at 1.5, so the full complex is.
        let f = rips_filtration(&square(), 3, 1.5, 100).unwrap();
        assert_eq!(f.count_by_dim(), vec![4, 6, 4, 1]);
    }

    #[test]
    fn faces_precede_cofaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dm = random_cloud(&mut rng, 9, 3);
        let f = rips_filtration(&dm, 3, dm.max_distance(), usize::MAX).unwrap();
        let pos: HashMap<Vec<u32>, usize> =
            f.simplices().iter().enumerate().map(|(i, s)| (s.vertices().to_vec(), i)).collect();
        for (i, s) in f.simplices().iter().enumerate() {
            let vs = s.vertices();
            if vs.len() < 2 {
                continue;
            }
            for omit in 0..vs.len() {
                let face: Vec<u32> = vs.iter().enumerate().filter(|&(j, _)| j != omit).map(|(_, &v)| v).collect();
                assert!(pos[&face] < i);
                assert!(f.simplices()[pos[&face]].diameter <= s.diameter);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dm = random_cloud(&mut rng, 10, 3);
        let err = rips_filtration(&dm, 3, 10.0, 50).unwrap_err();
        assert!(matches!(err, Error::ComplexityCap { cap: 50, .. }));
    }

    #[test]
    fn barcode_examples() {
        let two = dm_of(&[vec![0.0], vec![0.7]]);
        let bc = reduce(&rips_filtration(&two, 3, 1.0, 100).unwrap());
        let mut dim0: Vec<f64> = bc.in_dim(0).map(|iv| iv.death).collect();
        dim0.sort_by(f64::total_cmp);
        assert_eq!(dim0, vec![0.7, f64::INFINITY]);

        let bc = reduce(&rips_filtration(&square(), 3, 2.0, 100).unwrap());
        let loops: Vec<&Interval> = bc.in_dim(1).filter(|iv| iv.death > iv.birth).collect();
        assert_eq!(loops.len(), 1);
        assert_eq!((loops[0].birth, loops[0].death), (1.0, 2f64.sqrt()));

        let far = dm_of(&[vec![0.0], vec![10.0], vec![20.0]]);
        let bc = reduce(&rips_filtration(&far, 3, 1.0, 100).unwrap());
        assert_eq!(bc.in_dim(0).filter(|iv| iv.death.is_infinite()).count(), 3);
    }

    #[test]
    fn square_betti_values() {
        let sq = square();
        let bc = reduce(&rips_filtration(&sq, 3, sq.max_distance(), 100).unwrap());
        assert_eq!((bc.betti_at(0, 1.2), bc.betti_at(1, 1.2), bc.betti_at(2, 1.2)), (1, 1, 0));
        assert_eq!(bc.betti_at(0, 0.5), 4);
        assert_eq!(betti_naive(&sq, 1.2, 1).unwrap(), 1);
    }

    #[test]
    fn naive_examples() {
        let line = dm_of(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert_eq!(betti_naive(&line, 1.5, 0).unwrap(), 1);
        assert_eq!(betti_naive(&line, 1.5, 1).unwrap(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let big = random_cloud(&mut rng, 13, 2);
        assert!(matches!(betti_naive(&big, 0.5, 0), Err(Error::OracleScale { .. })));
    }

    #[test]
    fn octahedron_has_a_void() {
        // Six points ±e_i: every non-antipodal pair at √2, antipodal at 2.
        let mut pts = Vec::new();
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; 3];
                p[i] = s;
                pts.push(p);
            }
        }
        let dm = dm_of(&pts);
        let bc = reduce(&rips_filtration(&dm, 3, dm.max_distance(), 1000).unwrap());
        assert_eq!(bc.betti_at(2, 1.5), 1);
        assert_eq!(betti_naive(&dm, 1.5, 2).unwrap(), 1);
        assert_eq!(bc.betti_at(2, 2.5), 0);
    }

    #[test]
    fn full_complex_is_contractible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 4, 7, 15] {
            let dm = random_cloud(&mut rng, n, 3);
            let r = dm.max_distance().max(1.0);
            let bc = reduce(&rips_filtration(&dm, 3, r, usize::MAX).unwrap());
            let eps = r * 1.01;
            assert_eq!((bc.betti_at(0, eps), bc.betti_at(1, eps), bc.betti_at(2, eps)), (1, 0, 0));
        }
    }

    #[test]
    fn matches_naive_and_bfs_on_small_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..30 {
            let n = rng.random_range(1..=8);
            let dm = random_cloud(&mut rng, n, 3);
            let r = dm.max_distance().max(1e-3);
            let bc = reduce(&rips_filtration(&dm, 3, r, usize::MAX).unwrap());
            for _ in 0..8 {
                let eps = rng.random::<f64>() * r * 1.05;
                for k in 0..3 {
                    assert_eq!(bc.betti_at(k, eps), betti_naive(&dm, eps, k).unwrap());
                }
                assert_eq!(bc.betti_at(0, eps), epsilon_graph(&dm, eps).component_count());
            }
        }
    }

    #[test]
    fn euler_characteristic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let dm = random_cloud(&mut rng, 8, 3);
            let eps = rng.random::<f64>() * dm.max_distance();
            let chi: i64 = (0..4)
                .map(|k| (-1i64).pow(k as u32) * naive_simplices(&dm, eps, k).len() as i64)
                .sum();
            let betti: i64 = (0..4)
                .map(|k| (-1i64).pow(k as u32) * betti_naive(&dm, eps, k).unwrap() as i64)
                .sum();
            assert_eq!(chi, betti);
        }
    }
}
