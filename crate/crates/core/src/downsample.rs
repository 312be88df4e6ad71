//! Bucket-based downsampling: dropout, bucket averaging, largest-triangle
//! three-bucket (LTTB), and variance-weighted dynamic re-bucketing.
//!
//! Every downsampler works over a [`Bucketing`]: a partition of the series
//! indices into contiguous buckets whose first and last buckets are the
//! singleton endpoints. A bucketing with `m` interior buckets yields `m + 2`
//! output points. The x-coordinate of a sample is its index.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Contiguous buckets covering `0..n` exactly once, endpoints as singletons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bucketing {
    buckets: Vec<Range<usize>>,
}

impl Bucketing {
    /// Validate and wrap a list of ranges.
    pub fn new(buckets: Vec<Range<usize>>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidBucketing(msg));
        if buckets.len() < 2 {
            return bad(format!("need at least 2 buckets, got {}", buckets.len()));
        }
        if buckets[0] != (0..1) {
            return bad(format!("first bucket must be {{0}}, got {:?}", buckets[0]));
        }
        let mut expected = 0;
        for b in &buckets {
            if b.start != expected || b.end <= b.start {
                return bad(format!("bucket {b:?} is empty or not contiguous at index {expected}"));
            }
            expected = b.end;
        }
        if buckets[buckets.len() - 1].len() != 1 {
            return bad("last bucket must be a singleton".into());
        }
        Ok(Self { buckets })
    }

    pub fn buckets(&self) -> &[Range<usize>] {
        &self.buckets
    }

    /// Number of covered indices.
    pub fn n_points(&self) -> usize {
        self.buckets[self.buckets.len() - 1].end
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn interior_count(&self) -> usize {
        self.buckets.len() - 2
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(|b| b.len()).collect()
    }

    fn check_covers(&self, n: usize) -> Result<()> {
        if self.n_points() != n {
            return Err(Error::InvalidBucketing(format!(
                "bucketing covers {} points, series has {n}",
                self.n_points()
            )));
        }
        Ok(())
    }
}

/// Endpoints as singletons; the `n_points - 2` interior indices split into
/// `m_interior` buckets whose sizes differ by at most one, larger buckets first.
pub fn naive_buckets(n_points: usize, m_interior: usize) -> Result<Bucketing> {
    if n_points < 2 || n_points < m_interior + 2 {
        return Err(Error::InvalidTarget(format!(
            "cannot place {m_interior} interior buckets in {n_points} points"
        )));
    }
    let interior = n_points - 2;
    if m_interior == 0 && interior > 0 {
        return Err(Error::InvalidTarget(format!(
            "0 interior buckets cannot cover {interior} interior points"
        )));
    }
    let mut buckets = Vec::with_capacity(m_interior + 2);
    buckets.push(0..1);
    let mut start = 1;
    if let Some(q) = interior.checked_div(m_interior) {
        let r = interior % m_interior;
        for i in 0..m_interior {
            let size = q + usize::from(i < r);
            buckets.push(start..start + size);
            start += size;
        }
    }
    buckets.push(start..start + 1);
    Bucketing::new(buckets)
}

/// First sample of each bucket.
pub fn dropout(series: &[f64], bk: &Bucketing) -> Result<Vec<f64>> {
    bk.check_covers(series.len())?;
    Ok(bk.buckets().iter().map(|b| series[b.start]).collect())
}

fn bucket_mean(series: &[f64], b: &Range<usize>) -> Point2D {
    let k = b.len() as f64;
    let x = (b.start + b.end - 1) as f64 / 2.0;
    // Offsets from the first sample keep a constant bucket's mean exact.
    let first = series[b.start];
    let y = first + series[b.clone()].iter().map(|v| v - first).sum::<f64>() / k;
    Point2D::new(x, y)
}

/// Two-dimensional mean (index, value) of each bucket.
pub fn bucket_average(series: &[f64], bk: &Bucketing) -> Result<Vec<Point2D>> {
    bk.check_covers(series.len())?;
    Ok(bk.buckets().iter().map(|b| bucket_mean(series, b)).collect())
}

/// Unsigned shoelace area.
pub fn triangle_area(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y)).abs() / 2.0
}

/// Indices selected by LTTB, one per bucket.
///
/// Buckets are visited left to right; each choice maximizes the triangle with
/// the previously selected point and the mean of the following bucket. The
/// last interior bucket anchors on the final point. Ties go to the lowest index.
pub fn lttb_indices(series: &[f64], bk: &Bucketing) -> Result<Vec<usize>> {
    bk.check_covers(series.len())?;
    if bk.len() < 3 {
        return Err(Error::InvalidTarget(format!(
            "LTTB needs at least 3 buckets, got {}",
            bk.len()
        )));
    }
    let buckets = bk.buckets();
    let point = |i: usize| Point2D::new(i as f64, series[i]);
    let mut selected = Vec::with_capacity(buckets.len());
    selected.push(0);
    for w in 1..buckets.len() - 1 {
        let prev = point(*selected.last().unwrap());
        let anchor = bucket_mean(series, &buckets[w + 1]);
        let mut best = buckets[w].start;
        let mut best_area = f64::NEG_INFINITY;
        for i in buckets[w].clone() {
            let area = triangle_area(prev, point(i), anchor);
            if area > best_area {
                best_area = area;
                best = i;
            }
        }
        selected.push(best);
    }
    selected.push(series.len() - 1);
    Ok(selected)
}

pub fn lttb(series: &[f64], bk: &Bucketing) -> Result<Vec<Point2D>> {
    Ok(lttb_indices(series, bk)?
        .into_iter()
        .map(|i| Point2D::new(i as f64, series[i]))
        .collect())
}

/// Residual sum of squares of the least-squares line through `points`.
/// Zero for two or fewer points or when every x is equal.
pub fn ols_sse(points: &[Point2D]) -> f64 {
    if points.len() <= 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.y - intercept - slope * p.x).powi(2))
        .sum();
    // Round-off on an exactly linear bucket is not residual variance.
    let syy: f64 = points.iter().map(|p| (p.y - my).powi(2)).sum();
    if sse <= 64.0 * f64::EPSILON * syy {
        0.0
    } else {
        sse
    }
}

fn bucket_sse(series: &[f64], b: &Range<usize>) -> f64 {
    let pts: Vec<Point2D> = b.clone().map(|i| Point2D::new(i as f64, series[i])).collect();
    ols_sse(&pts)
}

/// Variance-weighted re-bucketing.
///
/// Phase one splits the interior bucket with the largest OLS residual `p`
/// times (size-one buckets cannot be split and are passed over). Phase two
/// then merges the adjacent interior pair with the smallest combined residual
/// as many times as phase one split, so the bucket count is unchanged. The
/// endpoint singletons are never touched.
pub fn dynamic_buckets(series: &[f64], bk: &Bucketing, p: usize) -> Result<Bucketing> {
    bk.check_covers(series.len())?;
    let mut buckets = bk.buckets().to_vec();
    let last = |b: &Vec<Range<usize>>| b.len() - 1;

    let mut splits = 0;
    for _ in 0..p {
        let mut target: Option<(usize, f64)> = None;
        for j in 1..last(&buckets) {
            if buckets[j].len() < 2 {
                continue;
            }
            let s = bucket_sse(series, &buckets[j]);
            if target.is_none_or(|(_, best)| s > best) {
                target = Some((j, s));
            }
        }
        let Some((z, _)) = target else { break };
        let b = buckets[z].clone();
        let mid = b.start + b.len() / 2;
        buckets.splice(z..=z, [b.start..mid, mid..b.end]);
        splits += 1;
    }

    for _ in 0..splits {
        let sse: Vec<f64> = buckets.iter().map(|b| bucket_sse(series, b)).collect();
        let mut target: Option<(usize, f64)> = None;
        for a in 1..last(&buckets) - 1 {
            let s = sse[a] + sse[a + 1];
            if target.is_none_or(|(_, best)| s < best) {
                target = Some((a, s));
            }
        }
        let (a, _) = target.expect("a split leaves at least two interior buckets");
        let merged = buckets[a].start..buckets[a + 1].end;
        buckets.splice(a..=a + 1, [merged]);
    }

    Bucketing::new(buckets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dropout,
    Mean,
    Lttb,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dropout, Method::Mean, Method::Lttb];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dropout => "dropout",
            Method::Mean => "mean",
            Method::Lttb => "lttb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "dropout" => Ok(Method::Dropout),
            "mean" => Ok(Method::Mean),
            "lttb" => Ok(Method::Lttb),
            other => Err(format!("unknown downsampling method `{other}`")),
        }
    }
}

/// Downsample `series` to `m_interior + 2` points with naive bucketing,
/// optionally re-bucketed dynamically with `dynamic_p` iterations.
pub fn downsample(series: &[f64], m_interior: usize, method: Method, dynamic_p: usize) -> Result<Vec<Point2D>> {
    let mut bk = naive_buckets(series.len(), m_interior)?;
    if dynamic_p > 0 {
        bk = dynamic_buckets(series, &bk, dynamic_p)?;
    }
    match method {
        Method::Dropout => Ok(bk
            .buckets()
            .iter()
            .map(|b| Point2D::new(b.start as f64, series[b.start]))
            .collect()),
        Method::Mean => bucket_average(series, &bk),
        Method::Lttb => lttb(series, &bk),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bk(ranges: &[(usize, usize)]) -> Bucketing {
        Bucketing::new(ranges.iter().map(|&(a, b)| a..b).collect()).unwrap()
    }

    #[test]
    fn naive_bucket_sizes() {
        assert_eq!(naive_buckets(12, 5).unwrap().sizes(), vec![1, 2, 2, 2, 2, 2, 1]);
        assert_eq!(naive_buckets(11, 4).unwrap().sizes(), vec![1, 3, 2, 2, 2, 1]);
        assert_eq!(naive_buckets(2, 0).unwrap().buckets(), &[0..1, 1..2]);
        assert!(matches!(naive_buckets(5, 4), Err(Error::InvalidTarget(_))));
        assert!(matches!(naive_buckets(5, 0), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn rejects_malformed_bucketings() {
        assert!(Bucketing::new(vec![0..1, 2..3]).is_err());
        assert!(Bucketing::new(vec![0..2, 2..3]).is_err());
        assert!(Bucketing::new(vec![0..1, 1..3]).is_err());
        assert!(Bucketing::new(vec![0..1, 1..1, 1..2]).is_err());
    }

    #[test]
    fn dropout_examples() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(dropout(&s, &bk(&[(0, 1), (1, 3), (3, 5), (5, 6)])).unwrap(), vec![1.0, 2.0, 4.0, 6.0]);
        let singles = naive_buckets(6, 4).unwrap();
        assert_eq!(dropout(&s, &singles).unwrap(), s.to_vec());
        let s = [9.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 1.0, 9.0];
        assert_eq!(
            dropout(&s, &naive_buckets(12, 5).unwrap()).unwrap(),
            vec![9.0, 1.0, 3.0, 5.0, 7.0, 9.0, 9.0]
        );
    }

    #[test]
    fn bucket_average_examples() {
        let s = [0.0, 10.0, 20.0, 0.0];
        let pts = bucket_average(&s, &bk(&[(0, 1), (1, 3), (3, 4)])).unwrap();
        assert_eq!(pts[1], Point2D::new(1.5, 15.0));
        let s = [0.0, 0.0, 6.0, 0.0, 0.0];
        let pts = bucket_average(&s, &bk(&[(0, 1), (1, 4), (4, 5)])).unwrap();
        assert_eq!(pts, vec![Point2D::new(0.0, 0.0), Point2D::new(2.0, 2.0), Point2D::new(4.0, 0.0)]);
    }

    #[test]
    fn triangle_area_examples() {
        let p = Point2D::new;
        assert_eq!(triangle_area(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)), 0.5);
        assert_eq!(triangle_area(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)), 0.0);
        assert_eq!(triangle_area(p(0.0, 0.0), p(2.0, 10.0), p(4.0, 0.0)), 20.0);
    }

    #[test]
    fn lttb_examples() {
        let s = [0.0, 0.0, 10.0, 0.0, 0.0];
        let out = lttb(&s, &bk(&[(0, 1), (1, 4), (4, 5)])).unwrap();
        assert_eq!(out, vec![Point2D::new(0.0, 0.0), Point2D::new(2.0, 10.0), Point2D::new(4.0, 0.0)]);

        let line: Vec<f64> = (0..20).map(f64::from).collect();
        let b = naive_buckets(20, 6).unwrap();
        let firsts: Vec<usize> = b.buckets().iter().map(|r| r.start).collect();
        assert_eq!(lttb_indices(&line, &b).unwrap(), firsts);

        assert!(matches!(lttb(&[1.0, 2.0], &naive_buckets(2, 0).unwrap()), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn ols_sse_examples() {
        let p = Point2D::new;
        assert_eq!(ols_sse(&[p(0.0, 3.0), p(1.0, -7.0)]), 0.0);
        assert!((ols_sse(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0)]) - 2.0 / 3.0).abs() < 1e-12);
        assert!(ols_sse(&[p(0.0, 1.0), p(1.0, 3.0), p(2.0, 5.0), p(3.0, 7.0)]).abs() < 1e-20);
        assert_eq!(ols_sse(&[p(1.0, 0.0), p(1.0, 5.0), p(1.0, 9.0)]), 0.0);
    }

    #[test]
    fn dynamic_splits_planted_oscillation() {
        let mut s = vec![0.0];
        s.extend([0.0, 0.0, 0.0, 0.0, 5.0, -5.0, 5.0, -5.0, 0.0, 0.0, 0.0, 0.0]);
        s.push(0.0);
        let b = naive_buckets(s.len(), 3).unwrap();
        assert_eq!(b.buckets()[2], 5..9);
        assert_eq!(dynamic_buckets(&s, &b, 0).unwrap(), b);
        let out = dynamic_buckets(&s, &b, 1).unwrap();
        assert_eq!(out.len(), b.len());
        // After the split at 7 every interior SSE is zero; the first pair merges.
        assert_eq!(out.buckets(), &[0..1, 1..7, 7..9, 9..13, 13..14]);
    }

    #[test]
    fn dynamic_stops_when_nothing_splits() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let b = naive_buckets(4, 2).unwrap();
        assert_eq!(dynamic_buckets(&s, &b, 5).unwrap(), b);
    }

    proptest! {
        #[test]
        fn dynamic_preserves_partition(
            s in prop::collection::vec(-100f64..100.0, 3..80),
            frac in 0.0f64..1.0,
            p in 0usize..12,
        ) {
            let m = 1 + ((s.len() - 3) as f64 * frac) as usize;
            let b = naive_buckets(s.len(), m).unwrap();
            let out = dynamic_buckets(&s, &b, p).unwrap();
            prop_assert_eq!(out.len(), b.len());
            prop_assert_eq!(out.n_points(), s.len());
        }

        #[test]
        fn linear_series_rebuckets_like_constant(
            a in -50f64..50.0,
            b in -3f64..3.0,
            n in 3usize..60,
            frac in 0.0f64..1.0,
            p in 0usize..8,
        ) {
            let line: Vec<f64> = (0..n).map(|i| a + b * i as f64).collect();
            let m = 1 + ((n - 3) as f64 * frac) as usize;
            let bk = naive_buckets(n, m).unwrap();
            prop_assert_eq!(dynamic_buckets(&line, &bk, p).unwrap(), dynamic_buckets(&vec![0.0; n], &bk, p).unwrap());
        }

        #[test]
        fn constant_series_ties_pick_lowest(c in -5f64..5.0, n in 3usize..50, frac in 0.0f64..1.0) {
            let s = vec![c; n];
            let m = 1 + ((n - 3) as f64 * frac) as usize;
            let b = naive_buckets(n, m).unwrap();
            let firsts: Vec<usize> = b.buckets().iter().map(|r| r.start).collect();
            prop_assert_eq!(lttb_indices(&s, &b).unwrap(), firsts);
        }
    }
}
