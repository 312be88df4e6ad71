//! Sliding-window (Takens) delay embedding with unit delay.

use crate::error::{Error, Result};

/// Points of equal dimension stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    /// Build from explicit points; all must share one dimension.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidSeries("point cloud needs points of dimension ≥ 1".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::ShapeMismatch("points of unequal dimension".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite coordinate".into()));
        }
        Ok(Self {
            coords: points.concat(),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Point `i` is `series[i..i + window]`, for `i` in `0..=len - window`.
pub fn takens_embed(series: &[f64], window: usize) -> Result<PointCloud> {
    if window == 0 || series.len() < window {
        return Err(Error::InvalidWindow {
            len: series.len(),
            window,
        });
    }
    let coords = series.windows(window).flatten().copied().collect();
    Ok(PointCloud { coords, dim: window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let cloud = takens_embed(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let pts: Vec<Vec<f64>> = cloud.points().map(<[f64]>::to_vec).collect();
        assert_eq!(pts, vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]);

        let s = [5.0, -1.0, 7.0];
        let one = takens_embed(&s, 1).unwrap();
        assert_eq!(one.points().map(|p| p[0]).collect::<Vec<_>>(), s.to_vec());

        let chunk = vec![0.0; 600];
        let c = takens_embed(&chunk, 3).unwrap();
        assert_eq!((c.len(), c.dim()), (598, 3));

        assert!(matches!(takens_embed(&[1.0, 2.0], 3), Err(Error::InvalidWindow { .. })));
    }

    proptest! {
        #[test]
        fn count_and_overlap(s in prop::collection::vec(-10f64..10.0, 1..120), w in 1usize..10) {
            prop_assume!(w <= s.len());
            let c = takens_embed(&s, w).unwrap();
            prop_assert_eq!(c.len(), s.len() - w + 1);
            for i in 0..c.len().saturating_sub(1) {
                prop_assert_eq!(&c.point(i)[1..], &c.point(i + 1)[..w - 1]);
            }
        }
    }
}
