//! Dense symmetric eigenvalues: Householder reduction to tridiagonal form
//! followed by implicit-shift QL iteration. Eigenvalues only.

use crate::error::{Error, Result};

/// Dense symmetric matrix; every write updates both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Build from the lower triangle of a row-major square matrix.
    pub fn from_lower(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, rows[i * n + j]);
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `‖M v − λ v‖₂`.
    pub fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        (0..self.n)
            .map(|i| {
                let mv: f64 = (0..self.n).map(|j| self.get(i, j) * v[j]).sum();
                (mv - lambda * v[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumVector {
    pub eigenvalues: Vec<f64>,
}

impl SpectrumVector {
    pub fn new(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self { eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

const MAX_QL_ITERATIONS: usize = 64;

/// Householder tridiagonalization on the lower triangle. Returns the
/// diagonal and the subdiagonal (`off[i]` couples rows `i - 1` and `i`).
fn tridiagonalize(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (d, e)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix.
fn tridiagonal_ql(d: &mut [f64], off: &[f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[1..]);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_QL_ITERATIONS {
                return Err(Error::Eigensolver { order: n });
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenvalues of `m`, ascending. Backward stable: each is accurate to a
/// small multiple of machine precision times ‖m‖.
pub fn sym_eigenvalues(m: &SymmetricMatrix) -> Result<SpectrumVector> {
    let n = m.order();
    match n {
        0 => return Ok(SpectrumVector::new(Vec::new())),
        1 => return Ok(SpectrumVector::new(vec![m.get(0, 0)])),
        _ => {}
    }
    let (mut d, e) = tridiagonalize(m.data.clone(), n);
    tridiagonal_ql(&mut d, &e)?;
    Ok(SpectrumVector::new(d))
}
