//! Symmetric positive-definite banded systems via LDLᵀ.

use crate::error::{Error, Result};

/// Symmetric band matrix; `bands[k][j]` holds entry (j, j + k).
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        SymBand {
            n,
            bands: (0..=half_bandwidth).map(|k| vec![0.0; n.saturating_sub(k)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` to entry (i, j); entries outside the band are a logic error.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.bands[hi - lo][lo] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k >= self.bands.len() {
            0.0
        } else {
            self.bands[k][lo]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (k, band) in self.bands.iter().enumerate() {
            for (j, &v) in band.iter().enumerate() {
                y[j] += v * x[j + k];
                if k > 0 {
                    y[j + k] += v * x[j];
                }
            }
        }
        y
    }

    /// Solves A x = rhs. Fails if a pivot is not positive.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let p = self.bands.len() - 1;
        // l[k][j] = L(j + k, j), unit lower triangular.
        let mut l: Vec<Vec<f64>> = self.bands.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut dj = self.bands[0][j];
            for k in 1..=p.min(j) {
                let lk = l[k][j - k];
                dj -= lk * lk * d[j - k];
            }
            if !(dj > 0.0) || !dj.is_finite() {
                return Err(Error::numerical(
                    format!("banded factorization lost positive definiteness at row {j}"),
                    dj,
                ));
            }
            d[j] = dj;
            for k in 1..=p {
                let i = j + k;
                if i >= n {
                    break;
                }
                // A(i, j) − Σ_m L(i, m) L(j, m) d_m over the shared band.
                let mut v = self.bands[k][j];
                for m in i.saturating_sub(p)..j {
                    v -= l[i - m][m] * l[j - m][m] * d[m];
                }
                l[k][j] = v / dj;
            }
        }
        let mut x = rhs.to_vec();
        for i in 0..n {
            for k in 1..=p.min(i) {
                x[i] -= l[k][i - k] * x[i - k];
            }
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi /= di;
        }
        for i in (0..n).rev() {
            for k in 1..=p {
                if i + k < n {
                    x[i] -= l[k][i] * x[i + k];
                }
            }
        }
        Ok(x)
    }
}
