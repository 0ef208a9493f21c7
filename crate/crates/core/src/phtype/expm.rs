//! Action of the matrix exponential of a sub-generator on a row vector.
//!
//! The primary route is uniformization: with `q >= max_i |S_ii|` and
//! `P = I + S/q` (entrywise nonnegative),
//! `v exp(Sx) = sum_j e^{-qx} (qx)^j / j! * v P^j`.
//! Every term is nonnegative for nonnegative `v`, and the neglected Poisson
//! tail bounds the truncation error. Long horizons are split into pieces of
//! Poisson mean at most [`MAX_POISSON_MEAN`] so `e^{-qx}` never underflows.
//!
//! Extremely stiff inputs (e.g. freeze rates of 1e8) would need ~q*x
//! uniformization steps; for those the dense Pade scaling-and-squaring
//! exponential is used instead when it is cheaper.

use nalgebra::DMatrix;

/// Poisson truncation threshold.
pub const POISSON_TAIL: f64 = 1e-14;

/// Largest Poisson mean handled in a single series.
pub const MAX_POISSON_MEAN: f64 = 100.0;

/// Uniformization is always used below this value of `q * x`.
const STIFF_THRESHOLD: f64 = 1e4;

/// Uniformized sub-generator, reusable across many actions.
#[derive(Debug, Clone)]
pub struct Uniformized {
    n: usize,
    rate: f64,
    // nonzeros of P = I + S/q as (row, col, value), row-major
    entries: Vec<(usize, usize, f64)>,
    dense: DMatrix<f64>,
    norm1: f64,
}

impl Uniformized {
    pub fn new(s: &DMatrix<f64>) -> Self {
        assert!(s.is_square(), "uniformization needs a square matrix");
        let n = s.nrows();
        let rate = (0..n).map(|i| -s[(i, i)]).fold(0.0_f64, f64::max);
        let mut entries = Vec::new();
        if rate > 0.0 {
            for i in 0..n {
                for j in 0..n {
                    let p = if i == j {
                        1.0 + s[(i, i)] / rate
                    } else {
                        s[(i, j)] / rate
                    };
                    if p != 0.0 {
                        entries.push((i, j, p));
                    }
                }
            }
        }
        let norm1 = (0..n)
            .map(|j| s.column(j).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            n,
            rate,
            entries,
            dense: s.clone(),
            norm1,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Uniformization rate `q`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Returns `v exp(S x)`. `x` must be nonnegative and `v.len()` must
    /// equal the dimension; callers validate both.
    pub fn apply(&self, v: &[f64], x: f64) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        debug_assert!(x >= 0.0);
        if x == 0.0 || self.rate == 0.0 {
            return v.to_vec();
        }
        let mean = self.rate * x;
        let out = if self.prefers_dense(mean, x) {
            self.apply_dense(v, x)
        } else {
            let pieces = (mean / MAX_POISSON_MEAN).ceil().max(1.0);
            let step = mean / pieces;
            let mut cur = v.to_vec();
            for _ in 0..pieces as usize {
                cur = self.poisson_series(&cur, step);
            }
            cur
        };
        if v.iter().all(|&e| e >= 0.0) {
            out.into_iter().map(|e| e.max(0.0)).collect()
        } else {
            out
        }
    }

    fn prefers_dense(&self, mean: f64, x: f64) -> bool {
        if mean <= STIFF_THRESHOLD {
            return false;
        }
        let n = self.n as f64;
        let work = (self.entries.len() + self.n) as f64;
        let uniform_cost = (mean + 10.0 * mean.sqrt() + 10.0) * work;
        let squarings = (self.norm1 * x).log2().max(0.0);
        let pade_cost = n * n * n * (squarings + 10.0);
        pade_cost < uniform_cost
    }

    fn apply_dense(&self, v: &[f64], x: f64) -> Vec<f64> {
        let e = (&self.dense * x).exp();
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += vi * e[(i, j)];
                }
            }
        }
        out
    }

    fn mul_p(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(i, j, p) in &self.entries {
            out[j] += v[i] * p;
        }
    }

    fn poisson_series(&self, v: &[f64], mean: f64) -> Vec<f64> {
        let mut weight = (-mean).exp();
        let mut cumulative = weight;
        let mut acc: Vec<f64> = v.iter().map(|e| e * weight).collect();
        let mut term = v.to_vec();
        let mut next = vec![0.0; self.n];
        let max_terms = (mean + 20.0 * mean.sqrt() + 50.0) as usize;
        let mut j = 0usize;
        while 1.0 - cumulative > POISSON_TAIL && j < max_terms {
            self.mul_p(&term, &mut next);
            std::mem::swap(&mut term, &mut next);
            j += 1;
            weight *= mean / j as f64;
            cumulative += weight;
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += weight * t;
            }
        }
        acc
    }
}
