//! Independent reference computations shared by the integration tests.
//! None of these go through the crate's linear algebra or exponentials.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `exp(A x)` by scaling and squaring of a 30-term Taylor series.
pub fn taylor_expm(a: &DMatrix<f64>, x: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>() * x.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let b = a * (x / 2f64.powi(squarings as i32));
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..30 {
        term = &term * &b / j as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Erlang(k, rate) cdf as the upper Poisson tail `P(N(rate x) >= k)`.
pub fn erlang_cdf_poisson(rate: f64, k: u32, x: f64) -> f64 {
    let m = rate * x;
    let mut term = (-m).exp();
    let mut below = 0.0;
    for j in 0..k {
        below += term;
        term *= m / (j + 1) as f64;
    }
    1.0 - below
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`, started from
/// 64 equal panels so narrow features are not missed.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| adaptive_panel(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / PANELS as f64))
        .sum()
}

fn adaptive_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Outcome of one trajectory of an absorbing chain.
#[derive(Debug, Clone, Copy)]
pub struct Absorption {
    pub column: usize,
    pub time: f64,
    /// Time spent in masked states.
    pub masked: f64,
    /// Integral of `t` over the time spent in masked states.
    pub masked_moment: f64,
}

/// Gillespie sampler over the rows of `[S | V]`.
pub struct ChainSampler {
    s: DMatrix<f64>,
    v: DMatrix<f64>,
    init: DVector<f64>,
    mask: DVector<f64>,
    rng: ChaCha8Rng,
}

fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

impl ChainSampler {
    pub fn new(s: &DMatrix<f64>, v: &DMatrix<f64>, init: &DVector<f64>, mask: &DVector<f64>, seed: u64) -> Self {
        Self {
            s: s.clone(),
            v: v.clone(),
            init: init.clone(),
            mask: mask.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> Absorption {
        let n = self.s.nrows();
        let m = self.v.ncols();
        let mut state = pick(&mut self.rng, self.init.iter().copied());
        let mut t = 0.0;
        let (mut masked, mut masked_moment) = (0.0, 0.0);
        loop {
            let rate = -self.s[(state, state)];
            let dwell = -(1.0 - self.rng.random::<f64>()).ln() / rate;
            if self.mask[state] > 0.5 {
                masked += dwell;
                masked_moment += (t + dwell) * (t + dwell) / 2.0 - t * t / 2.0;
            }
            t += dwell;
            let row = state;
            let weights = (0..n + m).map(|j| {
                if j < n {
                    if j == row { 0.0 } else { self.s[(row, j)] }
                } else {
                    self.v[(row, j - n)]
                }
            });
            let next = pick(&mut self.rng, weights.collect::<Vec<_>>().into_iter());
            if next >= n {
                return Absorption {
                    column: next - n,
                    time: t,
                    masked,
                    masked_moment,
                };
            }
            state = next;
        }
    }
}

/// Long-run occupancy fractions of an irreducible generator by simulation.
pub fn ctmc_occupancy(g: &DMatrix<f64>, horizon: f64, seed: u64) -> Vec<f64> {
    let n = g.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut occ = vec![0.0; n];
    let mut state = 0;
    let mut t = 0.0;
    while t < horizon {
        let rate = -g[(state, state)];
        let dwell = -(1.0 - rng.random::<f64>()).ln() / rate;
        occ[state] += dwell;
        t += dwell;
        let weights: Vec<f64> = (0..n).map(|j| if j == state { 0.0 } else { g[(state, j)] }).collect();
        state = pick(&mut rng, weights.into_iter());
    }
    occ.iter().map(|o| o / t).collect()
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
