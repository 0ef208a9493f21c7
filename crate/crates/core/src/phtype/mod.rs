//! Phase-type distributions and absorbing CTMCs.
//!
//! A phase-type law `PH(sigma, S)` is the time to absorption of a CTMC with
//! transient sub-generator `S` started from `sigma`. An [`AmcSpec`] keeps the
//! absorbing rates split per absorbing state and carries the extra pieces the
//! age computations need (initial vector, overlap mask, success column).

mod expm;

use nalgebra::{DMatrix, DVector};

pub use expm::{Uniformized, MAX_POISSON_MEAN, POISSON_TAIL};

use crate::error::{Error, Result};
use crate::linalg::{all_transient, Solver};

/// Tolerance for structural checks (row sums, probability mass).
pub const STRUCTURE_TOL: f64 = 1e-12;

fn check_time(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::NegativeTime(x))
    } else {
        Ok(())
    }
}

fn row_scale(s: &DMatrix<f64>, i: usize) -> f64 {
    s[(i, i)].abs().max(1.0)
}

/// A phase-type distribution `PH(sigma, S)`.
#[derive(Debug, Clone)]
pub struct PhaseType {
    sigma: DVector<f64>,
    s: DMatrix<f64>,
    exit: DVector<f64>,
    solver: Solver,
    kernel: Uniformized,
}

impl PhaseType {
    /// Validates and builds a representation. `sigma` may be sub-stochastic.
    pub fn new(sigma: DVector<f64>, s: DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        if !s.is_square() || n == 0 {
            return Err(Error::InvalidPhaseType(format!(
                "sub-generator must be square and nonempty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if sigma.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial vector has length {}, sub-generator has order {n}",
                sigma.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let e = s[(i, j)];
                if !e.is_finite() {
                    return Err(Error::InvalidPhaseType(format!("S[{i}][{j}] is not finite")));
                }
                if i != j && e < 0.0 {
                    return Err(Error::InvalidPhaseType(format!(
                        "off-diagonal S[{i}][{j}] = {e} is negative"
                    )));
                }
            }
            if s[(i, i)] > 0.0 {
                return Err(Error::InvalidPhaseType(format!("diagonal S[{i}][{i}] is positive")));
            }
            let row: f64 = s.row(i).sum();
            if row > STRUCTURE_TOL * row_scale(&s, i) {
                return Err(Error::InvalidPhaseType(format!("row {i} sums to {row} > 0")));
            }
        }
        if sigma.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidPhaseType("initial vector has a negative entry".into()));
        }
        if sigma.sum() > 1.0 + STRUCTURE_TOL {
            return Err(Error::InvalidPhaseType(format!(
                "initial vector sums to {} > 1",
                sigma.sum()
            )));
        }
        let exit = -(&s * DVector::from_element(n, 1.0));
        let exit = exit.map(|e| if e.abs() < STRUCTURE_TOL { 0.0 } else { e });
        if !all_transient(&s, &exit, 0.0) {
            return Err(Error::InvalidPhaseType(
                "sub-generator is singular: some state never reaches absorption".into(),
            ));
        }
        let solver = Solver::new(&s).map_err(|_| {
            Error::InvalidPhaseType("sub-generator is numerically singular".into())
        })?;
        let kernel = Uniformized::new(&s);
        Ok(Self {
            sigma,
            s,
            exit,
            solver,
            kernel,
        })
    }

    pub fn order(&self) -> usize {
        self.s.nrows()
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn sub_generator(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// Exit-rate vector `nu = -S 1`.
    pub fn exit_rates(&self) -> &DVector<f64> {
        &self.exit
    }

    fn propagate(&self, x: f64) -> DVector<f64> {
        DVector::from_vec(self.kernel.apply(self.sigma.as_slice(), x))
    }

    /// Density `sigma exp(Sx) nu`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_time(x)?;
        Ok(self.propagate(x).dot(&self.exit).max(0.0))
    }

    /// `sigma (exp(Sx) - I) S^{-1} nu`, evaluated as `sigma 1 - sigma exp(Sx) 1`
    /// since `S^{-1} nu = -1`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_time(x)?;
        let total = self.sigma.sum();
        Ok((total - self.propagate(x).sum()).clamp(0.0, total.min(1.0)))
    }

    /// `i`-th non-central moment, `i! sigma (-S)^{-i} 1`, by repeated solves.
    pub fn moment(&self, i: u32) -> Result<f64> {
        if i < 1 {
            return Err(crate::error::invalid("i", "moment order must be at least 1"));
        }
        let mut y = self.sigma.clone();
        let mut factorial = 1.0;
        for j in 1..=i {
            y = -self.solver.left(&y)?;
            factorial *= j as f64;
        }
        Ok(factorial * y.sum())
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }
}

pub fn ph_pdf(ph: &PhaseType, x: f64) -> Result<f64> {
    ph.pdf(x)
}

pub fn ph_cdf(ph: &PhaseType, x: f64) -> Result<f64> {
    ph.cdf(x)
}

pub fn ph_moment(ph: &PhaseType, i: u32) -> Result<f64> {
    ph.moment(i)
}

/// Erlang-`k` law with mean `1/lambda` in its bidiagonal representation.
pub fn erlang_ph(lambda: f64, k: u32) -> Result<PhaseType> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(crate::error::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if k < 1 {
        return Err(crate::error::invalid("k", "Erlang order must be at least 1"));
    }
    let k = k as usize;
    let rate = k as f64 * lambda;
    let mut s = DMatrix::zeros(k, k);
    for i in 0..k {
        s[(i, i)] = -rate;
        if i + 1 < k {
            s[(i, i + 1)] = rate;
        }
    }
    let mut sigma = DVector::zeros(k);
    sigma[0] = 1.0;
    PhaseType::new(sigma, s)
}

/// Row vector times matrix exponential: `v exp(S x)`.
pub fn expm_action(s: &DMatrix<f64>, x: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_time(x)?;
    if !s.is_square() || s.nrows() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, vector has length {}",
            s.nrows(),
            s.ncols(),
            v.len()
        )));
    }
    let kernel = Uniformized::new(s);
    Ok(DVector::from_vec(kernel.apply(v.as_slice(), x)))
}

/// Absorbing CTMC with generator `[S V; 0 0]`, an initial vector over the
/// transient states, and the 0/1 mask of states whose sojourn overlaps the
/// age curve.
#[derive(Debug, Clone)]
pub struct AmcSpec {
    s: DMatrix<f64>,
    v: DMatrix<f64>,
    init: DVector<f64>,
    aoi_mask: DVector<f64>,
    success_col: usize,
}

impl AmcSpec {
    pub fn new(
        s: DMatrix<f64>,
        v: DMatrix<f64>,
        init: DVector<f64>,
        aoi_mask: DVector<f64>,
        success_col: usize,
    ) -> Result<Self> {
        let n = s.nrows();
        if !s.is_square() || n == 0 {
            return Err(Error::InvalidChain("S must be square and nonempty".into()));
        }
        if v.nrows() != n || init.len() != n || aoi_mask.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "S is {n}x{n}, V has {} rows, init has {} entries, mask has {}",
                v.nrows(),
                init.len(),
                aoi_mask.len()
            )));
        }
        if success_col >= v.ncols() {
            return Err(Error::AbsorbingIndex {
                index: success_col,
                count: v.ncols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && s[(i, j)] < 0.0 {
                    return Err(Error::InvalidChain(format!("S[{i}][{j}] is negative")));
                }
            }
            if v.row(i).iter().any(|&r| r < 0.0) {
                return Err(Error::InvalidChain(format!("V row {i} has a negative rate")));
            }
            let sum = s.row(i).sum() + v.row(i).sum();
            if sum.abs() > STRUCTURE_TOL * row_scale(&s, i) {
                return Err(Error::InvalidChain(format!(
                    "generator row {i} sums to {sum:e}, expected 0"
                )));
            }
        }
        if init.iter().any(|&p| !(p >= 0.0)) || (init.sum() - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::InvalidChain(format!(
                "initial vector must be a probability vector (sum {})",
                init.sum()
            )));
        }
        if aoi_mask.iter().any(|&m| m != 0.0 && m != 1.0) || aoi_mask.sum() < 1.0 {
            return Err(Error::InvalidChain(
                "age mask must be 0/1 with at least one selected state".into(),
            ));
        }
        let exit: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| v.row(i).sum()));
        if !all_transient(&s, &exit, 0.0) {
            return Err(Error::InvalidChain(
                "some transient state never reaches an absorbing state".into(),
            ));
        }
        Ok(Self {
            s,
            v,
            init,
            aoi_mask,
            success_col,
        })
    }

    pub fn sub_generator(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn absorbing_rates(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn init(&self) -> &DVector<f64> {
        &self.init
    }

    pub fn aoi_mask(&self) -> &DVector<f64> {
        &self.aoi_mask
    }

    pub fn success_col(&self) -> usize {
        self.success_col
    }

    pub fn transient_count(&self) -> usize {
        self.s.nrows()
    }

    pub fn absorbing_count(&self) -> usize {
        self.v.ncols()
    }

    /// Column `m` of `V`.
    pub fn absorbing_column(&self, m: usize) -> Result<DVector<f64>> {
        if m >= self.v.ncols() {
            return Err(Error::AbsorbingIndex {
                index: m,
                count: self.v.ncols(),
            });
        }
        Ok(self.v.column(m).into_owned())
    }

    /// Full `(n+M) x (n+M)` generator, for dumps and audits.
    pub fn full_generator(&self) -> DMatrix<f64> {
        let n = self.s.nrows();
        let m = self.v.ncols();
        let mut q = DMatrix::zeros(n + m, n + m);
        q.view_mut((0, 0), (n, n)).copy_from(&self.s);
        q.view_mut((0, n), (n, m)).copy_from(&self.v);
        q
    }
}

/// Probability `-init S^{-1} V_m` of absorption in column `m`.
pub fn absorption_probability(amc: &AmcSpec, m: usize) -> Result<f64> {
    let col = amc.absorbing_column(m)?;
    let y = Solver::new(amc.sub_generator())?.left(amc.init())?;
    Ok(-y.dot(&col))
}
