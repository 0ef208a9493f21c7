//! Dense LU solves against a fixed matrix from both sides.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

/// LU factorizations of `S` and `S^T`, so that both `S^{-1} b` and
/// `b S^{-1}` cost one triangular solve pair.
#[derive(Debug, Clone)]
pub struct Solver {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Solver {
    pub fn new(s: &DMatrix<f64>) -> Result<Self> {
        let lu = LU::new(s.clone());
        if !lu.is_invertible() {
            return Err(Error::Singular);
        }
        let lu_t = LU::new(s.transpose());
        Ok(Self { lu, lu_t })
    }

    /// `S^{-1} b` for a column vector `b`.
    pub fn right(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu.solve(b).ok_or(Error::Singular)
    }

    /// `b S^{-1}` for a row vector `b` (stored as a column).
    pub fn left(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu_t.solve(b).ok_or(Error::Singular)
    }
}

/// Returns `true` when every state can reach a state with positive exit
/// rate, i.e. the sub-generator has no closed class and is nonsingular.
pub fn all_transient(s: &DMatrix<f64>, exit: &DVector<f64>, tol: f64) -> bool {
    let n = s.nrows();
    let mut reaches = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| exit[i] > tol).collect();
    for &i in &stack {
        reaches[i] = true;
    }
    // walk the reversed transition graph from the exit states
    while let Some(j) = stack.pop() {
        for i in 0..n {
            if !reaches[i] && i != j && s[(i, j)] > 0.0 {
                reaches[i] = true;
                stack.push(i);
            }
        }
    }
    reaches.into_iter().all(|r| r)
}

/// Writes a matrix as row-major CSV, one matrix row per line.
pub fn dump_matrix_csv<W: std::io::Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
