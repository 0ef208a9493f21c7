//! Zero-wait (ZW) policy: the 7-transient, 2-absorbing chain tracking a
//! tagged packet from its generation to the next successful reception.
//!
//! Transient states (1-based, as in the usual state table):
//!
//! | state | meaning |
//! |---|---|
//! | 1 | tagged packet on S1, S2's packet older |
//! | 2 | tagged packet on S1, S2's packet fresher |
//! | 3 | tagged packet on S2, S1's packet older |
//! | 4 | tagged packet on S2, S1's packet fresher |
//! | 5 | tagged delivered, both in-service packets up to date |
//! | 6 | tagged delivered, P1 up to date, P2 obsolete |
//! | 7 | tagged delivered, P1 obsolete, P2 up to date |
//!
//! Absorbing columns are ordered (success, fail).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::phtype::AmcSpec;

pub const ZW_TRANSIENT: usize = 7;
pub const SUCCESS: usize = 0;
pub const FAIL: usize = 1;

/// Service rates of the two servers, stored with `mu1 >= mu2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRates")]
pub struct ZwParams {
    pub mu1: f64,
    pub mu2: f64,
    /// Set when the caller passed the slower server first.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub swapped: bool,
}

#[derive(Deserialize)]
struct RawRates {
    mu1: f64,
    mu2: f64,
}

impl TryFrom<RawRates> for ZwParams {
    type Error = crate::Error;
    fn try_from(r: RawRates) -> Result<Self> {
        ZwParams::new(r.mu1, r.mu2)
    }
}

pub(crate) fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be a positive finite rate, got {value}")))
    }
}

impl ZwParams {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        check_rate("mu1", mu1)?;
        check_rate("mu2", mu2)?;
        Ok(if mu1 >= mu2 {
            Self { mu1, mu2, swapped: false }
        } else {
            Self { mu1: mu2, mu2: mu1, swapped: true }
        })
    }
}

/// Builds `(S, V)`, `sigma` and the mask `theta` of states {5, 6, 7}.
pub fn build_zw_amc(p: &ZwParams) -> AmcSpec {
    let (m1, m2) = (p.mu1, p.mu2);
    let mut s = DMatrix::zeros(ZW_TRANSIENT, ZW_TRANSIENT);
    let mut v = DMatrix::zeros(ZW_TRANSIENT, 2);
    // (from, to, rate) with 1-based transient states
    let moves = [
        (1, 6, m1),
        (1, 2, m2),
        (2, 5, m1),
        (3, 4, m1),
        (3, 7, m2),
        (4, 5, m2),
        (6, 5, m2),
        (7, 5, m1),
    ];
    for (from, to, rate) in moves {
        s[(from - 1, to - 1)] = rate;
    }
    v[(1, FAIL)] = m2;
    v[(3, FAIL)] = m1;
    v[(4, SUCCESS)] = m1 + m2;
    v[(5, SUCCESS)] = m1;
    v[(6, SUCCESS)] = m2;
    for i in 0..ZW_TRANSIENT {
        s[(i, i)] = -(m1 + m2);
    }
    let total = m1 + m2;
    let init = DVector::from_vec(vec![m1 / total, 0.0, m2 / total, 0.0, 0.0, 0.0, 0.0]);
    let mask = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    AmcSpec::new(s, v, init, mask, SUCCESS).expect("ZW chain is well formed for positive rates")
}

/// The closed-form `S^{-1}` of the ZW chain.
pub fn zw_explicit_inverse(p: &ZwParams) -> DMatrix<f64> {
    let total = p.mu1 + p.mu2;
    let a = p.mu1 / total;
    let b = p.mu2 / total;
    #[rustfmt::skip]
    let body = DMatrix::from_row_slice(7, 7, &[
        1.0, b,   0.0, 0.0, 2.0 * a * b, a,   0.0,
        0.0, 1.0, 0.0, 0.0, a,           0.0, 0.0,
        0.0, 0.0, 1.0, a,   2.0 * a * b, 0.0, b,
        0.0, 0.0, 0.0, 1.0, b,           0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0,         0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, b,           1.0, 0.0,
        0.0, 0.0, 0.0, 0.0, a,           0.0, 1.0,
    ]);
    body * (-1.0 / total)
}

/// Closed-form `(mean PAoI, mean AoI)` under ZW.
pub fn zw_closed_form_means(p: &ZwParams) -> (f64, f64) {
    let (m1, m2) = (p.mu1, p.mu2);
    let paoi = 2.0 * (m1 + m2) / (m1 * m1 + m1 * m2 + m2 * m2);
    let aoi = 2.0 * (m1 * m1 + 3.0 * m1 * m2 + m2 * m2) / (m1 + m2).powi(3);
    (paoi, aoi)
}
