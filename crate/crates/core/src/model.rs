use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fp::{fp_amc, FpParams};
use crate::phtype::AmcSpec;
use crate::zw::{build_zw_amc, ZwParams};

/// Policy tag together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ModelParams {
    Zw(ZwParams),
    Fp(FpParams),
}

impl ModelParams {
    pub fn build_amc(&self) -> Result<AmcSpec> {
        match self {
            ModelParams::Zw(p) => Ok(build_zw_amc(p)),
            ModelParams::Fp(p) => fp_amc(p),
        }
    }

    pub fn rates(&self) -> (f64, f64) {
        match self {
            ModelParams::Zw(p) => (p.mu1, p.mu2),
            ModelParams::Fp(p) => (p.mu1, p.mu2),
        }
    }
}

pub(crate) fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}
