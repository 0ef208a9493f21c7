//! Freeze/preempt (F/P) policy.
//!
//! The tagged-packet chain `Z(t)` has `9k + 5` transient states: nine
//! in-freeze blocks `(j, l)` carrying the Erlang phase `l` of the running
//! freeze, plus five not-in-freeze states. The recurrent chain `W(t)` of size
//! `5k + 2` describes the system as seen by an arbitrary packet generation and
//! supplies the initial vector of `Z(t)`.

use std::fmt;

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::phtype::AmcSpec;
use crate::zw::check_rate;

pub const SUCCESS: usize = 0;
pub const FAIL: usize = 1;

/// Freeze rate standing in for "no freezing" (with `k = 1`).
pub const PREEMPT_ONLY_LAMBDA: f64 = 1e8;

/// In-freeze blocks of `Z(t)` in dense layout order.
const FROZEN_BLOCKS: [u8; 9] = [1, 2, 4, 6, 8, 10, 11, 12, 13];
/// Dense layout: frozen blocks are expanded to `k` phases, the rest are single states.
const LAYOUT: [u8; 14] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFp")]
pub struct FpParams {
    pub mu1: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub k: u32,
}

#[derive(Deserialize)]
struct RawFp {
    mu1: f64,
    mu2: f64,
    lambda: f64,
    k: u32,
}

impl TryFrom<RawFp> for FpParams {
    type Error = Error;
    fn try_from(r: RawFp) -> Result<Self> {
        FpParams::new(r.mu1, r.mu2, r.lambda, r.k)
    }
}

impl FpParams {
    /// Validates the rates; the faster server is always server 1.
    pub fn new(mu1: f64, mu2: f64, lambda: f64, k: u32) -> Result<Self> {
        check_rate("mu1", mu1)?;
        check_rate("mu2", mu2)?;
        check_rate("lambda", lambda)?;
        if k < 1 {
            return Err(invalid("k", "Erlang order must be at least 1"));
        }
        let (mu1, mu2) = if mu1 >= mu2 { (mu1, mu2) } else { (mu2, mu1) };
        Ok(Self { mu1, mu2, lambda, k })
    }

    /// Freezing disabled, preemption kept.
    pub fn preemption_only(mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(mu1, mu2, PREEMPT_ONLY_LAMBDA, 1)
    }

    /// Multiplies every rate by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.mu1 * c, self.mu2 * c, self.lambda * c, self.k)
    }
}

fn is_frozen(block: u8) -> bool {
    FROZEN_BLOCKS.contains(&block)
}

/// Symbolic state of `Z(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FpState {
    /// In-freeze state `(block, phase)`, phase in `1..=k`.
    Frozen { block: u8, phase: u32 },
    /// Not-in-freeze state (3, 5, 7, 9 or 14).
    Open(u8),
}

impl fmt::Display for FpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpState::Frozen { block, phase } => write!(f, "({block},{phase})"),
            FpState::Open(j) => write!(f, "{j}"),
        }
    }
}

/// Bijection between symbolic `Z(t)` states and dense indices.
#[derive(Debug, Clone)]
pub struct FpStateIndex {
    k: u32,
    offsets: [usize; 15],
    states: Vec<FpState>,
}

impl FpStateIndex {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1);
        let mut offsets = [usize::MAX; 15];
        let mut states = Vec::with_capacity(9 * k as usize + 5);
        for block in LAYOUT {
            offsets[block as usize] = states.len();
            if is_frozen(block) {
                states.extend((1..=k).map(|phase| FpState::Frozen { block, phase }));
            } else {
                states.push(FpState::Open(block));
            }
        }
        Self { k, offsets, states }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index(&self, state: FpState) -> Option<usize> {
        match state {
            FpState::Frozen { block, phase } => {
                (block <= 14 && is_frozen(block) && (1..=self.k).contains(&phase))
                    .then(|| self.offsets[block as usize] + phase as usize - 1)
            }
            FpState::Open(block) => (block <= 14 && !is_frozen(block) && block >= 1)
                .then(|| self.offsets[block as usize]),
        }
    }

    fn at(&self, block: u8, phase: u32) -> usize {
        self.index(FpState::Frozen { block, phase })
            .expect("frozen state in range")
    }

    fn open(&self, block: u8) -> usize {
        self.index(FpState::Open(block)).expect("open state in range")
    }

    pub fn state(&self, i: usize) -> Option<FpState> {
        self.states.get(i).copied()
    }

    pub fn states(&self) -> &[FpState] {
        &self.states
    }

    /// `{"(1,1)": 0, ..., "14": 9k+4}` in dense order.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.to_string(), serde_json::Value::from(i)))
            .collect();
        serde_json::Value::Object(map)
    }
}

/// Transient part of `Z(t)` before the initial vector is attached.
#[derive(Debug, Clone)]
pub struct FpAmc {
    pub params: FpParams,
    pub index: FpStateIndex,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

enum Target {
    State(usize),
    Absorb(usize),
}

/// Builds `S` and `V` of `Z(t)`.
///
/// Freeze expiry out of the IF states with both servers busy, (4,k), (6,k),
/// (8,k) and (10,k), leads to the matching NIF state 3, 5, 7 and 9. A
/// delivery from (10,l) on S2 preempts the older packet on S1 and leaves
/// both servers idle, i.e. (11,l).
pub fn build_fp_amc(p: &FpParams) -> FpAmc {
    let idx = FpStateIndex::new(p.k);
    let n = idx.len();
    let k = p.k;
    let kl = k as f64 * p.lambda;
    let (m1, m2) = (p.mu1, p.mu2);
    let mut s = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, 2);
    let mut add = |from: usize, to: Target, rate: f64| match to {
        Target::State(j) => s[(from, j)] += rate,
        Target::Absorb(c) => v[(from, c)] += rate,
    };
    use Target::{Absorb, State};
    for l in 1..=k {
        // phase advance within a freeze, or the freeze-expiry target
        let advance = |block: u8, on_expiry: usize| {
            if l < k {
                idx.at(block, l + 1)
            } else {
                on_expiry
            }
        };
        let at = |block: u8| idx.at(block, l);

        add(at(1), State(advance(1, idx.at(4, 1))), kl);
        add(at(1), State(at(11)), m1);

        add(at(2), State(advance(2, idx.at(8, 1))), kl);
        add(at(2), State(at(11)), m2);

        add(at(4), State(advance(4, idx.open(3))), kl);
        add(at(4), State(at(13)), m1);
        add(at(4), Absorb(FAIL), m2);

        add(at(6), State(advance(6, idx.open(5))), kl);
        add(at(6), State(at(11)), m1);
        add(at(6), State(at(1)), m2);

        add(at(8), State(advance(8, idx.open(7))), kl);
        add(at(8), Absorb(FAIL), m1);
        add(at(8), State(at(12)), m2);

        add(at(10), State(advance(10, idx.open(9))), kl);
        add(at(10), State(at(2)), m1);
        add(at(10), State(at(11)), m2);

        add(at(11), State(advance(11, idx.at(12, 1))), kl);

        add(at(12), State(advance(12, idx.open(14))), kl);
        add(at(12), Absorb(SUCCESS), m1);

        add(at(13), State(advance(13, idx.open(14))), kl);
        add(at(13), Absorb(SUCCESS), m2);
    }
    add(idx.open(3), State(idx.open(14)), m1);
    add(idx.open(3), Absorb(FAIL), m2);
    add(idx.open(5), State(idx.at(12, 1)), m1);
    add(idx.open(5), State(idx.at(4, 1)), m2);
    add(idx.open(7), Absorb(FAIL), m1);
    add(idx.open(7), State(idx.open(14)), m2);
    add(idx.open(9), State(idx.at(8, 1)), m1);
    add(idx.open(9), State(idx.at(12, 1)), m2);
    add(idx.open(14), Absorb(SUCCESS), m1 + m2);

    for i in 0..n {
        let out: f64 = (0..n).filter(|&j| j != i).map(|j| s[(i, j)]).sum::<f64>() + v.row(i).sum();
        s[(i, i)] = -out;
    }
    FpAmc { params: *p, index: idx, s, v }
}

/// Symbolic state of the recurrent chain `W(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RmcState {
    /// `(block, phase)` for blocks 1..=5.
    Frozen { block: u8, phase: u32 },
    /// Both servers busy, not in freeze: 6 (`T1 < T2`) or 7 (`T1 > T2`).
    Open(u8),
}

/// Dense index of a `W(t)` state: blocks 1..5 of `k` phases, then 6, 7.
pub fn rmc_index(k: u32, state: RmcState) -> Option<usize> {
    let k = k as usize;
    match state {
        RmcState::Frozen { block, phase } => ((1..=5).contains(&block)
            && (1..=k).contains(&(phase as usize)))
        .then(|| (block as usize - 1) * k + phase as usize - 1),
        RmcState::Open(6) => Some(5 * k),
        RmcState::Open(7) => Some(5 * k + 1),
        RmcState::Open(_) => None,
    }
}

/// Generator `P` of `W(t)`, size `5k + 2`.
pub fn build_fp_rmc(p: &FpParams) -> DMatrix<f64> {
    let k = p.k;
    let n = 5 * k as usize + 2;
    let kl = k as f64 * p.lambda;
    let (m1, m2) = (p.mu1, p.mu2);
    let at = |block: u8, phase: u32| rmc_index(k, RmcState::Frozen { block, phase }).unwrap();
    let six = 5 * k as usize;
    let seven = six + 1;
    let mut g = DMatrix::zeros(n, n);
    for l in 1..=k {
        let advance = |block: u8, on_expiry: usize| if l < k { at(block, l + 1) } else { on_expiry };
        g[(at(1, l), advance(1, at(2, 1)))] += kl;

        g[(at(2, l), advance(2, at(4, 1)))] += kl;
        g[(at(2, l), at(1, l))] += m1;

        g[(at(3, l), advance(3, at(5, 1)))] += kl;
        g[(at(3, l), at(1, l))] += m2;

        g[(at(4, l), advance(4, six))] += kl;
        g[(at(4, l), at(3, l))] += m1;
        g[(at(4, l), at(1, l))] += m2;

        g[(at(5, l), advance(5, seven))] += kl;
        g[(at(5, l), at(1, l))] += m1;
        g[(at(5, l), at(2, l))] += m2;
    }
    g[(six, at(5, 1))] += m1;
    g[(six, at(2, 1))] += m2;
    g[(seven, at(2, 1))] += m1;
    g[(seven, at(4, 1))] += m2;
    for i in 0..n {
        let out: f64 = (0..n).filter(|&j| j != i).map(|j| g[(i, j)]).sum();
        g[(i, i)] = -out;
    }
    g
}

/// Stationary law of `W(t)` and the packet-generation intensity `f`.
#[derive(Debug, Clone, Serialize)]
pub struct RmcStationary {
    pub pi: Vec<f64>,
    pub f: f64,
    pub residual: f64,
}

/// Residual tolerance on `||pi P||_inf`, scaled by the largest rate.
pub const STATIONARY_TOL: f64 = 1e-10;

/// Solves `pi P = 0, pi 1 = 1` with the last balance equation replaced by
/// the normalization.
pub fn rmc_stationary(p: &FpParams, generator: &DMatrix<f64>) -> Result<RmcStationary> {
    let n = generator.nrows();
    if !generator.is_square() || n != 5 * p.k as usize + 2 {
        return Err(Error::DimensionMismatch(format!(
            "generator is {}x{}, expected order {}",
            generator.nrows(),
            generator.ncols(),
            5 * p.k + 2
        )));
    }
    let mut a = generator.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = LU::new(a).solve(&b).ok_or(Error::Singular)?;
    if pi.iter().any(|&x| x < -1e-10) {
        return Err(Error::Stationary(pi.min().abs()));
    }
    let mut pi = pi.map(|x| x.max(0.0));
    pi /= pi.sum();
    let scale = (0..n).map(|i| generator[(i, i)].abs()).fold(1.0, f64::max);
    let residual = (generator.transpose() * &pi).amax();
    if !(residual <= STATIONARY_TOL * scale) {
        return Err(Error::Stationary(residual));
    }
    let k = p.k;
    let kl = k as f64 * p.lambda;
    let at = |block: u8| pi[rmc_index(k, RmcState::Frozen { block, phase: k }).unwrap()];
    let (six, seven) = (pi[5 * k as usize], pi[5 * k as usize + 1]);
    let f = kl * (at(1) + at(2) + at(3)) + (p.mu1 + p.mu2) * (six + seven);
    if !(f > 0.0) {
        return Err(Error::Stationary(f));
    }
    Ok(RmcStationary {
        pi: pi.as_slice().to_vec(),
        f,
        residual,
    })
}

/// Entry probabilities `(p1, p2, p3)` of a new packet into (1,1), (10,1), (6,1).
pub fn entry_probabilities(p: &FpParams, st: &RmcStationary) -> [f64; 3] {
    let k = p.k;
    let kl = k as f64 * p.lambda;
    let at = |block: u8| st.pi[rmc_index(k, RmcState::Frozen { block, phase: k }).unwrap()];
    let (six, seven) = (st.pi[5 * k as usize], st.pi[5 * k as usize + 1]);
    [
        (kl * at(1) + p.mu2 * six + p.mu1 * seven) / st.f,
        (kl * at(2) + p.mu2 * seven) / st.f,
        (kl * at(3) + p.mu1 * six) / st.f,
    ]
}

/// Initial vector `beta` of `Z(t)`.
pub fn fp_initial_vector(p: &FpParams, st: &RmcStationary) -> DVector<f64> {
    let idx = FpStateIndex::new(p.k);
    let [p1, p2, p3] = entry_probabilities(p, st);
    let mut beta = DVector::zeros(idx.len());
    beta[idx.at(1, 1)] = p1;
    beta[idx.at(10, 1)] = p2;
    beta[idx.at(6, 1)] = p3;
    beta
}

/// Mask `h`: ones on (11,.), (12,.), (13,.) and 14.
pub fn fp_aoi_mask(k: u32) -> DVector<f64> {
    let idx = FpStateIndex::new(k);
    DVector::from_iterator(
        idx.len(),
        idx.states().iter().map(|s| match s {
            FpState::Frozen { block, .. } if (11..=13).contains(block) => 1.0,
            FpState::Open(14) => 1.0,
            _ => 0.0,
        }),
    )
}

/// Complete F/P chain: `Z(t)` with `beta` and `h` attached.
pub fn fp_amc(p: &FpParams) -> Result<AmcSpec> {
    let chain = build_fp_amc(p);
    let st = rmc_stationary(p, &build_fp_rmc(p))?;
    let mut beta = fp_initial_vector(p, &st);
    // p1 + p2 + p3 = 1 up to rounding; absorb it so the chain validates exactly
    let total = beta.sum();
    beta /= total;
    AmcSpec::new(chain.s, chain.v, beta, fp_aoi_mask(p.k), SUCCESS)
}
