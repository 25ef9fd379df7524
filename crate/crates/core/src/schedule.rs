//! Round parameter schedule for the slice-and-spread allocator.
//!
//! Starting from the integer density `mu = floor(m / n)`, each round keeps
//! `mu_t = floor(mu_{t-1}^{3/4})` balls per bin and slices every bin down to
//! the threshold `tau_t = mu - mu_t`. Execution stops at the nominal round
//! count or as soon as `mu_t <= 2`, whichever comes first; below `mu = 4` the
//! schedule degenerates to zero rounds.

use serde::{Deserialize, Serialize};

use crate::model::Config;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    mu: u64,
    t_star: usize,
    t_formula: usize,
    mu_t: Vec<u64>,
    m_t: Vec<u64>,
    tau_t: Vec<u64>,
}

impl Schedule {
    /// Integer density `floor(m / n)` the schedule was built from.
    pub fn mu(&self) -> u64 {
        self.mu
    }

    /// Number of rounds actually executed.
    pub fn t_star(&self) -> usize {
        self.t_star
    }

    /// Nominal round count `ceil(log_{4/3} log2 mu)`.
    pub fn t_formula(&self) -> usize {
        self.t_formula
    }

    /// Per-round densities `mu_0 ..= mu_{t*}`.
    pub fn mu_t(&self) -> &[u64] {
        &self.mu_t
    }

    /// Per-round ball budgets, `m_0 = m` and `m_t = mu_t * n`.
    pub fn m_t(&self) -> &[u64] {
        &self.m_t
    }

    /// Slicing thresholds `tau_0 = 0 ..= tau_{t*}`.
    pub fn tau_t(&self) -> &[u64] {
        &self.tau_t
    }

    /// Weights `m_{t-1}` for rounds `t = 1 ..= t*`; the round distribution
    /// assigns round `t` with probability `m_{t-1} / sum_q m_{q-1}`.
    pub fn round_weights(&self) -> &[u64] {
        &self.m_t[..self.t_star]
    }
}

/// Largest `k` with `k^4 <= x^3`, i.e. `floor(x^{3/4})`.
fn floor_pow_three_quarters(x: u64) -> u64 {
    assert!(x < 1 << 42, "density out of supported range");
    if x <= 1 {
        return x;
    }
    let cube = (x as u128).pow(3);
    let mut lo = 1u128;
    let mut hi = x as u128;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if mid.pow(4) <= cube {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo as u64
}

/// `ceil(log_{4/3} log2 mu)` for `mu >= 3`; 0 for `mu <= 2`.
fn nominal_rounds(mu: u64) -> usize {
    if mu <= 2 {
        return 0;
    }
    let inner = (mu as f64).log2();
    let t = inner.ln() / (4.0f64 / 3.0).ln();
    t.ceil() as usize
}

pub fn build_schedule(cfg: &Config) -> Schedule {
    let mu = cfg.mu_floor();
    let n = cfg.n() as u64;
    let t_formula = nominal_rounds(mu);

    let mut mu_t = vec![mu];
    let mut m_t = vec![cfg.m() as u64];
    let mut tau_t = vec![0u64];

    if mu >= 4 {
        loop {
            let t = mu_t.len();
            if t > t_formula {
                break;
            }
            let next = floor_pow_three_quarters(*mu_t.last().unwrap());
            mu_t.push(next);
            m_t.push(next * n);
            tau_t.push(mu - next);
            if next <= 2 {
                break;
            }
        }
    }

    let t_star = mu_t.len() - 1;
    Schedule {
        mu,
        t_star,
        t_formula,
        mu_t,
        m_t,
        tau_t,
    }
}
