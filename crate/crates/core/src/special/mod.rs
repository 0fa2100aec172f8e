//! Comparison processes: the voter-model perturbation, the process with a
//! fully selfish type 2, the threshold contact process and the
//! one-dimensional interface process.

mod contact;
mod interface;

pub use contact::{
    alpha_lower_bound, coupled_threshold_contact, simulate_threshold_contact, ContactRun,
    CoupledContact,
};
pub use interface::{
    gambler_ruin_hit_prob, gambler_ruin_limit, interface_from_config, interval_ruin_frequency,
    interval_ruin_trial, simulate_interface, InterfaceRun, InterfaceState,
};

use crate::dynamics::{simulate_rule, switch_probability, ModelParams, RunOptions, SpinRule, Trajectory};
use crate::error::{param, Error, Result};
use crate::lattice::{Configuration, Lattice, Type};

/// `eps = rho / (d (1 - rho) + rho)`.
pub fn epsilon_from_rho(rho: f64, d: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(param(format!("rho={rho} outside (0, 1)")));
    }
    if d == 0 {
        return Err(param("dimension must be at least 1"));
    }
    Ok(rho / (d as f64 * (1.0 - rho) + rho))
}

/// Voter model in which a fraction `eps` of the updates pick type 1 only
/// when the whole neighbourhood is type 1, and type 2 otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoterPerturbation {
    pub eps: f64,
    nu: usize,
}

impl VoterPerturbation {
    pub fn new(eps: f64, lattice: &Lattice) -> Result<Self> {
        if lattice.m() != 1 {
            return Err(Error::UnsupportedRange(lattice.m()));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(param(format!("eps={eps} outside [0, 1]")));
        }
        Ok(Self {
            eps,
            nu: lattice.nu(),
        })
    }

    pub fn from_rho(rho: f64, lattice: &Lattice) -> Result<Self> {
        Self::new(epsilon_from_rho(rho, lattice.d())?, lattice)
    }
}

impl SpinRule for VoterPerturbation {
    #[inline]
    fn prob_two(&self, _current: Type, f2: usize) -> f64 {
        let copy = (1.0 - self.eps) * f2 as f64 / self.nu as f64;
        if f2 == 0 {
            copy
        } else {
            copy + self.eps
        }
    }
}

pub fn simulate_voter_perturbation(
    lattice: &Lattice,
    cfg0: &Configuration,
    eps: f64,
    t_max: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<Trajectory> {
    let rule = VoterPerturbation::new(eps, lattice)?;
    simulate_rule(
        lattice,
        cfg0,
        &rule,
        RunOptions {
            t_max,
            sample_interval,
            seed,
            keep_snapshots: false,
        },
    )
}

/// The producer-consumer model with `a2 = 1`: a type 2 site turns 1 only
/// when none of its neighbours is type 2, so type 2 behaves like a growth
/// process once it holds two adjacent sites.
pub fn simulate_richardson_reduced(
    lattice: &Lattice,
    cfg0: &Configuration,
    a1: f64,
    t_max: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<Trajectory> {
    if lattice.m() != 1 {
        return Err(Error::UnsupportedRange(lattice.m()));
    }
    if !(0.0..1.0).contains(&a1) {
        return Err(param(format!("a1={a1} outside [0, 1)")));
    }
    let params = ModelParams::reduced(a1, 1.0)?;
    crate::dynamics::simulate(lattice, cfg0, &params, t_max, sample_interval, seed)
}

/// Smallest probability with which a type 1 site having at least one
/// type 2 neighbour turns 2 when `a2 = 1`: `(1 - a1) / (a1 (2d - 1) + 1 - a1)`.
pub fn richardson_flip_lower_bound(a1: f64, d: usize) -> f64 {
    (1.0 - a1) / (a1 * (2.0 * d as f64 - 1.0) + 1.0 - a1)
}

/// Number of neighbour splits `(f1, f2)`, both positive with `f1 + f2 = 2d`,
/// at which the producer-consumer update fails to compare with the voter
/// perturbation of parameter `eps(rho, d)`: the probability of turning 1 must
/// not exceed `(1 - eps) f1/ν` and that of turning 2 must be at least
/// `(1 - eps) f2/ν + eps`, up to `tol`.
pub fn rate_inequality_violations(d: usize, rho: f64, a1: f64, a2: f64, tol: f64) -> Result<usize> {
    let eps = epsilon_from_rho(rho, d)?;
    let nu = 2 * d;
    let mut bad = 0;
    for f1 in 1..nu {
        let f2 = nu - f1;
        let (x1, x2) = (f1 as f64 / nu as f64, f2 as f64 / nu as f64);
        let to_one = switch_probability(a2, x1, x2);
        let to_two = switch_probability(a1, x2, x1);
        if to_one > (1.0 - eps) * x1 + tol {
            bad += 1;
        }
        if to_two < (1.0 - eps) * x2 + eps - tol {
            bad += 1;
        }
    }
    Ok(bad)
}

/// `g(z) = (1 + rho) z / ((1 - rho) + 2 rho z)`, the comparison curve on
/// the type 2 fraction `z`.
pub fn comparison_g(z: f64, rho: f64) -> f64 {
    (1.0 + rho) * z / ((1.0 - rho) + 2.0 * rho * z)
}

/// `h(z) = (d (1 - rho) z + rho) / (d (1 - rho) + rho)`, the voter
/// perturbation rate on the same fraction.
pub fn comparison_h(z: f64, rho: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * (1.0 - rho) * z + rho) / (d * (1.0 - rho) + rho)
}
