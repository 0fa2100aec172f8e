//! The interface process of the nearest-neighbour ring and the
//! gambler's-ruin law of a single type 2 interval.
//!
//! Midpoint `v` sits between ring sites `v` and `v + 1` (mod L); it is
//! occupied when those sites carry different types. Site `x` has the
//! midpoints `x - 1` and `x` on either side: when both are occupied the
//! flip of `x` annihilates them (rate 1), and when exactly one is occupied
//! the flip moves it across `x` (rate `1 - a` when `a1 = a2 = a`).

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::{check_horizon, run_until, ModelParams, ProducerConsumer, SimClock};
use crate::error::{param, Error, Result};
use crate::lattice::{Configuration, Lattice, Type};
use crate::rng::{derive_seed, exp_draw, rng_from_seed};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceState {
    pub occupied: Vec<bool>,
}

impl InterfaceState {
    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }
}

pub fn interface_from_config(lattice: &Lattice, cfg: &Configuration) -> Result<InterfaceState> {
    if lattice.d() != 1 || lattice.m() != 1 {
        return Err(Error::Domain(
            "interfaces are defined on the nearest-neighbour ring only".into(),
        ));
    }
    crate::lattice::check_matches(lattice, cfg)?;
    let l = cfg.len();
    Ok(InterfaceState {
        occupied: (0..l).map(|v| cfg.get(v) != cfg.get((v + 1) % l)).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct InterfaceRun {
    pub t: Vec<f64>,
    pub counts: Vec<usize>,
    pub final_state: InterfaceState,
}

/// Simulate the interface process directly with common parameter `a`.
pub fn simulate_interface(
    state0: &InterfaceState,
    a: f64,
    t_max: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<InterfaceRun> {
    if a == 1.0 {
        return Err(Error::ExcludedRegime(
            "a = 1 freezes every interface".into(),
        ));
    }
    if !(0.0..1.0).contains(&a) {
        return Err(param(format!("a={a} outside [0, 1)")));
    }
    check_horizon(t_max, sample_interval)?;
    let l = state0.len();
    if l < 3 {
        return Err(param("ring must have at least 3 sites"));
    }
    let c = 1.0 - a;
    let mut occ = state0.occupied.clone();
    let mut count = state0.count();
    let mut rng = rng_from_seed(seed);
    let mut t = 0.0;
    let mut ts = Vec::new();
    let mut counts = Vec::new();
    let mut k = 0u64;
    loop {
        // same draw order as the spin system: pair, holding time, threshold
        let (x, dt, u) = if count > 0 {
            let x = rng.random_range(0..l);
            let dt = exp_draw(&mut rng, l as f64);
            (x, dt, rng.random::<f64>())
        } else {
            (0, f64::INFINITY, 0.0)
        };
        let t_new = t + dt;
        while (k as f64) * sample_interval <= t_max && (k as f64) * sample_interval < t_new {
            ts.push(k as f64 * sample_interval);
            counts.push(count);
            k += 1;
        }
        if t_new > t_max {
            break;
        }
        t = t_new;
        let left = (x + l - 1) % l;
        match (occ[left], occ[x]) {
            (true, true) => {
                occ[left] = false;
                occ[x] = false;
                count -= 2;
            }
            (true, false) | (false, true) if u < c => {
                occ.swap(left, x);
            }
            _ => {}
        }
    }
    Ok(InterfaceRun {
        t: ts,
        counts,
        final_state: InterfaceState { occupied: occ },
    })
}

/// Probability that the interval-size chain with up rate `2(1 - a1)` and
/// down rate `2(1 - a2)`, started at size `N + 1`, reaches size 1 before
/// size `K`.
pub fn gambler_ruin_hit_prob(n: usize, k: usize, a1: f64, a2: f64) -> Result<f64> {
    for (name, a) in [("a1", a1), ("a2", a2)] {
        if !(0.0..1.0).contains(&a) {
            return Err(param(format!("{name}={a} outside [0, 1)")));
        }
    }
    if n + 1 >= k {
        return Err(param(format!("need N + 1 < K, got N={n}, K={k}")));
    }
    let c0 = (1.0 - a2) / (1.0 - a1);
    if c0 == 1.0 {
        return Ok((k - 1 - n) as f64 / (k - 1) as f64);
    }
    let top = c0.powi((k - 1) as i32);
    Ok((c0.powi(n as i32) - top) / (1.0 - top))
}

/// `K → ∞` limit of [`gambler_ruin_hit_prob`]: `c0^N` when `c0 < 1`.
pub fn gambler_ruin_limit(n: usize, a1: f64, a2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a1) || !(0.0..1.0).contains(&a2) {
        return Err(param("a1 and a2 must lie in [0, 1)"));
    }
    let c0 = (1.0 - a2) / (1.0 - a1);
    Ok(if c0 < 1.0 { c0.powi(n as i32) } else { 1.0 })
}

/// One run of the spin system on a ring of `l` sites from a single type 2
/// interval of `n + 1` sites; true if the interval shrinks to one site
/// before reaching `k` sites.
pub fn interval_ruin_trial(l: usize, n: usize, k: usize, a1: f64, a2: f64, seed: u64) -> Result<bool> {
    if n + 1 >= k || k >= l {
        return Err(param(format!("need N + 1 < K < L, got N={n}, K={k}, L={l}")));
    }
    let lattice = Lattice::with(1, 1, l)?;
    let rule = ProducerConsumer::new(ModelParams::reduced(a1, a2)?, 2);
    let start = (l - n - 1) / 2;
    let mut cfg = Configuration::from_types(
        (0..l)
            .map(|x| {
                if (start..=start + n).contains(&x) {
                    Type::Two
                } else {
                    Type::One
                }
            })
            .collect(),
    );
    let mut clock = SimClock::new(seed);
    run_until(&lattice, &mut cfg, &rule, &mut clock, f64::INFINITY, |c, _| {
        c.twos() <= 1 || c.twos() >= k
    });
    Ok(cfg.twos() <= 1)
}

/// Number of [`interval_ruin_trial`] successes over `replicas` seeded runs.
pub fn interval_ruin_frequency(
    l: usize,
    n: usize,
    k: usize,
    a1: f64,
    a2: f64,
    replicas: usize,
    seed: u64,
) -> Result<usize> {
    let hits: Result<Vec<bool>> = (0..replicas)
        .into_par_iter()
        .map(|r| interval_ruin_trial(l, n, k, a1, a2, derive_seed(seed, &[r as u64])))
        .collect();
    Ok(hits?.into_iter().filter(|&h| h).count())
}
