//! Threshold contact process: occupied sites empty at rate 1, and an empty
//! site with at least one occupied neighbour becomes occupied at rate `α`.
//!
//! Simulated by uniformisation at rate `R = 1 + α` per site: at an update
//! with threshold `U`, a birth happens iff `U < α/R` (and some neighbour is
//! occupied), a death iff `U >= 1 - 1/R`.

use crate::dynamics::{check_horizon, draw_update};
use crate::error::{param, Error, Result};
use crate::lattice::Lattice;
use crate::rng::rng_from_seed;

#[derive(Clone, Debug)]
pub struct ContactRun {
    pub t: Vec<f64>,
    /// Occupied fraction at each sample time.
    pub density: Vec<f64>,
    pub final_occupancy: Vec<bool>,
    pub events: u64,
}

fn check_occ(lattice: &Lattice, occ: &[bool]) -> Result<()> {
    if occ.len() != lattice.n() {
        return Err(Error::Domain(format!(
            "occupancy has {} sites, lattice has {}",
            occ.len(),
            lattice.n()
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(param(format!("alpha={alpha} must be a nonnegative real")));
    }
    Ok(())
}

#[inline]
fn has_occupied_neighbor(lattice: &Lattice, occ: &[bool], x: usize) -> bool {
    lattice.neighbors_of(x).iter().any(|&z| occ[z as usize])
}

/// Apply one update with threshold `u` under uniformisation rate `r`;
/// returns the change in the occupied count.
#[inline]
fn update(lattice: &Lattice, occ: &mut [bool], x: usize, u: f64, alpha: f64, r: f64) -> i64 {
    if occ[x] {
        if u >= 1.0 - 1.0 / r {
            occ[x] = false;
            return -1;
        }
    } else if u < alpha / r && has_occupied_neighbor(lattice, occ, x) {
        occ[x] = true;
        return 1;
    }
    0
}

pub fn simulate_threshold_contact(
    lattice: &Lattice,
    occ0: &[bool],
    alpha: f64,
    t_max: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<ContactRun> {
    check_occ(lattice, occ0)?;
    check_alpha(alpha)?;
    check_horizon(t_max, sample_interval)?;
    let n = lattice.n();
    let r = 1.0 + alpha;
    let mut rng = rng_from_seed(seed);
    let mut occ = occ0.to_vec();
    let mut count = occ.iter().filter(|&&o| o).count() as i64;
    let mut t = 0.0;
    let mut events = 0;
    let mut ts = Vec::new();
    let mut dens = Vec::new();
    let mut k = 0u64;
    loop {
        // the empty configuration is absorbing
        let next = (count > 0).then(|| draw_update(&mut rng, n, n as f64 * r));
        let t_new = next.map_or(f64::INFINITY, |dr| t + dr.dt);
        while (k as f64) * sample_interval <= t_max && (k as f64) * sample_interval < t_new {
            ts.push(k as f64 * sample_interval);
            dens.push(count as f64 / n as f64);
            k += 1;
        }
        let Some(dr) = next else { break };
        if t_new > t_max {
            break;
        }
        t = t_new;
        events += 1;
        count += update(lattice, &mut occ, dr.site, dr.u, alpha, r);
    }
    Ok(ContactRun {
        t: ts,
        density: dens,
        final_occupancy: occ,
        events,
    })
}

#[derive(Clone, Debug)]
pub struct CoupledContact {
    /// `{lo occupied} ⊆ {hi occupied}` held after every update.
    pub contained: bool,
    pub lo: Vec<bool>,
    pub hi: Vec<bool>,
}

/// Two threshold contact processes with `alpha_lo <= alpha_hi` driven by
/// the same sites, holding times and thresholds (uniformisation rate
/// `1 + alpha_hi`).
pub fn coupled_threshold_contact(
    lattice: &Lattice,
    occ_lo: &[bool],
    occ_hi: &[bool],
    alpha_lo: f64,
    alpha_hi: f64,
    t_max: f64,
    seed: u64,
) -> Result<CoupledContact> {
    check_occ(lattice, occ_lo)?;
    check_occ(lattice, occ_hi)?;
    check_alpha(alpha_lo)?;
    check_alpha(alpha_hi)?;
    check_horizon(t_max, 1.0)?;
    if alpha_lo > alpha_hi {
        return Err(param("alpha_lo must not exceed alpha_hi"));
    }
    if occ_lo.iter().zip(occ_hi).any(|(&l, &h)| l && !h) {
        return Err(Error::Precondition(
            "initial occupancies are not ordered".into(),
        ));
    }
    let n = lattice.n();
    let r = 1.0 + alpha_hi;
    let mut rng = rng_from_seed(seed);
    let mut lo = occ_lo.to_vec();
    let mut hi = occ_hi.to_vec();
    let mut hi_count = hi.iter().filter(|&&o| o).count();
    let mut t = 0.0;
    let mut contained = true;
    while hi_count > 0 {
        let dr = draw_update(&mut rng, n, n as f64 * r);
        if t + dr.dt > t_max {
            break;
        }
        t += dr.dt;
        update(lattice, &mut lo, dr.site, dr.u, alpha_lo, r);
        hi_count = (hi_count as i64 + update(lattice, &mut hi, dr.site, dr.u, alpha_hi, r)) as usize;
        if lo[dr.site] && !hi[dr.site] {
            contained = false;
        }
    }
    Ok(CoupledContact { contained, lo, hi })
}

/// Birth rate `(1 - rho) / (1 + ((2M + 1)^d - 2) rho)` of a threshold
/// contact process dominated by the type 1 set when `(a1, a2) = (0, rho)`.
pub fn alpha_lower_bound(rho: f64, m: usize, d: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(param(format!("rho={rho} outside [0, 1)")));
    }
    let k = ((2 * m + 1) as f64).powi(d as i32) - 2.0;
    Ok((1.0 - rho) / (1.0 + k * rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stays_empty() {
        let lat = Lattice::with(2, 1, 10).unwrap();
        let run = simulate_threshold_contact(&lat, &[false; 100], 2.0, 10.0, 1.0, 0).unwrap();
        assert!(run.density.iter().all(|&d| d == 0.0));
        assert_eq!(run.t.len(), 11);
    }

    #[test]
    fn pure_death_decays_exponentially() {
        let lat = Lattice::with(1, 1, 2000).unwrap();
        let occ = vec![true; 2000];
        let t = 1.0;
        let reps = 20;
        let mut mean = 0.0;
        for seed in 0..reps {
            let run = simulate_threshold_contact(&lat, &occ, 0.0, t, 1.0, seed).unwrap();
            mean += run.density[1];
        }
        mean /= reps as f64;
        let p = (-t).exp();
        let sd = (p * (1.0 - p) / (2000.0 * reps as f64)).sqrt();
        assert!((mean - p).abs() < 4.0 * sd, "mean {mean} vs {p}");
    }

    #[test]
    fn alpha_bound_examples() {
        assert_eq!(alpha_lower_bound(0.0, 1, 2).unwrap(), 1.0);
        assert!((alpha_lower_bound(0.1, 1, 2).unwrap() - 0.9 / 1.7).abs() < 1e-12);
        assert!((alpha_lower_bound(0.5, 1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(alpha_lower_bound(1.0, 1, 1).is_err());
    }

    #[test]
    fn coupling_is_monotone_in_alpha() {
        let lat = Lattice::with(2, 1, 12).unwrap();
        for seed in 0..20 {
            let full = vec![true; lat.n()];
            let half: Vec<bool> = (0..lat.n()).map(|i| i % 2 == 0).collect();
            let run = coupled_threshold_contact(&lat, &half, &full, 0.8, 1.6, 30.0, seed).unwrap();
            assert!(run.contained);
        }
    }
}
