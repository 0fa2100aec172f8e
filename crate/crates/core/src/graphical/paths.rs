//! Selected dual paths: a single particle of a dual process, steered toward
//! the coordinate hyperplanes `H_i = {z_i = 0}` on a schedule.
//!
//! Distances to `H_i` on the torus use coordinates folded into
//! `(-L/2, L/2]`; a step toward `H_i` changes `z_i` by `-1` when `z_i > 0`
//! and by `+1` when `z_i < 0`, which at the antipode `z_i = L/2` means
//! stepping toward the smaller coordinate.

use rand::Rng;
use rayon::prelude::*;

use super::{breaking_time_probability, Event, EventKind, EventSource, LazyRep, RepKind};
use crate::error::{param, Error, Result};
use crate::lattice::Lattice;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathMode {
    /// Follows a voter-perturbation representation with parameter `eps`.
    Voter { eps: f64 },
    /// Follows a breaking-arrow representation.
    Breaking,
}

impl PathMode {
    /// Drift constant of the mode in dimension `d`.
    pub fn drift(&self, d: usize) -> f64 {
        match *self {
            PathMode::Voter { eps } => eps,
            PathMode::Breaking => breaking_time_probability(d),
        }
    }

    pub fn rep_kind(&self) -> RepKind {
        match *self {
            PathMode::Voter { eps } => RepKind::VoterPerturbation { eps },
            PathMode::Breaking => RepKind::BreakingArrow,
        }
    }
}

/// Dual times `T_0 = 0 < T_1 < ... < T_d`; during `(T_{i-1}, T_i)` the path
/// is steered toward `H_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
}

impl Schedule {
    /// `T_i = i c N`.
    pub fn new(d: usize, c: f64, n: usize) -> Self {
        Self {
            times: (0..=d).map(|i| i as f64 * c * n as f64).collect(),
        }
    }

    /// `c = 4 / drift`.
    pub fn for_mode(mode: PathMode, d: usize, n: usize) -> Self {
        Self::new(d, 4.0 / mode.drift(d), n)
    }

    /// Axis (0-based) steered at dual time `s`, if any.
    pub fn phase(&self, s: f64) -> Option<usize> {
        self.times
            .windows(2)
            .position(|w| w[0] < s && s < w[1])
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectedPath {
    pub start: usize,
    pub window: f64,
    /// `(dual time, new site)` of every jump, in increasing dual time.
    pub jumps: Vec<(f64, usize)>,
}

impl SelectedPath {
    /// Position at dual time `s`.
    pub fn site_at(&self, s: f64) -> usize {
        let k = self.jumps.partition_point(|&(u, _)| u <= s);
        if k == 0 {
            self.start
        } else {
            self.jumps[k - 1].1
        }
    }

    pub fn end_site(&self) -> usize {
        self.jumps.last().map_or(self.start, |j| j.1)
    }

    /// Every site visited, starting point included.
    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.start).chain(self.jumps.iter().map(|j| j.1))
    }
}

fn toward_hyperplane(lattice: &Lattice, z: usize, axis: usize) -> Option<usize> {
    let c = lattice.folded(z, axis);
    match c {
        0 => None,
        c if c > 0 => Some(lattice.shift(z, axis, -1)),
        _ => Some(lattice.shift(z, axis, 1)),
    }
}

fn random_neighbor(lattice: &Lattice, z: usize, rng: &mut SimRng) -> usize {
    let nb = lattice.neighbors_of(z);
    nb[rng.random_range(0..nb.len())] as usize
}

fn is_breaking<S: EventSource>(src: &mut S, z: usize, e: &Event) -> bool {
    let Some(y) = e.source() else { return false };
    match src.prev_event_at(y, e.t) {
        Some(f) if f.source() == Some(z) => src.prev_event_at(z, e.t).is_none_or(|g| g.t < f.t),
        _ => false,
    }
}

/// The selected dual path from `(x, T)`.
///
/// Voter mode follows arrows from tip to tail; at a `Δ` mark during
/// `(T_{i-1}, T_i)` it steps toward `H_i` (to a uniform neighbour when
/// already on `H_i`), and after `T_d` it steps to a uniform neighbour.
/// Breaking mode follows solid arrows, except that at a breaking point
/// during `(T_{i-1}, T_i)` it crosses to the neighbour closer to `H_i`.
/// `seed` drives the uniform choices.
pub fn selected_path<S: EventSource>(
    lattice: &Lattice,
    src: &mut S,
    x: usize,
    schedule: &Schedule,
    mode: PathMode,
    seed: u64,
) -> Result<SelectedPath> {
    if x >= lattice.n() {
        return Err(Error::Domain(format!("site {x} outside the lattice")));
    }
    let window = src.window();
    if schedule.times.len() != lattice.d() + 1
        || schedule.times.windows(2).any(|w| w[0] >= w[1])
        || schedule.times.first() != Some(&0.0)
        || schedule.end() > window
    {
        return Err(Error::Precondition(
            "schedule must be 0 = T_0 < ... < T_d within the window".into(),
        ));
    }
    match (mode, src.kind()) {
        (PathMode::Voter { .. }, RepKind::VoterPerturbation { .. })
        | (PathMode::Breaking, RepKind::BreakingArrow) => {}
        _ => {
            return Err(Error::Precondition(
                "path mode does not match the representation kind".into(),
            ))
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut z = x;
    let mut tau = window;
    let mut jumps = Vec::new();
    while let Some(e) = src.prev_event_at(z, tau) {
        let s = window - e.t;
        let next = match (mode, e.kind) {
            (_, EventKind::Delta) => schedule
                .phase(s)
                .and_then(|i| toward_hyperplane(lattice, z, i))
                .unwrap_or_else(|| random_neighbor(lattice, z, &mut rng)),
            (PathMode::Voter { .. }, EventKind::Arrow(y)) => y as usize,
            (PathMode::Breaking, EventKind::Arrow(y)) => {
                let steer = match schedule.phase(s) {
                    Some(i) if is_breaking(src, z, &e) => toward_hyperplane(lattice, z, i),
                    _ => None,
                };
                steer.unwrap_or(y as usize)
            }
        };
        jumps.push((s, next));
        z = next;
        tau = e.t;
    }
    Ok(SelectedPath {
        start: x,
        window,
        jumps,
    })
}

/// Frequency of the bad event for one box size.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentStat {
    pub n: usize,
    pub trials: usize,
    /// Paths that left `(-4N, 4N]^d` before dual time `C N`.
    pub exits: usize,
    /// Paths that stayed but ended outside `(-N, N]^d`.
    pub misses: usize,
    pub frequency: f64,
}

fn in_box(lattice: &Lattice, z: usize, half: i64) -> bool {
    (0..lattice.d()).all(|i| {
        let c = lattice.folded(z, i);
        -half < c && c <= half
    })
}

/// Monte Carlo estimate, for every `N` in `ns`, of the probability that the
/// selected path from a uniform start in `(-2N, 2N]^d` leaves
/// `(-4N, 4N]^d` before dual time `C N` or ends outside `(-N, N]^d`.
/// `c` defaults to `1.05 * 4d / drift`, just past the end of the schedule.
pub fn path_containment_stats(
    lattice: &Lattice,
    mode: PathMode,
    ns: &[usize],
    c: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<Vec<ContainmentStat>> {
    let d = lattice.d();
    let drift = mode.drift(d);
    if !(drift > 0.0 && drift <= 1.0) {
        return Err(param(format!("drift constant {drift} outside (0, 1]")));
    }
    let c = c.unwrap_or(1.05 * 4.0 * d as f64 / drift);
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        if n == 0 || lattice.side() <= 8 * n {
            return Err(param(format!(
                "torus side {} must exceed 8N = {}",
                lattice.side(),
                8 * n
            )));
        }
        let schedule = Schedule::for_mode(mode, d, n);
        let window = c * n as f64;
        if window < schedule.end() {
            return Err(param(format!(
                "C N = {window} ends before the schedule ({})",
                schedule.end()
            )));
        }
        let half = n as i64;
        let results: Vec<Result<(bool, bool)>> = (0..trials)
            .into_par_iter()
            .map(|k| {
                let ts = derive_seed(seed, &[n as u64, k as u64]);
                let mut rng = rng_from_seed(ts);
                let z: Vec<i64> = (0..d)
                    .map(|_| rng.random_range(-2 * half + 1..=2 * half))
                    .collect();
                let x = lattice.from_folded(&z);
                let mut rep = LazyRep::new(lattice, mode.rep_kind(), window, derive_seed(ts, &[1]))?;
                let path = selected_path(lattice, &mut rep, x, &schedule, mode, derive_seed(ts, &[2]))?;
                let exit = !path.sites().all(|z| in_box(lattice, z, 4 * half));
                let miss = !in_box(lattice, path.end_site(), half);
                Ok((exit, miss))
            })
            .collect();
        let mut exits = 0;
        let mut misses = 0;
        for r in results {
            match r? {
                (true, _) => exits += 1,
                (false, true) => misses += 1,
                _ => {}
            }
        }
        out.push(ContainmentStat {
            n,
            trials,
            exits,
            misses,
            frequency: (exits + misses) as f64 / trials.max(1) as f64,
        });
    }
    Ok(out)
}
