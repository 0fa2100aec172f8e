//! Dual processes, breaking points and breaking-time statistics.

use super::{Event, EventKind, ForwardRun, GraphicalRep, RepKind};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Type};

/// Sites reached at dual time `s` by the dual process started at `(x, T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSet {
    pub base: usize,
    pub window: f64,
    pub s: f64,
    /// Sorted, duplicate-free.
    pub sites: Vec<usize>,
    /// Events at which a particle was replaced by the whole neighbourhood.
    pub branch_events: usize,
    /// Events that touched the dual process.
    pub events_used: usize,
}

fn check_dual_args(lattice: &Lattice, rep: &GraphicalRep, x: usize, s: f64) -> Result<()> {
    if x >= lattice.n() || rep.n_sites() != lattice.n() {
        return Err(Error::Domain(format!("site {x} outside the lattice")));
    }
    if !(0.0..=rep.window()).contains(&s) {
        return Err(Error::Domain(format!(
            "dual time {s} outside [0, {}]",
            rep.window()
        )));
    }
    Ok(())
}

/// Walk down from `(x, T)` to `T - s`; `branches(i)` says whether event `i`
/// splits its particle onto all neighbours instead of following the arrow.
fn walk_down<F: Fn(usize, &Event) -> bool>(
    lattice: &Lattice,
    rep: &GraphicalRep,
    x: usize,
    s: f64,
    branches: F,
) -> DualSet {
    let floor = rep.window() - s;
    let mut active = vec![false; lattice.n()];
    active[x] = true;
    let mut branch_events = 0;
    let mut events_used = 0;
    for (i, e) in rep.events().iter().enumerate().rev() {
        if e.t <= floor {
            break;
        }
        let z = e.target as usize;
        if !active[z] {
            continue;
        }
        events_used += 1;
        active[z] = false;
        if branches(i, e) {
            branch_events += 1;
            for &w in lattice.neighbors_of(z) {
                active[w as usize] = true;
            }
        } else if let Some(y) = e.source() {
            active[y] = true;
        }
    }
    DualSet {
        base: x,
        window: rep.window(),
        s,
        sites: (0..lattice.n()).filter(|&z| active[z]).collect(),
        branch_events,
        events_used,
    }
}

/// Dual of the voter perturbation: going down, an arrow `y → z` moves a
/// particle from `z` to `y`, a `Δ(z)` mark replaces it by particles on all
/// neighbours of `z`, and particles on the same site coalesce.
pub fn dual_set(lattice: &Lattice, rep: &GraphicalRep, x: usize, s: f64) -> Result<DualSet> {
    if !matches!(rep.kind(), RepKind::VoterPerturbation { .. }) {
        return Err(Error::Precondition(
            "dual_set needs a voter-perturbation representation".into(),
        ));
    }
    check_dual_args(lattice, rep, x, s)?;
    Ok(walk_down(lattice, rep, x, s, |_, e| e.kind == EventKind::Delta))
}

/// An arrow `y → x` at time `t` such that the latest earlier arrow pointing
/// at `x` or `y` is an arrow `x → y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BreakingPoint {
    pub x: usize,
    pub t: f64,
    pub y: usize,
    /// Index into [`GraphicalRep::events`].
    pub event: usize,
}

fn require_breaking(rep: &GraphicalRep) -> Result<()> {
    if rep.kind() != RepKind::BreakingArrow {
        return Err(Error::Precondition(
            "breaking points need a breaking-arrow representation".into(),
        ));
    }
    Ok(())
}

/// All breaking points, in time order. One pass over the events.
pub fn detect_breaking_points(rep: &GraphicalRep) -> Result<Vec<BreakingPoint>> {
    require_breaking(rep)?;
    let ev = rep.events();
    let mut last: Vec<Option<usize>> = vec![None; rep.n_sites()];
    let mut out = Vec::new();
    for (i, e) in ev.iter().enumerate() {
        let x = e.target as usize;
        let Some(y) = e.source() else { continue };
        if let Some(j) = last[y] {
            let later_than_x = last[x].is_none_or(|k| ev[k].t < ev[j].t);
            if ev[j].source() == Some(x) && later_than_x {
                out.push(BreakingPoint { x, t: e.t, y, event: i });
            }
        }
        last[x] = Some(i);
    }
    Ok(out)
}

/// Quadratic scan straight from the definition, for cross-checks.
pub fn brute_force_breaking_points(rep: &GraphicalRep) -> Result<Vec<BreakingPoint>> {
    require_breaking(rep)?;
    let ev = rep.events();
    let mut out = Vec::new();
    for (i, e) in ev.iter().enumerate() {
        let x = e.target as usize;
        let Some(y) = e.source() else { continue };
        // sup over arrows pointing at x or y before t
        let mut best: Option<&Event> = None;
        for f in ev {
            let hits = f.target as usize == x || f.target as usize == y;
            if hits && f.t < e.t && best.is_none_or(|b| f.t > b.t) {
                best = Some(f);
            }
        }
        if let Some(b) = best {
            if b.target as usize == y && b.source() == Some(x) {
                out.push(BreakingPoint { x, t: e.t, y, event: i });
            }
        }
    }
    Ok(out)
}

fn breaking_flags(rep: &GraphicalRep) -> Result<Vec<bool>> {
    let mut flags = vec![false; rep.events().len()];
    for bp in detect_breaking_points(rep)? {
        flags[bp.event] = true;
    }
    Ok(flags)
}

/// Number of breaking points `(x, t)` at which the state of `x` just after
/// the event is *not* "1 iff all neighbours are 1".
pub fn check_breaking_lemma(lattice: &Lattice, run: &ForwardRun, rep: &GraphicalRep) -> Result<usize> {
    let flags = breaking_flags(rep)?;
    if run.post.len() != rep.events().len() {
        return Err(Error::Precondition("run was not built from this representation".into()));
    }
    let mut cfg = run.initial.clone();
    let mut violations = 0;
    for (i, e) in rep.events().iter().enumerate() {
        let x = e.target as usize;
        cfg.set(x, run.post[i]);
        if flags[i] {
            let all_one = lattice
                .neighbors_of(x)
                .iter()
                .all(|&z| cfg.get(z as usize) == Type::One);
            if (cfg.get(x) == Type::One) != all_one {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

/// Dual of the breaking-arrow process: after dropping the dashed arrows
/// away from breaking points, a particle follows solid arrows and splits
/// onto all neighbours at breaking points.
pub fn breaking_dual_set(lattice: &Lattice, rep: &GraphicalRep, x: usize, s: f64) -> Result<DualSet> {
    let flags = breaking_flags(rep)?;
    check_dual_args(lattice, rep, x, s)?;
    Ok(walk_down(lattice, rep, x, s, |i, _| flags[i]))
}

/// One-sided duality along the whole window: if `x` is type 1 at time `T`
/// then every dual site is type 1 at the matching earlier time. Returns
/// false on the first violation.
pub fn check_breaking_duality(
    lattice: &Lattice,
    rep: &GraphicalRep,
    run: &ForwardRun,
    x: usize,
) -> Result<bool> {
    let flags = breaking_flags(rep)?;
    check_dual_args(lattice, rep, x, 0.0)?;
    if run.final_config.get(x) != Type::One {
        return Ok(true);
    }
    let mut cfg = run.final_config.clone();
    let mut active = vec![false; lattice.n()];
    active[x] = true;
    // active sites currently of type 2
    let mut bad = 0usize;
    for (i, e) in rep.events().iter().enumerate().rev() {
        let z = e.target as usize;
        let was_bad = |a: &[bool], c: &crate::lattice::Configuration, w: usize| {
            (a[w] && c.get(w) == Type::Two) as usize
        };
        bad -= was_bad(&active, &cfg, z);
        cfg.set(z, run.pre[i]);
        bad += was_bad(&active, &cfg, z);
        if active[z] {
            let touch = |w: usize, on: bool, a: &mut Vec<bool>, bad: &mut usize| {
                *bad -= was_bad(a, &cfg, w);
                a[w] = on;
                *bad += was_bad(a, &cfg, w);
            };
            touch(z, false, &mut active, &mut bad);
            if flags[i] {
                for &w in lattice.neighbors_of(z) {
                    touch(w as usize, true, &mut active, &mut bad);
                }
            } else if let Some(y) = e.source() {
                touch(y, true, &mut active, &mut bad);
            }
            if bad > 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `2d (1 - e^{-1/2})^2 e^{-(2d-1)}`, the drift constant of the breaking
/// selected path.
pub fn breaking_time_probability(d: usize) -> f64 {
    let d = d as f64;
    let h = 1.0 - (-0.5f64).exp();
    2.0 * d * h * h * (-(2.0 * d - 1.0)).exp()
}

/// Probability of [`strict_breaking_times`] for one site and one unit
/// interval, with arrows of rate `r = 1/(2d)` per directed edge.
pub fn strict_breaking_time_probability(d: usize) -> f64 {
    let r = 1.0 / (2.0 * d as f64);
    2.0 * d as f64
        * (1.0 - (-r / 2.0).exp())
        * (-(1.0 - r) / 2.0).exp()
        * (-0.5f64).exp()
        * (r / 2.0)
        * (-1.0f64).exp()
}

/// Expected value of [`breaking_pattern_counts`] per site and unit
/// interval: `2d [(1 - e^{-1/2}) e^{-1/2}]^2`.
pub fn breaking_pattern_expectation(d: usize) -> f64 {
    let q = (1.0 - (-0.5f64).exp()) * (-0.5f64).exp();
    2.0 * d as f64 * q * q
}

fn window_slice(rep: &GraphicalRep, site: usize, a: f64, b: f64) -> impl Iterator<Item = &Event> {
    let list = rep.events_at(site);
    let ev = rep.events();
    let lo = list.partition_point(|&i| ev[i as usize].t < a);
    let hi = list.partition_point(|&i| ev[i as usize].t < b);
    list[lo..hi].iter().map(move |&i| &ev[i as usize])
}

fn unit_intervals(rep: &GraphicalRep) -> usize {
    rep.window().floor() as usize
}

/// For every site in `sites` and every unit interval `[k, k + 1)` inside the
/// window (site-major order): whether, reading down from `k + 1`, some
/// neighbour `y` alone sends arrows into `x` during the first half, then
/// exactly one arrow `x → y` arrives during the second half, and no other
/// arrow points at `x` or `y` during the interval.
pub fn strict_breaking_times(rep: &GraphicalRep, sites: &[usize]) -> Result<Vec<bool>> {
    require_breaking(rep)?;
    let mut out = Vec::with_capacity(sites.len() * unit_intervals(rep));
    for &x in sites {
        for k in 0..unit_intervals(rep) {
            let (a, m, b) = (k as f64, k as f64 + 0.5, k as f64 + 1.0);
            let upper: Vec<&Event> = window_slice(rep, x, m, b).collect();
            let hit = window_slice(rep, x, a, m).next().is_none()
                && !upper.is_empty()
                && {
                    let y = upper[0].source().unwrap();
                    upper.iter().all(|e| e.source() == Some(y))
                        && window_slice(rep, y, m, b).next().is_none()
                        && {
                            let lower: Vec<&Event> = window_slice(rep, y, a, m).collect();
                            lower.len() == 1 && lower[0].source() == Some(x)
                        }
                };
            out.push(hit);
        }
    }
    Ok(out)
}

/// For every site in `sites` and unit interval `[k, k + 1)` (site-major):
/// the number of neighbours `y` such that arrows point at `x` during the
/// later half but not the earlier one, and at `y` during the earlier half
/// but not the later one.
pub fn breaking_pattern_counts(
    lattice: &Lattice,
    rep: &GraphicalRep,
    sites: &[usize],
) -> Result<Vec<u8>> {
    require_breaking(rep)?;
    let mut out = Vec::with_capacity(sites.len() * unit_intervals(rep));
    for &x in sites {
        for k in 0..unit_intervals(rep) {
            let (a, m, b) = (k as f64, k as f64 + 0.5, k as f64 + 1.0);
            let halves = |z: usize| {
                (
                    window_slice(rep, z, a, m).next().is_some(),
                    window_slice(rep, z, m, b).next().is_some(),
                )
            };
            let (x_early, x_late) = halves(x);
            let mut c = 0u8;
            if x_late && !x_early {
                for &y in lattice.neighbors_of(x) {
                    let (y_early, y_late) = halves(y as usize);
                    if y_early && !y_late {
                        c += 1;
                    }
                }
            }
            out.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{forward_from_graphical, sample_graphical};
    use super::*;
    use crate::lattice::Configuration;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arrow(t: f64, x: u32, y: u32) -> Event {
        Event {
            t,
            target: x,
            kind: EventKind::Arrow(y),
        }
    }

    #[test]
    fn no_events_gives_singleton() {
        let lat = Lattice::with(2, 1, 5).unwrap();
        let rep = GraphicalRep::from_events(&lat, RepKind::VoterPerturbation { eps: 0.1 }, 3.0, vec![])
            .unwrap();
        let ds = dual_set(&lat, &rep, 7, 3.0).unwrap();
        assert_eq!(ds.sites, vec![7]);
        assert!(matches!(dual_set(&lat, &rep, 7, 3.5), Err(Error::Domain(_))));
    }

    #[test]
    fn single_delta_gives_neighbourhood() {
        let lat = Lattice::with(2, 1, 5).unwrap();
        let rep = GraphicalRep::from_events(
            &lat,
            RepKind::VoterPerturbation { eps: 0.1 },
            3.0,
            vec![Event {
                t: 2.0,
                target: 12,
                kind: EventKind::Delta,
            }],
        )
        .unwrap();
        let ds = dual_set(&lat, &rep, 12, 3.0).unwrap();
        let mut want: Vec<usize> = lat.neighbors_of(12).iter().map(|&z| z as usize).collect();
        want.sort_unstable();
        assert_eq!(ds.sites, want);
        // not yet reached at dual time 0.5
        assert_eq!(dual_set(&lat, &rep, 12, 0.5).unwrap().sites, vec![12]);
    }

    #[test]
    fn single_event_has_no_breaking_point() {
        let lat = Lattice::with(1, 1, 6).unwrap();
        let rep = GraphicalRep::from_events(&lat, RepKind::BreakingArrow, 3.0, vec![arrow(1.0, 2, 3)])
            .unwrap();
        assert!(detect_breaking_points(&rep).unwrap().is_empty());
    }

    #[test]
    fn hand_built_breaking_point() {
        let lat = Lattice::with(1, 1, 6).unwrap();
        // Λ(y, x) = {1.0}: arrow x -> y; Λ(x, y) = {2.0}: arrow y -> x
        let (x, y) = (2u32, 3u32);
        let rep = GraphicalRep::from_events(
            &lat,
            RepKind::BreakingArrow,
            3.0,
            vec![arrow(1.0, y, x), arrow(2.0, x, y)],
        )
        .unwrap();
        let bps = detect_breaking_points(&rep).unwrap();
        assert_eq!(bps.len(), 1);
        assert_eq!((bps[0].x, bps[0].t, bps[0].y), (2, 2.0, 3));

        // an intervening arrow into x destroys it
        let rep = GraphicalRep::from_events(
            &lat,
            RepKind::BreakingArrow,
            3.0,
            vec![arrow(1.0, y, x), arrow(1.5, x, 1), arrow(2.0, x, y)],
        )
        .unwrap();
        assert!(detect_breaking_points(&rep).unwrap().is_empty());
    }

    #[test]
    fn detection_matches_brute_force() {
        for (d, l, t) in [(1, 6, 40.0), (2, 4, 15.0), (1, 3, 60.0)] {
            let lat = Lattice::with(d, 1, l).unwrap();
            for seed in 0..10 {
                let rep = sample_graphical(&lat, RepKind::BreakingArrow, t, seed).unwrap();
                assert!(rep.events().len() <= 1000);
                assert_eq!(
                    detect_breaking_points(&rep).unwrap(),
                    brute_force_breaking_points(&rep).unwrap()
                );
            }
        }
    }

    #[test]
    fn lemma_holds_on_random_runs() {
        let lat = Lattice::with(1, 1, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let rep = sample_graphical(&lat, RepKind::BreakingArrow, 50.0, seed).unwrap();
            let cfg = Configuration::product(lat.n(), 0.7, &mut rng);
            let run = forward_from_graphical(&lat, &rep, &cfg).unwrap();
            assert_eq!(check_breaking_lemma(&lat, &run, &rep).unwrap(), 0);
            for x in 0..lat.n() {
                assert!(check_breaking_duality(&lat, &rep, &run, x).unwrap());
            }
        }
    }

    #[test]
    fn duality_on_small_torus() {
        let lat = Lattice::with(2, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..30 {
            let rep = sample_graphical(&lat, RepKind::VoterPerturbation { eps: 0.3 }, 2.0, seed).unwrap();
            let cfg = Configuration::product(lat.n(), 0.8, &mut rng);
            let run = forward_from_graphical(&lat, &rep, &cfg).unwrap();
            for x in 0..lat.n() {
                let ds = dual_set(&lat, &rep, x, 2.0).unwrap();
                let all_one = ds.sites.iter().all(|&z| cfg.get(z) == Type::One);
                assert_eq!(run.final_config.get(x) == Type::One, all_one);
            }
        }
    }

    #[test]
    fn closed_forms() {
        assert!((breaking_time_probability(1) - 0.1139).abs() < 5e-5);
        assert!((breaking_pattern_expectation(1) - breaking_time_probability(1)).abs() < 1e-15);
        assert!((strict_breaking_time_probability(1) - 0.01922).abs() < 5e-6);
    }
}
