//! Continuous-time dynamics of the producer-consumer spin system.
//!
//! Every site is updated at rate one. The simulation loop is the
//! uniform-site Gillespie scheme: with `n` sites the next update happens
//! after an `Exp(n)` holding time at a uniformly chosen site, and the new
//! type is drawn from the update law of that site. Each step consumes, in
//! order, one site draw, one holding-time draw and one uniform threshold
//! `U`; the new type is 2 iff `U < P(new type is 2)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::lattice::{check_matches, Configuration, Lattice, Type};
use crate::rng::{exp_draw, rng_from_seed, SimRng};
use crate::special::VoterPerturbation;

/// Consumption abilities and the reduced parameter pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub a1: f64,
    pub a2: f64,
}

impl ModelParams {
    /// Build from the four abilities `a_ij` (type `i` consuming resource `j`).
    pub fn from_abilities(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self> {
        let (a1, a2) = reduce_params(a11, a12, a21, a22)?;
        Ok(Self {
            a11,
            a12,
            a21,
            a22,
            a1,
            a2,
        })
    }

    /// Build from the reduced pair, with the representative abilities
    /// `a11 = a1, a21 = 1 - a1, a22 = a2, a12 = 1 - a2`.
    pub fn reduced(a1: f64, a2: f64) -> Result<Self> {
        for (name, a) in [("a1", a1), ("a2", a2)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(param(format!("{name}={a} outside [0, 1]")));
            }
        }
        Ok(Self {
            a11: a1,
            a12: 1.0 - a2,
            a21: 1.0 - a1,
            a22: a2,
            a1,
            a2,
        })
    }

    /// `a1 = a2 = 1`: every configuration in which no site has a unanimous
    /// opposite neighbourhood is absorbing.
    pub fn is_excluded_regime(&self) -> bool {
        self.a1 == 1.0 && self.a2 == 1.0
    }

    /// The reduced parameter of a given type.
    pub fn a(&self, t: Type) -> f64 {
        match t {
            Type::One => self.a1,
            Type::Two => self.a2,
        }
    }
}

/// `(a1, a2) = (a11 / (a11 + a21), a22 / (a12 + a22))`.
pub fn reduce_params(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<(f64, f64)> {
    for (name, a) in [("a11", a11), ("a12", a12), ("a21", a21), ("a22", a22)] {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(param(format!("{name}={a} must be a nonnegative real")));
        }
    }
    if a11 + a21 <= 0.0 {
        return Err(param("resource 1 cannot be consumed: a11 + a21 = 0"));
    }
    if a12 + a22 <= 0.0 {
        return Err(param("resource 2 cannot be consumed: a12 + a22 = 0"));
    }
    Ok((a11 / (a11 + a21), a22 / (a12 + a22)))
}

/// Probability that a site of type `j` with reduced parameter `a_j`
/// becomes the other type `i`, given neighbourhood weights `f_i`, `f_j`
/// (counts or fractions). Degenerate `0/0` quotients resolve to 0 when
/// there is no type `i` neighbour and to 1 when all neighbours are type `i`.
#[inline]
pub fn switch_probability(a_j: f64, f_i: f64, f_j: f64) -> f64 {
    let num = (1.0 - a_j) * f_i;
    let den = a_j * f_j + num;
    if den > 0.0 {
        num / den
    } else if f_i == 0.0 {
        0.0
    } else {
        1.0
    }
}

/// Probability that the updated site, currently of type `current`, becomes
/// the other type. `f_other` and `f_same` are the numbers (or fractions) of
/// neighbours of the other and of the same type.
pub fn flip_probability(
    current: Type,
    f_other: f64,
    f_same: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(f_other >= 0.0 && f_same >= 0.0) {
        return Err(Error::Domain("neighbour counts must be nonnegative".into()));
    }
    if f_other + f_same == 0.0 {
        return Err(Error::Domain("empty neighbourhood".into()));
    }
    Ok(switch_probability(params.a(current), f_other, f_same))
}

/// Site update law of a two-type spin system, expressed as the probability
/// that the updated site becomes type 2.
pub trait SpinRule {
    fn prob_two(&self, current: Type, f2: usize) -> f64;
}

/// Tabulated update law of the producer-consumer model for one
/// neighbourhood size.
#[derive(Clone, Debug)]
pub struct ProducerConsumer {
    params: ModelParams,
    nu: usize,
    // index: f2 in 0..=nu
    from_one: Vec<f64>,
    from_two: Vec<f64>,
}

impl ProducerConsumer {
    pub fn new(params: ModelParams, nu: usize) -> Self {
        let from_one = (0..=nu)
            .map(|f2| switch_probability(params.a1, f2 as f64, (nu - f2) as f64))
            .collect();
        let from_two = (0..=nu)
            .map(|f2| 1.0 - switch_probability(params.a2, (nu - f2) as f64, f2 as f64))
            .collect();
        Self {
            params,
            nu,
            from_one,
            from_two,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nu(&self) -> usize {
        self.nu
    }
}

impl SpinRule for ProducerConsumer {
    #[inline]
    fn prob_two(&self, current: Type, f2: usize) -> f64 {
        match current {
            Type::One => self.from_one[f2],
            Type::Two => self.from_two[f2],
        }
    }
}

/// Continuous time, seed and event counter of a running simulation, with
/// the random stream it owns.
#[derive(Clone, Debug)]
pub struct SimClock {
    pub t: f64,
    pub seed: u64,
    pub events: u64,
    rng: SimRng,
}

impl SimClock {
    pub fn new(seed: u64) -> Self {
        Self {
            t: 0.0,
            seed,
            events: 0,
            rng: rng_from_seed(seed),
        }
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }
}

/// What happened during one update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub site: usize,
    pub dt: f64,
    pub flipped: bool,
}

/// Draws of one update, in contract order.
#[derive(Clone, Copy, Debug)]
pub(crate) struct UpdateDraw {
    pub site: usize,
    pub dt: f64,
    pub u: f64,
}

#[inline]
pub(crate) fn draw_update<R: Rng + ?Sized>(rng: &mut R, n: usize, rate: f64) -> UpdateDraw {
    let site = rng.random_range(0..n);
    let dt = exp_draw(rng, rate);
    let u = rng.random::<f64>();
    UpdateDraw { site, dt, u }
}

#[inline]
pub(crate) fn apply_update<S: SpinRule + ?Sized>(
    lattice: &Lattice,
    cfg: &mut Configuration,
    rule: &S,
    site: usize,
    u: f64,
) -> bool {
    let current = cfg.get(site);
    let f2 = lattice.count_two(cfg, site);
    let new = if u < rule.prob_two(current, f2) {
        Type::Two
    } else {
        Type::One
    };
    if new != current {
        cfg.set(site, new);
        true
    } else {
        false
    }
}

/// Perform a single update of the spin system and advance the clock.
pub fn step<S: SpinRule + ?Sized>(
    lattice: &Lattice,
    cfg: &mut Configuration,
    rule: &S,
    clock: &mut SimClock,
) -> StepOutcome {
    let draw = draw_update(&mut clock.rng, lattice.n(), lattice.n() as f64);
    clock.t += draw.dt;
    clock.events += 1;
    let flipped = apply_update(lattice, cfg, rule, draw.site, draw.u);
    StepOutcome {
        site: draw.site,
        dt: draw.dt,
        flipped,
    }
}

/// Run until `t_max` or until `stop` returns true after an update.
/// Homogeneous configurations are absorbing for every [`SpinRule`] in this
/// crate, so the loop also returns as soon as one is reached.
/// Returns the time at which the loop ended (`t_max` if not stopped).
pub fn run_until<S, F>(
    lattice: &Lattice,
    cfg: &mut Configuration,
    rule: &S,
    clock: &mut SimClock,
    t_max: f64,
    mut stop: F,
) -> f64
where
    S: SpinRule + ?Sized,
    F: FnMut(&Configuration, StepOutcome) -> bool,
{
    let n = lattice.n();
    loop {
        if cfg.homogeneous().is_some() {
            return clock.t.min(t_max);
        }
        let draw = draw_update(&mut clock.rng, n, n as f64);
        if clock.t + draw.dt > t_max {
            clock.t = t_max;
            return t_max;
        }
        clock.t += draw.dt;
        clock.events += 1;
        let flipped = apply_update(lattice, cfg, rule, draw.site, draw.u);
        let out = StepOutcome {
            site: draw.site,
            dt: draw.dt,
            flipped,
        };
        if stop(cfg, out) {
            return clock.t;
        }
    }
}

/// One sampled record of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub density1: f64,
    pub density2: f64,
    /// Unequal nearest-neighbour pairs; only for `d = 1`, `M = 1`.
    pub interfaces: Option<usize>,
}

/// Sampled history of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Full configurations at the sample times, if requested.
    pub snapshots: Option<Vec<Configuration>>,
    pub final_config: Configuration,
    /// Number of updates performed.
    pub events: u64,
    /// Set when `a1 = a2 = 1`.
    pub excluded_regime: bool,
}

impl Trajectory {
    pub fn sample_times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Options for [`simulate_rule`].
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub t_max: f64,
    pub sample_interval: f64,
    pub seed: u64,
    pub keep_snapshots: bool,
}

fn record(lattice: &Lattice, cfg: &Configuration, t: f64) -> Sample {
    Sample {
        t,
        density1: cfg.density1(),
        density2: cfg.density2(),
        interfaces: lattice.ring_interfaces(cfg),
    }
}

pub(crate) fn check_horizon(t_max: f64, sample_interval: f64) -> Result<()> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(param(format!("t_max={t_max} must be a finite nonnegative time")));
    }
    if !(sample_interval > 0.0 && sample_interval.is_finite()) {
        return Err(param(format!(
            "sample interval {sample_interval} must be positive"
        )));
    }
    Ok(())
}

/// Simulate any spin rule from `cfg0`.
pub fn simulate_rule<S: SpinRule + ?Sized>(
    lattice: &Lattice,
    cfg0: &Configuration,
    rule: &S,
    opts: RunOptions,
) -> Result<Trajectory> {
    check_matches(lattice, cfg0)?;
    check_horizon(opts.t_max, opts.sample_interval)?;
    let mut cfg = cfg0.clone();
    let mut clock = SimClock::new(opts.seed);
    let mut samples = Vec::new();
    let mut snaps = opts.keep_snapshots.then(Vec::new);
    let n = lattice.n();
    let mut k: u64 = 0;
    let next_sample = |k: u64| k as f64 * opts.sample_interval;
    loop {
        if cfg.homogeneous().is_some() {
            // absorbing: fill the remaining samples
            while next_sample(k) <= opts.t_max {
                samples.push(record(lattice, &cfg, next_sample(k)));
                if let Some(s) = snaps.as_mut() {
                    s.push(cfg.clone());
                }
                k += 1;
            }
            break;
        }
        let draw = draw_update(&mut clock.rng, n, n as f64);
        let t_new = clock.t + draw.dt;
        while next_sample(k) <= opts.t_max && next_sample(k) < t_new {
            samples.push(record(lattice, &cfg, next_sample(k)));
            if let Some(s) = snaps.as_mut() {
                s.push(cfg.clone());
            }
            k += 1;
        }
        if t_new > opts.t_max {
            break;
        }
        clock.t = t_new;
        clock.events += 1;
        apply_update(lattice, &mut cfg, rule, draw.site, draw.u);
    }
    Ok(Trajectory {
        samples,
        snapshots: snaps,
        final_config: cfg,
        events: clock.events,
        excluded_regime: false,
    })
}

/// Simulate the producer-consumer model.
pub fn simulate(
    lattice: &Lattice,
    cfg0: &Configuration,
    params: &ModelParams,
    t_max: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<Trajectory> {
    let rule = ProducerConsumer::new(*params, lattice.nu());
    let mut traj = simulate_rule(
        lattice,
        cfg0,
        &rule,
        RunOptions {
            t_max,
            sample_interval,
            seed,
            keep_snapshots: false,
        },
    )?;
    traj.excluded_regime = params.is_excluded_regime();
    Ok(traj)
}

/// Result of [`coupled_simulate_ordered`].
#[derive(Clone, Debug)]
pub struct OrderedCoupling {
    pub upper: Trajectory,
    pub lower: Trajectory,
    /// `{upper = 2} ⊇ {lower = 2}` held after every event.
    pub contained: bool,
}

/// Run two copies of the process from ordered initial configurations
/// (`{upper = 2} ⊇ {lower = 2}`) under the basic coupling.
///
/// Events occur at total rate `2n`, each with a site, a lane bit, a holding
/// time and a threshold `U` (drawn in that order). At a site where the
/// copies agree, lane 0 updates both copies with the common threshold and
/// lane 1 does nothing; at a site where they disagree, the lane selects the
/// single copy that is updated. Each copy therefore sees every site updated
/// at rate one, and no update can exchange the order at a disagreement site.
pub fn coupled_simulate_ordered(
    lattice: &Lattice,
    upper0: &Configuration,
    lower0: &Configuration,
    params: &ModelParams,
    t_max: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<OrderedCoupling> {
    check_matches(lattice, upper0)?;
    check_matches(lattice, lower0)?;
    check_horizon(t_max, sample_interval)?;
    if !upper0.twos_contain(lower0) {
        return Err(Error::Precondition(
            "initial configurations are not ordered: {upper = 2} must contain {lower = 2}".into(),
        ));
    }
    let rule = ProducerConsumer::new(*params, lattice.nu());
    let n = lattice.n();
    let mut rng = rng_from_seed(seed);
    let mut up = upper0.clone();
    let mut lo = lower0.clone();
    let mut t = 0.0;
    let mut events = 0u64;
    let mut violations = 0usize;
    let mut ever_violated = false;
    let mut su = Vec::new();
    let mut sl = Vec::new();
    let mut k = 0u64;
    loop {
        let site = rng.random_range(0..n);
        let lane = rng.random::<bool>();
        let dt = exp_draw(&mut rng, 2.0 * n as f64);
        let u = rng.random::<f64>();
        let t_new = t + dt;
        while (k as f64) * sample_interval <= t_max && (k as f64) * sample_interval < t_new {
            let ts = k as f64 * sample_interval;
            su.push(record(lattice, &up, ts));
            sl.push(record(lattice, &lo, ts));
            k += 1;
        }
        if t_new > t_max {
            break;
        }
        t = t_new;
        events += 1;
        let before = (lo.get(site) == Type::Two && up.get(site) == Type::One) as usize;
        if up.get(site) == lo.get(site) {
            if !lane {
                // both draws use the pre-update neighbourhoods
                let pu = rule.prob_two(up.get(site), lattice.count_two(&up, site));
                let pl = rule.prob_two(lo.get(site), lattice.count_two(&lo, site));
                up.set(site, if u < pu { Type::Two } else { Type::One });
                lo.set(site, if u < pl { Type::Two } else { Type::One });
            }
        } else if !lane {
            apply_update(lattice, &mut up, &rule, site, u);
        } else {
            apply_update(lattice, &mut lo, &rule, site, u);
        }
        let after = (lo.get(site) == Type::Two && up.get(site) == Type::One) as usize;
        violations = violations + after - before;
        if violations > 0 {
            ever_violated = true;
        }
    }
    let excluded = params.is_excluded_regime();
    Ok(OrderedCoupling {
        upper: Trajectory {
            samples: su,
            snapshots: None,
            final_config: up,
            events,
            excluded_regime: excluded,
        },
        lower: Trajectory {
            samples: sl,
            snapshots: None,
            final_config: lo,
            events,
            excluded_regime: excluded,
        },
        contained: !ever_violated,
    })
}

/// `a1 < (1 - rho)/2` and `a2 > (1 + rho)/2`.
pub fn in_domination_region(params: &ModelParams, rho: f64) -> bool {
    params.a1 < (1.0 - rho) / 2.0 && params.a2 > (1.0 + rho) / 2.0
}

/// Result of [`coupled_simulate_domination`].
#[derive(Clone, Debug)]
pub struct DominationRun {
    pub contained: bool,
    pub events: u64,
    pub producer_consumer: Configuration,
    pub voter_perturbation: Configuration,
}

/// Run the producer-consumer process and the voter perturbation with
/// `eps = rho / (d(1 - rho) + rho)` from the same configuration, sharing
/// sites, holding times and thresholds; reports whether the type 2 set of
/// the former contained that of the latter after every event.
pub fn coupled_simulate_domination(
    lattice: &Lattice,
    cfg0: &Configuration,
    params: &ModelParams,
    rho: f64,
    t_max: f64,
    seed: u64,
) -> Result<DominationRun> {
    check_matches(lattice, cfg0)?;
    check_horizon(t_max, 1.0)?;
    if lattice.m() != 1 {
        return Err(Error::UnsupportedRange(lattice.m()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(param(format!("rho={rho} outside (0, 1)")));
    }
    if !in_domination_region(params, rho) {
        return Err(Error::Precondition(format!(
            "(a1, a2) = ({}, {}) violates a1 < (1 - rho)/2 < (1 + rho)/2 < a2 for rho = {rho}",
            params.a1, params.a2
        )));
    }
    let eta_rule = ProducerConsumer::new(*params, lattice.nu());
    let xi_rule = VoterPerturbation::from_rho(rho, lattice)?;
    let n = lattice.n();
    let mut rng = rng_from_seed(seed);
    let mut eta = cfg0.clone();
    let mut xi = cfg0.clone();
    let mut t = 0.0;
    let mut events = 0u64;
    let mut violations = 0usize;
    let mut ever = false;
    loop {
        if eta.homogeneous().is_some() && xi.homogeneous().is_some() {
            break;
        }
        let draw = draw_update(&mut rng, n, n as f64);
        if t + draw.dt > t_max {
            break;
        }
        t += draw.dt;
        events += 1;
        let x = draw.site;
        let before = (xi.get(x) == Type::Two && eta.get(x) == Type::One) as usize;
        let pe = eta_rule.prob_two(eta.get(x), lattice.count_two(&eta, x));
        let px = xi_rule.prob_two(xi.get(x), lattice.count_two(&xi, x));
        eta.set(x, if draw.u < pe { Type::Two } else { Type::One });
        xi.set(x, if draw.u < px { Type::Two } else { Type::One });
        let after = (xi.get(x) == Type::Two && eta.get(x) == Type::One) as usize;
        violations = violations + after - before;
        ever |= violations > 0;
    }
    Ok(DominationRun {
        contained: !ever,
        events,
        producer_consumer: eta,
        voter_perturbation: xi,
    })
}
