//! Replica orchestration, finite-horizon outcome classification, phase
//! sweeps and block statistics.
//!
//! Seeds are derived as `base ⊕ hash(indices)`, and all parallel work is
//! collected in index order, so results depend only on the inputs.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_until, ModelParams, ProducerConsumer, SimClock, SpinRule};
use crate::error::{param, Error, Result};
use crate::lattice::{Configuration, Lattice, LatticeSpec, Type};
use crate::rng::{derive_seed, rng_from_seed};
use crate::special::VoterPerturbation;

/// Thresholds of the finite-horizon classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub min_replicas: usize,
    /// Fraction of replicas that must agree for a decision.
    pub fraction: f64,
    /// Density band `[delta, 1 - delta]` and correlation level `1 - delta`.
    pub delta: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_replicas: 30,
            fraction: 0.95,
            delta: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeLabel {
    Type1Wins,
    Type2Wins,
    Clustering,
    Coexistence,
    Undecided,
}

impl OutcomeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeLabel::Type1Wins => "type1-wins",
            OutcomeLabel::Type2Wins => "type2-wins",
            OutcomeLabel::Clustering => "clustering",
            OutcomeLabel::Coexistence => "coexistence",
            OutcomeLabel::Undecided => "undecided",
        }
    }
}

/// End state of one replica.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub final_density1: f64,
    pub fixated: Option<Type>,
    /// Fixation time, or the horizon if the run was censored.
    pub time: f64,
    /// Fraction of nearest-neighbour pairs (along the axes) with equal types.
    pub pair_corr_d1: f64,
}

/// Fraction of pairs `(x, x + r e_i)`, averaged over sites and axes, whose
/// types agree.
pub fn pair_agreement(lattice: &Lattice, cfg: &Configuration, r: usize) -> f64 {
    let mut same = 0usize;
    for axis in 0..lattice.d() {
        for x in 0..lattice.n() {
            if cfg.get(x) == cfg.get(lattice.shift(x, axis, r as i64)) {
                same += 1;
            }
        }
    }
    same as f64 / (lattice.n() * lattice.d()) as f64
}

pub fn classify_outcome(replicas: &[ReplicaSummary], th: &Thresholds) -> OutcomeLabel {
    let n = replicas.len();
    if n < th.min_replicas.max(1) {
        return OutcomeLabel::Undecided;
    }
    let frac = |k: usize| k as f64 / n as f64;
    let fix1 = replicas.iter().filter(|r| r.fixated == Some(Type::One)).count();
    let fix2 = replicas.iter().filter(|r| r.fixated == Some(Type::Two)).count();
    if frac(fix1) >= th.fraction {
        return OutcomeLabel::Type1Wins;
    }
    if frac(fix2) >= th.fraction {
        return OutcomeLabel::Type2Wins;
    }
    let banded = replicas
        .iter()
        .filter(|r| {
            r.fixated.is_none()
                && r.final_density1 >= th.delta
                && r.final_density1 <= 1.0 - th.delta
        })
        .count();
    if frac(banded) >= th.fraction {
        return OutcomeLabel::Coexistence;
    }
    let corr = replicas.iter().map(|r| r.pair_corr_d1).sum::<f64>() / n as f64;
    if corr > 1.0 - th.delta {
        return OutcomeLabel::Clustering;
    }
    OutcomeLabel::Undecided
}

/// Run one replica of the producer-consumer model from a product measure
/// with type 1 density `p1` until fixation or `t_max`.
pub fn run_replica(
    lattice: &Lattice,
    params: &ModelParams,
    p1: f64,
    t_max: f64,
    seed: u64,
) -> ReplicaSummary {
    let rule = ProducerConsumer::new(*params, lattice.nu());
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut cfg = Configuration::product(lattice.n(), p1, &mut rng);
    let mut clock = SimClock::new(derive_seed(seed, &[1]));
    let end = run_until(lattice, &mut cfg, &rule, &mut clock, t_max, |_, _| false);
    ReplicaSummary {
        final_density1: cfg.density1(),
        fixated: cfg.homogeneous(),
        time: end,
        pair_corr_d1: pair_agreement(lattice, &cfg, 1),
    }
}

/// A rectangular grid of `(a1, a2)` cells and how to run each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub a1_values: Vec<f64>,
    pub a2_values: Vec<f64>,
    pub d: usize,
    pub m: usize,
    pub l: usize,
    pub replicas: usize,
    pub t_max: f64,
    /// Type 1 density of the product initial law.
    pub init_density1: f64,
    pub thresholds: Thresholds,
    pub base_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            a1_values: vec![0.3],
            a2_values: vec![0.7],
            d: 2,
            m: 1,
            l: 30,
            replicas: 30,
            t_max: 200.0,
            init_density1: 0.5,
            thresholds: Thresholds::default(),
            base_seed: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<LatticeSpec> {
        for &a in self.a1_values.iter().chain(&self.a2_values) {
            if !(0.0..=1.0).contains(&a) {
                return Err(param(format!("grid value {a} outside [0, 1]")));
            }
        }
        if self.a1_values.is_empty() || self.a2_values.is_empty() {
            return Err(param("sweep grid is empty"));
        }
        if self.replicas == 0 {
            return Err(param("replicas must be at least 1"));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(param(format!("t_max={} must be finite and nonnegative", self.t_max)));
        }
        if !(0.0..=1.0).contains(&self.init_density1) {
            return Err(param("init_density1 outside [0, 1]"));
        }
        LatticeSpec::new(self.d, self.m, self.l)
    }

    /// Cells in row-major order (`a1` outer).
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.a1_values
            .iter()
            .flat_map(|&a1| self.a2_values.iter().map(move |&a2| (a1, a2)))
            .collect()
    }
}

/// Outcome of one sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeRecord {
    pub a1: f64,
    pub a2: f64,
    pub replicas: Vec<ReplicaSummary>,
    pub label: OutcomeLabel,
    pub frac_fix1: f64,
    pub frac_fix2: f64,
    pub mean_density1: f64,
    pub pair_corr_d1: f64,
    /// `a1 = a2 = 1`, where finite-horizon labels are meaningless.
    pub excluded_regime: bool,
}

impl OutcomeRecord {
    pub fn from_replicas(a1: f64, a2: f64, replicas: Vec<ReplicaSummary>, th: &Thresholds) -> Self {
        let n = replicas.len().max(1) as f64;
        let count = |t| replicas.iter().filter(|r| r.fixated == Some(t)).count() as f64 / n;
        Self {
            a1,
            a2,
            label: classify_outcome(&replicas, th),
            frac_fix1: count(Type::One),
            frac_fix2: count(Type::Two),
            mean_density1: replicas.iter().map(|r| r.final_density1).sum::<f64>() / n,
            pair_corr_d1: replicas.iter().map(|r| r.pair_corr_d1).sum::<f64>() / n,
            excluded_regime: a1 == 1.0 && a2 == 1.0,
            replicas,
        }
    }
}

/// Run every cell of the grid; cells and replicas run in parallel and are
/// returned in cell order.
pub fn phase_sweep(spec: &SweepSpec) -> Result<Vec<OutcomeRecord>> {
    let lspec = spec.validate()?;
    let lattice = Lattice::new(lspec)?;
    let cells = spec.cells();
    let params: Vec<ModelParams> = cells
        .iter()
        .map(|&(a1, a2)| ModelParams::reduced(a1, a2))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.replicas).map(move |r| (c, r)))
        .collect();
    let summaries: Vec<ReplicaSummary> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = derive_seed(spec.base_seed, &[c as u64, r as u64]);
            run_replica(&lattice, &params[c], spec.init_density1, spec.t_max, seed)
        })
        .collect();
    Ok(summaries
        .chunks(spec.replicas)
        .zip(&cells)
        .map(|(chunk, &(a1, a2))| {
            OutcomeRecord::from_replicas(a1, a2, chunk.to_vec(), &spec.thresholds)
        })
        .collect())
}

pub const SWEEP_HEADER: &str = "a1,a2,replicas,frac_fix1,frac_fix2,mean_density1,pair_corr_d1,label";

/// CSV with a `# schema=1` line, one comment line per excluded cell, the
/// header and one row per record.
pub fn write_sweep_csv<W: Write>(mut w: W, records: &[OutcomeRecord]) -> io::Result<()> {
    writeln!(w, "# schema=1")?;
    for r in records.iter().filter(|r| r.excluded_regime) {
        writeln!(
            w,
            "# excluded-regime a1={} a2={}: every configuration without a unanimous opposite neighbourhood is absorbing",
            r.a1, r.a2
        )?;
    }
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.a1,
            r.a2,
            r.replicas.len(),
            r.frac_fix1,
            r.frac_fix2,
            r.mean_density1,
            r.pair_corr_d1,
            r.label.as_str()
        )?;
    }
    Ok(())
}

/// Which process [`good_site_frequency`] runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GoodSiteKind {
    ProducerConsumer(ModelParams),
    VoterPerturbation { eps: f64 },
    /// The producer-consumer model with `a2 = 1`.
    Richardson { a1: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoodSiteStats {
    pub n: usize,
    pub t: f64,
    pub replicas: usize,
    /// Neighbouring blocks all type 2 at time `T`.
    pub omega: f64,
    /// Neighbouring blocks all type 2 throughout `[T, 2T]`.
    pub omega_bar: f64,
}

fn in_block(lattice: &Lattice, x: usize, center: &[i64], n: i64) -> bool {
    (0..lattice.d()).all(|i| {
        let l = lattice.side() as i64;
        let c = crate::lattice::fold(lattice.folded(x, i) - center[i], l);
        -n < c && c <= n
    })
}

/// Start from the block `(-N, N]^d` all type 2 and the rest type 1, and
/// estimate how often the `2d` blocks `±N e_i + (-N, N]^d` are all type 2
/// at time `T` and throughout `[T, 2T]`.
pub fn good_site_frequency(
    lattice: &Lattice,
    kind: GoodSiteKind,
    n: usize,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<GoodSiteStats> {
    if n == 0 || lattice.side() < 8 * n {
        return Err(param(format!(
            "torus side {} must be at least 8N = {}",
            lattice.side(),
            8 * n
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(param(format!("T={t} must be finite and nonnegative")));
    }
    let rule: Box<dyn SpinRule + Sync> = match kind {
        GoodSiteKind::ProducerConsumer(p) => Box::new(ProducerConsumer::new(p, lattice.nu())),
        GoodSiteKind::VoterPerturbation { eps } => Box::new(VoterPerturbation::new(eps, lattice)?),
        GoodSiteKind::Richardson { a1 } => {
            if lattice.m() != 1 {
                return Err(Error::UnsupportedRange(lattice.m()));
            }
            Box::new(ProducerConsumer::new(ModelParams::reduced(a1, 1.0)?, lattice.nu()))
        }
    };
    let d = lattice.d();
    let ni = n as i64;
    let origin = vec![0i64; d];
    let start = Configuration::from_types(
        (0..lattice.n())
            .map(|x| {
                if in_block(lattice, x, &origin, ni) {
                    Type::Two
                } else {
                    Type::One
                }
            })
            .collect(),
    );
    let mut target = vec![false; lattice.n()];
    for i in 0..d {
        for sign in [-1i64, 1] {
            let mut c = origin.clone();
            c[i] = sign * ni;
            for (x, flag) in target.iter_mut().enumerate() {
                if in_block(lattice, x, &c, ni) {
                    *flag = true;
                }
            }
        }
    }
    let outcomes: Vec<(bool, bool)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut cfg = start.clone();
            let mut clock = SimClock::new(derive_seed(seed, &[r as u64]));
            run_until(lattice, &mut cfg, rule.as_ref(), &mut clock, t, |_, _| false);
            let omega = (0..lattice.n()).all(|x| !target[x] || cfg.get(x) == Type::Two);
            if !omega {
                return (false, false);
            }
            let mut broke = false;
            run_until(lattice, &mut cfg, rule.as_ref(), &mut clock, 2.0 * t, |c, out| {
                broke = out.flipped && target[out.site] && c.get(out.site) == Type::One;
                broke
            });
            (true, !broke)
        })
        .collect();
    let reps = replicas.max(1) as f64;
    Ok(GoodSiteStats {
        n,
        t,
        replicas,
        omega: outcomes.iter().filter(|o| o.0).count() as f64 / reps,
        omega_bar: outcomes.iter().filter(|o| o.1).count() as f64 / reps,
    })
}

/// `values[k][j]`: estimate of `P(η_t(x) = η_t(x + r e_i))` at time
/// `times[k]` and displacement `displacements[j]`, averaged over sites,
/// axes and replicas; `std_err` is the standard error across replicas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub displacements: Vec<usize>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
}

pub fn correlation_decay(
    lattice: &Lattice,
    params: &ModelParams,
    displacements: &[usize],
    times: &[f64],
    replicas: usize,
    p1: f64,
    seed: u64,
) -> Result<CorrelationTable> {
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|&t| t.is_nan() || t < 0.0) {
        return Err(param("sample times must be nonnegative and sorted"));
    }
    if replicas == 0 {
        return Err(param("replicas must be at least 1"));
    }
    let rule = ProducerConsumer::new(*params, lattice.nu());
    let per_rep: Vec<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(seed, &[r as u64]);
            let mut rng = rng_from_seed(derive_seed(seed, &[0]));
            let mut cfg = Configuration::product(lattice.n(), p1, &mut rng);
            let mut clock = SimClock::new(derive_seed(seed, &[1]));
            times
                .iter()
                .map(|&t| {
                    run_until(lattice, &mut cfg, &rule, &mut clock, t, |_, _| false);
                    displacements
                        .iter()
                        .map(|&k| pair_agreement(lattice, &cfg, k))
                        .collect()
                })
                .collect()
        })
        .collect();
    let m = replicas as f64;
    let mut values = vec![vec![0.0; displacements.len()]; times.len()];
    let mut std_err = values.clone();
    for k in 0..times.len() {
        for j in 0..displacements.len() {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[k][j]).collect();
            let mean = xs.iter().sum::<f64>() / m;
            let var = if replicas > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            values[k][j] = mean;
            std_err[k][j] = (var / m).sqrt();
        }
    }
    Ok(CorrelationTable {
        displacements: displacements.to_vec(),
        times: times.to_vec(),
        values,
        std_err,
    })
}
