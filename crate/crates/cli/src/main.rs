//! `prodcons`: command-line front end to the simulation laboratory.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use prodcons_core::graphical::{
    check_breaking_duality, check_breaking_lemma, dual_set, forward_from_graphical,
    sample_graphical, RepKind,
};
use prodcons_core::harness::{
    good_site_frequency, phase_sweep, write_sweep_csv, GoodSiteKind, SweepSpec,
};
use prodcons_core::io::{read_snapshot, write_meanfield_csv, write_series_csv, write_snapshot, write_trajectory_csv, Snapshot};
use prodcons_core::meanfield::mf_integrate;
use prodcons_core::rng::{derive_seed, rng_from_seed};
use prodcons_core::special::{
    interface_from_config, simulate_interface, simulate_richardson_reduced,
    simulate_threshold_contact,
};
use prodcons_core::{simulate, Configuration, Error, Lattice, ModelParams, Type};

#[derive(Parser)]
#[command(name = "prodcons", version, about = "Spatial producer-consumer model laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
struct Common {
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file whose fields override the flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the spatial process and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Integrate the mean-field equation and write `t,u1`.
    Meanfield(MeanfieldArgs),
    /// Run a phase-diagram sweep.
    Sweep(SweepArgs),
    /// Check duality (voter kind) or the breaking lemma and duality
    /// (breaking kind) on sampled representations.
    DualCheck(DualCheckArgs),
    /// Simulate the interface process on a ring.
    Interface(InterfaceArgs),
    /// Simulate the threshold contact process.
    Contact(ContactArgs),
    /// Simulate the model with a2 = 1.
    Richardson(RichardsonArgs),
    /// Estimate good-site frequencies.
    Goodsite(GoodsiteArgs),
}

#[derive(Args, Serialize, Deserialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long = "L", alias = "l", default_value_t = 20)]
    l: usize,
    #[arg(long, default_value_t = 0.3)]
    a1: f64,
    #[arg(long, default_value_t = 0.7)]
    a2: f64,
    /// Raw abilities `a11,a12,a21,a22`; when given they replace `--a1/--a2`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    abilities: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    sample_interval: f64,
    /// Type 1 density of the product initial law (ignored with `--init`).
    #[arg(long, default_value_t = 0.5)]
    p1: f64,
    /// Start from a snapshot file.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Write the final configuration as a snapshot.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize, Deserialize)]
struct MeanfieldArgs {
    #[arg(long)]
    a1: f64,
    #[arg(long)]
    a2: f64,
    #[arg(long, default_value_t = 0.5)]
    u0: f64,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5, 0.7, 0.9])]
    a1_values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5, 0.7, 0.9])]
    a2_values: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long = "L", alias = "l", default_value_t = 30)]
    l: usize,
    #[arg(long, default_value_t = 30)]
    replicas: usize,
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0.5)]
    init_density1: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DualKind {
    Voter,
    Breaking,
}

#[derive(Args, Serialize, Deserialize)]
struct DualCheckArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "L", alias = "l", default_value_t = 6)]
    l: usize,
    #[arg(long = "T", alias = "t", default_value_t = 3.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0 / 9.0)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Initial configurations per sampled representation.
    #[arg(long, default_value_t = 10)]
    configs: usize,
    #[arg(long, value_enum, default_value_t = DualKind::Voter)]
    kind: DualKind,
    /// Write the first sampled representation in dump format.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize, Deserialize)]
struct InterfaceArgs {
    #[arg(long)]
    a: f64,
    #[arg(long = "L", alias = "l", default_value_t = 100)]
    l: usize,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    sample_interval: f64,
    /// Type 1 density of the spin configuration the interfaces are read from.
    #[arg(long, default_value_t = 0.5)]
    p1: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize, Deserialize)]
struct ContactArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long = "L", alias = "l", default_value_t = 50)]
    l: usize,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    sample_interval: f64,
    /// Initial occupation density.
    #[arg(long, default_value_t = 1.0)]
    occupied: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize, Deserialize)]
struct RichardsonArgs {
    #[arg(long)]
    a1: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "L", alias = "l", default_value_t = 50)]
    l: usize,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    sample_interval: f64,
    /// Half-width of the initial type 2 block at the origin.
    #[arg(long, default_value_t = 2)]
    block: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum GoodKind {
    Pc,
    Voter,
    Richardson,
}

#[derive(Args, Serialize, Deserialize)]
struct GoodsiteArgs {
    #[arg(long, value_enum, default_value_t = GoodKind::Richardson)]
    kind: GoodKind,
    #[arg(long, default_value_t = 0.5)]
    a1: f64,
    #[arg(long, default_value_t = 1.0)]
    a2: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "L", alias = "l", default_value_t = 80)]
    l: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10])]
    n: Vec<usize>,
    /// Time scale per unit of N.
    #[arg(long, default_value_t = 4.0)]
    t_per_n: f64,
    #[arg(long, default_value_t = 100)]
    replicas: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug)]
enum CliError {
    Param(String),
    Io(String),
    /// Downstream reader went away (`prodcons ... | head`).
    BrokenPipe,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_parameter_error() {
            CliError::Param(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return CliError::BrokenPipe;
        }
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Overlay the top-level keys of a JSON object file onto `base`.
fn overlay<T: Serialize + DeserializeOwned>(base: T, config: Option<&Path>) -> CliResult<T> {
    let Some(path) = config else { return Ok(base) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let patch: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Param(format!("{}: {e}", path.display())))?;
    let Value::Object(patch) = patch else {
        return Err(CliError::Param(format!("{}: expected a JSON object", path.display())));
    };
    let mut v = serde_json::to_value(base).map_err(|e| CliError::Param(e.to_string()))?;
    let obj = v.as_object_mut().expect("argument structs serialize to objects");
    for (k, val) in patch {
        if !obj.contains_key(&k) {
            return Err(CliError::Param(format!("unknown config key `{k}`")));
        }
        obj.insert(k, val);
    }
    serde_json::from_value(v).map_err(|e| CliError::Param(e.to_string()))
}

fn output(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_simulate(args: SimulateArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let params = match &args.abilities {
        Some(a) => ModelParams::from_abilities(a[0], a[1], a[2], a[3])?,
        None => ModelParams::reduced(args.a1, args.a2)?,
    };
    if params.is_excluded_regime() {
        eprintln!("warning: a1 = a2 = 1 is the excluded regime; every configuration is frozen");
    }
    let (lattice, cfg0) = match &args.init {
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let snap = read_snapshot(BufReader::new(f))?;
            (Lattice::new(snap.spec)?, snap.config)
        }
        None => {
            let lattice = Lattice::with(args.d, args.m, args.l)?;
            if !(0.0..=1.0).contains(&args.p1) {
                return Err(CliError::Param(format!("p1={} outside [0, 1]", args.p1)));
            }
            let mut rng = rng_from_seed(derive_seed(args.common.seed, &[0]));
            let cfg = Configuration::product(lattice.n(), args.p1, &mut rng);
            (lattice, cfg)
        }
    };
    let sim_seed = derive_seed(args.common.seed, &[1]);
    let traj = simulate(&lattice, &cfg0, &params, args.t_max, args.sample_interval, sim_seed)?;
    let mut w = output(args.common.out.as_deref())?;
    write_trajectory_csv(&mut w, &traj)?;
    w.flush()?;
    if let Some(p) = &args.snapshot {
        let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let snap = Snapshot {
            spec: lattice.spec(),
            t: args.t_max,
            seed: args.common.seed,
            a1: params.a1,
            a2: params.a2,
            config: traj.final_config,
        };
        let mut f = BufWriter::new(f);
        write_snapshot(&mut f, &snap)?;
        f.flush()?;
    }
    Ok(())
}

fn run_meanfield(args: MeanfieldArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let path = mf_integrate(args.u0, args.a1, args.a2, args.t_max, args.dt)?;
    let mut w = output(args.common.out.as_deref())?;
    write_meanfield_csv(&mut w, &path)?;
    w.flush()?;
    Ok(())
}

fn run_sweep(args: SweepArgs) -> CliResult<()> {
    let spec = SweepSpec {
        a1_values: args.a1_values,
        a2_values: args.a2_values,
        d: args.d,
        m: args.m,
        l: args.l,
        replicas: args.replicas,
        t_max: args.t_max,
        init_density1: args.init_density1,
        base_seed: args.common.seed,
        ..SweepSpec::default()
    };
    let spec = overlay(spec, args.common.config.as_deref())?;
    let records = phase_sweep(&spec)?;
    for r in records.iter().filter(|r| r.excluded_regime) {
        eprintln!("warning: cell a1={} a2={} is the excluded regime", r.a1, r.a2);
    }
    let mut w = output(args.common.out.as_deref())?;
    write_sweep_csv(&mut w, &records)?;
    w.flush()?;
    Ok(())
}

fn run_dual_check(args: DualCheckArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let lattice = Lattice::with(args.d, 1, args.l)?;
    let kind = match args.kind {
        DualKind::Voter => RepKind::VoterPerturbation { eps: args.eps },
        DualKind::Breaking => RepKind::BreakingArrow,
    };
    let mut checks = 0u64;
    let mut violations = 0u64;
    let mut lemma_violations = 0u64;
    for trial in 0..args.trials {
        let seed = derive_seed(args.common.seed, &[trial as u64]);
        let rep = sample_graphical(&lattice, kind, args.t, derive_seed(seed, &[0]))?;
        if trial == 0 {
            if let Some(p) = &args.dump {
                std::fs::write(p, rep.dump(&lattice))
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            }
        }
        let mut rng = rng_from_seed(derive_seed(seed, &[1]));
        for _ in 0..args.configs {
            let cfg0 = Configuration::product(lattice.n(), 0.5, &mut rng);
            let run = forward_from_graphical(&lattice, &rep, &cfg0)?;
            match args.kind {
                DualKind::Voter => {
                    for x in 0..lattice.n() {
                        let ds = dual_set(&lattice, &rep, x, args.t)?;
                        let dual_one = ds.sites.iter().all(|&y| cfg0.get(y) == Type::One);
                        checks += 1;
                        if (run.final_config.get(x) == Type::One) != dual_one {
                            violations += 1;
                        }
                    }
                }
                DualKind::Breaking => {
                    lemma_violations += check_breaking_lemma(&lattice, &run, &rep)? as u64;
                    for x in 0..lattice.n() {
                        checks += 1;
                        if !check_breaking_duality(&lattice, &rep, &run, x)? {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    let pass = violations == 0 && lemma_violations == 0;
    let mut w = output(args.common.out.as_deref())?;
    writeln!(
        w,
        "dual-check {} kind={:?} trials={} checks={checks} violations={violations} lemma_violations={lemma_violations}",
        if pass { "PASS" } else { "FAIL" },
        args.kind,
        args.trials,
    )?;
    w.flush()?;
    Ok(())
}

fn run_interface(args: InterfaceArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let lattice = Lattice::with(1, 1, args.l)?;
    if !(0.0..=1.0).contains(&args.p1) {
        return Err(CliError::Param(format!("p1={} outside [0, 1]", args.p1)));
    }
    let mut rng = rng_from_seed(derive_seed(args.common.seed, &[0]));
    let cfg = Configuration::product(lattice.n(), args.p1, &mut rng);
    let state = interface_from_config(&lattice, &cfg)?;
    let run = simulate_interface(
        &state,
        args.a,
        args.t_max,
        args.sample_interval,
        derive_seed(args.common.seed, &[1]),
    )?;
    let mut w = output(args.common.out.as_deref())?;
    write_series_csv(&mut w, ("t", "interfaces"), &run.t, &run.counts)?;
    w.flush()?;
    Ok(())
}

fn run_contact(args: ContactArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let lattice = Lattice::with(args.d, args.m, args.l)?;
    if !(0.0..=1.0).contains(&args.occupied) {
        return Err(CliError::Param(format!("occupied={} outside [0, 1]", args.occupied)));
    }
    let mut rng = rng_from_seed(derive_seed(args.common.seed, &[0]));
    let occ: Vec<bool> = (0..lattice.n())
        .map(|_| rand::Rng::random::<f64>(&mut rng) < args.occupied)
        .collect();
    let run = simulate_threshold_contact(
        &lattice,
        &occ,
        args.alpha,
        args.t_max,
        args.sample_interval,
        derive_seed(args.common.seed, &[1]),
    )?;
    let mut w = output(args.common.out.as_deref())?;
    write_series_csv(&mut w, ("t", "density"), &run.t, &run.density)?;
    w.flush()?;
    Ok(())
}

fn run_richardson(args: RichardsonArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let lattice = Lattice::with(args.d, 1, args.l)?;
    let b = args.block as i64;
    let cfg0 = Configuration::from_types(
        (0..lattice.n())
            .map(|x| {
                let inside = (0..lattice.d()).all(|i| {
                    let c = lattice.folded(x, i);
                    -b < c && c <= b
                });
                if inside {
                    Type::Two
                } else {
                    Type::One
                }
            })
            .collect(),
    );
    let traj = simulate_richardson_reduced(
        &lattice,
        &cfg0,
        args.a1,
        args.t_max,
        args.sample_interval,
        args.common.seed,
    )?;
    let mut w = output(args.common.out.as_deref())?;
    write_trajectory_csv(&mut w, &traj)?;
    w.flush()?;
    Ok(())
}

fn run_goodsite(args: GoodsiteArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = overlay(args, config.as_deref())?;
    let lattice = Lattice::with(args.d, 1, args.l)?;
    let kind = match args.kind {
        GoodKind::Pc => GoodSiteKind::ProducerConsumer(ModelParams::reduced(args.a1, args.a2)?),
        GoodKind::Voter => GoodSiteKind::VoterPerturbation { eps: args.eps },
        GoodKind::Richardson => GoodSiteKind::Richardson { a1: args.a1 },
    };
    let mut w = output(args.common.out.as_deref())?;
    writeln!(w, "n,t,replicas,omega,omega_bar")?;
    for (i, &n) in args.n.iter().enumerate() {
        let t = args.t_per_n * n as f64;
        let s = good_site_frequency(
            &lattice,
            kind,
            n,
            t,
            args.replicas,
            derive_seed(args.common.seed, &[i as u64]),
        )?;
        writeln!(w, "{},{},{},{},{}", s.n, s.t, s.replicas, s.omega, s.omega_bar)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Meanfield(a) => run_meanfield(a),
        Command::Sweep(a) => run_sweep(a),
        Command::DualCheck(a) => run_dual_check(a),
        Command::Interface(a) => run_interface(a),
        Command::Contact(a) => run_contact(a),
        Command::Richardson(a) => run_richardson(a),
        Command::Goodsite(a) => run_goodsite(a),
    };
    match result {
        Ok(()) | Err(CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(CliError::Param(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
