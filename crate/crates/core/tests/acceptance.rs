//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use prodcons_core::graphical::*;
use prodcons_core::harness::run_replica;
use prodcons_core::meanfield::{classify_regime, mf_integrate, predicted_limit, Regime};
use prodcons_core::rng::{derive_seed, rng_from_seed};
use prodcons_core::special::*;
use prodcons_core::{
    coupled_simulate_domination, coupled_simulate_ordered, simulate, Configuration, Lattice,
    ModelParams, Type,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn gamblers_ruin() -> Outcome {
    let (l, n, k, a1, a2, reps) = (200, 6, 40, 0.2, 0.5, 10_000);
    let hits = interval_ruin_frequency(l, n, k, a1, a2, reps, 0xA1).unwrap();
    let p = gambler_ruin_hit_prob(n, k, a1, a2).unwrap();
    let sigma = (reps as f64 * p * (1.0 - p)).sqrt();
    let z = (hits as f64 - reps as f64 * p) / sigma;
    outcome(
        z.abs() <= 3.0,
        format!("hits {hits}/{reps}, closed form {p:.6}, z = {z:.2}"),
    )
}

fn mean_field_regimes() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut labels_ok = true;
    let cases: [(f64, f64, Regime); 3] = [
        (0.3, 0.7, Regime::SelfishWins),
        (0.8, 0.9, Regime::Bistable),
        (0.1, 0.2, Regime::Coexistence),
    ];
    for (a1, a2, want) in cases {
        let class = classify_regime(a1, a2);
        labels_ok &= class.label == want;
        let starts: Vec<f64> = match class.e_star {
            Some(e) if want == Regime::Bistable => vec![e - 0.05, e + 0.05],
            _ => vec![0.1, 0.5, 0.9],
        };
        for u0 in starts {
            let limit = predicted_limit(u0, a1, a2).unwrap();
            let got = mf_integrate(u0, a1, a2, 1000.0, 1e-3).unwrap().final_value();
            worst = worst.max((got - limit).abs());
            notes.push(format!("({a1},{a2}) u0={u0:.3}→{got:.6}"));
        }
    }
    outcome(
        labels_ok && worst < 1e-6,
        format!("max |u1(1000) - limit| = {worst:.2e}; {}", notes.join(", ")),
    )
}

fn duality() -> Outcome {
    let lat = Lattice::with(2, 1, 6).unwrap();
    let kind = RepKind::VoterPerturbation { eps: 1.0 / 9.0 };
    let t = 3.0;
    let (checks, bad): (usize, usize) = (0..100u64)
        .into_par_iter()
        .map(|r| {
            let rep = sample_graphical(&lat, kind, t, derive_seed(0xD0, &[r])).unwrap();
            let duals: Vec<Vec<usize>> = (0..lat.n())
                .map(|x| dual_set(&lat, &rep, x, t).unwrap().sites)
                .collect();
            let mut rng = rng_from_seed(derive_seed(0xD1, &[r]));
            let mut bad = 0;
            for _ in 0..10 {
                let cfg0 = Configuration::product(lat.n(), 0.5, &mut rng);
                let fin = forward_from_graphical(&lat, &rep, &cfg0).unwrap().final_config;
                for (x, dual) in duals.iter().enumerate() {
                    let dual_one = dual.iter().all(|&y| cfg0.get(y) == Type::One);
                    bad += ((fin.get(x) == Type::One) != dual_one) as usize;
                }
            }
            (10 * lat.n(), bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    outcome(bad == 0, format!("{checks} checks, {bad} disagreements"))
}

fn breaking_lemma() -> Outcome {
    let mut parts = Vec::new();
    let mut total_bad = 0;
    for (d, l, t) in [(1, 20, 50.0), (2, 8, 20.0)] {
        let lat = Lattice::with(d, 1, l).unwrap();
        let (points, bad): (usize, usize) = (0..100u64)
            .into_par_iter()
            .map(|r| {
                let rep = sample_graphical(&lat, RepKind::BreakingArrow, t, derive_seed(0xB0 + d as u64, &[r])).unwrap();
                let mut rng = rng_from_seed(derive_seed(0xB8 + d as u64, &[r]));
                let cfg0 = Configuration::product(lat.n(), 0.5, &mut rng);
                let run = forward_from_graphical(&lat, &rep, &cfg0).unwrap();
                let points = detect_breaking_points(&rep).unwrap().len();
                (points, check_breaking_lemma(&lat, &run, &rep).unwrap())
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        total_bad += bad;
        parts.push(format!("d={d} L={l} T={t}: {points} breaking points, {bad} violations"));
    }
    outcome(total_bad == 0, parts.join("; "))
}

fn breaking_time_frequency() -> Outcome {
    let lat = Lattice::with(1, 1, 300).unwrap();
    let sites: Vec<usize> = (0..300).step_by(3).collect();
    let rep = sample_graphical(&lat, RepKind::BreakingArrow, 1000.0, 0xB7).unwrap();
    let counts: Vec<f64> = breaking_pattern_counts(&lat, &rep, &sites)
        .unwrap()
        .into_iter()
        .map(f64::from)
        .collect();
    let (m, se) = mean_and_se(&counts);
    let want = breaking_time_probability(1);
    let strict = strict_breaking_times(&rep, &sites).unwrap();
    let strict_rate = strict.iter().filter(|&&b| b).count() as f64 / strict.len() as f64;
    outcome(
        (m - want).abs() <= 3.0 * se,
        format!(
            "{} intervals, rate {m:.5} ± {se:.5} vs {want:.6} (strict pattern {strict_rate:.5} vs {:.5})",
            counts.len(),
            strict_breaking_time_probability(1)
        ),
    )
}

fn monotone_couplings() -> Outcome {
    let ring = Lattice::with(1, 1, 50).unwrap();
    let p = ModelParams::reduced(0.2, 0.6).unwrap();
    let ordered = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = rng_from_seed(derive_seed(0xC0, &[s]));
            let up = Configuration::product(50, 0.5, &mut rng);
            let mut lo = up.clone();
            for x in 0..50 {
                if lo.get(x) == Type::Two && rand::Rng::random::<bool>(&mut rng) {
                    lo.set(x, Type::One);
                }
            }
            coupled_simulate_ordered(&ring, &up, &lo, &p, 50.0, 50.0, s).unwrap().contained
        })
        .count();
    let sq = Lattice::with(2, 1, 20).unwrap();
    let q = ModelParams::reduced(0.3, 0.7).unwrap();
    let dominated = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = rng_from_seed(derive_seed(0xC1, &[s]));
            let cfg = Configuration::product(sq.n(), 0.5, &mut rng);
            coupled_simulate_domination(&sq, &cfg, &q, 0.2, 50.0, s).unwrap().contained
        })
        .count();
    outcome(
        ordered == 100 && dominated == 100,
        format!("ordered copies contained in {ordered}/100 runs, domination in {dominated}/100 runs"),
    )
}

fn rate_inequalities() -> Outcome {
    let mut bad = 0;
    let mut cells = 0;
    for d in 1..=6 {
        for i in 0..20 {
            let rho = (i as f64 + 0.5) / 20.0;
            for j in 0..20 {
                let a1 = (1.0 - rho) / 2.0 * j as f64 / 20.0;
                for k in 0..20 {
                    let lo = (1.0 + rho) / 2.0;
                    let a2 = lo + (1.0 - lo) * (k as f64 + 1.0) / 20.0;
                    bad += rate_inequality_violations(d, rho, a1, a2, 1e-12).unwrap();
                    cells += 1;
                }
            }
        }
    }
    let mut id_err: f64 = 0.0;
    for d in 1..=6 {
        for i in 0..20 {
            let rho = (i as f64 + 0.5) / 20.0;
            let z = 1.0 / (2.0 * d as f64);
            let at_z = (1.0 + rho) / (2.0 * d as f64 * (1.0 - rho) + 2.0 * rho);
            for e in [
                comparison_g(1.0, rho) - 1.0,
                comparison_h(1.0, rho, d) - 1.0,
                comparison_g(z, rho) - at_z,
                comparison_h(z, rho, d) - at_z,
            ] {
                id_err = id_err.max(e.abs());
            }
        }
    }
    outcome(
        bad == 0 && id_err < 1e-12,
        format!("{cells} parameter cells over d = 1..6, {bad} violations; max identity error {id_err:.1e}"),
    )
}

fn type_two_wins() -> Outcome {
    let lat = Lattice::with(2, 1, 50).unwrap();
    let p = ModelParams::reduced(0.3, 0.7).unwrap();
    let summaries: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|r| run_replica(&lat, &p, 0.5, 1e4, derive_seed(0x80, &[r])))
        .collect();
    let wins = summaries.iter().filter(|s| s.fixated == Some(Type::Two)).count();
    let slowest = summaries.iter().map(|s| s.time).fold(0.0, f64::max);
    outcome(
        wins >= 95,
        format!("{wins}/100 replicas fixated to type 2 (latest fixation at t = {slowest:.1})"),
    )
}

fn clustering() -> Outcome {
    let lat = Lattice::with(1, 1, 1000).unwrap();
    let p = ModelParams::reduced(0.7, 0.7).unwrap();
    let pairs: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(0x90, &[r]));
            let cfg = Configuration::product(1000, 0.5, &mut rng);
            let tr = simulate(&lat, &cfg, &p, 500.0, 500.0, derive_seed(0x91, &[r])).unwrap();
            let i = |k: usize| tr.samples[k].interfaces.unwrap() as f64;
            (i(0), i(1))
        })
        .collect();
    let start = pairs.iter().map(|p| p.0).sum::<f64>() / 50.0;
    let end = pairs.iter().map(|p| p.1).sum::<f64>() / 50.0;
    outcome(
        end < 0.5 * start,
        format!("mean interfaces {start:.1} at t = 0, {end:.1} at t = 500 (ratio {:.3})", end / start),
    )
}

fn contact_survives() -> Outcome {
    let lat = Lattice::with(2, 1, 100).unwrap();
    let full = vec![true; lat.n()];
    let dens: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|r| {
            let run = simulate_threshold_contact(&lat, &full, 1.0, 200.0, 200.0, derive_seed(0x10, &[r])).unwrap();
            *run.density.last().unwrap()
        })
        .collect();
    let m = dens.iter().sum::<f64>() / dens.len() as f64;
    let min = dens.iter().cloned().fold(1.0, f64::min);
    outcome(m > 0.05, format!("mean occupied density at t = 200: {m:.4} (min {min:.4})"))
}

fn interface_equivalence() -> Outcome {
    let lat = Lattice::with(1, 1, 50).unwrap();
    let a = 0.5;
    let p = ModelParams::reduced(a, a).unwrap();
    let pairs: Vec<(f64, f64)> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(0x11, &[r]));
            let cfg = Configuration::product(50, 0.5, &mut rng);
            let spin = simulate(&lat, &cfg, &p, 20.0, 20.0, derive_seed(0x12, &[r])).unwrap();
            let from_spin = interface_from_config(&lat, &spin.final_config).unwrap().count();
            let s0 = interface_from_config(&lat, &cfg).unwrap();
            let direct = simulate_interface(&s0, a, 20.0, 20.0, derive_seed(0x13, &[r])).unwrap();
            (from_spin as f64, direct.final_state.count() as f64)
        })
        .collect();
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, sx) = mean_and_se(&x);
    let (my, sy) = mean_and_se(&y);
    let sigma = (sx * sx + sy * sy).sqrt();
    outcome(
        (mx - my).abs() <= 3.0 * sigma,
        format!("mean count {mx:.4} (spin system) vs {my:.4} (interface process), σ = {sigma:.4}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("gambler's-ruin hitting law", gamblers_ruin),
        ("mean-field regime limits", mean_field_regimes),
        ("voter-perturbation duality", duality),
        ("breaking-point lemma", breaking_lemma),
        ("breaking-time frequency", breaking_time_frequency),
        ("monotone couplings", monotone_couplings),
        ("rate inequalities", rate_inequalities),
        ("type 2 wins at (0.3, 0.7)", type_two_wins),
        ("clustering at a1 = a2 = 0.7", clustering),
        ("threshold contact survival", contact_survives),
        ("interface-process equivalence", interface_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} [{:>2}] {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
