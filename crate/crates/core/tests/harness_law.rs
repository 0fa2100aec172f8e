use prodcons_core::harness::*;
use prodcons_core::{Lattice, ModelParams, Type};

fn grid_spec() -> SweepSpec {
    let v = vec![0.1, 0.3, 0.5, 0.7, 0.9];
    SweepSpec {
        a1_values: v.clone(),
        a2_values: v,
        d: 2,
        l: 30,
        base_seed: 17,
        ..SweepSpec::default()
    }
}

fn csv(records: &[OutcomeRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, records).unwrap();
    buf
}

fn mirror(l: OutcomeLabel) -> OutcomeLabel {
    match l {
        OutcomeLabel::Type1Wins => OutcomeLabel::Type2Wins,
        OutcomeLabel::Type2Wins => OutcomeLabel::Type1Wins,
        other => other,
    }
}

#[test]
fn five_by_five_sweep_is_monotone_and_mirror_symmetric() {
    let spec = grid_spec();
    let recs = phase_sweep(&spec).unwrap();
    assert_eq!(recs.len(), 25);
    let at = |i: usize, j: usize| &recs[i * 5 + j];
    for i in 0..5 {
        for j in 1..5 {
            assert!(
                at(i, j).frac_fix2 >= at(i, j - 1).frac_fix2,
                "row a1={}: {} then {}",
                at(i, j).a1,
                at(i, j - 1).frac_fix2,
                at(i, j).frac_fix2
            );
        }
        for j in 0..5 {
            assert_eq!(at(i, j).label, mirror(at(j, i).label), "cell ({i},{j})");
        }
    }
    for r in &recs {
        for s in &r.replicas {
            if s.fixated.is_some() {
                assert!(s.final_density1 == 0.0 || s.final_density1 == 1.0);
            }
        }
    }
    // clear cases on either side of the grid
    assert_eq!(at(1, 3).label, OutcomeLabel::Type2Wins);
    assert_eq!(at(3, 1).label, OutcomeLabel::Type1Wins);
}

#[test]
fn sweep_output_is_byte_identical_across_runs() {
    let spec = SweepSpec {
        a1_values: vec![0.2, 0.6, 1.0],
        a2_values: vec![0.4, 1.0],
        l: 12,
        replicas: 8,
        t_max: 30.0,
        ..grid_spec()
    };
    let a = csv(&phase_sweep(&spec).unwrap());
    let b = csv(&phase_sweep(&spec).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# excluded-regime a1=1 a2=1"));
}

#[test]
fn symmetric_cell_has_balanced_winners() {
    let spec = SweepSpec {
        a1_values: vec![0.6],
        a2_values: vec![0.6],
        d: 1,
        l: 20,
        replicas: 400,
        t_max: 2000.0,
        ..grid_spec()
    };
    let r = &phase_sweep(&spec).unwrap()[0];
    let n = r.replicas.len() as f64;
    let (p1, p2) = (r.frac_fix1, r.frac_fix2);
    assert!(p1 + p2 > 0.5, "too few fixations: {p1} {p2}");
    // multinomial variance of the difference of two cell frequencies
    let sigma = ((p1 + p2 - (p1 - p2).powi(2)) / n).sqrt();
    assert!((p1 - p2).abs() <= 3.0 * sigma, "{p1} vs {p2}");
}

#[test]
fn richardson_good_sites_become_certain() {
    let mut prev = 0.0;
    for n in [5usize, 10] {
        let lat = Lattice::with(2, 1, 8 * n + 8).unwrap();
        let s = good_site_frequency(&lat, GoodSiteKind::Richardson { a1: 0.5 }, n, 4.0 * n as f64, 200, 3).unwrap();
        assert!(s.omega >= prev, "N={n}: {} after {prev}", s.omega);
        assert!(s.omega_bar <= s.omega);
        prev = s.omega;
    }
    assert!(prev > 0.95, "{prev}");
}

#[test]
fn producer_consumer_good_sites_nondecreasing_in_n() {
    let params = ModelParams::reduced(0.1, 0.9).unwrap();
    let mut prev = 0.0;
    for n in [5usize, 10] {
        let lat = Lattice::with(2, 1, 8 * n + 8).unwrap();
        let s = good_site_frequency(&lat, GoodSiteKind::ProducerConsumer(params), n, 2.0 * n as f64, 200, 3).unwrap();
        assert!((0.0..=1.0).contains(&s.omega_bar) && s.omega_bar <= s.omega);
        assert!(s.omega >= prev, "N={n}: {} after {prev}", s.omega);
        prev = s.omega;
    }
}

#[test]
fn good_site_embedding_is_checked() {
    let lat = Lattice::with(2, 1, 30).unwrap();
    assert!(good_site_frequency(&lat, GoodSiteKind::Richardson { a1: 0.5 }, 4, 1.0, 2, 0).is_err());
    assert!(good_site_frequency(&lat, GoodSiteKind::Richardson { a1: 0.5 }, 3, 1.0, 2, 0).is_ok());
}

#[test]
fn clustering_raises_nearest_neighbour_agreement() {
    let lat = Lattice::with(1, 1, 100).unwrap();
    let params = ModelParams::reduced(0.7, 0.7).unwrap();
    let tab = correlation_decay(&lat, &params, &[1, 5], &[0.0, 100.0, 500.0], 50, 0.5, 1).unwrap();
    let p: Vec<f64> = tab.values.iter().map(|row| row[0]).collect();
    assert!(p[0] < p[1] && p[1] < p[2], "{p:?}");
    assert!((p[0] - 0.5).abs() <= 3.0 * tab.std_err[0][0]);
}

#[test]
fn type_two_takes_over_the_ring() {
    let lat = Lattice::with(1, 1, 100).unwrap();
    let params = ModelParams::reduced(0.2, 0.5).unwrap();
    let tab = correlation_decay(&lat, &params, &[1], &[500.0], 30, 0.5, 2).unwrap();
    assert!(tab.values[0][0] > 0.99);
    let wins = (0..30u64)
        .filter(|&r| run_replica(&lat, &params, 0.5, 500.0, r).fixated == Some(Type::Two))
        .count();
    assert!(wins >= 29, "{wins}");
}
