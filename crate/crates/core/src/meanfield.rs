//! Nonspatial approximation: the scalar ODE for the density `u1` of type 1
//! when every site sees the global type fractions.

use serde::Serialize;

use crate::dynamics::switch_probability;
use crate::error::{param, Error, Result};
use crate::lattice::Type;

/// `du1/dt` at density `u1`.
pub fn mf_derivative(u1: f64, a1: f64, a2: f64) -> f64 {
    let u2 = 1.0 - u1;
    u2 * switch_probability(a2, u1, u2) - u1 * switch_probability(a1, u2, u1)
}

/// The interior equilibrium, if any.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FixedPoint {
    Interior(f64),
    /// `a1` and `a2` lie on opposite sides of 1/2.
    None,
    /// Some `a_i = 1/2`, or the formula leaves `(0, 1)`.
    Degenerate,
}

impl FixedPoint {
    pub fn value(self) -> Option<f64> {
        match self {
            FixedPoint::Interior(e) => Some(e),
            _ => None,
        }
    }
}

/// `e* = (1 - a1)(a2 - 1/2) / ((1 - a2)(a1 - 1/2) + (1 - a1)(a2 - 1/2))`.
pub fn interior_fixed_point(a1: f64, a2: f64) -> FixedPoint {
    let s1 = a1 - 0.5;
    let s2 = a2 - 0.5;
    if s1 == 0.0 || s2 == 0.0 {
        return FixedPoint::Degenerate;
    }
    if (s1 > 0.0) != (s2 > 0.0) {
        return FixedPoint::None;
    }
    let num = (1.0 - a1) * s2;
    let den = (1.0 - a2) * s1 + num;
    let e = num / den;
    if den != 0.0 && e > 0.0 && e < 1.0 {
        FixedPoint::Interior(e)
    } else {
        FixedPoint::Degenerate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    SelfishWins,
    Bistable,
    Coexistence,
    NeutralBoundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SelfishWins => "selfish-wins",
            Regime::Bistable => "bistable",
            Regime::Coexistence => "coexistence",
            Regime::NeutralBoundary => "neutral-boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeClass {
    pub label: Regime,
    pub e_star: Option<f64>,
    /// The winning type for [`Regime::SelfishWins`].
    pub winner: Option<Type>,
}

/// Long-run behaviour of the mean-field ODE.
///
/// A type with `a_i = 1` never switches, so against a selfish type with
/// `a_j < 1` it wins outright; `a1 = a2 = 1` freezes every density.
pub fn classify_regime(a1: f64, a2: f64) -> RegimeClass {
    let plain = |label| RegimeClass {
        label,
        e_star: None,
        winner: None,
    };
    let wins = |t| RegimeClass {
        label: Regime::SelfishWins,
        e_star: None,
        winner: Some(t),
    };
    if a1 == 0.5 || a2 == 0.5 || (a1 == 1.0 && a2 == 1.0) {
        return plain(Regime::NeutralBoundary);
    }
    match (a1 > 0.5, a2 > 0.5) {
        (true, false) => wins(Type::One),
        (false, true) => wins(Type::Two),
        (true, true) if a1 == 1.0 => wins(Type::One),
        (true, true) if a2 == 1.0 => wins(Type::Two),
        (selfish, _) => {
            let e = interior_fixed_point(a1, a2).value();
            match e {
                Some(_) => RegimeClass {
                    label: if selfish {
                        Regime::Bistable
                    } else {
                        Regime::Coexistence
                    },
                    e_star: e,
                    winner: None,
                },
                None => plain(Regime::NeutralBoundary),
            }
        }
    }
}

/// Limit of `u1(t)` as `t -> ∞` predicted by the regime, for a start
/// `u1_0` in `(0, 1)`. `None` on the neutral boundary and at `u1_0 = e*`
/// in the bistable regime.
pub fn predicted_limit(u1_0: f64, a1: f64, a2: f64) -> Option<f64> {
    if u1_0 == 0.0 || u1_0 == 1.0 {
        return Some(u1_0);
    }
    let r = classify_regime(a1, a2);
    match r.label {
        Regime::SelfishWins => Some(if r.winner == Some(Type::One) { 1.0 } else { 0.0 }),
        Regime::Coexistence => r.e_star,
        Regime::Bistable => {
            let e = r.e_star?;
            if u1_0 > e {
                Some(1.0)
            } else if u1_0 < e {
                Some(0.0)
            } else {
                None
            }
        }
        Regime::NeutralBoundary => None,
    }
}

/// Sampled numerical solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MfPath {
    pub t: Vec<f64>,
    pub u1: Vec<f64>,
}

impl MfPath {
    pub fn final_value(&self) -> f64 {
        *self.u1.last().expect("path has at least one sample")
    }
}

const BAND: f64 = 1e-9;

/// Fixed-step RK4 with roughly 1000 samples over `[0, t_max]`.
pub fn mf_integrate(u1_0: f64, a1: f64, a2: f64, t_max: f64, dt: f64) -> Result<MfPath> {
    mf_integrate_sampled(u1_0, a1, a2, t_max, dt, t_max / 1000.0)
}

/// Fixed-step RK4, recording the state whenever at least `sample_every`
/// time has passed since the last record, and always at `t_max`.
pub fn mf_integrate_sampled(
    u1_0: f64,
    a1: f64,
    a2: f64,
    t_max: f64,
    dt: f64,
    sample_every: f64,
) -> Result<MfPath> {
    if !(0.0..=1.0).contains(&u1_0) {
        return Err(param(format!("u1_0={u1_0} outside [0, 1]")));
    }
    for (name, a) in [("a1", a1), ("a2", a2)] {
        if !(0.0..=1.0).contains(&a) {
            return Err(param(format!("{name}={a} outside [0, 1]")));
        }
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(param(format!("dt={dt} must be positive")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(param(format!("t_max={t_max} must be finite and nonnegative")));
    }
    let f = |u: f64| mf_derivative(u.clamp(0.0, 1.0), a1, a2);
    let steps = (t_max / dt).ceil() as u64;
    let mut u = u1_0;
    let mut path = MfPath {
        t: vec![0.0],
        u1: vec![u],
    };
    let mut last = 0.0;
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * dt;
        let h = (t_max - t0).min(dt);
        let k1 = f(u);
        let k2 = f(u + 0.5 * h * k1);
        let k3 = f(u + 0.5 * h * k2);
        let k4 = f(u + h * k3);
        let next = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(-BAND..=1.0 + BAND).contains(&next) {
            return Err(Error::Domain(format!(
                "integration left [0, 1] at t={}: u1={next}; reduce dt",
                t0 + h
            )));
        }
        u = next.clamp(0.0, 1.0);
        let t = t0 + h;
        if k == steps || t - last >= sample_every {
            path.t.push(t);
            path.u1.push(u);
            last = t;
        }
    }
    Ok(path)
}
