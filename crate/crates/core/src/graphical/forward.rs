//! Forward construction of a process from its graphical representation.

use super::{EventKind, GraphicalRep, RepKind};
use crate::error::Result;
use crate::lattice::{check_matches, Configuration, Lattice, Type};

/// Forward history: the initial configuration and, for every event in
/// time order, the type of its target just before and just after it.
#[derive(Clone, Debug)]
pub struct ForwardRun {
    pub initial: Configuration,
    pub pre: Vec<Type>,
    pub post: Vec<Type>,
    pub final_config: Configuration,
}

impl ForwardRun {
    /// Configuration at time `t` (after every event at times `<= t`).
    pub fn state_at(&self, rep: &GraphicalRep, t: f64) -> Configuration {
        let mut cfg = self.initial.clone();
        for (e, &p) in rep.events().iter().zip(&self.post) {
            if e.t > t {
                break;
            }
            cfg.set(e.target as usize, p);
        }
        cfg
    }
}

fn unanimous_one(lattice: &Lattice, cfg: &Configuration, x: usize) -> bool {
    lattice
        .neighbors_of(x)
        .iter()
        .all(|&z| cfg.get(z as usize) == Type::One)
}

/// Apply the events of `rep` to `cfg0` in increasing time.
///
/// Voter-perturbation kind: at an arrow `y → x`, `x` takes the type of `y`;
/// at `Δ(x)`, `x` becomes 1 if all its neighbours are 1 and 2 otherwise.
/// Breaking-arrow kind: at an arrow `y → x`, a type 2 site takes the type
/// of `y` and a type 1 site becomes 2 if some neighbour is 2.
pub fn forward_from_graphical(
    lattice: &Lattice,
    rep: &GraphicalRep,
    cfg0: &Configuration,
) -> Result<ForwardRun> {
    check_matches(lattice, cfg0)?;
    let mut cfg = cfg0.clone();
    let mut pre = Vec::with_capacity(rep.events().len());
    let mut post = Vec::with_capacity(rep.events().len());
    for e in rep.events() {
        let x = e.target as usize;
        let cur = cfg.get(x);
        let new = match (rep.kind(), e.kind) {
            (RepKind::VoterPerturbation { .. }, EventKind::Arrow(y)) => cfg.get(y as usize),
            (_, EventKind::Delta) => {
                if unanimous_one(lattice, &cfg, x) {
                    Type::One
                } else {
                    Type::Two
                }
            }
            (RepKind::BreakingArrow, EventKind::Arrow(y)) => match cur {
                Type::Two => cfg.get(y as usize),
                Type::One if unanimous_one(lattice, &cfg, x) => Type::One,
                Type::One => Type::Two,
            },
        };
        cfg.set(x, new);
        pre.push(cur);
        post.push(new);
    }
    Ok(ForwardRun {
        initial: cfg0.clone(),
        pre,
        post,
        final_config: cfg,
    })
}
