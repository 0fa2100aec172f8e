//! Space-time graphical representations.
//!
//! Events are generated per target site: every site receives events at
//! total rate one. In the voter-perturbation kind each event is a
//! `Δ(x)` mark with probability `ε`, and otherwise an arrow `y → x` from a
//! uniformly chosen neighbour `y`, which gives every directed edge an
//! independent Poisson process of rate `(1 - ε)/ν`. In the breaking-arrow
//! kind (nearest neighbour only) every event is an arrow, rate `1/(2d)` per
//! directed edge.
//!
//! `Λ(x, y)` denotes the arrival times of arrows `y → x`, i.e. of updates of
//! `x` that look at `y`.
//!
//! The events of a site are drawn in time blocks of fixed length, each from
//! its own stream seeded by `(seed, site, block)`. A [`LazyRep`] produces
//! blocks on demand, which makes long windows on large tori cheap when only
//! a few sites are ever inspected; [`sample_graphical`] materialises the
//! same events for a finite window.

mod dual;
mod forward;
mod paths;

pub use dual::{
    breaking_dual_set, breaking_pattern_counts, breaking_pattern_expectation,
    breaking_time_probability, brute_force_breaking_points, check_breaking_duality,
    check_breaking_lemma, detect_breaking_points, dual_set, strict_breaking_time_probability,
    strict_breaking_times, BreakingPoint, DualSet,
};
pub use forward::{forward_from_graphical, ForwardRun};
pub use paths::{
    path_containment_stats, selected_path, ContainmentStat, PathMode, Schedule, SelectedPath,
};

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::lattice::Lattice;
use crate::rng::{derive_seed, exp_draw, rng_from_seed};

/// Length of the time blocks in which per-site events are generated.
pub const BLOCK: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RepKind {
    VoterPerturbation { eps: f64 },
    BreakingArrow,
}

impl RepKind {
    fn validate(&self, lattice: &Lattice) -> Result<()> {
        match *self {
            RepKind::VoterPerturbation { eps } => {
                if !(0.0..=1.0).contains(&eps) {
                    return Err(param(format!("eps={eps} outside [0, 1]")));
                }
            }
            RepKind::BreakingArrow => {
                if lattice.m() != 1 {
                    return Err(Error::UnsupportedRange(lattice.m()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// Arrow from the given source site to the target.
    Arrow(u32),
    /// `Δ` mark at the target.
    Delta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub target: u32,
    pub kind: EventKind,
}

impl Event {
    pub fn source(&self) -> Option<usize> {
        match self.kind {
            EventKind::Arrow(y) => Some(y as usize),
            EventKind::Delta => None,
        }
    }
}

fn block_events(
    lattice: &Lattice,
    kind: RepKind,
    seed: u64,
    site: usize,
    block: u64,
) -> Vec<Event> {
    let mut rng = rng_from_seed(derive_seed(seed, &[site as u64, block]));
    let start = block as f64 * BLOCK;
    let end = start + BLOCK;
    let nb = lattice.neighbors_of(site);
    let mut t = start;
    let mut out = Vec::new();
    loop {
        t += exp_draw(&mut rng, 1.0);
        if t >= end {
            return out;
        }
        let ek = match kind {
            RepKind::VoterPerturbation { eps } if rng.random::<f64>() < eps => EventKind::Delta,
            _ => EventKind::Arrow(nb[rng.random_range(0..nb.len())]),
        };
        out.push(Event {
            t,
            target: site as u32,
            kind: ek,
        });
    }
}

/// Read access to the events of a representation, walking down in time.
pub trait EventSource {
    fn kind(&self) -> RepKind;
    fn window(&self) -> f64;
    /// Latest event targeting `site` strictly before `before`.
    fn prev_event_at(&mut self, site: usize, before: f64) -> Option<Event>;
}

/// A materialised representation on the window `(0, T)`.
#[derive(Clone, Debug)]
pub struct GraphicalRep {
    kind: RepKind,
    window: f64,
    nu: usize,
    events: Vec<Event>,
    by_target: Vec<Vec<u32>>,
}

impl GraphicalRep {
    /// Build from explicit events. Times must lie in `(0, T)` and be
    /// pairwise distinct; arrows must join neighbours.
    pub fn from_events(
        lattice: &Lattice,
        kind: RepKind,
        window: f64,
        mut events: Vec<Event>,
    ) -> Result<Self> {
        kind.validate(lattice)?;
        if !(window >= 0.0 && window.is_finite()) {
            return Err(param(format!("window T={window} must be finite and nonnegative")));
        }
        for e in &events {
            let x = e.target as usize;
            if x >= lattice.n() {
                return Err(Error::Domain(format!("event target {x} outside the lattice")));
            }
            if !(e.t > 0.0 && e.t < window) {
                return Err(Error::Domain(format!("event time {} outside (0, {window})", e.t)));
            }
            match e.kind {
                EventKind::Arrow(y) if !lattice.is_neighbor(x, y as usize) => {
                    return Err(Error::Domain(format!("arrow {y} -> {x} joins non-neighbours")));
                }
                EventKind::Delta if kind == RepKind::BreakingArrow => {
                    return Err(Error::Domain("breaking-arrow representation has no Δ marks".into()));
                }
                _ => {}
            }
        }
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        if events.windows(2).any(|w| w[0].t == w[1].t) {
            return Err(Error::Domain("event times are not distinct".into()));
        }
        Ok(Self::index(lattice, kind, window, events))
    }

    fn index(lattice: &Lattice, kind: RepKind, window: f64, events: Vec<Event>) -> Self {
        let mut by_target = vec![Vec::new(); lattice.n()];
        for (i, e) in events.iter().enumerate() {
            by_target[e.target as usize].push(i as u32);
        }
        Self {
            kind,
            window,
            nu: lattice.nu(),
            events,
            by_target,
        }
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn n_sites(&self) -> usize {
        self.by_target.len()
    }

    /// All events in increasing time.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Indices (into [`Self::events`]) of the events targeting `x`.
    pub fn events_at(&self, x: usize) -> &[u32] {
        &self.by_target[x]
    }

    /// `Λ(x, y)`: times of arrows `y → x`.
    pub fn lambda(&self, x: usize, y: usize) -> Vec<f64> {
        self.by_target[x]
            .iter()
            .map(|&i| self.events[i as usize])
            .filter(|e| e.kind == EventKind::Arrow(y as u32))
            .map(|e| e.t)
            .collect()
    }

    /// `Δ(x)`: times of `Δ` marks at `x`.
    pub fn delta(&self, x: usize) -> Vec<f64> {
        self.by_target[x]
            .iter()
            .map(|&i| self.events[i as usize])
            .filter(|e| e.kind == EventKind::Delta)
            .map(|e| e.t)
            .collect()
    }

    /// Index of the latest event targeting `x` strictly before `before`.
    pub fn prev_index(&self, x: usize, before: f64) -> Option<usize> {
        let list = &self.by_target[x];
        let k = list.partition_point(|&i| self.events[i as usize].t < before);
        (k > 0).then(|| list[k - 1] as usize)
    }

    /// One line per event: `LAM x y t` for an arrow `y → x` and `DEL x t`
    /// for a `Δ(x)` mark, preceded by `#` header lines.
    pub fn dump(&self, lattice: &Lattice) -> String {
        let mut s = String::new();
        let spec = lattice.spec();
        let _ = writeln!(s, "# d={} M={} L={} T={}", spec.d, spec.m, spec.l, self.window);
        match self.kind {
            RepKind::VoterPerturbation { eps } => {
                let _ = writeln!(s, "# kind=voter eps={eps}");
            }
            RepKind::BreakingArrow => {
                let _ = writeln!(s, "# kind=breaking");
            }
        }
        for e in &self.events {
            match e.kind {
                EventKind::Arrow(y) => {
                    let _ = writeln!(s, "LAM {} {} {:?}", e.target, y, e.t);
                }
                EventKind::Delta => {
                    let _ = writeln!(s, "DEL {} {:?}", e.target, e.t);
                }
            }
        }
        s
    }

    /// Inverse of [`Self::dump`]; the lattice is supplied by the caller and
    /// the `kind` header line is required.
    pub fn parse(lattice: &Lattice, text: &str) -> Result<Self> {
        let mut kind = None;
        let mut window = None;
        let mut events = Vec::new();
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            if let Some(h) = raw.strip_prefix('#') {
                for kv in h.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("T", v)) => {
                            window = Some(v.parse::<f64>().map_err(|_| perr(line, "bad T"))?)
                        }
                        Some(("kind", "breaking")) => kind = Some(RepKind::BreakingArrow),
                        Some(("kind", "voter")) => {
                            kind.get_or_insert(RepKind::VoterPerturbation { eps: f64::NAN });
                        }
                        Some(("eps", v)) => {
                            let eps = v.parse::<f64>().map_err(|_| perr(line, "bad eps"))?;
                            kind = Some(RepKind::VoterPerturbation { eps });
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let f: Vec<&str> = raw.split_whitespace().collect();
            let num = |s: &str| s.parse::<u32>().map_err(|_| perr(line, "bad site index"));
            let time = |s: &str| s.parse::<f64>().map_err(|_| perr(line, "bad time"));
            let ev = match f.as_slice() {
                ["LAM", x, y, t] => Event {
                    t: time(t)?,
                    target: num(x)?,
                    kind: EventKind::Arrow(num(y)?),
                },
                ["DEL", x, t] => Event {
                    t: time(t)?,
                    target: num(x)?,
                    kind: EventKind::Delta,
                },
                _ => return Err(perr(line, "expected `LAM x y t` or `DEL x t`")),
            };
            events.push(ev);
        }
        let kind = kind.ok_or_else(|| perr(0, "missing kind header"))?;
        let window = window.ok_or_else(|| perr(0, "missing T header"))?;
        Self::from_events(lattice, kind, window, events)
    }
}

/// Sample a representation on `(0, T)`.
pub fn sample_graphical(
    lattice: &Lattice,
    kind: RepKind,
    window: f64,
    seed: u64,
) -> Result<GraphicalRep> {
    kind.validate(lattice)?;
    if !(window >= 0.0 && window.is_finite()) {
        return Err(param(format!("window T={window} must be finite and nonnegative")));
    }
    let blocks = (window / BLOCK).ceil() as u64;
    let mut events = Vec::new();
    for x in 0..lattice.n() {
        for b in 0..blocks {
            events.extend(
                block_events(lattice, kind, seed, x, b)
                    .into_iter()
                    .filter(|e| e.t < window),
            );
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    // exact ties and a zero time are measure-zero; nudge to keep the
    // representation simple
    let mut last = 0.0f64;
    for e in events.iter_mut() {
        if e.t <= last {
            e.t = last.next_up();
        }
        last = e.t;
    }
    events.retain(|e| e.t < window);
    Ok(GraphicalRep::index(lattice, kind, window, events))
}

impl EventSource for &GraphicalRep {
    fn kind(&self) -> RepKind {
        self.kind
    }

    fn window(&self) -> f64 {
        self.window
    }

    fn prev_event_at(&mut self, site: usize, before: f64) -> Option<Event> {
        self.prev_index(site, before).map(|i| self.events[i])
    }
}

/// The representation of [`sample_graphical`], generated on demand.
#[derive(Clone, Debug)]
pub struct LazyRep<'a> {
    lattice: &'a Lattice,
    kind: RepKind,
    window: f64,
    seed: u64,
    cache: HashMap<(u32, u64), Vec<Event>>,
}

impl<'a> LazyRep<'a> {
    pub fn new(lattice: &'a Lattice, kind: RepKind, window: f64, seed: u64) -> Result<Self> {
        kind.validate(lattice)?;
        if !(window >= 0.0 && window.is_finite()) {
            return Err(param(format!("window T={window} must be finite and nonnegative")));
        }
        Ok(Self {
            lattice,
            kind,
            window,
            seed,
            cache: HashMap::new(),
        })
    }

    fn block(&mut self, site: usize, b: u64) -> &[Event] {
        let (lattice, kind, seed) = (self.lattice, self.kind, self.seed);
        self.cache
            .entry((site as u32, b))
            .or_insert_with(|| block_events(lattice, kind, seed, site, b))
    }
}

impl EventSource for LazyRep<'_> {
    fn kind(&self) -> RepKind {
        self.kind
    }

    fn window(&self) -> f64 {
        self.window
    }

    fn prev_event_at(&mut self, site: usize, before: f64) -> Option<Event> {
        let before = before.min(self.window);
        if before <= 0.0 {
            return None;
        }
        let mut b = (before / BLOCK).floor() as i64;
        while b >= 0 {
            let evs = self.block(site, b as u64);
            let k = evs.partition_point(|e| e.t < before);
            if k > 0 {
                return Some(evs[k - 1]);
            }
            b -= 1;
        }
        None
    }
}
