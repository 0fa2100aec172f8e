//! Plain-text configuration snapshots and CSV writers.
//!
//! A snapshot is a header line
//! `d=<d> M=<M> L=<L> t=<time> seed=<seed> a1=<a1> a2=<a2>` followed by the
//! types `1`/`2` of all sites in flat-index order, `L` characters per line.

use std::io::{self, BufRead, Write};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lattice::{Configuration, LatticeSpec, Type};
use crate::meanfield::MfPath;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub spec: LatticeSpec,
    pub t: f64,
    pub seed: u64,
    pub a1: f64,
    pub a2: f64,
    pub config: Configuration,
}

pub fn write_snapshot<W: Write>(mut w: W, s: &Snapshot) -> io::Result<()> {
    writeln!(
        w,
        "d={} M={} L={} t={} seed={} a1={} a2={}",
        s.spec.d, s.spec.m, s.spec.l, s.t, s.seed, s.a1, s.a2
    )?;
    let mut line = String::with_capacity(s.spec.l + 1);
    for chunk in s.config.types().chunks(s.spec.l) {
        line.clear();
        line.extend(chunk.iter().map(|t| t.as_char()));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<Snapshot> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty snapshot".into() })??;
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut fields = std::collections::HashMap::new();
    for kv in header.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| perr(1, format!("malformed header field `{kv}`")))?;
        fields.insert(k, v);
    }
    fn get<T: std::str::FromStr>(
        f: &std::collections::HashMap<&str, &str>,
        key: &str,
    ) -> Result<T> {
        f.get(key)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing `{key}`") })?
            .parse()
            .map_err(|_| Error::Parse { line: 1, msg: format!("bad value for `{key}`") })
    }
    let spec = LatticeSpec::new(get(&fields, "d")?, get(&fields, "M")?, get(&fields, "L")?)?;
    let mut types = Vec::with_capacity(spec.sites());
    for (i, line) in lines.enumerate() {
        let line = line?;
        for c in line.trim_end().chars() {
            let t = Type::from_char(c)
                .ok_or_else(|| perr(i + 2, format!("unexpected character `{c}`")))?;
            types.push(t);
        }
    }
    if types.len() != spec.sites() {
        return Err(perr(
            0,
            format!("expected {} sites, found {}", spec.sites(), types.len()),
        ));
    }
    Ok(Snapshot {
        spec,
        t: get(&fields, "t")?,
        seed: get(&fields, "seed")?,
        a1: get(&fields, "a1")?,
        a2: get(&fields, "a2")?,
        config: Configuration::from_types(types),
    })
}

/// `t,density1,density2,interfaces`; the last column is empty unless the
/// lattice is the nearest-neighbour ring.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "t,density1,density2,interfaces")?;
    for s in &traj.samples {
        match s.interfaces {
            Some(i) => writeln!(w, "{},{},{},{}", s.t, s.density1, s.density2, i)?,
            None => writeln!(w, "{},{},{},", s.t, s.density1, s.density2)?,
        }
    }
    Ok(())
}

/// `t,u1`.
pub fn write_meanfield_csv<W: Write>(mut w: W, path: &MfPath) -> io::Result<()> {
    writeln!(w, "t,u1")?;
    for (t, u) in path.t.iter().zip(&path.u1) {
        writeln!(w, "{t},{u}")?;
    }
    Ok(())
}

/// Two-column CSV with the given header names.
pub fn write_series_csv<W: Write, V: std::fmt::Display>(
    mut w: W,
    header: (&str, &str),
    t: &[f64],
    v: &[V],
) -> io::Result<()> {
    writeln!(w, "{},{}", header.0, header.1)?;
    for (a, b) in t.iter().zip(v) {
        writeln!(w, "{a},{b}")?;
    }
    Ok(())
}
