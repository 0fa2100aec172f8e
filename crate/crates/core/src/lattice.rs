//! Periodic lattice geometry and type configurations.
//!
//! Sites of the torus `(Z / LZ)^d` are addressed either by coordinates
//! ([`Site`]) or by a flat index in `[0, L^d)`. The flat index is the
//! lexicographic rank of the coordinate vector, first coordinate most
//! significant, so the last coordinate varies fastest.
//!
//! The interaction neighbourhood of `x` is the punctured L1 ball of radius
//! `M`. Neighbour tables are built once per [`Lattice`] and listed in
//! lexicographic order of the offset vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a finite torus with L1-ball interactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Spatial dimension.
    pub d: usize,
    /// Interaction range.
    pub m: usize,
    /// Side length (sites per axis).
    pub l: usize,
}

impl LatticeSpec {
    pub fn new(d: usize, m: usize, l: usize) -> Result<Self> {
        let spec = Self { d, m, l };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Parameter("dimension d must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Parameter("range M must be at least 1".into()));
        }
        if self.l <= 2 * self.m {
            return Err(Error::Parameter(format!(
                "torus side L={} must exceed 2M={}",
                self.l,
                2 * self.m
            )));
        }
        let n = (self.l as u128).checked_pow(self.d as u32);
        match n {
            Some(n) if n <= u32::MAX as u128 => Ok(()),
            _ => Err(Error::Parameter(format!(
                "L^d = {}^{} sites does not fit a 32-bit index",
                self.l, self.d
            ))),
        }
    }

    /// Total number of sites `L^d`.
    pub fn sites(&self) -> usize {
        self.l.pow(self.d as u32)
    }
}

/// A lattice site given by its coordinates, each in `[0, L)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub coords: Vec<usize>,
}

impl Site {
    pub fn new(coords: Vec<usize>) -> Self {
        Self { coords }
    }
}

impl From<Vec<usize>> for Site {
    fn from(coords: Vec<usize>) -> Self {
        Self { coords }
    }
}

/// The two types of the producer-consumer model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    One,
    Two,
}

impl Type {
    pub fn other(self) -> Self {
        match self {
            Type::One => Type::Two,
            Type::Two => Type::One,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Type::One => '1',
            Type::Two => '2',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '1' => Some(Type::One),
            '2' => Some(Type::Two),
            _ => None,
        }
    }

    /// The numeric label, 1 or 2.
    pub fn label(self) -> u8 {
        match self {
            Type::One => 1,
            Type::Two => 2,
        }
    }
}

/// Torus geometry with precomputed neighbour tables.
#[derive(Clone, Debug)]
pub struct Lattice {
    spec: LatticeSpec,
    n: usize,
    offsets: Vec<Vec<i64>>,
    table: Vec<u32>,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let offsets = l1_offsets(spec.d, spec.m);
        let n = spec.sites();
        let nu = offsets.len();
        let mut table = Vec::with_capacity(n * nu);
        let mut coords = vec![0usize; spec.d];
        for idx in 0..n {
            decode(idx, spec.l, &mut coords);
            for off in &offsets {
                let mut j = 0usize;
                for (c, o) in coords.iter().zip(off) {
                    let v = (*c as i64 + o).rem_euclid(spec.l as i64) as usize;
                    j = j * spec.l + v;
                }
                table.push(j as u32);
            }
        }
        Ok(Self {
            spec,
            n,
            offsets,
            table,
        })
    }

    /// Convenience constructor from `(d, M, L)`.
    pub fn with(d: usize, m: usize, l: usize) -> Result<Self> {
        Self::new(LatticeSpec::new(d, m, l)?)
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn side(&self) -> usize {
        self.spec.l
    }

    /// Number of sites.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Neighbourhood size, identical for every site.
    pub fn nu(&self) -> usize {
        self.offsets.len()
    }

    /// Offset vectors in canonical (lexicographic) order.
    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    /// Flat indices of the neighbours of `idx`, in canonical order.
    #[inline]
    pub fn neighbors_of(&self, idx: usize) -> &[u32] {
        let nu = self.offsets.len();
        &self.table[idx * nu..(idx + 1) * nu]
    }

    pub fn is_neighbor(&self, x: usize, y: usize) -> bool {
        self.neighbors_of(x).iter().any(|&z| z as usize == y)
    }

    pub fn index(&self, site: &Site) -> Result<usize> {
        if site.coords.len() != self.spec.d {
            return Err(Error::Domain(format!(
                "site has {} coordinates, lattice dimension is {}",
                site.coords.len(),
                self.spec.d
            )));
        }
        let mut idx = 0usize;
        for &c in &site.coords {
            if c >= self.spec.l {
                return Err(Error::Domain(format!(
                    "coordinate {c} outside [0, {})",
                    self.spec.l
                )));
            }
            idx = idx * self.spec.l + c;
        }
        Ok(idx)
    }

    pub fn site(&self, idx: usize) -> Site {
        let mut coords = vec![0; self.spec.d];
        decode(idx, self.spec.l, &mut coords);
        Site { coords }
    }

    /// Coordinate `axis` of site `idx`, in `[0, L)`.
    #[inline]
    pub fn coord(&self, idx: usize, axis: usize) -> usize {
        let stride = self.spec.l.pow((self.spec.d - 1 - axis) as u32);
        (idx / stride) % self.spec.l
    }

    /// Coordinate `axis` of `idx` folded into `(-L/2, L/2]`.
    #[inline]
    pub fn folded(&self, idx: usize, axis: usize) -> i64 {
        fold(self.coord(idx, axis) as i64, self.spec.l as i64)
    }

    /// Translate `idx` by `delta` along `axis`, with wraparound.
    pub fn shift(&self, idx: usize, axis: usize, delta: i64) -> usize {
        let l = self.spec.l as i64;
        let stride = self.spec.l.pow((self.spec.d - 1 - axis) as u32);
        let c = self.coord(idx, axis) as i64;
        let nc = (c + delta).rem_euclid(l);
        (idx as i64 + (nc - c) * stride as i64) as usize
    }

    /// The site whose folded coordinates are `z` (each reduced mod L).
    pub fn from_folded(&self, z: &[i64]) -> usize {
        let l = self.spec.l as i64;
        z.iter()
            .fold(0usize, |acc, &c| acc * self.spec.l + c.rem_euclid(l) as usize)
    }

    /// Neighbours of a site given by coordinates.
    pub fn neighbors(&self, x: &Site) -> Result<Vec<Site>> {
        let idx = self.index(x)?;
        Ok(self
            .neighbors_of(idx)
            .iter()
            .map(|&j| self.site(j as usize))
            .collect())
    }

    /// Number of type 1 and type 2 neighbours of `x`.
    pub fn count_types(&self, cfg: &Configuration, x: &Site) -> Result<(usize, usize)> {
        check_matches(self, cfg)?;
        let idx = self.index(x)?;
        let f2 = self.count_two(cfg, idx);
        Ok((self.nu() - f2, f2))
    }

    /// Number of type 2 neighbours of the site with flat index `idx`.
    #[inline]
    pub fn count_two(&self, cfg: &Configuration, idx: usize) -> usize {
        self.neighbors_of(idx)
            .iter()
            .filter(|&&j| cfg.types[j as usize] == Type::Two)
            .count()
    }

    /// Number of nearest-neighbour pairs with unequal types on a ring
    /// (`d = 1`, `M = 1`); `None` otherwise.
    pub fn ring_interfaces(&self, cfg: &Configuration) -> Option<usize> {
        if self.spec.d != 1 || self.spec.m != 1 {
            return None;
        }
        let t = &cfg.types;
        Some((0..t.len()).filter(|&i| t[i] != t[(i + 1) % t.len()]).count())
    }
}

pub(crate) fn check_matches(lattice: &Lattice, cfg: &Configuration) -> Result<()> {
    if cfg.len() != lattice.n() {
        return Err(Error::Domain(format!(
            "configuration has {} sites, lattice has {}",
            cfg.len(),
            lattice.n()
        )));
    }
    Ok(())
}

fn decode(mut idx: usize, l: usize, coords: &mut [usize]) {
    for c in coords.iter_mut().rev() {
        *c = idx % l;
        idx /= l;
    }
}

/// Map a coordinate in `[0, L)` to its representative in `(-L/2, L/2]`.
pub fn fold(c: i64, l: i64) -> i64 {
    let c = c.rem_euclid(l);
    if 2 * c > l {
        c - l
    } else {
        c
    }
}

/// All nonzero offsets with L1 norm at most `m`, lexicographically sorted.
fn l1_offsets(d: usize, m: usize) -> Vec<Vec<i64>> {
    let m = m as i64;
    let mut out = Vec::new();
    let mut cur = vec![-m; d];
    loop {
        let norm: i64 = cur.iter().map(|c| c.abs()).sum();
        if norm > 0 && norm <= m {
            out.push(cur.clone());
        }
        // odometer increment, last coordinate fastest
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < m {
                cur[k] += 1;
                break;
            }
            cur[k] = -m;
        }
    }
}

/// Assignment of a type to every site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    types: Vec<Type>,
    ones: usize,
}

impl Configuration {
    pub fn uniform(n: usize, t: Type) -> Self {
        Self {
            types: vec![t; n],
            ones: if t == Type::One { n } else { 0 },
        }
    }

    pub fn from_types(types: Vec<Type>) -> Self {
        let ones = types.iter().filter(|&&t| t == Type::One).count();
        Self { types, ones }
    }

    /// Independent sites, each type 1 with probability `p1`.
    pub fn product<R: Rng + ?Sized>(n: usize, p1: f64, rng: &mut R) -> Self {
        Self::from_types(
            (0..n)
                .map(|_| {
                    if rng.random::<f64>() < p1 {
                        Type::One
                    } else {
                        Type::Two
                    }
                })
                .collect(),
        )
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Type {
        self.types[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, t: Type) {
        let old = std::mem::replace(&mut self.types[idx], t);
        match (old, t) {
            (Type::One, Type::Two) => self.ones -= 1,
            (Type::Two, Type::One) => self.ones += 1,
            _ => {}
        }
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[Type] {
        &self.types
    }

    /// Number of type 1 sites.
    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn twos(&self) -> usize {
        self.types.len() - self.ones
    }

    pub fn density1(&self) -> f64 {
        self.ones as f64 / self.types.len() as f64
    }

    pub fn density2(&self) -> f64 {
        1.0 - self.density1()
    }

    /// The common type if every site carries the same type.
    pub fn homogeneous(&self) -> Option<Type> {
        if self.ones == self.types.len() {
            Some(Type::One)
        } else if self.ones == 0 {
            Some(Type::Two)
        } else {
            None
        }
    }

    /// `{x : self(x) = 2} ⊇ {x : other(x) = 2}`.
    pub fn twos_contain(&self, other: &Configuration) -> bool {
        self.types
            .iter()
            .zip(&other.types)
            .all(|(a, b)| !(*b == Type::Two && *a == Type::One))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ring_neighbors() {
        let lat = Lattice::with(1, 1, 10).unwrap();
        let nb = lat.neighbors(&Site::new(vec![0])).unwrap();
        assert_eq!(nb, vec![Site::new(vec![9]), Site::new(vec![1])]);
    }

    #[test]
    fn square_neighbors_of_origin() {
        let lat = Lattice::with(2, 1, 5).unwrap();
        let mut nb = lat.neighbors(&Site::new(vec![0, 0])).unwrap();
        nb.sort();
        let mut want: Vec<Site> = [[4, 0], [1, 0], [0, 4], [0, 1]]
            .iter()
            .map(|c| Site::new(c.to_vec()))
            .collect();
        want.sort();
        assert_eq!(nb, want);
    }

    #[test]
    fn neighborhood_size_matches_enumeration() {
        // brute force over the box [-M, M]^d
        for (d, m) in [(1, 1), (1, 3), (2, 1), (2, 2), (3, 1), (3, 2)] {
            let mm = m as i64;
            let mut count = 0;
            let side: usize = 2 * m + 1;
            for k in 0..side.pow(d as u32) {
                let mut r = k;
                let mut norm = 0;
                for _ in 0..d {
                    norm += ((r % side) as i64 - mm).abs();
                    r /= side;
                }
                if norm > 0 && norm <= mm {
                    count += 1;
                }
            }
            let lat = Lattice::with(d, m, 2 * m + 3).unwrap();
            assert_eq!(lat.nu(), count, "d={d} M={m}");
        }
        assert_eq!(Lattice::with(2, 2, 7).unwrap().nu(), 12);
    }

    #[test]
    fn offsets_are_lexicographic() {
        let lat = Lattice::with(2, 1, 5).unwrap();
        assert_eq!(
            lat.offsets(),
            &[vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn rejects_small_torus() {
        assert!(LatticeSpec::new(1, 2, 4).is_err());
        assert!(LatticeSpec::new(0, 1, 4).is_err());
        assert!(LatticeSpec::new(1, 0, 4).is_err());
        assert!(LatticeSpec::new(2, 2, 5).is_ok());
    }

    #[test]
    fn invalid_site_is_domain_error() {
        let lat = Lattice::with(2, 1, 5).unwrap();
        assert!(matches!(
            lat.neighbors(&Site::new(vec![5, 0])),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            lat.neighbors(&Site::new(vec![1])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn count_types_homogeneous_and_middle() {
        let lat = Lattice::with(2, 2, 6).unwrap();
        let cfg = Configuration::uniform(lat.n(), Type::Two);
        assert_eq!(
            lat.count_types(&cfg, &Site::new(vec![3, 3])).unwrap(),
            (0, 12)
        );

        let ring = Lattice::with(1, 1, 5).unwrap();
        let cfg = Configuration::from_types(vec![
            Type::Two,
            Type::One,
            Type::Two,
            Type::One,
            Type::Two,
        ]);
        assert_eq!(ring.count_types(&cfg, &Site::new(vec![2])).unwrap(), (2, 0));
    }

    #[test]
    fn count_types_matches_recount() {
        let lat = Lattice::with(2, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let cfg = Configuration::product(lat.n(), 0.5, &mut rng);
            for x in 0..4 {
                for y in 0..4 {
                    // independent recount from coordinates
                    let mut f1 = 0;
                    for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                        let nx = (x as i64 + dx).rem_euclid(4) as usize;
                        let ny = (y as i64 + dy).rem_euclid(4) as usize;
                        if cfg.get(nx * 4 + ny) == Type::One {
                            f1 += 1;
                        }
                    }
                    let got = lat.count_types(&cfg, &Site::new(vec![x, y])).unwrap();
                    assert_eq!(got, (f1, 4 - f1));
                }
            }
        }
    }

    #[test]
    fn shift_and_fold() {
        let lat = Lattice::with(2, 1, 6).unwrap();
        let x = lat.index(&Site::new(vec![5, 2])).unwrap();
        assert_eq!(lat.folded(x, 0), -1);
        assert_eq!(lat.folded(x, 1), 2);
        let y = lat.shift(x, 0, 1);
        assert_eq!(lat.site(y), Site::new(vec![0, 2]));
        assert_eq!(lat.from_folded(&[-1, 2]), x);
        assert_eq!(fold(3, 6), 3);
        assert_eq!(fold(4, 6), -2);
    }

    #[test]
    fn configuration_counts_track_sets() {
        let mut cfg = Configuration::uniform(5, Type::Two);
        assert_eq!(cfg.homogeneous(), Some(Type::Two));
        cfg.set(1, Type::One);
        cfg.set(1, Type::One);
        assert_eq!(cfg.ones(), 1);
        assert!((cfg.density1() + cfg.density2() - 1.0).abs() < 1e-15);
        assert_eq!(cfg.homogeneous(), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn lattices() -> impl Strategy<Value = Lattice> {
            (1usize..=3, 1usize..=2, 0usize..3).prop_map(|(d, m, extra)| {
                let l = 2 * m + 1 + extra;
                let l = if d == 3 { l.min(6) } else { l };
                Lattice::with(d, m, l.max(2 * m + 1)).unwrap()
            })
        }

        proptest! {
            #[test]
            fn neighbor_relation_is_symmetric_and_simple(lat in lattices()) {
                for x in 0..lat.n() {
                    let nb = lat.neighbors_of(x);
                    prop_assert_eq!(nb.len(), lat.nu());
                    let mut sorted: Vec<u32> = nb.to_vec();
                    sorted.sort_unstable();
                    sorted.dedup();
                    prop_assert_eq!(sorted.len(), lat.nu());
                    prop_assert!(!nb.contains(&(x as u32)));
                    for &y in nb {
                        prop_assert!(lat.is_neighbor(y as usize, x));
                    }
                }
            }

            #[test]
            fn index_round_trip(lat in lattices(), k in 0usize..10_000) {
                let idx = k % lat.n();
                let s = lat.site(idx);
                prop_assert_eq!(lat.index(&s).unwrap(), idx);
            }

            #[test]
            fn counts_sum_to_nu(lat in lattices(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cfg = Configuration::product(lat.n(), 0.4, &mut rng);
                for x in 0..lat.n() {
                    let (f1, f2) = lat.count_types(&cfg, &lat.site(x)).unwrap();
                    prop_assert_eq!(f1 + f2, lat.nu());
                }
            }
        }
    }
}
