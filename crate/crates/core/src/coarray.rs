//! Exact integer co-arrays.
//!
//! Every co-array is a multiset of integer lags built from ordered index
//! tuples over the physical positions, so multiplicities always total `N^2`
//! (sum and difference co-arrays) or `N^4` (each fourth-order case).

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::geometry::SensorArray;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoarrayKind {
    Sca,
    Dca,
    Foca1,
    Foca2,
    Foca3,
    Foeca,
}

impl fmt::Display for CoarrayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CoarrayKind::Sca => "SCA",
            CoarrayKind::Dca => "DCA",
            CoarrayKind::Foca1 => "FOCA1",
            CoarrayKind::Foca2 => "FOCA2",
            CoarrayKind::Foca3 => "FOCA3",
            CoarrayKind::Foeca => "FOECA",
        };
        f.write_str(s)
    }
}

/// Conjugation pattern of a fourth-order cumulant.
///
/// A slot with a negative sign is conjugated, so the virtual position of the
/// quadruple `(l1, l2, l3, l4)` is `Σ sign_i * p_{l_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FocaCase {
    /// `p1 + p2 + p3 - p4`
    One,
    /// `p1 - p2 + p3 - p4`
    Two,
    /// `-p1 - p2 - p3 + p4`
    Three,
}

impl FocaCase {
    pub const ALL: [FocaCase; 3] = [FocaCase::One, FocaCase::Two, FocaCase::Three];

    pub fn signs(self) -> [i64; 4] {
        match self {
            FocaCase::One => [1, 1, 1, -1],
            FocaCase::Two => [1, -1, 1, -1],
            FocaCase::Three => [-1, -1, -1, 1],
        }
    }

    /// Which of the four cumulant arguments are conjugated.
    pub fn conjugated(self) -> [bool; 4] {
        self.signs().map(|s| s < 0)
    }

    pub fn index(self) -> usize {
        match self {
            FocaCase::One => 0,
            FocaCase::Two => 1,
            FocaCase::Three => 2,
        }
    }

    pub fn kind(self) -> CoarrayKind {
        match self {
            FocaCase::One => CoarrayKind::Foca1,
            FocaCase::Two => CoarrayKind::Foca2,
            FocaCase::Three => CoarrayKind::Foca3,
        }
    }

    #[inline]
    pub fn lag(self, p: [i64; 4]) -> i64 {
        let s = self.signs();
        s[0] * p[0] + s[1] * p[1] + s[2] * p[2] + s[3] * p[3]
    }
}

/// Index tuple (into the physical array) that produces a lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub case: FocaCase,
    pub indices: [usize; 4],
}

/// Calls `f(indices, lag)` for every ordered quadruple of `positions`.
pub fn for_each_quadruple(positions: &[i64], case: FocaCase, mut f: impl FnMut([usize; 4], i64)) {
    let s = case.signs();
    for (a, &pa) in positions.iter().enumerate() {
        let la = s[0] * pa;
        for (b, &pb) in positions.iter().enumerate() {
            let lb = la + s[1] * pb;
            for (c, &pc) in positions.iter().enumerate() {
                let lc = lb + s[2] * pc;
                for (d, &pd) in positions.iter().enumerate() {
                    f([a, b, c, d], lc + s[3] * pd);
                }
            }
        }
    }
}

/// Integer lag multiset with optional per-lag generator bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagMultiset {
    pub kind: CoarrayKind,
    entries: BTreeMap<i64, u64>,
    #[serde(skip)]
    generators: Option<BTreeMap<i64, Vec<Generator>>>,
}

impl LagMultiset {
    pub fn from_counts(kind: CoarrayKind, counts: impl IntoIterator<Item = (i64, u64)>) -> Self {
        let mut entries = BTreeMap::new();
        for (lag, m) in counts {
            if m > 0 {
                *entries.entry(lag).or_insert(0) += m;
            }
        }
        Self {
            kind,
            entries,
            generators: None,
        }
    }

    pub fn entries(&self) -> &BTreeMap<i64, u64> {
        &self.entries
    }

    pub fn multiplicity(&self, lag: i64) -> u64 {
        self.entries.get(&lag).copied().unwrap_or(0)
    }

    pub fn contains(&self, lag: i64) -> bool {
        self.entries.contains_key(&lag)
    }

    /// Sum of multiplicities.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn underlying_set(&self) -> BTreeSet<i64> {
        self.entries.keys().copied().collect()
    }

    pub fn min_lag(&self) -> Option<i64> {
        self.entries.keys().next().copied()
    }

    pub fn max_lag(&self) -> Option<i64> {
        self.entries.keys().next_back().copied()
    }

    /// Every lag negated; multiplicities kept.
    pub fn negated(&self) -> Self {
        Self {
            kind: self.kind,
            entries: self.entries.iter().map(|(&l, &m)| (-l, m)).collect(),
            generators: None,
        }
    }

    /// Whether lag `p` and `-p` always appear with equal multiplicity.
    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|(&l, &m)| self.multiplicity(-l) == m)
    }

    pub fn generators(&self) -> Option<&BTreeMap<i64, Vec<Generator>>> {
        self.generators.as_ref()
    }

    pub fn generators_of(&self, lag: i64) -> &[Generator] {
        self.generators
            .as_ref()
            .and_then(|g| g.get(&lag))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Bag sum: multiplicities add lag by lag, generators are concatenated.
    pub fn bag_sum(&self, other: &LagMultiset, kind: CoarrayKind) -> LagMultiset {
        let mut entries = self.entries.clone();
        for (&lag, &m) in &other.entries {
            *entries.entry(lag).or_insert(0) += m;
        }
        let generators = match (&self.generators, &other.generators) {
            (Some(a), Some(b)) => {
                let mut g = a.clone();
                for (&lag, list) in b {
                    g.entry(lag).or_default().extend_from_slice(list);
                }
                Some(g)
            }
            _ => None,
        };
        LagMultiset {
            kind,
            entries,
            generators,
        }
    }
}

impl Add for &LagMultiset {
    type Output = LagMultiset;

    fn add(self, rhs: &LagMultiset) -> LagMultiset {
        let kind = if self.kind == rhs.kind {
            self.kind
        } else {
            CoarrayKind::Foeca
        };
        self.bag_sum(rhs, kind)
    }
}

/// `{a + b : a ∈ A, b ∈ B}`.
pub fn cross_sum(a: &[i64], b: &[i64]) -> BTreeSet<i64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x + y))
        .collect()
}

fn pair_coarray(array: &SensorArray, kind: CoarrayKind, sign: i64) -> LagMultiset {
    let p = array.positions();
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &a in p {
        for &b in p {
            *counts.entry(a + sign * b).or_insert(0) += 1;
        }
    }
    LagMultiset::from_counts(kind, counts)
}

/// Sum co-array over all ordered pairs.
pub fn sum_coarray(array: &SensorArray) -> LagMultiset {
    pair_coarray(array, CoarrayKind::Sca, 1)
}

/// Difference co-array over all ordered pairs.
pub fn diff_coarray(array: &SensorArray) -> LagMultiset {
    pair_coarray(array, CoarrayKind::Dca, -1)
}

fn foca_impl(array: &SensorArray, case: FocaCase, with_generators: bool) -> LagMultiset {
    let p = array.positions();
    let max = array.aperture();
    // Every case spans at most [-3*max, 3*max].
    let offset = 3 * max;
    let mut dense = vec![0u64; (6 * max + 1) as usize];
    let mut generators: BTreeMap<i64, Vec<Generator>> = BTreeMap::new();
    for_each_quadruple(p, case, |indices, lag| {
        dense[(lag + offset) as usize] += 1;
        if with_generators {
            generators
                .entry(lag)
                .or_default()
                .push(Generator { case, indices });
        }
    });
    let mut set = LagMultiset::from_counts(
        case.kind(),
        dense
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as i64 - offset, m)),
    );
    if with_generators {
        set.generators = Some(generators);
    }
    set
}

/// Fourth-order co-array for one conjugation case.
pub fn foca(array: &SensorArray, case: FocaCase) -> LagMultiset {
    foca_impl(array, case, false)
}

/// [`foca`] with the contributing index tuples of each lag recorded.
pub fn foca_with_generators(array: &SensorArray, case: FocaCase) -> LagMultiset {
    foca_impl(array, case, true)
}

fn foeca_impl(array: &SensorArray, with_generators: bool) -> LagMultiset {
    FocaCase::ALL
        .iter()
        .map(|&case| foca_impl(array, case, with_generators))
        .reduce(|acc, next| acc.bag_sum(&next, CoarrayKind::Foeca))
        .expect("three cases")
}

/// Extended fourth-order co-array: bag sum of the three cases (`3 N^4` entries).
pub fn foeca(array: &SensorArray) -> LagMultiset {
    foeca_impl(array, false)
}

pub fn foeca_with_generators(array: &SensorArray) -> LagMultiset {
    foeca_impl(array, true)
}

/// Hole analysis of a lag multiset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub full_min: i64,
    pub full_max: i64,
    /// Half-width `Lc` of the maximal zero-centred hole-free run `[-Lc, Lc]`.
    pub lc: i64,
    /// Missing lags within `[full_min, full_max]`.
    pub holes: Vec<i64>,
    /// `2 * Lc + 1`.
    pub dof: u64,
}

impl SegmentReport {
    pub fn central(&self) -> (i64, i64) {
        (-self.lc, self.lc)
    }

    pub fn holes_in_central(&self) -> Vec<i64> {
        self.holes
            .iter()
            .copied()
            .filter(|h| h.abs() <= self.lc)
            .collect()
    }

    pub fn is_hole_free(&self) -> bool {
        self.holes.is_empty()
    }
}

pub fn analyze_segment(set: &LagMultiset) -> Result<SegmentReport> {
    if !set.contains(0) {
        return Err(Error::Precondition(format!(
            "{} does not contain lag 0",
            set.kind
        )));
    }
    let full_min = set.min_lag().expect("contains 0");
    let full_max = set.max_lag().expect("contains 0");
    let mut lc = 0;
    while set.contains(lc + 1) && set.contains(-(lc + 1)) {
        lc += 1;
    }
    let mut holes = Vec::new();
    let mut expected = full_min;
    for &lag in set.entries.keys() {
        holes.extend(expected..lag);
        expected = lag + 1;
    }
    Ok(SegmentReport {
        full_min,
        full_max,
        lc,
        holes,
        dof: 2 * lc as u64 + 1,
    })
}
