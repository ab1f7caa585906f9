//! Physical sensor layouts.
//!
//! Positions are integers in units of the unit spacing `d`, sorted and
//! translated so the first sensor sits at zero.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Half-wavelength spacing, the default for `unit_spacing_d` (in wavelengths).
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Rounds to the nearest integer, ties away from zero.
pub fn round_nearest(x: f64) -> i64 {
    x.round() as i64
}

/// Number of sensors `M1` in each outer unit-spaced ULA of an `n1`-sensor CNA.
///
/// This is the integer nearest `(n1 - 1) / 4`. When `(n1 - 1) / 4` sits exactly
/// halfway, both neighbours give the same aperture, and the smaller one is
/// taken (fewer unit-spaced pairs), unless that would leave the outer ULAs
/// empty for `n1 > 2`.
pub fn cna_outer_count(n1: usize) -> usize {
    let num = n1.saturating_sub(1);
    let lower = num / 4;
    let rem = num % 4;
    match rem {
        0 | 1 => lower,
        3 => lower + 1,
        _ => {
            if lower == 0 {
                1
            } else {
                lower
            }
        }
    }
}

/// Aperture of the CNA sum co-array half-width, `2*M1 + (M1+1)(M2-1)`.
fn cna_aperture(m1: usize, m2: usize) -> usize {
    2 * m1 + (m1 + 1) * (m2 - 1)
}

/// Sensor layout together with the construction metadata it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorArray {
    positions: Vec<i64>,
    /// Physical length of one position unit, in wavelengths. Informational only.
    pub unit_spacing_d: f64,
    /// `(N1, N2, N3)` when the array is a FOGNA.
    pub split: Option<(usize, usize, usize)>,
    /// `(M1, M2)` when the array is (or starts with) a CNA.
    pub cna_params: Option<(usize, usize)>,
}

impl SensorArray {
    /// Builds an array from arbitrary integer positions.
    ///
    /// Positions are sorted and translated so the smallest sits at zero.
    /// Duplicates and empty input are rejected.
    pub fn from_positions(positions: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut positions: Vec<i64> = positions.into_iter().collect();
        if positions.is_empty() {
            return Err(Error::param("sensor array needs at least one sensor"));
        }
        positions.sort_unstable();
        if let Some(w) = positions.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param(format!("duplicate sensor position {}", w[0])));
        }
        let origin = positions[0];
        for p in &mut positions {
            *p -= origin;
        }
        Ok(Self {
            positions,
            unit_spacing_d: HALF_WAVELENGTH,
            split: None,
            cna_params: None,
        })
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn aperture(&self) -> i64 {
        *self.positions.last().expect("non-empty by construction")
    }

    /// Returns a copy shifted by `offset`; used to probe translation invariance.
    pub fn translated(&self, offset: i64) -> Vec<i64> {
        self.positions.iter().map(|p| p + offset).collect()
    }
}

impl fmt::Display for SensorArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.positions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// Derived parameters of a FOGNA with split `(N1, N2, N3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FognaParams {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub m1: usize,
    pub m2: usize,
    /// Aperture of subarray 1.
    pub e1: u64,
    /// Aperture spanned by subarrays 1 and 2.
    pub e2: u64,
}

impl FognaParams {
    /// Derives `M1, M2, E1, E2` from the split using [`cna_outer_count`].
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 < 2 {
            return Err(Error::param(format!("N1 must be at least 2, got {n1}")));
        }
        Self::with_outer_count(n1, n2, n3, cna_outer_count(n1))
    }

    /// Same as [`FognaParams::new`] but with an explicit `M1`.
    ///
    /// `M1 = 0` is only accepted for `N1 = 2`, where subarray 1 is a plain
    /// two-sensor ULA.
    pub fn with_outer_count(n1: usize, n2: usize, n3: usize, m1: usize) -> Result<Self> {
        if n1 < 2 {
            return Err(Error::param(format!("N1 must be at least 2, got {n1}")));
        }
        if n2 < 1 || n3 < 1 {
            return Err(Error::param(format!(
                "N2 and N3 must be positive, got ({n2}, {n3})"
            )));
        }
        if 2 * m1 >= n1 {
            return Err(Error::param(format!(
                "M1 = {m1} leaves no middle ULA for N1 = {n1}"
            )));
        }
        if m1 == 0 && n1 != 2 {
            return Err(Error::param(format!("M1 must be positive for N1 = {n1}")));
        }
        let m2 = n1 - 2 * m1;
        let e1 = cna_aperture(m1, m2) as u64;
        let e2 = 2 * e1 + n2 as u64 * (2 * e1 + 1);
        Ok(Self {
            n1,
            n2,
            n3,
            m1,
            m2,
            e1,
            e2,
        })
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2 + self.n3
    }

    /// Closed-form consecutive-lag count `2(2N3+1)(2E1+N2(2E1+1))+1`
    /// guaranteed by the three-stage construction.
    pub fn guaranteed_dof(&self) -> u64 {
        2 * (2 * self.n3 as u64 + 1) * self.e2 + 1
    }

    pub fn aperture(&self) -> u64 {
        2 * self.n3 as u64 * self.e2
    }
}

fn cna_positions(m1: usize, m2: usize) -> Vec<i64> {
    let (m1, m2) = (m1 as i64, m2 as i64);
    let middle_end = m1 + (m1 + 1) * (m2 - 1);
    let mut out: Vec<i64> = (0..m1).collect();
    out.extend((0..m2).map(|k| m1 + (m1 + 1) * k));
    out.extend(middle_end + 1..=middle_end + m1);
    out
}

/// Concatenated nested array with spacing pattern `1^M1, (M1+1)^(M2-1), 1^M1`.
pub fn build_cna(m1: usize, m2: usize) -> Result<SensorArray> {
    if m1 < 1 || m2 < 1 {
        return Err(Error::param(format!(
            "CNA needs M1 >= 1 and M2 >= 1, got ({m1}, {m2})"
        )));
    }
    let mut array = SensorArray::from_positions(cna_positions(m1, m2))?;
    array.cna_params = Some((m1, m2));
    Ok(array)
}

/// FOGNA layout `S1 ∪ S2 ∪ S3`.
pub fn build_fogna(params: &FognaParams) -> Result<SensorArray> {
    // Re-derive to reject hand-built parameter structs that are inconsistent.
    let checked = FognaParams::with_outer_count(params.n1, params.n2, params.n3, params.m1)?;
    if checked != *params {
        return Err(Error::param(format!(
            "inconsistent FOGNA parameters {params:?}, expected {checked:?}"
        )));
    }
    let e1 = params.e1 as i64;
    let e2 = params.e2 as i64;
    let mut positions = cna_positions(params.m1, params.m2);
    positions.extend((0..params.n2 as i64).map(|k| 4 * e1 + 1 + k * (2 * e1 + 1)));
    positions.extend((1..=params.n3 as i64).map(|k| 2 * e2 * k));
    let mut array = SensorArray::from_positions(positions)?;
    if array.len() != params.n() {
        return Err(Error::Invariant(format!(
            "FOGNA subarrays overlap for {params:?}"
        )));
    }
    array.split = Some((params.n1, params.n2, params.n3));
    array.cna_params = Some((params.m1, params.m2));
    Ok(array)
}

/// Two-level nested array: a dense `n1` ULA followed by `n2` sensors at spacing `n1+1`.
pub fn build_nested(n1: usize, n2: usize) -> Result<SensorArray> {
    if n1 < 1 || n2 < 1 {
        return Err(Error::param(format!(
            "nested array needs positive counts, got ({n1}, {n2})"
        )));
    }
    let step = n1 as i64 + 1;
    let positions = (0..n1 as i64).chain((1..=n2 as i64).map(|k| k * step - 1));
    SensorArray::from_positions(positions)
}

pub fn build_ula(n: usize) -> Result<SensorArray> {
    if n < 1 {
        return Err(Error::param("ULA needs at least one sensor"));
    }
    SensorArray::from_positions(0..n as i64)
}

/// Fourth-order array families compared in the DOF tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArrayFamily {
    FlNa,
    SeFlNa,
    FoFractalNa,
    SdFodcNa,
    Fogna,
}

impl ArrayFamily {
    pub const ALL: [ArrayFamily; 5] = [
        ArrayFamily::FlNa,
        ArrayFamily::SeFlNa,
        ArrayFamily::FoFractalNa,
        ArrayFamily::SdFodcNa,
        ArrayFamily::Fogna,
    ];

    pub fn arity(self) -> usize {
        match self {
            ArrayFamily::FlNa | ArrayFamily::SeFlNa => 4,
            ArrayFamily::FoFractalNa | ArrayFamily::SdFodcNa => 2,
            ArrayFamily::Fogna => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ArrayFamily::FlNa => "FL-NA",
            ArrayFamily::SeFlNa => "SE-FL-NA",
            ArrayFamily::FoFractalNa => "FO-Fractal(NA)",
            ArrayFamily::SdFodcNa => "SD-FODC(NA)",
            ArrayFamily::Fogna => "FOGNA",
        }
    }

    /// Physical sensor count implied by a split.
    pub fn sensor_count(self, split: &[usize]) -> Result<usize> {
        self.check_arity(split)?;
        Ok(match self {
            ArrayFamily::FlNa => split.iter().map(|n| n - 1).sum::<usize>() + 1,
            ArrayFamily::SeFlNa => split.iter().map(|n| n - 1).sum::<usize>() + 2,
            ArrayFamily::FoFractalNa => 2 * split[0] - 1,
            ArrayFamily::SdFodcNa | ArrayFamily::Fogna => split.iter().sum(),
        })
    }

    fn check_arity(self, split: &[usize]) -> Result<()> {
        if split.len() != self.arity() {
            return Err(Error::param(format!(
                "{} expects {} split entries, got {}",
                self.label(),
                self.arity(),
                split.len()
            )));
        }
        if split.contains(&0) {
            return Err(Error::param(format!(
                "{} split entries must be positive: {split:?}",
                self.label()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ArrayFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One row of the published DOF comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedDof {
    pub family: ArrayFamily,
    pub split: &'static [usize],
    pub sensors: usize,
    pub dof: i64,
}

/// Published DOF values for 9, 11 and 19 sensors.
pub const PUBLISHED_DOF: &[PublishedDof] = &[
    PublishedDof {
        family: ArrayFamily::FlNa,
        split: &[3, 3, 3, 3],
        sensors: 9,
        dof: 217,
    },
    PublishedDof {
        family: ArrayFamily::SeFlNa,
        split: &[3, 3, 3, 2],
        sensors: 9,
        dof: 253,
    },
    PublishedDof {
        family: ArrayFamily::FoFractalNa,
        split: &[5, 5],
        sensors: 9,
        dof: 307,
    },
    PublishedDof {
        family: ArrayFamily::SdFodcNa,
        split: &[4, 5],
        sensors: 9,
        dof: 317,
    },
    PublishedDof {
        family: ArrayFamily::Fogna,
        split: &[5, 2, 2],
        sensors: 9,
        dof: 381,
    },
    PublishedDof {
        family: ArrayFamily::FlNa,
        split: &[4, 4, 3, 3],
        sensors: 11,
        dof: 385,
    },
    PublishedDof {
        family: ArrayFamily::SeFlNa,
        split: &[4, 3, 3, 3],
        sensors: 11,
        dof: 481,
    },
    PublishedDof {
        family: ArrayFamily::FoFractalNa,
        split: &[6, 6],
        sensors: 11,
        dof: 553,
    },
    PublishedDof {
        family: ArrayFamily::SdFodcNa,
        split: &[6, 5],
        sensors: 11,
        dof: 597,
    },
    PublishedDof {
        family: ArrayFamily::Fogna,
        split: &[5, 3, 3],
        sensors: 11,
        dof: 715,
    },
    PublishedDof {
        family: ArrayFamily::FlNa,
        split: &[6, 6, 5, 5],
        sensors: 19,
        dof: 2161,
    },
    PublishedDof {
        family: ArrayFamily::SeFlNa,
        split: &[6, 5, 5, 5],
        sensors: 19,
        dof: 3121,
    },
    PublishedDof {
        family: ArrayFamily::FoFractalNa,
        split: &[10, 10],
        sensors: 19,
        dof: 3541,
    },
    PublishedDof {
        family: ArrayFamily::SdFodcNa,
        split: &[10, 9],
        sensors: 19,
        dof: 3775,
    },
    PublishedDof {
        family: ArrayFamily::Fogna,
        split: &[9, 5, 5],
        sensors: 19,
        dof: 4599,
    },
];

pub fn published_dof(family: ArrayFamily, split: &[usize]) -> Option<&'static PublishedDof> {
    PUBLISHED_DOF
        .iter()
        .find(|row| row.family == family && row.split == split)
}

/// Evaluates the DOF closed form of `family` at `split`.
///
/// FL-NA, SE-FL-NA and FOGNA use their closed forms as published. The
/// FO-Fractal and SD-FODC forms depend on generator constants that are not
/// derivable from the split alone, so only the published table rows are
/// available for those families.
pub fn competitor_dof(family: ArrayFamily, split: &[usize]) -> Result<i64> {
    family.check_arity(split)?;
    let s: Vec<i64> = split.iter().map(|&n| n as i64).collect();
    match family {
        ArrayFamily::FlNa => {
            let p3 = s[0] * s[1] * s[2];
            Ok(2 * (p3 * s[3] + p3) + 1)
        }
        ArrayFamily::SeFlNa => {
            let p12 = s[0] * s[1];
            Ok(s[2] * s[3] * (2 * p12 - 1) + (s[3] - 1) * (p12 - 1) - 1)
        }
        ArrayFamily::FoFractalNa | ArrayFamily::SdFodcNa => published_dof(family, split)
            .map(|row| row.dof)
            .ok_or_else(|| {
                Error::param(format!(
                    "{} closed form needs generator constants; only published splits are known",
                    family.label()
                ))
            }),
        ArrayFamily::Fogna => {
            let params = FognaParams::new(split[0], split[1], split[2])?;
            let e1 = params.e1 as i64;
            let (n1, n3) = (s[0], s[2]);
            let n = s.iter().sum::<i64>();
            let w = 2 * e1 + 1;
            Ok(2 * ((-2 * n3 * n3 - n3) * w + (2 * e1 + (n - n1) * w) * (2 * n3 + 1)) + 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fogna(n1: usize, n2: usize, n3: usize) -> Vec<i64> {
        build_fogna(&FognaParams::new(n1, n2, n3).unwrap())
            .unwrap()
            .positions()
            .to_vec()
    }

    #[test]
    fn cna_examples() {
        assert_eq!(build_cna(1, 3).unwrap().positions(), &[0, 1, 3, 5, 6]);
        assert_eq!(build_cna(1, 1).unwrap().positions(), &[0, 1, 2]);
        assert_eq!(
            build_cna(2, 3).unwrap().positions(),
            &[0, 1, 2, 5, 8, 9, 10]
        );
        assert!(build_cna(0, 3).is_err());
        assert!(build_cna(2, 0).is_err());
    }

    #[test]
    fn cna_spacing_pattern_and_aperture() {
        for m1 in 1..=8 {
            for m2 in 1..=8 {
                let cna = build_cna(m1, m2).unwrap();
                let p = cna.positions();
                assert_eq!(p.len(), 2 * m1 + m2);
                assert_eq!(cna.aperture() as usize, 2 * m1 + (m1 + 1) * (m2 - 1));
                let gaps: Vec<i64> = p.windows(2).map(|w| w[1] - w[0]).collect();
                let mut expected = vec![1; m1];
                expected.extend(std::iter::repeat_n(m1 as i64 + 1, m2 - 1));
                expected.extend(std::iter::repeat_n(1, m1));
                assert_eq!(gaps, expected, "M1={m1} M2={m2}");
            }
        }
    }

    #[test]
    fn fogna_examples() {
        assert_eq!(
            fogna(5, 3, 3),
            vec![0, 1, 3, 5, 6, 25, 38, 51, 102, 204, 306]
        );
        assert_eq!(fogna(5, 2, 2), vec![0, 1, 3, 5, 6, 25, 38, 76, 152]);
        // M1 = 1, M2 = 2: CNA spacing 1, 2, 1.
        assert_eq!(fogna(4, 2, 1), vec![0, 1, 3, 4, 17, 26, 52]);
    }

    #[test]
    fn fogna_params_match_aperture_formula() {
        for n1 in 2..=30usize {
            let p = FognaParams::new(n1, 1, 1).unwrap();
            let m1 = p.m1 as i64;
            let nm = n1 as i64 - 1;
            assert_eq!(p.e1 as i64, -2 * m1 * m1 + nm * m1 + nm, "N1={n1}");
            assert_eq!(p.m2, n1 - 2 * p.m1);
            // Ties only pick between equal apertures; never below the rounded optimum.
            let rounded = round_nearest(nm as f64 / 4.0);
            let e_rounded = -2 * rounded * rounded + nm * rounded + nm;
            assert_eq!(p.e1 as i64, e_rounded, "N1={n1}");
        }
    }

    #[test]
    fn outer_count_ties() {
        assert_eq!(cna_outer_count(2), 0);
        assert_eq!(cna_outer_count(3), 1);
        assert_eq!(cna_outer_count(5), 1);
        assert_eq!(cna_outer_count(7), 1);
        assert_eq!(cna_outer_count(8), 2);
        assert_eq!(cna_outer_count(11), 2);
        assert_eq!(cna_outer_count(12), 3);
    }

    #[test]
    fn round_nearest_ties_away() {
        assert_eq!(round_nearest(0.5), 1);
        assert_eq!(round_nearest(2.5), 3);
        assert_eq!(round_nearest(-0.5), -1);
        assert_eq!(round_nearest(0.25), 0);
    }

    #[test]
    fn fogna_rejects_bad_params() {
        assert!(FognaParams::new(1, 2, 2).is_err());
        assert!(FognaParams::new(5, 0, 2).is_err());
        assert!(FognaParams::new(5, 2, 0).is_err());
        assert!(FognaParams::with_outer_count(5, 2, 2, 0).is_err());
        assert!(FognaParams::with_outer_count(5, 2, 2, 3).is_err());
        let mut p = FognaParams::new(5, 2, 2).unwrap();
        p.e2 += 1;
        assert!(build_fogna(&p).is_err());
    }

    #[test]
    fn fogna_structure_over_splits() {
        for n1 in 2..=12 {
            for n2 in 1..=6 {
                for n3 in 1..=6 {
                    let p = FognaParams::new(n1, n2, n3).unwrap();
                    let a = build_fogna(&p).unwrap();
                    assert_eq!(a.len(), n1 + n2 + n3);
                    assert_eq!(a.aperture() as u64, 2 * n3 as u64 * p.e2);
                    assert_eq!(a.positions()[0], 0);
                }
            }
        }
    }

    #[test]
    fn nested_examples() {
        assert_eq!(
            build_nested(3, 3).unwrap().positions(),
            &[0, 1, 2, 3, 7, 11]
        );
        assert_eq!(build_nested(1, 1).unwrap().positions(), &[0, 1]);
        assert_eq!(build_nested(2, 2).unwrap().positions(), &[0, 1, 2, 5]);
        assert!(build_nested(0, 2).is_err());
    }

    #[test]
    fn from_positions_normalizes() {
        let a = SensorArray::from_positions([7, 3, 4]).unwrap();
        assert_eq!(a.positions(), &[0, 1, 4]);
        assert!(SensorArray::from_positions([1, 1]).is_err());
        assert!(SensorArray::from_positions(Vec::<i64>::new()).is_err());
        assert_eq!(a.to_string(), "{0,1,4}");
    }

    #[test]
    fn fl_na_rows() {
        assert_eq!(
            competitor_dof(ArrayFamily::FlNa, &[3, 3, 3, 3]).unwrap(),
            217
        );
        assert_eq!(
            competitor_dof(ArrayFamily::FlNa, &[4, 4, 3, 3]).unwrap(),
            385
        );
        assert_eq!(
            competitor_dof(ArrayFamily::FlNa, &[6, 6, 5, 5]).unwrap(),
            2161
        );
    }

    #[test]
    fn se_fl_na_formula_as_printed() {
        // The printed closed form disagrees with the published 253.
        assert_eq!(
            competitor_dof(ArrayFamily::SeFlNa, &[3, 3, 3, 2]).unwrap(),
            109
        );
        assert_eq!(
            published_dof(ArrayFamily::SeFlNa, &[3, 3, 3, 2])
                .unwrap()
                .dof,
            253
        );
    }

    #[test]
    fn fogna_closed_form() {
        assert_eq!(competitor_dof(ArrayFamily::Fogna, &[5, 3, 3]).unwrap(), 715);
        assert_eq!(competitor_dof(ArrayFamily::Fogna, &[5, 2, 2]).unwrap(), 381);
        for n1 in 2..=12 {
            for n2 in 1..=6 {
                for n3 in 1..=6 {
                    let p = FognaParams::new(n1, n2, n3).unwrap();
                    assert_eq!(
                        competitor_dof(ArrayFamily::Fogna, &[n1, n2, n3]).unwrap() as u64,
                        p.guaranteed_dof()
                    );
                }
            }
        }
    }

    #[test]
    fn arity_and_lookup_errors() {
        assert!(competitor_dof(ArrayFamily::FlNa, &[3, 3, 3]).is_err());
        assert!(competitor_dof(ArrayFamily::Fogna, &[5, 3]).is_err());
        assert!(competitor_dof(ArrayFamily::FoFractalNa, &[7, 7]).is_err());
        assert_eq!(competitor_dof(ArrayFamily::SdFodcNa, &[6, 5]).unwrap(), 597);
    }

    #[test]
    fn published_sensor_counts_are_consistent() {
        for row in PUBLISHED_DOF {
            assert_eq!(
                row.family.sensor_count(row.split).unwrap(),
                row.sensors,
                "{} {:?}",
                row.family,
                row.split
            );
        }
    }
}
