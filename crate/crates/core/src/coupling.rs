//! Banded symmetric Toeplitz mutual coupling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::SensorArray;

/// Coupling coefficients `c_0 = 1`, `c_1`, and `c_l = c_1 e^{-j(l-1)π/8} / l`
/// for `2 <= l <= band`; zero beyond the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub c1: Complex64,
    pub band: usize,
}

impl Default for CouplingModel {
    /// `c1 = 0.3 e^{jπ/3}`, `B = 100`.
    fn default() -> Self {
        Self {
            c1: Complex64::from_polar(0.3, PI / 3.0),
            band: 100,
        }
    }
}

impl CouplingModel {
    pub fn new(c1: Complex64, band: usize) -> Result<Self> {
        if c1.norm() >= 1.0 {
            return Err(Error::param(format!(
                "|c1| must be below 1, got {}",
                c1.norm()
            )));
        }
        Ok(Self { c1, band })
    }

    /// Coefficient for a sensor separation of `lag` units.
    pub fn coefficient(&self, lag: u64) -> Complex64 {
        match lag {
            0 => Complex64::new(1.0, 0.0),
            l if l as usize > self.band => Complex64::new(0.0, 0.0),
            1 => self.c1,
            l => {
                let l = l as f64;
                self.c1 * Complex64::from_polar(1.0, -(l - 1.0) * PI / 8.0) / l
            }
        }
    }
}

/// `C[i][j] = c_{|p_i - p_j|}`.
pub fn coupling_matrix(array: &SensorArray, model: &CouplingModel) -> DMatrix<Complex64> {
    let p = array.positions();
    DMatrix::from_fn(p.len(), p.len(), |i, j| {
        model.coefficient(p[i].abs_diff(p[j]))
    })
}

/// `||C - diag(C)||_F / ||C||_F`.
pub fn coupling_leakage(c: &DMatrix<Complex64>) -> Result<f64> {
    if !c.is_square() {
        return Err(Error::param(format!(
            "coupling matrix must be square, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let mut off = 0.0;
    let mut total = 0.0;
    for ((i, j), v) in c
        .iter()
        .enumerate()
        .map(|(k, v)| ((k % c.nrows(), k / c.nrows()), v))
    {
        let e = v.norm_sqr();
        total += e;
        if i != j {
            off += e;
        }
    }
    if total == 0.0 {
        return Err(Error::param("leakage of a zero matrix is undefined"));
    }
    Ok((off / total).sqrt())
}

/// Leakage of `array` under `model`.
pub fn array_leakage(array: &SensorArray, model: &CouplingModel) -> Result<f64> {
    coupling_leakage(&coupling_matrix(array, model))
}

/// Published FOGNA leakage row with the split printed beside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedLeakage {
    pub sensors: usize,
    pub printed_split: (usize, usize, usize),
    pub leakage: f64,
}

pub const PUBLISHED_FOGNA_LEAKAGE: [PublishedLeakage; 6] = [
    PublishedLeakage {
        sensors: 9,
        printed_split: (4, 2, 3),
        leakage: 0.2347,
    },
    PublishedLeakage {
        sensors: 10,
        printed_split: (4, 3, 3),
        leakage: 0.2236,
    },
    PublishedLeakage {
        sensors: 11,
        printed_split: (5, 3, 3),
        leakage: 0.2137,
    },
    PublishedLeakage {
        sensors: 19,
        printed_split: (9, 5, 5),
        leakage: 0.2018,
    },
    PublishedLeakage {
        sensors: 21,
        printed_split: (9, 6, 6),
        leakage: 0.2139,
    },
    PublishedLeakage {
        sensors: 23,
        printed_split: (12, 5, 6),
        leakage: 0.2077,
    },
];

pub fn published_fogna_leakage(sensors: usize) -> Option<&'static PublishedLeakage> {
    PUBLISHED_FOGNA_LEAKAGE
        .iter()
        .find(|r| r.sensors == sensors)
}
