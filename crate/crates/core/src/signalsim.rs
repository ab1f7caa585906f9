//! Far-field narrowband snapshot simulation.
//!
//! Random stream contract: a [`ChaCha8Rng`] seeded with `seed_from_u64(seed)`
//! is consumed snapshot by snapshot. For snapshot `t` the `D` source samples
//! are drawn first, then `N` unit-variance complex noise samples (real part
//! then imaginary part, each standard normal scaled by `1/√2`). Noise is
//! drawn even when the SNR is infinite, so for a fixed seed the first `K`
//! snapshots of a longer run are identical and changing the SNR only rescales
//! the same noise realization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{BufRead, Write};

use crate::coupling::{coupling_matrix, CouplingModel};
use crate::error::{Error, Result};
use crate::geometry::SensorArray;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceKind {
    /// Real `±√power`, equiprobable. Fourth-order cumulant `-2 power²` in all three cases.
    BpskReal,
    /// Circular complex Gaussian with variance `power`. All fourth-order cumulants vanish.
    ComplexGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceScene {
    pub angles_deg: Vec<f64>,
    pub kind: SourceKind,
    pub power: f64,
    pub seed: u64,
}

impl SourceScene {
    pub fn new(angles_deg: Vec<f64>, kind: SourceKind, power: f64, seed: u64) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::param("scene needs at least one source"));
        }
        if let Some(a) = angles_deg.iter().find(|a| a.is_nan() || a.abs() >= 90.0) {
            return Err(Error::param(format!("source angle {a} outside (-90, 90)")));
        }
        let mut sorted = angles_deg.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("source angles must be distinct"));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::param(format!(
                "source power must be positive, got {power}"
            )));
        }
        Ok(Self {
            angles_deg,
            kind,
            power,
            seed,
        })
    }

    /// Unit-power real BPSK sources.
    pub fn bpsk(angles_deg: Vec<f64>, seed: u64) -> Result<Self> {
        Self::new(angles_deg, SourceKind::BpskReal, 1.0, seed)
    }

    pub fn num_sources(&self) -> usize {
        self.angles_deg.len()
    }
}

/// `D` angles evenly spaced over `[lo, hi]` (both ends included).
pub fn uniform_angles(d: usize, lo: f64, hi: f64) -> Vec<f64> {
    match d {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..d)
            .map(|i| lo + (hi - lo) * i as f64 / (d - 1) as f64)
            .collect(),
    }
}

/// Received samples, one row per sensor in array order.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: DMatrix<Complex64>,
    pub array: SensorArray,
    pub snr_db: f64,
    pub coupled: bool,
}

impl SnapshotMatrix {
    pub fn num_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// `a_n(θ) = exp(jπ p_n sin θ)` for half-wavelength unit spacing.
pub fn steering_vector(array: &SensorArray, theta_deg: f64) -> Result<DVector<Complex64>> {
    if theta_deg.is_nan() || theta_deg.abs() >= 90.0 {
        return Err(Error::param(format!("angle {theta_deg} outside (-90, 90)")));
    }
    let u = theta_deg.to_radians().sin();
    Ok(DVector::from_iterator(
        array.len(),
        array
            .positions()
            .iter()
            .map(|&p| Complex64::from_polar(1.0, PI * p as f64 * u)),
    ))
}

pub fn steering_matrix(array: &SensorArray, angles_deg: &[f64]) -> Result<DMatrix<Complex64>> {
    let columns = angles_deg
        .iter()
        .map(|&a| steering_vector(array, a))
        .collect::<Result<Vec<_>>>()?;
    if columns.is_empty() {
        return Ok(DMatrix::zeros(array.len(), 0));
    }
    Ok(DMatrix::from_columns(&columns))
}

/// Noise variance for unit-referenced SNR: `power / 10^(snr/10)`. Zero for `+∞`.
pub fn noise_variance(power: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        power / 10f64.powf(snr_db / 10.0)
    }
}

/// `X = (C) A S + N`.
pub fn simulate(
    array: &SensorArray,
    scene: &SourceScene,
    snr_db: f64,
    snapshots: usize,
    coupling: Option<&CouplingModel>,
) -> Result<SnapshotMatrix> {
    if snapshots < 1 {
        return Err(Error::param("need at least one snapshot"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::param(format!("invalid SNR {snr_db}")));
    }
    let mut manifold = steering_matrix(array, &scene.angles_deg)?;
    if let Some(model) = coupling {
        manifold = coupling_matrix(array, model) * manifold;
    }
    let n = array.len();
    let d = scene.num_sources();
    let noise_std = noise_variance(scene.power, snr_db).sqrt() * FRAC_1_SQRT_2;
    let amplitude = scene.power.sqrt();
    let gaussian_scale = (scene.power / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let mut data = DMatrix::<Complex64>::zeros(n, snapshots);
    let mut source = vec![Complex64::new(0.0, 0.0); d];
    for t in 0..snapshots {
        for s in source.iter_mut() {
            *s = match scene.kind {
                SourceKind::BpskReal => {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    Complex64::new(sign * amplitude, 0.0)
                }
                SourceKind::ComplexGaussian => {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * gaussian_scale
                }
            };
        }
        let mut column = data.column_mut(t);
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, s) in source.iter().enumerate() {
                acc += manifold[(i, j)] * s;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            column[i] = acc + Complex64::new(re, im) * noise_std;
        }
    }
    Ok(SnapshotMatrix {
        data,
        array: array.clone(),
        snr_db,
        coupled: coupling.is_some(),
    })
}

/// Writes the dump layout: a `N,K` header line, then one line per sensor
/// holding `re,im` pairs for snapshots `0..K`.
pub fn write_snapshots<W: Write>(x: &SnapshotMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{},{}", x.num_sensors(), x.num_snapshots())?;
    for row in x.data.row_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                write!(out, ",")?;
            }
            first = false;
            write!(out, "{},{}", v.re, v.im)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a dump written by [`write_snapshots`] for `array`.
pub fn read_snapshots<R: BufRead>(
    input: R,
    array: &SensorArray,
    snr_db: f64,
    coupled: bool,
) -> Result<SnapshotMatrix> {
    let mut lines = input.lines();
    let mut next_line = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing {what}")))?
            .map_err(|e| Error::Format(e.to_string()))
    };
    let header = next_line("header")?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("header `{header}`: {e}")))?;
    let [n, k] = dims[..] else {
        return Err(Error::Format(format!("header `{header}` is not `N,K`")));
    };
    if n != array.len() {
        return Err(Error::Format(format!(
            "dump has {n} sensors, array has {}",
            array.len()
        )));
    }
    let mut data = DMatrix::<Complex64>::zeros(n, k);
    for i in 0..n {
        let line = next_line(&format!("row {}", i + 1))?;
        let values: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?;
        if values.len() != 2 * k {
            return Err(Error::Format(format!(
                "row {} has {} values, expected {}",
                i + 1,
                values.len(),
                2 * k
            )));
        }
        for (t, pair) in values.chunks_exact(2).enumerate() {
            data[(i, t)] = Complex64::new(pair[0], pair[1]);
        }
    }
    Ok(SnapshotMatrix {
        data,
        array: array.clone(),
        snr_db,
        coupled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(p: &[i64]) -> SensorArray {
        SensorArray::from_positions(p.iter().copied()).unwrap()
    }

    #[test]
    fn steering_examples() {
        let a = arr(&[0, 1, 4, 9]);
        let v = steering_vector(&a, 0.0).unwrap();
        assert!(v
            .iter()
            .all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let v = steering_vector(&arr(&[0, 1]), 30.0).unwrap();
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);

        for theta in [-89.0, -37.5, 12.25, 71.0] {
            let v = steering_vector(&a, theta).unwrap();
            assert!(v.iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
        }
        assert!(steering_vector(&a, 90.0).is_err());
        assert!(steering_vector(&a, -91.0).is_err());
    }

    #[test]
    fn scene_validation() {
        assert!(SourceScene::bpsk(vec![], 1).is_err());
        assert!(SourceScene::bpsk(vec![10.0, 10.0], 1).is_err());
        assert!(SourceScene::bpsk(vec![90.0], 1).is_err());
        assert!(SourceScene::new(vec![1.0], SourceKind::BpskReal, 0.0, 1).is_err());
        assert!(SourceScene::bpsk(vec![-3.0, 3.0], 1).is_ok());
    }

    #[test]
    fn noiseless_broadside_columns_are_constant() {
        let a = arr(&[0, 1, 3, 7]);
        let scene = SourceScene::bpsk(vec![0.0], 3).unwrap();
        let x = simulate(&a, &scene, f64::INFINITY, 64, None).unwrap();
        for col in x.data.column_iter() {
            let v = col[0];
            assert!(v == Complex64::new(1.0, 0.0) || v == Complex64::new(-1.0, 0.0));
            assert!(col.iter().all(|&c| c == v));
        }
    }

    #[test]
    fn zero_db_means_unit_noise() {
        assert_eq!(noise_variance(1.0, 0.0), 1.0);
        assert!((noise_variance(2.0, 10.0) - 0.2).abs() < 1e-15);
        assert_eq!(noise_variance(1.0, f64::INFINITY), 0.0);
    }

    #[test]
    fn coupled_column_is_coupling_times_steering() {
        let a = arr(&[0, 1]);
        let model = CouplingModel::default();
        let scene = SourceScene::bpsk(vec![30.0], 5).unwrap();
        let x = simulate(&a, &scene, f64::INFINITY, 8, Some(&model)).unwrap();
        assert!(x.coupled);
        let c1 = model.c1;
        let j = Complex64::new(0.0, 1.0);
        // C a(30°) = [1 + c1 j, c1 + j].
        let expected = [Complex64::new(1.0, 0.0) + c1 * j, c1 + j];
        for col in x.data.column_iter() {
            let s = if col[0].re * expected[0].re > 0.0 {
                1.0
            } else {
                -1.0
            };
            for i in 0..2 {
                assert!((col[i] - expected[i] * s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_prefix() {
        let a = arr(&[0, 2, 5]);
        let scene = SourceScene::bpsk(vec![-10.0, 20.0], 99).unwrap();
        let short = simulate(&a, &scene, 3.0, 50, None).unwrap();
        let long = simulate(&a, &scene, 3.0, 80, None).unwrap();
        assert_eq!(short.data, long.data.columns(0, 50).into_owned());
        let again = simulate(&a, &scene, 3.0, 50, None).unwrap();
        assert_eq!(short, again);
        let other = SourceScene::bpsk(vec![-10.0, 20.0], 100).unwrap();
        assert_ne!(
            short.data,
            simulate(&a, &other, 3.0, 50, None).unwrap().data
        );
    }

    #[test]
    fn bpsk_second_moment() {
        let a = arr(&[0]);
        let scene = SourceScene::bpsk(vec![0.0], 11).unwrap();
        let k = 10_000;
        let x = simulate(&a, &scene, f64::INFINITY, k, None).unwrap();
        let m2: f64 = x.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / k as f64;
        assert!((m2 - 1.0).abs() < 1e-12);
        // Mean of ±1 has std 1/√K; 3σ = 0.03.
        let mean: f64 = x.data.iter().map(|c| c.re).sum::<f64>() / k as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn gaussian_source_power() {
        let a = arr(&[0]);
        let scene = SourceScene::new(vec![0.0], SourceKind::ComplexGaussian, 2.0, 4).unwrap();
        let k = 10_000;
        let x = simulate(&a, &scene, f64::INFINITY, k, None).unwrap();
        let m2: f64 = x.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / k as f64;
        // |s|² is exponential with mean 2, std 2: 3σ/√K = 0.06.
        assert!((m2 - 2.0).abs() < 0.06, "m2 {m2}");
    }

    #[test]
    fn dump_round_trip() {
        let a = arr(&[0, 1, 4]);
        let scene = SourceScene::bpsk(vec![12.0], 7).unwrap();
        let x = simulate(&a, &scene, 0.0, 5, None).unwrap();
        let mut buf = Vec::new();
        write_snapshots(&x, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3,5\n"));
        let back = read_snapshots(buf.as_slice(), &a, 0.0, false).unwrap();
        assert_eq!(back, x);
        assert!(read_snapshots("3,5\n1,2\n".as_bytes(), &a, 0.0, false).is_err());
        assert!(read_snapshots("2,5\n".as_bytes(), &a, 0.0, false).is_err());
        assert!(read_snapshots("x\n".as_bytes(), &a, 0.0, false).is_err());
    }
}
