//! Fourth-order cumulant estimation, co-array assembly and spatial-smoothing MUSIC.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coarray::{analyze_segment, foca, for_each_quadruple, CoarrayKind, FocaCase};
use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::signalsim::SnapshotMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sample fourth-order cumulants for the three conjugation cases.
///
/// Entry `(l1, l2, l3, l4)` of a case lives at `((l1 N + l2) N + l3) N + l4`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantBank {
    n: usize,
    snapshots: usize,
    cases: [Vec<Complex64>; 3],
}

impl CumulantBank {
    /// Wraps precomputed case tensors, e.g. analytic model cumulants.
    pub fn from_cases(n: usize, snapshots: usize, cases: [Vec<Complex64>; 3]) -> Result<Self> {
        let len = n.pow(4);
        if let Some(c) = cases.iter().find(|c| c.len() != len) {
            return Err(Error::param(format!(
                "case tensor has {} entries, expected {len}",
                c.len()
            )));
        }
        Ok(Self {
            n,
            snapshots,
            cases,
        })
    }

    pub fn num_sensors(&self) -> usize {
        self.n
    }

    pub fn snapshots(&self) -> usize {
        self.snapshots
    }

    pub fn case(&self, case: FocaCase) -> &[Complex64] {
        &self.cases[case.index()]
    }

    pub fn get(&self, case: FocaCase, l: [usize; 4]) -> Complex64 {
        let n = self.n;
        self.cases[case.index()][((l[0] * n + l[1]) * n + l[2]) * n + l[3]]
    }

    /// Largest `|c3 - conj(c1)|` over all index quadruples.
    pub fn conjugacy_error(&self) -> f64 {
        self.cases[0]
            .iter()
            .zip(&self.cases[2])
            .map(|(a, b)| (b - a.conj()).norm())
            .fold(0.0, f64::max)
    }
}

fn maybe_conj(v: Complex64, conj: bool) -> Complex64 {
    if conj {
        v.conj()
    } else {
        v
    }
}

/// `cum{y1, y2, y3, y4} = E{y1 y2 y3 y4} - E{y1 y2}E{y3 y4} - E{y1 y3}E{y2 y4} - E{y1 y4}E{y2 y3}`
/// with `y_i = x` or `x*` per the case, using biased `1/K` moments.
pub fn sample_cumulants(x: &SnapshotMatrix) -> Result<CumulantBank> {
    let n = x.num_sensors();
    let k = x.num_snapshots();
    if k < 2 {
        return Err(Error::InsufficientData(format!(
            "cumulant estimation needs at least 2 snapshots, got {k}"
        )));
    }
    let data = &x.data;
    let conj_data = data.map(|v| v.conj());
    let scale = 1.0 / k as f64;
    // r[i][j] = E{x_i x_j*}, p[i][j] = E{x_i x_j}.
    let r = (data * data.adjoint()).scale(scale);
    let p = (data * data.transpose()).scale(scale);
    let pair = |i: usize, ci: bool, j: usize, cj: bool| -> Complex64 {
        match (ci, cj) {
            (false, false) => p[(i, j)],
            (false, true) => r[(i, j)],
            (true, false) => r[(j, i)],
            (true, true) => p[(i, j)].conj(),
        }
    };

    let nn = n * n;
    let mut cases: [Vec<Complex64>; 3] = Default::default();
    for case in FocaCase::ALL {
        let c = case.conjugated();
        let y = |conj: bool| if conj { &conj_data } else { data };
        // Row (a N + b) of w_ab holds y_a(t) y_b(t) over t.
        let products = |ca: bool, cb: bool| {
            let (ya, yb) = (y(ca), y(cb));
            let mut w = DMatrix::<Complex64>::zeros(nn, k);
            for t in 0..k {
                for a in 0..n {
                    let va = ya[(a, t)];
                    for b in 0..n {
                        w[(a * n + b, t)] = va * yb[(b, t)];
                    }
                }
            }
            w
        };
        let w12 = products(c[0], c[1]);
        let w34 = products(c[2], c[3]);
        let m4 = (&w12 * w34.transpose()).scale(scale);

        let mut out = vec![ZERO; nn * nn];
        for l1 in 0..n {
            for l2 in 0..n {
                let row = l1 * n + l2;
                let p12 = pair(l1, c[0], l2, c[1]);
                for l3 in 0..n {
                    let p13 = pair(l1, c[0], l3, c[2]);
                    let p23 = pair(l2, c[1], l3, c[2]);
                    for l4 in 0..n {
                        let col = l3 * n + l4;
                        let p34 = pair(l3, c[2], l4, c[3]);
                        let p24 = pair(l2, c[1], l4, c[3]);
                        let p14 = pair(l1, c[0], l4, c[3]);
                        out[row * nn + col] = m4[(row, col)] - p12 * p34 - p13 * p24 - p14 * p23;
                    }
                }
            }
        }
        cases[case.index()] = out;
    }
    Ok(CumulantBank {
        n,
        snapshots: k,
        cases,
    })
}

/// Model cumulants `Σ_d κ_d b^{(j)}(θ_d)` for independent sources with cumulant `κ_d`.
pub fn model_cumulants(
    array: &SensorArray,
    angles_deg: &[f64],
    kappa: &[Complex64],
) -> Result<CumulantBank> {
    if angles_deg.len() != kappa.len() {
        return Err(Error::param("one cumulant value per source required"));
    }
    let n = array.len();
    let steering: Vec<DVector<Complex64>> = angles_deg
        .iter()
        .map(|&a| crate::signalsim::steering_vector(array, a))
        .collect::<Result<_>>()?;
    let mut cases: [Vec<Complex64>; 3] = Default::default();
    for case in FocaCase::ALL {
        let c = case.conjugated();
        let mut out = vec![ZERO; n.pow(4)];
        for (a, &kp) in steering.iter().zip(kappa) {
            let mut idx = 0;
            for l1 in 0..n {
                let v1 = maybe_conj(a[l1], c[0]) * kp;
                for l2 in 0..n {
                    let v2 = v1 * maybe_conj(a[l2], c[1]);
                    for l3 in 0..n {
                        let v3 = v2 * maybe_conj(a[l3], c[2]);
                        for l4 in 0..n {
                            out[idx] += v3 * maybe_conj(a[l4], c[3]);
                            idx += 1;
                        }
                    }
                }
            }
        }
        cases[case.index()] = out;
    }
    CumulantBank::from_cases(n, 0, cases)
}

/// Redundancy-averaged virtual-array signal over the central segment `[-Lc, Lc]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoecaMeasurement {
    pub kind: CoarrayKind,
    pub lc: usize,
    /// `values[m + Lc]` for lag `m`.
    pub values: Vec<Complex64>,
    pub counts: Vec<u64>,
}

impl FoecaMeasurement {
    pub fn value(&self, lag: i64) -> Option<Complex64> {
        self.index(lag).map(|i| self.values[i])
    }

    pub fn count(&self, lag: i64) -> Option<u64> {
        self.index(lag).map(|i| self.counts[i])
    }

    fn index(&self, lag: i64) -> Option<usize> {
        let i = lag + self.lc as i64;
        (0..self.values.len() as i64)
            .contains(&i)
            .then_some(i as usize)
    }

    pub fn lags(&self) -> std::ops::RangeInclusive<i64> {
        -(self.lc as i64)..=self.lc as i64
    }
}

/// Folds all three cases onto the extended co-array.
pub fn assemble_foeca(bank: &CumulantBank, array: &SensorArray) -> Result<FoecaMeasurement> {
    assemble_cases(bank, array, &FocaCase::ALL)
}

/// Folds the selected cases onto their joint co-array; `&[FocaCase::Two]` gives the
/// fourth-order difference co-array.
pub fn assemble_cases(
    bank: &CumulantBank,
    array: &SensorArray,
    cases: &[FocaCase],
) -> Result<FoecaMeasurement> {
    if bank.num_sensors() != array.len() {
        return Err(Error::param(format!(
            "cumulants for {} sensors, array has {}",
            bank.num_sensors(),
            array.len()
        )));
    }
    if cases.is_empty() {
        return Err(Error::param("at least one case required"));
    }
    let kind = match cases {
        [c] => c.kind(),
        _ => CoarrayKind::Foeca,
    };
    let coarray = cases
        .iter()
        .map(|&c| foca(array, c))
        .reduce(|a, b| a.bag_sum(&b, kind))
        .expect("non-empty");
    let lc = analyze_segment(&coarray)?.lc;
    let width = 2 * lc as usize + 1;
    let mut sums = vec![ZERO; width];
    let mut counts = vec![0u64; width];
    let n = array.len();
    for &case in cases {
        let tensor = bank.case(case);
        for_each_quadruple(array.positions(), case, |[a, b, c, d], lag| {
            if lag.abs() <= lc {
                let i = (lag + lc) as usize;
                sums[i] += tensor[((a * n + b) * n + c) * n + d];
                counts[i] += 1;
            }
        });
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Invariant(format!(
            "lag {} has no contributors inside the consecutive segment",
            i as i64 - lc
        )));
    }
    let averaged: Vec<Complex64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let values = (0..width)
        .map(|i| (averaged[i] + averaged[width - 1 - i].conj()) * 0.5)
        .collect();
    Ok(FoecaMeasurement {
        kind,
        lc: lc as usize,
        values,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaEstimate {
    /// Sorted estimates; fewer than requested when the spectrum has too few peaks.
    pub angles_deg: Vec<f64>,
    /// `(grid angle, pseudo-spectrum)` pairs.
    pub spectrum: Vec<(f64, f64)>,
    pub requested: usize,
}

impl DoaEstimate {
    pub fn resolved(&self) -> bool {
        self.angles_deg.len() == self.requested
    }
}

pub const DEFAULT_GRID_STEP_DEG: f64 = 0.05;

/// Spatial-smoothing MUSIC on the virtual ULA `[-Lc, Lc]` with subarrays of length `Lc + 1`.
pub fn ss_music(meas: &FoecaMeasurement, d: usize, grid_step_deg: f64) -> Result<DoaEstimate> {
    if d == 0 {
        return Err(Error::param("need at least one source"));
    }
    if !(grid_step_deg > 0.0 && grid_step_deg.is_finite()) {
        return Err(Error::param(format!(
            "grid step must be positive, got {grid_step_deg}"
        )));
    }
    if d > meas.lc {
        return Err(Error::OverCapacity {
            requested: d,
            capacity: meas.lc,
        });
    }
    let m = meas.lc + 1;
    let mut r = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        let z = &meas.values[i..i + m];
        for p in 0..m {
            for q in 0..m {
                r[(p, q)] += z[p] * z[q].conj();
            }
        }
    }
    r.scale_mut(1.0 / m as f64);

    let eig = r.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let weakest_signal = eig.eigenvalues[order[d - 1]];
    if largest.is_nan() || largest <= 0.0 || weakest_signal <= largest * 1e-13 {
        return Err(Error::EstimationFailure(format!(
            "smoothed covariance has rank below {d}"
        )));
    }
    let signal = DMatrix::from_columns(
        &order[..d]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let signal_h = signal.adjoint();

    let steps = (180.0 / grid_step_deg).floor() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| -90.0 + i as f64 * grid_step_deg)
        .collect();
    let mut a = DVector::<Complex64>::zeros(m);
    let spectrum: Vec<(f64, f64)> = grid
        .iter()
        .map(|&theta| {
            let u = PI * theta.to_radians().sin();
            for (k, v) in a.iter_mut().enumerate() {
                *v = Complex64::from_polar(1.0, u * k as f64);
            }
            let proj = (&signal_h * &a).norm_squared();
            (theta, 1.0 / (m as f64 - proj).max(1e-12))
        })
        .collect();

    let mut peaks: Vec<usize> = (1..spectrum.len().saturating_sub(1))
        .filter(|&i| spectrum[i].1 >= spectrum[i - 1].1 && spectrum[i].1 > spectrum[i + 1].1)
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].1.total_cmp(&spectrum[a].1));
    peaks.truncate(d);
    let mut angles: Vec<f64> = peaks
        .iter()
        .map(|&i| {
            let (y0, y1, y2) = (
                spectrum[i - 1].1.ln(),
                spectrum[i].1.ln(),
                spectrum[i + 1].1.ln(),
            );
            let curvature = y0 - 2.0 * y1 + y2;
            let offset = if curvature < 0.0 {
                0.5 * (y0 - y2) / curvature
            } else {
                0.0
            };
            spectrum[i].0 + offset * grid_step_deg
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(DoaEstimate {
        angles_deg: angles,
        spectrum,
        requested: d,
    })
}

/// Cumulants, assembly over `cases` and SS-MUSIC in one call.
pub fn estimate_doa(
    x: &SnapshotMatrix,
    cases: &[FocaCase],
    d: usize,
    grid_step_deg: f64,
) -> Result<DoaEstimate> {
    let bank = sample_cumulants(x)?;
    let meas = assemble_cases(&bank, &x.array, cases)?;
    ss_music(&meas, d, grid_step_deg)
}

/// Pairs each truth with an estimate by greedy nearest-angle assignment.
///
/// Returns `(estimate, truth)` in truth order. Truths left over when there are
/// fewer estimates than truths take their nearest estimate.
pub fn match_to_truth(estimates: &[f64], truths: &[f64]) -> Result<Vec<(f64, f64)>> {
    if estimates.is_empty() {
        return Err(Error::EstimationFailure("no estimates to match".into()));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(estimates.len() * truths.len());
    for (ti, t) in truths.iter().enumerate() {
        for (ei, e) in estimates.iter().enumerate() {
            pairs.push(((e - t).abs(), ti, ei));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned: Vec<Option<usize>> = vec![None; truths.len()];
    let mut used = vec![false; estimates.len()];
    for (_, ti, ei) in pairs {
        if assigned[ti].is_none() && !used[ei] {
            assigned[ti] = Some(ei);
            used[ei] = true;
        }
    }
    Ok(truths
        .iter()
        .zip(assigned)
        .map(|(&t, a)| {
            let e = a.map(|i| estimates[i]).unwrap_or_else(|| {
                *estimates
                    .iter()
                    .min_by(|x, y| (*x - t).abs().total_cmp(&(*y - t).abs()))
                    .expect("non-empty")
            });
            (e, t)
        })
        .collect())
}

/// `sqrt(mean((estimate - truth)^2))` over all matched pairs of all trials, in degrees.
pub fn rmse(trials: &[Vec<(f64, f64)>]) -> Result<f64> {
    let total: usize = trials.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::InsufficientData("no trials to score".into()));
    }
    let sum: f64 = trials.iter().flatten().map(|(e, t)| (e - t).powi(2)).sum();
    Ok((sum / total as f64).sqrt())
}
