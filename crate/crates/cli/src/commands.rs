//! Deterministic commands: design, coarray, dof-table and coupling-table.

use fogna::coarray::{
    analyze_segment, diff_coarray, foca, foeca, sum_coarray, CoarrayKind, FocaCase, LagMultiset,
    SegmentReport,
};
use fogna::coupling::{array_leakage, published_fogna_leakage, CouplingModel};
use fogna::geometry::{
    build_fogna, competitor_dof, published_dof, ArrayFamily, FognaParams, SensorArray,
    PUBLISHED_DOF,
};
use fogna::optimizer::{optimize, TraceRow};
use serde::Serialize;

use crate::{CliError, CliResult};

fn split_label(split: &[usize]) -> String {
    let parts: Vec<String> = split.iter().map(usize::to_string).collect();
    format!("({})", parts.join(","))
}

fn check_sensor_count(n: usize) -> CliResult<()> {
    if n < 4 {
        return Err(CliError::Usage(format!(
            "FOGNA needs at least 4 sensors, got {n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub sensors: usize,
    pub params: FognaParams,
    pub positions: Vec<i64>,
    pub dof: u64,
    pub measured_dof: u64,
    pub aperture: i64,
    pub trace: Vec<TraceRow>,
}

impl DesignReport {
    pub fn summary(&self) -> String {
        let p = &self.params;
        format!(
            "N = {}\nsplit (N1,N2,N3) = ({},{},{})\n(M1,M2) = ({},{})\n(E1,E2) = ({},{})\npositions = {}\nDOF = {}\nmeasured FOECA DOF = {}\naperture = {}\n",
            self.sensors,
            p.n1,
            p.n2,
            p.n3,
            p.m1,
            p.m2,
            p.e1,
            p.e2,
            SensorArray::from_positions(self.positions.iter().copied())
                .map(|a| a.to_string())
                .unwrap_or_default(),
            self.dof,
            self.measured_dof,
            self.aperture
        )
    }
}

pub fn design(n: usize) -> CliResult<DesignReport> {
    check_sensor_count(n)?;
    let result = optimize(n)?;
    let array = build_fogna(&result.best_params)?;
    let measured = analyze_segment(&foeca(&array))?;
    Ok(DesignReport {
        sensors: n,
        params: result.best_params,
        positions: array.positions().to_vec(),
        dof: result.dof_star,
        measured_dof: measured.dof,
        aperture: array.aperture(),
        trace: result.trace,
    })
}

/// FOGNA layout for `n` sensors at the optimizer's split.
pub fn fogna_array(n: usize) -> CliResult<SensorArray> {
    check_sensor_count(n)?;
    Ok(build_fogna(&optimize(n)?.best_params)?)
}

/// Parses `0,1,5,8` or `{0, 1, 5, 8}`.
pub fn parse_positions(text: &str) -> CliResult<SensorArray> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let values: Vec<i64> = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<i64>()
                .map_err(|_| CliError::Usage(format!("bad sensor position `{s}` in `{text}`")))
        })
        .collect::<CliResult<_>>()?;
    if values.is_empty() {
        return Err(CliError::Usage(format!("no sensor positions in `{text}`")));
    }
    SensorArray::from_positions(values).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_split(text: &str) -> CliResult<FognaParams> {
    let parts: Vec<usize> = text
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad split `{text}`")))
        })
        .collect::<CliResult<_>>()?;
    let [n1, n2, n3] = parts[..] else {
        return Err(CliError::Usage(format!(
            "split needs three counts, got `{text}`"
        )));
    };
    FognaParams::new(n1, n2, n3).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_kind(text: &str) -> CliResult<CoarrayKind> {
    Ok(match text.trim().to_ascii_lowercase().as_str() {
        "sca" => CoarrayKind::Sca,
        "dca" => CoarrayKind::Dca,
        "foca1" => CoarrayKind::Foca1,
        "foca2" | "fodca" => CoarrayKind::Foca2,
        "foca3" => CoarrayKind::Foca3,
        "foeca" => CoarrayKind::Foeca,
        other => {
            return Err(CliError::Usage(format!(
                "unknown co-array `{other}` (sca, dca, foca1, foca2, foca3, foeca)"
            )))
        }
    })
}

pub fn build_coarray(array: &SensorArray, kind: CoarrayKind) -> LagMultiset {
    match kind {
        CoarrayKind::Sca => sum_coarray(array),
        CoarrayKind::Dca => diff_coarray(array),
        CoarrayKind::Foca1 => foca(array, FocaCase::One),
        CoarrayKind::Foca2 => foca(array, FocaCase::Two),
        CoarrayKind::Foca3 => foca(array, FocaCase::Three),
        CoarrayKind::Foeca => foeca(array),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarrayEntry {
    pub kind: CoarrayKind,
    pub distinct_lags: usize,
    pub total: u64,
    /// Absent for sum co-arrays, which need not contain lag 0.
    pub report: Option<SegmentReport>,
    pub positive_holes: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<std::collections::BTreeMap<i64, u64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarrayReport {
    pub positions: Vec<i64>,
    pub coarrays: Vec<CoarrayEntry>,
}

pub fn coarray_report(
    array: &SensorArray,
    kinds: &[CoarrayKind],
    with_entries: bool,
) -> CliResult<CoarrayReport> {
    let coarrays = kinds
        .iter()
        .map(|&kind| {
            let set = build_coarray(array, kind);
            let report = analyze_segment(&set).ok();
            let positive_holes = report
                .as_ref()
                .map(|r| r.holes.iter().copied().filter(|&h| h > 0).collect())
                .unwrap_or_default();
            CoarrayEntry {
                kind,
                distinct_lags: set.entries().len(),
                total: set.total(),
                report,
                positive_holes,
                multiplicities: with_entries.then(|| set.entries().clone()),
            }
        })
        .collect();
    Ok(CoarrayReport {
        positions: array.positions().to_vec(),
        coarrays,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofRow {
    pub family: String,
    pub split: String,
    pub sensors: usize,
    /// Closed form at the split; empty for families known only from the published table.
    pub closed_form_dof: Option<i64>,
    pub published_dof: Option<i64>,
    /// Brute-force consecutive FOECA lags; FOGNA rows only.
    pub measured_dof: Option<u64>,
}

fn fogna_dof_row(n: usize) -> CliResult<DofRow> {
    check_sensor_count(n)?;
    let r = optimize(n)?;
    let p = r.best_params;
    let split = [p.n1, p.n2, p.n3];
    let measured = analyze_segment(&foeca(&build_fogna(&p)?))?.dof;
    Ok(DofRow {
        family: ArrayFamily::Fogna.label().into(),
        split: split_label(&split),
        sensors: n,
        closed_form_dof: Some(r.dof_star as i64),
        published_dof: published_dof(ArrayFamily::Fogna, &split).map(|row| row.dof),
        measured_dof: Some(measured),
    })
}

/// Rows for every requested `N`, plus the published competitor rows at that `N`.
/// Failing `N` are returned separately.
pub fn dof_table(ns: &[usize]) -> (Vec<DofRow>, Vec<(usize, CliError)>) {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for &n in ns {
        for row in PUBLISHED_DOF
            .iter()
            .filter(|r| r.sensors == n && r.family != ArrayFamily::Fogna)
        {
            let closed = match row.family {
                ArrayFamily::FoFractalNa | ArrayFamily::SdFodcNa => None,
                family => competitor_dof(family, row.split).ok(),
            };
            rows.push(DofRow {
                family: row.family.label().into(),
                split: split_label(row.split),
                sensors: n,
                closed_form_dof: closed,
                published_dof: Some(row.dof),
                measured_dof: None,
            });
        }
        match fogna_dof_row(n) {
            Ok(row) => rows.push(row),
            Err(e) => failed.push((n, e)),
        }
    }
    (rows, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRow {
    pub sensors: usize,
    pub split: String,
    pub m1: usize,
    pub leakage: f64,
    pub published_leakage: Option<f64>,
    pub printed_split: Option<String>,
    pub printed_split_leakage: Option<f64>,
}

pub fn coupling_row(n: usize, model: &CouplingModel) -> CliResult<CouplingRow> {
    check_sensor_count(n)?;
    let p = optimize(n)?.best_params;
    let leakage = array_leakage(&build_fogna(&p)?, model)?;
    let published = published_fogna_leakage(n);
    let printed_split_leakage = match published {
        Some(row) => {
            let (a, b, c) = row.printed_split;
            Some(array_leakage(
                &build_fogna(&FognaParams::new(a, b, c)?)?,
                model,
            )?)
        }
        None => None,
    };
    Ok(CouplingRow {
        sensors: n,
        split: split_label(&[p.n1, p.n2, p.n3]),
        m1: p.m1,
        leakage,
        published_leakage: published.map(|r| r.leakage),
        printed_split: published.map(|r| {
            let (a, b, c) = r.printed_split;
            split_label(&[a, b, c])
        }),
        printed_split_leakage,
    })
}

pub fn coupling_table(
    ns: &[usize],
    model: &CouplingModel,
) -> (Vec<CouplingRow>, Vec<(usize, CliError)>) {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for &n in ns {
        match coupling_row(n, model) {
            Ok(r) => rows.push(r),
            Err(e) => failed.push((n, e)),
        }
    }
    (rows, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_eleven() {
        let d = design(11).unwrap();
        assert_eq!((d.params.n1, d.params.n2, d.params.n3), (5, 3, 3));
        assert_eq!(d.dof, 715);
        assert_eq!(d.positions.last(), Some(&306));
        assert!(d.summary().contains("DOF = 715"));
        assert!(matches!(design(3), Err(CliError::Usage(_))));
    }

    #[test]
    fn position_parsing() {
        assert_eq!(
            parse_positions("{0, 1, 5, 8}").unwrap().positions(),
            &[0, 1, 5, 8]
        );
        assert_eq!(parse_positions("3,4").unwrap().positions(), &[0, 1]);
        assert!(parse_positions("0,x").is_err());
        assert!(parse_positions("{}").is_err());
        assert!(parse_positions("1,1").is_err());
        assert!(parse_split("(5,3,3)").is_ok());
        assert!(parse_split("5,3").is_err());
        assert!(parse_kind("FOECA").is_ok());
        assert!(parse_kind("x").is_err());
    }

    #[test]
    fn dca_of_single_sensor() {
        let r = coarray_report(&parse_positions("0").unwrap(), &[CoarrayKind::Dca], true).unwrap();
        let e = &r.coarrays[0];
        assert_eq!(
            e.multiplicities
                .as_ref()
                .unwrap()
                .keys()
                .copied()
                .collect::<Vec<_>>(),
            vec![0]
        );
        assert_eq!(e.report.as_ref().unwrap().dof, 1);
    }

    #[test]
    fn dof_table_rows() {
        let (rows, failed) = dof_table(&[9, 3]);
        assert_eq!(rows.len(), 5);
        assert_eq!(failed.len(), 1);
        let fogna = rows.iter().find(|r| r.family == "FOGNA").unwrap();
        assert_eq!(fogna.closed_form_dof, Some(381));
        assert_eq!(fogna.published_dof, Some(381));
        assert_eq!(fogna.measured_dof, Some(409));
        let fl = rows.iter().find(|r| r.family == "FL-NA").unwrap();
        assert_eq!(fl.closed_form_dof, Some(217));
    }

    #[test]
    fn coupling_rows() {
        let (rows, failed) = coupling_table(&[11, 12], &CouplingModel::default());
        assert!(failed.is_empty());
        assert!((rows[0].leakage - 0.2137).abs() < 5e-5);
        assert_eq!(rows[0].published_leakage, Some(0.2137));
        assert_eq!(rows[1].published_leakage, None);
    }
}
