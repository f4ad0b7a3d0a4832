//! Delimited-text result tables: per-cell detection rows, pairwise posterior
//! rows, and plot-ready aggregate series. Round-trips are lossless — absent
//! rates stay absent (empty fields), and floats reparse bit-for-bit.

use crate::bayes::SweepPoint;
use crate::detect::{aggregate, aggregate_by_category, FaultCategory, RunRate};
use crate::error::{Error, Result};
use crate::model::Variant;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Training-size regime label; boundaries at 10⁴ and 10⁵ training samples.
#[must_use]
pub fn regime(n_train: usize) -> &'static str {
    if n_train < 10_000 {
        "data_scarce"
    } else if n_train < 100_000 {
        "intermediate"
    } else {
        "data_rich"
    }
}

/// One detection result: a (variant, size, seed, fault) cell's rates with
/// its alarm counts pooled over that cell's test runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub variant: Variant,
    pub size: usize,
    pub seed: u64,
    pub fault: u8,
    pub fdr: Option<f64>,
    pub far: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

/// One pairwise-posterior entry; probabilities are absent for sizes where
/// either side of the pair has no detection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub pair: String,
    pub n_train: usize,
    pub p_left: Option<f64>,
    pub p_rope: Option<f64>,
    pub p_right: Option<f64>,
}

/// One per-fault aggregate row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultTableRow {
    pub variant: Variant,
    pub size: usize,
    pub regime: String,
    pub fault: u8,
    pub category: String,
    pub fdr_mean: Option<f64>,
    pub fdr_ci: Option<f64>,
    pub far_mean: Option<f64>,
    pub far_ci: Option<f64>,
    pub n_seeds: usize,
}

/// One plot-ready point: variant × training size × fault category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub variant: Variant,
    pub size: usize,
    pub regime: String,
    pub category: String,
    pub fdr_mean: Option<f64>,
    pub fdr_ci: Option<f64>,
    pub far_mean: Option<f64>,
    pub far_ci: Option<f64>,
    pub n_seeds: usize,
}

/// Writes rows as headed CSV.
pub fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Reads rows written by [`write_rows`].
pub fn read_rows<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

/// Detection rows as aggregation inputs.
#[must_use]
pub fn run_rates(rows: &[DetectionRow]) -> Vec<RunRate> {
    rows.iter()
        .map(|r| RunRate { fault_id: r.fault, seed: r.seed, fdr: r.fdr, far: r.far })
        .collect()
}

/// Labels a sweep's posterior points with their pair name.
#[must_use]
pub fn posterior_rows(pair: &str, points: &[SweepPoint]) -> Vec<PosteriorRow> {
    points
        .iter()
        .map(|p| PosteriorRow {
            pair: pair.to_string(),
            n_train: p.n_train,
            p_left: p.posterior.map(|s| s.p_left),
            p_rope: p.posterior.map(|s| s.p_rope),
            p_right: p.posterior.map(|s| s.p_right),
        })
        .collect()
}

/// Groups detection rows by (variant, size), preserving report order.
fn grouped(rows: &[DetectionRow]) -> BTreeMap<(usize, usize), Vec<&DetectionRow>> {
    let mut groups: BTreeMap<(usize, usize), Vec<&DetectionRow>> = BTreeMap::new();
    for row in rows {
        let rank = Variant::ALL
            .iter()
            .position(|v| *v == row.variant)
            .expect("variant in canonical list");
        groups.entry((rank, row.size)).or_default().push(row);
    }
    groups
}

/// Per-fault summary table over every (variant, size) group in the rows.
pub fn fault_table(rows: &[DetectionRow]) -> Result<Vec<FaultTableRow>> {
    let mut out = Vec::new();
    for ((rank, size), group) in grouped(rows) {
        let rates: Vec<RunRate> = group
            .iter()
            .map(|r| RunRate { fault_id: r.fault, seed: r.seed, fdr: r.fdr, far: r.far })
            .collect();
        for s in aggregate(&rates)? {
            out.push(FaultTableRow {
                variant: Variant::ALL[rank],
                size,
                regime: regime(size).to_string(),
                fault: s.fault_id,
                category: s
                    .category
                    .map_or_else(|| "normal".to_string(), |c| c.name().to_string()),
                fdr_mean: s.fdr_mean,
                fdr_ci: s.fdr_ci,
                far_mean: s.far_mean,
                far_ci: s.far_ci,
                n_seeds: s.n_seeds,
            });
        }
    }
    Ok(out)
}

/// Category-mean series over every (variant, size) group — the plot-ready
/// profiles of detection rate against training-set size.
pub fn category_series(rows: &[DetectionRow]) -> Result<Vec<SeriesRow>> {
    let mut out = Vec::new();
    for ((rank, size), group) in grouped(rows) {
        let rates: Vec<RunRate> = group
            .iter()
            .filter(|r| FaultCategory::of_fault(r.fault).is_some())
            .map(|r| RunRate { fault_id: r.fault, seed: r.seed, fdr: r.fdr, far: r.far })
            .collect();
        if rates.is_empty() {
            continue;
        }
        for s in aggregate_by_category(&rates)? {
            out.push(SeriesRow {
                variant: Variant::ALL[rank],
                size,
                regime: regime(size).to_string(),
                category: s.category.name().to_string(),
                fdr_mean: s.fdr_mean,
                fdr_ci: s.fdr_ci,
                far_mean: s.far_mean,
                far_ci: s.far_ci,
                n_seeds: s.n_seeds,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::PosteriorSummary;
    use approx::assert_abs_diff_eq;

    fn sample_rows() -> Vec<DetectionRow> {
        vec![
            DetectionRow {
                variant: Variant::Oae,
                size: 625,
                seed: 0,
                fault: 6,
                fdr: Some(0.1 + 0.2), // deliberately non-representable sum
                far: Some(1.0 / 3.0),
                tp: 240,
                fp: 5,
                fn_: 560,
                tn: 155,
            },
            DetectionRow {
                variant: Variant::WavKan,
                size: 180_000,
                seed: 3,
                fault: 0,
                fdr: None,
                far: Some(0.04),
                tp: 0,
                fp: 4,
                fn_: 0,
                tn: 96,
            },
            DetectionRow {
                variant: Variant::FastKan,
                size: 13_750,
                seed: 1,
                fault: 21,
                fdr: Some(1e-17),
                far: None,
                tp: 1,
                fp: 0,
                fn_: 799,
                tn: 0,
            },
        ]
    }

    #[test]
    fn detection_rows_round_trip_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("detections.csv");
        let rows = sample_rows();
        write_rows(&path, &rows).unwrap();
        let back: Vec<DetectionRow> = read_rows(&path).unwrap();
        assert_eq!(back, rows);

        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "variant,size,seed,fault,fdr,far,tp,fp,fn,tn");
        // Absent rates appear as empty fields, not zeros.
        assert!(text.lines().nth(2).unwrap().contains(",,0.04"));
    }

    #[test]
    fn posterior_rows_round_trip_with_absent_cells() {
        let points = vec![
            SweepPoint {
                n_train: 625,
                posterior: Some(PosteriorSummary { p_left: 0.2, p_rope: 0.5, p_right: 0.3 }),
            },
            SweepPoint { n_train: 1250, posterior: None },
        ];
        let rows = posterior_rows("oae:wavkan", &points);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].pair, "oae:wavkan");
        assert_eq!(rows[1].p_rope, None);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posterior.csv");
        write_rows(&path, &rows).unwrap();
        let back: Vec<PosteriorRow> = read_rows(&path).unwrap();
        assert_eq!(back, rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "pair,n_train,p_left,p_rope,p_right");
    }

    #[test]
    fn regime_boundaries_sit_at_powers_of_ten() {
        assert_eq!(regime(625), "data_scarce");
        assert_eq!(regime(9_999), "data_scarce");
        assert_eq!(regime(10_000), "intermediate");
        assert_eq!(regime(99_999), "intermediate");
        assert_eq!(regime(100_000), "data_rich");
        assert_eq!(regime(250_000), "data_rich");
    }

    #[test]
    fn fault_table_aggregates_each_group() {
        let mut rows = Vec::new();
        for variant in [Variant::Oae, Variant::FastKan] {
            for seed in 0..2u64 {
                for (fault, fdr) in [(3u8, 0.4), (9, 0.6), (5, 0.9)] {
                    rows.push(DetectionRow {
                        variant,
                        size: 625,
                        seed,
                        fault,
                        fdr: Some(fdr + seed as f64 * 0.1),
                        far: Some(0.05),
                        tp: 10,
                        fp: 1,
                        fn_: 10,
                        tn: 19,
                    });
                }
            }
        }
        let table = fault_table(&rows).unwrap();
        assert_eq!(table.len(), 2 * 3, "2 variants x 3 faults");
        let oae_f3 = table
            .iter()
            .find(|r| r.variant == Variant::Oae && r.fault == 3)
            .unwrap();
        assert_abs_diff_eq!(oae_f3.fdr_mean.unwrap(), 0.45, epsilon = 1e-12);
        assert_eq!(oae_f3.category, "controllable");
        assert_eq!(oae_f3.n_seeds, 2);
        assert_eq!(oae_f3.regime, "data_scarce");
    }

    #[test]
    fn category_series_averages_faults_before_seeds() {
        let mut rows = Vec::new();
        for (fault, fdr) in [(3u8, 0.2), (9, 0.4), (5, 0.9), (0, 0.0)] {
            rows.push(DetectionRow {
                variant: Variant::WavKan,
                size: 23_125,
                seed: 0,
                fault,
                fdr: if fault == 0 { None } else { Some(fdr) },
                far: Some(0.05),
                tp: 0,
                fp: 0,
                fn_: 0,
                tn: 0,
            });
        }
        let series = category_series(&rows).unwrap();
        // Fault 0 (normal) is excluded; categories present: controllable, back_to_control.
        assert_eq!(series.len(), 2);
        let controllable = series.iter().find(|s| s.category == "controllable").unwrap();
        assert_abs_diff_eq!(controllable.fdr_mean.unwrap(), 0.3, epsilon = 1e-12);
        assert_eq!(controllable.regime, "intermediate");
        let btc = series.iter().find(|s| s.category == "back_to_control").unwrap();
        assert_abs_diff_eq!(btc.fdr_mean.unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn variant_names_serialize_as_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_rows(&path, &sample_rows()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("oae,625"));
        assert!(text.contains("wavkan,180000"));
        assert!(text.contains("fastkan,13750"));
    }
}
