//! Multi-step evaluation: overall and per-step MSE/MAE, percentage
//! improvement against a baseline, comparison tables and step curves.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Normalizer, WindowedDataset};
use crate::error::{Error, Result};
use crate::strategies::Forecaster;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_tag: String,
    pub overall_mse: f64,
    pub overall_mae: f64,
    pub per_step_mse: Vec<f64>,
    pub per_step_mae: Vec<f64>,
    pub num_samples: usize,
    pub denormalized: bool,
}

impl MetricsReport {
    pub fn horizon(&self) -> usize {
        self.per_step_mse.len()
    }
}

/// Evaluates a forecaster on every row of `test` over `test.q()` steps.
///
/// Errors are computed in the dataset's units unless a normalizer is given,
/// in which case predictions and targets are mapped back first.
pub fn evaluate<F: Forecaster + ?Sized>(
    model_tag: &str,
    model: &F,
    test: &WindowedDataset,
    normalizer: Option<&Normalizer>,
) -> Result<MetricsReport> {
    if model.history_len() != test.p() {
        return Err(Error::config(format!(
            "model expects histories of length {}, test data has p = {}",
            model.history_len(),
            test.p()
        )));
    }
    let horizon = test.q();
    evaluate_fn(model_tag, test, normalizer, |h| model.forecast(h, horizon))
}

/// Like [`evaluate`] with an arbitrary prediction closure.
pub fn evaluate_fn<P>(
    model_tag: &str,
    test: &WindowedDataset,
    normalizer: Option<&Normalizer>,
    mut predict: P,
) -> Result<MetricsReport>
where
    P: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if test.is_empty() {
        return Err(Error::config("cannot evaluate on an empty test set"));
    }
    let h = test.q();
    let mut sq = vec![0.0; h];
    let mut abs = vec![0.0; h];
    for (history, future) in test.rows() {
        let pred = predict(history)?;
        if pred.len() != h {
            return Err(Error::config(format!(
                "predictor returned {} steps, test data has q = {h}",
                pred.len()
            )));
        }
        for (k, (&y_hat, &y)) in pred.iter().zip(future).enumerate() {
            let (y_hat, y) = match normalizer {
                Some(n) => (n.invert_one(y_hat), n.invert_one(y)),
                None => (y_hat, y),
            };
            let e = y_hat - y;
            sq[k] += e * e;
            abs[k] += e.abs();
        }
    }
    let n = test.len() as f64;
    let per_step_mse: Vec<f64> = sq.iter().map(|s| s / n).collect();
    let per_step_mae: Vec<f64> = abs.iter().map(|s| s / n).collect();
    if per_step_mse.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{model_tag}: non-finite evaluation error")));
    }
    Ok(MetricsReport {
        model_tag: model_tag.to_string(),
        overall_mse: per_step_mse.iter().sum::<f64>() / h as f64,
        overall_mae: per_step_mae.iter().sum::<f64>() / h as f64,
        per_step_mse,
        per_step_mae,
        num_samples: test.len(),
        denormalized: normalizer.is_some(),
    })
}

/// `100 * (baseline - candidate) / baseline`; negative when the candidate
/// is worse.
pub fn percent_improvement(baseline: f64, candidate: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::Domain(format!(
            "baseline error must be positive, got {baseline}"
        )));
    }
    Ok(100.0 * (baseline - candidate) / baseline)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model_tag: String,
    pub mse: f64,
    /// `None` on the baseline row.
    pub mse_improvement_pct: Option<f64>,
    pub mae: f64,
    pub mae_improvement_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline_tag: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn build_comparison(reports: &[MetricsReport], baseline_tag: &str) -> Result<ComparisonTable> {
    let base = reports
        .iter()
        .find(|r| r.model_tag == baseline_tag)
        .ok_or_else(|| {
            let known: Vec<&str> = reports.iter().map(|r| r.model_tag.as_str()).collect();
            Error::config(format!(
                "baseline tag `{baseline_tag}` not among reports {known:?}"
            ))
        })?;
    let rows = reports
        .iter()
        .map(|r| {
            let is_base = r.model_tag == baseline_tag;
            let imp = |b: f64, c: f64| -> Result<Option<f64>> {
                if is_base {
                    Ok(None)
                } else {
                    percent_improvement(b, c).map(Some)
                }
            };
            Ok(ComparisonRow {
                model_tag: r.model_tag.clone(),
                mse: r.overall_mse,
                mse_improvement_pct: imp(base.overall_mse, r.overall_mse)?,
                mae: r.overall_mae,
                mae_improvement_pct: imp(base.overall_mae, r.overall_mae)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable {
        baseline_tag: baseline_tag.to_string(),
        rows,
    })
}

impl ComparisonTable {
    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let header = ["Models", "MSE", "% Improv.", "MAE", "% Improv."];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.model_tag.clone(),
                    format!("{:.4}", r.mse),
                    pct(r.mse_improvement_pct),
                    format!("{:.4}", r.mae),
                    pct(r.mae_improvement_pct),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let mut parts = Vec::with_capacity(cells.len());
            for (i, c) in cells.iter().enumerate() {
                parts.push(if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                });
            }
            let _ = writeln!(out, "{}", parts.join(" | "));
        };
        line(&mut out, &header);
        let rule: usize = widths.iter().sum::<usize>() + 3 * (widths.len() - 1);
        let _ = writeln!(out, "{}", "-".repeat(rule));
        for row in &body {
            let cells: Vec<&str> = row.iter().map(String::as_str).collect();
            line(&mut out, &cells);
        }
        out
    }
}

/// Writes `model_tag,step,mse,mae` rows, one per model and step.
pub fn export_step_curves(reports: &[MetricsReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model_tag", "step", "mse", "mae"])?;
    for r in reports {
        for (k, (mse, mae)) in r.per_step_mse.iter().zip(&r.per_step_mae).enumerate() {
            w.write_record([
                r.model_tag.clone(),
                (k + 1).to_string(),
                mse.to_string(),
                mae.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-model step curves read back from [`export_step_curves`] output, in
/// file order.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCurve {
    pub model_tag: String,
    pub mse: Vec<f64>,
    pub mae: Vec<f64>,
}

pub fn read_step_curves(path: impl AsRef<Path>) -> Result<Vec<StepCurve>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let mut curves: Vec<StepCurve> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Shape(format!("bad step-curve {what}: {:?}", rec));
        let tag = rec.get(0).ok_or_else(|| bad("row"))?;
        let mse: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("mse"))?;
        let mae: f64 = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("mae"))?;
        match curves.last_mut() {
            Some(c) if c.model_tag == tag => {
                c.mse.push(mse);
                c.mae.push(mae);
            }
            _ => curves.push(StepCurve {
                model_tag: tag.to_string(),
                mse: vec![mse],
                mae: vec![mae],
            }),
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_sample() -> WindowedDataset {
        WindowedDataset::from_rows(1, 2, [(&[0.5][..], &[0.0, 1.0][..])]).unwrap()
    }

    #[test]
    fn hand_computed_single_sample() {
        let r = evaluate_fn("m", &one_sample(), None, |_| Ok(vec![1.0, 3.0])).unwrap();
        assert_eq!(r.per_step_mse, vec![1.0, 4.0]);
        assert_eq!(r.overall_mse, 2.5);
        assert_eq!(r.per_step_mae, vec![1.0, 2.0]);
        assert_eq!(r.overall_mae, 1.5);
    }

    #[test]
    fn perfect_predictor_scores_zero() {
        let r = evaluate_fn("m", &one_sample(), None, |_| Ok(vec![0.0, 1.0])).unwrap();
        assert_eq!((r.overall_mse, r.overall_mae), (0.0, 0.0));
    }

    #[test]
    fn denormalized_errors_scale() {
        let n = Normalizer { min: 0.0, max: 10.0 };
        let r = evaluate_fn("m", &one_sample(), Some(&n), |_| Ok(vec![1.0, 3.0])).unwrap();
        assert!((r.overall_mse - 250.0).abs() < 1e-9);
        assert!(r.denormalized);
    }

    #[test]
    fn wrong_horizon_rejected() {
        let e = evaluate_fn("m", &one_sample(), None, |_| Ok(vec![1.0])).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn percent_improvement_cases() {
        assert_eq!(percent_improvement(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(percent_improvement(2.0, 3.0).unwrap(), -50.0);
        let mae = percent_improvement(0.0781, 0.0563).unwrap();
        assert!((mae - 27.913).abs() < 1e-3);
        assert!(percent_improvement(0.0, 1.0).is_err());
    }

    fn report(tag: &str, mse: f64, mae: f64) -> MetricsReport {
        MetricsReport {
            model_tag: tag.into(),
            overall_mse: mse,
            overall_mae: mae,
            per_step_mse: vec![mse; 8],
            per_step_mae: vec![mae; 8],
            num_samples: 10,
            denormalized: false,
        }
    }

    #[test]
    fn comparison_against_table_values() {
        let reports = [
            report("Recursive", 0.0101, 0.0781),
            report("DaD", 0.0092, 0.0627),
            report("C-DaD", 0.0078, 0.0563),
        ];
        let t = build_comparison(&reports, "Recursive").unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0].mse_improvement_pct, None);
        assert!((t.rows[1].mse_improvement_pct.unwrap() - 8.91).abs() < 0.01);
        assert!((t.rows[2].mse_improvement_pct.unwrap() - 22.77).abs() < 0.01);
        let order: Vec<&str> = t.rows.iter().map(|r| r.model_tag.as_str()).collect();
        assert_eq!(order, ["Recursive", "DaD", "C-DaD"]);
        let text = t.render_text();
        assert!(text.lines().nth(2).unwrap().contains(" - "));
        assert!(build_comparison(&reports, "nope").is_err());
    }

    #[test]
    fn step_curves_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let mut a = report("a", 0.1, 0.2);
        a.per_step_mse = (0..8).map(|k| 1.0 / (k as f64 + 3.0)).collect();
        let b = report("b", 0.3, 0.4);
        export_step_curves(&[a.clone(), b.clone()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 17);
        let curves = read_step_curves(&path).unwrap();
        assert_eq!(curves[0].mse, a.per_step_mse);
        assert_eq!(curves[1].mae, b.per_step_mae);

        export_step_curves(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
    }
}
