//! Refinement tables and rate fitting.
use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Spatial,
    Temporal,
    PrefactorSpatial,
    PrefactorTemporal,
    Nonsymmetric,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Spatial => "spatial",
            StudyKind::Temporal => "temporal",
            StudyKind::PrefactorSpatial => "prefactor-spatial",
            StudyKind::PrefactorTemporal => "prefactor-temporal",
            StudyKind::Nonsymmetric => "nonsymmetric",
        }
    }

    /// Label of the refinement parameter column.
    pub fn param_label(&self) -> &'static str {
        match self {
            StudyKind::Spatial | StudyKind::Nonsymmetric => "h",
            StudyKind::Temporal => "tau",
            StudyKind::PrefactorSpatial | StudyKind::PrefactorTemporal => "t_N",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub param: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: StudyKind,
    pub case: String,
    pub alpha: f64,
    pub rows: Vec<ReportRow>,
    pub fitted_rate: Option<f64>,
    pub theoretical_rate: Option<f64>,
}

impl ExperimentReport {
    /// Sorts `(param, error)` pairs from coarse to fine (decreasing parameter)
    /// and fills in pairwise and fitted rates.
    pub fn new(
        kind: StudyKind,
        case: impl Into<String>,
        alpha: f64,
        mut points: Vec<(f64, f64)>,
        theoretical_rate: Option<f64>,
    ) -> Self {
        points.sort_by(|a, b| b.0.total_cmp(&a.0));
        let rates = pairwise_rates(&points);
        let rows = points
            .iter()
            .zip(rates)
            .map(|(&(param, error), rate)| ReportRow { param, error, rate })
            .collect();
        ExperimentReport {
            kind,
            case: case.into(),
            alpha,
            rows,
            fitted_rate: fit_rate(&points),
            theoretical_rate,
        }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    /// `param,error_l2,rate_pairwise` rows followed by `fitted_rate,<value>`
    /// and, when known, `theoretical_rate,<value>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,error_l2,rate_pairwise\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{:e},{}", row.param, row.error, fmt_rate(row.rate));
        }
        let _ = writeln!(out, "fitted_rate,{}", fmt_rate(self.fitted_rate));
        if let Some(t) = self.theoretical_rate {
            let _ = writeln!(out, "theoretical_rate,{t}");
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "**{}**, case ({}), alpha = {}\n\n| {} | L2 error | rate |\n|---|---|---|\n",
            self.kind.name(),
            self.case,
            self.alpha,
            self.kind.param_label()
        );
        for row in &self.rows {
            let _ = writeln!(out, "| {} | {:.3e} | {} |", row.param, row.error, fmt_rate(row.rate));
        }
        let theory = self
            .theoretical_rate
            .map(|t| format!(" ({t})"))
            .unwrap_or_default();
        let _ = writeln!(out, "\nfitted rate: {}{}", fmt_rate(self.fitted_rate), theory);
        out
    }
}

fn fmt_rate(rate: Option<f64>) -> String {
    rate.map(|r| format!("{r:.4}")).unwrap_or_default()
}

/// Least-squares slope of `ln(error)` against `ln(param)`. Positive when the
/// error shrinks with the parameter. `None` for fewer than two usable rows.
pub fn fit_rate(rows: &[(f64, f64)]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|&(p, e)| !(p > 0.0) || !(e > 0.0)) {
        return None;
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Rate between each row and its predecessor: `ln(e_{i-1}/e_i) / ln(p_{i-1}/p_i)`,
/// which reduces to `log2(e_{i-1}/e_i)` for dyadic refinement.
pub fn pairwise_rates(rows: &[(f64, f64)]) -> Vec<Option<f64>> {
    let mut rates = vec![None];
    for w in rows.windows(2) {
        let (p0, e0) = w[0];
        let (p1, e1) = w[1];
        let ok = p0 > 0.0 && p1 > 0.0 && e0 > 0.0 && e1 > 0.0 && p0 != p1;
        rates.push(ok.then(|| (e0 / e1).ln() / (p0 / p1).ln()));
    }
    rates.truncate(rows.len());
    rates
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_dyadic_rate() {
        assert!((fit_rate(&[(1.0, 1.0), (0.5, 0.25)]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn equal_errors_rate_zero() {
        let rows = [(1.0, 3e-4), (0.5, 3e-4), (0.25, 3e-4)];
        assert_eq!(fit_rate(&rows).unwrap(), 0.0);
    }

    #[test]
    fn table_row_rate() {
        // alpha = 0.25, case (a), M = 8..128
        let errs = [1.03e-3, 2.64e-4, 6.63e-5, 1.65e-5, 4.06e-6];
        let rows: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0, 128.0]
            .iter()
            .zip(errs)
            .map(|(m, e)| (1.0 / m, e))
            .collect();
        let r = fit_rate(&rows).unwrap();
        assert!((1.95..=2.10).contains(&r), "{r}");
    }

    #[test]
    fn undefined_rates() {
        assert_eq!(fit_rate(&[(0.1, 1.0)]), None);
        assert_eq!(fit_rate(&[]), None);
        assert_eq!(fit_rate(&[(0.1, 1.0), (0.05, 0.0)]), None);
        assert_eq!(pairwise_rates(&[(0.1, 1.0)]), vec![None]);
    }

    #[test]
    fn report_layout() {
        let rep = ExperimentReport::new(
            StudyKind::Spatial,
            "a",
            0.5,
            vec![(0.25, 1e-3), (0.5, 4e-3)],
            Some(2.0),
        );
        assert_eq!(rep.rows[0].param, 0.5);
        assert_eq!(rep.rows[0].rate, None);
        assert!((rep.rows[1].rate.unwrap() - 2.0).abs() < 1e-12);
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "param,error_l2,rate_pairwise");
        assert_eq!(lines[1], "0.5,4e-3,");
        assert_eq!(lines[2], "0.25,1e-3,2.0000");
        assert_eq!(lines[3], "fitted_rate,2.0000");
        assert_eq!(lines[4], "theoretical_rate,2");

        let single = ExperimentReport::new(StudyKind::Temporal, "a", 0.5, vec![(0.1, 1e-3)], None);
        assert!(single.to_csv().ends_with("fitted_rate,\n"));
        assert!(single.to_markdown().contains("| 0.1 | 1.000e-3 |  |"));
    }
}
