//! Delimited tables and plain-text summaries for CLI output. Scores are
//! printed as percentages with two decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use ppd_core::eval::{GridResult, MetricsReport};
use ppd_core::explain::Field;
use ppd_core::learners::{LearnerConfig, MaxFeatures};

pub const METRICS_HEADER: [&str; 13] = [
    "run",
    "accuracy",
    "auc",
    "precision_absent",
    "precision_present",
    "precision_macro",
    "recall_absent",
    "recall_present",
    "recall_macro",
    "f_absent",
    "f_present",
    "f_macro",
    "time_s",
];

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn metric_cells(run: &str, r: &MetricsReport) -> Vec<String> {
    vec![
        run.to_string(),
        pct(r.accuracy),
        pct(r.auc),
        pct(r.absent.precision),
        pct(r.present.precision),
        pct(r.macro_avg.precision),
        pct(r.absent.recall),
        pct(r.present.recall),
        pct(r.macro_avg.recall),
        pct(r.absent.f_measure),
        pct(r.present.f_measure),
        pct(r.macro_avg.f_measure),
        format!("{:.2}", r.runtime_seconds),
    ]
}

pub fn write_metrics_table<W: Write>(sink: W, rows: &[(String, MetricsReport)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(METRICS_HEADER)?;
    for (run, r) in rows {
        w.write_record(metric_cells(run, r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn metrics_summary(title: &str, r: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "  samples scored : {}", r.samples);
    let _ = writeln!(s, "  accuracy       : {}", pct(r.accuracy));
    let _ = writeln!(s, "  auc            : {}", pct(r.auc));
    let _ = writeln!(
        s,
        "  precision      : absent {}  present {}  macro {}",
        pct(r.absent.precision),
        pct(r.present.precision),
        pct(r.macro_avg.precision)
    );
    let _ = writeln!(
        s,
        "  recall         : absent {}  present {}  macro {}",
        pct(r.absent.recall),
        pct(r.present.recall),
        pct(r.macro_avg.recall)
    );
    let _ = writeln!(
        s,
        "  f-measure      : absent {}  present {}  macro {}",
        pct(r.absent.f_measure),
        pct(r.present.f_measure),
        pct(r.macro_avg.f_measure)
    );
    let _ = writeln!(s, "  time (s)       : {:.2}", r.runtime_seconds);
    s
}

/// `name=value` pairs using the grid axis names.
pub fn describe_config(c: &LearnerConfig) -> String {
    match *c {
        LearnerConfig::Gnb => "gnb".into(),
        LearnerConfig::Lr { l2, intercept_lr } => format!("l2={l2} intercept_lr={intercept_lr}"),
        LearnerConfig::Alma { alpha, b, c } => format!("alpha={alpha} B={b} C={c}"),
        LearnerConfig::Hatc {
            max_depth,
            tie_threshold,
            max_size,
        } => format!(
            "depth={} tie_threshold={tie_threshold} max_size={max_size}",
            max_depth.map_or("none".to_string(), |d| d.to_string())
        ),
        LearnerConfig::Arfc {
            n_models,
            features_per_split,
            lambda,
        } => format!(
            "models={n_models} features={} lambda={lambda}",
            match features_per_split {
                MaxFeatures::Sqrt => "sqrt".to_string(),
                MaxFeatures::Count(n) => n.to_string(),
            }
        ),
    }
}

pub fn write_grid_table<W: Write>(sink: W, grid: &GridResult) -> csv::Result<()> {
    let rows: Vec<(String, MetricsReport)> = grid
        .runs
        .iter()
        .map(|r| (describe_config(&r.config), r.report))
        .collect();
    write_metrics_table(sink, &rows)
}

pub fn grid_summary(grid: &GridResult) -> String {
    let best = grid.best_run();
    let mut s = format!("{} configurations evaluated\n", grid.runs.len());
    s.push_str(&metrics_summary(&format!("best: {}", describe_config(&best.config)), &best.report));
    s
}

/// How often each field appears in the relevant sets of found explanations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChangeFrequencies {
    pub eligible: usize,
    pub found: usize,
    pub counts: BTreeMap<Field, usize>,
}

impl ChangeFrequencies {
    pub fn add(&mut self, relevant: Option<&[Field]>) {
        self.eligible += 1;
        if let Some(fields) = relevant {
            self.found += 1;
            for f in fields {
                *self.counts.entry(*f).or_default() += 1;
            }
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} eligible samples, {} with a counterfactual\n",
            self.eligible, self.found
        );
        let mut rows: Vec<(&Field, &usize)> = self.counts.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        for (f, n) in rows {
            let share = if self.found == 0 { 0.0 } else { *n as f64 / self.found as f64 };
            let _ = writeln!(s, "  {:<45} {:>5}  {}%", f.title(), n, pct(share));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ppd_core::record::Topic;

    #[test]
    fn table_has_header_and_rows() {
        let mut buf = Vec::new();
        let r = MetricsReport {
            accuracy: 0.8005,
            ..Default::default()
        };
        write_metrics_table(&mut buf, &[("gnb".into(), r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), METRICS_HEADER.join(","));
        assert!(lines.next().unwrap().starts_with("gnb,80.05,"));
    }

    #[test]
    fn frequencies() {
        let mut f = ChangeFrequencies::default();
        f.add(Some(&[Field::Topic(Topic::TroubleSleeping)]));
        f.add(Some(&[Field::Topic(Topic::TroubleSleeping), Field::Age]));
        f.add(None);
        assert_eq!((f.eligible, f.found), (3, 2));
        assert_eq!(f.counts[&Field::Topic(Topic::TroubleSleeping)], 2);
        assert!(f.summary().lines().nth(1).unwrap().contains("Trouble sleeping"));
    }

    #[test]
    fn config_descriptions_use_axis_names() {
        assert_eq!(describe_config(&LearnerConfig::default_for(ppd_core::learners::LearnerKind::Alma)).split(' ').count(), 3);
        assert!(describe_config(&LearnerConfig::Gnb).starts_with("gnb"));
    }
}
