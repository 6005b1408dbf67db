use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use super::prequential::{replay, Clock, RunConfig};
use super::EvalError;
use crate::learners::{LearnerConfig, LearnerKind, MaxFeatures};
use crate::record::ScreeningRecord;

/// One hyperparameter and the values to try, as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<String>,
}

/// Cartesian grid over named hyperparameters; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub kind: LearnerKind,
    pub axes: Vec<GridAxis>,
}

fn axis(name: &str, values: &[&str]) -> GridAxis {
    GridAxis {
        name: name.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
    }
}

impl ParamGrid {
    /// The tuning ranges per learner. GNB is not tuned.
    pub fn default_for(kind: LearnerKind) -> Result<Self, EvalError> {
        let axes = match kind {
            LearnerKind::Gnb => return Err(EvalError::NoGrid(kind)),
            LearnerKind::Lr => vec![
                axis("l2", &["0.0", "0.1", "1.0"]),
                axis("intercept_lr", &["0.001", "0.01", "0.1"]),
            ],
            LearnerKind::Alma => vec![
                axis("alpha", &["0.5", "0.7", "0.9"]),
                axis("B", &["0.6", "1.0", "1.4"]),
                axis("C", &["1.0", "1.4", "1.8"]),
            ],
            LearnerKind::Hatc => vec![
                axis("depth", &["None", "50", "200"]),
                axis("tie_threshold", &["0.5", "0.05", "0.005"]),
                axis("max_size", &["50", "100", "200"]),
            ],
            LearnerKind::Arfc => vec![
                axis("models", &["10", "50", "100"]),
                axis("features", &["sqrt", "5", "50"]),
                axis("lambda", &["10", "50", "100"]),
            ],
        };
        Ok(Self { kind, axes })
    }

    /// Replaces the values of an existing axis.
    pub fn set_axis(&mut self, name: &str, values: Vec<String>) -> Result<(), EvalError> {
        if values.is_empty() {
            return Err(EvalError::EmptyGrid);
        }
        let base = LearnerConfig::default_for(self.kind);
        let canonical = canonical_name(self.kind, name).ok_or_else(|| EvalError::UnknownParameter(name.into()))?;
        for v in &values {
            apply_param(base, canonical, v)?;
        }
        match self.axes.iter_mut().find(|a| canonical_name(self.kind, &a.name) == Some(canonical)) {
            Some(a) => a.values = values,
            None => self.axes.push(GridAxis {
                name: canonical.into(),
                values,
            }),
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Result<Vec<LearnerConfig>, EvalError> {
        let mut points = vec![LearnerConfig::default_for(self.kind)];
        for a in &self.axes {
            let name = canonical_name(self.kind, &a.name).ok_or_else(|| EvalError::UnknownParameter(a.name.clone()))?;
            let mut next = Vec::with_capacity(points.len() * a.values.len());
            for p in &points {
                for v in &a.values {
                    next.push(apply_param(*p, name, v)?);
                }
            }
            points = next;
        }
        if points.is_empty() {
            return Err(EvalError::EmptyGrid);
        }
        Ok(points)
    }
}

fn canonical_name(kind: LearnerKind, name: &str) -> Option<&'static str> {
    let lower = name.trim().to_ascii_lowercase();
    let n = lower.as_str();
    Some(match (kind, n) {
        (LearnerKind::Lr, "l2") => "l2",
        (LearnerKind::Lr, "intercept_lr") => "intercept_lr",
        (LearnerKind::Alma, "alpha") => "alpha",
        (LearnerKind::Alma, "b") => "B",
        (LearnerKind::Alma, "c") => "C",
        (LearnerKind::Hatc, "depth" | "max_depth") => "depth",
        (LearnerKind::Hatc, "tie_threshold") => "tie_threshold",
        (LearnerKind::Hatc, "max_size") => "max_size",
        (LearnerKind::Arfc, "models" | "n_models") => "models",
        (LearnerKind::Arfc, "features" | "features_per_split" | "max_features") => "features",
        (LearnerKind::Arfc, "lambda" | "lambda_value") => "lambda",
        _ => return None,
    })
}

fn parse_f64(name: &str, v: &str) -> Result<f64, EvalError> {
    v.trim().parse().map_err(|_| EvalError::BadParameterValue {
        name: name.into(),
        value: v.into(),
    })
}

fn parse_usize(name: &str, v: &str) -> Result<usize, EvalError> {
    v.trim().parse().map_err(|_| EvalError::BadParameterValue {
        name: name.into(),
        value: v.into(),
    })
}

/// `config` with hyperparameter `name` set from its text form.
pub fn apply_param(config: LearnerConfig, name: &str, value: &str) -> Result<LearnerConfig, EvalError> {
    let canonical = canonical_name(config.kind(), name).ok_or_else(|| EvalError::UnknownParameter(name.into()))?;
    let mut c = config;
    match (&mut c, canonical) {
        (LearnerConfig::Lr { l2, .. }, "l2") => *l2 = parse_f64(name, value)?,
        (LearnerConfig::Lr { intercept_lr, .. }, "intercept_lr") => *intercept_lr = parse_f64(name, value)?,
        (LearnerConfig::Alma { alpha, .. }, "alpha") => *alpha = parse_f64(name, value)?,
        (LearnerConfig::Alma { b, .. }, "B") => *b = parse_f64(name, value)?,
        (LearnerConfig::Alma { c, .. }, "C") => *c = parse_f64(name, value)?,
        (LearnerConfig::Hatc { max_depth, .. }, "depth") => {
            *max_depth = match value.trim() {
                "None" | "none" | "unbounded" => None,
                v => Some(parse_usize(name, v)?),
            }
        }
        (LearnerConfig::Hatc { tie_threshold, .. }, "tie_threshold") => *tie_threshold = parse_f64(name, value)?,
        (LearnerConfig::Hatc { max_size, .. }, "max_size") => *max_size = parse_f64(name, value)?,
        (LearnerConfig::Arfc { n_models, .. }, "models") => *n_models = parse_usize(name, value)?,
        (LearnerConfig::Arfc { features_per_split, .. }, "features") => {
            *features_per_split = value.parse::<MaxFeatures>().map_err(|_| EvalError::BadParameterValue {
                name: name.into(),
                value: value.into(),
            })?
        }
        (LearnerConfig::Arfc { lambda, .. }, "lambda") => *lambda = parse_f64(name, value)?,
        _ => return Err(EvalError::UnknownParameter(name.into())),
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub config: LearnerConfig,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Index into `runs`.
    pub best: usize,
    pub runs: Vec<GridRun>,
}

impl GridResult {
    pub fn best_run(&self) -> &GridRun {
        &self.runs[self.best]
    }
}

/// Index of the best report: highest accuracy, then highest macro
/// F-measure, then the earliest.
pub fn pick_best(reports: &[MetricsReport]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in reports.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &reports[b];
                r.accuracy > cur.accuracy
                    || (r.accuracy == cur.accuracy && r.macro_avg.f_measure > cur.macro_avg.f_measure)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// One prequential run per grid point with the same seed.
pub fn grid_search<C: Clock + ?Sized>(
    grid: &ParamGrid,
    records: &[ScreeningRecord],
    run: &RunConfig,
    seed: u64,
    clock: &mut C,
) -> Result<GridResult, EvalError> {
    let points = grid.points()?;
    let mut runs = Vec::with_capacity(points.len());
    for config in points {
        let (outcome, _) = replay(&config, records, run, seed, clock)?;
        runs.push(GridRun {
            config,
            report: outcome.report,
        });
    }
    let reports: Vec<MetricsReport> = runs.iter().map(|r| r.report).collect();
    let best = pick_best(&reports).ok_or(EvalError::EmptyGrid)?;
    Ok(GridResult { best, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::NoClock;
    use crate::record::{AgeBucket, ResponseOption};

    #[test]
    fn grid_sizes() {
        assert_eq!(ParamGrid::default_for(LearnerKind::Alma).unwrap().points().unwrap().len(), 27);
        assert_eq!(ParamGrid::default_for(LearnerKind::Lr).unwrap().points().unwrap().len(), 9);
        assert_eq!(ParamGrid::default_for(LearnerKind::Hatc).unwrap().len(), 27);
        assert_eq!(ParamGrid::default_for(LearnerKind::Arfc).unwrap().len(), 27);
        assert_eq!(ParamGrid::default_for(LearnerKind::Gnb), Err(EvalError::NoGrid(LearnerKind::Gnb)));
    }

    #[test]
    fn default_config_is_a_grid_point() {
        for kind in [LearnerKind::Lr, LearnerKind::Alma, LearnerKind::Hatc, LearnerKind::Arfc] {
            let points = ParamGrid::default_for(kind).unwrap().points().unwrap();
            assert!(points.contains(&LearnerConfig::default_for(kind)), "{kind}");
        }
    }

    #[test]
    fn first_axis_varies_slowest() {
        let points = ParamGrid::default_for(LearnerKind::Lr).unwrap().points().unwrap();
        assert_eq!(points[0], LearnerConfig::Lr { l2: 0.0, intercept_lr: 0.001 });
        assert_eq!(points[1], LearnerConfig::Lr { l2: 0.0, intercept_lr: 0.01 });
        assert_eq!(points[3], LearnerConfig::Lr { l2: 0.1, intercept_lr: 0.001 });
    }

    #[test]
    fn overrides() {
        let mut g = ParamGrid::default_for(LearnerKind::Alma).unwrap();
        g.set_axis("alpha", vec!["0.5".into()]).unwrap();
        g.set_axis("b", vec!["0.6".into()]).unwrap();
        g.set_axis("C", vec!["1.4".into()]).unwrap();
        assert_eq!(g.points().unwrap(), vec![LearnerConfig::default_for(LearnerKind::Alma)]);
        assert!(matches!(g.set_axis("gamma", vec!["1".into()]), Err(EvalError::UnknownParameter(_))));
        assert!(matches!(g.set_axis("alpha", vec!["x".into()]), Err(EvalError::BadParameterValue { .. })));
        let h = apply_param(LearnerConfig::default_for(LearnerKind::Hatc), "depth", "50").unwrap();
        assert_eq!(h, LearnerConfig::Hatc { max_depth: Some(50), tie_threshold: 0.05, max_size: 50.0 });
    }

    fn report(acc: f64, f: f64) -> MetricsReport {
        let mut r = MetricsReport::default();
        r.accuracy = acc;
        r.macro_avg.f_measure = f;
        r
    }

    #[test]
    fn tie_breaks() {
        assert_eq!(pick_best(&[report(0.8, 0.7)]), Some(0));
        assert_eq!(pick_best(&[report(0.8, 0.7), report(0.8, 0.7)]), Some(0));
        assert_eq!(pick_best(&[report(0.8, 0.7), report(0.8, 0.75), report(0.79, 0.9)]), Some(1));
        assert_eq!(pick_best(&[]), None);
    }

    #[test]
    fn single_point_search() {
        let recs: Vec<ScreeningRecord> = (0..40)
            .map(|i| {
                let opt = if i % 2 == 0 { ResponseOption::Yes } else { ResponseOption::No };
                ScreeningRecord::new(AgeBucket::From30To35, [opt; 8], Some(i % 2 == 0))
            })
            .collect();
        let mut g = ParamGrid::default_for(LearnerKind::Lr).unwrap();
        g.set_axis("l2", vec!["0.0".into()]).unwrap();
        g.set_axis("intercept_lr", vec!["0.01".into(), "0.01".into()]).unwrap();
        let res = grid_search(&g, &recs, &RunConfig::default(), 1, &mut NoClock).unwrap();
        assert_eq!(res.runs.len(), 2);
        assert_eq!(res.best, 0);
        assert_eq!(res.runs[0].report, res.runs[1].report);
    }
}
