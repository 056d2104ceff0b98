use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measures::{sup_metric, Metric, ReturnModel};

/// Error of one estimate against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Update count for TD runs, epoch index for VR runs.
    pub t: usize,
    pub per_state: Vec<f64>,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTrace {
    pub metric: Metric,
    pub points: Vec<TracePoint>,
}

impl ErrorTrace {
    pub fn new(metric: Metric) -> Self {
        Self { metric, points: Vec::new() }
    }

    pub(crate) fn record(&mut self, t: usize, estimate: &ReturnModel, reference: &ReturnModel) -> Result<()> {
        let report = sup_metric(estimate, reference, self.metric)?;
        self.points.push(TracePoint { t, per_state: report.per_state, sup: report.sup });
        Ok(())
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    /// Columns `t, state_0, ..., state_{n-1}, sup`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.points.first().map_or(0, |p| p.per_state.len());
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("state_{i}")));
        header.push("sup".into());
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.t.to_string()];
            row.extend(p.per_state.iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", p.sup));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| crate::Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Output of a learner run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub estimate: ReturnModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ErrorTrace>,
    /// Transitions drawn from the environment.
    pub samples: usize,
    pub updates: usize,
    /// Particle mode: sum of the compression certificates. The TD update is
    /// non-expansive in sup-`W1`, so this bounds the `W1` distance to the
    /// uncompressed run on the same samples.
    pub compression_w1: f64,
    /// VR categorical mode: total negative mass clipped from recentered targets.
    pub clipped_mass: f64,
    /// VR particle mode: total `W1` cost of CDF rectification.
    pub rectification_w1: f64,
    pub seed: u64,
}
