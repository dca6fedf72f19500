use serde::{Deserialize, Serialize};

use crate::detection::{SweepPolicy, ThresholdDensity};
use crate::error::{Error, Result};
use crate::matching::{MatchConfig, MatchMode};
use crate::structure::TsrMetric;

/// Which metric families a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricScope {
    /// Detection scalars, curves and calibration.
    Detection,
    /// Detection plus structure scores over true positives.
    Structure,
    /// Everything, including structure-weighted detection.
    #[default]
    EndToEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: MatchMode,
    pub theta_j: f64,
    /// Confidence threshold for the thresholded scalars.
    pub theta_c: f64,
    pub sweep: SweepPolicy,
    pub densities: Vec<ThresholdDensity>,
    pub bins: usize,
    pub weightings: Vec<TsrMetric>,
    /// Drop predictions whose box contains no token center, when tokens are given.
    pub filter_empty: bool,
    pub scope: MetricScope,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: MatchMode::Bbox,
            theta_j: 0.5,
            theta_c: 0.5,
            sweep: SweepPolicy::Distinct,
            densities: ThresholdDensity::ALL.to_vec(),
            bins: 10,
            weightings: TsrMetric::ALL.to_vec(),
            filter_empty: false,
            scope: MetricScope::EndToEnd,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta_j", self.theta_j), ("theta_c", self.theta_c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { name, value: v });
            }
        }
        if self.bins == 0 {
            return Err(Error::OutOfRange {
                name: "bins",
                value: 0.0,
            });
        }
        if let SweepPolicy::Fixed(list) = &self.sweep {
            if let Some(&v) = list.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::OutOfRange {
                    name: "sweep threshold",
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            mode: self.mode,
            theta_j: self.theta_j,
            theta_c: self.theta_c,
        }
    }
}
