//! Two-component decomposition at the density trough, and the bimodality
//! strength ratio.

use std::fmt;

use crate::error::{Error, Result};
use crate::kde::{kde_default, silverman_bandwidth};
use crate::modes::{trough_of, ModeFilter};
use crate::rng::Component;
use crate::sample::{mean, std_dev, Sample};
use crate::solver::{critical_bandwidth, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Decomposition {
    pub component1: Component,
    pub component2: Component,
    pub separation_point: f64,
    /// Trough height over the taller of the two leading peaks.
    pub dip_ratio: f64,
}

fn side(values: &[f64], weight: f64) -> Component {
    let std = if values.len() > 1 { std_dev(values) } else { 0.0 };
    Component::new(weight, mean(values), std)
}

/// Splits `x` at the trough between the two tallest modes of the estimate at
/// the rule-of-thumb bandwidth.
///
/// With three or more modes only the two tallest are used.
pub fn detect_components(x: &Sample) -> Result<Decomposition> {
    let h = silverman_bandwidth(x)?;
    let curve = kde_default(x, h)?;
    let trough = trough_of(&curve, ModeFilter::default())?;
    let sep = trough.location;
    let values = x.values();
    let n1 = values.partition_point(|&v| v < sep);
    if n1 == 0 || n1 == values.len() {
        return Err(Error::DegenerateSample(format!(
            "no observations on one side of the trough at {sep}"
        )));
    }
    let n = values.len();
    let w1 = n1 as f64 / n as f64;
    Ok(Decomposition {
        component1: side(&values[..n1], w1),
        component2: side(&values[n1..], 1.0 - w1),
        separation_point: sep,
        dip_ratio: trough.ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrengthLabel {
    Weak,
    Moderate,
    Strong,
}

impl fmt::Display for StrengthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrengthLabel::Weak => "weak",
            StrengthLabel::Moderate => "moderate",
            StrengthLabel::Strong => "strong",
        })
    }
}

pub const MODERATE_CUTOFF: f64 = 1.0;
pub const STRONG_CUTOFF: f64 = 2.0;

/// Ratios below `moderate` are weak, below `strong` moderate, otherwise strong.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StrengthCutoffs {
    pub moderate: f64,
    pub strong: f64,
}

impl Default for StrengthCutoffs {
    fn default() -> Self {
        StrengthCutoffs {
            moderate: MODERATE_CUTOFF,
            strong: STRONG_CUTOFF,
        }
    }
}

impl StrengthCutoffs {
    pub fn label(&self, ratio: f64) -> StrengthLabel {
        if ratio >= self.strong {
            StrengthLabel::Strong
        } else if ratio >= self.moderate {
            StrengthLabel::Moderate
        } else {
            StrengthLabel::Weak
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StrengthReport {
    /// Two-mode critical bandwidth over the rule-of-thumb bandwidth.
    pub ratio: f64,
    pub label: StrengthLabel,
}

pub fn bimodality_strength(x: &Sample) -> Result<StrengthReport> {
    bimodality_strength_with(x, StrengthCutoffs::default(), &SolverOptions::default())
}

pub fn bimodality_strength_with(
    x: &Sample,
    cutoffs: StrengthCutoffs,
    opts: &SolverOptions,
) -> Result<StrengthReport> {
    if !(cutoffs.moderate > 0.0 && cutoffs.strong > cutoffs.moderate) {
        return Err(Error::invalid("cutoffs", "need 0 < moderate < strong"));
    }
    let crit = critical_bandwidth(x, 2, opts)?;
    if !crit.success {
        return Err(Error::SolverFailure(
            crit.diagnostic.unwrap_or_else(|| "transition not verified".into()),
        ));
    }
    let ratio = crit.h_crit / silverman_bandwidth(x)?.get();
    Ok(StrengthReport {
        ratio,
        label: cutoffs.label(ratio),
    })
}
