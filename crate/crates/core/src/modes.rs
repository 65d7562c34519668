//! Mode and trough detection on an evaluated density.
//!
//! A grid index is a candidate mode when the density rises into it and does
//! not rise immediately after; runs of exactly equal values are treated as a
//! single plateau whose midpoint is the candidate. Grid endpoints are never
//! modes. Candidates then pass two floors, both relative to the curve's
//! maximum: an absolute height floor that removes far-tail roundoff, and a
//! topographic-prominence floor that removes ripples too shallow to count as
//! separate modes.

use crate::error::{Error, Result};
use crate::kde::{kde_default, Bandwidth, DensityCurve};
use crate::sample::Sample;

/// Candidates lower than this fraction of the peak density are discarded.
pub const MIN_HEIGHT_FRACTION: f64 = 1e-6;
/// Candidates whose prominence is below this fraction of the peak density are discarded.
pub const MIN_PROMINENCE_FRACTION: f64 = 0.01;

/// Thresholds applied to candidate modes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModeFilter {
    pub min_height_fraction: f64,
    pub min_prominence_fraction: f64,
}

impl Default for ModeFilter {
    fn default() -> Self {
        ModeFilter {
            min_height_fraction: MIN_HEIGHT_FRACTION,
            min_prominence_fraction: MIN_PROMINENCE_FRACTION,
        }
    }
}

impl ModeFilter {
    /// Only the height floor, keeping every ripple.
    pub fn height_only() -> Self {
        ModeFilter {
            min_prominence_fraction: 0.0,
            ..Default::default()
        }
    }
}

/// Strict interior local maxima, plateaus collapsed to their midpoint.
pub fn candidate_peaks(density: &[f64]) -> Vec<usize> {
    let g = density.len();
    let mut out = Vec::new();
    let mut j = 1;
    while j + 1 < g {
        if density[j] > density[j - 1] {
            let mut end = j;
            while end + 1 < g && density[end + 1] == density[j] {
                end += 1;
            }
            if end + 1 < g && density[end + 1] < density[j] {
                out.push((j + end) / 2);
            }
            j = end + 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Height of `peak` above the higher of its two bases, where each base is the
/// lowest point passed before the density exceeds the peak (or the grid ends).
pub fn prominence(density: &[f64], peak: usize) -> f64 {
    let top = density[peak];
    let mut left_base = top;
    for &v in density[..peak].iter().rev() {
        if v > top {
            break;
        }
        left_base = left_base.min(v);
    }
    let mut right_base = top;
    for &v in &density[peak + 1..] {
        if v > top {
            break;
        }
        right_base = right_base.min(v);
    }
    top - left_base.max(right_base)
}

/// Indices of the modes that survive `filter`, ascending.
pub fn mode_indices(density: &[f64], filter: ModeFilter) -> Vec<usize> {
    let peak = density.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let min_height = filter.min_height_fraction * peak;
    let min_prominence = filter.min_prominence_fraction * peak;
    candidate_peaks(density)
        .into_iter()
        .filter(|&j| density[j] >= min_height)
        .filter(|&j| min_prominence <= 0.0 || prominence(density, j) >= min_prominence)
        .collect()
}

pub fn count_modes(curve: &DensityCurve) -> usize {
    count_modes_with(curve, ModeFilter::default())
}

pub fn count_modes_with(curve: &DensityCurve, filter: ModeFilter) -> usize {
    mode_indices(curve.density(), filter).len()
}

/// Mode locations and heights, ascending by location.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModeSet {
    pub locations: Vec<f64>,
    pub heights: Vec<f64>,
}

impl ModeSet {
    pub fn count(&self) -> usize {
        self.locations.len()
    }

    pub fn from_curve(curve: &DensityCurve, filter: ModeFilter) -> ModeSet {
        let idx = mode_indices(curve.density(), filter);
        ModeSet {
            locations: idx.iter().map(|&j| curve.grid().points()[j]).collect(),
            heights: idx.iter().map(|&j| curve.density()[j]).collect(),
        }
    }
}

/// Modes of the estimate at bandwidth `h` on the default grid.
pub fn find_modes(x: &Sample, h: Bandwidth) -> Result<ModeSet> {
    Ok(ModeSet::from_curve(&kde_default(x, h)?, ModeFilter::default()))
}

/// Lowest point between the two tallest modes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Trough {
    pub location: f64,
    pub height: f64,
    /// `height / max(left_peak, right_peak)`.
    pub ratio: f64,
    pub left_peak: f64,
    pub right_peak: f64,
}

/// Grid indices `(left_peak, valley, right_peak)` for the two tallest of
/// `modes`, ties broken toward the left.
pub(crate) fn leading_pair(density: &[f64], modes: &[usize]) -> Option<(usize, usize, usize)> {
    if modes.len() < 2 {
        return None;
    }
    let mut ranked = modes.to_vec();
    // Stable sort: equal heights keep ascending location order.
    ranked.sort_by(|&a, &b| density[b].total_cmp(&density[a]));
    let (a, b) = (ranked[0].min(ranked[1]), ranked[0].max(ranked[1]));
    let mut valley = a + 1;
    for j in a + 1..b {
        if density[j] < density[valley] {
            valley = j;
        }
    }
    Some((a, valley, b))
}

pub fn trough_of(curve: &DensityCurve, filter: ModeFilter) -> Result<Trough> {
    let d = curve.density();
    let modes = mode_indices(d, filter);
    let (a, v, b) = leading_pair(d, &modes).ok_or(Error::NotBimodal { modes: modes.len() })?;
    Ok(Trough {
        location: curve.grid().points()[v],
        height: d[v],
        ratio: d[v] / d[a].max(d[b]),
        left_peak: d[a],
        right_peak: d[b],
    })
}

/// Trough between the two tallest modes at bandwidth `h`.
pub fn find_trough(x: &Sample, h: Bandwidth) -> Result<Trough> {
    trough_of(&kde_default(x, h)?, ModeFilter::default())
}
