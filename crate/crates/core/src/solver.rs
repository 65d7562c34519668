//! Critical bandwidth search.
//!
//! For a sample tested for `k`-modality, the critical bandwidth is the
//! smallest `h` at which the Gaussian kernel estimate has at most `k - 1`
//! modes; `k = 2` is the bandwidth at which bimodality disappears. The mode
//! count is a step function of `h`, so the default search brackets the
//! transition by repeated doubling or halving from the rule-of-thumb
//! bandwidth and then bisects. The reported value is the upper end of the
//! final bracket, which always has at most `k - 1` modes.

use std::fmt;

use crate::error::{Error, Result};
use crate::kde::{kde_default, silverman_bandwidth, Bandwidth};
use crate::modes::{leading_pair, mode_indices, ModeFilter};
use crate::rng::{resample_with_replacement, Purpose, Seed};
use crate::sample::{quantile_sorted, std_dev, Sample};

pub const DEFAULT_REL_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_BRACKET_GROWTH: f64 = 2.0;
/// The downward bracket stops below this fraction of the starting bandwidth.
pub const BRACKET_FLOOR_FRACTION: f64 = 1e-6;
/// The upward bracket stops at this multiple of the data range.
pub const BRACKET_CAP_RANGES: f64 = 2.0;
/// Target used by the Brent objective when the mode filter has no prominence floor.
pub const BRENT_DEFAULT_TARGET: f64 = 1e-3;

pub const DEFAULT_CI_RESAMPLES: usize = 999;
pub const MIN_CI_RESAMPLES: usize = 100;
pub const CI_LEVEL: f64 = 0.95;
/// Fewer successful replicates than this fraction makes the interval an error.
pub const CI_MIN_SUCCESS_RATE: f64 = 0.5;
/// Above this sample size the default resample count triggers a warning.
pub const LARGE_SAMPLE_WARNING: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Bracketing pass followed by bisection on the mode count.
    #[default]
    Auto,
    Binary,
    /// Root of the continuous trough-depth objective, verified, with bisection fallback.
    Brent,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverOptions {
    pub method: SolverMethod,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub bracket_growth: f64,
    pub filter: ModeFilter,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolverMethod::Auto,
            rel_tol: DEFAULT_REL_TOL,
            max_iter: DEFAULT_MAX_ITER,
            bracket_growth: DEFAULT_BRACKET_GROWTH,
            filter: ModeFilter::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_method(mut self, method: SolverMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 0.1) {
            return Err(Error::invalid("rel_tol", format!("{} not in (0, 0.1)", self.rel_tol)));
        }
        if self.max_iter < 10 {
            return Err(Error::invalid("max_iter", format!("{} is below 10", self.max_iter)));
        }
        if !(self.bracket_growth > 1.0 && self.bracket_growth.is_finite()) {
            return Err(Error::invalid(
                "bracket_growth",
                format!("{} must exceed 1", self.bracket_growth),
            ));
        }
        Ok(())
    }
}

/// Which route produced the reported bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    Binary,
    Brent,
    BrentFallback,
}

impl fmt::Display for SolverPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverPath::Binary => "binary",
            SolverPath::Brent => "brent",
            SolverPath::BrentFallback => "brent_fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    Percentile,
}

/// Percentile bootstrap interval for the critical bandwidth.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BootstrapInterval {
    pub low: f64,
    pub high: f64,
    pub std_error: f64,
    pub method: IntervalMethod,
    pub level: f64,
    pub resamples: usize,
    /// Replicates whose solve failed; excluded from the interval.
    pub failures: usize,
    /// True when an endpoint was moved to include the point estimate.
    pub widened: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CritBandResult {
    pub h_crit: f64,
    pub success: bool,
    /// Modality under test; the result bounds the mode count by `k - 1`.
    pub k: usize,
    /// Number of density evaluations.
    pub iterations: usize,
    pub path: SolverPath,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<BootstrapInterval>,
}

impl CritBandResult {
    /// Largest mode count allowed at `h_crit`.
    pub fn max_modes(&self) -> usize {
        self.k - 1
    }

    pub fn bandwidth(&self) -> Bandwidth {
        Bandwidth::new(self.h_crit).expect("critical bandwidth is positive")
    }
}

struct ModeCounter<'a> {
    x: &'a Sample,
    filter: ModeFilter,
    evals: usize,
}

impl<'a> ModeCounter<'a> {
    fn new(x: &'a Sample, filter: ModeFilter) -> Self {
        ModeCounter { x, filter, evals: 0 }
    }

    fn density(&mut self, h: f64) -> Result<Vec<f64>> {
        self.evals += 1;
        Ok(kde_default(self.x, Bandwidth::new(h)?)?.density().to_vec())
    }

    fn count(&mut self, h: f64) -> Result<usize> {
        Ok(mode_indices(&self.density(h)?, self.filter).len())
    }

    /// Depth of the shallower of the two tallest raw peaks below the lower
    /// of them, relative to the maximum, minus `target`. Negative once fewer
    /// than two raw peaks remain.
    fn trough_objective(&mut self, h: f64, target: f64) -> Result<f64> {
        let d = self.density(h)?;
        let raw = mode_indices(
            &d,
            ModeFilter {
                min_prominence_fraction: 0.0,
                ..self.filter
            },
        );
        let peak = d.iter().copied().fold(0.0, f64::max);
        Ok(match leading_pair(&d, &raw) {
            Some((a, v, b)) => (d[a].min(d[b]) - d[v]) / peak - target,
            None => -target,
        })
    }
}

enum Bracket {
    Found { lo: f64, hi: f64 },
    /// Even the smallest bandwidth tried has at most `bound` modes.
    Floor { h: f64 },
    /// The largest bandwidth allowed still has more than `bound` modes.
    Cap { h: f64 },
}

fn bracket(counter: &mut ModeCounter, h0: f64, bound: usize, opts: &SolverOptions) -> Result<Bracket> {
    let growth = opts.bracket_growth;
    if counter.count(h0)? <= bound {
        let floor = BRACKET_FLOOR_FRACTION * h0;
        let mut hi = h0;
        loop {
            let h = hi / growth;
            if h < floor {
                return Ok(Bracket::Floor { h: hi });
            }
            if counter.count(h)? > bound {
                return Ok(Bracket::Found { lo: h, hi });
            }
            hi = h;
        }
    } else {
        let cap = BRACKET_CAP_RANGES * counter.x.range();
        let mut lo = h0;
        loop {
            if lo >= cap {
                return Ok(Bracket::Cap { h: lo });
            }
            let h = (lo * growth).min(cap);
            if counter.count(h)? <= bound {
                return Ok(Bracket::Found { lo, hi: h });
            }
            lo = h;
        }
    }
}

fn bisect(counter: &mut ModeCounter, mut lo: f64, mut hi: f64, bound: usize, opts: &SolverOptions) -> Result<(f64, bool)> {
    let mut steps = 0;
    while (hi - lo) / hi >= opts.rel_tol {
        if steps == opts.max_iter {
            return Ok((hi, false));
        }
        let mid = 0.5 * (lo + hi);
        if counter.count(mid)? <= bound {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok((hi, true))
}

fn validate(x: &Sample, k: usize, opts: &SolverOptions) -> Result<f64> {
    opts.validate()?;
    if k < 2 {
        return Err(Error::invalid("k", format!("modality under test must be at least 2, got {k}")));
    }
    if x.len() < 3 {
        return Err(Error::DegenerateSample(format!(
            "critical bandwidth needs at least 3 observations, got {}",
            x.len()
        )));
    }
    Ok(silverman_bandwidth(x)?.get())
}

struct Outcome {
    h: f64,
    success: bool,
    diagnostic: Option<String>,
}

fn failure(h: f64, why: String) -> Outcome {
    Outcome {
        h,
        success: false,
        diagnostic: Some(why),
    }
}

fn verify(counter: &mut ModeCounter, h: f64, bound: usize, opts: &SolverOptions) -> Result<bool> {
    Ok(counter.count(h)? <= bound && counter.count(h * (1.0 - 10.0 * opts.rel_tol))? > bound)
}

fn binary_from_bracket(counter: &mut ModeCounter, b: Bracket, bound: usize, opts: &SolverOptions) -> Result<Outcome> {
    let (lo, hi) = match b {
        Bracket::Found { lo, hi } => (lo, hi),
        Bracket::Floor { h } => {
            return Ok(failure(h, format!("at most {bound} mode(s) down to the bracket floor")))
        }
        Bracket::Cap { h } => {
            return Ok(failure(h, format!("more than {bound} mode(s) up to the bracket cap")))
        }
    };
    let (h, converged) = bisect(counter, lo, hi, bound, opts)?;
    if !converged {
        return Ok(failure(h, format!("bisection did not converge in {} steps", opts.max_iter)));
    }
    if !verify(counter, h, bound, opts)? {
        return Ok(failure(h, "mode count does not step down at the reported bandwidth".into()));
    }
    Ok(Outcome {
        h,
        success: true,
        diagnostic: None,
    })
}

fn finish(k: usize, counter: &ModeCounter, path: SolverPath, out: Outcome) -> CritBandResult {
    CritBandResult {
        h_crit: out.h,
        success: out.success,
        k,
        iterations: counter.evals,
        path,
        diagnostic: out.diagnostic,
        ci: None,
    }
}

/// Smallest bandwidth at which the estimate has at most `k - 1` modes.
///
/// `opts.method` selects the route; `Auto` and `Binary` both bisect on the
/// mode count.
pub fn critical_bandwidth(x: &Sample, k: usize, opts: &SolverOptions) -> Result<CritBandResult> {
    if opts.method == SolverMethod::Brent {
        return critical_bandwidth_brent(x, k, opts);
    }
    let h0 = validate(x, k, opts)?;
    let bound = k - 1;
    let mut counter = ModeCounter::new(x, opts.filter);
    let b = bracket(&mut counter, h0, bound, opts)?;
    let out = binary_from_bracket(&mut counter, b, bound, opts)?;
    Ok(finish(k, &counter, SolverPath::Binary, out))
}

/// Brent root of the trough-depth objective, for `k = 2` only.
///
/// The objective is the depth of the valley below the shallower of the two
/// tallest peaks, relative to the maximum density, minus the mode filter's
/// prominence floor; for two peaks its root is exactly where the mode count
/// steps from two to one. When the tallest two peaks change identity inside
/// the bracket the objective jumps, so the root is checked against the mode
/// count and bisection takes over if the check fails.
pub fn critical_bandwidth_brent(x: &Sample, k: usize, opts: &SolverOptions) -> Result<CritBandResult> {
    if k != 2 {
        return Err(Error::UnsupportedMethod(format!(
            "brent solver is defined for k = 2 only, got k = {k}"
        )));
    }
    let h0 = validate(x, k, opts)?;
    let bound = 1;
    let target = if opts.filter.min_prominence_fraction > 0.0 {
        opts.filter.min_prominence_fraction
    } else {
        BRENT_DEFAULT_TARGET
    };
    let mut counter = ModeCounter::new(x, opts.filter);
    let b = bracket(&mut counter, h0, bound, opts)?;
    let Bracket::Found { lo, hi } = b else {
        let out = binary_from_bracket(&mut counter, b, bound, opts)?;
        return Ok(finish(k, &counter, SolverPath::Binary, out));
    };

    let f_lo = counter.trough_objective(lo, target)?;
    let f_hi = counter.trough_objective(hi, target)?;
    if f_lo > 0.0 && f_hi < 0.0 {
        let h = brent_root(&mut counter, lo, hi, f_lo, f_hi, target, opts)?;
        if let Some(h) = h {
            if verify(&mut counter, h, bound, opts)? {
                let out = Outcome {
                    h,
                    success: true,
                    diagnostic: None,
                };
                return Ok(finish(k, &counter, SolverPath::Brent, out));
            }
        }
    }
    let mut out = binary_from_bracket(&mut counter, Bracket::Found { lo, hi }, bound, opts)?;
    if out.diagnostic.is_none() {
        out.diagnostic = Some("trough objective root not verified, bisection used".into());
    }
    Ok(finish(k, &counter, SolverPath::BrentFallback, out))
}

/// Brent's method on `[a, b]` with `f(a) > 0 > f(b)`. Returns the bracket
/// end on the negative side once the bracket is narrower than the tolerance.
fn brent_root(
    counter: &mut ModeCounter,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    target: f64,
    opts: &SolverOptions,
) -> Result<Option<f64>> {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.25 * opts.rel_tol * b.abs() + 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            // b and c straddle the root; report the side with at most one mode.
            return Ok(Some(if fb < 0.0 { b } else { c }));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = counter.trough_objective(b, target)?;
    }
    Ok(None)
}

/// Checks that the mode count is at most `k - 1` at `h` and exceeds it at
/// `h * (1 - 10 rel_tol)`.
pub fn verify_transition(x: &Sample, k: usize, h: f64, opts: &SolverOptions) -> Result<bool> {
    let mut counter = ModeCounter::new(x, opts.filter);
    verify(&mut counter, h, k - 1, opts)
}

/// Critical bandwidth with a percentile bootstrap interval.
///
/// Each replicate resamples `x` with replacement under its own derived seed
/// and re-solves. Failed replicates are counted and excluded; if fewer than
/// half succeed the interval is reported as unreliable.
pub fn critical_bandwidth_ci(
    x: &Sample,
    k: usize,
    resamples: usize,
    seed: Seed,
    opts: &SolverOptions,
) -> Result<CritBandResult> {
    if resamples < MIN_CI_RESAMPLES {
        return Err(Error::invalid(
            "resamples",
            format!("need at least {MIN_CI_RESAMPLES}, got {resamples}"),
        ));
    }
    if x.len() > LARGE_SAMPLE_WARNING && resamples == DEFAULT_CI_RESAMPLES {
        log::warn!(
            "bootstrap with the default {resamples} resamples on n = {}; consider fewer",
            x.len()
        );
    }
    let mut result = critical_bandwidth(x, k, opts)?;

    let mut values = Vec::with_capacity(resamples);
    let mut failures = 0;
    for i in 0..resamples {
        let y = resample_with_replacement(x, seed.derive(Purpose::CiReplicate, i as u64));
        match critical_bandwidth(&y, k, opts) {
            Ok(r) if r.success => values.push(r.h_crit),
            _ => failures += 1,
        }
    }
    if (values.len() as f64) < CI_MIN_SUCCESS_RATE * resamples as f64 {
        return Err(Error::CiUnreliable { failures, resamples });
    }
    values.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - CI_LEVEL);
    let mut low = quantile_sorted(&values, tail);
    let mut high = quantile_sorted(&values, 1.0 - tail);
    let mut widened = false;
    if result.success && !(low <= result.h_crit && result.h_crit <= high) {
        low = low.min(result.h_crit);
        high = high.max(result.h_crit);
        widened = true;
    }
    result.ci = Some(BootstrapInterval {
        low,
        high,
        std_error: std_dev(&values),
        method: IntervalMethod::Percentile,
        level: CI_LEVEL,
        resamples,
        failures,
        widened,
    });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bimodal() -> Sample {
        let mut v: Vec<f64> = (0..30).map(|i| -2.0 + 0.02 * i as f64).collect();
        v.extend((0..30).map(|i| 2.0 + 0.02 * i as f64));
        Sample::new(v).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = bimodal();
        let opts = SolverOptions::default();
        assert!(matches!(critical_bandwidth(&x, 1, &opts), Err(Error::InvalidInput { field: "k", .. })));
        let tiny = Sample::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(critical_bandwidth(&tiny, 2, &opts), Err(Error::DegenerateSample(_))));
        let flat = Sample::new(vec![1.0; 5]).unwrap();
        assert!(matches!(critical_bandwidth(&flat, 2, &opts), Err(Error::DegenerateSample(_))));
        let bad = SolverOptions {
            rel_tol: 0.5,
            ..opts
        };
        assert!(critical_bandwidth(&x, 2, &bad).is_err());
        let bad = SolverOptions { max_iter: 3, ..opts };
        assert!(critical_bandwidth(&x, 2, &bad).is_err());
    }

    #[test]
    fn separated_clusters_transition() {
        let x = bimodal();
        let opts = SolverOptions::default();
        let r = critical_bandwidth(&x, 2, &opts).unwrap();
        assert!(r.success, "{r:?}");
        assert_eq!(r.path, SolverPath::Binary);
        assert!(verify_transition(&x, 2, r.h_crit, &opts).unwrap());
        // two clusters 4 apart merge somewhere below half their separation
        assert!(r.h_crit > 1.0 && r.h_crit < 2.3, "{}", r.h_crit);
    }

    #[test]
    fn brent_rejects_other_k() {
        let opts = SolverOptions::default().with_method(SolverMethod::Brent);
        assert!(matches!(
            critical_bandwidth(&bimodal(), 3, &opts),
            Err(Error::UnsupportedMethod(_))
        ));
    }

    #[test]
    fn ci_requires_enough_resamples() {
        let err = critical_bandwidth_ci(&bimodal(), 2, 50, Seed(0), &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { field: "resamples", .. }));
    }
}
