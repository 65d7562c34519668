//! Multimodality tests: Silverman's smoothed bootstrap, Hartigan's dip, and
//! the excess mass curve.

use std::fmt;

use crate::error::{Error, Result};
use crate::kde::{kde_default, silverman_bandwidth, Bandwidth};
use crate::rng::{Purpose, Seed, SeededRng};
use crate::sample::Sample;
use crate::solver::{critical_bandwidth, SolverOptions};

pub const MIN_SILVERMAN_RESAMPLES: usize = 99;
pub const MIN_DIP_RESAMPLES: usize = 199;
/// Threshold levels in the excess mass ladder.
pub const EXCESS_MASS_LEVELS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Silverman,
    Dip,
    ExcessMass,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Silverman => "silverman",
            TestMethod::Dip => "dip",
            TestMethod::ExcessMass => "excess_mass",
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub resamples: usize,
    pub method: TestMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_crit: Option<f64>,
}

fn add_one_p_value(exceed: usize, resamples: usize) -> f64 {
    (1 + exceed) as f64 / (resamples + 1) as f64
}

/// Silverman's test of "at most `mod0` modes".
///
/// The statistic is the smallest bandwidth giving at most `mod0` modes.
/// Replicates are drawn from the estimate at that bandwidth,
/// `y = m + (x_J - m + h e) / sqrt(1 + h^2 / s^2)` with `m`, `s` the sample
/// mean and standard deviation, which keeps the replicate variance equal to
/// the sample variance. The p-value is the add-one proportion of replicates
/// whose own critical bandwidth is at least the observed one.
pub fn silverman_test(x: &Sample, mod0: usize, resamples: usize, seed: Seed) -> Result<TestResult> {
    silverman_test_with(x, mod0, resamples, seed, &SolverOptions::default())
}

pub fn silverman_test_with(
    x: &Sample,
    mod0: usize,
    resamples: usize,
    seed: Seed,
    opts: &SolverOptions,
) -> Result<TestResult> {
    if x.len() < 10 {
        return Err(Error::DegenerateSample(format!(
            "silverman test needs at least 10 observations, got {}",
            x.len()
        )));
    }
    if mod0 < 1 {
        return Err(Error::invalid("mod0", "null mode count must be at least 1"));
    }
    if resamples < MIN_SILVERMAN_RESAMPLES {
        return Err(Error::invalid(
            "resamples",
            format!("need at least {MIN_SILVERMAN_RESAMPLES}, got {resamples}"),
        ));
    }
    let k = mod0 + 1;
    let observed = critical_bandwidth(x, k, opts)?;
    if !observed.success {
        return Err(Error::Inconclusive(format!(
            "critical bandwidth not verified on the observed sample: {}",
            observed.diagnostic.as_deref().unwrap_or("unknown")
        )));
    }
    let h = observed.h_crit;
    let mean = x.mean();
    let sd = x.std_dev();
    let shrink = 1.0 / (1.0 + h * h / (sd * sd)).sqrt();
    let src = x.values();

    let mut exceed = 0;
    let mut draws = Vec::with_capacity(src.len());
    for b in 0..resamples {
        let mut rng = SeededRng::new(seed.derive(Purpose::SmoothedBootstrap, b as u64));
        draws.clear();
        draws.extend((0..src.len()).map(|_| {
            let xj = src[rng.below(src.len())];
            mean + (xj - mean + h * rng.standard_normal()) * shrink
        }));
        let y = Sample::new(draws.clone())?;
        // A replicate that cannot be solved counts against the null.
        let at_least = match critical_bandwidth(&y, k, opts) {
            Ok(r) => r.h_crit >= h,
            Err(_) => true,
        };
        exceed += at_least as usize;
    }
    Ok(TestResult {
        statistic: h,
        p_value: add_one_p_value(exceed, resamples),
        resamples,
        method: TestMethod::Silverman,
        h_crit: Some(h),
    })
}

/// Hartigan's dip: distance from the empirical CDF to the nearest unimodal CDF.
///
/// Alternates greatest-convex-minorant and least-concave-majorant fits on a
/// shrinking modal interval, following Hartigan & Hartigan's algorithm.
/// The result lies in `[1 / (2n), 1/4]`.
pub fn dip_statistic(x: &Sample) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("sample", "dip needs at least 2 observations"));
    }
    Ok(dip_sorted(x.values()) / (2 * n) as f64)
}

/// Twice `n` times the dip, for ascending `xs` with `len >= 2`.
fn dip_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    // 1-based indexing mirrors the index bookkeeping of the algorithm.
    let x = |i: usize| xs[i - 1];
    let mut dip = 1.0;
    if x(n) == x(1) {
        return dip;
    }

    // mn[j]: previous vertex of the convex minorant ending at j.
    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x(j) - x(mnj)) * ((mnj - mnmnj) as f64) < (x(mnj) - x(mnmnj)) * (j - mnj) as f64
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    // mj[k]: next vertex of the concave majorant starting at k.
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x(k) - x(mjk)) * (mjk as f64 - mjmjk as f64)
                    < (x(mjk) - x(mjmjk)) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut low = 1usize;
    let mut high = n;
    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    loop {
        // Convex minorant vertices from high down to low.
        gcm[1] = high;
        let mut i = 1;
        while gcm[i] > low {
            gcm[i + 1] = mn[gcm[i]];
            i += 1;
        }
        let l_gcm = i;
        let mut ig = l_gcm;
        let mut ix = ig - 1;

        // Concave majorant vertices from low up to high.
        lcm[1] = low;
        let mut i = 1;
        while lcm[i] < high {
            lcm[i + 1] = mj[lcm[i]];
            i += 1;
        }
        let l_lcm = i;
        let mut ih = l_lcm;
        let mut iv = 2;

        // Largest vertical distance between the two fits on [low, high].
        let mut d = 0.0;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                        - (x(lcmiv) - x(gcmi1)) * (gcmix - gcmi1) as f64 / (x(gcmix) - x(gcmi1));
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x(gcmix) - x(lcmiv1)) * (lcmiv - lcmiv1) as f64 / (x(lcmiv) - x(lcmiv1))
                        - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                if ix < 1 {
                    ix = 1;
                }
                if iv > l_lcm {
                    iv = l_lcm;
                }
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }

        if d < dip {
            return dip;
        }

        // Dip of the convex minorant on the left of the modal interval.
        let mut dip_l: f64 = 0.0;
        for j in ig..l_gcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (gcm[j + 1], gcm[j]);
            if je - jb > 1 && x(je) != x(jb) {
                let c = (je - jb) as f64 / (x(je) - x(jb));
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x(jj) - x(jb)) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        // Dip of the concave majorant on the right.
        let mut dip_u: f64 = 0.0;
        for j in ih..l_lcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (lcm[j], lcm[j + 1]);
            if je - jb > 1 && x(je) != x(jb) {
                let c = (je - jb) as f64 / (x(je) - x(jb));
                for jj in jb..=je {
                    let t = (x(jj) - x(jb)) * c - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_l.max(dip_u));

        if low == gcm[ig] && high == lcm[ih] {
            return dip;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
}

/// Dip test calibrated by Monte Carlo on uniform samples of the same size.
pub fn dip_test(x: &Sample, resamples: usize, seed: Seed) -> Result<TestResult> {
    let n = x.len();
    if n < 4 {
        return Err(Error::DegenerateSample(format!(
            "dip test needs at least 4 observations, got {n}"
        )));
    }
    if resamples < MIN_DIP_RESAMPLES {
        return Err(Error::invalid(
            "resamples",
            format!("need at least {MIN_DIP_RESAMPLES}, got {resamples}"),
        ));
    }
    let observed = dip_sorted(x.values());
    let mut u = vec![0.0; n];
    let mut exceed = 0;
    for b in 0..resamples {
        let mut rng = SeededRng::new(seed.derive(Purpose::DipNull, b as u64));
        u.iter_mut().for_each(|v| *v = rng.uniform());
        u.sort_by(f64::total_cmp);
        exceed += (dip_sorted(&u) >= observed) as usize;
    }
    Ok(TestResult {
        statistic: observed / (2 * n) as f64,
        p_value: add_one_p_value(exceed, resamples),
        resamples,
        method: TestMethod::Dip,
        h_crit: None,
    })
}

/// Excess mass of the density estimate over a ladder of thresholds.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExcessMassCurve {
    pub bandwidth: f64,
    /// Increasing thresholds from 0 to the maximum density.
    pub thresholds: Vec<f64>,
    /// Total excess mass over all super-level intervals at each threshold.
    pub mass: Vec<f64>,
    /// Largest value of `E_2 - E_1`, the second-largest interval mass.
    pub delta: f64,
    intervals: Vec<Vec<f64>>,
}

impl ExcessMassCurve {
    /// Excess mass restricted to the `k` largest intervals at threshold `level`.
    pub fn mass_k(&self, level: usize, k: usize) -> f64 {
        self.intervals[level].iter().take(k).sum()
    }

    /// Interval masses at threshold `level`, largest first.
    pub fn interval_masses(&self, level: usize) -> &[f64] {
        &self.intervals[level]
    }
}

/// Masses of `(f - p)_+` over each maximal interval where the linearly
/// interpolated density exceeds `p`.
fn super_level_masses(density: &[f64], spacing: f64, p: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut current = 0.0;
    let mut open = false;
    for w in density.windows(2) {
        let (a, b) = (w[0] - p, w[1] - p);
        let area = if a > 0.0 && b > 0.0 {
            0.5 * (a + b) * spacing
        } else if a > 0.0 || b > 0.0 {
            let top = a.max(b);
            0.5 * top * top / (a - b).abs() * spacing
        } else {
            0.0
        };
        if area > 0.0 {
            current += area;
            open = true;
        }
        if b <= 0.0 && open {
            out.push(current);
            current = 0.0;
            open = false;
        }
    }
    if open {
        out.push(current);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Excess mass curve of the estimate at `h` (default: the rule-of-thumb bandwidth).
pub fn excess_mass(x: &Sample, h: Option<Bandwidth>) -> Result<ExcessMassCurve> {
    if x.len() < 5 {
        return Err(Error::DegenerateSample(format!(
            "excess mass needs at least 5 observations, got {}",
            x.len()
        )));
    }
    let h = match h {
        Some(h) => h,
        None => silverman_bandwidth(x)?,
    };
    let curve = kde_default(x, h)?;
    let peak = curve.max_density();
    let spacing = curve.grid().spacing();
    let levels = EXCESS_MASS_LEVELS;
    let thresholds: Vec<f64> = (0..levels)
        .map(|l| peak * l as f64 / (levels - 1) as f64)
        .collect();
    let intervals: Vec<Vec<f64>> = thresholds
        .iter()
        .map(|&p| super_level_masses(curve.density(), spacing, p))
        .collect();
    let mass = intervals.iter().map(|m| m.iter().sum()).collect();
    let delta = intervals
        .iter()
        .map(|m| m.get(1).copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    Ok(ExcessMassCurve {
        bandwidth: h.get(),
        thresholds,
        mass,
        delta,
        intervals,
    })
}
