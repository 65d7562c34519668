//! Gaussian kernel density estimation on a uniform grid.
//!
//! Two evaluation routes share one contract. [`kde_direct`] sums the kernel
//! over every observation at every grid point. [`kde_fft`] linearly bins the
//! sample onto the grid and convolves the bin counts with the sampled kernel
//! through a zero-padded FFT. [`kde_auto`] picks between them by sample size.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Samples larger than this use the FFT route in [`kde_auto`].
pub const FFT_THRESHOLD: usize = 5000;
/// Grid extends this many bandwidths beyond the data on each side.
pub const GRID_CUT: f64 = 3.0;
pub const MIN_GRID_POINTS: usize = 800;
pub const MAX_GRID_POINTS: usize = 5000;
/// Kernel support used by the FFT route, in bandwidths.
pub const FFT_KERNEL_SUPPORT: f64 = 8.0;
/// Negative FFT roundoff below this fraction of the peak is expected and zeroed.
pub const FFT_CLAMP_FRACTION: f64 = 1e-12;

const SILVERMAN_CONSTANT: f64 = 1.06;
const IQR_TO_SIGMA: f64 = 1.34;

/// Kernel standard deviation, in data units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
#[serde(transparent)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 {
            Ok(Bandwidth(h))
        } else {
            Err(Error::invalid("bandwidth", format!("{h} is not a positive finite number")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Robust rule of thumb `1.06 * min(sd, IQR / 1.34) * n^(-1/5)`.
///
/// `sd` uses the `n - 1` denominator and the IQR uses type-7 quantiles. When
/// the IQR collapses to zero but the standard deviation does not, the
/// standard deviation alone sets the scale.
pub fn silverman_bandwidth(x: &Sample) -> Result<Bandwidth> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateSample(format!(
            "bandwidth rule needs at least 2 observations, got {n}"
        )));
    }
    let sd = x.std_dev();
    let robust = x.iqr() / IQR_TO_SIGMA;
    let scale = match (sd > 0.0, robust > 0.0) {
        (true, true) => sd.min(robust),
        (true, false) => sd,
        (false, true) => robust,
        (false, false) => {
            return Err(Error::DegenerateSample(
                "all observations identical (zero standard deviation and IQR)".into(),
            ))
        }
    };
    Bandwidth::new(SILVERMAN_CONSTANT * scale * (n as f64).powf(-0.2))
}

/// Uniformly spaced evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    spacing: f64,
}

impl Grid {
    /// `len` points from `lo` to `hi` inclusive.
    pub fn new(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid("grid", format!("needs at least 2 points, got {len}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::invalid("grid", format!("invalid span [{lo}, {hi}]")));
        }
        let spacing = (hi - lo) / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|j| lo + j as f64 * spacing).collect();
        points[len - 1] = hi;
        Ok(Grid { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Same point count with every coordinate mapped by `v -> scale * v + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Grid> {
        let (a, b) = (scale * self.start() + shift, scale * self.end() + shift);
        Grid::new(a.min(b), a.max(b), self.len())
    }
}

/// Grid size rule `max(800, min(5000, floor(n / 2)))`.
pub fn grid_size(n: usize) -> usize {
    (n / 2).clamp(MIN_GRID_POINTS, MAX_GRID_POINTS)
}

/// Grid over `[min(x) - 3h, max(x) + 3h]` sized by [`grid_size`].
pub fn default_grid(x: &Sample, h: Bandwidth) -> Grid {
    let pad = GRID_CUT * h.get();
    Grid::new(x.min() - pad, x.max() + pad, grid_size(x.len()))
        .expect("padded span is nonempty for positive bandwidth")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KdeMethod {
    Direct,
    Fft,
}

impl fmt::Display for KdeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KdeMethod::Direct => "direct",
            KdeMethod::Fft => "fft",
        })
    }
}

/// Density estimate evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    grid: Grid,
    density: Vec<f64>,
    bandwidth: Bandwidth,
    method: KdeMethod,
}

impl DensityCurve {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn method(&self) -> KdeMethod {
        self.method
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let d = &self.density;
        let inner: f64 = d[1..d.len() - 1].iter().sum();
        self.grid.spacing() * (inner + 0.5 * (d[0] + d[d.len() - 1]))
    }
}

fn normalizer(n: usize, h: f64) -> f64 {
    1.0 / (n as f64 * h * (2.0 * PI).sqrt())
}

// Steps between exact re-evaluations of the exponential in the recurrence.
const REANCHOR: usize = 32;
// Kernel terms below this are dropped once they are decreasing.
const NEGLIGIBLE: f64 = 1e-300;

/// Adds `exp(-(g_j - x)^2 / 2h^2)` to every `sums[j]`.
///
/// Along a uniform grid consecutive kernel values differ by a factor that
/// itself changes geometrically, so most terms need two multiplications
/// instead of an `exp`. The exponentials are recomputed every few steps to
/// keep the accumulated rounding near machine precision.
fn add_kernel(sums: &mut [f64], start: f64, spacing: f64, x: f64, h: f64) {
    let g = sums.len();
    let a = 0.5 / (h * h);
    let step_ratio = (-2.0 * a * spacing * spacing).exp();
    let j0 = ((x - start) / spacing).round().clamp(0.0, (g - 1) as f64) as usize;

    let mut j = j0;
    while j < g {
        let d = start + j as f64 * spacing - x;
        let mut term = (-a * d * d).exp();
        let mut ratio = (-a * (2.0 * d * spacing + spacing * spacing)).exp();
        let stop = (j + REANCHOR).min(g);
        while j < stop {
            sums[j] += term;
            term *= ratio;
            ratio *= step_ratio;
            j += 1;
        }
        if d > 0.0 && term < NEGLIGIBLE {
            break;
        }
    }

    let mut j = j0;
    while j > 0 {
        let d = start + (j - 1) as f64 * spacing - x;
        let mut term = (-a * d * d).exp();
        let mut ratio = (-a * (spacing * spacing - 2.0 * d * spacing)).exp();
        let stop = j.saturating_sub(REANCHOR);
        while j > stop {
            sums[j - 1] += term;
            term *= ratio;
            ratio *= step_ratio;
            j -= 1;
        }
        if d < 0.0 && term < NEGLIGIBLE {
            break;
        }
    }
}

/// Direct kernel sum at every grid point, `O(n g)`.
pub fn kde_direct(x: &Sample, grid: &Grid, h: Bandwidth) -> DensityCurve {
    let mut sums = vec![0.0; grid.len()];
    for &v in x.values() {
        add_kernel(&mut sums, grid.start(), grid.spacing(), v, h.get());
    }
    let norm = normalizer(x.len(), h.get());
    sums.iter_mut().for_each(|s| *s *= norm);
    DensityCurve {
        grid: grid.clone(),
        density: sums,
        bandwidth: h,
        method: KdeMethod::Direct,
    }
}

/// Linear binning followed by FFT convolution with the sampled kernel.
///
/// Every observation must lie inside the grid span.
pub fn kde_fft(x: &Sample, grid: &Grid, h: Bandwidth) -> Result<DensityCurve> {
    let (lo, hi) = (grid.start(), grid.end());
    for &v in [x.min(), x.max()].iter() {
        if v < lo || v > hi {
            return Err(Error::OutsideGrid { value: v, lo, hi });
        }
    }
    let g = grid.len();
    let spacing = grid.spacing();

    let mut bins = vec![0.0; g];
    for &v in x.values() {
        let pos = (v - lo) / spacing;
        let j = (pos.floor() as usize).min(g - 2);
        let t = (pos - j as f64).clamp(0.0, 1.0);
        bins[j] += 1.0 - t;
        bins[j + 1] += t;
    }

    let reach = ((FFT_KERNEL_SUPPORT * h.get() / spacing).ceil() as usize).clamp(1, g - 1);
    // Period of at least g + reach keeps the circular convolution free of wrap.
    let period = (g + reach).next_power_of_two();

    let mut signal: Vec<Complex<f64>> = bins.iter().map(|&b| Complex::new(b, 0.0)).collect();
    signal.resize(period, Complex::new(0.0, 0.0));
    let mut kernel = vec![Complex::new(0.0, 0.0); period];
    let inv_h = spacing / h.get();
    for k in 0..=reach {
        let u = k as f64 * inv_h;
        let w = (-0.5 * u * u).exp();
        kernel[k] = Complex::new(w, 0.0);
        if k > 0 {
            kernel[period - k] = Complex::new(w, 0.0);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(period);
    let inverse = planner.plan_fft_inverse(period);
    forward.process(&mut signal);
    forward.process(&mut kernel);
    for (s, k) in signal.iter_mut().zip(&kernel) {
        *s *= k;
    }
    inverse.process(&mut signal);

    let scale = normalizer(x.len(), h.get()) / period as f64;
    let mut density: Vec<f64> = signal[..g].iter().map(|c| c.re * scale).collect();
    let peak = density.iter().copied().fold(0.0, f64::max);
    for v in density.iter_mut().filter(|v| **v < 0.0) {
        if -*v > FFT_CLAMP_FRACTION * peak {
            log::warn!("FFT density value {v} below clamp tolerance");
        }
        *v = 0.0;
    }

    Ok(DensityCurve {
        grid: grid.clone(),
        density,
        bandwidth: h,
        method: KdeMethod::Fft,
    })
}

/// Method `kde_auto` uses for a sample of size `n`.
pub fn auto_method(n: usize) -> KdeMethod {
    if n <= FFT_THRESHOLD {
        KdeMethod::Direct
    } else {
        KdeMethod::Fft
    }
}

/// Direct evaluation for `n <= FFT_THRESHOLD`, FFT otherwise.
pub fn kde_auto(x: &Sample, grid: &Grid, h: Bandwidth) -> Result<DensityCurve> {
    match auto_method(x.len()) {
        KdeMethod::Direct => Ok(kde_direct(x, grid, h)),
        KdeMethod::Fft => kde_fft(x, grid, h),
    }
}

/// [`kde_auto`] on [`default_grid`].
pub fn kde_default(x: &Sample, h: Bandwidth) -> Result<DensityCurve> {
    kde_auto(x, &default_grid(x, h), h)
}
