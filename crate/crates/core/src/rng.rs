//! Seeded random generation.
//!
//! Every random consumer owns a ChaCha8 generator seeded from a [`Seed`]
//! derived for its purpose and replicate index, so replicate streams do not
//! depend on the order in which replicates are evaluated.
//!
//! Transforms are fixed here rather than borrowed from a distribution crate:
//! uniforms take the top 53 bits of a 64-bit word, bounded integers use
//! Lemire's multiply-and-reject method, and standard normals come from the
//! Box–Muller transform, consumed in pairs.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Root seed for a reproducible computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub u64);

/// Logical consumers of randomness. The discriminant is mixed into derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Mixture = 0x6d69_7874,
    Resample = 0x7265_7361,
    CiReplicate = 0x6369_7265,
    SmoothedBootstrap = 0x736d_6f6f,
    DipNull = 0x6469_706e,
}

impl Seed {
    /// Seed for replicate `index` of `purpose`, independent of evaluation order.
    pub fn derive(self, purpose: Purpose, index: u64) -> Seed {
        let a = splitmix64(self.0 ^ splitmix64(purpose as u64));
        Seed(splitmix64(a ^ splitmix64(index.wrapping_add(0x9e37_79b9))))
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for one consumer.
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: Seed) -> Self {
        let mut key = [0u8; 32];
        let mut z = seed.0;
        for chunk in key.chunks_exact_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        SeededRng {
            inner: ChaCha8Rng::from_seed(key),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer on `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "empty range");
        let bound = bound as u64;
        let mut m = (self.next_u64() as u128) * (bound as u128);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (bound as u128);
            }
        }
        (m >> 64) as usize
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }
}

/// One Gaussian mixture component.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

impl Component {
    pub const fn new(weight: f64, mean: f64, std: f64) -> Self {
        Component { weight, mean, std }
    }
}

/// How draws are assigned to components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    /// Component sizes are fixed at `w * n`, rounded by largest remainder.
    #[default]
    Stratified,
    /// Each draw picks its component independently with probability `w`.
    Multinomial,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixtureSpec {
    components: Vec<Component>,
    n: usize,
    allocation: Allocation,
}

impl MixtureSpec {
    pub fn new(components: Vec<Component>, n: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "at least one component is required"));
        }
        if n == 0 {
            return Err(Error::invalid("n", "sample size must be at least 1"));
        }
        for (i, c) in components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight >= 0.0 && c.weight <= 1.0) {
                return Err(Error::invalid(
                    "weight",
                    format!("component {i} has weight {} outside [0, 1]", c.weight),
                ));
            }
            if !c.mean.is_finite() {
                return Err(Error::invalid("mean", format!("component {i} mean is not finite")));
            }
            if !(c.std.is_finite() && c.std > 0.0) {
                return Err(Error::invalid(
                    "std",
                    format!("component {i} has std {}, must be positive", c.std),
                ));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weight", format!("weights sum to {total}, not 1")));
        }
        Ok(MixtureSpec {
            components,
            n,
            allocation: Allocation::default(),
        })
    }

    pub fn with_allocation(mut self, allocation: Allocation) -> Self {
        self.allocation = allocation;
        self
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "sample size must be at least 1"));
        }
        self.n = n;
        Ok(self)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allocation(&self) -> Allocation {
        self.allocation
    }

    /// Per-component sizes under stratified allocation.
    pub fn stratified_counts(&self) -> Vec<usize> {
        let n = self.n as f64;
        let mut counts: Vec<usize> = self
            .components
            .iter()
            .map(|c| (c.weight * n).floor() as usize)
            .collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        // Stable sort keeps component order among equal remainders.
        order.sort_by(|&a, &b| {
            let ra = self.components[a].weight * n - counts[a] as f64;
            let rb = self.components[b].weight * n - counts[b] as f64;
            rb.total_cmp(&ra)
        });
        for &i in order.iter().take(self.n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

/// Draws `spec.n()` observations from the mixture, sorted ascending.
pub fn sample_mixture(spec: &MixtureSpec, seed: Seed) -> Result<Sample> {
    let mut rng = SeededRng::new(seed.derive(Purpose::Mixture, 0));
    let mut values = Vec::with_capacity(spec.n);
    match spec.allocation {
        Allocation::Stratified => {
            for (c, count) in spec.components.iter().zip(spec.stratified_counts()) {
                values.extend((0..count).map(|_| rng.normal(c.mean, c.std)));
            }
        }
        Allocation::Multinomial => {
            let last = spec.components.len() - 1;
            for _ in 0..spec.n {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut pick = last;
                for (i, c) in spec.components.iter().enumerate() {
                    acc += c.weight;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let c = spec.components[pick];
                values.push(rng.normal(c.mean, c.std));
            }
        }
    }
    Sample::new(values)
}

/// Draws `x.len()` observations uniformly with replacement from `x`, sorted.
pub fn resample_with_replacement(x: &Sample, seed: Seed) -> Sample {
    let mut rng = SeededRng::new(seed.derive(Purpose::Resample, 0));
    let src = x.values();
    let values = (0..src.len()).map(|_| src[rng.below(src.len())]).collect();
    Sample::new(values).expect("resample of a valid sample is valid")
}
