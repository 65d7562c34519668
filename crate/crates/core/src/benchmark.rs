//! Benchmark mixtures with known structure, and the multi-seed harness that
//! summarizes critical bandwidths over them.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::Result;
use crate::kde::{auto_method, kde_default, silverman_bandwidth, KdeMethod};
use crate::modes::count_modes;
use crate::rng::{sample_mixture, Component, MixtureSpec, Seed};
use crate::solver::{critical_bandwidth, SolverOptions};

pub const DEFAULT_SEEDS: std::ops::Range<u64> = 0..10;
pub const SCALABILITY_SIZES: [usize; 3] = [100, 1000, 10000];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    pub name: &'static str,
    pub spec: MixtureSpec,
    /// Modality passed to the solver.
    pub k: usize,
}

fn case(name: &'static str, n: usize, k: usize, comps: &[(f64, f64, f64)]) -> BenchmarkCase {
    let components = comps.iter().map(|&(w, m, s)| Component::new(w, m, s)).collect();
    BenchmarkCase {
        name,
        spec: MixtureSpec::new(components, n).expect("catalog mixtures are valid"),
        k,
    }
}

/// The twelve benchmark mixtures, from well separated to nearly unimodal.
pub fn benchmark_cases() -> Vec<BenchmarkCase> {
    let third = 1.0 / 3.0;
    vec![
        case("Well-separated", 400, 2, &[(0.5, -2.0, 0.3), (0.5, 2.0, 0.3)]),
        case("Moderate separation", 500, 2, &[(0.5, -1.0, 0.5), (0.5, 1.5, 0.5)]),
        case("Barely separated", 600, 2, &[(0.5, -0.5, 0.4), (0.5, 0.5, 0.4)]),
        case("Unequal variance", 400, 2, &[(0.5, -2.0, 0.6), (0.5, 2.0, 0.2)]),
        case("Unequal weights", 500, 2, &[(0.2, -2.0, 0.3), (0.8, 2.0, 0.3)]),
        case("Extreme separation", 400, 2, &[(0.5, -5.0, 0.5), (0.5, 5.0, 0.5)]),
        case(
            "Trimodal",
            450,
            3,
            &[(third, -3.0, 0.3), (third, 0.0, 0.3), (1.0 - 2.0 * third, 3.0, 0.3)],
        ),
        case("Skewed bimodal", 500, 2, &[(0.7, -1.5, 0.4), (0.3, 2.0, 0.6)]),
        case("Wide-component bimodal", 400, 2, &[(0.5, -3.0, 0.8), (0.5, 3.0, 0.8)]),
        case("Near unimodal", 600, 2, &[(0.5, 0.0, 0.6), (0.5, 1.5, 0.6)]),
        case("Small sample bimodal", 60, 2, &[(0.5, -2.0, 0.5), (0.5, 2.0, 0.5)]),
        case("Overlapping variances", 500, 2, &[(0.5, -0.8, 0.7), (0.5, 0.8, 0.5)]),
    ]
}

pub fn find_case(name: &str) -> Option<BenchmarkCase> {
    benchmark_cases()
        .into_iter()
        .find(|c| c.name.eq_ignore_ascii_case(name))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchmarkRow {
    pub case: String,
    pub n: usize,
    pub k: usize,
    pub seeds: Vec<u64>,
    /// Critical bandwidth per seed; `None` where the solve failed.
    pub h_crit: Vec<Option<f64>>,
    /// Mode count at the rule-of-thumb bandwidth per seed.
    pub modes: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub cv_percent: f64,
    /// Most frequent per-seed mode count, ties toward the larger count.
    pub k_hat: usize,
}

impl BenchmarkRow {
    pub fn failures(&self) -> usize {
        self.h_crit.iter().filter(|h| h.is_none()).count()
    }
}

fn most_frequent(counts: &[usize]) -> usize {
    let max = counts.iter().copied().max().unwrap_or(0);
    // max_by_key keeps the last maximum, i.e. the larger count on ties.
    (0..=max)
        .max_by_key(|&c| counts.iter().filter(|&&v| v == c).count())
        .unwrap_or(0)
}

/// Solves one case across `seeds`.
pub fn run_case(case: &BenchmarkCase, seeds: &[u64], opts: &SolverOptions) -> Result<BenchmarkRow> {
    let mut h_crit = Vec::with_capacity(seeds.len());
    let mut modes = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let x = sample_mixture(&case.spec, Seed(s))?;
        let solved = critical_bandwidth(&x, case.k, opts)
            .ok()
            .filter(|r| r.success)
            .map(|r| r.h_crit);
        h_crit.push(solved);
        modes.push(count_modes(&kde_default(&x, silverman_bandwidth(&x)?)?));
    }
    let ok: Vec<f64> = h_crit.iter().flatten().copied().collect();
    let (mean, std) = match ok.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (ok[0], 0.0),
        m => {
            let mean = ok.iter().sum::<f64>() / m as f64;
            let var = ok.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (mean, var.sqrt())
        }
    };
    Ok(BenchmarkRow {
        case: case.name.to_string(),
        n: case.spec.n(),
        k: case.k,
        seeds: seeds.to_vec(),
        h_crit,
        k_hat: most_frequent(&modes),
        modes,
        mean,
        std,
        cv_percent: 100.0 * std / mean,
    })
}

pub fn run_benchmark(seeds: &[u64], opts: &SolverOptions) -> Result<Vec<BenchmarkRow>> {
    benchmark_cases().iter().map(|c| run_case(c, seeds, opts)).collect()
}

/// CSV with fixed six-decimal formatting; identical bytes for identical inputs.
pub fn rows_to_csv(rows: &[BenchmarkRow]) -> String {
    let n_seeds = rows.iter().map(|r| r.seeds.len()).max().unwrap_or(0);
    let mut out = String::from("case,n,k,mean,std,cv_percent,k_hat,failures");
    for j in 0..n_seeds {
        write!(out, ",h_seed{}", rows[0].seeds.get(j).copied().unwrap_or(j as u64)).unwrap();
    }
    out.push('\n');
    for r in rows {
        write!(
            out,
            "{},{},{},{:.6},{:.6},{:.4},{},{}",
            r.case,
            r.n,
            r.k,
            r.mean,
            r.std,
            r.cv_percent,
            r.k_hat,
            r.failures()
        )
        .unwrap();
        for h in &r.h_crit {
            match h {
                Some(h) => write!(out, ",{h:.6}").unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Aligned plain-text summary.
pub fn rows_to_text(rows: &[BenchmarkRow]) -> String {
    let mut out = format!(
        "{:<24} {:>5} {:>9} {:>8} {:>8} {:>5} {:>4}\n",
        "case", "n", "mean", "std", "CV%", "k_hat", "fail"
    );
    for r in rows {
        writeln!(
            out,
            "{:<24} {:>5} {:>9.4} {:>8.4} {:>8.2} {:>5} {:>4}",
            r.case,
            r.n,
            r.mean,
            r.std,
            r.cv_percent,
            r.k_hat,
            r.failures()
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScalabilityRow {
    pub n: usize,
    pub h_crit: Option<f64>,
    pub seconds: f64,
    pub method: KdeMethod,
}

/// Times `critical_bandwidth` on the well-separated mixture at each size.
pub fn run_scalability(sizes: &[usize], seed: Seed, opts: &SolverOptions) -> Result<Vec<ScalabilityRow>> {
    let base = benchmark_cases().swap_remove(0).spec;
    sizes
        .iter()
        .map(|&n| {
            let x = sample_mixture(&base.clone().with_n(n)?, seed)?;
            let start = Instant::now();
            let r = critical_bandwidth(&x, 2, opts);
            Ok(ScalabilityRow {
                n,
                seconds: start.elapsed().as_secs_f64(),
                h_crit: r.ok().filter(|r| r.success).map(|r| r.h_crit),
                method: auto_method(n),
            })
        })
        .collect()
}

pub fn scalability_to_csv(rows: &[ScalabilityRow]) -> String {
    let mut out = String::from("n,h_crit,seconds,method\n");
    for r in rows {
        let h = r.h_crit.map(|h| format!("{h:.6}")).unwrap_or_default();
        writeln!(out, "{},{},{:.4},{}", r.n, h, r.seconds, r.method).unwrap();
    }
    out
}
