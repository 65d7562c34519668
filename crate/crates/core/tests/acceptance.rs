//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fail.

use std::thread;
use std::time::Instant;

use modality::benchmark::{find_case, run_case, benchmark_cases, BenchmarkCase};
use modality::kde::{auto_method, default_grid, kde_direct, kde_fft};
use modality::rng::{sample_mixture, Component, MixtureSpec, Seed, SeededRng};
use modality::stattests::silverman_test;
use modality::{
    bimodality_strength, count_modes, critical_bandwidth, critical_bandwidth_ci, detect_components,
    dip_statistic, kde_default, silverman_bandwidth, Bandwidth, KdeMethod, Sample, SolverOptions,
};

const SEEDS: std::ops::Range<u64> = 0..10;

/// Published ten-seed means for the rows with CV below 5%.
const REFERENCE_MEANS: [(&str, f64); 9] = [
    ("Well-separated", 1.857),
    ("Moderate separation", 1.047),
    ("Unequal variance", 1.736),
    ("Unequal weights", 1.247),
    ("Extreme separation", 4.682),
    ("Trimodal", 1.379),
    ("Skewed bimodal", 1.144),
    ("Wide-component bimodal", 2.692),
    ("Small sample bimodal", 1.823),
];
const BOUNDARY_ROWS: [&str; 3] = ["Barely separated", "Near unimodal", "Overlapping variances"];
const MEAN_TOLERANCE: f64 = 0.03;
const STABLE_CV_PERCENT: f64 = 5.0;
const UNSTABLE_CV_PERCENT: f64 = 10.0;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn sample(case: &BenchmarkCase, seed: u64) -> Sample {
    sample_mixture(&case.spec, Seed(seed)).unwrap()
}

fn modes_at(x: &Sample, h: f64) -> usize {
    count_modes(&kde_default(x, Bandwidth::new(h).unwrap()).unwrap())
}

fn random_mixture(rng: &mut SeededRng, n_lo: usize, n_hi: usize) -> Sample {
    let comps = 1 + rng.below(4);
    let raw: Vec<(f64, f64, f64)> = (0..comps)
        .map(|_| (0.1 + 0.9 * rng.uniform(), -5.0 + 10.0 * rng.uniform(), 0.1 + 1.4 * rng.uniform()))
        .collect();
    let total: f64 = raw.iter().map(|c| c.0).sum();
    let spec = MixtureSpec::new(
        raw.iter().map(|&(w, m, s)| Component::new(w / total, m, s)).collect(),
        n_lo + rng.below(n_hi - n_lo),
    )
    .unwrap();
    sample_mixture(&spec, Seed(rng.next_u64())).unwrap()
}

fn benchmark_means(opts: &SolverOptions) -> Check {
    let seeds: Vec<u64> = SEEDS.collect();
    let mut bad = Vec::new();
    let mut summary = Vec::new();
    for case in benchmark_cases() {
        let row = run_case(&case, &seeds, opts).unwrap();
        let expected_k = case.k;
        if row.k_hat != expected_k {
            bad.push(format!("{} k_hat {}", case.name, row.k_hat));
        }
        if let Some(&(_, reference)) = REFERENCE_MEANS.iter().find(|(n, _)| *n == case.name) {
            let rel = row.mean / reference - 1.0;
            if rel.abs() > MEAN_TOLERANCE || row.failures() > 0 {
                bad.push(format!("{} mean {:.4} vs {reference} ({:+.2}%)", case.name, row.mean, 100.0 * rel));
            }
            if row.cv_percent >= STABLE_CV_PERCENT {
                bad.push(format!("{} cv {:.2}%", case.name, row.cv_percent));
            }
            summary.push(format!("{:+.1}%", 100.0 * rel));
        } else if BOUNDARY_ROWS.contains(&case.name) && row.cv_percent <= UNSTABLE_CV_PERCENT {
            bad.push(format!("{} cv {:.2}% not unstable", case.name, row.cv_percent));
        }
    }
    let detail = if bad.is_empty() {
        format!("mean offsets [{}]", summary.join(", "))
    } else {
        bad.join("; ")
    };
    check("benchmark means", bad.is_empty(), detail)
}

fn transition_property(opts: &SolverOptions) -> Check {
    let mut rng = SeededRng::new(Seed(2024));
    let mut violations = 0;
    let mut solved = 0;
    for i in 0..50 {
        let x = random_mixture(&mut rng, 50, 500);
        let k = 2 + i % 2;
        let r = critical_bandwidth(&x, k, opts).unwrap();
        if !r.success {
            continue;
        }
        solved += 1;
        let bound = k - 1;
        if modes_at(&x, r.h_crit) > bound || modes_at(&x, r.h_crit * (1.0 - 10.0 * opts.rel_tol)) <= bound {
            violations += 1;
        }
    }
    check(
        "transition property",
        violations == 0,
        format!("{violations} violations over {solved} verified solves of 50"),
    )
}

fn oracle_equivalence(opts: &SolverOptions) -> Check {
    let small = find_case("Small sample bimodal").unwrap();
    let mut worst_scan: f64 = 0.0;
    let mut scan_ok = true;
    for seed in 0..5 {
        let x = sample(&small, seed);
        let hs = silverman_bandwidth(&x).unwrap().get();
        let (lo, hi, points) = (0.05 * hs, 20.0 * hs, 2000);
        let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
        let grid: Vec<f64> = (0..points).map(|i| lo * ratio.powi(i)).collect();
        let last = grid.iter().rposition(|&h| modes_at(&x, h) > 1).unwrap();
        let (a, b) = (grid[last], grid[last + 1]);
        let h = critical_bandwidth(&x, 2, opts).unwrap().h_crit;
        scan_ok &= h >= a * (1.0 - opts.rel_tol) && h <= b * (1.0 + opts.rel_tol);
        worst_scan = worst_scan.max((h / b - 1.0).abs());
    }
    let mut worst_fft: f64 = 0.0;
    for case in benchmark_cases() {
        let x = sample(&case, 0);
        let h = silverman_bandwidth(&x).unwrap();
        let g = default_grid(&x, h);
        let d = kde_direct(&x, &g, h);
        let f = kde_fft(&x, &g, h).unwrap();
        let peak = d.max_density();
        let err = d.density().iter().zip(f.density()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak;
        worst_fft = worst_fft.max(err);
    }
    check(
        "oracle equivalence",
        scan_ok && worst_fft < 1e-4,
        format!("scan bracket held: {scan_ok} (max offset {worst_scan:.2e}); fft sup error {worst_fft:.2e}"),
    )
}

fn mode_monotonicity() -> Check {
    let mut rng = SeededRng::new(Seed(77));
    let mut violations = 0;
    for _ in 0..100 {
        let x = random_mixture(&mut rng, 20, 400);
        let h0 = silverman_bandwidth(&x).unwrap().get();
        let counts: Vec<usize> = (0..30).map(|i| modes_at(&x, h0 * 0.05 * 1.25f64.powi(i))).collect();
        violations += counts.windows(2).filter(|w| w[1] > w[0]).count();
    }
    check("mode monotonicity", violations == 0, format!("{violations} violations over 100 ladders"))
}

fn test_conclusions() -> Check {
    let strong: Vec<&str> = REFERENCE_MEANS.iter().map(|(n, _)| *n).collect();
    let rows: Vec<(&str, f64)> = thread::scope(|s| {
        let handles: Vec<_> = strong
            .iter()
            .copied()
            .chain(["Barely separated"])
            .map(|name| {
                s.spawn(move || {
                    let x = sample(&find_case(name).unwrap(), 0);
                    (name, silverman_test(&x, 1, 999, Seed(7)).unwrap().p_value)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut bad = Vec::new();
    for &(name, p) in &rows {
        let ok = if name == "Barely separated" { p > 0.05 } else { p < 0.01 };
        if !ok {
            bad.push(format!("{name} p={p:.3}"));
        }
    }
    let barely = rows.iter().find(|r| r.0 == "Barely separated").unwrap().1;
    let detail = if bad.is_empty() {
        format!("{} strong rows p < 0.01; barely separated p = {barely:.3}", strong.len())
    } else {
        bad.join("; ")
    };
    check("silverman test conclusions", bad.is_empty(), detail)
}

fn ci_band(opts: &SolverOptions) -> Check {
    let x = sample(&find_case("Well-separated").unwrap(), 0);
    let r = critical_bandwidth_ci(&x, 2, 999, Seed(0), opts).unwrap();
    let ci = r.ci.unwrap();
    let width = ci.high - ci.low;
    check(
        "bootstrap interval",
        (0.15..=0.45).contains(&width) && ci.low <= r.h_crit && r.h_crit <= ci.high,
        format!("[{:.3}, {:.3}] width {width:.3} around {:.3}", ci.low, ci.high, r.h_crit),
    )
}

fn galaxy_vignette() -> Check {
    let spec = MixtureSpec::new(
        vec![Component::new(0.55, 0.8, 0.15), Component::new(0.45, 0.3, 0.12)],
        500,
    )
    .unwrap();
    let x = sample_mixture(&spec, Seed(0)).unwrap();
    let s = bimodality_strength(&x).unwrap();
    let d = detect_components(&x).unwrap();
    let (m1, m2) = (d.component1.mean, d.component2.mean);
    check(
        "galaxy colors",
        (1.8..=2.4).contains(&s.ratio) && (m1 - 0.30).abs() <= 0.05 && (m2 - 0.80).abs() <= 0.05,
        format!("ratio {:.3} ({}), means {m1:.3} / {m2:.3}", s.ratio, s.label),
    )
}

fn equivariance(opts: &SolverOptions) -> Check {
    let x = sample(&find_case("Skewed bimodal").unwrap(), 5);
    let hs = silverman_bandwidth(&x).unwrap().get();
    let hc = critical_bandwidth(&x, 2, opts).unwrap().h_crit;
    let dip = dip_statistic(&x).unwrap();
    let d = detect_components(&x).unwrap();
    let mut bad = Vec::new();
    for (a, b) in [(7.0, 0.0), (0.05, 2.0), (1.0, 100.0), (-1.0, 0.0)] {
        let y = x.affine(a, b).unwrap();
        let scale: f64 = f64::abs(a);
        if (silverman_bandwidth(&y).unwrap().get() / (scale * hs) - 1.0).abs() > 1e-9 {
            bad.push(format!("silverman ({a},{b})"));
        }
        let hy = critical_bandwidth(&y, 2, opts).unwrap().h_crit;
        if (hy / (scale * hc) - 1.0).abs() > 2.0 * opts.rel_tol {
            bad.push(format!("h_crit ({a},{b})"));
        }
        if (dip_statistic(&y).unwrap() - dip).abs() > 1e-12 {
            bad.push(format!("dip ({a},{b})"));
        }
        if a > 0.0 {
            let e = detect_components(&y).unwrap();
            let sep_ok = (e.separation_point - (a * d.separation_point + b)).abs() <= 1e-9 * (1.0 + e.separation_point.abs());
            let mean_ok = (e.component2.mean - (a * d.component2.mean + b)).abs() <= 1e-9 * (1.0 + e.component2.mean.abs());
            if !sep_ok || !mean_ok || e.component1.weight != d.component1.weight {
                bad.push(format!("decomposition ({a},{b})"));
            }
        }
    }
    let detail = if bad.is_empty() {
        "bandwidths, critical bandwidth, dip and decomposition follow affine maps".to_string()
    } else {
        bad.join("; ")
    };
    check("equivariance", bad.is_empty(), detail)
}

fn large_sample_speed(opts: &SolverOptions) -> Check {
    let spec = find_case("Well-separated").unwrap().spec.with_n(10_000).unwrap();
    let x = sample_mixture(&spec, Seed(0)).unwrap();
    let start = Instant::now();
    let r = critical_bandwidth(&x, 2, opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let method = auto_method(x.len());
    check(
        "n = 10000 performance",
        secs < 5.0 && method == KdeMethod::Fft && r.success,
        format!("{secs:.2} s via {method:?}, h_crit {:.4}", r.h_crit),
    )
}

fn main() {
    let opts = SolverOptions::default();
    let started = Instant::now();
    let checks = [
        benchmark_means(&opts),
        transition_property(&opts),
        oracle_equivalence(&opts),
        mode_monotonicity(),
        test_conclusions(),
        ci_band(&opts),
        galaxy_vignette(),
        equivariance(&opts),
        large_sample_speed(&opts),
    ];
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<28} {}", c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        checks.len() - failed,
        checks.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
