use modality::benchmark::find_case;
use modality::rng::{sample_mixture, Component, MixtureSpec, Purpose, Seed, SeededRng};
use modality::stattests::{
    dip_test, excess_mass, silverman_test, EXCESS_MASS_LEVELS, MIN_DIP_RESAMPLES,
};
use modality::{kde_default, silverman_bandwidth, Error, Sample, TestMethod};

fn case_sample(name: &str, seed: u64) -> Sample {
    sample_mixture(&find_case(name).unwrap().spec, Seed(seed)).unwrap()
}

fn normal_sample(n: usize, seed: u64) -> Sample {
    let spec = MixtureSpec::new(vec![Component::new(1.0, 0.0, 1.0)], n).unwrap();
    sample_mixture(&spec, Seed(seed)).unwrap()
}

#[test]
fn silverman_test_is_reproducible() {
    let x = case_sample("Small sample bimodal", 2);
    let a = silverman_test(&x, 1, 99, Seed(3)).unwrap();
    let b = silverman_test(&x, 1, 99, Seed(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.method, TestMethod::Silverman);
    assert_eq!(a.resamples, 99);
    assert!(a.h_crit.is_some());
    assert!(a.p_value > 0.0 && a.p_value <= 1.0);
    // p has the form (1 + m) / (B + 1)
    let m = a.p_value * 100.0 - 1.0;
    assert!((m - m.round()).abs() < 1e-9);
}

// Barely separated and near unimodal are the same mixture up to an affine
// map of the standard normal draws, so the whole test is equivariant.
#[test]
fn silverman_test_is_affine_invariant() {
    let a = silverman_test(&case_sample("Barely separated", 4), 1, 99, Seed(1)).unwrap();
    let b = silverman_test(&case_sample("Near unimodal", 4), 1, 99, Seed(1)).unwrap();
    assert_eq!(a.p_value, b.p_value);
    let x = case_sample("Moderate separation", 0);
    let c = silverman_test(&x, 1, 99, Seed(2)).unwrap();
    let d = silverman_test(&x.affine(25.0, -3.0).unwrap(), 1, 99, Seed(2)).unwrap();
    assert_eq!(c.p_value, d.p_value);
}

#[test]
fn silverman_test_rejects_separated_accepts_normal() {
    let sep = silverman_test(&case_sample("Well-separated", 0), 1, 199, Seed(7)).unwrap();
    assert!(sep.p_value < 0.01, "{}", sep.p_value);
    let uni = silverman_test(&normal_sample(300, 9), 1, 199, Seed(7)).unwrap();
    assert!(uni.p_value > 0.05, "{}", uni.p_value);
}

#[test]
fn silverman_test_rejects_bad_arguments() {
    let x = normal_sample(50, 0);
    assert!(matches!(silverman_test(&x, 1, 50, Seed(0)), Err(Error::InvalidInput { .. })));
    assert!(silverman_test(&x, 0, 99, Seed(0)).is_err());
    assert!(silverman_test(&normal_sample(5, 0), 1, 99, Seed(0)).is_err());
}

#[test]
fn dip_test_on_normal_does_not_reject() {
    let r = dip_test(&normal_sample(500, 1), 999, Seed(0)).unwrap();
    assert_eq!(r.method, TestMethod::Dip);
    assert!(r.p_value > 0.1, "{}", r.p_value);
    assert!(r.h_crit.is_none());
}

#[test]
fn dip_test_rejects_separated() {
    let r = dip_test(&case_sample("Extreme separation", 0), 199, Seed(0)).unwrap();
    assert!(r.p_value < 0.01);
}

/// Under a uniform null the Monte Carlo p-value is itself near uniform.
#[test]
fn dip_test_is_calibrated_on_uniform_data() {
    let trials = 200;
    let mut rejections = 0;
    for t in 0..trials {
        let mut rng = SeededRng::new(Seed(99).derive(Purpose::Mixture, t));
        let x = Sample::new((0..40).map(|_| rng.uniform()).collect()).unwrap();
        if dip_test(&x, MIN_DIP_RESAMPLES, Seed(t)).unwrap().p_value <= 0.1 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    assert!((0.05..=0.15).contains(&rate), "rejection rate {rate}");
}

#[test]
fn excess_mass_curve_shape() {
    let x = case_sample("Trimodal", 0);
    let curve = excess_mass(&x, None).unwrap();
    assert_eq!(curve.thresholds.len(), EXCESS_MASS_LEVELS);
    assert_eq!(curve.mass.len(), EXCESS_MASS_LEVELS);
    assert_eq!(curve.thresholds[0], 0.0);

    let h = silverman_bandwidth(&x).unwrap();
    let kde = kde_default(&x, h).unwrap();
    assert!((curve.mass[0] - kde.integral()).abs() < 1e-9);
    assert!(curve.mass[EXCESS_MASS_LEVELS - 1].abs() < 1e-12);
    assert!((curve.bandwidth - h.get()).abs() < 1e-15);

    for w in curve.mass.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    for level in 0..EXCESS_MASS_LEVELS {
        let parts = curve.interval_masses(level);
        assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        assert!((parts.iter().sum::<f64>() - curve.mass[level]).abs() < 1e-9);
        for k in 1..4 {
            assert!(curve.mass_k(level, k + 1) >= curve.mass_k(level, k));
        }
    }
    let second = (0..EXCESS_MASS_LEVELS)
        .map(|l| curve.mass_k(l, 2) - curve.mass_k(l, 1))
        .fold(0.0, f64::max);
    assert!((curve.delta - second).abs() < 1e-12);
}

#[test]
fn excess_mass_separates_bimodal_from_normal() {
    let bi = excess_mass(&case_sample("Well-separated", 0), None).unwrap();
    let uni = excess_mass(&normal_sample(400, 0), None).unwrap();
    assert!(uni.delta < 1e-3, "{}", uni.delta);
    assert!(bi.delta > 0.2, "{}", bi.delta);
    assert!(excess_mass(&Sample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap(), None).is_err());
}
