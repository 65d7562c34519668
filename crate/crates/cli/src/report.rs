//! Text and JSON renderings of command results. Both are built from the same
//! values so the two formats always agree.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use modality::stattests::{dip_test, excess_mass, silverman_test};
use modality::{
    bimodality_strength, critical_bandwidth, critical_bandwidth_ci, detect_components, find_modes,
    find_trough, silverman_bandwidth, Bandwidth, Error, ModeSet, NumericColumn, Seed, SolverOptions,
    TestResult,
};

pub const ALPHA: f64 = 0.05;

pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub code: u8,
}

impl Outcome {
    pub fn ok(text: String, json: Value) -> Self {
        Outcome { text, json, code: 0 }
    }
}

fn input_json(path: &Path, col: &NumericColumn) -> Value {
    json!({
        "path": path.display().to_string(),
        "column": col.name,
        "n": col.sample.len(),
        "dropped": col.dropped,
    })
}

fn modes_text(out: &mut String, modes: &ModeSet) {
    let locs: Vec<String> = modes.locations.iter().map(|m| format!("{m:.4}")).collect();
    writeln!(out, "modes: {} at [{}]", modes.count(), locs.join(", ")).unwrap();
}

pub fn analyze(path: &Path, col: &NumericColumn, k: usize, ci: Option<(usize, Seed)>) -> Result<Outcome, Error> {
    let x = &col.sample;
    let opts = SolverOptions::default();
    let h_s = silverman_bandwidth(x)?;
    let crit = match ci {
        Some((resamples, seed)) => critical_bandwidth_ci(x, k, resamples, seed, &opts)?,
        None => critical_bandwidth(x, k, &opts)?,
    };
    let modes = find_modes(x, h_s)?;
    let decomposition = if modes.count() >= 2 {
        detect_components(x).ok()
    } else {
        None
    };
    let strength = bimodality_strength(x).ok();

    let mut text = String::new();
    writeln!(text, "input: {} (column {}, n = {}, dropped {})", path.display(), col.name, x.len(), col.dropped).unwrap();
    writeln!(text, "h_silverman: {:.6}", h_s.get()).unwrap();
    write!(text, "h_crit (k = {k}): {:.6}", crit.h_crit).unwrap();
    if !crit.success {
        write!(text, " [not verified: {}]", crit.diagnostic.as_deref().unwrap_or("unknown")).unwrap();
    }
    text.push('\n');
    if let Some(ci) = &crit.ci {
        writeln!(
            text,
            "{:.0}% CI: [{:.6}, {:.6}] ({} resamples, {} failed)",
            100.0 * ci.level,
            ci.low,
            ci.high,
            ci.resamples,
            ci.failures
        )
        .unwrap();
    }
    modes_text(&mut text, &modes);
    if let Some(d) = &decomposition {
        for (i, c) in [d.component1, d.component2].iter().enumerate() {
            writeln!(
                text,
                "component {}: mean {:.4}, std {:.4}, weight {:.4}",
                i + 1,
                c.mean,
                c.std,
                c.weight
            )
            .unwrap();
        }
        writeln!(text, "separation: {:.4} (dip ratio {:.4})", d.separation_point, d.dip_ratio).unwrap();
    }
    if let Some(s) = &strength {
        writeln!(text, "strength: {:.3} ({})", s.ratio, s.label).unwrap();
    }

    let json = json!({
        "command": "analyze",
        "input": input_json(path, col),
        "h_silverman": h_s.get(),
        "h_crit": crit,
        "modes": modes,
        "decomposition": decomposition,
        "strength": strength,
    });
    Ok(Outcome {
        text,
        json,
        code: if crit.success { 0 } else { 3 },
    })
}

fn conclusion(p: f64, null: &str) -> String {
    if p < ALPHA {
        format!("reject {null} at alpha = {ALPHA}")
    } else {
        format!("fail to reject {null} at alpha = {ALPHA}")
    }
}

fn test_outcome(col: &NumericColumn, r: TestResult, null: &str) -> Outcome {
    let verdict = conclusion(r.p_value, null);
    let mut text = String::new();
    writeln!(text, "method: {}", r.method).unwrap();
    writeln!(text, "n: {}", col.sample.len()).unwrap();
    writeln!(text, "statistic: {:.6}", r.statistic).unwrap();
    writeln!(text, "p-value: {:.4}", r.p_value).unwrap();
    writeln!(text, "resamples: {}", r.resamples).unwrap();
    writeln!(text, "conclusion: {verdict}").unwrap();
    let json = json!({
        "command": "test",
        "column": col.name,
        "n": col.sample.len(),
        "result": r,
        "alpha": ALPHA,
        "reject": r.p_value < ALPHA,
        "conclusion": verdict,
    });
    Outcome::ok(text, json)
}

pub fn silverman(col: &NumericColumn, mod0: usize, resamples: usize, seed: Seed) -> Result<Outcome, Error> {
    let r = silverman_test(&col.sample, mod0, resamples, seed)?;
    let null = if mod0 == 1 {
        "unimodality".to_string()
    } else {
        format!("at most {mod0} modes")
    };
    Ok(test_outcome(col, r, &null))
}

pub fn dip(col: &NumericColumn, resamples: usize, seed: Seed) -> Result<Outcome, Error> {
    let r = dip_test(&col.sample, resamples, seed)?;
    Ok(test_outcome(col, r, "unimodality"))
}

/// The excess mass curve has no calibrated null distribution, so only the
/// statistic is reported.
pub fn excess(col: &NumericColumn) -> Result<Outcome, Error> {
    let curve = excess_mass(&col.sample, None)?;
    let mut text = String::new();
    writeln!(text, "method: excess_mass").unwrap();
    writeln!(text, "n: {}", col.sample.len()).unwrap();
    writeln!(text, "bandwidth: {:.6}", curve.bandwidth).unwrap();
    writeln!(text, "delta (E2 - E1): {:.6}", curve.delta).unwrap();
    writeln!(text, "conclusion: no calibrated p-value for excess mass").unwrap();
    let json = json!({
        "command": "test",
        "column": col.name,
        "n": col.sample.len(),
        "result": {
            "method": "excess_mass",
            "statistic": curve.delta,
            "p_value": Value::Null,
            "bandwidth": curve.bandwidth,
            "thresholds": curve.thresholds,
            "mass": curve.mass,
        },
    });
    Ok(Outcome::ok(text, json))
}

pub fn modes(col: &NumericColumn, bandwidth: Option<f64>) -> Result<Outcome, Error> {
    let x = &col.sample;
    let h = match bandwidth {
        Some(h) => Bandwidth::new(h)?,
        None => silverman_bandwidth(x)?,
    };
    let modes = find_modes(x, h)?;
    let trough = find_trough(x, h).ok();
    let mut text = String::new();
    writeln!(text, "bandwidth: {:.6}", h.get()).unwrap();
    modes_text(&mut text, &modes);
    if let Some(t) = &trough {
        writeln!(text, "trough: {:.4} (ratio {:.4})", t.location, t.ratio).unwrap();
    }
    let json = json!({
        "command": "modes",
        "column": col.name,
        "n": x.len(),
        "bandwidth": h.get(),
        "modes": modes,
        "trough": trough,
    });
    Ok(Outcome::ok(text, json))
}

pub fn decompose(col: &NumericColumn) -> Result<Outcome, Error> {
    let d = detect_components(&col.sample)?;
    let mut text = String::new();
    for (i, c) in [d.component1, d.component2].iter().enumerate() {
        writeln!(
            text,
            "component {}: mean {:.4}, std {:.4}, weight {:.4}",
            i + 1,
            c.mean,
            c.std,
            c.weight
        )
        .unwrap();
    }
    writeln!(text, "separation: {:.4}", d.separation_point).unwrap();
    writeln!(text, "dip ratio: {:.4}", d.dip_ratio).unwrap();
    let json = json!({
        "command": "decompose",
        "column": col.name,
        "n": col.sample.len(),
        "decomposition": d,
    });
    Ok(Outcome::ok(text, json))
}
