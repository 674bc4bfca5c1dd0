//! The witness, scan, and threshold commands: drive the library with a
//! validated experiment, write provenance-stamped result files, and print a
//! one-screen summary.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde_json::json;

use lightwitness::analytic::{asym_noise_threshold, sym_noise_threshold, ThresholdResult};
use lightwitness::geometry::structure_factor;
use lightwitness::hilbert::mix_white_noise;
use lightwitness::loos::build_loos;
use lightwitness::scan::sweep;
use lightwitness::states::{NamedState, StateLabel};
use lightwitness::witness::{noise_threshold, witness_min, ThresholdOutcome};

use crate::config::Experiment;
use crate::output::{envelope, out_path, write_csv, write_json, Provenance};

/// A command failure carrying the process exit code: 1 for configuration,
/// usage, and file-system problems; 2 for internal numerical failures.
#[derive(Debug)]
pub struct Failure {
    pub exit_code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            exit_code: 1,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            exit_code: 2,
            error: error.into(),
        }
    }
}

/// Effective run settings after command-line flags override the config's
/// `[run]` section.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub seed: u64,
    pub tolerance: f64,
    pub p_resolution: f64,
    pub out_dir: PathBuf,
    pub format: String,
}

fn candidate_values(breakdown: &lightwitness::witness::WitnessBreakdown) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (label, value) in breakdown.candidates() {
        map.insert(label.to_string(), json!(value));
    }
    serde_json::Value::Object(map)
}

/// Evaluate the witness at the configured single direction and report the
/// detection verdict. Exit code 0 regardless of the verdict.
pub fn cmd_witness(
    exp: &Experiment,
    run: &RunSettings,
    provenance: &Provenance,
) -> Result<(), Failure> {
    let direction = exp.direction.ok_or_else(|| {
        Failure::usage(anyhow!(
            "detection.direction: the witness command needs a single viewing direction"
        ))
    })?;
    let rho = mix_white_noise(&exp.psi, exp.noise).map_err(Failure::internal)?;
    let channel = exp
        .channel_spec
        .channel(direction, &exp.table)
        .map_err(Failure::internal)?;
    let family = build_loos(&exp.array, &exp.table, &channel).map_err(Failure::internal)?;
    let breakdown = witness_min(&rho, &family).map_err(Failure::internal)?;

    let detected = breakdown.w < -run.tolerance;
    let verdict = if detected {
        "entangled_detected"
    } else {
        "not_detected"
    };
    let doc = envelope(
        "witness",
        provenance,
        json!({
            "direction": [direction.x, direction.y, direction.z],
            "noise": exp.noise,
            "tolerance": run.tolerance,
            "candidates": candidate_values(&breakdown),
            "w": breakdown.w,
            "minimizer": breakdown.minimizer.to_string(),
            "verdict": verdict,
            "warnings": breakdown.warnings,
        }),
    );
    let path = out_path(&run.out_dir, "witness.json").map_err(Failure::usage)?;
    write_json(&path, &doc).map_err(Failure::usage)?;

    println!(
        "witness: W = {:.9} (minimizer {}) at direction [{:.6}, {:.6}, {:.6}]",
        breakdown.w, breakdown.minimizer, direction.x, direction.y, direction.z
    );
    for (label, value) in breakdown.candidates() {
        println!("  {label:5} = {value:.9}");
    }
    for w in &breakdown.warnings {
        println!("  warning: {w}");
    }
    println!("verdict: {verdict} (tolerance {:.1e})", run.tolerance);
    println!("wrote {}", path.display());
    Ok(())
}

/// Evaluate the witness over the configured direction grid, write the field
/// file, and summarize where detection succeeds.
pub fn cmd_scan(
    exp: &Experiment,
    run: &RunSettings,
    provenance: &Provenance,
) -> Result<(), Failure> {
    let grid = exp.grid.as_ref().ok_or_else(|| {
        Failure::usage(anyhow!(
            "detection.grid: the scan command needs a viewing-direction grid"
        ))
    })?;
    let rho = mix_white_noise(&exp.psi, exp.noise).map_err(Failure::internal)?;
    let field = sweep(&rho, &exp.array, &exp.table, &exp.channel_spec, grid)
        .map_err(Failure::internal)?;

    let total = field.records().len();
    let violating = field
        .records()
        .iter()
        .filter(|r| r.breakdown.w < -run.tolerance)
        .count();
    let best = field
        .records()
        .iter()
        .min_by(|a, b| a.breakdown.w.total_cmp(&b.breakdown.w))
        .expect("grid has at least one point");

    let path = if run.format == "json" {
        let doc = envelope(
            "scan",
            provenance,
            json!({
                "noise": exp.noise,
                "tolerance": run.tolerance,
                "summary": {
                    "total_points": total,
                    "violating_points": violating,
                    "violating_fraction": violating as f64 / total as f64,
                    "min_w": best.breakdown.w,
                    "min_theta": best.theta,
                    "min_phi": best.phi,
                    "min_direction": [best.direction.x, best.direction.y, best.direction.z],
                    "min_label": best.breakdown.minimizer.to_string(),
                },
                "field": field.to_json(),
            }),
        );
        let path = out_path(&run.out_dir, "scan.json").map_err(Failure::usage)?;
        write_json(&path, &doc).map_err(Failure::usage)?;
        path
    } else {
        let path = out_path(&run.out_dir, "scan.csv").map_err(Failure::usage)?;
        write_csv(&path, provenance, &field.to_csv()).map_err(Failure::usage)?;
        path
    };

    println!(
        "scan: {total} directions on a {} x {} grid, {violating} violating \
         (fraction {:.4}) at tolerance {:.1e}",
        grid.theta().len(),
        grid.phi().len(),
        violating as f64 / total as f64,
        run.tolerance
    );
    println!(
        "global minimum W = {:.9} ({}) at theta = {:.6}, phi = {:.6}, direction \
         [{:.6}, {:.6}, {:.6}]",
        best.breakdown.w,
        best.breakdown.minimizer,
        best.theta,
        best.phi,
        best.direction.x,
        best.direction.y,
        best.direction.z
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn analytic_prediction(exp: &Experiment, s: f64) -> Option<ThresholdResult> {
    match exp.label {
        StateLabel::DickeSymmetric => sym_noise_threshold(exp.n_sites, s).ok(),
        StateLabel::Singlet => asym_noise_threshold(exp.n_sites, s).ok(),
        _ => None,
    }
}

/// Find the white-noise level where detection is lost at the configured
/// direction, and compare against the closed-form prediction when the state
/// family has one.
pub fn cmd_threshold(
    exp: &Experiment,
    run: &RunSettings,
    provenance: &Provenance,
) -> Result<(), Failure> {
    let direction = exp.direction.ok_or_else(|| {
        Failure::usage(anyhow!(
            "detection.direction: the threshold command needs a single viewing direction"
        ))
    })?;
    let state = NamedState::new(exp.label, exp.psi.clone(), exp.noise)
        .map_err(Failure::internal)?;
    let channel = exp
        .channel_spec
        .channel(direction, &exp.table)
        .map_err(Failure::internal)?;
    let s = structure_factor(&exp.array, &direction).map_err(Failure::internal)?;
    let outcome = noise_threshold(&state, &exp.array, &exp.table, &channel, run.p_resolution)
        .map_err(Failure::internal)?;
    let analytic = analytic_prediction(exp, s);

    let mut payload = json!({
        "state_kind": exp.kind,
        "direction": [direction.x, direction.y, direction.z],
        "structure_factor": s,
        "p_resolution": run.p_resolution,
        "analytic": analytic.as_ref().map(|a| json!({
            "p_star": a.p_star,
            "note": a.note,
        })),
    });
    match outcome {
        ThresholdOutcome::Detected { p_star } => {
            payload["outcome"] = json!("detected");
            payload["p_star"] = json!(p_star);
            if let Some(a) = &analytic {
                payload["difference"] = json!((p_star - a.p_star).abs());
            }
        }
        ThresholdOutcome::NoViolation { witness_at_zero } => {
            payload["outcome"] = json!("no_violation");
            payload["witness_at_zero"] = json!(witness_at_zero);
        }
    }
    let doc = envelope("threshold", provenance, payload);
    let path = out_path(&run.out_dir, "threshold.json").map_err(Failure::usage)?;
    write_json(&path, &doc).map_err(Failure::usage)?;

    println!(
        "threshold: state {} at direction [{:.6}, {:.6}, {:.6}], interference factor \
         S = {:.6}",
        exp.kind, direction.x, direction.y, direction.z, s
    );
    match outcome {
        ThresholdOutcome::Detected { p_star } => {
            println!("detection persists up to white-noise level p* = {p_star:.9}");
            if let Some(a) = &analytic {
                println!(
                    "closed-form prediction p* = {:.9} (difference {:.2e}); {}",
                    a.p_star,
                    (p_star - a.p_star).abs(),
                    a.note
                );
            }
        }
        ThresholdOutcome::NoViolation { witness_at_zero } => {
            println!(
                "no violation: the witness minimum is already {witness_at_zero:.9} >= 0 \
                 at zero noise"
            );
            if let Some(a) = &analytic {
                println!("closed-form prediction p* = {:.9}; {}", a.p_star, a.note);
            }
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

/// Parse, validate, and digest a config file in one step.
pub fn load_experiment(
    path: &Path,
) -> Result<(crate::config::ExperimentConfig, Experiment, Vec<u8>), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::usage(anyhow!("cannot read config file {}: {e}", path.display())))?;
    let config = crate::config::parse_str(std::str::from_utf8(&bytes).map_err(|e| {
        Failure::usage(anyhow!("config file {} is not UTF-8: {e}", path.display()))
    })?)
    .map_err(Failure::usage)?;
    let exp = crate::config::build(&config).map_err(Failure::usage)?;
    Ok((config, exp, bytes))
}
