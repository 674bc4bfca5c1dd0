//! Experiment configuration: TOML schema, validation with path-qualified
//! error messages, and construction of the library objects.
//!
//! Complex numbers appear in configs uniformly as `[re, im]` pairs.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DVector, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use lightwitness::geometry::{preset_vector, EmitterArray, TransitionTable};
use lightwitness::hilbert::StateVector;
use lightwitness::scan::{AngularGrid, ChannelSpec};
use lightwitness::states::{
    dicke_symmetric, singlet_antisymmetric, two_qutrit_example, w_state, StateLabel,
};

/// Top-level config document. Sections mirror the experiment: what state is
/// prepared, where the emitters sit and how they radiate, what the detector
/// measures, and how the run is executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateSection,
    pub geometry: GeometrySection,
    pub detection: DetectionSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    /// "dicke" | "singlet" | "w" | "product" | "custom" | "two_qutrit_example"
    pub kind: String,
    /// number of emitters (dicke, singlet, w, custom)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// levels per emitter (w, product, custom; dicke and singlet imply d = n)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// occupation per site, 1-based (product)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    /// full state vector as [re, im] pairs, length d^n (custom)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    /// white-noise admixture in [0, 1]
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// emitter positions in units of 1/k0
    pub positions: Vec<[f64; 3]>,
    /// allowed transitions with their dipole vectors
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    /// level pair [alpha, beta], 1-based, alpha < beta
    pub levels: [usize; 2],
    /// unit dipole vector, three [re, im] pairs
    pub dipole: [[f64; 2]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    /// uniform polarization: preset name ("e_plus", "e_minus", "e_z") or a
    /// unit vector of [re, im] pairs; mutually exclusive with `channels`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarization: Option<PolarizationSpec>,
    /// single viewing direction (witness, threshold); normalized internally
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    /// viewing-direction grid (scan)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// per-transition polarization map; mutually exclusive with `polarization`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolarizationSpec {
    Preset(String),
    Vector([[f64; 2]; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub levels: [usize; 2],
    pub polarization: PolarizationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// RNG seed recorded in provenance and used by verification suites
    #[serde(default)]
    pub seed: u64,
    /// detection verdict threshold: W < -tolerance counts as detection
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// bisection resolution for noise thresholds
    #[serde(default = "default_tolerance")]
    pub p_resolution: f64,
    /// output directory (default: current directory)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// field-file format: "csv" | "json"
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_format() -> String {
    "csv".to_string()
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance: default_tolerance(),
            p_resolution: default_tolerance(),
            out: None,
            format: default_format(),
        }
    }
}

/// The validated experiment, ready to hand to the library.
#[derive(Debug)]
pub struct Experiment {
    pub label: StateLabel,
    pub kind: String,
    pub psi: StateVector,
    pub noise: f64,
    pub n_sites: usize,
    pub local_dim: usize,
    pub array: EmitterArray,
    pub table: TransitionTable,
    pub channel_spec: ChannelSpec,
    pub direction: Option<Vector3<f64>>,
    pub grid: Option<AngularGrid>,
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| anyhow!("config schema error: {e}"))
}

pub fn to_toml(config: &ExperimentConfig) -> Result<String> {
    toml::to_string_pretty(config).context("cannot serialize config")
}

fn complex(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

fn complex_triple(v: &[[f64; 2]; 3]) -> Vector3<C64> {
    Vector3::new(complex(v[0]), complex(v[1]), complex(v[2]))
}

fn build_state(section: &StateSection) -> Result<(StateLabel, StateVector)> {
    let reject = |field: &str, value: bool| -> Result<()> {
        if value {
            bail!(
                "state.{field}: not accepted for state kind \"{}\"",
                section.kind
            );
        }
        Ok(())
    };
    match section.kind.as_str() {
        "dicke" => {
            reject("d", section.d.is_some())?;
            reject("levels", section.levels.is_some())?;
            reject("amplitudes", section.amplitudes.is_some())?;
            let n = section.n.context("state.n: required for kind \"dicke\"")?;
            let psi = dicke_symmetric(n).map_err(|e| anyhow!("state.n: {e}"))?;
            Ok((StateLabel::DickeSymmetric, psi))
        }
        "singlet" => {
            reject("d", section.d.is_some())?;
            reject("levels", section.levels.is_some())?;
            reject("amplitudes", section.amplitudes.is_some())?;
            let n = section
                .n
                .context("state.n: required for kind \"singlet\"")?;
            let psi = singlet_antisymmetric(n).map_err(|e| anyhow!("state.n: {e}"))?;
            Ok((StateLabel::Singlet, psi))
        }
        "w" => {
            reject("levels", section.levels.is_some())?;
            reject("amplitudes", section.amplitudes.is_some())?;
            let n = section.n.context("state.n: required for kind \"w\"")?;
            let d = section.d.context("state.d: required for kind \"w\"")?;
            let psi = w_state(n, d).map_err(|e| anyhow!("state.n/state.d: {e}"))?;
            Ok((StateLabel::WState, psi))
        }
        "product" => {
            reject("n", section.n.is_some())?;
            reject("amplitudes", section.amplitudes.is_some())?;
            let d = section
                .d
                .context("state.d: required for kind \"product\"")?;
            let levels = section
                .levels
                .as_ref()
                .context("state.levels: required for kind \"product\"")?;
            if levels.is_empty() {
                bail!("state.levels: must name at least one site");
            }
            for (i, &l) in levels.iter().enumerate() {
                if l < 1 || l > d {
                    bail!("state.levels[{i}]: level {l} outside 1..={d}");
                }
            }
            let terms = [(levels.as_slice(), C64::new(1.0, 0.0))];
            let psi = StateVector::from_terms(levels.len(), d, &terms)
                .map_err(|e| anyhow!("state.levels: {e}"))?;
            Ok((StateLabel::Custom, psi))
        }
        "custom" => {
            reject("levels", section.levels.is_some())?;
            let n = section.n.context("state.n: required for kind \"custom\"")?;
            let d = section.d.context("state.d: required for kind \"custom\"")?;
            let amplitudes = section
                .amplitudes
                .as_ref()
                .context("state.amplitudes: required for kind \"custom\"")?;
            let dim = d
                .checked_pow(n as u32)
                .context("state.n/state.d: dimension overflows")?;
            if amplitudes.len() != dim {
                bail!(
                    "state.amplitudes: expected d^n = {dim} entries, got {}",
                    amplitudes.len()
                );
            }
            let amps = DVector::from_iterator(dim, amplitudes.iter().map(|&p| complex(p)));
            let psi =
                StateVector::new(amps, n, d).map_err(|e| anyhow!("state.amplitudes: {e}"))?;
            Ok((StateLabel::Custom, psi))
        }
        "two_qutrit_example" => {
            reject("n", section.n.is_some())?;
            reject("d", section.d.is_some())?;
            reject("levels", section.levels.is_some())?;
            reject("amplitudes", section.amplitudes.is_some())?;
            Ok((StateLabel::TwoQutritExample, two_qutrit_example()))
        }
        other => bail!(
            "state.kind: unknown state kind \"{other}\" (expected one of dicke, singlet, w, \
             product, custom, two_qutrit_example)"
        ),
    }
}

/// Validate the parsed config and construct the library objects. All error
/// messages name the offending config path.
pub fn build(config: &ExperimentConfig) -> Result<Experiment> {
    let (label, psi) = build_state(&config.state)?;
    let n_sites = psi.n_sites();
    let local_dim = psi.local_dim();
    if !(0.0..=1.0).contains(&config.state.noise) || !config.state.noise.is_finite() {
        bail!(
            "state.noise: must lie in [0, 1], got {}",
            config.state.noise
        );
    }

    if config.geometry.positions.len() != n_sites {
        bail!(
            "geometry.positions: expected {n_sites} positions for this state, got {}",
            config.geometry.positions.len()
        );
    }
    let positions: Vec<Vector3<f64>> = config
        .geometry
        .positions
        .iter()
        .map(|p| Vector3::new(p[0], p[1], p[2]))
        .collect();
    let array =
        EmitterArray::new(positions, local_dim).map_err(|e| anyhow!("geometry.positions: {e}"))?;

    if config.geometry.transitions.is_empty() {
        bail!("geometry.transitions: at least one transition is required");
    }
    let mut entries = Vec::new();
    for (i, t) in config.geometry.transitions.iter().enumerate() {
        entries.push(((t.levels[0], t.levels[1]), complex_triple(&t.dipole)));
        let [a, b] = t.levels;
        if a >= b || a < 1 || b > local_dim {
            bail!(
                "geometry.transitions[{i}].levels: pair ({a}, {b}) must satisfy 1 <= alpha < \
                 beta <= d = {local_dim}"
            );
        }
    }
    let table = TransitionTable::new(local_dim, entries)
        .map_err(|e| anyhow!("geometry.transitions: {e}"))?;

    let channel_spec = match (&config.detection.polarization, &config.detection.channels) {
        (Some(_), Some(_)) => bail!(
            "detection.polarization / detection.channels: exactly one of the two must be set, \
             not both"
        ),
        (None, None) => bail!(
            "detection.polarization / detection.channels: one of the two must be set"
        ),
        (Some(PolarizationSpec::Preset(name)), None) => {
            preset_vector(name).map_err(|e| anyhow!("detection.polarization: {e}"))?;
            ChannelSpec::preset(name).map_err(|e| anyhow!("detection.polarization: {e}"))?
        }
        (Some(PolarizationSpec::Vector(v)), None) => {
            let vec = complex_triple(v);
            let norm = vec.norm();
            if !(norm > 1e-12) {
                bail!("detection.polarization: zero polarization vector");
            }
            ChannelSpec::Uniform(vec / C64::new(norm, 0.0))
        }
        (None, Some(channels)) => {
            if channels.is_empty() {
                bail!("detection.channels: must not be empty");
            }
            let mut map: BTreeMap<(usize, usize), Vector3<C64>> = BTreeMap::new();
            for (i, c) in channels.iter().enumerate() {
                let pair = (c.levels[0], c.levels[1]);
                if !table.is_allowed(pair.0, pair.1) {
                    bail!(
                        "detection.channels[{i}].levels: transition ({}, {}) is not listed in \
                         geometry.transitions",
                        pair.0,
                        pair.1
                    );
                }
                let vec = match &c.polarization {
                    PolarizationSpec::Preset(name) => {
                        preset_vector(name).map_err(|e| anyhow!(
                            "detection.channels[{i}].polarization: {e}"
                        ))?
                    }
                    PolarizationSpec::Vector(v) => {
                        let vec = complex_triple(v);
                        let norm = vec.norm();
                        if !(norm > 1e-12) {
                            bail!("detection.channels[{i}].polarization: zero polarization vector");
                        }
                        vec / C64::new(norm, 0.0)
                    }
                };
                if map.insert(pair, vec).is_some() {
                    bail!(
                        "detection.channels[{i}].levels: duplicate entry for transition ({}, {})",
                        pair.0,
                        pair.1
                    );
                }
            }
            for (a, b) in table.allowed_pairs() {
                if !map.contains_key(&(a, b)) {
                    bail!(
                        "detection.channels: no polarization given for transition ({a}, {b}) \
                         from geometry.transitions"
                    );
                }
            }
            ChannelSpec::PerTransition(map)
        }
    };

    let direction = match &config.detection.direction {
        None => None,
        Some(v) => {
            let vec = Vector3::new(v[0], v[1], v[2]);
            let norm = vec.norm();
            if !(norm > 1e-12) {
                bail!("detection.direction: zero direction vector");
            }
            Some(vec / norm)
        }
    };

    let grid = match &config.detection.grid {
        None => None,
        Some(g) => Some(
            AngularGrid::uniform(g.n_theta, g.n_phi).map_err(|e| anyhow!("detection.grid: {e}"))?,
        ),
    };

    if !(config.run.tolerance > 0.0) || !config.run.tolerance.is_finite() {
        bail!(
            "run.tolerance: must be positive and finite, got {}",
            config.run.tolerance
        );
    }
    if !(config.run.p_resolution > 0.0)
        || !(config.run.p_resolution < 0.5)
        || !config.run.p_resolution.is_finite()
    {
        bail!(
            "run.p_resolution: must lie in (0, 0.5), got {}",
            config.run.p_resolution
        );
    }
    if config.run.format != "csv" && config.run.format != "json" {
        bail!(
            "run.format: expected \"csv\" or \"json\", got \"{}\"",
            config.run.format
        );
    }

    Ok(Experiment {
        label,
        kind: config.state.kind.clone(),
        psi,
        noise: config.state.noise,
        n_sites,
        local_dim,
        array,
        table,
        channel_spec,
        direction,
        grid,
    })
}
