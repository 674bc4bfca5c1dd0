//! Angular sweeps of the witness over a detection-direction grid, the
//! stereographic plane mapping used for field visualization, and the
//! mirror-symmetry check between the two circular detection channels.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::geometry::{
    dipole_phase, preset_vector, projected_dipole, DetectionChannel, EmitterArray,
    TransitionTable, DEGENERACY_TOLERANCE,
};
use crate::hilbert::DensityMatrix;
use crate::loos::build_loos;
use crate::witness::{witness_min, WitnessBreakdown};
use crate::{Error, Result};

/// Radius assigned to the stereographic image of the south pole (theta = pi),
/// where the true projection diverges; grids stay rectangular instead of
/// dropping the row.
pub const SOUTH_POLE_RADIUS: f64 = 1e12;

/// Wrapped-phase tolerance when pairing grid points in `mirror_check`.
pub const MIRROR_MATCH_TOLERANCE: f64 = 1e-9;

/// Fixed column order of the CSV/JSON field schema.
pub const FIELD_COLUMNS: [&str; 13] = [
    "theta", "phi", "x_stereo", "y_stereo", "w1", "w2_X", "w2_Y", "w2_Z", "w3_X", "w3_Y",
    "w3_Z", "W", "min_label",
];

/// Rectangular detection grid: strictly increasing polar angles in [0, pi]
/// and strictly increasing azimuths in [0, 2 pi).
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    theta: Vec<f64>,
    phi: Vec<f64>,
}

impl AngularGrid {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let tau = 2.0 * std::f64::consts::PI;
        if theta.is_empty() || phi.is_empty() {
            return Err(Error::InvalidGrid {
                context: "grid needs at least one theta and one phi value".into(),
            });
        }
        for window in theta.windows(2) {
            if !(window[1] > window[0]) {
                return Err(Error::InvalidGrid {
                    context: "theta values must be strictly increasing".into(),
                });
            }
        }
        for window in phi.windows(2) {
            if !(window[1] > window[0]) {
                return Err(Error::InvalidGrid {
                    context: "phi values must be strictly increasing".into(),
                });
            }
        }
        if theta.iter().any(|&t| !t.is_finite() || t < 0.0 || t > std::f64::consts::PI) {
            return Err(Error::InvalidGrid {
                context: "theta values must lie in [0, pi]".into(),
            });
        }
        if phi.iter().any(|&p| !p.is_finite() || p < 0.0 || p >= tau) {
            return Err(Error::InvalidGrid {
                context: "phi values must lie in [0, 2 pi)".into(),
            });
        }
        Ok(Self { theta, phi })
    }

    /// Evenly spaced grid: `n_theta` >= 2 polar angles including both poles,
    /// `n_phi` >= 1 azimuths starting at zero with period spacing (2 pi is
    /// excluded as the periodic image of 0). The degenerate `n_theta` = 1
    /// grid consists of the north pole only.
    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 1 || n_phi < 1 {
            return Err(Error::InvalidGrid {
                context: format!("uniform grid needs n_theta >= 1 and n_phi >= 1, got {n_theta} x {n_phi}"),
            });
        }
        let theta = if n_theta == 1 {
            vec![0.0]
        } else {
            let dt = std::f64::consts::PI / (n_theta - 1) as f64;
            (0..n_theta).map(|i| i as f64 * dt).collect()
        };
        let dp = 2.0 * std::f64::consts::PI / n_phi as f64;
        let phi = (0..n_phi).map(|j| j as f64 * dp).collect();
        Self::new(theta, phi)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn n_points(&self) -> usize {
        self.theta.len() * self.phi.len()
    }
}

/// Unit detection direction for polar angle theta and azimuth phi.
pub fn direction_from_angles(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

/// Stereographic projection from the south pole onto the equatorial-tangent
/// plane: (x, y) = tan(theta/2) (cos phi, sin phi). The projection radius is
/// capped at [`SOUTH_POLE_RADIUS`], which theta = pi maps to.
pub fn stereographic(theta: f64, phi: f64) -> (f64, f64) {
    let r = (theta / 2.0).tan();
    let r = if r.is_finite() {
        r.min(SOUTH_POLE_RADIUS)
    } else {
        SOUTH_POLE_RADIUS
    };
    (r * phi.cos(), r * phi.sin())
}

/// How the detection channel is assembled at each grid direction: one
/// polarization vector shared by all transitions, or an explicit
/// per-transition map.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Uniform(Vector3<C64>),
    PerTransition(BTreeMap<(usize, usize), Vector3<C64>>),
}

impl ChannelSpec {
    /// Uniform spec from a named preset ("e_plus", "e_minus", "e_z").
    pub fn preset(name: &str) -> Result<Self> {
        Ok(Self::Uniform(preset_vector(name)?))
    }

    /// Instantiate the channel at one direction.
    pub fn channel(
        &self,
        direction: Vector3<f64>,
        table: &TransitionTable,
    ) -> Result<DetectionChannel> {
        match self {
            ChannelSpec::Uniform(e) => DetectionChannel::uniform(direction, *e, table),
            ChannelSpec::PerTransition(map) => {
                DetectionChannel::per_transition(direction, map.clone(), table)
            }
        }
    }
}

/// Everything evaluated at one grid direction.
#[derive(Debug, Clone)]
pub struct FieldRecord {
    pub theta: f64,
    pub phi: f64,
    pub direction: Vector3<f64>,
    pub x_stereo: f64,
    pub y_stereo: f64,
    pub breakdown: WitnessBreakdown,
    /// optical phase of each emitter at this direction, site order
    pub optical_phases: Vec<f64>,
    /// transverse dipole-pattern phase of each allowed transition
    /// (lexicographic pair order); None where undefined (complex dipoles, or
    /// a dipole parallel to the direction)
    pub dipole_phases: Option<Vec<f64>>,
}

/// The witness over a full grid, one record per point in row-major order
/// (theta outer, phi inner).
#[derive(Debug, Clone)]
pub struct WitnessField {
    grid: AngularGrid,
    pairs: Vec<(usize, usize)>,
    real_dipoles: bool,
    records: Vec<FieldRecord>,
}

impl WitnessField {
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    /// Allowed transition pairs, in the order `dipole_phases` uses.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn real_dipoles(&self) -> bool {
        self.real_dipoles
    }

    pub fn records(&self) -> &[FieldRecord] {
        &self.records
    }

    /// Record at theta index `it`, phi index `ip`.
    pub fn record(&self, it: usize, ip: usize) -> Result<&FieldRecord> {
        if it >= self.grid.theta.len() || ip >= self.grid.phi.len() {
            return Err(Error::InvalidParameter {
                context: format!(
                    "grid index ({it}, {ip}) outside {} x {}",
                    self.grid.theta.len(),
                    self.grid.phi.len()
                ),
            });
        }
        Ok(&self.records[it * self.grid.phi.len() + ip])
    }

    /// CSV rendering with the fixed [`FIELD_COLUMNS`] schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&FIELD_COLUMNS.join(","));
        out.push('\n');
        for r in &self.records {
            let b = &r.breakdown;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.theta,
                r.phi,
                r.x_stereo,
                r.y_stereo,
                b.w1,
                b.w2[0],
                b.w2[1],
                b.w2[2],
                b.w3[0],
                b.w3[1],
                b.w3[2],
                b.w,
                b.minimizer
            ));
        }
        out
    }

    /// JSON rendering mirroring the CSV schema: the same column names keyed
    /// per record, plus the grid axes.
    pub fn to_json(&self) -> Value {
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                let b = &r.breakdown;
                json!({
                    "theta": r.theta,
                    "phi": r.phi,
                    "x_stereo": r.x_stereo,
                    "y_stereo": r.y_stereo,
                    "w1": b.w1,
                    "w2_X": b.w2[0],
                    "w2_Y": b.w2[1],
                    "w2_Z": b.w2[2],
                    "w3_X": b.w3[0],
                    "w3_Y": b.w3[1],
                    "w3_Z": b.w3[2],
                    "W": b.w,
                    "min_label": b.minimizer.to_string(),
                })
            })
            .collect();
        json!({
            "columns": FIELD_COLUMNS,
            "grid": { "theta": self.grid.theta, "phi": self.grid.phi },
            "records": records,
        })
    }
}

/// Evaluate the witness at every grid direction. Points are independent and
/// evaluated in parallel; the output order is row-major grid order
/// regardless of scheduling.
pub fn sweep(
    rho: &DensityMatrix,
    array: &EmitterArray,
    table: &TransitionTable,
    channel_spec: &ChannelSpec,
    grid: &AngularGrid,
) -> Result<WitnessField> {
    let pairs: Vec<(usize, usize)> = table.allowed_pairs().collect();
    let real_dipoles = table.all_dipoles_real();
    let points: Vec<(f64, f64)> = grid
        .theta()
        .iter()
        .flat_map(|&t| grid.phi().iter().map(move |&p| (t, p)))
        .collect();

    let records = points
        .into_par_iter()
        .map(|(theta, phi)| -> Result<FieldRecord> {
            let direction = direction_from_angles(theta, phi);
            let channel = channel_spec.channel(direction, table)?;
            let family = build_loos(array, table, &channel)?;
            let breakdown = witness_min(rho, &family)?;
            if !breakdown.w.is_finite()
                || !breakdown.w1.is_finite()
                || breakdown.w2.iter().chain(&breakdown.w3).any(|v| !v.is_finite())
            {
                return Err(Error::InvalidState {
                    context: format!("non-finite witness value at theta={theta}, phi={phi}"),
                });
            }
            let optical_phases = (1..=array.n_sites())
                .map(|site| array.optical_phase(site, &direction))
                .collect::<Result<Vec<f64>>>()?;
            let dipole_phases = if real_dipoles {
                pairs
                    .iter()
                    .map(|&(a, b)| -> Result<f64> {
                        let dipole = table.dipole(a, b).expect("allowed pair");
                        // the phase lives in the transverse (xy) part of the
                        // pattern; when that part vanishes the atan2 angle is
                        // numerical noise, so the point is left unphased
                        let v = projected_dipole(&direction, dipole)?;
                        let transverse = v[0].re.hypot(v[1].re);
                        if transverse < DEGENERACY_TOLERANCE {
                            return Err(Error::ZeroProjectedDipole);
                        }
                        dipole_phase(&direction, dipole)
                    })
                    .collect::<Result<Vec<f64>>>()
                    .ok()
            } else {
                None
            };
            let (x_stereo, y_stereo) = stereographic(theta, phi);
            Ok(FieldRecord {
                theta,
                phi,
                direction,
                x_stereo,
                y_stereo,
                breakdown,
                optical_phases,
                dipole_phases,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(WitnessField {
        grid: grid.clone(),
        pairs,
        real_dipoles,
        records,
    })
}

/// Outcome of the circular-channel mirror comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorReport {
    pub total_points: usize,
    /// points of the first field with at least one phase-negated partner
    pub matched_points: usize,
    /// points with defined phases but no partner on the second field's grid
    pub unmatched_points: usize,
    /// points whose dipole phases are undefined (skipped)
    pub undefined_points: usize,
    /// largest |candidate difference| over all matched pairs and all seven
    /// candidates plus the minimum
    pub max_discrepancy: f64,
}

fn wrap_phase(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    x - tau * (x / tau).round()
}

fn breakdown_gap(a: &WitnessBreakdown, b: &WitnessBreakdown) -> f64 {
    let mut gap = (a.w - b.w).abs().max((a.w1 - b.w1).abs());
    for i in 0..3 {
        gap = gap
            .max((a.w2[i] - b.w2[i]).abs())
            .max((a.w3[i] - b.w3[i]).abs());
    }
    gap
}

/// Verify the mirror relation between the two circular channels: the witness
/// of the first field at per-transition dipole phases (phi_1, ..., phi_T)
/// must equal the second field's witness wherever its phases are the
/// negation (and the emitter optical phases agree). Pairing is by phase
/// comparison, wrapped modulo 2 pi, within [`MIRROR_MATCH_TOLERANCE`].
///
/// Points whose phases are undefined (a dipole parallel to the direction)
/// are skipped. Near-degenerate transverse couplings (magnitude within the
/// channel degeneracy tolerance but not exactly zero) can in principle pair
/// a fallback-phase point with a physical-phase point; rectangular grids on
/// the reference configurations do not produce such points.
pub fn mirror_check(plus: &WitnessField, minus: &WitnessField) -> Result<MirrorReport> {
    if plus.grid != minus.grid {
        return Err(Error::GridMismatch {
            context: "mirror comparison needs both fields on the same grid".into(),
        });
    }
    if plus.pairs != minus.pairs {
        return Err(Error::GridMismatch {
            context: "mirror comparison needs identical transition tables".into(),
        });
    }
    if !plus.real_dipoles || !minus.real_dipoles {
        return Err(Error::MirrorRequiresRealDipoles);
    }

    let mut matched_points = 0;
    let mut unmatched_points = 0;
    let mut undefined_points = 0;
    let mut max_discrepancy: f64 = 0.0;

    for a in &plus.records {
        let Some(phases_a) = &a.dipole_phases else {
            undefined_points += 1;
            continue;
        };
        let mut found = false;
        for b in &minus.records {
            let Some(phases_b) = &b.dipole_phases else {
                continue;
            };
            let optical_match = a
                .optical_phases
                .iter()
                .zip(&b.optical_phases)
                .all(|(&x, &y)| wrap_phase(x - y).abs() < MIRROR_MATCH_TOLERANCE);
            if !optical_match {
                continue;
            }
            let negated = phases_a
                .iter()
                .zip(phases_b)
                .all(|(&x, &y)| wrap_phase(x + y).abs() < MIRROR_MATCH_TOLERANCE);
            if !negated {
                continue;
            }
            found = true;
            max_discrepancy = max_discrepancy.max(breakdown_gap(&a.breakdown, &b.breakdown));
        }
        if found {
            matched_points += 1;
        } else {
            unmatched_points += 1;
        }
    }

    Ok(MirrorReport {
        total_points: plus.records.len(),
        matched_points,
        unmatched_points,
        undefined_points,
        max_discrepancy,
    })
}
