//! The seven-candidate entanglement witness.
//!
//! Given collective first and second moments of the phase-dependent
//! observable families X (Plus quadratures), Y (Minus quadratures) and Z
//! (populations), seven scalar candidates are formed; every fully separable
//! N-atom state satisfies all seven >= 0, so a negative minimum certifies
//! entanglement. The candidates are
//!
//! - w1 = sum of all plain variances - (d-1) N,
//! - w2(A) = (N-1) sum_A modified variances
//!           - sum_B modified second moments - sum_C modified second moments
//!           + N(N-1), for each assignment A of the variance family,
//! - w3(C) = (N-1) (sum_A + sum_B modified variances)
//!           - sum_C modified second moments + N(N-1), for each assignment C,
//!
//! where the modified quantities subtract the local quadratic term
//! q_mu = < sum_eta (G^(eta)_mu)^2 >:  (Delta O-bar)^2 = (Delta O)^2 - q and
//! <O-bar^2> = <O^2> - q.

use std::fmt;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::geometry::{DetectionChannel, EmitterArray, TransitionTable};
use crate::hilbert::{
    expectation_dense, first_two_moments, mix_white_noise, DensityMatrix,
};
use crate::loos::{build_loos, collective_quadratures, LooFamily, LooIndexMap};
use crate::states::NamedState;
use crate::{Error, Result};

/// Slack allowed on the mathematically guaranteed <O^2> >= <O>^2.
pub const MOMENT_TOLERANCE: f64 = 1e-10;
/// Slack allowed on q >= 0 and on q equality across a quadrature pair.
pub const Q_TOLERANCE: f64 = 1e-12;
/// Plain variances below -VARIANCE_CLAMP are still clamped to zero but
/// recorded as warnings; smaller negatives are silent roundoff.
pub const VARIANCE_CLAMP: f64 = 1e-12;
/// Coarse scan step of the noise-threshold search.
const COARSE_STEPS: usize = 64;

/// The three collective observable families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableFamily {
    X,
    Y,
    Z,
}

impl ObservableFamily {
    pub const ALL: [ObservableFamily; 3] =
        [ObservableFamily::X, ObservableFamily::Y, ObservableFamily::Z];

    /// The other two families, in X < Y < Z order.
    pub fn others(self) -> [ObservableFamily; 2] {
        match self {
            ObservableFamily::X => [ObservableFamily::Y, ObservableFamily::Z],
            ObservableFamily::Y => [ObservableFamily::X, ObservableFamily::Z],
            ObservableFamily::Z => [ObservableFamily::X, ObservableFamily::Y],
        }
    }

    fn slot(self) -> usize {
        match self {
            ObservableFamily::X => 0,
            ObservableFamily::Y => 1,
            ObservableFamily::Z => 2,
        }
    }
}

impl fmt::Display for ObservableFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableFamily::X => write!(f, "X"),
            ObservableFamily::Y => write!(f, "Y"),
            ObservableFamily::Z => write!(f, "Z"),
        }
    }
}

/// First moment, second moment and local quadratic term of one collective
/// observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRecord {
    pub first: f64,
    pub second: f64,
    pub q: f64,
}

/// All d^2 moment records for one state and observable family, validated
/// against the identities the construction guarantees.
#[derive(Debug, Clone)]
pub struct MomentSet {
    index_map: LooIndexMap,
    n_sites: usize,
    records: Vec<MomentRecord>,
    warnings: Vec<String>,
}

impl MomentSet {
    fn from_records(
        index_map: LooIndexMap,
        n_sites: usize,
        records: Vec<MomentRecord>,
    ) -> Result<Self> {
        if records.len() != index_map.total() {
            return Err(Error::dim(format!(
                "need {} moment records, got {}",
                index_map.total(),
                records.len()
            )));
        }
        let mut warnings = Vec::new();
        for (i, r) in records.iter().enumerate() {
            let raw_var = r.second - r.first * r.first;
            if raw_var < -MOMENT_TOLERANCE {
                return Err(Error::InvalidState {
                    context: format!(
                        "second moment of index {} below squared first moment by {:.3e}",
                        i + 1,
                        -raw_var
                    ),
                });
            }
            if raw_var < -VARIANCE_CLAMP {
                warnings.push(format!(
                    "plain variance of index {} clamped from {raw_var:.3e} to 0",
                    i + 1
                ));
            }
            if r.q < -Q_TOLERANCE {
                return Err(Error::InvalidState {
                    context: format!("local quadratic term of index {} is {:.3e}", i + 1, r.q),
                });
            }
        }
        for &(alpha, beta) in index_map.pairs() {
            let qp = records[index_map.plus_index(alpha, beta)? - 1].q;
            let qm = records[index_map.minus_index(alpha, beta)? - 1].q;
            if (qp - qm).abs() > Q_TOLERANCE {
                return Err(Error::InvalidState {
                    context: format!(
                        "quadrature pair ({alpha},{beta}) has unequal local quadratic terms: \
                         {qp} vs {qm}"
                    ),
                });
            }
        }
        Ok(Self {
            index_map,
            n_sites,
            records,
            warnings,
        })
    }

    pub fn index_map(&self) -> &LooIndexMap {
        &self.index_map
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.index_map.local_dim()
    }

    /// Record for a 1-based flat index.
    pub fn record(&self, mu: usize) -> Result<&MomentRecord> {
        self.records.get(mu.wrapping_sub(1)).ok_or_else(|| {
            Error::InvalidParameter {
                context: format!("flat index {mu} outside 1..={}", self.records.len()),
            }
        })
    }

    /// (Delta O)^2 = <O^2> - <O>^2, clamped at zero from below (roundoff on
    /// near-eigenstates can leave tiny negatives).
    pub fn plain_variance(&self, mu: usize) -> Result<f64> {
        let r = self.record(mu)?;
        Ok((r.second - r.first * r.first).max(0.0))
    }

    /// Modified variance (Delta O-bar)^2 = (Delta O)^2 - q.
    pub fn modified_variance(&self, mu: usize) -> Result<f64> {
        let r = self.record(mu)?;
        Ok((r.second - r.first * r.first).max(0.0) - r.q)
    }

    /// Modified second moment <O-bar^2> = <O^2> - q.
    pub fn modified_second_moment(&self, mu: usize) -> Result<f64> {
        let r = self.record(mu)?;
        Ok(r.second - r.q)
    }

    /// Flat indices of one family, ascending.
    pub fn family_indices(&self, family: ObservableFamily) -> std::ops::RangeInclusive<usize> {
        let t = self.index_map.n_pairs();
        match family {
            ObservableFamily::X => 1..=t,
            ObservableFamily::Y => (t + 1)..=(2 * t),
            ObservableFamily::Z => (2 * t + 1)..=self.index_map.total(),
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn sum_over(
        &self,
        family: ObservableFamily,
        f: impl Fn(&Self, usize) -> Result<f64>,
    ) -> f64 {
        self.family_indices(family)
            .map(|mu| f(self, mu).expect("index in range"))
            .sum()
    }
}

/// Compute all collective moments of a state in one observable family via
/// the dense oracle. The per-index computations run in parallel; results are
/// deterministic because each index writes its own slot.
pub fn compute_moments(rho: &DensityMatrix, family: &LooFamily) -> Result<MomentSet> {
    if rho.n_sites() != family.n_sites() || rho.local_dim() != family.local_dim() {
        return Err(Error::dim(format!(
            "state is {} sites of dimension {}, family is {} sites of dimension {}",
            rho.n_sites(),
            rho.local_dim(),
            family.n_sites(),
            family.local_dim()
        )));
    }
    let quads = collective_quadratures(family)?;
    let total = family.index_map().total();
    let records = (1..=total)
        .into_par_iter()
        .map(|mu| {
            let op = quads.by_flat_index(mu)?;
            let (first, second) = first_two_moments(rho, &op.to_dense())?;
            let q = expectation_dense(rho, &op.local_square_sum_dense())?.re;
            Ok(MomentRecord { first, second, q })
        })
        .collect::<Result<Vec<_>>>()?;
    MomentSet::from_records(family.index_map().clone(), family.n_sites(), records)
}

/// Exact convex interpolation of the moments of (1-p) rho0 + p rho1: every
/// stored quantity is linear in the state, so no re-evaluation is needed.
fn interpolate_moments(m0: &MomentSet, m1: &MomentSet, p: f64) -> Result<MomentSet> {
    let records = m0
        .records
        .iter()
        .zip(&m1.records)
        .map(|(a, b)| MomentRecord {
            first: (1.0 - p) * a.first + p * b.first,
            second: (1.0 - p) * a.second + p * b.second,
            q: (1.0 - p) * a.q + p * b.q,
        })
        .collect();
    MomentSet::from_records(m0.index_map.clone(), m0.n_sites, records)
}

/// First candidate: sum of all plain variances minus (d-1) N.
pub fn w1(moments: &MomentSet, n: usize, d: usize) -> f64 {
    let total: f64 = ObservableFamily::ALL
        .iter()
        .map(|&fam| moments.sum_over(fam, MomentSet::plain_variance))
        .sum();
    total - ((d - 1) * n) as f64
}

/// Second candidate: the chosen family takes the (N-1)-weighted modified
/// variance slot, the other two contribute subtracted modified second
/// moments.
pub fn w2(moments: &MomentSet, variance_family: ObservableFamily, n: usize) -> f64 {
    let [b, c] = variance_family.others();
    (n as f64 - 1.0) * moments.sum_over(variance_family, MomentSet::modified_variance)
        - moments.sum_over(b, MomentSet::modified_second_moment)
        - moments.sum_over(c, MomentSet::modified_second_moment)
        + (n * (n - 1)) as f64
}

/// Third candidate: the chosen family takes the subtracted-second-moment
/// slot, the other two the (N-1)-weighted modified variances.
pub fn w3(moments: &MomentSet, second_moment_family: ObservableFamily, n: usize) -> f64 {
    let [a, b] = second_moment_family.others();
    (n as f64 - 1.0)
        * (moments.sum_over(a, MomentSet::modified_variance)
            + moments.sum_over(b, MomentSet::modified_variance))
        - moments.sum_over(second_moment_family, MomentSet::modified_second_moment)
        + (n * (n - 1)) as f64
}

/// Which of the seven candidates attained the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateLabel {
    W1,
    W2(ObservableFamily),
    W3(ObservableFamily),
}

impl CandidateLabel {
    /// Fixed evaluation order; ties in the minimum keep the earliest label.
    pub const ALL: [CandidateLabel; 7] = [
        CandidateLabel::W1,
        CandidateLabel::W2(ObservableFamily::X),
        CandidateLabel::W2(ObservableFamily::Y),
        CandidateLabel::W2(ObservableFamily::Z),
        CandidateLabel::W3(ObservableFamily::X),
        CandidateLabel::W3(ObservableFamily::Y),
        CandidateLabel::W3(ObservableFamily::Z),
    ];
}

impl fmt::Display for CandidateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateLabel::W1 => write!(f, "w1"),
            CandidateLabel::W2(fam) => write!(f, "w2_{fam}"),
            CandidateLabel::W3(fam) => write!(f, "w3_{fam}"),
        }
    }
}

/// All seven candidate values, their minimum, and evaluation context.
#[derive(Debug, Clone)]
pub struct WitnessBreakdown {
    pub w1: f64,
    /// w2 values indexed by variance family in X, Y, Z order
    pub w2: [f64; 3],
    /// w3 values indexed by second-moment family in X, Y, Z order
    pub w3: [f64; 3],
    /// min of the seven candidates
    pub w: f64,
    /// earliest candidate attaining the minimum (order of CandidateLabel::ALL)
    pub minimizer: CandidateLabel,
    pub direction: Vector3<f64>,
    pub warnings: Vec<String>,
}

impl WitnessBreakdown {
    /// Candidate value by label.
    pub fn value(&self, label: CandidateLabel) -> f64 {
        match label {
            CandidateLabel::W1 => self.w1,
            CandidateLabel::W2(fam) => self.w2[fam.slot()],
            CandidateLabel::W3(fam) => self.w3[fam.slot()],
        }
    }

    /// The seven (label, value) pairs in fixed order.
    pub fn candidates(&self) -> [(CandidateLabel, f64); 7] {
        CandidateLabel::ALL.map(|l| (l, self.value(l)))
    }
}

fn breakdown_from_moments(
    moments: &MomentSet,
    extra_warnings: &[String],
    direction: Vector3<f64>,
) -> WitnessBreakdown {
    let n = moments.n_sites();
    let d = moments.local_dim();
    let w1_val = w1(moments, n, d);
    let w2_vals = [
        w2(moments, ObservableFamily::X, n),
        w2(moments, ObservableFamily::Y, n),
        w2(moments, ObservableFamily::Z, n),
    ];
    let w3_vals = [
        w3(moments, ObservableFamily::X, n),
        w3(moments, ObservableFamily::Y, n),
        w3(moments, ObservableFamily::Z, n),
    ];
    let mut breakdown = WitnessBreakdown {
        w1: w1_val,
        w2: w2_vals,
        w3: w3_vals,
        w: w1_val,
        minimizer: CandidateLabel::W1,
        direction,
        warnings: extra_warnings
            .iter()
            .chain(moments.warnings())
            .cloned()
            .collect(),
    };
    for label in CandidateLabel::ALL {
        let v = breakdown.value(label);
        if v < breakdown.w {
            breakdown.w = v;
            breakdown.minimizer = label;
        }
    }
    breakdown
}

/// Evaluate all seven candidates and their minimum for a state.
pub fn witness_min(rho: &DensityMatrix, family: &LooFamily) -> Result<WitnessBreakdown> {
    let moments = compute_moments(rho, family)?;
    Ok(breakdown_from_moments(
        &moments,
        family.warnings(),
        *family.direction(),
    ))
}

/// The polarization-blind triple {w1, w2 with Z variance family, w3 with Z
/// second-moment family}: identical for any two channels sharing a
/// direction, because the Z family never touches the channel phases and the
/// X/Y families enter these three expressions only through channel-invariant
/// sums.
pub fn polarization_blind_values(rho: &DensityMatrix, family: &LooFamily) -> Result<[f64; 3]> {
    let moments = compute_moments(rho, family)?;
    let n = moments.n_sites();
    let d = moments.local_dim();
    Ok([
        w1(&moments, n, d),
        w2(&moments, ObservableFamily::Z, n),
        w3(&moments, ObservableFamily::Z, n),
    ])
}

/// Result of a white-noise robustness search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdOutcome {
    /// Entanglement detected at p = 0; p_star is where the witness minimum
    /// crosses zero.
    Detected { p_star: f64 },
    /// The witness is already nonnegative for the pure state.
    NoViolation { witness_at_zero: f64 },
}

/// Locate the white-noise level where detection is lost: the smallest p at
/// which W(p) >= 0, found by a coarse scan (step 1/64) followed by bisection
/// to `p_resolution`. W(p) is evaluated exactly from the two endpoint moment
/// sets, since every moment is linear in the state.
pub fn noise_threshold(
    state: &NamedState,
    array: &EmitterArray,
    table: &TransitionTable,
    channel: &DetectionChannel,
    p_resolution: f64,
) -> Result<ThresholdOutcome> {
    if !(p_resolution > 0.0) || !p_resolution.is_finite() {
        return Err(Error::InvalidParameter {
            context: format!("p_resolution must be positive and finite, got {p_resolution}"),
        });
    }
    let family = build_loos(array, table, channel)?;
    let m0 = compute_moments(&mix_white_noise(&state.psi, 0.0)?, &family)?;
    let m1 = compute_moments(&mix_white_noise(&state.psi, 1.0)?, &family)?;
    let direction = *family.direction();
    let w_at = |p: f64| -> Result<f64> {
        let m = interpolate_moments(&m0, &m1, p)?;
        Ok(breakdown_from_moments(&m, &[], direction).w)
    };

    let w0 = w_at(0.0)?;
    if w0 >= 0.0 {
        return Ok(ThresholdOutcome::NoViolation { witness_at_zero: w0 });
    }

    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=COARSE_STEPS {
        let p = k as f64 / COARSE_STEPS as f64;
        if w_at(p)? >= 0.0 {
            hi = Some(p);
            break;
        }
        lo = p;
    }
    let mut hi = hi.ok_or_else(|| Error::InvalidState {
        context: "witness still negative on the maximally mixed state; \
                  the separability bound is broken"
            .into(),
    })?;

    while hi - lo > p_resolution {
        let mid = 0.5 * (lo + hi);
        if w_at(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdOutcome::Detected {
        p_star: 0.5 * (lo + hi),
    })
}
