//! Emitter positions, transition dipoles, detection direction and
//! polarization: everything about the optical geometry that feeds the
//! phase-dependent observable construction.
//!
//! Positions are stored in units of 1/k0, so every optical phase is the plain
//! dot product R-hat . r with no wavelength parameter anywhere.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Max |norm - 1| accepted on direction and polarization vectors.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// |zeta| below this is flagged degenerate (the channel does not couple to
/// the transition at this direction).
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Lift a real 3-vector into the complex 3-space all dipole algebra runs in.
pub fn to_complex(v: &Vector3<f64>) -> Vector3<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// Right-circular unit polarization, lab-frame spherical basis:
/// e_+ = -(x + i y)/sqrt(2).
///
/// Convention constant. The basis is fixed in the lab frame (not rotated with
/// the detection direction); flip the leading signs here to move to the
/// opposite handedness convention.
pub fn e_plus() -> Vector3<C64> {
    let s = 1.0 / 2.0_f64.sqrt();
    Vector3::new(C64::new(-s, 0.0), C64::new(0.0, -s), C64::new(0.0, 0.0))
}

/// Left-circular unit polarization, lab-frame spherical basis:
/// e_- = (x - i y)/sqrt(2).
pub fn e_minus() -> Vector3<C64> {
    let s = 1.0 / 2.0_f64.sqrt();
    Vector3::new(C64::new(s, 0.0), C64::new(0.0, -s), C64::new(0.0, 0.0))
}

/// Linear polarization along z.
pub fn e_z() -> Vector3<C64> {
    Vector3::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
}

/// The circular pair (e_+, e_-); satisfies e_+ = -(e_-)* and mutual
/// orthogonality under the conjugating inner product.
pub fn circular_basis() -> (Vector3<C64>, Vector3<C64>) {
    (e_plus(), e_minus())
}

fn check_unit_direction(direction: &Vector3<f64>) -> Result<()> {
    let dev = (direction.norm() - 1.0).abs();
    if !dev.is_finite() || dev > UNIT_TOLERANCE {
        return Err(Error::NonUnitDirection { deviation: dev });
    }
    Ok(())
}

fn check_unit_vector(v: &Vector3<C64>) -> Result<()> {
    let dev = (v.norm() - 1.0).abs();
    if !dev.is_finite() || dev > UNIT_TOLERANCE {
        return Err(Error::NonUnitVector { deviation: dev });
    }
    Ok(())
}

fn canonical_pair(alpha: usize, beta: usize, local_dim: usize) -> Result<(usize, usize)> {
    if alpha == beta || alpha < 1 || beta < 1 || alpha > local_dim || beta > local_dim {
        return Err(Error::InvalidPair {
            alpha,
            beta,
            context: format!("need distinct levels in 1..={local_dim}"),
        });
    }
    Ok(if alpha < beta {
        (alpha, beta)
    } else {
        (beta, alpha)
    })
}

/// The emitter array: N positions (units of 1/k0) and the shared local level
/// count d.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterArray {
    positions: Vec<Vector3<f64>>,
    local_dim: usize,
}

impl EmitterArray {
    pub fn new(positions: Vec<Vector3<f64>>, local_dim: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyArray);
        }
        if local_dim < 2 {
            return Err(Error::InvalidParameter {
                context: "local_dim must be >= 2".into(),
            });
        }
        if positions.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinitePosition);
        }
        Ok(Self {
            positions,
            local_dim,
        })
    }

    /// Equally spaced chain along z: r_eta = (eta - 1) * spacing * z-hat.
    pub fn linear_chain(n_sites: usize, spacing: f64, local_dim: usize) -> Result<Self> {
        if !spacing.is_finite() {
            return Err(Error::NonFinitePosition);
        }
        let positions = (0..n_sites)
            .map(|i| Vector3::new(0.0, 0.0, i as f64 * spacing))
            .collect();
        Self::new(positions, local_dim)
    }

    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    /// Optical phase R-hat . r_eta of the (1-based) site along `direction`.
    pub fn optical_phase(&self, site: usize, direction: &Vector3<f64>) -> Result<f64> {
        if site < 1 || site > self.n_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites(),
            });
        }
        Ok(direction.dot(&self.positions[site - 1]))
    }
}

/// Which level pairs (alpha < beta) carry an optical transition, and the unit
/// dipole vector of each allowed one. Pairs absent from the table are
/// forbidden transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    local_dim: usize,
    dipoles: BTreeMap<(usize, usize), Vector3<C64>>,
}

impl TransitionTable {
    /// `allowed`: one ((alpha, beta), unit dipole) entry per allowed
    /// transition, alpha < beta. Unlisted pairs are forbidden.
    pub fn new(
        local_dim: usize,
        allowed: Vec<((usize, usize), Vector3<C64>)>,
    ) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::InvalidParameter {
                context: "local_dim must be >= 2".into(),
            });
        }
        let mut dipoles = BTreeMap::new();
        for ((alpha, beta), dipole) in allowed {
            if alpha >= beta {
                return Err(Error::InvalidPair {
                    alpha,
                    beta,
                    context: "transition pairs must satisfy alpha < beta".into(),
                });
            }
            canonical_pair(alpha, beta, local_dim)?;
            check_unit_vector(&dipole)?;
            if dipoles.insert((alpha, beta), dipole).is_some() {
                return Err(Error::InvalidPair {
                    alpha,
                    beta,
                    context: "duplicate transition entry".into(),
                });
            }
        }
        Ok(Self { local_dim, dipoles })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// True when the (order-insensitive) pair carries a transition.
    pub fn is_allowed(&self, alpha: usize, beta: usize) -> bool {
        canonical_pair(alpha, beta, self.local_dim)
            .map(|p| self.dipoles.contains_key(&p))
            .unwrap_or(false)
    }

    /// Unit dipole of an allowed pair, in canonical alpha < beta orientation.
    pub fn dipole(&self, alpha: usize, beta: usize) -> Option<&Vector3<C64>> {
        canonical_pair(alpha, beta, self.local_dim)
            .ok()
            .and_then(|p| self.dipoles.get(&p))
    }

    /// Allowed pairs in lexicographic order.
    pub fn allowed_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.dipoles.keys().copied()
    }

    /// All level pairs alpha < beta in lexicographic order, allowed or not.
    pub fn all_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.local_dim;
        (1..=d).flat_map(move |a| ((a + 1)..=d).map(move |b| (a, b)))
    }

    /// Number of allowed transitions.
    pub fn n_allowed(&self) -> usize {
        self.dipoles.len()
    }

    /// Number of forbidden pairs; always n_allowed + n_forbidden = d(d-1)/2.
    pub fn n_forbidden(&self) -> usize {
        self.local_dim * (self.local_dim - 1) / 2 - self.dipoles.len()
    }

    /// True when every dipole component has (numerically) zero imaginary part.
    pub fn all_dipoles_real(&self) -> bool {
        self.dipoles
            .values()
            .all(|d| d.iter().all(|c| c.im.abs() <= UNIT_TOLERANCE))
    }
}

/// Where the light is collected and which polarization is measured on each
/// transition's frequency channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionChannel {
    direction: Vector3<f64>,
    polarization: BTreeMap<(usize, usize), Vector3<C64>>,
}

impl DetectionChannel {
    /// Same polarization vector on every allowed transition.
    pub fn uniform(
        direction: Vector3<f64>,
        polarization: Vector3<C64>,
        table: &TransitionTable,
    ) -> Result<Self> {
        check_unit_direction(&direction)?;
        check_unit_vector(&polarization)?;
        let map = table
            .allowed_pairs()
            .map(|p| (p, polarization))
            .collect();
        Ok(Self {
            direction,
            polarization: map,
        })
    }

    /// Uniform channel from a named preset: "e_plus", "e_minus" or "e_z".
    pub fn preset(
        direction: Vector3<f64>,
        name: &str,
        table: &TransitionTable,
    ) -> Result<Self> {
        let polarization = preset_vector(name)?;
        Self::uniform(direction, polarization, table)
    }

    /// Explicit polarization per transition. Every key must be an allowed
    /// pair and every allowed pair must get a vector.
    pub fn per_transition(
        direction: Vector3<f64>,
        polarization: BTreeMap<(usize, usize), Vector3<C64>>,
        table: &TransitionTable,
    ) -> Result<Self> {
        check_unit_direction(&direction)?;
        for (&(alpha, beta), e) in &polarization {
            if !table.is_allowed(alpha, beta) || alpha >= beta {
                return Err(Error::InvalidPair {
                    alpha,
                    beta,
                    context: "polarization assigned to a forbidden or non-canonical pair".into(),
                });
            }
            check_unit_vector(e)?;
        }
        for (alpha, beta) in table.allowed_pairs() {
            if !polarization.contains_key(&(alpha, beta)) {
                return Err(Error::InvalidPair {
                    alpha,
                    beta,
                    context: "allowed transition has no polarization vector".into(),
                });
            }
        }
        Ok(Self {
            direction,
            polarization,
        })
    }

    pub fn direction(&self) -> &Vector3<f64> {
        &self.direction
    }

    /// Polarization vector measured on the (alpha, beta) transition channel,
    /// canonical orientation.
    pub fn polarization(&self, alpha: usize, beta: usize) -> Option<&Vector3<C64>> {
        let key = if alpha < beta {
            (alpha, beta)
        } else {
            (beta, alpha)
        };
        self.polarization.get(&key)
    }
}

/// Resolve a preset polarization name.
pub fn preset_vector(name: &str) -> Result<Vector3<C64>> {
    match name {
        "e_plus" => Ok(e_plus()),
        "e_minus" => Ok(e_minus()),
        "e_z" => Ok(e_z()),
        other => Err(Error::InvalidParameter {
            context: format!("unknown polarization preset {other:?} (use e_plus, e_minus, e_z)"),
        }),
    }
}

/// Transverse part of the radiated dipole pattern along the detection
/// direction: R-hat x (R-hat x d) = R-hat (R-hat . d) - d. Orthogonal to
/// the direction by construction.
pub fn projected_dipole(
    direction: &Vector3<f64>,
    dipole: &Vector3<C64>,
) -> Result<Vector3<C64>> {
    check_unit_direction(direction)?;
    let r = to_complex(direction);
    let along = r.dot(dipole); // plain (unconjugated) dot
    Ok(r * along - dipole)
}

/// The channel coupling factor for one transition at one direction, plus a
/// flag marking couplings too small to define a phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zeta {
    pub value: C64,
    pub degenerate: bool,
}

/// zeta_{alpha beta} = e_{alpha beta} . (R-hat x (R-hat x d_{alpha beta})),
/// a plain (unconjugated) dot product. Calling with alpha > beta returns the
/// conjugate of the canonical value, so zeta(beta, alpha) = conj(zeta(alpha,
/// beta)) holds identically.
pub fn zeta(
    channel: &DetectionChannel,
    alpha: usize,
    beta: usize,
    table: &TransitionTable,
) -> Result<Zeta> {
    let (a, b) = canonical_pair(alpha, beta, table.local_dim())?;
    let dipole = table
        .dipole(a, b)
        .ok_or(Error::ForbiddenTransition { alpha: a, beta: b })?;
    let e = channel.polarization(a, b).ok_or_else(|| Error::InvalidPair {
        alpha: a,
        beta: b,
        context: "channel has no polarization for this transition".into(),
    })?;
    let v = projected_dipole(channel.direction(), dipole)?;
    let mut value = e.dot(&v); // plain dot, no conjugation
    if alpha > beta {
        value = value.conj();
    }
    Ok(Zeta {
        value,
        degenerate: value.norm() < DEGENERACY_TOLERANCE,
    })
}

/// Phase picked up from the transverse dipole pattern: atan2(v2, v1) of the
/// projected dipole's first two Cartesian components, in (-pi, pi]. Only
/// defined for (numerically) real projected dipoles.
pub fn dipole_phase(direction: &Vector3<f64>, dipole: &Vector3<C64>) -> Result<f64> {
    let v = projected_dipole(direction, dipole)?;
    if v.norm() < DEGENERACY_TOLERANCE {
        return Err(Error::ZeroProjectedDipole);
    }
    let im_norm = v.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    if im_norm > UNIT_TOLERANCE {
        return Err(Error::ComplexDipolePhase {
            imaginary_norm: im_norm,
        });
    }
    let phase = f64::atan2(v[1].re, v[0].re);
    // atan2 covers [-pi, pi]; fold the single boundary case onto +pi.
    Ok(if phase <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        phase
    })
}

/// Structure factor S = |sum_eta exp(i R-hat . r_eta)|^2, in [0, N^2].
pub fn structure_factor(array: &EmitterArray, direction: &Vector3<f64>) -> Result<f64> {
    check_unit_direction(direction)?;
    let sum: C64 = array
        .positions()
        .iter()
        .map(|r| C64::new(0.0, direction.dot(r)).exp())
        .sum();
    Ok(sum.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn x_hat() -> Vector3<C64> {
        to_complex(&Vector3::x())
    }

    /// d = 3 V-structure: 1<->2 and 1<->3 allowed, 2<->3 forbidden.
    fn v_table(d12: Vector3<C64>, d13: Vector3<C64>) -> TransitionTable {
        TransitionTable::new(3, vec![((1, 2), d12), ((1, 3), d13)]).unwrap()
    }

    #[test]
    fn projected_dipole_examples() {
        let z = Vector3::z();
        // transverse dipole flips sign
        let v = projected_dipole(&z, &x_hat()).unwrap();
        assert!((v + x_hat()).norm() < 1e-15);
        // longitudinal dipole radiates nothing along the axis
        let v = projected_dipole(&z, &to_complex(&Vector3::z())).unwrap();
        assert!(v.norm() < 1e-15);
        // oblique direction
        let dir = Vector3::new(1.0, 1.0, 1.0) / 3.0_f64.sqrt();
        let v = projected_dipole(&dir, &x_hat()).unwrap();
        let expect = Vector3::new(c(-2.0 / 3.0, 0.0), c(1.0 / 3.0, 0.0), c(1.0 / 3.0, 0.0));
        assert!((v - expect).norm() < 1e-14);
    }

    #[test]
    fn projected_dipole_rejects_non_unit_direction() {
        let bad = Vector3::new(0.0, 0.0, 2.0);
        assert!(matches!(
            projected_dipole(&bad, &x_hat()),
            Err(Error::NonUnitDirection { .. })
        ));
    }

    #[test]
    fn zeta_examples() {
        let z = Vector3::z();
        let table = TransitionTable::new(2, vec![((1, 2), x_hat())]).unwrap();
        let ch = DetectionChannel::uniform(z, x_hat(), &table).unwrap();
        let zv = zeta(&ch, 1, 2, &table).unwrap();
        assert!((zv.value - c(-1.0, 0.0)).norm() < 1e-14);
        assert!(!zv.degenerate);

        // longitudinal dipole: zero coupling, degenerate flag
        let table = TransitionTable::new(2, vec![((1, 2), to_complex(&Vector3::z()))]).unwrap();
        let ch = DetectionChannel::uniform(z, x_hat(), &table).unwrap();
        let zv = zeta(&ch, 1, 2, &table).unwrap();
        assert!(zv.value.norm() < 1e-14 && zv.degenerate);

        // circular channel against a diagonal real dipole
        let diag = to_complex(&(Vector3::new(1.0, 1.0, 0.0) / 2.0_f64.sqrt()));
        let table = TransitionTable::new(2, vec![((1, 2), diag)]).unwrap();
        let ch = DetectionChannel::preset(z, "e_plus", &table).unwrap();
        let zv = zeta(&ch, 1, 2, &table).unwrap();
        assert!((zv.value - c(0.5, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn zeta_conjugate_pair_and_forbidden() {
        let d12 = to_complex(&(Vector3::new(1.0, 0.0, 1.0) / 2.0_f64.sqrt()));
        let d13 = to_complex(&(Vector3::new(1.0, 0.0, -1.0) / 2.0_f64.sqrt()));
        let table = v_table(d12, d13);
        let dir = Vector3::new(0.6, 0.0, 0.8);
        let ch = DetectionChannel::preset(dir, "e_plus", &table).unwrap();
        let z12 = zeta(&ch, 1, 2, &table).unwrap();
        let z21 = zeta(&ch, 2, 1, &table).unwrap();
        assert!((z21.value - z12.value.conj()).norm() < 1e-15);
        assert!(matches!(
            zeta(&ch, 2, 3, &table),
            Err(Error::ForbiddenTransition { alpha: 2, beta: 3 })
        ));
        assert!(matches!(
            zeta(&ch, 1, 1, &table),
            Err(Error::InvalidPair { .. })
        ));
    }

    #[test]
    fn dipole_phase_examples_and_range() {
        let z = Vector3::z();
        let phi = dipole_phase(&z, &x_hat()).unwrap();
        assert!((phi - PI).abs() < 1e-15); // exactly +pi, inside (-pi, pi]
        let phi = dipole_phase(&z, &to_complex(&Vector3::y())).unwrap();
        assert!((phi + PI / 2.0).abs() < 1e-15);
        let diag = to_complex(&(Vector3::new(1.0, 1.0, 0.0) / 2.0_f64.sqrt()));
        let phi = dipole_phase(&z, &diag).unwrap();
        assert!((phi + 3.0 * PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn dipole_phase_error_cases() {
        let z = Vector3::z();
        assert!(matches!(
            dipole_phase(&z, &to_complex(&Vector3::z())),
            Err(Error::ZeroProjectedDipole)
        ));
        assert!(matches!(
            dipole_phase(&z, &e_plus()),
            Err(Error::ComplexDipolePhase { .. })
        ));
    }

    #[test]
    fn structure_factor_examples() {
        // all atoms in a plane orthogonal to the direction: fully constructive
        let arr = EmitterArray::new(
            vec![
                Vector3::new(0.3, -1.2, 0.0),
                Vector3::new(5.0, 2.0, 0.0),
                Vector3::new(-0.7, 0.1, 0.0),
            ],
            2,
        )
        .unwrap();
        let s = structure_factor(&arr, &Vector3::z()).unwrap();
        assert!((s - 9.0).abs() < 1e-12);

        // two atoms at 0 and 15/k0 along z, observed along z
        let arr = EmitterArray::new(
            vec![Vector3::zeros(), Vector3::new(0.0, 0.0, 15.0)],
            3,
        )
        .unwrap();
        let s = structure_factor(&arr, &Vector3::z()).unwrap();
        assert!((s - (2.0 + 2.0 * 15.0_f64.cos())).abs() < 1e-12);
        assert!((s - 0.4806).abs() < 1e-4);
    }

    #[test]
    fn linear_chain_positions() {
        let arr = EmitterArray::linear_chain(4, 2.5, 2).unwrap();
        assert_eq!(arr.n_sites(), 4);
        assert_eq!(arr.positions()[3], Vector3::new(0.0, 0.0, 7.5));
        assert!((arr.optical_phase(3, &Vector3::z()).unwrap() - 5.0).abs() < 1e-15);
        assert!(arr.optical_phase(5, &Vector3::z()).is_err());
    }

    #[test]
    fn circular_basis_relations() {
        let (ep, em) = circular_basis();
        assert!((ep.dotc(&ep).norm() - 1.0).abs() < 1e-15);
        assert!((em.dotc(&em).norm() - 1.0).abs() < 1e-15);
        assert!(em.dotc(&ep).norm() < 1e-15);
        // e_+ = -(e_-)* in this convention
        assert!((ep + em.map(|c| c.conj())).norm() < 1e-15);
        assert_eq!(e_z(), to_complex(&Vector3::z()));
    }

    #[test]
    fn transition_table_counting_and_validation() {
        let table = v_table(x_hat(), to_complex(&Vector3::y()));
        assert_eq!(table.n_allowed(), 2);
        assert_eq!(table.n_forbidden(), 1);
        assert_eq!(
            table.all_pairs().collect::<Vec<_>>(),
            vec![(1, 2), (1, 3), (2, 3)]
        );
        assert!(table.is_allowed(2, 1)); // order-insensitive query
        assert!(!table.is_allowed(2, 3));

        let long = Vector3::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            TransitionTable::new(2, vec![((1, 2), long)]),
            Err(Error::NonUnitVector { .. })
        ));
        assert!(TransitionTable::new(2, vec![((2, 1), x_hat())]).is_err());
        assert!(
            TransitionTable::new(3, vec![((1, 2), x_hat()), ((1, 2), x_hat())]).is_err()
        );
    }

    #[test]
    fn detection_channel_validation() {
        let table = v_table(x_hat(), to_complex(&Vector3::y()));
        assert!(matches!(
            DetectionChannel::uniform(Vector3::new(0.0, 0.0, 0.5), e_z(), &table),
            Err(Error::NonUnitDirection { .. })
        ));
        assert!(DetectionChannel::preset(Vector3::z(), "e_left", &table).is_err());

        // per-transition: missing an allowed pair is rejected
        let mut map = BTreeMap::new();
        map.insert((1, 2), e_plus());
        assert!(DetectionChannel::per_transition(Vector3::z(), map.clone(), &table).is_err());
        map.insert((1, 3), e_minus());
        let ch = DetectionChannel::per_transition(Vector3::z(), map.clone(), &table).unwrap();
        assert_eq!(ch.polarization(3, 1), Some(&e_minus()));
        // assigning to the forbidden 2<->3 pair is rejected
        map.insert((2, 3), e_z());
        assert!(DetectionChannel::per_transition(Vector3::z(), map, &table).is_err());
    }

    prop_compose! {
        fn unit_direction()(v in prop::array::uniform3(-1.0_f64..1.0)) -> Vector3<f64> {
            let w = Vector3::from(v);
            if w.norm() < 1e-3 { Vector3::z() } else { w / w.norm() }
        }
    }

    prop_compose! {
        fn complex_unit_dipole()(
            re in prop::array::uniform3(-1.0_f64..1.0),
            im in prop::array::uniform3(-1.0_f64..1.0),
        ) -> Vector3<C64> {
            let v = Vector3::new(
                c(re[0], im[0]), c(re[1], im[1]), c(re[2], im[2]),
            );
            if v.norm() < 1e-3 { e_z() } else { v / c(v.norm(), 0.0) }
        }
    }

    proptest! {
        #[test]
        fn projected_dipole_is_transverse(
            dir in unit_direction(),
            dip in complex_unit_dipole(),
        ) {
            let v = projected_dipole(&dir, &dip).unwrap();
            prop_assert!(to_complex(&dir).dot(&v).norm() < 1e-12);
        }

        #[test]
        fn zeta_conjugation_holds_for_random_geometry(
            dir in unit_direction(),
            dip in complex_unit_dipole(),
            pol in complex_unit_dipole(),
        ) {
            let table = TransitionTable::new(2, vec![((1, 2), dip)]).unwrap();
            let ch = DetectionChannel::uniform(dir, pol, &table).unwrap();
            let z12 = zeta(&ch, 1, 2, &table).unwrap();
            let z21 = zeta(&ch, 2, 1, &table).unwrap();
            prop_assert!((z21.value - z12.value.conj()).norm() < 1e-14);
        }

        #[test]
        fn structure_factor_bounds_and_translation_invariance(
            dir in unit_direction(),
            raw in prop::collection::vec(prop::array::uniform3(-20.0_f64..20.0), 1..6),
            shift in prop::array::uniform3(-10.0_f64..10.0),
        ) {
            let n = raw.len();
            let positions: Vec<_> = raw.iter().map(|p| Vector3::from(*p)).collect();
            let arr = EmitterArray::new(positions.clone(), 2).unwrap();
            let s = structure_factor(&arr, &dir).unwrap();
            prop_assert!((-1e-10..=(n * n) as f64 + 1e-10).contains(&s));

            let moved: Vec<_> = positions.iter().map(|p| p + Vector3::from(shift)).collect();
            let arr2 = EmitterArray::new(moved, 2).unwrap();
            let s2 = structure_factor(&arr2, &dir).unwrap();
            prop_assert!((s - s2).abs() <= 1e-10 * (1.0 + s.abs()));
        }
    }
}
