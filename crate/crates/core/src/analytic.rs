//! Closed-form reference values used to cross-validate the numerical engine:
//! white-noise thresholds of the symmetric and antisymmetric reference
//! states, the W-state detectability bound, the two-qutrit circular-channel
//! witness, and the linear-array interference factor.

use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Tiny |1 - e^{i kz_a}| below which the lattice ratio takes its
/// constructive limit n^2.
const LATTICE_LIMIT_TOLERANCE: f64 = 1e-9;

/// A closed-form noise threshold together with the interference regime it
/// assumes. `p_star = 0` with a note means the state is undetected already
/// at zero noise for that interference factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// largest white-noise admixture at which detection persists, in [0, 1]
    pub p_star: f64,
    /// which interference condition the formula assumed
    pub note: String,
}

fn check_interference_factor(n: usize, s: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            context: format!("need at least 2 emitters, got {n}"),
        });
    }
    let max = (n * n) as f64;
    if !s.is_finite() || s < 0.0 || s > max {
        return Err(Error::InvalidParameter {
            context: format!("interference factor {s} outside [0, {max}] for {n} emitters"),
        });
    }
    Ok(())
}

/// Noise threshold of the single-excitation symmetric state: detection
/// requires destructive interference (s < n) and persists for
/// p < (n-s)/((n-1)+(n-s)). Outside the window the threshold is reported as
/// 0 with a note, so sweeps stay continuous.
pub fn sym_noise_threshold(n: usize, s: f64) -> Result<ThresholdResult> {
    check_interference_factor(n, s)?;
    let nf = n as f64;
    if s >= nf {
        return Ok(ThresholdResult {
            p_star: 0.0,
            note: format!(
                "no violation: interference factor {s:.6} >= {n} leaves the \
                 symmetric state undetected at zero noise"
            ),
        });
    }
    Ok(ThresholdResult {
        p_star: (nf - s) / ((nf - 1.0) + (nf - s)),
        note: format!("destructive interference regime (s = {s:.6} < {n})"),
    })
}

/// Noise threshold of the antisymmetric (singlet) state: detection requires
/// constructive interference (s > n) and persists for
/// p < (s-n)/((n-1)+(s-n)). At s = n^2 this is n/(n+1).
pub fn asym_noise_threshold(n: usize, s: f64) -> Result<ThresholdResult> {
    check_interference_factor(n, s)?;
    let nf = n as f64;
    if s <= nf {
        return Ok(ThresholdResult {
            p_star: 0.0,
            note: format!(
                "no violation: interference factor {s:.6} <= {n} leaves the \
                 antisymmetric state undetected at zero noise"
            ),
        });
    }
    Ok(ThresholdResult {
        p_star: (s - nf) / ((nf - 1.0) + (s - nf)),
        note: format!("constructive interference regime (s = {s:.6} > {n})"),
    })
}

/// Claimed interference-factor bound below which the single-flip
/// superposition state is detectable: n^2/(2n-1). Degenerate at n = 1
/// (returns 1, not meaningful for a single emitter).
pub fn w_state_violation_bound(n: usize) -> f64 {
    let nf = n as f64;
    nf * nf / (2.0 * nf - 1.0)
}

/// Sign convention of the circular detection channel in
/// [`two_qutrit_closed_form`]: `Plus` takes the upper signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handedness {
    Plus,
    Minus,
}

impl Handedness {
    fn sign(self) -> f64 {
        match self {
            Handedness::Plus => 1.0,
            Handedness::Minus => -1.0,
        }
    }
}

/// Closed-form witness value of the two-qutrit example state on a circular
/// detection channel:
///
/// -(4/3) cos(phase1 -+ 2 phi12) + (1/9) cos(phase2 -+ 2 phi13) + 5/9,
///
/// with the upper signs for `Handedness::Plus`. `phase1` is the summed
/// optical phase of both emitters, `phase2` twice the second emitter's, and
/// `phi12`/`phi13` the in-plane dipole orientation angles of the two
/// transitions.
pub fn two_qutrit_closed_form(
    phase1: f64,
    phase2: f64,
    phi12: f64,
    phi13: f64,
    handedness: Handedness,
) -> f64 {
    let h = handedness.sign();
    -(4.0 / 3.0) * (phase1 - h * 2.0 * phi12).cos()
        + (1.0 / 9.0) * (phase2 - h * 2.0 * phi13).cos()
        + 5.0 / 9.0
}

/// Interference factor of n emitters on a 1D lattice observed along the
/// lattice axis: |(1 - e^{i n kz_a}) / (1 - e^{i kz_a})|^2, with the
/// constructive limit n^2 taken explicitly near kz_a = 0 mod 2 pi.
pub fn linear_array_structure_factor(n: usize, kz_a: f64) -> f64 {
    let unit = C64::new(0.0, kz_a).exp();
    let denom = C64::new(1.0, 0.0) - unit;
    if denom.norm() < LATTICE_LIMIT_TOLERANCE {
        return (n * n) as f64;
    }
    let numer = C64::new(1.0, 0.0) - C64::new(0.0, n as f64 * kz_a).exp();
    (numer / denom).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{structure_factor, EmitterArray};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_threshold_examples() {
        let r = sym_noise_threshold(2, 0.0).unwrap();
        assert!((r.p_star - 2.0 / 3.0).abs() < 1e-15);

        // large n at full destructive interference approaches 1/2 from above
        let r = sym_noise_threshold(1_000_000, 0.0).unwrap();
        assert!(r.p_star > 0.5);
        assert!(r.p_star - 0.5 < 1e-6);

        // boundary: s = n closes the window
        let r = sym_noise_threshold(3, 3.0).unwrap();
        assert_eq!(r.p_star, 0.0);
        assert!(r.note.contains("no violation"));
    }

    #[test]
    fn antisymmetric_threshold_examples() {
        let r = asym_noise_threshold(3, 9.0).unwrap();
        assert!((r.p_star - 0.75).abs() < 1e-15);

        let r = asym_noise_threshold(2, 4.0).unwrap();
        assert!((r.p_star - 2.0 / 3.0).abs() < 1e-15);

        // s = n^2 simplifies to n/(n+1)
        for n in 2..=6 {
            let r = asym_noise_threshold(n, (n * n) as f64).unwrap();
            assert!((r.p_star - n as f64 / (n as f64 + 1.0)).abs() < 1e-15);
        }

        let r = asym_noise_threshold(4, 4.0).unwrap();
        assert_eq!(r.p_star, 0.0);
        assert!(r.note.contains("no violation"));
    }

    #[test]
    fn thresholds_stay_in_unit_interval_and_reject_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8usize);
            let s = rng.gen_range(0.0..=(n * n) as f64);
            for r in [
                sym_noise_threshold(n, s).unwrap(),
                asym_noise_threshold(n, s).unwrap(),
            ] {
                assert!((0.0..=1.0).contains(&r.p_star), "p* = {} for n={n} s={s}", r.p_star);
            }
        }
        assert!(sym_noise_threshold(1, 0.0).is_err());
        assert!(sym_noise_threshold(2, -0.5).is_err());
        assert!(sym_noise_threshold(2, 4.5).is_err());
        assert!(asym_noise_threshold(2, f64::NAN).is_err());
    }

    #[test]
    fn w_state_bound_values() {
        assert!((w_state_violation_bound(2) - 4.0 / 3.0).abs() < 1e-15);
        assert!((w_state_violation_bound(3) - 9.0 / 5.0).abs() < 1e-15);
        assert!((w_state_violation_bound(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_qutrit_form_frozen_values() {
        let v = two_qutrit_closed_form(0.0, 0.0, 0.0, 0.0, Handedness::Plus);
        assert!((v + 2.0 / 3.0).abs() < 1e-15);

        let v = two_qutrit_closed_form(
            std::f64::consts::PI,
            std::f64::consts::PI,
            0.0,
            0.0,
            Handedness::Plus,
        );
        assert!((v - 16.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn two_qutrit_form_mirror_identity() {
        // flipping the channel handedness is exactly equivalent to negating
        // both dipole angles
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p1 = rng.gen_range(-10.0..10.0);
            let p2 = rng.gen_range(-10.0..10.0);
            let f12 = rng.gen_range(-3.2..3.2);
            let f13 = rng.gen_range(-3.2..3.2);
            let a = two_qutrit_closed_form(p1, p2, f12, f13, Handedness::Plus);
            let b = two_qutrit_closed_form(p1, p2, -f12, -f13, Handedness::Minus);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lattice_factor_frozen_values() {
        assert_eq!(linear_array_structure_factor(5, 0.0), 25.0);
        assert!(linear_array_structure_factor(4, std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((linear_array_structure_factor(2, std::f64::consts::FRAC_PI_3) - 3.0).abs() < 1e-12);
        // limit branch engages for kz_a a full period away from zero
        assert_eq!(
            linear_array_structure_factor(3, 2.0 * std::f64::consts::PI),
            9.0
        );
    }

    #[test]
    fn lattice_factor_matches_position_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.gen_range(1..=8usize);
            let kz_a = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let positions = (0..n)
                .map(|j| Vector3::new(0.0, 0.0, j as f64 * kz_a))
                .collect();
            let array = EmitterArray::new(positions, 2).unwrap();
            let direct = structure_factor(&array, &Vector3::z()).unwrap();
            let closed = linear_array_structure_factor(n, kz_a);
            assert!(
                (direct - closed).abs() < 1e-10,
                "n={n} kz_a={kz_a}: {direct} vs {closed}"
            );
        }
    }
}
