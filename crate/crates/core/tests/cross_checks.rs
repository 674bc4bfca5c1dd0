//! Consistency checks between the numerical pipeline and the closed-form
//! threshold formulas away from the special fully-destructive and
//! fully-constructive directions exercised by the acceptance gate.

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lightwitness::analytic::{asym_noise_threshold, sym_noise_threshold};
use lightwitness::geometry::{
    structure_factor, to_complex, DetectionChannel, EmitterArray, TransitionTable,
};
use lightwitness::hilbert::random_product_state_with;
use lightwitness::loos::build_loos;
use lightwitness::states::{dicke_symmetric, singlet_antisymmetric, NamedState, StateLabel};
use lightwitness::witness::{noise_threshold, witness_min, ThresholdOutcome};

fn full_table(d: usize, dipole: Vector3<f64>) -> TransitionTable {
    let entries: Vec<_> = (1..=d)
        .flat_map(|a| ((a + 1)..=d).map(move |b| ((a, b), to_complex(&dipole))))
        .collect();
    TransitionTable::new(d, entries).unwrap()
}

/// Bisect the numerical threshold and return it with the interference
/// factor seen along `direction`.
fn numerical_threshold(
    state: &NamedState,
    array: &EmitterArray,
    table: &TransitionTable,
    direction: Vector3<f64>,
    pol: Vector3<f64>,
) -> (f64, f64) {
    let channel = DetectionChannel::uniform(direction, to_complex(&pol), table).unwrap();
    let s = structure_factor(array, &direction).unwrap();
    match noise_threshold(state, array, table, &channel, 1e-9).unwrap() {
        ThresholdOutcome::Detected { p_star } => (s, p_star),
        ThresholdOutcome::NoViolation { witness_at_zero } => {
            panic!("expected detection at p = 0, got W = {witness_at_zero}")
        }
    }
}

#[test]
fn symmetric_state_threshold_matches_formula_off_special_directions() {
    // chain spacings chosen so the axial interference factor sits strictly
    // between full cancellation and full constructive buildup
    for (n, spacing) in [(2usize, 2.0f64), (3, 2.4), (4, 1.9)] {
        let array = EmitterArray::linear_chain(n, spacing, n).unwrap();
        let table = full_table(n, Vector3::x());
        let state =
            NamedState::new(StateLabel::DickeSymmetric, dicke_symmetric(n).unwrap(), 0.0).unwrap();
        let (s, p_num) = numerical_threshold(&state, &array, &table, Vector3::z(), Vector3::x());
        assert!(
            s > 1e-3 && s < n as f64 - 1e-3,
            "spacing must give intermediate S, got {s}"
        );
        let p_formula = sym_noise_threshold(n, s).unwrap().p_star;
        assert!(
            (p_num - p_formula).abs() < 1e-6,
            "N={n}: numerical {p_num} vs formula {p_formula} at S={s}"
        );
    }
}

#[test]
fn antisymmetric_state_threshold_matches_formula_off_special_directions() {
    let n = 3;
    let array = EmitterArray::new(
        vec![
            Vector3::zeros(),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ],
        n,
    )
    .unwrap();
    let table = full_table(n, Vector3::y());
    let state =
        NamedState::new(StateLabel::Singlet, singlet_antisymmetric(n).unwrap(), 0.0).unwrap();
    let theta = 0.4f64;
    let direction = Vector3::new(theta.sin(), 0.0, theta.cos());
    let (s, p_num) = numerical_threshold(&state, &array, &table, direction, Vector3::y());
    assert!(
        s > n as f64 + 1e-3 && s < (n * n) as f64 - 1e-3,
        "tilted direction must give intermediate S, got {s}"
    );
    let p_formula = asym_noise_threshold(n, s).unwrap().p_star;
    assert!(
        (p_num - p_formula).abs() < 1e-6,
        "numerical {p_num} vs formula {p_formula} at S={s}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Separability soundness as a property: no candidate dips below -1e-9
    /// on a random product state under a random geometry and channel.
    #[test]
    fn candidates_nonnegative_on_random_product_states(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=3usize);
        let n = 2usize;
        let positions = (0..n)
            .map(|_| Vector3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            ))
            .collect();
        let array = EmitterArray::new(positions, d).unwrap();
        let entries: Vec<_> = (1..=d)
            .flat_map(|a| ((a + 1)..=d).map(move |b| (a, b)))
            .map(|p| {
                let v = Vector3::new(
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
                (p, v / C64::new(v.norm().max(1e-3), 0.0))
            })
            .filter(|(_, v)| (v.norm() - 1.0).abs() < 1e-9)
            .collect();
        prop_assume!(!entries.is_empty());
        let table = TransitionTable::new(d, entries).unwrap();
        let dir_raw = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        prop_assume!(dir_raw.norm() > 0.3);
        let pol_raw = Vector3::new(
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        prop_assume!(pol_raw.norm() > 0.3);
        let channel = DetectionChannel::uniform(
            dir_raw / dir_raw.norm(),
            pol_raw / C64::new(pol_raw.norm(), 0.0),
            &table,
        ).unwrap();
        let family = build_loos(&array, &table, &channel).unwrap();
        let rho = random_product_state_with(&mut rng, n, d).unwrap().to_density_matrix();
        let b = witness_min(&rho, &family).unwrap();
        for (label, value) in b.candidates() {
            prop_assert!(value >= -1e-9, "candidate {label} = {value} on a product state");
        }
    }
}
