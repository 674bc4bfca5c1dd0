//! Factories for the reference states the detection scheme is evaluated on:
//! the permutation-symmetric occupation-(1,..,1) state, the totally
//! antisymmetric singlet, the single-excitation W state, and the fixed
//! two-qutrit example used for polarization studies.

use itertools::Itertools;
use num_complex::Complex64 as C64;

use crate::hilbert::{mix_white_noise, DensityMatrix, StateVector};
use crate::{Error, Result};

/// Which factory produced a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    DickeSymmetric,
    Singlet,
    WState,
    TwoQutritExample,
    Custom,
}

/// A reference state bundled with its white-noise level, ready to evaluate.
#[derive(Debug, Clone)]
pub struct NamedState {
    pub label: StateLabel,
    pub psi: StateVector,
    /// white-noise admixture in [0, 1]
    pub noise: f64,
}

impl NamedState {
    pub fn new(label: StateLabel, psi: StateVector, noise: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise) || !noise.is_finite() {
            return Err(Error::InvalidNoise { p: noise });
        }
        Ok(Self { label, psi, noise })
    }

    pub fn n_sites(&self) -> usize {
        self.psi.n_sites()
    }

    pub fn local_dim(&self) -> usize {
        self.psi.local_dim()
    }

    /// The noisy state actually handed to the witness engine.
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        mix_white_noise(&self.psi, self.noise)
    }
}

/// Permutation-symmetric state with occupation numbers (1, 1, .., 1) and
/// d = N: the equal superposition of all N! level orderings, amplitude
/// 1/sqrt(N!) each.
pub fn dicke_symmetric(n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            context: format!("symmetric occupation-(1,..,1) state needs n >= 2, got {n}"),
        });
    }
    let terms: Vec<(Vec<usize>, C64)> = (1..=n)
        .permutations(n)
        .map(|p| (p, C64::new(1.0, 0.0)))
        .collect();
    let borrowed: Vec<(&[usize], C64)> = terms.iter().map(|(p, a)| (p.as_slice(), *a)).collect();
    StateVector::from_terms(n, n, &borrowed)
}

/// Totally antisymmetric singlet with d = N: amplitudes sgn(sigma)/sqrt(N!)
/// with the standard (even/odd) permutation parity. Any site transposition
/// maps the state to its negative.
pub fn singlet_antisymmetric(n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            context: format!("antisymmetric singlet needs n >= 2, got {n}"),
        });
    }
    let terms: Vec<(Vec<usize>, C64)> = (1..=n)
        .permutations(n)
        .map(|p| {
            let sign = if permutation_parity(&p) { 1.0 } else { -1.0 };
            (p, C64::new(sign, 0.0))
        })
        .collect();
    let borrowed: Vec<(&[usize], C64)> = terms.iter().map(|(p, a)| (p.as_slice(), *a)).collect();
    StateVector::from_terms(n, n, &borrowed)
}

/// True for even permutations of (1, .., n), counted by inversions.
fn permutation_parity(p: &[usize]) -> bool {
    let mut inversions = 0usize;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// Single shared excitation spread over all sites and all excited levels:
/// N(d-1) equal-amplitude terms, one site at level j in {2,..,d}, the rest
/// at level 1. Requires d >= 3 (the regime its detection condition is
/// derived for).
pub fn w_state(n: usize, d: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            context: format!("W state needs n >= 2, got {n}"),
        });
    }
    if d < 3 {
        return Err(Error::InvalidParameter {
            context: format!("W state needs d >= 3, got {d}"),
        });
    }
    let mut terms: Vec<(Vec<usize>, C64)> = Vec::with_capacity(n * (d - 1));
    for site in 0..n {
        for level in 2..=d {
            let mut levels = vec![1usize; n];
            levels[site] = level;
            terms.push((levels, C64::new(1.0, 0.0)));
        }
    }
    let borrowed: Vec<(&[usize], C64)> = terms.iter().map(|(p, a)| (p.as_slice(), *a)).collect();
    StateVector::from_terms(n, d, &borrowed)
}

/// The fixed two-qutrit example (|11> + |22> + |13>)/sqrt(3).
pub fn two_qutrit_example() -> StateVector {
    let a = C64::new(1.0, 0.0);
    StateVector::from_terms(2, 3, &[(&[1, 1], a), (&[2, 2], a), (&[1, 3], a)])
        .expect("fixed example state is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_index, expectation, tensor_embed, CollectiveOperator, LocalOperator};
    use crate::geometry::{to_complex, DetectionChannel, EmitterArray, TransitionTable};
    use crate::loos::{build_loos, collective_quadratures};
    use nalgebra::{DMatrix, DVector, Vector3};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Matrix swapping sites i and j (1-based) on (C^d)^(x n).
    fn site_swap(n: usize, d: usize, i: usize, j: usize) -> DMatrix<C64> {
        let dim = d.pow(n as u32);
        let mut m = DMatrix::from_element(dim, dim, c(0.0, 0.0));
        for col in 0..dim {
            // decode digits, site 1 most significant
            let mut digits = vec![0usize; n];
            let mut rest = col;
            for pos in (0..n).rev() {
                digits[pos] = rest % d;
                rest /= d;
            }
            digits.swap(i - 1, j - 1);
            let mut row = 0usize;
            for &dg in &digits {
                row = row * d + dg;
            }
            m[(row, col)] = c(1.0, 0.0);
        }
        m
    }

    fn overlap(a: &StateVector, b: &DVector<C64>) -> C64 {
        a.amplitudes().dotc(b)
    }

    #[test]
    fn dicke_two_site_amplitudes() {
        let psi = dicke_symmetric(2).unwrap();
        let amp = psi.amplitudes();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((amp[basis_index(&[1, 2], 2).unwrap()] - c(s, 0.0)).norm() < 1e-15);
        assert!((amp[basis_index(&[2, 1], 2).unwrap()] - c(s, 0.0)).norm() < 1e-15);
        assert!(amp[basis_index(&[1, 1], 2).unwrap()].norm() < 1e-15);
        assert!(amp[basis_index(&[2, 2], 2).unwrap()].norm() < 1e-15);
    }

    #[test]
    fn dicke_three_site_has_six_equal_terms() {
        let psi = dicke_symmetric(3).unwrap();
        let s = 1.0 / 6.0_f64.sqrt();
        let nonzero: Vec<C64> = psi
            .amplitudes()
            .iter()
            .copied()
            .filter(|a| a.norm() > 1e-15)
            .collect();
        assert_eq!(nonzero.len(), 6);
        assert!(nonzero.iter().all(|a| (a - c(s, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn dicke_is_swap_symmetric() {
        let psi = dicke_symmetric(4).unwrap();
        for (i, j) in [(1, 2), (2, 4), (1, 3)] {
            let swapped = site_swap(4, 4, i, j) * psi.amplitudes();
            assert!((overlap(&psi, &swapped) - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn singlet_two_site_amplitudes() {
        let psi = singlet_antisymmetric(2).unwrap();
        let amp = psi.amplitudes();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((amp[basis_index(&[1, 2], 2).unwrap()] - c(s, 0.0)).norm() < 1e-15);
        assert!((amp[basis_index(&[2, 1], 2).unwrap()] - c(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singlet_three_site_parities() {
        let psi = singlet_antisymmetric(3).unwrap();
        let amp = psi.amplitudes();
        let s = 1.0 / 6.0_f64.sqrt();
        let cases = [
            (vec![1, 2, 3], s),
            (vec![2, 3, 1], s),  // cyclic, even
            (vec![3, 1, 2], s),  // cyclic, even
            (vec![2, 1, 3], -s), // one transposition
            (vec![1, 3, 2], -s),
            (vec![3, 2, 1], -s),
        ];
        for (levels, expect) in cases {
            let a = amp[basis_index(&levels, 3).unwrap()];
            assert!((a - c(expect, 0.0)).norm() < 1e-15, "levels {levels:?}");
        }
    }

    #[test]
    fn singlet_is_swap_antisymmetric() {
        let psi = singlet_antisymmetric(3).unwrap();
        for (i, j) in [(1, 2), (2, 3), (1, 3)] {
            let swapped = site_swap(3, 3, i, j) * psi.amplitudes();
            assert!((overlap(&psi, &swapped) + c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn w_state_two_qutrit_amplitudes() {
        let psi = w_state(2, 3).unwrap();
        let amp = psi.amplitudes();
        for levels in [[2, 1], [3, 1], [1, 2], [1, 3]] {
            let a = amp[basis_index(&levels, 3).unwrap()];
            assert!((a - c(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(amp[basis_index(&[1, 1], 3).unwrap()].norm() < 1e-15);
    }

    #[test]
    fn w_state_has_one_excitation() {
        for (n, d) in [(2, 3), (3, 3), (2, 4), (3, 4)] {
            let psi = w_state(n, d).unwrap();
            // number operator: sum over sites of diag(0, 1, .., 1)
            let mut num = DMatrix::from_element(d, d, c(0.0, 0.0));
            for b in 2..=d {
                num[(b - 1, b - 1)] = c(1.0, 0.0);
            }
            let op = CollectiveOperator::new(
                (1..=n)
                    .map(|s| LocalOperator::new(num.clone(), s).unwrap())
                    .collect(),
            )
            .unwrap();
            let v = expectation(&psi.to_density_matrix(), &op).unwrap();
            assert!((v - c(1.0, 0.0)).norm() < 1e-13, "n={n} d={d}");
        }
    }

    #[test]
    fn w_state_is_permutation_invariant() {
        let psi = w_state(3, 4).unwrap();
        for (i, j) in [(1, 2), (2, 3), (1, 3)] {
            let swapped = site_swap(3, 4, i, j) * psi.amplitudes();
            assert!((overlap(&psi, &swapped) - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn factories_reject_out_of_range_parameters() {
        assert!(dicke_symmetric(1).is_err());
        assert!(singlet_antisymmetric(1).is_err());
        assert!(w_state(1, 3).is_err());
        assert!(w_state(2, 2).is_err());
    }

    #[test]
    fn all_factory_outputs_are_normalized() {
        let states = [
            dicke_symmetric(2).unwrap(),
            dicke_symmetric(3).unwrap(),
            singlet_antisymmetric(3).unwrap(),
            w_state(3, 3).unwrap(),
            two_qutrit_example(),
        ];
        for psi in states {
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn example_state_populations_and_reduced_spectrum() {
        let psi = two_qutrit_example();
        let rho = psi.to_density_matrix();
        let proj2 = {
            let mut m = DMatrix::from_element(3, 3, c(0.0, 0.0));
            m[(1, 1)] = c(1.0, 0.0);
            m
        };
        let z22 = CollectiveOperator::new(vec![
            LocalOperator::new(proj2.clone(), 1).unwrap(),
            LocalOperator::new(proj2, 2).unwrap(),
        ])
        .unwrap();
        let v = expectation(&rho, &z22).unwrap();
        assert!((v - c(2.0 / 3.0, 0.0)).norm() < 1e-13);

        // reduced state of atom 2: eigenvalues {2/3, 1/3, 0}
        let mut red = DMatrix::from_element(3, 3, c(0.0, 0.0));
        for s in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    red[(i, j)] += rho.matrix()[(s * 3 + i, s * 3 + j)];
                }
            }
        }
        let mut evs: Vec<f64> = red.symmetric_eigen().eigenvalues.iter().copied().collect();
        evs.sort_by(f64::total_cmp);
        assert!(evs[0].abs() < 1e-13);
        assert!((evs[1] - 1.0 / 3.0).abs() < 1e-13);
        assert!((evs[2] - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn singlet_is_annihilated_by_phase_aligned_collective_observables() {
        // Atoms in a plane orthogonal to the observation direction carry
        // equal optical phases; every traceless site-independent collective
        // observable then annihilates the N = d singlet.
        for n in [2usize, 3] {
            let positions = (0..n)
                .map(|i| Vector3::new(i as f64 * 1.7, -(i as f64) * 0.4, 0.0))
                .collect();
            let array = EmitterArray::new(positions, n).unwrap();
            let table = TransitionTable::new(
                n,
                vec![((1, 2), to_complex(&Vector3::x()))],
            )
            .unwrap();
            let channel =
                DetectionChannel::uniform(Vector3::z(), to_complex(&Vector3::x()), &table)
                    .unwrap();
            let fam = build_loos(&array, &table, &channel).unwrap();
            let quads = collective_quadratures(&fam).unwrap();
            let psi = singlet_antisymmetric(n).unwrap();

            for op in quads.x.iter().chain(quads.y.iter()) {
                let out = op.to_dense() * psi.amplitudes();
                assert!(out.norm() < 1e-12, "n={n}");
            }
            // populations: each level occupied exactly once in every term
            for z in &quads.z {
                let out = z.to_dense() * psi.amplitudes() - psi.amplitudes();
                assert!(out.norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn named_state_mixes_noise() {
        let ns = NamedState::new(StateLabel::TwoQutritExample, two_qutrit_example(), 0.25)
            .unwrap();
        let rho = ns.density_matrix().unwrap();
        assert!((rho.matrix().trace() - c(1.0, 0.0)).norm() < 1e-13);
        assert!(NamedState::new(StateLabel::Custom, two_qutrit_example(), 1.5).is_err());
    }

    #[test]
    fn embedded_swap_helper_is_consistent_with_tensor_embed() {
        // sanity-check the test helper itself on a 2-site example: swapping
        // then measuring site 1 equals measuring site 2 before the swap
        let mut proj3 = DMatrix::from_element(3, 3, c(0.0, 0.0));
        proj3[(2, 2)] = c(1.0, 0.0);
        let at_site1 = tensor_embed(&LocalOperator::new(proj3.clone(), 1).unwrap(), 2, 3).unwrap();
        let at_site2 = tensor_embed(&LocalOperator::new(proj3, 2).unwrap(), 2, 3).unwrap();
        let swap = site_swap(2, 3, 1, 2);
        let lhs = &swap * &at_site1 * &swap;
        assert!(crate::hilbert::max_abs(&(lhs - at_site2)) < 1e-15);
    }
}
