//! Decides whether multipartite entanglement of N d-level emitters is
//! detectable from far-field light observables: builds phase-dependent local
//! orthogonal observables for a detection direction and polarization channel,
//! evaluates a family of collective variance inequalities, and reports the
//! witness minimum, noise thresholds, and angular witness fields.

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod loos;
pub mod scan;
pub mod states;
pub mod witness;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod spike {
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C64;

    // Sanity check of the linear-algebra backend: Hermitian eigenvalues of a
    // complex matrix and the Kronecker product, both used everywhere below.
    #[test]
    fn hermitian_eigen_and_kronecker() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(1.0, 0.0),
            ],
        );
        let eig = m.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 0.0).abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12);

        let id = DMatrix::<C64>::identity(2, 2);
        let k = m.kronecker(&id);
        assert_eq!(k.nrows(), 4);
        assert_eq!(k[(0, 2)], C64::new(0.0, -1.0));
    }
}
