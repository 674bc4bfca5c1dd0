//! Dense multi-qudit linear algebra: states, operators, tensor embedding and
//! expectation values. This layer is the brute-force oracle every other module
//! is validated against, so it favors being obviously correct over being fast.
//!
//! Conventions used throughout the crate:
//! - site and level indices are 1-based, matching the |1>..|d> level labels;
//! - the product basis is enumerated with site 1 as the most significant
//!   digit, i.e. |s1 s2 .. sN> sits at index sum_i (s_i - 1) d^(N-i), so an
//!   operator embedded at site 1 is `op (x) I (x) .. (x) I`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Max |norm - 1| accepted when validating state vectors and density-matrix traces.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Max Hermiticity deviation accepted on density matrices.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
/// Smallest eigenvalue accepted on a density matrix. Eigensolvers leave small
/// negative residues on rank-deficient projectors, hence the slack.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Flat index of the product basis state with the given 1-based levels.
pub fn basis_index(levels: &[usize], local_dim: usize) -> Result<usize> {
    let mut idx = 0usize;
    for &l in levels {
        if l < 1 || l > local_dim {
            return Err(Error::LevelOutOfRange {
                level: l,
                local_dim,
            });
        }
        idx = idx * local_dim + (l - 1);
    }
    Ok(idx)
}

/// Pure state of N qudits with local dimension d, stored as a dense amplitude
/// vector of length d^N. Normalized within [`NORM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    n_sites: usize,
    local_dim: usize,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>, n_sites: usize, local_dim: usize) -> Result<Self> {
        if n_sites < 1 {
            return Err(Error::InvalidState {
                context: "n_sites must be >= 1".into(),
            });
        }
        if local_dim < 2 {
            return Err(Error::InvalidState {
                context: "local_dim must be >= 2".into(),
            });
        }
        let dim = local_dim.checked_pow(n_sites as u32).ok_or_else(|| {
            Error::InvalidState {
                context: "d^N overflows".into(),
            }
        })?;
        if amplitudes.len() != dim {
            return Err(Error::dim(format!(
                "amplitude vector has length {}, expected d^N = {}",
                amplitudes.len(),
                dim
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self {
            amplitudes,
            n_sites,
            local_dim,
        })
    }

    /// Build from a list of (levels, amplitude) terms; the result is normalized.
    pub fn from_terms(
        n_sites: usize,
        local_dim: usize,
        terms: &[(&[usize], C64)],
    ) -> Result<Self> {
        let dim = local_dim.pow(n_sites as u32);
        let mut amps = DVector::from_element(dim, C64::new(0.0, 0.0));
        for (levels, a) in terms {
            if levels.len() != n_sites {
                return Err(Error::dim(format!(
                    "term has {} levels, expected {}",
                    levels.len(),
                    n_sites
                )));
            }
            amps[basis_index(levels, local_dim)?] += *a;
        }
        let norm = amps.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState {
                context: "all amplitudes vanish".into(),
            });
        }
        Self::new(amps / C64::new(norm, 0.0), n_sites, local_dim)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Projector |psi><psi| as a density matrix (positive by construction).
    pub fn to_density_matrix(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix {
            entries: m,
            n_sites: self.n_sites,
            local_dim: self.local_dim,
        }
    }
}

/// Mixed state of N qudits. Hermitian, unit trace, positive semidefinite
/// within the tolerances above.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    n_sites: usize,
    local_dim: usize,
}

impl DensityMatrix {
    /// Validating constructor for untrusted input: checks Hermiticity, trace
    /// and positive semidefiniteness (the last via a full eigendecomposition).
    pub fn new(entries: DMatrix<C64>, n_sites: usize, local_dim: usize) -> Result<Self> {
        let dim = local_dim.pow(n_sites as u32);
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::dim(format!(
                "density matrix is {}x{}, expected {}x{}",
                entries.nrows(),
                entries.ncols(),
                dim,
                dim
            )));
        }
        let herm_dev = max_abs(&(&entries - entries.adjoint()));
        if herm_dev > HERMITICITY_TOLERANCE {
            return Err(Error::NotHermitian {
                deviation: herm_dev,
            });
        }
        let tr_dev = (entries.trace() - C64::new(1.0, 0.0)).norm();
        if tr_dev > NORM_TOLERANCE {
            return Err(Error::TraceNotOne { deviation: tr_dev });
        }
        let rho = Self {
            entries,
            n_sites,
            local_dim,
        };
        let min_eig = rho.min_eigenvalue();
        if min_eig < PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min_eig,
            });
        }
        Ok(rho)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Real eigenvalue spectrum, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// A single-site operator tagged with the (1-based) site it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub matrix: DMatrix<C64>,
    pub site: usize,
}

impl LocalOperator {
    pub fn new(matrix: DMatrix<C64>, site: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::dim(format!(
                "local operator is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, site })
    }

    pub fn local_dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Sum of one single-site operator per site, Sigma_eta G^(eta). Kept as the
/// per-site terms; dense d^N forms are materialized only inside the oracle
/// routines below, since expectation values never need more.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveOperator {
    terms: Vec<LocalOperator>,
}

impl CollectiveOperator {
    /// `terms` must hold exactly one operator per site 1..=N, same local dim.
    pub fn new(terms: Vec<LocalOperator>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyArray);
        }
        let n = terms.len();
        let d = terms[0].local_dim();
        let mut seen = vec![false; n];
        for t in &terms {
            if t.local_dim() != d {
                return Err(Error::dim("collective operator mixes local dimensions"));
            }
            if t.site < 1 || t.site > n {
                return Err(Error::SiteOutOfRange {
                    site: t.site,
                    n_sites: n,
                });
            }
            if seen[t.site - 1] {
                return Err(Error::dim(format!(
                    "duplicate term for site {}",
                    t.site
                )));
            }
            seen[t.site - 1] = true;
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[LocalOperator] {
        &self.terms
    }

    pub fn n_sites(&self) -> usize {
        self.terms.len()
    }

    pub fn local_dim(&self) -> usize {
        self.terms[0].local_dim()
    }

    /// Dense d^N x d^N form of Sigma_eta G^(eta).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.n_sites();
        let dim = self.local_dim().pow(n as u32);
        let mut acc = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for t in &self.terms {
            acc += tensor_embed(t, n, self.local_dim()).expect("validated at construction");
        }
        acc
    }

    /// Dense form of the local-square sum Sigma_eta (G^(eta))^2.
    pub fn local_square_sum_dense(&self) -> DMatrix<C64> {
        let n = self.n_sites();
        let dim = self.local_dim().pow(n as u32);
        let mut acc = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for t in &self.terms {
            let sq = LocalOperator {
                matrix: &t.matrix * &t.matrix,
                site: t.site,
            };
            acc += tensor_embed(&sq, n, self.local_dim()).expect("validated at construction");
        }
        acc
    }
}

/// Embed a single-site operator into the N-site product space:
/// I (x) .. (x) op (x) .. (x) I with `op` at position `op.site`.
pub fn tensor_embed(op: &LocalOperator, n_sites: usize, local_dim: usize) -> Result<DMatrix<C64>> {
    if op.site < 1 || op.site > n_sites {
        return Err(Error::SiteOutOfRange {
            site: op.site,
            n_sites,
        });
    }
    if op.local_dim() != local_dim {
        return Err(Error::dim(format!(
            "operator dimension {} does not match local_dim {}",
            op.local_dim(),
            local_dim
        )));
    }
    let id = DMatrix::<C64>::identity(local_dim, local_dim);
    let mut acc = DMatrix::<C64>::identity(1, 1);
    for s in 1..=n_sites {
        acc = acc.kronecker(if s == op.site { &op.matrix } else { &id });
    }
    Ok(acc)
}

/// tr(rho O) without forming any product matrix: tr(AB) = sum_ij A_ij B_ji.
pub fn expectation_dense(rho: &DensityMatrix, o: &DMatrix<C64>) -> Result<C64> {
    if o.nrows() != rho.dim() || o.ncols() != rho.dim() {
        return Err(Error::dim(format!(
            "operator is {}x{}, state is {}-dimensional",
            o.nrows(),
            o.ncols(),
            rho.dim()
        )));
    }
    let r = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            acc += r[(i, j)] * o[(j, i)];
        }
    }
    Ok(acc)
}

/// tr(rho O) for a collective operator.
pub fn expectation(rho: &DensityMatrix, o: &CollectiveOperator) -> Result<C64> {
    expectation_dense(rho, &o.to_dense())
}

/// First and second moment of a Hermitian dense operator in one pass:
/// (tr(rho O), tr(rho O^2)), using one matrix product rho*O.
pub fn first_two_moments(rho: &DensityMatrix, o: &DMatrix<C64>) -> Result<(f64, f64)> {
    if o.nrows() != rho.dim() || o.ncols() != rho.dim() {
        return Err(Error::dim(format!(
            "operator is {}x{}, state is {}-dimensional",
            o.nrows(),
            o.ncols(),
            rho.dim()
        )));
    }
    let a = rho.matrix() * o; // tr(a) = <O>, tr(a O) = <O^2>
    let first = a.trace();
    let mut second = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            second += a[(i, j)] * o[(j, i)];
        }
    }
    Ok((first.re, second.re))
}

/// Variance <O^2> - <O>^2 of a Hermitian collective operator.
pub fn variance(rho: &DensityMatrix, o: &CollectiveOperator) -> Result<f64> {
    let dense = o.to_dense();
    let herm_dev = max_abs(&(&dense - dense.adjoint()));
    if herm_dev > HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian {
            deviation: herm_dev,
        });
    }
    let (first, second) = first_two_moments(rho, &dense)?;
    Ok(second - first * first)
}

/// White-noise admixture p * I/d^N + (1-p) |psi><psi|. The result is positive
/// by construction, so only the cheap invariants are re-checked here.
pub fn mix_white_noise(psi: &StateVector, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidNoise { p });
    }
    let dim = psi.dim();
    let mut m = &psi.amplitudes * psi.amplitudes.adjoint() * C64::new(1.0 - p, 0.0);
    let iso = C64::new(p / dim as f64, 0.0);
    for i in 0..dim {
        m[(i, i)] += iso;
    }
    Ok(DensityMatrix {
        entries: m,
        n_sites: psi.n_sites,
        local_dim: psi.local_dim,
    })
}

/// Product of N independent Haar-random single-qudit pure states.
///
/// Determinism contract: the only randomness source is a ChaCha8 stream seeded
/// with `seed`; identical inputs reproduce identical amplitudes bit-for-bit.
pub fn random_product_state(seed: u64, n_sites: usize, local_dim: usize) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_product_state_with(&mut rng, n_sites, local_dim)
}

/// Same as [`random_product_state`] but drawing from a caller-owned stream,
/// for test suites that need many independent states from one seed.
pub fn random_product_state_with(
    rng: &mut impl Rng,
    n_sites: usize,
    local_dim: usize,
) -> Result<StateVector> {
    let mut amps = DVector::from_element(1, C64::new(1.0, 0.0));
    for _ in 0..n_sites {
        let local = random_pure_state_with(rng, local_dim);
        amps = amps.kronecker(&local);
    }
    StateVector::new(amps, n_sites, local_dim)
}

/// Haar-random pure state on a single d-level system (complex Gaussian
/// amplitudes, normalized).
pub fn random_pure_state_with(rng: &mut impl Rng, dim: usize) -> DVector<C64> {
    let mut v = DVector::from_fn(dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    v
}

/// Standard normal via Box-Muller, from the caller's uniform stream.
fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Max elementwise complex modulus; helper for tolerance checks.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
