//! Phase-dependent local orthogonal observables (LOOs).
//!
//! For each atom eta the construction yields d^2 Hermitian d x d matrices
//! forming an orthonormal basis under the trace inner product:
//!
//! - for every level pair alpha < beta (allowed or not), a quadrature pair
//!   G_+ = (e^{-i phi_eta} u Lambda_ab + e^{+i phi_eta} u* Lambda_ba)/sqrt(2)
//!   G_- = i (e^{-i phi_eta} u Lambda_ab - e^{+i phi_eta} u* Lambda_ba)/sqrt(2)
//!   where phi_eta = R-hat . r_eta is the atom's optical phase and u is the
//!   unit phase of the channel coupling factor (u = 1 for pairs the channel
//!   does not resolve);
//! - one population projector |beta><beta| per level.
//!
//! Orthonormality tr(G_m G_n) = delta_mn holds for every geometry and
//! channel, and the squares sum to d times the identity — the completeness
//! normalization forced by orthonormality, since the d^2 basis elements
//! contribute total trace d^2 = tr(d * I).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64 as C64;

use crate::geometry::{zeta, DetectionChannel, EmitterArray, TransitionTable};
use crate::hilbert::{max_abs, CollectiveOperator, DensityMatrix, LocalOperator};
use crate::{Error, Result};

/// Max Hermiticity / orthonormality deviation tolerated on built families.
pub const BASIS_TOLERANCE: f64 = 1e-12;
/// Max reconstruction / purity-bound deviation on decompositions.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-10;

/// Label of one observable in the per-atom family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LooLabel {
    /// Cosine-type quadrature of the (alpha, beta) coherence.
    Plus { alpha: usize, beta: usize },
    /// Sine-type quadrature of the (alpha, beta) coherence.
    Minus { alpha: usize, beta: usize },
    /// Population projector of one level.
    Z { beta: usize },
}

/// Bijection between 1-based flat indices mu in 1..=d^2 and observable
/// labels: the first d(d-1)/2 indices are Plus quadratures in lexicographic
/// pair order, the next d(d-1)/2 the Minus quadratures in the same order, and
/// the last d the level populations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LooIndexMap {
    local_dim: usize,
    pairs: Vec<(usize, usize)>,
}

impl LooIndexMap {
    pub fn new(local_dim: usize) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::InvalidParameter {
                context: "local_dim must be >= 2".into(),
            });
        }
        let pairs = (1..=local_dim)
            .flat_map(|a| ((a + 1)..=local_dim).map(move |b| (a, b)))
            .collect();
        Ok(Self { local_dim, pairs })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Number of level pairs d(d-1)/2.
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Total number of observables d^2.
    pub fn total(&self) -> usize {
        self.local_dim * self.local_dim
    }

    /// Level pairs alpha < beta in lexicographic order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn pair_offset(&self, alpha: usize, beta: usize) -> Result<usize> {
        self.pairs
            .iter()
            .position(|&p| p == (alpha, beta))
            .ok_or_else(|| Error::InvalidPair {
                alpha,
                beta,
                context: "not a canonical level pair of this dimension".into(),
            })
    }

    /// Flat index of the Plus quadrature of (alpha, beta), alpha < beta.
    pub fn plus_index(&self, alpha: usize, beta: usize) -> Result<usize> {
        Ok(self.pair_offset(alpha, beta)? + 1)
    }

    /// Flat index of the Minus quadrature of (alpha, beta), alpha < beta.
    pub fn minus_index(&self, alpha: usize, beta: usize) -> Result<usize> {
        Ok(self.n_pairs() + self.pair_offset(alpha, beta)? + 1)
    }

    /// Flat index of the population projector of `beta`.
    pub fn z_index(&self, beta: usize) -> Result<usize> {
        if beta < 1 || beta > self.local_dim {
            return Err(Error::LevelOutOfRange {
                level: beta,
                local_dim: self.local_dim,
            });
        }
        Ok(2 * self.n_pairs() + beta)
    }

    /// Label of a 1-based flat index.
    pub fn resolve(&self, mu: usize) -> Result<LooLabel> {
        let t = self.n_pairs();
        if mu < 1 || mu > self.total() {
            return Err(Error::InvalidParameter {
                context: format!("flat index {mu} outside 1..={}", self.total()),
            });
        }
        Ok(if mu <= t {
            let (alpha, beta) = self.pairs[mu - 1];
            LooLabel::Plus { alpha, beta }
        } else if mu <= 2 * t {
            let (alpha, beta) = self.pairs[mu - t - 1];
            LooLabel::Minus { alpha, beta }
        } else {
            LooLabel::Z { beta: mu - 2 * t }
        })
    }

    /// All (flat index, label) entries in index order.
    pub fn labels(&self) -> impl Iterator<Item = (usize, LooLabel)> + '_ {
        (1..=self.total()).map(|mu| (mu, self.resolve(mu).expect("in range")))
    }
}

/// The full per-atom observable family for one array, transition table and
/// detection channel: N x d^2 Hermitian matrices plus the unit phases that
/// went into them.
#[derive(Debug, Clone)]
pub struct LooFamily {
    index_map: LooIndexMap,
    /// matrices[site - 1][mu - 1]
    matrices: Vec<Vec<DMatrix<C64>>>,
    /// unit phase u_{alpha beta} per canonical pair (1 for pairs the channel
    /// does not resolve)
    unit_phases: BTreeMap<(usize, usize), C64>,
    channel: DetectionChannel,
    /// human-readable notes about degenerate couplings encountered at build
    warnings: Vec<String>,
    /// optical phase R-hat . r_eta per site, in site order
    site_phases: Vec<f64>,
}

impl LooFamily {
    pub fn index_map(&self) -> &LooIndexMap {
        &self.index_map
    }

    pub fn n_sites(&self) -> usize {
        self.matrices.len()
    }

    pub fn local_dim(&self) -> usize {
        self.index_map.local_dim()
    }

    /// Observable matrix for a 1-based site and 1-based flat index.
    pub fn matrix(&self, site: usize, mu: usize) -> Result<&DMatrix<C64>> {
        if site < 1 || site > self.n_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites(),
            });
        }
        if mu < 1 || mu > self.index_map.total() {
            return Err(Error::InvalidParameter {
                context: format!("flat index {mu} outside 1..={}", self.index_map.total()),
            });
        }
        Ok(&self.matrices[site - 1][mu - 1])
    }

    /// Unit phase used for a canonical pair (order-insensitive lookup
    /// returns the canonical value; the reverse orientation is its
    /// conjugate).
    pub fn unit_phase(&self, alpha: usize, beta: usize) -> Option<C64> {
        if alpha < beta {
            self.unit_phases.get(&(alpha, beta)).copied()
        } else {
            self.unit_phases.get(&(beta, alpha)).map(|u| u.conj())
        }
    }

    pub fn channel(&self) -> &DetectionChannel {
        &self.channel
    }

    pub fn direction(&self) -> &Vector3<f64> {
        self.channel.direction()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Largest orthonormality deviation max |tr(G_m G_n) - delta_mn| over one
    /// site's family.
    pub fn orthonormality_deviation(&self, site: usize) -> Result<f64> {
        let total = self.index_map.total();
        let mut worst = 0.0_f64;
        for m in 1..=total {
            let gm = self.matrix(site, m)?;
            for n in m..=total {
                let gn = self.matrix(site, n)?;
                let tr = (gm * gn).trace();
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((tr - C64::new(target, 0.0)).norm());
            }
        }
        Ok(worst)
    }

    /// Largest deviation of sum_m G_m^2 from d * identity over one site.
    pub fn completeness_deviation(&self, site: usize) -> Result<f64> {
        let d = self.local_dim();
        let mut acc = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for mu in 1..=self.index_map.total() {
            let g = self.matrix(site, mu)?;
            acc += g * g;
        }
        let target = DMatrix::from_diagonal_element(d, d, C64::new(d as f64, 0.0));
        Ok(max_abs(&(acc - target)))
    }

    /// Test hook: rotate the unit phase of one site's Plus quadrature without
    /// touching its Minus partner, which breaks tr(G_+ G_-) = 0 by sin(delta).
    /// Exists so verification suites can prove they catch a broken basis.
    #[doc(hidden)]
    pub fn tamper_plus_phase_for_test(&mut self, site: usize, alpha: usize, beta: usize, delta: f64) {
        let map = self.index_map.clone();
        let mu = map.plus_index(alpha, beta).expect("canonical pair");
        let u = self.unit_phase(alpha, beta).expect("pair present")
            * C64::new(0.0, delta).exp();
        let phi = self.site_phase(site);
        self.matrices[site - 1][mu - 1] = plus_matrix(self.local_dim(), alpha, beta, phi, u);
    }

    /// Optical phase R-hat . r_eta the family was built with, recovered from
    /// the stored channel direction and the builder's per-site record.
    fn site_phase(&self, site: usize) -> f64 {
        self.site_phases[site - 1]
    }
}

/// Build the per-atom observable families for an array observed through a
/// channel. Degenerate couplings (the channel cannot resolve the transition
/// at this direction) fall back to unit phase u = 1 and are recorded in
/// `warnings`; level pairs with no transition use u = 1 silently.
pub fn build_loos(
    array: &EmitterArray,
    table: &TransitionTable,
    channel: &DetectionChannel,
) -> Result<LooFamily> {
    let d = array.local_dim();
    if table.local_dim() != d {
        return Err(Error::dim(format!(
            "transition table is for d = {}, array has d = {}",
            table.local_dim(),
            d
        )));
    }
    let index_map = LooIndexMap::new(d)?;
    let mut warnings = Vec::new();

    // one unit phase per canonical pair, shared by all atoms
    let mut unit_phases = BTreeMap::new();
    for (alpha, beta) in index_map.pairs().iter().copied() {
        let u = if table.is_allowed(alpha, beta) {
            let z = zeta(channel, alpha, beta, table)?;
            if z.degenerate {
                warnings.push(format!(
                    "transition ({alpha},{beta}) couples to the channel below tolerance at \
                     this direction; falling back to unit phase 1"
                ));
                C64::new(1.0, 0.0)
            } else {
                z.value / C64::new(z.value.norm(), 0.0)
            }
        } else {
            C64::new(1.0, 0.0)
        };
        unit_phases.insert((alpha, beta), u);
    }

    let site_phases: Vec<f64> = (1..=array.n_sites())
        .map(|s| array.optical_phase(s, channel.direction()))
        .collect::<Result<_>>()?;

    let mut matrices = Vec::with_capacity(array.n_sites());
    for &phi in &site_phases {
        let mut site_mats = Vec::with_capacity(index_map.total());
        for (_, label) in index_map.labels() {
            let m = match label {
                LooLabel::Plus { alpha, beta } => {
                    plus_matrix(d, alpha, beta, phi, unit_phases[&(alpha, beta)])
                }
                LooLabel::Minus { alpha, beta } => {
                    minus_matrix(d, alpha, beta, phi, unit_phases[&(alpha, beta)])
                }
                LooLabel::Z { beta } => projector(d, beta),
            };
            debug_assert!(max_abs(&(&m - m.adjoint())) <= BASIS_TOLERANCE);
            site_mats.push(m);
        }
        matrices.push(site_mats);
    }

    Ok(LooFamily {
        index_map,
        matrices,
        unit_phases,
        channel: channel.clone(),
        warnings,
        site_phases,
    })
}

fn projector(d: usize, beta: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    m[(beta - 1, beta - 1)] = C64::new(1.0, 0.0);
    m
}

fn plus_matrix(d: usize, alpha: usize, beta: usize, phi: f64, u: C64) -> DMatrix<C64> {
    let s = 1.0 / 2.0_f64.sqrt();
    let fwd = C64::new(0.0, -phi).exp() * u * s;
    let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    m[(alpha - 1, beta - 1)] = fwd;
    m[(beta - 1, alpha - 1)] = fwd.conj();
    m
}

fn minus_matrix(d: usize, alpha: usize, beta: usize, phi: f64, u: C64) -> DMatrix<C64> {
    let s = 1.0 / 2.0_f64.sqrt();
    let fwd = C64::new(0.0, 1.0) * C64::new(0.0, -phi).exp() * u * s;
    let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    m[(alpha - 1, beta - 1)] = fwd;
    m[(beta - 1, alpha - 1)] = fwd.conj();
    m
}

/// The collective (site-summed) observables of a family, split into the
/// three sub-families: X from the Plus quadratures and Y from the Minus
/// quadratures (both in lexicographic pair order), Z from the populations
/// (level order).
#[derive(Debug, Clone)]
pub struct CollectiveQuadratures {
    index_map: LooIndexMap,
    pub x: Vec<CollectiveOperator>,
    pub y: Vec<CollectiveOperator>,
    pub z: Vec<CollectiveOperator>,
}

impl CollectiveQuadratures {
    pub fn index_map(&self) -> &LooIndexMap {
        &self.index_map
    }

    /// Collective observable for a 1-based flat index.
    pub fn by_flat_index(&self, mu: usize) -> Result<&CollectiveOperator> {
        let t = self.index_map.n_pairs();
        match self.index_map.resolve(mu)? {
            LooLabel::Plus { .. } => Ok(&self.x[mu - 1]),
            LooLabel::Minus { .. } => Ok(&self.y[mu - t - 1]),
            LooLabel::Z { beta } => Ok(&self.z[beta - 1]),
        }
    }
}

/// Assemble the collective observables sum_eta G^(eta)_mu of a family.
pub fn collective_quadratures(family: &LooFamily) -> Result<CollectiveQuadratures> {
    let map = family.index_map().clone();
    let t = map.n_pairs();
    let collect = |mu: usize| -> Result<CollectiveOperator> {
        let terms = (1..=family.n_sites())
            .map(|s| LocalOperator::new(family.matrix(s, mu)?.clone(), s))
            .collect::<Result<Vec<_>>>()?;
        CollectiveOperator::new(terms)
    };
    let x = (1..=t).map(collect).collect::<Result<Vec<_>>>()?;
    let y = ((t + 1)..=2 * t).map(collect).collect::<Result<Vec<_>>>()?;
    let z = ((2 * t + 1)..=map.total())
        .map(collect)
        .collect::<Result<Vec<_>>>()?;
    Ok(CollectiveQuadratures {
        index_map: map,
        x,
        y,
        z,
    })
}

/// Expansion coefficients of a single-atom state in one atom's observable
/// basis: rho = sum_m g_m G_m with g_m = tr(rho G_m) real.
#[derive(Debug, Clone, PartialEq)]
pub struct LooDecomposition {
    coefficients: Vec<f64>,
}

impl LooDecomposition {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// sum_m g_m^2 = tr(rho^2); at most 1 for valid states.
    pub fn purity(&self) -> f64 {
        self.coefficients.iter().map(|g| g * g).sum()
    }
}

/// Decompose a single-atom density matrix in the observable basis of one
/// site of a family. Validates the reconstruction and the purity bound.
pub fn loo_decompose(
    rho: &DensityMatrix,
    family: &LooFamily,
    site: usize,
) -> Result<LooDecomposition> {
    let d = family.local_dim();
    if rho.dim() != d {
        return Err(Error::dim(format!(
            "expected a single-atom state of dimension {d}, got {}",
            rho.dim()
        )));
    }
    let total = family.index_map().total();
    let mut coefficients = Vec::with_capacity(total);
    let mut recon = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for mu in 1..=total {
        let g = family.matrix(site, mu)?;
        let val = (rho.matrix() * g).trace();
        coefficients.push(val.re);
        recon += g * C64::new(val.re, 0.0);
    }
    let recon_dev = max_abs(&(recon - rho.matrix()));
    if recon_dev > DECOMPOSITION_TOLERANCE {
        return Err(Error::InvalidState {
            context: format!("basis reconstruction deviates by {recon_dev:.3e}"),
        });
    }
    let dec = LooDecomposition { coefficients };
    if dec.purity() > 1.0 + DECOMPOSITION_TOLERANCE {
        return Err(Error::InvalidState {
            context: format!("purity bound violated: sum g^2 = {}", dec.purity()),
        });
    }
    Ok(dec)
}
