//! Quasi-Householder unitaries `Ĥ_i = conj(η_i)(I − 2|w⟩⟨w|)` mapping a
//! reference direction `|b_j⟩` onto every `|b_i⟩`.
//!
//! The directions come from phase-normalizing `P^{-1/2}|a_i⟩ = λ_i|b_i⟩`.
//! For each `i` a phase `η_i` makes `conj(η_i)⟨b_i|b_j⟩` real, after which
//! one of two reflections does the job:
//!
//! * Case 1, `|b_j⟩ = η_i|b_i⟩`: reflect along any `|ũ⟩ ⟂ |b_j⟩`.
//! * Case 2, otherwise: reflect along `|ṽ⟩ ∝ |b_j⟩ − η_i|b_i⟩`.
//!
//! The resulting weights `p̃_i = p_i|λ_i|²/(p_j|λ_j|²)` satisfy
//! `Q_i = p̃_i Ĥ_i Q_j Ĥ_i†`, which [`build_set`] certifies for every index.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matcore::{self, cr, inner, norm, CMatrix, C64};
use crate::povm::ProjectorFamily;

pub const CASE1_TOL: f64 = 1e-10;
pub const REALITY_TOL: f64 = 1e-12;
const ETA_FALLBACK_TOL: f64 = 1e-13;
const MAPPING_TOL: f64 = 1e-10;
const CONJUGATION_TOL: f64 = 1e-9;

/// `P^{-1/2}|a_i⟩ = (lambda / z) |b⟩` with `lambda > 0`, `|z| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDirection {
    pub lambda: f64,
    pub b: Vec<C64>,
    pub z: C64,
}

impl NormalizedDirection {
    /// The complex scalar `λ_i = lambda / z`.
    pub fn lambda_complex(&self) -> C64 {
        cr(self.lambda) / self.z
    }

    /// `λ_i |b_i⟩`, which should reproduce the input vector.
    pub fn reconstruct(&self) -> Vec<C64> {
        let l = self.lambda_complex();
        self.b.iter().map(|x| x * l).collect()
    }
}

pub fn normalize_direction(v: &[C64], z: C64) -> Result<NormalizedDirection> {
    check_unit_phase(z)?;
    let n = norm(v);
    if n <= 1e-13 {
        return Err(Error::ZeroVector { norm: n });
    }
    Ok(NormalizedDirection {
        lambda: n,
        b: v.iter().map(|x| x * z / n).collect(),
        z,
    })
}

fn check_unit_phase(z: C64) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "phase {z} does not have unit modulus"
        )));
    }
    Ok(())
}

/// Picks `η_i` so that `conj(η_i)⟨b_i|b_j⟩` is a nonnegative real.
///
/// An explicit override is accepted when it satisfies the reality condition.
pub fn choose_eta(b_i: &[C64], b_j: &[C64], override_eta: Option<C64>) -> Result<C64> {
    let overlap = inner(b_i, b_j);
    if let Some(eta) = override_eta {
        check_unit_phase(eta)?;
        let imag = (eta.conj() * overlap).im;
        if imag.abs() > REALITY_TOL {
            return Err(Error::OverrideViolatesReality { imag });
        }
        return Ok(eta);
    }
    let mag = overlap.norm();
    Ok(if mag > ETA_FALLBACK_TOL {
        overlap / mag
    } else {
        cr(1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HouseholderCase {
    /// `|b_j⟩ = η_i|b_i⟩`; reflector orthogonal to `|b_j⟩`.
    Case1,
    /// Reflector along `|b_j⟩ − η_i|b_i⟩`.
    Case2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiHouseholder {
    pub eta: C64,
    pub case: HouseholderCase,
    pub reflector: Vec<C64>,
    pub matrix: CMatrix,
}

impl QuasiHouseholder {
    /// `η Ĥ`, the bare Householder reflection.
    pub fn reflection(&self) -> CMatrix {
        self.matrix.scale(self.eta)
    }
}

/// `conj(η)(I − 2|w⟩⟨w|)`.
pub fn quasi_householder_matrix(eta: C64, w: &[C64]) -> CMatrix {
    let d = w.len();
    let refl = &CMatrix::identity(d) - &CMatrix::projector(w).scale_real(2.0);
    refl.scale(eta.conj())
}

/// Deterministic Case-1 reflector: the standard basis vector least aligned
/// with `b_j` (lowest index on ties), orthogonalized against `b_j`.
pub fn default_orthogonal_reflector(b_j: &[C64]) -> Result<Vec<C64>> {
    let d = b_j.len();
    if d < 2 {
        return Err(Error::DimensionTooSmall { d });
    }
    let mut k = 0;
    for i in 1..d {
        if b_j[i].norm() < b_j[k].norm() {
            k = i;
        }
    }
    let proj = b_j[k].conj();
    let u: Vec<C64> = (0..d)
        .map(|i| cr(if i == k { 1.0 } else { 0.0 }) - b_j[i] * proj)
        .collect();
    matcore::normalized(&u)
}

pub fn build_quasi_householder(
    b_i: &[C64],
    b_j: &[C64],
    eta: C64,
    case1_tol: f64,
    u_tilde_override: Option<&[C64]>,
) -> Result<QuasiHouseholder> {
    let d = b_j.len();
    if d < 2 {
        return Err(Error::DimensionTooSmall { d });
    }
    if b_i.len() != d {
        return Err(Error::ShapeMismatch {
            expected: (d, 1),
            found: (b_i.len(), 1),
        });
    }
    check_unit_phase(eta)?;
    let imag = (eta.conj() * inner(b_i, b_j)).im;
    if imag.abs() > REALITY_TOL {
        return Err(Error::RealityViolated { imag });
    }

    let diff: Vec<C64> = b_j.iter().zip(b_i).map(|(x, y)| x - eta * y).collect();
    let gap = norm(&diff);
    let (case, reflector) = if gap < case1_tol {
        let u = match u_tilde_override {
            Some(u) => {
                let u = matcore::normalized(u)?;
                let overlap = inner(&u, b_j).norm();
                if overlap > REALITY_TOL {
                    return Err(Error::OverrideNotOrthogonal { overlap });
                }
                u
            }
            None => default_orthogonal_reflector(b_j)?,
        };
        (HouseholderCase::Case1, u)
    } else {
        (
            HouseholderCase::Case2,
            diff.iter().map(|x| x / gap).collect(),
        )
    };
    let matrix = quasi_householder_matrix(eta, &reflector);
    Ok(QuasiHouseholder {
        eta,
        case,
        reflector,
        matrix,
    })
}

/// Per-index choices that override the defaults (`z = 1`, nonnegative-real
/// `η`, deterministic Case-1 reflector).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexOverride {
    pub z: Option<C64>,
    pub eta: Option<C64>,
    pub u_tilde: Option<Vec<C64>>,
}

/// Keyed by 0-based outcome index.
pub type Overrides = BTreeMap<usize, IndexOverride>;

#[derive(Debug, Clone)]
pub struct QuasiHouseholderSet {
    pub reference_index: usize,
    pub directions: Vec<NormalizedDirection>,
    pub set: Vec<QuasiHouseholder>,
    pub p_tilde: Vec<f64>,
}

impl QuasiHouseholderSet {
    /// Builds `Ĥ_i` for every direction against reference `j`.
    ///
    /// `weights` are the family weights `p_i`. Certifies `Ĥ_i|b_j⟩ = |b_i⟩`.
    pub fn from_directions(
        weights: &[f64],
        directions: Vec<NormalizedDirection>,
        j: usize,
        overrides: &Overrides,
    ) -> Result<Self> {
        let x = directions.len();
        if weights.len() != x {
            return Err(Error::WrongCount {
                expected: x,
                found: weights.len(),
            });
        }
        if j >= x {
            return Err(Error::IndexOutOfRange { index: j, len: x });
        }
        let b_j = directions[j].b.clone();
        let mut set = Vec::with_capacity(x);
        for (i, dir) in directions.iter().enumerate() {
            let ov = overrides.get(&i);
            let eta = choose_eta(&dir.b, &b_j, ov.and_then(|o| o.eta))?;
            let h = build_quasi_householder(
                &dir.b,
                &b_j,
                eta,
                CASE1_TOL,
                ov.and_then(|o| o.u_tilde.as_deref()),
            )?;
            let mapped = h.matrix.mat_vec(&b_j);
            let residual = norm(
                &mapped
                    .iter()
                    .zip(&dir.b)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            if residual > MAPPING_TOL {
                return Err(Error::CertificationFailed { index: i, residual });
            }
            set.push(h);
        }
        let ref_mass = weights[j] * directions[j].lambda.powi(2);
        let p_tilde = directions
            .iter()
            .zip(weights)
            .map(|(dir, p)| p * dir.lambda.powi(2) / ref_mass)
            .collect();
        Ok(Self {
            reference_index: j,
            directions,
            set,
            p_tilde,
        })
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// The quasi-Householder matrices `Ĥ_i`.
    pub fn h_hat(&self) -> Vec<CMatrix> {
        self.set.iter().map(|h| h.matrix.clone()).collect()
    }

    /// Dynamics unitaries `H_i = Ĥ_i†`.
    pub fn dynamics_unitaries(&self) -> Vec<CMatrix> {
        self.set.iter().map(|h| h.matrix.adjoint()).collect()
    }

    /// `Q_i = p_i|λ_i|²|b_i⟩⟨b_i|` given the family weights.
    pub fn effects(&self, weights: &[f64]) -> Vec<CMatrix> {
        self.directions
            .iter()
            .zip(weights)
            .map(|(dir, p)| CMatrix::projector(&dir.b).scale_real(p * dir.lambda.powi(2)))
            .collect()
    }

    /// Largest `‖Q_i − p̃_i Ĥ_i Q_j Ĥ_i†‖_F` over `i`.
    pub fn conjugation_residuals(&self, effects: &[CMatrix]) -> Vec<f64> {
        let q_j = &effects[self.reference_index];
        self.set
            .iter()
            .zip(effects)
            .zip(&self.p_tilde)
            .map(|((h, q_i), pt)| {
                let rhs = h.matrix.conjugate_by(q_j).scale_real(*pt);
                q_i.dist(&rhs)
            })
            .collect()
    }
}

/// Builds and certifies the full set for a family and reference index `j`
/// (0-based), with `P^{-1/2}` supplied by the caller.
pub fn build_set(
    fam: &ProjectorFamily,
    j: usize,
    p_inv_sqrt: &CMatrix,
    overrides: &Overrides,
) -> Result<QuasiHouseholderSet> {
    let d = fam.dimension();
    if d < 2 {
        return Err(Error::DimensionTooSmall { d });
    }
    if j >= fam.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: fam.len(),
        });
    }
    let directions = fam
        .projectors()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let z = overrides.get(&i).and_then(|o| o.z).unwrap_or(cr(1.0));
            normalize_direction(&p_inv_sqrt.mat_vec(p.direction()), z)
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = fam.projectors().iter().map(|p| p.weight()).collect();
    let set = QuasiHouseholderSet::from_directions(&weights, directions, j, overrides)?;

    // Q_i straight from the canonical construction, independent of λ_i, b_i.
    let effects: Vec<CMatrix> = fam
        .projectors()
        .iter()
        .map(|p| CMatrix::projector(&p_inv_sqrt.mat_vec(p.direction())).scale_real(p.weight()))
        .collect();
    for (i, r) in set.conjugation_residuals(&effects).into_iter().enumerate() {
        if r > CONJUGATION_TOL {
            return Err(Error::CertificationFailed {
                index: i,
                residual: r,
            });
        }
    }
    Ok(set)
}
