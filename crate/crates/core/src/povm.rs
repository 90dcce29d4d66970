//! Projector families, frame operators and POVM checks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{
    self, hermitian_eigen, inv_sqrt_pd, norm, vectorize, CMatrix, C64, HERMITIAN_TOL,
};

/// Tolerance for POVM element Hermiticity, positivity and completeness.
pub const POVM_TOL: f64 = 1e-10;
/// Default relative singular-value threshold of the IC rank test.
pub const IC_RANK_TOL: f64 = 1e-10;
/// Tolerance used by [`sic_check`].
pub const SIC_TOL: f64 = 1e-9;

/// `p |a⟩⟨a|` with `p > 0` and `‖a‖ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubnormalizedProjector {
    weight: f64,
    direction: Vec<C64>,
}

impl SubnormalizedProjector {
    pub fn new(weight: f64, direction: Vec<C64>) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidInput(format!(
                "projector weight must be positive, got {weight}"
            )));
        }
        let n = norm(&direction);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "projector direction must be a unit vector (norm {n})"
            )));
        }
        Ok(Self { weight, direction })
    }

    /// Normalizes `direction` first.
    pub fn from_unnormalized(weight: f64, direction: &[C64]) -> Result<Self> {
        Self::new(weight, matcore::normalized(direction)?)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn direction(&self) -> &[C64] {
        &self.direction
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::projector(&self.direction).scale_real(self.weight)
    }
}

/// Ordered collection `{P_i = p_i |a_i⟩⟨a_i|}` on `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFamily {
    dimension: usize,
    projectors: Vec<SubnormalizedProjector>,
}

impl ProjectorFamily {
    pub fn new(dimension: usize, projectors: Vec<SubnormalizedProjector>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::DimensionTooSmall { d: dimension });
        }
        if projectors.is_empty() {
            return Err(Error::InvalidInput("projector family is empty".into()));
        }
        if let Some(bad) = projectors
            .iter()
            .position(|p| p.direction.len() != dimension)
        {
            return Err(Error::InvalidInput(format!(
                "projector {bad} has length {} but dimension is {dimension}",
                projectors[bad].direction.len()
            )));
        }
        Ok(Self {
            dimension,
            projectors,
        })
    }

    /// Equal weights over the given (normalized) directions.
    pub fn uniform(dimension: usize, weight: f64, directions: &[Vec<C64>]) -> Result<Self> {
        let projectors = directions
            .iter()
            .map(|v| SubnormalizedProjector::from_unnormalized(weight, v))
            .collect::<Result<_>>()?;
        Self::new(dimension, projectors)
    }

    /// `count` Haar-like random directions with weights uniform in `[0.2, 2)`.
    pub fn random<R: Rng + ?Sized>(dimension: usize, count: usize, rng: &mut R) -> Result<Self> {
        let projectors = (0..count)
            .map(|_| {
                let w = rng.random_range(0.2..2.0);
                SubnormalizedProjector::new(w, matcore::random_unit_vector(dimension, rng))
            })
            .collect::<Result<_>>()?;
        Self::new(dimension, projectors)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[SubnormalizedProjector] {
        &self.projectors
    }

    pub fn elements(&self) -> Vec<CMatrix> {
        self.projectors.iter().map(|p| p.matrix()).collect()
    }

    /// Same directions, every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let projectors = self
            .projectors
            .iter()
            .map(|p| SubnormalizedProjector::new(p.weight * factor, p.direction.clone()))
            .collect::<Result<_>>()?;
        Self::new(self.dimension, projectors)
    }

    /// Tomography needs at least `d²` outcomes.
    pub fn check_tomography_size(&self) -> Result<()> {
        let need = self.dimension * self.dimension;
        if self.len() < need {
            return Err(Error::InvalidInput(format!(
                "tomography needs x ≥ d² = {need} projectors, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Validated POVM: Hermitian PSD elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dimension: usize,
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let d = elements
            .first()
            .map(CMatrix::rows)
            .ok_or_else(|| Error::InvalidInput("POVM has no elements".into()))?;
        let mut sum = CMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.shape() != (d, d) {
                return Err(Error::ShapeMismatch {
                    expected: (d, d),
                    found: e.shape(),
                });
            }
            let residual = e.hermitian_residual();
            if residual > POVM_TOL {
                return Err(Error::InvalidInput(format!(
                    "POVM element {i} is not Hermitian (residual {residual:e})"
                )));
            }
            let min = hermitian_eigen(e, HERMITIAN_TOL)?.min();
            if min < -POVM_TOL {
                return Err(Error::InvalidInput(format!(
                    "POVM element {i} is not PSD (min eigenvalue {min:e})"
                )));
            }
            sum = &sum + e;
        }
        let dev = sum.dist(&CMatrix::identity(d));
        if dev > POVM_TOL {
            return Err(Error::InvalidInput(format!(
                "POVM elements do not sum to the identity (deviation {dev:e})"
            )));
        }
        Ok(Self {
            dimension: d,
            elements,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Born probabilities `tr(E_i ρ)`.
    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| born(e, rho))
            .collect()
    }
}

/// `Re tr(E ρ)`.
pub fn born(effect: &CMatrix, rho: &CMatrix) -> f64 {
    // tr(Eρ) = Σ_ab E_ab ρ_ba
    let d = effect.rows();
    let mut s = C64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            s += effect[(a, b)] * rho[(b, a)];
        }
    }
    s.re
}

/// `P = Σ p_i |a_i⟩⟨a_i|`.
pub fn frame_operator(fam: &ProjectorFamily) -> CMatrix {
    let d = fam.dimension();
    let mut p = CMatrix::zeros(d, d);
    for proj in fam.projectors() {
        let a = proj.direction();
        for r in 0..d {
            for c in 0..d {
                p[(r, c)] += a[r] * a[c].conj() * proj.weight();
            }
        }
    }
    p.hermitize()
}

/// Ascending eigenvalues of `P`, or `NotPositiveDefinite` when the family
/// fails to span `ℂ^d`.
pub fn assert_positive_definite(p: &CMatrix) -> Result<Vec<f64>> {
    let eig = hermitian_eigen(p, HERMITIAN_TOL)?;
    matcore::check_pd(&eig, None)?;
    Ok(eig.eigenvalues)
}

/// `P^{-1/2}` for the family's frame operator.
pub fn frame_inv_sqrt(fam: &ProjectorFamily) -> Result<CMatrix> {
    let p = frame_operator(fam);
    assert_positive_definite(&p)?;
    inv_sqrt_pd(&p, None)
}

/// `Q_i = P^{-1/2} P_i P^{-1/2}`, in the family's order.
pub fn canonical_ic_povm(fam: &ProjectorFamily) -> Result<Povm> {
    let s = frame_inv_sqrt(fam)?;
    canonical_povm_with(fam, &s)
}

pub(crate) fn canonical_povm_with(fam: &ProjectorFamily, inv_sqrt: &CMatrix) -> Result<Povm> {
    let elements = fam
        .projectors()
        .iter()
        .map(|p| {
            let v = inv_sqrt.mat_vec(p.direction());
            CMatrix::projector(&v).scale_real(p.weight()).hermitize()
        })
        .collect();
    Povm::new(elements)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcReport {
    pub is_ic: bool,
    pub rank: usize,
    pub required_rank: usize,
    /// Descending singular values of the vectorized stack.
    pub singular_values: Vec<f64>,
}

/// Numerical span test: rank of the `x × d²` stack of vectorized elements.
pub fn is_ic(elements: &[CMatrix], tol: f64) -> Result<IcReport> {
    let d = elements
        .first()
        .map(CMatrix::rows)
        .ok_or_else(|| Error::InvalidInput("no elements".into()))?;
    let n = d * d;
    let mut stack = CMatrix::zeros(elements.len(), n);
    for (i, e) in elements.iter().enumerate() {
        if e.shape() != (d, d) {
            return Err(Error::ShapeMismatch {
                expected: (d, d),
                found: e.shape(),
            });
        }
        for (k, z) in vectorize(e).as_slice().iter().enumerate() {
            stack[(i, k)] = *z;
        }
    }
    let sv = matcore::singular_values(&stack)?;
    let max = sv.first().copied().unwrap_or(0.0);
    let rank = if max == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol * max).count()
    };
    Ok(IcReport {
        is_ic: rank == n,
        rank,
        required_rank: n,
        singular_values: sv,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicReport {
    /// `max_{i≠j} ||⟨u_i|u_j⟩|² − 1/(d+1)|`.
    pub max_pairwise_deviation: f64,
    /// `‖Σ (1/d)|u_i⟩⟨u_i| − I‖_F`.
    pub completeness_deviation: f64,
    pub overlaps: Vec<Vec<f64>>,
    pub is_sic: bool,
}

/// Checks the SIC conditions on exactly `d²` unit vectors.
pub fn sic_check(states: &[Vec<C64>]) -> Result<SicReport> {
    let d = states.first().map(Vec::len).unwrap_or(0);
    if d == 0 || states.len() != d * d {
        return Err(Error::WrongCount {
            expected: d * d,
            found: states.len(),
        });
    }
    if states.iter().any(|s| s.len() != d) {
        return Err(Error::InvalidInput("states have mixed dimensions".into()));
    }
    let target = 1.0 / (d as f64 + 1.0);
    let n = states.len();
    let mut overlaps = vec![vec![0.0; n]; n];
    let mut max_dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let o = matcore::inner(&states[i], &states[j]).norm_sqr();
            overlaps[i][j] = o;
            if i != j {
                max_dev = max_dev.max((o - target).abs());
            }
        }
    }
    let mut sum = CMatrix::zeros(d, d);
    for s in states {
        sum = &sum + &CMatrix::projector(s).scale_real(1.0 / d as f64);
    }
    let completeness = sum.dist(&CMatrix::identity(d));
    Ok(SicReport {
        max_pairwise_deviation: max_dev,
        completeness_deviation: completeness,
        overlaps,
        is_sic: max_dev <= SIC_TOL && completeness <= SIC_TOL,
    })
}
