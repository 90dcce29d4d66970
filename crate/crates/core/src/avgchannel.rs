//! Tomography with a single rank-one projector under a time-dependent
//! Weyl–Heisenberg average channel.
//!
//! `Ψ_t(ρ) = Σ_α μ_α(t) M_α ρ M_α†`, so the probe `p(t) = ⟨φ|Ψ_t(ρ)|φ⟩`
//! equals `Σ_α μ_α(t)⟨ψ_α|ρ|ψ_α⟩` with `|ψ_α⟩ = M_α†|φ⟩`. Sampling `p` at
//! `d²` instants and inverting `𝒰 = [μ_α(t_i)]` yields the `d²` overlaps,
//! which determine `ρ` whenever the orbit of `φ` is informationally complete.
//!
//! Because `M_α† = c_α M_{σ(α)}` with `σ(j, k) = (−j, −k) mod d`, the
//! overlap with index `α` is the orbit projector `|φ_{σ(α)}⟩⟨φ_{σ(α)}|`.
//! For a SIC fiducial `tr(ρE_k) = ⟨ψ_{σ(k)}|ρ|ψ_{σ(k)}⟩/d`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{self, CMatrix, C64};
use crate::parallel::{self, Execution};
use crate::povm::{self, born, Povm, IC_RANK_TOL};
use crate::rng;
use crate::rud::{self, ProbabilityRecord, ReconstructionReport};
use crate::schedule::{self, DecayFamily, DesignMatrix, ExpDecayFamily, TimeGrid};
use crate::weyl::{self, WeylHeisenbergBasis};

/// Threshold on `|det 𝒜|` used when reporting nonvanishing determinants.
pub const GRAM_DET_TOL: f64 = 1e-10;

fn check_lambda(l: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&l) {
        return Err(Error::LambdaOutOfRange { value: l });
    }
    Ok(())
}

/// `λ₀ρ + (1 − λ₀) I/d`.
pub fn depolarize(rho0: &CMatrix, lambda0: f64, d: usize) -> Result<CMatrix> {
    check_lambda(lambda0)?;
    let mixed = CMatrix::identity(d).scale_real((1.0 - lambda0) / d as f64);
    Ok(&rho0.scale_real(lambda0) + &mixed)
}

#[derive(Debug, Clone)]
pub struct AverageChannel<F = ExpDecayFamily> {
    basis: WeylHeisenbergBasis,
    decay: F,
}

impl AverageChannel<ExpDecayFamily> {
    /// `λ_α(t) = e^{−16^α t}`.
    pub fn default_for(d: usize) -> Result<Self> {
        Self::new(weyl::build_basis(d)?, ExpDecayFamily::default_for(d))
    }
}

impl<F: DecayFamily> AverageChannel<F> {
    pub fn new(basis: WeylHeisenbergBasis, decay: F) -> Result<Self> {
        if decay.len() != basis.len() {
            return Err(Error::WrongCount {
                expected: basis.len(),
                found: decay.len(),
            });
        }
        Ok(Self { basis, decay })
    }

    pub fn basis(&self) -> &WeylHeisenbergBasis {
        &self.basis
    }

    pub fn decay(&self) -> &F {
        &self.decay
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn lambdas(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime { t });
        }
        let l = self.decay.eval(t);
        for &v in &l {
            check_lambda(v)?;
        }
        Ok(l)
    }

    /// Kraus weights `μ_α(t)`.
    pub fn mu(&self, t: f64) -> Result<Vec<f64>> {
        schedule::channel_mu(&self.lambdas(t)?, self.dimension())
    }

    /// `Σ_α μ_α(t) M_α ρ M_α†`.
    pub fn apply(&self, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
        let d = self.dimension();
        let mut acc = CMatrix::zeros(d, d);
        for (m, w) in self.basis.operators().iter().zip(self.mu(t)?) {
            acc = &acc + &m.conjugate_by(rho0).scale_real(w);
        }
        Ok(acc)
    }

    /// `(1/d²) Σ_k ε_k(ρ)` with `ε₀` the depolarizing channel and
    /// `ε_k(ρ) = λ_kρ + (1 − λ_k)M_kρM_k†`.
    pub fn apply_as_average(&self, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
        let d = self.dimension();
        let l = self.lambdas(t)?;
        let mut acc = depolarize(rho0, l[0], d)?;
        for (m, &lk) in self.basis.operators().iter().zip(&l).skip(1) {
            acc = &acc + &rho0.scale_real(lk);
            acc = &acc + &m.conjugate_by(rho0).scale_real(1.0 - lk);
        }
        Ok(acc.scale_real(1.0 / (d * d) as f64))
    }

    /// `|ψ_α⟩ = M_α†|φ⟩`.
    pub fn probe_directions(&self, phi: &[C64]) -> Result<Vec<Vec<C64>>> {
        // validates φ
        weyl::orbit(&self.basis, phi)?;
        Ok(self
            .basis
            .operators()
            .iter()
            .map(|m| m.adjoint().mat_vec(phi))
            .collect())
    }

    /// `⟨φ|Ψ_t(ρ)|φ⟩`.
    pub fn probe_probability(&self, rho0: &CMatrix, phi: &[C64], t: f64) -> Result<f64> {
        Ok(born(&CMatrix::projector(phi), &self.apply(rho0, t)?))
    }

    /// `Σ_α μ_α(t)⟨ψ_α|ρ|ψ_α⟩`.
    pub fn probe_probability_expanded(&self, rho0: &CMatrix, phi: &[C64], t: f64) -> Result<f64> {
        let mu = self.mu(t)?;
        Ok(self
            .probe_directions(phi)?
            .iter()
            .zip(mu)
            .map(|(psi, w)| w * matcore::inner(psi, &rho0.mat_vec(psi)).re)
            .sum())
    }

    pub fn design(&self, grid: &TimeGrid) -> Result<DesignMatrix> {
        schedule::build_design_u(&self.decay, grid, self.dimension())
    }
}

/// A probe state, channel and grid with the certified design matrix `𝒰`.
#[derive(Debug, Clone)]
pub struct SingleProjectorProtocol<F = ExpDecayFamily> {
    pub channel: AverageChannel<F>,
    pub phi: Vec<C64>,
    pub grid: TimeGrid,
    pub design: DesignMatrix,
    /// `|ψ_α⟩⟨ψ_α|`.
    pub effects: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleProjectorOutcome {
    pub record: ProbabilityRecord,
    /// `⟨ψ_α|ρ|ψ_α⟩`, indexed by `α`.
    pub overlaps: Vec<f64>,
    pub report: ReconstructionReport,
}

impl SingleProjectorProtocol<ExpDecayFamily> {
    pub fn default_for(d: usize, phi: Vec<C64>) -> Result<Self> {
        Self::prepare(AverageChannel::default_for(d)?, phi, TimeGrid::default_for_u(d)?)
    }
}

impl<F: DecayFamily + Sync> SingleProjectorProtocol<F> {
    pub fn prepare(channel: AverageChannel<F>, phi: Vec<C64>, grid: TimeGrid) -> Result<Self> {
        let design = channel.design(&grid)?;
        let effects = channel
            .probe_directions(&phi)?
            .iter()
            .map(|psi| CMatrix::projector(psi))
            .collect();
        Ok(Self {
            channel,
            phi,
            grid,
            design,
            effects,
        })
    }

    pub fn measure(&self, rho0: &CMatrix, shots: u64, seed: u64) -> Result<ProbabilityRecord> {
        let exact = self
            .grid
            .instants()
            .iter()
            .map(|&t| self.channel.probe_probability(rho0, &self.phi, t))
            .collect::<Result<Vec<_>>>()?;
        let values = rud::sample_frequencies(&exact, shots, &mut rng::stream(seed, 0));
        Ok(ProbabilityRecord {
            instants: self.grid.instants().to_vec(),
            outcome_index: 0,
            exact,
            values,
            shots,
        })
    }

    /// `𝒰⁻¹ p`.
    pub fn solve_overlaps(&self, record: &ProbabilityRecord) -> Result<Vec<f64>> {
        rud::solve_for_q_traces(record, &self.design)
    }

    pub fn reconstruct(&self, record: &ProbabilityRecord) -> Result<SingleProjectorOutcome> {
        let overlaps = self.solve_overlaps(record)?;
        let mut report = rud::reconstruct_from_effects(&overlaps, &self.effects)?;
        report.design_condition = Some(self.design.condition);
        Ok(SingleProjectorOutcome {
            record: record.clone(),
            overlaps,
            report,
        })
    }

    pub fn run(&self, rho0: &CMatrix, shots: u64, seed: u64) -> Result<SingleProjectorOutcome> {
        rud::validate_state(rho0)?;
        let mut out = self.reconstruct(&self.measure(rho0, shots, seed)?)?;
        out.report = out.report.with_truth(rho0);
        Ok(out)
    }

    /// Reconstruction errors of `trials` runs with counter-derived seeds.
    pub fn error_batch(
        &self,
        rho0: &CMatrix,
        shots: u64,
        seed: u64,
        trials: usize,
        exec: Execution,
    ) -> Result<Vec<f64>> {
        parallel::try_map_indexed(trials, exec, |k| {
            let out = self.run(rho0, shots, rng::child_seed(seed, k as u64))?;
            Ok(out.report.frobenius_error_vs_truth.unwrap_or(f64::NAN))
        })
    }
}

/// Convenience wrapper over [`SingleProjectorProtocol`] with the default
/// channel and grid.
pub fn reconstruct_via_single_projector(
    d: usize,
    rho0: &CMatrix,
    phi: &[C64],
    shots: u64,
    seed: u64,
) -> Result<SingleProjectorOutcome> {
    SingleProjectorProtocol::default_for(d, phi.to_vec())?.run(rho0, shots, seed)
}

/// `𝒜 = [|⟨φ_j|φ_k⟩|²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSquaredMatrix {
    pub matrix: Vec<Vec<f64>>,
    pub det: f64,
}

pub fn gram_squared(orbit: &[Vec<C64>]) -> Result<GramSquaredMatrix> {
    let n = orbit.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty orbit".into()));
    }
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| matcore::inner(&orbit[j], &orbit[k]).norm_sqr())
                .collect()
        })
        .collect();
    let det = matcore::determinant(&CMatrix::from_real_rows(&matrix)?)?.re;
    Ok(GramSquaredMatrix { matrix, det })
}

/// `d·(d/(d+1))^{d²−1}`, the Gram-squared determinant of any SIC orbit.
pub fn sic_gram_determinant(d: usize) -> f64 {
    let d = d as f64;
    d * (d / (d + 1.0)).powi((d * d) as i32 - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOperatorK {
    pub k: CMatrix,
    pub inv_sqrt: CMatrix,
}

/// `K = Σ_α |φ_α⟩⟨φ_α|` and `K^{-1/2}`.
pub fn orbit_frame_operator(orbit: &[Vec<C64>]) -> Result<FrameOperatorK> {
    let d = orbit.first().map(Vec::len).unwrap_or(0);
    let mut k = CMatrix::zeros(d, d);
    for v in orbit {
        k = &k + &CMatrix::projector(v);
    }
    let k = k.hermitize();
    povm::assert_positive_definite(&k)?;
    let inv_sqrt = matcore::inv_sqrt_pd(&k, None)?;
    Ok(FrameOperatorK { k, inv_sqrt })
}

/// `{K^{-1/2}|φ_α⟩⟨φ_α|K^{-1/2}}`.
pub fn canonical_orbit_povm(orbit: &[Vec<C64>]) -> Result<Povm> {
    let projectors: Vec<CMatrix> = orbit.iter().map(|v| CMatrix::projector(v)).collect();
    let ic = povm::is_ic(&projectors, IC_RANK_TOL)?;
    if !ic.is_ic {
        return Err(Error::NotInformationallyComplete {
            rank: ic.rank,
            required: ic.required_rank,
        });
    }
    let frame = orbit_frame_operator(orbit)?;
    let elements = projectors
        .iter()
        .map(|p| frame.inv_sqrt.conjugate_by(p).hermitize())
        .collect();
    Povm::new(elements)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedState {
    pub state: Vec<C64>,
    pub gram_det: f64,
    pub is_ic: bool,
}

/// IC analysis of one state's orbit.
pub fn analyze_state(basis: &WeylHeisenbergBasis, phi: &[C64]) -> Result<PerturbedState> {
    let orbit = weyl::orbit(basis, phi)?;
    let gram = gram_squared(&orbit)?;
    let projectors: Vec<CMatrix> = orbit.iter().map(|v| CMatrix::projector(v)).collect();
    Ok(PerturbedState {
        state: phi.to_vec(),
        gram_det: gram.det,
        is_ic: povm::is_ic(&projectors, IC_RANK_TOL)?.is_ic,
    })
}

/// Draws `count` states `φ + (a + ib)` with `a_k, b_k` uniform in
/// `[−magnitude, magnitude]`, normalized; trial `k` uses stream `k`.
pub fn perturb_family(
    basis: &WeylHeisenbergBasis,
    phi: &[C64],
    count: usize,
    magnitude: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<PerturbedState>> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "perturbation magnitude {magnitude} must be nonnegative"
        )));
    }
    parallel::try_map_indexed(count, exec, |k| {
        let mut r = rng::stream(seed, k as u64);
        let shifted: Vec<C64> = phi
            .iter()
            .map(|z| {
                let a = r.random_range(-1.0..=1.0) * magnitude;
                let b = r.random_range(-1.0..=1.0) * magnitude;
                z + C64::new(a, b)
            })
            .collect();
        analyze_state(basis, &matcore::normalized(&shifted)?)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicSimulation {
    /// `tr(ρE_k)` with `E_k = (1/d)|φ_k⟩⟨φ_k|`, `|φ_k⟩ = M_k|φ⟩`.
    pub probabilities: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub record: ProbabilityRecord,
}

/// SIC outcome probabilities recovered from the single-projector time
/// series; `phi` must be a SIC fiducial.
pub fn simulate_sic<F: DecayFamily + Sync>(
    protocol: &SingleProjectorProtocol<F>,
    rho0: &CMatrix,
    shots: u64,
    seed: u64,
) -> Result<SicSimulation> {
    let basis = protocol.channel.basis();
    weyl::check_fiducial(basis, &protocol.phi)?;
    rud::validate_state(rho0)?;
    let record = protocol.measure(rho0, shots, seed)?;
    let overlaps = protocol.solve_overlaps(&record)?;
    let d = basis.dimension() as f64;
    let probabilities = (0..basis.len())
        .map(|k| overlaps[basis.adjoint_index(k).0] / d)
        .collect();
    Ok(SicSimulation {
        probabilities,
        overlaps,
        record,
    })
}

/// `tr(ρE_k)` straight from the Born rule.
pub fn sic_probabilities_direct(
    basis: &WeylHeisenbergBasis,
    phi: &[C64],
    rho0: &CMatrix,
) -> Result<Vec<f64>> {
    let d = basis.dimension() as f64;
    Ok(weyl::orbit(basis, phi)?
        .iter()
        .map(|v| born(&CMatrix::projector(v), rho0) / d)
        .collect())
}

/// Identity check on `𝒜` that does not go through the determinant.
pub fn sic_gram_structure_deviation(gram: &GramSquaredMatrix, d: usize) -> f64 {
    let off = 1.0 / (d as f64 + 1.0);
    let mut dev: f64 = 0.0;
    for (j, row) in gram.matrix.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            let expect = if j == k { 1.0 } else { off };
            dev = dev.max((v - expect).abs());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{cr, random_density_matrix_seeded};

    fn unit(d: usize, k: usize) -> Vec<C64> {
        (0..d).map(|i| cr(if i == k { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn depolarize_extremes() {
        let rho = random_density_matrix_seeded(3, 1);
        assert!(depolarize(&rho, 1.0, 3).unwrap().dist(&rho) < 1e-15);
        let mixed = CMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(depolarize(&rho, 0.0, 3).unwrap().dist(&mixed) < 1e-15);
        assert!(matches!(
            depolarize(&rho, 1.5, 3),
            Err(Error::LambdaOutOfRange { .. })
        ));
    }

    #[test]
    fn depolarize_as_twirl() {
        let b = weyl::build_basis(3).unwrap();
        let rho = random_density_matrix_seeded(3, 2);
        let l = 0.37;
        let via_twirl = &rho.scale_real(l) + &weyl::twirl(&b, &rho).scale_real((1.0 - l) / 9.0);
        assert!(depolarize(&rho, l, 3).unwrap().dist(&via_twirl) < 1e-10);
    }

    #[test]
    fn channel_two_paths() {
        for d in [2, 3, 4] {
            let ch = AverageChannel::default_for(d).unwrap();
            for s in 0..5 {
                let rho = random_density_matrix_seeded(d, s);
                for t in [0.0, 1e-3, 0.05, 0.25] {
                    let a = ch.apply(&rho, t).unwrap();
                    let b = ch.apply_as_average(&rho, t).unwrap();
                    assert!(a.dist(&b) < 1e-12);
                    assert!((a.trace().re - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn channel_identity_at_zero() {
        let ch = AverageChannel::default_for(2).unwrap();
        assert_eq!(ch.mu(0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let rho = random_density_matrix_seeded(2, 3);
        assert!(ch.apply(&rho, 0.0).unwrap().dist(&rho) < 1e-15);
    }

    #[test]
    fn probe_two_paths_and_trivial_cases() {
        let ch = AverageChannel::default_for(2).unwrap();
        let phi = weyl::fiducial(2).unwrap();
        let rho = random_density_matrix_seeded(2, 4);
        for t in [0.0, 0.01, 0.2] {
            let a = ch.probe_probability(&rho, &phi, t).unwrap();
            let b = ch.probe_probability_expanded(&rho, &phi, t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let mixed = CMatrix::identity(2).scale_real(0.5);
        assert!((ch.probe_probability(&mixed, &phi, 0.1).unwrap() - 0.5).abs() < 1e-12);
        let pure = CMatrix::projector(&phi);
        assert!((ch.probe_probability(&pure, &phi, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_projector_round_trip() {
        for d in [2, 3] {
            let phi = weyl::fiducial(d).unwrap();
            for s in 0..5 {
                let rho = random_density_matrix_seeded(d, 100 + s);
                let out = reconstruct_via_single_projector(d, &rho, &phi, 0, 0).unwrap();
                assert!(out.report.frobenius_error_vs_truth.unwrap() < 1e-8);
            }
            let mixed = CMatrix::identity(d).scale_real(1.0 / d as f64);
            let out = reconstruct_via_single_projector(d, &mixed, &phi, 0, 0).unwrap();
            assert!(out.overlaps.iter().all(|v| (v - 1.0 / d as f64).abs() < 1e-10));
            assert!(out.report.recovered_rho.dist(&mixed) < 1e-10);
        }
    }

    #[test]
    fn gram_of_basis_orbit_is_singular() {
        let b = weyl::build_basis(2).unwrap();
        let o = weyl::orbit(&b, &unit(2, 0)).unwrap();
        let g = gram_squared(&o).unwrap();
        assert!(g.det.abs() < 1e-12);
        assert!(g.matrix.iter().enumerate().all(|(i, r)| r[i] == 1.0));
        assert!(!analyze_state(&b, &unit(2, 0)).unwrap().is_ic);
        assert!(matches!(
            canonical_orbit_povm(&o),
            Err(Error::NotInformationallyComplete { .. })
        ));
    }

    #[test]
    fn sic_gram_and_povm() {
        for d in [2, 3] {
            let b = weyl::build_basis(d).unwrap();
            let o = weyl::orbit(&b, &weyl::fiducial(d).unwrap()).unwrap();
            let g = gram_squared(&o).unwrap();
            assert!((g.det - sic_gram_determinant(d)).abs() < 1e-10);
            assert!(sic_gram_structure_deviation(&g, d) < 1e-12);
            let frame = orbit_frame_operator(&o).unwrap();
            assert!(frame.k.dist(&CMatrix::identity(d).scale_real(d as f64)) < 1e-10);
            let p = canonical_orbit_povm(&o).unwrap();
            for (e, v) in p.elements().iter().zip(&o) {
                assert!(e.dist(&CMatrix::projector(v).scale_real(1.0 / d as f64)) < 1e-10);
            }
        }
        assert!((sic_gram_determinant(2) - 16.0 / 27.0).abs() < 1e-15);
        assert!((sic_gram_determinant(3) - 0.3003387451).abs() < 1e-10);
    }

    #[test]
    fn zero_perturbation_keeps_det() {
        let b = weyl::build_basis(2).unwrap();
        let phi = weyl::fiducial(2).unwrap();
        let base = analyze_state(&b, &phi).unwrap().gram_det;
        let fam = perturb_family(&b, &phi, 5, 0.0, 1, Execution::Sequential).unwrap();
        assert!(fam.iter().all(|p| (p.gram_det - base).abs() < 1e-12));
    }

    #[test]
    fn perturbation_is_deterministic_across_paths() {
        let b = weyl::build_basis(3).unwrap();
        let phi = weyl::fiducial(3).unwrap();
        let s = perturb_family(&b, &phi, 8, 0.05, 9, Execution::Sequential).unwrap();
        let p = perturb_family(&b, &phi, 8, 0.05, 9, Execution::Parallel).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn perturbing_a_basis_state_restores_ic() {
        let b = weyl::build_basis(2).unwrap();
        let fam = perturb_family(&b, &unit(2, 0), 20, 0.05, 2, Execution::Sequential).unwrap();
        assert!(fam.iter().any(|p| p.gram_det.abs() > GRAM_DET_TOL));
    }

    #[test]
    fn sic_simulation_matches_born_rule() {
        for d in [2, 3] {
            let phi = weyl::fiducial(d).unwrap();
            let proto = SingleProjectorProtocol::default_for(d, phi.clone()).unwrap();
            let rho = random_density_matrix_seeded(d, 7);
            let sim = simulate_sic(&proto, &rho, 0, 0).unwrap();
            let direct = sic_probabilities_direct(proto.channel.basis(), &phi, &rho).unwrap();
            for (a, b) in sim.probabilities.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((sim.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let mixed = CMatrix::identity(d).scale_real(1.0 / d as f64);
            let sim = simulate_sic(&proto, &mixed, 0, 0).unwrap();
            let n = (d * d) as f64;
            assert!(sim.probabilities.iter().all(|p| (p - 1.0 / n).abs() < 1e-10));
        }
    }

    #[test]
    fn non_fiducial_rejected() {
        let proto = SingleProjectorProtocol::default_for(2, vec![cr(1.0), cr(0.0)]).unwrap();
        let rho = random_density_matrix_seeded(2, 8);
        assert!(matches!(
            simulate_sic(&proto, &rho, 0, 0),
            Err(Error::NotAFiducial { .. })
        ));
    }
}
