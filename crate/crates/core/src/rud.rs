//! Tomography from one POVM element under random unitary dynamics.
//!
//! The state evolves as `ρ(t) = Σ μ_i(t) H_i ρ(0) H_i†` with the dynamics
//! unitaries `H_i = Ĥ_i†`. Watching the single outcome `Q_j` at `x`
//! instants yields `Prob(t) = Σ_i μ_i(t)/p̃_i · tr(Q_i ρ(0))`, so inverting
//! the design matrix `K` returns all `x` Born probabilities of the
//! canonical IC-POVM, from which `ρ(0)` follows by least squares.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::householder::{self, Overrides, QuasiHouseholderSet};
use crate::matcore::{self, cr, hermitian_eigen, CMatrix, HERMITIAN_TOL};
use crate::parallel::{self, Execution};
use crate::povm::{self, born, Povm, ProjectorFamily, IC_RANK_TOL};
use crate::rng;
use crate::schedule::{self, DesignMatrix, ExpDecaySchedule, TimeGrid};

const UNITARY_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;
const EFFECT_TOL: f64 = 1e-10;

/// Checks that `rho` is Hermitian, PSD and unit-trace within 1e-10.
pub fn validate_state(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (rho.rows(), rho.rows()),
            found: rho.shape(),
        });
    }
    let tr = rho.trace();
    if (tr - cr(1.0)).norm() > STATE_TOL {
        return Err(Error::InvalidInput(format!("state has trace {tr}")));
    }
    let residual = rho.hermitian_residual();
    if residual > STATE_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let min = hermitian_eigen(&rho.hermitize(), HERMITIAN_TOL)?.min();
    if min < -STATE_TOL {
        return Err(Error::InvalidInput(format!(
            "state is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Clips negative eigenvalues and renormalizes the trace.
pub fn project_to_state(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(&a.hermitize(), HERMITIAN_TOL)?;
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if total <= 0.0 {
        let d = a.rows();
        return Ok(CMatrix::identity(d).scale_real(1.0 / d as f64));
    }
    Ok(eig.apply_fn(|l| l.max(0.0) / total).hermitize())
}

#[derive(Debug, Clone)]
pub struct RudEvolution {
    unitaries: Vec<CMatrix>,
    schedule: ExpDecaySchedule,
}

impl RudEvolution {
    pub fn new(unitaries: Vec<CMatrix>, schedule: ExpDecaySchedule) -> Result<Self> {
        if unitaries.len() != schedule.count() {
            return Err(Error::WrongCount {
                expected: schedule.count(),
                found: unitaries.len(),
            });
        }
        let d = unitaries.first().map(CMatrix::rows).unwrap_or(0);
        for (i, u) in unitaries.iter().enumerate() {
            if u.shape() != (d, d) {
                return Err(Error::ShapeMismatch {
                    expected: (d, d),
                    found: u.shape(),
                });
            }
            if !u.is_unitary(UNITARY_TOL) {
                return Err(Error::InvalidInput(format!("H_{} is not unitary", i + 1)));
            }
        }
        Ok(Self {
            unitaries,
            schedule,
        })
    }

    pub fn dimension(&self) -> usize {
        self.unitaries[0].rows()
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn schedule(&self) -> &ExpDecaySchedule {
        &self.schedule
    }
}

/// `ρ(t) = Σ μ_i(t) H_i ρ(0) H_i†`.
pub fn evolve(ev: &RudEvolution, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
    let mu = schedule::mu_eval(&ev.schedule, t)?;
    let d = ev.dimension();
    let mut acc = CMatrix::zeros(d, d);
    for (h, m) in ev.unitaries.iter().zip(mu) {
        if m != 0.0 {
            acc = &acc + &h.conjugate_by(rho0).scale_real(m);
        }
    }
    Ok(acc.hermitize())
}

/// Checks `0 ≤ Q ≤ I`.
pub fn validate_effect(q: &CMatrix) -> Result<()> {
    let residual = q.hermitian_residual();
    if residual > EFFECT_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let eig = hermitian_eigen(&q.hermitize(), HERMITIAN_TOL)?;
    if eig.min() < -EFFECT_TOL || eig.max() > 1.0 + EFFECT_TOL {
        return Err(Error::InvalidEffect {
            min: eig.min(),
            max: eig.max(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRecord {
    pub instants: Vec<f64>,
    pub outcome_index: usize,
    pub exact: Vec<f64>,
    /// Equal to `exact` when `shots == 0`.
    pub values: Vec<f64>,
    pub shots: u64,
}

/// Replaces each probability by the success frequency of `shots`
/// Bernoulli trials (sampled as one binomial draw per instant).
pub fn sample_frequencies<R: Rng + ?Sized>(exact: &[f64], shots: u64, rng: &mut R) -> Vec<f64> {
    if shots == 0 {
        return exact.to_vec();
    }
    exact
        .iter()
        .map(|&p| {
            let p = p.clamp(0.0, 1.0);
            let k = Binomial::new(shots, p)
                .expect("p is clamped to [0, 1]")
                .sample(rng);
            k as f64 / shots as f64
        })
        .collect()
}

pub fn born_probabilities(
    ev: &RudEvolution,
    rho0: &CMatrix,
    q_j: &CMatrix,
    outcome_index: usize,
    grid: &TimeGrid,
    shots: u64,
    seed: u64,
) -> Result<ProbabilityRecord> {
    validate_effect(q_j)?;
    let exact = grid
        .instants()
        .iter()
        .map(|&t| Ok(born(q_j, &evolve(ev, rho0, t)?)))
        .collect::<Result<Vec<f64>>>()?;
    let values = sample_frequencies(&exact, shots, &mut rng::stream(seed, 0));
    Ok(ProbabilityRecord {
        instants: grid.instants().to_vec(),
        outcome_index,
        exact,
        values,
        shots,
    })
}

/// `K⁻¹ · Prob` = `{tr(Q_i ρ(0))}`.
pub fn solve_for_q_traces(record: &ProbabilityRecord, k: &DesignMatrix) -> Result<Vec<f64>> {
    k.solve(&record.values).map_err(|e| match e {
        Error::Singular => Error::SingularDesign {
            det: k.det,
            rcond: 1.0 / k.condition,
        },
        e => e,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub recovered_rho: CMatrix,
    pub raw_solution: CMatrix,
    pub frobenius_error_vs_truth: Option<f64>,
    /// `|tr(raw) − 1|`.
    pub trace_deviation: f64,
    /// Smallest eigenvalue of the Hermitian part of the raw solution.
    pub min_eigenvalue: f64,
    pub design_condition: Option<f64>,
}

impl ReconstructionReport {
    pub fn with_truth(mut self, truth: &CMatrix) -> Self {
        self.frobenius_error_vs_truth = Some(self.recovered_rho.dist(truth));
        self
    }
}

/// Least-squares state from effect expectations `tr(E_i ρ) = v_i`.
pub fn reconstruct_from_effects(v: &[f64], effects: &[CMatrix]) -> Result<ReconstructionReport> {
    if v.len() != effects.len() {
        return Err(Error::WrongCount {
            expected: effects.len(),
            found: v.len(),
        });
    }
    let ic = povm::is_ic(effects, IC_RANK_TOL)?;
    if !ic.is_ic {
        return Err(Error::NotInformationallyComplete {
            rank: ic.rank,
            required: ic.required_rank,
        });
    }
    let d = effects[0].rows();
    // tr(E ρ) = Σ_ab E_ab ρ_ba, so row i of the system is vec(E_iᵀ).
    let a = CMatrix::from_fn(effects.len(), d * d, |i, k| effects[i][(k % d, k / d)]);
    let b = CMatrix::column(&v.iter().map(|&x| cr(x)).collect::<Vec<_>>());
    let sol = matcore::lstsq_via_normal_equations(&a, &b)?;
    let raw = matcore::devectorize(&sol)?;
    let herm = raw.hermitize();
    let min_eigenvalue = hermitian_eigen(&herm, HERMITIAN_TOL)?.min();
    Ok(ReconstructionReport {
        trace_deviation: (raw.trace() - cr(1.0)).norm(),
        recovered_rho: project_to_state(&herm)?,
        raw_solution: raw,
        frobenius_error_vs_truth: None,
        min_eigenvalue,
        design_condition: None,
    })
}

pub fn reconstruct_state(v: &[f64], povm: &Povm) -> Result<ReconstructionReport> {
    reconstruct_from_effects(v, povm.elements())
}

/// Everything that does not depend on the unknown state: the canonical
/// POVM, the quasi-Householder set, the dynamics and the design matrix.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub family: ProjectorFamily,
    pub povm: Povm,
    pub householders: QuasiHouseholderSet,
    pub evolution: RudEvolution,
    pub grid: TimeGrid,
    pub design: DesignMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub record: ProbabilityRecord,
    pub q_traces: Vec<f64>,
    pub report: ReconstructionReport,
}

impl Protocol {
    /// `j` is 0-based. `schedule`/`grid` fall back to the geometric defaults.
    pub fn prepare(
        family: ProjectorFamily,
        j: usize,
        overrides: &Overrides,
        schedule: Option<ExpDecaySchedule>,
        grid: Option<TimeGrid>,
    ) -> Result<Self> {
        family.check_tomography_size()?;
        let inv_sqrt = povm::frame_inv_sqrt(&family)?;
        let povm = povm::canonical_ic_povm(&family)?;
        let householders = householder::build_set(&family, j, &inv_sqrt, overrides)?;
        let x = family.len();
        let schedule = match schedule {
            Some(s) => s,
            None => ExpDecaySchedule::default_for(x)?,
        };
        let grid = match grid {
            Some(g) => g,
            None => TimeGrid::default_for_k(x)?,
        };
        let evolution = RudEvolution::new(householders.dynamics_unitaries(), schedule)?;
        let design = schedule::build_design_k(evolution.schedule(), &grid, &householders.p_tilde)?;
        Ok(Self {
            family,
            povm,
            householders,
            evolution,
            grid,
            design,
        })
    }

    pub fn reference_index(&self) -> usize {
        self.householders.reference_index
    }

    pub fn run(&self, rho0: &CMatrix, shots: u64, seed: u64) -> Result<ProtocolOutcome> {
        validate_state(rho0)?;
        let j = self.reference_index();
        let record = born_probabilities(
            &self.evolution,
            rho0,
            &self.povm.elements()[j],
            j,
            &self.grid,
            shots,
            seed,
        )?;
        let q_traces = solve_for_q_traces(&record, &self.design)?;
        let mut report = reconstruct_state(&q_traces, &self.povm)?.with_truth(rho0);
        report.design_condition = Some(self.design.condition);
        Ok(ProtocolOutcome {
            record,
            q_traces,
            report,
        })
    }

    /// Reconstruction errors of `trials` independent runs; trial `k` uses
    /// the seed derived from `(seed, k)` regardless of execution order.
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

/// One-shot orchestration: prepare and run.
pub fn run_protocol(
    family: ProjectorFamily,
    j: usize,
    overrides: &Overrides,
    rho0: &CMatrix,
    shots: u64,
    seed: u64,
) -> Result<ProtocolOutcome> {
    Protocol::prepare(family, j, overrides, None, None)?.run(rho0, shots, seed)
}

/// Exact-mode round-trip errors over random spanning families, every
/// reference index each. Family `k` and its state come from stream `k`.
pub fn random_round_trips(
    d: usize,
    x: usize,
    families: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let per_family = parallel::try_map_indexed(families, exec, |k| {
        let mut r = rng::stream(seed, k as u64);
        let fam = ProjectorFamily::random(d, x, &mut r)?;
        let rho0 = matcore::random_density_matrix(d, &mut r);
        (0..x)
            .map(|j| {
                let p = Protocol::prepare(fam.clone(), j, &Overrides::new(), None, None)?;
                let out = p.run(&rho0, 0, 0)?;
                Ok(out.report.frobenius_error_vs_truth.unwrap_or(f64::NAN))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(per_family.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{random_density_matrix_seeded, random_unit_vector};

    fn small_protocol(seed: u64) -> (Protocol, CMatrix) {
        let mut r = rng::stream(seed, 0);
        let fam = ProjectorFamily::random(2, 5, &mut r).unwrap();
        let rho = matcore::random_density_matrix(2, &mut r);
        (
            Protocol::prepare(fam, 2, &Overrides::new(), None, None).unwrap(),
            rho,
        )
    }

    #[test]
    fn identity_dynamics_is_static() {
        let s = ExpDecaySchedule::new(vec![1.0, 2.0]).unwrap();
        let ev = RudEvolution::new(vec![CMatrix::identity(2); 3], s).unwrap();
        let rho = random_density_matrix_seeded(2, 1);
        for t in [0.0, 0.3, 5.0] {
            assert!(evolve(&ev, &rho, t).unwrap().dist(&rho) < 1e-14);
        }
    }

    #[test]
    fn evolve_at_zero_uses_last_unitary() {
        let (p, rho) = small_protocol(3);
        let last = p.evolution.unitaries().last().unwrap();
        let at0 = evolve(&p.evolution, &rho, 0.0).unwrap();
        assert!(at0.dist(&last.conjugate_by(&rho)) < 1e-14);
    }

    #[test]
    fn trivial_effects() {
        let (p, rho) = small_protocol(4);
        let id = born_probabilities(&p.evolution, &rho, &CMatrix::identity(2), 0, &p.grid, 0, 0).unwrap();
        assert!(id.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let zero = born_probabilities(&p.evolution, &rho, &CMatrix::zeros(2, 2), 0, &p.grid, 0, 0).unwrap();
        assert!(zero.values.iter().all(|v| v.abs() < 1e-15));
        let big = CMatrix::identity(2).scale_real(1.5);
        assert!(matches!(
            born_probabilities(&p.evolution, &rho, &big, 0, &p.grid, 0, 0),
            Err(Error::InvalidEffect { .. })
        ));
    }

    #[test]
    fn term_by_term_probabilities_agree() {
        let (p, rho) = small_protocol(5);
        let j = p.reference_index();
        let q = &p.povm.elements()[j];
        let rec = born_probabilities(&p.evolution, &rho, q, j, &p.grid, 0, 0).unwrap();
        for (t, v) in p.grid.instants().iter().zip(&rec.exact) {
            let mu = schedule::mu_eval(p.evolution.schedule(), *t).unwrap();
            let direct: f64 = p
                .evolution
                .unitaries()
                .iter()
                .zip(&mu)
                .map(|(h, m)| m * born(&h.adjoint().conjugate_by(q), &rho))
                .sum();
            assert!((direct - v).abs() < 1e-12);
        }
    }

    #[test]
    fn q_traces_match_born_rule() {
        let (p, rho) = small_protocol(6);
        let out = p.run(&rho, 0, 0).unwrap();
        for (v, e) in out.q_traces.iter().zip(p.povm.elements()) {
            assert!((v - born(e, &rho)).abs() < 1e-10);
        }
        assert!(out.report.frobenius_error_vs_truth.unwrap() < 1e-8);
    }

    #[test]
    fn maximally_mixed_round_trip() {
        let (p, _) = small_protocol(7);
        let mixed = CMatrix::identity(2).scale_real(0.5);
        let out = p.run(&mixed, 0, 0).unwrap();
        for (v, e) in out.q_traces.iter().zip(p.povm.elements()) {
            assert!((v - e.trace().re / 2.0).abs() < 1e-10);
        }
        assert!(out.report.recovered_rho.dist(&mixed) < 1e-10);
    }

    #[test]
    fn noisy_inputs_still_give_states() {
        let (p, rho) = small_protocol(8);
        let exact: Vec<f64> = p.povm.probabilities(&rho);
        let mut r = rng::stream(8, 1);
        let noisy: Vec<f64> = exact.iter().map(|v| v + 1e-3 * (r.random::<f64>() - 0.5)).collect();
        let rep = reconstruct_state(&noisy, &p.povm).unwrap().with_truth(&rho);
        validate_state(&rep.recovered_rho).unwrap();
        assert!(rep.frobenius_error_vs_truth.unwrap() < 1e-1);
    }

    #[test]
    fn pure_state_round_trip() {
        let (p, _) = small_protocol(9);
        let psi = random_unit_vector(2, &mut rng::stream(9, 1));
        let rho = CMatrix::projector(&psi);
        let out = p.run(&rho, 0, 0).unwrap();
        assert!(out.report.frobenius_error_vs_truth.unwrap() < 1e-8);
    }

    #[test]
    fn projection_is_idempotent() {
        let h = crate::matcore::random_hermitian(3, &mut rng::stream(10, 0));
        let once = project_to_state(&h).unwrap();
        let twice = project_to_state(&once).unwrap();
        assert!(once.dist(&twice) < 1e-12);
        assert!((once.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn not_ic_rejected() {
        let e = vec![CMatrix::diag_real(&[1.0, 0.0]), CMatrix::diag_real(&[0.0, 1.0])];
        assert!(matches!(
            reconstruct_from_effects(&[0.5, 0.5], &e),
            Err(Error::NotInformationallyComplete { .. })
        ));
    }

    #[test]
    fn sampling_is_seeded() {
        let (p, rho) = small_protocol(11);
        let a = p.run(&rho, 1000, 5).unwrap();
        let b = p.run(&rho, 1000, 5).unwrap();
        let c = p.run(&rho, 1000, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.record.values, c.record.values);
    }

    #[test]
    fn batch_paths_agree() {
        let (p, rho) = small_protocol(12);
        let s = p.error_batch(&rho, 10_000, 3, 6, Execution::Sequential).unwrap();
        let q = p.error_batch(&rho, 10_000, 3, 6, Execution::Parallel).unwrap();
        assert_eq!(s, q);
    }
}
