//! Subcommand implementations. Each returns a [`Report`]; writing files is
//! left to the caller.

use dynatomo::avgchannel::{self, AverageChannel, SingleProjectorProtocol};
use dynatomo::householder::{HouseholderCase, Overrides, QuasiHouseholderSet};
use dynatomo::matcore::{self, CMatrix, C64};
use dynatomo::parallel::Execution;
use dynatomo::povm::{self, IC_RANK_TOL};
use dynatomo::rud::{Protocol, ReconstructionReport};
use dynatomo::schedule::{self, DesignMatrix, ExpDecayFamily, ExpDecaySchedule, DEFAULT_K_SCALE, DEFAULT_U_SCALE};
use dynatomo::weyl::{self, WeylHeisenbergBasis};
use dynatomo::{rng, worked_example as ex};
use serde_json::{json, Map, Value};

use crate::config::{self, ExperimentConfig, FamilySpec, ProtocolKind};
use crate::error::CliError;
use crate::golden;
use crate::report::{self, complex, matrices, matrix, vector, Report};

pub const WH_TOL: f64 = 1e-10;
pub const OVERLAP_TOL: f64 = 1e-12;
pub const GRAM_TOL: f64 = 1e-10;
pub const SIC_EXACT_TOL: f64 = 1e-10;
pub const STRUCTURE_TOL: f64 = 1e-10;
pub const PERTURBATIONS: usize = 100;
pub const PERTURBATION_MAGNITUDE: f64 = 0.05;
pub const TWIRL_SAMPLES: u64 = 20;

/// Seed and shot overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overriding {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    /// Used only when neither the flag nor the config sets a seed.
    pub fallback_seed: Option<u64>,
}

impl Overriding {
    pub fn seed(&self, cfg: &ExperimentConfig) -> u64 {
        self.seed.or(cfg.seed).or(self.fallback_seed).unwrap_or(0)
    }

    /// Seed for subcommands that take no config.
    pub fn bare_seed(&self) -> u64 {
        self.seed.or(self.fallback_seed).unwrap_or(0)
    }

    pub fn shots(&self, cfg: &ExperimentConfig) -> u64 {
        self.shots.or(cfg.shots).unwrap_or(0)
    }

    /// The config as actually run: seed and shots filled in.
    pub fn effective(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut c = cfg.clone();
        c.seed = Some(self.seed(cfg));
        c.shots = Some(self.shots(cfg));
        c
    }
}

fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

fn design_json(d: &DesignMatrix) -> Value {
    json!({"det": d.det, "condition": d.condition, "matrix": matrix(&d.matrix)})
}

fn reconstruction_json(r: &ReconstructionReport) -> Value {
    json!({
        "recovered_state": matrix(&r.recovered_rho),
        "raw_solution": matrix(&r.raw_solution),
        "errors": {
            "frobenius_vs_truth": r.frobenius_error_vs_truth,
            "trace_deviation": r.trace_deviation,
            "min_eigenvalue": r.min_eigenvalue,
        },
    })
}

fn householder_json(set: &QuasiHouseholderSet) -> Value {
    json!({
        "reference_index": set.reference_index + 1,
        "eta": set.set.iter().map(|h| complex(h.eta)).collect::<Vec<_>>(),
        "case": set.set.iter().map(|h| match h.case {
            HouseholderCase::Case1 => 1,
            HouseholderCase::Case2 => 2,
        }).collect::<Vec<_>>(),
        "lambda": set.directions.iter().map(|b| b.lambda).collect::<Vec<_>>(),
        "p_tilde": set.p_tilde,
        "h_hat": matrices(&set.h_hat()),
    })
}

fn dimension(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    config::inferred_dimension(cfg).ok_or_else(|| {
        CliError::Invariant(vec![config::Violation {
            pointer: "/dimension".into(),
            message: "dimension is required and cannot be inferred".into(),
        }])
    })
}

fn is_example_family(cfg: &ExperimentConfig) -> bool {
    matches!(&cfg.family, Some(FamilySpec::Builder(b)) if b == config::EXAMPLE_BUILDER)
}

/// Dispatches on `protocol`.
pub fn run(cfg: &ExperimentConfig, ov: Overriding) -> Result<Report, CliError> {
    match cfg.protocol {
        ProtocolKind::Rud => rud(cfg, ov),
        ProtocolKind::Avgchannel => avgchannel(cfg, ov),
        ProtocolKind::SicSimulate => sic_simulate(cfg, ov),
        ProtocolKind::IcCheck => ic_check(cfg, ov),
        ProtocolKind::Example48 => example48(ov.seed(cfg), ov.shots(cfg)),
        ProtocolKind::WhDemo => wh_demo(dimension(cfg)?, ov.seed(cfg)),
    }
}

pub fn rud(cfg: &ExperimentConfig, ov: Overriding) -> Result<Report, CliError> {
    let (seed, shots) = (ov.seed(cfg), ov.shots(cfg));
    let d = dimension(cfg)?;
    let family = config::build_family(cfg, d, seed)?;
    let x = family.len();
    let example = is_example_family(cfg);
    let j = match cfg.outcome_index {
        Some(j) => j - 1,
        None if example => ex::REFERENCE_INDEX,
        None => 0,
    };
    let overrides: Overrides = if cfg.overrides.is_empty() && example && j == ex::REFERENCE_INDEX {
        ex::protocol_overrides()
    } else {
        config::build_overrides(cfg)
    };
    let sched = match cfg.schedule.as_ref().and_then(|s| s.thetas.clone()) {
        Some(t) => ExpDecaySchedule::new(t)?,
        None => ExpDecaySchedule::default_for(x)?,
    };
    let grid = config::build_grid(cfg.grid.as_ref(), x, DEFAULT_K_SCALE)?;
    let rho0 = config::build_state(cfg, d, seed);
    let protocol = Protocol::prepare(family, j, &overrides, Some(sched), Some(grid))?;
    let out = protocol.run(&rho0, shots, seed)?;
    let table = report::table_from_record(&out.record);
    let json = object(vec![
        ("protocol", json!("rud")),
        ("config", serde_json::to_value(ov.effective(cfg)).expect("config serializes")),
        ("dimension", json!(d)),
        ("outcome_index", json!(j + 1)),
        ("thetas", json!(protocol.evolution.schedule().thetas())),
        ("design", design_json(&protocol.design)),
        ("householder", householder_json(&protocol.householders)),
        ("probabilities", report::table_json(&table)),
        ("q_traces", json!(out.q_traces)),
        ("initial_state", matrix(&rho0)),
        ("reconstruction", reconstruction_json(&out.report)),
    ]);
    Ok(Report::new(json).with_table(table))
}

fn probe(cfg: &ExperimentConfig, d: usize) -> Result<Vec<C64>, CliError> {
    match &cfg.probe {
        Some(p) => Ok(config::to_c64_vec(p)),
        None => weyl::fiducial(d).ok_or_else(|| {
            CliError::Invariant(vec![config::Violation {
                pointer: "/probe".into(),
                message: format!("no built-in fiducial for dimension {d}; supply a probe"),
            }])
        }),
    }
}

fn single_projector(cfg: &ExperimentConfig, d: usize) -> Result<SingleProjectorProtocol, CliError> {
    let decay = match cfg.schedule.as_ref().and_then(|s| s.gammas.clone()) {
        Some(g) => ExpDecayFamily::new(g)?,
        None => ExpDecayFamily::default_for(d),
    };
    let channel = AverageChannel::new(weyl::build_basis(d)?, decay)?;
    let grid = config::build_grid(cfg.grid.as_ref(), d * d, DEFAULT_U_SCALE)?;
    Ok(SingleProjectorProtocol::prepare(channel, probe(cfg, d)?, grid)?)
}

pub fn avgchannel(cfg: &ExperimentConfig, ov: Overriding) -> Result<Report, CliError> {
    let (seed, shots) = (ov.seed(cfg), ov.shots(cfg));
    let d = dimension(cfg)?;
    let protocol = single_projector(cfg, d)?;
    let rho0 = config::build_state(cfg, d, seed);
    let out = protocol.run(&rho0, shots, seed)?;
    let table = report::table_from_record(&out.record);
    let json = object(vec![
        ("protocol", json!("avgchannel")),
        ("config", serde_json::to_value(ov.effective(cfg)).expect("config serializes")),
        ("dimension", json!(d)),
        ("probe", vector(&protocol.phi)),
        ("gammas", json!(protocol.channel.decay().gammas)),
        ("design", design_json(&protocol.design)),
        ("probabilities", report::table_json(&table)),
        ("overlaps", json!(out.overlaps)),
        ("initial_state", matrix(&rho0)),
        ("reconstruction", reconstruction_json(&out.report)),
    ]);
    Ok(Report::new(json).with_table(table))
}

pub fn sic_simulate(cfg: &ExperimentConfig, ov: Overriding) -> Result<Report, CliError> {
    let (seed, shots) = (ov.seed(cfg), ov.shots(cfg));
    let d = dimension(cfg)?;
    let protocol = single_projector(cfg, d)?;
    let rho0 = config::build_state(cfg, d, seed);
    let sim = avgchannel::simulate_sic(&protocol, &rho0, shots, seed)?;
    let direct = avgchannel::sic_probabilities_direct(protocol.channel.basis(), &protocol.phi, &rho0)?;
    let max_dev = sim
        .probabilities
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let sum: f64 = sim.probabilities.iter().sum();
    let table = report::table_from_record(&sim.record);
    let json = object(vec![
        ("protocol", json!("sic-simulate")),
        ("config", serde_json::to_value(ov.effective(cfg)).expect("config serializes")),
        ("dimension", json!(d)),
        ("probe", vector(&protocol.phi)),
        ("design", design_json(&protocol.design)),
        ("probabilities", report::table_json(&table)),
        ("overlaps", json!(sim.overlaps)),
        ("sic_probabilities", json!(sim.probabilities)),
        ("direct_probabilities", json!(direct)),
        ("max_deviation_from_direct", json!(max_dev)),
        ("probability_sum", json!(sum)),
        ("initial_state", matrix(&rho0)),
    ]);
    let mut rep = Report::new(json).with_table(table);
    if shots == 0 && (max_dev > SIC_EXACT_TOL || (sum - 1.0).abs() > SIC_EXACT_TOL) {
        rep.failure = Some(CliError::CheckFailed(format!(
            "exact SIC outputs deviate from the Born rule by {max_dev:e} (sum {sum})"
        )));
    }
    Ok(rep)
}

pub fn ic_check(cfg: &ExperimentConfig, ov: Overriding) -> Result<Report, CliError> {
    let seed = ov.seed(cfg);
    let d = dimension(cfg)?;
    let family = config::build_family(cfg, d, seed)?;
    let p = povm::frame_operator(&family);
    let eig = matcore::hermitian_eigen(&p, matcore::HERMITIAN_TOL)?;
    let elements = family.elements();
    let ic = povm::is_ic(&elements, IC_RANK_TOL)?;
    let mut pairs = vec![
        ("protocol", json!("ic-check")),
        ("config", serde_json::to_value(ov.effective(cfg)).expect("config serializes")),
        ("dimension", json!(d)),
        ("count", json!(family.len())),
        ("frame_operator", matrix(&p)),
        ("frame_eigenvalues", json!(eig.eigenvalues)),
        ("is_ic", json!(ic.is_ic)),
        ("rank", json!(ic.rank)),
        ("required_rank", json!(ic.required_rank)),
        ("singular_values", json!(ic.singular_values)),
    ];
    if eig.min() > 0.0 {
        pairs.push(("frame_condition", json!(eig.max() / eig.min())));
    }
    if ic.is_ic {
        let canon = povm::canonical_ic_povm(&family)?;
        pairs.push(("frame_inv_sqrt", matrix(&povm::frame_inv_sqrt(&family)?)));
        pairs.push(("canonical_povm", matrices(canon.elements())));
    }
    let mut rep = Report::new(object(pairs));
    if !ic.is_ic {
        rep.failure = Some(CliError::Core(dynatomo::Error::NotInformationallyComplete {
            rank: ic.rank,
            required: ic.required_rank,
        }));
    }
    Ok(rep)
}

fn structure_line(name: &str, value: f64, lines: &mut Vec<String>) -> Value {
    let pass = value <= STRUCTURE_TOL;
    if !pass {
        lines.push(format!("{name}: {value:e} exceeds {STRUCTURE_TOL:e}"));
    }
    json!({"value": value, "tolerance": STRUCTURE_TOL, "pass": pass})
}

/// The nine-vector qutrit example, end to end, diffed against golden files.
pub fn example48(seed: u64, shots: u64) -> Result<Report, CliError> {
    let family = ex::family();
    let e = povm::frame_operator(&family);
    let e_inv = matcore::inverse(&e)?;
    let e_inv_sqrt = povm::frame_inv_sqrt(&family)?;
    let canon = povm::canonical_ic_povm(&family)?;
    let printed = ex::printed_set()?;
    let h_hat = printed.h_hat();

    let j = ex::REFERENCE_INDEX;
    let h7 = &h_hat[j];
    let b7 = &printed.directions[j].b;
    let id = CMatrix::identity(ex::DIMENSION);
    let mut failures = Vec::new();
    let structure = json!({
        "unitarity": structure_line("h_hat_7 unitarity", (&h7.adjoint() * h7).max_abs_diff(&id), &mut failures),
        "fixes_b7": structure_line(
            "h_hat_7 |b_7>",
            matcore::norm(&h7.mat_vec(b7).iter().zip(b7).map(|(a, b)| a - b).collect::<Vec<_>>()),
            &mut failures,
        ),
        "hermitian": structure_line("h_hat_7 hermiticity", h7.hermitian_residual(), &mut failures),
        "involution": structure_line("h_hat_7 squared", (h7 * h7).max_abs_diff(&id), &mut failures),
    });

    let mut comparisons = vec![
        golden::frame_operator(&e),
        golden::frame_inverse(&e_inv),
        golden::frame_inv_sqrt(&e_inv_sqrt),
    ];
    comparisons.extend(golden::h_hat(&h_hat));
    for c in &comparisons {
        failures.extend(c.mismatches.iter().cloned());
    }
    let golden_json: Map<String, Value> = comparisons.iter().map(|c| (c.name.clone(), c.to_json())).collect();

    let protocol = Protocol::prepare(family, j, &ex::protocol_overrides(), None, None)?;
    let rho0 = matcore::random_density_matrix(ex::DIMENSION, &mut rng::stream(seed, 2));
    let out = protocol.run(&rho0, shots, seed)?;
    let mu = protocol
        .grid
        .instants()
        .iter()
        .map(|&t| schedule::mu_eval(protocol.evolution.schedule(), t))
        .collect::<dynatomo::Result<Vec<_>>>()?;
    let table = report::table_from_record(&out.record);

    let json = object(vec![
        ("protocol", json!("example-4-8")),
        ("config", json!({"seed": seed, "shots": shots})),
        ("frame_operator", matrix(&e)),
        ("frame_inverse", matrix(&e_inv)),
        ("frame_inv_sqrt", matrix(&e_inv_sqrt)),
        ("povm", matrices(canon.elements())),
        ("printed_householder", householder_json(&printed)),
        ("h_hat_7_structure", structure),
        ("golden", Value::Object(golden_json)),
        ("thetas", json!(protocol.evolution.schedule().thetas())),
        ("mu", json!(mu)),
        ("design", design_json(&protocol.design)),
        ("householder", householder_json(&protocol.householders)),
        ("probabilities", report::table_json(&table)),
        ("q_traces", json!(out.q_traces)),
        ("initial_state", matrix(&rho0)),
        ("reconstruction", reconstruction_json(&out.report)),
    ]);
    let mut rep = Report::new(json).with_table(table);
    if !failures.is_empty() {
        rep.failure = Some(CliError::GoldenMismatch(failures));
    }
    Ok(rep)
}

fn check(value: f64, tol: f64, name: &str, failures: &mut Vec<String>) -> Value {
    let pass = value <= tol;
    if !pass {
        failures.push(format!("{name}: {value:e} exceeds {tol:e}"));
    }
    json!({"value": value, "tolerance": tol, "pass": pass})
}

/// Largest deviations of the basis identities; `(name, value)` pairs.
pub fn wh_identities(basis: &WeylHeisenbergBasis, seed: u64) -> dynatomo::Result<Vec<(&'static str, f64)>> {
    let d = basis.dimension();
    let ops = basis.operators();
    let mut trace: f64 = 0.0;
    for m in &ops[1..] {
        trace = trace.max(m.trace().norm());
    }
    let mut ortho: f64 = 0.0;
    for (a, ma) in ops.iter().enumerate() {
        for (b, mb) in ops.iter().enumerate() {
            let expect = if a == b { d as f64 } else { 0.0 };
            ortho = ortho.max((matcore::frobenius_inner(ma, mb)? - C64::new(expect, 0.0)).norm());
        }
    }
    let mut phase: f64 = 0.0;
    for j in 0..d {
        for k in 0..d {
            let want = weyl::omega_pow(d, -((j * k) as i64));
            phase = phase.max((weyl::commutation_check(basis, j, k) - want).norm());
        }
    }
    let target = CMatrix::identity(d).scale_real(d as f64);
    let mut twirl: f64 = 0.0;
    let mut expand: f64 = 0.0;
    for s in 0..TWIRL_SAMPLES {
        let rho = matcore::random_density_matrix(d, &mut rng::stream(seed, s));
        twirl = twirl.max(weyl::twirl(basis, &rho).max_abs_diff(&target));
        let back = weyl::reassemble(basis, &weyl::wh_expand(basis, &rho)?)?;
        expand = expand.max(back.max_abs_diff(&rho));
    }
    let mut adjoint: f64 = 0.0;
    for alpha in 0..basis.len() {
        let (sigma, ph) = basis.adjoint_index(alpha);
        adjoint = adjoint.max(ops[alpha].adjoint().max_abs_diff(&ops[sigma].scale(ph)));
    }
    Ok(vec![
        ("trace_zero", trace),
        ("orthogonality", ortho),
        ("commutation_phase", phase),
        ("twirl", twirl),
        ("expansion_round_trip", expand),
        ("adjoint_relation", adjoint),
    ])
}

pub fn wh_demo(d: usize, seed: u64) -> Result<Report, CliError> {
    let basis = weyl::build_basis(d)?;
    let mut failures = Vec::new();
    let checks: Map<String, Value> = wh_identities(&basis, seed)?
        .into_iter()
        .map(|(name, v)| (name.to_string(), check(v, WH_TOL, name, &mut failures)))
        .collect();
    let adjoint: Vec<Value> = (0..basis.len())
        .map(|a| {
            let (s, ph) = basis.adjoint_index(a);
            json!({"alpha": a, "sigma": s, "phase": complex(ph)})
        })
        .collect();
    let json = object(vec![
        ("protocol", json!("wh-demo")),
        ("config", json!({"dimension": d, "seed": seed})),
        ("omega", complex(basis.omega())),
        ("shift", matrix(&weyl::shift(d))),
        ("clock", matrix(&weyl::clock(d))),
        ("operators", matrices(basis.operators())),
        ("adjoint", Value::Array(adjoint)),
        ("checks", Value::Object(checks)),
    ]);
    let mut rep = Report::new(json);
    if !failures.is_empty() {
        rep.failure = Some(CliError::CheckFailed(failures.join("; ")));
    }
    Ok(rep)
}

pub fn sic_verify(d: usize, seed: u64) -> Result<Report, CliError> {
    let phi = weyl::fiducial(d).ok_or_else(|| {
        CliError::Invariant(vec![config::Violation {
            pointer: "/dimension".into(),
            message: format!("no built-in fiducial for dimension {d}"),
        }])
    })?;
    let basis = weyl::build_basis(d)?;
    let overlaps = weyl::fiducial_overlaps(&basis, &phi)?;
    let target = 1.0 / (d as f64 + 1.0);
    let overlap_dev = overlaps[1..].iter().map(|o| (o - target).abs()).fold(0.0, f64::max);
    let orbit = weyl::orbit(&basis, &phi)?;
    let sic = povm::sic_check(&orbit)?;
    let gram = avgchannel::gram_squared(&orbit)?;
    let closed = avgchannel::sic_gram_determinant(d);
    let det_dev = (gram.det - closed).abs();

    let perturbed = avgchannel::perturb_family(
        &basis,
        &phi,
        PERTURBATIONS,
        PERTURBATION_MAGNITUDE,
        seed,
        Execution::default(),
    )?;
    let nonzero = perturbed.iter().filter(|p| p.gram_det.abs() > avgchannel::GRAM_DET_TOL).count();
    let ic = perturbed.iter().filter(|p| p.is_ic).count();
    let required = PERTURBATIONS - PERTURBATIONS / 100;

    let mut failures = Vec::new();
    let checks = json!({
        "fiducial_overlaps": check(overlap_dev, OVERLAP_TOL, "fiducial overlaps", &mut failures),
        "gram_determinant": check(det_dev, GRAM_TOL, "Gram determinant", &mut failures),
    });
    if !sic.is_sic {
        failures.push("orbit is not a SIC".into());
    }
    if nonzero < required {
        failures.push(format!("only {nonzero}/{PERTURBATIONS} perturbed states have det != 0"));
    }
    let json = object(vec![
        ("protocol", json!("sic-verify")),
        ("config", json!({"dimension": d, "seed": seed})),
        ("fiducial", vector(&phi)),
        ("overlaps", json!(overlaps)),
        ("is_sic", json!(sic.is_sic)),
        ("max_pairwise_deviation", json!(sic.max_pairwise_deviation)),
        ("gram_squared", json!(gram.matrix)),
        ("gram_determinant", json!(gram.det)),
        ("gram_determinant_closed_form", json!(closed)),
        ("checks", checks),
        (
            "perturbations",
            json!({
                "count": PERTURBATIONS,
                "magnitude": PERTURBATION_MAGNITUDE,
                "nonzero_determinant": nonzero,
                "informationally_complete": ic,
                "determinants": perturbed.iter().map(|p| p.gram_det).collect::<Vec<_>>(),
            }),
        ),
    ]);
    let mut rep = Report::new(json);
    if !failures.is_empty() {
        rep.failure = Some(CliError::CheckFailed(failures.join("; ")));
    }
    Ok(rep)
}
