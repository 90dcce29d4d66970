//! Acceptance checks, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) and exits nonzero if any check fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dynatomo::avgchannel::{self, SingleProjectorProtocol};
use dynatomo::matcore::{self, CMatrix};
use dynatomo::parallel::Execution;
use dynatomo::{povm, rng, rud, weyl, worked_example as ex};
use dynatomo_cli::commands;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn max_dev(a: &CMatrix, b: &CMatrix) -> f64 {
    a.max_abs_diff(b)
}

fn frame_operator() -> Outcome {
    let start = Instant::now();
    let e = povm::frame_operator(&ex::family());
    let elapsed = start.elapsed();
    let dev = max_dev(&e, &ex::frame_operator_closed_form());
    outcome(
        dev <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |E − [[1,0,0],[0,1,−1/3],[0,−1/3,1]]| = {dev:.1e} (tol 1e-12), {elapsed:.1?}"),
    )
}

fn frame_inverses() -> Outcome {
    let fam = ex::family();
    let e = povm::frame_operator(&fam);
    let inv = matcore::inverse(&e).map(|m| max_dev(&m, &ex::inverse_closed_form()));
    let isq = povm::frame_inv_sqrt(&fam).map(|m| max_dev(&m, &ex::inv_sqrt_closed_form()));
    match (inv, isq) {
        (Ok(a), Ok(b)) => outcome(
            a <= 1e-12 && b <= 1e-12,
            format!("E⁻¹ deviation {a:.1e}, E^(-1/2) deviation {b:.1e} (tol 1e-12)"),
        ),
        (a, b) => outcome(false, format!("{a:?} {b:?}")),
    }
}

fn householder_set() -> Outcome {
    let set = match ex::printed_set() {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let h = set.h_hat();
    let printed = ex::printed_h_hat();
    let others = (0..9)
        .filter(|&i| i != ex::REFERENCE_INDEX)
        .map(|i| max_dev(&h[i], &printed[i]))
        .fold(0.0, f64::max);
    let h7 = &h[ex::REFERENCE_INDEX];
    let b7 = &set.directions[ex::REFERENCE_INDEX].b;
    let id = CMatrix::identity(3);
    let unitary = (&h7.adjoint() * h7).max_abs_diff(&id);
    let fixed = matcore::norm(&h7.mat_vec(b7).iter().zip(b7).map(|(a, b)| a - b).collect::<Vec<_>>());
    let herm = h7.hermitian_residual();
    let invol = (h7 * h7).max_abs_diff(&id);
    let structure = unitary.max(fixed).max(herm).max(invol);
    outcome(
        others <= 5e-4 && structure <= 1e-10,
        format!("Ĥ_i (i ≠ 7) vs printed: {others:.1e} (tol 5e-4); Ĥ_7 unitary/fixes b_7/Hermitian/involution: {structure:.1e} (tol 1e-10)"),
    )
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for d in 2..=4 {
        match rud::random_round_trips(d, d * d + 2, 20, 40 + d as u64, Execution::default()) {
            Ok(errs) => {
                runs += errs.len();
                worst = errs.iter().copied().fold(worst, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
            }
            Err(e) => return outcome(false, format!("d = {d}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(30),
        format!("{runs} exact round trips (d = 2,3,4; 20 families; every j): max error {worst:.1e} (tol 1e-8), {elapsed:.1?}"),
    )
}

fn sic_fiducials() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [2, 3] {
        let basis = weyl::build_basis(d).unwrap();
        let phi = weyl::fiducial(d).unwrap();
        let target = 1.0 / (d as f64 + 1.0);
        let dev = weyl::fiducial_overlaps(&basis, &phi).unwrap()[1..]
            .iter()
            .map(|o| (o - target).abs())
            .fold(0.0, f64::max);
        let sic = povm::sic_check(&weyl::orbit(&basis, &phi).unwrap()).unwrap();
        pass &= dev <= 1e-12 && sic.is_sic;
        lines.push(format!("d={d}: overlap deviation {dev:.1e}, is_sic = {}", sic.is_sic));
    }
    outcome(pass, lines.join("; "))
}

fn gram_determinant() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [2, 3] {
        let basis = weyl::build_basis(d).unwrap();
        let orbit = weyl::orbit(&basis, &weyl::fiducial(d).unwrap()).unwrap();
        let gram = avgchannel::gram_squared(&orbit).unwrap();
        let closed = avgchannel::sic_gram_determinant(d);
        let dev = (gram.det - closed).abs();
        pass &= dev <= 1e-10;
        lines.push(format!("d={d}: det {:.10} vs {closed:.10} (Δ {dev:.1e})", gram.det));
    }
    outcome(pass, lines.join("; "))
}

fn weyl_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 2..=8 {
        let basis = weyl::build_basis(d).unwrap();
        for (_, v) in commands::wh_identities(&basis, 70 + d as u64).unwrap() {
            worst = worst.max(v);
        }
    }
    outcome(
        worst <= 1e-10,
        format!("d = 2..8: traces, orthogonality, commutation phase, twirl (20 states): max deviation {worst:.1e} (tol 1e-10)"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn single_projector() -> Outcome {
    let mut exact: f64 = 0.0;
    for d in [2, 3] {
        let p = SingleProjectorProtocol::default_for(d, weyl::fiducial(d).unwrap()).unwrap();
        for s in 0..10 {
            let rho = matcore::random_density_matrix_seeded(d, 800 + s);
            let err = p.run(&rho, 0, 0).unwrap().report.frobenius_error_vs_truth.unwrap();
            exact = exact.max(err);
        }
    }
    let p = SingleProjectorProtocol::default_for(2, weyl::fiducial(2).unwrap()).unwrap();
    let rho = matcore::random_density_matrix_seeded(2, 900);
    let shots = [1_000u64, 10_000, 100_000, 1_000_000];
    let medians: Vec<f64> = shots
        .iter()
        .map(|&n| median(p.error_batch(&rho, n, 901 + n, 20, Execution::default()).unwrap()))
        .collect();
    let lx: Vec<f64> = shots.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let k = slope(&lx, &ly);
    let at_1e5 = medians[2];
    outcome(
        exact <= 1e-8 && at_1e5 <= 5e-2 && (-0.65..=-0.35).contains(&k),
        format!("exact error {exact:.1e} (tol 1e-8); d=2 median at 1e5 shots {at_1e5:.2e} (tol 5e-2); log-log slope {k:.3} (in [−0.65, −0.35])"),
    )
}

fn sic_simulation() -> Outcome {
    let mut dev: f64 = 0.0;
    let mut sum_dev: f64 = 0.0;
    for d in [2, 3] {
        let p = SingleProjectorProtocol::default_for(d, weyl::fiducial(d).unwrap()).unwrap();
        for s in 0..20 {
            let rho = matcore::random_density_matrix(d, &mut rng::stream(1000 + d as u64, s));
            let sim = avgchannel::simulate_sic(&p, &rho, 0, 0).unwrap();
            let direct = avgchannel::sic_probabilities_direct(p.channel.basis(), &p.phi, &rho).unwrap();
            for (a, b) in sim.probabilities.iter().zip(&direct) {
                dev = dev.max((a - b).abs());
            }
            sum_dev = sum_dev.max((sim.probabilities.iter().sum::<f64>() - 1.0).abs());
        }
    }
    outcome(
        dev <= 1e-10 && sum_dev <= 1e-10,
        format!("20 states each for d = 2,3: max |simulated − Born| {dev:.1e}, max |Σp − 1| {sum_dev:.1e} (tol 1e-10)"),
    )
}

fn genericity() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [2, 3] {
        let basis = weyl::build_basis(d).unwrap();
        let states = avgchannel::perturb_family(&basis, &weyl::fiducial(d).unwrap(), 100, 0.05, 1200 + d as u64, Execution::default()).unwrap();
        let nonzero = states.iter().filter(|s| s.gram_det.abs() > 1e-10).count();
        pass &= nonzero >= 99;
        lines.push(format!("d={d}: {nonzero}/100 with |det| > 1e-10"));
    }
    outcome(pass, lines.join("; "))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dynatomo");
    let tmp = tempfile::TempDir::new().unwrap();
    let configs = [
        ("rud.json", r#"{"protocol": "rud", "family": {"builder": "example-4-8"}, "shots": 20000}"#),
        ("avg.json", r#"{"protocol": "avgchannel", "dimension": 3, "shots": 20000}"#),
        ("sic.json", r#"{"protocol": "sic-simulate", "dimension": 3, "shots": 20000}"#),
        ("ic.json", r#"{"protocol": "ic-check", "dimension": 3, "family": {"random": {"count": 10}}}"#),
    ];
    for (name, body) in configs {
        fs::write(tmp.path().join(name), body).unwrap();
    }
    let p = |n: &str| tmp.path().join(n).display().to_string();
    let cases: Vec<Vec<String>> = vec![
        vec!["run".into(), p("rud.json")],
        vec!["run".into(), p("avg.json")],
        vec!["sic-simulate".into(), p("sic.json")],
        vec!["ic-check".into(), p("ic.json")],
        vec!["example-4-8".into(), "--shots".into(), "5000".into()],
        vec!["wh-demo".into(), "--d".into(), "5".into()],
        vec!["sic-verify".into(), "--d".into(), "2".into()],
    ];
    let mut compared = 0;
    for (i, args) in cases.iter().enumerate() {
        let mut snaps = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("run{i}_{rep}"));
            let status = Command::new(bin)
                .args(args)
                .args(["--seed", "2024", "--out-dir"])
                .arg(&out)
                .env_remove("DYNATOMO_SEED")
                .output()
                .map(|o| o.status.success())
                .unwrap_or(false);
            if !status {
                return outcome(false, format!("`dynatomo {}` failed", args.join(" ")));
            }
            snaps.push(snapshot(&out));
        }
        if snaps[0].is_empty() || snaps[0] != snaps[1] {
            return outcome(false, format!("`dynatomo {}` reports differ between runs", args.join(" ")));
        }
        compared += snaps[0].len();
    }
    outcome(true, format!("7 subcommands run twice with the same seed: {compared} report files byte-identical"))
}

fn main() -> ExitCode {
    let checks: [Check; 11] = [
        ("qutrit example frame operator", frame_operator),
        ("qutrit example E⁻¹ and E^(-1/2)", frame_inverses),
        ("qutrit example quasi-Householder set", householder_set),
        ("exact-probability round trip", round_trip),
        ("SIC fiducials", sic_fiducials),
        ("Gram-squared determinant at SIC orbits", gram_determinant),
        ("Weyl–Heisenberg identities", weyl_identities),
        ("single-projector reconstruction", single_projector),
        ("SIC simulation vs Born rule", sic_simulation),
        ("genericity of perturbed fiducials", genericity),
        ("byte-identical reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| outcome(false, "panicked"));
        println!("{} [{}] {name}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
