//! Reference matrices for the nine-vector qutrit example, shipped as JSON.

use dynatomo::matcore::CMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{to_c64, Complex};

const FRAME_OPERATOR: &str = include_str!("../golden/frame_operator.json");
const FRAME_INVERSE: &str = include_str!("../golden/frame_inverse.json");
const FRAME_INV_SQRT: &str = include_str!("../golden/frame_inv_sqrt.json");
const H_HAT: &str = include_str!("../golden/h_hat.json");

type Rows = Vec<Vec<Complex>>;

#[derive(Deserialize)]
#[allow(dead_code)]
struct GoldenMatrix {
    description: String,
    tolerance: f64,
    matrix: Rows,
}

#[derive(Deserialize)]
#[allow(dead_code)]
struct GoldenSet {
    description: String,
    tolerance: f64,
    matrices: Vec<Rows>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub name: String,
    pub tolerance: f64,
    pub max_delta: f64,
    /// One line per entry outside tolerance.
    pub mismatches: Vec<String>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "max_delta": self.max_delta,
            "tolerance": self.tolerance,
            "pass": self.passed(),
        })
    }
}

fn compare(name: &str, expected: &Rows, actual: &CMatrix, tolerance: f64) -> Comparison {
    let mut max_delta: f64 = 0.0;
    let mut mismatches = Vec::new();
    if expected.len() != actual.rows() || expected.iter().any(|r| r.len() != actual.cols()) {
        mismatches.push(format!("{name}: shape differs from golden"));
        return Comparison {
            name: name.into(),
            tolerance,
            max_delta: f64::INFINITY,
            mismatches,
        };
    }
    for (r, row) in expected.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            let want = to_c64(z);
            let got = actual[(r, c)];
            let delta = (got - want).norm();
            max_delta = max_delta.max(delta);
            if !(delta <= tolerance) {
                mismatches.push(format!(
                    "{name}[{}][{}]: expected {} {:+}i, got {} {:+}i (delta {delta:e})",
                    r + 1,
                    c + 1,
                    want.re,
                    want.im,
                    got.re,
                    got.im
                ));
            }
        }
    }
    Comparison {
        name: name.into(),
        tolerance,
        max_delta,
        mismatches,
    }
}

fn single(name: &str, text: &str, actual: &CMatrix) -> Comparison {
    let g: GoldenMatrix = serde_json::from_str(text).expect("shipped golden file parses");
    compare(name, &g.matrix, actual, g.tolerance)
}

pub fn frame_operator(actual: &CMatrix) -> Comparison {
    single("frame_operator", FRAME_OPERATOR, actual)
}

pub fn frame_inverse(actual: &CMatrix) -> Comparison {
    single("frame_inverse", FRAME_INVERSE, actual)
}

pub fn frame_inv_sqrt(actual: &CMatrix) -> Comparison {
    single("frame_inv_sqrt", FRAME_INV_SQRT, actual)
}

/// Compares `Ĥ_1 … Ĥ_9`; the result is named `h_hat_<i>` (1-based).
pub fn h_hat(actual: &[CMatrix]) -> Vec<Comparison> {
    let g: GoldenSet = serde_json::from_str(H_HAT).expect("shipped golden file parses");
    if g.matrices.len() != actual.len() {
        return vec![Comparison {
            name: "h_hat".into(),
            tolerance: g.tolerance,
            max_delta: f64::INFINITY,
            mismatches: vec![format!(
                "h_hat: expected {} matrices, got {}",
                g.matrices.len(),
                actual.len()
            )],
        }];
    }
    g.matrices
        .iter()
        .zip(actual)
        .enumerate()
        .map(|(i, (e, a))| compare(&format!("h_hat_{}", i + 1), e, a, g.tolerance))
        .collect()
}
