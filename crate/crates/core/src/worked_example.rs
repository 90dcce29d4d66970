//! The nine-vector qutrit example: data, closed forms and the printed
//! reference matrices (4 decimals).
//!
//! The six character vectors are stored with their coordinates reversed
//! relative to the usual display: in that orientation the frame operator is
//! exactly `[[1,0,0],[0,1,−1/3],[0,−1/3,1]]`, so `E`, `E⁻¹`, `E^{-1/2}` and
//! the POVM all come out of the regular pipeline. The printed directions
//! `b_i` and quasi-Householder matrices were computed from the displayed
//! orientation; they are kept verbatim as [`printed_directions`] and
//! [`printed_h_hat`] and checked against the construction in tests.

use std::f64::consts::PI;

use crate::error::Result;
use crate::householder::{IndexOverride, NormalizedDirection, Overrides, QuasiHouseholderSet};
use crate::matcore::{c, cr, norm, CMatrix, C64};
use crate::povm::{ProjectorFamily, SubnormalizedProjector};

pub const DIMENSION: usize = 3;
pub const WEIGHT: f64 = 1.0 / 3.0;
/// Reference outcome `j = 7`, 0-based.
pub const REFERENCE_INDEX: usize = 6;

fn omega() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

fn unit(k: usize) -> Vec<C64> {
    (0..DIMENSION).map(|i| cr(if i == k { 1.0 } else { 0.0 })).collect()
}

/// `|v_1⟩ … |v_9⟩` in displayed orientation.
pub fn displayed_vectors() -> Vec<Vec<C64>> {
    let w = omega();
    let wb = w.conj();
    let one = cr(1.0);
    let s = 1.0 / 3f64.sqrt();
    let chars = [
        [one, w, wb],
        [one, wb, w],
        [w, wb, wb],
        [w, one, w],
        [wb, one, wb],
        [wb, w, w],
    ];
    let mut v: Vec<Vec<C64>> = chars
        .iter()
        .map(|row| row.iter().map(|z| z * s).collect())
        .collect();
    v.extend((0..DIMENSION).map(unit));
    v
}

/// Family used by the protocol: character vectors reversed, then `e_1..e_3`.
pub fn family_vectors() -> Vec<Vec<C64>> {
    displayed_vectors()
        .into_iter()
        .enumerate()
        .map(|(i, mut v)| {
            if i < 6 {
                v.reverse();
            }
            v
        })
        .collect()
}

pub fn family() -> ProjectorFamily {
    let projectors = family_vectors()
        .into_iter()
        .map(|v| SubnormalizedProjector::new(WEIGHT, v).expect("unit vectors"))
        .collect();
    ProjectorFamily::new(DIMENSION, projectors).expect("nine projectors in dimension 3")
}

fn kappa() -> f64 {
    (9.0 + 6.0 * 2f64.sqrt()).sqrt() / 4.0
}

fn sigma() -> f64 {
    (9.0 - 6.0 * 2f64.sqrt()).sqrt() / 4.0
}

pub fn frame_operator_closed_form() -> CMatrix {
    let t = -1.0 / 3.0;
    CMatrix::from_real_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, t],
        vec![0.0, t, 1.0],
    ])
    .expect("finite")
}

pub fn inverse_closed_form() -> CMatrix {
    CMatrix::from_real_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 9.0 / 8.0, 3.0 / 8.0],
        vec![0.0, 3.0 / 8.0, 9.0 / 8.0],
    ])
    .expect("finite")
}

/// `[[1,0,0],[0,κ,σ],[0,σ,κ]]`, `κ = √(9+6√2)/4`, `σ = √(9−6√2)/4`.
pub fn inv_sqrt_closed_form() -> CMatrix {
    let (k, s) = (kappa(), sigma());
    CMatrix::from_real_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, k, s],
        vec![0.0, s, k],
    ])
    .expect("finite")
}

/// Printed closed forms of `b_1 … b_9` with `λ_i = ‖E^{-1/2}v_i‖` for the
/// displayed vectors and `z_i = 1`.
pub fn printed_directions() -> Vec<NormalizedDirection> {
    let (k, s) = (kappa(), sigma());
    let r46 = 46f64.sqrt();
    let r138 = 138f64.sqrt();
    let s3 = 3f64.sqrt();
    let beta = -r46 * (k + s) / 23.0;
    let gamma = r138 * (k - s) / 23.0;
    let a = 2.0 * r46 / 23.0 * (k - s / 2.0);
    let b = 2.0 * r46 / 23.0 * (s - k / 2.0);
    let cc = r138 / 23.0;
    let q = 2.0 * 2f64.sqrt() / 3.0;

    let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    let b1 = vec![cr(2.0 * r46 / 23.0), c(beta, gamma), c(beta, -gamma)];
    let tail3 = c(r46 * beta / 8.0, r138 * beta / 8.0);
    let b3 = vec![c(-0.25, s3 / 4.0), tail3, tail3];
    let b4 = vec![c(-s3 * cc / 3.0, cc), c(a, s * cc), c(b, k * cc)];
    let dirs = vec![
        b1.clone(),
        conj(&b1),
        b3.clone(),
        b4.clone(),
        conj(&b4),
        conj(&b3),
        unit(0),
        vec![cr(0.0), cr(q * k), cr(q * s)],
        vec![cr(0.0), cr(q * s), cr(q * k)],
    ];
    let e = inv_sqrt_closed_form();
    dirs.into_iter()
        .zip(displayed_vectors())
        .map(|(b, v)| NormalizedDirection {
            lambda: norm(&e.mat_vec(&v)),
            b,
            z: cr(1.0),
        })
        .collect()
}

/// Printed `η_1 … η_9`.
pub fn printed_eta() -> Vec<C64> {
    let h = 3f64.sqrt() / 2.0;
    let (one, up, down) = (cr(1.0), c(0.5, h), c(0.5, -h));
    vec![one, one, up, up, down, down, one, one, one]
}

/// Case-1 reflector reproducing the printed `Ĥ_7`.
pub fn printed_u7() -> Vec<C64> {
    let r5 = 5f64.sqrt();
    let tail = -c(0.5476, 0.8293) * (3.0 / (2.0 * r5));
    let u = vec![cr(0.0), cr(r5 / 3.0), tail];
    let n = norm(&u);
    u.into_iter().map(|z| z / n).collect()
}

/// The `ũ_7` override (plus nothing else) used by the protocol run.
pub fn protocol_overrides() -> Overrides {
    let mut ov = Overrides::new();
    ov.insert(
        REFERENCE_INDEX,
        IndexOverride {
            u_tilde: Some(printed_u7()),
            ..Default::default()
        },
    );
    ov
}

/// Quasi-Householder set from the printed directions with printed `η`.
pub fn printed_set() -> Result<QuasiHouseholderSet> {
    let mut ov = Overrides::new();
    for (i, eta) in printed_eta().into_iter().enumerate() {
        ov.insert(
            i,
            IndexOverride {
                eta: Some(eta),
                u_tilde: (i == REFERENCE_INDEX).then(printed_u7),
                ..Default::default()
            },
        );
    }
    QuasiHouseholderSet::from_directions(&[WEIGHT; 9], printed_directions(), REFERENCE_INDEX, &ov)
}

fn rows(r: [[(f64, f64); 3]; 3]) -> CMatrix {
    CMatrix::from_rows(
        &r.iter()
            .map(|row| row.iter().map(|&(re, im)| c(re, im)).collect())
            .collect::<Vec<_>>(),
    )
    .expect("finite")
}

/// Printed `Ĥ_1 … Ĥ_9` (4 decimals).
pub fn printed_h_hat() -> Vec<CMatrix> {
    let h1 = rows([
        [(0.5898, 0.0), (-0.3612, -0.4423), (-0.3612, 0.4423)],
        [(-0.3612, 0.4423), (0.2051, 0.0), (0.1590, 0.7788)],
        [(-0.3612, -0.4423), (0.1590, -0.7788), (0.2051, 0.0)],
    ]);
    let h3 = rows([
        [(-0.25, 0.4330), (0.6124, 0.0), (0.6124, 0.0)],
        [(-0.3062, -0.5303), (0.3750, -0.6495), (-0.1250, 0.2165)],
        [(-0.3062, -0.5303), (-0.1250, 0.2165), (0.3750, -0.6495)],
    ]);
    let h4 = rows([
        [(-0.2949, 0.5108), (-0.3612, -0.4423), (-0.3612, 0.4423)],
        [(0.5636, 0.0916), (0.3974, -0.6884), (0.1946, 0.0650)],
        [(-0.2025, 0.5339), (-0.1535, -0.1360), (0.3974, -0.6884)],
    ]);
    let h7 = rows([
        [(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
        [(0.0, 0.0), (-0.1111, 0.0), (0.5476, -0.8293)],
        [(0.0, 0.0), (0.5476, 0.8293), (0.1111, 0.0)],
    ]);
    let h8 = rows([
        [(0.0, 0.0), (0.9856, 0.0), (0.1691, 0.0)],
        [(0.9856, 0.0), (0.0286, 0.0), (-0.1667, 0.0)],
        [(0.1691, 0.0), (-0.1667, 0.0), (0.9714, 0.0)],
    ]);
    let h9 = rows([
        [(0.0, 0.0), (0.1691, 0.0), (0.9856, 0.0)],
        [(0.1691, 0.0), (0.9714, 0.0), (-0.1667, 0.0)],
        [(0.9856, 0.0), (-0.1667, 0.0), (0.0286, 0.0)],
    ]);
    vec![
        h1.clone(),
        h1.conj(),
        h3.clone(),
        h4.clone(),
        h4.conj(),
        h3.conj(),
        h7,
        h8,
        h9,
    ]
}

/// Indices whose printed matrix is a Case-2 construction (all but `j`).
pub fn case2_indices() -> impl Iterator<Item = usize> {
    (0..9).filter(|&i| i != REFERENCE_INDEX)
}
