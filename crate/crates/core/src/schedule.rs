//! Time-continuous mixing distributions, sampling grids and the design
//! matrices that tie measured time series to state functionals.

use crate::error::{Error, Result};
use crate::matcore::{self, cr, CMatrix};

pub const THETA_GAP: f64 = 1e-9;
/// Smallest accepted reciprocal condition number.
pub const RCOND_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-12;

/// Ratio between successive default rates and instants.
pub const DEFAULT_RATIO: f64 = 16.0;
pub const DEFAULT_K_SCALE: f64 = 2.0;
pub const DEFAULT_U_SCALE: f64 = 0.25;

/// `μ_i(t) = (1 − e^{−θ_i t})/x` for `i < x`, `μ_x(t) = (1 + Σ e^{−θ_s t})/x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpDecaySchedule {
    thetas: Vec<f64>,
}

impl ExpDecaySchedule {
    /// `thetas` holds the `x − 1` rates.
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        for &t in &thetas {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "decay rate {t} must be positive and finite"
                )));
            }
        }
        let mut sorted = thetas.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[1] - w[0] < THETA_GAP) {
            return Err(Error::InvalidInput(format!(
                "decay rates {} and {} are not distinct",
                w[0], w[1]
            )));
        }
        Ok(Self { thetas })
    }

    /// Geometric rates `θ_s = 16^{s−1}`, `s = 1..x−1`.
    pub fn default_for(x: usize) -> Result<Self> {
        if x == 0 {
            return Err(Error::InvalidInput("schedule needs at least one outcome".into()));
        }
        Self::new((0..x - 1).map(|s| DEFAULT_RATIO.powi(s as i32)).collect())
    }

    pub fn count(&self) -> usize {
        self.thetas.len() + 1
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }
}

pub fn mu_eval(sched: &ExpDecaySchedule, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime { t });
    }
    let x = sched.count() as f64;
    let mut out = Vec::with_capacity(sched.count());
    let mut tail = 1.0;
    for &theta in &sched.thetas {
        out.push(-(-theta * t).exp_m1() / x);
        tail += (-theta * t).exp();
    }
    out.push(tail / x);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    instants: Vec<f64>,
}

impl TimeGrid {
    pub fn new(instants: Vec<f64>) -> Result<Self> {
        if let Some(&t) = instants.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::NegativeTime { t });
        }
        if instants.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "time instants must be strictly increasing".into(),
            ));
        }
        Ok(Self { instants })
    }

    /// `start, start + step, …` (n instants).
    pub fn uniform(n: usize, start: f64, step: f64) -> Result<Self> {
        Self::new((0..n).map(|i| start + step * i as f64).collect())
    }

    /// `t_1 = 0`, `t_i = scale · ratio^{−(n−i)}` for `i ≥ 2`.
    pub fn geometric(n: usize, ratio: f64, scale: f64) -> Result<Self> {
        if !(ratio > 1.0 && scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "geometric grid needs ratio > 1 and scale > 0, got {ratio}, {scale}"
            )));
        }
        Self::new(
            (0..n)
                .map(|i| {
                    if i == 0 {
                        0.0
                    } else {
                        scale * ratio.powi(-((n - 1 - i) as i32))
                    }
                })
                .collect(),
        )
    }

    pub fn default_for_k(x: usize) -> Result<Self> {
        Self::geometric(x, DEFAULT_RATIO, DEFAULT_K_SCALE)
    }

    pub fn default_for_u(d: usize) -> Result<Self> {
        Self::geometric(d * d, DEFAULT_RATIO, DEFAULT_U_SCALE)
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }
}

/// A real square design matrix with its certified determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub matrix: CMatrix,
    pub det: f64,
    pub condition: f64,
}

impl DesignMatrix {
    /// Certifies `1/cond > 1e-12`. The determinant is reported alongside
    /// but not gated on: for well-spread exponential designs `|det|/Π‖row‖`
    /// shrinks geometrically with the size even at modest conditioning.
    pub fn certify(rows: Vec<Vec<f64>>) -> Result<Self> {
        let matrix = CMatrix::from_real_rows(&rows)?;
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch {
                expected: (matrix.rows(), matrix.rows()),
                found: matrix.shape(),
            });
        }
        let det = matcore::determinant(&matrix)?.re;
        let condition = matcore::condition_number(&matrix)?;
        let rcond = 1.0 / condition;
        if !(rcond > RCOND_TOL) {
            return Err(Error::SingularDesign { det, rcond });
        }
        Ok(Self {
            matrix,
            det,
            condition,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `D^{-1} y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::WrongCount {
                expected: self.dim(),
                found: y.len(),
            });
        }
        let rhs = CMatrix::column(&y.iter().map(|&v| cr(v)).collect::<Vec<_>>());
        let sol = matcore::solve_linear(&self.matrix, &rhs)?;
        Ok(sol.as_slice().iter().map(|z| z.re).collect())
    }

    /// Standard deviations of `D⁻¹ y` when each `y_i` is a binomial
    /// frequency of `shots` trials with success probability `p_i`.
    pub fn propagated_std(&self, p: &[f64], shots: u64) -> Result<Vec<f64>> {
        if p.len() != self.dim() {
            return Err(Error::WrongCount {
                expected: self.dim(),
                found: p.len(),
            });
        }
        let inv = matcore::inverse(&self.matrix)?;
        let var: Vec<f64> = p
            .iter()
            .map(|&q| q.clamp(0.0, 1.0) * (1.0 - q.clamp(0.0, 1.0)) / shots as f64)
            .collect();
        Ok((0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|k| inv[(i, k)].re.powi(2) * var[k])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    }
}

/// `K[i][j] = μ_j(t_i) / p̃_j`.
pub fn build_design_k(
    sched: &ExpDecaySchedule,
    grid: &TimeGrid,
    p_tilde: &[f64],
) -> Result<DesignMatrix> {
    let x = sched.count();
    if grid.len() != x || p_tilde.len() != x {
        return Err(Error::WrongCount {
            expected: x,
            found: if grid.len() != x { grid.len() } else { p_tilde.len() },
        });
    }
    if let Some(&p) = p_tilde.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::InvalidInput(format!("weight {p} must be positive")));
    }
    let rows = grid
        .instants()
        .iter()
        .map(|&t| {
            Ok(mu_eval(sched, t)?
                .into_iter()
                .zip(p_tilde)
                .map(|(m, p)| m / p)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    DesignMatrix::certify(rows)
}

/// A family of `d²` decay functions `λ_α(t) ∈ [0, 1]`.
pub trait DecayFamily {
    fn len(&self) -> usize;
    fn eval(&self, t: f64) -> Vec<f64>;
}

/// `λ_α(t) = e^{−γ_α t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpDecayFamily {
    pub gammas: Vec<f64>,
}

impl ExpDecayFamily {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if let Some(&g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "decay rate {g} must be nonnegative and finite"
            )));
        }
        Ok(Self { gammas })
    }

    /// `γ_α = 16^α`.
    pub fn default_for(d: usize) -> Self {
        Self {
            gammas: (0..d * d).map(|a| DEFAULT_RATIO.powi(a as i32)).collect(),
        }
    }
}

impl DecayFamily for ExpDecayFamily {
    fn len(&self) -> usize {
        self.gammas.len()
    }

    fn eval(&self, t: f64) -> Vec<f64> {
        self.gammas.iter().map(|g| (-g * t).exp()).collect()
    }
}

/// Mixing weights of the average channel:
/// `μ₀ = (1 − λ₀ + d²Σλ_k)/d⁴`, `μ_α = (1 − λ₀ + d²(1 − λ_α))/d⁴`.
pub fn channel_mu(lambdas: &[f64], d: usize) -> Result<Vec<f64>> {
    let n = d * d;
    if lambdas.len() != n {
        return Err(Error::WrongCount {
            expected: n,
            found: lambdas.len(),
        });
    }
    if let Some(&l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::LambdaOutOfRange { value: l });
    }
    let d2 = n as f64;
    let d4 = d2 * d2;
    let base = 1.0 - lambdas[0];
    let total: f64 = lambdas.iter().sum();
    let mut mu = Vec::with_capacity(n);
    mu.push((base + d2 * total) / d4);
    for &l in &lambdas[1..] {
        mu.push((base + d2 * (1.0 - l)) / d4);
    }
    Ok(mu)
}

/// `𝒰[i][α] = μ_α(t_i)`.
pub fn build_design_u(
    family: &dyn DecayFamily,
    grid: &TimeGrid,
    d: usize,
) -> Result<DesignMatrix> {
    let n = d * d;
    if grid.len() != n || family.len() != n {
        return Err(Error::WrongCount {
            expected: n,
            found: if grid.len() != n { grid.len() } else { family.len() },
        });
    }
    let rows = grid
        .instants()
        .iter()
        .map(|&t| {
            let mu = channel_mu(&family.eval(t), d)?;
            let s: f64 = mu.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "channel weights at t = {t} sum to {s}"
                )));
            }
            Ok(mu)
        })
        .collect::<Result<Vec<_>>>()?;
    DesignMatrix::certify(rows)
}
