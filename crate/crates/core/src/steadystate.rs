//! Steady-state covariance from the Lyapunov equation M V + V Mᵀ = −D, and a
//! Runge-Kutta integrator of the moment equation V̇ = M V + V Mᵀ + D used as
//! an independent cross-check.

use nalgebra::{DMatrix, DVector, Matrix6};
use thiserror::Error;

use crate::dynamics::{
    eigenvalues, mode, stability, DiffusionMatrix, DriftMatrix, DynamicsError, StabilityReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyStateError {
    #[error("drift matrix is not asymptotically stable (max Re λ = {max_real_part:e})")]
    UnstableDrift { max_real_part: f64 },
    #[error("Lyapunov system is singular (pivot ratio {pivot_ratio:e})")]
    SingularSystem { pivot_ratio: f64 },
    #[error("Lyapunov residual {residual:e} exceeds tolerance {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("integration diverged; step {step:e} s too large")]
    StepTooLarge { step: f64 },
    #[error("invalid integration setup: {0}")]
    BadIntegration(&'static str),
    #[error("dimension mismatch: drift {drift}×{drift}, diffusion {diffusion}×{diffusion}")]
    Dimension { drift: usize, diffusion: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Symmetrized second moments, V_ij = ⟨δR_i δR_j + δR_j δR_i⟩/2, vacuum = I/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix6<f64>);

impl CovarianceMatrix {
    /// Symmetrizes the input.
    pub fn from_matrix(m: Matrix6<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn vacuum() -> Self {
        Self(Matrix6::identity() * 0.5)
    }

    pub fn zeros() -> Self {
        Self(Matrix6::zeros())
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0 - other.0).amax()
    }
}

/// Pivot ratio below which the Kronecker system is reported singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-13;
/// Residual bound relative to ‖D‖_max.
const RESIDUAL_REL: f64 = 1e-10;

/// Solve for the steady state, screening the drift with the default
/// stability tolerance 10⁻⁶ ω_m (ω_m read off the drift; the largest |M_ij|
/// stands in when the mirror block is absent).
pub fn solve_lyapunov(
    m: &DriftMatrix,
    d: &DiffusionMatrix,
) -> Result<CovarianceMatrix, SteadyStateError> {
    let wm = m.matrix()[(mode::Q_M, mode::P_M)].abs();
    let scale = if wm > 0.0 { wm } else { m.matrix().amax() };
    let tol = 1e-6 * scale.max(f64::MIN_POSITIVE);
    let report = stability(m, tol)?;
    solve_lyapunov_screened(m, d, &report)
}

/// Solve for the steady state given an already computed stability report.
pub fn solve_lyapunov_screened(
    m: &DriftMatrix,
    d: &DiffusionMatrix,
    report: &StabilityReport,
) -> Result<CovarianceMatrix, SteadyStateError> {
    if !report.eigen_stable {
        return Err(SteadyStateError::UnstableDrift {
            max_real_part: report.max_real_part,
        });
    }
    solve_lyapunov_unchecked(m, d)
}

/// Solve without the stability precondition. The result is only the
/// long-time limit when M is stable.
pub fn solve_lyapunov_unchecked(
    m: &DriftMatrix,
    d: &DiffusionMatrix,
) -> Result<CovarianceMatrix, SteadyStateError> {
    let v = lyapunov_dense(&to_dense(m.matrix()), &to_dense(d.matrix()))?;
    Ok(CovarianceMatrix::from_matrix(Matrix6::from_fn(|i, j| {
        v[(i, j)]
    })))
}

/// Dense Lyapunov solve for any square size via (I⊗M + M⊗I) vec V = −vec D.
pub fn lyapunov_dense(
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<DMatrix<f64>, SteadyStateError> {
    let n = m.nrows();
    if !m.is_square() || d.shape() != m.shape() {
        return Err(SteadyStateError::Dimension {
            drift: n,
            diffusion: d.nrows(),
        });
    }
    let s = m.amax();
    let s = if s > 0.0 { s } else { 1.0 };
    let a = m / s;
    let rhs = -(d / s);

    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&a) + a.kronecker(&eye);
    let lu = k.clone().lu();
    let u = lu.u();
    let diag = u.diagonal().map(f64::abs);
    let pivot_ratio = diag.min() / diag.max();
    if !(pivot_ratio > SINGULAR_PIVOT_RATIO) {
        return Err(SteadyStateError::SingularSystem { pivot_ratio });
    }

    let b = DVector::from_column_slice(rhs.as_slice());
    let mut x = lu
        .solve(&b)
        .ok_or(SteadyStateError::SingularSystem { pivot_ratio })?;
    // One step of iterative refinement.
    let r = &b - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let v = DMatrix::from_column_slice(n, n, x.as_slice());
    let v = (&v + v.transpose()) * 0.5;

    let residual = lyapunov_residual(m, d, &v);
    let bound = RESIDUAL_REL * d.amax().max(f64::MIN_POSITIVE);
    if !(residual < bound) {
        return Err(SteadyStateError::Residual { residual, bound });
    }
    Ok(v)
}

/// ‖M V + V Mᵀ + D‖_max.
pub fn lyapunov_residual(m: &DMatrix<f64>, d: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let mv = m * v;
    (&mv + mv.transpose() + d).amax()
}

/// min(0.01/ω_max, 0.01/κ), with ω_max the largest |Im λ| of M and κ the
/// cavity decay read off the drift.
pub fn default_step(m: &DriftMatrix) -> Result<f64, SteadyStateError> {
    let omega_max = eigenvalues(m.matrix())?
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    let mut step = f64::INFINITY;
    if omega_max > 0.0 {
        step = step.min(0.01 / omega_max);
    }
    let kappa = m.kappa();
    if kappa > 0.0 {
        step = step.min(0.01 / kappa);
    }
    if step.is_finite() {
        Ok(step)
    } else {
        Err(SteadyStateError::BadIntegration("drift has no time scale"))
    }
}

pub fn integrate_moments(
    m: &DriftMatrix,
    d: &DiffusionMatrix,
    v0: &CovarianceMatrix,
    horizon: f64,
    step: f64,
) -> Result<CovarianceMatrix, SteadyStateError> {
    let v = integrate_moments_dense(
        &to_dense(m.matrix()),
        &to_dense(d.matrix()),
        &to_dense(v0.matrix()),
        horizon,
        step,
    )?;
    Ok(CovarianceMatrix::from_matrix(Matrix6::from_fn(|i, j| {
        v[(i, j)]
    })))
}

/// Step counts up to this are integrated step by step; longer runs compose
/// the one-step map by repeated squaring.
pub const DIRECT_STEP_LIMIT: u64 = 20_000;

/// Classical RK4 on V̇ = M V + V Mᵀ + D with `round(horizon/step)` equal
/// steps ending exactly at `horizon`. Each step is symmetrized.
pub fn integrate_moments_dense(
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &DMatrix<f64>,
    horizon: f64,
    step: f64,
) -> Result<DMatrix<f64>, SteadyStateError> {
    let n_steps = step_count(horizon, step)?;
    if n_steps <= DIRECT_STEP_LIMIT {
        integrate_direct(m, d, v0, horizon, n_steps)
    } else {
        integrate_composed(m, d, v0, horizon, n_steps)
    }
}

fn step_count(horizon: f64, step: f64) -> Result<u64, SteadyStateError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(SteadyStateError::BadIntegration("step must be positive"));
    }
    if !(horizon >= step) || !horizon.is_finite() {
        return Err(SteadyStateError::BadIntegration(
            "horizon must be at least one step",
        ));
    }
    let n = (horizon / step).round();
    if n > 1e18 {
        return Err(SteadyStateError::BadIntegration("too many steps"));
    }
    Ok(n.max(1.0) as u64)
}

fn rk4_increment(
    m: &DMatrix<f64>,
    d: Option<&DMatrix<f64>>,
    v: &DMatrix<f64>,
    h: f64,
) -> DMatrix<f64> {
    let f = |x: &DMatrix<f64>| {
        let mx = m * x;
        let mut out = &mx + mx.transpose();
        if let Some(d) = d {
            out += d;
        }
        out
    };
    let k1 = f(v);
    let k2 = f(&(v + &k1 * (h / 2.0)));
    let k3 = f(&(v + &k2 * (h / 2.0)));
    let k4 = f(&(v + &k3 * h));
    (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

fn divergence_scale(d: &DMatrix<f64>, v0: &DMatrix<f64>, horizon: f64) -> f64 {
    v0.amax().max(horizon * d.amax()).max(f64::MIN_POSITIVE)
}

fn check_divergence(v: &DMatrix<f64>, scale: f64, h: f64) -> Result<(), SteadyStateError> {
    let norm = v.amax();
    if !norm.is_finite() || norm > 1e12 * scale {
        Err(SteadyStateError::StepTooLarge { step: h })
    } else {
        Ok(())
    }
}

fn integrate_direct(
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &DMatrix<f64>,
    horizon: f64,
    n_steps: u64,
) -> Result<DMatrix<f64>, SteadyStateError> {
    let h = horizon / n_steps as f64;
    let scale = divergence_scale(d, v0, horizon);
    let mut v = (v0 + v0.transpose()) * 0.5;
    for _ in 0..n_steps {
        v += rk4_increment(m, Some(d), &v, h);
        v = (&v + v.transpose()) * 0.5;
        check_divergence(&v, scale, h)?;
    }
    Ok(v)
}

/// The RK4 step is affine in V. On the symmetric subspace (coordinates
/// `vech`, plus one affine slot) it is a matrix I + B; the n-step map is
/// (I + B)ⁿ, accumulated as I + Bₙ so the small increments keep full
/// relative precision.
fn integrate_composed(
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &DMatrix<f64>,
    horizon: f64,
    n_steps: u64,
) -> Result<DMatrix<f64>, SteadyStateError> {
    let n = m.nrows();
    let h = horizon / n_steps as f64;
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let dim = idx.len() + 1;

    let mut b = DMatrix::<f64>::zeros(dim, dim);
    for (col, &(i, j)) in idx.iter().enumerate() {
        let mut basis = DMatrix::<f64>::zeros(n, n);
        basis[(i, j)] = 1.0;
        basis[(j, i)] = 1.0;
        let inc = rk4_increment(m, None, &basis, h);
        for (row, &(p, q)) in idx.iter().enumerate() {
            b[(row, col)] = inc[(p, q)];
        }
    }
    let inc0 = rk4_increment(m, Some(d), &DMatrix::zeros(n, n), h);
    for (row, &(p, q)) in idx.iter().enumerate() {
        b[(row, dim - 1)] = inc0[(p, q)];
    }

    // Binary powering of (I + B): (I + X)(I + Y) = I + X + Y + XY.
    let mut acc: Option<DMatrix<f64>> = None;
    let mut base = b;
    let mut k = n_steps;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => {
                    let prod = &a * &base;
                    a + &base + prod
                }
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        let sq = &base * &base;
        base = &base * 2.0 + sq;
        if !base.amax().is_finite() {
            return Err(SteadyStateError::StepTooLarge { step: h });
        }
    }
    let total = acc.expect("at least one step");

    let mut x = DVector::<f64>::zeros(dim);
    for (row, &(p, q)) in idx.iter().enumerate() {
        x[row] = 0.5 * (v0[(p, q)] + v0[(q, p)]);
    }
    x[dim - 1] = 1.0;
    let y = &x + &total * &x;

    let mut v = DMatrix::<f64>::zeros(n, n);
    for (row, &(p, q)) in idx.iter().enumerate() {
        v[(p, q)] = y[row];
        v[(q, p)] = y[row];
    }
    check_divergence(&v, divergence_scale(d, v0, horizon), h)?;
    Ok(v)
}

fn to_dense(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(6, 6, |i, j| m[(i, j)])
}
