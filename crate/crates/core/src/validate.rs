//! Runtime invariant suite and the random-state samplers it relies on.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::constants::hz_to_rad;
use crate::dynamics::{build_diffusion, build_drift, stability};
use crate::gaussian::{
    check_physicality6, log_negativity, ppt_epsilon_spectral, simon_criterion,
    simon_determinant_form, ReducedCovariance,
};
use crate::meanfield::MeanField;
use crate::params::{DerivedParams, ResolvedDetuning, SignConvention};
use crate::steadystate::{lyapunov_dense, lyapunov_residual, solve_lyapunov_screened};

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

fn block_diag(a: Matrix2<f64>, b: Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
    m
}

/// Independent phase-space rotations of the two modes.
pub fn local_rotation(vr: &ReducedCovariance, theta_a: f64, theta_b: f64) -> ReducedCovariance {
    let s = block_diag(rotation(theta_a), rotation(theta_b));
    ReducedCovariance::from_matrix(s * vr.matrix() * s.transpose())
}

/// Random two-mode Gaussian state: a thermal (or, 30% of the time, pure)
/// diagonal state conjugated by a random symplectic built from rotations,
/// single-mode squeezers, a beam splitter and a two-mode squeezer.
pub fn random_physical_two_mode<R: Rng>(rng: &mut R) -> ReducedCovariance {
    let pure = rng.random_bool(0.3);
    let nu1 = if pure {
        0.5
    } else {
        rng.random_range(0.5..3.0)
    };
    let nu2 = if pure {
        0.5
    } else {
        rng.random_range(0.5..3.0)
    };
    let diag = Matrix4::from_diagonal(&nalgebra::Vector4::new(nu1, nu1, nu2, nu2));

    let tau = std::f64::consts::TAU;
    let r1 = block_diag(
        rotation(rng.random_range(0.0..tau)),
        rotation(rng.random_range(0.0..tau)),
    );
    let r2 = block_diag(
        rotation(rng.random_range(0.0..tau)),
        rotation(rng.random_range(0.0..tau)),
    );
    let (s1, s2) = (
        rng.random_range(-0.7..0.7f64),
        rng.random_range(-0.7..0.7f64),
    );
    let squeeze = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        (-s1).exp(),
        s1.exp(),
        (-s2).exp(),
        s2.exp(),
    ));
    let phi = rng.random_range(0.0..tau);
    let (sp, cp) = phi.sin_cos();
    let mut bs = Matrix4::identity() * cp;
    for k in 0..2 {
        bs[(k, k + 2)] = sp;
        bs[(k + 2, k)] = -sp;
    }
    let r = rng.random_range(0.0..1.0f64);
    let mut tms = Matrix4::identity() * r.cosh();
    tms[(0, 2)] = r.sinh();
    tms[(2, 0)] = r.sinh();
    tms[(1, 3)] = -r.sinh();
    tms[(3, 1)] = -r.sinh();

    let s = r1 * bs * squeeze * tms * r2;
    ReducedCovariance::from_matrix(s * diag * s.transpose())
}

/// Random drift/noise pair over the physically relevant parameter range. The
/// mirror stays in the high-Q regime (γ_m/ω_m ≤ 10⁻⁴): momentum-only Brownian
/// noise can undercut the uncertainty bound at low Q and n̄ ≪ 1.
pub fn random_linearized_point<R: Rng>(rng: &mut R) -> (DerivedParams, MeanField) {
    let s = hz_to_rad(1e7);
    let wm = s * rng.random_range(0.2..2.0);
    let om = s * rng.random_range(0.2..2.0);
    let dp = DerivedParams {
        kappa: s * rng.random_range(0.05..3.0),
        laser_freq: 1.88e15,
        cavity_freq: 1.88e15,
        wavenumber: 6.28e6,
        drive_amplitude: 0.0,
        zeta_mc: 0.0,
        zeta_ac: 0.0,
        atom_freq: om,
        n_thermal: 10f64.powf(rng.random_range(-3.0..3.0)),
        mirror_freq: wm,
        mirror_damping: wm * 10f64.powf(rng.random_range(-6.0..-4.0)),
        temperature: 0.0,
        detuning: ResolvedDetuning::Effective(0.0),
        atom_damping: if rng.random_bool(0.3) {
            om * 10f64.powf(rng.random_range(-6.0..-3.0))
        } else {
            0.0
        },
        sign_convention: SignConvention::Derived,
        stability_tol: 1e-6 * wm,
        allow_unstable: false,
    };
    let mf = MeanField {
        c_s: 1.0,
        q_ms: 0.0,
        q_as: 0.0,
        chi_mc: s * rng.random_range(0.0..1.5),
        chi_ac: s * rng.random_range(0.0..1.5),
        delta_eff: s * rng.random_range(-2.0..2.0),
    };
    (dp, mf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckOutcome {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every invariant check with a fixed seed.
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    vec![
        timed("cavity block steady state is vacuum", check_cavity_vacuum),
        timed("weakly damped mirror is thermal", check_thermal_mirror),
        timed("two-mode squeezed log-negativity", check_two_mode_squeezed),
        timed("epsilon dual computation and Simon agreement", || {
            check_random_states(seed, 1000)
        }),
        timed("Hurwitz and eigenvalue stability agree", || {
            check_hurwitz(seed, 1000)
        }),
        timed("Lyapunov residual and physicality", || {
            check_lyapunov(seed, 500)
        }),
    ]
}

pub fn check_cavity_vacuum() -> Result<String, String> {
    let (k, d) = (4.4e7, 3.1e7);
    let m = DMatrix::from_row_slice(2, 2, &[-k, d, -d, -k]);
    let v = lyapunov_dense(&m, &(DMatrix::identity(2, 2) * k)).map_err(|e| e.to_string())?;
    let err = (v - DMatrix::identity(2, 2) * 0.5).amax();
    if err < 1e-12 {
        Ok(format!("max deviation {err:.1e}"))
    } else {
        Err(format!("max deviation {err:.3e} ≥ 1e-12"))
    }
}

pub fn check_thermal_mirror() -> Result<String, String> {
    let wm = hz_to_rad(10e6);
    let gm = 1e-5 * wm;
    let n = crate::params::thermal_occupation(wm, 0.1).map_err(|e| e.to_string())?;
    let m = DMatrix::from_row_slice(2, 2, &[0.0, wm, -wm, -gm]);
    let d = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, gm * (2.0 * n + 1.0)]);
    let v = lyapunov_dense(&m, &d).map_err(|e| e.to_string())?;
    let rel = (v - DMatrix::identity(2, 2) * (n + 0.5)).amax() / (n + 0.5);
    if rel < 1e-3 {
        Ok(format!("relative deviation {rel:.1e}"))
    } else {
        Err(format!("relative deviation {rel:.3e} ≥ 1e-3"))
    }
}

pub fn check_two_mode_squeezed() -> Result<String, String> {
    let n =
        log_negativity(&ReducedCovariance::two_mode_squeezed(0.5)).map_err(|e| e.to_string())?;
    let err = (n.log_negativity - 1.0).abs();
    if err < 1e-9 {
        Ok(format!("E_N = {:.12}", n.log_negativity))
    } else {
        Err(format!(
            "E_N = {} differs from 1 by {err:e}",
            n.log_negativity
        ))
    }
}

pub fn check_random_states(seed: u64, count: usize) -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut disagreements = 0;
    for _ in 0..count {
        let vr = random_physical_two_mode(&mut rng);
        let n = log_negativity(&vr).map_err(|e| e.to_string())?;
        let spectral = ppt_epsilon_spectral(&vr).map_err(|e| e.to_string())?;
        worst = worst.max((n.epsilon - spectral).abs());
        let simon = simon_criterion(&vr).map_err(|e| e.to_string())?;
        if simon != (n.log_negativity > 0.0) || simon != simon_determinant_form(&vr) {
            disagreements += 1;
        }
    }
    let detail =
        format!("{count} states, worst ε gap {worst:.1e}, {disagreements} Simon disagreements");
    if worst < 1e-9 && disagreements == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn check_hurwitz(seed: u64, count: usize) -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < count {
        let (dp, mf) = random_linearized_point(&mut rng);
        let r = stability(&build_drift(&dp, &mf), dp.stability_tol).map_err(|e| e.to_string())?;
        if r.max_real_part.abs() < 10.0 * dp.stability_tol {
            continue;
        }
        checked += 1;
        mismatches += (r.hurwitz_stable != r.eigen_stable) as usize;
    }
    let detail = format!("{count} drifts, {mismatches} mismatches");
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn check_lyapunov(seed: u64, count: usize) -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x1a9);
    let mut worst: f64 = 0.0;
    let mut nu_min = f64::INFINITY;
    let mut solved = 0;
    while solved < count {
        let (dp, mf) = random_linearized_point(&mut rng);
        let m = build_drift(&dp, &mf);
        let d = build_diffusion(&dp);
        let r = stability(&m, dp.stability_tol).map_err(|e| e.to_string())?;
        if !r.eigen_stable {
            continue;
        }
        let v = solve_lyapunov_screened(&m, &d, &r).map_err(|e| e.to_string())?;
        let dense = |x: &nalgebra::Matrix6<f64>| DMatrix::from_fn(6, 6, |i, j| x[(i, j)]);
        let res = lyapunov_residual(&dense(m.matrix()), &dense(d.matrix()), &dense(v.matrix()));
        worst = worst.max(res / d.matrix().amax());
        nu_min = nu_min.min(check_physicality6(&v).map_err(|e| e.to_string())?.nu_min);
        solved += 1;
    }
    let detail =
        format!("{count} stable drifts, worst relative residual {worst:.1e}, ν_min {nu_min:.12}");
    if worst < 1e-10 && nu_min >= 0.5 - crate::gaussian::PHYSICALITY_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}
