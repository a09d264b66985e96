//! Parameter builders shared by unit tests.

use rand::rngs::StdRng;

use crate::dynamics::{build_drift, DriftMatrix};
use crate::meanfield::MeanField;
use crate::params::{DerivedParams, ResolvedDetuning, SignConvention};

pub fn derived(wm: f64, om: f64, kappa: f64, gm: f64, n: f64) -> DerivedParams {
    DerivedParams {
        kappa,
        laser_freq: 1.88e15,
        cavity_freq: 1.88e15,
        wavenumber: 6.28e6,
        drive_amplitude: 0.0,
        zeta_mc: 0.0,
        zeta_ac: 0.0,
        atom_freq: om,
        n_thermal: n,
        mirror_freq: wm,
        mirror_damping: gm,
        temperature: 0.0,
        detuning: ResolvedDetuning::Effective(0.0),
        atom_damping: 0.0,
        sign_convention: SignConvention::Derived,
        stability_tol: 1e-6 * wm,
        allow_unstable: false,
    }
}

pub fn mf(chi_mc: f64, chi_ac: f64, delta: f64) -> MeanField {
    MeanField {
        c_s: 1.0,
        q_ms: 0.0,
        q_as: 0.0,
        chi_mc,
        chi_ac,
        delta_eff: delta,
    }
}

pub use crate::validate::random_linearized_point as random_point;

pub fn random_drift(rng: &mut StdRng) -> (DriftMatrix, f64) {
    let (dp, m) = random_point(rng);
    (build_drift(&dp, &m), dp.stability_tol)
}
