//! Classical fixed point of the driven cavity–mirror–BEC system and the
//! effective couplings of the linearized fluctuations.

use nalgebra::Matrix3;
use thiserror::Error;

use crate::params::{DerivedParams, ResolvedDetuning, SignConvention};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanFieldError {
    #[error("cubic self-consistency has no real non-negative root")]
    NoRealRoot,
    #[error("root I = {root} misses the cubic by relative residual {residual:e}")]
    SolverTolerance { root: f64, residual: f64 },
    #[error("cavity decay must be positive (got {0})")]
    NonPositiveKappa(f64),
}

/// Steady-state amplitudes. The phase of the cavity field is chosen so that
/// `c_s` is real and non-negative; the steady momenta vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanField {
    pub c_s: f64,
    pub q_ms: f64,
    pub q_as: f64,
    /// χ_mc = √2 ζ_mc c_s
    pub chi_mc: f64,
    /// χ_ac = √2 ζ_ac c_s
    pub chi_ac: f64,
    /// Effective detuning Δ.
    pub delta_eff: f64,
}

impl MeanField {
    fn from_amplitude(dp: &DerivedParams, c_s: f64, delta_eff: f64) -> Self {
        let intensity = c_s * c_s;
        Self {
            c_s,
            q_ms: dp.zeta_mc * intensity / dp.mirror_freq,
            q_as: -dp.zeta_ac * intensity / dp.atom_freq,
            chi_mc: dp.zeta_mc * c_s * std::f64::consts::SQRT_2,
            chi_ac: dp.zeta_ac * c_s * std::f64::consts::SQRT_2,
            delta_eff,
        }
    }

    pub fn intensity(&self) -> f64 {
        self.c_s * self.c_s
    }
}

/// A fixed point found in bare-detuning mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub mean_field: MeanField,
    /// False for the middle root of a bistable triple (negative slope dI/d|E|²).
    pub stable: bool,
}

/// Fixed point when the effective detuning Δ is the independent variable.
pub fn steady_state_given_delta(
    dp: &DerivedParams,
    delta: f64,
) -> Result<MeanField, MeanFieldError> {
    if !(dp.kappa > 0.0) {
        return Err(MeanFieldError::NonPositiveKappa(dp.kappa));
    }
    let c_s = dp.drive_amplitude / dp.kappa.hypot(delta);
    Ok(MeanField::from_amplitude(dp, c_s, delta))
}

/// Coefficient η of the intensity-dependent detuning shift Δ = Δ_o − η I.
pub fn detuning_shift_coefficient(dp: &DerivedParams) -> f64 {
    let mirror = dp.zeta_mc * dp.zeta_mc / dp.mirror_freq;
    let atom = dp.zeta_ac * dp.zeta_ac / dp.atom_freq;
    match dp.sign_convention {
        SignConvention::Derived => mirror + atom,
        SignConvention::Paper => mirror - atom,
    }
}

/// All fixed points for a given bare detuning Δ_o, ordered by increasing
/// intracavity intensity I = c_s².
///
/// Solves I (κ² + (Δ_o − η I)²) = |E|² by companion-matrix eigenvalues
/// followed by a Newton polish of each real root.
pub fn steady_state_given_delta_o(
    dp: &DerivedParams,
    delta_o: f64,
) -> Result<Vec<Branch>, MeanFieldError> {
    if !(dp.kappa > 0.0) {
        return Err(MeanFieldError::NonPositiveKappa(dp.kappa));
    }
    let eta = detuning_shift_coefficient(dp);
    let e2 = dp.drive_amplitude * dp.drive_amplitude;
    let cubic = Cubic::new(eta, delta_o, dp.kappa, e2);

    let roots = cubic.real_roots()?;
    let branches = roots
        .into_iter()
        .map(|i| {
            let c_s = i.sqrt();
            Branch {
                mean_field: MeanField::from_amplitude(dp, c_s, delta_o - eta * i),
                stable: cubic.derivative(i) > 0.0,
            }
        })
        .collect();
    Ok(branches)
}

/// Fixed point for the configured detuning. In bare-detuning mode with
/// several roots the lowest-intensity stable branch is returned.
pub fn steady_state(dp: &DerivedParams) -> Result<MeanField, MeanFieldError> {
    match dp.detuning {
        ResolvedDetuning::Effective(d) => steady_state_given_delta(dp, d),
        ResolvedDetuning::Bare(d) => {
            let branches = steady_state_given_delta_o(dp, d)?;
            branches
                .iter()
                .find(|b| b.stable)
                .or(branches.first())
                .map(|b| b.mean_field)
                .ok_or(MeanFieldError::NoRealRoot)
        }
    }
}

/// f(I) = I (κ² + (Δ_o − η I)²) − |E|²
#[derive(Debug, Clone, Copy)]
struct Cubic {
    eta: f64,
    delta_o: f64,
    kappa: f64,
    e2: f64,
}

impl Cubic {
    fn new(eta: f64, delta_o: f64, kappa: f64, e2: f64) -> Self {
        Self {
            eta,
            delta_o,
            kappa,
            e2,
        }
    }

    fn eval(&self, i: f64) -> f64 {
        let d = self.delta_o - self.eta * i;
        i * (self.kappa * self.kappa + d * d) - self.e2
    }

    fn derivative(&self, i: f64) -> f64 {
        let d = self.delta_o - self.eta * i;
        self.kappa * self.kappa + d * d - 2.0 * self.eta * i * d
    }

    // Sum of the magnitudes of the terms, used to normalise the residual.
    fn scale(&self, i: f64) -> f64 {
        let d = self.delta_o - self.eta * i;
        i * (self.kappa * self.kappa + d * d) + self.e2
    }

    fn real_roots(&self) -> Result<Vec<f64>, MeanFieldError> {
        if self.e2 == 0.0 {
            return Ok(vec![0.0]);
        }
        let k2 = self.kappa * self.kappa;
        let candidates: Vec<f64> = if self.eta == 0.0 {
            vec![self.e2 / (k2 + self.delta_o * self.delta_o)]
        } else {
            // η² I³ − 2 η Δ_o I² + (κ² + Δ_o²) I − |E|², made monic.
            let a2 = -2.0 * self.delta_o / self.eta;
            let a1 = (k2 + self.delta_o * self.delta_o) / (self.eta * self.eta);
            let a0 = -self.e2 / (self.eta * self.eta);
            #[rustfmt::skip]
            let companion = Matrix3::new(
                -a2, -a1, -a0,
                1.0, 0.0, 0.0,
                0.0, 1.0, 0.0,
            );
            let eig = companion.complex_eigenvalues();
            let mags: f64 = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
            eig.iter()
                .filter(|z| z.im.abs() <= 1e-6 * mags.max(f64::MIN_POSITIVE))
                .map(|z| z.re)
                .collect()
        };

        let mut roots: Vec<f64> = Vec::with_capacity(3);
        for guess in candidates {
            let root = self.polish(guess);
            if root < 0.0 {
                continue;
            }
            let residual = self.eval(root).abs() / self.scale(root);
            if residual > 1e-10 {
                return Err(MeanFieldError::SolverTolerance { root, residual });
            }
            if !roots.iter().any(|r| (r - root).abs() <= 1e-9 * root.abs()) {
                roots.push(root);
            }
        }
        if roots.is_empty() {
            return Err(MeanFieldError::NoRealRoot);
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        Ok(roots)
    }

    fn polish(&self, mut i: f64) -> f64 {
        for _ in 0..8 {
            let d = self.derivative(i);
            if d == 0.0 {
                break;
            }
            let step = self.eval(i) / d;
            let next = i - step;
            if !next.is_finite() {
                break;
            }
            let done = step.abs() <= 4.0 * f64::EPSILON * next.abs();
            i = next;
            if done {
                break;
            }
        }
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_rad;
    use crate::params::{
        derive_constants, AtomSpec, Detuning, Linewidth, ModelOptions, SystemParams,
    };

    fn fig1(zeta_mc: f64, zeta_ac: f64) -> DerivedParams {
        let wm = hz_to_rad(10e6);
        derive_constants(&SystemParams {
            cavity_length: 1e-3,
            wavelength: 1000e-9,
            linewidth: Linewidth::Finesse(1.07e4),
            power: 50e-3,
            mirror_freq: wm,
            mirror_damping: hz_to_rad(100.0),
            mirror_mass: None,
            temperature: 0.1,
            atom: AtomSpec::Frequency(wm),
            zeta_mc: Some(zeta_mc),
            zeta_ac: Some(zeta_ac),
            atom_number: None,
            lattice_depth_per_photon: None,
            detuning: Detuning::Effective(0.5 * wm),
            cavity_freq: None,
            model: ModelOptions::default(),
        })
        .unwrap()
    }

    #[test]
    fn undriven_cavity_is_empty() {
        let mut dp = fig1(500.0, 350.0);
        dp.drive_amplitude = 0.0;
        let mf = steady_state_given_delta(&dp, 1e7).unwrap();
        assert_eq!(
            (mf.c_s, mf.q_ms, mf.q_as, mf.chi_mc, mf.chi_ac),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
        let b = steady_state_given_delta_o(&dp, 1e7).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].mean_field.c_s, 0.0);
    }

    #[test]
    fn resonant_drive() {
        let dp = fig1(500.0, 350.0);
        let mf = steady_state_given_delta(&dp, 0.0).unwrap();
        assert_eq!(mf.c_s, dp.drive_amplitude / dp.kappa);
    }

    #[test]
    fn fig1a_amplitude_regression() {
        // |E| / sqrt(κ² + (ω_m/2)²) with |E| = 3.3283197130795e12, κ = 4.4010550638057e7.
        let dp = fig1(500.0, 350.0);
        let mf = steady_state_given_delta(&dp, 0.5 * dp.mirror_freq).unwrap();
        assert!(
            (mf.c_s / 61_552.343_979_846_9 - 1.0).abs() < 1e-9,
            "{}",
            mf.c_s
        );
        assert_eq!(mf.chi_mc, 500.0 * mf.c_s * std::f64::consts::SQRT_2);
        assert_eq!(mf.chi_ac, 350.0 * mf.c_s * std::f64::consts::SQRT_2);
        assert!(mf.q_ms > 0.0 && mf.q_as < 0.0);
    }

    #[test]
    fn linear_cavity_single_root() {
        let mut dp = fig1(0.0, 0.0);
        dp.zeta_mc = 0.0;
        dp.zeta_ac = 0.0;
        let delta_o = 0.3 * dp.mirror_freq;
        let b = steady_state_given_delta_o(&dp, delta_o).unwrap();
        assert_eq!(b.len(), 1);
        let expected = dp.drive_amplitude.powi(2) / (dp.kappa.powi(2) + delta_o * delta_o);
        assert!((b[0].mean_field.intensity() / expected - 1.0).abs() < 1e-12);
        assert!(b[0].stable);
    }

    #[test]
    fn weak_coupling_close_to_linear() {
        let mut dp = fig1(1e-3, 1e-3);
        dp.drive_amplitude = 1e9;
        let delta_o = 0.5 * dp.mirror_freq;
        let lin = dp.drive_amplitude.powi(2) / (dp.kappa.powi(2) + delta_o * delta_o);
        let eta = detuning_shift_coefficient(&dp);
        assert!(eta * lin < 1e-3 * dp.kappa);
        let b = steady_state_given_delta_o(&dp, delta_o).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].mean_field.intensity() / lin - 1.0).abs() < 0.01);
    }

    // Root count by brute-force sign changes of the cubic on a fine grid.
    fn sign_changes(c: &Cubic, hi: f64, n: usize) -> usize {
        let mut count = 0;
        let mut prev = c.eval(0.0);
        for k in 1..=n {
            let v = c.eval(hi * k as f64 / n as f64);
            if v.signum() != prev.signum() {
                count += 1;
            }
            prev = v;
        }
        count
    }

    #[test]
    fn bistable_three_roots() {
        // Normalised units: κ = 1, η = 1, Δ_o = 3. Bistability needs Δ_o > √3 κ.
        let mut dp = fig1(1.0, 0.0);
        dp.kappa = 1.0;
        dp.mirror_freq = 1.0;
        dp.zeta_mc = 1.0;
        dp.zeta_ac = 0.0;
        let delta_o = 3.0;
        // Scan |E| until the cubic discriminant turns negative (three real roots).
        let mut found = None;
        for k in 1..4000 {
            let e2 = k as f64 * 0.005;
            let c = Cubic::new(1.0, delta_o, 1.0, e2);
            if sign_changes(&c, 10.0, 200_000) == 3 {
                found = Some(e2);
                break;
            }
        }
        let e2 = found.expect("no bistable drive found");
        dp.drive_amplitude = e2.sqrt();
        let b = steady_state_given_delta_o(&dp, delta_o).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b[0].stable && !b[1].stable && b[2].stable);
        for br in &b {
            let c = Cubic::new(1.0, delta_o, 1.0, e2);
            let i = br.mean_field.intensity();
            assert!(c.eval(i).abs() / c.scale(i) < 1e-10);
            assert!((br.mean_field.delta_eff - (delta_o - i)).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_and_delta_o_modes_agree() {
        for conv in [SignConvention::Derived, SignConvention::Paper] {
            let mut dp = fig1(800.0, 560.0);
            dp.sign_convention = conv;
            let eta = detuning_shift_coefficient(&dp);
            for x in [-1.5, -0.2, 0.0, 0.4, 0.5, 1.0, 2.0] {
                let delta = x * dp.mirror_freq;
                let mf = steady_state_given_delta(&dp, delta).unwrap();
                let delta_o = delta + eta * mf.intensity();
                let branches = steady_state_given_delta_o(&dp, delta_o).unwrap();
                let hit = branches
                    .iter()
                    .any(|b| (b.mean_field.c_s / mf.c_s - 1.0).abs() < 1e-8);
                assert!(hit, "{conv:?} x={x}: {branches:?} vs {}", mf.c_s);
            }
        }
    }

    #[test]
    fn sign_conventions_differ_only_in_atomic_term() {
        let mut dp = fig1(800.0, 560.0);
        let d = detuning_shift_coefficient(&dp);
        dp.sign_convention = SignConvention::Paper;
        let p = detuning_shift_coefficient(&dp);
        assert!((d - p - 2.0 * 560.0 * 560.0 / dp.atom_freq).abs() < 1e-12 * d);
    }

    #[test]
    fn amplitude_non_increasing_in_abs_delta() {
        let dp = fig1(500.0, 350.0);
        let mut prev = f64::INFINITY;
        for k in 0..400 {
            let delta = k as f64 * 0.01 * dp.mirror_freq;
            let a = steady_state_given_delta(&dp, delta).unwrap().c_s;
            let b = steady_state_given_delta(&dp, -delta).unwrap().c_s;
            assert_eq!(a, b);
            assert!(a <= prev);
            prev = a;
        }
    }
}
