//! Experiment-level inputs and the derived physical quantities used by the
//! rest of the pipeline.
//!
//! Every frequency stored here is angular (rad/s). Conversions from Hz only
//! happen at the edges (config files, presets, CLI flags).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::constants::{C_LIGHT, HBAR, K_B, TWO_PI};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{name}` must be positive (got {value})")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("field `{name}` must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("frequency must be positive (got {0} rad/s)")]
    NonPositiveFrequency(f64),
    #[error("fields `{0}` and `{1}` are mutually exclusive")]
    Conflicting(&'static str, &'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

/// Which form of the effective-detuning self-consistency to use in
/// bare-detuning mode.
///
/// `Derived` substitutes the fixed point of the nonlinear Langevin equations
/// directly, giving a detuning shift `|c_s|² (ζ_mc²/ω_m + ζ_ac²/Ω)`.
/// `Paper` flips the sign of the atomic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Derived,
    Paper,
}

impl FromStr for SignConvention {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "derived" => Ok(Self::Derived),
            "paper" => Ok(Self::Paper),
            other => Err(ParamsError::UnknownParameter(format!(
                "sign convention `{other}`"
            ))),
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Derived => "derived",
            Self::Paper => "paper",
        })
    }
}

/// Cavity loss, given either as a finesse or directly as the amplitude decay rate κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Linewidth {
    Finesse(f64),
    Decay(f64),
}

/// The atomic density mode, given either by its frequency Ω or by the atomic mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomSpec {
    Frequency(f64),
    Mass(f64),
}

/// Detuning input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detuning {
    /// Effective (mean-field shifted) detuning Δ, the independent variable of all figures.
    Effective(f64),
    /// Back-action-shifted bare detuning Δ_o; Δ follows from the cubic self-consistency.
    Bare(f64),
    /// Cavity-laser detuning Δ_c; needs `atom_number` and `lattice_depth_per_photon`.
    Cavity(f64),
}

/// Detuning after resolving Δ_c into Δ_o.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedDetuning {
    Effective(f64),
    Bare(f64),
}

/// Numerical switches that are not physical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub sign_convention: SignConvention,
    /// Optional amplitude damping of the atomic mode (rad/s). Zero reproduces
    /// the undamped atomic mode of the linearized equations.
    pub atom_damping: f64,
    /// Stability tolerance relative to ω_m.
    pub stability_tol_rel: f64,
    /// Solve the Lyapunov equation even when the drift matrix is not stable.
    pub allow_unstable: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            sign_convention: SignConvention::Derived,
            atom_damping: 0.0,
            stability_tol_rel: 1e-6,
            allow_unstable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Cavity length L (m).
    pub cavity_length: f64,
    /// Laser wavelength λ (m).
    pub wavelength: f64,
    pub linewidth: Linewidth,
    /// Input power P (W).
    pub power: f64,
    /// Mirror frequency ω_m (rad/s).
    pub mirror_freq: f64,
    /// Mirror damping γ_m (rad/s).
    pub mirror_damping: f64,
    /// Mirror mass m (kg).
    pub mirror_mass: Option<f64>,
    /// Bath temperature T (K).
    pub temperature: f64,
    pub atom: AtomSpec,
    pub zeta_mc: Option<f64>,
    pub zeta_ac: Option<f64>,
    pub atom_number: Option<f64>,
    /// Optical lattice depth per photon U_o (rad/s).
    pub lattice_depth_per_photon: Option<f64>,
    pub detuning: Detuning,
    /// Cavity resonance ω_c override (rad/s); defaults to the laser frequency.
    pub cavity_freq: Option<f64>,
    pub model: ModelOptions,
}

/// Physical quantities in consistent angular-frequency units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub kappa: f64,
    pub laser_freq: f64,
    pub cavity_freq: f64,
    pub wavenumber: f64,
    /// |E| (rad/s).
    pub drive_amplitude: f64,
    pub zeta_mc: f64,
    pub zeta_ac: f64,
    /// Ω (rad/s).
    pub atom_freq: f64,
    pub n_thermal: f64,
    pub mirror_freq: f64,
    pub mirror_damping: f64,
    pub temperature: f64,
    pub detuning: ResolvedDetuning,
    pub atom_damping: f64,
    pub sign_convention: SignConvention,
    /// Absolute stability tolerance (rad/s).
    pub stability_tol: f64,
    pub allow_unstable: bool,
}

/// Dimension of a parameter, used to validate unit suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    AngularFrequency,
    Power,
    Mass,
    Temperature,
    Dimensionless,
}

macro_rules! param_names {
    ($($variant:ident => $name:literal, $dim:ident;)*) => {
        /// Every key accepted in config files, on the command line and as a sweep axis.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ParamName {
            $($variant,)*
        }

        impl ParamName {
            pub const ALL: &'static [ParamName] = &[$(ParamName::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ParamName::$variant => $name,)*
                }
            }

            pub fn dimension(self) -> Dimension {
                match self {
                    $(ParamName::$variant => Dimension::$dim,)*
                }
            }
        }

        impl FromStr for ParamName {
            type Err = ParamsError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(ParamName::$variant),)*
                    other => Err(ParamsError::UnknownParameter(other.to_string())),
                }
            }
        }
    };
}

param_names! {
    CavityLength => "cavity_length", Length;
    Wavelength => "wavelength", Length;
    Finesse => "finesse", Dimensionless;
    CavityDecay => "cavity_decay", AngularFrequency;
    Power => "power", Power;
    MirrorFreq => "mirror_freq", AngularFrequency;
    MirrorDamping => "mirror_damping", AngularFrequency;
    MirrorMass => "mirror_mass", Mass;
    Temperature => "temperature", Temperature;
    AtomFreq => "atom_freq", AngularFrequency;
    AtomMass => "atom_mass", Mass;
    ZetaMc => "zeta_mc", AngularFrequency;
    ZetaAc => "zeta_ac", AngularFrequency;
    AtomNumber => "atom_number", Dimensionless;
    LatticeDepthPerPhoton => "lattice_depth_per_photon", AngularFrequency;
    Delta => "delta", AngularFrequency;
    DeltaO => "delta_o", AngularFrequency;
    DeltaC => "delta_c", AngularFrequency;
    DeltaOverOmegaM => "delta_over_omega_m", Dimensionless;
    CavityFreq => "cavity_freq", AngularFrequency;
    AtomDamping => "atom_damping", AngularFrequency;
    StabilityTol => "stability_tol", Dimensionless;
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl SystemParams {
    /// Build from a sequence of assignments, as read from a config file and
    /// command-line flags. Later assignments override earlier ones, except
    /// that the two members of an exclusive pair may not both appear.
    pub fn from_assignments<I>(assignments: I, model: ModelOptions) -> Result<Self, ParamsError>
    where
        I: IntoIterator<Item = (ParamName, f64)>,
    {
        let mut b = Builder::default();
        b.model = model;
        for (name, value) in assignments {
            b.assign(name, value)?;
        }
        b.finish()
    }

    /// Overwrite one parameter in place. Exclusive groups switch variant
    /// (setting `finesse` replaces a previously given `cavity_decay`).
    pub fn set(&mut self, name: ParamName, value: f64) {
        use ParamName::*;
        match name {
            CavityLength => self.cavity_length = value,
            Wavelength => self.wavelength = value,
            Finesse => self.linewidth = Linewidth::Finesse(value),
            CavityDecay => self.linewidth = Linewidth::Decay(value),
            Power => self.power = value,
            MirrorFreq => self.mirror_freq = value,
            MirrorDamping => self.mirror_damping = value,
            MirrorMass => self.mirror_mass = Some(value),
            Temperature => self.temperature = value,
            AtomFreq => self.atom = AtomSpec::Frequency(value),
            AtomMass => self.atom = AtomSpec::Mass(value),
            ZetaMc => self.zeta_mc = Some(value),
            ZetaAc => self.zeta_ac = Some(value),
            AtomNumber => self.atom_number = Some(value),
            LatticeDepthPerPhoton => self.lattice_depth_per_photon = Some(value),
            Delta => self.detuning = Detuning::Effective(value),
            DeltaO => self.detuning = Detuning::Bare(value),
            DeltaC => self.detuning = Detuning::Cavity(value),
            DeltaOverOmegaM => self.detuning = Detuning::Effective(value * self.mirror_freq),
            CavityFreq => self.cavity_freq = Some(value),
            AtomDamping => self.model.atom_damping = value,
            StabilityTol => self.model.stability_tol_rel = value,
        }
    }

    /// Current value of a parameter, if it is set.
    pub fn get(&self, name: ParamName) -> Option<f64> {
        use ParamName::*;
        match name {
            CavityLength => Some(self.cavity_length),
            Wavelength => Some(self.wavelength),
            Finesse => match self.linewidth {
                Linewidth::Finesse(f) => Some(f),
                Linewidth::Decay(_) => None,
            },
            CavityDecay => match self.linewidth {
                Linewidth::Decay(k) => Some(k),
                Linewidth::Finesse(_) => None,
            },
            Power => Some(self.power),
            MirrorFreq => Some(self.mirror_freq),
            MirrorDamping => Some(self.mirror_damping),
            MirrorMass => self.mirror_mass,
            Temperature => Some(self.temperature),
            AtomFreq => match self.atom {
                AtomSpec::Frequency(w) => Some(w),
                AtomSpec::Mass(_) => None,
            },
            AtomMass => match self.atom {
                AtomSpec::Mass(m) => Some(m),
                AtomSpec::Frequency(_) => None,
            },
            ZetaMc => self.zeta_mc,
            ZetaAc => self.zeta_ac,
            AtomNumber => self.atom_number,
            LatticeDepthPerPhoton => self.lattice_depth_per_photon,
            Delta => match self.detuning {
                Detuning::Effective(d) => Some(d),
                _ => None,
            },
            DeltaO => match self.detuning {
                Detuning::Bare(d) => Some(d),
                _ => None,
            },
            DeltaC => match self.detuning {
                Detuning::Cavity(d) => Some(d),
                _ => None,
            },
            DeltaOverOmegaM => match self.detuning {
                Detuning::Effective(d) => Some(d / self.mirror_freq),
                _ => None,
            },
            CavityFreq => self.cavity_freq,
            AtomDamping => Some(self.model.atom_damping),
            StabilityTol => Some(self.model.stability_tol_rel),
        }
    }
}

#[derive(Default)]
struct Builder {
    values: std::collections::BTreeMap<ParamName, f64>,
    model: ModelOptions,
}

impl Builder {
    fn assign(&mut self, name: ParamName, value: f64) -> Result<(), ParamsError> {
        use ParamName::*;
        const GROUPS: &[&[ParamName]] = &[
            &[Finesse, CavityDecay],
            &[AtomFreq, AtomMass],
            &[Delta, DeltaO, DeltaC, DeltaOverOmegaM],
        ];
        for group in GROUPS {
            if group.contains(&name) {
                if let Some(other) = group
                    .iter()
                    .find(|o| **o != name && self.values.contains_key(o))
                {
                    return Err(ParamsError::Conflicting(other.as_str(), name.as_str()));
                }
            }
        }
        self.values.insert(name, value);
        Ok(())
    }

    fn take(&self, name: ParamName) -> Option<f64> {
        self.values.get(&name).copied()
    }

    fn require(&self, name: ParamName) -> Result<f64, ParamsError> {
        self.take(name)
            .ok_or(ParamsError::MissingField(name.as_str()))
    }

    fn finish(self) -> Result<SystemParams, ParamsError> {
        use ParamName::*;
        let linewidth = match (self.take(Finesse), self.take(CavityDecay)) {
            (Some(f), None) => Linewidth::Finesse(f),
            (None, Some(k)) => Linewidth::Decay(k),
            _ => return Err(ParamsError::MissingField("finesse|cavity_decay")),
        };
        let atom = match (self.take(AtomFreq), self.take(AtomMass)) {
            (Some(w), None) => AtomSpec::Frequency(w),
            (None, Some(m)) => AtomSpec::Mass(m),
            _ => return Err(ParamsError::MissingField("atom_freq|atom_mass")),
        };
        let mirror_freq = self.require(MirrorFreq)?;
        let detuning = if let Some(d) = self.take(Delta) {
            Detuning::Effective(d)
        } else if let Some(x) = self.take(DeltaOverOmegaM) {
            Detuning::Effective(x * mirror_freq)
        } else if let Some(d) = self.take(DeltaO) {
            Detuning::Bare(d)
        } else if let Some(d) = self.take(DeltaC) {
            Detuning::Cavity(d)
        } else {
            return Err(ParamsError::MissingField("delta|delta_o"));
        };
        let mut model = self.model;
        if let Some(g) = self.take(AtomDamping) {
            model.atom_damping = g;
        }
        if let Some(t) = self.take(StabilityTol) {
            model.stability_tol_rel = t;
        }
        Ok(SystemParams {
            cavity_length: self.require(CavityLength)?,
            wavelength: self.require(Wavelength)?,
            linewidth,
            power: self.require(Power)?,
            mirror_freq,
            mirror_damping: self.require(MirrorDamping)?,
            mirror_mass: self.take(MirrorMass),
            temperature: self.require(Temperature)?,
            atom,
            zeta_mc: self.take(ZetaMc),
            zeta_ac: self.take(ZetaAc),
            atom_number: self.take(AtomNumber),
            lattice_depth_per_photon: self.take(LatticeDepthPerPhoton),
            detuning,
            cavity_freq: self.take(CavityFreq),
            model,
        })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if !value.is_finite() {
        Err(ParamsError::NonFinite { name, value })
    } else if value <= 0.0 {
        Err(ParamsError::NonPositiveInput { name, value })
    } else {
        Ok(value)
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if !value.is_finite() {
        Err(ParamsError::NonFinite { name, value })
    } else if value < 0.0 {
        Err(ParamsError::NonPositiveInput { name, value })
    } else {
        Ok(value)
    }
}

fn finite(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::NonFinite { name, value })
    }
}

/// Bose-Einstein occupation `1/(exp(ħω/k_B T) − 1)` of a mode at angular
/// frequency `omega` in a bath at `temperature`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64, ParamsError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ParamsError::NonPositiveFrequency(omega));
    }
    let temperature = non_negative("temperature", temperature)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Cavity amplitude decay rate κ = π c / (2 L F) (half-width convention).
pub fn kappa_from_finesse(cavity_length: f64, finesse: f64) -> f64 {
    std::f64::consts::PI * C_LIGHT / (2.0 * cavity_length * finesse)
}

/// Single-photon radiation-pressure coupling ζ = ω_c √(ħ/(m ω_m)) / L.
pub fn mirror_coupling(
    cavity_freq: f64,
    mirror_mass: f64,
    mirror_freq: f64,
    cavity_length: f64,
) -> f64 {
    cavity_freq * (HBAR / (mirror_mass * mirror_freq)).sqrt() / cavity_length
}

/// Convert experiment-level inputs into derived quantities.
pub fn derive_constants(p: &SystemParams) -> Result<DerivedParams, ParamsError> {
    let cavity_length = positive("cavity_length", p.cavity_length)?;
    let wavelength = positive("wavelength", p.wavelength)?;
    let power = non_negative("power", p.power)?;
    let mirror_freq = positive("mirror_freq", p.mirror_freq)?;
    let mirror_damping = non_negative("mirror_damping", p.mirror_damping)?;
    let temperature = non_negative("temperature", p.temperature)?;
    let atom_damping = non_negative("atom_damping", p.model.atom_damping)?;
    let tol_rel = positive("stability_tol", p.model.stability_tol_rel)?;

    let kappa = match p.linewidth {
        Linewidth::Finesse(f) => kappa_from_finesse(cavity_length, positive("finesse", f)?),
        Linewidth::Decay(k) => positive("cavity_decay", k)?,
    };
    let wavenumber = TWO_PI / wavelength;
    let laser_freq = C_LIGHT * wavenumber;
    let cavity_freq = match p.cavity_freq {
        Some(w) => positive("cavity_freq", w)?,
        None => laser_freq,
    };
    let drive_amplitude = (power * kappa / (HBAR * laser_freq)).sqrt();

    let zeta_mc = match (p.zeta_mc, p.mirror_mass) {
        (Some(z), _) => non_negative("zeta_mc", z)?,
        (None, Some(m)) => mirror_coupling(
            cavity_freq,
            positive("mirror_mass", m)?,
            mirror_freq,
            cavity_length,
        ),
        (None, None) => return Err(ParamsError::MissingField("mirror_mass")),
    };
    let zeta_ac = match (p.zeta_ac, p.atom_number, p.lattice_depth_per_photon) {
        (Some(z), _, _) => non_negative("zeta_ac", z)?,
        (None, Some(n), Some(u)) => {
            positive("atom_number", n)?.sqrt() * finite("lattice_depth_per_photon", u)?.abs() / 2.0
        }
        (None, None, _) => return Err(ParamsError::MissingField("atom_number")),
        (None, _, None) => return Err(ParamsError::MissingField("lattice_depth_per_photon")),
    };
    let atom_freq = match p.atom {
        AtomSpec::Frequency(w) => positive("atom_freq", w)?,
        AtomSpec::Mass(m) => 2.0 * HBAR * wavenumber * wavenumber / positive("atom_mass", m)?,
    };
    let detuning = match p.detuning {
        Detuning::Effective(d) => ResolvedDetuning::Effective(finite("delta", d)?),
        Detuning::Bare(d) => ResolvedDetuning::Bare(finite("delta_o", d)?),
        Detuning::Cavity(dc) => {
            let n = p
                .atom_number
                .ok_or(ParamsError::MissingField("atom_number"))?;
            let u = p
                .lattice_depth_per_photon
                .ok_or(ParamsError::MissingField("lattice_depth_per_photon"))?;
            ResolvedDetuning::Bare(
                finite("delta_c", dc)?
                    + positive("atom_number", n)? * finite("lattice_depth_per_photon", u)? / 2.0,
            )
        }
    };

    Ok(DerivedParams {
        kappa,
        laser_freq,
        cavity_freq,
        wavenumber,
        drive_amplitude,
        zeta_mc,
        zeta_ac,
        atom_freq,
        n_thermal: thermal_occupation(mirror_freq, temperature)?,
        mirror_freq,
        mirror_damping,
        temperature,
        detuning,
        atom_damping,
        sign_convention: p.model.sign_convention,
        stability_tol: tol_rel * mirror_freq,
        allow_unstable: p.model.allow_unstable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{hz_to_rad, rad_to_hz};

    fn fig1_params() -> SystemParams {
        SystemParams {
            cavity_length: 1e-3,
            wavelength: 1000e-9,
            linewidth: Linewidth::Finesse(1.07e4),
            power: 50e-3,
            mirror_freq: hz_to_rad(10e6),
            mirror_damping: hz_to_rad(100.0),
            mirror_mass: None,
            temperature: 0.1,
            atom: AtomSpec::Frequency(hz_to_rad(10e6)),
            zeta_mc: Some(500.0),
            zeta_ac: Some(350.0),
            atom_number: None,
            lattice_depth_per_photon: None,
            detuning: Detuning::Effective(0.5 * hz_to_rad(10e6)),
            cavity_freq: None,
            model: ModelOptions::default(),
        }
    }

    #[test]
    fn wavenumber_from_wavelength() {
        let d = derive_constants(&fig1_params()).unwrap();
        assert!((d.wavenumber - 6.283_185_307_179_586e6).abs() < 1e-3);
    }

    #[test]
    fn kappa_regression() {
        // π · 299792458 / (2 · 1e-3 · 1.07e4), evaluated by hand.
        let d = derive_constants(&fig1_params()).unwrap();
        assert!(
            (d.kappa / 4.401_055_063_805_732e7 - 1.0).abs() < 1e-14,
            "{}",
            d.kappa
        );
    }

    #[test]
    fn fig1_record() {
        let d = derive_constants(&fig1_params()).unwrap();
        assert!((d.laser_freq / 1.883_651_567_308_853e15 - 1.0).abs() < 1e-14);
        assert!((d.drive_amplitude / 3.328_319_713_079_5e12 - 1.0).abs() < 1e-10);
        assert!(
            (d.n_thermal - 207.866_591_297_7).abs() < 1e-3,
            "{}",
            d.n_thermal
        );
        assert_eq!(d.zeta_mc, 500.0);
        assert_eq!(
            d.detuning,
            ResolvedDetuning::Effective(0.5 * hz_to_rad(10e6))
        );
        assert!((d.stability_tol - 1e-6 * hz_to_rad(10e6)).abs() < 1e-12);
    }

    #[test]
    fn zero_power_zero_drive() {
        let mut p = fig1_params();
        p.power = 0.0;
        assert_eq!(derive_constants(&p).unwrap().drive_amplitude, 0.0);
    }

    #[test]
    fn missing_mirror_mass() {
        let mut p = fig1_params();
        p.zeta_mc = None;
        assert_eq!(
            derive_constants(&p),
            Err(ParamsError::MissingField("mirror_mass"))
        );
        p.mirror_mass = Some(5e-12);
        let d = derive_constants(&p).unwrap();
        let expected = d.laser_freq * (HBAR / (5e-12 * p.mirror_freq)).sqrt() / 1e-3;
        assert!((d.zeta_mc - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn non_positive_inputs_rejected() {
        let mut p = fig1_params();
        p.cavity_length = 0.0;
        assert!(matches!(
            derive_constants(&p),
            Err(ParamsError::NonPositiveInput {
                name: "cavity_length",
                ..
            })
        ));
        let mut p = fig1_params();
        p.temperature = -1.0;
        assert!(derive_constants(&p).is_err());
        let mut p = fig1_params();
        p.mirror_freq = f64::NAN;
        assert!(derive_constants(&p).is_err());
    }

    #[test]
    fn atom_freq_from_mass() {
        let mut p = fig1_params();
        let m87 = 1.443_160_6e-25;
        p.atom = AtomSpec::Mass(m87);
        let d = derive_constants(&p).unwrap();
        let k = TWO_PI / 1000e-9;
        assert!((d.atom_freq - 2.0 * HBAR * k * k / m87).abs() < 1e-9);
    }

    #[test]
    fn cavity_detuning_resolved_with_atoms() {
        let mut p = fig1_params();
        p.detuning = Detuning::Cavity(1.0e6);
        assert_eq!(
            derive_constants(&p),
            Err(ParamsError::MissingField("atom_number"))
        );
        p.atom_number = Some(1e5);
        p.lattice_depth_per_photon = Some(20.0);
        let d = derive_constants(&p).unwrap();
        assert_eq!(d.detuning, ResolvedDetuning::Bare(1.0e6 + 1e5 * 20.0 / 2.0));
    }

    #[test]
    fn zeta_ac_from_atom_number() {
        let mut p = fig1_params();
        p.zeta_ac = None;
        p.atom_number = Some(1e4);
        p.lattice_depth_per_photon = Some(3.0);
        let d = derive_constants(&p).unwrap();
        assert!((d.zeta_ac - 100.0 * 3.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_occupation_limits() {
        let w = hz_to_rad(10e6);
        assert_eq!(thermal_occupation(w, 0.0).unwrap(), 0.0);
        assert!(matches!(
            thermal_occupation(0.0, 1.0),
            Err(ParamsError::NonPositiveFrequency(_))
        ));
        // Rayleigh-Jeans: ħω/k_B T < 0.01.
        for t in [0.5, 5.0, 50.0] {
            let x = HBAR * w / (K_B * t);
            assert!(x < 0.01);
            let n = thermal_occupation(w, t).unwrap();
            assert!((n / (1.0 / x) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn thermal_occupation_regression() {
        // 1/expm1(ħω/k_B T) at ω/2π = 10 MHz, T = 100 mK.
        let n = thermal_occupation(hz_to_rad(10e6), 0.1).unwrap();
        assert!((n - 207.866_591_297_7).abs() < 1e-3, "{n}");
    }

    #[test]
    fn thermal_occupation_monotone_in_temperature() {
        let w = hz_to_rad(10e6);
        let mut prev = 0.0;
        for i in 0..200 {
            let t = 10f64.powf(-7.0 + 9.0 * i as f64 / 199.0);
            let n = thermal_occupation(w, t).unwrap();
            assert!(n >= prev, "T = {t}");
            prev = n;
        }
    }

    #[test]
    fn hz_round_trip() {
        for f in [1.0, 100.0, 1e7, 3.3e9, 12345.678] {
            let back = rad_to_hz(hz_to_rad(f));
            assert!((back - f).abs() <= 2.0 * f64::EPSILON * f);
        }
    }

    #[test]
    fn deterministic() {
        let a = derive_constants(&fig1_params()).unwrap();
        let b = derive_constants(&fig1_params()).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn assignments_conflicts_and_missing() {
        use ParamName::*;
        let base = vec![
            (CavityLength, 1e-3),
            (Wavelength, 1e-6),
            (Power, 0.05),
            (MirrorFreq, 1e7),
            (MirrorDamping, 10.0),
            (Temperature, 0.1),
            (AtomFreq, 1e7),
            (ZetaMc, 1.0),
            (ZetaAc, 1.0),
            (DeltaOverOmegaM, 0.5),
        ];
        let mut ok = base.clone();
        ok.push((Finesse, 1e4));
        let p = SystemParams::from_assignments(ok, ModelOptions::default()).unwrap();
        assert_eq!(p.detuning, Detuning::Effective(0.5e7));

        assert_eq!(
            SystemParams::from_assignments(base.clone(), ModelOptions::default()),
            Err(ParamsError::MissingField("finesse|cavity_decay"))
        );
        let mut both = base;
        both.push((Finesse, 1e4));
        both.push((CavityDecay, 1e7));
        assert_eq!(
            SystemParams::from_assignments(both, ModelOptions::default()),
            Err(ParamsError::Conflicting("finesse", "cavity_decay"))
        );
    }

    #[test]
    fn names_round_trip() {
        for name in ParamName::ALL {
            assert_eq!(name.as_str().parse::<ParamName>().unwrap(), *name);
        }
    }
}
