//! Parameter sets of the reference figures.
//!
//! Couplings quoted in Hz in the figure legends are used as angular
//! frequencies (rad/s). Where a coupling is given relative to the
//! mirror-cavity coupling ζ of the reference experiment, ζ is evaluated for a
//! 5 ng mirror at the common cavity parameters (≈ 1.09 × 10³ rad/s).

use thiserror::Error;

use super::{Axis, DerivedLink, Output, Scale, SweepSpec};
use crate::constants::{hz_to_rad, C_LIGHT, TWO_PI};
use crate::params::{mirror_coupling, ModelOptions, ParamName, SystemParams};

pub const PRESET_IDS: [&str; 9] = [
    "fig1a",
    "fig1b",
    "fig1c",
    "fig2a",
    "fig2b",
    "fig2b_caption",
    "fig2b_text",
    "fig2c",
    "fig3",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresetError {
    #[error("unknown figure `{0}` (known: {known})", known = PRESET_IDS.join(", "))]
    UnknownFigure(String),
}

const CAVITY_LENGTH: f64 = 1e-3;
const WAVELENGTH: f64 = 1000e-9;
const REFERENCE_MIRROR_MASS: f64 = 5e-12;

fn omega_m() -> f64 {
    hz_to_rad(10e6)
}

/// Mirror-cavity coupling of the reference experiment (rad/s).
pub fn zeta_reference() -> f64 {
    mirror_coupling(
        TWO_PI * C_LIGHT / WAVELENGTH,
        REFERENCE_MIRROR_MASS,
        omega_m(),
        CAVITY_LENGTH,
    )
}

struct Base {
    temperature: f64,
    atom_freq: f64,
    zeta_mc: f64,
    zeta_ac: f64,
    delta_over_omega_m: f64,
}

fn base(b: Base) -> SystemParams {
    use ParamName::*;
    let wm = omega_m();
    SystemParams::from_assignments(
        [
            (CavityLength, CAVITY_LENGTH),
            (Wavelength, WAVELENGTH),
            (Power, 50e-3),
            (MirrorFreq, wm),
            (MirrorDamping, hz_to_rad(100.0)),
            (Temperature, b.temperature),
            (Finesse, 1.07e4),
            (AtomFreq, b.atom_freq),
            (ZetaMc, b.zeta_mc),
            (ZetaAc, b.zeta_ac),
            (Delta, b.delta_over_omega_m * wm),
        ],
        ModelOptions::default(),
    )
    .expect("preset parameters are complete")
}

fn delta_axis() -> Axis {
    Axis::linear(ParamName::DeltaOverOmegaM, 0.0, 2.0, 200).expect("valid axis")
}

fn coupling_axis(name: ParamName) -> Axis {
    Axis::log(name, 10.0, 1000.0, 50).expect("valid axis")
}

fn temperature_axis() -> Axis {
    Axis::log(ParamName::Temperature, 1e-6, 1e2, 81).expect("valid axis")
}

fn spec(
    name: &str,
    base: SystemParams,
    axis1: Axis,
    axis2: Option<Axis>,
    links: Vec<DerivedLink>,
) -> SweepSpec {
    SweepSpec {
        name: name.to_string(),
        base,
        axis1,
        axis2,
        derived_links: links,
        outputs: Output::ALL.to_vec(),
    }
}

fn fig2b(name: &str, zeta_mc_values: [f64; 2]) -> SweepSpec {
    let wm = omega_m();
    let zeta = zeta_reference();
    let b = base(Base {
        temperature: 0.1,
        atom_freq: wm,
        zeta_mc: 0.0,
        zeta_ac: 100.0,
        delta_over_omega_m: 0.5,
    });
    let values = zeta_mc_values.iter().map(|f| f * zeta).collect();
    let axis2 = Axis::new(ParamName::ZetaMc, values, Scale::Linear).expect("valid axis");
    spec(name, b, temperature_axis(), Some(axis2), vec![])
}

pub fn preset(id: &str) -> Result<SweepSpec, PresetError> {
    let wm = omega_m();
    let s = match id {
        "fig1a" => spec(
            id,
            base(Base {
                temperature: 0.1,
                atom_freq: wm,
                zeta_mc: 100.0,
                zeta_ac: 70.0,
                delta_over_omega_m: 0.5,
            }),
            delta_axis(),
            Some(coupling_axis(ParamName::ZetaMc)),
            vec![DerivedLink {
                target: ParamName::ZetaAc,
                source: ParamName::ZetaMc,
                factor: 0.7,
            }],
        ),
        "fig1b" => spec(
            id,
            base(Base {
                temperature: 0.1,
                atom_freq: wm,
                zeta_mc: 0.01 * zeta_reference(),
                zeta_ac: 100.0,
                delta_over_omega_m: 0.5,
            }),
            delta_axis(),
            Some(coupling_axis(ParamName::ZetaAc)),
            vec![],
        ),
        "fig1c" => spec(
            id,
            base(Base {
                temperature: 1e-6,
                atom_freq: wm,
                zeta_mc: wm,
                zeta_ac: wm,
                delta_over_omega_m: 0.6,
            }),
            Axis::log(ParamName::ZetaMc, 1e-6 * wm, wm, 50).expect("valid axis"),
            Some(Axis::log(ParamName::ZetaAc, 1e-6 * wm, wm, 50).expect("valid axis")),
            vec![],
        ),
        "fig2a" => spec(
            id,
            base(Base {
                temperature: 0.1,
                atom_freq: wm,
                zeta_mc: 500.0,
                zeta_ac: 0.0,
                delta_over_omega_m: 0.5,
            }),
            temperature_axis(),
            None,
            vec![],
        ),
        "fig2b" | "fig2b_caption" => fig2b(id, [0.0, 0.4]),
        "fig2b_text" => fig2b(id, [0.1, 0.4]),
        "fig2c" => spec(
            id,
            base(Base {
                temperature: 1e-6,
                atom_freq: wm,
                zeta_mc: wm,
                zeta_ac: wm,
                delta_over_omega_m: 0.6,
            }),
            temperature_axis(),
            Some(
                Axis::new(ParamName::ZetaMc, vec![1e-3 * wm, wm], Scale::Log).expect("valid axis"),
            ),
            vec![DerivedLink {
                target: ParamName::ZetaAc,
                source: ParamName::ZetaMc,
                factor: 1.0,
            }],
        ),
        "fig3" => spec(
            id,
            base(Base {
                temperature: 1e-6,
                atom_freq: 0.9 * wm,
                zeta_mc: 300.0,
                zeta_ac: 200.0,
                delta_over_omega_m: 0.5,
            }),
            delta_axis(),
            None,
            vec![],
        ),
        other => return Err(PresetError::UnknownFigure(other.to_string())),
    };
    Ok(s)
}
