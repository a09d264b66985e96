//! Parameter sweeps: the per-point pipeline, grid evaluation, presets and
//! file output.

mod presets;
mod svg;
mod table;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{build_diffusion, build_drift, stability, DynamicsError, Verdict};
use crate::gaussian::{
    check_physicality6, log_negativity, reduce, BipartitePartition, GaussianError, Negativity,
};
use crate::meanfield::{steady_state, MeanFieldError};
use crate::params::{derive_constants, ParamName, ParamsError, SystemParams};
use crate::steadystate::{
    solve_lyapunov_screened, solve_lyapunov_unchecked, CovarianceMatrix, SteadyStateError,
};

pub use presets::{preset, zeta_reference, PresetError, PRESET_IDS};
pub use svg::{emit_svg, render_svg, render_svg_lines, SvgError, QUANTITIES};
pub use table::{emit_csv, read_csv, render_csv, CsvTable, TableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("axis `{0}` is empty")]
    EmptyAxis(ParamName),
    #[error("axis `{0}` is not strictly monotone")]
    NotMonotone(ParamName),
    #[error("log axis `{0}` needs positive values")]
    NonPositiveLog(ParamName),
    #[error("axis `{0}` has non-finite values")]
    NonFinite(ParamName),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: ParamName,
    pub values: Vec<f64>,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: ParamName, values: Vec<f64>, scale: Scale) -> Result<Self, SpecError> {
        if values.is_empty() {
            return Err(SpecError::EmptyAxis(name));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpecError::NonFinite(name));
        }
        let inc = values.windows(2).all(|w| w[1] > w[0]);
        let dec = values.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(SpecError::NotMonotone(name));
        }
        if scale == Scale::Log && values.iter().any(|v| *v <= 0.0) {
            return Err(SpecError::NonPositiveLog(name));
        }
        Ok(Self {
            name,
            values,
            scale,
        })
    }

    pub fn linear(name: ParamName, lo: f64, hi: f64, n: usize) -> Result<Self, SpecError> {
        Self::new(name, spaced(lo, hi, n), Scale::Linear)
    }

    pub fn log(name: ParamName, lo: f64, hi: f64, n: usize) -> Result<Self, SpecError> {
        if !(lo > 0.0 && hi > 0.0) {
            return Err(SpecError::NonPositiveLog(name));
        }
        let values = spaced(lo.log10(), hi.log10(), n)
            .into_iter()
            .map(|e| 10f64.powf(e))
            .collect();
        Self::new(name, values, Scale::Log)
    }

    /// The same range with `n` points.
    pub fn resample(&self, n: usize) -> Result<Self, SpecError> {
        let (lo, hi) = (self.values[0], *self.values.last().unwrap());
        match self.scale {
            Scale::Linear => Self::linear(self.name, lo, hi, n),
            Scale::Log => Self::log(self.name, lo, hi, n),
        }
    }

    /// `n` existing grid points, evenly spread over the index range.
    pub fn subsample(&self, n: usize) -> Result<Self, SpecError> {
        let len = self.values.len();
        let n = n.min(len);
        let values = if n == 1 {
            vec![self.values[0]]
        } else {
            (0..n)
                .map(|k| self.values[(k * (len - 1) + (n - 1) / 2) / (n - 1)])
                .collect()
        };
        Self::new(self.name, values, self.scale)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `target = factor · source`, applied after the axis values are set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedLink {
    pub target: ParamName,
    pub source: ParamName,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    Emc,
    Eac,
    Ema,
    Epsilons,
    Stability,
    Cs,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Stability,
        Output::Cs,
        Output::Emc,
        Output::Eac,
        Output::Ema,
        Output::Epsilons,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub base: SystemParams,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub derived_links: Vec<DerivedLink>,
    pub outputs: Vec<Output>,
}

impl SweepSpec {
    pub fn point_count(&self) -> usize {
        self.axis1.len() * self.axis2.as_ref().map_or(1, Axis::len)
    }

    /// Parameters for one grid point, links applied.
    pub fn params_at(&self, x1: f64, x2: Option<f64>) -> Result<SystemParams, PipelineError> {
        let mut p = self.base.clone();
        p.set(self.axis1.name, x1);
        if let (Some(a), Some(x)) = (&self.axis2, x2) {
            p.set(a.name, x);
        }
        for link in &self.derived_links {
            let v = p.get(link.source).ok_or(PipelineError::Link(link.source))?;
            p.set(link.target, link.factor * v);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("derived link: source `{0}` is not set")]
    Link(ParamName),
    #[error("derive_constants: {0}")]
    Params(#[from] ParamsError),
    #[error("steady_state: {0}")]
    MeanField(#[from] MeanFieldError),
    #[error("stability: {0}")]
    Stability(#[from] DynamicsError),
    #[error("solve_lyapunov: {0}")]
    Lyapunov(#[from] SteadyStateError),
    #[error("log_negativity ({partition}): {source}")]
    Negativity {
        partition: &'static str,
        source: GaussianError,
    },
    #[error("check_physicality: {0}")]
    Physicality(GaussianError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Link(_) => "derived_links",
            PipelineError::Params(_) => "derive_constants",
            PipelineError::MeanField(_) => "steady_state",
            PipelineError::Stability(_) => "stability",
            PipelineError::Lyapunov(_) => "solve_lyapunov",
            PipelineError::Negativity { .. } => "log_negativity",
            PipelineError::Physicality(_) => "check_physicality",
        }
    }
}

/// Entanglement of one steady state, in partition order mc, ac, ma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entanglement {
    pub negativities: [Negativity; 3],
    /// Smallest symplectic eigenvalue of the full covariance.
    pub nu_min: f64,
}

impl Entanglement {
    pub fn get(&self, p: BipartitePartition) -> Negativity {
        self.negativities[p as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub verdict: Verdict,
    pub max_real_part: f64,
    pub c_s: f64,
    /// Present for stable points (or all points when unstable solving is
    /// explicitly allowed and succeeds).
    pub entanglement: Option<Entanglement>,
    pub covariance: Option<CovarianceMatrix>,
}

/// derive_constants → steady_state → drift/diffusion → stability →
/// solve_lyapunov → three reductions and negativities.
pub fn run_point(params: &SystemParams) -> Result<PointResult, PipelineError> {
    let dp = derive_constants(params)?;
    let mf = steady_state(&dp)?;
    let m = build_drift(&dp, &mf);
    let d = build_diffusion(&dp);
    let report = stability(&m, dp.stability_tol)?;
    let verdict = report.verdict();

    let covariance = if report.eigen_stable {
        Some(solve_lyapunov_screened(&m, &d, &report)?)
    } else if dp.allow_unstable {
        solve_lyapunov_unchecked(&m, &d).ok()
    } else {
        None
    };
    let entanglement = match &covariance {
        Some(v) => Some(entanglement_of(v)?),
        None => None,
    };
    Ok(PointResult {
        verdict,
        max_real_part: report.max_real_part,
        c_s: mf.c_s,
        entanglement,
        covariance,
    })
}

pub fn entanglement_of(v: &CovarianceMatrix) -> Result<Entanglement, PipelineError> {
    let mut negativities = [Negativity {
        log_negativity: 0.0,
        epsilon: 0.0,
    }; 3];
    for (k, p) in BipartitePartition::ALL.into_iter().enumerate() {
        negativities[k] =
            log_negativity(&reduce(v, p)).map_err(|source| PipelineError::Negativity {
                partition: p.label(),
                source,
            })?;
    }
    let nu_min = check_physicality6(v)
        .map_err(PipelineError::Physicality)?
        .nu_min;
    Ok(Entanglement {
        negativities,
        nu_min,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub outcome: Result<PointResult, PipelineError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub outputs: Vec<Output>,
    /// axis2-major: axis1 varies fastest.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, i1: usize, i2: usize) -> &SweepRow {
        &self.rows[i2 * self.axis1.len() + i1]
    }

    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

pub fn run_sweep(spec: &SweepSpec) -> SweepResult {
    let n1 = spec.axis1.len();
    let n2 = spec.axis2.as_ref().map_or(1, Axis::len);
    let rows = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let x1 = spec.axis1.values[k % n1];
            let x2 = spec.axis2.as_ref().map(|a| a.values[k / n1]);
            let outcome = spec.params_at(x1, x2).and_then(|p| {
                let mut r = run_point(&p)?;
                r.covariance = None;
                Ok(r)
            });
            SweepRow {
                axis1: x1,
                axis2: x2,
                outcome,
            }
        })
        .collect();
    SweepResult {
        name: spec.name.clone(),
        axis1: spec.axis1.clone(),
        axis2: spec.axis2.clone(),
        outputs: spec.outputs.clone(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1a_base() -> SystemParams {
        preset("fig1a").unwrap().base
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::new(ParamName::Power, vec![], Scale::Linear).is_err());
        assert!(Axis::new(ParamName::Power, vec![1.0, 1.0], Scale::Linear).is_err());
        assert!(Axis::new(ParamName::Power, vec![0.0, 1.0], Scale::Log).is_err());
        assert!(Axis::new(ParamName::Power, vec![2.0, 1.0], Scale::Linear).is_ok());
        let a = Axis::log(ParamName::Temperature, 1e-3, 1e2, 51).unwrap();
        assert_eq!(a.values[0], 1e-3);
        assert_eq!(a.values[50], 1e2);
        assert!((a.values[40] / 10.0 - 1.0).abs() < 1e-12);
        let l = Axis::linear(ParamName::DeltaOverOmegaM, 0.0, 2.0, 200).unwrap();
        assert_eq!(l.values[199], 2.0);
        assert_eq!(l.resample(5).unwrap().values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn subsample_keeps_endpoints() {
        let a = Axis::linear(ParamName::DeltaOverOmegaM, 0.0, 2.0, 200).unwrap();
        let s = a.subsample(20).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s.values[0], 0.0);
        assert_eq!(s.values[19], 2.0);
        assert!(s.values.iter().all(|v| a.values.contains(v)));
    }

    #[test]
    fn undriven_point_is_not_stable() {
        let mut p = fig1a_base();
        p.set(ParamName::Power, 0.0);
        let r = run_point(&p).unwrap();
        assert_eq!(r.c_s, 0.0);
        assert_ne!(r.verdict, Verdict::Stable);
        assert!(r.entanglement.is_none());
    }

    #[test]
    fn run_point_is_deterministic() {
        let mut p = fig1a_base();
        p.set(ParamName::ZetaMc, 100.0);
        p.set(ParamName::ZetaAc, 70.0);
        assert_eq!(run_point(&p), run_point(&p));
    }

    #[test]
    fn one_by_one_sweep_matches_run_point() {
        let mut spec = preset("fig3").unwrap();
        spec.axis1 = Axis::new(ParamName::DeltaOverOmegaM, vec![0.9], Scale::Linear).unwrap();
        let res = run_sweep(&spec);
        assert_eq!(res.rows.len(), 1);
        let mut direct = run_point(&spec.params_at(0.9, None).unwrap()).unwrap();
        direct.covariance = None;
        assert_eq!(res.rows[0].outcome, Ok(direct));
    }

    #[test]
    fn links_follow_axis() {
        let spec = preset("fig1a").unwrap();
        let p = spec.params_at(0.5, Some(200.0)).unwrap();
        assert_eq!(p.zeta_mc, Some(200.0));
        assert!((p.zeta_ac.unwrap() - 140.0).abs() < 1e-12);
    }

    #[test]
    fn row_order_is_axis2_major() {
        let mut spec = preset("fig1a").unwrap();
        spec.axis1 = spec.axis1.resample(3).unwrap();
        spec.axis2 = Some(spec.axis2.unwrap().resample(2).unwrap());
        let res = run_sweep(&spec);
        assert_eq!(res.rows.len(), 6);
        let a2 = res.axis2.as_ref().unwrap();
        for i2 in 0..2 {
            for i1 in 0..3 {
                let row = res.row(i1, i2);
                assert_eq!(row.axis1, res.axis1.values[i1]);
                assert_eq!(row.axis2, Some(a2.values[i2]));
            }
        }
    }

    #[test]
    fn failing_point_recorded_in_row() {
        let mut spec = preset("fig3").unwrap();
        spec.axis1 = Axis::new(ParamName::Wavelength, vec![-1.0, 1e-6], Scale::Linear).unwrap();
        let res = run_sweep(&spec);
        assert_eq!(res.error_count(), 1);
        assert_eq!(
            res.rows[0].outcome.as_ref().unwrap_err().stage(),
            "derive_constants"
        );
        assert!(res.rows[1].outcome.is_ok());
    }
}
