//! Two-mode reductions of the three-mode state and Gaussian entanglement:
//! logarithmic negativity, the Simon PPT test, and symplectic spectra.

use nalgebra::{Cholesky, DMatrix, Matrix2, Matrix4, Schur};
use thiserror::Error;

use crate::dd::{determinant, DoubleDouble};
use crate::steadystate::CovarianceMatrix;

/// Symplectic eigenvalues may undershoot 1/2 by this much before a state is
/// rejected as unphysical.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Negative Σ² − 4 det V is clamped to zero when within this fraction of Σ².
pub const DISCRIMINANT_CLAMP_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("covariance is not a physical state ({0})")]
    UnphysicalState(String),
    #[error("covariance dimension {0} is odd")]
    OddDimension(usize),
    #[error("symplectic eigenvalue computation failed")]
    EigenSolverFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BipartitePartition {
    MirrorField,
    AtomField,
    MirrorAtom,
}

impl BipartitePartition {
    pub const ALL: [BipartitePartition; 3] = [
        BipartitePartition::MirrorField,
        BipartitePartition::AtomField,
        BipartitePartition::MirrorAtom,
    ];

    /// Retained indices, mode A first.
    pub fn indices(self) -> [usize; 4] {
        match self {
            BipartitePartition::MirrorField => [0, 1, 4, 5],
            BipartitePartition::AtomField => [2, 3, 4, 5],
            BipartitePartition::MirrorAtom => [0, 1, 2, 3],
        }
    }

    /// Short label used for output columns: `mc`, `ac`, `ma`.
    pub fn label(self) -> &'static str {
        match self {
            BipartitePartition::MirrorField => "mc",
            BipartitePartition::AtomField => "ac",
            BipartitePartition::MirrorAtom => "ma",
        }
    }
}

/// Two-mode covariance [[X, Z], [Zᵀ, Y]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCovariance(Matrix4<f64>);

impl ReducedCovariance {
    /// Symmetrizes the input.
    pub fn from_matrix(m: Matrix4<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn from_blocks(x: Matrix2<f64>, y: Matrix2<f64>, z: Matrix2<f64>) -> Self {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&x);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&y);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&z);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&z.transpose());
        Self::from_matrix(m)
    }

    /// Two-mode squeezed vacuum with squeezing parameter r.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        Self::from_blocks(
            Matrix2::identity() * c,
            Matrix2::identity() * c,
            Matrix2::new(s, 0.0, 0.0, -s),
        )
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn x(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn y(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn z(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// Σ = det X + det Y − 2 det Z (seralian of the partial transpose).
    pub fn sigma(&self) -> f64 {
        self.sigma_dd().to_f64()
    }

    pub fn determinant(&self) -> f64 {
        self.determinant_dd().to_f64()
    }

    fn block_det(&self, r: usize, c: usize) -> DoubleDouble {
        let m = &self.0;
        let dd = DoubleDouble::from;
        dd(m[(r, c)]) * dd(m[(r + 1, c + 1)]) - dd(m[(r, c + 1)]) * dd(m[(r + 1, c)])
    }

    fn sigma_dd(&self) -> DoubleDouble {
        let two = DoubleDouble::from(2.0);
        self.block_det(0, 0) + self.block_det(2, 2) - two * self.block_det(0, 2)
    }

    fn determinant_dd(&self) -> DoubleDouble {
        determinant(
            (0..4)
                .map(|i| (0..4).map(|j| DoubleDouble::from(self.0[(i, j)])).collect())
                .collect(),
        )
    }

    /// Momentum of mode B flipped.
    pub fn partial_transpose(&self) -> Self {
        let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        Self(p * self.0 * p)
    }

    /// Smallest symplectic eigenvalue from the two-mode invariants.
    pub fn min_symplectic_eigenvalue(&self) -> Result<f64, GaussianError> {
        let two = DoubleDouble::from(2.0);
        let delta = self.block_det(0, 0) + self.block_det(2, 2) + two * self.block_det(0, 2);
        smaller_root(delta, self.determinant_dd())
    }
}

pub fn reduce(v: &CovarianceMatrix, p: BipartitePartition) -> ReducedCovariance {
    let idx = p.indices();
    ReducedCovariance::from_matrix(Matrix4::from_fn(|i, j| v.matrix()[(idx[i], idx[j])]))
}

/// √ of the smaller root of t² − s t + det = 0. The invariants arrive in
/// double-double so the discriminant survives near-degenerate spectra.
fn smaller_root(s: DoubleDouble, det: DoubleDouble) -> Result<f64, GaussianError> {
    let s2 = s * s;
    let mut disc = (s2 - DoubleDouble::from(4.0) * det).to_f64();
    let (s, det) = (s.to_f64(), det.to_f64());
    if disc < 0.0 {
        if disc >= -DISCRIMINANT_CLAMP_REL * s2.to_f64() {
            disc = 0.0;
        } else {
            return Err(GaussianError::UnphysicalState(format!(
                "negative discriminant {disc:e}"
            )));
        }
    }
    let denom = s + disc.sqrt();
    if !(denom > 0.0) || !(det >= 0.0) {
        return Err(GaussianError::UnphysicalState(format!(
            "invariants Σ = {s:e}, det = {det:e}"
        )));
    }
    Ok((2.0 * det / denom).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negativity {
    pub log_negativity: f64,
    /// Smallest symplectic eigenvalue of the partially transposed state.
    pub epsilon: f64,
}

impl Negativity {
    pub fn entangled(&self) -> bool {
        self.epsilon < 0.5
    }
}

/// E_N = max(0, −ln 2ε), ε² = (Σ − √(Σ² − 4 det V))/2.
pub fn log_negativity(vr: &ReducedCovariance) -> Result<Negativity, GaussianError> {
    ensure_physical(vr)?;
    let epsilon = smaller_root(vr.sigma_dd(), vr.determinant_dd())?;
    let log_negativity = if epsilon < 0.5 {
        -(2.0 * epsilon).ln()
    } else {
        0.0
    };
    Ok(Negativity {
        log_negativity,
        epsilon,
    })
}

/// Entangled iff ε < 1/2; shares ε with [`log_negativity`].
pub fn simon_criterion(vr: &ReducedCovariance) -> Result<bool, GaussianError> {
    Ok(log_negativity(vr)?.entangled())
}

/// The same test written as 4 det V < Σ − 1/4, evaluated directly.
pub fn simon_determinant_form(vr: &ReducedCovariance) -> bool {
    4.0 * vr.determinant() < vr.sigma() - 0.25
}

fn ensure_physical(vr: &ReducedCovariance) -> Result<(), GaussianError> {
    if Cholesky::new(*vr.matrix()).is_none() {
        return Err(GaussianError::UnphysicalState(
            "not positive definite".into(),
        ));
    }
    let nu = vr.min_symplectic_eigenvalue()?;
    if nu < 0.5 - PHYSICALITY_TOL {
        return Err(GaussianError::UnphysicalState(format!("ν_min = {nu}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Physicality {
    pub physical: bool,
    pub nu_min: f64,
    /// One entry per mode, ascending.
    pub symplectic_eigenvalues: Vec<f64>,
}

/// Symplectic eigenvalues as the moduli of the eigenvalues of σV, with σ the
/// direct sum of (0, 1; −1, 0) blocks.
pub fn symplectic_eigenvalues(v: &DMatrix<f64>) -> Result<Vec<f64>, GaussianError> {
    let n = v.nrows();
    if n % 2 == 1 || !v.is_square() {
        return Err(GaussianError::OddDimension(n));
    }
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    for k in (0..n).step_by(2) {
        sigma[(k, k + 1)] = 1.0;
        sigma[(k + 1, k)] = -1.0;
    }
    let a = sigma * v;
    let schur =
        Schur::try_new(a, f64::EPSILON, 100_000).ok_or(GaussianError::EigenSolverFailure)?;
    let mut moduli: Vec<f64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    if moduli.iter().any(|x| !x.is_finite()) {
        return Err(GaussianError::EigenSolverFailure);
    }
    moduli.sort_by(f64::total_cmp);
    // Each ν appears as the pair ±iν.
    Ok(moduli.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

pub fn check_physicality(v: &DMatrix<f64>) -> Result<Physicality, GaussianError> {
    let nus = symplectic_eigenvalues(v)?;
    let nu_min = nus.first().copied().unwrap_or(f64::INFINITY);
    let positive = v.nrows() == 0 || Cholesky::new(v.clone()).is_some();
    Ok(Physicality {
        physical: positive && nu_min >= 0.5 - PHYSICALITY_TOL,
        nu_min,
        symplectic_eigenvalues: nus,
    })
}

pub fn check_physicality6(v: &CovarianceMatrix) -> Result<Physicality, GaussianError> {
    check_physicality(&DMatrix::from_fn(6, 6, |i, j| v.matrix()[(i, j)]))
}

/// ε from the symplectic spectrum of the partially transposed state.
pub fn ppt_epsilon_spectral(vr: &ReducedCovariance) -> Result<f64, GaussianError> {
    let pt = vr.partial_transpose();
    let nus = symplectic_eigenvalues(&DMatrix::from_fn(4, 4, |i, j| pt.matrix()[(i, j)]))?;
    Ok(nus[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{local_rotation, random_physical_two_mode};
    use nalgebra::Matrix6;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn vacuum_reductions() {
        for p in BipartitePartition::ALL {
            let r = reduce(&CovarianceMatrix::vacuum(), p);
            assert_eq!(r.matrix(), &(Matrix4::identity() * 0.5));
            let n = log_negativity(&r).unwrap();
            assert!((n.epsilon - 0.5).abs() < 1e-15);
            assert_eq!(n.log_negativity, 0.0);
            assert!(!simon_criterion(&r).unwrap());
        }
    }

    #[test]
    fn reduce_picks_principal_submatrix() {
        let m = Matrix6::from_fn(|i, j| (10 * i.min(j) + i.max(j)) as f64);
        let v = CovarianceMatrix::from_matrix(m);
        for p in BipartitePartition::ALL {
            let r = reduce(&v, p);
            let idx = p.indices();
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(r.matrix()[(a, b)], m[(idx[a], idx[b])]);
                }
            }
        }
    }

    #[test]
    fn block_diagonal_has_no_cross_block() {
        let mut m = Matrix6::identity() * 0.5;
        m[(0, 1)] = 0.1;
        m[(1, 0)] = 0.1;
        m[(4, 5)] = -0.2;
        m[(5, 4)] = -0.2;
        let v = CovarianceMatrix::from_matrix(m);
        for p in BipartitePartition::ALL {
            assert_eq!(reduce(&v, p).z(), Matrix2::zeros());
        }
    }

    #[test]
    fn two_mode_squeezed_benchmark() {
        let r = 0.5;
        let n = log_negativity(&ReducedCovariance::two_mode_squeezed(r)).unwrap();
        assert!((n.epsilon - (-2.0 * r).exp() / 2.0).abs() < 1e-12);
        assert!((n.log_negativity - 1.0).abs() < 1e-9);
        assert!(simon_criterion(&ReducedCovariance::two_mode_squeezed(r)).unwrap());
    }

    #[test]
    fn physicality_examples() {
        let p = check_physicality(&(DMatrix::identity(6, 6) * 0.5)).unwrap();
        assert!(p.physical);
        assert!((p.nu_min - 0.5).abs() < 1e-12);
        let p = check_physicality(&(DMatrix::identity(6, 6) * 0.25)).unwrap();
        assert!(!p.physical);
        assert!((p.nu_min - 0.25).abs() < 1e-12);
        let mut thermal = DMatrix::identity(6, 6) * 0.5;
        thermal[(0, 0)] = 208.4;
        thermal[(1, 1)] = 208.4;
        let p = check_physicality(&thermal).unwrap();
        assert!(p.physical);
        assert!((p.nu_min - 0.5).abs() < 1e-12);
        assert!((p.symplectic_eigenvalues[2] - 208.4).abs() < 1e-9);
        assert_eq!(
            check_physicality(&DMatrix::identity(3, 3)),
            Err(GaussianError::OddDimension(3))
        );
    }

    #[test]
    fn unphysical_input_rejected() {
        let r = ReducedCovariance::from_matrix(Matrix4::identity() * 0.25);
        assert!(matches!(
            log_negativity(&r),
            Err(GaussianError::UnphysicalState(_))
        ));
        let r = ReducedCovariance::from_matrix(Matrix4::identity() * -0.5);
        assert!(matches!(
            simon_criterion(&r),
            Err(GaussianError::UnphysicalState(_))
        ));
    }

    #[test]
    fn random_states_dual_epsilon_and_simon() {
        let mut rng = StdRng::seed_from_u64(99);
        let mut entangled = 0;
        for _ in 0..1000 {
            let vr = random_physical_two_mode(&mut rng);
            let n = log_negativity(&vr).unwrap();
            let spectral = ppt_epsilon_spectral(&vr).unwrap();
            assert!(
                (n.epsilon - spectral).abs() < 1e-9,
                "{} vs {}",
                n.epsilon,
                spectral
            );
            assert_eq!(simon_criterion(&vr).unwrap(), n.log_negativity > 0.0);
            assert_eq!(simon_determinant_form(&vr), n.entangled());
            entangled += n.entangled() as usize;
        }
        assert!(entangled > 100 && entangled < 900, "{entangled}");
    }

    proptest! {
        #[test]
        fn local_rotations_leave_negativity(seed in any::<u64>(), a in 0.0..6.3f64, b in 0.0..6.3f64) {
            let mut rng = StdRng::seed_from_u64(seed);
            let vr = random_physical_two_mode(&mut rng);
            let rot = local_rotation(&vr, a, b);
            let e0 = log_negativity(&vr).unwrap().log_negativity;
            let e1 = log_negativity(&rot).unwrap().log_negativity;
            prop_assert!((e0 - e1).abs() < 1e-9);
        }

        #[test]
        fn uncorrelated_modes_unentangled(seed in any::<u64>()) {
            let mut rng = StdRng::seed_from_u64(seed);
            let vr = random_physical_two_mode(&mut rng);
            let product = ReducedCovariance::from_blocks(vr.x(), vr.y(), Matrix2::zeros());
            if let Ok(n) = log_negativity(&product) {
                prop_assert_eq!(n.log_negativity, 0.0);
            }
            prop_assert!(log_negativity(&vr).unwrap().log_negativity >= 0.0);
        }
    }
}
