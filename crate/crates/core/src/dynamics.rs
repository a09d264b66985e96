//! Linearized fluctuation dynamics: drift and diffusion matrices over the
//! fixed quadrature ordering, and asymptotic stability of the drift.

use nalgebra::{Complex, Matrix6, Schur};
use thiserror::Error;

use crate::dd::{determinant, DoubleDouble};
use crate::meanfield::MeanField;
use crate::params::DerivedParams;

/// Quadrature ordering shared by every 6×6 matrix in the crate:
/// `(δq_m, δp_m, δq_a, δp_a, δX, δY)`.
pub mod mode {
    pub const Q_M: usize = 0;
    pub const P_M: usize = 1;
    pub const Q_A: usize = 2;
    pub const P_A: usize = 3;
    pub const X: usize = 4;
    pub const Y: usize = 5;

    pub const NAMES: [&str; 6] = ["dq_m", "dp_m", "dq_a", "dp_a", "dX", "dY"];
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("eigenvalue iteration did not converge")]
    EigenSolverFailure,
    #[error("stability tolerance must be positive (got {0})")]
    BadTolerance(f64),
}

/// Generator of the fluctuation dynamics, Ṙ = M R + F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(Matrix6<f64>);

/// Symmetrized noise correlations entering V̇ = M V + V Mᵀ + D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(Matrix6<f64>);

impl DriftMatrix {
    pub fn from_matrix(m: Matrix6<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn kappa(&self) -> f64 {
        -self.0[(mode::X, mode::X)]
    }

    /// Similarity transform by the basis flip δY → −δY.
    pub fn flip_y(&self) -> Self {
        let mut m = self.0;
        for k in 0..6 {
            if k != mode::Y {
                m[(mode::Y, k)] = -m[(mode::Y, k)];
                m[(k, mode::Y)] = -m[(k, mode::Y)];
            }
        }
        Self(m)
    }
}

impl DiffusionMatrix {
    pub fn from_diagonal(d: [f64; 6]) -> Self {
        Self(Matrix6::from_diagonal(&d.into()))
    }

    pub fn from_matrix(m: Matrix6<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }
}

pub fn build_drift(dp: &DerivedParams, mf: &MeanField) -> DriftMatrix {
    use mode::*;
    let mut m = Matrix6::zeros();
    m[(Q_M, P_M)] = dp.mirror_freq;
    m[(P_M, Q_M)] = -dp.mirror_freq;
    m[(P_M, P_M)] = -dp.mirror_damping;
    m[(P_M, X)] = mf.chi_mc;

    m[(Q_A, P_A)] = dp.atom_freq;
    m[(P_A, Q_A)] = -dp.atom_freq;
    m[(Q_A, Q_A)] = -0.5 * dp.atom_damping;
    m[(P_A, P_A)] = -0.5 * dp.atom_damping;
    m[(P_A, X)] = -mf.chi_ac;

    m[(X, X)] = -dp.kappa;
    m[(X, Y)] = mf.delta_eff;
    m[(Y, X)] = -mf.delta_eff;
    m[(Y, Y)] = -dp.kappa;
    m[(Y, Q_M)] = mf.chi_mc;
    m[(Y, Q_A)] = -mf.chi_ac;
    DriftMatrix(m)
}

/// D = diag(0, γ_m(2n̄+1), γ_a/2, γ_a/2, κ, κ). The cavity input noise is
/// vacuum. The optional atomic damping is symmetric amplitude damping into a
/// zero-temperature bath, which keeps the steady state physical.
pub fn build_diffusion(dp: &DerivedParams) -> DiffusionMatrix {
    DiffusionMatrix::from_diagonal([
        0.0,
        dp.mirror_damping * (2.0 * dp.n_thermal + 1.0),
        0.5 * dp.atom_damping,
        0.5 * dp.atom_damping,
        dp.kappa,
        dp.kappa,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    /// Largest real part within the tolerance of zero.
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_real_part: f64,
    pub eigen_stable: bool,
    pub marginal: bool,
    pub hurwitz_stable: bool,
    /// Leading principal minors of the Hurwitz matrix of the characteristic
    /// polynomial of M/s, where s is the largest |M_ij|.
    pub hurwitz_determinants: [f64; 6],
    /// det(xI − M) coefficients in ascending powers of x.
    pub char_poly: [f64; 7],
}

impl StabilityReport {
    pub fn verdict(&self) -> Verdict {
        if self.eigen_stable {
            Verdict::Stable
        } else if self.marginal {
            Verdict::Marginal
        } else {
            Verdict::Unstable
        }
    }
}

pub fn stability(m: &DriftMatrix, tol: f64) -> Result<StabilityReport, DynamicsError> {
    if !(tol > 0.0) {
        return Err(DynamicsError::BadTolerance(tol));
    }
    let eigenvalues = eigenvalues(m.matrix())?;
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);

    let scale = m.matrix().amax();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let scaled = characteristic_polynomial_scaled(m.matrix(), scale);
    let minors = hurwitz_minors(&scaled);

    let mut char_poly = [0.0; 7];
    for (k, c) in scaled.iter().enumerate() {
        char_poly[k] = c.to_f64() * scale.powi(6 - k as i32);
    }
    let mut hurwitz_determinants = [0.0; 6];
    for (k, d) in minors.iter().enumerate() {
        hurwitz_determinants[k] = d.to_f64();
    }
    let hurwitz_stable = minors.iter().all(|d| *d > DoubleDouble::ZERO);

    Ok(StabilityReport {
        eigenvalues,
        max_real_part,
        eigen_stable: max_real_part < -tol,
        marginal: max_real_part.abs() <= tol,
        hurwitz_stable,
        hurwitz_determinants,
        char_poly,
    })
}

pub fn eigenvalues(m: &Matrix6<f64>) -> Result<Vec<Complex<f64>>, DynamicsError> {
    let schur =
        Schur::try_new(*m, f64::EPSILON, 100_000).ok_or(DynamicsError::EigenSolverFailure)?;
    let eig = schur.complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(DynamicsError::EigenSolverFailure);
    }
    Ok(eig.iter().copied().collect())
}

/// det(yI − M/s) by the Faddeev–LeVerrier recursion in double-double
/// arithmetic; ascending coefficients, monic.
fn characteristic_polynomial_scaled(m: &Matrix6<f64>, scale: f64) -> [DoubleDouble; 7] {
    const N: usize = 6;
    let a: [[DoubleDouble; N]; N] =
        std::array::from_fn(|i| std::array::from_fn(|j| DoubleDouble::from(m[(i, j)] / scale)));
    let mut c = [DoubleDouble::ZERO; N + 1];
    c[N] = DoubleDouble::ONE;
    let mut mk = [[DoubleDouble::ZERO; N]; N];
    for k in 1..=N {
        // M_k = A M_{k-1} + c_{N-k+1} I
        let mut next = [[DoubleDouble::ZERO; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut acc = DoubleDouble::ZERO;
                for l in 0..N {
                    acc = acc + a[i][l] * mk[l][j];
                }
                next[i][j] = acc;
            }
            next[i][i] = next[i][i] + c[N - k + 1];
        }
        mk = next;
        // c_{N-k} = -tr(A M_k) / k
        let mut tr = DoubleDouble::ZERO;
        for i in 0..N {
            for l in 0..N {
                tr = tr + a[i][l] * mk[l][i];
            }
        }
        c[N - k] = -(tr / DoubleDouble::from(k as f64));
    }
    c
}

/// Leading principal minors Δ_1..Δ_n of the Hurwitz matrix of a monic
/// polynomial given in ascending coefficients.
fn hurwitz_minors(c: &[DoubleDouble; 7]) -> [DoubleDouble; 6] {
    const N: usize = 6;
    // a_i = coefficient of y^(N-i)
    let a = |i: isize| -> DoubleDouble {
        if (0..=N as isize).contains(&i) {
            c[N - i as usize]
        } else {
            DoubleDouble::ZERO
        }
    };
    let h: Vec<Vec<DoubleDouble>> = (1..=N as isize)
        .map(|row| (1..=N as isize).map(|col| a(2 * col - row)).collect())
        .collect();
    std::array::from_fn(|k| {
        let sub: Vec<Vec<DoubleDouble>> = h[..=k].iter().map(|r| r[..=k].to_vec()).collect();
        determinant(sub)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_rad;
    use crate::testutil::{derived, mf, random_drift};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn uncoupled_drift_is_block_diagonal() {
        let dp = derived(6e7, 5e7, 4e7, 600.0, 10.0);
        let m = build_drift(&dp, &mf(0.0, 0.0, 3e7));
        let blocks = [[0, 1], [2, 3], [4, 5]];
        for (bi, b) in blocks.iter().enumerate() {
            for (bj, c) in blocks.iter().enumerate() {
                if bi != bj {
                    for &i in b {
                        for &j in c {
                            assert_eq!(m.matrix()[(i, j)], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn drift_entries_and_sparsity() {
        let wm = hz_to_rad(10e6);
        let dp = derived(wm, wm, 4.4e7, hz_to_rad(100.0), 200.0);
        let (cm, ca, d) = (5.3e7, 3.7e7, 0.5 * wm);
        let m = build_drift(&dp, &mf(cm, ca, d));
        let mm = m.matrix();
        assert_eq!(mm.iter().filter(|x| **x != 0.0).count(), 13);
        assert_eq!(mm[(0, 1)], wm);
        assert_eq!(mm[(2, 3)], wm);
        assert_eq!(mm.row(0).iter().filter(|x| **x != 0.0).count(), 1);
        assert_eq!(mm.row(2).iter().filter(|x| **x != 0.0).count(), 1);
        assert_eq!(
            (mm[(1, 4)], mm[(3, 4)], mm[(5, 0)], mm[(5, 2)]),
            (cm, -ca, cm, -ca)
        );
        assert_eq!(
            (mm[(4, 4)], mm[(5, 5)], mm[(4, 5)], mm[(5, 4)]),
            (-4.4e7, -4.4e7, d, -d)
        );
        assert_eq!(
            (mm[(1, 0)], mm[(1, 1)], mm[(3, 2)]),
            (-wm, -hz_to_rad(100.0), -wm)
        );
    }

    #[test]
    fn twelve_nonzeros_without_damping() {
        let dp = derived(1.0, 1.0, 1.0, 0.0, 0.0);
        let m = build_drift(&dp, &mf(0.3, 0.2, 0.5));
        assert_eq!(m.matrix().iter().filter(|x| **x != 0.0).count(), 12);
    }

    #[test]
    fn diffusion_entries() {
        let mut dp = derived(6e7, 6e7, 4e7, 600.0, 0.0);
        assert_eq!(
            build_diffusion(&dp),
            DiffusionMatrix::from_diagonal([0.0, 600.0, 0.0, 0.0, 4e7, 4e7])
        );
        dp.mirror_damping = 0.0;
        dp.n_thermal = 50.0;
        assert_eq!(
            build_diffusion(&dp),
            DiffusionMatrix::from_diagonal([0.0, 0.0, 0.0, 0.0, 4e7, 4e7])
        );
    }

    #[test]
    fn diffusion_thermal_regression() {
        // γ_m (2 n̄ + 1) with n̄ = 207.8665912977 at 10 MHz, 100 mK.
        let n = crate::params::thermal_occupation(hz_to_rad(10e6), 0.1).unwrap();
        let dp = derived(hz_to_rad(10e6), 1.0, 1.0, hz_to_rad(100.0), n);
        let d = build_diffusion(&dp);
        assert!(
            (d.matrix()[(1, 1)] / 261_841.180_989_779 - 1.0).abs() < 1e-9,
            "{}",
            d.matrix()[(1, 1)]
        );
    }

    #[test]
    fn negative_identity_is_stable() {
        let k = 4.4e7;
        let m = DriftMatrix::from_matrix(Matrix6::identity() * -k);
        let r = stability(&m, 1e-6).unwrap();
        assert!(r.eigen_stable && r.hurwitz_stable && !r.marginal);
        assert!((r.max_real_part + k).abs() < 1e-6 * k);
        assert_eq!(r.verdict(), Verdict::Stable);
    }

    #[test]
    fn undamped_atom_is_marginal() {
        let wm = hz_to_rad(10e6);
        let dp = derived(wm, 0.9 * wm, 4.4e7, hz_to_rad(100.0), 10.0);
        let m = build_drift(&dp, &mf(0.0, 0.0, 0.5 * wm));
        let r = stability(&m, 1e-6).unwrap();
        assert!(!r.eigen_stable);
        assert!(r.marginal);
        assert_eq!(r.verdict(), Verdict::Marginal);
    }

    #[test]
    fn bad_tolerance() {
        let m = DriftMatrix::from_matrix(-Matrix6::identity());
        assert_eq!(stability(&m, 0.0), Err(DynamicsError::BadTolerance(0.0)));
    }

    #[test]
    fn hurwitz_agrees_with_eigenvalues() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut checked = 0;
        let mut stable = 0;
        while checked < 1000 {
            let (m, tol) = random_drift(&mut rng);
            let r = stability(&m, tol).unwrap();
            if r.max_real_part.abs() < 10.0 * tol {
                continue;
            }
            checked += 1;
            stable += r.eigen_stable as usize;
            assert_eq!(r.hurwitz_stable, r.eigen_stable, "{r:?}");
        }
        assert!(stable > 50 && stable < 950, "{stable}");
    }

    #[test]
    fn char_poly_matches_eigenvalue_product() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let (m, tol) = random_drift(&mut rng);
            let r = stability(&m, tol).unwrap();
            // Expand Π(x − λ_i).
            let mut p = vec![Complex::new(1.0, 0.0)];
            for lam in &r.eigenvalues {
                let mut next = vec![Complex::new(0.0, 0.0); p.len() + 1];
                for (k, c) in p.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * lam;
                }
                p = next;
            }
            let s = m.matrix().amax();
            for k in 0..7 {
                let a = r.char_poly[k];
                let b = p[k].re;
                let natural = s.powi(6 - k as i32);
                let err = (a - b).abs() / a.abs().max(b.abs()).max(1e-6 * natural);
                assert!(err < 1e-8, "k={k} a={a:e} b={b:e}");
            }
        }
    }

    #[test]
    fn flip_y_preserves_verdict_and_spectrum() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let (m, tol) = random_drift(&mut rng);
            let f = m.flip_y();
            let mm = f.matrix();
            // Δ → −Δ together with the sign of the δY couplings.
            assert_eq!(mm[(4, 5)], -m.matrix()[(4, 5)]);
            assert_eq!(mm[(5, 0)], -m.matrix()[(5, 0)]);
            let a = stability(&m, tol).unwrap();
            let b = stability(&f, tol).unwrap();
            assert_eq!(a.verdict(), b.verdict());
            assert_eq!(a.hurwitz_stable, b.hurwitz_stable);
            assert!((a.max_real_part - b.max_real_part).abs() < 1e-6 * m.matrix().amax());
        }
    }
}
