use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use hybrid_entanglement::dynamics::{build_diffusion, build_drift, stability};
use hybrid_entanglement::gaussian::{
    check_physicality6, log_negativity, reduce, BipartitePartition,
};
use hybrid_entanglement::steadystate::{lyapunov_residual, solve_lyapunov_screened};
use hybrid_entanglement::validate::{random_linearized_point, random_physical_two_mode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stable_points_give_physical_steady_states(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (dp, mf) = random_linearized_point(&mut rng);
        let m = build_drift(&dp, &mf);
        let d = build_diffusion(&dp);
        let report = stability(&m, dp.stability_tol).unwrap();
        prop_assume!(report.eigen_stable);
        let v = solve_lyapunov_screened(&m, &d, &report).unwrap();
        let dense = |x: &nalgebra::Matrix6<f64>| DMatrix::from_fn(6, 6, |i, j| x[(i, j)]);
        let res = lyapunov_residual(&dense(m.matrix()), &dense(d.matrix()), &dense(v.matrix()));
        prop_assert!(res <= 1e-10 * d.matrix().amax(), "residual {res}");
        let phys = check_physicality6(&v).unwrap();
        prop_assert!(phys.physical, "ν_min {}", phys.nu_min);
    }

    #[test]
    fn negativity_is_nonnegative_and_flags_entanglement(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let vr = random_physical_two_mode(&mut rng);
        let n = log_negativity(&vr).unwrap();
        prop_assert!(n.epsilon > 0.0);
        prop_assert!(n.log_negativity >= 0.0);
        prop_assert_eq!(n.entangled(), n.log_negativity > 0.0);
    }

    #[test]
    fn partitions_of_a_steady_state_share_its_blocks(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (dp, mf) = random_linearized_point(&mut rng);
        let m = build_drift(&dp, &mf);
        let report = stability(&m, dp.stability_tol).unwrap();
        prop_assume!(report.eigen_stable);
        let v = solve_lyapunov_screened(&m, &build_diffusion(&dp), &report).unwrap();
        let mc = reduce(&v, BipartitePartition::MirrorField);
        let ma = reduce(&v, BipartitePartition::MirrorAtom);
        prop_assert_eq!(mc.x(), ma.x());
    }
}
