use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use varifold_curvature::estimator::curvature::beta_eps;
use varifold_curvature::estimator::{CurvatureEngine, EngineOptions, NeighborQuery, Pipeline};
use varifold_curvature::oracle::{sample, SampleOptions, Shape};
use varifold_curvature::tensor::{a_to_b, b_to_a, solve_curvature_system, system_residual};
use varifold_curvature::{DirectionMatrix, KernelPair, PointCloudVarifold, Projector, SffTensor, Tensor3};

fn projector(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Projector {
    let span: Vec<DVector<f64>> = (0..d).map(|_| DVector::from_fn(n, |_, _| rng.sample(StandardNormal))).collect();
    Projector::from_span(&span).unwrap()
}

fn direction_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DirectionMatrix {
    let count = rng.random_range(1..=5);
    let planes: Vec<Projector> = (0..count).map(|_| projector(rng, n, d)).collect();
    let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    DirectionMatrix::from_weighted_planes(weights.iter().copied().zip(&planes)).unwrap()
}

fn rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn jk_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Tensor3 {
    let raw = Tensor3::from_fn(n, |_, _, _| rng.random_range(-1.0..1.0));
    Tensor3::from_fn(n, |i, j, k| raw[(i, j, k)] + raw[(i, k, j)])
}

fn cloud(rng: &mut ChaCha8Rng, count: usize, n: usize, d: usize) -> PointCloudVarifold {
    let positions = (0..count * n).map(|_| rng.random_range(0.0..1.0)).collect();
    let planes = (0..count).map(|_| projector(rng, n, d)).collect();
    let masses = (0..count).map(|_| rng.random_range(0.5..2.0)).collect();
    PointCloudVarifold::new(positions, planes, masses, d).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=5).prop_flat_map(|n| (1..n).prop_map(move |d| (n, d)))
}

proptest! {
    #[test]
    fn solver_residual_is_tiny((n, d) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = direction_matrix(&mut rng, n, d);
        let b = Tensor3::from_fn(n, |_, _, _| rng.random_range(-5.0..5.0));
        let a = solve_curvature_system(&c, &b).unwrap();
        prop_assert!(system_residual(&c, &a, &b) <= 1e-12 * (1.0 + b.max_abs()));
        prop_assert!(c.det_identity_plus() >= 2f64.powi(d as i32) - 1e-9);
        prop_assert!(c.inverse_operator_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn solver_keeps_jk_symmetry((n, d) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = direction_matrix(&mut rng, n, d);
        let b = jk_symmetric(&mut rng, n);
        let a = solve_curvature_system(&c, &b).unwrap();
        prop_assert!(a.jk_asymmetry() <= 1e-13);
    }

    #[test]
    fn a_and_b_forms_round_trip(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = jk_symmetric(&mut rng, n);
        let b = a_to_b(&a).unwrap();
        prop_assert!(b.ij_asymmetry() <= 1e-14);
        prop_assert!(b_to_a(&b).max_abs_diff(&a) <= 1e-14);
        let raw = Tensor3::from_fn(n, |_, _, _| rng.random_range(-1.0..1.0));
        let sff = SffTensor::new(Tensor3::from_fn(n, |i, j, k| raw[(i, j, k)] + raw[(j, i, k)])).unwrap();
        prop_assert!(a_to_b(&b_to_a(&sff)).unwrap().max_abs_diff(&sff) <= 1e-14);
    }

    #[test]
    fn solver_is_rotation_equivariant((n, d) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planes: Vec<Projector> = (0..3).map(|_| projector(&mut rng, n, d)).collect();
        let r = rotation(&mut rng, n);
        let c = DirectionMatrix::from_weighted_planes(planes.iter().map(|p| (1.0, p))).unwrap();
        let rotated: Vec<Projector> = planes.iter().map(|p| p.conjugate(&r)).collect();
        let rc = DirectionMatrix::from_weighted_planes(rotated.iter().map(|p| (1.0, p))).unwrap();
        let b = Tensor3::from_fn(n, |_, _, _| rng.random_range(-1.0..1.0));
        let a = solve_curvature_system(&c, &b).unwrap();
        let ra = solve_curvature_system(&rc, &b.rotate(&r)).unwrap();
        prop_assert!(ra.max_abs_diff(&a.rotate(&r)) <= 1e-12);
    }

    #[test]
    fn beta_structure_on_random_clouds((n, d) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = cloud(&mut rng, 200, n, d);
        let kernels = KernelPair::default_for(d, n).unwrap();
        let Ok(beta) = beta_eps(&v, 0, &kernels, 0.6) else { return Ok(()) };
        let h = beta.trace_outer();
        prop_assert!(beta.jk_asymmetry() <= 1e-12 * (1.0 + beta.max_abs()));
        prop_assert!((beta.trace_inner() - h * d as f64).amax() <= 1e-10);
    }

    #[test]
    fn beta_transforms_with_rigid_motion_and_scale(seed in any::<u64>(), scale in 0.25f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = cloud(&mut rng, 200, 3, 2);
        let kernels = KernelPair::default_for(2, 3).unwrap();
        let r = rotation(&mut rng, 3);
        let shift: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let Ok(beta) = beta_eps(&v, 0, &kernels, 0.5) else { return Ok(()) };
        let moved = beta_eps(&v.transformed(&r, scale, &shift), 0, &kernels, 0.5 * scale).unwrap();
        let mut expected = beta.rotate(&r);
        expected.scale(1.0 / scale);
        prop_assert!(moved.max_abs_diff(&expected) <= 1e-10 * (1.0 + beta.max_abs()));
    }
}

#[test]
fn serial_and_parallel_runs_agree() {
    let sampled = sample(&Shape::Torus { major: 2.0, minor: 0.5 }, &SampleOptions::new(3000, 4).with_noise(0.01)).unwrap();
    let kernels = KernelPair::default_for(2, 3).unwrap();
    let results = |parallel| {
        let options = EngineOptions { query: NeighborQuery::knn(30).unwrap(), pipeline: Pipeline::Full, parallel };
        CurvatureEngine::new(&sampled.cloud, kernels.clone(), options).unwrap().evaluate_all()
    };
    let serial = results(false);
    let parallel = results(true);
    assert_eq!(serial.len(), parallel.len());
    for (a, b) in serial.iter().zip(&parallel) {
        assert_eq!(a.status, b.status);
        assert_eq!(a.gauss.to_bits(), b.gauss.to_bits());
        assert_eq!(a.wsff.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.wsff.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
