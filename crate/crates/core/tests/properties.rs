use hpe_admm::bregman::{DistanceGenerating, QuadraticDgf};
use hpe_admm::generators::{generate, prox_params, ProblemKind, Variant};
use hpe_admm::linalg::{DualValue, Matrix, ProductSeminormOp, ProductVector, PsdOperator, Vector};
use hpe_admm::monotone::{graph_samples, KktOperator};
use hpe_admm::padmm::{eta_k, golden_ratio, m_theta, sigma_theta, tau_theta, Admm, RateConstants};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss_vec(n: usize, rng: &mut ChaCha8Rng) -> Vector<f64> {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn gauss_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn random_product(dims: hpe_admm::linalg::ProductDims, rng: &mut ChaCha8Rng) -> ProductVector<f64> {
    ProductVector::new(gauss_vec(dims.s, rng), gauss_vec(dims.y, rng), gauss_vec(dims.x, rng))
}

/// PSD operator of the given rank built from a Gaussian factor.
fn low_rank_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> PsdOperator<f64> {
    PsdOperator::from_factor(&gauss_mat(n, rank, rng)).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs() + b.abs())
}

fn theta_strategy() -> impl Strategy<Value = f64> {
    (1e-6f64..=1.0).prop_map(|u| u * golden_ratio::<f64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sigma_theta_is_the_largest_psd_root(theta in theta_strategy()) {
        let sigma = sigma_theta(theta).unwrap();
        prop_assert!((1.0 / 3.0 - 1e-12..=1.0).contains(&sigma));
        let m = m_theta(theta, sigma);
        prop_assert!(m.det.abs() <= 1e-10);
        prop_assert!(m.min_eigenvalue >= -1e-10);
        // independent 2x2 minimum eigenvalue just above and below the root
        let min_eig = |s: f64| {
            let a = s * (1.0 + theta) - 1.0;
            let b = (s + theta - 1.0) * (1.0 - theta);
            let d = s - (1.0 - theta) * (1.0 - theta);
            0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
        };
        prop_assert!(min_eig((sigma + 1e-6).min(1.0)) >= -1e-10);
        if sigma < 1.0 - 1e-6 {
            prop_assert!(min_eig(sigma - 1e-6) < 0.0);
        }
    }

    #[test]
    fn tau_theta_matches_its_definition(theta in theta_strategy()) {
        let tau = tau_theta(theta).unwrap();
        let expect = if theta <= 1.0 { 4.0 / theta.sqrt() } else { 4.0 * theta.sqrt() / (2.0 - theta) };
        prop_assert!(close(tau, expect, 1e-14));
        prop_assert!(tau >= 4.0 - 1e-12);
    }

    #[test]
    fn eta_is_nonnegative_on_the_admissible_range(theta in theta_strategy(), seed in 0u64..1000, beta in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = gauss_vec(4, &mut rng);
        let dy_g = gauss_vec(3, &mut rng).norm_squared();
        let sigma = sigma_theta(theta).unwrap();
        prop_assert!(eta_k(beta, theta, sigma, &dx, dy_g).unwrap() >= 0.0);
    }

    #[test]
    fn product_seminorm_matches_assembled_operator(seed in 0u64..10_000, x_scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = low_rank_psd(4, 2, &mut rng);
        let gc = low_rank_psd(3, 3, &mut rng);
        let op = ProductSeminormOp::new(h, gc, 2, x_scale).unwrap();
        let z = random_product(op.dims(), &mut rng);
        let v = z.concat();
        let dense = op.assemble().unwrap();
        let direct = (v.transpose() * dense.matrix() * &v)[(0, 0)];
        prop_assert!(close(op.seminorm_squared(&z).unwrap(), direct, 1e-12));
        let applied = op.apply(&z).unwrap().concat();
        prop_assert!((applied - dense.matrix() * &v).norm() <= 1e-12 * (1.0 + v.norm() * dense.spectral_norm()));
    }

    #[test]
    fn dual_seminorm_of_an_image_is_the_seminorm(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = low_rank_psd(5, 2, &mut rng);
        let gc = low_rank_psd(3, 1, &mut rng);
        let op = ProductSeminormOp::new(h, gc, 2, 0.7).unwrap();
        let z = random_product(op.dims(), &mut rng);
        let r = op.apply(&z).unwrap();
        match op.dual_seminorm(&r).unwrap() {
            DualValue::Finite(d) => prop_assert!(close(d, op.seminorm(&z).unwrap(), 1e-9)),
            DualValue::OutOfDomain => prop_assert!(false, "image vector reported out of domain"),
        }
    }

    #[test]
    fn three_point_identity(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = ProductSeminormOp::new(low_rank_psd(3, 2, &mut rng), low_rank_psd(2, 2, &mut rng), 2, 1.3).unwrap();
        let w = QuadraticDgf::new(op);
        let dims = w.dims();
        let (z, zp, u) = (random_product(dims, &mut rng), random_product(dims, &mut rng), random_product(dims, &mut rng));
        // (dw)_z(u) − (dw)_{z'}(u) = (dw)_z(z') + ⟨∇w(z') − ∇w(z), u − z'⟩
        let lhs = w.dw_eval(&z, &u).unwrap() - w.dw_eval(&zp, &u).unwrap();
        let g = &w.gradient(&zp).unwrap() - &w.gradient(&z).unwrap();
        let rhs = w.dw_eval(&z, &zp).unwrap() + g.dot(&(&u - &zp));
        prop_assert!(close(lhs, rhs, 1e-11));
    }

    #[test]
    fn kkt_operator_is_monotone(seed in 0u64..500, lasso in any::<bool>()) {
        let kind = if lasso {
            ProblemKind::Lasso { m: 4, n: 6, mu: 0.3, seed }
        } else {
            ProblemKind::RandomQuadratic { n_s: 4, n_y: 3, n_x: 3, cond: 20.0, seed }
        };
        let inst = generate::<f64>(&kind).unwrap();
        let op = KktOperator::new(&inst.problem);
        let samples = graph_samples(&op, &inst.z0, 12, seed).unwrap();
        for a in &samples {
            for b in &samples {
                let gap = (&a.value - &b.value).dot(&(&a.point - &b.point));
                let scale = 1.0 + a.value.norm() * a.point.norm() + b.value.norm() * b.point.norm();
                prop_assert!(gap >= -1e-12 * scale);
            }
        }
    }

    #[test]
    fn step_residual_dual_norm_is_the_step_seminorm(seed in 0u64..300, theta in theta_strategy(), beta in 0.2f64..5.0) {
        let inst = generate::<f64>(&ProblemKind::RandomQuadratic { n_s: 5, n_y: 4, n_x: 3, cond: 10.0, seed }).unwrap();
        let params = prox_params(&inst.problem, &Variant::Proximal { h_scale: 1.0, g_scale: 1.0 }, beta, theta, seed).unwrap();
        let admm = Admm::new(&inst.problem, params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z_prev = random_product(inst.problem.dims(), &mut rng);
        let consts = RateConstants::new(theta, 1.0).unwrap();
        let rec = admm.step(1, &z_prev, &consts).unwrap();
        let dz = &z_prev - &rec.z();
        let w = admm.dgf();
        let seminorm = w.norm(&dz).unwrap();
        prop_assert!(close(rec.res_norm, seminorm, 1e-10));
        match w.dual_norm(&rec.r).unwrap() {
            DualValue::Finite(d) => prop_assert!(close(d, seminorm, 1e-8)),
            DualValue::OutOfDomain => prop_assert!(false, "residual outside the image of Q"),
        }
    }

    #[test]
    fn seeded_runs_are_reproducible(seed in 0u64..50) {
        let kind = ProblemKind::Lasso { m: 5, n: 8, mu: 0.2, seed };
        let a = generate::<f64>(&kind).unwrap();
        let b = generate::<f64>(&kind).unwrap();
        prop_assert_eq!(&a.z0, &b.z0);
        prop_assert_eq!(a.problem.d_mat(), b.problem.d_mat());
        let run = |inst: &hpe_admm::generators::Instance<f64>| {
            let params = prox_params(&inst.problem, &Variant::Standard, 1.0, 1.3, seed).unwrap();
            let admm = Admm::new(&inst.problem, params).unwrap();
            admm.run(&inst.z0, RateConstants::new(1.3, 1.0).unwrap(), hpe_admm::padmm::RunOptions { max_iter: 20, res_tol: None })
                .unwrap()
                .last()
        };
        prop_assert_eq!(run(&a), run(&b));
    }
}

#[test]
fn rank_deficient_seminorm_has_a_nontrivial_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let b = gauss_mat(4, 1, &mut rng);
    let h = PsdOperator::from_factor(&b).unwrap();
    let w = QuadraticDgf::on_single_space(h);
    // any vector orthogonal to the factor column has zero seminorm
    let mut v = gauss_vec(4, &mut rng);
    let col = b.column(0).into_owned();
    v -= &col * (col.dot(&v) / col.norm_squared());
    let z = ProductVector::new(v, Vector::zeros(0), Vector::zeros(0));
    assert!(w.norm(&z).unwrap() < 1e-12);
    let outside = ProductVector::new(gauss_vec(4, &mut rng), Vector::zeros(0), Vector::zeros(0));
    assert!(matches!(w.dual_norm(&outside).unwrap(), DualValue::OutOfDomain));
}
