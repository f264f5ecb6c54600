use approx::assert_relative_eq;
use projfree_core::fw_subsolver::{solve_subproblem, SubproblemSpec};
use projfree_core::matreg::{generate, hessian_min_eigenvalue, random_feasible, GenSpec};
use projfree_core::nuclear_ball::l1_ball_project;
use projfree_core::{CostLedger, NuclearBall, ParamMatrix, Problem};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn spec(d: usize, r: usize, alpha: f64, w: Option<f64>, seed: u64) -> GenSpec {
    GenSpec {
        d,
        r,
        alpha,
        smoothness: 8.0,
        sigma_hat: 1.0,
        label_noise_std: 0.1,
        w_scale: w,
        rho: 4.0,
        seed,
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ParamMatrix {
    ParamMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn design_matrix(p: &Problem) -> DMatrix<f64> {
    DMatrix::from_row_slice(p.n(), p.dim() * p.dim(), p.designs())
}

#[test]
fn component_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for w in [None, Some(0.25)] {
        let (_, p) = generate(&spec(4, 1, 2.0, w, 3)).unwrap();
        let theta = gaussian(4, 4, &mut rng);
        for i in [0, p.n() - 1] {
            let g = p.component_gradient(i, &theta, &mut CostLedger::new()).unwrap();
            let h = 1e-5;
            let fd = ParamMatrix::from_fn(4, 4, |a, b| {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up.set(a, b, theta.get(a, b) + h);
                down.set(a, b, theta.get(a, b) - h);
                (p.component_objective(i, &up).unwrap() - p.component_objective(i, &down).unwrap()) / (2.0 * h)
            });
            assert!(fd.distance(&g).unwrap() <= 1e-7 * g.frobenius_norm().max(1.0));
        }
    }
}

#[test]
fn linear_oracle_matches_dense_svd_on_rectangular_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in [1, 2, 3, 9, 16] {
        let ball = NuclearBall::new(2.5, d).unwrap();
        for _ in 0..10 {
            let g = gaussian(d, d, &mut rng);
            let s = ball.linear_oracle(&g, &mut rng, &mut CostLedger::new()).unwrap();
            let sigma = g.singular_values().unwrap()[0];
            assert_relative_eq!(g.dot(&s), -2.5 * sigma, max_relative = 1e-9);
            // extreme point: rank one with nuclear norm ρ
            let sv = s.singular_values().unwrap();
            assert_relative_eq!(sv[0], 2.5, max_relative = 1e-9);
            assert!(sv.iter().skip(1).all(|&x| x < 1e-9));
        }
    }
}

#[test]
fn linear_oracle_handles_repeated_top_singular_value() {
    let ball = NuclearBall::new(1.0, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // orthogonal matrix: every singular value is 1
    let q = DMatrix::from_fn(12, 12, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
    let g = ParamMatrix::from_dmatrix(&q);
    let s = ball.linear_oracle(&g, &mut rng, &mut CostLedger::new()).unwrap();
    assert_relative_eq!(g.dot(&s), -1.0, max_relative = 1e-9);
}

#[test]
fn wolfe_gap_matches_its_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ball = NuclearBall::new(3.0, 7).unwrap();
    for _ in 0..20 {
        let grad = gaussian(7, 7, &mut rng);
        let x = random_feasible(7, 3.0, &mut rng).unwrap();
        let (gap, atom) = ball.wolfe_gap(&grad, &x, &mut rng, &mut CostLedger::new()).unwrap();
        let sigma = grad.singular_values().unwrap()[0];
        assert_relative_eq!(gap, grad.dot(&x) + 3.0 * sigma, max_relative = 1e-9, epsilon = 1e-12);
        assert!(gap >= -1e-12);
        assert_relative_eq!(grad.dot(&x.sub(&atom)), gap, max_relative = 1e-9, epsilon = 1e-12);
    }
}

#[test]
fn projection_is_idempotent_and_lands_on_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ball = NuclearBall::new(1.5, 6).unwrap();
    for _ in 0..20 {
        let x = gaussian(6, 6, &mut rng);
        let mut ledger = CostLedger::new();
        let p = ball.project(&x, &mut ledger).unwrap();
        assert_relative_eq!(p.nuclear_norm().unwrap(), 1.5, max_relative = 1e-10);
        let again = ball.project(&p, &mut ledger).unwrap();
        assert!(again.distance(&p).unwrap() < 1e-10);
        assert_eq!(ledger.projection_calls, 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_satisfies_the_variational_inequality(seed in any::<u64>(), scale in 0.05f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ball = NuclearBall::new(1.0, 5).unwrap();
        let mut x = gaussian(5, 5, &mut rng);
        x.scale_mut(scale);
        let p = ball.project(&x, &mut CostLedger::new()).unwrap();
        prop_assert!(ball.contains(&p, 1e-10).unwrap());
        let r = x.sub(&p);
        for _ in 0..50 {
            let y = random_feasible(5, 1.0, &mut rng).unwrap();
            prop_assert!(r.dot(&y.sub(&p)) <= 1e-10);
        }
    }

    #[test]
    fn l1_projection_matches_bisection(v in prop::collection::vec(0.0f64..5.0, 1..12), z in 0.1f64..6.0) {
        let w = l1_ball_project(&v, z).unwrap();
        let total: f64 = v.iter().sum();
        if total <= z {
            prop_assert_eq!(&w, &v);
        } else {
            // threshold τ with Σ max(v_i − τ, 0) = z
            let (mut lo, mut hi) = (0.0f64, v.iter().cloned().fold(0.0, f64::max));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let s: f64 = v.iter().map(|x| (x - mid).max(0.0)).sum();
                if s > z { lo = mid } else { hi = mid }
            }
            for (a, b) in w.iter().zip(&v) {
                prop_assert!((a - (b - lo).max(0.0)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn subsolver_reaches_the_closed_form_minimizer() {
    // argmin β/2‖x − c‖² + ⟨g, x⟩ over the ball is Π(c − g/β)
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let d = rng.random_range(2..8);
        let rho = rng.random_range(0.5..3.0);
        let ball = NuclearBall::new(rho, d).unwrap();
        let beta = rng.random_range(0.5..5.0);
        let c = gaussian(d, d, &mut rng);
        let g = gaussian(d, d, &mut rng);
        let mut target = c.clone();
        target.axpy(-1.0 / beta, &g);
        let exact = ball.project(&target, &mut CostLedger::new()).unwrap();
        let eta = 1e-4;
        let sp = SubproblemSpec::new(beta, c, g, eta, ParamMatrix::zeros(d, d), rho);
        let sol = solve_subproblem(&sp, &ball, &mut rng, &mut CostLedger::new()).unwrap();
        assert!(sol.final_gap <= eta);
        assert!(sp.value(&sol.x) - sp.value(&exact) <= eta);
        // strong convexity turns the gap into a distance bound
        assert!(sol.x.distance(&exact).unwrap() <= (2.0 * eta / beta).sqrt() + 1e-9);
    }
}

#[test]
fn variance_reduced_gradient_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for w in [None, Some(0.1)] {
        let (_, p) = generate(&spec(4, 1, 5.0, w, 8)).unwrap();
        let z = random_feasible(4, 4.0, &mut rng).unwrap();
        let y = random_feasible(4, 4.0, &mut rng).unwrap();
        let mut ledger = CostLedger::new();
        let gy = p.full_gradient(&y, &mut ledger).unwrap();
        let gz = p.full_gradient(&z, &mut ledger).unwrap();
        let draws = 20_000;
        let mut mean = ParamMatrix::zeros(4, 4);
        let mut spread = 0.0;
        for _ in 0..draws {
            let v = p.vr_gradient(&z, &y, &gy, 1, &mut rng, &mut ledger).unwrap();
            spread += v.sub(&gz).frobenius_norm_sq();
            mean.axpy(1.0 / draws as f64, &v);
        }
        let std_err = (spread / draws as f64 / draws as f64).sqrt();
        assert!(mean.distance(&gz).unwrap() <= 5.0 * std_err, "{} vs {std_err}", mean.distance(&gz).unwrap());
    }
}

#[test]
fn generated_constants_match_dense_computations() {
    for w in [None, Some(0.2)] {
        let (_, p) = generate(&spec(5, 2, 4.0, w, 9)).unwrap();
        let x = design_matrix(&p);
        let cov = x.transpose() * &x / p.n() as f64;
        let eig = cov.symmetric_eigen().eigenvalues;
        let top = eig.max();
        let max_row = (0..p.n()).map(|i| x.row(i).norm_squared()).fold(0.0, f64::max);
        let c = p.constants();
        match w {
            None => {
                assert_relative_eq!(c.smoothness, top, max_relative = 1e-6);
                assert_relative_eq!(c.component_smoothness, max_row, max_relative = 1e-12);
                assert_eq!(c.lower_smoothness, 0.0);
                assert_relative_eq!(c.rsc_sigma_hat, 0.5);
            }
            Some(w) => {
                assert_relative_eq!(c.smoothness, (top - w).max(w), max_relative = 1e-6);
                assert_relative_eq!(c.component_smoothness, (max_row - w).max(w), max_relative = 1e-12);
                assert_relative_eq!(c.lower_smoothness, w);
                assert_relative_eq!(c.rsc_sigma_hat, 0.25);
            }
        }
    }
}

#[test]
fn smoothness_bounds_the_first_order_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (_, p) = generate(&spec(5, 1, 6.0, None, 11)).unwrap();
    let l = p.constants().smoothness;
    for _ in 0..50 {
        let u = gaussian(5, 5, &mut rng);
        let v = gaussian(5, 5, &mut rng);
        let e = projfree_core::matreg::first_order_error(&p, &u, &v).unwrap();
        let bound = 0.5 * l * v.sub(&u).frobenius_norm_sq();
        assert!(e >= -1e-10 && e <= bound * (1.0 + 1e-8));
    }
}

#[test]
fn undersampled_corrected_loss_has_negative_curvature() {
    // n = 20 < d² = 100: ZᵀZ/n is singular, so Γ̂ has eigenvalue −w σ̂
    let (_, p) = generate(&spec(10, 1, 2.0, Some(0.1), 12)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let lam = hessian_min_eigenvalue(&p, 10_000, &mut rng);
    let mut h = {
        let x = design_matrix(&p);
        x.transpose() * &x / p.n() as f64
    };
    for (i, w) in p.noise_cov().unwrap().iter().enumerate() {
        h[(i, i)] -= w;
    }
    let dense = h.symmetric_eigen().eigenvalues.min();
    assert_relative_eq!(lam, dense, max_relative = 1e-6);
    assert_relative_eq!(lam, -0.1, max_relative = 1e-6);
}
