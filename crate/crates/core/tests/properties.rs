use proptest::prelude::*;

use truncmean::experiments::generate_dominant_problem;
use truncmean::problem_file::ProblemFile;
use truncmean::solver::{apply_t_i, gauss_seidel_sweep, solve, SolverConfig};
use truncmean::special::{f, f_prime, SQRT_PI};
use truncmean::univariate::{truncated_mean_one_sided, TruncationBound};

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f_prime_bounded_and_f_decreasing(x in -30.0f64..30.0, dx in 1e-6f64..5.0) {
        let d = f_prime(x);
        prop_assert!(d <= 0.0 && d >= -SQRT_PI - 1e-12);
        prop_assert!(f(x + dx) <= f(x));
    }

    #[test]
    fn right_cut_is_reflected_left_cut(mu in -10.0f64..10.0, sigma in 0.05f64..5.0, off in -6.0f64..6.0) {
        let b = mu + off * sigma;
        let right = truncated_mean_one_sided(mu, sigma, TruncationBound::right(b));
        let left = truncated_mean_one_sided(-mu, sigma, TruncationBound::left(-b));
        prop_assert!((right + left).abs() <= 1e-12 * (1.0 + right.abs()));
        prop_assert!(right <= b && right <= mu);
    }

    #[test]
    fn coordinate_map_is_lipschitz(n in 2usize..9, seed in any::<u64>(), shift in prop::collection::vec(-3.0f64..3.0, 8)) {
        let p = generate_dominant_problem(n, seed).unwrap();
        let params = p.conditional_params().unwrap();
        let x: Vec<f64> = p.mu().to_vec();
        let y: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let d = inf_dist(&x, &y);
        for i in 0..n {
            let gap = (apply_t_i(i, &x, &params, p.bounds()[i]) - apply_t_i(i, &y, &params, p.bounds()[i])).abs();
            prop_assert!(gap <= params.coupling_norm(i) * d + 1e-12);
        }
    }

    #[test]
    fn sweep_contracts(n in 2usize..9, seed in any::<u64>(), shift in prop::collection::vec(-3.0f64..3.0, 8)) {
        let p = generate_dominant_problem(n, seed).unwrap();
        let params = p.conditional_params().unwrap();
        let alpha = params.dominance().modulus;
        let x: Vec<f64> = p.mu().to_vec();
        let y: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let sx = gauss_seidel_sweep(&x, &params, p.bounds());
        let sy = gauss_seidel_sweep(&y, &params, p.bounds());
        prop_assert!(inf_dist(&sx, &sy) <= alpha * inf_dist(&x, &y) + 1e-12);
    }

    #[test]
    fn fixed_point_respects_cuts_and_start(n in 1usize..9, seed in any::<u64>(), offset in -20.0f64..20.0) {
        let p = generate_dominant_problem(n, seed).unwrap();
        let cfg = SolverConfig { tol: 1e-14, max_iters: 5_000, ..Default::default() };
        let a = solve(&p, &cfg).unwrap();
        prop_assert!(a.converged);
        prop_assert!(p.contains(a.fixed_point()));
        let start: Vec<f64> = p.mu().iter().map(|m| m + offset).collect();
        let b = solve(&p, &SolverConfig { initial: Some(start), ..cfg }).unwrap();
        prop_assert!(inf_dist(a.fixed_point(), b.fixed_point()) <= 1e-9);
    }

    #[test]
    fn steps_decay_geometrically(n in 2usize..9, seed in any::<u64>()) {
        let p = generate_dominant_problem(n, seed).unwrap();
        let t = solve(&p, &SolverConfig::default()).unwrap();
        let alpha = t.modulus.modulus;
        for w in t.steps_inf.windows(2) {
            prop_assert!(w[1] <= alpha * w[0] + 1e-12);
        }
    }

    #[test]
    fn problem_file_round_trip(n in 1usize..8, seed in any::<u64>()) {
        let p = generate_dominant_problem(n, seed).unwrap();
        let text = ProblemFile::from_problem(&p).to_json();
        let back = ProblemFile::from_json(&text).unwrap().into_problem().unwrap();
        prop_assert_eq!(back, p);
    }
}
