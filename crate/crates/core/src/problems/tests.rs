use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::domain::{pre_average, EmpiricalLoss};
use crate::solvers::{minimize_empirical, GapCertificate, Solver};

fn stream(seed: u64) -> StreamRng {
    SeedTree::new(seed).stream(Purpose::Fuzz, 0, 0)
}

fn gaussian(d: usize, sigma0: f64, set: FeasibleSet) -> Problem {
    Problem::new(ProblemFamily::GaussianMean { sigma0 }, d, Some(set)).unwrap()
}

fn newsvendor(c1: f64, c2: f64) -> Problem {
    let family = ProblemFamily::Newsvendor { c1, c2, sigma0: 1.0 };
    Problem::new(family, 1, Some(FeasibleSet::interval(-100.0, 100.0).unwrap())).unwrap()
}

fn scalar_batches(values: &[f64]) -> Vec<SampleBatch> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| SampleBatch::scalars(i + 1, vec![*v]).unwrap())
        .collect()
}

#[test]
fn pre_average_single_window_is_last_batch() {
    let p = gaussian(1, 1.0, FeasibleSet::interval(-5.0, 5.0).unwrap());
    let history = scalar_batches(&[0.3, -1.2, 2.0]);
    let f = pre_average(p.model().as_ref(), &history, 4, 1).unwrap();
    let last = EmpiricalLoss::new(p.model().as_ref(), &history[2..]).unwrap();
    for t in [-3.0, 0.0, 0.7, 4.0] {
        assert_eq!(f.evaluate(&[t]), last.evaluate(&[t]));
    }
}

#[test]
fn pre_average_two_batch_minimizer_is_mean_of_means() {
    let p = gaussian(2, 1.0, FeasibleSet::centered_ball(2, 100.0).unwrap());
    let b1 = SampleBatch::new(1, 0, 2, vec![1.0, 2.0, 3.0, 0.0]).unwrap();
    let b2 = SampleBatch::new(2, 0, 2, vec![-1.0, 4.0, 5.0, 2.0]).unwrap();
    let history = vec![b1, b2];
    let f = pre_average(p.model().as_ref(), &history, 3, 2).unwrap();
    let solved = Solver::default().solve(&f, p.set(), 3, None).unwrap();
    // batch means (2, 1) and (2, 3)
    assert_eq!(solved.theta.as_slice(), &[2.0, 2.0]);
}

#[test]
fn pre_average_newsvendor_hand_value() {
    let p = newsvendor(1.0, 1.0);
    let history = scalar_batches(&[0.0, 1.0, 5.0]);
    let f = pre_average(p.model().as_ref(), &history, 4, 3).unwrap();
    assert!((f.evaluate(&[1.0]) - 5.0 / 3.0).abs() < 1e-15);
}

#[test]
fn pre_average_window_errors() {
    let p = newsvendor(1.0, 1.0);
    let history = scalar_batches(&[0.0, 1.0, 5.0]);
    let m = p.model().as_ref();
    assert!(matches!(pre_average(m, &history, 4, 0), Err(SawsError::WindowOutOfRange { .. })));
    assert!(matches!(pre_average(m, &history, 4, 4), Err(SawsError::WindowOutOfRange { .. })));
    assert!(pre_average(m, &history, 6, 1).is_err());
}

#[test]
fn empirical_loss_splits_into_sub_windows() {
    let p = gaussian(1, 1.0, FeasibleSet::interval(-5.0, 5.0).unwrap());
    let mut rng = stream(3);
    let history: Vec<_> = (1..=7)
        .map(|n| p.sample_batch(&[0.2], 3, n, 0, &mut rng).unwrap())
        .collect();
    let m = p.model().as_ref();
    let all = EmpiricalLoss::new(m, &history).unwrap();
    let (a, b) = history.split_at(3);
    let fa = EmpiricalLoss::new(m, a).unwrap();
    let fb = EmpiricalLoss::new(m, b).unwrap();
    for t in [-1.0, 0.0, 2.5] {
        let mixed = (3.0 * fa.evaluate(&[t]) + 4.0 * fb.evaluate(&[t])) / 7.0;
        assert!((all.evaluate(&[t]) - mixed).abs() < 1e-12);
    }
}

#[test]
fn empirical_loss_scales_with_losses() {
    // newsvendor (2, 2) is twice newsvendor (1, 1) pointwise
    let history = scalar_batches(&[0.0, 1.0, 5.0, -2.0]);
    let p1 = newsvendor(1.0, 1.0);
    let p2 = newsvendor(2.0, 2.0);
    let f1 = EmpiricalLoss::new(p1.model().as_ref(), &history).unwrap();
    let f2 = EmpiricalLoss::new(p2.model().as_ref(), &history).unwrap();
    for t in [-3.0, 0.5, 4.0] {
        assert!((f2.evaluate(&[t]) - 2.0 * f1.evaluate(&[t])).abs() < 1e-14);
    }
}

#[test]
fn gaussian_batch_mean_concentrates() {
    let p = gaussian(1, 2.0, FeasibleSet::interval(-5.0, 5.0).unwrap());
    let batch = p.sample_batch(&[0.0], 100_000, 1, 0, &mut stream(11)).unwrap();
    let mean = batch.raw().iter().sum::<f64>() / 100_000.0;
    assert!(mean.abs() <= 4.0 * 2.0 / (100_000f64).sqrt());
}

#[test]
fn linear_opt_moments() {
    let d = 3;
    let mut rng = stream(5);
    let n = 100_000;
    let mut first = vec![0.0; d];
    let mut second = vec![0.0; d * d];
    for _ in 0..n {
        let z = sample_linear_opt(&[0.0; 3], d, &mut rng).unwrap();
        for i in 0..d {
            first[i] += z[i] / n as f64;
            for j in 0..d {
                second[i * d + j] += z[i] * z[j] / n as f64;
            }
        }
    }
    for i in 0..d {
        assert!(first[i].abs() < 0.05);
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((second[i * d + j] - target).abs() < 0.05);
        }
    }
}

#[test]
fn linear_opt_sampler_examples() {
    let mut rng = stream(9);
    for _ in 0..100 {
        assert_eq!(sample_linear_opt(&[0.5], 1, &mut rng).unwrap(), vec![1.0]);
    }
    let mut counts = [0usize; 4];
    let n = 100_000;
    for _ in 0..n {
        let z = sample_linear_opt(&[0.0, 0.0], 2, &mut rng).unwrap();
        let nonzero: Vec<_> = z.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].abs() - 2f64.sqrt()).abs() < 1e-15);
        let j = if z[0] != 0.0 { 0 } else { 1 };
        let sign = if z[j] > 0.0 { 0 } else { 1 };
        counts[2 * j + sign] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 0.25).abs() < 0.02);
    }
    assert!(sample_linear_opt(&[0.6], 1, &mut rng).is_err());
}

#[test]
fn linear_opt_loss_bounded_on_cube() {
    let d = 4;
    let p = Problem::new(ProblemFamily::LinearOpt, d, None).unwrap();
    let mut rng = stream(13);
    let corner = vec![1.0 / (d as f64).sqrt(); d];
    for _ in 0..1000 {
        let z = sample_linear_opt(&[0.1, -0.3, 0.5, 0.0], d, &mut rng).unwrap();
        let mut theta: Vec<f64> = corner.iter().map(|c| c * (rng.gen::<f64>() * 2.0 - 1.0)).collect();
        p.set().project_in_place(&mut theta);
        assert!(p.model().loss(&theta, &z).abs() <= 1.0 + 1e-12);
        assert!(p.model().loss(&corner, &z).abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn newsvendor_point_mass_minimizer() {
    let family = ProblemFamily::Newsvendor { c1: 1.0, c2: 3.0, sigma0: 0.0 };
    let p = Problem::new(family, 1, None).unwrap();
    let f = p.population(&[4.0], &MonteCarloSpec::seeded(1000, 1), 0).unwrap();
    assert_eq!(f.minimizer(), &[4.0]);
}

#[test]
fn monte_carlo_population_requires_seed() {
    let p = newsvendor(1.0, 3.0);
    let err = p.population(&[4.0], &MonteCarloSpec::default(), 0).unwrap_err();
    assert!(err.is_config());
}

#[test]
fn newsvendor_is_scaled_check_loss() {
    let mut rng = stream(17);
    for _ in 0..500 {
        let c1: f64 = rng.gen::<f64>() * 3.0 + 0.01;
        let c2: f64 = rng.gen::<f64>() * 3.0 + 0.01;
        let theta: f64 = rng.gen::<f64>() * 10.0 - 5.0;
        let z: f64 = rng.gen::<f64>() * 10.0 - 5.0;
        let nv = NewsvendorLoss {
            c1,
            c2,
            constants: Default::default(),
        };
        let nu = c2 / (c1 + c2);
        let lhs = nv.loss(&[theta], &[z]);
        let rhs = (c1 + c2) * check_loss(nu, z - theta);
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn logistic_labels_match_teacher() {
    let family = ProblemFamily::LogisticRegression { sigma0: 1.0, gamma: 0.5 };
    let p = Problem::new(family, 2, Some(FeasibleSet::centered_ball(2, 4.0).unwrap())).unwrap();
    let theta = [1.0, -0.5];
    let batch = p.sample_batch(&theta, 100_000, 1, 0, &mut stream(19)).unwrap();
    let mut bins = vec![(0usize, 0usize, 0.0f64); 10];
    for z in batch.points() {
        let t = z[0] * theta[0] + z[1] * theta[1];
        let prob = models::sigmoid(t);
        let bin = ((prob * 10.0) as usize).min(9);
        bins[bin].0 += 1;
        bins[bin].1 += z[2] as usize;
        bins[bin].2 += prob;
    }
    for (count, ones, prob_sum) in bins {
        if count < 1000 {
            continue;
        }
        let freq = ones as f64 / count as f64;
        assert!((freq - prob_sum / count as f64).abs() < 0.03);
    }
}

#[test]
fn empirical_loss_concentrates_on_population() {
    let p = Problem::new(
        ProblemFamily::LinearRegression {
            noise: 1.0,
            cov_diag: None,
        },
        2,
        Some(FeasibleSet::centered_ball(2, 2.0).unwrap()),
    )
    .unwrap();
    let theta_star = [0.5, -0.25];
    let f = p.population(&theta_star, &MonteCarloSpec::default(), 0).unwrap();
    let probes = [[0.0, 0.0], [1.0, 1.0], [-1.0, 0.5], [0.5, -0.25], [1.5, 0.0]];
    let mut medians = Vec::new();
    for k in [10usize, 100, 1000] {
        let mut devs = Vec::new();
        for seed in 0..50u64 {
            let seeds = SeedTree::new(seed);
            let history: Vec<_> = (1..=k)
                .map(|n| {
                    let mut rng = seeds.stream(Purpose::Batch, 0, n as u64);
                    p.sample_batch(&theta_star, 1, n, 0, &mut rng).unwrap()
                })
                .collect();
            let emp = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
            let dev = probes
                .iter()
                .map(|q| (emp.evaluate(q) - f.value(q).unwrap().value).abs())
                .fold(0.0, f64::max);
            devs.push(dev);
        }
        devs.sort_by(f64::total_cmp);
        medians.push(devs[25]);
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn parameter_admissibility() {
    let p = gaussian(2, 1.0, FeasibleSet::centered_ball(2, 2.0).unwrap());
    assert!(p.check_parameter(1, &[0.9, 0.0]).is_ok());
    let err = p.check_parameter(1, &[1.5, 0.0]).unwrap_err();
    assert!(err.is_config() && err.to_string().contains("M/4"));
    let lo = Problem::new(ProblemFamily::LinearOpt, 2, None).unwrap();
    assert!(lo.check_parameter(1, &[0.6, 0.0]).unwrap_err().is_config());
    let bad = ProblemFamily::Newsvendor { c1: -1.0, c2: 1.0, sigma0: 1.0 };
    assert!(Problem::new(bad, 1, None).unwrap_err().is_config());
    let bad = ProblemFamily::QuantileRegression { nu: 1.5, sigma0: 1.0, intercept: true };
    assert!(Problem::new(bad, 2, None).unwrap_err().is_config());
}

#[test]
fn regimes_follow_families() {
    let strong = [
        ProblemFamily::GaussianMean { sigma0: 1.0 },
        ProblemFamily::LinearRegression { noise: 1.0, cov_diag: None },
        ProblemFamily::LogisticRegression { sigma0: 1.0, gamma: 0.5 },
    ];
    for f in strong {
        assert_eq!(f.regularity(), Regularity::StronglyConvex);
    }
    let lip = [
        ProblemFamily::LinearOpt,
        ProblemFamily::QuantileRegression { nu: 0.5, sigma0: 1.0, intercept: true },
        ProblemFamily::Newsvendor { c1: 1.0, c2: 1.0, sigma0: 1.0 },
        ProblemFamily::Svm { sigma0: 1.0 },
    ];
    for f in lip {
        assert_eq!(f.regularity(), Regularity::Lipschitz);
    }
}

#[test]
fn family_config_round_trip() {
    let f: ProblemFamily = toml::from_str("name = \"newsvendor\"\nc1 = 1.0\nc2 = 3.0").unwrap();
    assert_eq!(f, ProblemFamily::Newsvendor { c1: 1.0, c2: 3.0, sigma0: 1.0 });
    assert!(toml::from_str::<ProblemFamily>("name = \"newsvendor\"\nc3 = 1.0").is_err());
    assert!(toml::from_str::<ProblemFamily>("name = \"ridge\"").is_err());
}

// solver examples

#[test]
fn solver_interior_quadratic() {
    let p = gaussian(1, 1.0, FeasibleSet::interval(0.0, 10.0).unwrap());
    let history = scalar_batches(&[3.0]);
    let f = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
    let r = Solver::default().solve(&f, p.set(), 2, None).unwrap();
    assert_eq!(r.theta.as_slice(), &[3.0]);
    assert_eq!(r.gap, GapCertificate::Certified(0.0));
    let iterative = Solver {
        use_closed_form: false,
        ..Default::default()
    };
    let r = iterative.solve(&f, p.set(), 2, None).unwrap();
    assert!((r.theta[0] - 3.0).abs() < 1e-9);
}

#[test]
fn solver_linear_vertex() {
    let p = Problem::new(ProblemFamily::LinearOpt, 2, Some(FeasibleSet::cube(2, 1.0).unwrap())).unwrap();
    let history = vec![SampleBatch::new(1, 0, 2, vec![1.0, -2.0]).unwrap()];
    let f = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
    let r = Solver::default().solve(&f, p.set(), 2, None).unwrap();
    assert_eq!(r.theta.as_slice(), &[-1.0, 1.0]);
}

#[test]
fn solver_newsvendor_quantile() {
    let p = newsvendor(1.0, 3.0);
    let history = scalar_batches(&[1.0, 2.0, 4.0, 8.0]);
    let f = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
    let r = Solver::default().solve(&f, p.set(), 5, None).unwrap();
    assert_eq!(r.theta.as_slice(), &[4.0]);
}

#[test]
fn solver_dimension_mismatch() {
    let p = gaussian(2, 1.0, FeasibleSet::centered_ball(2, 1.0).unwrap());
    let history = vec![SampleBatch::new(1, 0, 2, vec![0.0, 0.0]).unwrap()];
    let f = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
    let wrong = FeasibleSet::interval(0.0, 1.0).unwrap();
    assert!(Solver::default().solve(&f, &wrong, 2, None).is_err());
}

fn regression_problem() -> Problem {
    Problem::new(
        ProblemFamily::LinearRegression {
            noise: 0.5,
            cov_diag: Some(vec![1.0, 2.0]),
        },
        2,
        Some(FeasibleSet::centered_ball(2, 1.0).unwrap()),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subgradients_are_valid(seed in any::<u64>(), family_ix in 0usize..7) {
        let (family, d) = match family_ix {
            0 => (ProblemFamily::GaussianMean { sigma0: 1.0 }, 2),
            1 => (ProblemFamily::LinearRegression { noise: 1.0, cov_diag: None }, 2),
            2 => (ProblemFamily::LogisticRegression { sigma0: 1.0, gamma: 0.5 }, 2),
            3 => (ProblemFamily::LinearOpt, 2),
            4 => (ProblemFamily::QuantileRegression { nu: 0.3, sigma0: 1.0, intercept: true }, 2),
            5 => (ProblemFamily::Newsvendor { c1: 1.0, c2: 2.0, sigma0: 1.0 }, 1),
            _ => (ProblemFamily::Svm { sigma0: 1.0 }, 2),
        };
        let p = Problem::new(family, d, None).unwrap();
        let mut rng = stream(seed);
        let param = vec![0.1; d];
        let batch = p.sample_batch(&param, 8, 1, 0, &mut rng).unwrap();
        let m = p.model();
        let (lo, hi) = p.set().bounding_box();
        for z in batch.points() {
            for _ in 0..8 {
                let mut a: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + rng.gen::<f64>() * (h - l)).collect();
                let mut b: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + rng.gen::<f64>() * (h - l)).collect();
                p.set().project_in_place(&mut a);
                p.set().project_in_place(&mut b);
                let g = m.subgradient(&a, z);
                let lin: f64 = g.iter().zip(b.iter().zip(&a)).map(|(gi, (bi, ai))| gi * (bi - ai)).sum();
                prop_assert!(m.loss(&b, z) >= m.loss(&a, z) + lin - 1e-10);
            }
        }
    }

    #[test]
    fn gradient_descent_is_monotone_and_feasible(seed in any::<u64>(), k in 1usize..20) {
        let p = regression_problem();
        let mut rng = stream(seed);
        let history: Vec<_> = (1..=k)
            .map(|n| p.sample_batch(&[0.3, -0.2], 4, n, 0, &mut rng).unwrap())
            .collect();
        let f = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
        let solver = Solver { use_closed_form: false, record_trace: true, max_iters: 200, ..Default::default() };
        let budget = SolverBudget { target_gap: 0.0, ..solver.budget(&f, p.set(), k + 1) };
        let r = crate::solvers::minimize_iterative(&f, p.set(), &budget, Some(&[5.0, 5.0]), true).unwrap();
        let trace = r.trace.unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(p.set().contains(&r.theta, 1e-12));
    }

    #[test]
    fn closed_form_matches_iterative(seed in any::<u64>(), k in 1usize..10, which in 0usize..3) {
        let mut rng = stream(seed);
        let (p, param) = match which {
            0 => (gaussian(2, 1.0, FeasibleSet::centered_ball(2, 1.0).unwrap()), vec![0.2, 0.4]),
            1 => (newsvendor(1.0, 2.0), vec![0.5]),
            _ => (Problem::new(ProblemFamily::LinearOpt, 2, None).unwrap(), vec![0.3, -0.1]),
        };
        let history: Vec<_> = (1..=k)
            .map(|n| p.sample_batch(&param, 3, n, 0, &mut rng).unwrap())
            .collect();
        let f = EmpiricalLoss::new(p.model().as_ref(), &history).unwrap();
        let solver = Solver { max_iters: 20_000, ..Default::default() };
        let budget = solver.budget(&f, p.set(), k + 1);
        let exact = minimize_empirical(&f, p.set(), &budget, None).unwrap();
        let iter = crate::solvers::minimize_iterative(&f, p.set(), &budget, None, false).unwrap();
        prop_assert!(p.set().contains(&iter.theta, 1e-12));
        prop_assert!(iter.objective >= exact.objective - 1e-9);
        prop_assert!(iter.objective - exact.objective <= budget.target_gap + 1e-9);
    }
}
