use proptest::prelude::*;

use kmpflow::discrete::{brickwall_coupling, segment_step, wave_walk_coupling, BetaEnv, Dims, SegmentEnv};
use kmpflow::engine::Profile;
use kmpflow::env::stream::parse_seed;
use kmpflow::env::{EnvParams, Environment};
use kmpflow::flow::{compose, duality_function, kernel, DualConfig};
use kmpflow::gamma::{exact_cov_term, gamma_eps_exact, CovScope};
use kmpflow::io::{read_csv, CsvWriter};
use kmpflow::kmp::{evolve, redistribute, EnergyConfig};
use kmpflow::scaling::{PhiKind, TestFunction};
use kmpflow::sheref::{heat_kernel, Grid};
use kmpflow::special::{annealed_pmf, simpson};
use kmpflow::stats::ks_one_sample;

fn env(alpha: f64, seed: u64) -> Environment {
    Environment::new(EnvParams::new(alpha, seed).unwrap())
}

fn max_gap(a: &Profile, b: &Profile) -> f64 {
    let lo = a.lo().min(b.lo());
    let hi = (a.lo() + a.values().len() as i64).max(b.lo() + b.values().len() as i64);
    (lo..=hi).map(|x| (a.get(x) - b.get(x)).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_bond_update_conserves_the_pair(a in 0.0f64..10.0, b in 0.0f64..10.0, split in 1e-9f64..1.0 - 1e-9, x in -5i64..5) {
        let cfg = EnergyConfig::from_pairs(&[(x, a), (x + 1, b)]).unwrap();
        let next = redistribute(&cfg, x, split).unwrap();
        prop_assert!((next.get(x) + next.get(x + 1) - (a + b)).abs() <= 1e-12 * (a + b).max(1.0));
        prop_assert!(next.get(x) >= 0.0 && next.get(x + 1) >= 0.0);
        prop_assert!((next.get(x) - split * (a + b)).abs() <= 1e-12 * (a + b).max(1.0));
    }

    #[test]
    fn splits_outside_unit_interval_rejected(split in prop_oneof![-1.0f64..=0.0, 1.0f64..2.0]) {
        prop_assert!(redistribute(&EnergyConfig::delta(0), 0, split).is_err());
    }

    #[test]
    fn evolution_conserves_mass(seed in any::<u64>(), alpha in 0.2f64..4.0, t in 0.0f64..20.0, e in proptest::collection::vec(0.0f64..5.0, 1..6)) {
        let pairs: Vec<(i64, f64)> = e.iter().enumerate().map(|(i, &v)| (i as i64 * 2 - 3, v)).collect();
        let init = EnergyConfig::from_pairs(&pairs).unwrap();
        let (p, _) = evolve(init.profile().clone(), t, &env(alpha, seed));
        let m = init.mass();
        prop_assert!((p.sum() + p.pruned() - m).abs() <= 1e-12 * m.max(1.0));
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn evolution_is_linear(seed in any::<u64>(), a in 0.1f64..3.0, b in 0.1f64..3.0, t in 0.1f64..8.0) {
        let e = env(1.0, seed);
        let (p, _) = evolve(Profile::delta(0), t, &e);
        let (q, _) = evolve(Profile::delta(3), t, &e);
        let mut mix = Profile::zeros();
        mix.set(0, a);
        mix.set(3, b);
        let (r, _) = evolve(mix, t, &e);
        let lo = p.lo().min(q.lo()).min(r.lo());
        for x in lo..lo + 200 {
            prop_assert!((r.get(x) - a * p.get(x) - b * q.get(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn point_mass_matches_kernel_row_bitwise(seed in any::<u64>(), x in -3i64..3, t in 0.0f64..10.0) {
        let e = env(0.8, seed);
        let (p, _) = evolve(Profile::delta(x), t, &e);
        let k = kernel(&e, &[x], 0.0, t).unwrap();
        let row = k.row(x).unwrap();
        let lo = p.lo().min(row.lo()) - 1;
        for y in lo..lo + 100 {
            prop_assert_eq!(p.get(y).to_bits(), row.get(y).to_bits());
        }
    }

    #[test]
    fn kernels_compose(seed in any::<u64>(), alpha in 0.3f64..3.0, s in 0.0f64..4.0, dt in 0.0f64..4.0) {
        let e = env(alpha, seed);
        let t = s + dt;
        let starts = [-2, 0, 1];
        let k1 = kernel(&e, &starts, 0.0, s).unwrap();
        let (lo, hi) = k1.rows.iter().filter_map(|p| p.support()).fold((i64::MAX, i64::MIN), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        let mids: Vec<i64> = (lo..=hi).collect();
        let composed = compose(&k1, &kernel(&e, &mids, s, t).unwrap()).unwrap();
        let direct = kernel(&e, &starts, 0.0, t).unwrap();
        prop_assert!(direct.stochasticity_error() <= 1e-12);
        for (a, b) in composed.rows.iter().zip(&direct.rows) {
            prop_assert!(max_gap(a, b) <= 1e-12);
        }
    }

    #[test]
    fn same_seed_same_environment(seed in any::<u64>(), bond in -50i64..50, index in 0u64..20) {
        prop_assert_eq!(env(1.5, seed).split(bond, index).to_bits(), env(1.5, seed).split(bond, index).to_bits());
        let b = env(1.5, seed).split(bond, index);
        prop_assert!(b > 0.0 && b < 1.0);
    }

    #[test]
    fn empty_dual_configuration_gives_one(e in proptest::collection::vec(0.0f64..5.0, 0..5), alpha in 0.1f64..5.0) {
        let f = duality_function(|x| e.get(x as usize).copied().unwrap_or(0.0), &DualConfig::empty(), alpha);
        prop_assert_eq!(f, 1.0);
    }

    #[test]
    fn clock_conditioned_ratio_is_exact(alpha in 0.1f64..10.0, k in 1u32..6) {
        let eps = 10f64.powi(-(k as i32));
        let r = gamma_eps_exact(alpha, eps, CovScope::ClockConditioned).unwrap();
        prop_assert!((r.gamma_sq_eps * 4.0 * alpha - 1.0).abs() <= 1e-12);
        let full = gamma_eps_exact(alpha, eps, CovScope::Full).unwrap();
        let resid = full.gamma_sq_eps - 1.0 / (2.0 * alpha);
        prop_assert!(resid > 0.0 && resid <= 2.0 * eps / alpha);
    }

    #[test]
    fn distant_walkers_do_not_interact(alpha in 0.1f64..10.0, eps in 1e-4f64..0.5, z in 2i64..40) {
        for zz in [z, -z] {
            let t = exact_cov_term(alpha, eps, zz, CovScope::Full);
            prop_assert_eq!((t.num, t.den), (0.0, 0.0));
        }
    }

    #[test]
    fn brick_wall_and_walk_agree(seed in any::<u64>(), alpha in 0.3f64..3.0) {
        let r = brickwall_coupling(alpha, 12, seed).unwrap();
        prop_assert!(r.passes(1e-10));
    }

    #[test]
    fn wave_norms_follow_the_walk(seed in any::<u64>(), minus in 1usize..3, plus in 1usize..3) {
        let r = wave_walk_coupling(Dims::new(minus, plus).unwrap(), 8, seed).unwrap();
        prop_assert!(r.passes(1e-10));
    }

    #[test]
    fn segment_step_conserves_probability(seed in any::<u64>(), n in 2usize..10, steps in 1u64..30) {
        let env = SegmentEnv::ramp(n, seed).unwrap();
        let mut p = vec![0.0; n + 1];
        p[n / 2] = 1.0;
        for t in 0..steps {
            p = segment_step(&p, &env, t);
        }
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn beta_walk_conserves_probability(seed in any::<u64>(), alpha in 0.2f64..4.0, steps in 0u64..40) {
        let last = BetaEnv::new(alpha, seed).unwrap().walk(0, steps).pop().unwrap();
        prop_assert!((last.total() - 1.0).abs() <= 1e-12);
        prop_assert!(last.parity_ok(0));
    }

    #[test]
    fn csv_roundtrip(rows in proptest::collection::vec((any::<i64>(), -1e300f64..1e300), 0..20)) {
        let mut buf = Vec::new();
        let mut w = CsvWriter::new(&mut buf, &["site", "value"]).unwrap();
        for (x, v) in &rows {
            w.row(&[x, v]).unwrap();
        }
        w.finish().unwrap();
        let (h, back) = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(h, vec!["site".to_string(), "value".to_string()]);
        prop_assert_eq!(back.len(), rows.len());
        for ((x, v), r) in rows.iter().zip(&back) {
            prop_assert_eq!(r[0].parse::<i64>().unwrap(), *x);
            prop_assert_eq!(r[1].parse::<f64>().unwrap(), *v);
        }
    }

    #[test]
    fn seeds_parse_in_both_spellings(seed in any::<u64>()) {
        prop_assert_eq!(parse_seed(&seed.to_string()), Some(seed));
        prop_assert_eq!(parse_seed(&format!("{seed:#x}")), Some(seed));
    }

    #[test]
    fn test_function_ids_roundtrip(center in -5.0f64..5.0, width in 0.01f64..5.0, k in 0usize..3) {
        let kind = [PhiKind::GaussianBump, PhiKind::CosineBump, PhiKind::PolynomialBump][k];
        let phi = TestFunction::new(kind, center, width).unwrap();
        prop_assert_eq!(TestFunction::parse(&phi.id()).unwrap(), phi);
        let (a, b) = phi.support();
        prop_assert!((simpson(|u| phi.eval(u), a, b, 4000) - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn heat_kernel_is_a_density(t in 0.05f64..5.0) {
        let w = 12.0 * t.sqrt();
        prop_assert!((simpson(|x| heat_kernel(t, x).unwrap(), -w, w, 4000) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn unstable_grids_rejected(dx in 0.01f64..1.0, f in 1.01f64..4.0) {
        prop_assert!(Grid::new(dx, f * dx * dx / 2.0, 5.0).is_err());
        prop_assert!(Grid::new(dx, dx * dx / 2.0, 5.0).is_ok());
    }

    #[test]
    fn annealed_one_point_law_is_a_distribution(t in 0.0f64..10.0) {
        let total: f64 = (-200..=200).map(|y| annealed_pmf(t, y)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!((annealed_pmf(t, 3) - annealed_pmf(t, -3)).abs() <= 1e-15);
    }

    #[test]
    fn ks_p_values_are_probabilities(v in proptest::collection::vec(0.0f64..1.0, 1..200)) {
        let r = ks_one_sample(&v, |x| x);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        prop_assert!((0.0..=1.0).contains(&r.statistic));
    }
}

#[test]
fn ks_accepts_quantiles_and_rejects_shifted_sample() {
    let n = 1000;
    let exact: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    assert!(ks_one_sample(&exact, |x| x).p_value > 0.99);
    let shifted: Vec<f64> = exact.iter().map(|x| x * x).collect();
    assert!(ks_one_sample(&shifted, |x| x).p_value < 1e-6);
}
