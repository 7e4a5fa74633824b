//! End-to-end acceptance checks, shared by the `verify-all` subcommand and
//! the `acceptance` test target. Each check returns its statistics alongside
//! the verdict so failures can be read off the report.

use serde::Serialize;
use serde_json::{json, Value};
use statrs::distribution::{Beta as BetaLaw, ContinuousCDF};

use crate::discrete::{brickwall_coupling, haar_b_samples, segment_stationarity, wave_walk_coupling, Dims, SegmentEnv, SegmentStart};
use crate::engine::Profile;
use crate::env::stream::{derive_seed, tag};
use crate::env::{EnvParams, Environment};
use crate::flow::dual::{duality_check, DualConfig};
use crate::flow::{compose, kernel};
use crate::gamma::{exact_cov_terms, gamma_eps_exact, gamma_eps_mc, CovScope};
use crate::kmp::{evolve, kmp_stationarity, run_ring, EnergyConfig};
use crate::scaling::{annealed_walk_probe, exact_field_mean, exact_field_moments, field_scan, variance_with_stderr, Shift, TestFunction};
use crate::sheref::{beta_for_alpha, moment_table, Grid, Initial, SheParams};
use crate::special::annealed_pmf;
use crate::stats::{ks_one_sample, RunningStats};

/// Criteria that currently fail at their stated thresholds; see the project
/// notes for the analysis. The acceptance test still requires them to be
/// reported as failures so a change in status is noticed.
pub const KNOWN_FAILURES: &[u32] = &[10];

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
    /// Multiplier on every replica and sample count; 1.0 is the stated scale.
    pub scale: f64,
    /// Replace the γ² target `1/(4α)` by `1/(3α)` as a negative control.
    pub fault_gamma: bool,
    /// Restrict to these criterion ids; empty means all.
    pub only: Vec<u32>,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { seed: 2024, scale: 1.0, fault_gamma: false, only: Vec::new() }
    }
}

impl AcceptanceConfig {
    fn count(&self, stated: u64) -> u64 {
        ((stated as f64 * self.scale).round() as u64).max(100)
    }

    fn seed_for(&self, id: u32) -> u64 {
        derive_seed(self.seed, tag::MISC, id as u64)
    }

    fn gamma_target(&self, alpha: f64) -> f64 {
        if self.fault_gamma {
            1.0 / (3.0 * alpha)
        } else {
            1.0 / (4.0 * alpha)
        }
    }

    fn wants(&self, id: u32) -> bool {
        self.only.is_empty() || self.only.contains(&id)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub stats: Value,
    pub seconds: f64,
}

impl CriterionResult {
    /// `[PASS] 3 gamma-mc: detail`
    pub fn line(&self) -> String {
        format!("[{}] {:>2} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

struct Outcome {
    passed: bool,
    detail: String,
    stats: Value,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn c1_gamma_limit(cfg: &AcceptanceConfig) -> Outcome {
    // γ_ε² is exact for every ε here, so its residual is rounding; the
    // trend is read off N^ε and D^ε, whose residuals are O(ε).
    const ROUNDING: f64 = 1e-12;
    let mut ok = true;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let target = cfg.gamma_target(alpha);
        let reps: Vec<_> = [1e-2, 1e-3, 1e-4].iter().map(|&e| gamma_eps_exact(alpha, e, CovScope::ClockConditioned).expect("valid inputs")).collect();
        let g: Vec<f64> = reps.iter().map(|r| r.gamma_sq_eps).collect();
        let resid: Vec<f64> = g.iter().map(|v| (v - target).abs()).collect();
        let n_resid: Vec<f64> = reps.iter().map(|r| (r.n_eps - 2.0 * target).abs()).collect();
        let d_resid: Vec<f64> = reps.iter().map(|r| (r.d_eps - 2.0).abs()).collect();
        let close = rel(g[1], target) <= 0.01;
        let strict = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        let decreasing = resid.windows(2).all(|w| w[1] <= w[0] + ROUNDING) && strict(&n_resid) && strict(&d_resid);
        ok &= close && decreasing;
        notes.push(format!("α={alpha}: γ²(1e-3)={:.6} target {:.6} rel {:.1e}, N^ε residuals {:.1e}>{:.1e}>{:.1e}", g[1], target, rel(g[1], target), n_resid[0], n_resid[1], n_resid[2]));
        rows.push(json!({"alpha": alpha, "target": target, "gamma_sq": g, "residual": resid, "n_eps": reps.iter().map(|r| r.n_eps).collect::<Vec<_>>(), "d_eps": reps.iter().map(|r| r.d_eps).collect::<Vec<_>>(), "n_residual": n_resid, "d_residual": d_resid, "within_1pct": close, "decreasing": decreasing}));
    }
    Outcome { passed: ok, detail: notes.join("; "), stats: json!(rows) }
}

fn c2_case_constants(cfg: &AcceptanceConfig) -> Outcome {
    let eps = 1e-4;
    let mut ok = true;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut limits = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let terms = exact_cov_terms(alpha, eps, CovScope::ClockConditioned);
        let k = 2.0 * alpha + 1.0;
        for t in &terms {
            let (num_lead, den_lead) = if t.z == 0 { (1.0 / (2.0 * k), 2.0 * alpha / k) } else { (1.0 / (4.0 * k), alpha / k) };
            let (rn, rd) = (rel(t.num / eps, num_lead), rel(t.den / eps, den_lead));
            worst = worst.max(rn).max(rd);
            ok &= rn <= 1e-3 && rd <= 1e-3;
            rows.push(json!({"alpha": alpha, "z": t.z, "num_over_eps": t.num / eps, "num_lead": num_lead, "den_over_eps": t.den / eps, "den_lead": den_lead}));
        }
        let r = gamma_eps_exact(alpha, eps, CovScope::ClockConditioned).expect("valid inputs");
        let n_target = 2.0 * cfg.gamma_target(alpha);
        let (rn, rd) = (rel(r.n_eps, n_target), rel(r.d_eps, 2.0));
        ok &= rn <= 0.01 && rd <= 0.01;
        limits.push(format!("α={alpha}: N^ε={:.5} vs {n_target:.5}, D^ε={:.5}", r.n_eps, r.d_eps));
        rows.push(json!({"alpha": alpha, "n_eps": r.n_eps, "n_target": n_target, "d_eps": r.d_eps, "d_target": 2.0}));
    }
    Outcome { passed: ok, detail: format!("worst leading-coefficient rel error {worst:.2e} at ε=1e-4; {}", limits.join("; ")), stats: json!(rows) }
}

fn c3_gamma_mc(cfg: &AcceptanceConfig) -> Outcome {
    let (alpha, eps) = (1.0, 1e-2);
    let replicas = cfg.count(1_000_000);
    let (mc, terms) = gamma_eps_mc(alpha, eps, replicas, cfg.seed_for(3), 3, CovScope::ClockConditioned).expect("valid inputs");
    let exact = gamma_eps_exact(alpha, eps, CovScope::ClockConditioned).expect("valid inputs");
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for t in &terms {
        let e = crate::gamma::exact_cov_term(alpha, eps, t.z, CovScope::ClockConditioned);
        let (zn, zd) = (t.num.z_against(e.num), t.den.z_against(e.den));
        worst = worst.max(zn.abs()).max(zd.abs());
        rows.push(json!({"z": t.z, "num_mc": t.num.value, "num_se": t.num.stderr, "num_exact": e.num, "num_z": zn, "den_mc": t.den.value, "den_se": t.den.stderr, "den_exact": e.den, "den_z": zd}));
    }
    let zg = mc.gamma_estimate().z_against(exact.gamma_sq_eps);
    worst = worst.max(zg.abs());
    Outcome {
        passed: worst <= 3.0,
        detail: format!("γ²_mc={:.5}±{:.5} exact {:.5}; max |z|={worst:.2} over {} terms ({replicas} replicas)", mc.gamma_sq_eps, mc.gamma_sq_stderr, exact.gamma_sq_eps, 2 * terms.len() + 1),
        stats: json!({"terms": rows, "gamma_z": zg, "replicas": replicas}),
    }
}

fn c4_conservation_and_composition(cfg: &AcceptanceConfig) -> Outcome {
    let seed = cfg.seed_for(4);
    // one ring with about 10^6 rings in total
    let sites = 1000usize;
    let init: Vec<f64> = (0..sites).map(|i| 1.0 + (i % 7) as f64).collect();
    let m0: f64 = init.iter().sum();
    let env = Environment::new(EnvParams::new(1.0, seed).expect("valid"));
    let (v, events) = run_ring(&init, 1_000.0, &env);
    let mass_err = ((v.iter().sum::<f64>() - m0) / m0).abs();
    // line: point mass until 10^6 events as well
    let (line, line_events) = evolve(Profile::delta(0), 2_000.0, &Environment::new(EnvParams::new(0.7, seed ^ 1).expect("valid")));
    let line_err = (line.sum() + line.pruned() - 1.0).abs();
    let mut ck_worst: f64 = 0.0;
    let envs = cfg.count(100).min(100_000);
    for r in 0..envs {
        let env = Environment::new(EnvParams::new(1.0, derive_seed(seed, tag::REPLICA, r)).expect("valid"));
        let (s, t) = (1.5, 4.0);
        let k1 = kernel(&env, &[0, 3], 0.0, s).expect("valid");
        let (lo, hi) = k1.rows.iter().filter_map(|p| p.support()).fold((i64::MAX, i64::MIN), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        let mids: Vec<i64> = (lo..=hi).collect();
        let k2 = kernel(&env, &mids, s, t).expect("valid");
        let composed = compose(&k1, &k2).expect("matching kernels");
        let direct = kernel(&env, &[0, 3], 0.0, t).expect("valid");
        for (a, b) in composed.rows.iter().zip(&direct.rows) {
            let (l, h) = (a.lo().min(b.lo()), a.lo().max(b.lo()) + a.values().len().max(b.values().len()) as i64);
            for x in l..=h {
                ck_worst = ck_worst.max((a.get(x) - b.get(x)).abs());
            }
        }
    }
    let passed = mass_err <= 1e-12 && events >= 1_000_000 && line_err <= 1e-12 && ck_worst <= 1e-12;
    Outcome {
        passed,
        detail: format!("ring mass rel err {mass_err:.1e} over {events} events; line {line_err:.1e} over {line_events}; CK max |Δ| {ck_worst:.1e} on {envs} envs"),
        stats: json!({"ring_events": events, "ring_mass_error": mass_err, "line_events": line_events, "line_mass_error": line_err, "ck_max_diff": ck_worst, "environments": envs}),
    }
}

fn c5_couplings(cfg: &AcceptanceConfig) -> Outcome {
    let seed = cfg.seed_for(5);
    let mut bit_exact = true;
    let mut compared = 0usize;
    for r in 0..20 {
        let env = Environment::new(EnvParams::new(1.3, derive_seed(seed, tag::REPLICA, r)).expect("valid"));
        let (eta, _) = evolve(Profile::delta(0), 25.0, &env);
        let k = kernel(&env, &[0], 0.0, 25.0).expect("valid");
        let row = k.row(0).expect("row present");
        let (l, h) = (eta.lo().min(row.lo()), eta.lo().max(row.lo()) + eta.values().len().max(row.values().len()) as i64);
        for x in l..=h {
            bit_exact &= eta.get(x).to_bits() == row.get(x).to_bits();
            compared += 1;
        }
    }
    let bw: Vec<f64> = (0..10).map(|r| brickwall_coupling(0.9, 50, seed + r).expect("valid").max_discrepancy()).collect();
    let bw_cons = (0..10).all(|r| brickwall_coupling(0.9, 50, seed + r).expect("valid").passes(1e-10));
    let mut haar = Vec::new();
    let mut haar_ok = true;
    for dims in [Dims::default(), Dims::new(1, 2).expect("valid")] {
        for r in 0..5 {
            let rep = wave_walk_coupling(dims, 50, seed + r).expect("valid");
            haar_ok &= rep.passes(1e-10);
            haar.push(rep.max_discrepancy());
        }
    }
    let bw_max = bw.iter().cloned().fold(0.0, f64::max);
    let haar_max = haar.iter().cloned().fold(0.0, f64::max);
    Outcome {
        passed: bit_exact && bw_cons && haar_ok,
        detail: format!("KMP/kernel bit-identical on {compared} site values: {bit_exact}; brick wall max {bw_max:.1e}; Haar max {haar_max:.1e} (50 sweeps)"),
        stats: json!({"kmp_kernel_bit_exact": bit_exact, "brickwall_max": bw_max, "haar_max": haar_max}),
    }
}

fn c6_stationarity(cfg: &AcceptanceConfig) -> Outcome {
    let seed = cfg.seed_for(6);
    let samples = cfg.count(100_000) as usize;
    let kmp = kmp_stationarity(1.5, 8, 2.0, samples, seed, 0.01).expect("valid");
    let seg_env = SegmentEnv::ramp(8, seed ^ 7).expect("valid");
    let seg = segment_stationarity(&seg_env, SegmentStart::GammaProduct, 20, samples, 0.01);
    let shape = segment_stationarity(&seg_env, SegmentStart::Uniform, 400, samples, 0.01);
    let min_p = |v: &[f64]| v.iter().cloned().fold(1.0, f64::min);
    let kmp_p: Vec<f64> = kmp.sites.iter().map(|k| k.p_value).chain([kmp.neighbours.p_value, kmp.one_bond.p_value]).collect();
    let seg_p: Vec<f64> = seg.sites.iter().map(|s| s.ks.p_value).collect();
    let shape_p: Vec<f64> = shape.sites.iter().map(|s| s.ks.p_value).collect();
    Outcome {
        passed: kmp.passed && seg.passed && shape.passed,
        detail: format!(
            "KMP min p {:.3} (per-test level {:.4}); segment Gamma min p {:.3}; normalized segment min p {:.3} (per-site level {:.4}); {samples} samples",
            min_p(&kmp_p),
            kmp.per_test_level,
            min_p(&seg_p),
            min_p(&shape_p),
            seg.per_site_level
        ),
        stats: json!({"kmp": kmp, "segment_gamma": seg, "segment_normalized": shape}),
    }
}

fn c7_duality(cfg: &AcceptanceConfig) -> Outcome {
    let seed = cfg.seed_for(7);
    let replicas = cfg.count(100_000);
    let delta = EnergyConfig::delta(0);
    let mut ok = true;
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    let empty = duality_check(&delta, &DualConfig::empty(), 1.0, 1.0, replicas, seed, "empty").expect("valid");
    ok &= empty.lhs == 1.0 && empty.rhs == 1.0;
    notes.push(format!("empty {}/{}", empty.lhs, empty.rhs));
    reports.push(json!(empty));
    for alpha in [1.0, 2.0] {
        let one = duality_check(&delta, &DualConfig::from_pairs(&[(0, 1)]), 1.0, alpha, replicas, seed + 1, "one particle").expect("valid");
        let target = annealed_pmf(1.0, 0) / alpha;
        let zl = one.lhs_estimate().z_against(target);
        let zr = one.rhs_estimate().z_against(target);
        ok &= one.z_score.abs() <= 3.0 && zl.abs() <= 3.0 && zr.abs() <= 3.0;
        notes.push(format!("one particle α={alpha}: z {:.2}, vs e^-1 I0(1)/α z {zl:.2}/{zr:.2}", one.z_score));
        reports.push(json!({"report": one, "target": target, "z_lhs_target": zl, "z_rhs_target": zr}));
    }
    let two = duality_check(&delta, &DualConfig::from_pairs(&[(0, 2)]), 0.5, 1.0, replicas, seed + 2, "two particles").expect("valid");
    ok &= two.z_score.abs() <= 3.0;
    notes.push(format!("two particles z {:.2}", two.z_score));
    reports.push(json!(two));
    Outcome { passed: ok, detail: notes.join("; "), stats: json!(reports) }
}

fn c8_walk(cfg: &AcceptanceConfig) -> Outcome {
    let replicas = cfg.count(1_000_000);
    let p = annealed_walk_probe(EnvParams::new(1.0, cfg.seed_for(8)).expect("valid"), 0.5, replicas);
    let zg = p.mgf.z_against(p.mgf_exact);
    let z1 = p.m1.z_against(0.0);
    let z2 = p.m2.z_against(1.0);
    let hp4 = p.quenched_mean_variance.value / p.quenched_mean_variance.stderr;
    Outcome {
        passed: zg.abs() <= 3.0 && z1.abs() <= 3.0 && z2.abs() <= 3.0 && hp4 > 5.0,
        detail: format!(
            "M(0.5) {:.5}±{:.5} vs {:.5} (z {zg:.2}); m1 z {z1:.2}; m2 {:.4} (z {z2:.2}); quenched-mean variance {:.4} at {hp4:.1}σ",
            p.mgf.value, p.mgf.stderr, p.mgf_exact, p.m2.value, p.quenched_mean_variance.value
        ),
        stats: json!(p),
    }
}

/// Field samples shared by the mean and variance checks.
pub struct FieldStudy {
    pub t: f64,
    pub alpha: f64,
    pub phi: TestFunction,
    pub ns: Vec<u64>,
    pub values: Vec<Vec<f64>>,
}

pub fn field_study(cfg: &AcceptanceConfig) -> FieldStudy {
    let (t, alpha) = (0.5, 1.0);
    let phi = TestFunction::gaussian(0.0, 1.0);
    let ns = vec![16, 64, 256];
    let replicas = cfg.count(20_000);
    let base = EnvParams::new(alpha, cfg.seed_for(9)).expect("valid");
    let values = ns
        .iter()
        .map(|&n| field_scan(n, t, &phi, base.replica(n), replicas, Shift::Drift).iter().map(|s| s.value).collect())
        .collect();
    FieldStudy { t, alpha, phi, ns, values }
}

fn c9_field_mean(study: &FieldStudy) -> Outcome {
    let target = study.phi.heat_pairing(study.t);
    let mut rows = Vec::new();
    let mut exact_dev = Vec::new();
    let mut mc_ok = true;
    let mut last = None;
    for (n, vals) in study.ns.iter().zip(&study.values) {
        let s: RunningStats = vals.iter().copied().collect();
        let exact = exact_field_mean(*n, study.t, &study.phi, Shift::Drift);
        let z = s.estimate().z_against(exact);
        mc_ok &= z.abs() <= 3.0;
        exact_dev.push((exact - target).abs());
        rows.push(json!({"N": n, "mean": s.mean, "stderr": s.stderr(), "exact_mean": exact, "z_vs_exact": z, "target": target, "mc_deviation": (s.mean - target).abs(), "exact_deviation": (exact - target).abs()}));
        last = Some(s);
    }
    let last = last.expect("three sizes");
    let trend = exact_dev.windows(2).all(|w| w[1] < w[0]);
    let band = (last.mean - target).abs() <= 3.0 * last.stderr() + 0.05;
    Outcome {
        passed: trend && mc_ok && band,
        detail: format!(
            "exact deviations {:?} decreasing: {trend}; MC means within 3σ of exact: {mc_ok}; N=256 mean {:.5}±{:.5} vs ∫p_tφ={target:.5}",
            exact_dev.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            last.mean,
            last.stderr()
        ),
        stats: json!(rows),
    }
}

/// `Var<U(t),φ>` from the moment oracle at noise strength `beta`.
pub fn she_variance(beta: f64, t: f64, phi: &TestFunction, dx: f64) -> f64 {
    let grid = Grid::for_horizon(dx, 6.0, t).expect("valid grid");
    let params = SheParams::new(beta, grid, Initial::NarrowWedge).expect("valid");
    moment_table(&params, t).expect("valid horizon").pairing_variance(phi)
}

fn c10_field_variance(study: &FieldStudy) -> Outcome {
    let k = study.ns.iter().position(|&n| n == 256).expect("N=256 present");
    let (var, se) = variance_with_stderr(&study.values[k]);
    let beta = beta_for_alpha(study.alpha);
    let oracle = she_variance(beta, study.t, &study.phi, 0.05);
    let ratio = var / oracle;
    let exact = exact_field_moments(256, study.t, &study.phi, study.alpha, Shift::Drift).expect("valid");
    let z_exact = (var - exact.variance) / se;
    // noise strength at which the oracle reproduces the measured variance
    let (mut lo, mut hi) = (beta, 4.0 * beta);
    while she_variance(hi, study.t, &study.phi, 0.1) < var && hi < 10.0 {
        hi *= 2.0;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if she_variance(mid, study.t, &study.phi, 0.1) < var {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let implied = 0.5 * (lo + hi);
    Outcome {
        passed: (0.5..=2.0).contains(&ratio),
        detail: format!(
            "Var={var:.5}±{se:.5} vs SHE oracle {oracle:.5} at β²={:.4}: ratio {ratio:.2} (band [0.5,2]); exact finite-N variance {:.5} (z {z_exact:.2}); oracle matches at β²α≈{:.2}",
            beta * beta,
            exact.variance,
            implied * implied * study.alpha
        ),
        stats: json!({"variance": var, "stderr": se, "oracle": oracle, "beta": beta, "ratio": ratio, "exact_variance": exact.variance, "z_vs_exact": z_exact, "implied_beta_sq": implied * implied}),
    }
}

fn c11_haar(cfg: &AcceptanceConfig) -> Outcome {
    let draws = cfg.count(100_000) as usize;
    let seed = cfg.seed_for(11);
    let b = haar_b_samples(Dims::default(), draws, 50, seed);
    let uni = ks_one_sample(&b, |x| x.clamp(0.0, 1.0));
    let b23 = haar_b_samples(Dims::new(2, 3).expect("valid"), draws, 50, seed ^ 1);
    let law = BetaLaw::new(2.0, 3.0).expect("valid");
    let beta = ks_one_sample(&b23, |x| law.cdf(x));
    Outcome {
        passed: uni.passes(0.01) && beta.passes(0.01),
        detail: format!("2x2 vs Uniform: D={:.4} p={:.3}; (2,3) vs Beta(2,3): D={:.4} p={:.3}; {draws} draws", uni.statistic, uni.p_value, beta.statistic, beta.p_value),
        stats: json!({"uniform": uni, "beta23": beta}),
    }
}

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "gamma-limit"),
    (2, "case-constants"),
    (3, "gamma-mc"),
    (4, "conservation-composition"),
    (5, "coupling-identities"),
    (6, "stationarity"),
    (7, "duality"),
    (8, "annealed-walk"),
    (9, "field-mean-trend"),
    (10, "field-variance-vs-she"),
    (11, "haar-uniformity"),
];

/// Run the selected criteria in order, calling `report` after each one.
pub fn run_with<F: FnMut(&CriterionResult)>(cfg: &AcceptanceConfig, mut report: F) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let mut study: Option<FieldStudy> = None;
    for &(id, name) in CRITERIA {
        if !cfg.wants(id) {
            continue;
        }
        let start = std::time::Instant::now();
        let o = match id {
            1 => c1_gamma_limit(cfg),
            2 => c2_case_constants(cfg),
            3 => c3_gamma_mc(cfg),
            4 => c4_conservation_and_composition(cfg),
            5 => c5_couplings(cfg),
            6 => c6_stationarity(cfg),
            7 => c7_duality(cfg),
            8 => c8_walk(cfg),
            9 | 10 => {
                let s = study.get_or_insert_with(|| field_study(cfg));
                if id == 9 {
                    c9_field_mean(s)
                } else {
                    c10_field_variance(s)
                }
            }
            _ => c11_haar(cfg),
        };
        let r = CriterionResult { id, name: name.to_string(), passed: o.passed, detail: o.detail, stats: o.stats, seconds: start.elapsed().as_secs_f64() };
        report(&r);
        out.push(r);
    }
    out
}

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionResult> {
    run_with(cfg, |_| {})
}
