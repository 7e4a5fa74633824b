//! Beta walk on the segment `{0, ..., N}` with reflecting ends, and the
//! Beta-Gamma identities behind its Gamma-product stationary measure.
//!
//! `B_{t,x} ~ Beta(α_{x+1}, α_x)` for `x = 0..=N`. A walker at `x` steps right
//! with probability `B_{t,x}` and left otherwise; a step out of the segment
//! is replaced by staying put. With `ν(x) ~ Gamma(α_x + α_{x+1})` independent,
//! `ν(x) B_{t,x}` and `ν(x) (1 - B_{t,x})` are independent `Gamma(α_{x+1})`
//! and `Gamma(α_x)`, so the product law is preserved.

use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use statrs::distribution::{Beta as BetaLaw, ContinuousCDF, Exp, Gamma as GammaLaw};

use crate::env::beta_from_gammas;
use crate::env::stream::{derive_seed, tag, Stream};
use crate::error::{invalid, Result};
use crate::stats::{bonferroni, ks2d_product, ks_one_sample, spearman, Estimate, KsResult, RunningStats};
use crate::sweep::map_replicas;

#[derive(Debug, Clone)]
pub struct SegmentEnv {
    /// `α_0, ..., α_{N+1}`.
    pub alphas: Vec<f64>,
    pub seed: u64,
    gammas: Vec<(Gamma<f64>, Gamma<f64>)>,
}

impl SegmentEnv {
    pub fn new(alphas: Vec<f64>, seed: u64) -> Result<Self> {
        if alphas.len() < 3 {
            return Err(invalid("alphas", format!("need α_0..α_(N+1) with N >= 1, got {} values", alphas.len())));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(invalid("alphas", format!("all must be positive, got {a}")));
        }
        let gammas = (0..alphas.len() - 1)
            .map(|x| (Gamma::new(alphas[x + 1], 1.0).expect("checked"), Gamma::new(alphas[x], 1.0).expect("checked")))
            .collect();
        Ok(SegmentEnv { alphas, seed, gammas })
    }

    pub fn homogeneous(n: usize, alpha: f64, seed: u64) -> Result<Self> {
        SegmentEnv::new(vec![alpha; n + 2], seed)
    }

    /// `α_x = 1 + x / 10` for `x = 0..=N+1`.
    pub fn ramp(n: usize, seed: u64) -> Result<Self> {
        SegmentEnv::new((0..n + 2).map(|x| 1.0 + x as f64 / 10.0).collect(), seed)
    }

    /// Largest site `N`.
    pub fn n(&self) -> usize {
        self.alphas.len() - 2
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SegmentEnv { seed, ..self.clone() }
    }

    /// `B_{t,x}`, keyed by `(seed, x, t)`.
    pub fn split(&self, t: u64, x: usize) -> f64 {
        let (a, b) = &self.gammas[x];
        beta_from_gammas(a, b, &mut Stream::new(self.seed, tag::SEGMENT, x as i64, t))
    }

    /// Shape `α_x + α_{x+1}` of the stationary marginal at `x`.
    pub fn shape(&self, x: usize) -> f64 {
        self.alphas[x] + self.alphas[x + 1]
    }
}

/// `p_{t+1}` from `p_t` on `{0, ..., N}`.
pub fn segment_step(p: &[f64], env: &SegmentEnv, t: u64) -> Vec<f64> {
    let n = env.n();
    debug_assert_eq!(p.len(), n + 1);
    let mut next = vec![0.0; n + 1];
    for x in 0..=n {
        if p[x] == 0.0 {
            continue;
        }
        let b = env.split(t, x);
        next[(x + 1).min(n)] += p[x] * b;
        next[x.saturating_sub(1)] += p[x] * (1.0 - b);
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentStart {
    /// Independent `Gamma(α_x + α_{x+1})` masses; marginals stay Gamma.
    GammaProduct,
    /// Uniform probability vector; after many steps the normalized vector
    /// has `Beta(α_x + α_{x+1}, A - α_x - α_{x+1})` marginals with `A` the
    /// sum of all shapes.
    Uniform,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteKs {
    pub site: usize,
    pub shape: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentReport {
    pub alphas: Vec<f64>,
    pub start: SegmentStart,
    pub steps: u64,
    pub samples: usize,
    pub level: f64,
    pub per_site_level: f64,
    pub sites: Vec<SiteKs>,
    pub max_total_error: f64,
    pub passed: bool,
}

/// Per-site KS of the evolved vector after `steps` steps, over independent
/// starts and environments, at Bonferroni-corrected `level`.
pub fn segment_stationarity(env: &SegmentEnv, start: SegmentStart, steps: u64, samples: usize, level: f64) -> SegmentReport {
    let n = env.n();
    let shapes: Vec<f64> = (0..=n).map(|x| env.shape(x)).collect();
    let total_shape: f64 = shapes.iter().sum();
    let runs: Vec<(Vec<f64>, f64)> = map_replicas(samples as u64, |r| {
        let e = env.with_seed(derive_seed(env.seed, tag::REPLICA, r));
        let mut p: Vec<f64> = match start {
            SegmentStart::GammaProduct => {
                let mut s = Stream::new(env.seed, tag::STATIONARY, 0, r);
                shapes.iter().map(|&a| Gamma::new(a, 1.0).expect("positive").sample(&mut s)).collect()
            }
            SegmentStart::Uniform => vec![1.0 / (n + 1) as f64; n + 1],
        };
        let m0: f64 = p.iter().sum();
        for t in 0..steps {
            p = segment_step(&p, &e, t);
        }
        let m1: f64 = p.iter().sum();
        (p, ((m1 - m0) / m0).abs())
    });
    let per_site_level = bonferroni(level, n + 1);
    let sites: Vec<SiteKs> = (0..=n)
        .map(|x| {
            let col: Vec<f64> = runs.iter().map(|(p, _)| p[x]).collect();
            let ks = match start {
                SegmentStart::GammaProduct => {
                    let law = GammaLaw::new(shapes[x], 1.0).expect("positive");
                    ks_one_sample(&col, |v| law.cdf(v))
                }
                SegmentStart::Uniform => {
                    let law = BetaLaw::new(shapes[x], total_shape - shapes[x]).expect("positive");
                    ks_one_sample(&col, |v| law.cdf(v))
                }
            };
            SiteKs { site: x, shape: shapes[x], ks }
        })
        .collect();
    let max_total_error = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let passed = sites.iter().all(|s| s.ks.passes(per_site_level)) && max_total_error < 1e-12;
    SegmentReport {
        alphas: env.alphas.clone(),
        start,
        steps,
        samples,
        level,
        per_site_level,
        sites,
        max_total_error,
        passed,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaGammaReport {
    pub a: f64,
    pub b: f64,
    pub samples: usize,
    /// `ν₁ B₁` against Gamma(a), with independent `ν₁, B₁`.
    pub first: KsResult,
    /// `ν₂ (1 - B₂)` against Gamma(b).
    pub second: KsResult,
    /// Joint law of `(ν B, ν (1 - B))` against Gamma(a) ⊗ Gamma(b).
    pub joint: KsResult,
    /// Rank correlation of `ν B` and `ν (1 - B)`.
    pub rank_correlation: Estimate,
    /// Mean of `ν B`; the target is `a`.
    pub mean: Estimate,
    /// `ν₁ B₁` against Exponential(1); only meaningful when `a = 1`.
    pub exponential: Option<KsResult>,
}

impl BetaGammaReport {
    pub fn passes(&self, level: f64) -> bool {
        let level = bonferroni(level, 3);
        self.first.passes(level)
            && self.second.passes(level)
            && self.joint.passes(level)
            && self.rank_correlation.value.abs() <= 3.0 * self.rank_correlation.stderr
            && self.mean.z_against(self.a).abs() <= 3.0
    }
}

/// Empirical check of `ν ~ Gamma(a+b)`, `B ~ Beta(a, b)` independent ⇒
/// `ν B ~ Gamma(a)` and `ν (1-B) ~ Gamma(b)`, independent.
pub fn beta_gamma_identity_test(a: f64, b: f64, samples: usize, seed: u64) -> Result<BetaGammaReport> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    let nu = Gamma::new(a + b, 1.0).expect("positive");
    let (ga, gb) = (Gamma::new(a, 1.0).expect("positive"), Gamma::new(b, 1.0).expect("positive"));
    let draw = |stream: u64, i: usize| {
        let mut s = Stream::new(seed, tag::MISC, stream as i64, i as u64);
        let v: f64 = nu.sample(&mut s);
        (v, beta_from_gammas(&ga, &gb, &mut s))
    };
    let first: Vec<f64> = (0..samples).map(|i| {
        let (v, bb) = draw(1, i);
        v * bb
    }).collect();
    let second: Vec<f64> = (0..samples).map(|i| {
        let (v, bb) = draw(2, i);
        v * (1.0 - bb)
    }).collect();
    let pairs: Vec<(f64, f64)> = (0..samples).map(|i| {
        let (v, bb) = draw(3, i);
        (v * bb, v * (1.0 - bb))
    }).collect();
    let la = GammaLaw::new(a, 1.0).expect("positive");
    let lb = GammaLaw::new(b, 1.0).expect("positive");
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mean: RunningStats = xs.iter().copied().collect();
    let exponential = if a == 1.0 {
        let e = Exp::new(1.0).expect("rate 1");
        Some(ks_one_sample(&first, |v| e.cdf(v)))
    } else {
        None
    };
    Ok(BetaGammaReport {
        a,
        b,
        samples,
        first: ks_one_sample(&first, |v| la.cdf(v)),
        second: ks_one_sample(&second, |v| lb.cdf(v)),
        joint: ks2d_product(&pairs, |v| la.cdf(v), |v| lb.cdf(v)),
        rank_correlation: spearman(&xs, &ys),
        mean: mean.estimate(),
        exponential,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sites_conserve_mass() {
        let env = SegmentEnv::homogeneous(1, 1.0, 2).unwrap();
        let mut p = vec![0.3, 0.7];
        for t in 0..100 {
            let b0 = env.split(t, 0);
            let b1 = env.split(t, 1);
            let next = segment_step(&p, &env, t);
            assert!((next[0] - ((1.0 - b0) * p[0] + (1.0 - b1) * p[1])).abs() < 1e-15);
            assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            p = next;
        }
    }

    #[test]
    fn split_shapes_follow_neighbours() {
        // mean of Beta(α_{x+1}, α_x)
        let env = SegmentEnv::new(vec![1.0, 3.0, 0.5], 5).unwrap();
        for (x, target) in [(0usize, 0.75), (1, 0.5 / 3.5)] {
            let s: RunningStats = (0..40_000).map(|t| env.split(t, x)).collect();
            assert!((s.mean - target).abs() < 4.0 * s.stderr(), "{x} {}", s.mean);
        }
    }

    #[test]
    fn rejects_bad_alphas() {
        assert!(SegmentEnv::new(vec![1.0, 2.0], 0).is_err());
        assert!(SegmentEnv::new(vec![1.0, 0.0, 2.0], 0).is_err());
    }

    #[test]
    fn homogeneous_gamma_product_is_stationary() {
        let env = SegmentEnv::homogeneous(5, 1.5, 9).unwrap();
        let r = segment_stationarity(&env, SegmentStart::GammaProduct, 25, 20_000, 0.01);
        assert!(r.passed, "{:?}", r.sites.iter().map(|s| s.ks.p_value).collect::<Vec<_>>());
    }

    #[test]
    fn normalized_shape_reaches_dirichlet_marginals() {
        let env = SegmentEnv::ramp(8, 4).unwrap();
        let r = segment_stationarity(&env, SegmentStart::Uniform, 400, 20_000, 0.01);
        assert!(r.passed, "{:?}", r.sites.iter().map(|s| s.ks.p_value).collect::<Vec<_>>());
    }

    #[test]
    fn beta_gamma_identities() {
        let r = beta_gamma_identity_test(1.0, 1.0, 20_000, 3).unwrap();
        assert!(r.passes(0.01), "{r:?}");
        assert!(r.exponential.unwrap().passes(0.01));
        let r = beta_gamma_identity_test(0.7, 2.5, 20_000, 4).unwrap();
        assert!(r.passes(0.01), "{r:?}");
    }

    #[test]
    fn beta_gamma_detects_wrong_shape() {
        // νB with ν ~ Gamma(a+b) against Gamma(a+b) would fail; emulate by
        // swapping the roles of a and b
        let r = beta_gamma_identity_test(1.0, 3.0, 20_000, 5).unwrap();
        let lb = GammaLaw::new(3.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|i| {
            let mut s = Stream::new(5, tag::MISC, 1, i);
            let v: f64 = Gamma::new(4.0, 1.0).unwrap().sample(&mut s);
            v * beta_from_gammas(&Gamma::new(1.0, 1.0).unwrap(), &Gamma::new(3.0, 1.0).unwrap(), &mut s)
        }).collect();
        assert!(!ks_one_sample(&xs, |v| lb.cdf(v)).passes(0.01));
        assert!(r.passes(0.01));
    }
}
