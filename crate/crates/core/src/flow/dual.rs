//! Dual KMP: integer particle counts on a bond are resampled as
//! BetaBinomial(n, α, α), i.e. Binomial(n, B) with the bond's Beta split.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use serde::Serialize;

use crate::engine::{Engine, Lattice, Window};
use crate::env::stream::{derive_seed, tag, Stream};
use crate::env::{beta_from_gammas, EnvParams, Environment};
use crate::error::{invalid, Result};
use crate::kmp::{evolve, EnergyConfig};
use crate::special::ln_gamma;
use crate::stats::{Estimate, RunningStats};
use crate::sweep::fold_replicas;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DualConfig {
    counts: BTreeMap<i64, u64>,
}

impl DualConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(i64, u64)]) -> Self {
        let mut c = Self::default();
        for &(x, n) in pairs {
            if n > 0 {
                *c.counts.entry(x).or_insert(0) += n;
            }
        }
        c
    }

    pub fn get(&self, x: i64) -> u64 {
        self.counts.get(&x).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().map(|(&x, &n)| (x, n))
    }

    fn set(&mut self, x: i64, n: u64) {
        if n == 0 {
            self.counts.remove(&x);
        } else {
            self.counts.insert(x, n);
        }
    }

    /// Put `R ~ Binomial(n, split)` particles on `x` and the rest on `x+1`.
    pub fn resample_bond<R: Rng + ?Sized>(&mut self, x: i64, split: f64, rng: &mut R) {
        let n = self.get(x) + self.get(x + 1);
        if n == 0 {
            return;
        }
        let r = Binomial::new(n, split).expect("split lies in (0,1)").sample(rng);
        self.set(x, r);
        self.set(x + 1, n - r);
    }
}

/// One dual update on bond `x`, drawing the Beta split and the binomial from `rng`.
pub fn dual_step<R: Rng + ?Sized>(xi: &DualConfig, x: i64, alpha: f64, rng: &mut R) -> Result<DualConfig> {
    let g = Gamma::new(alpha, 1.0).map_err(|e| invalid("alpha", e.to_string()))?;
    let b = beta_from_gammas(&g, &g, rng);
    let mut out = xi.clone();
    out.resample_bond(x, b, rng);
    Ok(out)
}

struct DualRun<'a> {
    xi: &'a mut DualConfig,
    seed: u64,
}

impl Lattice for DualRun<'_> {
    fn apply(&mut self, bond: i64, index: u64, split: f64) {
        let mut s = Stream::new(self.seed, tag::DUAL, bond, index);
        self.xi.resample_bond(bond, split, &mut s);
    }

    fn occupied(&self, site: i64) -> bool {
        self.xi.get(site) > 0
    }

    fn support(&self) -> Option<(i64, i64)> {
        Some((*self.xi.counts.keys().next()?, *self.xi.counts.keys().next_back()?))
    }
}

/// Dual dynamics driven by the clocks and splits of `env`.
pub fn run_dual(xi0: &DualConfig, t: f64, env: &Environment) -> DualConfig {
    let mut xi = xi0.clone();
    let mut run = DualRun { xi: &mut xi, seed: env.seed() };
    let mut eng = Engine::new(env, &run, 0.0, Window::Adaptive);
    eng.run_until(&mut run, t);
    xi
}

/// `D(η, ξ) = Π_x η(x)^ξ(x) Γ(α) / Γ(α + ξ(x))`, evaluated in log space.
pub fn duality_function<F: Fn(i64) -> f64>(eta: F, xi: &DualConfig, alpha: f64) -> f64 {
    let lg = ln_gamma(alpha);
    let mut log = 0.0;
    for (x, n) in xi.iter() {
        let e = eta(x);
        if e <= 0.0 {
            return 0.0;
        }
        log += n as f64 * e.ln() + lg - ln_gamma(alpha + n as f64);
    }
    log.exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub config: String,
    pub alpha: f64,
    pub t: f64,
    pub replicas: u64,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub z_score: f64,
}

impl DualityReport {
    pub fn lhs_estimate(&self) -> Estimate {
        Estimate { value: self.lhs, stderr: self.lhs_stderr }
    }

    pub fn rhs_estimate(&self) -> Estimate {
        Estimate { value: self.rhs, stderr: self.rhs_stderr }
    }
}

/// Estimate both sides of `E[D(η_t, ξ_0)] = E[D(η_0, ξ_t)]` with independent
/// environments for the energy side and the particle side.
pub fn duality_check(
    eta0: &EnergyConfig,
    xi0: &DualConfig,
    t: f64,
    alpha: f64,
    replicas: u64,
    seed: u64,
    label: &str,
) -> Result<DualityReport> {
    if replicas == 0 {
        return Err(invalid("replicas", "must be >= 1"));
    }
    let base = EnvParams::new(alpha, seed)?;
    let lhs_base = EnvParams { seed: derive_seed(seed, tag::REPLICA, 1), ..base };
    let rhs_base = EnvParams { seed: derive_seed(seed, tag::REPLICA, 2), ..base };
    let lhs = fold_replicas(
        replicas,
        RunningStats::new,
        |acc, r| {
            let env = Environment::new(lhs_base.replica(r));
            let (eta, _) = evolve(eta0.profile().clone(), t, &env);
            acc.push(duality_function(|x| eta.get(x), xi0, alpha));
        },
        |a, b| a.merge(&b),
    );
    let rhs = fold_replicas(
        replicas,
        RunningStats::new,
        |acc, r| {
            let env = Environment::new(rhs_base.replica(r));
            let xi = run_dual(xi0, t, &env);
            acc.push(duality_function(|x| eta0.get(x), &xi, alpha));
        },
        |a, b| a.merge(&b),
    );
    let (l, r) = (lhs.estimate(), rhs.estimate());
    Ok(DualityReport {
        config: label.to_string(),
        alpha,
        t,
        replicas,
        lhs: l.value,
        lhs_stderr: l.stderr,
        rhs: r.value,
        rhs_stderr: r.stderr,
        z_score: l.z_between(&r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dual_is_one() {
        let d = duality_function(|_| 0.3, &DualConfig::empty(), 1.7);
        assert_eq!(d, 1.0);
        let rep = duality_check(&EnergyConfig::delta(0), &DualConfig::empty(), 1.0, 1.0, 50, 3, "empty").unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.z_score), (1.0, 1.0, 0.0));
    }

    #[test]
    fn duality_function_values() {
        // one particle: η(x) Γ(α)/Γ(α+1) = η(x)/α
        let xi = DualConfig::from_pairs(&[(2, 1)]);
        assert!((duality_function(|_| 0.6, &xi, 2.0) - 0.3).abs() < 1e-15);
        // two particles at one site, α = 1: η²/2
        let xi2 = DualConfig::from_pairs(&[(0, 2)]);
        assert!((duality_function(|_| 3.0, &xi2, 1.0) - 4.5).abs() < 1e-13);
        assert_eq!(duality_function(|x| if x == 0 { 1.0 } else { 0.0 }, &xi, 1.0), 0.0);
    }

    #[test]
    fn dual_step_conserves_and_noop() {
        let mut s = Stream::new(1, tag::MISC, 0, 0);
        let xi = DualConfig::from_pairs(&[(0, 3), (1, 4), (7, 1)]);
        for _ in 0..100 {
            let out = dual_step(&xi, 0, 0.8, &mut s).unwrap();
            assert_eq!(out.total(), 8);
            assert_eq!(out.get(7), 1);
        }
        let empty = dual_step(&xi, 3, 0.8, &mut s).unwrap();
        assert_eq!(empty, xi);
    }

    #[test]
    fn run_dual_conserves_particles() {
        let env = Environment::new(EnvParams::new(0.5, 3).unwrap());
        let xi = DualConfig::from_pairs(&[(0, 5), (3, 2)]);
        let out = run_dual(&xi, 10.0, &env);
        assert_eq!(out.total(), 7);
    }
}
