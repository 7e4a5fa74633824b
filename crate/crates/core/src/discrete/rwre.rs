//! Discrete-time Beta random walk in random environment.

use std::io::Write;

use rand_distr::Gamma;
use serde::Serialize;

use crate::env::beta_from_gammas;
use crate::env::stream::{derive_seed, tag, Stream};
use crate::error::{invalid, Result};
use crate::io::CsvWriter;
use crate::special::ln_gamma;
use crate::stats::{Estimate, RunningStats};
use crate::sweep::fold_replicas;

/// Quenched law `p_n(x)` on the dense range `lo..lo + probs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaRwreState {
    pub n: u64,
    pub lo: i64,
    pub probs: Vec<f64>,
}

impl BetaRwreState {
    pub fn delta(site: i64) -> Self {
        BetaRwreState { n: 0, lo: site, probs: vec![1.0] }
    }

    pub fn get(&self, x: i64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        self.probs.get((x - self.lo) as usize).copied().unwrap_or(0.0)
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(k, &p)| (self.lo + k as i64, p))
    }

    /// True when mass sits only on sites of parity `n + start`.
    pub fn parity_ok(&self, start: i64) -> bool {
        self.sites().all(|(x, p)| p == 0.0 || (x - start - self.n as i64).rem_euclid(2) == 0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = CsvWriter::new(w, &["n", "site", "probability"])?;
        for (x, p) in self.sites() {
            out.row(&[&self.n, &x, &p])?;
        }
        out.finish()
    }
}

/// `p_{n+1}(x) = p_n(x-1) B_{n,x-1} + p_n(x+1) (1 - B_{n,x+1})`, with
/// `split(x)` giving `B_{n,x}`. Sites with zero mass do not query `split`.
pub fn rwre_step<F: FnMut(i64) -> f64>(state: &BetaRwreState, mut split: F) -> BetaRwreState {
    let lo = state.lo - 1;
    let mut next = vec![0.0; state.probs.len() + 2];
    for (k, &p) in state.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let b = split(state.lo + k as i64);
        next[k + 2] += p * b;
        next[k] += p * (1.0 - b);
    }
    BetaRwreState { n: state.n + 1, lo, probs: next }
}

/// iid Beta(α, α) variables `B_{n,x}` keyed by `(seed, x, n)`.
#[derive(Debug, Clone)]
pub struct BetaEnv {
    pub alpha: f64,
    pub seed: u64,
    gamma: Gamma<f64>,
}

impl BetaEnv {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(BetaEnv { alpha, seed, gamma: Gamma::new(alpha, 1.0).expect("alpha checked") })
    }

    pub fn split(&self, n: u64, x: i64) -> f64 {
        let mut s = Stream::new(self.seed, tag::BRICK, x, n);
        beta_from_gammas(&self.gamma, &self.gamma, &mut s)
    }

    /// Walk from `δ_start` for `steps` steps; returns every intermediate law.
    pub fn walk(&self, start: i64, steps: u64) -> Vec<BetaRwreState> {
        let mut out = vec![BetaRwreState::delta(start)];
        for _ in 0..steps {
            let cur = out.last().expect("nonempty");
            let n = cur.n;
            let next = rwre_step(cur, |x| self.split(n, x));
            out.push(next);
        }
        out
    }
}

/// Annealed `E[p_n(x)]` for `x = -n..=n` over independent environments.
pub fn annealed_profile(alpha: f64, n: u64, replicas: u64, seed: u64) -> Result<Vec<(i64, Estimate, f64)>> {
    BetaEnv::new(alpha, seed)?;
    let width = 2 * n as usize + 1;
    let acc = fold_replicas(
        replicas,
        || vec![RunningStats::new(); width],
        |acc: &mut Vec<RunningStats>, r| {
            let env = BetaEnv::new(alpha, derive_seed(seed, tag::REPLICA, r)).expect("alpha checked");
            let last = env.walk(0, n).pop().expect("nonempty");
            for (k, s) in acc.iter_mut().enumerate() {
                s.push(last.get(k as i64 - n as i64));
            }
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    );
    Ok(acc
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let x = k as i64 - n as i64;
            (x, s.estimate(), simple_walk_pmf(n, x))
        })
        .collect())
}

/// Fair simple random walk `P(S_n = x)`.
pub fn simple_walk_pmf(n: u64, x: i64) -> f64 {
    if x.unsigned_abs() > n || (n as i64 + x) % 2 != 0 {
        return 0.0;
    }
    let k = ((n as i64 + x) / 2) as f64;
    let nf = n as f64;
    (ln_gamma(nf + 1.0) - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0) - nf * std::f64::consts::LN_2).exp()
}

/// Variance across environments of `p_n(site)`, with its standard error.
pub fn quenched_variance(alpha: f64, n: u64, site: i64, replicas: u64, seed: u64) -> Result<Estimate> {
    BetaEnv::new(alpha, seed)?;
    let vals: Vec<f64> = crate::sweep::map_replicas(replicas, |r| {
        let env = BetaEnv::new(alpha, derive_seed(seed, tag::REPLICA, r)).expect("alpha checked");
        env.walk(0, n).pop().expect("nonempty").get(site)
    });
    let (v, se) = crate::scaling::variance_with_stderr(&vals);
    Ok(Estimate { value: v, stderr: se })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step() {
        let s = rwre_step(&BetaRwreState::delta(0), |_| 0.3);
        assert_eq!(s.get(1), 0.3);
        assert_eq!(s.get(-1), 0.7);
        assert_eq!(s.get(0), 0.0);
    }

    #[test]
    fn fair_environment_is_binomial() {
        let mut s = BetaRwreState::delta(0);
        for _ in 0..12 {
            s = rwre_step(&s, |_| 0.5);
        }
        for x in -12..=12 {
            assert!((s.get(x) - simple_walk_pmf(12, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn normalized_and_parity() {
        let env = BetaEnv::new(0.7, 3).unwrap();
        for s in env.walk(0, 40) {
            assert!((s.total() - 1.0).abs() < 1e-12);
            assert!(s.parity_ok(0));
        }
    }

    #[test]
    fn annealed_law_is_simple_walk() {
        for (x, e, exact) in annealed_profile(1.0, 6, 100_000, 11).unwrap() {
            if exact == 0.0 {
                assert_eq!(e.value, 0.0);
            } else {
                assert!(e.z_against(exact).abs() < 3.5, "{x} {e:?} {exact}");
            }
        }
    }

    #[test]
    fn quenched_law_fluctuates() {
        for n in [2, 4, 8] {
            let v = quenched_variance(1.0, n, 0, 4000, 5).unwrap();
            assert!(v.value > 5.0 * v.stderr, "{n} {v:?}");
        }
    }
}
