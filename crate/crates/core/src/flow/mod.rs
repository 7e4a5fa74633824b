//! Quenched kernels `K_{s,t}(y, x)`: the law at time `t` of a walker started
//! at `y` at time `s`, all rows driven by one environment.

pub mod dual;

use std::collections::HashMap;
use std::io::Write;

use crate::engine::{Engine, Lattice, Profile, Window};
use crate::env::{EnvParams, Environment};
use crate::error::{invalid, Error, Result};
use crate::kmp::EnergyConfig;
use crate::stats::{Estimate, RunningStats};
use crate::sweep::fold_replicas;

pub use dual::{duality_check, duality_function, dual_step, run_dual, DualConfig, DualityReport};

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub s: f64,
    pub t: f64,
    pub starts: Vec<i64>,
    pub rows: Vec<Profile>,
    pub env: EnvParams,
}

struct Rows<'a>(&'a mut [Profile]);

impl Lattice for Rows<'_> {
    #[inline]
    fn apply(&mut self, bond: i64, _index: u64, split: f64) {
        for r in self.0.iter_mut() {
            r.redistribute(bond, split);
        }
    }

    fn occupied(&self, site: i64) -> bool {
        self.0.iter().any(|r| r.get(site) != 0.0)
    }

    fn support(&self) -> Option<(i64, i64)> {
        self.0.iter().filter_map(|r| r.support()).fold(None, |acc, (a, b)| match acc {
            None => Some((a, b)),
            Some((x, y)) => Some((x.min(a), y.max(b))),
        })
    }
}

impl KernelMatrix {
    /// `K_{s,s}` restricted to the given start sites.
    pub fn identity(starts: &[i64], s: f64, env: &Environment) -> Self {
        KernelMatrix {
            s,
            t: s,
            starts: starts.to_vec(),
            rows: starts.iter().map(|&y| Profile::delta(y)).collect(),
            env: *env.params(),
        }
    }

    pub fn row(&self, start: i64) -> Option<&Profile> {
        self.starts.iter().position(|&y| y == start).map(|k| &self.rows[k])
    }

    pub fn get(&self, start: i64, site: i64) -> f64 {
        self.row(start).map_or(0.0, |r| r.get(site))
    }

    /// Largest deviation of a row sum from 1, pruned mass included.
    pub fn stochasticity_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.sum() + r.pruned() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn pruned_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.pruned()).fold(0.0, f64::max)
    }

    /// `start,site,probability,t` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = crate::io::CsvWriter::new(w, &["start", "site", "probability", "t"])?;
        for (y, r) in self.starts.iter().zip(&self.rows) {
            for (x, p) in r.nonzero() {
                csv.row(&[y, &x, &p, &self.t])?;
            }
        }
        csv.finish()
    }
}

/// Advance every row from `K.t` to `u` with the rings of `env` in `(K.t, u]`.
pub fn evolve_kernel(k: &KernelMatrix, u: f64, env: &Environment) -> Result<KernelMatrix> {
    if env.params() != &k.env {
        return Err(Error::KernelMismatch("kernel was built on a different environment".into()));
    }
    if !(u >= k.t) {
        return Err(invalid("u", format!("{u} precedes kernel time {}", k.t)));
    }
    let mut rows = k.rows.clone();
    let mut view = Rows(&mut rows);
    let mut eng = Engine::new(env, &view, k.t, Window::Adaptive);
    eng.run_until(&mut view, u);
    Ok(KernelMatrix { s: k.s, t: u, starts: k.starts.clone(), rows, env: k.env })
}

/// `K_{s,t}` for the given starts.
pub fn kernel(env: &Environment, starts: &[i64], s: f64, t: f64) -> Result<KernelMatrix> {
    evolve_kernel(&KernelMatrix::identity(starts, s, env), t, env)
}

/// `(K1 K2)(y, x) = sum_z K1(y, z) K2(z, x)`. `k2` needs a row for every
/// site charged by `k1`.
pub fn compose(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<KernelMatrix> {
    if k1.env != k2.env {
        return Err(Error::KernelMismatch("kernels use different environments".into()));
    }
    if k1.t != k2.s {
        return Err(Error::KernelMismatch(format!("intervals do not meet: {} vs {}", k1.t, k2.s)));
    }
    let index: HashMap<i64, usize> = k2.starts.iter().enumerate().map(|(k, &z)| (z, k)).collect();
    let mut rows = Vec::with_capacity(k1.rows.len());
    for r1 in &k1.rows {
        let mut out = Profile::zeros();
        for (z, w) in r1.nonzero() {
            let r2 = index
                .get(&z)
                .map(|&k| &k2.rows[k])
                .ok_or_else(|| Error::KernelMismatch(format!("second kernel lacks a row for site {z}")))?;
            for (x, p) in r2.nonzero() {
                out.set(x, out.get(x) + w * p);
            }
        }
        rows.push(out);
    }
    Ok(KernelMatrix { s: k1.s, t: k2.t, starts: k1.starts.clone(), rows, env: k1.env })
}

/// `rho_t(x) = sum_y rho_0(y) K(y, x)`.
pub fn apply_density(rho0: &[(i64, f64)], k: &KernelMatrix) -> Result<EnergyConfig> {
    let mut out = Profile::zeros();
    for &(y, w) in rho0 {
        if w == 0.0 {
            continue;
        }
        let r = k.row(y).ok_or_else(|| Error::KernelMismatch(format!("kernel lacks a row for site {y}")))?;
        for (x, p) in r.nonzero() {
            out.set(x, out.get(x) + w * p);
        }
    }
    Ok(EnergyConfig::from_profile(out, k.t))
}

/// Backward action `(K f)(y) = sum_x K(y, x) f(x)` for every start `y`.
pub fn apply_observable<F: Fn(i64) -> f64>(k: &KernelMatrix, f: F) -> Vec<(i64, f64)> {
    k.starts.iter().zip(&k.rows).map(|(&y, r)| (y, r.nonzero().map(|(x, p)| p * f(x)).sum())).collect()
}

/// Monte-Carlo estimate of `E[K_t(x1,y1) ... K_t(xk,yk)]` over independent
/// environments derived from `base`.
pub fn kpoint_kernel(base: EnvParams, starts: &[i64], targets: &[i64], t: f64, replicas: u64) -> Result<Estimate> {
    if starts.is_empty() || starts.len() != targets.len() {
        return Err(invalid("starts", "need k >= 1 starts and as many targets"));
    }
    if replicas == 0 {
        return Err(invalid("replicas", "must be >= 1"));
    }
    let mut distinct = starts.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let s = fold_replicas(
        replicas,
        RunningStats::new,
        |acc, r| {
            let env = Environment::new(base.replica(r));
            let k = kernel(&env, &distinct, 0.0, t).expect("valid kernel inputs");
            let v: f64 = starts.iter().zip(targets).map(|(&x, &y)| k.get(x, y)).product();
            acc.push(v);
        },
        |a, b| a.merge(&b),
    );
    Ok(s.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(seed: u64) -> Environment {
        Environment::new(EnvParams::new(1.0, seed).unwrap())
    }

    #[test]
    fn single_event_example() {
        let e = env(1);
        let first = e.events_in(0, 0.0, 100.0)[0];
        let k = KernelMatrix::identity(&[0], 0.0, &e);
        // advance to just past the first ring of bond (0,1) if nothing else rang earlier
        let earlier = e.events_in(-1, 0.0, first.time);
        let k1 = evolve_kernel(&k, first.time, &e).unwrap();
        if earlier.is_empty() {
            assert_eq!(k1.get(0, 0), first.split);
            assert_eq!(k1.get(0, 1), 1.0 - first.split);
        }
        assert!(k1.stochasticity_error() < 1e-15);
    }

    #[test]
    fn no_events_no_change() {
        let e = env(2);
        let k = kernel(&e, &[0, 5], 0.0, 0.0).unwrap();
        assert_eq!(k.get(5, 5), 1.0);
        let k2 = evolve_kernel(&k, 0.0, &e).unwrap();
        assert_eq!(k2.rows, k.rows);
    }

    #[test]
    fn compose_with_identity() {
        let e = env(3);
        let k1 = kernel(&e, &[0], 0.0, 1.0).unwrap();
        let sites: Vec<i64> = k1.rows[0].nonzero().map(|p| p.0).collect();
        let id = KernelMatrix::identity(&sites, 1.0, &e);
        let c = compose(&k1, &id).unwrap();
        for (x, p) in k1.rows[0].nonzero() {
            assert_eq!(c.get(0, x), p);
        }
    }

    #[test]
    fn compose_rejects_mismatch() {
        let e = env(3);
        let k1 = kernel(&e, &[0], 0.0, 1.0).unwrap();
        let k2 = kernel(&e, &[0], 0.5, 1.0).unwrap();
        assert!(compose(&k1, &k2).is_err());
        let other = env(4);
        let k3 = kernel(&other, &[0], 1.0, 2.0).unwrap();
        assert!(compose(&k1, &k3).is_err());
        let k4 = kernel(&e, &[100], 1.0, 2.0).unwrap();
        assert!(compose(&k1, &k4).is_err());
        assert!(evolve_kernel(&k1, 2.0, &other).is_err());
        assert!(evolve_kernel(&k1, 0.5, &e).is_err());
    }

    #[test]
    fn density_mass_and_constants() {
        let e = env(5);
        let starts: Vec<i64> = (-40..=40).collect();
        let k = kernel(&e, &starts, 0.0, 0.5).unwrap();
        let rho: Vec<(i64, f64)> = starts.iter().map(|&y| (y, 3.0)).collect();
        let out = apply_density(&rho, &k).unwrap();
        // rows sum to one, so the forward action conserves total mass
        assert!((out.profile().sum() - 3.0 * 81.0).abs() < 1e-10);
        // and the backward action fixes constants
        for (_, v) in apply_observable(&k, |_| 3.0) {
            assert!((v - 3.0).abs() < 1e-12);
        }
        let single = apply_density(&[(0, 1.0)], &k).unwrap();
        for (x, p) in k.row(0).unwrap().nonzero() {
            assert_eq!(single.get(x), p);
        }
        assert!(apply_density(&[(99, 1.0)], &k).is_err());
    }
}
