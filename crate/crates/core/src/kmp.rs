//! The KMP energy exchange process: every bond rings at rate 1 and its total
//! energy is split in Beta(α, α) proportions.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use crate::engine::{Engine, Lattice, Profile, Window};
use crate::env::stream::tag;
use crate::env::{EnvParams, Environment};
use crate::error::{invalid, Error, Result};
use crate::stats::{bonferroni, ks2d_product, ks_one_sample, KsResult};
use crate::sweep::map_replicas;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};

/// Finite-support energy profile. Sites outside the stored interval carry 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    profile: Profile,
    mass: f64,
    pub time: f64,
}

impl EnergyConfig {
    pub fn from_profile(profile: Profile, time: f64) -> Self {
        let mass = profile.sum();
        EnergyConfig { profile, mass, time }
    }

    pub fn delta(site: i64) -> Self {
        Self::from_profile(Profile::delta(site), 0.0)
    }

    pub fn zero() -> Self {
        Self::from_profile(Profile::zeros(), 0.0)
    }

    pub fn from_pairs(pairs: &[(i64, f64)]) -> Result<Self> {
        let mut p = Profile::zeros();
        for &(x, e) in pairs {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(invalid("energy", format!("site {x} has energy {e}")));
            }
            p.set(x, p.get(x) + e);
        }
        Ok(Self::from_profile(p, 0.0))
    }

    pub fn get(&self, site: i64) -> f64 {
        self.profile.get(site)
    }

    /// Total energy recorded at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Current sum of the stored energies plus pruned mass.
    pub fn current_mass(&self) -> f64 {
        self.profile.sum() + self.profile.pruned()
    }

    pub fn support(&self) -> Option<(i64, i64)> {
        self.profile.support()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.profile.nonzero()
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn into_profile(self) -> Profile {
        self.profile
    }
}

/// One bond update `(x, x+1) <- (B s, (1-B) s)`.
pub fn redistribute(cfg: &EnergyConfig, x: i64, split: f64) -> Result<EnergyConfig> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::InvalidSplit(split));
    }
    let mut p = cfg.profile.clone();
    p.redistribute(x, split);
    Ok(EnergyConfig { profile: p, mass: cfg.mass, time: cfg.time })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, EnergyConfig)>,
    pub events_applied: u64,
}

impl Trajectory {
    pub fn last(&self) -> &EnergyConfig {
        &self.snapshots.last().expect("trajectory has a snapshot").1
    }

    /// `time,site,energy` rows for every nonzero site of every snapshot.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = crate::io::CsvWriter::new(w, &["time", "site", "energy"])?;
        for (t, cfg) in &self.snapshots {
            for (x, e) in cfg.nonzero() {
                csv.row(&[t, &x, &e])?;
            }
        }
        csv.finish()
    }
}

/// Run from `init` to `horizon`, recording the state after all rings with
/// time `<= s` for each requested `s` (the horizon alone if none are given).
pub fn run_kmp(init: &EnergyConfig, horizon: f64, env: &Environment, snapshot_times: &[f64]) -> Result<Trajectory> {
    run_kmp_window(init, horizon, env, snapshot_times, Window::Adaptive)
}

pub fn run_kmp_window(
    init: &EnergyConfig,
    horizon: f64,
    env: &Environment,
    snapshot_times: &[f64],
    window: Window,
) -> Result<Trajectory> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be finite and >= 0, got {horizon}")));
    }
    let mut times: Vec<f64> = snapshot_times.to_vec();
    if times.iter().any(|&s| !(s >= 0.0 && s <= horizon)) {
        return Err(invalid("snapshot", "times must lie in [0, horizon]"));
    }
    times.sort_by(f64::total_cmp);
    if times.is_empty() {
        times.push(horizon);
    }
    let mut state = init.profile.clone();
    let mut eng = Engine::new(env, &state, init.time, window);
    let mut snapshots = Vec::with_capacity(times.len());
    for s in times {
        eng.run_until(&mut state, init.time + s);
        snapshots.push((s, EnergyConfig { profile: state.clone(), mass: init.mass, time: init.time + s }));
    }
    eng.run_until(&mut state, init.time + horizon);
    Ok(Trajectory { snapshots, events_applied: eng.events() })
}

/// Final profile and event count without snapshot copies.
pub fn evolve(init: Profile, t: f64, env: &Environment) -> (Profile, u64) {
    let mut state = init;
    let mut eng = Engine::new(env, &state, 0.0, Window::Adaptive);
    eng.run_until(&mut state, t);
    (state, eng.events())
}

/// Independent Gamma(α) energies on `sites`, keyed by `(seed, site)`.
pub fn stationary_draw(sites: std::ops::RangeInclusive<i64>, alpha: f64, seed: u64) -> Result<EnergyConfig> {
    let env = Environment::new(EnvParams::new(alpha, seed)?);
    let lo = *sites.start();
    let v: Vec<f64> = sites.map(|x| env.gamma_keyed(tag::STATIONARY, x, 0)).collect();
    Ok(EnergyConfig::from_profile(Profile::from_dense(lo, v), 0.0))
}

/// KMP on the ring `Z / L`: bond `x` joins sites `x` and `x+1 mod L`, and
/// uses the clock and splits of bond `x` in `env`. Returns the final energies
/// and the number of rings applied.
pub fn run_ring(init: &[f64], horizon: f64, env: &Environment) -> (Vec<f64>, u64) {
    let l = init.len();
    let mut v = init.to_vec();
    if l < 2 {
        return (v, 0);
    }
    let mut cursors: Vec<_> = (0..l as i64).map(|b| env.cursor(b)).collect();
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        cursors.iter().enumerate().map(|(b, c)| Reverse((c.time.to_bits(), b))).collect();
    let mut events = 0;
    while let Some(&Reverse((tb, b))) = heap.peek() {
        if f64::from_bits(tb) > horizon {
            break;
        }
        heap.pop();
        let c = &mut cursors[b];
        let split = env.split(b as i64, c.index);
        c.advance();
        heap.push(Reverse((c.time.to_bits(), b)));
        let r = (b + 1) % l;
        let s = v[b] + v[r];
        let a = split * s;
        v[b] = a;
        v[r] = s - a;
        events += 1;
    }
    (v, events)
}

impl Lattice for EnergyConfig {
    fn apply(&mut self, bond: i64, index: u64, split: f64) {
        self.profile.apply(bond, index, split)
    }

    fn occupied(&self, site: i64) -> bool {
        self.profile.occupied(site)
    }

    fn support(&self) -> Option<(i64, i64)> {
        self.profile.support()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KmpStationarityReport {
    pub alpha: f64,
    pub ring: usize,
    pub horizon: f64,
    pub samples: usize,
    pub level: f64,
    pub per_test_level: f64,
    /// Per-site KS of the ring energies at `horizon` against Gamma(α).
    pub sites: Vec<KsResult>,
    /// Joint KS of the energies on sites 0 and 1 against Gamma(α) ⊗ Gamma(α).
    pub neighbours: KsResult,
    /// Joint KS of one bond update `(B s, (1-B) s)` applied to a Gamma(α) pair.
    pub one_bond: KsResult,
    pub passed: bool,
}

/// Start independent Gamma(α) energies on a ring of `ring` sites, run KMP to
/// `horizon` in independent environments, and test that the product law is
/// preserved. Tests are Bonferroni-corrected across sites and the two joint
/// checks.
pub fn kmp_stationarity(alpha: f64, ring: usize, horizon: f64, samples: usize, seed: u64, level: f64) -> Result<KmpStationarityReport> {
    let base = EnvParams::new(alpha, seed)?;
    if ring < 2 {
        return Err(invalid("ring", format!("need at least 2 sites, got {ring}")));
    }
    let law = GammaLaw::new(alpha, 1.0).map_err(|e| invalid("alpha", e.to_string()))?;
    let runs: Vec<(Vec<f64>, (f64, f64))> = map_replicas(samples as u64, |r| {
        let env = Environment::new(base.replica(r));
        let init: Vec<f64> = (0..ring as i64).map(|x| env.gamma_keyed(tag::STATIONARY, x, 0)).collect();
        let (v, _) = run_ring(&init, horizon, &env);
        let a = env.gamma_keyed(tag::STATIONARY, -1, 0);
        let b = env.gamma_keyed(tag::STATIONARY, -2, 0);
        let split = env.split(-1, 0);
        (v, (split * (a + b), (1.0 - split) * (a + b)))
    });
    let cdf = |v: f64| law.cdf(v);
    let sites: Vec<KsResult> =
        (0..ring).map(|x| ks_one_sample(&runs.iter().map(|r| r.0[x]).collect::<Vec<_>>(), cdf)).collect();
    let pairs: Vec<(f64, f64)> = runs.iter().map(|r| (r.0[0], r.0[1])).collect();
    let neighbours = ks2d_product(&pairs, cdf, cdf);
    let bonds: Vec<(f64, f64)> = runs.iter().map(|r| r.1).collect();
    let one_bond = ks2d_product(&bonds, cdf, cdf);
    let per_test_level = bonferroni(level, ring + 2);
    let passed = sites.iter().all(|k| k.passes(per_test_level)) && neighbours.passes(per_test_level) && one_bond.passes(per_test_level);
    Ok(KmpStationarityReport { alpha, ring, horizon, samples, level, per_test_level, sites, neighbours, one_bond, passed })
}
