//! The random environment: one rate-`rate` Poisson clock per bond `(x, x+1)`
//! and one Beta(α, α) split per clock ring.
//!
//! Every quantity is a pure function of `(seed, bond, event index)`. Gaps of
//! a bond's clock come from one sequential stream per bond; the split of the
//! `j`-th ring has its own stream keyed by `j`, so splits can be evaluated in
//! any order without touching the clock.

pub mod stream;

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{invalid, Result};
use stream::{tag, Stream};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnvParams {
    pub alpha: f64,
    pub seed: u64,
    pub rate: f64,
}

impl EnvParams {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        Self::with_rate(alpha, seed, 1.0)
    }

    pub fn with_rate(alpha: f64, seed: u64, rate: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive and finite, got {alpha}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("rate", format!("must be positive and finite, got {rate}")));
        }
        Ok(EnvParams { alpha, seed, rate })
    }

    /// Parameters of the `r`-th independent replica environment.
    pub fn replica(&self, r: u64) -> Self {
        EnvParams { seed: stream::derive_seed(self.seed, tag::REPLICA, r), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BondEvent {
    pub bond: i64,
    pub index: u64,
    pub time: f64,
    pub split: f64,
}

/// Position of a bond's clock: the next ring has ordinal `index` at `time`.
#[derive(Debug, Clone)]
pub struct BondCursor {
    pub bond: i64,
    pub index: u64,
    pub time: f64,
    gaps: Stream,
    inv_rate: f64,
}

impl BondCursor {
    #[inline]
    pub fn advance(&mut self) {
        let g: f64 = Exp1.sample(&mut self.gaps);
        self.index += 1;
        self.time += g * self.inv_rate;
    }

    /// Skip every ring at or before `t`.
    #[inline]
    pub fn skip_through(&mut self, t: f64) {
        while self.time <= t {
            self.advance();
        }
    }
}

/// Gamma(shape, 1) draw.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0).map_err(|e| invalid("shape", e.to_string()))?;
    Ok(g.sample(rng))
}

/// Beta(a, b) as `G1 / (G1 + G2)`; draws landing on 0 or 1 in floating point
/// (possible for tiny shapes) are rejected and redrawn from the same stream.
#[inline]
pub fn beta_from_gammas<R: Rng + ?Sized>(ga: &Gamma<f64>, gb: &Gamma<f64>, rng: &mut R) -> f64 {
    loop {
        let x = ga.sample(rng);
        let y = gb.sample(rng);
        let b = x / (x + y);
        if b > 0.0 && b < 1.0 {
            return b;
        }
    }
}

pub struct Environment {
    params: EnvParams,
    gamma: Gamma<f64>,
    cache: Mutex<HashMap<i64, (Vec<BondEvent>, BondCursor)>>,
}

impl std::fmt::Debug for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Environment").field("params", &self.params).finish()
    }
}

impl Clone for Environment {
    fn clone(&self) -> Self {
        Environment::new(self.params)
    }
}

impl Environment {
    pub fn new(params: EnvParams) -> Self {
        let gamma = Gamma::new(params.alpha, 1.0).expect("alpha validated by EnvParams");
        Environment { params, gamma, cache: Mutex::new(HashMap::new()) }
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    /// Cursor positioned at the first ring of `bond`.
    pub fn cursor(&self, bond: i64) -> BondCursor {
        let mut c = BondCursor {
            bond,
            index: 0,
            time: 0.0,
            gaps: Stream::new(self.params.seed, tag::CLOCK, bond, 0),
            inv_rate: 1.0 / self.params.rate,
        };
        let g: f64 = Exp1.sample(&mut c.gaps);
        c.time = g * c.inv_rate;
        c
    }

    /// The Beta(α, α) split attached to ring `index` of `bond`.
    #[inline]
    pub fn split(&self, bond: i64, index: u64) -> f64 {
        let mut s = Stream::new(self.params.seed, tag::SPLIT, bond, index);
        beta_from_gammas(&self.gamma, &self.gamma, &mut s)
    }

    /// A stream for auxiliary draws tied to this environment.
    pub fn stream(&self, tag: u64, a: i64, b: u64) -> Stream {
        Stream::new(self.params.seed, tag, a, b)
    }

    /// All rings of `bond` with time in `(t0, t1]`, in time order.
    pub fn events_in(&self, bond: i64, t0: f64, t1: f64) -> Vec<BondEvent> {
        if t1 <= t0 {
            return Vec::new();
        }
        let mut cache = self.cache.lock().expect("environment cache poisoned");
        let (events, cur) = cache.entry(bond).or_insert_with(|| (Vec::new(), self.cursor(bond)));
        while cur.time <= t1 {
            events.push(BondEvent {
                bond,
                index: cur.index,
                time: cur.time,
                split: self.split(bond, cur.index),
            });
            cur.advance();
        }
        events.iter().filter(|e| e.time > t0 && e.time <= t1).copied().collect()
    }

    /// Bonds with cached events and the horizon each is materialized to.
    pub fn materialized(&self) -> Vec<(i64, f64)> {
        let cache = self.cache.lock().expect("environment cache poisoned");
        let mut v: Vec<(i64, f64)> = cache.iter().map(|(b, (_, c))| (*b, c.time)).collect();
        v.sort_by_key(|p| p.0);
        v
    }

    /// Independent Gamma(α) draw keyed by `(tag, site, index)`.
    pub fn gamma_keyed(&self, tag: u64, site: i64, index: u64) -> f64 {
        let mut s = Stream::new(self.params.seed, tag, site, index);
        self.gamma.sample(&mut s)
    }

    /// Write `bond,index,time,split` rows for bonds in `bonds` up to `t1`.
    pub fn dump_csv<W: Write>(&self, w: W, bonds: std::ops::RangeInclusive<i64>, t1: f64) -> Result<()> {
        let mut csv = crate::io::CsvWriter::new(w, &["bond", "index", "time", "split"])?;
        for b in bonds {
            for e in self.events_in(b, 0.0, t1) {
                csv.row(&[&e.bond, &e.index, &e.time, &e.split])?;
            }
        }
        csv.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(EnvParams::new(0.0, 1).is_err());
        assert!(EnvParams::new(-1.0, 1).is_err());
        assert!(EnvParams::new(f64::NAN, 1).is_err());
        assert!(EnvParams::with_rate(1.0, 1, 0.0).is_err());
        assert!(sample_gamma(0.0, &mut Stream::from_state(1)).is_err());
    }

    #[test]
    fn empty_interval() {
        let env = Environment::new(EnvParams::new(1.0, 3).unwrap());
        assert!(env.events_in(5, 2.0, 2.0).is_empty());
    }

    #[test]
    fn events_are_deterministic_and_lazy() {
        let env = Environment::new(EnvParams::new(0.7, 99).unwrap());
        let short = env.events_in(-4, 0.0, 3.0);
        let long = env.events_in(-4, 0.0, 30.0);
        assert_eq!(&long[..short.len()], &short[..]);
        let fresh = Environment::new(EnvParams::new(0.7, 99).unwrap());
        assert_eq!(fresh.events_in(-4, 0.0, 30.0), long);
        for w in long.windows(2) {
            assert!(w[0].time < w[1].time);
            assert_eq!(w[0].index + 1, w[1].index);
        }
        assert!(long.iter().all(|e| e.split > 0.0 && e.split < 1.0));
        let mid = env.events_in(-4, 3.0, 10.0);
        assert!(mid.iter().all(|e| e.time > 3.0 && e.time <= 10.0));
    }

    #[test]
    fn split_matches_cached_events() {
        let env = Environment::new(EnvParams::new(2.0, 5).unwrap());
        for e in env.events_in(0, 0.0, 5.0) {
            assert_eq!(e.split, env.split(0, e.index));
        }
    }

    #[test]
    fn tiny_alpha_splits_stay_inside() {
        let env = Environment::new(EnvParams::new(0.02, 5).unwrap());
        for j in 0..20_000 {
            let b = env.split(1, j);
            assert!(b > 0.0 && b < 1.0);
        }
    }
}
