//! Brick-wall KMP: at even times the bonds `(x, x+1)` with `x` even
//! redistribute, at odd times those with `x` odd, as
//! `(η(x), η(x+1)) <- (1 - B, B) (η(x) + η(x+1))`.

use std::io::Write;

use serde::Serialize;

use super::rwre::{rwre_step, BetaEnv, BetaRwreState};
use super::CouplingReport;
use crate::error::Result;
use crate::io::CsvWriter;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrickWallState {
    pub n: u64,
    pub lo: i64,
    pub energies: Vec<f64>,
}

impl BrickWallState {
    pub fn get(&self, x: i64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        self.energies.get((x - self.lo) as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.energies.len() as i64 - 1
    }

    /// `η(n, x) + η(n, x+1)` on the active bond starting at `x`.
    pub fn bond_total(&self, x: i64) -> f64 {
        self.get(x) + self.get(x + 1)
    }

    /// Energies that make the active-bond totals equal `p`: the whole of
    /// `p(x)` sits on the left site of bond `x`.
    pub fn from_walk(p: &BetaRwreState) -> Self {
        let mut s = BrickWallState { n: p.n, lo: p.lo, energies: p.probs.clone() };
        s.energies.push(0.0);
        s
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = CsvWriter::new(w, &["n", "site", "energy"])?;
        for (k, e) in self.energies.iter().enumerate() {
            out.row(&[&self.n, &(self.lo + k as i64), e])?;
        }
        out.finish()
    }
}

/// One sweep with `split(x) = B_{n,x}` on the active bonds.
pub fn brickwall_step<F: FnMut(i64) -> f64>(state: &BrickWallState, mut split: F) -> BrickWallState {
    let parity = (state.n % 2) as i64;
    let mut lo = state.lo;
    if (lo - parity).rem_euclid(2) != 0 {
        lo -= 1;
    }
    let mut hi = state.hi();
    if (hi - parity).rem_euclid(2) == 0 {
        hi += 1;
    }
    let mut energies = Vec::with_capacity((hi - lo + 1) as usize);
    let mut x = lo;
    while x < hi {
        let s = state.get(x) + state.get(x + 1);
        if s == 0.0 {
            energies.extend_from_slice(&[0.0, 0.0]);
        } else {
            let b = split(x);
            energies.push((1.0 - b) * s);
            energies.push(b * s);
        }
        x += 2;
    }
    BrickWallState { n: state.n + 1, lo, energies }
}

/// Run the brick wall and the Beta walk on shared draws `B_{n,x}` from `δ_0`
/// and record `max_x |η(n, x) - expected(n, x)|`, where `expected` is
/// `p_{n-1}(x-1) B_{n-1,x-1}` on sites of the parity of `n` and
/// `p_{n-1}(x) (1 - B_{n-1,x})` elsewhere. The `n = 0` entry compares
/// active-bond totals with `p_0`.
pub fn brickwall_coupling(alpha: f64, sweeps: u64, seed: u64) -> Result<CouplingReport> {
    let env = BetaEnv::new(alpha, seed)?;
    let mut walk = BetaRwreState::delta(0);
    let mut bw = BrickWallState::from_walk(&walk);
    let mut discrepancy = vec![walk.sites().map(|(x, p)| (bw.bond_total(x) - p).abs()).fold(0.0, f64::max)];
    let mut conservation: f64 = 0.0;
    for _ in 0..sweeps {
        let n = walk.n;
        let next_bw = brickwall_step(&bw, |x| env.split(n, x));
        let next_walk = rwre_step(&walk, |x| env.split(n, x));
        let np = (n + 1) as i64;
        let mut worst: f64 = 0.0;
        for x in next_bw.lo.min(walk.lo - 1)..=next_bw.hi().max(walk.hi() + 1) {
            let expected = if (x - np).rem_euclid(2) == 0 {
                walk.get(x - 1) * split_or_zero(&env, n, &walk, x - 1)
            } else {
                walk.get(x) * (1.0 - split_or_zero(&env, n, &walk, x))
            };
            worst = worst.max((next_bw.get(x) - expected).abs());
        }
        for (x, p) in next_walk.sites() {
            if (x - np).rem_euclid(2) == 0 {
                worst = worst.max((next_bw.bond_total(x) - p).abs());
            }
        }
        discrepancy.push(worst);
        conservation = conservation.max((next_bw.total() - 1.0).abs()).max((next_walk.total() - 1.0).abs());
        bw = next_bw;
        walk = next_walk;
    }
    Ok(CouplingReport { model: "brickwall".into(), seed, sweeps, discrepancy, conservation })
}

fn split_or_zero(env: &BetaEnv, n: u64, walk: &BetaRwreState, x: i64) -> f64 {
    if walk.get(x) == 0.0 {
        0.0
    } else {
        env.split(n, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::rwre::simple_walk_pmf;

    #[test]
    fn conserves_energy() {
        let mut s = BrickWallState { n: 0, lo: -3, energies: vec![0.2, 1.0, 0.0, 3.5, 0.1, 0.7] };
        let t0 = s.total();
        let env = BetaEnv::new(0.5, 8).unwrap();
        for _ in 0..30 {
            let n = s.n;
            s = brickwall_step(&s, |x| env.split(n, x));
            assert!((s.total() - t0).abs() < 1e-12 * t0);
        }
    }

    #[test]
    fn active_bonds_follow_parity() {
        let s = BrickWallState { n: 1, lo: 0, energies: vec![1.0, 2.0, 3.0] };
        let mut seen = Vec::new();
        brickwall_step(&s, |x| {
            seen.push(x);
            0.5
        });
        assert!(seen.iter().all(|x| x.rem_euclid(2) == 1), "{seen:?}");
    }

    #[test]
    fn half_splits_smooth_binomially() {
        let mut s = BrickWallState::from_walk(&BetaRwreState::delta(0));
        for _ in 0..10 {
            s = brickwall_step(&s, |_| 0.5);
        }
        // active bonds at n = 10 start at even x and carry p_10(x)
        for x in (-10..=10).step_by(2) {
            assert!((s.bond_total(x) - simple_walk_pmf(10, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn coupling_is_exact() {
        for seed in 0..5 {
            let r = brickwall_coupling(0.8, 50, seed).unwrap();
            assert!(r.passes(1e-10), "{:?}", r.max_discrepancy());
            assert_eq!(r.discrepancy[0], 0.0);
        }
    }
}
