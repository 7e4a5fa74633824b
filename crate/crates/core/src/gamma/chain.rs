//! The ε-discretized walk: in each step every bond rings independently with
//! probability ε and carries a fresh Beta(α, α) split. A walker at `x` moves
//! only when exactly one of its two bonds rings, and then uses the split of
//! the bond that rang: right with probability `1 - B_{x,x+1}` when only
//! `(x, x+1)` rang, left with probability `B_{x-1,x}` when only `(x-1, x)` rang.

use rand::Rng;
use rand_distr::Gamma;

use crate::env::beta_from_gammas;
use crate::env::stream::{tag, Stream};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EpsChainParams {
    pub alpha: f64,
    pub eps: f64,
    pub seed: u64,
}

impl EpsChainParams {
    pub fn new(alpha: f64, eps: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(eps >= 0.0 && eps < 1.0) {
            return Err(invalid("eps", format!("must lie in [0,1), got {eps}")));
        }
        Ok(EpsChainParams { alpha, eps, seed })
    }

    /// Steps per unit time, `floor(1/ε)`.
    pub fn steps_per_unit(&self) -> u64 {
        (1.0 / self.eps).floor() as u64
    }
}

/// Ring indicator and split of one bond in one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondDraw {
    pub rang: bool,
    pub split: f64,
}

/// One-step law `[P(-1), P(0), P(+1)]` of a walker whose left and right bonds
/// carry the given draws.
#[inline]
pub fn step_law(left: BondDraw, right: BondDraw) -> [f64; 3] {
    match (left.rang, right.rang) {
        (false, true) => [0.0, right.split, 1.0 - right.split],
        (true, false) => [left.split, 1.0 - left.split, 0.0],
        _ => [0.0, 1.0, 0.0],
    }
}

/// Sample the new position of a walker at `x` with uniform `u`.
pub fn eps_step(x: i64, left: BondDraw, right: BondDraw, u: f64) -> i64 {
    let [pl, p0, _] = step_law(left, right);
    if u < pl {
        x - 1
    } else if u < pl + p0 {
        x
    } else {
        x + 1
    }
}

/// Keyed draws of the ε-environment: bond `b` at step `n`.
pub struct EpsEnv {
    params: EpsChainParams,
    gamma: Gamma<f64>,
}

impl EpsEnv {
    pub fn new(params: EpsChainParams) -> Self {
        EpsEnv { params, gamma: Gamma::new(params.alpha, 1.0).expect("alpha validated") }
    }

    pub fn params(&self) -> &EpsChainParams {
        &self.params
    }

    pub fn draw(&self, bond: i64, step: u64) -> BondDraw {
        let rang = Stream::new(self.params.seed, tag::EPS_CLOCK, bond, step).open01() < self.params.eps;
        let mut s = Stream::new(self.params.seed, tag::EPS_SPLIT, bond, step);
        BondDraw { rang, split: beta_from_gammas(&self.gamma, &self.gamma, &mut s) }
    }

    /// Draws for bonds `lo..=hi` at `step`, taken sequentially from one stream.
    pub fn draw_row<R: Rng>(&self, lo: i64, hi: i64, rng: &mut R) -> Vec<BondDraw> {
        (lo..=hi)
            .map(|_| {
                let rang = rng.random::<f64>() < self.params.eps;
                BondDraw { rang, split: beta_from_gammas(&self.gamma, &self.gamma, rng) }
            })
            .collect()
    }
}

/// Quenched law of the ε-walk after `steps` steps from `start`, as a dense
/// vector over `start - steps ..= start + steps`.
pub fn eps_kernel_row(env: &EpsEnv, start: i64, steps: u64) -> (i64, Vec<f64>) {
    let w = steps as i64;
    let lo = start - w;
    let len = (2 * w + 1) as usize;
    let mut row = vec![0.0; len];
    let mut next = vec![0.0; len];
    row[w as usize] = 1.0;
    for n in 0..steps {
        let reach = n as i64;
        let (a, b) = (start - reach, start + reach);
        let draws: Vec<BondDraw> = (a - 1..=b).map(|bond| env.draw(bond, n)).collect();
        next.iter_mut().for_each(|v| *v = 0.0);
        for x in a..=b {
            let k = (x - lo) as usize;
            let p = row[k];
            if p == 0.0 {
                continue;
            }
            let j = (x - a) as usize;
            let [pl, p0, pr] = step_law(draws[j], draws[j + 1]);
            next[k - 1] += p * pl;
            next[k] += p * p0;
            next[k + 1] += p * pr;
        }
        std::mem::swap(&mut row, &mut next);
    }
    (lo, row)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OFF: BondDraw = BondDraw { rang: false, split: 0.3 };

    #[test]
    fn quiet_or_double_ring_stays() {
        let on = BondDraw { rang: true, split: 0.3 };
        assert_eq!(step_law(OFF, OFF), [0.0, 1.0, 0.0]);
        assert_eq!(step_law(on, on), [0.0, 1.0, 0.0]);
        for u in [0.01, 0.5, 0.99] {
            assert_eq!(eps_step(4, OFF, OFF, u), 4);
        }
    }

    #[test]
    fn uses_the_bond_that_rang() {
        let left = BondDraw { rang: true, split: 0.2 };
        let right = BondDraw { rang: true, split: 0.7 };
        let close = |a: [f64; 3], b: [f64; 3]| a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(step_law(OFF, right), [0.0, 0.7, 0.3]));
        assert!(close(step_law(left, OFF), [0.2, 0.8, 0.0]));
        assert_eq!(eps_step(0, left, OFF, 0.1), -1);
        assert_eq!(eps_step(0, OFF, right, 0.9), 1);
    }

    #[test]
    fn frozen_at_zero_eps() {
        let env = EpsEnv::new(EpsChainParams::new(1.0, 0.0, 3).unwrap());
        let (lo, row) = eps_kernel_row(&env, 2, 20);
        assert_eq!(row[(2 - lo) as usize], 1.0);
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        let env = EpsEnv::new(EpsChainParams::new(0.7, 0.1, 3).unwrap());
        let (_, row) = eps_kernel_row(&env, 0, 100);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(EpsChainParams::new(1.0, 1.0, 0).is_err());
        assert!(EpsChainParams::new(1.0, -0.1, 0).is_err());
        assert!(EpsChainParams::new(0.0, 0.1, 0).is_err());
    }
}
