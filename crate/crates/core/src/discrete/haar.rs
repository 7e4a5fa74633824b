//! Directed waves through a circuit of Haar unitaries.
//!
//! Site `(n, x)` carries `Ψ_n(x) = (Ψ⁺, Ψ⁻)` with `Ψ⁺ ∈ C^plus` and
//! `Ψ⁻ ∈ C^minus`. The unitary `U_{n,x}` maps `Ψ_n(x)` to `Ψ^out`, whose `+`
//! block becomes `Ψ⁺_{n+1}(x-1)` and whose `-` block becomes `Ψ⁻_{n+1}(x+1)`.
//! `B_{n,x} = |Ψ^{out,-}|² / ‖Ψ^out‖²` is the weight sent to the right, which
//! is Beta(minus, plus) distributed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::rwre::{rwre_step, BetaRwreState};
use super::CouplingReport;
use crate::env::stream::{derive_seed, tag, Stream};
use crate::error::{invalid, Result};

/// Block sizes of the two wave components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub minus: usize,
    pub plus: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims { minus: 1, plus: 1 }
    }
}

impl Dims {
    pub fn new(minus: usize, plus: usize) -> Result<Self> {
        if minus == 0 || plus == 0 {
            return Err(invalid("dims", format!("both blocks need size >= 1, got ({minus},{plus})")));
        }
        Ok(Dims { minus, plus })
    }

    pub fn total(&self) -> usize {
        self.minus + self.plus
    }
}

const UNITARY_TOL: f64 = 1e-12;

/// `max |U* U - I|`.
pub fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
    let p = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Haar unitary of size `d`: QR of a complex Gaussian matrix, with each
/// column of `Q` multiplied by the phase of the matching diagonal entry of
/// `R`. Draws failing the unitarity check are redrawn from the same stream.
pub fn haar_unitary(d: usize, rng: &mut Stream) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    loop {
        let z = DMatrix::from_fn(d, d, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * s, im * s)
        });
        let qr = z.qr();
        let r = qr.r();
        let mut q = qr.q();
        let mut ok = true;
        for j in 0..d {
            let rjj = r[(j, j)];
            let m = rjj.norm();
            if !(m > 0.0) {
                ok = false;
                break;
            }
            let phase = rjj / m;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        if ok && unitarity_error(&q) <= UNITARY_TOL {
            return q;
        }
    }
}

/// Wave amplitudes on sites `lo..lo + amps.len()`; each entry stores the
/// `+` block followed by the `-` block.
#[derive(Debug, Clone, Serialize)]
pub struct WaveState {
    pub n: u64,
    pub dims: Dims,
    pub lo: i64,
    #[serde(skip)]
    pub amps: Vec<DVector<Complex64>>,
}

impl WaveState {
    /// Unit amplitude on the first `+` coordinate at `site`.
    pub fn point(dims: Dims, site: i64) -> Self {
        let mut v = DVector::zeros(dims.total());
        v[0] = Complex64::new(1.0, 0.0);
        WaveState { n: 0, dims, lo: site, amps: vec![v] }
    }

    pub fn norm_sq(&self, x: i64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        self.amps.get((x - self.lo) as usize).map(|v| v.norm_squared()).unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.amps.iter().map(|v| v.norm_squared()).sum()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.amps.len() as i64 - 1
    }
}

/// `U_{n,x}` keyed by `(seed, x, n)`.
#[derive(Debug, Clone, Copy)]
pub struct HaarCircuit {
    pub dims: Dims,
    pub seed: u64,
}

impl HaarCircuit {
    pub fn unitary(&self, n: u64, x: i64) -> DMatrix<Complex64> {
        haar_unitary(self.dims.total(), &mut Stream::new(self.seed, tag::HAAR, x, n))
    }
}

/// One sweep. `unitary(x)` supplies `U_{n,x}` and is only queried at sites
/// carrying amplitude. Returns the new state and the `(x, B_{n,x})` pairs.
pub fn haar_step<F: FnMut(i64) -> DMatrix<Complex64>>(state: &WaveState, mut unitary: F) -> (WaveState, Vec<(i64, f64)>) {
    let d = state.dims;
    let lo = state.lo - 1;
    let mut amps = vec![DVector::<Complex64>::zeros(d.total()); state.amps.len() + 2];
    let mut splits = Vec::new();
    for (k, v) in state.amps.iter().enumerate() {
        let norm = v.norm_squared();
        if norm == 0.0 {
            continue;
        }
        let x = state.lo + k as i64;
        let out = unitary(x) * v;
        let plus = out.rows(0, d.plus);
        let minus = out.rows(d.plus, d.minus);
        splits.push((x, minus.norm_squared() / out.norm_squared()));
        // out+ to x-1, out- to x+1
        amps[k].rows_mut(0, d.plus).copy_from(&plus);
        amps[k + 2].rows_mut(d.plus, d.minus).copy_from(&minus);
    }
    (WaveState { n: state.n + 1, dims: d, lo, amps }, splits)
}

/// Run the circuit from a point source and the Beta walk driven by the
/// extracted `B_{n,x}`; records `max_x |‖Ψ_n(x)‖² - p_n(x)|` per sweep.
pub fn wave_walk_coupling(dims: Dims, sweeps: u64, seed: u64) -> Result<CouplingReport> {
    let circuit = HaarCircuit { dims, seed };
    let mut wave = WaveState::point(dims, 0);
    let mut walk = BetaRwreState::delta(0);
    let gap = |w: &WaveState, p: &BetaRwreState| {
        (w.lo.min(p.lo)..=w.hi().max(p.hi())).map(|x| (w.norm_sq(x) - p.get(x)).abs()).fold(0.0, f64::max)
    };
    let mut discrepancy = vec![gap(&wave, &walk)];
    let mut conservation: f64 = 0.0;
    for _ in 0..sweeps {
        let n = wave.n;
        let (next, splits) = haar_step(&wave, |x| circuit.unitary(n, x));
        let lookup: std::collections::HashMap<i64, f64> = splits.into_iter().collect();
        walk = rwre_step(&walk, |x| *lookup.get(&x).expect("walk mass implies wave amplitude"));
        wave = next;
        discrepancy.push(gap(&wave, &walk));
        conservation = conservation.max((wave.total() - 1.0).abs());
    }
    Ok(CouplingReport { model: format!("haar({},{})", dims.minus, dims.plus), seed, sweeps, discrepancy, conservation })
}

/// `draws` values of `B_{n,x}` read off independent circuits of `sweeps`
/// sweeps started from a point source.
pub fn haar_b_samples(dims: Dims, draws: usize, sweeps: u64, seed: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(draws);
    let mut run = 0;
    while out.len() < draws {
        let circuit = HaarCircuit { dims, seed: derive_seed(seed, tag::REPLICA, run) };
        let mut wave = WaveState::point(dims, 0);
        for _ in 0..sweeps {
            let n = wave.n;
            let (next, splits) = haar_step(&wave, |x| circuit.unitary(n, x));
            out.extend(splits.into_iter().map(|(_, b)| b));
            wave = next;
            if out.len() >= draws {
                break;
            }
        }
        run += 1;
    }
    out.truncate(draws);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_draws() {
        let mut rng = Stream::new(1, tag::HAAR, 0, 0);
        for d in 1..6 {
            let u = haar_unitary(d, &mut rng);
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn norm_conserved_per_site() {
        let circuit = HaarCircuit { dims: Dims::new(2, 3).unwrap(), seed: 4 };
        let mut w = WaveState::point(circuit.dims, 0);
        for _ in 0..20 {
            let n = w.n;
            let before = w.total();
            let (next, splits) = haar_step(&w, |x| circuit.unitary(n, x));
            assert!((next.total() - before).abs() < 1e-12);
            assert!(splits.iter().all(|&(_, b)| b > 0.0 && b < 1.0));
            w = next;
        }
    }

    #[test]
    fn walk_coupling_exact() {
        for dims in [Dims::default(), Dims::new(1, 2).unwrap()] {
            let r = wave_walk_coupling(dims, 50, 3).unwrap();
            assert_eq!(r.discrepancy[0], 0.0);
            assert!(r.passes(1e-10), "{dims:?} {}", r.max_discrepancy());
        }
    }

    #[test]
    fn split_mean_matches_block_sizes() {
        // Beta(minus, plus) has mean minus / (minus + plus)
        let b = haar_b_samples(Dims::new(2, 3).unwrap(), 20_000, 20, 6);
        let s: crate::stats::RunningStats = b.iter().copied().collect();
        assert!((s.mean - 0.4).abs() < 4.0 * s.stderr(), "{}", s.mean);
    }
}
