//! Reference statistics for the stochastic heat equation
//! `dU = ½ ΔU dt + β U ξ` on a truncated line with absorbing ends.
//!
//! Space is a uniform grid `x_i = (i - m) Δx`, `i = 0..2m`. One time step of
//! the mean is `u ← A u` with `A = I + (Δt / 2Δx²) L`, `L` the second
//! difference. The simulator adds `β u_i ξ_i sqrt(Δt/Δx)` per cell, so the
//! second moment obeys `Q ← A Q Aᵀ + β² (Δt/Δx) diag(Q)` exactly. That
//! recursion is the moment oracle.

use std::f64::consts::PI;
use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::env::stream::{tag, Stream};
use crate::error::{invalid, Error, Result};
use crate::io::CsvWriter;
use crate::scaling::TestFunction;
use crate::stats::RunningStats;
use crate::sweep::fold_replicas;

/// Gaussian density `p_t(x)`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("heat kernel needs t > 0, got {t}")));
    }
    Ok((-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt())
}

/// The coupling `1/(2 sqrt α)` between the KMP field and the noise.
pub fn beta_for_alpha(alpha: f64) -> f64 {
    0.5 / alpha.sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Grid {
    pub dx: f64,
    pub dt: f64,
    pub half_width: f64,
}

impl Grid {
    /// Checks `Δt ≤ Δx²/2` and positivity.
    pub fn new(dx: f64, dt: f64, half_width: f64) -> Result<Self> {
        if !(dx > 0.0) || !(half_width >= dx) {
            return Err(invalid("grid", format!("dx={dx}, L={half_width}")));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let limit = dx * dx / 2.0;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::UnstableGrid { dt, limit });
        }
        Ok(Grid { dx, dt, half_width })
    }

    /// Grid with the largest stable time step.
    pub fn stable(dx: f64, half_width: f64) -> Result<Self> {
        Grid::new(dx, dx * dx / 2.0, half_width)
    }

    /// Stable grid whose time step divides `t` exactly.
    pub fn for_horizon(dx: f64, half_width: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        let k = (t / (dx * dx / 2.0)).ceil();
        Grid::new(dx, t / k, half_width)
    }

    pub fn half_cells(&self) -> usize {
        (self.half_width / self.dx).round() as usize
    }

    pub fn cells(&self) -> usize {
        2 * self.half_cells() + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.half_cells() as f64) * self.dx
    }

    /// Number of steps reaching `t`; `t` must be a multiple of `Δt` up to rounding.
    pub fn steps(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if t < 0.0 || (k * self.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(invalid("t", format!("{t} is not a multiple of dt={}", self.dt)));
        }
        Ok(k as usize)
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.cells()).map(|i| f(self.x(i))).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    /// Mass `1/Δx` in the cell at the origin.
    NarrowWedge,
    /// Values on the grid cells.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct SheParams {
    pub beta: f64,
    pub grid: Grid,
    pub initial: Initial,
}

impl SheParams {
    pub fn new(beta: f64, grid: Grid, initial: Initial) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid("beta", format!("must be >= 0, got {beta}")));
        }
        if let Initial::Values(v) = &initial {
            if v.len() != grid.cells() {
                return Err(invalid("initial", format!("{} values for {} cells", v.len(), grid.cells())));
            }
        }
        Ok(SheParams { beta, grid, initial })
    }

    pub fn initial_values(&self) -> Vec<f64> {
        match &self.initial {
            Initial::Values(v) => v.clone(),
            Initial::NarrowWedge => {
                let mut v = vec![0.0; self.grid.cells()];
                v[self.grid.half_cells()] = 1.0 / self.grid.dx;
                v
            }
        }
    }
}

/// `u ← A u` with zero values outside the grid.
fn heat_step(u: &[f64], out: &mut [f64], r: f64) {
    let n = u.len();
    for i in 0..n {
        let l = if i > 0 { u[i - 1] } else { 0.0 };
        let rr = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = u[i] + r * (l - 2.0 * u[i] + rr);
    }
}

/// Deterministic heat flow of `u` over `steps` steps.
pub fn heat_flow(grid: &Grid, u: &[f64], steps: usize) -> Vec<f64> {
    let r = grid.dt / (2.0 * grid.dx * grid.dx);
    let mut a = u.to_vec();
    let mut b = vec![0.0; a.len()];
    for _ in 0..steps {
        heat_step(&a, &mut b, r);
        std::mem::swap(&mut a, &mut b);
    }
    a
}

/// Second moment `Q(t, x_i, x_j)` and mean `E U(t, x_i)` on the grid.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub grid: Grid,
    pub beta: f64,
    pub t: f64,
    pub mean: Vec<f64>,
    pub q: Vec<f64>,
}

impl MomentTable {
    pub fn at_index(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.grid.cells() + j]
    }

    /// Bilinear interpolation of `Q(t, x, y)`; zero outside the domain.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.cells();
        let m = self.grid.half_cells() as f64;
        let fx = x / self.grid.dx + m;
        let fy = y / self.grid.dx + m;
        if fx < 0.0 || fy < 0.0 || fx > (n - 1) as f64 || fy > (n - 1) as f64 {
            return 0.0;
        }
        let (i, j) = ((fx.floor() as usize).min(n - 2), (fy.floor() as usize).min(n - 2));
        let (a, b) = (fx - i as f64, fy - j as f64);
        (1.0 - a) * (1.0 - b) * self.at_index(i, j)
            + a * (1.0 - b) * self.at_index(i + 1, j)
            + (1.0 - a) * b * self.at_index(i, j + 1)
            + a * b * self.at_index(i + 1, j + 1)
    }

    /// Mass of the mean within one cell of either end.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.mean.len();
        (self.mean[0] + self.mean[1] + self.mean[n - 2] + self.mean[n - 1]) * self.grid.dx
    }

    /// `∬ φ(x) ψ(y) (Q - E U(x) E U(y)) dx dy`.
    pub fn pairing_covariance(&self, phi: &[f64], psi: &[f64]) -> f64 {
        let n = self.grid.cells();
        let dx = self.grid.dx;
        let mut acc = 0.0;
        for i in 0..n {
            if phi[i] == 0.0 {
                continue;
            }
            let row = &self.q[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += psi[j] * (row[j] - self.mean[i] * self.mean[j]);
            }
            acc += phi[i] * s;
        }
        acc * dx * dx
    }

    /// `Var <U(t), φ>`.
    pub fn pairing_variance(&self, phi: &TestFunction) -> f64 {
        let w = self.grid.sample(|x| phi.eval(x));
        self.pairing_covariance(&w, &w)
    }

    /// `E <U(t), φ>`.
    pub fn pairing_mean(&self, phi: &TestFunction) -> f64 {
        let w = self.grid.sample(|x| phi.eval(x));
        w.iter().zip(&self.mean).map(|(a, b)| a * b).sum::<f64>() * self.grid.dx
    }

    /// CSV `t,x,y,Q` over every `stride`-th cell in each direction.
    pub fn write_csv<W: Write>(&self, w: W, stride: usize) -> Result<()> {
        let n = self.grid.cells();
        let stride = stride.max(1);
        let mut out = CsvWriter::new(w, &["t", "x", "y", "Q"])?;
        for i in (0..n).step_by(stride) {
            for j in (0..n).step_by(stride) {
                out.row(&[&self.t, &self.grid.x(i), &self.grid.x(j), &self.at_index(i, j)])?;
            }
        }
        out.finish()
    }
}

/// Evolve `Q ← A Q Aᵀ + β² (Δt/Δx) diag(Q)` up to time `t`.
pub fn moment_table(params: &SheParams, t: f64) -> Result<MomentTable> {
    let grid = params.grid;
    let steps = grid.steps(t)?;
    let n = grid.cells();
    let r = grid.dt / (2.0 * grid.dx * grid.dx);
    let noise = params.beta * params.beta * grid.dt / grid.dx;
    let u0 = params.initial_values();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = u0[i] * u0[j];
        }
    }
    let mut tmp = vec![0.0; n * n];
    let mut diag = vec![0.0; n];
    let mut mean = u0;
    let mut mtmp = vec![0.0; n];
    for _ in 0..steps {
        for i in 0..n {
            diag[i] = q[i * n + i];
        }
        // rows: tmp = Q Aᵀ, then columns: Q = A tmp
        for i in 0..n {
            heat_step(&q[i * n..(i + 1) * n], &mut tmp[i * n..(i + 1) * n], r);
        }
        for i in 0..n {
            for j in 0..n {
                let up = if i > 0 { tmp[(i - 1) * n + j] } else { 0.0 };
                let dn = if i + 1 < n { tmp[(i + 1) * n + j] } else { 0.0 };
                let c = tmp[i * n + j];
                q[i * n + j] = c + r * (up - 2.0 * c + dn);
            }
        }
        for i in 0..n {
            q[i * n + i] += noise * diag[i];
        }
        heat_step(&mean, &mut mtmp, r);
        std::mem::swap(&mut mean, &mut mtmp);
    }
    Ok(MomentTable { grid, beta: params.beta, t, mean, q })
}

/// `Q(t, x, y)` for narrow-wedge data, read off the grid.
pub fn two_point_moment(t: f64, x: f64, y: f64, beta: f64, grid: Grid) -> Result<f64> {
    let params = SheParams::new(beta, grid, Initial::NarrowWedge)?;
    Ok(moment_table(&params, t)?.at(x, y))
}

#[derive(Debug, Clone, Serialize)]
pub struct SheRun {
    pub beta: f64,
    pub t: f64,
    pub replicas: u64,
    pub phis: Vec<String>,
    /// `pairings[k][r]` is `<U(t), φ_k>` in replica `r`.
    pub pairings: Vec<Vec<f64>>,
    pub clamps: u64,
    pub cell_updates: u64,
}

impl SheRun {
    pub fn clamp_rate(&self) -> f64 {
        self.clamps as f64 / self.cell_updates.max(1) as f64
    }

    pub fn stats(&self, k: usize) -> RunningStats {
        self.pairings[k].iter().copied().collect()
    }
}

/// One replica of the explicit scheme; returns the final field and clamp count.
pub fn she_path(params: &SheParams, steps: usize, rng: &mut Stream) -> (Vec<f64>, u64) {
    let grid = params.grid;
    let r = grid.dt / (2.0 * grid.dx * grid.dx);
    let amp = params.beta * (grid.dt / grid.dx).sqrt();
    let mut u = params.initial_values();
    let mut next = vec![0.0; u.len()];
    let mut clamps = 0;
    for _ in 0..steps {
        heat_step(&u, &mut next, r);
        if amp > 0.0 {
            for (v, &old) in next.iter_mut().zip(&u) {
                if old != 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    *v += amp * old * z;
                }
            }
        }
        for v in next.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clamps += 1;
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    (u, clamps)
}

/// Independent replicas of the explicit scheme paired with each `φ`.
pub fn she_simulate(params: &SheParams, t: f64, replicas: u64, phis: &[TestFunction], seed: u64) -> Result<SheRun> {
    let grid = params.grid;
    let steps = grid.steps(t)?;
    let weights: Vec<Vec<f64>> = phis.iter().map(|p| grid.sample(|x| p.eval(x))).collect();
    let per = fold_replicas(
        replicas,
        || (Vec::new(), 0u64),
        |acc: &mut (Vec<Vec<f64>>, u64), r| {
            let mut rng = Stream::new(seed, tag::SHE, r as i64, 0);
            let (u, c) = she_path(params, steps, &mut rng);
            let vals = weights.iter().map(|w| w.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() * grid.dx).collect();
            acc.0.push(vals);
            acc.1 += c;
        },
        |a, b| {
            a.0.extend(b.0);
            a.1 += b.1;
        },
    );
    let mut pairings = vec![Vec::with_capacity(replicas as usize); phis.len()];
    for row in &per.0 {
        for (k, v) in row.iter().enumerate() {
            pairings[k].push(*v);
        }
    }
    Ok(SheRun {
        beta: params.beta,
        t,
        replicas,
        phis: phis.iter().map(|p| p.id()).collect(),
        pairings,
        clamps: per.1,
        cell_updates: replicas * steps as u64 * grid.cells() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::simpson;

    fn grid(dx: f64) -> Grid {
        Grid::stable(dx, 6.0).unwrap()
    }

    #[test]
    fn heat_kernel_values() {
        assert!((heat_kernel(1.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!(heat_kernel(0.0, 1.0).is_err());
        assert!(heat_kernel(-1.0, 1.0).is_err());
        let total = simpson(|x| heat_kernel(0.7, x).unwrap(), -20.0, 20.0, 4000);
        assert!((total - 1.0).abs() < 1e-10);
        let conv = simpson(|y| heat_kernel(0.3, 0.4 - y).unwrap() * heat_kernel(0.5, y).unwrap(), -20.0, 20.0, 4000);
        assert!((conv - heat_kernel(0.8, 0.4).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn unstable_grid_rejected() {
        assert!(matches!(Grid::new(0.1, 0.006, 5.0), Err(Error::UnstableGrid { .. })));
        assert!(Grid::new(0.1, 0.005, 5.0).is_ok());
    }

    #[test]
    fn zero_noise_factorizes() {
        let g = Grid::for_horizon(0.03, 5.0, 0.5).unwrap();
        let p = SheParams::new(0.0, g, Initial::NarrowWedge).unwrap();
        let m = moment_table(&p, 0.5).unwrap();
        let mut worst: f64 = 0.0;
        for &(x, y) in &[(0.0, 0.0), (0.5, -0.3), (1.0, 1.2), (-1.5, 0.2)] {
            let exact = heat_kernel(0.5, x).unwrap() * heat_kernel(0.5, y).unwrap();
            worst = worst.max((m.at(x, y) - exact).abs());
        }
        assert!(worst < 1e-4, "{worst}");
        assert!(m.boundary_mass() < 1e-8);
    }

    #[test]
    fn moment_symmetric() {
        let p = SheParams::new(0.5, grid(0.1), Initial::NarrowWedge).unwrap();
        let m = moment_table(&p, 0.5).unwrap();
        let n = m.grid.cells();
        for i in 0..n {
            for j in 0..n {
                assert!((m.at_index(i, j) - m.at_index(j, i)).abs() <= 1e-12 * m.at_index(i, j).abs().max(1e-300));
            }
        }
    }

    #[test]
    fn noise_raises_diagonal_consistently_under_refinement() {
        let ratio = |dx: f64| {
            let p = SheParams::new(0.5, Grid::stable(dx, 4.0).unwrap(), Initial::NarrowWedge).unwrap();
            moment_table(&p, 0.5).unwrap().at(0.0, 0.0) / heat_kernel(0.5, 0.0).unwrap().powi(2)
        };
        let (r1, r2, r3) = (ratio(0.1), ratio(0.05), ratio(0.025));
        assert!(r1 > 1.0 && r2 > 1.0 && r3 > 1.0);
        let q = (r1 - r2) / (r2 - r3);
        assert!(q > 1.5 && q < 5.0, "{r1} {r2} {r3} {q}");
        let extrapolated = r3 + (r3 - r2) / (q - 1.0);
        assert!((extrapolated - r3).abs() < 0.01 * r3);
    }

    #[test]
    fn zero_noise_simulation_is_heat_flow() {
        let g = grid(0.1);
        let init = g.sample(|x| (-x * x).exp());
        let p = SheParams::new(0.0, g, Initial::Values(init)).unwrap();
        let steps = g.steps(0.5).unwrap();
        let (u, clamps) = she_path(&p, steps, &mut Stream::new(1, tag::SHE, 0, 0));
        assert_eq!(clamps, 0);
        // exact: Gaussian of variance 1/2 convolved with p_t
        let s2 = 0.5 + 0.5;
        for (i, v) in u.iter().enumerate() {
            let x = g.x(i);
            let exact = (PI / 1.0).sqrt() * (-x * x / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt();
            assert!((v - exact).abs() < 1e-3, "{x} {v} {exact}");
        }
    }

    #[test]
    fn variance_grows_with_beta() {
        let g = grid(0.1);
        let phi = TestFunction::gaussian(0.0, 1.0);
        let v = |b: f64| moment_table(&SheParams::new(b, g, Initial::NarrowWedge).unwrap(), 0.5).unwrap().pairing_variance(&phi);
        let (a, b, c) = (v(0.0), v(0.5), v(1.0));
        assert!(a.abs() < 1e-12);
        assert!(b > 0.0 && c > b);
    }

    #[test]
    fn simulation_matches_moment_oracle() {
        let g = Grid::stable(0.2, 5.0).unwrap();
        let p = SheParams::new(0.7, g, Initial::NarrowWedge).unwrap();
        let phi = TestFunction::gaussian(0.0, 1.0);
        let run = she_simulate(&p, 0.5, 10_000, &[phi], 9).unwrap();
        let m = moment_table(&p, 0.5).unwrap();
        let s = run.stats(0);
        let mean_z = (s.mean - m.pairing_mean(&phi)) / s.stderr();
        assert!(mean_z.abs() < 3.0, "{mean_z}");
        assert!((m.pairing_mean(&phi) - phi.heat_pairing(0.5)).abs() < 5e-3);
        let (var, se) = crate::scaling::variance_with_stderr(&run.pairings[0]);
        let z = (var - m.pairing_variance(&phi)) / se;
        assert!(z.abs() < 3.0, "{var} {} {z}", m.pairing_variance(&phi));
        assert!(run.clamp_rate() < 1e-4);
    }
}
