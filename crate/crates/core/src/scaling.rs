//! Moderate-deviation constants and the rescaled density field
//! `<F_N(t, .), φ>`.
//!
//! The field is read at lattice sites `shift + x` with `shift` the drift
//! `d_N t` (see [`Shift`]), weighted by `C_{N,t,u}` at the centered coordinate
//! `u = (site - shift) / sqrt(N)`. The integer part of the shift picks the
//! base site and its fractional part is folded into `u`.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::Serialize;

use crate::engine::Profile;
use crate::env::{EnvParams, Environment};
use crate::error::{invalid, Error, Result};
use crate::kmp::evolve;
use crate::special::{annealed_pmf, simpson};
use crate::stats::{Estimate, RunningStats};
use crate::sweep::map_replicas;

/// `M(λ) = exp(cosh λ - 1)`, the moment generating function of the annealed
/// walk at time 1.
pub fn mgf(lambda: f64) -> f64 {
    (lambda.cosh() - 1.0).exp()
}

/// `d_N = N sinh(N^{-1/4})`.
pub fn drift(n: f64) -> f64 {
    n * n.powf(-0.25).sinh()
}

/// `log D_{N,t,x}` with `x` the centered coordinate.
pub fn log_tilt(n: f64, t: f64, x: f64) -> f64 {
    let l = n.powf(-0.25);
    // N log M(N^{-1/4}) = N (cosh l - 1), written with a cancellation-free form
    let n_log_m = n * 2.0 * (l / 2.0).sinh().powi(2);
    n.powf(0.25) * x + t * (l * drift(n) - n_log_m)
}

/// Tilting constant `D_{N,t,x}`.
pub fn tilt(n: f64, t: f64, x: f64) -> f64 {
    log_tilt(n, t, x).exp()
}

/// Tilting constant evaluated at a lattice site, `D_{N,t,N^{-1/2}(site - d_N t)}`.
pub fn tilt_at_site(n: f64, t: f64, site: f64) -> f64 {
    tilt(n, t, (site - drift(n) * t) / n.sqrt())
}

pub fn log_scale_c(n: f64, t: f64, x: f64) -> f64 {
    n.powf(0.25) * x + n.sqrt() * t / 2.0 + t / 8.0
}

/// `C_{N,t,x} = exp(N^{1/4} x + N^{1/2} t/2 + t/8)`.
pub fn scale_c(n: f64, t: f64, x: f64) -> f64 {
    log_scale_c(n, t, x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiKind {
    GaussianBump,
    CosineBump,
    PolynomialBump,
}

/// Test functions, each a probability density with the given center and width:
///
/// * `gaussian-bump`: normal density with standard deviation `width`;
/// * `cosine-bump`: `(1 + cos(π s)) / (2 width)` for `|s| <= 1`, `s = (u - center)/width`;
/// * `polynomial-bump`: `315/256 (1 - s²)^4 / width` for `|s| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub kind: PhiKind,
    pub center: f64,
    pub width: f64,
}

impl TestFunction {
    pub fn new(kind: PhiKind, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(invalid("phi", format!("need finite center and positive width, got ({center}, {width})")));
        }
        Ok(TestFunction { kind, center, width })
    }

    pub fn gaussian(center: f64, width: f64) -> Self {
        TestFunction { kind: PhiKind::GaussianBump, center, width }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PhiKind::GaussianBump => "gaussian-bump",
            PhiKind::CosineBump => "cosine-bump",
            PhiKind::PolynomialBump => "polynomial-bump",
        }
    }

    /// Stable identifier including the parameters, free of commas so it can
    /// sit in a CSV cell; [`TestFunction::parse`] reads it back.
    pub fn id(&self) -> String {
        format!("{}:c={}:w={}", self.name(), self.center, self.width)
    }

    /// `kind[:center[:width]]`, with optional `c=`/`w=` prefixes; center
    /// defaults to 0 and width to 1.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = match parts.next().unwrap_or("") {
            "gaussian-bump" | "gaussian" => PhiKind::GaussianBump,
            "cosine-bump" | "cosine" => PhiKind::CosineBump,
            "polynomial-bump" | "polynomial" => PhiKind::PolynomialBump,
            other => return Err(invalid("phi", format!("unknown test function {other:?}"))),
        };
        let mut num = |prefix: &str, default: f64| -> Result<f64> {
            match parts.next() {
                None => Ok(default),
                Some(p) => p.strip_prefix(prefix).unwrap_or(p).parse().map_err(|_| invalid("phi", format!("bad number {p:?} in {s:?}"))),
            }
        };
        let center = num("c=", 0.0)?;
        let width = num("w=", 1.0)?;
        if parts.next().is_some() {
            return Err(invalid("phi", format!("too many fields in {s:?}")));
        }
        TestFunction::new(kind, center, width)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let s = (u - self.center) / self.width;
        match self.kind {
            PhiKind::GaussianBump => (-0.5 * s * s).exp() / (self.width * (2.0 * PI).sqrt()),
            PhiKind::CosineBump => {
                if s.abs() <= 1.0 {
                    (1.0 + (PI * s).cos()) / (2.0 * self.width)
                } else {
                    0.0
                }
            }
            PhiKind::PolynomialBump => {
                if s.abs() <= 1.0 {
                    315.0 / 256.0 * (1.0 - s * s).powi(4) / self.width
                } else {
                    0.0
                }
            }
        }
    }

    /// Interval outside which `φ` is zero or below 1e-30.
    pub fn support(&self) -> (f64, f64) {
        let r = match self.kind {
            PhiKind::GaussianBump => 12.0 * self.width,
            _ => self.width,
        };
        (self.center - r, self.center + r)
    }

    /// `∫ p_t(x) φ(x) dx`.
    pub fn heat_pairing(&self, t: f64) -> f64 {
        if let PhiKind::GaussianBump = self.kind {
            let v = t + self.width * self.width;
            return (-self.center * self.center / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        }
        let (a, b) = self.support();
        if t == 0.0 {
            return self.eval(0.0);
        }
        simpson(|x| self.eval(x) * (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt(), a, b, 20_000)
    }
}

impl FromStr for PhiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-bump" => Ok(PhiKind::GaussianBump),
            "cosine-bump" => Ok(PhiKind::CosineBump),
            "polynomial-bump" => Ok(PhiKind::PolynomialBump),
            _ => Err(invalid("phi", format!("unknown test function {s:?}"))),
        }
    }
}

/// Site offset applied before reading the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    /// `d_N t`, the drift the tilting constant is centered on.
    Drift,
    /// `N^{3/4} t`, the leading-order drift.
    Leading,
}

impl Shift {
    pub fn value(self, n: f64, t: f64) -> f64 {
        match self {
            Shift::Drift => drift(n) * t,
            Shift::Leading => n.powf(0.75) * t,
        }
    }
}

/// `Σ_x C_{N,t,u} η(shift + x) φ(u)` for a profile `η` at time `tN`.
pub fn field_value<F: Fn(i64) -> f64>(eta: F, n: f64, t: f64, phi: &TestFunction, shift: Shift) -> f64 {
    let s = shift.value(n, t);
    let k = s.floor();
    let frac = s - k;
    let sq = n.sqrt();
    let (a, b) = phi.support();
    let x_lo = (a * sq + frac).floor() as i64;
    let x_hi = (b * sq + frac).ceil() as i64;
    let mut acc = 0.0;
    for x in x_lo..=x_hi {
        let e = eta(k as i64 + x);
        if e == 0.0 {
            continue;
        }
        let u = (x as f64 - frac) / sq;
        let w = phi.eval(u);
        if w != 0.0 {
            acc += (log_scale_c(n, t, u) + e.ln()).exp() * w;
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSample {
    pub n: u64,
    pub t: f64,
    pub phi: String,
    pub value: f64,
    pub seed: u64,
    pub events: u64,
}

/// Simulate KMP from `δ_0` to time `tN` and pair the field with `φ`.
pub fn field_pair(n: u64, t: f64, phi: &TestFunction, env: &Environment, shift: Shift) -> FieldSample {
    let nf = n as f64;
    let (eta, events) = evolve(Profile::delta(0), t * nf, env);
    FieldSample {
        n,
        t,
        phi: phi.id(),
        value: field_value(|x| eta.get(x), nf, t, phi, shift),
        seed: env.seed(),
        events,
    }
}

/// `E<F_N(t), φ>` computed exactly from the annealed one-point law.
pub fn exact_field_mean(n: u64, t: f64, phi: &TestFunction, shift: Shift) -> f64 {
    let nf = n as f64;
    let time = t * nf;
    field_value(|x| annealed_pmf(time, x), nf, t, phi, shift)
}

/// Sites read by [`field_value`] and their weights `C_{N,t,u} φ(u)`.
pub fn field_weights(n: f64, t: f64, phi: &TestFunction, shift: Shift) -> Vec<(i64, f64)> {
    let s = shift.value(n, t);
    let k = s.floor();
    let frac = s - k;
    let sq = n.sqrt();
    let (a, b) = phi.support();
    let x_lo = (a * sq + frac).floor() as i64;
    let x_hi = (b * sq + frac).ceil() as i64;
    (x_lo..=x_hi)
        .filter_map(|x| {
            let u = (x as f64 - frac) / sq;
            let w = phi.eval(u);
            (w != 0.0).then(|| (k as i64 + x, scale_c(n, t, u) * w))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactMoments {
    pub n: u64,
    pub t: f64,
    pub alpha: f64,
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
    /// Two-walker probability lost through the truncated domain.
    pub lost_mass: f64,
}

/// Exact `E<F_N,φ>` and `E<F_N,φ>²` from the annealed law of two walkers
/// sharing one environment. `E[K(0,x) K(0,y)]` is the law at time `tN` of the
/// pair started at `(0,0)`: each bond rings at rate 1 and, given its split
/// `B`, a walker on its left site steps right with probability `1-B` and one
/// on its right site steps left with probability `B`, independently.
/// Averaging over `B` uses `E[B] = 1/2` and `E[B²] = (α+1)/(2(2α+1))`. The
/// chain is solved by uniformization on a square that contains the field
/// window with a `10 sqrt(tN)` margin.
pub fn exact_field_moments(n: u64, t: f64, phi: &TestFunction, alpha: f64, shift: Shift) -> Result<ExactMoments> {
    if !(alpha > 0.0) || !(t >= 0.0) {
        return Err(invalid("alpha", format!("need alpha > 0 and t >= 0, got {alpha}, {t}")));
    }
    let nf = n as f64;
    let time = t * nf;
    let weights = field_weights(nf, t, phi, shift);
    let reach = weights.iter().map(|w| w.0.abs()).max().unwrap_or(0);
    let l = reach + (10.0 * time.sqrt()).ceil() as i64 + 4;
    let side = (2 * l + 1) as usize;
    let idx = |x: i64| (x + l) as usize;
    let m2 = (alpha + 1.0) / (2.0 * (2.0 * alpha + 1.0));
    // joint step law of two walkers for one ring; `coef` is (c0, c1) in c0 + c1 B
    let moves = |w: i64, b: i64| -> [(i64, (f64, f64)); 2] {
        if w == b {
            [(w + 1, (1.0, -1.0)), (w, (0.0, 1.0))]
        } else if w == b + 1 {
            [(w - 1, (0.0, 1.0)), (w, (1.0, -1.0))]
        } else {
            [(w, (1.0, 0.0)), (w, (0.0, 0.0))]
        }
    };
    let expect = |a: (f64, f64), c: (f64, f64)| a.0 * c.0 + 0.5 * (a.0 * c.1 + a.1 * c.0) + a.1 * c.1 * m2;
    let lambda = 2.0;
    let mut p = vec![0.0; side * side];
    p[idx(0) * side + idx(0)] = 1.0;
    let mut acc = vec![0.0; side * side];
    let mut next = vec![0.0; side * side];
    let mean_k = lambda * time;
    let kmax = (mean_k + 12.0 * mean_k.sqrt() + 30.0).ceil() as u64;
    // Poisson weights in log space
    let mut logw = -mean_k;
    let mut lo_x = 0i64;
    let mut hi_x = 0i64;
    let mut lost = 0.0;
    for k in 0..=kmax {
        if k > 0 {
            logw += mean_k.ln() - (k as f64).ln();
        }
        let wk = logw.exp();
        if wk > 0.0 {
            for x in lo_x..=hi_x {
                let row = idx(x) * side;
                for y in lo_x..=hi_x {
                    acc[row + idx(y)] += wk * p[row + idx(y)];
                }
            }
        }
        if k == kmax {
            break;
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        for x in lo_x..=hi_x {
            for y in lo_x..=hi_x {
                let mass = p[idx(x) * side + idx(y)];
                if mass == 0.0 {
                    continue;
                }
                let mut bonds = [x - 1, x, y - 1, y];
                bonds.sort_unstable();
                let mut out = 0.0;
                let mut prev = i64::MIN;
                for &b in &bonds {
                    if b == prev {
                        continue;
                    }
                    prev = b;
                    for (nx, cx) in moves(x, b) {
                        for (ny, cy) in moves(y, b) {
                            if (nx, ny) == (x, y) {
                                continue;
                            }
                            let e = expect(cx, cy);
                            if e == 0.0 {
                                continue;
                            }
                            let r = e / lambda;
                            out += r;
                            if nx.abs() > l || ny.abs() > l {
                                lost += mass * r;
                            } else {
                                next[idx(nx) * side + idx(ny)] += mass * r;
                            }
                        }
                    }
                }
                next[idx(x) * side + idx(y)] += mass * (1.0 - out);
            }
        }
        std::mem::swap(&mut p, &mut next);
        lo_x = (lo_x - 1).max(-l);
        hi_x = (hi_x + 1).min(l);
    }
    let mut second = 0.0;
    for &(x, wx) in &weights {
        let row = idx(x) * side;
        for &(y, wy) in &weights {
            second += wx * wy * acc[row + idx(y)];
        }
    }
    let mean = exact_field_mean(n, t, phi, shift);
    Ok(ExactMoments { n, t, alpha, mean, second, variance: second - mean * mean, lost_mass: lost })
}

/// Field values of independent replicas `0..replicas` derived from `base`.
pub fn field_scan(n: u64, t: f64, phi: &TestFunction, base: EnvParams, replicas: u64, shift: Shift) -> Vec<FieldSample> {
    map_replicas(replicas, |r| field_pair(n, t, phi, &Environment::new(base.replica(r)), shift))
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldAggregate {
    pub n: u64,
    pub t: f64,
    pub phi: String,
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    pub exact_mean: f64,
    pub heat_kernel_target: f64,
    pub replicas: u64,
}

impl FieldAggregate {
    pub fn from_samples(n: u64, t: f64, phi: &TestFunction, shift: Shift, values: &[f64]) -> Self {
        let s: RunningStats = values.iter().copied().collect();
        let (var, var_se) = variance_with_stderr(values);
        FieldAggregate {
            n,
            t,
            phi: phi.id(),
            mean: s.mean,
            stderr: s.stderr(),
            variance: var,
            variance_stderr: var_se,
            exact_mean: exact_field_mean(n, t, phi, shift),
            heat_kernel_target: phi.heat_pairing(t),
            replicas: values.len() as u64,
        }
    }
}

/// Sample variance and its standard error from the spread of squared deviations.
pub fn variance_with_stderr(values: &[f64]) -> (f64, f64) {
    let s: RunningStats = values.iter().copied().collect();
    let dev: RunningStats = values.iter().map(|v| (v - s.mean).powi(2)).collect();
    let n = values.len() as f64;
    let bessel = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
    (dev.mean * bessel, dev.stderr() * bessel)
}

/// Per-N aggregates of the field mean for a convergence table.
pub fn annealed_mean_curve(ns: &[u64], t: f64, phi: &TestFunction, base: EnvParams, replicas: u64) -> Vec<FieldAggregate> {
    ns.iter()
        .map(|&n| {
            let base_n = base.replica(n);
            let vals: Vec<f64> = field_scan(n, t, phi, base_n, replicas, Shift::Drift).iter().map(|s| s.value).collect();
            FieldAggregate::from_samples(n, t, phi, Shift::Drift, &vals)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkProbe {
    pub lambda: f64,
    pub mgf: Estimate,
    pub mgf_exact: f64,
    pub m1: Estimate,
    pub m2: Estimate,
    pub quenched_mean_variance: Estimate,
}

/// Annealed statistics of the walk at time 1, averaged over environments:
/// `E[e^{λ X_1}]`, the first two moments, and the variance across
/// environments of the quenched mean `Σ_y y K_1(0, y)`.
pub fn annealed_walk_probe(base: EnvParams, lambda: f64, replicas: u64) -> WalkProbe {
    let per: Vec<(f64, f64, f64)> = map_replicas(replicas, |r| {
        let env = Environment::new(base.replica(r));
        let (row, _) = evolve(Profile::delta(0), 1.0, &env);
        let mut g = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (y, p) in row.nonzero() {
            let yf = y as f64;
            g += p * (lambda * yf).exp();
            m1 += p * yf;
            m2 += p * yf * yf;
        }
        (g, m1, m2)
    });
    let g: RunningStats = per.iter().map(|p| p.0).collect();
    let m1: RunningStats = per.iter().map(|p| p.1).collect();
    let m2: RunningStats = per.iter().map(|p| p.2).collect();
    let means: Vec<f64> = per.iter().map(|p| p.1).collect();
    let (v, vse) = variance_with_stderr(&means);
    WalkProbe {
        lambda,
        mgf: g.estimate(),
        mgf_exact: mgf(lambda),
        m1: m1.estimate(),
        m2: m2.estimate(),
        quenched_mean_variance: Estimate { value: v, stderr: vse },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(mgf(0.0), 1.0);
        assert!((mgf(1.0) - 1.721_30).abs() < 1e-5);
        assert!((drift(16.0) - 8.337_52).abs() < 1e-5);
        assert!((drift(1.0) - 1.175_201_193_643_801_4).abs() < 1e-14);
        assert!((drift(1e8) / 1e6 - 1.0).abs() < 1e-4);
        assert!((scale_c(16.0, 1.0, 0.0) - 2.125f64.exp()).abs() < 1e-12);
        assert!((scale_c(16.0, 1.0, 0.0) - 8.3728).abs() < 1e-4);
    }

    #[test]
    fn phi_id_roundtrips() {
        let phi = TestFunction::new(PhiKind::CosineBump, -0.5, 2.0).unwrap();
        assert!(!phi.id().contains(','));
        assert_eq!(TestFunction::parse(&phi.id()).unwrap(), phi);
        assert_eq!(TestFunction::parse("gaussian").unwrap(), TestFunction::gaussian(0.0, 1.0));
        assert!(TestFunction::parse("box").is_err());
        assert!(TestFunction::parse("gaussian-bump:0:-1").is_err());
        assert!(TestFunction::parse("gaussian-bump:0:1:2").is_err());
    }

    #[test]
    fn tilt_and_c_agree_at_time_zero() {
        for &n in &[1.0, 16.0, 1e4] {
            for &x in &[-1.5, 0.0, 0.7] {
                let d = tilt(n, 0.0, x);
                let c = scale_c(n, 0.0, x);
                assert!((d / c - 1.0).abs() < 1e-14);
                assert!((d - (n.powf(0.25) * x).exp()).abs() <= 1e-14 * d);
            }
        }
    }

    #[test]
    fn tilt_matches_c_up_to_small_residual() {
        let resid = |n: f64| {
            let x = 0.0;
            (tilt_at_site(n, 1.0, n.sqrt() * x + drift(n)).ln() - log_scale_c(n, 1.0, x)).abs()
        };
        let r4 = resid(1e4);
        assert!(r4 <= 5e-2);
        assert!(resid(1e2) > r4 && r4 > resid(1e6));
        // the residual is t (1/120 - 1/720) N^{-1/2} at leading order
        assert!((r4 / (1e-2 * (1.0 / 120.0 - 1.0 / 720.0)) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn test_functions_are_densities() {
        for kind in [PhiKind::GaussianBump, PhiKind::CosineBump, PhiKind::PolynomialBump] {
            let f = TestFunction::new(kind, 0.3, 0.8).unwrap();
            let (a, b) = f.support();
            let m = simpson(|x| f.eval(x), a, b, 20_000);
            assert!((m - 1.0).abs() < 1e-9, "{kind:?}: {m}");
            assert_eq!(f.name().parse::<PhiKind>().unwrap(), kind);
        }
        assert!(TestFunction::new(PhiKind::CosineBump, 0.0, 0.0).is_err());
        assert!("bump".parse::<PhiKind>().is_err());
    }

    #[test]
    fn gaussian_heat_pairing() {
        let f = TestFunction::gaussian(0.0, 1.0);
        assert!((f.heat_pairing(1.0) - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
        assert!((f.heat_pairing(1.0) - 0.28209).abs() < 1e-5);
        // quadrature route agrees with the closed form
        let q = simpson(|x| f.eval(x) * (-x * x / 2.0).exp() / (2.0 * PI).sqrt(), -12.0, 12.0, 20_000);
        assert!((q - f.heat_pairing(1.0)).abs() < 1e-12);
    }

    #[test]
    fn field_at_time_zero() {
        let f = TestFunction::gaussian(0.0, 1.0);
        let env = Environment::new(EnvParams::new(1.0, 1).unwrap());
        let s = field_pair(64, 0.0, &f, &env, Shift::Drift);
        assert!((s.value - f.eval(0.0)).abs() < 1e-15);
        let p = TestFunction::new(PhiKind::PolynomialBump, 0.0, 1.0).unwrap();
        let s = field_pair(64, 0.0, &p, &env, Shift::Drift);
        assert!((s.value / p.eval(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_mean_converges_with_drift_shift() {
        let f = TestFunction::gaussian(0.0, 1.0);
        let target = f.heat_pairing(0.5);
        let dev: Vec<f64> = [16, 64, 256, 1024].iter().map(|&n| (exact_field_mean(n, 0.5, &f, Shift::Drift) - target).abs()).collect();
        for w in dev.windows(2) {
            assert!(w[1] < w[0], "{dev:?}");
        }
        assert!(dev[3] < 1e-3);
    }

    #[test]
    fn exact_second_moment_matches_monte_carlo() {
        let f = TestFunction::gaussian(0.0, 1.0);
        let ex = exact_field_moments(16, 0.5, &f, 1.0, Shift::Drift).unwrap();
        assert!(ex.lost_mass < 1e-12);
        assert!((ex.mean - exact_field_mean(16, 0.5, &f, Shift::Drift)).abs() < 1e-14);
        let base = EnvParams::new(1.0, 21).unwrap();
        let vals: Vec<f64> = field_scan(16, 0.5, &f, base, 20_000, Shift::Drift).iter().map(|s| s.value).collect();
        let (v, se) = variance_with_stderr(&vals);
        assert!(((v - ex.variance) / se).abs() < 3.0, "{v} ± {se} vs {}", ex.variance);
    }

    #[test]
    fn exact_moments_at_time_zero() {
        let f = TestFunction::gaussian(0.0, 1.0);
        let ex = exact_field_moments(16, 0.0, &f, 2.0, Shift::Drift).unwrap();
        assert!(ex.variance.abs() < 1e-15);
        assert!((ex.mean - f.eval(0.0)).abs() < 1e-15);
    }

    #[test]
    fn leading_shift_leaves_exp_t_over_6_bias() {
        // with the N^{3/4} t offset the same constant overshoots by e^{t/6}
        let f = TestFunction::gaussian(0.0, 1.0);
        let t = 0.5;
        let target = f.heat_pairing(t) * (t / 6.0).exp();
        let m = exact_field_mean(16384, t, &f, Shift::Leading);
        assert!((m / target - 1.0).abs() < 2e-3, "{m} vs {target}");
    }
}
