//! Noise-strength constant of the ε-discretized walk.
//!
//! For two walkers at distance `z` sharing one ε-step, the numerator term is
//! a covariance of their quenched mean displacements and the denominator term
//! is the mean change of `|X - Y|`. Summed against the invariant weights
//! `π(z)` and multiplied by `floor(1/ε)` they give `N^ε` and `D^ε`, and
//! `γ_ε² = N^ε / D^ε`.
//!
//! Two covariance scopes are provided. [`CovScope::ClockConditioned`]
//! averages the covariance over the ring indicators with the indicators held
//! fixed; it reproduces the per-case constants `ε/(2(2α+1))` and
//! `ε/(4(2α+1))` and the limit `1/(4α)`. [`CovScope::Full`] is the plain
//! covariance over the whole one-step environment, which also counts the
//! randomness of which bonds ring; its limit is `1/(2α)`.

pub mod chain;

use std::io::Write;

use serde::Serialize;

use crate::env::stream::{derive_seed, tag, Stream};
use crate::env::EnvParams;
use crate::error::{Error, Result};
use crate::env::Environment;
use crate::flow::kernel;
use crate::stats::{Estimate, RunningCov, RunningStats};
use crate::sweep::fold_replicas;
pub use chain::{eps_kernel_row, eps_step, step_law, BondDraw, EpsChainParams, EpsEnv};

/// Invariant weights of the two-walker difference chain: 1 away from the
/// origin and `(α+1)/α` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiInv {
    pub alpha: f64,
}

impl PiInv {
    pub fn weight(&self, z: i64) -> f64 {
        if z == 0 {
            (self.alpha + 1.0) / self.alpha
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovScope {
    ClockConditioned,
    Full,
}

impl CovScope {
    /// The `ε → 0` limit of `γ_ε²` for this scope.
    pub fn limit(self, alpha: f64) -> f64 {
        match self {
            CovScope::ClockConditioned => 1.0 / (4.0 * alpha),
            CovScope::Full => 1.0 / (2.0 * alpha),
        }
    }
}

/// `Var(B)` and `E[B²]` for `B ~ Beta(α, α)`.
pub fn beta_moments(alpha: f64) -> (f64, f64) {
    let var = 1.0 / (4.0 * (2.0 * alpha + 1.0));
    (var, (alpha + 1.0) / (2.0 * (2.0 * alpha + 1.0)))
}

/// `c0 + c1 B_bond`: transition probabilities are affine in one split.
#[derive(Debug, Clone, Copy)]
struct Affine {
    c0: f64,
    c1: f64,
    bond: i64,
}

impl Affine {
    fn constant(c: f64) -> Self {
        Affine { c0: c, c1: 0.0, bond: i64::MIN }
    }

    fn mean(&self) -> f64 {
        self.c0 + 0.5 * self.c1
    }

    fn sub(self, o: Affine) -> Affine {
        if o.c1 == 0.0 {
            return Affine { c0: self.c0 - o.c0, ..self };
        }
        if self.c1 == 0.0 {
            return Affine { c0: self.c0 - o.c0, c1: -o.c1, bond: o.bond };
        }
        debug_assert_eq!(self.bond, o.bond);
        Affine { c0: self.c0 - o.c0, c1: self.c1 - o.c1, bond: self.bond }
    }

    /// `E[self * other]` over independent Beta splits.
    fn mean_product(&self, o: &Affine, e_b2: f64) -> f64 {
        let cross = if self.c1 != 0.0 && o.c1 != 0.0 && self.bond == o.bond { e_b2 } else { 0.25 };
        self.c0 * o.c0 + 0.5 * (self.c0 * o.c1 + self.c1 * o.c0) + self.c1 * o.c1 * cross
    }
}

/// Symbolic one-step law of a walker at `x` under a ring pattern.
fn symbolic_law(x: i64, rang: impl Fn(i64) -> bool) -> [Affine; 3] {
    match (rang(x - 1), rang(x)) {
        (false, true) => [Affine::constant(0.0), Affine { c0: 0.0, c1: 1.0, bond: x }, Affine { c0: 1.0, c1: -1.0, bond: x }],
        (true, false) => [Affine { c0: 0.0, c1: 1.0, bond: x - 1 }, Affine { c0: 1.0, c1: -1.0, bond: x - 1 }, Affine::constant(0.0)],
        _ => [Affine::constant(0.0), Affine::constant(1.0), Affine::constant(0.0)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovTerm {
    pub z: i64,
    pub num: f64,
    pub den: f64,
}

/// Exact numerator and denominator terms at distance `z` by enumerating the
/// ring patterns of the bonds seen by either walker.
fn enumerate_terms(alpha: f64, eps: f64, z: i64, scope: CovScope) -> CovTerm {
    let (_, e_b2) = beta_moments(alpha);
    let mut bonds = vec![z - 1, z, -1, 0];
    bonds.sort_unstable();
    bonds.dedup();
    let nb = bonds.len();
    let (mut e_xy, mut e_x, mut e_y, mut cond_cov, mut den) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for mask in 0u32..(1 << nb) {
        let rang = |b: i64| bonds.iter().position(|&c| c == b).is_some_and(|k| mask >> k & 1 == 1);
        let rings = mask.count_ones() as i32;
        let p = eps.powi(rings) * (1.0 - eps).powi(nb as i32 - rings);
        let lx = symbolic_law(z, rang);
        let ly = symbolic_law(0, rang);
        let mx = lx[2].sub(lx[0]);
        let my = ly[2].sub(ly[0]);
        let exy = mx.mean_product(&my, e_b2);
        e_xy += p * exy;
        e_x += p * mx.mean();
        e_y += p * my.mean();
        cond_cov += p * (exy - mx.mean() * my.mean());
        let mut d = 0.0;
        for (i, ax) in lx.iter().enumerate() {
            for (j, ay) in ly.iter().enumerate() {
                let gap = (z + i as i64 - j as i64).abs() - z.abs();
                if gap != 0 {
                    d += gap as f64 * ax.mean_product(ay, e_b2);
                }
            }
        }
        den += p * d;
    }
    let num = match scope {
        CovScope::ClockConditioned => cond_cov,
        CovScope::Full => e_xy - e_x * e_y,
    };
    CovTerm { z, num, den }
}

/// Exact terms for `z ∈ {-1, 0, 1}`, keeping every order in ε. Both terms
/// vanish identically for `|z| >= 2`, where the walkers share no bond.
pub fn exact_cov_terms(alpha: f64, eps: f64, scope: CovScope) -> Vec<CovTerm> {
    (-1..=1).map(|z| enumerate_terms(alpha, eps, z, scope)).collect()
}

/// Exact term at any distance.
pub fn exact_cov_term(alpha: f64, eps: f64, z: i64, scope: CovScope) -> CovTerm {
    if z.abs() >= 2 {
        return CovTerm { z, num: 0.0, den: 0.0 };
    }
    enumerate_terms(alpha, eps, z, scope)
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub alpha: f64,
    pub eps: f64,
    pub n_eps: f64,
    pub d_eps: f64,
    pub gamma_sq_eps: f64,
    pub gamma_sq_limit: f64,
    pub method: &'static str,
    pub scope: CovScope,
    pub terms: Vec<CovTerm>,
    pub n_eps_stderr: f64,
    pub d_eps_stderr: f64,
    pub gamma_sq_stderr: f64,
    pub replicas: u64,
}

impl GammaReport {
    /// `z,term_num,term_den,method` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = crate::io::CsvWriter::new(w, &["z", "term_num", "term_den", "method"])?;
        for t in &self.terms {
            csv.row(&[&t.z, &t.num, &t.den, &self.method])?;
        }
        csv.finish()
    }

    pub fn gamma_estimate(&self) -> Estimate {
        Estimate { value: self.gamma_sq_eps, stderr: self.gamma_sq_stderr }
    }
}

fn check_eps(alpha: f64, eps: f64) -> Result<()> {
    EpsChainParams::new(alpha, eps, 0)?;
    if eps == 0.0 {
        return Err(crate::error::invalid("eps", "must be positive"));
    }
    Ok(())
}

/// `N^ε`, `D^ε` and `γ_ε²` from the exact terms.
pub fn gamma_eps_exact(alpha: f64, eps: f64, scope: CovScope) -> Result<GammaReport> {
    check_eps(alpha, eps)?;
    let pi = PiInv { alpha };
    let steps = (1.0 / eps).floor();
    let terms = exact_cov_terms(alpha, eps, scope);
    let n_eps = steps * terms.iter().map(|t| pi.weight(t.z) * t.num).sum::<f64>();
    let d_eps = steps * terms.iter().map(|t| pi.weight(t.z) * t.den).sum::<f64>();
    if !(d_eps > 0.0) {
        return Err(Error::Internal(format!("nonpositive D^eps = {d_eps}")));
    }
    Ok(GammaReport {
        alpha,
        eps,
        n_eps,
        d_eps,
        gamma_sq_eps: n_eps / d_eps,
        gamma_sq_limit: scope.limit(alpha),
        method: "exact-moment",
        scope,
        terms,
        n_eps_stderr: 0.0,
        d_eps_stderr: 0.0,
        gamma_sq_stderr: 0.0,
        replicas: 0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct McTerm {
    pub z: i64,
    pub num: Estimate,
    pub den: Estimate,
}

#[derive(Clone)]
struct McAcc {
    num: Vec<RunningStats>,
    den: Vec<RunningStats>,
    nd: RunningCov,
}

/// Monte-Carlo estimate of the same terms over sampled one-step
/// environments, for `|z| <= zmax`. The walkers' step laws are evaluated
/// given each sampled environment; for the clock-conditioned scope the
/// product of deviations from the indicator-conditional means is averaged,
/// for the full scope the product of quenched means (whose annealed mean is
/// zero by reflection symmetry).
pub fn gamma_eps_mc(alpha: f64, eps: f64, replicas: u64, seed: u64, zmax: i64, scope: CovScope) -> Result<(GammaReport, Vec<McTerm>)> {
    check_eps(alpha, eps)?;
    if replicas < 2 {
        return Err(crate::error::invalid("replicas", "need at least 2"));
    }
    let zmax = zmax.max(1);
    let env = EpsEnv::new(EpsChainParams::new(alpha, eps, seed)?);
    let pi = PiInv { alpha };
    let nz = (2 * zmax + 1) as usize;
    let acc = fold_replicas(
        replicas,
        || McAcc { num: vec![RunningStats::new(); nz], den: vec![RunningStats::new(); nz], nd: RunningCov::new() },
        |a, r| {
            let mut s = Stream::new(seed, tag::EPS_CLOCK, -1, r);
            let lo = -zmax - 1;
            let draws = env.draw_row(lo, zmax, &mut s);
            let at = |b: i64| draws[(b - lo) as usize];
            let mean_of = |law: [f64; 3]| law[2] - law[0];
            let half = |d: BondDraw| BondDraw { split: 0.5, ..d };
            let ly = step_law(at(-1), at(0));
            let my = mean_of(ly);
            let my_bar = mean_of(step_law(half(at(-1)), half(at(0))));
            let (mut n_r, mut d_r) = (0.0, 0.0);
            for z in -zmax..=zmax {
                let lx = step_law(at(z - 1), at(z));
                let mx = mean_of(lx);
                let prod = match scope {
                    CovScope::ClockConditioned => (mx - mean_of(step_law(half(at(z - 1)), half(at(z))))) * (my - my_bar),
                    CovScope::Full => mx * my,
                };
                let mut d = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let gap = (z + i as i64 - j as i64).abs() - z.abs();
                        d += gap as f64 * lx[i] * ly[j];
                    }
                }
                let k = (z + zmax) as usize;
                a.num[k].push(prod);
                a.den[k].push(d);
                if z.abs() <= 1 {
                    n_r += pi.weight(z) * prod;
                    d_r += pi.weight(z) * d;
                }
            }
            a.nd.push(n_r, d_r);
        },
        |a, b| {
            for k in 0..nz {
                a.num[k].merge(&b.num[k]);
                a.den[k].merge(&b.den[k]);
            }
            a.nd.merge(&b.nd);
        },
    );
    let steps = (1.0 / eps).floor();
    let n = acc.nd.n as f64;
    let (nm, dm) = (acc.nd.mean_x, acc.nd.mean_y);
    let sx = (acc.nd.variance_x() / n).sqrt();
    let sy = (acc.nd.variance_y() / n).sqrt();
    let cxy = acc.nd.covariance() / n;
    let g = nm / dm;
    let g_var = (sx * sx / (dm * dm) + nm * nm * sy * sy / dm.powi(4) - 2.0 * nm * cxy / dm.powi(3)).max(0.0);
    let terms: Vec<McTerm> = (-zmax..=zmax)
        .map(|z| {
            let k = (z + zmax) as usize;
            McTerm { z, num: acc.num[k].estimate(), den: acc.den[k].estimate() }
        })
        .collect();
    let report = GammaReport {
        alpha,
        eps,
        n_eps: steps * nm,
        d_eps: steps * dm,
        gamma_sq_eps: g,
        gamma_sq_limit: scope.limit(alpha),
        method: "monte-carlo",
        scope,
        terms: terms.iter().filter(|t| t.z.abs() <= 1).map(|t| CovTerm { z: t.z, num: t.num.value, den: t.den.value }).collect(),
        n_eps_stderr: steps * sx,
        d_eps_stderr: steps * sy,
        gamma_sq_stderr: g_var.sqrt(),
        replicas,
    };
    Ok((report, terms))
}

#[derive(Debug, Clone, Serialize)]
pub struct PdifEntry {
    pub z: i64,
    pub a: i64,
    pub p: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdifTable {
    pub alpha: f64,
    pub t: f64,
    pub entries: Vec<PdifEntry>,
    /// `Σ_z π(z) p_dif(z, a)` per target `a`, with `π(a)` alongside.
    pub invariance: Vec<(i64, Estimate, f64)>,
}

/// Two-walker difference kernel `p_dif(z, a) = E[Σ_y K_t(z, y+a) K_t(0, y)]`
/// of the continuous-time flow, for `|z|, |a| <= radius`, plus the
/// invariance sums over `|z - a| <= reach`.
pub fn pdif_estimate(alpha: f64, t: f64, radius: i64, reach: i64, replicas: u64, seed: u64) -> Result<PdifTable> {
    let base = EnvParams::new(alpha, seed)?;
    let pi = PiInv { alpha };
    let span = radius + reach;
    let starts: Vec<i64> = (-span..=span).collect();
    let na = (2 * radius + 1) as usize;
    let acc = fold_replicas(
        replicas,
        || (vec![RunningStats::new(); na * na], vec![RunningStats::new(); na]),
        |acc, r| {
            let env = Environment::new(base.replica(r));
            let k = kernel(&env, &starts, 0.0, t).expect("valid kernel");
            let y0 = k.row(0).expect("origin row");
            let overlap = |z: i64, a: i64| -> f64 {
                let rz = k.row(z).expect("row present");
                y0.nonzero().map(|(y, p)| p * rz.get(y + a)).sum()
            };
            for a in -radius..=radius {
                let mut inv = 0.0;
                for z in a - reach..=a + reach {
                    let v = overlap(z, a);
                    inv += pi.weight(z) * v;
                    if z.abs() <= radius {
                        acc.0[((z + radius) as usize) * na + (a + radius) as usize].push(v);
                    }
                }
                acc.1[(a + radius) as usize].push(inv);
            }
        },
        |a, b| {
            a.0.iter_mut().zip(&b.0).for_each(|(x, y)| x.merge(y));
            a.1.iter_mut().zip(&b.1).for_each(|(x, y)| x.merge(y));
        },
    );
    let mut entries = Vec::new();
    for z in -radius..=radius {
        for a in -radius..=radius {
            entries.push(PdifEntry { z, a, p: acc.0[((z + radius) as usize) * na + (a + radius) as usize].estimate() });
        }
    }
    let invariance = (-radius..=radius).map(|a| (a, acc.1[(a + radius) as usize].estimate(), pi.weight(a))).collect();
    Ok(PdifTable { alpha, t, entries, invariance })
}

/// `E[K(0, x) K(0, y)]` for `|x|, |y| <= radius`, from the continuous-time
/// flow at time `t` (`eps = None`) or from the ε-walk after `floor(t/ε)` steps.
pub fn two_point_table(alpha: f64, t: f64, eps: Option<f64>, radius: i64, replicas: u64, seed: u64) -> Result<Vec<(i64, i64, Estimate)>> {
    let w = (2 * radius + 1) as usize;
    let base = EnvParams::new(alpha, seed)?;
    if let Some(e) = eps {
        check_eps(alpha, e)?;
    }
    let acc = fold_replicas(
        replicas,
        || vec![RunningStats::new(); w * w],
        |acc, r| {
            let row: Vec<f64> = match eps {
                None => {
                    let env = Environment::new(base.replica(r));
                    let k = kernel(&env, &[0], 0.0, t).expect("valid kernel");
                    (-radius..=radius).map(|x| k.get(0, x)).collect()
                }
                Some(e) => {
                    let p = EpsChainParams { alpha, eps: e, seed: derive_seed(seed, tag::EPS_CLOCK, r) };
                    let steps = (t / e).floor() as u64;
                    let (lo, full) = eps_kernel_row(&EpsEnv::new(p), 0, steps);
                    (-radius..=radius).map(|x| full.get((x - lo) as usize).copied().unwrap_or(0.0)).collect()
                }
            };
            for i in 0..w {
                for j in 0..w {
                    acc[i * w + j].push(row[i] * row[j]);
                }
            }
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    );
    let mut out = Vec::new();
    for i in 0..w {
        for j in 0..w {
            out.push((i as i64 - radius, j as i64 - radius, acc[i * w + j].estimate()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_weights() {
        assert_eq!(PiInv { alpha: 1.0 }.weight(0), 2.0);
        assert_eq!(PiInv { alpha: 2.0 }.weight(0), 1.5);
        assert_eq!(PiInv { alpha: 2.0 }.weight(-3), 1.0);
    }

    #[test]
    fn disjoint_walkers_give_exact_zero() {
        for scope in [CovScope::ClockConditioned, CovScope::Full] {
            for z in [2, -2, 3] {
                let t = enumerate_terms(1.3, 0.05, z, scope);
                assert!(t.num.abs() < 1e-18 && t.den.abs() < 1e-17, "{t:?}");
                assert_eq!(exact_cov_term(1.3, 0.05, z, scope).num, 0.0);
            }
        }
    }

    #[test]
    fn closed_forms_at_finite_eps() {
        // clock-conditioned: 2ε(1-ε)Var(B) at z=0 and ε(1-ε)²Var(B) at z=±1;
        // full scope adds ε(1-ε)/2 and -ε(1-ε)/4.
        for &(alpha, eps) in &[(1.0, 0.1), (0.5, 0.3), (2.0, 0.01)] {
            let (v, _) = beta_moments(alpha);
            let q = eps * (1.0 - eps);
            let cc = exact_cov_terms(alpha, eps, CovScope::ClockConditioned);
            assert!((cc[1].num - 2.0 * q * v).abs() < 1e-15);
            assert!((cc[0].num - q * (1.0 - eps) * v).abs() < 1e-15);
            assert!((cc[2].num - cc[0].num).abs() < 1e-15);
            let full = exact_cov_terms(alpha, eps, CovScope::Full);
            assert!((full[1].num - (2.0 * q * v + q / 2.0)).abs() < 1e-15);
            assert!((full[0].num - (q * (1.0 - eps) * v - q / 4.0)).abs() < 1e-12 * q);
            // z = 0 denominator is exactly 2ε(1-ε)α/(2α+1)
            assert!((cc[1].den - 2.0 * q * alpha / (2.0 * alpha + 1.0)).abs() < 1e-15);
            assert_eq!(cc[1].den, full[1].den);
        }
    }

    #[test]
    fn limits_by_scope() {
        for &alpha in &[0.5, 1.0, 2.0] {
            let c = gamma_eps_exact(alpha, 1e-5, CovScope::ClockConditioned).unwrap();
            assert!((c.gamma_sq_eps / (1.0 / (4.0 * alpha)) - 1.0).abs() < 1e-4);
            let f = gamma_eps_exact(alpha, 1e-5, CovScope::Full).unwrap();
            assert!((f.n_eps * alpha - 1.0).abs() < 1e-4);
            assert!((f.gamma_sq_eps / (1.0 / (2.0 * alpha)) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(gamma_eps_exact(1.0, 0.0, CovScope::Full).is_err());
        assert!(gamma_eps_exact(1.0, 1.0, CovScope::Full).is_err());
        assert!(gamma_eps_exact(-1.0, 0.1, CovScope::Full).is_err());
    }
}
