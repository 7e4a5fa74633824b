//! Streaming moments and goodness-of-fit tests.

use serde::Serialize;

/// Mean and variance by Welford updates; accumulators merge pairwise
/// (Chan et al.) so replica chunks can be reduced in any fixed order.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &RunningStats) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let w = o.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += o.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean, stderr: self.stderr() }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Streaming covariance of a pair, mergeable like [`RunningStats`].
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RunningCov {
    pub n: u64,
    pub mean_x: f64,
    pub mean_y: f64,
    c: f64,
    m2x: f64,
    m2y: f64,
}

impl RunningCov {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.c += dx * (y - self.mean_y);
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
    }

    pub fn merge(&mut self, o: &RunningCov) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = (self.n + o.n) as f64;
        let (na, nb) = (self.n as f64, o.n as f64);
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        self.c += o.c + dx * dy * na * nb / n;
        self.m2x += o.m2x + dx * dx * na * nb / n;
        self.m2y += o.m2y + dy * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.n += o.n;
    }

    pub fn covariance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.c / (self.n - 1) as f64
        }
    }

    pub fn variance_x(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2x / (self.n - 1) as f64
        }
    }

    pub fn variance_y(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2y / (self.n - 1) as f64
        }
    }

    pub fn correlation(&self) -> f64 {
        let d = (self.m2x * self.m2y).sqrt();
        if d > 0.0 {
            self.c / d
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// z-score against a known target; 0 when both agree exactly.
    pub fn z_against(&self, target: f64) -> f64 {
        z_score(self.value - target, self.stderr)
    }

    /// z-score of the difference of two independent estimates.
    pub fn z_between(&self, other: &Estimate) -> f64 {
        z_score(self.value - other.value, self.stderr.hypot(other.stderr))
    }
}

pub fn z_score(diff: f64, sd: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if sd > 0.0 {
        diff / sd
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Kolmogorov survival function Q(λ) = 2 Σ (-1)^{j-1} exp(-2 j² λ²).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        let mut j = 1i32;
        loop {
            let term = y.powi((2 * j - 1) * (2 * j - 1));
            s += term;
            if term < 1e-17 || j > 50 {
                break;
            }
            j += 1;
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        let mut sign = 1.0;
        for j in 1..=100 {
            let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
            s += sign * term;
            if term < 1e-17 {
                break;
            }
            sign = -sign;
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

fn ks_lambda(ne: f64, d: f64) -> f64 {
    let s = ne.sqrt();
    (s + 0.12 + 0.11 / s) * d
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult { statistic: d, p_value: kolmogorov_q(ks_lambda(n, d)), n: v.len() }
}

/// Two-sample Kolmogorov–Smirnov test; tied values are stepped over together,
/// which makes the test conservative for discrete data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = n1 * n2 / (n1 + n2);
    KsResult { statistic: d, p_value: kolmogorov_q(ks_lambda(ne, d)), n: x.len() + y.len() }
}

struct Fenwick(Vec<u32>);

impl Fenwick {
    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks strictly below `i`.
    fn below(&self, i: usize) -> u32 {
        let mut s = 0;
        let mut k = i;
        while k > 0 {
            s += self.0[k];
            k -= k & k.wrapping_neg();
        }
        s
    }
}

/// Two-dimensional one-sample KS test (Fasano–Franceschini quadrant
/// statistic) against the product of two continuous marginal CDFs. Quadrant
/// counts come from a sweep in x with a Fenwick tree over y ranks, so the
/// cost is O(n log n). The p-value uses the Press et al. correlation-adjusted
/// Kolmogorov approximation.
pub fn ks2d_product<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(pts: &[(f64, f64)], fx: F, gy: G) -> KsResult {
    let n = pts.len();
    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1));
    let mut yrank = vec![0usize; n];
    for (r, &i) in by_y.iter().enumerate() {
        yrank[i] = r;
    }
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| pts[a].0.total_cmp(&pts[b].0));
    let mut fw = Fenwick(vec![0; n + 1]);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (xr, &i) in by_x.iter().enumerate() {
        let ll = fw.below(yrank[i]) as f64;
        let left = xr as f64;
        let below = yrank[i] as f64;
        let lr = below - ll;
        let ul = left - ll;
        let ur = nf - 1.0 - ll - lr - ul;
        let (f, g) = (fx(pts[i].0), gy(pts[i].1));
        let model = [f * g, (1.0 - f) * g, f * (1.0 - g), (1.0 - f) * (1.0 - g)];
        let data = [ll, lr, ul, ur];
        for k in 0..4 {
            d = d.max((data[k] / nf - model[k]).abs());
        }
        fw.add(yrank[i]);
    }
    let mut c = RunningCov::new();
    for &(x, y) in pts {
        c.push(x, y);
    }
    let r = c.correlation();
    let s = nf.sqrt();
    let lambda = s * d / (1.0 + (1.0 - r * r).max(0.0).sqrt() * (0.25 - 0.75 / s));
    KsResult { statistic: d, p_value: kolmogorov_q(lambda), n }
}

/// Ranks with ties averaged, starting at 1.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with its null standard error 1/sqrt(n-1).
pub fn spearman(x: &[f64], y: &[f64]) -> Estimate {
    let (rx, ry) = (ranks(x), ranks(y));
    let mut c = RunningCov::new();
    for (a, b) in rx.iter().zip(&ry) {
        c.push(*a, *b);
    }
    Estimate { value: c.correlation(), stderr: 1.0 / ((x.len() as f64) - 1.0).sqrt() }
}

/// Per-test level after a Bonferroni correction over `m` tests.
pub fn bonferroni(level: f64, m: usize) -> f64 {
    level / m.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::stream::{tag, Stream};

    #[test]
    fn welford_matches_two_pass() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3 + 1e6).collect();
        let s: RunningStats = v.iter().copied().collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((s.mean - m).abs() < 1e-9);
        assert!((s.variance() - var).abs() < 1e-6 * var);
        let (a, b) = v.split_at(313);
        let mut sa: RunningStats = a.iter().copied().collect();
        let sb: RunningStats = b.iter().copied().collect();
        sa.merge(&sb);
        assert!((sa.variance() - var).abs() < 1e-6 * var);
        assert_eq!(sa.n, 1000);
    }

    #[test]
    fn cov_merge_matches_direct() {
        let xs: Vec<(f64, f64)> = (0..500).map(|i| (i as f64, ((i * 7) % 13) as f64)).collect();
        let mut all = RunningCov::new();
        xs.iter().for_each(|p| all.push(p.0, p.1));
        let mut a = RunningCov::new();
        let mut b = RunningCov::new();
        xs[..200].iter().for_each(|p| a.push(p.0, p.1));
        xs[200..].iter().for_each(|p| b.push(p.0, p.1));
        a.merge(&b);
        assert!((a.covariance() - all.covariance()).abs() < 1e-9);
        assert!((a.correlation() - all.correlation()).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_known_values() {
        // Q(1.36) ~ 0.0495 and Q(1.63) ~ 0.0098 are the familiar 5% and 1% points.
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 5e-4);
        // the two series agree where they meet
        assert!((kolmogorov_q(1.179_999) - kolmogorov_q(1.180_001)).abs() < 1e-5);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_uniform_rejects_shifted() {
        let mut s = Stream::new(3, tag::MISC, 0, 0);
        let u: Vec<f64> = (0..20_000).map(|_| s.open01()).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).passes(0.01));
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(!ks_one_sample(&sq, |x| x.clamp(0.0, 1.0)).passes(0.01));
        let v: Vec<f64> = (0..20_000).map(|_| s.open01()).collect();
        assert!(ks_two_sample(&u, &v).passes(0.01));
        assert!(!ks_two_sample(&u, &sq).passes(0.01));
    }

    #[test]
    fn ks2d_detects_dependence() {
        let mut s = Stream::new(4, tag::MISC, 0, 0);
        let ind: Vec<(f64, f64)> = (0..20_000).map(|_| (s.open01(), s.open01())).collect();
        let unif = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks2d_product(&ind, unif, unif).passes(0.01));
        // same marginals, positively dependent
        let dep: Vec<(f64, f64)> = (0..20_000)
            .map(|_| {
                let a = s.open01();
                let b = if s.open01() < 0.3 { a } else { s.open01() };
                (a, b)
            })
            .collect();
        assert!(!ks2d_product(&dep, unif, unif).passes(0.01));
    }

    #[test]
    fn ks2d_quadrants_brute_force() {
        let mut s = Stream::new(5, tag::MISC, 0, 0);
        let pts: Vec<(f64, f64)> = (0..200).map(|_| (s.open01(), s.open01())).collect();
        let unif = |x: f64| x;
        let mut d: f64 = 0.0;
        let n = pts.len() as f64;
        for &(x0, y0) in &pts {
            let mut q = [0.0; 4];
            for &(x, y) in &pts {
                if x == x0 && y == y0 {
                    continue;
                }
                let k = (x >= x0) as usize + 2 * (y >= y0) as usize;
                q[k] += 1.0;
            }
            let model = [x0 * y0, (1.0 - x0) * y0, x0 * (1.0 - y0), (1.0 - x0) * (1.0 - y0)];
            for k in 0..4 {
                d = d.max((q[k] / n - model[k]).abs());
            }
        }
        let r = ks2d_product(&pts, unif, unif);
        assert!((r.statistic - d).abs() < 1e-15);
    }

    #[test]
    fn spearman_of_monotone_map() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        assert!((spearman(&x, &y).value - 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }
}
