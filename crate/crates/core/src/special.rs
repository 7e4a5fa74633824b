//! Special functions needed by the oracles.

pub use statrs::function::gamma::ln_gamma;

/// `exp(-t) I_n(t)` for integer `n`, summed as a log-space power series.
/// This is the law at time `t` of a continuous-time simple walk with total
/// jump rate 1.
pub fn scaled_bessel_i(n: i64, t: f64) -> f64 {
    let n = n.unsigned_abs() as f64;
    if t == 0.0 {
        return if n == 0.0 { 1.0 } else { 0.0 };
    }
    let lh = (t / 2.0).ln();
    let log_term = |k: f64| -t + (2.0 * k + n) * lh - ln_gamma(k + 1.0) - ln_gamma(k + n + 1.0);
    // terms peak near k* = (sqrt(n^2 + t^2) - n) / 2
    let kstar = (((n * n + t * t).sqrt() - n) / 2.0).floor();
    let peak = log_term(kstar);
    let mut s = 0.0;
    let mut k = kstar;
    loop {
        let v = (log_term(k) - peak).exp();
        s += v;
        if v < 1e-18 {
            break;
        }
        k += 1.0;
    }
    k = kstar - 1.0;
    while k >= 0.0 {
        let v = (log_term(k) - peak).exp();
        s += v;
        if v < 1e-18 {
            break;
        }
        k -= 1.0;
    }
    (peak + s.ln()).exp()
}

/// Law of the rate-1 continuous-time simple walk at time `t`.
pub fn annealed_pmf(t: f64, y: i64) -> f64 {
    scaled_bessel_i(y, t)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // e^{-1} I_0(1) and e^{-1} I_1(1)
        assert!((scaled_bessel_i(0, 1.0) - 0.465_759_607_593_640_4).abs() < 1e-15);
        assert!((scaled_bessel_i(1, 1.0) - 0.207_910_415_349_708_2).abs() < 1e-15);
        assert!((scaled_bessel_i(-1, 1.0) - scaled_bessel_i(1, 1.0)).abs() == 0.0);
        assert_eq!(scaled_bessel_i(0, 0.0), 1.0);
    }

    #[test]
    fn pmf_normalized_at_large_time() {
        let t = 128.0;
        let s: f64 = (-400..=400).map(|y| annealed_pmf(t, y)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let m2: f64 = (-400..=400).map(|y| (y * y) as f64 * annealed_pmf(t, y)).sum();
        assert!((m2 - t).abs() < 1e-9 * t);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }
}
