//! Exploratory probe of the growth of `Var[log η(t, ⌊v t⌋)]` across
//! environments for KMP started from `δ_0`. A KPZ-type fluctuation exponent
//! would make the variance grow like `t^{2/3}`. Not an acceptance check.

use serde::Serialize;

use crate::engine::{Engine, Profile, Window};
use crate::env::{EnvParams, Environment};
use crate::error::{invalid, Result};
use crate::scaling::variance_with_stderr;
use crate::stats::Estimate;
use crate::sweep::map_replicas;

#[derive(Debug, Clone, Serialize)]
pub struct ProbePoint {
    pub v: f64,
    pub t: f64,
    pub site: i64,
    pub variance: Estimate,
    /// Replicas in which the energy at `site` was zero after pruning.
    pub vanished: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeFit {
    pub v: f64,
    /// Least-squares slope of `log Var` against `log t`.
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub reference: f64,
    pub points: Vec<ProbePoint>,
}

/// Weighted fit of `log Var = c + k log t` using the delta-method errors.
fn fit(points: &[ProbePoint]) -> (f64, f64) {
    let mut s = [0.0; 5];
    for p in points {
        let y = p.variance.value.ln();
        let sy = (p.variance.stderr / p.variance.value).max(1e-12);
        let w = 1.0 / (sy * sy);
        let x = p.t.ln();
        s[0] += w;
        s[1] += w * x;
        s[2] += w * x * x;
        s[3] += w * y;
        s[4] += w * x * y;
    }
    let det = s[0] * s[2] - s[1] * s[1];
    ((s[0] * s[4] - s[1] * s[3]) / det, (s[0] / det).sqrt())
}

pub fn conjecture_probe(alpha: f64, speeds: &[f64], times: &[f64], replicas: u64, seed: u64) -> Result<Vec<ProbeFit>> {
    let base = EnvParams::new(alpha, seed)?;
    if times.len() < 2 || times.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("times", "need at least two positive times"));
    }
    // one run per replica, read at every (v, t)
    let logs: Vec<Vec<Vec<f64>>> = map_replicas(replicas, |r| {
        let env = Environment::new(base.replica(r));
        let mut sorted: Vec<f64> = times.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut state = Profile::delta(0);
        let mut out = vec![vec![f64::NAN; times.len()]; speeds.len()];
        let mut eng = Engine::new(&env, &state, 0.0, Window::Adaptive);
        for &t in &sorted {
            eng.run_until(&mut state, t);
            let k = times.iter().position(|&x| x == t).expect("present");
            for (i, &v) in speeds.iter().enumerate() {
                let e = state.get((v * t).floor() as i64);
                out[i][k] = if e > 0.0 { e.ln() } else { f64::NAN };
            }
        }
        out
    });
    Ok(speeds
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let points: Vec<ProbePoint> = times
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let vals: Vec<f64> = logs.iter().map(|r| r[i][k]).filter(|x| x.is_finite()).collect();
                    let (var, se) = variance_with_stderr(&vals);
                    ProbePoint {
                        v,
                        t,
                        site: (v * t).floor() as i64,
                        variance: Estimate { value: var, stderr: se },
                        vanished: replicas - vals.len() as u64,
                    }
                })
                .collect();
            let (k, se) = fit(&points);
            ProbeFit { v, exponent: k, exponent_stderr: se, reference: 2.0 / 3.0, points }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_grows() {
        let fits = conjecture_probe(1.0, &[0.25], &[8.0, 32.0], 400, 1).unwrap();
        let f = &fits[0];
        assert_eq!(f.points.len(), 2);
        assert!(f.points[1].variance.value > f.points[0].variance.value);
        assert!(f.exponent > 0.0);
    }
}
