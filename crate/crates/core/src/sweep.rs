//! Replica sweeps. Replicas are grouped in fixed-size chunks that run in
//! parallel; chunk results are merged in chunk order, so the outcome does not
//! depend on the number of worker threads.

use rayon::prelude::*;

pub const CHUNK: u64 = 512;

pub fn fold_replicas<A, I, F, M>(n: u64, init: I, f: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(&mut A, A),
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut a = init();
            for r in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(&mut a, r);
            }
            a
        })
        .collect();
    let mut acc = init();
    for p in parts {
        merge(&mut acc, p);
    }
    acc
}

/// Ordered per-replica results.
pub fn map_replicas<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RunningStats;

    #[test]
    fn result_independent_of_threads() {
        let run = || {
            fold_replicas(
                5000,
                RunningStats::new,
                |a, r| a.push(((r * 7919) % 1013) as f64 / 7.0),
                |a, b| a.merge(&b),
            )
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
        assert_eq!(one.mean.to_bits(), three.mean.to_bits());
        assert_eq!(one.variance().to_bits(), three.variance().to_bits());
        assert_eq!(one.n, 5000);
    }
}
