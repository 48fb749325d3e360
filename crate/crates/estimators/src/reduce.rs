//! Deterministic parallel sums. Items are cut into fixed-size shards, shard
//! partials are computed in parallel, and the partials are combined by a
//! pairwise tree in index order, so the result is bit-identical for any
//! worker count.

use rayon::prelude::*;

use crate::error::Result;

/// Shard length. Fixed (not derived from the worker count) so the grouping
/// of floating-point additions never changes.
pub(crate) const SHARD: usize = 1024;

/// Pairwise sum in index order.
pub(crate) fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Mean of `term` over `items`: parallel over shards, sequential within a
/// shard, tree-combined across shards.
pub(crate) fn sharded_mean<T, F>(items: &[T], term: F) -> Result<f64>
where
    T: Sync,
    F: Fn(&T) -> Result<f64> + Sync,
{
    let partials: Vec<f64> = items
        .par_chunks(SHARD)
        .map(|shard| {
            let mut acc = 0.0;
            for item in shard {
                acc += term(item)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(tree_sum(&partials) / items.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_matches_sequential_on_exact_inputs() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(tree_sum(&xs), 499_500.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }

    #[test]
    fn sharded_mean_is_identical_across_pool_sizes() {
        let xs: Vec<f64> = (0..10_000)
            .map(|i| (i as f64 * 0.7281).sin() / 3.0)
            .collect();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sharded_mean(&xs, |x| Ok(*x)).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn errors_propagate_out_of_the_pool() {
        let xs = vec![1.0, -1.0];
        let res = sharded_mean(&xs, |x| {
            if *x < 0.0 {
                Err(crate::error::Error::Invalid("negative".into()))
            } else {
                Ok(*x)
            }
        });
        assert!(res.is_err());
    }
}
