//! Replication fan-out. With the `parallel` feature replications run on a
//! rayon pool; results always come back in index order.

/// Evaluate `f(0), …, f(count − 1)` on the calling thread.
pub fn map_sequential<T, F>(count: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count).map(f).collect()
}

/// Evaluate `f(0), …, f(count − 1)` on a pool of `workers` threads
/// (`None` = rayon's default).
#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(count: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..count).into_par_iter().map(&f).collect();
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn map_replications<T, F>(count: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers == Some(1) {
            map_sequential(count, f)
        } else {
            map_parallel(count, workers, f)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        map_sequential(count, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_sequential(1000, |i| i * i);
        assert_eq!(map_replications(1000, Some(4), |i| i * i), seq);
        assert_eq!(map_replications(1000, None, |i| i * i), seq);
    }
}
