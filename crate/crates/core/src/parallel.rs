//! Index-ordered map over replicates.
//!
//! Results always come back in index order, so output is identical for any
//! worker count as long as each item derives its own RNG stream from its
//! index.

/// Number of workers; `None` uses all available cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Workers(pub Option<usize>);

impl Workers {
    pub fn sequential() -> Self {
        Workers(Some(1))
    }

    pub fn is_sequential(self) -> bool {
        !cfg!(feature = "parallel") || self.0 == Some(1)
    }
}

/// `(0..n).map(f).collect()`, spread over `workers` threads.
pub fn map_indexed<T, F>(n: usize, workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers.is_sequential() {
        return (0..n).map(f).collect();
    }
    par_map(n, workers, f)
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match workers.0 {
        None => (0..n).into_par_iter().map(&f).collect(),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            Err(e) => {
                log::warn!("could not build a {k}-thread pool ({e}); running sequentially");
                (0..n).map(f).collect()
            }
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, _workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
