//! Job scheduling for independent training runs.
//!
//! Results always come back in job-index order, so any reduction over them is
//! independent of the worker count. Without the `parallel` feature every
//! mode runs sequentially.

/// Worker-pool sizing for fold/iteration jobs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// One worker per available processor.
    #[default]
    Auto,
    Sequential,
    Threads(usize),
}

impl Parallelism {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None | Some(0) => Parallelism::Auto,
            Some(1) => Parallelism::Sequential,
            Some(n) => Parallelism::Threads(n),
        }
    }

    /// Applies `f` to `0..n`, returning results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        imp::map(*self, n, f)
    }
}

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    use super::Parallelism;

    pub(super) fn map<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match mode {
            Parallelism::Sequential => (0..n).map(f).collect(),
            Parallelism::Auto => (0..n).into_par_iter().map(f).collect(),
            Parallelism::Threads(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(e) => {
                    log::warn!("could not build a {threads}-thread pool ({e}); running sequentially");
                    (0..n).map(f).collect()
                }
            },
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    use super::Parallelism;

    pub(super) fn map<T, F>(_mode: Parallelism, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        for mode in [Parallelism::Sequential, Parallelism::Auto, Parallelism::Threads(3)] {
            assert_eq!(mode.map(50, |i| i * i), (0..50).map(|i| i * i).collect::<Vec<_>>());
        }
        assert_eq!(Parallelism::from_workers(Some(1)), Parallelism::Sequential);
        assert_eq!(Parallelism::from_workers(Some(0)), Parallelism::Auto);
    }
}
