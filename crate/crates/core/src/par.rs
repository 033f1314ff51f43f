//! Data-parallel helpers. With the `parallel` feature and more than one
//! thread requested, work runs on a rayon pool; otherwise sequentially.
//! Callers make each item's result independent of scheduling, so both
//! paths produce identical output.

pub struct Pool {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Pool {
    /// A pool with `threads` workers; 0 or 1 means sequential.
    pub fn new(threads: usize) -> Pool {
        #[cfg(feature = "parallel")]
        {
            let pool = (threads > 1)
                .then(|| rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool"));
            Pool { pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = threads;
            Pool {}
        }
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        return self.pool.is_some();
        #[cfg(not(feature = "parallel"))]
        false
    }

    /// Applies `f` to every item; results come back in item order.
    pub fn map_mut<T, R, F>(&self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter_mut().enumerate().map(|(i, x)| f(i, x)).collect());
        }
        items.iter_mut().enumerate().map(|(i, x)| f(i, x)).collect()
    }

    /// `f(0), .., f(n - 1)` in index order.
    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

/// Whether parallel execution was compiled in.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}
