//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon global pool; without it every mode runs sequentially. Both paths
//! return results in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

impl Execution {
    /// `jobs == 1` selects the serial path.
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs == 1 {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(self, range: std::ops::Range<usize>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    /// Fills `out` in chunks of `chunk` elements; `f` gets the chunk index.
    pub fn fill_chunks<T, F>(self, out: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Runs `f` on a pool of `jobs` threads when parallelism is available.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        let threads = jobs.min(std::thread::available_parallelism().map_or(1, |n| n.get()));
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = Execution::Serial.map(&items, |x| x * x);
        let b = Execution::Parallel.map(&items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
    }

    #[test]
    fn chunks_cover_everything() {
        let mut a = vec![0usize; 103];
        let mut b = vec![0usize; 103];
        Execution::Serial.fill_chunks(&mut a, 10, |i, c| c.iter_mut().for_each(|v| *v = i));
        Execution::Parallel.fill_chunks(&mut b, 10, |i, c| c.iter_mut().for_each(|v| *v = i));
        assert_eq!(a, b);
        assert_eq!(a[102], 10);
    }

    #[test]
    fn jobs_one_is_serial() {
        assert_eq!(Execution::from_jobs(1), Execution::Serial);
        assert_eq!(Execution::from_jobs(0), Execution::Parallel);
    }
}
