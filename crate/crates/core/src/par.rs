//! Data-parallel helpers with a sequential fallback.
//!
//! Reductions are split into fixed-size chunks whose partial sums are folded
//! in chunk order, so the result does not depend on the number of worker
//! threads or on whether the `parallel` feature is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Caps the global worker pool. Has no effect without the `parallel` feature
/// or if the pool was already initialised.
pub fn init_thread_pool(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads.filter(|&n| n > 0) {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised; ignoring cap of {n}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Sum of `f(x)` over `items`, reproducible bit for bit across execution modes.
pub fn sum_by<T, F>(exec: Execution, items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    let partial = |chunk: &[T]| chunk.iter().map(&f).sum::<f64>();
    let partials: Vec<f64> = if exec.is_parallel() && items.len() > CHUNK {
        #[cfg(feature = "parallel")]
        {
            items.par_chunks(CHUNK).map(partial).collect()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    } else {
        items.chunks(CHUNK).map(partial).collect()
    };
    partials.into_iter().sum()
}

/// Maximum of `f(x)` over `items` (0 for an empty slice).
pub fn max_by<T, F>(exec: Execution, items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    let partial = |chunk: &[T]| chunk.iter().map(&f).fold(0.0_f64, f64::max);
    if exec.is_parallel() && items.len() > CHUNK {
        #[cfg(feature = "parallel")]
        {
            items.par_chunks(CHUNK).map(partial).reduce(|| 0.0, f64::max)
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    } else {
        partial(items)
    }
}

/// `f(i)` for `i in 0..n`, collected in index order.
pub fn map_indexed<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if exec.is_parallel() && n > 1 {
        #[cfg(feature = "parallel")]
        {
            (0..n).into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    } else {
        (0..n).map(f).collect()
    }
}

/// `f(x)` for every item, collected in order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indexed(exec, items.len(), |i| f(&items[i]))
}

/// Applies `f` to every element in place.
pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    if exec.is_parallel() && items.len() > CHUNK {
        #[cfg(feature = "parallel")]
        items.par_chunks_mut(CHUNK).for_each(|c| c.iter_mut().for_each(&f));
    } else {
        items.iter_mut().for_each(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_identical_across_modes() {
        let xs: Vec<f64> = (0..100_003).map(|i| ((i as f64) * 0.37).sin() * 1e3).collect();
        let a = sum_by(Execution::Sequential, &xs, |x| *x);
        let b = sum_by(Execution::Parallel, &xs, |x| *x);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn max_and_map_agree() {
        let xs: Vec<f64> = (0..20_000).map(|i| (i % 977) as f64).collect();
        assert_eq!(max_by(Execution::Parallel, &xs, |x| *x), 976.0);
        assert_eq!(max_by(Execution::Sequential, &[] as &[f64], |x| *x), 0.0);
        let sq = map_indexed(Execution::Parallel, 10, |i| i * i);
        assert_eq!(sq, (0..10).map(|i| i * i).collect::<Vec<_>>());
    }
}
