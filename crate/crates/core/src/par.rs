//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) element loops and sweeps run on the
//! rayon pool. Results are always collected in input order, so parallel and
//! sequential execution produce bit-identical output.

/// How element loops and sweeps are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..len` and collects the results in index order.
pub fn map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Maps `f` over a slice and collects the results in order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..len` and concatenates the produced vectors in index order.
pub fn flat_map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> Vec<R> + Send + Sync,
{
    map_range(exec, len, f).into_iter().flatten().collect()
}

/// Sums `f(i)` over `0..len`. The reduction is done sequentially over the
/// ordered partial results so the floating-point result does not depend on
/// the thread schedule.
pub fn sum_range<F>(exec: Execution, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    map_range(exec, len, f).into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = sum_range(Execution::Sequential, 10_000, f);
        let b = sum_range(Execution::Parallel, 10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
        let v = flat_map_range(Execution::Parallel, 5, |i| vec![i; i]);
        assert_eq!(v, vec![1, 2, 2, 3, 3, 3, 4, 4, 4, 4]);
    }
}
