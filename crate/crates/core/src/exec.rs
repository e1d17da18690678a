//! Execution strategy for the data-parallel sweeps.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] maps over
//! rayon's global pool. Without it every strategy runs sequentially, so the
//! crate builds and behaves identically on targets without threads. Results
//! are always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.into_par_iter().map(f).collect(),
            _ => items.into_iter().map(f).collect(),
        }
    }

    /// Like [`Exec::map`] but short-circuits on the first error (in input
    /// order for the sequential path, in any order for the parallel one).
    pub fn try_map<T, R, E, F>(self, items: Vec<T>, f: F) -> Result<Vec<R>, E>
    where
        T: Send,
        R: Send,
        E: Send,
        F: Fn(T) -> Result<R, E> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.into_par_iter().map(f).collect(),
            _ => items.into_iter().map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_preserve_order() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = Exec::Sequential.map(items.clone(), |x| x * 3);
        let par = Exec::Parallel.map(items, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 2997);
    }

    #[test]
    fn try_map_propagates_errors() {
        let out: Result<Vec<u32>, String> =
            Exec::Parallel.try_map((0..10).collect(), |x| if x == 7 { Err("seven".into()) } else { Ok(x) });
        assert_eq!(out.unwrap_err(), "seven");
    }
}
