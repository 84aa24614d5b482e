//! Choice between rayon and a plain loop for the data-parallel kernels.
//!
//! Every parallel map here collects into a `Vec` in input order, so results
//! never depend on the thread count. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs sequentially.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if Self::parallel_available() {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when the crate was built with rayon.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// The mode that will actually run.
    pub fn effective(self) -> Self {
        if Self::parallel_available() {
            self
        } else {
            Execution::Sequential
        }
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self.effective() {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Parallel => par_map(items, f),
        }
    }

    pub fn map_range<R, F>(self, range: Range<usize>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self.effective() {
            Execution::Sequential => range.map(f).collect(),
            Execution::Parallel => par_map_range(range, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn par_map_range<R: Send, F: Fn(usize) -> R + Sync + Send>(range: Range<usize>, f: F) -> Vec<R> {
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_range<R: Send, F: Fn(usize) -> R + Sync + Send>(range: Range<usize>, f: F) -> Vec<R> {
    range.map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&items, |x| x * x);
        let par = Execution::Parallel.map(&items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(
            Execution::Sequential.map_range(0..50, |i| i + 1),
            Execution::Parallel.map_range(0..50, |i| i + 1)
        );
    }

    #[test]
    fn effective_mode_matches_feature() {
        let expected = if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        };
        assert_eq!(Execution::Parallel.effective(), expected);
        assert_eq!(Execution::default(), expected);
    }
}
