//! Data-parallel helpers. With the `parallel` feature the default entry
//! points run on rayon; without it they fall back to plain iterators.
//! Results are always collected in input order and reductions are applied
//! left to right, so the output is identical either way.

pub use self::actual::{map_collect, map_indexed};

pub mod sequential {
    /// Maps a slice in order.
    pub fn map_collect<T, R, F>(source: &[T], map_op: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        source.iter().map(map_op).collect()
    }

    /// Maps `0..n` in order.
    pub fn map_indexed<R, F>(n: usize, map_op: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(map_op).collect()
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    /// Maps a slice on the rayon pool, preserving order.
    pub fn map_collect<T, R, F>(source: &[T], map_op: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        source.par_iter().map(map_op).collect()
    }

    /// Maps `0..n` on the rayon pool, preserving order.
    pub fn map_indexed<R, F>(n: usize, map_op: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(map_op).collect()
    }
}

#[cfg(feature = "parallel")]
mod actual {
    pub use super::parallel::{map_collect, map_indexed};
}

#[cfg(not(feature = "parallel"))]
mod actual {
    pub use super::sequential::{map_collect, map_indexed};
}
