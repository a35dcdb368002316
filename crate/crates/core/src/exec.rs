//! Switch between the rayon data-parallel path and the sequential path.
//!
//! With the `parallel` feature disabled everything runs sequentially and
//! [`set_parallel`] has no effect.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable data parallelism at run time (also applied to dense
/// linear algebra).
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
    #[cfg(feature = "parallel")]
    faer::set_global_parallelism(if on { faer::Par::rayon(0) } else { faer::Par::Seq });
    #[cfg(not(feature = "parallel"))]
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Size the global worker pool. Call once before any parallel work.
pub fn configure_workers(workers: usize) -> Result<(), String> {
    if workers == 0 {
        return Err("worker count must be positive".into());
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    set_parallel(workers > 1);
    Ok(())
}

pub fn workers() -> usize {
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return rayon::current_num_threads();
    }
    1
}

/// `(0..n).map(f).collect()`, in parallel when enabled. Output order is
/// always the index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}
