use crate::algebra::{RatFun, RatFunMatrix};
use crate::bounds::{l1_bound, linf_bound, BoundConfig, KernelBound};
use crate::numeric::NonnegMatrix;

/// Runs `f` over `items`, spreading the work over `jobs` scoped threads.
/// Output order follows input order.
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<U>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("bound worker panicked")).collect()
    })
}

pub(crate) fn kernel_bounds(m: &RatFunMatrix, cfg: &BoundConfig) -> Vec<KernelBound> {
    par_map(m.entries(), cfg.jobs, |f: &RatFun| l1_bound(f, cfg))
}

/// Entry-wise certified L1 bounds (`inf` for unstable entries).
pub fn l1_matrix(m: &RatFunMatrix, cfg: &BoundConfig) -> NonnegMatrix {
    let data = kernel_bounds(m, cfg).into_iter().map(|k| k.l1_upper).collect();
    NonnegMatrix::from_vec(m.rows(), m.cols(), data).expect("bounds are nonnegative")
}

/// Entry-wise certified sup-norm bounds of the kernels.
pub fn linf_matrix(m: &RatFunMatrix, cfg: &BoundConfig) -> NonnegMatrix {
    let data = par_map(m.entries(), cfg.jobs, |f: &RatFun| linf_bound(f, cfg));
    NonnegMatrix::from_vec(m.rows(), m.cols(), data).expect("bounds are nonnegative")
}
