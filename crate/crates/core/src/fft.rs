//! Unitary N-dimensional FFT on top of `rustfft`.
//!
//! Plans are cached per thread, so concurrent callers never share
//! scratch state.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// In-place unitary transform of a row-major `M^N` array.
pub(crate) fn transform(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let m = grid.points();
    let n = grid.dims();
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(m, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    for axis in 0..n {
        let stride = m.pow((n - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = m * stride;
        let mut buf = vec![Complex64::new(0.0, 0.0); block];
        for chunk in data.chunks_mut(block) {
            // [m][stride] -> [stride][m]
            for t in 0..m {
                for q in 0..stride {
                    buf[q * m + t] = chunk[t * stride + q];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for t in 0..m {
                for q in 0..stride {
                    chunk[t * stride + q] = buf[q * m + t];
                }
            }
        }
    }

    let scale = 1.0 / (grid.len() as f64).sqrt();
    for z in data.iter_mut() {
        *z *= scale;
    }
}
