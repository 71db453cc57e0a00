use rayon::prelude::*;

use super::{CostMatrix, TransportError};

const PARALLEL_CELLS: usize = 64 * 64;

/// Pairwise Euclidean distances between two point lists.
pub fn euclidean_cost<X, Y>(xs: &[X], ys: &[Y]) -> Result<CostMatrix, TransportError>
where
    X: AsRef<[f64]> + Sync,
    Y: AsRef<[f64]> + Sync,
{
    if xs.is_empty() || ys.is_empty() {
        return Err(TransportError::Empty);
    }
    let d = xs[0].as_ref().len();
    for v in xs.iter().map(AsRef::as_ref).chain(ys.iter().map(AsRef::as_ref)) {
        if v.len() != d {
            return Err(TransportError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }

    let m = ys.len();
    let mut values = vec![0.0; xs.len() * m];
    let fill = |(i, row): (usize, &mut [f64])| {
        let x = xs[i].as_ref();
        for (cell, y) in row.iter_mut().zip(ys) {
            *cell = distance(x, y.as_ref());
        }
    };
    if values.len() >= PARALLEL_CELLS {
        values.par_chunks_mut(m).enumerate().for_each(fill);
    } else {
        values.chunks_mut(m).enumerate().for_each(fill);
    }
    CostMatrix::new(xs.len(), m, values)
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nearest-rank percentile, `q` in `[0, 100]`. Returns `None` for an empty
/// slice.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}
