use super::{CostMatrix, Marginal, TransportError};

/// Row/column minima below this are raised to it before inversion, so an
/// exact label match gets a large but finite weight.
pub const MIN_DISTANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

pub fn uniform_marginal(n: usize) -> Result<Marginal, TransportError> {
    if n == 0 {
        return Err(TransportError::ZeroSize);
    }
    Ok(Marginal {
        weights: vec![1.0 / n as f64; n],
    })
}

/// Weights proportional to `1 / d_i`, where `d_i` is the smallest cost from
/// point `i` to any point on the other side.
pub fn inverse_min_distance_marginal(cost: &CostMatrix, side: Side) -> Marginal {
    let minima: Vec<f64> = match side {
        Side::Source => (0..cost.rows()).map(|i| cost.row_min(i)).collect(),
        Side::Target => (0..cost.cols()).map(|j| cost.col_min(j)).collect(),
    };
    from_minima(&minima)
}

pub(crate) fn from_minima(minima: &[f64]) -> Marginal {
    let inv: Vec<f64> = minima.iter().map(|d| 1.0 / d.max(MIN_DISTANCE_FLOOR)).collect();
    let total: f64 = inv.iter().sum();
    Marginal {
        weights: inv.into_iter().map(|w| w / total).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_marginal(4).unwrap().weights(), &[0.25; 4]);
        assert_eq!(uniform_marginal(1).unwrap().weights(), &[1.0]);
        let third = uniform_marginal(3).unwrap();
        assert!(third.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(uniform_marginal(0), Err(TransportError::ZeroSize));
    }

    #[test]
    fn worked_minima() {
        let w = from_minima(&[0.35, 0.37, 0.58]);
        let rounded: Vec<f64> = w.weights().iter().map(|x| (x * 100.0).round() / 100.0).collect();
        assert_eq!(rounded, vec![0.39, 0.37, 0.24]);
    }

    #[test]
    fn equal_minima_are_uniform() {
        let w = from_minima(&[0.7; 5]);
        assert!(w.weights().iter().all(|x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn halves_and_quarters() {
        // 1/0.5 = 2 and 1/0.25 = 4 → 2/6, 4/6.
        let w = from_minima(&[0.5, 0.25]);
        assert!((w.weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_minimum_is_clamped() {
        let w = from_minima(&[0.0, 1.0]);
        assert!(w.weights().iter().all(|x| x.is_finite()));
        assert!(w.weights()[0] > 0.99);
        assert!(Marginal::new(w.weights().to_vec()).is_ok());
    }

    #[test]
    fn target_side_uses_column_minima() {
        let c = CostMatrix::from_rows(&[vec![0.5, 2.0], vec![1.0, 0.25]]).unwrap();
        let src = inverse_min_distance_marginal(&c, Side::Source);
        let tgt = inverse_min_distance_marginal(&c, Side::Target);
        assert!((src.weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((tgt.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
    }
}
