//! Least-squares exponents for convergence studies.

/// Slope of `ln y` against `ln x`. Points with non-positive or non-finite
/// coordinates are dropped; `None` if fewer than two remain.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite() && **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Ratios `y[i] / y[i+1]` of a refinement ladder.
pub fn refinement_ratios(ys: &[f64]) -> Vec<f64> {
    ys.windows(2).map(|w| w[0] / w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_inputs() {
        assert_eq!(log_log_slope(&[1.0], &[2.0]), None);
        assert_eq!(log_log_slope(&[1.0, 2.0], &[0.0, 0.0]), None);
        assert_eq!(log_log_slope(&[2.0, 2.0], &[1.0, 3.0]), None);
    }

    proptest! {
        #[test]
        fn recovers_power_law(p in -6.0f64..6.0, c in 0.01f64..100.0) {
            let xs = [0.05, 0.1, 0.2, 0.4];
            let ys: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(p)).collect();
            let s = log_log_slope(&xs, &ys).unwrap();
            prop_assert!((s - p).abs() < 1e-9);
        }
    }
}
