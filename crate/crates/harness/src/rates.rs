//! Log-log rate fitting.

use std::ops::Range;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Indices of the points the fit used.
    pub window: Range<usize>,
    /// Root mean square residual of the fit in log10 units.
    pub residual_rms: f64,
}

/// Ordinary least squares of `log10(value)` on `log10(n)` over the second
/// half of `points` (by index).
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(HarnessError::InvalidInput(format!(
            "rate fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let window = points.len() / 2..points.len();
    fit_window(points, window)
}

/// Least squares over an explicit index window.
pub fn fit_window(points: &[(f64, f64)], window: Range<usize>) -> Result<RateFit> {
    let used = points
        .get(window.clone())
        .filter(|w| w.len() >= 2)
        .ok_or_else(|| HarnessError::InvalidInput(format!("bad fit window {window:?}")))?;
    let mut xs = Vec::with_capacity(used.len());
    let mut ys = Vec::with_capacity(used.len());
    for &(n, v) in used {
        if !(n > 0.0 && v > 0.0) || !v.is_finite() {
            return Err(HarnessError::InvalidInput(format!(
                "rate fit needs positive values, got ({n}, {v})"
            )));
        }
        xs.push(n.log10());
        ys.push(v.log10());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::InvalidInput(
            "rate fit needs distinct n".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        window,
        residual_rms: (sse / m).sqrt(),
    })
}
