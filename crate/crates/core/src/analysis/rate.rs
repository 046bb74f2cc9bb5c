//! Least-squares fits of log-gap against cumulative queries or iterations.

use crate::error::{Result, ZoqError};
use crate::optimizer::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateAxis {
    CumulativeQueries,
    Iterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateWindow {
    /// Leading fraction of iterations dropped as transient.
    pub skip_fraction: f64,
    /// The window ends before the first mean gap below this level.
    pub floor: f64,
    pub axis: RateAxis,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self { skip_fraction: 0.1, floor: 1e-12, axis: RateAxis::CumulativeQueries }
    }
}

impl RateWindow {
    pub fn per_iteration() -> Self {
        Self { axis: RateAxis::Iterations, ..Self::default() }
    }
}

/// Slope of the least-squares line through `(x_i, ln y_i)`.
pub fn fit_log_linear(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(ZoqError::Fit(format!("{} abscissae but {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(ZoqError::Fit("need at least two points in the fit window".into()));
    }
    if let Some((i, y)) = ys.iter().enumerate().find(|(_, y)| !(**y > 0.0) || !y.is_finite()) {
        return Err(ZoqError::Fit(format!("gap {y} at window position {i} is not positive")));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().map(|y| y.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y.ln() - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(ZoqError::Fit("all abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Pointwise mean gap of trajectories that share one allocation schedule,
/// returned with the abscissa selected by `axis`.
pub fn mean_gap_curve(trajs: &[Trajectory], axis: RateAxis) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = trajs
        .first()
        .ok_or_else(|| ZoqError::Fit("no trajectories to fit".into()))?;
    let len = first.rows.len();
    let mut sums = vec![0.0; len];
    for (k, tr) in trajs.iter().enumerate() {
        if tr.rows.len() != len {
            return Err(ZoqError::Fit(format!(
                "trajectory {k} has {} rows, expected {len}",
                tr.rows.len()
            )));
        }
        for (i, (row, r0)) in tr.rows.iter().zip(&first.rows).enumerate() {
            if row.cumulative_queries != r0.cumulative_queries {
                return Err(ZoqError::Fit(format!("trajectory {k} row {i} is on a different query axis")));
            }
            sums[i] += row
                .gap
                .ok_or_else(|| ZoqError::Fit(format!("trajectory {k} row {i} has no gap")))?;
        }
    }
    let n = trajs.len() as f64;
    let xs = first
        .rows
        .iter()
        .map(|r| match axis {
            RateAxis::CumulativeQueries => r.cumulative_queries as f64,
            RateAxis::Iterations => r.t as f64,
        })
        .collect();
    Ok((xs, sums.into_iter().map(|s| s / n).collect()))
}

/// Fitted slope of the mean log-gap over the window.
pub fn fit_log_linear_rate(trajs: &[Trajectory], window: RateWindow) -> Result<f64> {
    let (xs, gaps) = mean_gap_curve(trajs, window.axis)?;
    let (a, b) = window_bounds(&gaps, window)?;
    fit_log_linear(&xs[a..b], &gaps[a..b])
}

/// Index range `[a, b)` of rows kept by the window. Row 0 is the start
/// state; iterations are rows `1..`.
pub fn window_bounds(gaps: &[f64], window: RateWindow) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&window.skip_fraction) {
        return Err(ZoqError::InvalidArgument(format!(
            "skip fraction {} outside [0, 1)",
            window.skip_fraction
        )));
    }
    let iters = gaps.len().saturating_sub(1);
    let a = ((iters as f64 * window.skip_fraction).floor() as usize).max(1).min(gaps.len());
    let b = gaps[a..]
        .iter()
        .position(|&g| g.abs() < window.floor)
        .map_or(gaps.len(), |p| a + p);
    if b < a + 2 {
        return Err(ZoqError::Fit(format!(
            "fit window holds {} points, need at least two",
            b.saturating_sub(a)
        )));
    }
    Ok((a, b))
}
