//! Regret curves `R(t) = t·Γ̂* − Q(t)` across replications.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::Trace;

/// `points` evenly spaced times ending at `horizon`, excluding zero.
pub fn time_grid(horizon: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| horizon * i as f64 / points as f64).collect()
}

/// Nearest-rank quantile of sorted values: the element at rank `⌈p·n⌉`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretCurve {
    pub grid: Vec<f64>,
    /// `per_replication[r][i]` is replication `r`'s regret at `grid[i]`.
    pub per_replication: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

impl RegretCurve {
    /// Builds the curve from each replication's accumulated mean reward on
    /// the grid.
    pub fn from_accumulated(grid: Vec<f64>, gamma_star: f64, accumulated: &[Vec<f64>]) -> Self {
        let per_replication: Vec<Vec<f64>> = accumulated
            .iter()
            .map(|q| grid.iter().zip(q).map(|(&t, &q)| t * gamma_star - q).collect())
            .collect();
        let reps = per_replication.len();
        let mut mean = Vec::with_capacity(grid.len());
        let mut q05 = Vec::with_capacity(grid.len());
        let mut q95 = Vec::with_capacity(grid.len());
        let mut column = Vec::with_capacity(reps);
        for i in 0..grid.len() {
            if reps == 0 {
                break;
            }
            column.clear();
            column.extend(per_replication.iter().map(|r| r[i]));
            // summing in replication order keeps the mean independent of
            // the order replications finished in
            mean.push(column.iter().sum::<f64>() / reps as f64);
            column.sort_by(f64::total_cmp);
            q05.push(nearest_rank(&column, 0.05));
            q95.push(nearest_rank(&column, 0.95));
        }
        Self {
            grid,
            per_replication,
            mean,
            q05,
            q95,
        }
    }

    pub fn replications(&self) -> usize {
        self.per_replication.len()
    }

    /// Mean regret at the grid point closest to `t`.
    pub fn mean_at(&self, t: f64) -> Option<f64> {
        let i = self
            .grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        self.mean.get(i).copied()
    }
}

/// Regret of each trace on `grid` against `gamma_star`, with mean and
/// nearest-rank 5%/95% quantiles.
pub fn regret_curve(traces: &[Trace], gamma_star: f64, grid: &[f64]) -> Result<RegretCurve> {
    for trace in traces {
        if let Some(&point) = grid.iter().find(|&&t| t > trace.horizon) {
            return Err(Error::GridBeyondHorizon {
                point,
                horizon: trace.horizon,
            });
        }
    }
    let accumulated: Vec<Vec<f64>> = traces.iter().map(|t| t.accumulated_on_grid(grid)).collect();
    Ok(RegretCurve::from_accumulated(grid.to_vec(), gamma_star, &accumulated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Event, EventKind};

    fn steady_trace(horizon: f64, reward_per_unit: f64) -> Trace {
        let events = (1..=horizon as usize)
            .map(|k| Event {
                time: k as f64,
                set: k,
                kind: EventKind::Selection {
                    arm: 0,
                    mean: reward_per_unit,
                    reward: reward_per_unit,
                },
            })
            .collect();
        Trace {
            horizon,
            events,
            sets: Vec::new(),
            final_rate: reward_per_unit,
        }
    }

    #[test]
    fn collecting_the_optimal_rate_gives_zero_regret() {
        let trace = steady_trace(50.0, 0.25);
        let curve = regret_curve(&[trace], 0.25, &time_grid(50.0, 10)).unwrap();
        assert!(curve.mean.iter().all(|&r| r.abs() < 1e-12));
    }

    #[test]
    fn single_replication_has_degenerate_quantiles() {
        let trace = steady_trace(20.0, 0.1);
        let curve = regret_curve(&[trace], 0.3, &time_grid(20.0, 5)).unwrap();
        assert_eq!(curve.mean, curve.q05);
        assert_eq!(curve.mean, curve.q95);
        assert_eq!(curve.mean.len(), curve.grid.len());
    }

    #[test]
    fn grid_beyond_horizon_is_rejected() {
        let trace = steady_trace(10.0, 0.1);
        assert!(matches!(
            regret_curve(&[trace], 0.1, &[5.0, 11.0]),
            Err(Error::GridBeyondHorizon { point, .. }) if point == 11.0
        ));
    }

    #[test]
    fn nearest_rank_convention() {
        let sorted: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&sorted, 0.05), 1.0);
        assert_eq!(nearest_rank(&sorted, 0.95), 19.0);
        assert_eq!(nearest_rank(&sorted[..1], 0.95), 1.0);
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0], 0.5), 2.0);
    }

    #[test]
    fn aggregates_ignore_replication_order() {
        let grid = time_grid(40.0, 4);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|r| grid.iter().map(|t| t * 0.1 * r as f64 - 0.3 * r as f64).collect())
            .collect();
        let forward = RegretCurve::from_accumulated(grid.clone(), 0.2, &rows);
        let mut reversed_rows = rows.clone();
        reversed_rows.reverse();
        let reversed = RegretCurve::from_accumulated(grid, 0.2, &reversed_rows);
        assert_eq!(forward.q05, reversed.q05);
        assert_eq!(forward.q95, reversed.q95);
        for (a, b) in forward.mean.iter().zip(&reversed.mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_spacing() {
        assert_eq!(time_grid(10.0, 4), vec![2.5, 5.0, 7.5, 10.0]);
        assert!(time_grid(10.0, 0).is_empty());
    }
}
