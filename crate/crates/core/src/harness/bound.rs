//! Reference curve of the high-probability OAF regret bound.

use crate::env::ProblemSpec;

/// `aη + l(1 + η) + √U_T` at each `T`, where
///
/// ```text
/// U_T = max((τ+l)²/τ, (s+l)²/s) · G² T/τ² · (1 + ln(T/τ))
/// G   = (s + l)η + c + l,   a = max(1, s)
/// ```
///
/// `U_T` is floored at zero for horizons short enough to make the
/// logarithmic factor negative.
pub fn oaf_bound_curve(spec: &ProblemSpec, grid: &[f64]) -> Vec<f64> {
    let tau = spec.min_delay;
    let s = spec.max_delay;
    let l = spec.max_arms as f64;
    let c = spec.cost_bound;
    let eta = spec.eta();
    let a = s.max(1.0);
    let g = (s + l) * eta + c + l;
    let m = ((tau + l).powi(2) / tau).max((s + l).powi(2) / s);
    grid.iter()
        .map(|&t| {
            let u = m * g * g * t / (tau * tau) * (1.0 + (t / tau).ln());
            a * eta + l * (1.0 + eta) + u.max(0.0).sqrt()
        })
        .collect()
}
