//! Bellman residuals of the average-reward problem, the optimal per-set
//! selection, and the stochastic-approximation solver for `Γ*`.
//!
//! For a decision set with delay `S`, cost `C` and ranked means
//! `μ_(1) ≥ … ≥ μ_(L)`, the residual is
//!
//! ```text
//! h(Γ) = min_{n ∈ N ∩ [L]} (S + n)Γ + C − Σ_{i ≤ n} μ_(i)
//! ```
//!
//! and `Γ*` is the unique root of `E[h(Γ)] = 0`.

use serde::Serialize;

use crate::env::{ConstraintSet, Environment};
use crate::error::{Error, Result};

/// Means sorted in non-increasing order, remembering where each came from.
/// Equal means keep their original relative order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMeans {
    values: Vec<f64>,
    order: Vec<usize>,
}

impl RankedMeans {
    pub fn new(means: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..means.len()).collect();
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
        let values = order.iter().map(|&i| means[i]).collect();
        Self { values, order }
    }

    /// Means in rank order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Original index of each rank.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Minimum of the residual together with the count attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    /// Smallest admissible minimizing count.
    pub count: usize,
}

/// Minimum over admissible `n` of `(S+n)Γ + C − Σ_{i≤n} x_i` for values `x`
/// given in rank order.
///
/// The objective is accumulated one rank at a time, so consecutive values
/// differ by exactly the rounded `Γ − x_i`; a rank whose value equals `Γ`
/// leaves the objective unchanged and the smaller count is kept.
pub(crate) fn min_over_counts(
    gamma: f64,
    delay: f64,
    cost: f64,
    ranked: &[f64],
    constraint: &ConstraintSet,
) -> Result<Residual> {
    let mut value = delay * gamma + cost;
    let mut best = constraint.contains(0).then_some(Residual { value, count: 0 });
    for (i, &x) in ranked.iter().enumerate() {
        value += gamma - x;
        let n = i + 1;
        if constraint.contains(n) && best.is_none_or(|b| value < b.value) {
            best = Some(Residual { value, count: n });
        }
    }
    best.ok_or(Error::EmptyActionSpace(ranked.len()))
}

/// Bellman residual `h(Γ, S, C, μ)`.
pub fn h_value(gamma: f64, delay: f64, cost: f64, means: &RankedMeans, constraint: &ConstraintSet) -> Result<Residual> {
    min_over_counts(gamma, delay, cost, means.values(), constraint)
}

/// Regret of a concrete selection: `(S + |A|)Γ + C − Σ_{x∈A} μ(x)`.
pub fn g_value(gamma: f64, delay: f64, cost: f64, selected_means: &[f64]) -> f64 {
    (delay + selected_means.len() as f64) * gamma + cost - selected_means.iter().sum::<f64>()
}

/// Original indices of the top-`n` arms, in rank order, for the count `n`
/// minimizing the residual.
pub fn optimal_selection(
    gamma: f64,
    delay: f64,
    cost: f64,
    means: &RankedMeans,
    constraint: &ConstraintSet,
) -> Result<Vec<usize>> {
    let residual = h_value(gamma, delay, cost, means, constraint)?;
    Ok(means.order()[..residual.count].to_vec())
}

/// Projected stochastic-approximation estimate of the optimal average reward.
///
/// Each update accumulates the observed delay into `γ` and moves
/// `Γ ← proj_[−η,η](Γ − residual / (ξ γ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    gamma: f64,
    elapsed_delay: f64,
    eta: f64,
}

impl RateEstimate {
    pub fn new(eta: f64) -> Self {
        Self::with_initial(0.0, eta)
    }

    pub fn with_initial(gamma: f64, eta: f64) -> Self {
        Self {
            gamma: gamma.clamp(-eta, eta),
            elapsed_delay: 0.0,
            eta,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Cumulative delay `γ_j = Σ S`.
    pub fn elapsed_delay(&self) -> f64 {
        self.elapsed_delay
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn update(&mut self, residual: f64, delay: f64, damping: f64) {
        self.elapsed_delay += delay;
        let step = residual / (damping * self.elapsed_delay);
        self.gamma = (self.gamma - step).clamp(-self.eta, self.eta);
        debug_assert!(self.gamma.abs() <= self.eta);
    }
}

/// Default sample budget of [`solve_gamma_star`].
pub const DEFAULT_SOLVER_ITERATIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSolution {
    pub gamma_star: f64,
    /// Mean residual `h_j(Γ_j)` over the last tenth of the iterations.
    pub residual: f64,
    pub iterations: u64,
    pub eta: f64,
}

/// Runs the projected Robbins–Monro iteration on `iterations` sets sampled
/// from `env` with known means, starting at `Γ = 0`.
pub fn solve_gamma_star(env: &Environment, iterations: u64, seed: u64) -> Result<RateSolution> {
    solve_gamma_star_traced(env, iterations, seed, |_| {})
}

/// As [`solve_gamma_star`], reporting every iterate to `observe`.
pub fn solve_gamma_star_traced(
    env: &Environment,
    iterations: u64,
    seed: u64,
    mut observe: impl FnMut(f64),
) -> Result<RateSolution> {
    let iterations = iterations.max(1);
    let spec = env.spec();
    let model = env.model();
    let mut sampler = env.sampler(seed);
    let mut rate = RateEstimate::new(spec.eta());
    let tail_start = iterations - iterations.div_ceil(10);
    let mut tail_sum = 0.0;
    let mut means = Vec::new();
    let mut ranked = Vec::new();
    for j in 0..iterations {
        let set = sampler.sample_decision_set();
        means.clear();
        means.extend(set.contexts.iter().map(|x| model.mean(x)));
        ranked.clone_from(&means);
        ranked.sort_by(|a: &f64, b: &f64| b.total_cmp(a));
        let h = min_over_counts(rate.gamma(), set.delay, set.cost, &ranked, &spec.constraint)?;
        if j >= tail_start {
            tail_sum += h.value;
        }
        rate.update(h.value, set.delay, 1.0);
        observe(rate.gamma());
    }
    Ok(RateSolution {
        gamma_star: rate.gamma(),
        residual: tail_sum / (iterations - tail_start) as f64,
        iterations,
        eta: spec.eta(),
    })
}

/// Optimal average reward of a thresholding policy in the mortal bandit,
/// using the empirical distribution of `samples`:
///
/// ```text
/// ζ(x) = (E[Y] + (1 − F(x))(𝓛 − 1) E[Y | Y ≥ x]) / (1 + (1 − F(x))(𝓛 − 1))
/// ```
///
/// with the right-continuous `F(x) = P(Y ≤ x)`.
pub fn mortal_zeta(x: f64, samples: &[f64], mean_lifetime: f64) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let at_most = samples.iter().filter(|&&y| y <= x).count() as f64;
    let (tail_sum, tail_count) = samples
        .iter()
        .filter(|&&y| y >= x)
        .fold((0.0, 0usize), |(s, c), &y| (s + y, c + 1));
    if tail_count == 0 {
        return mean;
    }
    let tail_mean = tail_sum / tail_count as f64;
    let survive = (1.0 - at_most / n) * (mean_lifetime - 1.0);
    (mean + survive * tail_mean) / (1.0 + survive)
}

/// `max ζ(x)` over `resolution` evenly spaced thresholds spanning the sample range.
pub fn mortal_gamma_grid(samples: &[f64], mean_lifetime: f64, resolution: usize) -> f64 {
    let resolution = resolution.max(10);
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..resolution)
        .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
        .map(|x| mortal_zeta(x, samples, mean_lifetime))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmContext, DecisionSet, Noise};
    use proptest::prelude::*;

    fn ranked(means: &[f64]) -> RankedMeans {
        RankedMeans::new(means)
    }

    /// Exhaustive argmin of `g` over admissible subsets; returns (value, subset).
    fn brute_force(gamma: f64, delay: f64, cost: f64, means: &[f64], n: &ConstraintSet) -> Option<(f64, Vec<usize>)> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 0u32..(1 << means.len()) {
            let subset: Vec<usize> = (0..means.len()).filter(|i| mask & (1 << i) != 0).collect();
            if !n.contains(subset.len()) {
                continue;
            }
            let sel: Vec<f64> = subset.iter().map(|&i| means[i]).collect();
            let v = g_value(gamma, delay, cost, &sel);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, subset));
            }
        }
        best
    }

    #[test]
    fn h_examples() {
        let mu = ranked(&[0.5, -0.3]);
        let r = h_value(0.0, 1.0, 0.0, &mu, &ConstraintSet::NonNegative).unwrap();
        assert_eq!((r.value, r.count), (-0.5, 1));
        let r = h_value(1.0, 1.0, 0.0, &mu, &ConstraintSet::NonNegative).unwrap();
        assert_eq!((r.value, r.count), (1.0, 0));
        let empty = ranked(&[]);
        let r = h_value(0.7, 2.0, 0.3, &empty, &ConstraintSet::NonNegative).unwrap();
        assert_eq!(r.value, 2.0 * 0.7 + 0.3);
        assert!(matches!(
            h_value(0.0, 1.0, 0.0, &empty, &ConstraintSet::Positive),
            Err(Error::EmptyActionSpace(0))
        ));
    }

    #[test]
    fn g_examples() {
        assert!((g_value(0.1, 2.0, 0.3, &[]) - 0.5).abs() < 1e-15);
        assert_eq!(g_value(0.0, 1.0, 0.0, &[1.0, 0.5]), -1.5);
    }

    #[test]
    fn selection_examples() {
        let mu = ranked(&[0.9, 0.5, 0.1]);
        let sel = optimal_selection(0.3, 1.0, 0.0, &mu, &ConstraintSet::NonNegative).unwrap();
        assert_eq!(sel, vec![0, 1]);
        let sel = optimal_selection(-2.0, 1.0, 0.0, &mu, &ConstraintSet::NonNegative).unwrap();
        assert_eq!(sel, vec![0, 1, 2]);
        let mu = ranked(&[0.1, 0.9, 0.5]);
        for gamma in [-1.0, 0.0, 0.95, 3.0] {
            let sel = optimal_selection(gamma, 2.0, 0.4, &mu, &ConstraintSet::explicit([1])).unwrap();
            assert_eq!(sel, vec![1]);
        }
    }

    #[test]
    fn arm_equal_to_rate_is_excluded() {
        let mu = ranked(&[0.9, 0.25, 0.1]);
        let sel = optimal_selection(0.25, 1.0, 0.0, &mu, &ConstraintSet::NonNegative).unwrap();
        assert_eq!(sel, vec![0]);
    }

    #[test]
    fn deterministic_roots() {
        let set = DecisionSet {
            contexts: vec![ArmContext::new(0, vec![1.0])],
            delay: 1.0,
            cost: 0.0,
        };
        let env = Environment::fixed(set.clone(), vec![1.0], ConstraintSet::explicit([1]), Noise::None).unwrap();
        let sol = solve_gamma_star(&env, 1000, 0).unwrap();
        assert!((sol.gamma_star - 0.5).abs() < 1e-9);
        assert!(sol.residual.abs() < 1e-9);

        let costly = DecisionSet { cost: 1.0, ..set };
        let env = Environment::fixed(costly, vec![1.0], ConstraintSet::explicit([1]), Noise::None).unwrap();
        let sol = solve_gamma_star(&env, 1000, 0).unwrap();
        assert!(sol.gamma_star.abs() < 1e-9);
    }

    #[test]
    fn solver_iterates_stay_projected() {
        let env = Environment::linear_preset(200, 4, 3).unwrap();
        let eta = env.spec().eta();
        solve_gamma_star_traced(&env, 20_000, 1, |g| assert!(g.abs() <= eta)).unwrap();
    }

    #[test]
    fn zeta_examples() {
        let samples = [0.2, 0.8];
        assert!((mortal_zeta(0.5, &samples, 2.0) - 0.6).abs() < 1e-12);
        assert!((mortal_zeta(0.5, &samples, 1.0) - 0.5).abs() < 1e-12);
        assert!((mortal_zeta(-1.0, &samples, 4.0) - 0.5).abs() < 1e-12);
        // empty tail collapses to E[Y]
        assert!((mortal_zeta(2.0, &samples, 4.0) - 0.5).abs() < 1e-12);
        assert!((mortal_gamma_grid(&samples, 2.0, 101) - 0.6).abs() < 1e-12);
        assert!((mortal_gamma_grid(&samples, 1.0, 10) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mortal_residual_matches_folded_form() {
        // Zero-delay mortal residual with N = ℕ equals the folded set with
        // delay 1, cost −Y, L−1 arms and N = ℕ0.
        for &(gamma, y, life) in &[(0.3, 0.7, 4usize), (0.8, 0.2, 3), (0.5, 0.5, 1), (-0.2, 0.9, 6)] {
            let direct = h_value(gamma, 0.0, 0.0, &ranked(&vec![y; life]), &ConstraintSet::Positive).unwrap();
            let folded = h_value(gamma, 1.0, -y, &ranked(&vec![y; life - 1]), &ConstraintSet::NonNegative).unwrap();
            assert!((direct.value - folded.value).abs() < 1e-12);
        }
    }

    fn constraint_strategy() -> impl Strategy<Value = ConstraintSet> {
        prop_oneof![
            Just(ConstraintSet::NonNegative),
            Just(ConstraintSet::Positive),
            prop::collection::btree_set(0usize..=3, 1..3).prop_map(ConstraintSet::Explicit),
        ]
    }

    proptest! {
        #[test]
        fn selection_matches_exhaustive_argmin(
            means in prop::collection::vec(-1.0f64..1.0, 0..9),
            gamma in -2.0f64..2.0,
            delay in 0.1f64..5.0,
            cost in -1.0f64..1.0,
            n in constraint_strategy(),
        ) {
            let mu = ranked(&means);
            match brute_force(gamma, delay, cost, &means, &n) {
                None => prop_assert!(h_value(gamma, delay, cost, &mu, &n).is_err()),
                Some((best, _)) => {
                    let sel = optimal_selection(gamma, delay, cost, &mu, &n).unwrap();
                    let sel_means: Vec<f64> = sel.iter().map(|&i| means[i]).collect();
                    let h = h_value(gamma, delay, cost, &mu, &n).unwrap();
                    prop_assert!((g_value(gamma, delay, cost, &sel_means) - best).abs() < 1e-9);
                    prop_assert!((h.value - best).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn h_strictly_increasing(
            means in prop::collection::vec(-1.0f64..1.0, 0..10),
            gamma in -2.0f64..2.0,
            delay in 0.1f64..5.0,
            cost in -1.0f64..1.0,
        ) {
            let mu = ranked(&means);
            let lo = h_value(gamma, delay, cost, &mu, &ConstraintSet::NonNegative).unwrap();
            let hi = h_value(gamma + 0.1, delay, cost, &mu, &ConstraintSet::NonNegative).unwrap();
            prop_assert!(hi.value > lo.value);
        }

        #[test]
        fn unconstrained_selection_is_strict_threshold(
            means in prop::collection::vec(-1.0f64..1.0, 0..12),
            gamma in -1.0f64..1.0,
        ) {
            let sel = optimal_selection(gamma, 3.0, 0.2, &ranked(&means), &ConstraintSet::NonNegative).unwrap();
            let mut expected: Vec<usize> = (0..means.len()).filter(|&i| means[i] > gamma).collect();
            let mut got = sel.clone();
            expected.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn ranking_is_a_sorted_permutation(means in prop::collection::vec(-1.0f64..1.0, 0..15)) {
            let mu = ranked(&means);
            prop_assert!(mu.values().windows(2).all(|w| w[0] >= w[1]));
            let mut idx = mu.order().to_vec();
            idx.sort_unstable();
            prop_assert_eq!(idx, (0..means.len()).collect::<Vec<_>>());
        }
    }
}
