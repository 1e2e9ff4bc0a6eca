//! Online arm filtering with a known mean function.
//!
//! Each decision set is ranked by true mean and the top `n_j` arms are taken,
//! where `n_j` minimizes the residual at the current estimate `Γ_j`. The
//! estimate then takes a projected stochastic-approximation step with step
//! size `1/γ_j`, `γ_j` being the cumulative request delay.

use crate::env::{ConstraintSet, DecisionSet, Environment, RewardModel};
use crate::error::Result;
use crate::policy::{run_policy, Policy, RewardRng, SetOutcome};
use crate::rate::{h_value, RankedMeans, RateEstimate};
use crate::trace::Trace;

#[derive(Debug, Clone)]
pub struct OafState {
    rate: RateEstimate,
    constraint: ConstraintSet,
    sets_seen: usize,
}

impl OafState {
    pub fn new(eta: f64, constraint: ConstraintSet) -> Self {
        Self::with_rate(RateEstimate::new(eta), constraint)
    }

    pub fn with_rate(rate: RateEstimate, constraint: ConstraintSet) -> Self {
        Self {
            rate,
            constraint,
            sets_seen: 0,
        }
    }

    pub fn for_env(env: &Environment) -> Self {
        Self::new(env.spec().eta(), env.spec().constraint.clone())
    }

    pub fn sets_seen(&self) -> usize {
        self.sets_seen
    }

    /// Processes one decision set. Rewards of the selected arms are drawn
    /// (in rank order) for the log but never feed back into the policy.
    pub fn step(&mut self, set: &DecisionSet, model: &RewardModel, rng: &mut RewardRng) -> Result<SetOutcome> {
        let means: Vec<f64> = set.contexts.iter().map(|x| model.mean(x)).collect();
        let ranked = RankedMeans::new(&means);
        let residual = h_value(self.rate.gamma(), set.delay, set.cost, &ranked, &self.constraint)?;
        let selected = ranked.order()[..residual.count].to_vec();
        let rewards = selected
            .iter()
            .map(|&i| model.draw_reward(&set.contexts[i], rng))
            .collect();
        self.rate.update(residual.value, set.delay, 1.0);
        self.sets_seen += 1;
        Ok(SetOutcome { selected, rewards })
    }
}

impl Policy for OafState {
    fn process(&mut self, set: &DecisionSet, model: &RewardModel, rng: &mut RewardRng) -> Result<SetOutcome> {
        self.step(set, model, rng)
    }

    fn rate(&self) -> &RateEstimate {
        &self.rate
    }
}

/// Runs OAF from `Γ_1 = 0` until the clock passes `horizon`.
pub fn run_oaf(env: &Environment, horizon: f64, seed: u64) -> Result<Trace> {
    run_policy(&mut OafState::for_env(env), env, horizon, seed)
}
