//! Contextual online arm filtering: OAF with true means replaced by upper
//! confidence bounds that are refined while a set is being used.
//!
//! Within a decision set, arms are taken one at a time in order of current
//! UCB. After every pull the backend is updated and the unvisited arms are
//! re-scored and re-ranked. Selection continues while some larger admissible
//! count would lower
//!
//! ```text
//! φ(n) = (S + n)Γ + C − Σ_{i ≤ n} μ̄_(i)
//! ```
//!
//! where the first ranks are the already-selected arms, scored with the UCB
//! they had when selected, followed by the unvisited arms under their current
//! UCBs. The rate estimate is then updated with step `1/(ξ γ_j)`.

use crate::confidence::UcbBackend;
use crate::env::{ConstraintSet, DecisionSet, Environment, RewardModel};
use crate::error::{Error, Result};
use crate::policy::{run_policy, Policy, RewardRng, SetOutcome};
use crate::rate::RateEstimate;
use crate::trace::Trace;

/// `φ(n)` for UCBs listed in rank order, accumulated one rank at a time
/// from `S·Γ + C`.
pub fn phi_value(n: usize, gamma: f64, ranked_ucbs: &[f64], delay: f64, cost: f64) -> f64 {
    ranked_ucbs[..n]
        .iter()
        .fold(delay * gamma + cost, |acc, &u| acc + (gamma - u))
}

#[derive(Debug, Clone)]
pub struct CoafState<B> {
    rate: RateEstimate,
    backend: B,
    damping: f64,
    constraint: ConstraintSet,
}

impl<B: UcbBackend> CoafState<B> {
    /// `damping` is `ξ`; values in `(0, 1)` follow the analysed algorithm and
    /// `1` gives the undamped OAF step.
    pub fn new(backend: B, damping: f64, eta: f64, constraint: ConstraintSet) -> Self {
        assert!(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
        Self {
            rate: RateEstimate::new(eta),
            backend,
            damping,
            constraint,
        }
    }

    pub fn for_env(env: &Environment, backend: B, damping: f64) -> Self {
        Self::new(backend, damping, env.spec().eta(), env.spec().constraint.clone())
    }

    pub fn with_rate(mut self, rate: RateEstimate) -> Self {
        self.rate = rate;
        self
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn step(&mut self, set: &DecisionSet, model: &RewardModel, rng: &mut RewardRng) -> Result<SetOutcome> {
        let gamma = self.rate.gamma();
        let arms = set.len();
        let mut ucb: Vec<f64> = set.contexts.iter().map(|x| self.backend.ucb(x)).collect();
        // ranks [0, n) hold selected arms, the rest are unvisited in UCB order
        let mut rank: Vec<usize> = (0..arms).collect();
        sort_by_ucb(&mut rank, &ucb);

        let mut selected = Vec::new();
        let mut rewards = Vec::new();
        let mut phi_selected = set.delay * gamma + set.cost;
        loop {
            let n = selected.len();
            let forced = !self.constraint.contains(n);
            if !forced && !self.improves(n, phi_selected, gamma, &rank, &ucb) {
                break;
            }
            let target = self
                .constraint
                .next_after(n)
                .filter(|&t| t <= arms)
                .ok_or(Error::EmptyActionSpace(arms))?;
            for v in n..target {
                let arm = rank[v];
                let x = &set.contexts[arm];
                let y = model.draw_reward(x, rng);
                self.backend.observe(x, y);
                phi_selected += gamma - ucb[arm];
                selected.push(arm);
                rewards.push(y);
                for &i in &rank[v + 1..] {
                    ucb[i] = self.backend.ucb(&set.contexts[i]);
                }
                sort_by_ucb(&mut rank[v + 1..], &ucb);
            }
        }
        self.rate.update(phi_selected, set.delay, self.damping);
        Ok(SetOutcome { selected, rewards })
    }

    /// Whether some admissible count above `n` has strictly smaller `φ`.
    fn improves(&self, n: usize, phi_n: f64, gamma: f64, rank: &[usize], ucb: &[f64]) -> bool {
        let mut phi = phi_n;
        for (k, &i) in rank.iter().enumerate().skip(n) {
            phi += gamma - ucb[i];
            if self.constraint.contains(k + 1) && phi < phi_n {
                return true;
            }
        }
        false
    }
}

/// Descending UCB, ties to the lower arm index.
fn sort_by_ucb(rank: &mut [usize], ucb: &[f64]) {
    rank.sort_by(|&a, &b| ucb[b].total_cmp(&ucb[a]).then(a.cmp(&b)));
}

impl<B: UcbBackend> Policy for CoafState<B> {
    fn process(&mut self, set: &DecisionSet, model: &RewardModel, rng: &mut RewardRng) -> Result<SetOutcome> {
        self.step(set, model, rng)
    }

    fn rate(&self) -> &RateEstimate {
        &self.rate
    }
}

/// Runs COAF with `backend` persisted across sets until the clock passes `horizon`.
pub fn run_coaf<B: UcbBackend>(env: &Environment, backend: B, horizon: f64, damping: f64, seed: u64) -> Result<Trace> {
    run_policy(&mut CoafState::for_env(env, backend, damping), env, horizon, seed)
}
