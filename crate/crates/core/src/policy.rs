//! Shared driver for online policies: requests sets, lays out the timeline
//! and truncates the log at the horizon.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{DecisionSet, Environment, RewardModel};
use crate::error::Result;
use crate::rate::RateEstimate;
use crate::trace::{Event, EventKind, SetRecord, Trace};

/// Generator used for reward noise, independent of the set stream.
pub type RewardRng = ChaCha8Rng;

/// Arms chosen from one decision set and the rewards they returned.
#[derive(Debug, Clone, PartialEq)]
pub struct SetOutcome {
    /// Arm indices in selection order.
    pub selected: Vec<usize>,
    pub rewards: Vec<f64>,
}

/// An online arm-selection policy driven one decision set at a time.
pub trait Policy {
    /// Chooses arms from `set`, draws their rewards and updates internal state.
    fn process(&mut self, set: &DecisionSet, model: &RewardModel, rng: &mut RewardRng) -> Result<SetOutcome>;

    fn rate(&self) -> &RateEstimate;
}

/// Seed of the reward stream paired with set-stream seed `seed`.
pub fn reward_seed(seed: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Events of one set whose request starts at `start`: the request completes
/// after its delay and each selection one unit after the previous event.
pub fn set_events(
    set_index: usize,
    start: f64,
    set: &DecisionSet,
    outcome: &SetOutcome,
    model: &RewardModel,
) -> Vec<Event> {
    let arrival = start + set.delay;
    let mut events = Vec::with_capacity(outcome.selected.len() + 1);
    events.push(Event {
        time: arrival,
        set: set_index,
        kind: EventKind::RequestDone {
            delay: set.delay,
            cost: set.cost,
        },
    });
    for (k, (&arm, &reward)) in outcome.selected.iter().zip(&outcome.rewards).enumerate() {
        events.push(Event {
            time: arrival + (k + 1) as f64,
            set: set_index,
            kind: EventKind::Selection {
                arm,
                mean: model.mean(&set.contexts[arm]),
                reward,
            },
        });
    }
    events
}

/// Runs `policy` while the clock is at most `horizon`. Events completing
/// after the horizon are dropped. Sets come from `env.sampler(seed)` and
/// rewards from a separate stream, so two policies run with the same seed
/// see the same decision sets.
pub fn run_policy<P: Policy>(policy: &mut P, env: &Environment, horizon: f64, seed: u64) -> Result<Trace> {
    let model = env.model();
    let eta = env.spec().eta();
    let mut sets = env.sampler(seed);
    let mut rng = RewardRng::seed_from_u64(reward_seed(seed));
    let mut clock = 0.0;
    let mut events = Vec::new();
    let mut records = Vec::new();
    while clock <= horizon {
        let set = sets.sample_decision_set();
        let rate = policy.rate().gamma();
        let outcome = policy.process(&set, model, &mut rng)?;
        assert!(
            policy.rate().gamma().abs() <= eta,
            "rate estimate left the projection interval"
        );
        let j = records.len();
        let new_events = set_events(j, clock, &set, &outcome, model);
        clock = new_events.last().map_or(clock, |e| e.time);
        events.extend(new_events.into_iter().filter(|e| e.time <= horizon));
        records.push(SetRecord {
            rate,
            delay: set.delay,
            cost: set.cost,
            selected: outcome.selected,
        });
    }
    Ok(Trace {
        horizon,
        events,
        sets: records,
        final_rate: policy.rate().gamma(),
    })
}
