//! Problem data model: decision sets, selection-count constraints, declared
//! bounds, the generative set distribution and the reward model.
//!
//! Time semantics used throughout the crate: requesting a decision set takes
//! its delay `S`, and every arm selected from it takes exactly one unit of
//! time. Events are stamped at their completion instant.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{bound, Error, Result};

/// Slack allowed when checking `‖x‖ ≤ 1` and `|ψ*(x)| ≤ 1` on stored floats.
const NORM_SLACK: f64 = 1e-12;

/// Largest context dimension the crate is designed for.
pub const MAX_DIM: usize = 64;

/// Feature vector of one arm. `id` indexes tabulated regressors and rating
/// lists; it is the catalog row for catalog-backed environments.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmContext {
    pub id: usize,
    pub features: Vec<f64>,
}

impl ArmContext {
    pub fn new(id: usize, features: Vec<f64>) -> Self {
        Self { id, features }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn norm(&self) -> f64 {
        self.features.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One requested batch of arms together with its request delay and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    pub contexts: Vec<ArmContext>,
    pub delay: f64,
    pub cost: f64,
}

impl DecisionSet {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}

/// Admissible numbers of arms selected from one decision set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintSet {
    /// `ℕ0`: any count, including zero.
    NonNegative,
    /// `ℕ`: at least one arm.
    Positive,
    Explicit(BTreeSet<usize>),
}

impl ConstraintSet {
    pub fn explicit(counts: impl IntoIterator<Item = usize>) -> Self {
        Self::Explicit(counts.into_iter().collect())
    }

    pub fn contains(&self, n: usize) -> bool {
        match self {
            Self::NonNegative => true,
            Self::Positive => n >= 1,
            Self::Explicit(set) => set.contains(&n),
        }
    }

    pub fn min_count(&self) -> Option<usize> {
        match self {
            Self::NonNegative => Some(0),
            Self::Positive => Some(1),
            Self::Explicit(set) => set.first().copied(),
        }
    }

    /// Smallest admissible count strictly greater than `n`.
    pub fn next_after(&self, n: usize) -> Option<usize> {
        match self {
            Self::NonNegative | Self::Positive => Some(n + 1),
            Self::Explicit(set) => set.range(n + 1..).next().copied(),
        }
    }

    /// Whether `N ∩ [L]` is nonempty.
    pub fn admits(&self, arms: usize) -> bool {
        self.min_count().is_some_and(|m| m <= arms)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonNegative => f.write_str("N0"),
            Self::Positive => f.write_str("N"),
            Self::Explicit(set) => {
                let items: Vec<String> = set.iter().map(ToString::to_string).collect();
                write!(f, "{{{}}}", items.join(","))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ConstraintRepr {
    Named(String),
    Explicit(Vec<usize>),
}

impl Serialize for ConstraintSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Self::NonNegative => ConstraintRepr::Named("N0".into()),
            Self::Positive => ConstraintRepr::Named("N".into()),
            Self::Explicit(set) => ConstraintRepr::Explicit(set.iter().copied().collect()),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConstraintSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match ConstraintRepr::deserialize(deserializer)? {
            ConstraintRepr::Named(name) => match name.as_str() {
                "N0" => Ok(Self::NonNegative),
                "N" => Ok(Self::Positive),
                other => Err(serde::de::Error::custom(format!(
                    "unknown constraint set `{other}`, expected \"N0\", \"N\" or a list of counts"
                ))),
            },
            ConstraintRepr::Explicit(counts) => Ok(Self::explicit(counts)),
        }
    }
}

/// Declared bounds of a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    /// `l`: maximum number of arms per decision set.
    pub max_arms: usize,
    /// `τ`: lower bound on the request delay.
    pub min_delay: f64,
    /// `s`: upper bound on the request delay.
    pub max_delay: f64,
    /// `c`: bound on the absolute request cost.
    pub cost_bound: f64,
    pub constraint: ConstraintSet,
    pub dim: usize,
    eta: f64,
}

impl ProblemSpec {
    pub fn new(
        max_arms: usize,
        min_delay: f64,
        max_delay: f64,
        cost_bound: f64,
        constraint: ConstraintSet,
        dim: usize,
    ) -> Result<Self> {
        if !(min_delay.is_finite() && min_delay > 0.0) {
            return Err(bound("tau"));
        }
        if !(max_delay.is_finite() && max_delay >= min_delay) {
            return Err(bound("s"));
        }
        if !(cost_bound.is_finite() && cost_bound > 0.0) {
            return Err(bound("c"));
        }
        if dim > MAX_DIM {
            return Err(bound("d"));
        }
        if constraint.min_count().is_none() {
            return Err(bound("N"));
        }
        Ok(Self {
            max_arms,
            min_delay,
            max_delay,
            cost_bound,
            constraint,
            dim,
            eta: (cost_bound / min_delay).max(1.0),
        })
    }

    /// Projection radius `η = max(c/τ, 1)`; `|Γ*| ≤ η` always holds.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `a = max(1, s)`, the largest gap between the clock and completed sojourns.
    pub fn clock_slack(&self) -> f64 {
        self.max_delay.max(1.0)
    }
}

/// Mean-reward function over contexts.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    /// `x ↦ ⟨θ, x⟩`.
    Linear(Vec<f64>),
    /// Tabulated value per context id.
    Table(Arc<[f64]>),
}

impl Regressor {
    pub fn eval(&self, x: &ArmContext) -> f64 {
        match self {
            Self::Linear(theta) => dot(theta, &x.features),
            Self::Table(values) => values[x.id],
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reward noise around the mean.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    None,
    Gaussian {
        sd: f64,
    },
    /// Uniform on `[-half_width, half_width]`; 1-subgaussian for `half_width ≤ 1`.
    Uniform {
        half_width: f64,
    },
    /// Reward is a uniformly chosen stored rating of the arm (indexed by context id).
    Ratings(Arc<Vec<Vec<f64>>>),
}

/// True mean function `ψ*` together with the noise that generates rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    pub regressor: Regressor,
    pub noise: Noise,
}

impl RewardModel {
    pub fn new(regressor: Regressor, noise: Noise) -> Self {
        Self { regressor, noise }
    }

    pub fn mean(&self, x: &ArmContext) -> f64 {
        self.regressor.eval(x)
    }

    pub fn draw_reward<R: Rng + ?Sized>(&self, x: &ArmContext, rng: &mut R) -> f64 {
        match &self.noise {
            Noise::None => self.mean(x),
            Noise::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                self.mean(x) + sd * z
            }
            Noise::Uniform { half_width } => self.mean(x) + rng.random_range(-*half_width..=*half_width),
            Noise::Ratings(ratings) => {
                let list = &ratings[x.id];
                list[rng.random_range(0..list.len())]
            }
        }
    }
}

/// Distribution of the number of arms in a decision set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmCount {
    Fixed {
        value: usize,
    },
    /// Uniform over the integers `min..=max`.
    Uniform {
        min: usize,
        max: usize,
    },
}

impl ArmCount {
    fn range(&self) -> (usize, usize) {
        match *self {
            Self::Fixed { value } => (value, value),
            Self::Uniform { min, max } => (min, max),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            Self::Fixed { value } => value,
            Self::Uniform { min, max } => rng.random_range(min..=max),
        }
    }
}

/// Distribution of the request delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Delay {
    Fixed { value: f64 },
    Uniform { min: f64, max: f64 },
}

impl Delay {
    fn range(&self) -> (f64, f64) {
        match *self {
            Self::Fixed { value } => (value, value),
            Self::Uniform { min, max } => (min, max),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Fixed { value } => value,
            Self::Uniform { min, max } => rng.random_range(min..=max),
        }
    }
}

/// Distribution of the request cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cost {
    Fixed {
        value: f64,
    },
    Uniform {
        min: f64,
        max: f64,
    },
    /// Beta(alpha, beta) on `[0, 1]`.
    Beta {
        alpha: f64,
        beta: f64,
    },
}

impl Cost {
    fn range(&self) -> (f64, f64) {
        match *self {
            Self::Fixed { value } => (value, value),
            Self::Uniform { min, max } => (min, max),
            Self::Beta { .. } => (0.0, 1.0),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Fixed { value } => value,
            Self::Uniform { min, max } => rng.random_range(min..=max),
            // parameters are checked when the environment is built
            Self::Beta { alpha, beta } => Beta::new(alpha, beta).expect("validated beta parameters").sample(rng),
        }
    }
}

/// The generative distribution `D` over decision sets.
#[derive(Debug, Clone, PartialEq)]
pub enum SetDistribution {
    /// Point mass on a single decision set.
    Fixed(DecisionSet),
    /// Arms drawn uniformly without replacement from a context catalog.
    Catalog {
        contexts: Arc<Vec<ArmContext>>,
        arms: ArmCount,
        delay: Delay,
        cost: Cost,
    },
    /// Mortal bandit with identical rewards inside a set and a geometric
    /// lifetime `L` of mean `lifetime` (capped at `cap`), where at least one
    /// arm must be used.
    ///
    /// The first, mandatory selection is folded into the request: the set is
    /// emitted with delay 1, cost `-Y` and `L - 1` optional arms of mean `Y`,
    /// to be used with `N = ℕ0`. For every `Γ` this gives
    /// `min_{1≤n≤L} n(Γ - Y) = (Γ - Y) + min_{0≤m≤L-1} m(Γ - Y)`, the
    /// mortal residual with zero delay and cost under `N = ℕ`.
    Mortal {
        lifetime: f64,
        cap: usize,
        rewards: Vec<f64>,
    },
}

impl SetDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DecisionSet {
        match self {
            Self::Fixed(set) => set.clone(),
            Self::Catalog {
                contexts,
                arms,
                delay,
                cost,
            } => {
                let count = arms.sample(rng).min(contexts.len());
                let picked = index::sample(rng, contexts.len(), count);
                let chosen = picked.iter().map(|i| contexts[i].clone()).collect();
                DecisionSet {
                    contexts: chosen,
                    delay: delay.sample(rng),
                    cost: cost.sample(rng),
                }
            }
            Self::Mortal { lifetime, cap, rewards } => {
                let failures = Geometric::new(1.0 / lifetime).expect("validated lifetime").sample(rng);
                let life = (failures as usize).saturating_add(1).min(*cap);
                let which = rng.random_range(0..rewards.len());
                let y = rewards[which];
                DecisionSet {
                    contexts: vec![ArmContext::new(which, vec![y]); life - 1],
                    delay: 1.0,
                    cost: -y,
                }
            }
        }
    }

    /// Smallest and largest number of arms the distribution can produce.
    pub fn arm_count_range(&self) -> (usize, usize) {
        match self {
            Self::Fixed(set) => (set.len(), set.len()),
            Self::Catalog { contexts, arms, .. } => {
                let (lo, hi) = arms.range();
                (lo.min(contexts.len()), hi.min(contexts.len()))
            }
            Self::Mortal { cap, .. } => (0, cap - 1),
        }
    }

    pub fn delay_range(&self) -> (f64, f64) {
        match self {
            Self::Fixed(set) => (set.delay, set.delay),
            Self::Catalog { delay, .. } => delay.range(),
            Self::Mortal { .. } => (1.0, 1.0),
        }
    }

    pub fn cost_range(&self) -> (f64, f64) {
        match self {
            Self::Fixed(set) => (set.cost, set.cost),
            Self::Catalog { cost, .. } => cost.range(),
            Self::Mortal { rewards, .. } => {
                let lo = rewards.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (-hi, -lo)
            }
        }
    }

    /// Every context the distribution can emit.
    pub fn support(&self) -> Vec<ArmContext> {
        match self {
            Self::Fixed(set) => set.contexts.clone(),
            Self::Catalog { contexts, .. } => contexts.as_ref().clone(),
            Self::Mortal { rewards, .. } => rewards
                .iter()
                .enumerate()
                .map(|(i, &y)| ArmContext::new(i, vec![y]))
                .collect(),
        }
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            Self::Fixed(set) => {
                if !(set.delay.is_finite() && set.cost.is_finite()) {
                    return Err(bound("fixed set"));
                }
            }
            Self::Catalog {
                contexts,
                arms,
                delay,
                cost,
            } => {
                if contexts.is_empty() {
                    return Err(bound("catalog"));
                }
                let (lo, hi) = arms.range();
                if lo > hi {
                    return Err(bound("arms"));
                }
                let (dlo, dhi) = delay.range();
                if !(dlo.is_finite() && dhi.is_finite() && dlo <= dhi) {
                    return Err(bound("delay"));
                }
                match *cost {
                    Cost::Beta { alpha, beta } if !(alpha > 0.0 && beta > 0.0) => {
                        return Err(bound("cost"));
                    }
                    Cost::Uniform { min, max } if !(min.is_finite() && max.is_finite() && min <= max) => {
                        return Err(bound("cost"));
                    }
                    _ => {}
                }
            }
            Self::Mortal { lifetime, cap, rewards } => {
                if !(lifetime.is_finite() && *lifetime >= 1.0) {
                    return Err(bound("lifetime"));
                }
                if *cap < 1 {
                    return Err(bound("cap"));
                }
                if rewards.is_empty() || rewards.iter().any(|y| !(0.0..=1.0).contains(y)) {
                    return Err(bound("rewards"));
                }
            }
        }
        Ok(())
    }
}

/// Checks the declared bounds against the support of the set distribution.
pub fn validate_spec(spec: &ProblemSpec, sets: &SetDistribution) -> Result<()> {
    sets.check_parameters()?;
    let (lo, hi) = sets.arm_count_range();
    if hi > spec.max_arms {
        return Err(bound("l"));
    }
    let (dlo, dhi) = sets.delay_range();
    if dlo < spec.min_delay {
        return Err(bound("tau"));
    }
    if dhi > spec.max_delay {
        return Err(bound("s"));
    }
    let (clo, chi) = sets.cost_range();
    if clo < -spec.cost_bound || chi > spec.cost_bound {
        return Err(bound("c"));
    }
    if sets.support().iter().any(|x| x.dim() != spec.dim) {
        return Err(bound("d"));
    }
    // N ∩ [L] shrinks with L, so the smallest supported count is the first to fail.
    if !spec.constraint.admits(lo) {
        return Err(Error::EmptyActionSpace(lo));
    }
    Ok(())
}

/// A validated problem: declared bounds, set distribution and reward model.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: ProblemSpec,
    sets: Arc<SetDistribution>,
    model: Arc<RewardModel>,
}

impl Environment {
    pub fn new(spec: ProblemSpec, sets: SetDistribution, model: RewardModel) -> Result<Self> {
        validate_spec(&spec, &sets)?;
        let support = sets.support();
        if let Regressor::Linear(theta) = &model.regressor {
            if theta.len() != spec.dim {
                return Err(bound("theta"));
            }
            if support.iter().any(|x| x.norm() > 1.0 + NORM_SLACK) {
                return Err(bound("context norm"));
            }
        }
        if let Regressor::Table(values) = &model.regressor {
            if support.iter().any(|x| x.id >= values.len()) {
                return Err(bound("regressor table"));
            }
        }
        match &model.noise {
            Noise::Ratings(ratings) => {
                if support.iter().any(|x| ratings.get(x.id).is_none_or(|r| r.is_empty())) {
                    return Err(bound("ratings"));
                }
            }
            Noise::Gaussian { sd } if !(sd.is_finite() && *sd >= 0.0) => {
                return Err(bound("noise"));
            }
            Noise::Uniform { half_width } if !(half_width.is_finite() && *half_width >= 0.0) => {
                return Err(bound("noise"));
            }
            _ => {}
        }
        if support
            .iter()
            .any(|x| model.mean(x).is_nan() || model.mean(x).abs() > 1.0 + NORM_SLACK)
        {
            return Err(bound("mean reward"));
        }
        Ok(Self {
            spec,
            sets: Arc::new(sets),
            model: Arc::new(model),
        })
    }

    /// Reference configuration of the synthetic linear experiment: `catalog_size`
    /// contexts uniform in the unit ball of dimension `dim`, `θ*` uniform on the
    /// unit sphere, `L ~ U{6..20}`, `S ~ U[5, 10]`, `C ~ Beta(2, 3)`,
    /// standard Gaussian noise and `N = ℕ0`.
    pub fn linear_preset(catalog_size: usize, dim: usize, catalog_seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(catalog_seed);
        let theta = unit_sphere(dim, &mut rng);
        let contexts = (0..catalog_size)
            .map(|id| ArmContext::new(id, unit_ball(dim, &mut rng)))
            .collect();
        Self::linear_catalog(
            contexts,
            theta,
            ArmCount::Uniform { min: 6, max: 20 },
            Delay::Uniform { min: 5.0, max: 10.0 },
            Cost::Beta { alpha: 2.0, beta: 3.0 },
            ConstraintSet::NonNegative,
            1.0,
        )
    }

    /// Catalog environment with a linear mean function and Gaussian noise.
    /// Bounds are taken from the supports of the supplied distributions.
    pub fn linear_catalog(
        contexts: Vec<ArmContext>,
        theta: Vec<f64>,
        arms: ArmCount,
        delay: Delay,
        cost: Cost,
        constraint: ConstraintSet,
        noise_sd: f64,
    ) -> Result<Self> {
        let sets = SetDistribution::Catalog {
            contexts: Arc::new(contexts),
            arms,
            delay,
            cost,
        };
        let spec = derived_spec(&sets, constraint, theta.len())?;
        let noise = if noise_sd > 0.0 {
            Noise::Gaussian { sd: noise_sd }
        } else {
            Noise::None
        };
        Self::new(spec, sets, RewardModel::new(Regressor::Linear(theta), noise))
    }

    /// Mortal bandit with geometric lifetime of mean `lifetime` and rewards
    /// drawn uniformly from `rewards` (each in `[0, 1]`). The lifetime is
    /// capped where the geometric tail mass drops below `1e-12`.
    pub fn mortal(lifetime: f64, rewards: Vec<f64>) -> Result<Self> {
        if !(lifetime.is_finite() && lifetime >= 1.0) {
            return Err(bound("lifetime"));
        }
        let survive = 1.0 - 1.0 / lifetime;
        let cap = if survive <= 0.0 {
            1
        } else {
            ((1e-12f64).ln() / survive.ln()).ceil() as usize + 1
        };
        let sets = SetDistribution::Mortal { lifetime, cap, rewards };
        let spec = derived_spec(&sets, ConstraintSet::NonNegative, 1)?;
        Self::new(spec, sets, RewardModel::new(Regressor::Linear(vec![1.0]), Noise::None))
    }

    /// Point-mass environment: every request returns `set`. Means are
    /// tabulated by context id.
    pub fn fixed(set: DecisionSet, means: Vec<f64>, constraint: ConstraintSet, noise: Noise) -> Result<Self> {
        let dim = set.contexts.first().map_or(0, ArmContext::dim);
        let sets = SetDistribution::Fixed(set);
        let spec = derived_spec(&sets, constraint, dim)?;
        Self::new(spec, sets, RewardModel::new(Regressor::Table(means.into()), noise))
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn sets(&self) -> &SetDistribution {
        &self.sets
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn sampler(&self, seed: u64) -> EnvironmentSampler {
        EnvironmentSampler::new(Arc::clone(&self.sets), seed)
    }
}

/// Tightest bounds admitted by the support of `sets`; a zero cost bound is
/// widened to 1 since `c` must be positive.
pub fn derived_spec(sets: &SetDistribution, constraint: ConstraintSet, dim: usize) -> Result<ProblemSpec> {
    sets.check_parameters()?;
    let (_, max_arms) = sets.arm_count_range();
    let (tau, s) = sets.delay_range();
    let (clo, chi) = sets.cost_range();
    let c = clo.abs().max(chi.abs());
    ProblemSpec::new(max_arms, tau, s, if c > 0.0 { c } else { 1.0 }, constraint, dim)
}

/// Seeded IID stream of decision sets.
#[derive(Debug, Clone)]
pub struct EnvironmentSampler {
    sets: Arc<SetDistribution>,
    rng: ChaCha8Rng,
}

impl EnvironmentSampler {
    pub fn new(sets: Arc<SetDistribution>, seed: u64) -> Self {
        Self {
            sets,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample_decision_set(&mut self) -> DecisionSet {
        self.sets.sample(&mut self.rng)
    }
}

pub(crate) fn unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub(crate) fn unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let radius = rng.random::<f64>().powf(1.0 / dim as f64);
    unit_sphere(dim, rng).into_iter().map(|x| x * radius).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_set(means: &[f64], delay: f64, cost: f64) -> DecisionSet {
        DecisionSet {
            contexts: (0..means.len()).map(|i| ArmContext::new(i, vec![means[i]])).collect(),
            delay,
            cost,
        }
    }

    #[test]
    fn eta_is_max_of_cost_rate_and_one() {
        let spec = ProblemSpec::new(3, 0.5, 1.0, 1.0, ConstraintSet::NonNegative, 1).unwrap();
        assert_eq!(spec.eta(), 2.0);
        let spec = ProblemSpec::new(3, 2.0, 3.0, 1.0, ConstraintSet::NonNegative, 1).unwrap();
        assert_eq!(spec.eta(), 1.0);
    }

    #[test]
    fn malformed_bounds_are_rejected() {
        let n0 = ConstraintSet::NonNegative;
        assert!(matches!(
            ProblemSpec::new(1, 0.0, 1.0, 1.0, n0.clone(), 1),
            Err(Error::BoundViolation(f)) if f == "tau"
        ));
        assert!(matches!(
            ProblemSpec::new(1, 2.0, 1.0, 1.0, n0.clone(), 1),
            Err(Error::BoundViolation(f)) if f == "s"
        ));
        assert!(matches!(
            ProblemSpec::new(1, 1.0, 1.0, 0.0, n0, 1),
            Err(Error::BoundViolation(f)) if f == "c"
        ));
    }

    #[test]
    fn empty_action_space_reports_arm_count() {
        let sets = SetDistribution::Catalog {
            contexts: Arc::new((0..10).map(|i| ArmContext::new(i, vec![0.1])).collect()),
            arms: ArmCount::Uniform { min: 2, max: 5 },
            delay: Delay::Fixed { value: 1.0 },
            cost: Cost::Fixed { value: 0.0 },
        };
        let spec = ProblemSpec::new(5, 1.0, 1.0, 1.0, ConstraintSet::explicit([3]), 1).unwrap();
        assert!(matches!(validate_spec(&spec, &sets), Err(Error::EmptyActionSpace(2))));
    }

    #[test]
    fn support_outside_declared_bounds_is_rejected() {
        let sets = SetDistribution::Fixed(fixed_set(&[0.1, 0.2], 3.0, 0.5));
        let ok = ProblemSpec::new(2, 3.0, 3.0, 0.5, ConstraintSet::NonNegative, 1).unwrap();
        validate_spec(&ok, &sets).unwrap();
        let cases = [
            (ProblemSpec::new(1, 3.0, 3.0, 0.5, ConstraintSet::NonNegative, 1), "l"),
            (ProblemSpec::new(2, 3.5, 4.0, 0.5, ConstraintSet::NonNegative, 1), "tau"),
            (ProblemSpec::new(2, 1.0, 2.0, 0.5, ConstraintSet::NonNegative, 1), "s"),
            (ProblemSpec::new(2, 3.0, 3.0, 0.4, ConstraintSet::NonNegative, 1), "c"),
            (ProblemSpec::new(2, 3.0, 3.0, 0.5, ConstraintSet::NonNegative, 2), "d"),
        ];
        for (spec, field) in cases {
            match validate_spec(&spec.unwrap(), &sets) {
                Err(Error::BoundViolation(f)) => assert_eq!(f, field),
                other => panic!("expected violation of {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn preset_sets_respect_reference_supports() {
        let env = Environment::linear_preset(300, 5, 1).unwrap();
        assert_eq!(env.spec().max_arms, 20);
        assert_eq!(env.spec().eta(), 1.0);
        let mut sampler = env.sampler(17);
        for _ in 0..2000 {
            let set = sampler.sample_decision_set();
            assert!((6..=20).contains(&set.len()));
            assert!((5.0..=10.0).contains(&set.delay));
            assert!((0.0..=1.0).contains(&set.cost));
            let mut ids: Vec<usize> = set.contexts.iter().map(|x| x.id).collect();
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), set.len(), "arms drawn without replacement");
            for x in &set.contexts {
                assert!(x.norm() <= 1.0 + 1e-12);
                assert!(env.model().mean(x).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn point_mass_environment_returns_its_set() {
        let set = fixed_set(&[0.3, -0.2], 2.0, 0.1);
        let env = Environment::fixed(set.clone(), vec![0.3, -0.2], ConstraintSet::NonNegative, Noise::None).unwrap();
        let mut sampler = env.sampler(5);
        for _ in 0..5 {
            assert_eq!(sampler.sample_decision_set(), set);
        }
    }

    #[test]
    fn equal_seeds_give_identical_streams() {
        let env = Environment::linear_preset(100, 3, 2).unwrap();
        let mut a = env.sampler(99);
        let mut b = env.sampler(99);
        for _ in 0..200 {
            assert_eq!(a.sample_decision_set(), b.sample_decision_set());
        }
        let mut c = env.sampler(100);
        let differs = (0..20).any(|_| a.sample_decision_set() != c.sample_decision_set());
        assert!(differs);
    }

    #[test]
    fn noiseless_reward_is_the_mean() {
        let model = RewardModel::new(Regressor::Table(vec![0.4].into()), Noise::None);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(model.draw_reward(&ArmContext::new(0, vec![]), &mut rng), 0.4);
    }

    #[test]
    fn gaussian_reward_sample_mean_matches_psi() {
        let model = RewardModel::new(Regressor::Linear(vec![0.6, -0.2]), Noise::Gaussian { sd: 1.0 });
        let x = ArmContext::new(0, vec![0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| model.draw_reward(&x, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.2).abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn rating_reward_is_a_stored_rating() {
        let ratings = Arc::new(vec![vec![3.0, 5.0]]);
        let model = RewardModel::new(Regressor::Table(vec![4.0].into()), Noise::Ratings(ratings));
        let x = ArmContext::new(0, vec![0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let y = model.draw_reward(&x, &mut rng);
            assert!(y == 3.0 || y == 5.0);
        }
    }

    #[test]
    fn mortal_sets_fold_first_pull_into_request() {
        let env = Environment::mortal(5.0, vec![0.1, 0.5, 0.9]).unwrap();
        assert_eq!(env.spec().min_delay, 1.0);
        assert_eq!(env.spec().cost_bound, 0.9);
        let mut sampler = env.sampler(4);
        let mut total = 0usize;
        let n = 50_000;
        for _ in 0..n {
            let set = sampler.sample_decision_set();
            assert_eq!(set.delay, 1.0);
            for x in &set.contexts {
                assert_eq!(x.features[0], -set.cost);
            }
            total += set.len() + 1;
        }
        let mean_life = total as f64 / n as f64;
        assert!((mean_life - 5.0).abs() < 0.1, "mean lifetime {mean_life}");
    }

    #[test]
    fn constraint_set_serde_forms() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Holder {
            n: ConstraintSet,
        }
        for (text, value) in [
            ("n = \"N0\"\n", ConstraintSet::NonNegative),
            ("n = \"N\"\n", ConstraintSet::Positive),
            ("n = [1, 3]\n", ConstraintSet::explicit([1, 3])),
        ] {
            let parsed: Holder = toml::from_str(text).unwrap();
            assert_eq!(parsed.n, value);
            let back: Holder = toml::from_str(&toml::to_string(&parsed).unwrap()).unwrap();
            assert_eq!(back, parsed);
        }
        assert!(toml::from_str::<Holder>("n = \"Z\"\n").is_err());
    }

    #[test]
    fn next_admissible_count() {
        let n = ConstraintSet::explicit([2, 5]);
        assert_eq!(n.next_after(0), Some(2));
        assert_eq!(n.next_after(2), Some(5));
        assert_eq!(n.next_after(5), None);
        assert_eq!(ConstraintSet::Positive.next_after(3), Some(4));
        assert!(!n.admits(1));
        assert!(n.admits(2));
    }
}
