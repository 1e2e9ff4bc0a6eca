//! Confidence sets over regressors and the optimistic indices they induce.
//!
//! Two backends are provided: ridge regression over the linear class with an
//! ellipsoidal confidence set, and a finite regressor class with a
//! squared-distance ball around the least-squares member.

use nalgebra::{DMatrix, DVector};

use crate::env::{dot, ArmContext, Regressor};

/// Source of upper confidence bounds on the mean reward of a context.
pub trait UcbBackend {
    fn ucb(&self, x: &ArmContext) -> f64;

    /// Records the observed reward `y` for the selected context `x`.
    fn observe(&mut self, x: &ArmContext, y: f64);

    /// Number of observations so far.
    fn samples(&self) -> usize;
}

/// Confidence radius of the linear class:
/// `√β_n = √λ + √(2 log(1/δ) + d log((dλ + n)/(dλ)))`, returned squared.
pub fn beta_linear(samples: usize, lambda: f64, delta: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let growth = if dim == 0 {
        0.0
    } else {
        d * ((d * lambda + samples as f64) / (d * lambda)).ln()
    };
    let root = lambda.sqrt() + (2.0 * (1.0 / delta).ln() + growth).sqrt();
    root * root
}

/// Confidence radius of a general class with `α`-covering number `covering`:
/// `8 log(N/δ) + 2αn(8 + √(8 log(4n²/δ)))`.
pub fn beta_generic(samples: usize, covering: usize, delta: f64, alpha: f64) -> f64 {
    let base = 8.0 * (covering as f64 / delta).ln();
    if samples == 0 || alpha == 0.0 {
        return base;
    }
    let n = samples as f64;
    base + 2.0 * alpha * n * (8.0 + (8.0 * (4.0 * n * n / delta).ln()).sqrt())
}

/// Ridge regression state for the linear class.
#[derive(Debug, Clone)]
pub struct RidgeState {
    gram: DMatrix<f64>,
    /// Lower Cholesky factor of `gram`, refreshed on every update.
    factor: DMatrix<f64>,
    target: DVector<f64>,
    theta_hat: DVector<f64>,
    samples: usize,
    lambda: f64,
    delta: f64,
}

impl RidgeState {
    pub fn new(dim: usize, lambda: f64, delta: f64) -> Self {
        assert!(lambda > 0.0, "ridge parameter must be positive");
        assert!(delta > 0.0 && delta <= 1.0, "confidence level must lie in (0, 1]");
        let gram = DMatrix::identity(dim, dim) * lambda;
        let factor = DMatrix::identity(dim, dim) * lambda.sqrt();
        Self {
            gram,
            factor,
            target: DVector::zeros(dim),
            theta_hat: DVector::zeros(dim),
            samples: 0,
            lambda,
            delta,
        }
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// `V = λI + Σ x xᵀ`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `b = Σ x y`.
    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        beta_linear(self.samples, self.lambda, self.delta, self.dim())
    }

    /// Rank-one update with context `x` and reward `y`.
    pub fn update(&mut self, x: &[f64], y: f64) {
        let x = DVector::from_column_slice(x);
        self.gram.ger(1.0, &x, &x, 1.0);
        // re-symmetrize against accumulated rounding
        let sym = (&self.gram + self.gram.transpose()) * 0.5;
        self.gram = sym;
        self.target.axpy(y, &x, 1.0);
        self.samples += 1;
        let chol = self
            .gram
            .clone()
            .cholesky()
            .expect("ridge Gram matrix is positive definite");
        self.theta_hat = chol.solve(&self.target);
        self.factor = chol.unpack();
    }

    /// `‖x‖_{V⁻¹}`.
    pub fn inverse_norm(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let y = self
            .factor
            .solve_lower_triangular(&x)
            .expect("Cholesky factor has a positive diagonal");
        y.norm()
    }

    /// Exploration bonus `√β ‖x‖_{V⁻¹}`.
    pub fn bonus(&self, x: &[f64]) -> f64 {
        self.beta().sqrt() * self.inverse_norm(x)
    }

    /// `⟨θ̂, x⟩ + √β ‖x‖_{V⁻¹}`.
    pub fn ucb_linear(&self, x: &[f64]) -> f64 {
        dot(self.theta_hat.as_slice(), x) + self.bonus(x)
    }

    /// `‖θ − θ̂‖²_V`.
    pub fn distance_sq(&self, theta: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(theta) - &self.theta_hat;
        diff.dot(&(&self.gram * &diff))
    }

    /// Whether `θ` lies in the ellipsoid `‖θ − θ̂‖²_V ≤ β`.
    pub fn contains(&self, theta: &[f64]) -> bool {
        self.distance_sq(theta) <= self.beta()
    }
}

impl UcbBackend for RidgeState {
    fn ucb(&self, x: &ArmContext) -> f64 {
        self.ucb_linear(&x.features)
    }

    fn observe(&mut self, x: &ArmContext, y: f64) {
        self.update(&x.features, y);
    }

    fn samples(&self) -> usize {
        self.samples
    }
}

/// Finite regressor class with cumulative squared losses.
///
/// The feasible set after `ν` observations holds the members whose squared
/// distance to the least-squares member over the first `ν − 1` contexts is at
/// most `β_ν`. The class is its own exact cover, so the covering number is
/// `|F|` for every `α`.
#[derive(Debug, Clone)]
pub struct FiniteClassState {
    members: Vec<Regressor>,
    losses: Vec<f64>,
    best: usize,
    /// Row-major `|F|×|F|` table of `Σ (ψ_a(x_k) − ψ_b(x_k))²` over all but the latest context.
    spread: Vec<f64>,
    latest: Option<Vec<f64>>,
    samples: usize,
    delta: f64,
    alpha: f64,
}

impl FiniteClassState {
    pub fn new(members: Vec<Regressor>, delta: f64, alpha: f64) -> Self {
        assert!(!members.is_empty(), "regressor class must be nonempty");
        assert!(delta > 0.0, "confidence level must be positive");
        assert!(alpha >= 0.0, "cover radius must be non-negative");
        let k = members.len();
        Self {
            members,
            losses: vec![0.0; k],
            best: 0,
            spread: vec![0.0; k * k],
            latest: None,
            samples: 0,
            delta,
            alpha,
        }
    }

    pub fn members(&self) -> &[Regressor] {
        &self.members
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Index of the least-squares member; lowest index on ties.
    pub fn best_index(&self) -> usize {
        self.best
    }

    pub fn covering_count(&self) -> usize {
        self.members.len()
    }

    pub fn beta(&self) -> f64 {
        beta_generic(self.samples, self.covering_count(), self.delta, self.alpha)
    }

    fn spread_between(&self, a: usize, b: usize) -> f64 {
        self.spread[a * self.members.len() + b]
    }

    /// Whether member `m` lies in the current confidence set.
    pub fn is_feasible(&self, m: usize) -> bool {
        self.spread_between(m, self.best) <= self.beta()
    }

    pub fn feasible(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&m| self.is_feasible(m)).collect()
    }

    pub fn update(&mut self, x: &ArmContext, y: f64) {
        let k = self.members.len();
        let values: Vec<f64> = self.members.iter().map(|m| m.eval(x)).collect();
        for (loss, v) in self.losses.iter_mut().zip(&values) {
            *loss += (v - y) * (v - y);
        }
        if let Some(prev) = self.latest.replace(values) {
            for a in 0..k {
                for b in (a + 1)..k {
                    let d = (prev[a] - prev[b]) * (prev[a] - prev[b]);
                    self.spread[a * k + b] += d;
                    self.spread[b * k + a] += d;
                }
            }
        }
        self.best = (0..k).fold(0, |best, m| if self.losses[m] < self.losses[best] { m } else { best });
        self.samples += 1;
    }

    pub fn ucb_generic(&self, x: &ArmContext) -> f64 {
        let beta = self.beta();
        self.members
            .iter()
            .enumerate()
            .filter(|&(m, _)| self.spread_between(m, self.best) <= beta)
            .map(|(_, member)| member.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl UcbBackend for FiniteClassState {
    fn ucb(&self, x: &ArmContext) -> f64 {
        self.ucb_generic(x)
    }

    fn observe(&mut self, x: &ArmContext, y: f64) {
        self.update(x, y);
    }

    fn samples(&self) -> usize {
        self.samples
    }
}

/// Either confidence backend, selected at run time.
#[derive(Debug, Clone)]
pub enum ConfidenceBackend {
    Linear(RidgeState),
    Finite(FiniteClassState),
}

impl UcbBackend for ConfidenceBackend {
    fn ucb(&self, x: &ArmContext) -> f64 {
        match self {
            Self::Linear(s) => s.ucb(x),
            Self::Finite(s) => s.ucb(x),
        }
    }

    fn observe(&mut self, x: &ArmContext, y: f64) {
        match self {
            Self::Linear(s) => s.observe(x, y),
            Self::Finite(s) => s.observe(x, y),
        }
    }

    fn samples(&self) -> usize {
        match self {
            Self::Linear(s) => s.samples(),
            Self::Finite(s) => s.samples(),
        }
    }
}
