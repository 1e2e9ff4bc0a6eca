//! Python module `pyreqbandit`.

use std::path::{Path, PathBuf};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use reqbandit::confidence::UcbBackend;
use reqbandit::harness::config::ExperimentConfig;
use reqbandit::harness::experiment::run_experiment_on;
use reqbandit::harness::regret::time_grid;
use reqbandit::harness::{emit_report, oaf_bound_curve as bound_curve};
use reqbandit::rate::{self, RankedMeans};
use reqbandit::{confidence, env, ArmContext, ConstraintSet, DecisionSet, EventKind, Noise};

fn err(e: reqbandit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `"N0"`, `"N"` or a list of admissible counts.
#[derive(FromPyObject)]
enum ConstraintArg {
    Named(String),
    Counts(Vec<usize>),
}

impl TryFrom<ConstraintArg> for ConstraintSet {
    type Error = PyErr;

    fn try_from(arg: ConstraintArg) -> PyResult<Self> {
        match arg {
            ConstraintArg::Named(name) => match name.as_str() {
                "N0" => Ok(ConstraintSet::NonNegative),
                "N" => Ok(ConstraintSet::Positive),
                _ => Err(PyValueError::new_err(format!("unknown constraint `{name}`"))),
            },
            ConstraintArg::Counts(counts) => Ok(ConstraintSet::explicit(counts)),
        }
    }
}

/// Residual `h` and the minimizing count for unsorted `means`.
#[pyfunction]
#[pyo3(signature = (gamma, delay, cost, means, constraint = ConstraintArg::Named("N0".into())))]
fn h_value(gamma: f64, delay: f64, cost: f64, means: Vec<f64>, constraint: ConstraintArg) -> PyResult<(f64, usize)> {
    let residual =
        rate::h_value(gamma, delay, cost, &RankedMeans::new(&means), &constraint.try_into()?).map_err(err)?;
    Ok((residual.value, residual.count))
}

#[pyfunction]
fn g_value(gamma: f64, delay: f64, cost: f64, selected_means: Vec<f64>) -> f64 {
    rate::g_value(gamma, delay, cost, &selected_means)
}

/// Indices of the optimal arms, in decreasing order of mean.
#[pyfunction]
#[pyo3(signature = (gamma, delay, cost, means, constraint = ConstraintArg::Named("N0".into())))]
fn optimal_selection(
    gamma: f64,
    delay: f64,
    cost: f64,
    means: Vec<f64>,
    constraint: ConstraintArg,
) -> PyResult<Vec<usize>> {
    rate::optimal_selection(gamma, delay, cost, &RankedMeans::new(&means), &constraint.try_into()?).map_err(err)
}

#[pyfunction]
fn mortal_zeta(x: f64, samples: Vec<f64>, mean_lifetime: f64) -> f64 {
    rate::mortal_zeta(x, &samples, mean_lifetime)
}

#[pyfunction]
#[pyo3(signature = (samples, mean_lifetime, resolution = 1000))]
fn mortal_gamma_grid(samples: Vec<f64>, mean_lifetime: f64, resolution: usize) -> f64 {
    rate::mortal_gamma_grid(&samples, mean_lifetime, resolution)
}

#[pyfunction]
fn beta_linear(samples: usize, lam: f64, delta: f64, dim: usize) -> f64 {
    confidence::beta_linear(samples, lam, delta, dim)
}

#[pyfunction]
fn beta_generic(samples: usize, covering: usize, delta: f64, alpha: f64) -> f64 {
    confidence::beta_generic(samples, covering, delta, alpha)
}

#[pyfunction]
fn eluder_dimension(values: Vec<Vec<f64>>, epsilon: f64) -> PyResult<usize> {
    reqbandit::eluder_dimension_bruteforce(&values, epsilon).map_err(err)
}

#[pyclass(name = "Environment", frozen)]
struct PyEnvironment(env::Environment);

#[pymethods]
impl PyEnvironment {
    #[staticmethod]
    #[pyo3(signature = (catalog_size = 3000, dim = 5, catalog_seed = 0))]
    fn linear_preset(catalog_size: usize, dim: usize, catalog_seed: u64) -> PyResult<Self> {
        env::Environment::linear_preset(catalog_size, dim, catalog_seed)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn mortal(mean_lifetime: f64, rewards: Vec<f64>) -> PyResult<Self> {
        env::Environment::mortal(mean_lifetime, rewards).map(Self).map_err(err)
    }

    /// Every request returns the same set of arms with the given means.
    #[staticmethod]
    #[pyo3(signature = (means, delay, cost, constraint = ConstraintArg::Named("N0".into()), noise_sd = 0.0))]
    fn fixed(means: Vec<f64>, delay: f64, cost: f64, constraint: ConstraintArg, noise_sd: f64) -> PyResult<Self> {
        let set = DecisionSet {
            contexts: (0..means.len()).map(|i| ArmContext::new(i, vec![means[i]])).collect(),
            delay,
            cost,
        };
        let noise = if noise_sd > 0.0 {
            Noise::Gaussian { sd: noise_sd }
        } else {
            Noise::None
        };
        env::Environment::fixed(set, means, constraint.try_into()?, noise)
            .map(Self)
            .map_err(err)
    }

    /// Environment of a TOML experiment config; relative paths resolve
    /// against the config file.
    #[staticmethod]
    fn from_config(path: PathBuf) -> PyResult<Self> {
        let config = ExperimentConfig::load(&path).map_err(err)?;
        config
            .build_environment(path.parent().unwrap_or(Path::new("")))
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.spec().eta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.spec().dim
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let spec = self.0.spec();
        let d = PyDict::new(py);
        d.set_item("max_arms", spec.max_arms)?;
        d.set_item("min_delay", spec.min_delay)?;
        d.set_item("max_delay", spec.max_delay)?;
        d.set_item("cost_bound", spec.cost_bound)?;
        d.set_item("constraint", spec.constraint.to_string())?;
        d.set_item("dim", spec.dim)?;
        d.set_item("eta", spec.eta())?;
        Ok(d)
    }

    /// `count` decision sets from the stream with seed `seed`, each as
    /// `(features, means, delay, cost)`.
    #[allow(clippy::type_complexity)]
    fn sample(&self, seed: u64, count: usize) -> Vec<(Vec<Vec<f64>>, Vec<f64>, f64, f64)> {
        let mut sampler = self.0.sampler(seed);
        (0..count)
            .map(|_| {
                let set = sampler.sample_decision_set();
                let means = set.contexts.iter().map(|x| self.0.model().mean(x)).collect();
                let features = set.contexts.into_iter().map(|x| x.features).collect();
                (features, means, set.delay, set.cost)
            })
            .collect()
    }

    fn oaf_bound_curve(&self, grid: Vec<f64>) -> Vec<f64> {
        bound_curve(self.0.spec(), &grid)
    }
}

/// Projected stochastic-approximation estimate of `Γ*`.
#[pyfunction]
#[pyo3(signature = (environment, iterations = rate::DEFAULT_SOLVER_ITERATIONS, seed = 0))]
fn solve_gamma_star<'py>(
    py: Python<'py>,
    environment: &PyEnvironment,
    iterations: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let solution = py
        .detach(|| rate::solve_gamma_star(&environment.0, iterations, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("gamma_star", solution.gamma_star)?;
    d.set_item("residual", solution.residual)?;
    d.set_item("iterations", solution.iterations)?;
    d.set_item("eta", solution.eta)?;
    Ok(d)
}

#[pyclass(name = "RidgeState")]
struct PyRidgeState(confidence::RidgeState);

#[pymethods]
impl PyRidgeState {
    #[new]
    #[pyo3(signature = (dim, lam = 1.0, delta = 0.05))]
    fn new(dim: usize, lam: f64, delta: f64) -> Self {
        Self(confidence::RidgeState::new(dim, lam, delta))
    }

    fn update(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.check(&x)?;
        self.0.update(&x, y);
        Ok(())
    }

    fn ucb(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check(&x)?;
        Ok(self.0.ucb_linear(&x))
    }

    fn bonus(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check(&x)?;
        Ok(self.0.bonus(&x))
    }

    fn contains(&self, theta: Vec<f64>) -> PyResult<bool> {
        self.check(&theta)?;
        Ok(self.0.contains(&theta))
    }

    #[getter]
    fn theta_hat(&self) -> Vec<f64> {
        self.0.theta_hat().iter().copied().collect()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn samples(&self) -> usize {
        self.0.samples()
    }
}

impl PyRidgeState {
    fn check(&self, x: &[f64]) -> PyResult<()> {
        if x.len() == self.0.dim() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!(
                "expected a vector of length {}, got {}",
                self.0.dim(),
                x.len()
            )))
        }
    }
}

#[pyclass(name = "Trace", frozen)]
struct PyTrace(reqbandit::Trace);

#[pymethods]
impl PyTrace {
    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon
    }

    #[getter]
    fn final_rate(&self) -> f64 {
        self.0.final_rate
    }

    /// Rate estimate used for each processed set.
    #[getter]
    fn rates(&self) -> Vec<f64> {
        self.0.sets.iter().map(|s| s.rate).collect()
    }

    /// Selected arm indices of each processed set.
    #[getter]
    fn selections(&self) -> Vec<Vec<usize>> {
        self.0.sets.iter().map(|s| s.selected.clone()).collect()
    }

    /// Events as `(time, set, kind, value)`: `("request", cost)` or
    /// `("selection", mean)`.
    fn events(&self) -> Vec<(f64, usize, &'static str, f64)> {
        self.0
            .events
            .iter()
            .map(|e| match e.kind {
                EventKind::RequestDone { cost, .. } => (e.time, e.set, "request", cost),
                EventKind::Selection { mean, .. } => (e.time, e.set, "selection", mean),
            })
            .collect()
    }

    fn accumulated_mean_reward(&self, t: f64) -> f64 {
        self.0.accumulated_mean_reward(t)
    }

    fn regret(&self, gamma_star: f64, grid: Vec<f64>) -> PyResult<Vec<f64>> {
        reqbandit::harness::regret_curve(std::slice::from_ref(&self.0), gamma_star, &grid)
            .map(|c| c.mean)
            .map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.sets.len()
    }
}

#[pyfunction]
fn run_oaf(py: Python<'_>, environment: &PyEnvironment, horizon: f64, seed: u64) -> PyResult<PyTrace> {
    py.detach(|| reqbandit::run_oaf(&environment.0, horizon, seed))
        .map(PyTrace)
        .map_err(err)
}

/// COAF with the ridge-regression backend.
#[pyfunction]
#[pyo3(signature = (environment, horizon, seed, xi = 0.5, lam = 1.0, delta = 0.05))]
fn run_coaf_linear(
    py: Python<'_>,
    environment: &PyEnvironment,
    horizon: f64,
    seed: u64,
    xi: f64,
    lam: f64,
    delta: f64,
) -> PyResult<PyTrace> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(PyValueError::new_err("xi must lie in (0, 1]"));
    }
    let backend = confidence::RidgeState::new(environment.0.spec().dim, lam, delta);
    py.detach(|| reqbandit::run_coaf(&environment.0, backend, horizon, xi, seed))
        .map(PyTrace)
        .map_err(err)
}

#[pyfunction]
fn oaf_bound_curve(environment: &PyEnvironment, grid: Vec<f64>) -> Vec<f64> {
    bound_curve(environment.0.spec(), &grid)
}

/// Runs the experiment described by a TOML config and returns its regret
/// curve; writes `regret.csv` and `run.json` when `output` is given.
#[pyfunction]
#[pyo3(signature = (config_path, output = None))]
fn run_experiment<'py>(py: Python<'py>, config_path: PathBuf, output: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig::load(&config_path).map_err(err)?;
    let base = config_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let outcome = py
        .detach(|| -> reqbandit::Result<_> {
            let start = std::time::Instant::now();
            let env = config.build_environment(&base)?;
            let backend = config.build_backend(&env, &base)?;
            let outcome = run_experiment_on(&config, &env, backend.as_ref(), start)?;
            if let Some(dir) = &output {
                emit_report(&outcome, &config, &env, dir)?;
            }
            Ok(outcome)
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("gamma_star", outcome.gamma_star)?;
    d.set_item("t", outcome.curve.grid)?;
    d.set_item("mean", outcome.curve.mean)?;
    d.set_item("q05", outcome.curve.q05)?;
    d.set_item("q95", outcome.curve.q95)?;
    d.set_item("replications", outcome.curve.per_replication.len())?;
    Ok(d)
}

#[pyfunction]
fn grid(horizon: f64, points: usize) -> Vec<f64> {
    time_grid(horizon, points)
}

#[pymodule]
fn pyreqbandit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyRidgeState>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(h_value, m)?)?;
    m.add_function(wrap_pyfunction!(g_value, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_selection, m)?)?;
    m.add_function(wrap_pyfunction!(mortal_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(mortal_gamma_grid, m)?)?;
    m.add_function(wrap_pyfunction!(beta_linear, m)?)?;
    m.add_function(wrap_pyfunction!(beta_generic, m)?)?;
    m.add_function(wrap_pyfunction!(eluder_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gamma_star, m)?)?;
    m.add_function(wrap_pyfunction!(run_oaf, m)?)?;
    m.add_function(wrap_pyfunction!(run_coaf_linear, m)?)?;
    m.add_function(wrap_pyfunction!(oaf_bound_curve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(grid, m)?)?;
    Ok(())
}
