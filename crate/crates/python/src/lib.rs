//! Python bindings: the string reduction with its kernels and memory
//! integrators, the two switching scenarios, and the analysis helpers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use slipwave::hybrid::{self, HybridTrajectory, IntegratorConfig};
use slipwave::memory::{self, Forcing, KernelMode, MemoryConfig};
use slipwave::model::ModeLabel;
use slipwave::scenarios;
use slipwave::string::{StringParams, StringReduction};
use slipwave::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::InvalidParameter(_) | Error::Config(_) => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// Point-force program lambda(t).
#[pyclass(name = "Forcing")]
#[derive(Clone)]
struct PyForcing {
    inner: Forcing,
}

#[pymethods]
impl PyForcing {
    #[staticmethod]
    fn zero() -> Self {
        Self {
            inner: Forcing::Zero,
        }
    }

    #[staticmethod]
    fn constant(value: f64) -> Self {
        Self {
            inner: Forcing::Constant(value),
        }
    }

    #[staticmethod]
    fn harmonic(amp: f64, omega: f64) -> Self {
        Self {
            inner: Forcing::Harmonic { amp, omega },
        }
    }

    #[staticmethod]
    fn step(t_jump: f64, before: f64, after: f64) -> Self {
        Self {
            inner: Forcing::Step {
                t_jump,
                before,
                after,
            },
        }
    }

    fn value(&self, t: f64) -> f64 {
        self.inner.value(t)
    }
}

/// Recorded run: sample arrays plus the event log.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    #[pyo3(get)]
    t: Vec<f64>,
    #[pyo3(get)]
    y: Vec<Vec<f64>>,
    #[pyo3(get)]
    lam: Vec<f64>,
    #[pyo3(get)]
    mode: Vec<String>,
    /// (t, kind, state) triples.
    #[pyo3(get)]
    events: Vec<(f64, String, Vec<f64>)>,
    #[pyo3(get)]
    kappa_index: Option<usize>,
}

impl PyTrajectory {
    fn from_traj(tr: HybridTrajectory) -> Self {
        Self {
            t: tr.samples.iter().map(|s| s.t).collect(),
            y: tr.samples.iter().map(|s| s.y.clone()).collect(),
            lam: tr.samples.iter().map(|s| s.lambda).collect(),
            mode: tr
                .samples
                .iter()
                .map(|s| s.mode.map_or("smooth", |m| m.as_str()).to_string())
                .collect(),
            events: tr
                .events
                .iter()
                .map(|e| (e.t, e.kind.as_str().to_string(), e.state.clone()))
                .collect(),
            kappa_index: tr.kappa_index,
        }
    }
}

#[pymethods]
impl PyTrajectory {
    fn final_state(&self) -> PyResult<(f64, Vec<f64>)> {
        match (self.t.last(), self.y.last()) {
            (Some(&t), Some(y)) => Ok((t, y.clone())),
            _ => Err(PyRuntimeError::new_err("empty trajectory")),
        }
    }

    fn __len__(&self) -> usize {
        self.t.len()
    }
}

/// Modal reduction of the string with its closure coefficients and kernels.
#[pyclass(name = "StringModel")]
struct PyStringModel {
    red: StringReduction,
}

#[pymethods]
impl PyStringModel {
    #[new]
    #[pyo3(signature = (c, beta, nonlinearity, xi_star, n_modes))]
    fn new(c: f64, beta: f64, nonlinearity: f64, xi_star: f64, n_modes: usize) -> PyResult<Self> {
        let params =
            StringParams::new(c, beta, nonlinearity, xi_star, n_modes).map_err(to_py)?;
        Ok(Self {
            red: StringReduction::new(params),
        })
    }

    fn lplus(&self, cbar: f64) -> f64 {
        self.red.lplus(cbar)
    }

    fn linf(&self) -> Vec<f64> {
        self.red.linf().to_vec()
    }

    /// Returns (value, tail_bound).
    fn lminus(&self, cbar: f64) -> (f64, f64) {
        let s = self.red.lminus(cbar);
        (s.value, s.tail_bound)
    }

    fn sigma(&self, cbar: f64) -> f64 {
        self.red.sigma(cbar)
    }

    /// Returns (value, tail_bound, slow_convergence).
    fn kernel(&self, cbar: f64, t: f64, k_terms: usize) -> PyResult<(f64, f64, bool)> {
        let ev = self.red.kernel_l0(cbar, t, k_terms).map_err(to_py)?;
        Ok((ev.value, ev.tail_bound, ev.slow_convergence))
    }

    fn kernel_exp(&self, cbar: f64, t: f64) -> f64 {
        self.red.kernel_l0_exp(cbar, t)
    }

    fn wave_speed(&self, y1: Vec<f64>) -> PyResult<f64> {
        self.red.wave_speed_bar(&y1).map_err(to_py)
    }

    fn static_deflection(&self, lam: f64) -> Vec<f64> {
        self.red.static_deflection(lam)
    }

    fn lift_displacement(&self, y1: Vec<f64>, xi: f64) -> f64 {
        self.red.lift_displacement(&y1, xi)
    }

    fn modal_energy(&self, y: Vec<f64>) -> f64 {
        self.red.modal_energy(&y)
    }

    fn memory_horizon(&self) -> Option<f64> {
        self.red.default_memory_horizon()
    }

    /// Reduced model with the instantaneous gain and the relaxation state.
    #[pyo3(signature = (y0, forcing, t0, t1, dt, kappa0 = None, record_stride = 1))]
    fn simulate_kappa(
        &self,
        y0: Vec<f64>,
        forcing: &PyForcing,
        t0: f64,
        t1: f64,
        dt: f64,
        kappa0: Option<f64>,
        record_stride: usize,
    ) -> PyResult<PyTrajectory> {
        let cfg = MemoryConfig {
            dt,
            record_stride,
            ..MemoryConfig::default()
        };
        let tr = memory::simulate_kappa(&self.red, &y0, kappa0, &forcing.inner, (t0, t1), &cfg)
            .map_err(to_py)?;
        Ok(PyTrajectory::from_traj(tr))
    }

    /// Full-memory model; mode is "series" or "exponential".
    #[pyo3(signature = (y0, forcing, t0, t1, dt, mode = "series", t_mem = None, record_stride = 1))]
    fn simulate_full_memory(
        &self,
        y0: Vec<f64>,
        forcing: &PyForcing,
        t0: f64,
        t1: f64,
        dt: f64,
        mode: &str,
        t_mem: Option<f64>,
        record_stride: usize,
    ) -> PyResult<PyTrajectory> {
        let kernel = match mode {
            "series" => KernelMode::Series,
            "exponential" => KernelMode::Exponential,
            other => {
                return Err(PyValueError::new_err(format!(
                    "kernel mode is 'series' or 'exponential', got '{other}'"
                )))
            }
        };
        let cfg = MemoryConfig {
            dt,
            t_mem,
            record_stride,
            ..MemoryConfig::default()
        };
        let tr =
            memory::simulate_full_memory(&self.red, &y0, &forcing.inner, (t0, t1), &cfg, kernel)
                .map_err(to_py)?;
        Ok(PyTrajectory::from_traj(tr))
    }
}

fn integrator_config(dt: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt,
        ..IntegratorConfig::default()
    }
}

/// Dry-friction oscillator run; mode0 is "free_plus", "free_minus" or "sliding".
#[pyfunction]
#[pyo3(signature = (alpha, y0, mode0, t_end, dt = 1e-3, lambda0 = None, l_plus = 0.05, sigma = 50.0, beta = 0.03, l_inf = 1.0, v0 = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate_friction(
    alpha: f64,
    y0: Vec<f64>,
    mode0: &str,
    t_end: f64,
    dt: f64,
    lambda0: Option<f64>,
    l_plus: f64,
    sigma: f64,
    beta: f64,
    l_inf: f64,
    v0: f64,
) -> PyResult<PyTrajectory> {
    let model = scenarios::build_friction_oscillator(scenarios::FrictionParams {
        l_plus,
        sigma,
        beta,
        l_inf,
        alpha,
        v0,
    })
    .map_err(to_py)?;
    let mode = ModeLabel::parse(mode0).map_err(to_py)?;
    let tr = hybrid::simulate(&model, &y0, mode, lambda0, (0.0, t_end), &integrator_config(dt))
        .map_err(to_py)?;
    Ok(PyTrajectory::from_traj(tr))
}

/// Two-fold caricature run with the clamp semantics when stop_at_exit is set.
#[pyfunction]
#[pyo3(signature = (y0, mode0, t_end, dt = 1e-3, lambda0 = None, v_minus = -2.0, v_plus = -1.1, sigma = 10.0, l_plus = (0.05, 0.0, 0.0), stop_at_exit = true))]
#[allow(clippy::too_many_arguments)]
fn simulate_twofold(
    y0: Vec<f64>,
    mode0: &str,
    t_end: f64,
    dt: f64,
    lambda0: Option<f64>,
    v_minus: f64,
    v_plus: f64,
    sigma: f64,
    l_plus: (f64, f64, f64),
    stop_at_exit: bool,
) -> PyResult<PyTrajectory> {
    let model = scenarios::build_twofold(scenarios::TwofoldParams {
        v_minus,
        v_plus,
        sigma,
        l_plus: [l_plus.0, l_plus.1, l_plus.2],
    })
    .map_err(to_py)?;
    let mode = ModeLabel::parse(mode0).map_err(to_py)?;
    let cfg = IntegratorConfig {
        stop_at_first_exit: stop_at_exit,
        ..integrator_config(dt)
    };
    let tr = hybrid::simulate(&model, &y0, mode, lambda0, (0.0, t_end), &cfg).map_err(to_py)?;
    Ok(PyTrajectory::from_traj(tr))
}

/// Exact step-response displacement of the string at the contact point.
#[pyfunction]
fn dalembert_contact_displacement(c: f64, xi_star: f64, t: f64) -> f64 {
    scenarios::dalembert_contact_displacement(c, xi_star, t)
}

/// Classify the fast subsystem on the two-fold sliding surface.
/// Returns (kind, trace, det, disc) with kind in {"node", "focus", "saddle"}.
#[pyfunction]
fn classify_fast_equilibrium(
    y2: f64,
    y3: f64,
    sigma: f64,
    l1_plus: f64,
) -> PyResult<(String, f64, f64, f64)> {
    let c = scenarios::classify_fast_equilibrium(y2, y3, sigma, l1_plus).map_err(to_py)?;
    let kind = match c.kind {
        scenarios::FastKind::Node => "node",
        scenarios::FastKind::Focus => "focus",
        scenarios::FastKind::Saddle => "saddle",
    };
    Ok((kind.to_string(), c.trace, c.det, c.disc))
}

/// Force selected by the crossing law at approach angle phi.
#[pyfunction]
fn lambda_crossing_angle(phi: f64) -> PyResult<f64> {
    scenarios::lambda_crossing_angle(phi).map_err(to_py)
}

/// Critical force on the two-fold slow manifold, or None where it does not exist.
#[pyfunction]
fn critical_lambda_twofold(y2: f64, y3: f64) -> Option<f64> {
    scenarios::critical_lambda_twofold(y2, y3)
}

#[pymodule]
fn slipwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStringModel>()?;
    m.add_class::<PyForcing>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(simulate_friction, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_twofold, m)?)?;
    m.add_function(wrap_pyfunction!(dalembert_contact_displacement, m)?)?;
    m.add_function(wrap_pyfunction!(classify_fast_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_crossing_angle, m)?)?;
    m.add_function(wrap_pyfunction!(critical_lambda_twofold, m)?)?;
    Ok(())
}
