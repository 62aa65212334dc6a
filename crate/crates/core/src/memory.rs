//! Fixed-grid integration of the reduced string models with memory.
//!
//! Two closures of the eliminated modes are supported:
//! - the full convolution with the series kernel, quadratured over a finite
//!   horizon of past force-rate samples, and
//! - the single-exponential surrogate, advanced through its auxiliary state
//!   kappa (the kappa ODE is exactly the exponential convolution).
//! The reduced kappa model itself is integrated by the same implicit
//! trapezoid stepper so the two formulations stay comparable step by step.

use crate::error::{Error, Result};
use crate::hybrid::{Event, EventKind, HybridTrajectory, Sample};
use crate::string::{KernelTable, StringReduction};
use crate::tol;
use crate::util::{all_finite, norm_inf};

/// Which memory closure `simulate_full_memory` integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// Trapezoid convolution of the series kernel over the force-rate history.
    Series,
    /// Exponential surrogate kernel, realized through its auxiliary ODE.
    Exponential,
}

/// External contact force profile. Derivatives are analytic; discontinuities
/// are listed explicitly and handled by the jump map, never by differencing.
#[derive(Debug, Clone)]
pub enum Forcing {
    Zero,
    Constant(f64),
    /// amp * sin(omega * t)
    Harmonic { amp: f64, omega: f64 },
    /// `before` for t < t_jump, `after` from t_jump on.
    Step { t_jump: f64, before: f64, after: f64 },
}

impl Forcing {
    /// Right-continuous value.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Forcing::Zero => 0.0,
            Forcing::Constant(a) => a,
            Forcing::Harmonic { amp, omega } => amp * (omega * t).sin(),
            Forcing::Step {
                t_jump,
                before,
                after,
            } => {
                if t >= t_jump {
                    after
                } else {
                    before
                }
            }
        }
    }

    /// Left limit, used when a step panel ends exactly on a discontinuity.
    pub fn value_left(&self, t: f64) -> f64 {
        match *self {
            Forcing::Step {
                t_jump,
                before,
                after,
            } => {
                if t <= t_jump {
                    before
                } else {
                    after
                }
            }
            _ => self.value(t),
        }
    }

    /// Derivative of the smooth part (jumps are carried separately).
    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            Forcing::Zero | Forcing::Constant(_) | Forcing::Step { .. } => 0.0,
            Forcing::Harmonic { amp, omega } => amp * omega * (omega * t).cos(),
        }
    }

    /// (time, delta) of every discontinuity.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        match *self {
            Forcing::Step {
                t_jump,
                before,
                after,
            } => vec![(t_jump, after - before)],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MemoryConfig {
    /// Grid step. The span is divided into a whole number of steps, so the
    /// effective step is within one part in two of this request.
    pub dt: f64,
    /// Memory horizon override; defaults to the shortest horizon meeting the
    /// kernel-mass bound.
    pub t_mem: Option<f64>,
    /// Record every k-th grid point (events are always recorded).
    pub record_stride: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_mem: None,
            record_stride: 1,
            fp_tol: tol::FIXED_POINT_TOL,
            fp_max_iter: tol::FIXED_POINT_MAX_ITER,
        }
    }
}

impl MemoryConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "memory grid step must be positive, got {}",
                self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter(
                "record stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

enum RhsKind {
    /// Reduced kappa model: kappa appended to the state, memory term -sigma L+ (lambda - kappa).
    Kappa { lplus_scale: f64 },
    /// Full-memory equation with the exponential surrogate kernel, advanced
    /// through the same auxiliary state.
    FullExp,
    /// Full-memory equation with the series kernel via history convolution.
    FullSeries,
}

struct SeriesState<'a> {
    table: &'a KernelTable,
    ring_len: usize,
    /// Quadrature weights: kernel at lags 0..=ring_len for the cached speed.
    weights: Vec<f64>,
    cbar_cache: f64,
    /// Force-rate samples at every grid node since the start.
    ld_hist: Vec<f64>,
    /// Discontinuities already applied, as (time, delta).
    jumps_seen: Vec<(f64, f64)>,
}

impl SeriesState<'_> {
    fn refresh_weights(&mut self, cbar: f64, dt: f64) {
        self.cbar_cache = cbar;
        for j in 0..=self.ring_len {
            self.weights[j] = self.table.sample(cbar * j as f64 * dt);
        }
    }
}

pub(crate) struct ReducedRun<'a> {
    red: &'a StringReduction,
    forcing: Forcing,
    kind: RhsKind,
    dt: f64,
    fp_tol: f64,
    fp_max_iter: usize,
    record_stride: usize,
    t0: f64,
    node: usize,
    x: Vec<f64>,
    f_t: Vec<f64>,
    series: Option<SeriesState<'a>>,
    /// Pending discontinuities as (grid node, delta), ascending.
    jumps: Vec<(usize, f64)>,
    traj: HybridTrajectory,
}

impl<'a> ReducedRun<'a> {
    fn new(
        red: &'a StringReduction,
        x0: Vec<f64>,
        forcing: Forcing,
        t0: f64,
        cfg: &MemoryConfig,
        kind: RhsKind,
        series: Option<SeriesState<'a>>,
    ) -> Result<Self> {
        cfg.validate()?;
        let kappa_index = match kind {
            RhsKind::FullSeries => None,
            _ => Some(2 * red.n_modes()),
        };
        let mut jumps: Vec<(usize, f64)> = forcing
            .jumps()
            .into_iter()
            .filter(|(tj, _)| *tj >= t0)
            .map(|(tj, d)| (((tj - t0) / cfg.dt).round() as usize, d))
            .collect();
        jumps.sort_by_key(|(n, _)| *n);
        let mut run = Self {
            red,
            forcing,
            kind,
            dt: cfg.dt,
            fp_tol: cfg.fp_tol,
            fp_max_iter: cfg.fp_max_iter,
            record_stride: cfg.record_stride,
            t0,
            node: 0,
            x: x0,
            f_t: Vec::new(),
            series,
            jumps,
            traj: HybridTrajectory {
                kappa_index,
                ..Default::default()
            },
        };
        run.record_sample();
        run.apply_due_jumps()?;
        if let Some(s) = &mut run.series {
            s.ld_hist.push(run.forcing.deriv(t0));
        }
        run.f_t = run.assemble(t0, &run.x, run.forcing.value(t0), run.forcing.deriv(t0), 0.0)?;
        Ok(run)
    }

    fn t(&self) -> f64 {
        self.t0 + self.node as f64 * self.dt
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    fn record_sample(&mut self) {
        let t = self.t();
        self.traj.samples.push(Sample {
            t,
            y: self.x.clone(),
            lambda: self.forcing.value(t),
            mode: None,
        });
    }

    /// Assemble the full right-hand side at one time point. `conv` is the
    /// memory convolution value there (zero for the kappa-based kinds, whose
    /// memory term lives in the state).
    fn assemble(&self, _t: f64, x: &[f64], lambda: f64, lambda_dot: f64, conv: f64) -> Result<Vec<f64>> {
        let n = self.red.n_modes();
        let y = &x[..2 * n];
        let cbar = self.red.wave_speed_bar(&y[..n])?;
        let mut out = self.red.r_string_with_speed(cbar, y);
        let linf = self.red.linf();
        for k in 0..n {
            out[n + k] += linf[k] * lambda;
        }
        match self.kind {
            RhsKind::Kappa { lplus_scale } => {
                let kappa = x[2 * n];
                let lp = self.red.lplus(cbar) * lplus_scale;
                let sigma = self.red.sigma(cbar);
                out[n] += lp * lambda_dot - sigma * lp * (lambda - kappa);
                out.push(sigma * (lambda - kappa));
            }
            RhsKind::FullExp => {
                let kappa = x[2 * n];
                let lp = self.red.lplus(cbar);
                let sigma = self.red.sigma(cbar);
                let memory = -sigma * lp * (lambda - kappa);
                out[n] += lp * lambda_dot + memory;
                out.push(sigma * (lambda - kappa));
            }
            RhsKind::FullSeries => {
                out[n] += self.red.lplus(cbar) * lambda_dot + conv;
            }
        }
        Ok(out)
    }

    /// Trapezoid convolution of the series kernel against the force-rate
    /// history, evaluated at the node `end_node` = self.node + 1. Constant
    /// during the implicit iteration because the kernel speed is frozen at
    /// the cached value.
    fn convolution_at_end(&self, t_end: f64, ld_end: f64) -> f64 {
        let Some(s) = &self.series else { return 0.0 };
        let end_node = self.node + 1;
        let m = end_node.min(s.ring_len);
        let mut acc = 0.5 * s.weights[0] * ld_end;
        for j in 1..m {
            acc += s.weights[j] * s.ld_hist[end_node - j];
        }
        acc += 0.5 * s.weights[m] * s.ld_hist[end_node - m];
        let mut conv = self.dt * acc;
        for (tj, delta) in &s.jumps_seen {
            conv += delta * s.table.sample(s.cbar_cache * (t_end - tj));
        }
        conv
    }

    fn apply_due_jumps(&mut self) -> Result<()> {
        while let Some(&(jn, delta)) = self.jumps.first() {
            if jn != self.node {
                break;
            }
            self.jumps.remove(0);
            let t = self.t();
            let n = self.red.n_modes();
            let cbar = self.red.wave_speed_bar(&self.x[..n])?;
            let scale = match self.kind {
                RhsKind::Kappa { lplus_scale } => lplus_scale,
                _ => 1.0,
            };
            // Integrating the neutral term across the discontinuity gives the
            // impulsive velocity update at the contact row.
            self.x[n] += self.red.lplus(cbar) * scale * delta;
            self.traj.events.push(Event {
                t,
                kind: EventKind::ForceJump,
                state: self.x.clone(),
            });
            if let Some(s) = &mut self.series {
                s.jumps_seen.push((t, delta));
            }
            // The committed slope is stale on both counts (state and force
            // side); rebuild it from the post-jump data.
            self.f_t = self.assemble(
                t,
                &self.x,
                self.forcing.value(t),
                self.forcing.deriv(t),
                self.convolution_at_node(),
            )?;
        }
        Ok(())
    }

    /// Convolution at the current node (used only to rebuild f_t after a
    /// jump; mirrors convolution_at_end with end_node = self.node).
    fn convolution_at_node(&self) -> f64 {
        let Some(s) = &self.series else { return 0.0 };
        if self.node == 0 {
            // History starts here; jump contributions at lag zero are part of
            // the neutral jump map, not the convolution.
            return 0.0;
        }
        let end_node = self.node;
        let m = end_node.min(s.ring_len);
        let mut acc = 0.5 * s.weights[0] * s.ld_hist[end_node];
        for j in 1..m {
            acc += s.weights[j] * s.ld_hist[end_node - j];
        }
        acc += 0.5 * s.weights[m] * s.ld_hist[end_node - m];
        let t = self.t();
        let mut conv = self.dt * acc;
        for (tj, delta) in &s.jumps_seen {
            conv += delta * s.table.sample(s.cbar_cache * (t - tj));
        }
        conv
    }

    /// Advance `n_steps` grid steps. Returns the (min, max) of the first
    /// displacement coordinate over the window, tracked at committed nodes.
    pub fn advance(&mut self, n_steps: usize) -> Result<(f64, f64)> {
        let mut y1_min = self.x[0];
        let mut y1_max = self.x[0];
        for _ in 0..n_steps {
            self.step()?;
            y1_min = y1_min.min(self.x[0]);
            y1_max = y1_max.max(self.x[0]);
        }
        Ok((y1_min, y1_max))
    }

    fn step(&mut self) -> Result<()> {
        let t = self.t();
        let t_end = t + self.dt;
        let n = self.red.n_modes();

        // Keep the frozen kernel speed within tolerance of the actual one.
        if self.series.is_some() {
            let cbar_now = self.red.wave_speed_bar(&self.x[..n])?;
            let s = self.series.as_mut().unwrap();
            if (cbar_now / s.cbar_cache - 1.0).abs() > tol::CBAR_REFRESH_REL {
                s.refresh_weights(cbar_now, self.dt);
            }
        }

        let lambda_end = self.forcing.value_left(t_end);
        let ld_end = self.forcing.deriv(t_end);
        let conv_end = self.convolution_at_end(t_end, ld_end);

        // Implicit trapezoid via fixed-point iteration, Euler predictor.
        let dim = self.x.len();
        let scale = 1.0 + norm_inf(&self.x);
        let mut x_new: Vec<f64> = (0..dim).map(|i| self.x[i] + self.dt * self.f_t[i]).collect();
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..self.fp_max_iter {
            let f_new = self.assemble(t_end, &x_new, lambda_end, ld_end, conv_end)?;
            let mut diff = 0.0_f64;
            for i in 0..dim {
                let xi = self.x[i] + 0.5 * self.dt * (self.f_t[i] + f_new[i]);
                diff = diff.max((xi - x_new[i]).abs());
                x_new[i] = xi;
            }
            residual = diff;
            if diff <= self.fp_tol * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FixedPointDivergence {
                t: t_end,
                iterations: self.fp_max_iter,
                residual,
            });
        }
        if !all_finite(&x_new) {
            return Err(Error::NonFiniteState { t: t_end });
        }

        self.x = x_new;
        self.node += 1;
        let ld_commit = self.forcing.deriv(self.t());
        if let Some(s) = &mut self.series {
            s.ld_hist.push(ld_commit);
        }
        if self.node % self.record_stride == 0 {
            self.record_sample();
        }
        // Committed slope for the next panel, on the right side of any
        // discontinuity at this node.
        self.f_t = self.assemble(
            self.t(),
            &self.x,
            self.forcing.value(self.t()),
            self.forcing.deriv(self.t()),
            self.convolution_at_node(),
        )?;
        self.apply_due_jumps()?;
        Ok(())
    }

    pub fn into_trajectory(mut self) -> HybridTrajectory {
        if self.node % self.record_stride != 0 {
            self.record_sample();
        }
        self.traj
    }
}

fn split_span(t_span: (f64, f64), dt_req: f64) -> Result<(usize, f64)> {
    let span = t_span.1 - t_span.0;
    if !(span > 0.0) {
        return Err(Error::InvalidParameter(
            "time span must have t1 > t0".into(),
        ));
    }
    let n_steps = (span / dt_req).round().max(1.0) as usize;
    Ok((n_steps, span / n_steps as f64))
}

/// Integrate the reduced kappa model: ydot - L+ lambdadot = r(y) + linf lambda
/// - sigma L+ (lambda - kappa), kappadot = sigma (lambda - kappa). kappa is
/// appended to the state; kappa0 defaults to the initial force value.
pub fn simulate_kappa(
    red: &StringReduction,
    y0: &[f64],
    kappa0: Option<f64>,
    forcing: &Forcing,
    t_span: (f64, f64),
    cfg: &MemoryConfig,
) -> Result<HybridTrajectory> {
    simulate_kappa_scaled(red, y0, kappa0, forcing, t_span, cfg, 1.0)
}

/// As `simulate_kappa` with the closure gain L+ multiplied by `lplus_scale`.
/// Scale zero reproduces the closure-free model for comparison runs.
pub fn simulate_kappa_scaled(
    red: &StringReduction,
    y0: &[f64],
    kappa0: Option<f64>,
    forcing: &Forcing,
    t_span: (f64, f64),
    cfg: &MemoryConfig,
    lplus_scale: f64,
) -> Result<HybridTrajectory> {
    let n = red.n_modes();
    if y0.len() != 2 * n {
        return Err(Error::InvalidParameter(format!(
            "state length {} does not match 2N = {}",
            y0.len(),
            2 * n
        )));
    }
    let (n_steps, dt) = split_span(t_span, cfg.dt)?;
    let cfg = MemoryConfig { dt, ..cfg.clone() };
    let mut x0 = y0.to_vec();
    x0.push(kappa0.unwrap_or_else(|| forcing.value_left(t_span.0)));
    let mut run = ReducedRun::new(
        red,
        x0,
        forcing.clone(),
        t_span.0,
        &cfg,
        RhsKind::Kappa { lplus_scale },
        None,
    )?;
    run.advance(n_steps)?;
    Ok(run.into_trajectory())
}

/// Integrate the full-memory reduced equation
/// ydot - L+ lambdadot = r(y) + linf lambda + int_0^t kernel(tau) lambdadot(t - tau) dtau
/// with the requested kernel closure.
pub fn simulate_full_memory(
    red: &StringReduction,
    y0: &[f64],
    forcing: &Forcing,
    t_span: (f64, f64),
    cfg: &MemoryConfig,
    mode: KernelMode,
) -> Result<HybridTrajectory> {
    let n = red.n_modes();
    if y0.len() != 2 * n {
        return Err(Error::InvalidParameter(format!(
            "state length {} does not match 2N = {}",
            y0.len(),
            2 * n
        )));
    }
    let (n_steps, dt) = split_span(t_span, cfg.dt)?;
    let cfg = MemoryConfig { dt, ..cfg.clone() };
    let mut run = match mode {
        KernelMode::Exponential => {
            let mut x0 = y0.to_vec();
            x0.push(forcing.value_left(t_span.0));
            ReducedRun::new(
                red,
                x0,
                forcing.clone(),
                t_span.0,
                &cfg,
                RhsKind::FullExp,
                None,
            )?
        }
        KernelMode::Series => {
            let c = red.params().c;
            let bound = tol::HORIZON_MASS_REL * red.lplus(c);
            let t_mem = match cfg.t_mem {
                Some(user) => {
                    let envelope = red.kernel_envelope(c * user);
                    if envelope > bound {
                        return Err(Error::HorizonTooShort {
                            t_mem: user,
                            envelope,
                            bound,
                        });
                    }
                    user
                }
                None => red.default_memory_horizon().ok_or(Error::HorizonTooShort {
                    t_mem: f64::INFINITY,
                    envelope: f64::INFINITY,
                    bound,
                })?,
            };
            let table = red.kernel_table()?;
            let ring_len = (t_mem / dt).ceil().max(1.0) as usize;
            let cbar0 = red.wave_speed_bar(&y0[..n])?;
            let mut series = SeriesState {
                table,
                ring_len,
                weights: vec![0.0; ring_len + 1],
                cbar_cache: cbar0,
                ld_hist: Vec::new(),
                jumps_seen: Vec::new(),
            };
            series.refresh_weights(cbar0, dt);
            ReducedRun::new(
                red,
                y0.to_vec(),
                forcing.clone(),
                t_span.0,
                &cfg,
                RhsKind::FullSeries,
                Some(series),
            )?
        }
    };
    run.advance(n_steps)?;
    Ok(run.into_trajectory())
}

pub(crate) fn reduced_run_for_sweep<'a>(
    red: &'a StringReduction,
    y0: &[f64],
    forcing: Forcing,
    t0: f64,
    cfg: &MemoryConfig,
    full_memory: bool,
    lplus_scale: f64,
) -> Result<ReducedRun<'a>> {
    let n = red.n_modes();
    if full_memory {
        let c = red.params().c;
        let bound = tol::HORIZON_MASS_REL * red.lplus(c);
        let t_mem = match cfg.t_mem {
            Some(user) => user,
            None => red.default_memory_horizon().ok_or(Error::HorizonTooShort {
                t_mem: f64::INFINITY,
                envelope: f64::INFINITY,
                bound,
            })?,
        };
        let table = red.kernel_table()?;
        let ring_len = (t_mem / cfg.dt).ceil().max(1.0) as usize;
        let cbar0 = red.wave_speed_bar(&y0[..n])?;
        let mut series = SeriesState {
            table,
            ring_len,
            weights: vec![0.0; ring_len + 1],
            cbar_cache: cbar0,
            ld_hist: Vec::new(),
            jumps_seen: Vec::new(),
        };
        series.refresh_weights(cbar0, cfg.dt);
        ReducedRun::new(
            red,
            y0.to_vec(),
            forcing,
            t0,
            cfg,
            RhsKind::FullSeries,
            Some(series),
        )
    } else {
        let mut x0 = y0.to_vec();
        x0.push(forcing.value_left(t0));
        ReducedRun::new(
            red,
            x0,
            forcing,
            t0,
            cfg,
            RhsKind::Kappa { lplus_scale },
            None,
        )
    }
}
