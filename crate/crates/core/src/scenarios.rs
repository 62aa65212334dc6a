//! Concrete systems and the analysis formulas attached to them.
//!
//! Four systems are built here: the plain modal string (with its exact
//! traveling-wave oracle), the string kernel tables, the dry-friction
//! oscillator, and the two-fold caricature field. The analysis helpers cover
//! critical manifolds, fast-subsystem classification, the crossing-angle
//! force law, and sweep-based frequency response.

use crate::error::{Error, Result};
use crate::hybrid::{step_dense, Event, EventKind, HybridTrajectory, Sample};
use crate::memory::{reduced_run_for_sweep, Forcing, MemoryConfig};
use crate::model::{ClosedModel, GradFn, RhsFn, ScalarFn};
use crate::string::StringReduction;
use crate::tol;
use std::f64::consts::PI;
use std::sync::Arc;

/// Plain modal truncation of the pinned linear string: the displacement is
/// u(xi, t) = sum z_k(t) sin(k pi xi) and each mode obeys
/// zddot_k = -c^2 k^2 pi^2 z_k + 2 lambda sin(k pi xi_star).
///
/// The printed form of this expansion elsewhere omits the factor 2 and
/// evaluates the shape at xi instead of xi_star; the projection
/// z_k = 2 int u sin(k pi xi) dxi forces both, and the static-deflection
/// identity plus the step-response amplitude confirm the corrected form.
#[derive(Debug, Clone)]
pub struct LinearStringModal {
    pub c: f64,
    pub xi_star: f64,
    pub n_modes: usize,
    sin_k: Vec<f64>,
}

impl LinearStringModal {
    pub fn new(c: f64, xi_star: f64, n_modes: usize) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wave speed c must be positive, got {c}"
            )));
        }
        if !(xi_star > 0.0 && xi_star < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "contact position xi_star must lie in (0, 1), got {xi_star}"
            )));
        }
        if n_modes < 1 {
            return Err(Error::InvalidParameter(
                "at least one mode is required".into(),
            ));
        }
        let sin_k = (1..=n_modes)
            .map(|k| (k as f64 * PI * xi_star).sin())
            .collect();
        Ok(Self {
            c,
            xi_star,
            n_modes,
            sin_k,
        })
    }

    /// State layout: [z_1..z_N, zdot_1..zdot_N].
    pub fn rhs(&self, lambda: f64, z: &[f64]) -> Vec<f64> {
        let n = self.n_modes;
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(&z[n..]);
        for k in 1..=n {
            let om = self.c * k as f64 * PI;
            out[n + k - 1] = -om * om * z[k - 1] + 2.0 * lambda * self.sin_k[k - 1];
        }
        out
    }

    pub fn contact_displacement(&self, z: &[f64]) -> f64 {
        (0..self.n_modes).map(|i| z[i] * self.sin_k[i]).sum()
    }

    /// Static response to a constant force.
    pub fn static_modes(&self, lambda: f64) -> Vec<f64> {
        (1..=self.n_modes)
            .map(|k| {
                let om = self.c * k as f64 * PI;
                2.0 * lambda * self.sin_k[k - 1] / (om * om)
            })
            .collect()
    }

    /// Fixed-step 4th-order integration with panels split at forcing
    /// discontinuities (the modal system has no neutral term, so states stay
    /// continuous across them; splitting only protects the order).
    pub fn simulate(
        &self,
        z0: &[f64],
        forcing: &Forcing,
        t_span: (f64, f64),
        dt: f64,
        record_stride: usize,
    ) -> Result<HybridTrajectory> {
        if z0.len() != 2 * self.n_modes {
            return Err(Error::InvalidParameter(format!(
                "state length {} does not match 2N = {}",
                z0.len(),
                2 * self.n_modes
            )));
        }
        if !(dt > 0.0) || record_stride == 0 {
            return Err(Error::InvalidParameter(
                "modal integration needs dt > 0 and stride >= 1".into(),
            ));
        }
        let (t0, t1) = t_span;
        let mut breaks: Vec<f64> = forcing
            .jumps()
            .iter()
            .map(|(tj, _)| *tj)
            .filter(|tj| *tj > t0 && *tj < t1)
            .collect();
        breaks.push(t1);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut traj = HybridTrajectory::default();
        let mut t = t0;
        let mut z = z0.to_vec();
        let mut step_count = 0usize;
        traj.samples.push(Sample {
            t,
            y: z.clone(),
            lambda: forcing.value(t),
            mode: None,
        });
        for stop in breaks {
            let panel = stop - t;
            if panel <= 0.0 {
                continue;
            }
            let n_steps = (panel / dt).round().max(1.0) as usize;
            let h = panel / n_steps as f64;
            for _ in 0..n_steps {
                let mut rhs =
                    |tt: f64, zz: &[f64]| -> Result<Vec<f64>> { Ok(self.rhs(forcing.value(tt), zz)) };
                let (z_new, _) = step_dense(&mut rhs, t, &z, h)?;
                t += h;
                z = z_new;
                step_count += 1;
                if step_count % record_stride == 0 {
                    traj.samples.push(Sample {
                        t,
                        y: z.clone(),
                        lambda: forcing.value(t),
                        mode: None,
                    });
                }
            }
            if forcing.jumps().iter().any(|(tj, _)| (*tj - t).abs() < 1e-12) {
                traj.events.push(Event {
                    t,
                    kind: EventKind::ForceJump,
                    state: z.clone(),
                });
            }
        }
        Ok(traj)
    }
}

/// Exact contact displacement of the pinned string under a unit step force
/// switched on at t = 0, from the method of images. Summing the traveling
/// images in closed form gives a piecewise quadratic of period 2/c:
/// u(t, xi*) = [xi*(1 - xi*) - phi(ct) + (phi(ct + 2 xi*) + phi(ct - 2 xi*)) / 2] / c^2
/// with phi(x) = 1/6 - x~/2 + x~^2/4 and x~ = x mod 2.
pub fn dalembert_contact_displacement(c: f64, xi_star: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let phi = |x: f64| {
        let r = x.rem_euclid(2.0);
        1.0 / 6.0 - 0.5 * r + 0.25 * r * r
    };
    let ct = c * t;
    (xi_star * (1.0 - xi_star) - phi(ct)
        + 0.5 * (phi(ct + 2.0 * xi_star) + phi(ct - 2.0 * xi_star)))
        / (c * c)
}

#[derive(Debug, Clone, Copy)]
pub struct FrictionParams {
    pub l_plus: f64,
    pub sigma: f64,
    pub beta: f64,
    pub l_inf: f64,
    /// Slope of the velocity-weakening branch law.
    pub alpha: f64,
    /// Belt speed: the switching surface is y2 = v0.
    pub v0: f64,
}

impl FrictionParams {
    /// Reference parameter set with a chosen weakening slope.
    pub fn reference(alpha: f64) -> Self {
        Self {
            l_plus: 0.05,
            sigma: 50.0,
            beta: 0.03,
            l_inf: 1.0,
            alpha,
            v0: 1.0,
        }
    }

    /// Steady-slipping equilibrium (y1, y2, kappa) on the minus branch.
    pub fn steady_slip_state(&self) -> [f64; 3] {
        let lambda = 1.0 - self.alpha * self.v0;
        [self.l_inf * lambda / (PI * PI), 0.0, lambda]
    }
}

/// Dry-friction oscillator with the memory variable folded in:
/// state (y1, y2, kappa), surface h = y2 - v0, branch force
/// lambda = -sign(y2 - v0) + alpha (y2 - v0) tracked per branch.
pub fn build_friction_oscillator(p: FrictionParams) -> Result<ClosedModel> {
    if !(p.l_inf > 0.0 && p.sigma > 0.0) {
        return Err(Error::InvalidParameter(
            "friction model needs l_inf > 0 and sigma > 0".into(),
        ));
    }
    for (name, v) in [
        ("l_plus", p.l_plus),
        ("beta", p.beta),
        ("alpha", p.alpha),
        ("v0", p.v0),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
    }
    let FrictionParams {
        l_plus,
        sigma,
        beta,
        l_inf,
        alpha,
        v0,
    } = p;
    let smooth: RhsFn = Arc::new(move |_t, lambda, y, out| {
        let relax = sigma * (lambda - y[2]);
        out[0] = y[1];
        out[1] = -PI * PI * y[0] - 2.0 * beta * y[1] + l_inf * lambda + l_plus * relax;
        out[2] = relax;
    });
    let h: ScalarFn = Arc::new(move |y| y[1] - v0);
    let grad_h: GradFn = Arc::new(|_y, g| {
        g.fill(0.0);
        g[1] = 1.0;
    });
    let lam = move |sign: f64| -> ScalarFn {
        Arc::new(move |y: &[f64]| -sign + alpha * (y[1] - v0))
    };
    let grad_lam: GradFn = Arc::new(move |_y, g| {
        g.fill(0.0);
        g[1] = alpha;
    });
    Ok(ClosedModel {
        dim: 3,
        name: "friction".into(),
        kappa_index: Some(2),
        smooth_rhs: smooth,
        lplus: vec![0.0, l_plus, 0.0],
        h,
        grad_h,
        lambda_plus: lam(1.0),
        lambda_minus: lam(-1.0),
        grad_lambda_plus: grad_lam.clone(),
        grad_lambda_minus: grad_lam,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TwofoldParams {
    pub v_minus: f64,
    pub v_plus: f64,
    pub sigma: f64,
    pub l_plus: [f64; 3],
}

impl TwofoldParams {
    pub fn reference() -> Self {
        Self {
            v_minus: -2.0,
            v_plus: -1.1,
            sigma: 10.0,
            l_plus: [0.05, 0.0, 0.0],
        }
    }
}

/// Two-fold caricature field: state (y1, y2, y3, kappa), surface h = y1,
/// constant branch forces lambda = -sign(y1). The closure correction
/// -sigma L+ (lambda - kappa) is applied componentwise.
pub fn build_twofold(p: TwofoldParams) -> Result<ClosedModel> {
    if !(p.sigma > 0.0) {
        return Err(Error::InvalidParameter(
            "two-fold model needs sigma > 0".into(),
        ));
    }
    let TwofoldParams {
        v_minus,
        v_plus,
        sigma,
        l_plus,
    } = p;
    let smooth: RhsFn = Arc::new(move |_t, lambda, y, out| {
        let relax = sigma * (lambda - y[3]);
        out[0] = y[2] - y[1] + lambda * (y[2] + y[1]) - l_plus[0] * relax;
        out[1] = 1.0 + v_minus + lambda * (v_minus - 1.0) - l_plus[1] * relax;
        out[2] = v_plus + 1.0 + lambda * (1.0 - v_plus) - l_plus[2] * relax;
        out[3] = relax;
    });
    let h: ScalarFn = Arc::new(|y| y[0]);
    let grad_h: GradFn = Arc::new(|_y, g| {
        g.fill(0.0);
        g[0] = 1.0;
    });
    let const_lambda = |v: f64| -> ScalarFn { Arc::new(move |_y: &[f64]| v) };
    let zero_grad: GradFn = Arc::new(|_y, g| g.fill(0.0));
    Ok(ClosedModel {
        dim: 4,
        name: "twofold".into(),
        kappa_index: Some(3),
        smooth_rhs: smooth,
        lplus: vec![l_plus[0], l_plus[1], l_plus[2], 0.0],
        h,
        grad_h,
        lambda_plus: const_lambda(-1.0),
        lambda_minus: const_lambda(1.0),
        grad_lambda_plus: zero_grad.clone(),
        grad_lambda_minus: zero_grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastKind {
    Node,
    Focus,
    Saddle,
}

/// Classification of the fast (lambda, kappa) subsystem equilibrium on the
/// sliding surface of the two-fold, with its eigenvalue summary.
#[derive(Debug, Clone, Copy)]
pub struct FastEquilibriumClass {
    pub kind: FastKind,
    pub trace: f64,
    pub det: f64,
    pub disc: f64,
}

/// Classify by the 2x2 Jacobian of the fast subsystem: trace -(y2+y3),
/// determinant sigma L1+ (y2+y3). Saddle below s = 0, node above s = 4 sigma L1+,
/// focus in between.
pub fn classify_fast_equilibrium(
    y2: f64,
    y3: f64,
    sigma: f64,
    l1_plus: f64,
) -> Result<FastEquilibriumClass> {
    if !(sigma * l1_plus > 0.0) {
        return Err(Error::InvalidParameter(
            "classification needs sigma * L1+ > 0".into(),
        ));
    }
    let s = y2 + y3;
    let margin = s - 4.0 * sigma * l1_plus;
    if s.abs() < tol::CLASSIFY_MARGIN || margin.abs() < tol::CLASSIFY_MARGIN {
        return Err(Error::DegenerateClassification { s, margin });
    }
    let trace = -s;
    let det = sigma * l1_plus * s;
    let disc = s * margin;
    let kind = if s < 0.0 {
        FastKind::Saddle
    } else if margin > 0.0 {
        FastKind::Node
    } else {
        FastKind::Focus
    };
    Ok(FastEquilibriumClass {
        kind,
        trace,
        det,
        disc,
    })
}

/// Force selected by the crossing law as a function of the approach angle:
/// (sin phi - cos phi) / (sin phi + cos phi).
pub fn lambda_crossing_angle(phi: f64) -> Result<f64> {
    let denominator = phi.sin() + phi.cos();
    if denominator.abs() < 1e-12 {
        return Err(Error::DividesByZero { phi, denominator });
    }
    Ok((phi.sin() - phi.cos()) / denominator)
}

/// Critical force on the two-fold's slow manifold: (y2 - y3)/(y2 + y3),
/// defined where y2 y3 >= 0 and y2 + y3 != 0 (there |lambda| <= 1 holds
/// automatically). None means the manifold does not exist at this state.
pub fn critical_lambda_twofold(y2: f64, y3: f64) -> Option<f64> {
    if y2 * y3 >= 0.0 && y2 + y3 != 0.0 {
        Some((y2 - y3) / (y2 + y3))
    } else {
        None
    }
}

/// Slow drift on the two-fold's critical manifold with the force slaved to
/// critical_lambda_twofold. Integrates (y2, y3) until |y| <= r_stop and
/// returns the final state with the slaved force there.
pub fn slow_twofold_approach(
    p: TwofoldParams,
    start: (f64, f64),
    dt: f64,
    r_stop: f64,
    t_max: f64,
) -> Result<(f64, f64, f64)> {
    let mut rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let lambda = critical_lambda_twofold(y[0], y[1]).ok_or(Error::NoRoot {
            coefficient: y[0] + y[1],
        })?;
        Ok(vec![
            1.0 + p.v_minus + lambda * (p.v_minus - 1.0),
            p.v_plus + 1.0 + lambda * (1.0 - p.v_plus),
        ])
    };
    let mut t = 0.0;
    let mut y = vec![start.0, start.1];
    while t < t_max {
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if r <= r_stop {
            let lambda = critical_lambda_twofold(y[0], y[1]).ok_or(Error::NoRoot {
                coefficient: y[0] + y[1],
            })?;
            return Ok((y[0], y[1], lambda));
        }
        // shrink steps near the origin so the stop radius is not overshot
        let h = dt.min(0.2 * r.max(r_stop));
        let (y_new, _) = step_dense(&mut rhs, t, &y, h)?;
        t += h;
        y = y_new;
    }
    Err(Error::NoConvergence {
        omega: 0.0,
        periods: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy)]
pub enum SweepBackend {
    /// Reduced kappa model; the gain scale supports closure-free comparisons.
    Kappa { lplus_scale: f64 },
    /// Full convolution with the series kernel.
    FullMemory,
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    /// Forcing amplitude (lambda = amp sin(omega t)).
    pub amplitude: f64,
    /// Requested step; rounded per frequency to an integer count per period.
    pub dt: f64,
    /// Minimum settle length before steadiness is tested.
    pub min_periods: usize,
    /// Cap before the point is declared non-convergent.
    pub max_periods: usize,
    /// Relative spread of the trailing amplitude samples accepted as steady.
    pub steady_rel: f64,
    /// Lower bound on time resolution per forcing period.
    pub steps_per_period_min: usize,
    /// Periods per amplitude sample. One compares period by period, which
    /// rejects subharmonic and quasi-periodic responses; a window spanning
    /// the recurrence accepts them at their envelope amplitude.
    pub steady_window: usize,
    /// Trailing amplitude samples compared for steadiness.
    pub steady_span: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            amplitude: 2.5,
            dt: 2e-3,
            min_periods: 20,
            max_periods: 600,
            steady_rel: tol::SWEEP_STEADY_REL,
            steps_per_period_min: 200,
            steady_window: 1,
            steady_span: 10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub omega: f64,
    /// Half the steady peak-to-peak excursion of the contact displacement.
    pub amplitude: f64,
    pub periods: usize,
}

/// Amplitude response by sweeping simulation: each frequency is integrated
/// until the windowed amplitude of the contact displacement is steady over
/// the trailing span, and its final state seeds the next frequency.
/// `omegas` may be in any order; the sweep direction orders them.
pub fn frequency_sweep(
    red: &StringReduction,
    backend: SweepBackend,
    omegas: &[f64],
    direction: SweepDirection,
    settings: &SweepSettings,
) -> Result<Vec<SweepPoint>> {
    if omegas.is_empty() {
        return Ok(Vec::new());
    }
    let window = settings.steady_window.max(1);
    let span = settings.steady_span.max(2);
    let mut order: Vec<f64> = omegas.to_vec();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if direction == SweepDirection::Down {
        order.reverse();
    }
    let n = red.n_modes();
    let mut seed = vec![0.0; 2 * n];
    let mut points = Vec::with_capacity(order.len());
    for &omega in &order {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sweep frequencies must be positive, got {omega}"
            )));
        }
        let period = 2.0 * PI / omega;
        let steps_per_period = ((period / settings.dt).round() as usize)
            .max(settings.steps_per_period_min)
            .max(1);
        let cfg = MemoryConfig {
            dt: period / steps_per_period as f64,
            record_stride: usize::MAX,
            ..MemoryConfig::default()
        };
        let forcing = Forcing::Harmonic {
            amp: settings.amplitude,
            omega,
        };
        let (full, scale) = match backend {
            SweepBackend::Kappa { lplus_scale } => (false, lplus_scale),
            SweepBackend::FullMemory => (true, 1.0),
        };
        let mut run = reduced_run_for_sweep(red, &seed, forcing, 0.0, &cfg, full, scale)?;
        let mut trailing: Vec<f64> = Vec::with_capacity(span);
        let mut steady: Option<(f64, usize)> = None;
        let mut p = 0;
        'point: while p < settings.max_periods {
            let mut lo = f64::MAX;
            let mut hi = f64::MIN;
            for _ in 0..window {
                if p >= settings.max_periods {
                    break 'point;
                }
                let (l, h) = run.advance(steps_per_period)?;
                lo = lo.min(l);
                hi = hi.max(h);
                p += 1;
            }
            let amp = 0.5 * (hi - lo);
            if trailing.len() == span {
                trailing.remove(0);
            }
            trailing.push(amp);
            if p >= settings.min_periods && trailing.len() == span {
                let max = trailing.iter().cloned().fold(f64::MIN, f64::max);
                let min = trailing.iter().cloned().fold(f64::MAX, f64::min);
                let mean = trailing.iter().sum::<f64>() / span as f64;
                if mean > 0.0 && (max - min) / mean < settings.steady_rel {
                    steady = Some((mean, p));
                    break;
                }
            }
        }
        let Some((amplitude, periods)) = steady else {
            return Err(Error::NoConvergence {
                omega,
                periods: settings.max_periods,
            });
        };
        seed.copy_from_slice(&run.state()[..2 * n]);
        points.push(SweepPoint {
            omega,
            amplitude,
            periods,
        });
    }
    Ok(points)
}

/// Frequencies where up and down sweeps disagree beyond the bistability
/// threshold, with the relative gap. Both inputs may be in sweep order.
pub fn flag_bistability(up: &[SweepPoint], down: &[SweepPoint]) -> Vec<(f64, f64)> {
    let mut flags = Vec::new();
    for u in up {
        if let Some(d) = down
            .iter()
            .find(|d| (d.omega - u.omega).abs() <= 1e-12 * (1.0 + u.omega.abs()))
        {
            let denom = u.amplitude.max(d.amplitude);
            if denom > 0.0 {
                let gap = (u.amplitude - d.amplitude).abs() / denom;
                if gap > tol::SWEEP_BISTABLE_REL {
                    flags.push((u.omega, gap));
                }
            }
        }
    }
    flags
}
