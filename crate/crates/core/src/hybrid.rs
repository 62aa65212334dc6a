//! Event-driven integration of a closed piecewise-smooth model.
//!
//! The integrator advances whichever flow is active (free flow on either side
//! of the surface, or sliding flow on it), watches the relevant switching
//! monitors through a dense-output interpolant, and performs mode transitions
//! exactly at located zeros. Every transition is logged; uniqueness of the
//! forward solution is certified at each one.

use crate::error::{Error, Result};
use crate::model::{
    eval_free_rhs, eval_sliding_rhs, eval_tangency, uniqueness_certificate, Branch, Certificate,
    ClosedModel, ModeLabel,
};
use crate::tol;
use crate::util::all_finite;

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    /// Base step; events are located inside a step by bisection.
    pub dt: f64,
    /// Time tolerance of event bisection.
    pub event_tol: f64,
    /// Allowed residual of h on sliding samples.
    pub h_tol: f64,
    /// Allowed excursion of the sliding force outside the branch bounds.
    pub lambda_tol: f64,
    /// Hard cap on logged events (chattering guard).
    pub max_events: usize,
    /// Stop at the first sliding exit instead of continuing in the new free
    /// mode. Used where a force clamp terminates the physical segment.
    pub stop_at_first_exit: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            event_tol: tol::EVENT_T,
            h_tol: tol::SURFACE_RESIDUAL,
            lambda_tol: tol::SURFACE_RESIDUAL,
            max_events: 10_000,
            stop_at_first_exit: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "integrator step dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.event_tol > 0.0 && self.h_tol > 0.0 && self.lambda_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "integrator tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    HitSigma,
    ExitToPlus,
    ExitToMinus,
    Tangency,
    ForceJump,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::HitSigma => "HIT_SIGMA",
            EventKind::ExitToPlus => "EXIT_TO_PLUS",
            EventKind::ExitToMinus => "EXIT_TO_MINUS",
            EventKind::Tangency => "TANGENCY",
            EventKind::ForceJump => "FORCE_JUMP",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    pub lambda: f64,
    /// None for runs of the smooth reduced models (no switching surface).
    pub mode: Option<ModeLabel>,
}

#[derive(Debug, Clone)]
pub struct UniquenessFlag {
    pub t: f64,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Default)]
pub struct HybridTrajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// Certificate failures encountered at events. Never silently resolved:
    /// a failure that leaves the continuation unambiguous is recorded here,
    /// an ambiguous one halts the run with NonUniqueSwitch.
    pub uniqueness_flags: Vec<UniquenessFlag>,
    /// Index of the memory variable inside y, if the model carries one.
    pub kappa_index: Option<usize>,
}

impl HybridTrajectory {
    pub fn last_state(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }
}

/// One classical 4th-order step with cubic Hermite dense output over it.
/// The dense interpolant is 4th-order accurate at the nodes and 3rd-order
/// inside the step, which is what the event bisection consumes.
pub struct DenseStep {
    pub t0: f64,
    pub dt: f64,
    y0: Vec<f64>,
    y1: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let s = ((t - self.t0) / self.dt).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (0..self.y0.len())
            .map(|i| {
                h00 * self.y0[i]
                    + h10 * self.dt * self.f0[i]
                    + h01 * self.y1[i]
                    + h11 * self.dt * self.f1[i]
            })
            .collect()
    }
}

/// Advance `state` by one RK4 step of size dt and return the end state with
/// the dense evaluator for the step. One extra RHS evaluation at the end
/// point feeds the Hermite slope.
pub fn step_dense<F>(rhs: &mut F, t: f64, state: &[f64], dt: f64) -> Result<(Vec<f64>, DenseStep)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = state.len();
    let k1 = rhs(t, state)?;
    let mut stage = vec![0.0; n];
    for i in 0..n {
        stage[i] = state[i] + 0.5 * dt * k1[i];
    }
    let k2 = rhs(t + 0.5 * dt, &stage)?;
    for i in 0..n {
        stage[i] = state[i] + 0.5 * dt * k2[i];
    }
    let k3 = rhs(t + 0.5 * dt, &stage)?;
    for i in 0..n {
        stage[i] = state[i] + dt * k3[i];
    }
    let k4 = rhs(t + dt, &stage)?;
    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if !all_finite(&y1) {
        return Err(Error::NonFiniteState { t: t + dt });
    }
    let f1 = rhs(t + dt, &y1)?;
    Ok((
        y1.clone(),
        DenseStep {
            t0: t,
            dt,
            y0: state.to_vec(),
            y1,
            f0: k1,
            f1,
        },
    ))
}

/// Bisect the earliest zero of `monitor` inside the bracket. The bracket is
/// first scanned in a few subintervals so that an even number of crossings
/// inside it cannot hide the first one.
pub fn locate_event<M>(monitor: &mut M, bracket: (f64, f64), tol_t: f64) -> Result<f64>
where
    M: FnMut(f64) -> f64,
{
    const SCAN: usize = 8;
    let (t_lo, t_hi) = bracket;
    let mut lo = t_lo;
    let mut f_lo = monitor(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut hi = t_hi;
    let mut found = false;
    for i in 1..=SCAN {
        let t = t_lo + (t_hi - t_lo) * i as f64 / SCAN as f64;
        let f = monitor(t);
        if f == 0.0 || f_lo.signum() != f.signum() {
            hi = t;
            found = true;
            break;
        }
        lo = t;
        f_lo = f;
    }
    if !found {
        return Err(Error::NoSignChange { lo: t_lo, hi: t_hi });
    }
    while hi - lo > tol_t {
        let mid = 0.5 * (lo + hi);
        let f_mid = monitor(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_lo.signum() != f_mid.signum() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton steps toward h(y) = 0 along grad h. The surface functions here are
/// mildly nonlinear at worst, so two iterations keep the residual at rounding
/// level without visibly moving the state.
fn project_onto_surface(m: &ClosedModel, y: &mut [f64]) {
    for _ in 0..3 {
        let h = m.h(y);
        if h.abs() <= 0.1 * tol::SURFACE_RESIDUAL {
            return;
        }
        let g = m.grad_h(y);
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if g2 == 0.0 {
            return;
        }
        for (yi, gi) in y.iter_mut().zip(&g) {
            *yi -= h * gi / g2;
        }
    }
}

enum Mode {
    Free(Branch),
    Sliding { lambda: f64 },
}

struct Run<'a> {
    m: &'a ClosedModel,
    cfg: &'a IntegratorConfig,
    traj: HybridTrajectory,
}

impl<'a> Run<'a> {
    fn push_event(&mut self, t: f64, kind: EventKind, state: &[f64]) -> Result<()> {
        self.traj.events.push(Event {
            t,
            kind,
            state: state.to_vec(),
        });
        if self.traj.events.len() > self.cfg.max_events {
            return Err(Error::EventOverflow {
                t,
                max_events: self.cfg.max_events,
            });
        }
        Ok(())
    }

    fn certify(&mut self, t: f64, y: &[f64]) -> Certificate {
        let cert = uniqueness_certificate(self.m, y);
        if !cert.unique {
            self.traj.uniqueness_flags.push(UniquenessFlag {
                t,
                certificate: cert,
            });
        }
        cert
    }

    fn push_sample(&mut self, t: f64, y: &[f64], lambda: f64, mode: ModeLabel) {
        self.traj.samples.push(Sample {
            t,
            y: y.to_vec(),
            lambda,
            mode: Some(mode),
        });
    }
}

/// Integrate a closed model from (t0, y0) in the given initial mode.
///
/// `lambda0` is required when starting in SLIDING (the sliding force is a
/// dynamic variable) and ignored in the free modes, where lambda is slaved to
/// the branch law.
pub fn simulate(
    m: &ClosedModel,
    y0: &[f64],
    mode0: ModeLabel,
    lambda0: Option<f64>,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<HybridTrajectory> {
    cfg.validate()?;
    if y0.len() != m.dim {
        return Err(Error::InvalidParameter(format!(
            "state length {} does not match model dimension {}",
            y0.len(),
            m.dim
        )));
    }
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(
            "time span must have t1 > t0".into(),
        ));
    }

    let h0 = m.h(y0);
    let mut mode = match mode0 {
        ModeLabel::FreePlus => {
            if h0 < -cfg.h_tol {
                return Err(Error::InvalidParameter(format!(
                    "mode free_plus requires h(y0) >= 0, got h = {h0}"
                )));
            }
            Mode::Free(Branch::Plus)
        }
        ModeLabel::FreeMinus => {
            if h0 > cfg.h_tol {
                return Err(Error::InvalidParameter(format!(
                    "mode free_minus requires h(y0) <= 0, got h = {h0}"
                )));
            }
            Mode::Free(Branch::Minus)
        }
        ModeLabel::Sliding => {
            if h0.abs() > cfg.h_tol {
                return Err(Error::InvalidParameter(format!(
                    "mode sliding requires |h(y0)| <= {}, got h = {h0}",
                    cfg.h_tol
                )));
            }
            let lambda = lambda0.ok_or_else(|| {
                Error::InvalidParameter("sliding start requires an initial lambda".into())
            })?;
            let (lo, hi) = branch_bounds(m, y0);
            if lambda < lo - cfg.lambda_tol || lambda > hi + cfg.lambda_tol {
                return Err(Error::InvalidParameter(format!(
                    "initial sliding lambda {lambda} outside branch bounds [{lo}, {hi}]"
                )));
            }
            Mode::Sliding { lambda }
        }
    };

    let mut run = Run {
        m,
        cfg,
        traj: HybridTrajectory {
            kappa_index: m.kappa_index,
            ..Default::default()
        },
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    // Chattering guard: the surface monitor in a free mode only arms once the
    // state is clearly off the surface.
    let mut armed = h0.abs() > tol::REARM_FACTOR * cfg.h_tol;

    match &mode {
        Mode::Free(b) => run.push_sample(t, &y, m.lambda(*b, &y), b.mode()),
        Mode::Sliding { lambda } => run.push_sample(t, &y, *lambda, ModeLabel::Sliding),
    }

    let t_end_eps = 1e-12 * (1.0 + t1.abs());
    while t < t1 - t_end_eps {
        let dt = cfg.dt.min(t1 - t);
        match mode {
            Mode::Free(branch) => {
                let mut rhs = |tt: f64, yy: &[f64]| eval_free_rhs(m, tt, yy, branch);
                let (y_end, dense) = step_dense(&mut rhs, t, &y, dt)?;
                let h_start = m.h(&y);
                let h_end = m.h(&y_end);
                if !armed && h_start.abs() > tol::REARM_FACTOR * cfg.h_tol {
                    armed = true;
                }
                let crossed = armed && (h_start > 0.0) != (h_end > 0.0);
                if crossed {
                    let te = locate_event(
                        &mut |tt| m.h(&dense.eval(tt)),
                        (t, t + dt),
                        cfg.event_tol,
                    )?;
                    let mut ye = dense.eval(te);
                    project_onto_surface(m, &mut ye);
                    run.push_event(te, EventKind::HitSigma, &ye)?;
                    run.certify(te, &ye);
                    // A vanishing tangency indicator at the located time is a
                    // grazing contact; log it alongside the hit.
                    let big_h = eval_tangency(m, te, &ye, branch);
                    if big_h.abs() < 1e-8 {
                        run.push_event(te, EventKind::Tangency, &ye)?;
                    }
                    let lambda_in = m.lambda(branch, &ye);
                    run.push_sample(te, &ye, lambda_in, ModeLabel::Sliding);
                    t = te;
                    y = ye;
                    mode = Mode::Sliding { lambda: lambda_in };
                    armed = true;
                } else {
                    t += dt;
                    y = y_end;
                    run.push_sample(t, &y, m.lambda(branch, &y), branch.mode());
                }
            }
            Mode::Sliding { lambda } => {
                let mut z: Vec<f64> = y.clone();
                z.push(lambda);
                let n = m.dim;
                let mut rhs = |tt: f64, zz: &[f64]| -> Result<Vec<f64>> {
                    let (ld, yd) = eval_sliding_rhs(m, tt, zz[n], &zz[..n])?;
                    let mut out = yd;
                    out.push(ld);
                    Ok(out)
                };
                let (z_end, dense) = step_dense(&mut rhs, t, &z, dt)?;
                let g = |zz: &[f64], branch: Branch| zz[n] - m.lambda(branch, &zz[..n]);
                let gp0 = g(&z, Branch::Plus);
                let gp1 = g(&z_end, Branch::Plus);
                let gm0 = g(&z, Branch::Minus);
                let gm1 = g(&z_end, Branch::Minus);
                // Entering sliding pins lambda to one branch value, so that
                // monitor starts the first step at exactly zero. Moving back
                // into the admissible bracket is not a crossing; moving out
                // is an immediate exit at the step start (the trajectory just
                // passes through the surface). bracket_dir points from the
                // plus branch value toward the minus one.
                let bracket_dir = gp0 - gm0;
                let crossed_p = if gp0 == 0.0 {
                    gp1 * bracket_dir < 0.0
                } else {
                    (gp0 > 0.0) != (gp1 > 0.0)
                };
                let crossed_m = if gm0 == 0.0 {
                    gm1 * bracket_dir > 0.0
                } else {
                    (gm0 > 0.0) != (gm1 > 0.0)
                };

                let mut exit: Option<(f64, Branch)> = None;
                if crossed_p || crossed_m {
                    let mut te_p = f64::INFINITY;
                    let mut te_m = f64::INFINITY;
                    if crossed_p {
                        te_p = if gp0 == 0.0 {
                            t
                        } else {
                            locate_event(
                                &mut |tt| g(&dense.eval(tt), Branch::Plus),
                                (t, t + dt),
                                cfg.event_tol,
                            )?
                        };
                    }
                    if crossed_m {
                        te_m = if gm0 == 0.0 {
                            t
                        } else {
                            locate_event(
                                &mut |tt| g(&dense.eval(tt), Branch::Minus),
                                (t, t + dt),
                                cfg.event_tol,
                            )?
                        };
                    }
                    exit = Some(if te_p <= te_m {
                        (te_p, Branch::Plus)
                    } else {
                        (te_m, Branch::Minus)
                    });
                }

                if let Some((te, out_branch)) = exit {
                    let ze = dense.eval(te);
                    let mut ye = ze[..n].to_vec();
                    project_onto_surface(m, &mut ye);
                    let cert = run.certify(te, &ye);
                    // Both monitors reaching zero together makes the exit
                    // direction genuinely ambiguous when the certificate
                    // offers no case; halt with the full picture.
                    let other = match out_branch {
                        Branch::Plus => (ze[n] - m.lambda(Branch::Minus, &ye)).abs(),
                        Branch::Minus => (ze[n] - m.lambda(Branch::Plus, &ye)).abs(),
                    };
                    if !cert.unique && (other <= cfg.lambda_tol || (crossed_p && crossed_m)) {
                        return Err(Error::NonUniqueSwitch {
                            t: te,
                            state: ye,
                            case: cert.case.to_string(),
                            jump: cert.jump,
                            product_plus: cert.product_plus,
                            product_minus: cert.product_minus,
                        });
                    }
                    let kind = match out_branch {
                        Branch::Plus => EventKind::ExitToPlus,
                        Branch::Minus => EventKind::ExitToMinus,
                    };
                    run.push_event(te, kind, &ye)?;
                    run.push_sample(te, &ye, m.lambda(out_branch, &ye), out_branch.mode());
                    t = te;
                    y = ye;
                    mode = Mode::Free(out_branch);
                    armed = false;
                    if cfg.stop_at_first_exit {
                        break;
                    }
                } else {
                    // Tangency bookkeeping: a sign change of either branch's
                    // indicator along the committed step is logged but does
                    // not switch anything.
                    for branch in [Branch::Plus, Branch::Minus] {
                        let hb0 = eval_tangency(m, t, &z[..n], branch);
                        let hb1 = eval_tangency(m, t + dt, &z_end[..n], branch);
                        if (hb0 > 0.0) != (hb1 > 0.0) {
                            let tt = locate_event(
                                &mut |tt| {
                                    let zz = dense.eval(tt);
                                    eval_tangency(m, tt, &zz[..n], branch)
                                },
                                (t, t + dt),
                                cfg.event_tol,
                            )?;
                            let state = dense.eval(tt)[..n].to_vec();
                            run.push_event(tt, EventKind::Tangency, &state)?;
                        }
                    }
                    t += dt;
                    let mut ye = z_end[..n].to_vec();
                    project_onto_surface(m, &mut ye);
                    y = ye;
                    let lambda_new = z_end[n];
                    run.push_sample(t, &y, lambda_new, ModeLabel::Sliding);
                    mode = Mode::Sliding { lambda: lambda_new };
                }
            }
        }
    }
    Ok(run.traj)
}

fn branch_bounds(m: &ClosedModel, y: &[f64]) -> (f64, f64) {
    let lp = (m.lambda_plus)(y);
    let lm = (m.lambda_minus)(y);
    (lp.min(lm), lp.max(lm))
}
