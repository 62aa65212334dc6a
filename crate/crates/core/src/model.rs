//! Closed piecewise-smooth model abstraction.
//!
//! A model couples a smooth field F(t, lambda, y) to a scalar contact force
//! lambda that switches between two branches across the surface h(y) = 0.
//! The closure makes the equation of motion neutral: ydot - L+ lambdadot = F,
//! so every flow evaluation below resolves a rank-one implicit term.

use crate::error::{Error, Result};
use crate::tol;
use crate::util::{axpy, dot};
use std::sync::Arc;

pub type RhsFn = Arc<dyn Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn mode(self) -> ModeLabel {
        match self {
            Branch::Plus => ModeLabel::FreePlus,
            Branch::Minus => ModeLabel::FreeMinus,
        }
    }
}

/// Flow regime of a trajectory sample or of the integrator state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    FreePlus,
    FreeMinus,
    Sliding,
}

impl ModeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeLabel::FreePlus => "free_plus",
            ModeLabel::FreeMinus => "free_minus",
            ModeLabel::Sliding => "sliding",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "free_plus" => Ok(ModeLabel::FreePlus),
            "free_minus" => Ok(ModeLabel::FreeMinus),
            "sliding" => Ok(ModeLabel::Sliding),
            other => Err(Error::Config(format!("unknown mode label '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone)]
pub struct ClosedModel {
    /// Number of resolved state variables (a memory variable kappa, when the
    /// model carries one, is folded into y as an ordinary component).
    pub dim: usize,
    /// Scenario label used in run manifests.
    pub name: String,
    /// Index of the kappa component inside y, if the model has one.
    pub kappa_index: Option<usize>,
    /// Smooth field F(t, lambda, y), written into the output slice.
    pub smooth_rhs: RhsFn,
    /// Neutral coupling vector L+ (constant for every scenario here).
    pub lplus: Vec<f64>,
    /// Switching function and its analytic gradient.
    pub h: ScalarFn,
    pub grad_h: GradFn,
    /// Force branches on h > 0 / h < 0 and their analytic gradients.
    pub lambda_plus: ScalarFn,
    pub lambda_minus: ScalarFn,
    pub grad_lambda_plus: GradFn,
    pub grad_lambda_minus: GradFn,
}

impl std::fmt::Debug for ClosedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedModel")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .field("kappa_index", &self.kappa_index)
            .field("lplus", &self.lplus)
            .finish()
    }
}

impl ClosedModel {
    pub fn smooth_rhs(&self, t: f64, lambda: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.smooth_rhs)(t, lambda, y, &mut out);
        out
    }

    pub fn h(&self, y: &[f64]) -> f64 {
        (self.h)(y)
    }

    pub fn grad_h(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        (self.grad_h)(y, &mut g);
        g
    }

    pub fn lambda(&self, branch: Branch, y: &[f64]) -> f64 {
        match branch {
            Branch::Plus => (self.lambda_plus)(y),
            Branch::Minus => (self.lambda_minus)(y),
        }
    }

    pub fn grad_lambda(&self, branch: Branch, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        match branch {
            Branch::Plus => (self.grad_lambda_plus)(y, &mut g),
            Branch::Minus => (self.grad_lambda_minus)(y, &mut g),
        }
        g
    }
}

/// Free flow on one side of the surface: solves (I - L+ dlambda^T) ydot = F
/// at lambda = lambda_branch(y). The correction is rank one, so the solve is
/// the Sherman-Morrison form ydot = F + L+ (dlambda.F) / (1 - dlambda.L+).
pub fn eval_free_rhs(m: &ClosedModel, t: f64, y: &[f64], branch: Branch) -> Result<Vec<f64>> {
    let lambda = m.lambda(branch, y);
    let mut f = vec![0.0; m.dim];
    (m.smooth_rhs)(t, lambda, y, &mut f);
    let dl = m.grad_lambda(branch, y);
    let denom = 1.0 - dot(&dl, &m.lplus);
    if denom.abs() < tol::CLOSURE_SINGULAR {
        return Err(Error::SingularClosure {
            t,
            denominator: denom,
        });
    }
    let scale = dot(&dl, &f) / denom;
    axpy(scale, &m.lplus, &mut f);
    Ok(f)
}

/// Sliding flow on the surface: lambda is dynamic and chosen so the flow
/// stays on h = 0. Returns (lambdadot, ydot) with dh.ydot = 0 to rounding.
pub fn eval_sliding_rhs(
    m: &ClosedModel,
    t: f64,
    lambda: f64,
    y: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let dh = m.grad_h(y);
    let dh_lplus = dot(&dh, &m.lplus);
    if dh_lplus.abs() < tol::CLOSURE_GRAZING {
        return Err(Error::GrazingClosure { t, dh_lplus });
    }
    let mut f = vec![0.0; m.dim];
    (m.smooth_rhs)(t, lambda, y, &mut f);
    let lambda_dot = -dot(&dh, &f) / dh_lplus;
    axpy(lambda_dot, &m.lplus, &mut f);
    Ok((lambda_dot, f))
}

/// Tangency indicator H for one branch, evaluated at lambda = lambda_branch(y):
/// H = dh.F - (dlambda.L+)(dh.F) + (dh.L+)(dlambda.F).
/// Its sign decides whether the free flow on that branch leaves or reenters
/// the surface; H = 0 is a grazing contact.
pub fn eval_tangency(m: &ClosedModel, t: f64, y: &[f64], branch: Branch) -> f64 {
    let lambda = m.lambda(branch, y);
    let mut f = vec![0.0; m.dim];
    (m.smooth_rhs)(t, lambda, y, &mut f);
    let dh = m.grad_h(y);
    let dl = m.grad_lambda(branch, y);
    let dh_f = dot(&dh, &f);
    dh_f - dot(&dl, &m.lplus) * dh_f + dot(&dh, &m.lplus) * dot(&dl, &f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniquenessCase {
    One,
    Two,
    None,
}

impl std::fmt::Display for UniquenessCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UniquenessCase::One => "1",
            UniquenessCase::Two => "2",
            UniquenessCase::None => "none",
        })
    }
}

/// Outcome of the uniqueness test at a state, with the raw quantities the
/// decision was made from (useful in event logs and halt diagnostics).
#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    pub unique: bool,
    pub case: UniquenessCase,
    /// lambda_plus(y) - lambda_minus(y)
    pub jump: f64,
    /// (1 - dlambda.L+)(-dh.L+) per branch
    pub product_plus: f64,
    pub product_minus: f64,
}

/// Uniqueness of forward evolution at a state on (or near) the surface.
/// Unique with case 1 when the force jump and both branch products are
/// strictly positive, case 2 when all are strictly negative. Any zero sign
/// lands on the boundary of the criterion and is reported as non-unique.
pub fn uniqueness_certificate(m: &ClosedModel, y: &[f64]) -> Certificate {
    let jump = (m.lambda_plus)(y) - (m.lambda_minus)(y);
    let dh = m.grad_h(y);
    let neg_dh_lplus = -dot(&dh, &m.lplus);
    let product = |branch: Branch| -> f64 {
        let dl = m.grad_lambda(branch, y);
        (1.0 - dot(&dl, &m.lplus)) * neg_dh_lplus
    };
    let pp = product(Branch::Plus);
    let pm = product(Branch::Minus);
    let (unique, case) = if jump > 0.0 && pp > 0.0 && pm > 0.0 {
        (true, UniquenessCase::One)
    } else if jump < 0.0 && pp < 0.0 && pm < 0.0 {
        (true, UniquenessCase::Two)
    } else {
        (false, UniquenessCase::None)
    };
    Certificate {
        unique,
        case,
        jump,
        product_plus: pp,
        product_minus: pm,
    }
}

/// Force value the infinitely-fast (Filippov) closure would pick at (t, y):
/// the root of dh.F(t, lambda, y) = 0, solved in closed form since F is
/// affine in lambda for every scenario here. When the model carries a memory
/// variable the comparator asks where the fast force dynamics settle once
/// that variable has equilibrated, which pins kappa = lambda inside F.
pub fn filippov_sliding_lambda(m: &ClosedModel, t: f64, y: &[f64]) -> Result<f64> {
    let dh = m.grad_h(y);
    let mut probe = y.to_vec();
    let mut f0 = vec![0.0; m.dim];
    if let Some(i) = m.kappa_index {
        probe[i] = 0.0;
    }
    (m.smooth_rhs)(t, 0.0, &probe, &mut f0);
    let mut f1 = vec![0.0; m.dim];
    if let Some(i) = m.kappa_index {
        probe[i] = 1.0;
    }
    (m.smooth_rhs)(t, 1.0, &probe, &mut f1);
    let a0 = dot(&dh, &f0);
    let a1 = dot(&dh, &f1) - a0;
    if a1.abs() <= tol::AFFINE_COEFF * (1.0 + a0.abs()) {
        return Err(Error::NoRoot { coefficient: a1 });
    }
    Ok(-a0 / a1)
}

/// Cross-check of the supplied analytic gradients against central finite
/// differences at the given states. Intended for tests and for builders that
/// want a startup self-check.
pub fn check_gradients(m: &ClosedModel, states: &[Vec<f64>]) -> Result<()> {
    let fd = |f: &ScalarFn, y: &[f64], i: usize| -> f64 {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        let h = tol::FD_STEP * (1.0 + y[i].abs());
        yp[i] += h;
        ym[i] -= h;
        (f(&yp) - f(&ym)) / (2.0 * h)
    };
    let check_one = |name: &str, f: &ScalarFn, g: &GradFn, y: &[f64]| -> Result<()> {
        let mut grad = vec![0.0; m.dim];
        g(y, &mut grad);
        for i in 0..m.dim {
            let num = fd(f, y, i);
            let scale = 1.0 + grad[i].abs().max(num.abs());
            if (grad[i] - num).abs() > tol::FD_REL * scale {
                return Err(Error::InvalidParameter(format!(
                    "gradient of {name} disagrees with finite differences at component {i}: analytic {}, numeric {num}",
                    grad[i]
                )));
            }
        }
        Ok(())
    };
    for y in states {
        check_one("h", &m.h, &m.grad_h, y)?;
        check_one("lambda_plus", &m.lambda_plus, &m.grad_lambda_plus, y)?;
        check_one("lambda_minus", &m.lambda_minus, &m.grad_lambda_minus, y)?;
    }
    Ok(())
}
