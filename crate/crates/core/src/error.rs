//! Error taxonomy for the whole crate.
//!
//! Every failure mode carries enough payload to diagnose the run that hit it;
//! the CLI maps each family to a distinct exit code (see [`Error::exit_code`]).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed a constructor precondition (bad range, NaN, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The rank-one free-flow solve degenerates: |1 - dlambda.L+| < 1e-12.
    #[error("singular closure: |1 - dlambda.L+| = {denominator:.3e} at t = {t}")]
    SingularClosure { t: f64, denominator: f64 },

    /// The sliding-flow solve degenerates: dh.L+ ~ 0 (grazing of the closure).
    #[error("grazing closure: dh.L+ = {dh_lplus:.3e} at t = {t}")]
    GrazingClosure { t: f64, dh_lplus: f64 },

    /// Effective tension went nonpositive: 1 + (Gamma/2) y.Gy <= 0.
    #[error("negative tension: radicand 1 + (Gamma/2) y.Gy = {radicand:.6e}")]
    NegativeTension { radicand: f64 },

    /// Event count exceeded the configured cap (chattering guard).
    #[error("event overflow: more than {max_events} events by t = {t}")]
    EventOverflow { t: f64, max_events: usize },

    /// Proposition-1 certificate failed at a switching decision with both exit
    /// directions admissible; the run halts rather than picking a branch.
    #[error("non-unique switch at t = {t}: case {case}, jump {jump:.6e}, branch products [{product_plus:.6e}, {product_minus:.6e}], state {state:?}")]
    NonUniqueSwitch {
        t: f64,
        state: Vec<f64>,
        case: String,
        jump: f64,
        product_plus: f64,
        product_minus: f64,
    },

    /// Bisection bracket did not straddle a zero.
    #[error("no sign change in event bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// A state or derivative stopped being finite.
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    /// The implicit-step fixed point failed to contract.
    #[error("fixed-point divergence at t = {t}: residual {residual:.3e} after {iterations} iterations")]
    FixedPointDivergence {
        t: f64,
        iterations: usize,
        residual: f64,
    },

    /// Requested memory horizon leaves non-negligible kernel mass outside it.
    #[error("memory horizon too short: t_mem = {t_mem}, kernel envelope there {envelope:.3e} exceeds bound {bound:.3e}")]
    HorizonTooShort {
        t_mem: f64,
        envelope: f64,
        bound: f64,
    },

    /// Fast-subsystem classification queried on a classification boundary.
    #[error("degenerate classification: y2+y3 = {s:.6e}, y2+y3-4*sigma*L1+ = {margin:.6e}")]
    DegenerateClassification { s: f64, margin: f64 },

    /// The affine lambda-solve has a vanishing coefficient (no critical root).
    #[error("no root: affine lambda coefficient {coefficient:.3e} vanishes")]
    NoRoot { coefficient: f64 },

    /// A steady-state search ran past its step cap.
    #[error("no convergence at omega = {omega}: amplitude not steady after {periods} forcing periods")]
    NoConvergence { omega: f64, periods: usize },

    /// lambda(phi) evaluated at phi = 3*pi/4 mod pi.
    #[error("division by zero: sin(phi) + cos(phi) = {denominator:.3e} at phi = {phi}")]
    DividesByZero { phi: f64, denominator: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI. 0 is success, 2 is reserved for the
    /// non-uniqueness halt; remaining families get distinct codes.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            NonUniqueSwitch { .. } => 2,
            InvalidParameter(_) | Config(_) => 1,
            Io(_) => 3,
            SingularClosure { .. } | GrazingClosure { .. } | NegativeTension { .. } => 4,
            EventOverflow { .. }
            | NoSignChange { .. }
            | NonFiniteState { .. }
            | FixedPointDivergence { .. } => 5,
            HorizonTooShort { .. }
            | DegenerateClassification { .. }
            | NoRoot { .. }
            | NoConvergence { .. }
            | DividesByZero { .. } => 6,
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidParameter(_) => "InvalidParameter",
            SingularClosure { .. } => "SingularClosure",
            GrazingClosure { .. } => "GrazingClosure",
            NegativeTension { .. } => "NegativeTension",
            EventOverflow { .. } => "EventOverflow",
            NonUniqueSwitch { .. } => "NonUniqueSwitch",
            NoSignChange { .. } => "NoSignChange",
            NonFiniteState { .. } => "NonFiniteState",
            FixedPointDivergence { .. } => "FixedPointDivergence",
            HorizonTooShort { .. } => "HorizonTooShort",
            DegenerateClassification { .. } => "DegenerateClassification",
            NoRoot { .. } => "NoRoot",
            NoConvergence { .. } => "NoConvergence",
            DividesByZero { .. } => "DividesByZero",
            Config(_) => "Config",
            Io(_) => "Io",
        }
    }
}
