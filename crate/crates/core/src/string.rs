//! Closed forms for the pinned string reduction.
//!
//! A damped string with a point contact at `xi_star` is reduced to N modal
//! coordinates plus a closure for the eliminated modes. Everything the rest of
//! the crate needs from that reduction lives here: the effective wave speed,
//! the stiffness bilinear form G, the frequency operator Omega, the projected
//! vector field r(y), and the closure coefficients (instantaneous gain lplus,
//! static gain vector linf, damping remainder lminus, memory kernel).
//!
//! State layout for a reduction with N modes: y = [y1.., y2..] with the
//! displacement block first and the velocity block second (length 2N).

use crate::error::{Error, Result};
use crate::tol;
use crate::util::Kahan;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Default truncation count for the infinite closure sums.
pub const DEFAULT_SERIES_CAP: usize = 100_000;

/// Absolute tail mass kept below this when the kernel table picks its own
/// per-sample truncation.
const TABLE_TAIL_ABS: f64 = 1e-10;

/// Samples per unit of scaled time in the master kernel table. The sharpest
/// reflection surge at moderate damping is a few hundredths wide, so 2000
/// samples per unit keeps the linear interpolation error far below the
/// quadrature error of any consumer.
const TABLE_DS: f64 = 5e-4;

#[derive(Debug, Clone, Copy)]
pub struct StringParams {
    /// Base wave speed of the unstretched string.
    pub c: f64,
    /// Damping ratio, in [0, 1).
    pub beta: f64,
    /// Nonlinearity coefficient multiplying the stretching energy.
    pub nonlinearity: f64,
    /// Contact position in (0, 1).
    pub xi_star: f64,
    /// Number of resolved modal coordinates per field (state dimension 2N).
    pub n_modes: usize,
}

impl StringParams {
    pub fn new(
        c: f64,
        beta: f64,
        nonlinearity: f64,
        xi_star: f64,
        n_modes: usize,
    ) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wave speed c must be positive and finite, got {c}"
            )));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "damping ratio beta must lie in [0, 1), got {beta}"
            )));
        }
        if !nonlinearity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity coefficient must be finite, got {nonlinearity}"
            )));
        }
        if !(xi_star > 0.0 && xi_star < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "contact position xi_star must lie in (0, 1), got {xi_star}"
            )));
        }
        // The lifting divides by sin(pi xi_star); a contact at a node of the
        // first mode has no first-mode content to interpolate with.
        if (PI * xi_star).sin().abs() < 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "contact position xi_star = {xi_star} sits at a node of the first mode"
            )));
        }
        if n_modes < 1 {
            return Err(Error::InvalidParameter(
                "at least one modal coordinate is required".into(),
            ));
        }
        Ok(Self {
            c,
            beta,
            nonlinearity,
            xi_star,
            n_modes,
        })
    }

    /// Damped frequency factor gamma = sqrt(1 - beta^2).
    pub fn gamma(&self) -> f64 {
        (1.0 - self.beta * self.beta).sqrt()
    }
}

/// Per-sum tail report: the computed partial sum and an analytic bound on the
/// dropped remainder.
#[derive(Debug, Clone, Copy)]
pub struct TailSum {
    pub value: f64,
    pub tail_bound: f64,
}

/// Kernel evaluation with its truncation diagnostics. `slow_convergence`
/// flags partial sums whose terms have not yet decayed below about 1e-3 of
/// the leading one (beta * t * K < 5).
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub value: f64,
    pub tail_bound: f64,
    pub slow_convergence: bool,
}

#[derive(Debug)]
pub struct StringReduction {
    params: StringParams,
    /// sin(k pi xi_star), k = 1..=N (index 0 holds k = 1).
    sin_k: Vec<f64>,
    /// Static gain vector, velocity block only (length N).
    linf: Vec<f64>,
    /// Truncation count for the infinite sums.
    pub series_cap: usize,
    table: OnceLock<KernelTable>,
}

impl StringReduction {
    pub fn new(params: StringParams) -> Self {
        Self::with_series_cap(params, DEFAULT_SERIES_CAP)
    }

    pub fn with_series_cap(params: StringParams, series_cap: usize) -> Self {
        let n = params.n_modes;
        let sin_k: Vec<f64> = (1..=n)
            .map(|k| (k as f64 * PI * params.xi_star).sin())
            .collect();
        let xs = params.xi_star;
        let mut linf = vec![0.0; n];
        let mut head = PI * PI * (1.0 - xs) * xs;
        for k in 2..=n {
            let kf = k as f64;
            let s = sin_k[k - 1];
            head += 2.0 * (1.0 - 1.0 / (kf * kf)) * s * s;
            linf[k - 1] = 2.0 * s;
        }
        linf[0] = head;
        Self {
            params,
            sin_k,
            linf,
            series_cap,
            table: OnceLock::new(),
        }
    }

    pub fn params(&self) -> &StringParams {
        &self.params
    }

    pub fn n_modes(&self) -> usize {
        self.params.n_modes
    }

    /// First-mode amplitude of the lifted shape: the combination of modal
    /// coordinates that carries the contact-point interpolation.
    fn lift_first_coeff(&self, y1: &[f64]) -> f64 {
        let mut s = y1[0];
        for k in 2..=self.params.n_modes {
            s -= self.sin_k[k - 1] * y1[k - 1];
        }
        s / self.sin_k[0]
    }

    /// Stiffness bilinear form G over displacement blocks (length N each).
    ///
    /// Evaluated through the lifted-shape factorization
    /// G(y, z) = pi^2 (a1(y) a1(z) + sum_{k>=2} k^2 y_k z_k), which expands to
    /// the same four-term sum as the direct definition but costs O(N).
    pub fn bilinear_g(&self, y1: &[f64], z1: &[f64]) -> f64 {
        debug_assert_eq!(y1.len(), self.params.n_modes);
        debug_assert_eq!(z1.len(), self.params.n_modes);
        let mut acc = self.lift_first_coeff(y1) * self.lift_first_coeff(z1);
        for k in 2..=self.params.n_modes {
            let kf = k as f64;
            acc += kf * kf * y1[k - 1] * z1[k - 1];
        }
        PI * PI * acc
    }

    /// Instantaneous wave speed c_bar = c sqrt(1 + (Gamma/2) y1.G y1).
    pub fn wave_speed_bar(&self, y1: &[f64]) -> Result<f64> {
        let radicand = 1.0 + 0.5 * self.params.nonlinearity * self.bilinear_g(y1, y1);
        if radicand <= 0.0 {
            return Err(Error::NegativeTension { radicand });
        }
        Ok(self.params.c * radicand.sqrt())
    }

    /// Frequency operator: (Omega y)_1 = pi (y_1 + sum_{k>=2} (k-1) sin(k pi xi*) y_k),
    /// (Omega y)_k = pi k y_k for k >= 2.
    pub fn omega_apply(&self, y1: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y1.len(), self.params.n_modes);
        let n = self.params.n_modes;
        let mut out = vec![0.0; n];
        let mut first = y1[0];
        for k in 2..=n {
            let kf = k as f64;
            first += (kf - 1.0) * self.sin_k[k - 1] * y1[k - 1];
            out[k - 1] = PI * kf * y1[k - 1];
        }
        out[0] = PI * first;
        out
    }

    /// Projected vector field of the free string: (y2, -c_bar^2 Omega^2 y1 - 2 beta c_bar Omega y2).
    pub fn r_string(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.params.n_modes;
        debug_assert_eq!(y.len(), 2 * n);
        let cbar = self.wave_speed_bar(&y[..n])?;
        Ok(self.r_string_with_speed(cbar, y))
    }

    /// Same field with the wave speed supplied by the caller, for drivers that
    /// already evaluated it this step.
    pub fn r_string_with_speed(&self, cbar: f64, y: &[f64]) -> Vec<f64> {
        let n = self.params.n_modes;
        debug_assert_eq!(y.len(), 2 * n);
        let (y1, y2) = y.split_at(n);
        let omega_y1 = self.omega_apply(y1);
        let omega2_y1 = self.omega_apply(&omega_y1);
        let omega_y2 = self.omega_apply(y2);
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(y2);
        for k in 0..n {
            out[n + k] = -cbar * cbar * omega2_y1[k] - 2.0 * self.params.beta * cbar * omega_y2[k];
        }
        out
    }

    /// Wave-amplitude coordinates that diagonalize Omega: a_1 is the lifted
    /// first-mode amplitude and a_k = y_k for k >= 2, so a_k(Omega y) = k pi a_k(y).
    pub fn a_coords(&self, block: &[f64]) -> Vec<f64> {
        debug_assert_eq!(block.len(), self.params.n_modes);
        let mut a = block.to_vec();
        a[0] = self.lift_first_coeff(block);
        a
    }

    /// Modal energy sum_k [a_k(y2)^2 + c^2 (k pi)^2 a_k(y1)^2], conserved by
    /// the free field when Gamma = 0 and beta = 0.
    pub fn modal_energy(&self, y: &[f64]) -> f64 {
        let n = self.params.n_modes;
        debug_assert_eq!(y.len(), 2 * n);
        let (y1, y2) = y.split_at(n);
        let a1 = self.a_coords(y1);
        let a2 = self.a_coords(y2);
        let c = self.params.c;
        (0..n)
            .map(|i| {
                let om = c * (i as f64 + 1.0) * PI;
                a2[i] * a2[i] + om * om * a1[i] * a1[i]
            })
            .sum()
    }

    /// Instantaneous closure gain, the only nonzero entry of L+: 1/(2 gamma c_bar).
    /// Independent of the contact position.
    pub fn lplus(&self, cbar: f64) -> f64 {
        1.0 / (2.0 * self.params.gamma() * cbar)
    }

    /// Static closure gain vector (velocity block, length N). Independent of c_bar.
    pub fn linf(&self) -> &[f64] {
        &self.linf
    }

    /// Damping remainder gain: (4 beta / (c_bar pi)) sum_{k>N} (k^-2 - k^-3) sin^2(k pi xi*),
    /// truncated at `series_cap` terms with the dropped tail bounded by
    /// 4 beta / (c_bar pi (N + K)).
    pub fn lminus(&self, cbar: f64) -> TailSum {
        let n = self.params.n_modes;
        let xs = self.params.xi_star;
        let mut acc = Kahan::default();
        for k in (n + 1)..=(n + self.series_cap) {
            let kf = k as f64;
            let s = (kf * PI * xs).sin();
            acc.add((1.0 / (kf * kf) - 1.0 / (kf * kf * kf)) * s * s);
        }
        let pre = 4.0 * self.params.beta / (cbar * PI);
        TailSum {
            value: pre * acc.value(),
            tail_bound: pre.abs() / (n + self.series_cap) as f64,
        }
    }

    /// Decay rate of the essential (post-truncation) kernel: (N+1) pi c_bar.
    pub fn sigma(&self, cbar: f64) -> f64 {
        (self.params.n_modes as f64 + 1.0) * PI * cbar
    }

    /// Memory kernel of the eliminated modes, truncated at `k_terms` terms:
    /// the literal partial sum
    /// 2 sum_{k=N+1}^{N+K} e^{-pi c_bar beta k t} sin^2(k pi xi*)
    ///   [ (1 - k^-2) cos(pi c_bar gamma k t) - (beta/gamma)(1 - k^-1)^2 sin(pi c_bar gamma k t) ].
    /// The k-dependent damping makes the series absolutely convergent for
    /// every t > 0. At t = 0 it diverges, so the partial sum there grows
    /// without bound in `k_terms` and the tail bound is infinite; the usable
    /// small-lag value comes from extrapolating t > 0 samples (see
    /// `kernel_table`).
    pub fn kernel_l0(&self, cbar: f64, t: f64, k_terms: usize) -> Result<KernelEval> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kernel time must be nonnegative, got {t}"
            )));
        }
        let p = &self.params;
        let gamma = p.gamma();
        let xs = p.xi_star;
        let n = p.n_modes;
        let bg = p.beta / gamma;
        let mut acc = Kahan::default();
        for k in (n + 1)..=(n + k_terms) {
            let kf = k as f64;
            let decay = (-PI * cbar * p.beta * kf * t).exp();
            if decay == 0.0 {
                break;
            }
            let (s_osc, c_osc) = (PI * cbar * gamma * kf * t).sin_cos();
            let s_pos = (kf * PI * xs).sin();
            let inv = 1.0 / kf;
            let bracket =
                (1.0 - inv * inv) * c_osc - bg * (1.0 - inv) * (1.0 - inv) * s_osc;
            acc.add(2.0 * decay * s_pos * s_pos * bracket);
        }
        Ok(KernelEval {
            value: acc.value(),
            tail_bound: self.kernel_tail_bound(cbar, t, n + k_terms),
            slow_convergence: p.beta * t * (k_terms as f64) < 5.0,
        })
    }

    /// Geometric bound on the kernel terms dropped beyond mode `last_kept`:
    /// 2 (1 + beta/gamma) e^{-pi beta c_bar (last_kept+1) t} / (1 - e^{-pi beta c_bar t}).
    pub fn kernel_tail_bound(&self, cbar: f64, t: f64, last_kept: usize) -> f64 {
        let p = &self.params;
        if p.beta == 0.0 || t <= 0.0 {
            return f64::INFINITY;
        }
        let a = PI * p.beta * cbar * t;
        let amp = 2.0 * (1.0 + p.beta / p.gamma());
        amp * (-a * (last_kept as f64 + 1.0)).exp() / (1.0 - (-a).exp())
    }

    /// Contact-velocity response to a unit step in the contact force, summed
    /// over the eliminated modes only. The plot of this quantity starts near
    /// lplus and surges when reflections return to the contact point.
    /// Truncated at `k_terms` terms:
    /// 2 sum_{k=N+1}^{N+K} e^{-pi c_bar beta k t} sin^2(k pi xi*)
    ///   sin(pi c_bar gamma k t) / (pi c_bar gamma k).
    /// For beta = 0 the sum telescopes to the exact image solution: jumps of
    /// -1/(2 c_bar) at each single reflection and +1/c_bar at full round
    /// trips. With damping the small-t limit sits slightly below lplus, at
    /// atan(gamma/beta) / (pi gamma c_bar).
    pub fn step_response_velocity(&self, cbar: f64, t: f64, k_terms: usize) -> Result<KernelEval> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "response time must be nonnegative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(KernelEval {
                value: 0.0,
                tail_bound: 0.0,
                slow_convergence: false,
            });
        }
        let p = &self.params;
        let gamma = p.gamma();
        let xs = p.xi_star;
        let n = p.n_modes;
        let mut acc = Kahan::default();
        for k in (n + 1)..=(n + k_terms) {
            let kf = k as f64;
            let decay = (-PI * cbar * p.beta * kf * t).exp();
            if decay == 0.0 {
                break;
            }
            let s_pos = (kf * PI * xs).sin();
            let osc = (PI * cbar * gamma * kf * t).sin();
            acc.add(2.0 * decay * s_pos * s_pos * osc / (PI * cbar * gamma * kf));
        }
        let m = n + k_terms;
        let tail = if p.beta == 0.0 {
            2.0 / (PI * cbar * gamma * (m + 1) as f64)
        } else {
            let a = PI * p.beta * cbar * t;
            2.0 * (-a * (m as f64 + 1.0)).exp()
                / (PI * cbar * gamma * (m + 1) as f64 * (1.0 - (-a).exp()))
        };
        Ok(KernelEval {
            value: acc.value(),
            tail_bound: tail,
            slow_convergence: PI * cbar * p.beta * t * (k_terms as f64) < 5.0,
        })
    }

    /// Single-exponential surrogate kernel: lplus(c_bar) e^{-sigma t}.
    pub fn kernel_l0_exp(&self, cbar: f64, t: f64) -> f64 {
        self.lplus(cbar) * (-self.sigma(cbar) * t).exp()
    }

    /// Lifted string displacement at position xi for modal displacements y1.
    pub fn lift_displacement(&self, y1: &[f64], xi: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&xi));
        let mut v = self.lift_first_coeff(y1) * (PI * xi).sin();
        for k in 2..=self.params.n_modes {
            v += y1[k - 1] * (k as f64 * PI * xi).sin();
        }
        v
    }

    /// Static displacement solving r(y) + linf * lambda = 0 in the linear
    /// string: y2 = 0 and Omega^2 y1 = linf lambda / c^2. Omega^2 couples the
    /// first row to the higher modes, so the higher modes are solved first and
    /// back-substituted.
    pub fn static_deflection(&self, lambda: f64) -> Vec<f64> {
        let n = self.params.n_modes;
        let c2 = self.params.c * self.params.c;
        let mut y1 = vec![0.0; n];
        let mut first = self.linf[0] * lambda / (c2 * PI * PI);
        for k in 2..=n {
            let kf = k as f64;
            let yk = self.linf[k - 1] * lambda / (c2 * PI * PI * kf * kf);
            y1[k - 1] = yk;
            first -= (kf * kf - 1.0) * self.sin_k[k - 1] * yk;
        }
        y1[0] = first;
        y1
    }

    /// Envelope bound on |kernel| at scaled time s = c_bar * t, from the
    /// leading eliminated mode and the geometric tail behind it.
    pub fn kernel_envelope(&self, s: f64) -> f64 {
        let p = &self.params;
        if p.beta == 0.0 || s <= 0.0 {
            return f64::INFINITY;
        }
        let a = PI * p.beta * s;
        2.0 * (1.0 + p.beta / p.gamma()) * (-a * (p.n_modes as f64 + 1.0)).exp()
            / (1.0 - (-a).exp())
    }

    /// Shortest memory horizon (in physical time, at the base wave speed)
    /// with at most `HORIZON_MASS_REL` of the t=0 kernel value left outside.
    /// None when beta = 0 (the undamped kernel never decays).
    pub fn default_memory_horizon(&self) -> Option<f64> {
        let p = &self.params;
        if p.beta == 0.0 {
            return None;
        }
        let bound = tol::HORIZON_MASS_REL * self.lplus(p.c);
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while self.kernel_envelope(p.c * hi) > bound {
            hi *= 2.0;
            if hi > 1e9 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.kernel_envelope(p.c * mid) > bound {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }

    /// Master kernel table at c_bar = 1, built lazily. The series depends on
    /// time only through c_bar * t, so one table serves every instantaneous
    /// wave speed: kernel(t; c_bar) = table.sample(c_bar * t).
    pub fn kernel_table(&self) -> Result<&KernelTable> {
        if self.params.beta == 0.0 {
            return Err(Error::InvalidParameter(
                "kernel table requires beta > 0 (undamped kernel does not decay)".into(),
            ));
        }
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let horizon = self.default_memory_horizon().ok_or_else(|| {
            Error::InvalidParameter("kernel horizon does not close".into())
        })?;
        let s_max = 1.05 * self.params.c * horizon;
        let built = self.build_kernel_table(s_max);
        Ok(self.table.get_or_init(|| built))
    }

    fn build_kernel_table(&self, s_max: f64) -> KernelTable {
        let p = &self.params;
        let n_samples = ((s_max / TABLE_DS).ceil() as usize + 1).max(4);
        let amp = 2.0 * (1.0 + p.beta / p.gamma());
        let mut values: Vec<f64> = (0..n_samples)
            .into_par_iter()
            .map(|i| {
                if i == 0 {
                    return 0.0; // placeholder, extrapolated below
                }
                let s = i as f64 * TABLE_DS;
                let a = PI * p.beta * s;
                // terms needed so the geometric tail drops below TABLE_TAIL_ABS
                let needed = ((amp / (TABLE_TAIL_ABS * (1.0 - (-a).exp()))).ln() / a)
                    .ceil()
                    .max(64.0) as usize;
                let k_terms = needed.saturating_sub(p.n_modes).max(64);
                self.kernel_l0(1.0, s, k_terms)
                    .expect("s > 0 by construction")
                    .value
            })
            .collect();
        // The series diverges at s = 0 but its sum is smooth from the right,
        // so fill the lag-zero slot by quadratic extrapolation of the first
        // three converged samples.
        values[0] = 3.0 * values[1] - 3.0 * values[2] + values[3];
        KernelTable {
            ds: TABLE_DS,
            values,
        }
    }
}

/// Uniform-grid samples of the c_bar = 1 kernel over scaled time.
#[derive(Debug, Clone)]
pub struct KernelTable {
    ds: f64,
    values: Vec<f64>,
}

impl KernelTable {
    /// Linear interpolation; zero beyond the tabulated horizon (the table is
    /// built to reach the point where the kernel envelope is negligible).
    pub fn sample(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.values[0];
        }
        let x = s / self.ds;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.ds
    }
}
