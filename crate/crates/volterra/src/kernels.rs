//! Volterra kernel families and their α-energies.
//!
//! All implemented kernels are convolution kernels `k(t,s) = κ(t-s)`,
//! nonnegative on `0 ≤ s < t ≤ T_max`, with `κ(·)^α` integrable at the
//! origin. The α-energy `∫_s^t |k(t,r)|^α dr` has a closed form for every
//! family except `LogSingular` with mismatched exponent, which falls back to
//! singularity-aware quadrature.

use crate::error::{Error, Result};
use crate::quad;

/// Parametric kernel `k(t,s)` for the Volterra integral `∫_0^t k(t,s) dL_s`.
#[derive(Debug, Clone, PartialEq)]
pub enum VolterraKernel {
    /// `k ≡ 1`; the Volterra process is the driving noise itself.
    Constant { t_max: f64 },
    /// Riemann-Liouville fractional kernel `(t-s)^{H - 1/alpha_ref}`.
    FractionalRL { h: f64, alpha_ref: f64, t_max: f64 },
    /// Moving-average exponential kernel `e^{-a (t-s)}`.
    Exponential { a: f64, t_max: f64 },
    /// `(t-s)^{-1/alpha_ref} (ln 1/(t-s))^{-p}`, defined only for horizons
    /// below 1.
    LogSingular { p: f64, alpha_ref: f64, t_max: f64 },
}

impl VolterraKernel {
    pub fn constant(t_max: f64) -> Result<Self> {
        check_horizon(t_max)?;
        Ok(Self::Constant { t_max })
    }

    pub fn fractional_rl(h: f64, alpha_ref: f64, t_max: f64) -> Result<Self> {
        check_horizon(t_max)?;
        if !(0.0 < h && h < 1.0) {
            return Err(Error::Config(format!("Hurst parameter {h} outside (0,1)")));
        }
        check_alpha(alpha_ref)?;
        Ok(Self::FractionalRL { h, alpha_ref, t_max })
    }

    pub fn exponential(a: f64, t_max: f64) -> Result<Self> {
        check_horizon(t_max)?;
        if !(a > 0.0) {
            return Err(Error::Config(format!("decay rate {a} must be positive")));
        }
        Ok(Self::Exponential { a, t_max })
    }

    pub fn log_singular(p: f64, alpha_ref: f64, t_max: f64) -> Result<Self> {
        check_horizon(t_max)?;
        check_alpha(alpha_ref)?;
        if t_max >= 1.0 {
            return Err(Error::Config(format!(
                "log-singular kernel requires a horizon below 1, got {t_max}"
            )));
        }
        if !(p > 1.0 / alpha_ref) {
            return Err(Error::Config(format!(
                "log exponent p={p} must exceed 1/alpha_ref={}",
                1.0 / alpha_ref
            )));
        }
        Ok(Self::LogSingular { p, alpha_ref, t_max })
    }

    pub fn t_max(&self) -> f64 {
        match *self {
            Self::Constant { t_max }
            | Self::FractionalRL { t_max, .. }
            | Self::Exponential { t_max, .. }
            | Self::LogSingular { t_max, .. } => t_max,
        }
    }

    /// The stability index the kernel was designed against, if any.
    pub fn alpha_ref(&self) -> Option<f64> {
        match *self {
            Self::FractionalRL { alpha_ref, .. } | Self::LogSingular { alpha_ref, .. } => {
                Some(alpha_ref)
            }
            _ => None,
        }
    }

    /// `k(t, s)` for `0 ≤ s < t ≤ T_max`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s < t) {
            return Err(Error::Domain(format!("kernel arguments need 0 <= s < t, got s={s}, t={t}")));
        }
        if t > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("t={t} beyond horizon {}", self.t_max())));
        }
        Ok(self.eval_lag(t - s))
    }

    /// `κ(u)` for a positive lag `u = t - s`. All implemented kernels are
    /// convolution kernels, and quadratures over singular windows should be
    /// phrased in the lag to keep full precision at the singular endpoint.
    pub fn eval_at_lag(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= self.t_max() * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("lag {u} outside (0, {}]", self.t_max())));
        }
        Ok(self.eval_lag(u))
    }

    /// `κ(u)` for a positive lag `u = t - s`.
    fn eval_lag(&self, u: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 1.0,
            Self::FractionalRL { h, alpha_ref, .. } => u.powf(h - 1.0 / alpha_ref),
            Self::Exponential { a, .. } => (-a * u).exp(),
            Self::LogSingular { p, alpha_ref, .. } => {
                u.powf(-1.0 / alpha_ref) * (1.0 / u).ln().powf(-p)
            }
        }
    }

    /// `∫_s^t |k(t,r)|^α dr` — the α-energy over the window whose right end
    /// is also the kernel's target time.
    pub fn alpha_energy(&self, alpha: f64, s: f64, t: f64) -> Result<f64> {
        self.alpha_energy_window(alpha, t, s, t)
    }

    /// `∫_lo^hi |k(target, r)|^α dr` for `0 ≤ lo < hi ≤ target`.
    pub fn alpha_energy_window(&self, alpha: f64, target: f64, lo: f64, hi: f64) -> Result<f64> {
        if !(lo >= 0.0 && lo < hi && hi <= target * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "energy window needs 0 <= lo < hi <= target, got lo={lo}, hi={hi}, target={target}"
            )));
        }
        if target > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("target {target} beyond horizon {}", self.t_max())));
        }
        // In lag coordinates u = target - r the window is [u1, u2].
        self.alpha_energy_lag(alpha, (target - hi).max(0.0), target - lo)
    }

    /// `∫_{u1}^{u2} κ(u)^α du` in lag coordinates; callers probing lags many
    /// orders below the horizon should use this directly to avoid forming
    /// `t - lag`.
    pub fn alpha_energy_lag(&self, alpha: f64, u1: f64, u2: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if !(u1 >= 0.0 && u1 < u2 && u2 <= self.t_max() * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "lag window needs 0 <= u1 < u2 <= horizon, got [{u1}, {u2}]"
            )));
        }
        match *self {
            Self::Constant { .. } => Ok(u2 - u1),
            Self::FractionalRL { h, alpha_ref, .. } => {
                let q = (h - 1.0 / alpha_ref) * alpha + 1.0;
                if q <= 0.0 {
                    return Err(Error::Domain(format!(
                        "fractional kernel energy diverges: exponent {q} <= 0 for alpha={alpha}"
                    )));
                }
                Ok(power_diff(u1, u2, q) / q)
            }
            Self::Exponential { a, .. } => {
                let rate = a * alpha;
                Ok((-rate * u1).exp() * (-(-rate * (u2 - u1)).exp_m1()) / rate)
            }
            Self::LogSingular { p, alpha_ref, .. } => {
                let m = p * alpha - 1.0;
                if (alpha - alpha_ref).abs() < 1e-12 {
                    // ∫ u^{-1} (ln 1/u)^{-pα} du = (ln 1/u)^{1-pα} / (pα - 1)
                    debug_assert!(m > 0.0);
                    let head = (1.0 / u2).ln().powf(-m) / m;
                    if u1 == 0.0 {
                        return Ok(head);
                    }
                    Ok(head - (1.0 / u1).ln().powf(-m) / m)
                } else if alpha > alpha_ref {
                    Err(Error::Domain(format!(
                        "log-singular energy diverges for alpha={alpha} > alpha_ref={alpha_ref}"
                    )))
                } else {
                    let sigma = alpha / alpha_ref;
                    quad::integrate(
                        |u| u.powf(-sigma) * (1.0 / u).ln().powf(-p * alpha),
                        u1,
                        u2,
                        quad::DEFAULT_REL_TOL,
                    )
                }
            }
        }
    }

    /// Energy-matched cell weights: for each cell `[s_j, s_{j+1}]` of `grid`,
    /// `w_j = (∫_{s_j}^{s_{j+1}} |k(t,r)|^α dr / Δ_j)^{1/α}`, so the
    /// discretized integrand reproduces the exact α-energy cell by cell and
    /// the simulated marginal law is grid-exact for stable noise.
    pub fn cell_weights(&self, alpha: f64, target: f64, grid: &[f64]) -> Result<Vec<f64>> {
        check_alpha(alpha)?;
        if grid.len() < 2 {
            return Err(Error::Domain("grid needs at least two points".into()));
        }
        let mut weights = Vec::with_capacity(grid.len() - 1);
        for pair in grid.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if !(hi > lo) {
                return Err(Error::Domain("grid must be strictly increasing".into()));
            }
            let energy = self.alpha_energy_window(alpha, target, lo, hi)?;
            weights.push((energy / (hi - lo)).powf(1.0 / alpha));
        }
        Ok(weights)
    }
}

/// `u2^q - u1^q` for `0 ≤ u1 < u2`, avoiding cancellation when the
/// endpoints are close.
fn power_diff(u1: f64, u2: f64, q: f64) -> f64 {
    if u1 == 0.0 {
        return u2.powf(q);
    }
    if (u2 - u1) / u2 < 0.25 {
        u1.powf(q) * (q * (u2 / u1).ln()).exp_m1()
    } else {
        u2.powf(q) - u1.powf(q)
    }
}

fn check_horizon(t_max: f64) -> Result<()> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Config(format!("horizon {t_max} must be positive and finite")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 2]")));
    }
    Ok(())
}
