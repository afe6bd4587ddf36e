//! Sewing-based non-linear Young integration, the windowed Picard solver for
//! pathwise-regularized SDEs, and the flow-derivative linear equation.
//!
//! The increment field `Γ_{s,t}(x)` enters through the [`GammaEval`] trait,
//! indexed by time-mark pairs. The local-time case is cumulative,
//! `Γ_{s,t} = A_t - A_s` with anchor fields `A_t = b ∗ L̄_t`, which makes the
//! germ defect vanish at the storage level; the sewing certificate then
//! measures only evaluation error. Riemann sums over dyadic refinements must
//! contract geometrically with rate `2^{γ+η-1}`, and the measured rate feeds
//! a Richardson-extrapolated limit.

use num_complex::Complex64;

use crate::drift::{convolve_spectral, SpectralDrift};
use crate::error::{Error, Result};
use crate::lattice::{fft_forward, fft_inverse_real, spectral_derivative, SpatialField};
use crate::occupation::occupation_fft_spectrum;
use crate::pathsim::SamplePath;

/// Two-parameter increment field on a fixed mark grid.
pub trait GammaEval {
    fn dim(&self) -> usize;
    fn marks(&self) -> &[f64];
    /// `Γ_{marks[i], marks[j]}(x)` into `out` (length `dim`).
    fn gamma(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]);
    /// Spatial gradient `∇Γ_{marks[i], marks[j]}(x)`, row-major `dim × dim`.
    fn gamma_grad(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]);
}

/// Increment field defined by closed-form closures, for oracles and frozen
/// drifts.
pub struct ClosureGamma<F, G>
where
    F: Fn(f64, f64, &[f64], &mut [f64]) + Sync,
    G: Fn(f64, f64, &[f64], &mut [f64]) + Sync,
{
    pub marks: Vec<f64>,
    pub dim: usize,
    pub value: F,
    pub grad: G,
}

impl<F, G> GammaEval for ClosureGamma<F, G>
where
    F: Fn(f64, f64, &[f64], &mut [f64]) + Sync,
    G: Fn(f64, f64, &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn marks(&self) -> &[f64] {
        &self.marks
    }

    fn gamma(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        (self.value)(self.marks[i], self.marks[j], x, out)
    }

    fn gamma_grad(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        (self.grad)(self.marks[i], self.marks[j], x, out)
    }
}

/// Measured Hölder-type constants of an anchor family over dyadic mark
/// pairs: `c_k = sup ‖∂^k_x (A_t - A_s)‖_∞ / |t-s|^γ`.
#[derive(Debug, Clone, Copy)]
pub struct GammaDiagnostics {
    pub gamma_exp: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl GammaDiagnostics {
    /// Aggregate `C^γ_T C²`-type constant.
    pub fn total(&self) -> f64 {
        self.c0 + self.c1 + self.c2
    }
}

/// Cumulative increment field `Γ_{s,t} = A_t - A_s` backed by lattice anchor
/// fields with spectral gradients (d = 1).
pub struct GammaField {
    pub marks: Vec<f64>,
    pub anchors: Vec<SpatialField>,
    pub gradients: Vec<SpatialField>,
    pub diagnostics: GammaDiagnostics,
}

impl GammaEval for GammaField {
    fn dim(&self) -> usize {
        1
    }

    fn marks(&self) -> &[f64] {
        &self.marks
    }

    fn gamma(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        out[0] = self.anchors[j].eval(x) - self.anchors[i].eval(x);
    }

    fn gamma_grad(&self, i: usize, j: usize, x: &[f64], out: &mut [f64]) {
        out[0] = self.gradients[j].eval(x) - self.gradients[i].eval(x);
    }
}

/// Build the anchor family `A_{t_k} = b ∗ L̄_{0,t_k}` from a drift and a
/// simulated path, verify the Hölder/spatial-regularity conditions the Young
/// solver needs, and record the measured constants.
pub fn build_gamma_from_drift(
    drift: &SpectralDrift,
    path: &SamplePath,
    marks: &[f64],
    gamma_exp: f64,
    c2_bound: f64,
) -> Result<GammaField> {
    if path.dim != 1 || drift.space.dim != 1 {
        return Err(Error::Unsupported("gamma fields are built for d = 1".into()));
    }
    if marks.len() < 2 || marks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("marks must be increasing, at least two".into()));
    }
    let space = &drift.space;
    let n_bins = space.cells;

    // cumulative occupation spectra at the marks
    let mut cumulative = vec![Complex64::default(); n_bins];
    let mut anchors = Vec::with_capacity(marks.len());
    let mut gradients = Vec::with_capacity(marks.len());
    let mut hessians = Vec::with_capacity(marks.len());
    for (k, pair) in std::iter::once(None)
        .chain(marks.windows(2).map(Some))
        .enumerate()
    {
        if let Some(w) = pair {
            let inc = occupation_fft_spectrum(path, w[0], w[1], space)?;
            for (c, i) in cumulative.iter_mut().zip(&inc) {
                *c += i;
            }
        }
        let _ = k;
        let field = convolve_spectral(drift, &cumulative)?;
        let spec = fft_forward(space, &field.data);
        let mut d1 = spec.clone();
        spectral_derivative(space, &mut d1, 0);
        let mut d2 = d1.clone();
        spectral_derivative(space, &mut d2, 0);
        gradients.push(SpatialField {
            grid: space.clone(),
            data: fft_inverse_real(space, &d1),
        });
        hessians.push(SpatialField { grid: space.clone(), data: fft_inverse_real(space, &d2) });
        anchors.push(field);
    }

    let diagnostics =
        measure_anchor_regularity(marks, &anchors, &gradients, &hessians, gamma_exp);
    if diagnostics.total() > c2_bound {
        return Err(Error::Regularity(format!(
            "measured C^γ C² constant {:.3e} exceeds bound {c2_bound:.3e} \
             (drift too rough for the local time)",
            diagnostics.total()
        )));
    }
    Ok(GammaField { marks: marks.to_vec(), anchors, gradients, diagnostics })
}

fn measure_anchor_regularity(
    marks: &[f64],
    anchors: &[SpatialField],
    gradients: &[SpatialField],
    hessians: &[SpatialField],
    gamma_exp: f64,
) -> GammaDiagnostics {
    let n = marks.len();
    let mut c = [0.0f64; 3];
    let mut lag = 1;
    while lag < n {
        for i in (0..n - lag).step_by(lag.max(1)) {
            let j = i + lag;
            let dt = (marks[j] - marks[i]).powf(gamma_exp);
            for (which, fields) in [(0, anchors), (1, gradients), (2, hessians)] {
                let sup = fields[j]
                    .data
                    .iter()
                    .zip(&fields[i].data)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                c[which] = c[which].max(sup / dt);
            }
        }
        lag *= 2;
    }
    GammaDiagnostics { gamma_exp, c0: c[0], c1: c[1], c2: c[2] }
}

/// Dyadic-refinement Riemann sums of `∫ Γ_dr(y_r)` with a convergence
/// certificate.
#[derive(Debug, Clone)]
pub struct SewingIntegral {
    /// Left-point integral at the deepest level, cumulative at every mark
    /// (row-major `n × dim`).
    pub cumulative: Vec<f64>,
    pub dim: usize,
    /// Full-interval increment per dyadic level (coarsest first).
    pub level_totals: Vec<Vec<f64>>,
    /// Sup-norm deltas between successive levels.
    pub deltas: Vec<f64>,
    /// Geometric contraction rate measured from the deltas (∞ if exact).
    pub measured_rate: f64,
}

impl SewingIntegral {
    pub fn total(&self) -> &[f64] {
        self.level_totals.last().unwrap()
    }

    /// Richardson extrapolation of the level sequence using the contraction
    /// rate of the deepest level pair; equals the deepest level when the
    /// sums are already exact.
    pub fn extrapolated_total(&self) -> Vec<f64> {
        let deepest = self.total();
        let n = self.deltas.len();
        if n < 2 || self.deltas[n - 1] <= 0.0 {
            return deepest.to_vec();
        }
        let rate = self.deltas[n - 2] / self.deltas[n - 1];
        if !rate.is_finite() || rate <= 1.0 {
            return deepest.to_vec();
        }
        let prev = &self.level_totals[self.level_totals.len() - 2];
        deepest
            .iter()
            .zip(prev)
            .map(|(&d, &p)| d + (d - p) / (rate - 1.0))
            .collect()
    }
}

/// Machine floor below which level deltas are considered converged.
const DELTA_FLOOR: f64 = 1e-13;

/// Compensated Riemann sums `Σ Γ_{u,v}(y_u)` over dyadic refinements of the
/// mark grid (`n - 1` must be a power of two). `y` is row-major `n × dim`.
pub fn sewing_integral(gamma: &impl GammaEval, y: &[f64]) -> Result<SewingIntegral> {
    let marks = gamma.marks();
    let n = marks.len();
    let d = gamma.dim();
    if y.len() != n * d {
        return Err(Error::Domain(format!(
            "y holds {} values, expected {} marks × {} dims",
            y.len(),
            n,
            d
        )));
    }
    let intervals = n - 1;
    if !intervals.is_power_of_two() {
        return Err(Error::Domain(format!(
            "dyadic refinement needs 2^L intervals, got {intervals}"
        )));
    }
    let depth = intervals.trailing_zeros();

    let mut level_totals = Vec::with_capacity(depth as usize + 1);
    let mut buf = vec![0.0; d];
    for level in 0..=depth {
        let step = intervals >> level;
        let mut total = vec![0.0; d];
        let mut i = 0;
        while i < intervals {
            gamma.gamma(i, i + step, &y[i * d..(i + 1) * d], &mut buf);
            for (t, &b) in total.iter_mut().zip(&buf) {
                *t += b;
            }
            i += step;
        }
        level_totals.push(total);
    }

    let scale = level_totals
        .last()
        .unwrap()
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    let mut deltas = Vec::with_capacity(depth as usize);
    for w in level_totals.windows(2) {
        let delta = w[0]
            .iter()
            .zip(&w[1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        deltas.push(delta);
    }
    let floor = DELTA_FLOOR * scale;
    let mut ratios = Vec::new();
    for w in deltas.windows(2) {
        if w[0] > floor && w[1] > floor {
            if w[1] >= w[0] {
                return Err(Error::NoContraction(format!(
                    "sewing level deltas failed to decrease: {} then {}",
                    w[0], w[1]
                )));
            }
            ratios.push(w[0] / w[1]);
        }
    }
    let measured_rate = if ratios.is_empty() {
        f64::INFINITY
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
    };

    // deepest level, cumulative at every mark
    let mut cumulative = vec![0.0; n * d];
    for i in 0..intervals {
        gamma.gamma(i, i + 1, &y[i * d..(i + 1) * d], &mut buf);
        for a in 0..d {
            cumulative[(i + 1) * d + a] = cumulative[i * d + a] + buf[a];
        }
    }

    Ok(SewingIntegral { cumulative, dim: d, level_totals, deltas, measured_rate })
}

#[derive(Debug, Clone)]
pub struct PicardConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Initial window length in marks; shrinks adaptively until the measured
    /// contraction factor is ≤ 1/2. `None` starts from the whole horizon.
    pub window: Option<usize>,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { max_iter: 64, tol: 1e-8, window: None }
    }
}

#[derive(Debug, Clone)]
pub struct WindowDiag {
    pub first_mark: usize,
    pub last_mark: usize,
    pub iterations: usize,
    pub contraction: f64,
}

/// Solution of `θ_t = ξ + ∫_0^t Γ_dr(θ_r)` at mark resolution.
#[derive(Debug, Clone)]
pub struct YoungSolution {
    pub marks: Vec<f64>,
    pub dim: usize,
    /// Row-major `n × dim`.
    pub theta: Vec<f64>,
    pub windows: Vec<WindowDiag>,
    /// Sup-distance to the one-pass Euler variant at matching resolution.
    pub euler_gap: f64,
}

impl YoungSolution {
    pub fn theta_at(&self, i: usize) -> &[f64] {
        &self.theta[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest contraction factor over all windows.
    pub fn worst_contraction(&self) -> f64 {
        self.windows.iter().map(|w| w.contraction).fold(0.0, f64::max)
    }

    /// Reconstruct `x = θ + z` from noise values at the marks.
    pub fn reconstruct_x(&self, z: &[f64]) -> Vec<f64> {
        self.theta.iter().zip(z).map(|(a, b)| a + b).collect()
    }
}

/// Windowed Picard iteration of
/// `θ^{m+1}_t = θ(window start) + Σ_{u<t} Γ_{u,v}(θ^m_u)`, windows sized so
/// the measured contraction factor stays ≤ 1/2.
pub fn picard_solve(
    gamma: &impl GammaEval,
    xi0: &[f64],
    config: &PicardConfig,
) -> Result<YoungSolution> {
    picard_solve_with_init(gamma, xi0, config, None)
}

/// Like [`picard_solve`] with an explicit initial guess offset (a ramp added
/// to the constant initialization), exposed for uniqueness probes.
pub fn picard_solve_with_init(
    gamma: &impl GammaEval,
    xi0: &[f64],
    config: &PicardConfig,
    ramp: Option<&[f64]>,
) -> Result<YoungSolution> {
    let marks = gamma.marks();
    let n = marks.len();
    let d = gamma.dim();
    if xi0.len() != d {
        return Err(Error::Domain(format!("xi0 has {} entries, dim is {d}", xi0.len())));
    }
    let mut theta = vec![0.0; n * d];
    theta[..d].copy_from_slice(xi0);

    let mut windows = Vec::new();
    let mut start = 0usize;
    let mut window = config.window.unwrap_or(n - 1).clamp(1, n - 1);
    let mut buf = vec![0.0; d];
    while start < n - 1 {
        let end = (start + window).min(n - 1);
        let len = end - start + 1;
        let anchor: Vec<f64> = theta[start * d..(start + 1) * d].to_vec();

        // initial guess on the window
        let mut cur = vec![0.0; len * d];
        for j in 0..len {
            for a in 0..d {
                cur[j * d + a] = anchor[a]
                    + ramp.map_or(0.0, |r| r[a] * (marks[start + j] - marks[start]));
            }
        }

        let mut prev_diff = f64::INFINITY;
        let mut worst_ratio = 0.0f64;
        let mut iters = 0usize;
        let mut shrink = false;
        loop {
            iters += 1;
            // one Picard sweep: prefix sums of Γ over the window
            let mut next = vec![0.0; len * d];
            next[..d].copy_from_slice(&anchor);
            for j in 0..len - 1 {
                gamma.gamma(start + j, start + j + 1, &cur[j * d..(j + 1) * d], &mut buf);
                for a in 0..d {
                    next[(j + 1) * d + a] = next[j * d + a] + buf[a];
                }
            }
            let diff = cur
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if prev_diff.is_finite() && prev_diff > config.tol {
                let ratio = diff / prev_diff;
                worst_ratio = worst_ratio.max(ratio);
                if iters == 2 && ratio > 0.5 && window > 1 {
                    shrink = true;
                    break;
                }
            }
            cur = next;
            if diff <= config.tol {
                break;
            }
            if iters >= config.max_iter {
                return Err(Error::MaxIter(format!(
                    "window [{start}, {end}] still moving {diff:e} after {iters} sweeps"
                )));
            }
            prev_diff = diff;
        }
        if shrink {
            window = (window / 2).max(1);
            continue;
        }
        theta[start * d..(end + 1) * d].copy_from_slice(&cur);
        windows.push(WindowDiag {
            first_mark: start,
            last_mark: end,
            iterations: iters,
            contraction: worst_ratio,
        });
        start = end;
    }

    // one-pass Euler variant for the matching-resolution consistency check
    let euler = euler_solve(gamma, xi0);
    let euler_gap = theta
        .iter()
        .zip(&euler)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    Ok(YoungSolution { marks: marks.to_vec(), dim: d, theta, windows, euler_gap })
}

/// One-pass explicit recursion `θ_{j+1} = θ_j + Γ_{t_j, t_{j+1}}(θ_j)`.
pub fn euler_solve(gamma: &impl GammaEval, xi0: &[f64]) -> Vec<f64> {
    let n = gamma.marks().len();
    let d = gamma.dim();
    let mut theta = vec![0.0; n * d];
    theta[..d].copy_from_slice(xi0);
    let mut buf = vec![0.0; d];
    for j in 0..n - 1 {
        gamma.gamma(j, j + 1, &theta[j * d..(j + 1) * d], &mut buf);
        for a in 0..d {
            theta[(j + 1) * d + a] = theta[j * d + a] + buf[a];
        }
    }
    theta
}

/// Sup-norm fixed-point residual `sup_t |θ_t - ξ - Σ_{u<t} Γ_{u,v}(θ_u)|`.
pub fn fixed_point_residual(gamma: &impl GammaEval, solution: &YoungSolution) -> f64 {
    let n = solution.marks.len();
    let d = solution.dim;
    let mut buf = vec![0.0; d];
    let mut acc = solution.theta[..d].to_vec();
    let mut worst = 0.0f64;
    for j in 0..n - 1 {
        gamma.gamma(j, j + 1, solution.theta_at(j), &mut buf);
        for a in 0..d {
            acc[a] += buf[a];
            worst = worst.max((solution.theta[(j + 1) * d + a] - acc[a]).abs());
        }
    }
    worst
}

/// Jacobian path of the flow `ξ ↦ y_t(ξ)`: solves the linear Young equation
/// `∇y_t = I + ∫_0^t ∇Γ_dr(y_r) ∇y_r` by the same windowed scheme.
#[derive(Debug, Clone)]
pub struct FlowDerivative {
    pub marks: Vec<f64>,
    pub dim: usize,
    /// Row-major `n × dim × dim`.
    pub jacobians: Vec<f64>,
    pub windows: Vec<WindowDiag>,
}

impl FlowDerivative {
    pub fn jacobian_at(&self, i: usize) -> &[f64] {
        let dd = self.dim * self.dim;
        &self.jacobians[i * dd..(i + 1) * dd]
    }
}

pub fn flow_derivative(
    gamma: &impl GammaEval,
    solution: &YoungSolution,
    config: &PicardConfig,
) -> Result<FlowDerivative> {
    let marks = gamma.marks();
    let n = marks.len();
    let d = gamma.dim();
    let dd = d * d;
    let mut jac = vec![0.0; n * dd];
    for a in 0..d {
        jac[a * d + a] = 1.0;
    }
    let mut grad = vec![0.0; dd];

    let mut windows = Vec::new();
    let mut start = 0usize;
    let mut window = config.window.unwrap_or(n - 1).clamp(1, n - 1);
    while start < n - 1 {
        let end = (start + window).min(n - 1);
        let len = end - start + 1;
        let anchor: Vec<f64> = jac[start * dd..(start + 1) * dd].to_vec();
        let mut cur = vec![0.0; len * dd];
        for j in 0..len {
            cur[j * dd..(j + 1) * dd].copy_from_slice(&anchor);
        }
        let mut prev_diff = f64::INFINITY;
        let mut worst_ratio = 0.0f64;
        let mut iters = 0usize;
        let mut shrink = false;
        loop {
            iters += 1;
            let mut next = vec![0.0; len * dd];
            next[..dd].copy_from_slice(&anchor);
            for j in 0..len - 1 {
                gamma.gamma_grad(start + j, start + j + 1, solution.theta_at(start + j), &mut grad);
                // next[j+1] = next[j] + grad · cur[j]
                for r in 0..d {
                    for c in 0..d {
                        let mut acc = next[j * dd + r * d + c];
                        for k in 0..d {
                            acc += grad[r * d + k] * cur[j * dd + k * d + c];
                        }
                        next[(j + 1) * dd + r * d + c] = acc;
                    }
                }
            }
            let diff = cur
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if prev_diff.is_finite() && prev_diff > config.tol {
                let ratio = diff / prev_diff;
                worst_ratio = worst_ratio.max(ratio);
                if iters == 2 && ratio > 0.5 && window > 1 {
                    shrink = true;
                    break;
                }
            }
            cur = next;
            if diff <= config.tol {
                break;
            }
            if iters >= config.max_iter {
                return Err(Error::MaxIter(format!(
                    "flow window [{start}, {end}] still moving {diff:e} after {iters} sweeps"
                )));
            }
            prev_diff = diff;
        }
        if shrink {
            window = (window / 2).max(1);
            continue;
        }
        jac[start * dd..(end + 1) * dd].copy_from_slice(&cur);
        windows.push(WindowDiag {
            first_mark: start,
            last_mark: end,
            iterations: iters,
            contraction: worst_ratio,
        });
        start = end;
    }
    Ok(FlowDerivative { marks: marks.to_vec(), dim: d, jacobians: jac, windows })
}

/// Discrete Hölder seminorm `sup_{i≠j} ‖f_i - f_j‖_∞ / |t_i - t_j|^γ` over
/// all mark pairs.
pub fn holder_norm(times: &[f64], values: &[f64], dim: usize, gamma_exp: f64) -> Result<f64> {
    let n = times.len();
    if n < 2 || values.len() != n * dim {
        return Err(Error::Domain("need at least two marks and matching values".into()));
    }
    if !(gamma_exp > 0.0 && gamma_exp <= 1.0) {
        return Err(Error::Domain(format!("holder exponent {gamma_exp} outside (0, 1]")));
    }
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let dt = (times[j] - times[i]).abs().powf(gamma_exp);
            let mut sup = 0.0f64;
            for a in 0..dim {
                sup = sup.max((values[j * dim + a] - values[i * dim + a]).abs());
            }
            best = best.max(sup / dt);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathsim::uniform_grid;
    use approx::assert_relative_eq;

    fn dyadic_marks(depth: u32) -> Vec<f64> {
        (0..=(1usize << depth)).map(|i| i as f64 / (1 << depth) as f64).collect()
    }

    fn linear_y(marks: &[f64]) -> Vec<f64> {
        marks.to_vec()
    }

    #[test]
    fn sewing_constant_rate_field_is_exact() {
        let marks = dyadic_marks(6);
        let g = ClosureGamma {
            marks: marks.clone(),
            dim: 1,
            value: |s, t, _x: &[f64], out: &mut [f64]| out[0] = t - s,
            grad: |_, _, _x: &[f64], out: &mut [f64]| out[0] = 0.0,
        };
        let res = sewing_integral(&g, &linear_y(&marks)).unwrap();
        for level in &res.level_totals {
            assert_relative_eq!(level[0], 1.0, epsilon = 1e-14);
        }
        assert!(res.measured_rate.is_infinite());
    }

    #[test]
    fn sewing_linear_field_halves_per_level() {
        let marks = dyadic_marks(10);
        let g = ClosureGamma {
            marks: marks.clone(),
            dim: 1,
            value: |s, t, x: &[f64], out: &mut [f64]| out[0] = x[0] * (t - s),
            grad: |s, t, _x: &[f64], out: &mut [f64]| out[0] = t - s,
        };
        let res = sewing_integral(&g, &linear_y(&marks)).unwrap();
        // left Riemann sum of ∫_0^1 r dr at level ℓ is 0.5 - 2^{-ℓ-1}
        for (level, total) in res.level_totals.iter().enumerate() {
            let expect = 0.5 - 0.5f64.powi(level as i32 + 1);
            assert_relative_eq!(total[0], expect, epsilon = 1e-13);
            assert!((total[0] - 0.5).abs() <= 1.01 * 0.5f64.powi(level as i32));
        }
        assert_relative_eq!(res.measured_rate, 2.0, max_relative = 1e-9);
        assert_relative_eq!(res.extrapolated_total()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sewing_smooth_field_matches_stieltjes_oracle() {
        // Γ_{s,t}(x) = cos(x)(t² - s²), y_r = r: ∫ cos(r) d(r²) = 2(cos 1 + sin 1 - 1)
        let marks = dyadic_marks(12);
        let g = ClosureGamma {
            marks: marks.clone(),
            dim: 1,
            value: |s, t, x: &[f64], out: &mut [f64]| out[0] = x[0].cos() * (t * t - s * s),
            grad: |s, t, x: &[f64], out: &mut [f64]| out[0] = -x[0].sin() * (t * t - s * s),
        };
        let res = sewing_integral(&g, &linear_y(&marks)).unwrap();
        let oracle = 2.0 * (1f64.cos() + 1f64.sin() - 1.0);
        let extrapolated = res.extrapolated_total()[0];
        assert!(
            (extrapolated - oracle).abs() <= 1e-6,
            "depth-12 sewing {extrapolated} vs oracle {oracle}"
        );
        // certificate: geometric contraction with the γ+η-1 = 1 rate
        assert!(res.measured_rate >= 2f64.powf(0.05));
        for w in res.deltas.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn picard_zero_drift_is_constant() {
        let marks = dyadic_marks(5);
        let g = ClosureGamma {
            marks,
            dim: 1,
            value: |_, _, _x: &[f64], out: &mut [f64]| out[0] = 0.0,
            grad: |_, _, _x: &[f64], out: &mut [f64]| out[0] = 0.0,
        };
        let sol = picard_solve(&g, &[1.3], &PicardConfig::default()).unwrap();
        for i in 0..sol.marks.len() {
            assert_eq!(sol.theta_at(i)[0], 1.3);
        }
        assert_eq!(sol.windows.len(), 1);
        assert!(sol.windows[0].iterations <= 2);
        assert_eq!(sol.euler_gap, 0.0);
    }

    /// dθ/dt = sin(θ), θ_0 = 1, via the frozen-path increment field.
    fn sine_gamma(marks: Vec<f64>) -> impl GammaEval {
        ClosureGamma {
            marks,
            dim: 1,
            value: |s, t, x: &[f64], out: &mut [f64]| out[0] = x[0].sin() * (t - s),
            grad: |s, t, x: &[f64], out: &mut [f64]| out[0] = x[0].cos() * (t - s),
        }
    }

    fn rk4_sine(theta0: f64, t_end: f64, steps: usize) -> f64 {
        let h = t_end / steps as f64;
        let mut y = theta0;
        let f = |x: f64| x.sin();
        for _ in 0..steps {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    #[test]
    fn picard_matches_rk4_for_smooth_drift() {
        let marks: Vec<f64> = uniform_grid(1.0, 1000).to_vec();
        let g = sine_gamma(marks);
        let cfg = PicardConfig { tol: 1e-10, ..Default::default() };
        let sol = picard_solve(&g, &[1.0], &cfg).unwrap();
        let reference = rk4_sine(1.0, 1.0, 1000);
        let got = sol.theta_at(1000)[0];
        assert!(
            (got - reference).abs() <= 1e-3,
            "picard {got} vs RK4 {reference}"
        );
        assert!(sol.euler_gap <= 10.0 * cfg.tol);
        assert!(sol.worst_contraction() <= 0.5);
    }

    #[test]
    fn picard_uniqueness_under_different_initializations() {
        let marks: Vec<f64> = uniform_grid(1.0, 256).to_vec();
        let g = sine_gamma(marks);
        let cfg = PicardConfig { tol: 1e-10, ..Default::default() };
        let a = picard_solve(&g, &[1.0], &cfg).unwrap();
        let b = picard_solve_with_init(&g, &[1.0], &cfg, Some(&[0.8])).unwrap();
        let gap = a
            .theta
            .iter()
            .zip(&b.theta)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 2.0 * cfg.tol, "two initializations disagree by {gap}");
    }

    #[test]
    fn picard_window_independence() {
        let marks: Vec<f64> = uniform_grid(1.0, 256).to_vec();
        let g = sine_gamma(marks);
        let cfg = PicardConfig { tol: 1e-10, ..Default::default() };
        let whole = picard_solve(&g, &[0.7], &cfg).unwrap();
        let halved =
            picard_solve(&g, &[0.7], &PicardConfig { window: Some(32), ..cfg.clone() })
                .unwrap();
        let gap = whole
            .theta
            .iter()
            .zip(&halved.theta)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 2.0 * cfg.tol, "window halving moved the solution by {gap}");
    }

    #[test]
    fn residual_of_solution_is_small() {
        let marks: Vec<f64> = uniform_grid(1.0, 512).to_vec();
        let g = sine_gamma(marks);
        let cfg = PicardConfig { tol: 1e-9, ..Default::default() };
        let sol = picard_solve(&g, &[1.0], &cfg).unwrap();
        assert!(fixed_point_residual(&g, &sol) <= cfg.tol);
    }

    #[test]
    fn flow_of_zero_drift_is_identity() {
        let marks = dyadic_marks(5);
        let g = ClosureGamma {
            marks,
            dim: 1,
            value: |_, _, _x: &[f64], out: &mut [f64]| out[0] = 0.0,
            grad: |_, _, _x: &[f64], out: &mut [f64]| out[0] = 0.0,
        };
        let sol = picard_solve(&g, &[0.0], &PicardConfig::default()).unwrap();
        let flow = flow_derivative(&g, &sol, &PicardConfig::default()).unwrap();
        for i in 0..flow.marks.len() {
            assert_eq!(flow.jacobian_at(i)[0], 1.0);
        }
    }

    #[test]
    fn flow_of_linear_field_is_exponential() {
        let c = 0.3;
        let marks: Vec<f64> = uniform_grid(1.0, 1000).to_vec();
        let g = ClosureGamma {
            marks,
            dim: 1,
            value: move |s, t, x: &[f64], out: &mut [f64]| out[0] = c * x[0] * (t - s),
            grad: move |s, t, _x: &[f64], out: &mut [f64]| out[0] = c * (t - s),
        };
        let cfg = PicardConfig { tol: 1e-12, ..Default::default() };
        let sol = picard_solve(&g, &[1.0], &cfg).unwrap();
        let flow = flow_derivative(&g, &sol, &cfg).unwrap();
        let got = flow.jacobian_at(1000)[0];
        assert!(
            (got - c.exp()).abs() <= 1e-4,
            "flow derivative {got} vs e^c {}",
            c.exp()
        );
    }

    #[test]
    fn flow_matches_central_finite_difference() {
        let marks: Vec<f64> = uniform_grid(1.0, 1024).to_vec();
        let g = sine_gamma(marks);
        let cfg = PicardConfig { tol: 1e-12, ..Default::default() };
        let xi = 1.0;
        let sol = picard_solve(&g, &[xi], &cfg).unwrap();
        let flow = flow_derivative(&g, &sol, &cfg).unwrap();
        let h = 1e-4;
        let up = picard_solve(&g, &[xi + h], &cfg).unwrap();
        let dn = picard_solve(&g, &[xi - h], &cfg).unwrap();
        let fd = (up.theta_at(1024)[0] - dn.theta_at(1024)[0]) / (2.0 * h);
        let got = flow.jacobian_at(1024)[0];
        assert!(
            ((got - fd) / fd).abs() <= 1e-3,
            "flow {got} vs finite difference {fd}"
        );
    }

    #[test]
    fn holder_norm_values() {
        let times: Vec<f64> = uniform_grid(1.0, 64).to_vec();
        let constant = vec![2.0; times.len()];
        assert_eq!(holder_norm(&times, &constant, 1, 0.5).unwrap(), 0.0);

        let linear: Vec<f64> = times.clone();
        assert_relative_eq!(
            holder_norm(&times, &linear, 1, 1.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let sqrt: Vec<f64> = times.iter().map(|t| t.sqrt()).collect();
        assert_relative_eq!(
            holder_norm(&times, &sqrt, 1, 0.5).unwrap(),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn gamma_from_drift_smoke_and_oracle() {
        // smooth lattice drift cos(x) against a unit-speed path: the anchors
        // are A_t(x) = ∫_0^t cos(x + r) dr = sin(x+t) - sin(x)
        let space =
            crate::lattice::SpaceGrid::centered(1, 512, 4.0 * std::f64::consts::PI).unwrap();
        // drift with exactly the cos coefficients
        let b: Vec<f64> = (0..space.cells).map(|i| space.node(i).cos()).collect();
        let fft = crate::lattice::fft_forward(&space, &b);
        let drift = SpectralDrift { space: space.clone(), fft, beta_target: 10.0, seed: 0 };
        let path = SamplePath::from_fn(uniform_grid(1.0, 4096), 1, |t, o| o[0] = t);
        let marks: Vec<f64> = uniform_grid(1.0, 64).to_vec();
        let field = build_gamma_from_drift(&drift, &path, &marks, 0.9, 1e3).unwrap();
        let mut out = [0.0];
        for &x in &[-1.0, 0.0, 0.7] {
            field.gamma(0, 64, &[x], &mut out);
            let expect = (x + 1.0).sin() - x.sin();
            assert!(
                (out[0] - expect).abs() <= 2e-3,
                "gamma at {x}: {} vs {expect}",
                out[0]
            );
        }
        // gradient anchors differentiate the same closed form
        field.gamma_grad(0, 64, &[0.3], &mut out);
        let expect = (0.3f64 + 1.0).cos() - 0.3f64.cos();
        assert!((out[0] - expect).abs() <= 2e-3);
    }

    #[test]
    fn gamma_regularity_bound_enforced() {
        let space =
            crate::lattice::SpaceGrid::centered(1, 256, 4.0 * std::f64::consts::PI).unwrap();
        let b: Vec<f64> = (0..space.cells).map(|i| space.node(i).cos()).collect();
        let fft = crate::lattice::fft_forward(&space, &b);
        let drift = SpectralDrift { space: space.clone(), fft, beta_target: 0.0, seed: 0 };
        let path = SamplePath::from_fn(uniform_grid(1.0, 1024), 1, |t, o| o[0] = t);
        let marks: Vec<f64> = uniform_grid(1.0, 32).to_vec();
        assert!(matches!(
            build_gamma_from_drift(&drift, &path, &marks, 0.9, 1e-6),
            Err(Error::Regularity(_))
        ));
    }
}
