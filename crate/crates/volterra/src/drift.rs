//! Synthetic Sobolev drifts and spectral convolution with local times.
//!
//! A drift `b ∈ H^β` is realized as a random Fourier series with coefficient
//! decay `(1+|ξ|²)^{-(β+d/2+0.05)/2}`; the extra `d/2+0.05` keeps the lattice
//! `H^β` norm stable as the cutoff grows while `H^{β+1/2}` diverges, so the
//! field is a generic element of `H^β` and no better. Convolution with the
//! reflected local time is a pointwise product in frequency:
//! with series coefficients `B_k` of `b` and the occupation spectrum
//! `μ̂(ξ_k) = ∫ e^{iξ_k z_r} dr`, the field `b ∗ L̄` has coefficients
//! `B_k μ̂(ξ_k)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::VolterraKernel;
use crate::lattice::{fft_inverse_real, fft_inverse_residue, SpaceGrid, SpatialField};
use crate::levy::LevyModel;
use crate::occupation::{occupation_fft_spectrum, occupation_fourier_binned};
use crate::pathsim::PathGenerator;
use crate::rng::ReplicaRng;

/// Random drift stored as the FFT of its node samples (Hermitian), together
/// with its construction target.
#[derive(Debug, Clone)]
pub struct SpectralDrift {
    pub space: SpaceGrid,
    /// FFT-layout transform of the node samples: `fft[k] = N·B_k·phase_k`.
    pub fft: Vec<Complex64>,
    pub beta_target: f64,
    pub seed: u64,
}

/// Synthesize `b ∈ H^β` on the lattice with expected norm `target_norm`.
pub fn synth_drift(
    beta: f64,
    space: &SpaceGrid,
    seed: u64,
    target_norm: f64,
) -> Result<SpectralDrift> {
    if !(target_norm > 0.0) {
        return Err(Error::Config("target norm must be positive".into()));
    }
    let n = space.len();
    let d = space.dim as f64;
    let decay_exp = -(beta + d / 2.0 + 0.05) / 2.0;
    let mut rng = ReplicaRng::new(seed, u64::MAX - 1);

    // complex Gaussian coefficients, then Hermitian symmetrization via index
    // negation; self-paired bins become real
    let mut coeff = vec![Complex64::default(); n];
    for slot in coeff.iter_mut() {
        let (a, b) = rng.gaussian_pair();
        *slot = Complex64::new(a / std::f64::consts::SQRT_2, b / std::f64::consts::SQRT_2);
    }
    for flat in 0..n {
        let partner = negate_fft_index(space, flat);
        match partner.cmp(&flat) {
            std::cmp::Ordering::Greater => coeff[partner] = coeff[flat].conj(),
            std::cmp::Ordering::Equal => {
                coeff[flat] = Complex64::new(coeff[flat].re * std::f64::consts::SQRT_2, 0.0)
            }
            std::cmp::Ordering::Less => {}
        }
    }

    // decay profile and normalization: E ‖b‖²_{H^β} = ν² Pᵈ Σ (1+|ξ|²)^{-d/2-0.05}
    let mut weight_sum = 0.0;
    let mut profile = vec![0.0; n];
    for (flat, w) in profile.iter_mut().enumerate() {
        let xi2 = fft_norm_sq(space, flat);
        *w = (1.0 + xi2).powf(decay_exp);
        weight_sum += (1.0 + xi2).powf(-d / 2.0 - 0.05);
    }
    let nu = target_norm / (space.period().powi(space.dim as i32) * weight_sum).sqrt();

    let mut fft = vec![Complex64::default(); n];
    for flat in 0..n {
        // B_k = ν a_k profile_k; fft stores N·B_k·phase_k
        let b_k = nu * profile[flat] * coeff[flat];
        let phase = fft_phase(space, flat);
        fft[flat] = b_k * phase * n as f64;
    }
    Ok(SpectralDrift { space: space.clone(), fft, beta_target: beta, seed })
}

impl SpectralDrift {
    /// Node samples of the drift (real by construction).
    pub fn spatial(&self) -> SpatialField {
        let data = fft_inverse_real(&self.space, &self.fft);
        SpatialField { grid: self.space.clone(), data }
    }

    /// Largest imaginary residue of the inverse transform; bounded by 1e-12
    /// for a correctly symmetrized drift.
    pub fn imaginary_residue(&self) -> f64 {
        fft_inverse_residue(&self.space, &self.fft)
    }

    /// Lattice `H^s` norm: `(Pᵈ Σ (1+|ξ_k|²)^s |B_k|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let n = self.space.len() as f64;
        let mut acc = 0.0;
        for (flat, c) in self.fft.iter().enumerate() {
            let xi2 = fft_norm_sq(&self.space, flat);
            acc += (1.0 + xi2).powf(s) * c.norm_sqr() / (n * n);
        }
        (self.space.period().powi(self.space.dim as i32) * acc).sqrt()
    }

    /// Scale the drift in place (`b ← c·b`).
    pub fn scale(&mut self, c: f64) {
        for v in self.fft.iter_mut() {
            *v *= c;
        }
    }
}

fn negate_fft_index(space: &SpaceGrid, flat: usize) -> usize {
    let m = space.cells;
    let mut rest = flat;
    let mut out = 0usize;
    let mut stride = 1usize;
    for _ in 0..space.dim {
        let idx = rest % m;
        rest /= m;
        let neg = if idx == 0 { 0 } else { m - idx };
        out += neg * stride;
        stride *= m;
    }
    out
}

fn fft_norm_sq(space: &SpaceGrid, flat: usize) -> f64 {
    let m = space.cells;
    let mut rest = flat;
    let mut acc = 0.0;
    for _ in 0..space.dim {
        let idx = rest % m;
        rest /= m;
        let xi = space.fft_wavenumber(idx);
        acc += xi * xi;
    }
    acc
}

fn fft_phase(space: &SpaceGrid, flat: usize) -> Complex64 {
    let m = space.cells;
    let mut rest = flat;
    let mut arg = 0.0;
    for _ in 0..space.dim {
        let idx = rest % m;
        rest /= m;
        arg += space.fft_wavenumber(idx) * space.origin;
    }
    Complex64::from_polar(1.0, arg)
}

/// `(b ∗ L̄)(x)` on the lattice from the occupation spectrum (FFT layout,
/// exact or binned positions). Output is real.
pub fn convolve_spectral(
    drift: &SpectralDrift,
    occupation_spectrum: &[Complex64],
) -> Result<SpatialField> {
    if occupation_spectrum.len() != drift.space.len() {
        return Err(Error::LatticeMismatch(format!(
            "drift lattice holds {} bins, spectrum {}",
            drift.space.len(),
            occupation_spectrum.len()
        )));
    }
    let prod: Vec<Complex64> =
        drift.fft.iter().zip(occupation_spectrum).map(|(a, b)| a * b).collect();
    // A(x_j) = (1/N)·Σ_k FFT(b)[k]·μ̂[k]·e^{+2πijk/N}; the inverse transform
    // carries exactly that 1/N
    let data = fft_inverse_real(&drift.space, &prod);
    Ok(SpatialField { grid: drift.space.clone(), data })
}

/// Lattice Hölder norm `sup|f| + sup_pairs |δf|/|dx|^θ` (first differences
/// for θ ≤ 1, gradient differences for θ ∈ (1,2]), torus metric.
pub fn holder_spatial_norm(field: &SpatialField, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::Domain(format!("theta {theta} outside (0, 2]")));
    }
    if field.grid.dim != 1 {
        return Err(Error::Unsupported("lattice Hölder norm implemented for d = 1".into()));
    }
    let sup = field.max_abs();
    if theta <= 1.0 {
        Ok(sup + pair_quotient(&field.grid, &field.data, theta))
    } else {
        let mut spec = crate::lattice::fft_forward(&field.grid, &field.data);
        crate::lattice::spectral_derivative(&field.grid, &mut spec, 0);
        let grad = fft_inverse_real(&field.grid, &spec);
        Ok(sup + pair_quotient(&field.grid, &grad, theta - 1.0))
    }
}

fn pair_quotient(grid: &SpaceGrid, data: &[f64], theta: f64) -> f64 {
    let m = grid.cells;
    let period = grid.period();
    let mut best = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let raw = (j - i) as f64 * grid.delta;
            let dist = raw.min(period - raw);
            if dist > 0.0 {
                best = best.max((data[i] - data[j]).abs() / dist.powf(theta));
            }
        }
    }
    best
}

/// Empirical form of the convolution regularity inequality: over an ensemble
/// of local times and dyadic windows, the ratio
/// `‖b∗L̄_{s,t}‖_{C^θ} / (‖b‖_{H^β} (t-s)^γ)` must stay bounded.
#[derive(Debug, Clone)]
pub struct ConvolutionBoundReport {
    pub ratios: Vec<f64>,
    pub max_over_median: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn young_convolution_check(
    gen: &PathGenerator,
    replicas: u64,
    drift: &SpectralDrift,
    theta: f64,
    gamma: f64,
    lags: &[f64],
    beta: f64,
) -> Result<ConvolutionBoundReport> {
    let b_norm = drift.sobolev_norm(beta);
    let times = gen.times().clone();
    let t_end = *times.last().unwrap();
    let snap = |x: f64| {
        let i = ((x / t_end) * (times.len() - 1) as f64).round() as usize;
        times[i.min(times.len() - 1)]
    };
    let mut ratios: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = gen.generate(r);
            let mut out = Vec::new();
            for &lag in lags {
                let t0 = snap(lag);
                if t0 <= 0.0 {
                    continue;
                }
                let spec = occupation_fft_spectrum(&path, 0.0, t0, &drift.space)
                    .expect("1-d path on lattice");
                let conv = convolve_spectral(drift, &spec).expect("shared lattice");
                let norm = holder_spatial_norm(&conv, theta).expect("theta validated");
                out.push(norm / (b_norm * t0.powf(gamma)));
            }
            out
        })
        .flatten()
        .collect();
    if ratios.is_empty() {
        return Err(Error::Domain("no usable windows".into()));
    }
    ratios.sort_by(|a, b| a.total_cmp(b));
    let median = ratios[ratios.len() / 2];
    let max = *ratios.last().unwrap();
    Ok(ConvolutionBoundReport { ratios: ratios.clone(), max_over_median: max / median })
}

/// Binned occupation spectrum of a whole window in FFT layout — convenience
/// for feeding [`convolve_spectral`] from a histogram.
pub fn binned_occupation_spectrum(
    path: &crate::pathsim::SamplePath,
    s: f64,
    t: f64,
    space: &SpaceGrid,
) -> Result<Vec<Complex64>> {
    crate::occupation::occupation_fft_spectrum_binned(path, s, t, space)
}

/// Reference Brownian generator for the convolution check.
pub fn brownian_generator(
    t_end: f64,
    steps: usize,
    seed: u64,
) -> Result<PathGenerator> {
    let kernel = VolterraKernel::constant(t_end)?;
    let model = LevyModel::brownian(1.0, 1)?;
    let times = crate::pathsim::uniform_grid(t_end, steps);
    PathGenerator::new(&kernel, &model, &times, seed, crate::pathsim::Scheme::Auto)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathsim::SamplePath;
    use approx::assert_relative_eq;

    fn grid(cells: usize) -> SpaceGrid {
        SpaceGrid::centered(1, cells, 4.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn drift_is_real_and_on_target() {
        let g = grid(512);
        let d = synth_drift(0.5, &g, 11, 1.0).unwrap();
        assert!(d.imaginary_residue() < 1e-12);
        let measured = d.sobolev_norm(0.5);
        assert!(
            (measured - 1.0).abs() <= 0.10,
            "H^0.5 norm {measured} off the unit target"
        );
    }

    #[test]
    fn norm_stable_under_cutoff_doubling_but_higher_order_grows() {
        let beta = 0.0;
        let norm_at = |cells: usize| {
            let g = grid(cells);
            let d = synth_drift(beta, &g, 13, 1.0).unwrap();
            (d.sobolev_norm(beta), d.sobolev_norm(beta + 0.5))
        };
        let (n256, h256) = norm_at(256);
        let (n512, h512) = norm_at(512);
        let (n1024, h1024) = norm_at(1024);
        assert!((n512 - n256).abs() / n256 < 0.10);
        assert!((n1024 - n512).abs() / n512 < 0.10);
        // the +1/2 norm keeps growing with the cutoff
        assert!(h512 > h256 * 1.2 && h1024 > h512 * 1.2, "{h256} {h512} {h1024}");
    }

    #[test]
    fn smooth_drift_has_bounded_gradient() {
        // very large β: finite-difference C¹ norm bounded by 10× the sup
        let g = grid(256);
        let d = synth_drift(10.0, &g, 17, 1.0).unwrap();
        let f = d.spatial();
        let sup = f.max_abs();
        let mut grad_sup = 0.0f64;
        for i in 0..g.cells {
            let j = (i + 1) % g.cells;
            grad_sup = grad_sup.max((f.data[j] - f.data[i]).abs() / g.delta);
        }
        assert!(grad_sup <= 10.0 * sup, "C¹ {grad_sup} vs sup {sup}");
    }

    #[test]
    fn constant_drift_convolution_is_total_mass() {
        let g = grid(128);
        // only the zero-frequency coefficient: b ≡ c
        let c = 0.7;
        let mut fft = vec![Complex64::default(); g.len()];
        fft[0] = Complex64::new(c * g.len() as f64, 0.0);
        let drift = SpectralDrift { space: g.clone(), fft, beta_target: 0.0, seed: 0 };
        let path = SamplePath::from_fn(crate::pathsim::uniform_grid(1.0, 256), 1, |t, o| {
            o[0] = (t * 3.0).sin()
        });
        let spec = occupation_fft_spectrum(&path, 0.0, 0.75, &g).unwrap();
        let conv = convolve_spectral(&drift, &spec).unwrap();
        for &v in &conv.data {
            assert_relative_eq!(v, c * 0.75, epsilon = 1e-10);
        }
    }

    #[test]
    fn delta_surrogate_recovers_reflected_local_time() {
        let g = grid(128);
        // all series coefficients equal: lattice delta surrogate δ_Δ
        let mut fft = vec![Complex64::default(); g.len()];
        for (flat, slot) in fft.iter_mut().enumerate() {
            *slot = fft_phase(&g, flat) * Complex64::new(1.0, 0.0);
        }
        let drift = SpectralDrift { space: g.clone(), fft, beta_target: 0.0, seed: 0 };
        // even occupation: symmetric tent path spends equal time at ±x
        let path = SamplePath::from_fn(crate::pathsim::uniform_grid(1.0, 4096), 1, |t, o| {
            o[0] = if t < 0.5 { 4.0 * t } else { 4.0 * (1.0 - t) }
        });
        let spec = binned_occupation_spectrum(&path, 0.0, 1.0, &g).unwrap();
        let conv = convolve_spectral(&drift, &spec).unwrap();
        // b has mass Δx, so conv/Δx recovers the reflected local-time
        // density up to the delta's mollification scale; the tent path is
        // even so L̄ = L up to node mirroring
        let hist =
            crate::occupation::occupation_histogram(&path, 0.0, 1.0, &g).unwrap();
        let l = hist.rows.last().unwrap();
        for (i, &v) in conv.data.iter().enumerate() {
            let mirrored = l[(g.cells - i) % g.cells];
            assert!(
                (v / g.delta - mirrored).abs() <= 0.2,
                "node {i}: {} vs {mirrored}",
                v / g.delta
            );
        }
    }

    #[test]
    fn plancherel_matches_direct_spatial_convolution() {
        let g = SpaceGrid::centered(1, 8, 8.0).unwrap();
        let b: Vec<f64> = (0..8).map(|i| (i as f64 * 0.9).sin() + 0.2).collect();
        let mass: Vec<f64> = (0..8).map(|i| ((i * 3) % 5) as f64 / 10.0).collect();
        // spectrum of the masses: μ̂(ξ_k) = Σ_i m_i e^{i ξ_k x_i}
        let mut spec = vec![Complex64::default(); 8];
        for k in 0..8 {
            let xi = g.fft_wavenumber(k);
            for (i, &m) in mass.iter().enumerate() {
                spec[k] += Complex64::from_polar(m, xi * g.node(i));
            }
        }
        let mut fft = crate::lattice::fft_forward(&g, &b);
        for v in fft.iter_mut() {
            *v = *v;
        }
        let drift = SpectralDrift { space: g.clone(), fft, beta_target: 0.0, seed: 0 };
        let conv = convolve_spectral(&drift, &spec).unwrap();
        // direct: (b ∗ L̄)(x_j) = Σ_i b_i L(x_i - x_j) Δx = Σ_i b_i m_{(i-j+M/2) mod M}
        for j in 0..8 {
            let mut direct = 0.0;
            for i in 0..8 {
                direct += b[i] * mass[(i + 8 - j + 4) % 8];
            }
            assert!(
                (conv.data[j] - direct).abs() <= 1e-9,
                "node {j}: {} vs {direct}",
                conv.data[j]
            );
        }
    }

    #[test]
    fn convolution_is_linear_in_the_drift() {
        let g = grid(128);
        let mut d = synth_drift(0.3, &g, 19, 1.0).unwrap();
        let path = SamplePath::from_fn(crate::pathsim::uniform_grid(1.0, 512), 1, |t, o| {
            o[0] = (5.0 * t).cos()
        });
        let spec = occupation_fft_spectrum(&path, 0.0, 1.0, &g).unwrap();
        let base = convolve_spectral(&d, &spec).unwrap();
        d.scale(3.5);
        let scaled = convolve_spectral(&d, &spec).unwrap();
        for (a, b) in base.data.iter().zip(&scaled.data) {
            assert!((3.5 * a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn holder_norm_of_constant_and_cosine() {
        let g = SpaceGrid::centered(1, 512, 2.0 * std::f64::consts::PI).unwrap();
        let constant = SpatialField { grid: g.clone(), data: vec![0.4; g.len()] };
        assert_relative_eq!(
            holder_spatial_norm(&constant, 0.5).unwrap(),
            0.4,
            epsilon = 1e-12
        );
        let cosine = SpatialField::from_fn(&g, |x| x[0].cos());
        let norm = holder_spatial_norm(&cosine, 1.0).unwrap();
        assert!((norm - 2.0).abs() <= 5e-2, "C¹ norm of cos: {norm}");
    }

    #[test]
    fn holder_norm_monotone_in_theta_for_fine_lattice() {
        let g = SpaceGrid::centered(1, 256, 2.0 * std::f64::consts::PI).unwrap();
        let f = SpatialField::from_fn(&g, |x| (2.0 * x[0]).sin() + 0.3 * (5.0 * x[0]).cos());
        let a = holder_spatial_norm(&f, 0.4).unwrap();
        let b = holder_spatial_norm(&f, 0.7).unwrap();
        let c = holder_spatial_norm(&f, 1.0).unwrap();
        assert!(a <= b && b <= c, "{a} {b} {c}");
    }

    #[test]
    fn reflection_correctness_for_even_mass() {
        let g = grid(64);
        let drift = synth_drift(1.0, &g, 23, 1.0).unwrap();
        // even mass: m(x) = m(-x) about the origin node
        let mut mass = vec![0.0; g.cells];
        for i in 0..g.cells {
            let x = g.node(i);
            mass[i] = (-x * x).exp();
        }
        let spec_of = |m: &[f64]| {
            let mut s = vec![Complex64::default(); g.cells];
            for k in 0..g.cells {
                let xi = g.fft_wavenumber(k);
                for (i, &v) in m.iter().enumerate() {
                    s[k] += Complex64::from_polar(v, xi * g.node(i));
                }
            }
            s
        };
        let spec = spec_of(&mass);
        // reflected mass: L̄(x) = L(-x)
        let mut reflected = vec![0.0; g.cells];
        for i in 0..g.cells {
            reflected[(g.cells - i) % g.cells] = mass[i];
        }
        let spec_reflected = spec_of(&reflected);
        let a = convolve_spectral(&drift, &spec).unwrap();
        let b = convolve_spectral(&drift, &spec_reflected).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn convolution_bound_stays_tame_on_brownian_ensemble() {
        let gen = brownian_generator(1.0, 512, 29).unwrap();
        let g = grid(256);
        let drift = synth_drift(1.0, &g, 31, 1.0).unwrap();
        // β + κ > θ with κ ≈ 1/2 for Brownian local time
        let report = young_convolution_check(
            &gen,
            24,
            &drift,
            1.0,
            0.625,
            &[0.5, 0.25, 0.125, 0.0625],
            1.0,
        )
        .unwrap();
        assert!(
            report.max_over_median <= 10.0,
            "max/median {}",
            report.max_over_median
        );
    }
}
