//! Occupation measures, local times, their Fourier transforms and the
//! space/time regularity estimators.
//!
//! The occupation measure of a window `[s,t]` is `μ_{s,t}(A) = λ{r ∈ [s,t] :
//! z_r ∈ A}`; its density per cell is the local-time histogram. Its Fourier
//! transform `μ̂_{s,t}(ξ) = ∫_s^t exp(i⟨ξ, z_r⟩) dr` is accumulated directly
//! along the path (left-endpoint rule, matching the Volterra discretization),
//! and lattice Sobolev norms `(2π)^{-d} Σ (1+|ξ|²)^κ |μ̂|² Δξ^d` feed the
//! regularity fits.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{fft_forward, FreqGrid, SpaceGrid};
use crate::pathsim::{index_of_time, PathGenerator, SamplePath};
use crate::stats::{bootstrap_ci, linear_fit, MeanVar};

/// Local time on a space-time grid. Rows are cumulative from the first time
/// mark, so `rows[k]` approximates the density of `μ_{marks[0], marks[k]}`.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    pub grid: SpaceGrid,
    pub time_marks: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// Occupation mass carried by steps outside the bounding box.
    pub clipped_mass: f64,
}

impl LocalTimeField {
    /// Total mass `Σ L_t(x) Δx^d` of the last row.
    pub fn total_mass(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| {
            r.iter().sum::<f64>() * self.grid.cell_volume()
        })
    }
}

/// Fourier transform of the occupation measure on a symmetric frequency
/// lattice.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: FreqGrid,
    pub window: (f64, f64),
    pub values: Vec<Complex64>,
}

impl SpectralField {
    pub fn value_at_zero(&self) -> Complex64 {
        self.values[self.grid.len() / 2]
    }
}

/// Histogram local time of the window `[s, t]`: each step contributes its
/// duration to the cell of its left endpoint, divided by the cell volume.
pub fn occupation_histogram(
    path: &SamplePath,
    s: f64,
    t: f64,
    grid: &SpaceGrid,
) -> Result<LocalTimeField> {
    let field = local_time_marks(path, &[s, t], grid)?;
    Ok(field)
}

/// Cumulative local-time rows at several marks (all must be grid times of
/// the path, increasing).
pub fn local_time_marks(
    path: &SamplePath,
    marks: &[f64],
    grid: &SpaceGrid,
) -> Result<LocalTimeField> {
    if grid.dim != path.dim {
        return Err(Error::LatticeMismatch(format!(
            "grid dim {} vs path dim {}",
            grid.dim, path.dim
        )));
    }
    if marks.len() < 2 || marks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("need at least two increasing marks".into()));
    }
    let idx: Vec<usize> =
        marks.iter().map(|&m| index_of_time(&path.times, m)).collect::<Result<_>>()?;

    let inv_vol = 1.0 / grid.cell_volume();
    let mut rows = Vec::with_capacity(marks.len());
    let mut density = vec![0.0; grid.len()];
    let mut clipped = 0.0;
    rows.push(density.clone());
    for w in idx.windows(2) {
        for j in w[0]..w[1] {
            let dr = path.times[j + 1] - path.times[j];
            match grid.index_of(path.value(j)) {
                Some(cell) => density[cell] += dr * inv_vol,
                None => clipped += dr,
            }
        }
        rows.push(density.clone());
    }
    Ok(LocalTimeField {
        grid: grid.clone(),
        time_marks: marks.to_vec(),
        rows,
        clipped_mass: clipped,
    })
}

/// `μ̂_{s,t}(ξ) = Σ_steps exp(i⟨ξ, z_r⟩) Δr` by direct summation over exact
/// path positions.
pub fn occupation_fourier(
    path: &SamplePath,
    s: f64,
    t: f64,
    freq: &FreqGrid,
) -> Result<SpectralField> {
    if freq.dim != path.dim {
        return Err(Error::LatticeMismatch(format!(
            "freq dim {} vs path dim {}",
            freq.dim, path.dim
        )));
    }
    let i0 = index_of_time(&path.times, s)?;
    let i1 = index_of_time(&path.times, t)?;
    if i1 <= i0 {
        return Err(Error::Domain("window must have s < t".into()));
    }
    let mut values = vec![Complex64::default(); freq.len()];
    match freq.dim {
        1 => {
            // geometric recursion over the lattice: e^{i k Δξ z} = w^k
            let half = freq.half;
            for j in i0..i1 {
                let dr = path.times[j + 1] - path.times[j];
                let z = path.value(j)[0];
                let w = Complex64::from_polar(1.0, freq.dxi * z);
                let mut pow = Complex64::new(1.0, 0.0);
                values[half] += dr;
                for k in 1..=half {
                    pow *= w;
                    values[half + k] += pow * dr;
                    values[half - k] += pow.conj() * dr;
                }
            }
        }
        _ => {
            let mut xi = vec![0.0; freq.dim];
            for j in i0..i1 {
                let dr = path.times[j + 1] - path.times[j];
                let z = path.value(j);
                for (flat, slot) in values.iter_mut().enumerate() {
                    freq.point(flat, &mut xi);
                    let dot: f64 = xi.iter().zip(z).map(|(a, b)| a * b).sum();
                    *slot += Complex64::from_polar(dr, dot);
                }
            }
        }
    }
    Ok(SpectralField { grid: freq.clone(), window: (s, t), values })
}

/// Occupation spectrum in FFT layout (length `grid.cells`, d = 1), from
/// exact path positions; index `m` carries wavenumber
/// `grid.fft_wavenumber(m)`. This is the input to spectral convolution.
pub fn occupation_fft_spectrum(
    path: &SamplePath,
    s: f64,
    t: f64,
    grid: &SpaceGrid,
) -> Result<Vec<Complex64>> {
    if grid.dim != 1 || path.dim != 1 {
        return Err(Error::Unsupported("FFT-layout occupation spectrum is 1-d".into()));
    }
    let i0 = index_of_time(&path.times, s)?;
    let i1 = index_of_time(&path.times, t)?;
    let m = grid.cells;
    let dxi = 2.0 * std::f64::consts::PI / grid.period();
    let mut spec = vec![Complex64::default(); m];
    for j in i0..i1 {
        let dr = path.times[j + 1] - path.times[j];
        let w = Complex64::from_polar(1.0, dxi * path.value(j)[0]);
        let mut pow = Complex64::new(1.0, 0.0);
        spec[0] += dr;
        for k in 1..=m / 2 {
            pow *= w;
            if k < m / 2 {
                spec[k] += pow * dr;
                spec[m - k] += pow.conj() * dr;
            } else {
                spec[k] += pow * dr; // Nyquist
            }
        }
    }
    Ok(spec)
}

/// FFT-layout spectrum of the *binned* occupation (histogram masses at the
/// cell nodes): `spec[k] = Σ_i mass_i e^{i ξ_k x_i}` (d = 1).
pub fn occupation_fft_spectrum_binned(
    path: &SamplePath,
    s: f64,
    t: f64,
    space: &SpaceGrid,
) -> Result<Vec<Complex64>> {
    if space.dim != 1 || path.dim != 1 {
        return Err(Error::Unsupported("binned FFT-layout spectrum is 1-d".into()));
    }
    let hist = occupation_histogram(path, s, t, space)?;
    let mut buf: Vec<Complex64> = hist
        .rows
        .last()
        .unwrap()
        .iter()
        .map(|&d| Complex64::new(d * space.cell_volume(), 0.0))
        .collect();
    // Σ_i m_i e^{+iξ_k x_i} = e^{iξ_k·origin}·IDFT(m)[k]
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_inverse(space.cells).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let xi = space.fft_wavenumber(k);
        *v *= Complex64::from_polar(1.0, xi * space.origin);
    }
    Ok(buf)
}

/// Same transform computed from binned positions: directly (`fft: false`) or
/// through an FFT of the histogram (`fft: true`). The two binned routes must
/// agree to ~1e-6 relative; the binned-vs-exact difference is the
/// mollification error.
pub fn occupation_fourier_binned(
    path: &SamplePath,
    s: f64,
    t: f64,
    space: &SpaceGrid,
    use_fft: bool,
) -> Result<SpectralField> {
    let freq = space.freq();
    let mut values = vec![Complex64::default(); freq.len()];
    if use_fft {
        let spec = occupation_fft_spectrum_binned(path, s, t, space)?;
        let half = freq.half;
        for k_signed in -(half as isize)..=(half as isize) {
            let idx = if k_signed >= 0 {
                k_signed as usize
            } else {
                (space.cells as isize + k_signed) as usize
            };
            values[(k_signed + half as isize) as usize] = spec[idx];
        }
    } else {
        let hist = occupation_histogram(path, s, t, space)?;
        let mass: Vec<f64> =
            hist.rows.last().unwrap().iter().map(|&d| d * space.cell_volume()).collect();
        let mut xi = vec![0.0; freq.dim];
        for (flat, slot) in values.iter_mut().enumerate() {
            freq.point(flat, &mut xi);
            let mut acc = Complex64::default();
            for (i, &m) in mass.iter().enumerate() {
                if m != 0.0 {
                    acc += Complex64::from_polar(m, xi[0] * space.node(i));
                }
            }
            *slot = acc;
        }
    }
    Ok(SpectralField { grid: freq, window: (s, t), values })
}

/// Lattice Sobolev norm-square with a frequency-truncation tail estimate.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    /// `(2π)^{-d} Σ (1+|ξ|²)^κ |μ̂(ξ)|² Δξ^d` over the lattice.
    pub lattice: f64,
    /// Extrapolated contribution beyond the cutoff from the fitted decay;
    /// infinite when κ reaches the decay limit.
    pub tail: f64,
}

impl NormEstimate {
    pub fn total(&self) -> f64 {
        self.lattice + self.tail
    }

    /// Flags κ too close to the decay limit (tail above 10% of the sum).
    pub fn tail_dominated(&self) -> bool {
        !(self.tail <= 0.1 * self.lattice)
    }
}

/// Squared `H^κ` norm of the window's occupation density on the lattice.
pub fn sobolev_norm_sq(field: &SpectralField, kappa: f64) -> NormEstimate {
    let d = field.grid.dim;
    let norm_const = (2.0 * std::f64::consts::PI).powi(-(d as i32));
    let vol = field.grid.volume_element();
    let mut lattice = 0.0;
    for (flat, v) in field.values.iter().enumerate() {
        let w = (1.0 + field.grid.norm_sq(flat)).powf(kappa);
        lattice += w * v.norm_sqr();
    }
    lattice *= norm_const * vol;

    // fit |μ̂|² ~ C (1+|ξ|²)^{-λ} on the top half of the band (d=1 shells)
    let cutoff = field.grid.cutoff();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (flat, v) in field.values.iter().enumerate() {
        let r2 = field.grid.norm_sq(flat);
        if r2 >= (0.5 * cutoff).powi(2) && v.norm_sqr() > 0.0 {
            xs.push((1.0 + r2).ln());
            ys.push(v.norm_sqr().ln());
        }
    }
    let tail = if xs.len() >= 8 {
        let fit = linear_fit(&xs, &ys);
        let lambda = -fit.slope;
        let log_c = fit.intercept;
        // d-dim shell integral of C (1+ξ²)^{κ-λ} beyond Ξ
        let p = 2.0 * (lambda - kappa) - d as f64;
        if p > 0.05 {
            let surface = match d {
                1 => 2.0,
                2 => 2.0 * std::f64::consts::PI,
                _ => 4.0 * std::f64::consts::PI,
            };
            norm_const * log_c.exp() * surface * cutoff.powf(-p) / p
        } else {
            f64::INFINITY
        }
    } else {
        0.0
    };
    NormEstimate { lattice, tail }
}

/// Band of |ξ| used by the regularity fits, as fractions of the cutoff.
#[derive(Debug, Clone, Copy)]
pub struct FitBand {
    pub lo: f64,
    pub hi: f64,
}

impl Default for FitBand {
    fn default() -> Self {
        // avoids the low-frequency plateau and cutoff corruption
        Self { lo: 1.0 / 8.0, hi: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct SpatialRegularity {
    pub lambda_hat: f64,
    pub kappa_hat: f64,
    pub kappa_ci: (f64, f64),
    pub r2: f64,
    /// Number of lattice points in the fit band.
    pub band_points: usize,
}

/// Fit `log E[|μ̂_{s,t}(ξ)|^p]^{1/p}` against `log(1+|ξ|²)` over the band to
/// estimate the spectral decay λ and the Sobolev ceiling κ = λ - d/2.
pub fn estimate_spatial_regularity(
    gen: &PathGenerator,
    replicas: u64,
    s: f64,
    t: f64,
    freq: &FreqGrid,
    p: u32,
    band: FitBand,
    bootstrap_resamples: usize,
    seed: u64,
) -> Result<SpatialRegularity> {
    if replicas < 100 {
        return Err(Error::Domain(format!("need >= 100 replicas, got {replicas}")));
    }
    if p < 2 || p % 2 != 0 {
        return Err(Error::Domain(format!("p must be an even integer >= 2, got {p}")));
    }
    let d = freq.dim;
    let cutoff = freq.cutoff();
    // band lattice points with |ξ| in [lo·Ξ, hi·Ξ]; keep one representative
    // of each ±ξ pair (|μ̂| is even)
    let mut band_flat = Vec::new();
    let mut band_x = Vec::new();
    for flat in 0..freq.len() {
        let r2 = freq.norm_sq(flat);
        let r = r2.sqrt();
        if r >= band.lo * cutoff && r <= band.hi * cutoff && flat > freq.negate(flat) {
            band_flat.push(flat);
            band_x.push((1.0 + r2).ln());
        }
    }
    if band_flat.len() < 6 {
        return Err(Error::Domain(format!(
            "fit band holds only {} lattice points",
            band_flat.len()
        )));
    }

    // per-replica rows of |μ̂(ξ)|^p on the band (kept for the bootstrap)
    let rows: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = gen.generate(r);
            let field = occupation_fourier(&path, s, t, freq).expect("window on grid");
            band_flat
                .iter()
                .map(|&flat| field.values[flat].norm_sqr().powi(p as i32 / 2))
                .collect()
        })
        .collect();

    let fit_from = |idx: &[usize]| -> (f64, f64) {
        let inv = 1.0 / idx.len() as f64;
        let ys: Vec<f64> = (0..band_flat.len())
            .map(|k| {
                let mean: f64 = idx.iter().map(|&i| rows[i][k]).sum::<f64>() * inv;
                mean.max(1e-300).ln() / p as f64
            })
            .collect();
        let fit = linear_fit(&band_x, &ys);
        (-2.0 * fit.slope, fit.r2)
    };

    let all: Vec<usize> = (0..replicas as usize).collect();
    let (lambda_hat, r2) = fit_from(&all);
    let kappa_hat = lambda_hat - d as f64 / 2.0;
    if r2 < 0.9 {
        return Err(Error::FitQuality(format!(
            "spatial decay fit has R²={r2:.3} < 0.9 over {} points",
            band_flat.len()
        )));
    }
    let kappa_ci = bootstrap_ci(
        replicas as usize,
        bootstrap_resamples,
        seed,
        |idx| fit_from(idx).0 - d as f64 / 2.0,
        0.95,
    );
    Ok(SpatialRegularity { lambda_hat, kappa_hat, kappa_ci, r2, band_points: band_flat.len() })
}

#[derive(Debug, Clone)]
pub struct TimeRegularity {
    pub gamma_hat: f64,
    pub gamma_ci: (f64, f64),
    pub r2: f64,
}

/// Regress `log E[‖μ_{s,s+ℓ}‖_{H^κ}^p]^{1/p}` on `log ℓ` over dyadic lags,
/// averaging over window starts.
pub fn estimate_time_regularity(
    gen: &PathGenerator,
    replicas: u64,
    kappa: f64,
    lags: &[f64],
    starts_per_lag: usize,
    p: u32,
    freq: &FreqGrid,
    bootstrap_resamples: usize,
    seed: u64,
) -> Result<TimeRegularity> {
    if lags.len() < 3 {
        return Err(Error::Domain("need at least three lags".into()));
    }
    if p < 2 || p % 2 != 0 {
        return Err(Error::Domain(format!("p must be an even integer >= 2, got {p}")));
    }
    let times = gen.times().clone();
    let t_end = *times.last().unwrap();
    // windows (start, start+lag) snapped to grid times
    let mut windows: Vec<(f64, f64, usize)> = Vec::new(); // (s, t, lag index)
    for (li, &lag) in lags.iter().enumerate() {
        if !(lag > 0.0) || lag > t_end {
            return Err(Error::Domain(format!("lag {lag} outside (0, {t_end}]")));
        }
        for k in 0..starts_per_lag {
            let s = (t_end - lag) * k as f64 / starts_per_lag.max(1) as f64;
            let snap = |x: f64| {
                let i = ((x / t_end) * (times.len() - 1) as f64).round() as usize;
                times[i.min(times.len() - 1)]
            };
            let (s0, t0) = (snap(s), snap(s + lag));
            if t0 > s0 {
                windows.push((s0, t0, li));
            }
        }
    }

    // per replica: H^κ norm of each window via cumulative spectra
    let rows: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = gen.generate(r);
            windows
                .iter()
                .map(|&(s0, t0, _)| {
                    let field =
                        occupation_fourier(&path, s0, t0, freq).expect("window on grid");
                    sobolev_norm_sq(&field, kappa).lattice.max(0.0).powi(p as i32 / 2)
                })
                .collect()
        })
        .collect();

    let log_lags: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
    let fit_from = |idx: &[usize]| -> (f64, f64) {
        let mut acc = vec![MeanVar::default(); lags.len()];
        for (w, &(_, _, li)) in windows.iter().enumerate() {
            for &i in idx {
                acc[li].push(rows[i][w]);
            }
        }
        // E[(norm²)^{p/2}]^{1/p}
        let ys: Vec<f64> =
            acc.iter().map(|m| m.mean.max(1e-300).ln() / p as f64).collect();
        let fit = linear_fit(&log_lags, &ys);
        (fit.slope, fit.r2)
    };

    let all: Vec<usize> = (0..replicas as usize).collect();
    let (gamma_hat, r2) = fit_from(&all);
    if r2 < 0.9 {
        return Err(Error::FitQuality(format!("time regularity fit has R²={r2:.3} < 0.9")));
    }
    let gamma_ci = bootstrap_ci(
        replicas as usize,
        bootstrap_resamples,
        seed,
        |idx| fit_from(idx).0,
        0.95,
    );
    Ok(TimeRegularity { gamma_hat, gamma_ci, r2 })
}

/// Ratio table of the measured moment against the fitted envelope
/// `(1+|ξ|²)^{-λ/2} (t-s)^γ`.
#[derive(Debug, Clone)]
pub struct MomentBoundReport {
    pub xi_radii: Vec<f64>,
    pub lags: Vec<f64>,
    /// `ratios[xi][lag]`
    pub ratios: Vec<Vec<f64>>,
    pub max_over_median: f64,
}

pub fn mc_moment_bound_check(
    gen: &PathGenerator,
    replicas: u64,
    xi_radii: &[f64],
    lags: &[f64],
    p: u32,
    lambda_hat: f64,
    gamma_hat: f64,
) -> Result<MomentBoundReport> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::Domain(format!("p must be an even integer >= 2, got {p}")));
    }
    let times = gen.times().clone();
    let t_end = *times.last().unwrap();
    let snap = |x: f64| {
        let i = ((x / t_end) * (times.len() - 1) as f64).round() as usize;
        times[i.min(times.len() - 1)]
    };
    let windows: Vec<(f64, f64)> = lags
        .iter()
        .map(|&l| (0.0, snap(l)))
        .filter(|&(s, t)| t > s)
        .collect();
    let d = gen.dim();

    // moments E|μ̂_{0,ℓ}(ξ e₁)|^p accumulated in parallel
    let cells = xi_radii.len() * windows.len();
    let acc = (0..replicas)
        .into_par_iter()
        .fold(
            || vec![MeanVar::default(); cells],
            |mut acc, r| {
                let path = gen.generate(r);
                for (wi, &(s0, t0)) in windows.iter().enumerate() {
                    let i0 = index_of_time(&path.times, s0).unwrap();
                    let i1 = index_of_time(&path.times, t0).unwrap();
                    for (xi_i, &radius) in xi_radii.iter().enumerate() {
                        let mut v = Complex64::default();
                        for j in i0..i1 {
                            let dr = path.times[j + 1] - path.times[j];
                            v += Complex64::from_polar(dr, radius * path.value(j)[0]);
                        }
                        acc[xi_i * windows.len() + wi]
                            .push(v.norm_sqr().powi(p as i32 / 2));
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![MeanVar::default(); cells],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        );
    let _ = d;

    let mut ratios = Vec::with_capacity(xi_radii.len());
    let mut flat = Vec::new();
    for (xi_i, &radius) in xi_radii.iter().enumerate() {
        let mut row = Vec::with_capacity(windows.len());
        for (wi, &(s0, t0)) in windows.iter().enumerate() {
            let moment = acc[xi_i * windows.len() + wi].mean.powf(1.0 / p as f64);
            let envelope =
                (1.0 + radius * radius).powf(-lambda_hat / 2.0) * (t0 - s0).powf(gamma_hat);
            let ratio = moment / envelope;
            row.push(ratio);
            flat.push(ratio);
        }
        ratios.push(row);
        let _ = xi_i;
    }
    flat.sort_by(|a, b| a.total_cmp(b));
    let median = flat[flat.len() / 2];
    let max = *flat.last().unwrap();
    Ok(MomentBoundReport {
        xi_radii: xi_radii.to_vec(),
        lags: windows.iter().map(|&(s0, t0)| t0 - s0).collect(),
        ratios,
        max_over_median: max / median,
    })
}

/// Compare `∫_s^t b(ξ + z_r) dr` (time quadrature along the path) against
/// `(b ∗ L̄_{s,t})(ξ)` (spectral convolution with the histogram local time)
/// on every lattice node; returns the maximum absolute discrepancy.
pub fn local_time_formula_check(
    b: &dyn Fn(f64) -> f64,
    path: &SamplePath,
    s: f64,
    t: f64,
    space: &SpaceGrid,
) -> Result<f64> {
    if space.dim != 1 || path.dim != 1 {
        return Err(Error::Unsupported("formula check implemented for d = 1".into()));
    }
    let i0 = index_of_time(&path.times, s)?;
    let i1 = index_of_time(&path.times, t)?;

    // right side: spectral convolution of lattice samples of b with the
    // histogram local time's spectrum (so the check measures the histogram
    // mollification error, which must halve under refinement)
    let b_samples: Vec<f64> = (0..space.cells).map(|i| b(space.node(i))).collect();
    let spec = occupation_fft_spectrum_binned(path, s, t, space)?;
    let rhs = convolve_b_with_occupation(space, &b_samples, &spec);

    let mut max_err = 0.0f64;
    for (i, &r) in rhs.iter().enumerate() {
        let shift = space.node(i);
        let mut lhs = 0.0;
        for j in i0..i1 {
            let dr = path.times[j + 1] - path.times[j];
            lhs += b(shift + path.value(j)[0]) * dr;
        }
        max_err = max_err.max((lhs - r).abs());
    }
    Ok(max_err)
}

/// `(b ∗ L̄)(x_j)` on the lattice via one FFT cycle: with series coefficients
/// `B_k` of `b` and the occupation spectrum `μ̂(ξ_k)`, the convolution has
/// coefficients `B_k μ̂(ξ_k)`, which collapses to
/// `ifft(fft(b) ⊙ μ̂) / cells`.
pub fn convolve_b_with_occupation(
    space: &SpaceGrid,
    b_samples: &[f64],
    occupation_spectrum: &[Complex64],
) -> Vec<f64> {
    let m = space.cells;
    let mut buf = fft_forward(space, b_samples);
    for (c, o) in buf.iter_mut().zip(occupation_spectrum) {
        *c *= o;
    }
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.re / m as f64).collect()
}
