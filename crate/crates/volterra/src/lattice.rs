//! Uniform spatial lattices on a periodic torus, compatible frequency grids,
//! FFT helpers and periodic cubic interpolation.
//!
//! Spatial fields live on nodes `x_i = origin + i·Δx` per axis with the torus
//! period `P = cells·Δx`; the matching frequency lattice carries wavenumbers
//! `ξ_n = 2π n / P`. Spectral convolution is exact on the torus, which is the
//! reason this module exists.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniform d-dimensional grid (same cell count and spacing per axis),
/// centered so the torus covers `[-P/2, P/2)` by default.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    pub dim: usize,
    pub cells: usize,
    pub delta: f64,
    pub origin: f64,
}

impl SpaceGrid {
    pub fn centered(dim: usize, cells: usize, period: f64) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Config(format!("grid dimension {dim} outside 1..=3")));
        }
        if cells < 8 || !cells.is_power_of_two() {
            return Err(Error::Config(format!(
                "cells per axis must be a power of two >= 8, got {cells}"
            )));
        }
        if !(period > 0.0) {
            return Err(Error::Config(format!("period {period} must be positive")));
        }
        Ok(Self { dim, cells, delta: period / cells as f64, origin: -0.5 * period })
    }

    pub fn period(&self) -> f64 {
        self.cells as f64 * self.delta
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.delta.powi(self.dim as i32)
    }

    /// Axis coordinate of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.delta
    }

    /// Flat index of the cell containing `x` (nearest node), or `None` when
    /// `x` falls outside the bounding box.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        debug_assert_eq!(x.len(), self.dim);
        let mut flat = 0usize;
        for &xi in x {
            let u = (xi - self.origin) / self.delta + 0.5;
            if u < 0.0 || u >= self.cells as f64 {
                return None;
            }
            flat = flat * self.cells + (u as usize).min(self.cells - 1);
        }
        Some(flat)
    }

    /// Signed FFT-layout wavenumber for axis index `i`: `i` for
    /// `i < cells/2`, `i - cells` otherwise, scaled by `2π/P`.
    pub fn fft_wavenumber(&self, i: usize) -> f64 {
        let n = if i < self.cells / 2 { i as isize } else { i as isize - self.cells as isize };
        2.0 * std::f64::consts::PI * n as f64 / self.period()
    }

    /// Symmetric frequency lattice embedded in this grid's FFT layout.
    pub fn freq(&self) -> FreqGrid {
        FreqGrid {
            dim: self.dim,
            half: self.cells / 2 - 1,
            dxi: 2.0 * std::f64::consts::PI / self.period(),
        }
    }
}

/// Symmetric lattice of frequencies `ξ_n = n·Δξ`, `n ∈ {-half,..,half}` per
/// axis, with cutoff `Ξ = half·Δξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqGrid {
    pub dim: usize,
    pub half: usize,
    pub dxi: f64,
}

impl FreqGrid {
    pub fn new(dim: usize, half: usize, dxi: f64) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Config(format!("freq dimension {dim} outside 1..=3")));
        }
        if half == 0 || !(dxi > 0.0) {
            return Err(Error::Config("frequency lattice needs half >= 1 and dxi > 0".into()));
        }
        Ok(Self { dim, half, dxi })
    }

    pub fn per_axis(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cutoff(&self) -> f64 {
        self.half as f64 * self.dxi
    }

    pub fn volume_element(&self) -> f64 {
        self.dxi.powi(self.dim as i32)
    }

    /// Write the frequency vector of flat index `flat` into `out`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let m = self.per_axis();
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            let idx = rest % m;
            rest /= m;
            out[axis] = (idx as isize - self.half as isize) as f64 * self.dxi;
        }
    }

    /// Flat index of `-ξ` given the flat index of `ξ`.
    pub fn negate(&self, flat: usize) -> usize {
        let m = self.per_axis();
        let mut rest = flat;
        let mut out = 0usize;
        let mut stride = 1usize;
        for _ in 0..self.dim {
            let idx = rest % m;
            rest /= m;
            out += (m - 1 - idx) * stride;
            stride *= m;
        }
        out
    }

    /// |ξ|² of flat index.
    pub fn norm_sq(&self, flat: usize) -> f64 {
        let m = self.per_axis();
        let mut rest = flat;
        let mut acc = 0.0;
        for _ in 0..self.dim {
            let idx = rest % m;
            rest /= m;
            let v = (idx as isize - self.half as isize) as f64 * self.dxi;
            acc += v * v;
        }
        acc
    }
}

/// Real scalar field sampled on the nodes of a [`SpaceGrid`].
#[derive(Debug, Clone)]
pub struct SpatialField {
    pub grid: SpaceGrid,
    pub data: Vec<f64>,
}

impl SpatialField {
    pub fn zeros(grid: &SpaceGrid) -> Self {
        Self { grid: grid.clone(), data: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &SpaceGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut data = vec![0.0; grid.len()];
        let mut x = vec![0.0; grid.dim];
        for (flat, slot) in data.iter_mut().enumerate() {
            node_coords(grid, flat, &mut x);
            *slot = f(&x);
        }
        Self { grid: grid.clone(), data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Periodic cubic (Catmull-Rom) interpolation at an arbitrary point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.grid.dim);
        match self.grid.dim {
            1 => self.eval_1d(x[0]),
            2 => self.eval_2d(x[0], x[1]),
            _ => unimplemented!("cubic interpolation beyond 2 axes"),
        }
    }

    fn eval_1d(&self, x: f64) -> f64 {
        let n = self.grid.cells;
        let (i, t) = locate(&self.grid, x);
        let p = |k: isize| self.data[wrap(i + k, n)];
        catmull_rom(p(-1), p(0), p(1), p(2), t)
    }

    fn eval_2d(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.cells;
        let (i, tx) = locate(&self.grid, x);
        let (j, ty) = locate(&self.grid, y);
        let at = |a: isize, b: isize| self.data[wrap(i + a, n) * n + wrap(j + b, n)];
        let mut rows = [0.0; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let a = r as isize - 1;
            *row = catmull_rom(at(a, -1), at(a, 0), at(a, 1), at(a, 2), ty);
        }
        catmull_rom(rows[0], rows[1], rows[2], rows[3], tx)
    }
}

fn locate(grid: &SpaceGrid, x: f64) -> (isize, f64) {
    let u = (x - grid.origin) / grid.delta;
    let i = u.floor();
    (i as isize, u - i)
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

#[inline]
fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    0.5 * (2.0 * p1
        + t * ((p2 - p0)
            + t * ((2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) + t * (3.0 * (p1 - p2) + p3 - p0))))
}

/// Node coordinates of a flat index (row-major).
pub fn node_coords(grid: &SpaceGrid, flat: usize, out: &mut [f64]) {
    let mut rest = flat;
    for axis in (0..grid.dim).rev() {
        out[axis] = grid.node(rest % grid.cells);
        rest /= grid.cells;
    }
}

/// Forward FFT of a real field, all axes, FFT layout: result index `i` on an
/// axis carries wavenumber `grid.fft_wavenumber(i)`. Convention:
/// `F[m] = Σ_j f[j] exp(-i ξ_m x_j)` up to the node enumeration.
pub fn fft_forward(grid: &SpaceGrid, data: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_all_axes(grid, &mut buf, false);
    buf
}

/// Inverse FFT back to a real field (imaginary residue discarded; callers
/// asserting Hermitian inputs may check it via [`fft_inverse_residue`]).
pub fn fft_inverse_real(grid: &SpaceGrid, spec: &[Complex64]) -> Vec<f64> {
    let mut buf = spec.to_vec();
    fft_all_axes(grid, &mut buf, true);
    let norm = 1.0 / grid.len() as f64;
    buf.iter().map(|c| c.re * norm).collect()
}

/// Largest imaginary residue of the inverse transform, for symmetry checks.
pub fn fft_inverse_residue(grid: &SpaceGrid, spec: &[Complex64]) -> f64 {
    let mut buf = spec.to_vec();
    fft_all_axes(grid, &mut buf, true);
    let norm = 1.0 / grid.len() as f64;
    buf.iter().fold(0.0f64, |m, c| m.max((c.im * norm).abs()))
}

fn fft_all_axes(grid: &SpaceGrid, buf: &mut [Complex64], inverse: bool) {
    let n = grid.cells;
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    match grid.dim {
        1 => fft.process(buf),
        2 => {
            // rows
            for row in buf.chunks_exact_mut(n) {
                fft.process(row);
            }
            // columns
            let mut col = vec![Complex64::default(); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = buf[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    buf[i * n + j] = col[i];
                }
            }
        }
        _ => unimplemented!("FFT beyond 2 axes"),
    }
}

/// Multiply an FFT-layout spectrum by `(i ξ_axis)` — spectral differentiation
/// along one axis. The Nyquist bin is zeroed.
pub fn spectral_derivative(grid: &SpaceGrid, spec: &mut [Complex64], axis: usize) {
    let n = grid.cells;
    debug_assert!(axis < grid.dim);
    for (flat, v) in spec.iter_mut().enumerate() {
        let idx = match grid.dim {
            1 => flat,
            2 => {
                if axis == 0 {
                    flat / n
                } else {
                    flat % n
                }
            }
            _ => unimplemented!(),
        };
        if idx == n / 2 {
            *v = Complex64::default();
        } else {
            let xi = grid.fft_wavenumber(idx);
            *v *= Complex64::new(0.0, xi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roundtrip_fft() {
        let grid = SpaceGrid::centered(1, 64, 4.0).unwrap();
        let f = SpatialField::from_fn(&grid, |x| (x[0] * 2.0).sin() + 0.3 * x[0].cos());
        let spec = fft_forward(&grid, &f.data);
        let back = fft_inverse_real(&grid, &spec);
        for (a, b) in f.data.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine_on_torus() {
        let period = 2.0 * std::f64::consts::PI;
        let grid = SpaceGrid::centered(1, 128, period).unwrap();
        let f = SpatialField::from_fn(&grid, |x| (3.0 * x[0]).sin());
        let mut spec = fft_forward(&grid, &f.data);
        spectral_derivative(&grid, &mut spec, 0);
        let df = fft_inverse_real(&grid, &spec);
        for (flat, &v) in df.iter().enumerate() {
            let x = grid.node(flat);
            assert_relative_eq!(v, 3.0 * (3.0 * x).cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn interpolation_is_cubic_order() {
        let period = 2.0 * std::f64::consts::PI;
        let probe: Vec<f64> = (0..37).map(|i| -2.9 + 0.15 * i as f64).collect();
        let mut errs = Vec::new();
        for cells in [64usize, 128] {
            let grid = SpaceGrid::centered(1, cells, period).unwrap();
            let f = SpatialField::from_fn(&grid, |x| (2.0 * x[0]).sin());
            let err = probe
                .iter()
                .map(|&x| (f.eval(&[x]) - (2.0 * x).sin()).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        // halving Δx must cut the error by at least ~2^3
        assert!(errs[1] < errs[0] / 7.0, "cubic order check: {errs:?}");
    }

    #[test]
    fn freq_grid_negation() {
        let fg = FreqGrid::new(2, 3, 0.5).unwrap();
        let mut xi = [0.0; 2];
        let mut neg = [0.0; 2];
        for flat in 0..fg.len() {
            fg.point(flat, &mut xi);
            fg.point(fg.negate(flat), &mut neg);
            assert_eq!(xi[0], -neg[0]);
            assert_eq!(xi[1], -neg[1]);
        }
    }

    #[test]
    fn index_of_clips_outside_box() {
        let grid = SpaceGrid::centered(1, 16, 4.0).unwrap();
        assert!(grid.index_of(&[0.0]).is_some());
        assert!(grid.index_of(&[-2.5]).is_none());
        assert!(grid.index_of(&[2.5]).is_none());
    }

    #[test]
    fn two_axis_fft_derivative() {
        let period = 2.0 * std::f64::consts::PI;
        let grid = SpaceGrid::centered(2, 32, period).unwrap();
        let f = SpatialField::from_fn(&grid, |x| (x[0]).sin() * (2.0 * x[1]).cos());
        let mut spec = fft_forward(&grid, &f.data);
        spectral_derivative(&grid, &mut spec, 1);
        let df = fft_inverse_real(&grid, &spec);
        let mut x = [0.0; 2];
        for (flat, &v) in df.iter().enumerate() {
            node_coords(&grid, flat, &mut x);
            assert_relative_eq!(v, -2.0 * x[0].sin() * (2.0 * x[1]).sin(), epsilon = 1e-9);
        }
    }
}
