//! Uniform centered grids and symmetric-normalization discrete Fourier
//! transforms.
//!
//! An axis with `n` points and half-width `L` carries the nodes
//! `x_k = -L + 2Lk/n`, `k = 0..n-1`, so the box is `[-L, L)` and the spacing
//! is `dx = 2L/n`. Its dual axis has spacing `dxi = pi/L` and half-width
//! `L' = pi n / (2L)`, which makes `dx * dxi * n = 2pi` exactly and renders
//! the transform pair self-dual.
//!
//! The transform convention is unitary,
//!
//! ```text
//! (F f)(xi) = (2pi)^{-d/2} \int f(x) e^{-i<x,xi>} dx ,
//! ```
//!
//! realized on the centered grid without any fftshift copies: with
//! `x_k xi_j = pi n/2 - pi j - pi k + 2pi k j / n` the forward transform is
//!
//! ```text
//! F_j = dx/(2pi)^{1/2} * e^{-i pi n/2} * (-1)^j * DFT[ (-1)^k f_k ]_j ,
//! ```
//!
//! and the inverse mirrors it with conjugate phases and the dual spacing.
//! Round trips are identities to machine precision; no windowing is applied
//! anywhere, callers are responsible for choosing boxes large enough that
//! their data decays below machine epsilon at the boundary.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap for spectral differentiation orders (per call, total order).
pub const DERIVATIVE_CAP: usize = 12;

/// One grid axis: point count and half-width.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub half_width: f64,
}

impl Axis {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::OddPoints(n));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::NonPositiveWidth(half_width));
        }
        Ok(Axis { n, half_width })
    }

    /// Node spacing `2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// `k`-th node `-L + 2Lk/n`.
    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + self.spacing() * k as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    /// Dual (frequency) axis: spacing `pi/L`, half-width `pi n/(2L)`.
    pub fn dual(&self) -> Axis {
        Axis {
            n: self.n,
            half_width: PI * self.n as f64 / (2.0 * self.half_width),
        }
    }

    pub fn approx_eq(&self, other: &Axis) -> bool {
        self.n == other.n
            && (self.half_width - other.half_width).abs()
                <= 1e-12 * self.half_width.abs().max(other.half_width.abs())
    }
}

/// Tensor grid: a list of axes in row-major order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    /// Base-grid constructor. Base grids are limited to one or two
    /// dimensions; higher-dimensional grids only arise internally as
    /// products.
    pub fn new_uniform(d: usize, n: usize, half_width: f64) -> Result<Self> {
        if d == 0 || d > 2 {
            return Err(Error::BadDimension(format!(
                "base grids support d in {{1, 2}}, got {d}"
            )));
        }
        let axis = Axis::new(n, half_width)?;
        Ok(Grid { axes: vec![axis; d] })
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::BadDimension("grid needs at least one axis".into()));
        }
        Ok(Grid { axes })
    }

    /// Phase-space grid of a base grid: base axes followed by their duals,
    /// so a symbol `a(x, xi)` carries `x` on the base nodes and `xi` on the
    /// dual nodes.
    pub fn symbol_grid(base: &Grid) -> Grid {
        let mut axes = base.axes.clone();
        axes.extend(base.axes.iter().map(Axis::dual));
        Grid { axes }
    }

    /// Doubled grid `(x, y)` for operator kernels: two copies of the base.
    pub fn kernel_grid(base: &Grid) -> Grid {
        let mut axes = base.axes.clone();
        axes.extend(base.axes.iter().copied());
        Grid { axes }
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].n;
        }
        s
    }

    /// Product of node spacings, the quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    pub fn dual(&self) -> Grid {
        Grid {
            axes: self.axes.iter().map(Axis::dual).collect(),
        }
    }

    pub fn approx_eq(&self, other: &Grid) -> bool {
        self.axes.len() == other.axes.len()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(a, b)| a.approx_eq(b))
    }

    /// Decompose a flat row-major index into per-axis indices.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.axes.len()];
        for i in (0..self.axes.len()).rev() {
            idx[i] = flat % self.axes[i].n;
            flat /= self.axes[i].n;
        }
        idx
    }

    /// Node coordinates of a flat index.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&k, a)| a.node(k))
            .collect()
    }
}

/// Complex samples on a grid, immutable after construction.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<Complex64>,
    label: String,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(SampledFunction {
            grid,
            values,
            label: label.into(),
        })
    }

    /// Sample a pointwise closure of the node coordinates.
    pub fn from_fn(
        grid: Grid,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        let shape = grid.shape();
        let mut idx = vec![0usize; shape.len()];
        let mut coords = vec![0.0f64; shape.len()];
        for _ in 0..grid.len() {
            for (i, &k) in idx.iter().enumerate() {
                coords[i] = grid.axis(i).node(k);
            }
            values.push(f(&coords));
            // odometer increment
            for i in (0..shape.len()).rev() {
                idx[i] += 1;
                if idx[i] < shape[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        SampledFunction::new(grid, values, label)
    }

    pub fn zeros(grid: Grid, label: impl Into<String>) -> Self {
        let n = grid.len();
        SampledFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            label: label.into(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn into_parts(self) -> (Grid, Vec<Complex64>, String) {
        (self.grid, self.values, self.label)
    }

    /// Pointwise map into a new function on the same grid.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<SampledFunction> {
        SampledFunction::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.label.clone(),
        )
    }

    pub fn scale(&self, c: Complex64) -> SampledFunction {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            label: self.label.clone(),
        }
    }

    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(Error::GridMismatch("add on different grids".into()));
        }
        Ok(SampledFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + b)
                .collect(),
            label: self.label.clone(),
        })
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul_pointwise(&self, other: &SampledFunction) -> Result<SampledFunction> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(Error::GridMismatch("pointwise product on different grids".into()));
        }
        Ok(SampledFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a * b)
                .collect(),
            label: self.label.clone(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Transform direction: `-1` forward (`e^{-i<x,xi>}`), `+1` inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Forward,
    Inverse,
}

impl Sign {
    pub fn from_i32(s: i32) -> Result<Sign> {
        match s {
            -1 => Ok(Sign::Forward),
            1 => Ok(Sign::Inverse),
            _ => Err(Error::InvalidParam(format!("sign must be -1 or +1, got {s}"))),
        }
    }
}

/// Plan cache for the per-axis lengths of one grid.
pub(crate) struct AxisPlans {
    planner: FftPlanner<f64>,
}

impl AxisPlans {
    pub fn new() -> Self {
        AxisPlans {
            planner: FftPlanner::new(),
        }
    }

    pub fn plan(&mut self, n: usize, sign: Sign) -> Arc<dyn Fft<f64>> {
        match sign {
            Sign::Forward => self.planner.plan_fft_forward(n),
            Sign::Inverse => self.planner.plan_fft_inverse(n),
        }
    }
}

/// `e^{-i pi n / 2}` for even `n`: +1 when n = 0 mod 4, -1 when n = 2 mod 4.
fn center_phase(n: usize) -> f64 {
    if n % 4 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place centered unitary transform along one axis of a flat row-major
/// array. The direction is carried by `plan`; the boundary phase
/// `e^{-+i pi n/2}` is real for even `n`, so both directions share the same
/// prefactor. The axis metadata of the result is the dual of the input axis.
pub(crate) fn transform_axis_inplace(
    values: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    axis_meta: &Axis,
    plan: &Arc<dyn Fft<f64>>,
) {
    let n = shape[axis];
    debug_assert_eq!(n, axis_meta.n);
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let inner = stride;
    let scale = axis_meta.spacing() / (2.0 * PI).sqrt();
    let p0 = center_phase(n);
    // forward carries e^{-i pi n/2}, inverse its conjugate; both are real +-1
    let phase0 = scale * p0;

    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * stride + i;
            for k in 0..n {
                let v = values[base + k * stride];
                buf[k] = if k % 2 == 0 { v } else { -v };
            }
            plan.process(&mut buf);
            for j in 0..n {
                let v = if j % 2 == 0 { buf[j] } else { -buf[j] };
                values[base + j * stride] = v * phase0;
            }
        }
    }
}

fn transformed_grid(grid: &Grid, block: &[usize]) -> Grid {
    let mut axes = grid.axes().to_vec();
    for &a in block {
        axes[a] = axes[a].dual();
    }
    Grid { axes }
}

fn check_block(block: &[usize], dims: usize) -> Result<Vec<usize>> {
    if block.is_empty() {
        return Err(Error::EmptyBlock);
    }
    let mut b = block.to_vec();
    b.sort_unstable();
    b.dedup();
    if b.len() != block.len() {
        return Err(Error::InvalidParam("repeated axis in block".into()));
    }
    if let Some(&bad) = b.iter().find(|&&a| a >= dims) {
        return Err(Error::InvalidParam(format!(
            "axis {bad} out of range for {dims}-dimensional grid"
        )));
    }
    Ok(b)
}

/// Partial transform along a subset of axes; `F_1 o F_2` equals the full
/// transform and each axis swaps to its dual on the output grid.
pub fn partial_fourier(f: &SampledFunction, block: &[usize], sign: i32) -> Result<SampledFunction> {
    let sign = Sign::from_i32(sign)?;
    let block = check_block(block, f.grid().dims())?;
    let shape = f.grid().shape();
    let mut values = f.values().to_vec();
    let mut plans = AxisPlans::new();
    for &a in &block {
        let plan = plans.plan(shape[a], sign);
        transform_axis_inplace(&mut values, &shape, a, f.grid().axis(a), &plan);
    }
    SampledFunction::new(
        transformed_grid(f.grid(), &block),
        values,
        f.label().to_string(),
    )
}

/// Full transform over every axis.
pub fn fourier(f: &SampledFunction, sign: i32) -> Result<SampledFunction> {
    let block: Vec<usize> = (0..f.grid().dims()).collect();
    partial_fourier(f, &block, sign)
}

/// Spectral partial derivative `d^alpha f` via multiplication by
/// `(i xi)^alpha` on the dual grid. Exact for band-limited data.
pub fn spectral_derivative(f: &SampledFunction, alpha: &[usize]) -> Result<SampledFunction> {
    if alpha.len() != f.grid().dims() {
        return Err(Error::InvalidParam(format!(
            "multi-index length {} does not match dimension {}",
            alpha.len(),
            f.grid().dims()
        )));
    }
    let order: usize = alpha.iter().sum();
    if order > DERIVATIVE_CAP {
        return Err(Error::DerivativeCap {
            requested: order,
            cap: DERIVATIVE_CAP,
        });
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let mut hat = fourier(f, -1)?;
    multiply_ixi_alpha(&mut hat, alpha);
    fourier(&hat, 1)
}

/// Multiply a spectrum in place by `prod_i (i xi_i)^{alpha_i}`.
pub(crate) fn multiply_ixi_alpha(hat: &mut SampledFunction, alpha: &[usize]) {
    let grid = hat.grid.clone();
    let shape = grid.shape();
    let dims = shape.len();
    // per-axis factor tables
    let tables: Vec<Vec<Complex64>> = (0..dims)
        .map(|a| {
            let ax = grid.axis(a);
            (0..ax.n)
                .map(|k| Complex64::new(0.0, ax.node(k)).powu(alpha[a] as u32))
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; dims];
    for v in hat.values.iter_mut() {
        let mut c = Complex64::new(1.0, 0.0);
        for a in 0..dims {
            if alpha[a] > 0 {
                c *= tables[a][idx[a]];
            }
        }
        *v *= c;
        for i in (0..dims).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Trapezoid-equals-midpoint quadrature on the periodic grid:
/// `(dx)^d * sum(values)`, summed in fixed index order.
pub fn quadrature(f: &SampledFunction) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in f.values() {
        acc += v;
    }
    acc * Complex64::new(f.grid().cell_volume(), 0.0)
}

/// Discrete `L^2` inner product `(f, g) = dx^d sum f conj(g)`,
/// conjugate-linear in the second slot.
pub fn l2_inner(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    if !f.grid().approx_eq(g.grid()) {
        return Err(Error::GridMismatch("inner product on different grids".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (&a, &b) in f.values().iter().zip(g.values()) {
        acc += a * b.conj();
    }
    Ok(acc * Complex64::new(f.grid().cell_volume(), 0.0))
}

pub fn l2_norm(f: &SampledFunction) -> f64 {
    let mut acc = 0.0f64;
    for v in f.values() {
        acc += v.norm_sqr();
    }
    (acc * f.grid().cell_volume()).sqrt()
}

/// Translate along one axis by an arbitrary offset via modulation on the
/// dual grid. Exact for the trigonometric interpolant; periodic wrap-around.
pub fn translate_axis(f: &SampledFunction, axis: usize, offset: f64) -> Result<SampledFunction> {
    if axis >= f.grid().dims() {
        return Err(Error::InvalidParam(format!("axis {axis} out of range")));
    }
    if offset == 0.0 {
        return Ok(f.clone());
    }
    let mut hat = partial_fourier(f, &[axis], -1)?;
    let ax = hat.grid.axis(axis).clone();
    let shape = hat.grid.shape();
    let stride: usize = shape[axis + 1..].iter().product();
    let table: Vec<Complex64> = (0..ax.n)
        .map(|j| Complex64::from_polar(1.0, -offset * ax.node(j)))
        .collect();
    let n = ax.n;
    let outer: usize = shape[..axis].iter().product();
    for o in 0..outer {
        for i in 0..stride {
            let base = o * n * stride + i;
            for j in 0..n {
                hat.values[base + j * stride] *= table[j];
            }
        }
    }
    let mut out = partial_fourier(&hat, &[axis], 1)?;
    out.label = f.label.clone();
    Ok(out)
}

/// Largest relative `L^2` deviation helper used across the test suites.
pub fn rel_l2_error(a: &SampledFunction, b: &SampledFunction) -> Result<f64> {
    let diff = a.sub(b)?;
    let denom = l2_norm(b).max(f64::MIN_POSITIVE);
    Ok(l2_norm(&diff) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_1d(n: usize, half_width: f64) -> SampledFunction {
        let grid = Grid::new_uniform(1, n, half_width).unwrap();
        SampledFunction::from_fn(grid, "gaussian", |x| {
            Complex64::new(PI.powf(-0.25) * (-x[0] * x[0] / 2.0).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn make_grid_formulas() {
        // (1, 8, pi): nodes -pi .. 3pi/4, dual spacing 1
        let g = Grid::new_uniform(1, 8, PI).unwrap();
        assert!((g.axis(0).node(0) + PI).abs() < 1e-15);
        assert!((g.axis(0).node(7) - 3.0 * PI / 4.0).abs() < 1e-14);
        assert!((g.axis(0).dual().spacing() - 1.0).abs() < 1e-15);

        // (1, 256, 12): dx = 3/32, dxi = pi/12
        let g = Grid::new_uniform(1, 256, 12.0).unwrap();
        assert!((g.axis(0).spacing() - 3.0 / 32.0).abs() < 1e-15);
        assert!((g.axis(0).dual().spacing() - PI / 12.0).abs() < 1e-15);

        // (2, 32, 10): 1024 nodes, dual spacing pi/10 per axis
        let g = Grid::new_uniform(2, 32, 10.0).unwrap();
        assert_eq!(g.len(), 1024);
        assert!((g.axis(1).dual().spacing() - PI / 10.0).abs() < 1e-15);

        // self-duality: dx * dxi * n = 2 pi
        let ax = g.axis(0);
        assert!((ax.spacing() * ax.dual().spacing() * ax.n as f64 - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(Grid::new_uniform(1, 7, 1.0).is_err());
        assert!(Grid::new_uniform(1, 8, 0.0).is_err());
        assert!(Grid::new_uniform(1, 8, -3.0).is_err());
        assert!(Grid::new_uniform(0, 8, 1.0).is_err());
        assert!(Grid::new_uniform(3, 8, 1.0).is_err());
    }

    #[test]
    fn sampled_function_rejects_nan() {
        let g = Grid::new_uniform(1, 4, 1.0).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 4];
        v[2] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            SampledFunction::new(g, v, "bad"),
            Err(Error::NonFinite(2))
        ));
    }

    #[test]
    fn gaussian_is_transform_fixed_point() {
        // the transform equals the same function sampled on the dual nodes
        let f = gaussian_1d(256, 12.0);
        let fhat = fourier(&f, -1).unwrap();
        let dual = fhat.grid().axis(0);
        let mut max_err = 0.0f64;
        for j in 0..dual.n {
            let xi = dual.node(j);
            let expect = PI.powf(-0.25) * (-xi * xi / 2.0).exp();
            max_err = max_err.max((fhat.values()[j] - Complex64::new(expect, 0.0)).norm());
        }
        assert!(max_err <= 1e-12, "max abs error {max_err}");
    }

    #[test]
    fn delta_round_trip() {
        let g = Grid::new_uniform(1, 64, 5.0).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 64];
        v[0] = Complex64::new(1.0, 0.0);
        let f = SampledFunction::new(g, v, "delta").unwrap();
        let back = fourier(&fourier(&f, -1).unwrap(), 1).unwrap();
        let err = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-13, "round trip error {err}");
    }

    #[test]
    fn hermite1_transform_closed_form() {
        // f(x) = x e^{-x^2/2} maps to -i xi e^{-xi^2/2}
        let grid = Grid::new_uniform(1, 256, 12.0).unwrap();
        let f = SampledFunction::from_fn(grid.clone(), "xg", |x| {
            Complex64::new(x[0] * (-x[0] * x[0] / 2.0).exp(), 0.0)
        })
        .unwrap();
        let fhat = fourier(&f, -1).unwrap();
        let dual = grid.axis(0).dual();
        let mut max_err = 0.0f64;
        for j in 0..dual.n {
            let xi = dual.node(j);
            let expect = Complex64::new(0.0, -1.0) * xi * (-xi * xi / 2.0).exp();
            max_err = max_err.max((fhat.values()[j] - expect).norm());
        }
        assert!(max_err <= 1e-12, "closed form error {max_err}");
    }

    #[test]
    fn partial_transforms_compose_and_invert() {
        let grid = Grid::new_uniform(2, 32, 8.0).unwrap();
        let f = SampledFunction::from_fn(grid, "g2", |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let f12 = partial_fourier(&partial_fourier(&f, &[1], -1).unwrap(), &[0], -1).unwrap();
        let full = fourier(&f, -1).unwrap();
        let err = f12
            .values()
            .iter()
            .zip(full.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12);

        let back = partial_fourier(&partial_fourier(&f, &[1], -1).unwrap(), &[1], 1).unwrap();
        let err = back
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-13);

        assert!(matches!(partial_fourier(&f, &[], -1), Err(Error::EmptyBlock)));
    }

    #[test]
    fn partial_transform_gaussian_closed_form() {
        // F_2 of e^{-(x^2+y^2)/2} is e^{-(x^2+eta^2)/2}
        let grid = Grid::new_uniform(2, 64, 10.0).unwrap();
        let f = SampledFunction::from_fn(grid.clone(), "g2", |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let f2 = partial_fourier(&f, &[1], -1).unwrap();
        let mut max_err = 0.0f64;
        for (flat, v) in f2.values().iter().enumerate() {
            let c = f2.grid().coords(flat);
            let expect = (-(c[0] * c[0] + c[1] * c[1]) / 2.0).exp();
            max_err = max_err.max((v - Complex64::new(expect, 0.0)).norm());
        }
        assert!(max_err <= 1e-12, "partial gaussian error {max_err}");
    }

    #[test]
    fn spectral_derivative_gaussian() {
        let grid = Grid::new_uniform(1, 256, 12.0).unwrap();
        let f = SampledFunction::from_fn(grid.clone(), "g", |x| {
            Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0)
        })
        .unwrap();
        let df = spectral_derivative(&f, &[1]).unwrap();
        let mut max_err = 0.0f64;
        for (k, v) in df.values().iter().enumerate() {
            let x = grid.axis(0).node(k);
            if x.abs() <= 0.9 * 12.0 {
                let expect = -x * (-x * x / 2.0).exp();
                max_err = max_err.max((v - Complex64::new(expect, 0.0)).norm());
            }
        }
        assert!(max_err <= 1e-10, "derivative error {max_err}");

        // order zero is the identity
        let same = spectral_derivative(&f, &[0]).unwrap();
        assert_eq!(same.values(), f.values());

        // cap enforced
        assert!(matches!(
            spectral_derivative(&f, &[DERIVATIVE_CAP + 1]),
            Err(Error::DerivativeCap { .. })
        ));
    }

    #[test]
    fn second_derivative_of_periodic_sine() {
        // sin(k x) with k on the dual lattice is periodic on the box and an
        // exact Laplacian eigenfunction
        let grid = Grid::new_uniform(1, 128, PI).unwrap();
        let k = grid.axis(0).dual().spacing() * 3.0; // 3 whole waves
        let f = SampledFunction::from_fn(grid, "sin", |x| Complex64::new((k * x[0]).sin(), 0.0))
            .unwrap();
        let d2 = spectral_derivative(&f, &[2]).unwrap();
        let err = d2
            .values()
            .iter()
            .zip(f.values())
            .map(|(d, v)| (d + v * k * k).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12 * k * k, "eigenfunction error {err}");
    }

    #[test]
    fn quadrature_gaussian_and_odd() {
        let grid = Grid::new_uniform(1, 256, 12.0).unwrap();
        let f = SampledFunction::from_fn(grid.clone(), "g", |x| {
            Complex64::new(PI.powf(-0.5) * (-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let q = quadrature(&f);
        assert!((q.re - 1.0).abs() <= 1e-12 && q.im.abs() <= 1e-15, "got {q}");

        let odd = SampledFunction::from_fn(grid.clone(), "xg", |x| {
            Complex64::new(x[0] * (-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        assert!(quadrature(&odd).norm() <= 1e-14);

        let zero = SampledFunction::zeros(grid, "0");
        assert_eq!(quadrature(&zero), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn parseval() {
        let f = gaussian_1d(256, 12.0);
        let fhat = fourier(&f, -1).unwrap();
        let a = l2_norm(&f);
        let b = l2_norm(&fhat);
        assert!((a - b).abs() <= 1e-12 * a.max(b));
    }

    #[test]
    fn translate_axis_matches_closed_form() {
        let f = gaussian_1d(256, 12.0);
        let tau = 0.73; // off-node
        let g = translate_axis(&f, 0, tau).unwrap();
        let ax = f.grid().axis(0);
        let mut max_err = 0.0f64;
        for k in 0..ax.n {
            let x = ax.node(k);
            if x.abs() <= 8.0 {
                let expect = PI.powf(-0.25) * (-(x - tau) * (x - tau) / 2.0).exp();
                max_err = max_err.max((g.values()[k] - Complex64::new(expect, 0.0)).norm());
            }
        }
        assert!(max_err <= 1e-12, "translate error {max_err}");
    }

    #[test]
    fn forward_transform_matches_naive_dft() {
        let grid = Grid::new_uniform(1, 32, 5.0).unwrap();
        let f = SampledFunction::from_fn(grid.clone(), "mix", |x| {
            Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.3 * (-x[0] * x[0]).exp() * x[0])
        })
        .unwrap();
        let fhat = fourier(&f, -1).unwrap();
        let ax = grid.axis(0);
        let dual = ax.dual();
        let scale = ax.spacing() / (2.0 * PI).sqrt();
        let mut max_err = 0.0f64;
        for j in 0..dual.n {
            let xi = dual.node(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..ax.n {
                acc += f.values()[k] * Complex64::from_polar(1.0, -ax.node(k) * xi);
            }
            max_err = max_err.max((fhat.values()[j] - acc * scale).norm());
        }
        assert!(max_err <= 1e-12, "naive DFT mismatch {max_err}");
    }
}
