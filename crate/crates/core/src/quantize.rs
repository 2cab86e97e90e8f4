//! Quantization: symbol to kernel, kernel to symbol, and operator
//! application.
//!
//! A symbol `a(x, xi)` on a phase-space grid (base axes, then their duals)
//! maps to the kernel of its operator by a partial inverse transform in the
//! `xi` block followed by the coordinate shear `(x, y) -> (x - A(x-y), x-y)`:
//!
//! ```text
//! K(x, y) = (2pi)^{-d/2} (F_2^{-1} a)(x - A(x - y), x - y) .
//! ```
//!
//! The `(2pi)^{-d/2}` prefactor makes `K` the literal integral kernel of the
//! operator: with it, the symbol `a = 1` produces the identity. The shear is
//! realized by per-diagonal Fourier translations (the offset `A z` depends
//! only on `z = x - y`), which is exact for band-limited data on the
//! periodized grid; offsets beyond the half-box are rejected as aliasing.
//!
//! `A = 0` is the standard (Kohn-Nirenberg) representation, `A = I/2` the
//! Weyl representation. For `A = 0` application also has the direct route
//!
//! ```text
//! (Op_0(a) f)(x) = (2pi)^{-d/2} \int a(x, xi) fhat(xi) e^{i<x,xi>} dxi ,
//! ```
//!
//! which the kernel route must agree with; general `A` always routes
//! through the kernel. A naive-quadrature reference for the full double
//! integral is kept as a slow cross-check oracle for decaying symbols on
//! small grids.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    fourier, partial_fourier, spectral_derivative, Axis, Grid, SampledFunction,
};
use crate::stft::stft;
use crate::windows::{gaussian_window, gs_seminorm, GevreyParams, SeminormReport};
use crate::envelope::{fit_envelope, EnvelopeFit, EnvelopeModel};

/// Real quantization-parameter matrix `A`, `d x d` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantMatrix {
    entries: Vec<f64>,
    d: usize,
}

impl QuantMatrix {
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if d == 0 || entries.len() != d * d {
            return Err(Error::InvalidParam(format!(
                "need {d}x{d} = {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParam("matrix entries must be finite".into()));
        }
        Ok(QuantMatrix { entries, d })
    }

    /// `t * I`.
    pub fn scalar(d: usize, t: f64) -> Result<Self> {
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            entries[i * d + i] = t;
        }
        QuantMatrix::new(d, entries)
    }

    pub fn zero(d: usize) -> Self {
        QuantMatrix {
            entries: vec![0.0; d * d],
            d,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0.0)
    }

    /// `A z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.entry(i, j) * z[j]).sum())
            .collect()
    }

    /// `A^T z`.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.entry(j, i) * z[j]).sum())
            .collect()
    }

    pub fn scale(&self, c: f64) -> QuantMatrix {
        QuantMatrix {
            entries: self.entries.iter().map(|e| e * c).collect(),
            d: self.d,
        }
    }

    pub fn sub(&self, other: &QuantMatrix) -> Result<QuantMatrix> {
        if self.d != other.d {
            return Err(Error::BadDimension("matrix dimension mismatch".into()));
        }
        QuantMatrix::new(
            self.d,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

/// Integral kernel on the doubled grid `(x, y)` with provenance metadata.
#[derive(Clone, Debug)]
pub struct OperatorKernel {
    pub function: SampledFunction,
    pub symbol_label: String,
    pub matrix: QuantMatrix,
}

impl OperatorKernel {
    pub fn base_dim(&self) -> usize {
        self.function.grid().dims() / 2
    }
}

/// Split a phase-space grid into its base and check that the second block
/// is the dual of the first.
fn split_symbol_grid(grid: &Grid) -> Result<Grid> {
    let dims = grid.dims();
    if dims % 2 != 0 {
        return Err(Error::BadDimension(format!(
            "symbol grids have an even number of axes, got {dims}"
        )));
    }
    let d = dims / 2;
    let base = Grid::from_axes(grid.axes()[..d].to_vec())?;
    for i in 0..d {
        if !grid.axis(d + i).approx_eq(&base.axis(i).dual()) {
            return Err(Error::GridMismatch(format!(
                "frequency axis {i} is not the dual of its base axis"
            )));
        }
    }
    Ok(base)
}

fn check_kernel_grid(grid: &Grid) -> Result<Grid> {
    let dims = grid.dims();
    if dims % 2 != 0 {
        return Err(Error::BadDimension(format!(
            "kernel grids have an even number of axes, got {dims}"
        )));
    }
    let d = dims / 2;
    for i in 0..d {
        if !grid.axis(d + i).approx_eq(grid.axis(i)) {
            return Err(Error::GridMismatch(
                "kernel grid must be two copies of the base grid".into(),
            ));
        }
    }
    Grid::from_axes(grid.axes()[..d].to_vec())
}

fn check_matrix_dim(a: &QuantMatrix, d: usize) -> Result<()> {
    if a.dim() != d {
        return Err(Error::BadDimension(format!(
            "matrix is {}x{} but the base dimension is {d}",
            a.dim(),
            a.dim()
        )));
    }
    Ok(())
}

/// Guard the shear offsets `A z` against wrapping past the half-box.
fn alias_guard(a: &QuantMatrix, base: &Grid) -> Result<()> {
    let d = base.dims();
    // worst case |(A z)_i| <= sum_j |A_ij| L_j at the box corner
    for i in 0..d {
        let mut worst = 0.0f64;
        for j in 0..d {
            worst += a.entry(i, j).abs() * base.axis(j).half_width;
        }
        let cap = base.axis(i).half_width * (1.0 + 1e-12);
        if worst > cap {
            return Err(Error::AliasGuard {
                axis: i,
                offset: worst,
                half_box: base.axis(i).half_width,
            });
        }
    }
    Ok(())
}

/// Translate the first `d` axes of a flat `(x-block, z-block)` array by the
/// per-diagonal offsets `A z`, via modulation on the dual nodes.
fn shear_x_block(
    values: &mut [Complex64],
    base: &Grid,
    a: &QuantMatrix,
    invert: bool,
) -> Result<()> {
    let d = base.dims();
    let n_block: usize = base.len();
    let z_count = n_block;
    // transform the x block to its dual once, per z index apply the phase,
    // transform back; doing it per-axis keeps the memory flat
    let combined_axes: Vec<Axis> = base
        .axes()
        .iter()
        .chain(base.axes().iter())
        .copied()
        .collect();
    let combined = Grid::from_axes(combined_axes)?;
    let tmp = SampledFunction::new(combined, values.to_vec(), "shear")?;
    let x_axes: Vec<usize> = (0..d).collect();
    let mut hat = partial_fourier(&tmp, &x_axes, -1)?;

    let dual_axes: Vec<Axis> = base.axes().iter().map(Axis::dual).collect();
    let sign = if invert { 1.0 } else { -1.0 };
    let hat_grid = hat.grid().clone();
    let (_, mut hv, _) = std::mem::replace(
        &mut hat,
        SampledFunction::zeros(hat_grid.clone(), ""),
    )
    .into_parts();

    // iterate (eta multi-index, z multi-index)
    let shape = hat_grid.shape();
    let mut idx = vec![0usize; 2 * d];
    for v in hv.iter_mut() {
        let z: Vec<f64> = (d..2 * d)
            .map(|axn| hat_grid.axis(axn).node(idx[axn]))
            .collect();
        let offset = a.apply(&z);
        let mut phase = 0.0f64;
        for (i, da) in dual_axes.iter().enumerate() {
            phase += offset[i] * da.node(idx[i]);
        }
        *v *= Complex64::from_polar(1.0, sign * phase);
        for i in (0..2 * d).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    let hat = SampledFunction::new(hat_grid, hv, "shear")?;
    let out = partial_fourier(&hat, &x_axes, 1)?;
    values.copy_from_slice(out.values());
    Ok(())
}

/// Map `(x, z)`-indexed data (z the difference variable) onto the doubled
/// grid `(x, y)` with `z = x - y`, or back with `invert`.
fn diagonal_scatter(
    src: &[Complex64],
    base: &Grid,
    invert: bool,
) -> Vec<Complex64> {
    let d = base.dims();
    let n_block = base.len();
    let shape = base.shape();
    let strides = base.strides();
    let mut out = vec![Complex64::new(0.0, 0.0); n_block * n_block];
    let mut x_idx = vec![0usize; d];
    for xf in 0..n_block {
        let mut y_idx = vec![0usize; d];
        for yf in 0..n_block {
            // z = x - y lands on node (kx - ky + n/2) mod n per axis
            let mut zf = 0usize;
            for axn in 0..d {
                let n = shape[axn];
                zf += ((x_idx[axn] + n + n / 2 - y_idx[axn]) % n) * strides[axn];
            }
            if invert {
                out[xf * n_block + zf] = src[xf * n_block + yf];
            } else {
                out[xf * n_block + yf] = src[xf * n_block + zf];
            }
            for i in (0..d).rev() {
                y_idx[i] += 1;
                if y_idx[i] < shape[i] {
                    break;
                }
                y_idx[i] = 0;
            }
        }
        for i in (0..d).rev() {
            x_idx[i] += 1;
            if x_idx[i] < shape[i] {
                break;
            }
            x_idx[i] = 0;
        }
    }
    out
}

/// Kernel of the operator with symbol `a` and parameter matrix `A`.
pub fn kernel_from_symbol(a_sym: &SampledFunction, a: &QuantMatrix) -> Result<OperatorKernel> {
    let base = split_symbol_grid(a_sym.grid())?;
    let d = base.dims();
    check_matrix_dim(a, d)?;
    alias_guard(a, &base)?;

    // partial inverse transform in the xi block: b(x, z)
    let xi_axes: Vec<usize> = (d..2 * d).collect();
    let b = partial_fourier(a_sym, &xi_axes, 1)?;
    let mut values = b.values().to_vec();

    // shear: translate the x block by A z per z diagonal
    if !a.is_zero() {
        shear_x_block(&mut values, &base, a, false)?;
    }

    // scatter (x, z) onto (x, y) and apply the kernel prefactor
    let mut out = diagonal_scatter(&values, &base, false);
    let pref = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
    for v in out.iter_mut() {
        *v *= pref;
    }
    let kg = Grid::kernel_grid(&base);
    Ok(OperatorKernel {
        function: SampledFunction::new(kg, out, format!("kernel[{}]", a_sym.label()))?,
        symbol_label: a_sym.label().to_string(),
        matrix: a.clone(),
    })
}

/// Inverse of [`kernel_from_symbol`]: recover the symbol from a kernel.
pub fn symbol_from_kernel(kernel: &SampledFunction, a: &QuantMatrix) -> Result<SampledFunction> {
    let base = check_kernel_grid(kernel.grid())?;
    let d = base.dims();
    check_matrix_dim(a, d)?;
    alias_guard(a, &base)?;

    let pref = (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0);
    let scaled: Vec<Complex64> = kernel.values().iter().map(|&v| v * pref).collect();
    let mut values = diagonal_scatter(&scaled, &base, true);
    if !a.is_zero() {
        shear_x_block(&mut values, &base, a, true)?;
    }
    // forward transform in the z block turns it back into the xi block
    let mut axes = base.axes().to_vec();
    axes.extend(base.axes().iter().copied());
    let xz = SampledFunction::new(Grid::from_axes(axes)?, values, "b")?;
    let zaxes: Vec<usize> = (d..2 * d).collect();
    let out = partial_fourier(&xz, &zaxes, -1)?;
    Ok(out.with_label(format!("symbol[{}]", kernel.label())))
}

/// `g(x) = \int K(x, y) f(y) dy` by quadrature, parallel over rows.
pub fn apply_kernel(kernel: &OperatorKernel, f: &SampledFunction) -> Result<SampledFunction> {
    let base = check_kernel_grid(kernel.function.grid())?;
    if !base.approx_eq(f.grid()) {
        return Err(Error::GridMismatch(
            "kernel base grid does not match the function grid".into(),
        ));
    }
    let n = base.len();
    let vol = base.cell_volume();
    let kv = kernel.function.values();
    let fv = f.values();
    let values: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|row| {
            let mut acc = Complex64::new(0.0, 0.0);
            let r = &kv[row * n..(row + 1) * n];
            for (k, &fk) in r.iter().zip(fv) {
                acc += k * fk;
            }
            acc * vol
        })
        .collect();
    SampledFunction::new(base, values, format!("Op[{}]({})", kernel.symbol_label, f.label()))
}

/// Apply `Op_A(a)` to `f`: direct frequency-space route for `A = 0`,
/// kernel route otherwise.
pub fn apply_op(
    a_sym: &SampledFunction,
    a: &QuantMatrix,
    f: &SampledFunction,
) -> Result<SampledFunction> {
    let base = split_symbol_grid(a_sym.grid())?;
    if !base.approx_eq(f.grid()) {
        return Err(Error::GridMismatch(
            "symbol base grid does not match the function grid".into(),
        ));
    }
    check_matrix_dim(a, base.dims())?;
    if a.is_zero() {
        apply_op_direct(a_sym, f, &base)
    } else {
        let k = kernel_from_symbol(a_sym, a)?;
        apply_kernel(&k, f)
    }
}

/// Direct route for the standard representation:
/// `g(x) = (2pi)^{-d/2} \int a(x, xi) fhat(xi) e^{i<x,xi>} dxi`.
fn apply_op_direct(
    a_sym: &SampledFunction,
    f: &SampledFunction,
    base: &Grid,
) -> Result<SampledFunction> {
    let d = base.dims();
    let fhat = fourier(f, -1)?;
    let n = base.len();
    // multiply each x row by fhat, inverse transform the xi block, and take
    // the diagonal entry of the resulting (x, x') array
    let mut values = a_sym.values().to_vec();
    for row in 0..n {
        for (col, v) in values[row * n..(row + 1) * n].iter_mut().enumerate() {
            *v *= fhat.values()[col];
        }
    }
    let tmp = SampledFunction::new(a_sym.grid().clone(), values, "h")?;
    let xi_axes: Vec<usize> = (d..2 * d).collect();
    let back = partial_fourier(&tmp, &xi_axes, 1)?;
    let diag: Vec<Complex64> = (0..n).map(|k| back.values()[k * n + k]).collect();
    SampledFunction::new(
        base.clone(),
        diag,
        format!("Op[{}]({})", a_sym.label(), f.label()),
    )
}

/// Reference oracle: naive quadrature of the defining double integral with
/// trigonometric interpolation of the symbol in the sheared slot. Only for
/// decaying symbols and small grids (`n <= 64`, base dimension 1).
pub fn apply_op_reference(
    a_sym: &SampledFunction,
    a: &QuantMatrix,
    f: &SampledFunction,
) -> Result<SampledFunction> {
    let base = split_symbol_grid(a_sym.grid())?;
    if base.dims() != 1 {
        return Err(Error::BadDimension("reference oracle is one-dimensional".into()));
    }
    if !base.approx_eq(f.grid()) {
        return Err(Error::GridMismatch("oracle grids differ".into()));
    }
    check_matrix_dim(a, 1)?;
    let n = base.axis(0).n;
    if n > 64 {
        return Err(Error::InvalidParam(format!(
            "reference oracle capped at n = 64, got {n}"
        )));
    }
    let t = a.entry(0, 0);
    let ax = base.axis(0);
    let xi_ax = a_sym.grid().axis(1);
    let eta_ax = ax.dual();
    let tau = (2.0 * std::f64::consts::PI).sqrt();

    // naive partial DFT of the symbol along x (independent of the FFT path)
    let mut a1 = vec![Complex64::new(0.0, 0.0); n * n];
    for p in 0..n {
        let eta = eta_ax.node(p);
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += a_sym.values()[k * n + j]
                    * Complex64::from_polar(1.0, -ax.node(k) * eta);
            }
            a1[p * n + j] = acc * ax.spacing() / tau;
        }
    }
    let eval_a = |u: f64, j: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..n {
            acc += a1[p * n + j] * Complex64::from_polar(1.0, u * eta_ax.node(p));
        }
        acc * eta_ax.spacing() / tau
    };

    let two_l = 2.0 * ax.half_width;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let x = ax.node(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let y = ax.node(m);
            // difference coordinate on the periodic torus
            let mut z = x - y;
            if z >= ax.half_width {
                z -= two_l;
            } else if z < -ax.half_width {
                z += two_l;
            }
            let u = x - t * z;
            let mut inner = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let xi = xi_ax.node(j);
                inner += eval_a(u, j) * Complex64::from_polar(1.0, z * xi);
            }
            acc += inner * xi_ax.spacing() * f.values()[m] * ax.spacing();
        }
        out[k] = acc / (2.0 * std::f64::consts::PI);
    }
    SampledFunction::new(base, out, "op-reference")
}

/// Report of the empirical mapping probe: seminorm tables and envelope fits
/// of inputs versus operator outputs over a test family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MappingReport {
    pub members: Vec<MappingMember>,
    /// every output seminorm table is finite
    pub all_finite: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MappingMember {
    pub label: String,
    pub seminorm_in: f64,
    pub seminorm_out: f64,
    pub decay_in: Vec<f64>,
    pub decay_out: Vec<f64>,
}

/// Apply `Op_A(a)` across a family and compare class evidence of outputs
/// against inputs: seminorm tables at the given parameters and
/// decay-envelope fits of the windowed transforms. An empirical probe.
pub fn verify_mapping(
    a_sym: &SampledFunction,
    a: &QuantMatrix,
    params: &GevreyParams,
    family: &[SampledFunction],
    cutoff: usize,
) -> Result<MappingReport> {
    if family.is_empty() {
        return Err(Error::InvalidParam("empty test family".into()));
    }
    let base = split_symbol_grid(a_sym.grid())?;
    let window = gaussian_window(&base)?;
    let model = EnvelopeModel::decay_decay(params.s, params.sigma);
    let mut members = Vec::new();
    let mut all_finite = true;
    for f in family {
        let g = apply_op(a_sym, a, f)?;
        let sem_in = gs_seminorm(f, params, cutoff)?.overall;
        let sem_out = gs_seminorm(&g, params, cutoff)?.overall;
        let fit_in = fit_envelope(&stft(f, &window)?, &model, None)?;
        let fit_out = fit_envelope(&stft(&g, &window)?, &model, None)?;
        if !sem_out.is_finite() {
            all_finite = false;
        }
        members.push(MappingMember {
            label: f.label().to_string(),
            seminorm_in: sem_in,
            seminorm_out: sem_out,
            decay_in: fit_in.rates.iter().map(|r| r.rate).collect(),
            decay_out: fit_out.rates.iter().map(|r| r.rate).collect(),
        });
    }
    Ok(MappingReport {
        members,
        all_finite,
        note: "empirical finite-order probe over a finite family".to_string(),
    })
}

/// Seminorm report helper re-exported for CLI use.
pub fn seminorm_of_output(
    a_sym: &SampledFunction,
    a: &QuantMatrix,
    f: &SampledFunction,
    params: &GevreyParams,
    cutoff: usize,
) -> Result<SeminormReport> {
    let g = apply_op(a_sym, a, f)?;
    gs_seminorm(&g, params, cutoff)
}

/// `Op` of the constant symbol one is the identity; helper building that
/// symbol on the phase-space grid of `base`.
pub fn one_symbol(base: &Grid) -> Result<SampledFunction> {
    Ok(SampledFunction::new(
        Grid::symbol_grid(base),
        vec![Complex64::new(1.0, 0.0); base.len() * base.len()],
        "one",
    )?)
}

/// Symbol `a(x, xi) = x` (constant along `xi`), exactly grid-realizable.
pub fn coordinate_symbol(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    SampledFunction::from_fn(sg, "x", |c| Complex64::new(c[0], 0.0))
}

/// Symbol `a(x, xi) = xi` (constant along `x`).
pub fn momentum_symbol(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    SampledFunction::from_fn(sg, "xi", |c| Complex64::new(c[1], 0.0))
}

/// Hermite test family `h_0 .. h_max` on a base grid.
pub fn hermite_family(base: &Grid, max: usize) -> Result<Vec<SampledFunction>> {
    (0..=max).map(|k| crate::windows::hermite(k, base)).collect()
}

/// Weyl-representation matrix element `<h_i, Op(a) h_j>` table, used by the
/// self-adjointness probe.
pub fn hermite_matrix(
    a_sym: &SampledFunction,
    a: &QuantMatrix,
    size: usize,
) -> Result<Vec<Complex64>> {
    let base = split_symbol_grid(a_sym.grid())?;
    let fam = hermite_family(&base, size - 1)?;
    let mut m = vec![Complex64::new(0.0, 0.0); size * size];
    for j in 0..size {
        let g = apply_op(a_sym, a, &fam[j])?;
        for i in 0..size {
            m[i * size + j] = crate::grid::l2_inner(&g, &fam[i])?;
        }
    }
    Ok(m)
}
