//! Change of quantization, twisted products, kernel composition, the
//! phase-space relation between symbols and kernels, the trace map, and
//! mollification.
//!
//! # Sign conventions
//!
//! Everything in this module hangs off one convention, fixed here and
//! cross-validated by the polynomial-symbol oracle below: `D = -i d/dx`,
//! and the change-of-quantization operator acts as the Fourier multiplier
//!
//! ```text
//! T_A a = F^{-1} [ e^{ i <A y, eta> } (F a)(eta, y) ] ,
//! ```
//!
//! where `eta` is dual to `x` and `y` is dual to `xi` under the unitary
//! forward transform of the phase-space grid. With this choice:
//!
//! * the transfer law holds: `Op_A(a) = Op_B(b)` exactly when
//!   `b = T_{A - B} a` (multipliers compose additively),
//! * on the bilinear symbol, `T_{tI}(x xi) = x xi - i t`, matching the
//!   operator identity "Weyl symbol of `x compose D` equals `x xi + i/2`",
//! * the phase-space covariance reads
//!   `|V_{phi_A}(T_A a)(x, xi, eta, y)| = |V_phi a(x + A y, xi + A^T eta, eta, y)|`
//!   (note the plus signs: they are forced by the two bullets above and the
//!   covariance check validates them numerically).
//!
//! The twisted product at `A = 0` is realized two ways: through kernels
//! (compose the integral kernels, pull the symbol back) and through the
//! four-dimensional multiplier `e^{i <u, v>}` acting on
//! `F(x1, x2, xi1, xi2) = a1(x1, xi1) a2(x2, xi2)` in the `(xi1, x2)`
//! block, followed by the trace `(x, xi) -> F(x, x, xi, xi)`. General `A`
//! conjugates the `A = 0` product by the change of quantization.
//!
//! Polynomial symbols are not grid-realizable as they stand; they are
//! multiplied by a flat-top taper (a separable super-Gaussian) that is
//! `1` to near machine precision on the plateau `|x| <= L/8` and below
//! `1e-50` at the box edge, so identities can be asserted on the plateau
//! at full accuracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    fourier, l2_norm, partial_fourier, translate_axis, Axis, Grid, SampledFunction,
};
use crate::quantize::{kernel_from_symbol, symbol_from_kernel, OperatorKernel, QuantMatrix};
use crate::stft::{stft4_with_limit, STFTField};
use crate::windows::{hr_norm, GevreyParams, INTERIOR_FRAC};
use crate::MemLimit;

/// Four-dimensional field over `(x_1, x_2, xi_1, xi_2)`: position axes
/// share one axis spec, frequency axes its dual.
#[derive(Clone, Debug)]
pub struct FourDField {
    function: SampledFunction,
}

impl FourDField {
    pub fn new(function: SampledFunction) -> Result<Self> {
        let g = function.grid();
        if g.dims() != 4 {
            return Err(Error::BadDimension(format!(
                "four-dimensional field needs 4 axes, got {}",
                g.dims()
            )));
        }
        if !g.axis(0).approx_eq(g.axis(1)) || !g.axis(2).approx_eq(g.axis(3)) {
            return Err(Error::GridMismatch(
                "position axes and frequency axes must match pairwise".into(),
            ));
        }
        Ok(FourDField { function })
    }

    /// `F(x1, x2, xi1, xi2) = a1(x1, xi1) a2(x2, xi2)`.
    pub fn tensor_product(a1: &SampledFunction, a2: &SampledFunction) -> Result<Self> {
        let g1 = a1.grid();
        if g1.dims() != 2 || !g1.approx_eq(a2.grid()) {
            return Err(Error::GridMismatch(
                "tensor product needs two symbols on one two-axis grid".into(),
            ));
        }
        let (nx, nxi) = (g1.axis(0).n, g1.axis(1).n);
        let axes = vec![*g1.axis(0), *g1.axis(0), *g1.axis(1), *g1.axis(1)];
        let grid = Grid::from_axes(axes)?;
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..nx {
            for i2 in 0..nx {
                for j1 in 0..nxi {
                    let v1 = a1.values()[i1 * nxi + j1];
                    for j2 in 0..nxi {
                        values.push(v1 * a2.values()[i2 * nxi + j2]);
                    }
                }
            }
        }
        FourDField::new(SampledFunction::new(grid, values, "tensor")?)
    }

    pub fn function(&self) -> &SampledFunction {
        &self.function
    }

    pub fn into_function(self) -> SampledFunction {
        self.function
    }
}

/// Diagonal restriction `(x, xi) -> F(x, x, xi, xi)` by direct indexing.
pub fn trace_map(field: &FourDField) -> Result<SampledFunction> {
    let g = field.function.grid();
    let (nx, nxi) = (g.axis(0).n, g.axis(2).n);
    let strides = g.strides();
    let out_grid = Grid::from_axes(vec![*g.axis(0), *g.axis(2)])?;
    let mut values = Vec::with_capacity(nx * nxi);
    for i in 0..nx {
        for j in 0..nxi {
            let flat = i * strides[0] + i * strides[1] + j * strides[2] + j * strides[3];
            values.push(field.function.values()[flat]);
        }
    }
    SampledFunction::new(out_grid, values, "trace")
}

fn expect_symbol_grid(a: &SampledFunction) -> Result<Grid> {
    let g = a.grid();
    if g.dims() != 2 {
        return Err(Error::BadDimension(format!(
            "phase-space symbol needs 2 axes, got {}",
            g.dims()
        )));
    }
    if !g.axis(1).approx_eq(&g.axis(0).dual()) {
        return Err(Error::GridMismatch(
            "second symbol axis is not the dual of the first".into(),
        ));
    }
    Grid::from_axes(vec![*g.axis(0)])
}

/// Change of quantization `T_A a`: unimodular Fourier multiplier
/// `e^{i <A y, eta>}` on the full transform of the symbol.
pub fn quant_transfer(a: &SampledFunction, am: &QuantMatrix) -> Result<SampledFunction> {
    let g = a.grid();
    let dims = g.dims();
    if dims % 2 != 0 {
        return Err(Error::BadDimension("symbol grid must have 2d axes".into()));
    }
    let d = dims / 2;
    if am.dim() != d {
        return Err(Error::BadDimension("matrix dimension mismatch".into()));
    }
    if am.is_zero() {
        return Ok(a.clone());
    }
    let mut hat = fourier(a, -1)?;
    let hat_grid = hat.grid().clone();
    let shape = hat_grid.shape();
    let (_, mut hv, label) = hat.into_parts();
    let mut idx = vec![0usize; dims];
    for v in hv.iter_mut() {
        // first block: eta (dual of x), second block: y (dual of xi)
        let y: Vec<f64> = (d..dims).map(|axn| hat_grid.axis(axn).node(idx[axn])).collect();
        let ay = am.apply(&y);
        let mut phase = 0.0f64;
        for i in 0..d {
            phase += ay[i] * hat_grid.axis(i).node(idx[i]);
        }
        *v *= Complex64::from_polar(1.0, phase);
        for i in (0..dims).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    hat = SampledFunction::new(hat_grid, hv, label)?;
    fourier(&hat, 1)
}

/// Interior fraction for identity checks that evaluate translated fields:
/// tighter than the global mask because a periodic translate wraps box-edge
/// tails of size `exp(-(2L - |x|)^2 / 4)` into the comparison.
pub const SHIFTED_MASK_FRAC: f64 = 0.75;

/// Report of a phase-space identity check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_dev: f64,
    pub rel_dev: f64,
    pub compared: usize,
    pub field_max: f64,
}

/// Covariance of the phase-space transform under change of quantization:
/// compares `|V_{phi_A}(T_A a)|` at `(x, xi, eta, y)` against
/// `|V_phi a|` at `(x + A y, xi + A^T eta, eta, y)` on the interior.
pub fn stft_covariance_check(
    a: &SampledFunction,
    window: &SampledFunction,
    am: &QuantMatrix,
    limit: MemLimit,
) -> Result<DeviationReport> {
    expect_symbol_grid(a)?;
    if am.dim() != 1 {
        return Err(Error::BadDimension("covariance check is for d = 1".into()));
    }
    let t = am.entry(0, 0);
    let ta = quant_transfer(a, am)?;
    let tw = quant_transfer(window, am)?;
    let lhs = stft4_with_limit(&ta, &tw, limit)?;
    let rhs = stft4_with_limit(a, window, limit)?;

    let pos = lhs.pos_grid().clone();
    let freq = lhs.freq_grid().clone();
    let (ax_x, ax_xi) = (*pos.axis(0), *pos.axis(1));
    let (ax_eta, ax_y) = (*freq.axis(0), *freq.axis(1));
    let (nx, nxi) = (ax_x.n, ax_xi.n);
    let (neta, ny) = (ax_eta.n, ax_y.n);
    let nf = neta * ny;

    let field_max = rhs.max_abs();
    let mut max_dev = 0.0f64;
    let mut compared = 0usize;

    // slice V over (x, xi) at fixed (eta, y), translate by (-t y, -t eta)
    let mut slice = vec![Complex64::new(0.0, 0.0); nx * nxi];
    for je in 0..neta {
        let eta = ax_eta.node(je);
        for jy in 0..ny {
            let y = ax_y.node(jy);
            if eta.abs() > SHIFTED_MASK_FRAC * ax_eta.half_width
                || y.abs() > SHIFTED_MASK_FRAC * ax_y.half_width
            {
                continue;
            }
            let foff = je * ny + jy;
            for p in 0..nx * nxi {
                slice[p] = rhs.values()[p * nf + foff];
            }
            let sf = SampledFunction::new(
                Grid::from_axes(vec![ax_x, ax_xi])?,
                slice.clone(),
                "slice",
            )?;
            // g(x) = V(x + t y) is the translate of V by -t y
            let shifted = translate_axis(&translate_axis(&sf, 0, -t * y)?, 1, -t * eta)?;
            for kx in 0..nx {
                let x = ax_x.node(kx);
                for kxi in 0..nxi {
                    let xi = ax_xi.node(kxi);
                    let inside = x.abs() <= SHIFTED_MASK_FRAC * ax_x.half_width
                        && xi.abs() <= SHIFTED_MASK_FRAC * ax_xi.half_width
                        && (x + t * y).abs() <= SHIFTED_MASK_FRAC * ax_x.half_width
                        && (xi + t * eta).abs() <= SHIFTED_MASK_FRAC * ax_xi.half_width;
                    if !inside {
                        continue;
                    }
                    let l = lhs.values()[(kx * nxi + kxi) * nf + foff].norm();
                    let r = shifted.values()[kx * nxi + kxi].norm();
                    max_dev = max_dev.max((l - r).abs());
                    compared += 1;
                }
            }
        }
    }
    Ok(DeviationReport {
        max_dev,
        rel_dev: max_dev / field_max.max(f64::MIN_POSITIVE),
        compared,
        field_max,
    })
}

/// Route selector for the twisted product at `A = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SharpRoute {
    /// compose integral kernels, pull the symbol back (production path)
    Kernel,
    /// four-dimensional multiplier `e^{i<u,v>}` plus trace (cross-check)
    Multiplier,
}

/// Twisted product at `A = 0`.
pub fn sharp0(
    a1: &SampledFunction,
    a2: &SampledFunction,
    route: SharpRoute,
) -> Result<SampledFunction> {
    sharp0_with_limit(a1, a2, route, MemLimit::default())
}

pub fn sharp0_with_limit(
    a1: &SampledFunction,
    a2: &SampledFunction,
    route: SharpRoute,
    limit: MemLimit,
) -> Result<SampledFunction> {
    expect_symbol_grid(a1)?;
    if !a1.grid().approx_eq(a2.grid()) {
        return Err(Error::GridMismatch("twisted product needs one shared grid".into()));
    }
    match route {
        SharpRoute::Kernel => {
            let zero = QuantMatrix::zero(1);
            let k1 = kernel_from_symbol(a1, &zero)?;
            let k2 = kernel_from_symbol(a2, &zero)?;
            let k = compose_kernels(&k1, &k2)?;
            let out = symbol_from_kernel(&k.function, &zero)?;
            Ok(out.with_label(format!("{}#{}", a1.label(), a2.label())))
        }
        SharpRoute::Multiplier => {
            limit.check_values(a1.grid().len() * a2.grid().len())?;
            let f = FourDField::tensor_product(a1, a2)?;
            let mixed = apply_exchange_multiplier(f.into_function())?;
            let out = trace_map(&FourDField::new(mixed)?)?;
            Ok(out.with_label(format!("{}#{}", a1.label(), a2.label())))
        }
    }
}

/// `e^{i <D_{xi_1}, D_{x_2}>}` on a four-dimensional tensor field with axes
/// `(x1, x2, xi1, xi2)`: transform the `(xi1, x2)` block, multiply by
/// `e^{i u v}` with `u` dual to `xi1` and `v` dual to `x2`, transform back.
fn apply_exchange_multiplier(f: SampledFunction) -> Result<SampledFunction> {
    let block = [2usize, 1usize];
    let hat = partial_fourier(&f, &block, -1)?;
    let hat_grid = hat.grid().clone();
    let shape = hat_grid.shape();
    let (_, mut hv, label) = hat.into_parts();
    let mut idx = vec![0usize; 4];
    for v in hv.iter_mut() {
        let vdual = hat_grid.axis(1).node(idx[1]);
        let udual = hat_grid.axis(2).node(idx[2]);
        *v *= Complex64::from_polar(1.0, udual * vdual);
        for i in (0..4).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    let hat = SampledFunction::new(hat_grid, hv, label)?;
    partial_fourier(&hat, &block, 1)
}

/// Twisted product at general `A`: conjugate the `A = 0` product by the
/// change of quantization.
pub fn sharp_a(
    a1: &SampledFunction,
    a2: &SampledFunction,
    am: &QuantMatrix,
    route: SharpRoute,
) -> Result<SampledFunction> {
    sharp_a_with_limit(a1, a2, am, route, MemLimit::default())
}

pub fn sharp_a_with_limit(
    a1: &SampledFunction,
    a2: &SampledFunction,
    am: &QuantMatrix,
    route: SharpRoute,
    limit: MemLimit,
) -> Result<SampledFunction> {
    if am.is_zero() {
        return sharp0_with_limit(a1, a2, route, limit);
    }
    // The conjugation direction is forced by the transfer law: with
    // Op_A(c) = Op_0(T_A c), the product must satisfy
    // T_A(a1 #_A a2) = (T_A a1) #_0 (T_A a2).
    let b1 = quant_transfer(a1, am)?;
    let b2 = quant_transfer(a2, am)?;
    let prod = sharp0_with_limit(&b1, &b2, route, limit)?;
    quant_transfer(&prod, &am.scale(-1.0))
}

/// Kernel composition `(K_1 o K_2)(x, y) = \int K_1(x, z) K_2(z, y) dz` by
/// quadrature.
pub fn compose_kernels(k1: &OperatorKernel, k2: &OperatorKernel) -> Result<OperatorKernel> {
    let g = k1.function.grid();
    if !g.approx_eq(k2.function.grid()) {
        return Err(Error::GridMismatch("kernel grids differ".into()));
    }
    let d = g.dims() / 2;
    let base = Grid::from_axes(g.axes()[..d].to_vec())?;
    let n = base.len();
    let vol = base.cell_volume();
    let av = k1.function.values();
    let bv = k2.function.values();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let a = av[i * n + k];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &bv[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (o, &b) in dst.iter_mut().zip(row) {
                *o += a * b;
            }
        }
    }
    for v in out.iter_mut() {
        *v *= vol;
    }
    Ok(OperatorKernel {
        function: SampledFunction::new(g.clone(), out, "composed")?,
        symbol_label: format!("{}o{}", k1.symbol_label, k2.symbol_label),
        matrix: k1.matrix.clone(),
    })
}

/// Triple composition through the bilinear pairing
/// `(K_1 o K_2 o K_3)(x, y) = <K_2, K_1(x, .) K_3(., y)>`, evaluated as the
/// direct double quadrature rather than two pairwise products.
pub fn triple_compose(
    k1: &OperatorKernel,
    k2: &OperatorKernel,
    k3: &OperatorKernel,
) -> Result<OperatorKernel> {
    let g = k1.function.grid();
    if !g.approx_eq(k2.function.grid()) || !g.approx_eq(k3.function.grid()) {
        return Err(Error::GridMismatch("kernel grids differ".into()));
    }
    let d = g.dims() / 2;
    let base = Grid::from_axes(g.axes()[..d].to_vec())?;
    let n = base.len();
    let vol = base.cell_volume();
    let av = k1.function.values();
    let bv = k2.function.values();
    let cv = k3.function.values();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for z1 in 0..n {
                let a = av[i * n + z1];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut inner = Complex64::new(0.0, 0.0);
                for z2 in 0..n {
                    inner += bv[z1 * n + z2] * cv[z2 * n + j];
                }
                acc += a * inner;
            }
            out[i * n + j] = acc * vol * vol;
        }
    }
    Ok(OperatorKernel {
        function: SampledFunction::new(g.clone(), out, "triple")?,
        symbol_label: format!(
            "{}o{}o{}",
            k1.symbol_label, k2.symbol_label, k3.symbol_label
        ),
        matrix: k1.matrix.clone(),
    })
}

/// The identity relating the phase-space transform of an operator kernel to
/// that of its symbol, checked on a sublattice (every `stride`-th node per
/// axis):
///
/// ```text
/// (V_psi K)(x, y, xi, eta)
///   = (2pi)^{-d} e^{i <x-y, eta - A^T(xi+eta)>}
///     (V_phi a)(x - A(x-y), -eta + A^T(xi+eta), xi+eta, y-x) ,
/// ```
///
/// with `psi` the kernel of the operator with symbol `phi`. Arguments that
/// land off-node (half-node points for `t = +-1/2`) are evaluated by exact
/// trigonometric interpolation; points whose arguments leave the interior
/// are skipped.
pub fn stft_kernel_relation_check(
    a: &SampledFunction,
    window: &SampledFunction,
    am: &QuantMatrix,
    stride: usize,
    limit: MemLimit,
) -> Result<DeviationReport> {
    let base = expect_symbol_grid(a)?;
    if am.dim() != 1 {
        return Err(Error::BadDimension("kernel relation check is for d = 1".into()));
    }
    let t = am.entry(0, 0);
    let half_steps = (2.0 * t).round();
    if ((2.0 * t) - half_steps).abs() > 1e-12 || t.abs() > 1.0 {
        return Err(Error::InvalidParam(format!(
            "kernel relation check supports t in {{0, +-1/2, +-1}}, got {t}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidParam("stride must be positive".into()));
    }

    let k = kernel_from_symbol(a, am)?;
    let psi = kernel_from_symbol(window, am)?;
    let lhs = stft4_with_limit(&k.function, &psi.function, limit)?;
    let va = stft4_with_limit(a, window, limit)?;

    // variants of V_phi a translated by half a node along the first and
    // second slots, for the half-node arguments at t = +-1/2
    let vaf = va.as_function();
    let dx = vaf.grid().axis(0).spacing();
    let dxi = vaf.grid().axis(1).spacing();
    let need_half = (2.0 * t).rem_euclid(2.0) != 0.0;
    let v10 = if need_half {
        Some(translate_axis(&vaf, 0, -dx / 2.0)?)
    } else {
        None
    };
    let v01 = if need_half {
        Some(translate_axis(&vaf, 1, -dxi / 2.0)?)
    } else {
        None
    };
    let v11 = if need_half {
        Some(translate_axis(v10.as_ref().unwrap(), 1, -dxi / 2.0)?)
    } else {
        None
    };

    let n = base.axis(0).n;
    let lx = base.axis(0).half_width;
    let ax_xi = a.grid().axis(1);
    let lxi = ax_xi.half_width;
    let pref = 1.0 / (2.0 * std::f64::consts::PI);
    let vgrid = vaf.grid().clone();
    let vstr = vgrid.strides();

    let field_max = lhs.max_abs();
    let mut max_dev = 0.0f64;
    let mut compared = 0usize;

    // lhs axes: (x, y, xi_dual_x, eta_dual_y), all node-indexed
    let kx = |i: usize| base.axis(0).node(i);
    let kxi = |i: usize| ax_xi.node(i);

    for ix in (0..n).step_by(stride) {
        let x = kx(ix);
        for iy in (0..n).step_by(stride) {
            let y = kx(iy);
            for jxi in (0..n).step_by(stride) {
                let xi = kxi(jxi);
                for je in (0..n).step_by(stride) {
                    let eta = kxi(je);

                    // target arguments
                    let u = x - t * (x - y);
                    let v = -eta + t * (xi + eta);
                    let w = xi + eta;
                    let z = y - x;
                    let inside = x.abs() <= SHIFTED_MASK_FRAC * lx
                        && y.abs() <= SHIFTED_MASK_FRAC * lx
                        && xi.abs() <= SHIFTED_MASK_FRAC * lxi
                        && eta.abs() <= SHIFTED_MASK_FRAC * lxi
                        && u.abs() <= SHIFTED_MASK_FRAC * lx
                        && v.abs() <= SHIFTED_MASK_FRAC * lxi
                        && w.abs() <= SHIFTED_MASK_FRAC * lxi
                        && z.abs() <= SHIFTED_MASK_FRAC * lx;
                    if !inside {
                        continue;
                    }

                    // index arithmetic in half-node units
                    let u2 = 2 * ix as i64 - (2.0 * t) as i64 * (ix as i64 - iy as i64);
                    let v2 = -2 * (je as i64 - n as i64 / 2)
                        + (2.0 * t) as i64 * (jxi as i64 + je as i64 - n as i64);
                    // v as node offset from -L_xi: v = -L + q * dxi/2 with
                    // q = v2 + n (derived from xi_j = -L + j dxi)
                    let qv = v2 + n as i64;
                    let qu = u2;
                    let iw = jxi as i64 + je as i64 - n as i64 / 2;
                    let iz = iy as i64 - ix as i64 + n as i64 / 2;
                    debug_assert!(iw >= 0 && (iw as usize) < n);
                    debug_assert!(iz >= 0 && (iz as usize) < n);

                    let pick = |q_half_x: i64, q_half_xi: i64| -> Complex64 {
                        let (fx, hx) = (q_half_x.div_euclid(2), q_half_x.rem_euclid(2));
                        let (fxi, hxi) = (q_half_xi.div_euclid(2), q_half_xi.rem_euclid(2));
                        let src: &SampledFunction = match (hx, hxi) {
                            (0, 0) => &vaf,
                            (1, 0) => v10.as_ref().unwrap(),
                            (0, 1) => v01.as_ref().unwrap(),
                            _ => v11.as_ref().unwrap(),
                        };
                        let flat = fx as usize * vstr[0]
                            + fxi as usize * vstr[1]
                            + iw as usize * vstr[2]
                            + iz as usize * vstr[3];
                        src.values()[flat]
                    };
                    let va_val = pick(qu, qv);

                    let phase = (x - y) * (eta - t * (xi + eta));
                    let rhs_val = Complex64::from_polar(pref, phase) * va_val;
                    let lhs_val =
                        lhs.values()[((ix * n + iy) * n + jxi) * n + je];
                    max_dev = max_dev.max((lhs_val - rhs_val).norm());
                    compared += 1;
                }
            }
        }
    }
    Ok(DeviationReport {
        max_dev,
        rel_dev: max_dev / field_max.max(f64::MIN_POSITIVE),
        compared,
        field_max,
    })
}

/// Mollification `a_eps = phi(eps .) a` with Fourier-exact resampling of
/// the dilated window. Requires `phi(0) = 1`. Returns the product and a
/// flag that is set when the dilated window is flat to machine precision
/// (the product then equals `a`).
pub fn mollify(
    a: &SampledFunction,
    phi: &SampledFunction,
    eps: f64,
) -> Result<(SampledFunction, bool)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    let g = a.grid();
    if !g.approx_eq(phi.grid()) {
        return Err(Error::GridMismatch("mollifier window grid differs".into()));
    }
    // phi(0) = 1 at the all-zero node
    let d = g.dims();
    let strides = g.strides();
    let zero_flat: usize = (0..d).map(|i| (g.axis(i).n / 2) * strides[i]).sum();
    let phi0 = phi.values()[zero_flat];
    if (phi0 - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidParam(format!(
            "mollifier window must satisfy phi(0) = 1, got {phi0}"
        )));
    }

    let dilated = resample_scaled(phi, eps)?;
    let flat = dilated
        .values()
        .iter()
        .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    if flat {
        return Ok((a.clone(), true));
    }
    Ok((
        a.mul_pointwise(&dilated)?
            .with_label(format!("mollified({})", a.label())),
        false,
    ))
}

/// Evaluate the trigonometric interpolant of `phi` at the scaled nodes
/// `eps * x` via dense per-axis resampling matrices.
fn resample_scaled(phi: &SampledFunction, eps: f64) -> Result<SampledFunction> {
    let g = phi.grid().clone();
    let d = g.dims();
    let hat = fourier(phi, -1)?;
    let dual = hat.grid().clone();
    let tau = (2.0 * std::f64::consts::PI).sqrt();
    let mut values = hat.values().to_vec();
    let mut shape = dual.shape();
    for axn in 0..d {
        let n = shape[axn];
        let e_ax = dual.axis(axn);
        let x_ax = g.axis(axn);
        // matrix application along axn: out[k] = sum_p e^{i eps x_k eta_p} c[p]
        let scale = e_ax.spacing() / tau;
        let mut table = vec![Complex64::new(0.0, 0.0); n * n];
        for k in 0..n {
            let xk = eps * x_ax.node(k);
            for p in 0..n {
                table[k * n + p] = Complex64::from_polar(scale, xk * e_ax.node(p));
            }
        }
        let stride: usize = shape[axn + 1..].iter().product();
        let outer: usize = shape[..axn].iter().product();
        let mut pencil = vec![Complex64::new(0.0, 0.0); n];
        for o in 0..outer {
            for i in 0..stride {
                let basep = o * n * stride + i;
                for p in 0..n {
                    pencil[p] = values[basep + p * stride];
                }
                for k in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let row = &table[k * n..(k + 1) * n];
                    for (tv, &pv) in row.iter().zip(&pencil) {
                        acc += tv * pv;
                    }
                    values[basep + k * stride] = acc;
                }
            }
        }
        shape[axn] = n;
    }
    SampledFunction::new(g, values, format!("{}(eps.)", phi.label()))
}

/// Separable flat-top taper `prod_i exp(-(x_i / W_i)^{2p})`, numerically
/// `1` on the plateau and below `1e-50` at the box edge for the default
/// `W = L / 1.35`, `p = 8`.
pub fn flat_taper(grid: &Grid, p: u32) -> Result<SampledFunction> {
    let widths: Vec<f64> = grid.axes().iter().map(|a| a.half_width / 1.35).collect();
    flat_taper_with_widths(grid, &widths, p)
}

pub fn flat_taper_with_widths(grid: &Grid, widths: &[f64], p: u32) -> Result<SampledFunction> {
    if widths.len() != grid.dims() || widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParam("one positive taper width per axis".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParam("taper order must be positive".into()));
    }
    let widths = widths.to_vec();
    SampledFunction::from_fn(grid.clone(), "taper", move |c| {
        let mut e = 0.0f64;
        for (x, w) in c.iter().zip(&widths) {
            e += (x / w).powi(2 * p as i32);
        }
        Complex64::new((-e).exp(), 0.0)
    })
}

/// `x xi` times the flat taper, plateau-exact realization of the bilinear
/// symbol.
pub fn bilinear_symbol_tapered(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    let taper = flat_taper(&sg, 8)?;
    let xg = SampledFunction::from_fn(sg, "xxi", |c| Complex64::new(c[0] * c[1], 0.0))?;
    xg.mul_pointwise(&taper)
}

/// `xi` times a taper along `xi` only (constant in `x`).
pub fn momentum_symbol_tapered(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    let w = sg.axis(1).half_width / 1.35;
    SampledFunction::from_fn(sg, "xi-tapered", move |c| {
        Complex64::new(c[1] * (-(c[1] / w).powi(16)).exp(), 0.0)
    })
}

/// `x` times a taper along `x` only (constant in `xi`).
pub fn coordinate_symbol_tapered(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    let w = sg.axis(0).half_width / 1.35;
    SampledFunction::from_fn(sg, "x-tapered", move |c| {
        Complex64::new(c[0] * (-(c[0] / w).powi(16)).exp(), 0.0)
    })
}

/// Plateau mask `|x|, |xi| <= min(L) / 8` for tapered polynomial identities.
pub fn plateau_mask(grid: &Grid) -> Vec<bool> {
    let shape = grid.shape();
    let d = grid.dims();
    let mut out = Vec::with_capacity(grid.len());
    let mut idx = vec![0usize; d];
    for _ in 0..grid.len() {
        let inside = (0..d).all(|a| {
            grid.axis(a).node(idx[a]).abs() <= grid.axis(a).half_width / 8.0
        });
        out.push(inside);
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    out
}

/// Report of the trace-map derivative bound: the two-block norm of the
/// trace at doubled `h` against the four-dimensional norm at `h`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceLeibnizReport {
    pub trace_norm_2h: f64,
    pub field_norm_h: f64,
    pub pass: bool,
}

/// Check `||trace F||-type at 2h <= ||F||-type at h`, the derivative-count
/// consequence of the diagonal restriction, at finite cutoff.
pub fn trace_leibniz_check(
    field: &FourDField,
    s: f64,
    sigma: f64,
    h: f64,
    cutoff: usize,
) -> Result<TraceLeibnizReport> {
    let tr = trace_map(field)?;
    // x-type blocks carry sigma (derivative growth), xi-type blocks carry s
    let p4 = GevreyParams::isotropic(1.0, 1.0, h, 0.0)?.with_aniso(1.0, 1.0, sigma, s);
    let p2 = GevreyParams::isotropic(1.0, 1.0, 2.0 * h, 0.0)?.with_aniso(1.0, 1.0, sigma, s);
    let field_norm_h = hr_norm(field.function(), &p4, cutoff, 2)?;
    let trace_norm_2h = hr_norm(&tr, &p2, cutoff, 1)?;
    Ok(TraceLeibnizReport {
        trace_norm_2h,
        field_norm_h,
        pass: trace_norm_2h <= field_norm_h * 1.05,
    })
}

/// Mollifier convergence data: the `(h, r)`-distances along an `eps`
/// ladder, and whether they decrease strictly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MollifyReport {
    pub eps: Vec<f64>,
    pub distances: Vec<f64>,
    pub strictly_decreasing: bool,
}

pub fn mollify_convergence_check(
    a: &SampledFunction,
    phi: &SampledFunction,
    ladder: &[f64],
    params: &GevreyParams,
    cutoff: usize,
) -> Result<MollifyReport> {
    let mut distances = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let (a_eps, _) = mollify(a, phi, eps)?;
        let diff = a_eps.sub(a)?;
        distances.push(hr_norm(&diff, params, cutoff, 1)?);
    }
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(MollifyReport {
        eps: ladder.to_vec(),
        distances,
        strictly_decreasing,
    })
}

/// Transfer-law check on operator outputs: `Op_A(a) f` against
/// `Op_B(T_{A-B} a) f`.
pub fn transfer_law_check(
    a: &SampledFunction,
    am: &QuantMatrix,
    bm: &QuantMatrix,
    f: &SampledFunction,
) -> Result<f64> {
    let ga = crate::quantize::apply_op(a, am, f)?;
    let b = quant_transfer(a, &am.sub(bm)?)?;
    let gb = crate::quantize::apply_op(&b, bm, f)?;
    let denom = l2_norm(&ga).max(f64::MIN_POSITIVE);
    Ok(l2_norm(&ga.sub(&gb)?) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::gaussian_symbol;
    use crate::grid::rel_l2_error;
    use crate::quantize::apply_op;
    use crate::windows::hermite;

    fn base(n: usize, l: f64) -> Grid {
        Grid::new_uniform(1, n, l).unwrap()
    }

    #[test]
    fn transfer_is_unitary_and_invertible() {
        let b = base(64, 8.0);
        let a = gaussian_symbol(&b).unwrap();
        let qm = QuantMatrix::scalar(1, 0.7).unwrap();
        let ta = quant_transfer(&a, &qm).unwrap();
        assert!((l2_norm(&ta) - l2_norm(&a)).abs() <= 1e-12 * l2_norm(&a));
        let back = quant_transfer(&ta, &qm.scale(-1.0)).unwrap();
        assert!(rel_l2_error(&back, &a).unwrap() <= 1e-11);
        // A = 0 is the identity
        let same = quant_transfer(&a, &QuantMatrix::zero(1)).unwrap();
        assert_eq!(same.values(), a.values());
    }

    #[test]
    fn transfer_bilinear_symbol_series_oracle() {
        // T_{tI}(x xi) = x xi - i t on the taper plateau
        let b = base(128, 12.0);
        let a = bilinear_symbol_tapered(&b).unwrap();
        let sg = a.grid().clone();
        let mask = plateau_mask(&sg);
        for t in [0.25f64, 0.5, 1.0] {
            let qm = QuantMatrix::scalar(1, t).unwrap();
            let ta = quant_transfer(&a, &qm).unwrap();
            let mut max_err = 0.0f64;
            for (flat, v) in ta.values().iter().enumerate() {
                if mask[flat] {
                    let c = sg.coords(flat);
                    let expect = Complex64::new(c[0] * c[1], -t);
                    max_err = max_err.max((v - expect).norm());
                }
            }
            assert!(max_err <= 1e-6, "t={t} plateau error {max_err}");
        }

        // first-order series at small t, via spectral derivatives
        let t = 1e-3;
        let qm = QuantMatrix::scalar(1, t).unwrap();
        let ta = quant_transfer(&a, &qm).unwrap();
        let dxa = crate::grid::spectral_derivative(&a, &[1, 1]).unwrap();
        let mut max_err = 0.0f64;
        for (i, v) in ta.values().iter().enumerate() {
            // e^{i t D_xi D_x} a ~ a - i t d_x d_xi a
            let expect = a.values()[i] + Complex64::new(0.0, -t) * dxa.values()[i];
            max_err = max_err.max((v - expect).norm());
        }
        assert!(max_err <= 1e-5 * a.max_abs(), "series error {max_err}");
    }

    #[test]
    fn transfer_law_on_operator_outputs() {
        let b = base(128, 12.0);
        // parity-breaking symbol: a centered Gaussian at t = 1/2 is close to
        // a ground-state projector and annihilates higher Hermite inputs,
        // which would reduce the comparison to noise over noise
        let a = SampledFunction::from_fn(Grid::symbol_grid(&b), "gs", |c| {
            Complex64::new(
                (-((c[0] - 0.4).powi(2) + 0.8 * (c[1] + 0.3).powi(2))).exp(),
                0.0,
            )
        })
        .unwrap();
        let f = hermite(2, &b).unwrap();
        for (ta, tb) in [(0.0f64, 0.5f64), (0.0, 1.0), (0.5, 1.0)] {
            let am = QuantMatrix::scalar(1, ta).unwrap();
            let bm = QuantMatrix::scalar(1, tb).unwrap();
            let rel = transfer_law_check(&a, &am, &bm, &f).unwrap();
            assert!(rel <= 1e-8, "({ta},{tb}): {rel}");
        }
    }

    #[test]
    fn covariance_check_zero_and_gaussian() {
        let b = base(32, 6.0);
        let a = gaussian_symbol(&b).unwrap();
        let w = crate::envelope::phase_space_window(&b).unwrap();
        let rep = stft_covariance_check(&a, &w, &QuantMatrix::zero(1), MemLimit::default())
            .unwrap();
        assert!(rep.max_dev <= 1e-12, "A=0 deviation {}", rep.max_dev);
        for t in [0.5f64, 1.0] {
            let qm = QuantMatrix::scalar(1, t).unwrap();
            let rep = stft_covariance_check(&a, &w, &qm, MemLimit::default()).unwrap();
            assert!(rep.max_dev <= 1e-8, "t={t} deviation {}", rep.max_dev);
            assert!(rep.compared > 1000);
        }
    }

    #[test]
    fn sharp0_identity_element() {
        let b = base(64, 8.0);
        let one = crate::quantize::one_symbol(&b).unwrap();
        let a = gaussian_symbol(&b).unwrap();
        let p = sharp0(&one, &a, SharpRoute::Kernel).unwrap();
        assert!(rel_l2_error(&p, &a).unwrap() <= 1e-10);
        let p = sharp0(&a, &one, SharpRoute::Kernel).unwrap();
        assert!(rel_l2_error(&p, &a).unwrap() <= 1e-10);
    }

    #[test]
    fn sharp0_momentum_coordinate_plateau() {
        let b = base(128, 12.0);
        let a1 = momentum_symbol_tapered(&b).unwrap();
        let a2 = coordinate_symbol_tapered(&b).unwrap();
        let c = sharp0(&a1, &a2, SharpRoute::Kernel).unwrap();
        let sg = c.grid().clone();
        let mask = plateau_mask(&sg);
        let mut max_err = 0.0f64;
        let mut on_plateau = 0usize;
        for (flat, v) in c.values().iter().enumerate() {
            if mask[flat] {
                let xy = sg.coords(flat);
                let expect = Complex64::new(xy[0] * xy[1], -1.0);
                max_err = max_err.max((v - expect).norm());
                on_plateau += 1;
            }
        }
        assert!(on_plateau > 0);
        assert!(max_err <= 1e-6, "plateau error {max_err}");
    }

    #[test]
    fn sharp0_routes_agree() {
        let b = base(32, 6.0);
        let a1 = gaussian_symbol(&b).unwrap();
        let a2 = SampledFunction::from_fn(a1.grid().clone(), "g-shift", |c| {
            Complex64::new((-(c[0] - 0.5).powi(2) - 0.5 * c[1] * c[1]).exp(), 0.0)
        })
        .unwrap();
        let pk = sharp0(&a1, &a2, SharpRoute::Kernel).unwrap();
        let pm = sharp0(&a1, &a2, SharpRoute::Multiplier).unwrap();
        // compare on the interior
        let sg = pk.grid().clone();
        let mut max_err = 0.0f64;
        for (flat, (u, v)) in pk.values().iter().zip(pm.values()).enumerate() {
            let c = sg.coords(flat);
            if c[0].abs() <= 0.9 * sg.axis(0).half_width
                && c[1].abs() <= 0.9 * sg.axis(1).half_width
            {
                max_err = max_err.max((u - v).norm());
            }
        }
        assert!(max_err <= 1e-7, "route disagreement {max_err}");
    }

    #[test]
    fn sharp_homomorphism_weyl() {
        let b = base(64, 8.0);
        let sg = Grid::symbol_grid(&b);
        let a1 = SampledFunction::from_fn(sg.clone(), "g1", |c| {
            Complex64::new((-((c[0] - 0.3).powi(2) + 0.9 * c[1] * c[1])).exp(), 0.0)
        })
        .unwrap();
        let a2 = SampledFunction::from_fn(sg, "g2", |c| {
            Complex64::new(
                (-0.5 * ((c[0] + 0.2).powi(2) + (c[1] - 0.4).powi(2))).exp(),
                0.0,
            )
        })
        .unwrap();
        for t in [0.0f64, 0.5, 1.0] {
            let qm = QuantMatrix::scalar(1, t).unwrap();
            let prod = sharp_a(&a1, &a2, &qm, SharpRoute::Kernel).unwrap();
            for k in [0usize, 3] {
                let f = hermite(k, &b).unwrap();
                let lhs = apply_op(&prod, &qm, &f).unwrap();
                let rhs = apply_op(&a1, &qm, &apply_op(&a2, &qm, &f).unwrap()).unwrap();
                let err = rel_l2_error(&lhs, &rhs).unwrap();
                assert!(err <= 1e-7, "t={t} k={k} err={err}");
            }
        }
    }

    #[test]
    fn weyl_commutator_matches_poisson_bracket() {
        let b = base(64, 12.0);
        let sg = Grid::symbol_grid(&b);
        // wide real Gaussians: higher-order product corrections scale with
        // squared derivative size, so widths are generous
        let a1 = SampledFunction::from_fn(sg.clone(), "a1", |c| {
            Complex64::new((-(c[0] * c[0] + c[1] * c[1]) / 16.0).exp(), 0.0)
        })
        .unwrap();
        let a2 = SampledFunction::from_fn(sg.clone(), "a2", |c| {
            Complex64::new(
                (-((c[0] - 1.5) * (c[0] - 1.5) + 0.5 * c[1] * c[1]) / 12.0).exp(),
                0.0,
            )
        })
        .unwrap();
        let w = QuantMatrix::scalar(1, 0.5).unwrap();
        let p12 = sharp_a(&a1, &a2, &w, SharpRoute::Kernel).unwrap();
        let p21 = sharp_a(&a2, &a1, &w, SharpRoute::Kernel).unwrap();
        let comm = p12.sub(&p21).unwrap();
        // leading term: a1 # a2 - a2 # a1 = -i {a1, a2} + higher order,
        // with {a, b} = d_xi a d_x b - d_x a d_xi b
        let da1x = crate::grid::spectral_derivative(&a1, &[1, 0]).unwrap();
        let da1xi = crate::grid::spectral_derivative(&a1, &[0, 1]).unwrap();
        let da2x = crate::grid::spectral_derivative(&a2, &[1, 0]).unwrap();
        let da2xi = crate::grid::spectral_derivative(&a2, &[0, 1]).unwrap();
        let bracket = da1xi
            .mul_pointwise(&da2x)
            .unwrap()
            .sub(&da1x.mul_pointwise(&da2xi).unwrap())
            .unwrap();
        let mut max_err = 0.0f64;
        let mut max_bracket = 0.0f64;
        for (flat, (c, br)) in comm.values().iter().zip(bracket.values()).enumerate() {
            let xy = sg.coords(flat);
            if xy[0].abs() <= 0.7 * sg.axis(0).half_width
                && xy[1].abs() <= 0.7 * sg.axis(1).half_width
            {
                max_err = max_err.max((c.im + br.re).abs());
                max_bracket = max_bracket.max(br.norm());
            }
        }
        assert!(
            max_err <= 0.1 * max_bracket,
            "bracket error {max_err} vs scale {max_bracket}"
        );
    }

    #[test]
    fn kernel_composition_identity_and_associativity() {
        let b = base(48, 7.0);
        let zero = QuantMatrix::zero(1);
        let one = crate::quantize::one_symbol(&b).unwrap();
        let a = gaussian_symbol(&b).unwrap();
        let kid = kernel_from_symbol(&one, &zero).unwrap();
        let ka = kernel_from_symbol(&a, &zero).unwrap();
        let prod = compose_kernels(&ka, &kid).unwrap();
        assert!(rel_l2_error(&prod.function, &ka.function).unwrap() <= 1e-10);

        let b2 = SampledFunction::from_fn(a.grid().clone(), "b2", |c| {
            Complex64::new((-0.7 * (c[0] * c[0] + c[1] * c[1])).exp(), 0.0)
        })
        .unwrap();
        let kb = kernel_from_symbol(&b2, &zero).unwrap();
        let left = compose_kernels(&compose_kernels(&ka, &kb).unwrap(), &kid).unwrap();
        let right = compose_kernels(&ka, &compose_kernels(&kb, &kid).unwrap()).unwrap();
        assert!(rel_l2_error(&left.function, &right.function).unwrap() <= 1e-9);
    }

    #[test]
    fn triple_compose_matches_pairwise() {
        let b = base(48, 7.0);
        let zero = QuantMatrix::zero(1);
        let mk = |c0: f64, w: f64| {
            let sg = Grid::symbol_grid(&b);
            let f = SampledFunction::from_fn(sg, "g", move |c| {
                Complex64::new((-w * ((c[0] - c0).powi(2) + c[1] * c[1])).exp(), 0.0)
            })
            .unwrap();
            kernel_from_symbol(&f, &zero).unwrap()
        };
        let k1 = mk(0.0, 1.0);
        let k2 = mk(0.4, 0.8);
        let k3 = mk(-0.3, 1.2);
        let direct = triple_compose(&k1, &k2, &k3).unwrap();
        let pair = compose_kernels(&compose_kernels(&k1, &k2).unwrap(), &k3).unwrap();
        assert!(rel_l2_error(&direct.function, &pair.function).unwrap() <= 1e-9);

        // identity in the middle reduces to the outer composition
        let one = crate::quantize::one_symbol(&b).unwrap();
        let kid = kernel_from_symbol(&one, &zero).unwrap();
        let mid = triple_compose(&k1, &kid, &k3).unwrap();
        let outer = compose_kernels(&k1, &k3).unwrap();
        assert!(rel_l2_error(&mid.function, &outer.function).unwrap() <= 1e-9);
    }

    #[test]
    fn rank_one_triple_is_rank_one() {
        let b = base(48, 7.0);
        let phi = crate::windows::gaussian_window(&b).unwrap();
        let n = b.len();
        let mut kv = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                kv[i * n + j] = phi.values()[i] * phi.values()[j].conj();
            }
        }
        let proj = OperatorKernel {
            function: SampledFunction::new(Grid::kernel_grid(&b), kv, "p").unwrap(),
            symbol_label: "proj".into(),
            matrix: QuantMatrix::zero(1),
        };
        let a = gaussian_symbol(&b).unwrap();
        let ka = kernel_from_symbol(&a, &QuantMatrix::zero(1)).unwrap();
        let t = triple_compose(&proj, &ka, &proj).unwrap();
        // output must be rank one: proportional to the projector
        let c = t.function.values()[n / 2 * n + n / 2] / proj.function.values()[n / 2 * n + n / 2];
        let mut max_err = 0.0f64;
        for (tv, pv) in t.function.values().iter().zip(proj.function.values()) {
            max_err = max_err.max((tv - pv * c).norm());
        }
        assert!(max_err <= 1e-9 * t.function.max_abs().max(1e-300));
    }

    #[test]
    fn kernel_relation_gaussian() {
        let b = base(32, 6.0);
        let a = gaussian_symbol(&b).unwrap();
        let w = crate::envelope::phase_space_window(&b).unwrap();
        for t in [0.0f64, 0.5] {
            let qm = QuantMatrix::scalar(1, t).unwrap();
            let rep =
                stft_kernel_relation_check(&a, &w, &qm, 4, MemLimit::default()).unwrap();
            assert!(rep.compared > 50, "t={t}: only {} points", rep.compared);
            assert!(rep.max_dev <= 1e-7, "t={t} deviation {}", rep.max_dev);
        }
        // zero symbol: both sides vanish
        let z = SampledFunction::zeros(a.grid().clone(), "0");
        let rep = stft_kernel_relation_check(&z, &w, &QuantMatrix::zero(1), 4, MemLimit::default())
            .unwrap();
        assert!(rep.max_dev == 0.0);
    }

    #[test]
    fn trace_of_tensor_is_pointwise_product() {
        let b = base(16, 5.0);
        let a1 = gaussian_symbol(&b).unwrap();
        let a2 = SampledFunction::from_fn(a1.grid().clone(), "a2", |c| {
            Complex64::new((-0.5 * (c[0] * c[0] + c[1] * c[1])).exp(), 0.1 * c[0])
        })
        .unwrap();
        let f = FourDField::tensor_product(&a1, &a2).unwrap();
        let tr = trace_map(&f).unwrap();
        let prod = a1.mul_pointwise(&a2).unwrap();
        assert!(rel_l2_error(&tr, &prod).unwrap() <= 1e-14);

        // swap symmetry: tensor(a2, a1) has the same trace as tensor(a1, a2)
        let f2 = FourDField::tensor_product(&a2, &a1).unwrap();
        let tr2 = trace_map(&f2).unwrap();
        assert!(rel_l2_error(&tr2, &tr).unwrap() <= 1e-14);
    }

    #[test]
    fn trace_leibniz_bound() {
        let b = base(16, 5.0);
        let a1 = gaussian_symbol(&b).unwrap();
        let a2 = SampledFunction::from_fn(a1.grid().clone(), "a2", |c| {
            Complex64::new((-0.8 * (c[0] * c[0] + c[1] * c[1])).exp(), 0.0)
        })
        .unwrap();
        let f = FourDField::tensor_product(&a1, &a2).unwrap();
        let rep = trace_leibniz_check(&f, 1.0, 1.0, 1.0, 4).unwrap();
        assert!(
            rep.pass,
            "trace {} vs field {}",
            rep.trace_norm_2h, rep.field_norm_h
        );
    }

    #[test]
    fn mollify_basics() {
        let b = base(32, 6.0);
        let sg = Grid::symbol_grid(&b);
        let a = gaussian_symbol(&b).unwrap();
        // window with phi(0) = 1
        let phi = SampledFunction::from_fn(sg.clone(), "bump", |c| {
            Complex64::new((-(c[0] * c[0] + c[1] * c[1]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let (a_half, flagged) = mollify(&a, &phi, 0.5).unwrap();
        assert!(!flagged);
        // phi(0) = 1 forces a_eps(0,0) = a(0,0) exactly
        let strides = sg.strides();
        let zf = (sg.axis(0).n / 2) * strides[0] + (sg.axis(1).n / 2) * strides[1];
        assert!((a_half.values()[zf] - a.values()[zf]).norm() <= 1e-12);

        // dilation against direct sampling of phi(eps x) a(x)
        let mut max_err = 0.0f64;
        for (flat, v) in a_half.values().iter().enumerate() {
            let c = sg.coords(flat);
            let expect = a.values()[flat]
                * (-((0.5 * c[0]).powi(2) + (0.5 * c[1]).powi(2)) / 2.0).exp();
            max_err = max_err.max((v - expect).norm());
        }
        // floor set by the transform-tail of the window at this grid size
        assert!(max_err <= 1e-7, "dilation error {max_err}");

        // zero symbol stays zero
        let z = SampledFunction::zeros(sg.clone(), "0");
        let (mz, _) = mollify(&z, &phi, 0.25).unwrap();
        assert!(mz.max_abs() == 0.0);

        // tiny eps flattens the window to machine precision
        let (same, flagged) = mollify(&a, &phi, 1e-9).unwrap();
        assert!(flagged);
        assert_eq!(same.values(), a.values());

        // windows without phi(0) = 1 are rejected
        let bad = phi.scale(Complex64::new(0.5, 0.0));
        assert!(mollify(&a, &bad, 0.5).is_err());
    }

    #[test]
    fn mollify_distance_decreases() {
        let b = base(32, 6.0);
        let sg = Grid::symbol_grid(&b);
        let a = gaussian_symbol(&b).unwrap();
        let phi = SampledFunction::from_fn(sg, "bump", |c| {
            Complex64::new((-(c[0] * c[0] + c[1] * c[1]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let p = GevreyParams::isotropic(1.0, 1.0, 1.0, 1.0).unwrap();
        let rep = mollify_convergence_check(&a, &phi, &[0.5, 0.25, 0.125], &p, 2).unwrap();
        assert!(
            rep.strictly_decreasing,
            "distances {:?}",
            rep.distances
        );
    }
}
