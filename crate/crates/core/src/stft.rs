//! Short-time Fourier transform, its inverse, the Moyal identity, and the
//! phase-space transform of symbols.
//!
//! ```text
//! (V_phi f)(x, xi) = (2pi)^{-d/2} \int f(y) conj(phi(y - x)) e^{-i<y,xi>} dy
//! ```
//!
//! Window shifts are circular on the periodized grid, which makes them exact
//! there; the frequency integral is the centered unitary transform of the
//! windowed product, so one row of the output per shift node. Inversion uses
//!
//! ```text
//! f(x) = (2pi)^{-d/2} ||phi||^{-2} \iint V(y, eta) phi(x - y) e^{i<x,eta>} dy deta ,
//! ```
//!
//! whose discrete form recombines exactly to the identity on the grid.
//!
//! For a symbol `a(x, xi)` on a phase-space grid the same machinery yields a
//! four-dimensional field; the output axes are ordered
//! `(x, xi, eta, y)` with `eta` dual to the `x` slot and `y` dual to the
//! `xi` slot. That pairing is fixed here once and relied on by the
//! quantization calculus.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    l2_inner, l2_norm, transform_axis_inplace, AxisPlans, Grid, SampledFunction, Sign,
};
use crate::MemLimit;

/// Sampled `V_phi f` over position times frequency grids.
#[derive(Clone, Debug)]
pub struct STFTField {
    pos_grid: Grid,
    freq_grid: Grid,
    values: Vec<Complex64>,
    window_label: String,
}

impl STFTField {
    /// Assemble a field from raw parts; `freq_grid` must be the dual of
    /// `pos_grid` and the value count their product.
    pub fn from_parts(
        pos_grid: Grid,
        freq_grid: Grid,
        values: Vec<Complex64>,
        window_label: impl Into<String>,
    ) -> Result<Self> {
        if !freq_grid.approx_eq(&pos_grid.dual()) {
            return Err(Error::GridMismatch(
                "frequency grid is not the dual of the position grid".into(),
            ));
        }
        if values.len() != pos_grid.len() * freq_grid.len() {
            return Err(Error::GridMismatch(format!(
                "field size {} != |pos| * |freq| = {}",
                values.len(),
                pos_grid.len() * freq_grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(STFTField {
            pos_grid,
            freq_grid,
            values,
            window_label: window_label.into(),
        })
    }

    pub fn pos_grid(&self) -> &Grid {
        &self.pos_grid
    }

    pub fn freq_grid(&self) -> &Grid {
        &self.freq_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn window_label(&self) -> &str {
        &self.window_label
    }

    /// Combined grid (position axes then frequency axes).
    pub fn combined_grid(&self) -> Grid {
        let mut axes = self.pos_grid.axes().to_vec();
        axes.extend_from_slice(self.freq_grid.axes());
        Grid::from_axes(axes).expect("nonempty")
    }

    /// View the field as a sampled function on the combined grid.
    pub fn as_function(&self) -> SampledFunction {
        SampledFunction::new(self.combined_grid(), self.values.clone(), "stft-field")
            .expect("validated at construction")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let vol = self.pos_grid.cell_volume() * self.freq_grid.cell_volume();
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * vol).sqrt()
    }
}

/// Circular-shift index table: entry `(m, k)` is the flat index of
/// `phi(y_k - x_m)` in row-major per-axis form `(k - m + n/2) mod n`.
fn shift_index(k: usize, m: usize, n: usize) -> usize {
    (k + n + n / 2 - m) % n
}

fn window_guard(phi: &SampledFunction) -> Result<()> {
    if l2_norm(phi) <= 1e-300 {
        return Err(Error::ZeroWindow);
    }
    Ok(())
}

/// Short-time Fourier transform of `f` against window `phi` on a shared
/// grid; one output row per circular shift node.
pub fn stft(f: &SampledFunction, phi: &SampledFunction) -> Result<STFTField> {
    stft_with_limit(f, phi, MemLimit::default())
}

pub fn stft_with_limit(
    f: &SampledFunction,
    phi: &SampledFunction,
    limit: MemLimit,
) -> Result<STFTField> {
    if !f.grid().approx_eq(phi.grid()) {
        return Err(Error::GridMismatch("stft input and window grids differ".into()));
    }
    window_guard(phi)?;
    let grid = f.grid();
    let n_total = grid.len();
    limit.check_values(n_total.saturating_mul(n_total))?;

    let shape = grid.shape();
    let d = grid.dims();
    let phi_conj: Vec<Complex64> = phi.values().iter().map(|v| v.conj()).collect();
    let strides = grid.strides();

    // shared transform plans
    let mut plans = AxisPlans::new();
    let axis_plans: Vec<_> = (0..d).map(|a| plans.plan(shape[a], Sign::Forward)).collect();

    let mut values = vec![Complex64::new(0.0, 0.0); n_total * n_total];
    values
        .par_chunks_mut(n_total)
        .enumerate()
        .for_each(|(mflat, row)| {
            let m_idx = grid.unravel(mflat);
            // windowed product with circular shift, then transform all axes
            let mut idx = vec![0usize; d];
            for kflat in 0..n_total {
                let mut w = 0usize;
                for a in 0..d {
                    w += shift_index(idx[a], m_idx[a], shape[a]) * strides[a];
                }
                row[kflat] = f.values()[kflat] * phi_conj[w];
                for i in (0..d).rev() {
                    idx[i] += 1;
                    if idx[i] < shape[i] {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            for a in 0..d {
                transform_axis_inplace(row, &shape, a, grid.axis(a), &axis_plans[a]);
            }
        });

    STFTField::from_parts(grid.clone(), grid.dual(), values, phi.label().to_string())
}

/// Inverse transform: quadrature of the inversion integral. Exact inverse
/// of [`stft`] on the grid.
pub fn istft(field: &STFTField, phi: &SampledFunction) -> Result<SampledFunction> {
    if !field.pos_grid().approx_eq(phi.grid()) {
        return Err(Error::GridMismatch("istft window grid differs from field".into()));
    }
    window_guard(phi)?;
    let grid = field.pos_grid().clone();
    let d = grid.dims();
    let shape = grid.shape();
    let n_total = grid.len();

    // inverse transform along the frequency axes: W(y, x)
    let mut w = field.values().to_vec();
    let combined_shape: Vec<usize> = shape.iter().chain(shape.iter()).copied().collect();
    let mut plans = AxisPlans::new();
    for a in 0..d {
        let plan = plans.plan(shape[a], Sign::Inverse);
        transform_axis_inplace(
            &mut w,
            &combined_shape,
            d + a,
            field.freq_grid().axis(a),
            &plan,
        );
    }

    let phi_sq = {
        let n2 = l2_norm(phi);
        n2 * n2
    };
    let vol = grid.cell_volume();
    let strides = grid.strides();

    let values: Vec<Complex64> = (0..n_total)
        .into_par_iter()
        .map(|kflat| {
            let k_idx = grid.unravel(kflat);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut m_idx = vec![0usize; d];
            for mflat in 0..n_total {
                let mut wofs = 0usize;
                for a in 0..d {
                    wofs += shift_index(k_idx[a], m_idx[a], shape[a]) * strides[a];
                }
                acc += w[mflat * n_total + kflat] * phi.values()[wofs];
                for i in (0..d).rev() {
                    m_idx[i] += 1;
                    if m_idx[i] < shape[i] {
                        break;
                    }
                    m_idx[i] = 0;
                }
            }
            acc * (vol / phi_sq)
        })
        .collect();

    SampledFunction::new(grid, values, "istft")
}

/// Both sides of the Moyal identity `(V_phi f, V_psi g) = (f, g)(psi, phi)`
/// computed by quadrature; the caller asserts closeness.
pub fn moyal_check(
    f: &SampledFunction,
    g: &SampledFunction,
    phi: &SampledFunction,
    psi: &SampledFunction,
) -> Result<(Complex64, Complex64)> {
    let vf = stft(f, phi)?;
    let vg = stft(g, psi)?;
    let vol = vf.pos_grid().cell_volume() * vf.freq_grid().cell_volume();
    let mut lhs = Complex64::new(0.0, 0.0);
    for (a, b) in vf.values().iter().zip(vg.values()) {
        lhs += a * b.conj();
    }
    lhs *= vol;
    let rhs = l2_inner(f, g)? * l2_inner(psi, phi)?;
    Ok((lhs, rhs))
}

/// Phase-space transform of a symbol: the transform of a function on a
/// two-axis grid, producing the four-dimensional field with slot order
/// `(x, xi, eta, y)`.
pub fn stft4(a: &SampledFunction, window: &SampledFunction) -> Result<STFTField> {
    stft4_with_limit(a, window, MemLimit::default())
}

pub fn stft4_with_limit(
    a: &SampledFunction,
    window: &SampledFunction,
    limit: MemLimit,
) -> Result<STFTField> {
    if a.grid().dims() != 2 {
        return Err(Error::BadDimension(format!(
            "phase-space transform needs a two-axis symbol grid, got {} axes",
            a.grid().dims()
        )));
    }
    stft_with_limit(a, window, limit)
}

/// Energy identity `||V_phi f||_2 = ||f|| ||phi||`, returned as the pair.
pub fn stft_energy(f: &SampledFunction, phi: &SampledFunction) -> Result<(f64, f64)> {
    let v = stft(f, phi)?;
    Ok((v.l2_norm(), l2_norm(f) * l2_norm(phi)))
}

/// Integral quadrature of the defining transform at one phase-space point,
/// independent of the FFT path; test oracle.
pub fn stft_reference_point(
    f: &SampledFunction,
    phi: &SampledFunction,
    x: &[f64],
    xi: &[f64],
) -> Result<Complex64> {
    if !f.grid().approx_eq(phi.grid()) {
        return Err(Error::GridMismatch("reference point on different grids".into()));
    }
    let grid = f.grid();
    let d = grid.dims();
    if x.len() != d || xi.len() != d {
        return Err(Error::InvalidParam("point dimension mismatch".into()));
    }
    // conj(phi(y - x)) by direct evaluation of the Gaussian-like window is
    // not available here; instead evaluate the trigonometric interpolant of
    // phi at the off-grid points via its plain sum.
    let phi_hat = crate::grid::fourier(phi, -1)?;
    let dual = phi_hat.grid();
    let eval_phi = |p: &[f64]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat, v) in phi_hat.values().iter().enumerate() {
            let c = dual.coords(flat);
            let phase: f64 = c.iter().zip(p).map(|(&w, &u)| w * u).sum();
            acc += v * Complex64::from_polar(1.0, phase);
        }
        acc * dual.cell_volume() / (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (flat, v) in f.values().iter().enumerate() {
        let y = grid.coords(flat);
        let shifted: Vec<f64> = y.iter().zip(x).map(|(&a, &b)| a - b).collect();
        let phase: f64 = y.iter().zip(xi).map(|(&a, &b)| a * b).sum();
        acc += v * eval_phi(&shifted).conj() * Complex64::from_polar(1.0, -phase);
    }
    Ok(acc * grid.cell_volume() / (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0))
}
