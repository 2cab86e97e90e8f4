//! Weight functions, the power-triangle constant, the comparison series
//! `m_{s,tau}`, and least-squares envelope fitting that turns phase-space
//! decay statements into numerical class diagnostics.
//!
//! The fits run in the log domain: points with `|field|` under a noise
//! floor (default `1e-14 * max`) are dropped so FFT round-off plateaus do
//! not bias slopes, points sitting exactly on a coordinate hyperplane of a
//! fitted slot are dropped because `|x|^{1/s}` is not smooth there, and an
//! interior mask keeps box-edge periodization out of the regression.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stft::{stft4_with_limit, STFTField};
use crate::windows::{ln_factorial, INTERIOR_FRAC};
use crate::{MemLimit, SampledFunction};

/// Best constant in `|x+y|^r <= kappa(r) (|x|^r + |y|^r)`:
/// `1` for `r <= 1`, `2^{r-1}` for `r > 1`.
pub fn kappa(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("kappa needs r > 0, got {r}")));
    }
    Ok(if r <= 1.0 { 1.0 } else { 2f64.powf(r - 1.0) })
}

/// Whether `|x+y|^{1/s} <= kappa(1/s) (|x|^{1/s} + |y|^{1/s})` holds at the
/// given point, with a relative floating-point slack.
pub fn power_triangle_check(x: f64, y: f64, s: f64) -> Result<bool> {
    if !(s > 0.0) {
        return Err(Error::InvalidParam(format!("need s > 0, got {s}")));
    }
    let p = 1.0 / s;
    let lhs = (x + y).abs().powf(p);
    let rhs = kappa(p)? * (x.abs().powf(p) + y.abs().powf(p));
    Ok(lhs <= rhs * (1.0 + 1e-12) + 1e-300)
}

/// Sample the power-triangle inequality over seeded random
/// `(x, y) in [-10, 10]^2`, `s in [0.3, 4]`; returns the violation count.
pub fn power_triangle_sample(seed: u64, count: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    for _ in 0..count {
        let x = rng.gen_range(-10.0..10.0);
        let y = rng.gen_range(-10.0..10.0);
        let s = rng.gen_range(0.3..4.0);
        if !power_triangle_check(x, y, s).expect("s > 0") {
            violations += 1;
        }
    }
    violations
}

/// `ln m_s(t)` for `m_s(t) = sum_j t^j / (j!)^{2s}`, `t >= 0`, summed in the
/// log domain with a stable running rescale.
pub fn m_series_ln_t(s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "m-series needs s > 0 and t >= 0, got s={s}, t={t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let ln_t = t.ln();
    // terms a_j = j ln t - 2s ln j!, increasing until roughly j ~ t^{1/(2s)}
    let j_peak = t.powf(1.0 / (2.0 * s)).ceil() as usize + 2;
    let mut max_a = 0.0f64; // j = 0 term
    let mut sum = 1.0f64; // exp(a_0 - max_a)
    let mut j = 1usize;
    loop {
        let a = j as f64 * ln_t - 2.0 * s * ln_factorial(j);
        if a > max_a {
            sum = sum * ((max_a - a).exp()) + 1.0;
            max_a = a;
        } else {
            sum += (a - max_a).exp();
        }
        // ratio test guarantees the tail below 1e-18 of the partial sum
        if j > j_peak && a < max_a + (1e-18f64).ln() {
            break;
        }
        j += 1;
        if j > 2_000_000 {
            return Err(Error::InvalidParam("m-series failed to converge".into()));
        }
    }
    Ok(max_a + sum.ln())
}

/// `ln m_{s,tau}(x) = ln m_s(tau <x>^2)` with `<x>^2 = 1 + |x|^2`.
pub fn m_series_ln(s: f64, tau: f64, x: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!("need tau > 0, got {tau}")));
    }
    m_series_ln_t(s, tau * (1.0 + x * x))
}

/// `m_{s,tau}(x)` itself; overflows to infinity for large arguments, use
/// [`m_series_ln`] in estimates.
pub fn m_series(s: f64, tau: f64, x: f64) -> Result<f64> {
    Ok(m_series_ln(s, tau, x)?.exp())
}

/// Two-sided envelope check for the comparison series: fitted constants for
/// `e^{(2s -/+ eps) tau^{1/(2s)} <x>^{1/s}}` over a sample of `x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MSeriesBoundsReport {
    pub s: f64,
    pub tau: f64,
    pub eps: f64,
    /// max over x of ln m - upper envelope exponent (finite <=> bound holds
    /// with C = exp of this)
    pub ln_c_upper: f64,
    /// max over x of lower envelope exponent - ln m
    pub ln_c_lower: f64,
    /// the two max gaps again, restricted to the tail half of the sample;
    /// both must not exceed the global ones for the envelope to dominate
    pub tail_gap_upper: f64,
    pub tail_gap_lower: f64,
    pub pass: bool,
}

/// Check the two-sided comparison-series envelope with margin `eps` over
/// `x in [0, x_max]`.
pub fn m_series_bounds_check(
    s: f64,
    tau: f64,
    eps: f64,
    x_max: f64,
    samples: usize,
) -> Result<MSeriesBoundsReport> {
    if samples < 8 {
        return Err(Error::TooFewPoints {
            needed: 8,
            found: samples,
        });
    }
    let rate = tau.powf(1.0 / (2.0 * s));
    let mut ln_c_upper = f64::NEG_INFINITY;
    let mut ln_c_lower = f64::NEG_INFINITY;
    let mut tail_gap_upper = f64::NEG_INFINITY;
    let mut tail_gap_lower = f64::NEG_INFINITY;
    for i in 0..samples {
        let x = x_max * i as f64 / (samples - 1) as f64;
        let bracket = (1.0 + x * x).sqrt().powf(1.0 / s);
        let ln_m = m_series_ln(s, tau, x)?;
        let upper_gap = ln_m - (2.0 * s + eps) * rate * bracket;
        let lower_gap = (2.0 * s - eps) * rate * bracket - ln_m;
        ln_c_upper = ln_c_upper.max(upper_gap);
        ln_c_lower = ln_c_lower.max(lower_gap);
        if i >= samples / 2 {
            tail_gap_upper = tail_gap_upper.max(upper_gap);
            tail_gap_lower = tail_gap_lower.max(lower_gap);
        }
    }
    // the +-eps slack must win in the tail: the worst gap is attained in the
    // head of the sample, not at its far end
    let pass = ln_c_upper.is_finite()
        && ln_c_lower.is_finite()
        && tail_gap_upper <= ln_c_upper + 1e-9
        && tail_gap_lower <= ln_c_lower + 1e-9
        && tail_gap_upper < ln_c_upper.max(0.0) + 1e-9;
    Ok(MSeriesBoundsReport {
        s,
        tau,
        eps,
        ln_c_upper,
        ln_c_lower,
        tail_gap_upper,
        tail_gap_lower,
        pass,
    })
}

/// Report for the monomial-over-series quotient bound
/// `x^alpha / m_{s,tau} <~ h0^alpha alpha!^s e^{-r x^{1/s}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MQuotientReport {
    pub s: f64,
    pub tau: f64,
    pub alpha_cap: usize,
    pub r: f64,
    pub h0: f64,
    /// per-alpha constants after removing `h0^alpha alpha!^s`
    pub constants: Vec<f64>,
    /// max/min spread of the constants; uniformity means a modest spread
    pub spread: f64,
}

/// Fit `(h0, r)` so that `sup_x x^alpha e^{r x^{1/s}} / m_{s,tau}(x)` is
/// uniformly `<= C h0^alpha alpha!^s` across `alpha <= alpha_cap`, scanning
/// a ladder of candidate rates and reporting the best.
pub fn m_quotient_bound_check(
    s: f64,
    tau: f64,
    alpha_cap: usize,
    x_max: f64,
    samples: usize,
) -> Result<MQuotientReport> {
    if alpha_cap > 30 {
        return Err(Error::InvalidParam("alpha cap above 30".into()));
    }
    let full_rate = 2.0 * s * tau.powf(1.0 / (2.0 * s));
    let mut best: Option<MQuotientReport> = None;
    for frac in [0.75, 0.5, 0.25] {
        let r = frac * full_rate;
        // Q_a = sup_x [a ln x + r x^{1/s} - ln m]
        let mut q = vec![f64::NEG_INFINITY; alpha_cap + 1];
        for i in 0..samples {
            let x = x_max * (i + 1) as f64 / samples as f64;
            let ln_m = m_series_ln(s, tau, x)?;
            let base = r * x.powf(1.0 / s) - ln_m;
            for (a, slot) in q.iter_mut().enumerate() {
                *slot = (*slot).max(a as f64 * x.ln() + base);
            }
        }
        // least squares y_a = Q_a - s ln a! against a: slope ln h0
        let ys: Vec<f64> = (0..=alpha_cap)
            .map(|a| q[a] - s * ln_factorial(a))
            .collect();
        let n = ys.len() as f64;
        let mean_a = (0..=alpha_cap).map(|a| a as f64).sum::<f64>() / n;
        let mean_y = ys.iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (a, &y) in ys.iter().enumerate() {
            sxx += (a as f64 - mean_a).powi(2);
            sxy += (a as f64 - mean_a) * (y - mean_y);
        }
        let slope = sxy / sxx;
        let constants: Vec<f64> = ys
            .iter()
            .enumerate()
            .map(|(a, &y)| (y - slope * a as f64).exp())
            .collect();
        let cmax = constants.iter().cloned().fold(f64::MIN, f64::max);
        let cmin = constants.iter().cloned().fold(f64::MAX, f64::min);
        let rep = MQuotientReport {
            s,
            tau,
            alpha_cap,
            r,
            h0: slope.exp(),
            constants,
            spread: cmax / cmin,
        };
        let better = match &best {
            None => true,
            Some(b) => rep.spread <= 2.0 && rep.r > b.r && b.spread > 2.0,
        };
        if better || best.as_ref().map_or(true, |b| rep.spread < b.spread && b.spread > 2.0) {
            best = Some(rep);
        }
    }
    Ok(best.expect("ladder nonempty"))
}

/// Built-in weight families on phase space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Weight {
    /// `e^{r (|x|^{1/s} + |xi|^{1/sigma})}`
    ExpRate { r: f64, s: f64, sigma: f64 },
    /// `<(x, xi)>^m = (1 + |x|^2 + |xi|^2)^{m/2}`
    Polynomial { m: f64 },
    /// pointwise product of factors
    Product(Vec<Weight>),
}

impl Weight {
    pub fn validate(&self) -> Result<()> {
        match self {
            Weight::ExpRate { s, sigma, .. } => {
                if !(*s > 0.0 && *sigma > 0.0) {
                    return Err(Error::InvalidParam(
                        "weight exponents must be positive".into(),
                    ));
                }
            }
            Weight::Polynomial { m } => {
                if !m.is_finite() {
                    return Err(Error::InvalidParam("polynomial weight order".into()));
                }
            }
            Weight::Product(ws) => {
                for w in ws {
                    w.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Evaluate at `(x, xi)`, both blocks given componentwise.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        match self {
            Weight::ExpRate { r, s, sigma } => {
                let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nxi: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                (r * (nx.powf(1.0 / s) + nxi.powf(1.0 / sigma))).exp()
            }
            Weight::Polynomial { m } => {
                let q: f64 =
                    1.0 + x.iter().map(|v| v * v).sum::<f64>() + xi.iter().map(|v| v * v).sum::<f64>();
                q.powf(m / 2.0)
            }
            Weight::Product(ws) => ws.iter().map(|w| w.eval(x, xi)).product(),
        }
    }
}

/// Role of one fitted slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotRole {
    Growth,
    Decay,
}

/// One regressor: `|coordinate on axis|^{1/exponent}` with a role deciding
/// the reported sign convention (positive growth rate, positive decay rate).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlotSpec {
    pub axis: usize,
    pub exponent: f64,
    pub role: SlotRole,
}

/// Envelope model kinds mirroring the class-defining estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    DecayDecay,
    GrowthDecay,
    GrowthGrowth,
    AllDecay4d,
    Symbol4d,
    Weighted,
}

/// Envelope model: per-slot regressors, optionally a fixed weight divided
/// out of the field (on the two position axes) before fitting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeModel {
    pub kind: ModelKind,
    pub slots: Vec<SlotSpec>,
    pub divide_weight: Option<Weight>,
}

impl EnvelopeModel {
    /// Two-slot decay model `e^{-r_x |x|^{1/s} - r_xi |xi|^{1/sigma}}`.
    pub fn decay_decay(s: f64, sigma: f64) -> Self {
        EnvelopeModel {
            kind: ModelKind::DecayDecay,
            slots: vec![
                SlotSpec { axis: 0, exponent: s, role: SlotRole::Decay },
                SlotSpec { axis: 1, exponent: sigma, role: SlotRole::Decay },
            ],
            divide_weight: None,
        }
    }

    /// `e^{r |x|^{1/s} - h |xi|^{1/sigma}}`.
    pub fn growth_decay(s: f64, sigma: f64) -> Self {
        EnvelopeModel {
            kind: ModelKind::GrowthDecay,
            slots: vec![
                SlotSpec { axis: 0, exponent: s, role: SlotRole::Growth },
                SlotSpec { axis: 1, exponent: sigma, role: SlotRole::Decay },
            ],
            divide_weight: None,
        }
    }

    pub fn growth_growth(s: f64, sigma: f64) -> Self {
        EnvelopeModel {
            kind: ModelKind::GrowthGrowth,
            slots: vec![
                SlotSpec { axis: 0, exponent: s, role: SlotRole::Growth },
                SlotSpec { axis: 1, exponent: sigma, role: SlotRole::Growth },
            ],
            divide_weight: None,
        }
    }

    /// All four slots of a phase-space field decay:
    /// `e^{-r(|x|^{1/s} + |xi|^{1/sigma} + |eta|^{1/sigma} + |y|^{1/s})}`
    /// with the dual slots carrying the swapped exponents.
    pub fn all_decay_4d(s: f64, sigma: f64) -> Self {
        EnvelopeModel {
            kind: ModelKind::AllDecay4d,
            slots: vec![
                SlotSpec { axis: 0, exponent: s, role: SlotRole::Decay },
                SlotSpec { axis: 1, exponent: sigma, role: SlotRole::Decay },
                SlotSpec { axis: 2, exponent: sigma, role: SlotRole::Decay },
                SlotSpec { axis: 3, exponent: s, role: SlotRole::Decay },
            ],
            divide_weight: None,
        }
    }

    /// Growth in `(x, xi)`, decay in `(eta, y)` -- the symbol-class pattern.
    pub fn symbol_4d(s: f64, sigma: f64) -> Self {
        EnvelopeModel {
            kind: ModelKind::Symbol4d,
            slots: vec![
                SlotSpec { axis: 0, exponent: s, role: SlotRole::Growth },
                SlotSpec { axis: 1, exponent: sigma, role: SlotRole::Growth },
                SlotSpec { axis: 2, exponent: sigma, role: SlotRole::Decay },
                SlotSpec { axis: 3, exponent: s, role: SlotRole::Decay },
            ],
            divide_weight: None,
        }
    }

    /// Divide by `omega(x, xi)` on the position axes, then fit pure decay in
    /// `(eta, y)`.
    pub fn weighted(omega: Weight, s: f64, sigma: f64) -> Self {
        EnvelopeModel {
            kind: ModelKind::Weighted,
            slots: vec![
                SlotSpec { axis: 2, exponent: sigma, role: SlotRole::Decay },
                SlotSpec { axis: 3, exponent: s, role: SlotRole::Decay },
            ],
            divide_weight: Some(omega),
        }
    }
}

/// One fitted slot rate, sign convention: positive means the fitted data
/// behaves according to the slot role (grows for Growth, decays for Decay).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlotRate {
    pub axis: usize,
    pub exponent: f64,
    pub role: SlotRole,
    pub rate: f64,
}

/// Result of a log-domain envelope fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub kind: ModelKind,
    pub rates: Vec<SlotRate>,
    pub log_offset: f64,
    pub residual_rms: f64,
    pub used_fraction: f64,
    /// true when every fitted rate respects its slot role
    pub signs_consistent: bool,
}

fn solve_normal_equations(xtx: &mut [Vec<f64>], xty: &mut [f64]) -> Result<Vec<f64>> {
    let n = xty.len();
    // Gaussian elimination with partial pivoting on the (small) normal matrix
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if xtx[row][col].abs() > xtx[piv][col].abs() {
                piv = row;
            }
        }
        if xtx[piv][col].abs() < 1e-12 * (1.0 + xtx[col][col].abs()) {
            return Err(Error::RankDeficient);
        }
        xtx.swap(col, piv);
        xty.swap(col, piv);
        for row in col + 1..n {
            let f = xtx[row][col] / xtx[col][col];
            for k in col..n {
                xtx[row][k] -= f * xtx[col][k];
            }
            xty[row] -= f * xty[col];
        }
    }
    let mut sol = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = xty[row];
        for k in row + 1..n {
            acc -= xtx[row][k] * sol[k];
        }
        sol[row] = acc / xtx[row][row];
    }
    Ok(sol)
}

/// Linear least squares on `ln |field|` against the model regressors plus a
/// constant. Needs at least 10 usable points.
pub fn fit_envelope(
    field: &STFTField,
    model: &EnvelopeModel,
    noise_floor: Option<f64>,
) -> Result<EnvelopeFit> {
    if let Some(w) = &model.divide_weight {
        w.validate()?;
    }
    let grid = field.combined_grid();
    let d = grid.dims();
    for s in &model.slots {
        if s.axis >= d {
            return Err(Error::InvalidParam(format!("slot axis {} out of range", s.axis)));
        }
        if !(s.exponent > 0.0) {
            return Err(Error::InvalidParam("slot exponent must be positive".into()));
        }
    }
    let max_abs = field.max_abs();
    if !(max_abs > 0.0) {
        return Err(Error::TooFewPoints { needed: 10, found: 0 });
    }
    let floor = noise_floor.unwrap_or(1e-14 * max_abs);
    if !(floor > 0.0) {
        return Err(Error::InvalidParam("noise floor must be positive".into()));
    }

    let m = model.slots.len();
    let ncols = m + 1;
    let mut xtx = vec![vec![0.0f64; ncols]; ncols];
    let mut xty = vec![0.0f64; ncols];
    let mut rows_used = 0usize;
    let shape = grid.shape();
    let mut idx = vec![0usize; d];
    let pos_axes = field.pos_grid().dims();

    // second pass storage for the residual
    let mut design: Vec<(Vec<f64>, f64)> = Vec::new();

    for (flat, v) in field.values().iter().enumerate() {
        let _ = flat;
        let mut keep = v.norm() >= floor;
        if keep {
            // interior mask on every axis
            for a in 0..d {
                let x = grid.axis(a).node(idx[a]);
                if x.abs() > INTERIOR_FRAC * grid.axis(a).half_width {
                    keep = false;
                    break;
                }
            }
        }
        if keep {
            // drop coordinate hyperplanes of fitted slots
            for s in &model.slots {
                if grid.axis(s.axis).node(idx[s.axis]) == 0.0 {
                    keep = false;
                    break;
                }
            }
        }
        if keep {
            let mut y = v.norm().ln();
            if let Some(w) = &model.divide_weight {
                let coords: Vec<f64> = (0..d).map(|a| grid.axis(a).node(idx[a])).collect();
                let (xs, xis) = coords.split_at(pos_axes / 2 + pos_axes % 2);
                // position grid is (x.., xi..); halves split it
                let _ = (xs, xis);
                let half = pos_axes / 2;
                y -= w.eval(&coords[..half.max(1)], &coords[half.max(1)..pos_axes]).ln();
            }
            let mut row = Vec::with_capacity(ncols);
            row.push(1.0);
            for s in &model.slots {
                let c = grid.axis(s.axis).node(idx[s.axis]).abs();
                let reg = c.powf(1.0 / s.exponent);
                row.push(match s.role {
                    SlotRole::Growth => reg,
                    SlotRole::Decay => -reg,
                });
            }
            for i in 0..ncols {
                for j in 0..ncols {
                    xtx[i][j] += row[i] * row[j];
                }
                xty[i] += row[i] * y;
            }
            design.push((row, y));
            rows_used += 1;
        }
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }

    if rows_used < 10 {
        return Err(Error::TooFewPoints { needed: 10, found: rows_used });
    }
    let sol = solve_normal_equations(&mut xtx, &mut xty)?;

    let mut ss = 0.0f64;
    for (row, y) in &design {
        let pred: f64 = row.iter().zip(&sol).map(|(a, b)| a * b).sum();
        ss += (y - pred).powi(2);
    }
    let residual_rms = (ss / rows_used as f64).sqrt();

    let rates: Vec<SlotRate> = model
        .slots
        .iter()
        .enumerate()
        .map(|(i, s)| SlotRate {
            axis: s.axis,
            exponent: s.exponent,
            role: s.role,
            rate: sol[i + 1],
        })
        .collect();
    let signs_consistent = rates.iter().all(|r| r.rate >= -1e-9);

    Ok(EnvelopeFit {
        kind: model.kind,
        rates,
        log_offset: sol[0],
        residual_rms,
        used_fraction: rows_used as f64 / field.values().len() as f64,
        signs_consistent,
    })
}

/// Per-slot diagnostic from a one-dimensional max-profile fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlotDiagnostic {
    pub axis: usize,
    pub exponent: f64,
    pub role: SlotRole,
    /// slope of the profile over the whole window, sign per role
    pub rate: f64,
    /// slope over the inner half of the coordinate range
    pub inner_rate: f64,
    /// slope over the outer half
    pub outer_rate: f64,
    /// largest decay rate measurable on this grid (dynamic range / reach)
    pub ceiling: f64,
    /// rate rungs (quarter, half, full outer rate) with a head-attained
    /// envelope check per rung; decay slots only
    pub ladder: Vec<(f64, bool)>,
}

/// Quantifier-pattern verdict for a symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifyVerdict {
    pub s: f64,
    pub sigma: f64,
    pub slots: Vec<SlotDiagnostic>,
    /// growth negligible on every growth slot ("for every r" consistent)
    pub every_r: bool,
    /// decay accelerating on every decay slot ("for every h" consistent):
    /// the outer-window rate exceeds the inner one by the margin, the
    /// finite-evidence signature of faster-than-exponential decay
    pub every_h: bool,
    /// the four quantifier patterns consistent with the evidence, keyed
    /// some_h_some_r / some_h_every_r / every_h_some_r / every_h_every_r
    pub patterns: Vec<(String, bool)>,
    pub max_abs: f64,
    pub note: String,
}

/// Quantifier margin for the finite ladders.
const QUANTIFIER_MARGIN: f64 = 0.05;

/// Growth below this many e-folds across the interior window counts as
/// negligible for the "every rate" quantifier.
const GROWTH_EFOLD_TOLERANCE: f64 = 0.5;

fn line_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// One-dimensional max-profile of `ln |field|` along `axis`: for each
/// absolute-coordinate bin the maximum over all other axes, restricted to
/// the interior mask and the noise floor.
fn slot_profile(field: &STFTField, axis: usize, floor: f64) -> Vec<(f64, f64)> {
    let grid = field.combined_grid();
    let d = grid.dims();
    let shape = grid.shape();
    let ax = grid.axis(axis);
    let mut best: Vec<f64> = vec![f64::NEG_INFINITY; ax.n];
    let mut idx = vec![0usize; d];
    for v in field.values() {
        let norm = v.norm();
        if norm >= floor {
            let inside = (0..d).all(|a| {
                grid.axis(a).node(idx[a]).abs() <= INTERIOR_FRAC * grid.axis(a).half_width
            });
            if inside {
                let k = idx[axis];
                if norm.ln() > best[k] {
                    best[k] = norm.ln();
                }
            }
        }
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    // fold +-c, drop the origin node and empty bins
    let mut folded: std::collections::BTreeMap<u64, (f64, f64)> = Default::default();
    for (k, &p) in best.iter().enumerate() {
        if !p.is_finite() {
            continue;
        }
        let c = ax.node(k).abs();
        if c == 0.0 {
            continue;
        }
        let key = c.to_bits();
        let e = folded.entry(key).or_insert((c, f64::NEG_INFINITY));
        e.1 = e.1.max(p);
    }
    folded.values().cloned().collect()
}

/// Classify a symbol by per-slot envelope fits of its phase-space
/// transform: growth rates in the `(x, xi)` slots, decay rates in
/// `(eta, y)`, quantifiers tested on finite sub-windows. The verdict is a
/// finite-evidence consistency statement, never a membership proof.
pub fn classify_symbol(
    a: &SampledFunction,
    window: &SampledFunction,
    s: f64,
    sigma: f64,
    limit: MemLimit,
) -> Result<ClassifyVerdict> {
    let field = stft4_with_limit(a, window, limit)?;
    let model = EnvelopeModel::symbol_4d(s, sigma);
    let max_abs = field.max_abs();
    if !(max_abs > 0.0) {
        return Err(Error::TooFewPoints { needed: 10, found: 0 });
    }
    let floor = 1e-14 * max_abs;
    let ln_range = (max_abs / floor).ln();

    let mut slots = Vec::new();
    let mut every_r = true;
    let mut every_h = true;
    let grid = field.combined_grid();

    for spec in &model.slots {
        let profile = slot_profile(&field, spec.axis, floor);
        if profile.len() < 6 {
            return Err(Error::TooFewPoints { needed: 6, found: profile.len() });
        }
        // regress ln profile against |c|^{1/exponent}, oriented per role
        let orient = |sl: f64| match spec.role {
            SlotRole::Growth => sl,
            SlotRole::Decay => -sl,
        };
        let pts: Vec<(f64, f64)> = profile
            .iter()
            .map(|&(c, p)| (c.powf(1.0 / spec.exponent), p))
            .collect();
        let rate = orient(line_slope(&pts).ok_or(Error::RankDeficient)?);
        let c_mid = pts[pts.len() / 2].0;
        let inner: Vec<_> = pts.iter().filter(|p| p.0 <= c_mid).cloned().collect();
        let outer: Vec<_> = pts.iter().filter(|p| p.0 >= c_mid).cloned().collect();
        let inner_rate = line_slope(&inner).map(orient).unwrap_or(rate);
        let outer_rate = line_slope(&outer).map(orient).unwrap_or(rate);

        let ax = grid.axis(spec.axis);
        let reach = (INTERIOR_FRAC * ax.half_width).powf(1.0 / spec.exponent);
        let ceiling = ln_range / reach;

        let mut ladder = Vec::new();
        match spec.role {
            SlotRole::Decay => {
                // rung h holds when the envelope C e^{-h reg} dominates with
                // the gap attained in the head of the window
                for &fr in &[0.25f64, 0.5, 1.0] {
                    let h = fr * outer_rate.max(0.0);
                    let mut head_gap = f64::NEG_INFINITY;
                    let mut tail_gap = f64::NEG_INFINITY;
                    for &(reg, p) in &pts {
                        let gap = p + h * reg;
                        if reg <= c_mid {
                            head_gap = head_gap.max(gap);
                        } else {
                            tail_gap = tail_gap.max(gap);
                        }
                    }
                    ladder.push((h, tail_gap <= head_gap + QUANTIFIER_MARGIN * ln_range * 0.1));
                }
                if !(outer_rate >= (1.0 + QUANTIFIER_MARGIN) * inner_rate.max(0.0)
                    && outer_rate > 0.0)
                {
                    every_h = false;
                }
            }
            SlotRole::Growth => {
                // growth is present when it accumulates more than half an
                // e-fold across the interior window and persists outward
                if rate * reach > GROWTH_EFOLD_TOLERANCE && outer_rate > 0.0 {
                    every_r = false;
                }
            }
        }
        slots.push(SlotDiagnostic {
            axis: spec.axis,
            exponent: spec.exponent,
            role: spec.role,
            rate,
            inner_rate,
            outer_rate,
            ceiling,
            ladder,
        });
    }

    let some_finite = slots.iter().all(|r| r.rate.is_finite());
    let patterns = vec![
        ("some_h_some_r".to_string(), some_finite),
        ("some_h_every_r".to_string(), some_finite && every_r),
        ("every_h_some_r".to_string(), some_finite && every_h),
        ("every_h_every_r".to_string(), some_finite && every_h && every_r),
    ];

    Ok(ClassifyVerdict {
        s,
        sigma,
        slots,
        every_r,
        every_h,
        patterns,
        max_abs,
        note: "finite-evidence consistency, not a membership proof".to_string(),
    })
}

/// Discrete mixed norm `|| field / omega_R ||_{L^{infty, q}}`: supremum over
/// the position block `(x, xi)` inside, `l^q` quadrature over the frequency
/// block `(eta, y)` outside, with
/// `omega_R(x, xi, eta, y) = omega(x, xi) e^{-R(|y|^{1/s} + |eta|^{1/sigma})}`.
pub fn mixed_norm(
    field: &STFTField,
    omega: &Weight,
    r_cap: f64,
    s: f64,
    sigma: f64,
    q: f64,
) -> Result<f64> {
    omega.validate()?;
    if !(q >= 1.0) {
        return Err(Error::InvalidParam(format!("q must be in [1, inf], got {q}")));
    }
    if !(s > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParam("mixed norm exponents must be positive".into()));
    }
    let pos = field.pos_grid().clone();
    let freq = field.freq_grid().clone();
    if pos.dims() != 2 || freq.dims() != 2 {
        return Err(Error::BadDimension(
            "mixed norm expects a four-dimensional field".into(),
        ));
    }
    let np = pos.len();
    let nf = freq.len();
    // sup over (x, xi) for each (eta, y)
    let mut sup = vec![0.0f64; nf];
    for pflat in 0..np {
        let pc = pos.coords(pflat);
        let w_pos = omega.eval(&pc[..1], &pc[1..]);
        for fflat in 0..nf {
            let v = field.values()[pflat * nf + fflat].norm();
            let fc = freq.coords(fflat);
            let (eta, y) = (fc[0], fc[1]);
            let w = w_pos * (-r_cap * (y.abs().powf(1.0 / s) + eta.abs().powf(1.0 / sigma))).exp();
            let quot = v / w;
            if quot > sup[fflat] {
                sup[fflat] = quot;
            }
        }
    }
    if q.is_infinite() {
        return Ok(sup.iter().cloned().fold(0.0, f64::max));
    }
    let vol = freq.cell_volume();
    let mut acc = 0.0f64;
    for v in &sup {
        acc += v.powf(q);
    }
    Ok((acc * vol).powf(1.0 / q))
}

/// Synthetic exact-envelope field for identifiability tests and the CLI
/// generator: `exp(offset + sum_slots sign * rate * |coord|^{1/exponent})`.
pub fn synthetic_field(
    pos_grid: &Grid,
    model: &EnvelopeModel,
    rates: &[f64],
    offset: f64,
) -> Result<STFTField> {
    if rates.len() != model.slots.len() {
        return Err(Error::InvalidParam("one rate per slot required".into()));
    }
    let mut axes = pos_grid.axes().to_vec();
    axes.extend(pos_grid.axes().iter().map(|a| a.dual()));
    let grid = Grid::from_axes(axes)?;
    let d = grid.dims();
    let shape = grid.shape();
    let mut values = Vec::with_capacity(grid.len());
    let mut idx = vec![0usize; d];
    for _ in 0..grid.len() {
        let mut ln_v = offset;
        for (s, &rate) in model.slots.iter().zip(rates) {
            let c = grid.axis(s.axis).node(idx[s.axis]).abs();
            let reg = c.powf(1.0 / s.exponent);
            ln_v += match s.role {
                SlotRole::Growth => rate * reg,
                SlotRole::Decay => -rate * reg,
            };
        }
        values.push(Complex64::new(ln_v.exp(), 0.0));
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    STFTField::from_parts(pos_grid.clone(), pos_grid.dual(), values, "synthetic")
}

/// Moderateness sample for `omega_r`, in the form the power-triangle
/// inequality actually yields:
///
/// ```text
/// omega_r(x+y, xi+eta)
///   <= omega_{r kappa}(x, xi)
///      * e^{r kappa(1/s)|y|^{1/s} + r kappa(1/sigma)|eta|^{1/sigma}} ,
/// ```
///
/// where the first factor carries rate `r kappa(1/s)` in the `x` slot and
/// `r kappa(1/sigma)` in the `xi` slot. For `s, sigma >= 1` both kappas are
/// one and this is the plain moderateness bound with the same weight on both
/// sides. Returns the violation count over seeded random tuples.
pub fn moderateness_sample(r: f64, s: f64, sigma: f64, seed: u64, count: usize) -> Result<usize> {
    let w = Weight::ExpRate { r, s, sigma };
    w.validate()?;
    let ks = kappa(1.0 / s)?;
    let ksig = kappa(1.0 / sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..count {
        let x: f64 = rng.gen_range(-5.0..5.0);
        let y: f64 = rng.gen_range(-5.0..5.0);
        let xi: f64 = rng.gen_range(-5.0..5.0);
        let eta: f64 = rng.gen_range(-5.0..5.0);
        let lhs = w.eval(&[x + y], &[xi + eta]);
        let rhs = (r * ks * x.abs().powf(1.0 / s)
            + r * ksig * xi.abs().powf(1.0 / sigma)
            + r * ks * y.abs().powf(1.0 / s)
            + r * ksig * eta.abs().powf(1.0 / sigma))
        .exp();
        if lhs > rhs * (1.0 + 1e-10) {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Gaussian phase-space symbol `e^{-(|x|^2 + |xi|^2)}` on a symbol grid.
pub fn gaussian_symbol(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    let d = base.dims();
    SampledFunction::from_fn(sg, "gauss2d", move |c| {
        let r2: f64 = c[..d].iter().map(|v| v * v).sum::<f64>()
            + c[d..].iter().map(|v| v * v).sum::<f64>();
        Complex64::new((-r2).exp(), 0.0)
    })
}

/// Growth symbol `e^{r(|x|^{1/s} + |xi|^{1/sigma})}` on a symbol grid.
pub fn growth_symbol(base: &Grid, r: f64, s: f64, sigma: f64) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    let d = base.dims();
    SampledFunction::from_fn(sg, format!("growth:r={r},s={s}"), move |c| {
        let nx: f64 = c[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        let nxi: f64 = c[d..].iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new((r * (nx.powf(1.0 / s) + nxi.powf(1.0 / sigma))).exp(), 0.0)
    })
}

/// Normalized two-axis Gaussian window for phase-space transforms.
pub fn phase_space_window(base: &Grid) -> Result<SampledFunction> {
    let sg = Grid::symbol_grid(base);
    let dtot = sg.dims() as f64;
    SampledFunction::from_fn(sg, "gaussian2d", move |c| {
        let r2: f64 = c.iter().map(|v| v * v).sum();
        Complex64::new(PI.powf(-dtot / 4.0) * (-r2 / 2.0).exp(), 0.0)
    })
}
