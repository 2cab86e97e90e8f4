//! Gelfand-Shilov window and test functions, and seminorm evaluation on
//! sampled data.
//!
//! The seminorm table normalizes `sup_x |x^alpha d^beta f|` by
//! `h^{|alpha|+|beta|} alpha!^s beta!^sigma`; the `(h, r)`-norm trades the
//! monomial weight for an explicit exponential envelope
//! `e^{r(|x_1|^{1/s_1} + |x_2|^{1/s_2})}` over a two-block axis split.
//!
//! All suprema are grid maxima restricted to the interior `|x| <= 0.9 L`
//! per axis; tails of admissible inputs sit below machine epsilon there by
//! construction, and the mask keeps periodization artifacts at the box edge
//! out of the tables. A finite multi-index cutoff is an explicit, reported
//! truncation of the defining supremum over all orders.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{fourier, multiply_ixi_alpha, Grid, SampledFunction, DERIVATIVE_CAP};

/// Interior fraction used for every grid supremum.
pub const INTERIOR_FRAC: f64 = 0.9;

/// Recurrence stability cap for Hermite functions.
pub const HERMITE_CAP: usize = 60;

/// Gevrey/decay indices and the associated constants.
///
/// `s` governs decay order `1/s`, `sigma` the derivative (Gevrey) growth;
/// the optional quadruple `(s1, s2, sigma1, sigma2)` carries anisotropic
/// two-block variants. `h` scales derivative growth, `r` exponential rates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GevreyParams {
    pub s: f64,
    pub sigma: f64,
    pub h: f64,
    pub r: f64,
    pub aniso: Option<(f64, f64, f64, f64)>,
}

impl GevreyParams {
    pub fn isotropic(s: f64, sigma: f64, h: f64, r: f64) -> Result<Self> {
        let p = GevreyParams {
            s,
            sigma,
            h,
            r,
            aniso: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_aniso(mut self, s1: f64, s2: f64, sigma1: f64, sigma2: f64) -> Self {
        self.aniso = Some((s1, s2, sigma1, sigma2));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.sigma > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidParam(format!(
                "need s, sigma, h > 0, got s={}, sigma={}, h={}",
                self.s, self.sigma, self.h
            )));
        }
        Ok(())
    }

    /// Nontriviality precondition for space membership claims.
    pub fn validate_for_membership(&self) -> Result<()> {
        self.validate()?;
        if self.s + self.sigma < 1.0 {
            return Err(Error::InvalidParam(format!(
                "s + sigma = {} < 1 gives a trivial space",
                self.s + self.sigma
            )));
        }
        Ok(())
    }

    /// `(s, sigma) = (1/2, 1/2)` is excluded from projective-type claims;
    /// callers flag rather than decide.
    pub fn is_projective_boundary(&self) -> bool {
        (self.s - 0.5).abs() < 1e-12 && (self.sigma - 0.5).abs() < 1e-12
    }

    /// Anisotropic quadruple, defaulting to the isotropic pair.
    pub fn quadruple(&self) -> (f64, f64, f64, f64) {
        self.aniso
            .unwrap_or((self.s, self.s, self.sigma, self.sigma))
    }
}

/// `ln(n!)` by direct summation; exact to double precision for the orders
/// used here and free of the overflow past 170!.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Normalized Gaussian `pi^{-d/4} e^{-|x|^2/2}`, the canonical window.
pub fn gaussian_window(grid: &Grid) -> Result<SampledFunction> {
    let d = grid.dims() as f64;
    let c = PI.powf(-d / 4.0);
    SampledFunction::from_fn(grid.clone(), "gaussian", |x| {
        let r2: f64 = x.iter().map(|&v| v * v).sum();
        Complex64::new(c * (-r2 / 2.0).exp(), 0.0)
    })
}

fn hermite_axis_values(k: usize, nodes: &[f64]) -> Vec<f64> {
    // L^2-normalized Hermite functions by the stable three-term recurrence
    //   h_{k+1} = sqrt(2/(k+1)) x h_k - sqrt(k/(k+1)) h_{k-1}
    let c0 = PI.powf(-0.25);
    let mut prev: Vec<f64> = Vec::new();
    let mut cur: Vec<f64> = nodes
        .iter()
        .map(|&x| c0 * (-x * x / 2.0).exp())
        .collect();
    for m in 0..k {
        let a = (2.0 / (m as f64 + 1.0)).sqrt();
        let b = (m as f64 / (m as f64 + 1.0)).sqrt();
        let next: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let p = if m == 0 { 0.0 } else { prev[i] };
                a * x * cur[i] - b * p
            })
            .collect();
        prev = std::mem::take(&mut cur);
        cur = next;
    }
    cur
}

/// `k`-th Hermite function along axis 0, ground state along the others.
pub fn hermite(k: usize, grid: &Grid) -> Result<SampledFunction> {
    if k > HERMITE_CAP {
        return Err(Error::InvalidParam(format!(
            "hermite order {k} above stability cap {HERMITE_CAP}"
        )));
    }
    let tables: Vec<Vec<f64>> = (0..grid.dims())
        .map(|a| hermite_axis_values(if a == 0 { k } else { 0 }, &grid.axis(a).nodes()))
        .collect();
    let shape = grid.shape();
    let mut values = Vec::with_capacity(grid.len());
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..grid.len() {
        let mut v = 1.0f64;
        for (a, t) in tables.iter().enumerate() {
            v *= t[idx[a]];
        }
        values.push(Complex64::new(v, 0.0));
        for i in (0..shape.len()).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    SampledFunction::new(grid.clone(), values, format!("hermite:{k}"))
}

/// Enumerate multi-indices of dimension `d` with total order `<= cutoff`,
/// graded lexicographically.
pub fn multi_indices(d: usize, cutoff: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=cutoff {
        let mut idx = vec![0usize; d];
        compose(total, 0, &mut idx, &mut out);
    }
    out
}

fn compose(rem: usize, pos: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == idx.len() {
        idx[pos] = rem;
        out.push(idx.clone());
        return;
    }
    for v in (0..=rem).rev() {
        idx[pos] = v;
        compose(rem - v, pos + 1, idx, out);
    }
}

fn interior_mask(grid: &Grid) -> Vec<bool> {
    let shape = grid.shape();
    let mut mask = Vec::with_capacity(grid.len());
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..grid.len() {
        let inside = idx.iter().enumerate().all(|(a, &k)| {
            grid.axis(a).node(k).abs() <= INTERIOR_FRAC * grid.axis(a).half_width
        });
        mask.push(inside);
        for i in (0..shape.len()).rev() {
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    mask
}

/// One `(alpha, beta)` cell of the seminorm table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeminormEntry {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub value: f64,
}

/// Truncated Gelfand-Shilov seminorm table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeminormReport {
    pub s: f64,
    pub sigma: f64,
    pub h: f64,
    pub cutoff: usize,
    pub entries: Vec<SeminormEntry>,
    pub overall: f64,
    pub argmax_alpha: Vec<usize>,
    pub argmax_beta: Vec<usize>,
    pub argmax_x: Vec<f64>,
}

impl SeminormReport {
    /// Compact JSON: entries collapsed to `[[|alpha|, |beta|, max value]]`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut by_order: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for e in &self.entries {
            let key = (e.alpha.iter().sum(), e.beta.iter().sum());
            let slot = by_order.entry(key).or_insert(0.0);
            *slot = slot.max(e.value);
        }
        json!({
            "params": { "s": self.s, "sigma": self.sigma, "h": self.h },
            "cutoff": self.cutoff,
            "entries": by_order
                .iter()
                .map(|(&(a, b), &v)| json!([a, b, v]))
                .collect::<Vec<_>>(),
            "overall": self.overall,
            "argmax": {
                "alpha": self.argmax_alpha,
                "beta": self.argmax_beta,
                "x": self.argmax_x,
            },
        })
    }
}

/// Truncated seminorm table: for all `|alpha|, |beta| <= cutoff`,
/// `sup_x |x^alpha d^beta f(x)| / (h^{|alpha|+|beta|} alpha!^s beta!^sigma)`
/// with spectral derivatives and the interior-masked supremum.
pub fn gs_seminorm(
    f: &SampledFunction,
    params: &GevreyParams,
    cutoff: usize,
) -> Result<SeminormReport> {
    params.validate()?;
    if cutoff > DERIVATIVE_CAP {
        return Err(Error::DerivativeCap {
            requested: cutoff,
            cap: DERIVATIVE_CAP,
        });
    }
    let grid = f.grid();
    let d = grid.dims();
    let mask = interior_mask(grid);
    let hat = fourier(f, -1)?;
    let alphas = multi_indices(d, cutoff);
    let betas = alphas.clone();
    let ln_h = params.h.ln();

    let mut entries = Vec::with_capacity(alphas.len() * betas.len());
    let mut overall = 0.0f64;
    let mut argmax = (vec![0usize; d], vec![0usize; d], vec![0.0f64; d]);

    for beta in &betas {
        // derivative once per beta, reused across the alpha column
        let mut spec = hat.clone();
        multiply_ixi_alpha(&mut spec, beta);
        let deriv = fourier(&spec, 1)?;
        let b_ord: usize = beta.iter().sum();
        let ln_beta: f64 = beta.iter().map(|&b| ln_factorial(b)).sum();

        for alpha in &alphas {
            let a_ord: usize = alpha.iter().sum();
            let ln_alpha: f64 = alpha.iter().map(|&a| ln_factorial(a)).sum();
            let ln_denom =
                ((a_ord + b_ord) as f64) * ln_h + params.s * ln_alpha + params.sigma * ln_beta;
            let denom = ln_denom.exp();

            let mut best = 0.0f64;
            let mut best_flat = 0usize;
            let shape = grid.shape();
            let mut idx = vec![0usize; d];
            for (flat, v) in deriv.values().iter().enumerate() {
                if mask[flat] {
                    let mut mono = 1.0f64;
                    for a in 0..d {
                        if alpha[a] > 0 {
                            mono *= grid.axis(a).node(idx[a]).powi(alpha[a] as i32);
                        }
                    }
                    let val = (v.norm() * mono.abs()) / denom;
                    if val > best {
                        best = val;
                        best_flat = flat;
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
            if best > overall {
                overall = best;
                argmax = (alpha.clone(), beta.clone(), grid.coords(best_flat));
            }
            entries.push(SeminormEntry {
                alpha: alpha.clone(),
                beta: beta.clone(),
                value: best,
            });
        }
    }

    Ok(SeminormReport {
        s: params.s,
        sigma: params.sigma,
        h: params.h,
        cutoff,
        entries,
        overall,
        argmax_alpha: argmax.0,
        argmax_beta: argmax.1,
        argmax_x: argmax.2,
    })
}

/// `(h, r)`-norm over a two-block axis split at `split`:
/// `sup |d^{a1} d^{a2} f| / (h^{|a1+a2|} a1!^{sigma1} a2!^{sigma2}
/// e^{r(|x1|^{1/s1} + |x2|^{1/s2})})` truncated at `cutoff` per block total.
pub fn hr_norm(
    f: &SampledFunction,
    params: &GevreyParams,
    cutoff: usize,
    split: usize,
) -> Result<f64> {
    params.validate()?;
    if cutoff > DERIVATIVE_CAP {
        return Err(Error::DerivativeCap {
            requested: cutoff,
            cap: DERIVATIVE_CAP,
        });
    }
    let grid = f.grid();
    let d = grid.dims();
    if split == 0 || split >= d {
        return Err(Error::InvalidParam(format!(
            "split {split} must cut a {d}-axis grid into two nonempty blocks"
        )));
    }
    let (s1, s2, sigma1, sigma2) = params.quadruple();
    if !(s1 > 0.0 && s2 > 0.0 && sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidParam("anisotropic exponents must be positive".into()));
    }

    // pointwise envelope e^{r(...)} and interior mask, computed once
    let mask = interior_mask(grid);
    let shape = grid.shape();
    let mut envelope = Vec::with_capacity(grid.len());
    {
        let mut idx = vec![0usize; d];
        for _ in 0..grid.len() {
            let mut e1 = 0.0f64;
            let mut e2 = 0.0f64;
            for a in 0..d {
                let x = grid.axis(a).node(idx[a]).abs();
                if a < split {
                    e1 += x.powf(1.0 / s1);
                } else {
                    e2 += x.powf(1.0 / s2);
                }
            }
            envelope.push((params.r * (e1 + e2)).exp());
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < shape[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    let hat = fourier(f, -1)?;
    let ln_h = params.h.ln();
    let mut worst = 0.0f64;
    for a1 in multi_indices(split, cutoff) {
        for a2 in multi_indices(d - split, cutoff) {
            let mut alpha = a1.clone();
            alpha.extend_from_slice(&a2);
            let total: usize = alpha.iter().sum();
            if total > DERIVATIVE_CAP {
                continue;
            }
            let mut spec = hat.clone();
            multiply_ixi_alpha(&mut spec, &alpha);
            let deriv = fourier(&spec, 1)?;
            let ln_fac: f64 = sigma1 * a1.iter().map(|&k| ln_factorial(k)).sum::<f64>()
                + sigma2 * a2.iter().map(|&k| ln_factorial(k)).sum::<f64>();
            let denom = (total as f64 * ln_h + ln_fac).exp();
            let mut sup = 0.0f64;
            for (flat, v) in deriv.values().iter().enumerate() {
                if mask[flat] {
                    sup = sup.max(v.norm() / (denom * envelope[flat]));
                }
            }
            worst = worst.max(sup);
        }
    }
    Ok(worst)
}

/// Report of the bounded-family check: a seminorm-bounded `f` stays
/// uniformly bounded after monomial weighting at `h_2 = 2^{1+s} h_1`, and
/// after monomial-plus-derivative weighting at `h_3 = 2^{2+2s} h_1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundedFamilyReport {
    pub base: f64,
    pub monomial_max: f64,
    pub monomial_ratio: f64,
    pub deriv_max: f64,
    pub deriv_ratio: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

/// For each `|gamma| <= cutoff`, seminorm of
/// `x^gamma f / ((2^{1+s} h_1)^{|gamma|} gamma!^s)` at `h_2`; and for each
/// `(gamma, delta)`, of `d^delta x^gamma f / ((2^{2+2s} h_1)^{|gamma+delta|}
/// gamma!^s delta!^sigma)` at `h_3`. Uniform boundedness of both families is
/// the executable claim.
pub fn bounded_family_check(
    f: &SampledFunction,
    params: &GevreyParams,
    cutoff: usize,
) -> Result<BoundedFamilyReport> {
    params.validate_for_membership()?;
    let h1 = params.h;
    let s = params.s;
    let h2 = 2f64.powf(1.0 + s) * h1;
    let h3 = 2f64.powf(2.0 + 2.0 * s) * h1;
    let grid = f.grid();
    let d = grid.dims();

    let base = gs_seminorm(f, params, cutoff)?.overall;
    let p2 = GevreyParams { h: h2, ..*params };
    let p3 = GevreyParams { h: h3, ..*params };

    let monomial = |idx: &[usize]| -> Result<SampledFunction> {
        let g = grid.clone();
        let idx = idx.to_vec();
        f.map(|v| v).and_then(|_| {
            // build x^gamma f with the correct per-node monomial
            let shape = g.shape();
            let mut out = Vec::with_capacity(g.len());
            let mut ml = vec![0usize; d];
            for (flat, &v) in f.values().iter().enumerate() {
                let _ = flat;
                let mut mono = 1.0f64;
                for a in 0..d {
                    if idx[a] > 0 {
                        mono *= g.axis(a).node(ml[a]).powi(idx[a] as i32);
                    }
                }
                out.push(v * mono);
                for i in (0..d).rev() {
                    ml[i] += 1;
                    if ml[i] < shape[i] {
                        break;
                    }
                    ml[i] = 0;
                }
            }
            SampledFunction::new(g.clone(), out, "weighted")
        })
    };

    let mut monomial_max = 0.0f64;
    for gamma in multi_indices(d, cutoff) {
        let g_ord: usize = gamma.iter().sum();
        let ln_scale =
            g_ord as f64 * (2f64.powf(1.0 + s) * h1).ln() + s * gamma.iter().map(|&k| ln_factorial(k)).sum::<f64>();
        let weighted = monomial(&gamma)?.scale(Complex64::new((-ln_scale).exp(), 0.0));
        let v = gs_seminorm(&weighted, &p2, cutoff)?.overall;
        monomial_max = monomial_max.max(v);
    }

    let mut deriv_max = 0.0f64;
    for gamma in multi_indices(d, cutoff) {
        let xg = monomial(&gamma)?;
        for delta in multi_indices(d, cutoff) {
            let total: usize = gamma.iter().sum::<usize>() + delta.iter().sum::<usize>();
            if delta.iter().sum::<usize>() > DERIVATIVE_CAP {
                continue;
            }
            let dxg = crate::grid::spectral_derivative(&xg, &delta)?;
            let ln_scale = total as f64 * (2f64.powf(2.0 + 2.0 * s) * h1).ln()
                + s * gamma.iter().map(|&k| ln_factorial(k)).sum::<f64>()
                + params.sigma * delta.iter().map(|&k| ln_factorial(k)).sum::<f64>();
            let weighted = dxg.scale(Complex64::new((-ln_scale).exp(), 0.0));
            let v = gs_seminorm(&weighted, &p3, cutoff)?.overall;
            deriv_max = deriv_max.max(v);
        }
    }

    Ok(BoundedFamilyReport {
        base,
        monomial_max,
        monomial_ratio: monomial_max / base.max(f64::MIN_POSITIVE),
        deriv_max,
        deriv_ratio: deriv_max / base.max(f64::MIN_POSITIVE),
        h1,
        h2,
        h3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_inner, l2_norm};

    fn grid256() -> Grid {
        Grid::new_uniform(1, 256, 12.0).unwrap()
    }

    #[test]
    fn gaussian_window_normalized_and_self_dual() {
        let g = grid256();
        let w = gaussian_window(&g).unwrap();
        assert!((l2_norm(&w) - 1.0).abs() <= 1e-12);
        // value at the origin node
        let k0 = 128; // x = 0
        assert!((w.values()[k0].re - PI.powf(-0.25)).abs() <= 1e-15);
        let what = fourier(&w, -1).unwrap();
        let dual = what.grid().axis(0);
        let mut err = 0.0f64;
        for j in 0..dual.n {
            let xi = dual.node(j);
            err = err.max(
                (what.values()[j] - Complex64::new(PI.powf(-0.25) * (-xi * xi / 2.0).exp(), 0.0))
                    .norm(),
            );
        }
        assert!(err <= 1e-12);
    }

    #[test]
    fn hermite_orthonormal_and_eigen() {
        let g = grid256();
        let h0 = hermite(0, &g).unwrap();
        let w = gaussian_window(&g).unwrap();
        assert!(crate::grid::rel_l2_error(&h0, &w).unwrap() <= 1e-14);

        let h2 = hermite(2, &g).unwrap();
        let h3 = hermite(3, &g).unwrap();
        assert!(l2_inner(&h2, &h3).unwrap().norm() <= 1e-12);
        assert!((l2_inner(&h3, &h3).unwrap().re - 1.0).abs() <= 1e-10);

        // transform eigenvalue (-i)^k, compared on the dual nodes
        let dual = Grid::from_axes(vec![g.axis(0).dual()]).unwrap();
        for k in [1usize, 4, 7] {
            let hk = hermite(k, &g).unwrap();
            let hat = fourier(&hk, -1).unwrap();
            let hk_dual = hermite(k, &dual).unwrap();
            let eig = Complex64::new(0.0, -1.0).powu(k as u32);
            let err = hat
                .values()
                .iter()
                .zip(hk_dual.values())
                .map(|(a, &b)| (a - b * eig).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-10, "k={k} err={err}");
        }

        assert!(hermite(HERMITE_CAP + 1, &g).is_err());
    }

    #[test]
    fn seminorm_gaussian_table() {
        let g = grid256();
        let f = gaussian_window(&g).unwrap();
        let params = GevreyParams::isotropic(0.5, 0.5, 2.0, 0.0).unwrap();
        let rep = gs_seminorm(&f, &params, 6).unwrap();
        assert!(rep.overall.is_finite() && rep.overall > 0.0);
        assert_eq!(rep.entries.len(), 49);
        // beyond small orders the normalized entries trend downward
        let entry = |a: usize, b: usize| {
            rep.entries
                .iter()
                .find(|e| e.alpha[0] == a && e.beta[0] == b)
                .unwrap()
                .value
        };
        assert!(entry(6, 6) < entry(2, 2));
        assert!(entry(6, 0) < entry(1, 0));
        assert!(entry(0, 6) < entry(0, 1));
    }

    #[test]
    fn seminorm_zero_and_scaling() {
        let g = grid256();
        let z = SampledFunction::zeros(g.clone(), "0");
        let params = GevreyParams::isotropic(0.5, 0.5, 2.0, 0.0).unwrap();
        let rep = gs_seminorm(&z, &params, 3).unwrap();
        assert_eq!(rep.overall, 0.0);
        assert!(rep.entries.iter().all(|e| e.value == 0.0));

        // doubling h scales entry (alpha, beta) by 2^{-|alpha|-|beta|}
        let f = gaussian_window(&g).unwrap();
        let r1 = gs_seminorm(&f, &params, 3).unwrap();
        let p2 = GevreyParams { h: 4.0, ..params };
        let r2 = gs_seminorm(&f, &p2, 3).unwrap();
        for (e1, e2) in r1.entries.iter().zip(&r2.entries) {
            let ord = (e1.alpha[0] + e1.beta[0]) as i32;
            let expect = e1.value * 2f64.powi(-ord);
            assert!(
                (e2.value - expect).abs() <= 1e-12 * expect.max(1e-300),
                "h-scaling broken at ({:?},{:?})",
                e1.alpha,
                e1.beta
            );
        }

        // scalar scaling is entrywise
        let fc = f.scale(Complex64::new(-2.5, 0.0));
        let r3 = gs_seminorm(&fc, &params, 3).unwrap();
        for (e1, e3) in r1.entries.iter().zip(&r3.entries) {
            // FFT rounding is not scale-invariant bit for bit
            assert!((e3.value - 2.5 * e1.value).abs() <= 1e-10 * (e3.value + 1e-300));
        }
    }

    #[test]
    fn seminorm_matches_analytic_gaussian_derivatives() {
        // oracle: x^a d^b e^{-x^2/2} with the derivative polynomial built by
        // the recurrence p_{b+1} = p_b' - x p_b, evaluated on a 4x finer grid
        let g = grid256();
        let f = SampledFunction::from_fn(g.clone(), "g", |x| {
            Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0)
        })
        .unwrap();
        let params = GevreyParams::isotropic(0.5, 0.5, 2.0, 0.0).unwrap();
        let rep = gs_seminorm(&f, &params, 4).unwrap();

        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for b in 0..4usize {
            let p = &polys[b];
            let mut q = vec![0.0; p.len() + 1];
            for (i, &c) in p.iter().enumerate() {
                if i > 0 {
                    q[i - 1] += c * i as f64; // p'
                }
                q[i + 1] -= c; // -x p
            }
            polys.push(q);
        }
        let eval = |p: &[f64], x: f64| p.iter().rev().fold(0.0, |acc, &c| acc * x + c);

        for e in &rep.entries {
            let (a, b) = (e.alpha[0], e.beta[0]);
            let mut sup = 0.0f64;
            let fine = 4 * 256;
            for k in 0..fine {
                let x = -12.0 + 24.0 * k as f64 / fine as f64;
                if x.abs() <= 0.9 * 12.0 {
                    let v = x.powi(a as i32).abs()
                        * (eval(&polys[b], x) * (-x * x / 2.0).exp()).abs();
                    sup = sup.max(v);
                }
            }
            let denom = (((a + b) as f64) * 2f64.ln() + 0.5 * ln_factorial(a)
                + 0.5 * ln_factorial(b))
            .exp();
            let expect = sup / denom;
            // the grid supremum samples coarser than the oracle scan, so it
            // may undershoot slightly but must never overshoot
            assert!(
                e.value <= expect * (1.0 + 1e-6) && e.value >= expect * (1.0 - 1e-2),
                "entry ({a},{b}): grid {} vs oracle {expect}",
                e.value
            );
        }
    }

    #[test]
    fn hr_norm_basics() {
        // f = e^{-(x^2+y^2)} on a 2-axis grid
        let g = Grid::new_uniform(2, 64, 8.0).unwrap();
        let f = SampledFunction::from_fn(g.clone(), "g2", |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        })
        .unwrap();
        let p = GevreyParams::isotropic(1.0, 1.0, 1.0, 1.0).unwrap();
        let v = hr_norm(&f, &p, 4, 1).unwrap();
        assert!(v.is_finite() && v > 0.0);

        // non-increasing in h and in r
        let v_h = hr_norm(&f, &GevreyParams { h: 2.0, ..p }, 4, 1).unwrap();
        let v_r = hr_norm(&f, &GevreyParams { r: 2.0, ..p }, 4, 1).unwrap();
        assert!(v_h <= v + 1e-15);
        assert!(v_r <= v + 1e-15);

        let z = SampledFunction::zeros(g, "0");
        assert_eq!(hr_norm(&z, &p, 2, 1).unwrap(), 0.0);
    }

    #[test]
    fn hr_norm_matches_bruteforce_on_underived_term() {
        // the (0,0) term is sup |f| / envelope; check against direct scan
        let g = Grid::new_uniform(2, 32, 6.0).unwrap();
        let f = SampledFunction::from_fn(g.clone(), "g2", |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        })
        .unwrap();
        let p = GevreyParams::isotropic(1.0, 1.0, 1e6, 1.0).unwrap();
        // with enormous h every derivative term is crushed; (0,0) dominates
        let v = hr_norm(&f, &p, 2, 1).unwrap();
        let mut sup = 0.0f64;
        for (flat, val) in f.values().iter().enumerate() {
            let c = g.coords(flat);
            if c.iter().all(|&x| x.abs() <= 0.9 * 6.0) {
                sup = sup.max(val.norm() / (1.0 * (c[0].abs() + c[1].abs())).exp());
            }
        }
        assert!((v - sup).abs() <= 1e-12 * sup);
    }

    #[test]
    fn membership_precondition() {
        assert!(GevreyParams::isotropic(0.3, 0.3, 1.0, 0.0)
            .unwrap()
            .validate_for_membership()
            .is_err());
        let p = GevreyParams::isotropic(0.5, 0.5, 1.0, 0.0).unwrap();
        assert!(p.validate_for_membership().is_ok());
        assert!(p.is_projective_boundary());
    }
}

