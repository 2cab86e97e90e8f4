use gsq_core::calculus::*;
use gsq_core::grid::*;
use gsq_core::quantize::*;
use gsq_core::windows::hermite;
use gsq_core::MemLimit;
use num_complex::Complex64;

fn shifted_symbol(b: &Grid) -> SampledFunction {
    let sg = Grid::symbol_grid(b);
    SampledFunction::from_fn(sg, "gs", |c| {
        Complex64::new((-((c[0] - 0.4).powi(2) + 0.8 * (c[1] + 0.3).powi(2))).exp(), 0.0)
    }).unwrap()
}

#[test]
fn dbg_transfer_shifted() {
    let b = Grid::new_uniform(1, 128, 12.0).unwrap();
    let a = shifted_symbol(&b);
    let t = |v: f64| QuantMatrix::scalar(1, v).unwrap();
    for k in [0usize, 2, 5] {
        let f = hermite(k, &b).unwrap();
        for (ta, tb) in [(0.0, 0.5), (0.0, 1.0), (0.5, 1.0)] {
            let rel = transfer_law_check(&a, &t(ta), &t(tb), &f).unwrap();
            println!("k={k} pair({ta},{tb}) rel={:e}", rel);
        }
    }
}

#[test]
fn dbg_covariance_sweep() {
    for (n, l) in [(32usize, 7.0f64), (32, 8.0), (48, 8.0)] {
        let b = Grid::new_uniform(1, n, l).unwrap();
        let a = gsq_core::envelope::gaussian_symbol(&b).unwrap();
        let w = gsq_core::envelope::phase_space_window(&b).unwrap();
        for tv in [0.5f64, 1.0] {
            let qm = QuantMatrix::scalar(1, tv).unwrap();
            let rep = stft_covariance_check(&a, &w, &qm, MemLimit::default()).unwrap();
            println!("n={n} L={l} t={tv} max_dev={:e} rel={:e} compared={}", rep.max_dev, rep.rel_dev, rep.compared);
        }
    }
}
