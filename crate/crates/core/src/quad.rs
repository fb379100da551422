//! Adaptive 7/15-point Gauss–Kronrod quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel on `[a, b]`: the estimate, the Gauss/Kronrod
/// difference, and the integral of `|f|`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kronrod += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs())
}

/// Nodes and weights of the 15-point Kronrod rule on `[a, b]`, for fixed
/// composite integration of functions that are expensive or noisy.
pub fn kronrod_nodes(a: f64, b: f64) -> Vec<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = Vec::with_capacity(15);
    for i in 0..7 {
        out.push((c - h * XGK[i], h * WGK[i]));
        out.push((c + h * XGK[i], h * WGK[i]));
    }
    out.push((c, h * WGK[7]));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    /// Integral of `|f|`, a natural scale for relative residuals.
    pub abs_integral: f64,
    pub panels: usize,
}

/// Global adaptive bisection until the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)` or `max_panels` is reached.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            abs_integral: 0.0,
            panels: 0,
        };
    }
    let mut panels: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
    let (v, e, m) = gk15(&f, a, b);
    panels.push((a, b, v, e, m));
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= max_panels {
            return QuadResult {
                value,
                error,
                abs_integral: panels.iter().map(|p| p.4).sum(),
                panels: panels.len(),
            };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, ..) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1, m1) = gk15(&f, pa, mid);
        let (v2, e2, m2) = gk15(&f, mid, pb);
        panels.push((pa, mid, v1, e1, m1));
        panels.push((mid, pb, v2, e2, m2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let (v, _, _) = gk15(&|x: f64| x.powi(10), 0.0, 1.0);
        assert!((v - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|x: f64| (-x / 98.0).exp() / 98.0, 0.0, 60.0 * 98.0, 1e-15, 1e-13, 500);
        assert!((r.value - (1.0 - (-60f64).exp())).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn kronrod_nodes_integrate_cubic() {
        let v: f64 = kronrod_nodes(1.0, 3.0).iter().map(|(x, w)| w * x.powi(3)).sum();
        assert!((v - 20.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(|x: f64| (20.0 * x).sin(), 0.0, std::f64::consts::PI / 4.0, 1e-14, 1e-12, 500);
        let exact = (1.0 - (5.0 * std::f64::consts::PI).cos()) / 20.0;
        assert!((r.value - exact).abs() < 1e-12);
    }
}
