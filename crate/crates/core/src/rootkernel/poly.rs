//! Real-coefficient polynomials with compensated evaluation at complex points.

use num_complex::Complex64;

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_err: f64,
    im: f64,
    im_err: f64,
}

#[inline]
fn two_sum(acc: &mut f64, err: &mut f64, x: f64) {
    let s = *acc + x;
    if acc.abs() >= x.abs() {
        *err += (*acc - s) + x;
    } else {
        *err += (x - s) + *acc;
    }
    *acc = s;
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        two_sum(&mut self.re, &mut self.re_err, z.re);
        two_sum(&mut self.im, &mut self.im_err, z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_err, self.im + self.im_err)
    }
}

/// `z^n` by binary exponentiation. Returns exact zero once the modulus
/// underflows, which is the only failure mode for `|z| < 1`.
pub fn cpow(z: Complex64, n: u64) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let norm = z.norm();
    if norm == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if (n as f64) * norm.ln() < -700.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut base = z;
    let mut exp = n;
    let mut acc = Complex64::new(1.0, 0.0);
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        exp >>= 1;
        if exp > 0 {
            base *= base;
        }
    }
    acc
}

/// Sparse polynomial `sum_k a_k x^k` stored as `(power, coefficient)` pairs
/// sorted by power with nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoly {
    terms: Vec<(u64, f64)>,
    degree: u64,
}

impl SparsePoly {
    pub fn new(mut terms: Vec<(u64, f64)>) -> Self {
        terms.retain(|(_, a)| *a != 0.0);
        terms.sort_by_key(|(k, _)| *k);
        let degree = terms.last().map(|(k, _)| *k).unwrap_or(0);
        Self { terms, degree }
    }

    /// From ascending dense coefficients.
    pub fn from_dense(coeffs: &[f64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| (k as u64, *a))
                .collect(),
        )
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max)
    }

    pub fn lowest_power(&self) -> u64 {
        self.terms.first().map(|(k, _)| *k).unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut sum = CompensatedSum::default();
        for &(k, a) in &self.terms {
            sum.add(cpow(z, k) * a);
        }
        sum.value()
    }

    /// Value and first derivative.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = CompensatedSum::default();
        let mut dp = CompensatedSum::default();
        for &(k, a) in &self.terms {
            if k == 0 {
                p.add(Complex64::new(a, 0.0));
                continue;
            }
            let zk1 = cpow(z, k - 1);
            p.add(zk1 * z * a);
            dp.add(zk1 * (a * k as f64));
        }
        (p.value(), dp.value())
    }

    /// Newton correction `p(z)/p'(z)`, evaluated through the reversed
    /// polynomial when `|z| > 1` so large powers never overflow.
    pub fn newton_ratio(&self, z: Complex64) -> Complex64 {
        if z.norm() <= 1.0 {
            let (p, dp) = self.eval_with_derivative(z);
            return p / dp;
        }
        // p(z) = z^d q(y), y = 1/z, q(y) = sum a_k y^{d-k}
        // p/p' = z q / (d q - y q')
        let y = z.inv();
        let d = self.degree;
        let mut q = CompensatedSum::default();
        let mut yq = CompensatedSum::default();
        for &(k, a) in &self.terms {
            let m = d - k;
            let ym = cpow(y, m);
            q.add(ym * a);
            yq.add(ym * (a * m as f64));
        }
        let q = q.value();
        let yq = yq.value();
        z * q / (q * d as f64 - yq)
    }
}

/// Dense polynomial arithmetic on ascending coefficient vectors.
pub mod dense {
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn add_scaled(acc: &mut Vec<f64>, p: &[f64], s: f64) {
        if acc.len() < p.len() {
            acc.resize(p.len(), 0.0);
        }
        for (a, x) in acc.iter_mut().zip(p) {
            *a += s * x;
        }
    }

    /// Product of linear factors `c_i + s_i x`.
    pub fn product_of_linear(factors: impl IntoIterator<Item = (f64, f64)>) -> Vec<f64> {
        factors
            .into_iter()
            .fold(vec![1.0], |acc, (c, s)| mul(&acc, &[c, s]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cpow_matches_polar_form() {
        let z = Complex64::from_polar(0.9995, 0.3);
        let direct = Complex64::from_polar(0.9995f64.powi(5001), 0.3 * 5001.0);
        let p = cpow(z, 5001);
        assert_relative_eq!(p.re, direct.re, max_relative = 1e-11);
        assert_relative_eq!(p.im, direct.im, max_relative = 1e-11);
        assert_eq!(cpow(Complex64::new(0.5, 0.0), 1 << 20), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn newton_ratio_agrees_inside_and_outside() {
        let p = SparsePoly::new(vec![(0, 1.0), (3, -2.0), (7, 0.5)]);
        for z in [Complex64::new(0.4, 0.2), Complex64::new(1.3, -0.7)] {
            let (v, dv) = p.eval_with_derivative(z);
            let r = p.newton_ratio(z);
            let e = v / dv;
            assert_relative_eq!(r.re, e.re, max_relative = 1e-12);
            assert_relative_eq!(r.im, e.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn dense_products() {
        // (1 + x)(2 - x) = 2 + x - x^2
        let p = dense::product_of_linear([(1.0, 1.0), (2.0, -1.0)]);
        assert_eq!(p, vec![2.0, 1.0, -1.0]);
    }
}
