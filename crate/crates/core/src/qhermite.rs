//! Continuous q-Hermite polynomials, their weight and expansions, the Poisson
//! and bilinear kernels, and the q-exponential function.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::qcore::{pair_product, pair_product_real, qbinomial, qpoch_base, qpoch_real, Order, QContext};
use crate::quadrature::QuadratureRule;

/// `zeta = (q^{1/4} + q^{-1/4}) / 2`, the point where `1/g` is expanded.
pub fn zeta(ctx: &QContext) -> f64 {
    0.5 * (ctx.q.powf(0.25) + ctx.q.powf(-0.25))
}

pub fn hermite_eval(n: usize, x: f64, ctx: &QContext) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    let mut qk = ctx.q;
    for _ in 1..n {
        let h2 = 2.0 * x * h1 - (1.0 - qk) * h0;
        h0 = h1;
        h1 = h2;
        qk *= ctx.q;
    }
    h1
}

/// `H_0(x), ..., H_n(x)`.
pub fn hermite_all(n: usize, x: f64, ctx: &QContext) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(2.0 * x);
    let mut qk = ctx.q;
    for k in 1..n {
        let v = 2.0 * x * out[k] - (1.0 - qk) * out[k - 1];
        out.push(v);
        qk *= ctx.q;
    }
    out
}

pub fn hermite_eval_c(n: usize, x: Complex64, ctx: &QContext) -> Complex64 {
    let (mut h0, mut h1) = (Complex64::new(1.0, 0.0), 2.0 * x);
    if n == 0 {
        return h0;
    }
    let mut qk = ctx.q;
    for _ in 1..n {
        let h2 = 2.0 * x * h1 - (1.0 - qk) * h0;
        h0 = h1;
        h1 = h2;
        qk *= ctx.q;
    }
    h1
}

/// `w_H(cos phi) sin phi = (q;q)_inf |(e^{2i phi};q)_inf|^2 / (2 pi)`, written
/// in `x = cos phi` so that it extends to complex arguments.
pub fn weight_sin_c(x: Complex64, ctx: &QContext) -> Complex64 {
    let c2 = 2.0 * x * x - 1.0;
    ctx.qq_inf() * pair_product(c2, Complex64::new(1.0, 0.0), ctx.q, ctx.eps_product) / (2.0 * PI)
}

/// Real form of [`weight_sin_c`] taking the angle.
pub fn weight_sin(phi: f64, ctx: &QContext) -> f64 {
    ctx.qq_inf() * pair_product_real((2.0 * phi).cos(), 1.0, ctx.q, ctx.eps_product) / (2.0 * PI)
}

/// The normalized q-Hermite weight on `(-1, 1)`.
pub fn weight_eval(x: f64, ctx: &QContext) -> Result<f64> {
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::OutOfDomain(format!("weight needs |x| < 1, got {x}")));
    }
    let phi = x.acos();
    Ok(weight_sin(phi, ctx) / phi.sin())
}

/// `g(x) = (-q^{1/4} e^{i theta}, -q^{1/4} e^{-i theta}; q^{1/2})_inf`.
pub fn g_eval(x: f64, ctx: &QContext) -> f64 {
    pair_product_real(x, -ctx.q.powf(0.25), ctx.q.sqrt(), ctx.eps_product)
}

pub fn g_eval_c(x: Complex64, ctx: &QContext) -> Complex64 {
    pair_product(x, Complex64::new(-ctx.q.powf(0.25), 0.0), ctx.q.sqrt(), ctx.eps_product)
}

/// `g_beta(x) = (-q^{beta/2+1/4} e^{+-i theta}; q^{1/2})_inf`, so `g = g_0`.
pub fn g_shift_eval(x: f64, beta: f64, ctx: &QContext) -> f64 {
    pair_product_real(x, -ctx.q.powf(beta / 2.0 + 0.25), ctx.q.sqrt(), ctx.eps_product)
}

pub fn g_shift_eval_c(x: Complex64, beta: f64, ctx: &QContext) -> Complex64 {
    pair_product(
        x,
        Complex64::new(-ctx.q.powf(beta / 2.0 + 0.25), 0.0),
        ctx.q.sqrt(),
        ctx.eps_product,
    )
}

/// Finite q-Hermite expansion `sum c_n H_n(x|q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteSeries {
    pub coeffs: Vec<f64>,
    pub ctx: QContext,
}

impl HermiteSeries {
    pub fn new(coeffs: Vec<f64>, ctx: QContext) -> Self {
        Self { coeffs, ctx }
    }

    pub fn zero(ctx: QContext) -> Self {
        Self::new(vec![0.0], ctx)
    }

    /// The single polynomial `H_n`.
    pub fn unit(n: usize, ctx: QContext) -> Self {
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        Self::new(c, ctx)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let q = self.ctx.q;
        let mut acc = 0.0;
        let (mut h0, mut h1) = (1.0, 2.0 * x);
        let mut qk = q;
        for (n, &c) in self.coeffs.iter().enumerate() {
            match n {
                0 => acc += c,
                1 => acc += c * h1,
                _ => {
                    let h2 = 2.0 * x * h1 - (1.0 - qk) * h0;
                    h0 = h1;
                    h1 = h2;
                    qk *= q;
                    acc += c * h1;
                }
            }
        }
        acc
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        let q = self.ctx.q;
        let mut acc = Complex64::new(0.0, 0.0);
        let (mut h0, mut h1) = (Complex64::new(1.0, 0.0), 2.0 * x);
        let mut qk = q;
        for (n, &c) in self.coeffs.iter().enumerate() {
            match n {
                0 => acc += c,
                1 => acc += c * h1,
                _ => {
                    let h2 = 2.0 * x * h1 - (1.0 - qk) * h0;
                    h0 = h1;
                    h1 = h2;
                    qk *= q;
                    acc += c * h1;
                }
            }
        }
        acc
    }

    /// Squared weighted L2 norm by Parseval.
    pub fn norm_sq(&self) -> f64 {
        let mut qq = 1.0;
        let mut s = 0.0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            if n > 0 {
                qq *= 1.0 - self.ctx.q.powi(n as i32);
            }
            s += c * c * qq;
        }
        s
    }

    /// Weighted L2 norm of the coefficients with index `>= from`.
    pub fn tail_norm(&self, from: usize) -> f64 {
        let mut qq = 1.0;
        let mut s = 0.0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            if n > 0 {
                qq *= 1.0 - self.ctx.q.powi(n as i32);
            }
            if n >= from {
                s += c * c * qq;
            }
        }
        s.sqrt()
    }

    /// Weighted norm of the coefficients past the end, from a geometric fit to
    /// the last quarter. Infinite when the fit does not decay; `None` below
    /// eight coefficients.
    pub fn extrapolated_tail(&self) -> Option<f64> {
        let n = self.len();
        if n < 8 {
            return None;
        }
        let mag = |k: usize| self.coeffs[k].abs() * self.ctx.qq(k).sqrt();
        let (lo, hi) = (n - 1 - n / 4, n - 1);
        let (ml, mh) = (mag(lo), mag(hi));
        if ml == 0.0 {
            return Some(mh);
        }
        let rho = (mh / ml).powf(1.0 / (hi - lo) as f64);
        Some(if rho >= 1.0 {
            f64::INFINITY
        } else {
            mh * rho / (1.0 - rho * rho).sqrt()
        })
    }

    pub fn truncated(&self, len: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.truncate(len.max(1));
        Self::new(c, self.ctx)
    }

    /// Drop trailing coefficients whose weighted size is below `tau` times the norm.
    pub fn trimmed(&self, tau: f64) -> Self {
        let norm = self.norm_sq().sqrt();
        let mut qq = 1.0;
        let mut last = 0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            if n > 0 {
                qq *= 1.0 - self.ctx.q.powi(n as i32);
            }
            if c.abs() * qq.sqrt() > tau * norm {
                last = n;
            }
        }
        self.truncated(last + 1)
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        Self::new(
            self.coeffs.iter().enumerate().map(|(n, &c)| f(n, c)).collect(),
            self.ctx,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(), self.ctx)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coeffs(|_, c| s * c)
    }

    /// Multiply by `x` using `2x H_n = H_{n+1} + (1 - q^n) H_{n-1}`.
    pub fn times_x(&self) -> Self {
        let mut out = vec![0.0; self.len() + 1];
        for (n, &c) in self.coeffs.iter().enumerate() {
            out[n + 1] += 0.5 * c;
            if n > 0 {
                out[n - 1] += 0.5 * (1.0 - self.ctx.q.powi(n as i32)) * c;
            }
        }
        Self::new(out, self.ctx)
    }

    /// Coefficients of a polynomial given in monomial form `sum p_k x^k`.
    pub fn from_monomials(p: &[f64], ctx: QContext) -> Self {
        let mut acc = Self::zero(ctx);
        let mut xk = Self::unit(0, ctx);
        for &pk in p {
            acc = acc.add(&xk.scale(pk));
            xk = xk.times_x();
        }
        acc
    }
}

/// Cached node data for repeated projections onto `H_0..H_m`.
#[derive(Clone, Debug)]
pub struct Projector {
    pub rule: QuadratureRule,
    pub m: usize,
    ctx: QContext,
    xs: Vec<f64>,
    hw: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl Projector {
    pub fn new(m: usize, rule: &QuadratureRule, ctx: &QContext) -> Self {
        let xs: Vec<f64> = rule.nodes.iter().map(|t| t.cos()).collect();
        let hw = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .zip(&xs)
            .map(|((&t, &w), &x)| {
                let ws = w * weight_sin(t, ctx);
                hermite_all(m, x, ctx).into_iter().map(|h| h * ws).collect()
            })
            .collect();
        Self {
            rule: rule.clone(),
            m,
            ctx: *ctx,
            xs,
            hw,
            norms: (0..=m).map(|n| ctx.qq(n)).collect(),
        }
    }

    /// `cos` of the rule nodes.
    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    pub fn project_values(&self, values: &[f64]) -> HermiteSeries {
        let mut c = vec![0.0; self.m + 1];
        for (row, &v) in self.hw.iter().zip(values) {
            for (cn, &h) in c.iter_mut().zip(row) {
                *cn += v * h;
            }
        }
        for (cn, &nn) in c.iter_mut().zip(&self.norms) {
            *cn /= nn;
        }
        HermiteSeries::new(c, self.ctx)
    }

    pub fn project(&self, f: impl Fn(f64) -> f64) -> HermiteSeries {
        let v: Vec<f64> = self.xs.iter().map(|&x| f(x)).collect();
        self.project_values(&v)
    }
}

/// Orthogonal projection of `f` onto `H_0..H_m` with the given rule.
pub fn hermite_expand(f: impl Fn(f64) -> f64, m: usize, rule: &QuadratureRule, ctx: &QContext) -> HermiteSeries {
    Projector::new(m, rule, ctx).project(f)
}

/// Coefficients of `1/g` for `n <= m`.
pub fn g_recip_series(m: usize, ctx: &QContext) -> HermiteSeries {
    let z = zeta(ctx);
    let hz = hermite_all(m, z, ctx);
    let qinf = ctx.qq_inf();
    let c = (0..=m)
        .map(|n| {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            s * ctx.q.powf(n as f64 / 2.0) * hz[n] / (ctx.qq(n) * qinf)
        })
        .collect();
    HermiteSeries::new(c, *ctx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelForm {
    Closed,
    Series,
}

fn check_t(t: f64) -> Result<()> {
    if t.abs() >= 1.0 || !t.is_finite() {
        return Err(param("t", format!("|t| must be < 1, got {t}")));
    }
    Ok(())
}

/// `(t e^{+-i(theta+phi)}, t e^{+-i(theta-phi)}; q)_inf`
fn four_factor(theta: f64, phi: f64, t: f64, ctx: &QContext) -> f64 {
    pair_product_real((theta + phi).cos(), t, ctx.q, ctx.eps_product)
        * pair_product_real((theta - phi).cos(), t, ctx.q, ctx.eps_product)
}

/// Direct partial sum `sum_{n<terms} H_n(x) H_{n+m}(y) t^n / (q;q)_n`.
pub fn bilinear_series(x: f64, y: f64, t: f64, m: usize, terms: usize, ctx: &QContext) -> f64 {
    if terms == 0 {
        return 0.0;
    }
    let hx = hermite_all(terms, x, ctx);
    let hy = hermite_all(terms + m, y, ctx);
    let mut s = 0.0;
    let mut tn = 1.0;
    let mut qq = 1.0;
    for n in 0..terms {
        if n > 0 {
            qq *= 1.0 - ctx.q.powi(n as i32);
            tn *= t;
        }
        s += hx[n] * hy[n + m] * tn / qq;
    }
    s
}

/// Number of series terms needed so that the geometric tail bound for
/// `sum H_n(x) H_{n+m}(y) t^n / (q;q)_n` drops below `eps` (relative to 1).
fn series_terms(t: f64, m: usize, ctx: &QContext) -> usize {
    let h1 = hermite_all(4000 + m, 1.0, ctx);
    let mut qq = 1.0;
    let mut tn = 1.0;
    for n in 0..4000 {
        if n > 0 {
            qq *= 1.0 - ctx.q.powi(n as i32);
            tn *= t.abs();
        }
        let bound = tn * h1[n] * h1[n + m] / qq;
        if n > 2 && bound / (1.0 - t.abs()) < ctx.eps_series {
            return n;
        }
    }
    4000
}

pub fn poisson_kernel(x: f64, y: f64, t: f64, ctx: &QContext, form: KernelForm) -> Result<f64> {
    check_t(t)?;
    match form {
        KernelForm::Closed => {
            let (th, ph) = (x.clamp(-1.0, 1.0).acos(), y.clamp(-1.0, 1.0).acos());
            Ok(qpoch_real(t * t, ctx.q, Order::Infinite, ctx.eps_product) / four_factor(th, ph, t, ctx))
        }
        KernelForm::Series => Ok(bilinear_series(x, y, t, 0, series_terms(t, 0, ctx), ctx)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BilinearForm {
    Carlitz,
    IsmailStanton,
}

/// `sum_n H_n(x) H_{n+m}(y) t^n / (q;q)_n` in closed form.
pub fn bilinear_kernel(x: f64, y: f64, t: f64, m: usize, ctx: &QContext, form: BilinearForm) -> Result<f64> {
    check_t(t)?;
    let (th, ph) = (x.clamp(-1.0, 1.0).acos(), y.clamp(-1.0, 1.0).acos());
    let q = ctx.q;
    let eps = ctx.eps_product;
    let den = four_factor(th, ph, t, ctx);
    let tc = Complex64::new(t, 0.0);
    let e = |ang: f64| Complex64::from_polar(1.0, ang);
    let mut s = Complex64::new(0.0, 0.0);
    match form {
        BilinearForm::Carlitz => {
            let a1 = tc * e(th + ph);
            let a2 = tc * e(ph - th);
            for j in 0..=m {
                let num = qpoch_base(a1, q, Order::Finite(j), eps) * qpoch_base(a2, q, Order::Finite(j), eps);
                let d = qpoch_real(t * t, q, Order::Finite(j), eps);
                s += qbinomial(m, j, ctx) * num / d * e(ph * (m as f64 - 2.0 * j as f64));
            }
            Ok((qpoch_real(t * t, q, Order::Infinite, eps) * s / den).re)
        }
        BilinearForm::IsmailStanton => {
            let a1 = tc * e(ph - th);
            let a2 = tc * e(th - ph);
            for k in 0..=m {
                s += qbinomial(m, k, ctx)
                    * qpoch_base(a1, q, Order::Finite(k), eps)
                    * qpoch_base(a2, q, Order::Finite(m - k), eps)
                    * e((m as f64 - 2.0 * k as f64) * ph);
            }
            let num = qpoch_real(t * t * q.powi(m as i32), q, Order::Infinite, eps);
            Ok((num * s / den).re)
        }
    }
}

/// `E_q(x; t)` from `(q t^2; q^2)_inf E_q(x; t) = sum q^{n^2/4} t^n H_n(x) / (q;q)_n`.
pub fn qexp_eval(x: f64, t: f64, ctx: &QContext) -> Result<f64> {
    check_t(t)?;
    let q = ctx.q;
    let norm = qpoch_real(q * t * t, q * q, Order::Infinite, ctx.eps_product);
    if norm.abs() < 1e-300 {
        return Err(param("t", "vanishing normalizer"));
    }
    Ok(qexp_series(x, t, ctx) / norm)
}

/// The right-hand side `sum q^{n^2/4} t^n H_n(x) / (q;q)_n`, valid for any real `t`.
pub fn qexp_series(x: f64, t: f64, ctx: &QContext) -> f64 {
    let q = ctx.q;
    let mut s = 1.0;
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    let mut qq = 1.0;
    let mut tn = 1.0;
    let hb = x.abs().max(1.0);
    for n in 1..200usize {
        qq *= 1.0 - q.powi(n as i32);
        tn *= t;
        if n >= 2 {
            let h2 = 2.0 * x * h1 - (1.0 - q.powi(n as i32 - 1)) * h0;
            h0 = h1;
            h1 = h2;
        }
        let term = q.powf((n * n) as f64 / 4.0) * tn * h1 / qq;
        s += term;
        let bound = q.powf((n * n) as f64 / 4.0) * tn.abs() * (2.0 * hb).powi(n as i32) / qq;
        if bound < ctx.eps_series * 1e-2 * s.abs().max(1.0) {
            break;
        }
    }
    s
}

/// `E_q(x; t)` from its defining two-sided product sum.
pub fn qexp_definition(x: f64, t: f64, ctx: &QContext) -> Result<f64> {
    check_t(t)?;
    let q = ctx.q;
    let eps = ctx.eps_product;
    let th = x.clamp(-1.0, 1.0).acos();
    let i = Complex64::new(0.0, 1.0);
    let e = Complex64::from_polar(1.0, th);
    let mut s = Complex64::new(0.0, 0.0);
    let mut small = 0;
    // the products grow like q^{-n^2/4}, so each term is assembled in logs
    for n in 0..5000usize {
        let shift = q.powf((1.0 - n as f64) / 2.0);
        let a = -i * e * shift;
        let b = -i * shift / e;
        let mut lt = Complex64::new(0.25 * (n * n) as f64 * q.ln(), 0.0) - ctx.qq(n).ln();
        if n > 0 {
            if t == 0.0 {
                break;
            }
            lt += n as f64 * (-i * t).ln();
        }
        let mut qk = 1.0;
        for _ in 0..n {
            lt += (1.0 - a * qk).ln() + (1.0 - b * qk).ln();
            qk *= q;
        }
        let term = lt.exp();
        s += term;
        if term.norm() < 1e-3 * ctx.eps_series * s.norm().max(1.0) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    let pre = qpoch_real(t * t, q * q, Order::Infinite, eps) / qpoch_real(q * t * t, q * q, Order::Infinite, eps);
    Ok(pre * s.re)
}

/// `1 / (t e^{i theta}, t e^{-i theta}; q)_inf`, the generating function of `H_n`.
pub fn hermite_generating(x: f64, t: f64, ctx: &QContext) -> f64 {
    1.0 / pair_product_real(x, t, ctx.q, ctx.eps_product)
}

/// `(q t^2; q^2)_inf`, the W_q normalizer.
pub fn wq_normalizer(t: f64, ctx: &QContext) -> f64 {
    qpoch_real(ctx.q * t * t, ctx.q * ctx.q, Order::Infinite, ctx.eps_product)
}
