//! q-series primitives: Pochhammer symbols, Rahman h-products, terminating
//! basic hypergeometric sums and the Ismail-Stanton bases.

use num_complex::Complex64;

use crate::error::{param, Error, Result};

const MAX_FACTORS: usize = 2_000_000;

/// The base q together with the global truncation tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QContext {
    pub q: f64,
    pub eps_product: f64,
    pub eps_series: f64,
}

impl QContext {
    pub fn new(q: f64) -> Result<Self> {
        Self::with_tolerances(q, 1e-15, 1e-14)
    }

    pub fn with_tolerances(q: f64, eps_product: f64, eps_series: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidBase(q));
        }
        if !(eps_product > 0.0) {
            return Err(param("eps_product", "must be positive"));
        }
        if !(eps_series > 0.0) {
            return Err(param("eps_series", "must be positive"));
        }
        Ok(Self {
            q,
            eps_product,
            eps_series,
        })
    }

    /// `(q;q)_inf`
    pub fn qq_inf(&self) -> f64 {
        qpoch_real(self.q, self.q, Order::Infinite, self.eps_product)
    }

    /// `(q;q)_n`
    pub fn qq(&self, n: usize) -> f64 {
        qpoch_real(self.q, self.q, Order::Finite(n), self.eps_product)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(usize),
    Infinite,
}

/// `(a; q)_n` or `(a; q)_inf` in base `ctx.q`.
pub fn qpoch(a: Complex64, ctx: &QContext, order: Order) -> Complex64 {
    qpoch_base(a, ctx.q, order, ctx.eps_product)
}

/// Number of factors used for `(a; base)_inf`: the first N with
/// `|a| base^N / (1 - base) < eps`, so that the tail bound below is under `eps`.
pub fn qpoch_inf_terms(a_abs: f64, base: f64, eps: f64) -> usize {
    if a_abs == 0.0 {
        return 0;
    }
    let mut t = a_abs;
    let mut n = 0;
    while t / (1.0 - base) >= eps && n < MAX_FACTORS {
        t *= base;
        n += 1;
    }
    n
}

/// Bound on `|(a q^N; q)_inf - 1|`.
pub fn qpoch_tail_bound(a_abs: f64, base: f64, n: usize) -> f64 {
    (a_abs * base.powi(n as i32) / (1.0 - base)).exp_m1()
}

pub fn qpoch_base(a: Complex64, base: f64, order: Order, eps: f64) -> Complex64 {
    let n = match order {
        Order::Finite(n) => n,
        Order::Infinite => qpoch_inf_terms(a.norm(), base, eps),
    };
    let mut prod = Complex64::new(1.0, 0.0);
    let mut t = a;
    for _ in 0..n {
        prod *= 1.0 - t;
        t *= base;
    }
    prod
}

pub fn qpoch_real(a: f64, base: f64, order: Order, eps: f64) -> f64 {
    let n = match order {
        Order::Finite(n) => n,
        Order::Infinite => qpoch_inf_terms(a.abs(), base, eps),
    };
    let mut prod = 1.0;
    let mut t = a;
    for _ in 0..n {
        prod *= 1.0 - t;
        t *= base;
    }
    prod
}

/// `log (a; base)_inf` for real `a < 1`, summed factorwise to avoid underflow.
pub fn log_qpoch_real(a: f64, base: f64, eps: f64) -> f64 {
    let n = qpoch_inf_terms(a.abs(), base, eps);
    let mut s = 0.0;
    let mut t = a;
    for _ in 0..n {
        s += (-t).ln_1p();
        t *= base;
    }
    s
}

/// `(b e^{i theta}, b e^{-i theta}; base)_inf` written in `x = cos theta`,
/// i.e. `prod_k (1 - 2 b base^k x + b^2 base^{2k})`. Valid for complex `x`.
pub fn pair_product(x: Complex64, b: Complex64, base: f64, eps: f64) -> Complex64 {
    let n = qpoch_inf_terms(b.norm(), base, eps);
    let mut prod = Complex64::new(1.0, 0.0);
    let mut t = b;
    for _ in 0..n {
        prod *= 1.0 - 2.0 * t * x + t * t;
        t *= base;
    }
    prod
}

/// Real-argument, real-parameter version of [`pair_product`].
pub fn pair_product_real(x: f64, b: f64, base: f64, eps: f64) -> f64 {
    let n = qpoch_inf_terms(b.abs(), base, eps);
    let mut prod = 1.0;
    let mut t = b;
    for _ in 0..n {
        prod *= 1.0 - 2.0 * t * x + t * t;
        t *= base;
    }
    prod
}

/// Rahman's `h(x; a_1, ..., a_k)`.
pub fn h_product(x: f64, params: &[Complex64], ctx: &QContext) -> Complex64 {
    let xc = Complex64::new(x.clamp(-1.0, 1.0), 0.0);
    params
        .iter()
        .map(|&a| pair_product(xc, a, ctx.q, ctx.eps_product))
        .product()
}

/// Real cast of an h-product whose parameters are closed under conjugation.
pub fn h_product_real(x: f64, params: &[Complex64], ctx: &QContext) -> Result<f64> {
    let v = h_product(x, params, ctx);
    if v.im.abs() > 1e-12 * v.norm().max(f64::MIN_POSITIVE) {
        return Err(param("params", "not closed under conjugation"));
    }
    Ok(v.re)
}

/// Recognize `a = q^{-n}` for a non-negative integer `n`.
fn terminating_index(a: Complex64, q: f64) -> Option<usize> {
    if a.im.abs() > 1e-12 * a.norm() || a.re < 1.0 - 1e-12 {
        return None;
    }
    let n = (a.re.ln() / -q.ln()).round();
    if !(0.0..=1e6).contains(&n) {
        return None;
    }
    let target = q.powf(-n);
    if (a.re - target).abs() <= 1e-10 * target {
        Some(n as usize)
    } else {
        None
    }
}

/// Terminating `r phi s (num; den; q, z)` with the standard term
/// `prod (num;q)_k / prod (den;q)_k / (q;q)_k [(-1)^k q^{k(k-1)/2}]^{1+s-r} z^k`.
pub fn basic_hyper_sum(
    num: &[Complex64],
    den: &[Complex64],
    ctx: &QContext,
    z: Complex64,
) -> Result<Complex64> {
    let q = ctx.q;
    let n = num
        .iter()
        .filter_map(|&a| terminating_index(a, q))
        .min()
        .ok_or(Error::NonTerminating)?;
    let r = num.len() as i32;
    let s = den.len() as i32;
    let power = 1 + s - r;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..n {
        let qk = q.powi(k as i32);
        let mut ratio = z / (1.0 - qk * q);
        for &a in num {
            ratio *= 1.0 - a * qk;
        }
        for &b in den {
            let d = 1.0 - b * qk;
            if d.norm() < 1e-300 {
                return Err(param("denominator", "vanishing lower parameter"));
            }
            ratio /= d;
        }
        // [(-1)^k q^{k(k-1)/2}] ratio between k+1 and k is -q^k
        if power != 0 {
            ratio *= (-qk).powi(power);
        }
        term *= ratio;
        sum += term;
    }
    Ok(sum)
}

/// Sign variant of the Ismail-Stanton basis: `Plus` has factors
/// `1 - 2x q^{1/4+k/2} + q^{1/2+k}`, `Minus` flips the middle sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiVariant {
    Plus,
    Minus,
}

impl PhiVariant {
    fn base_point(self, q: f64) -> f64 {
        match self {
            PhiVariant::Plus => q.powf(0.25),
            PhiVariant::Minus => -q.powf(0.25),
        }
    }
}

fn integer_order(beta: f64) -> Option<usize> {
    let r = beta.round();
    if (beta - r).abs() < 1e-12 && r >= 0.0 && r <= 10_000.0 {
        Some(r as usize)
    } else {
        None
    }
}

/// `phi_beta(x)` for real `beta >= 0`.
pub fn phi_basis_eval(beta: f64, x: f64, variant: PhiVariant, ctx: &QContext) -> f64 {
    match integer_order(beta) {
        Some(n) => phi_basis_finite(n, x, variant, ctx),
        None => phi_basis_ratio(beta, x, variant, ctx),
    }
}

pub fn phi_basis_finite(n: usize, x: f64, variant: PhiVariant, ctx: &QContext) -> f64 {
    let b0 = variant.base_point(ctx.q);
    let sq = ctx.q.sqrt();
    let mut b = b0;
    let mut prod = 1.0;
    for _ in 0..n {
        prod *= 1.0 - 2.0 * b * x + b * b;
        b *= sq;
    }
    prod
}

/// Product-ratio form, valid for any `beta >= 0`.
pub fn phi_basis_ratio(beta: f64, x: f64, variant: PhiVariant, ctx: &QContext) -> f64 {
    let b0 = variant.base_point(ctx.q);
    let sq = ctx.q.sqrt();
    let shifted = b0 * ctx.q.powf(beta / 2.0);
    pair_product_real(x, b0, sq, ctx.eps_product) / pair_product_real(x, shifted, sq, ctx.eps_product)
}

/// `rho_n(x) = (1 + e^{2i theta}) e^{-i n theta} (-q^{2-n} e^{2i theta}; q^2)_{n-1}`, `rho_0 = 1`.
pub fn rho_basis_eval(n: usize, x: f64, ctx: &QContext) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let theta = x.clamp(-1.0, 1.0).acos();
    let e2 = Complex64::from_polar(1.0, 2.0 * theta);
    let q = ctx.q;
    let a = -q.powi(2 - n as i32) * e2;
    (1.0 + e2)
        * Complex64::from_polar(1.0, -(n as f64) * theta)
        * qpoch_base(a, q * q, Order::Finite(n - 1), ctx.eps_product)
}

/// Gaussian binomial `[n k]_q`.
pub fn qbinomial(n: usize, k: usize, ctx: &QContext) -> f64 {
    if k > n {
        return 0.0;
    }
    ctx.qq(n) / (ctx.qq(k) * ctx.qq(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn context_rejects_bad_base() {
        assert!(QContext::new(0.0).is_err());
        assert!(QContext::new(1.0).is_err());
        assert!(QContext::new(-0.2).is_err());
        assert!(QContext::with_tolerances(0.5, 0.0, 1e-14).is_err());
        assert!(QContext::new(0.5).is_ok());
    }

    #[test]
    fn qpoch_examples() {
        let ctx = QContext::new(0.5).unwrap();
        assert_eq!(qpoch(c(0.7), &ctx, Order::Finite(0)), c(1.0));
        assert!((qpoch(c(0.5), &ctx, Order::Finite(2)).re - 0.375).abs() < 1e-15);
        assert_eq!(qpoch(c(0.0), &ctx, Order::Infinite), c(1.0));
    }

    #[test]
    fn qpoch_infinite_tail_is_bounded() {
        for &q in &[0.3, 0.5, 0.8, 0.95] {
            let ctx = QContext::new(q).unwrap();
            let n = qpoch_inf_terms(0.9, q, ctx.eps_product);
            assert!(qpoch_tail_bound(0.9, q, n) < 1.01 * ctx.eps_product);
        }
    }

    #[test]
    fn qq_inf_matches_euler_pentagonal() {
        // (q;q)_inf = sum (-1)^k q^{k(3k-1)/2} over k in Z
        let q: f64 = 0.6;
        let ctx = QContext::new(q).unwrap();
        let mut s = 0.0;
        for k in -40i32..=40 {
            let e = (k * (3 * k - 1)) as f64 / 2.0;
            s += if k % 2 == 0 { 1.0 } else { -1.0 } * q.powf(e);
        }
        assert!((ctx.qq_inf() - s).abs() < 1e-14);
    }

    #[test]
    fn h_product_examples() {
        let ctx = QContext::new(0.5).unwrap();
        assert_eq!(h_product(0.3, &[], &ctx), c(1.0));
        let a = c(0.4);
        let v = h_product(1.0, &[a], &ctx).re;
        let p = qpoch(a, &ctx, Order::Infinite).re;
        assert!((v - p * p).abs() < 1e-14);
        // brute force 200 factors in exponential form
        let th = 0.3f64.acos();
        let e = Complex64::from_polar(1.0, th);
        let mut bf = c(1.0);
        for k in 0..200 {
            let qk = 0.5f64.powi(k);
            bf *= (1.0 - 0.4 * qk * e) * (1.0 - 0.4 * qk / e);
        }
        let v = h_product(0.3, &[a], &ctx);
        assert!((v - bf).norm() < 1e-14 * bf.norm());
    }

    #[test]
    fn hyper_sum_examples() {
        let ctx = QContext::new(0.5).unwrap();
        let one = basic_hyper_sum(&[c(1.0), c(0.3)], &[c(0.2)], &ctx, c(0.7)).unwrap();
        assert!((one - 1.0).norm() < 1e-15);
        let z = c(0.37);
        let v = basic_hyper_sum(&[c(2.0)], &[], &ctx, z).unwrap();
        let expect = 1.0 + 0.37 * (1.0 - 2.0) / (1.0 - 0.5);
        assert!((v.re - expect).abs() < 1e-15);
        let zero = basic_hyper_sum(&[c(8.0), c(0.1)], &[c(0.4)], &ctx, c(0.0)).unwrap();
        assert_eq!(zero, c(1.0));
        assert_eq!(
            basic_hyper_sum(&[c(0.3)], &[c(0.2)], &ctx, c(0.5)),
            Err(Error::NonTerminating)
        );
    }

    #[test]
    fn q_chu_vandermonde() {
        // 2phi1(q^-n, a; c; q, c q^n / a) = (c/a;q)_n / (c;q)_n
        let ctx = QContext::new(0.45).unwrap();
        let q = ctx.q;
        let (a, cc) = (0.3, 0.7);
        for n in 0..10usize {
            let z = cc * q.powi(n as i32) / a;
            let lhs = basic_hyper_sum(&[c(q.powi(-(n as i32))), c(a)], &[c(cc)], &ctx, c(z)).unwrap();
            let rhs = qpoch_real(cc / a, q, Order::Finite(n), 1e-16) / qpoch_real(cc, q, Order::Finite(n), 1e-16);
            assert!((lhs.re - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "n={n} {} {rhs}", lhs.re);
        }
    }

    #[test]
    fn phi_examples() {
        let ctx = QContext::new(0.25).unwrap();
        let q: f64 = 0.25;
        for v in [PhiVariant::Plus, PhiVariant::Minus] {
            assert_eq!(phi_basis_eval(0.0, 0.3, v, &ctx), 1.0);
        }
        let x = 0.5;
        let p1 = phi_basis_eval(1.0, x, PhiVariant::Plus, &ctx);
        assert!((p1 - (1.0 - 2.0 * x * q.powf(0.25) + q.sqrt())).abs() < 1e-15);
        let f = phi_basis_finite(2, x, PhiVariant::Plus, &ctx);
        let r = phi_basis_ratio(2.0, x, PhiVariant::Plus, &ctx);
        assert!((f - r).abs() < 1e-12 * f.abs());
    }

    #[test]
    fn rho_examples() {
        let ctx = QContext::new(0.5).unwrap();
        assert_eq!(rho_basis_eval(0, 0.2, &ctx), c(1.0));
        let r1 = rho_basis_eval(1, 0.37, &ctx);
        assert!((r1 - c(0.74)).norm() < 1e-14);
        for n in 1..6usize {
            let expect = 2.0
                * qpoch_real(-(0.5f64).powi(2 - n as i32), 0.25, Order::Finite(n - 1), 1e-16);
            assert!((rho_basis_eval(n, 1.0, &ctx).re - expect).abs() < 1e-12 * expect.abs());
        }
    }

    proptest! {
        #[test]
        fn qpoch_recurrence(q in 0.05f64..0.95, are in -2.0f64..2.0, aim in -2.0f64..2.0, n in 0usize..30) {
            let ctx = QContext::new(q).unwrap();
            let a = Complex64::new(are, aim);
            let lhs = qpoch(a, &ctx, Order::Finite(n + 1));
            let rhs = qpoch(a, &ctx, Order::Finite(n)) * (1.0 - a * q.powi(n as i32));
            prop_assert!((lhs - rhs).norm() <= 1e-15 * lhs.norm().max(1e-300) * 4.0 + 1e-300);
        }

        #[test]
        fn qpoch_infinite_split(q in 0.05f64..0.9, a in -0.95f64..0.95, n in 0usize..=20) {
            let ctx = QContext::new(q).unwrap();
            let a = Complex64::new(a, 0.0);
            let full = qpoch(a, &ctx, Order::Infinite);
            let split = qpoch(a, &ctx, Order::Finite(n)) * qpoch(a * q.powi(n as i32), &ctx, Order::Infinite);
            prop_assert!((full - split).norm() < 1e-12 * full.norm());
        }

        #[test]
        fn h_product_real_for_conjugate_pairs(q in 0.05f64..0.9, x in -1.0f64..1.0, r in 0.0f64..0.95, ang in 0.0f64..3.14, b in -0.9f64..0.9) {
            let ctx = QContext::new(q).unwrap();
            let a = Complex64::from_polar(r, ang);
            let v = h_product(x, &[a, a.conj(), Complex64::new(b, 0.0)], &ctx);
            prop_assert!(v.im.abs() < 1e-12 * v.norm());
        }

        #[test]
        fn h_product_symmetric(q in 0.05f64..0.9, x in -1.0f64..1.0, a in -0.9f64..0.9, b in -0.9f64..0.9) {
            let ctx = QContext::new(q).unwrap();
            let u = h_product(x, &[c(a), c(b)], &ctx);
            let v = h_product(x, &[c(b), c(a)], &ctx);
            prop_assert!((u - v).norm() < 1e-14 * u.norm());
        }
    }

    #[test]
    fn phi_paths_agree_on_grid() {
        for &q in &[0.3, 0.5, 0.8] {
            let ctx = QContext::new(q).unwrap();
            for n in 0..8usize {
                for i in 0..33 {
                    let x = -1.0 + 2.0 * i as f64 / 32.0;
                    for v in [PhiVariant::Plus, PhiVariant::Minus] {
                        let f = phi_basis_finite(n, x, v, &ctx);
                        let r = phi_basis_ratio(n as f64, x, v, &ctx);
                        assert!((f - r).abs() <= 1e-12 * f.abs().max(1e-300), "q={q} n={n} x={x} {f} {r}");
                    }
                }
            }
        }
    }
}
