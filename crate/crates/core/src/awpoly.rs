//! Askey-Wilson polynomials, their integral, the action of `T_a` on the family
//! with first parameter `-q^{1/4}`, and the Hilbert-Schmidt kernel built from it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::awop::SymmetricLaurentFn;
use crate::error::{param, Error, Result};
use crate::qcore::{basic_hyper_sum, pair_product, qpoch, qpoch_real, Order, QContext};
use crate::quadrature::QuadratureRule;
use crate::qhermite::{g_eval, g_shift_eval, weight_sin};
use crate::semigroups::{apply_quadrature, c_factor, Kind};

type C64 = Complex64;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Four Askey-Wilson parameters. Complex entries must come in conjugate pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AWParams {
    pub t: [C64; 4],
}

impl AWParams {
    pub fn new(t: [C64; 4]) -> Result<Self> {
        let mut conj_ok = true;
        for &tj in &t {
            if tj.im != 0.0 && !t.iter().any(|&s| (s - tj.conj()).norm() <= 1e-14 * tj.norm()) {
                conj_ok = false;
            }
        }
        if !conj_ok {
            return Err(param("t", "complex parameters must come in conjugate pairs"));
        }
        for j in 0..4 {
            for k in j + 1..4 {
                if (t[j] * t[k]).norm() >= 1.0 {
                    return Err(param("t", format!("|t{} t{}| >= 1", j + 1, k + 1)));
                }
            }
        }
        Ok(Self { t })
    }

    pub fn real(t: [f64; 4]) -> Result<Self> {
        Self::new(t.map(re))
    }

    fn product(&self) -> C64 {
        self.t.iter().product()
    }
}

/// `p_n(x; a, b, c, d | q)`, normalized as the 4phi3 with prefactor `(ab, ac, ad; q)_n a^{-n}`.
pub fn awp_eval(n: usize, x: f64, p: &AWParams, ctx: &QContext) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!("x = {x} outside [-1, 1]")));
    }
    Ok(awp_eval_c(n, re(x), p, ctx)?.re)
}

/// Complex-argument evaluation by the three-term recurrence.
pub fn awp_eval_c(n: usize, x: C64, p: &AWParams, ctx: &QContext) -> Result<C64> {
    let [a, b, c, d] = p.t;
    if a.norm() == 0.0 {
        return Err(param("t1", "must be nonzero"));
    }
    let q = ctx.q;
    let abcd = p.product();
    let one = re(1.0);
    let mut prev = re(0.0);
    let mut cur = one;
    for k in 0..n {
        let qk = q.powi(k as i32);
        let qk1 = qk / q;
        // 2x P_k = up P_{k+1} + mid P_k + down P_{k-1}
        let up = if k == 0 {
            one / (one - abcd)
        } else {
            (one - abcd * qk1) / ((one - abcd * qk * qk1) * (one - abcd * qk * qk))
        };
        let big_a = (one - a * b * qk) * (one - a * c * qk) * (one - a * d * qk) * up / a;
        let (big_c, down) = if k == 0 {
            (re(0.0), re(0.0))
        } else {
            let core = (1.0 - qk) * (one - b * c * qk1) * (one - b * d * qk1) * (one - c * d * qk1)
                / ((one - abcd * qk1 * qk1) * (one - abcd * qk * qk1));
            (a * core, core * (one - a * b * qk1) * (one - a * c * qk1) * (one - a * d * qk1))
        };
        let mid = a + one / a - big_a - big_c;
        let next = (2.0 * x * cur - mid * cur - down * prev) / up;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// The terminating 4phi3 sum itself. Its terms grow like `q^{-n^2/2}`, so it
/// loses digits past moderate `n`; [`awp_eval`] uses the recurrence instead.
pub fn awp_eval_sum(n: usize, x: C64, p: &AWParams, ctx: &QContext) -> Result<C64> {
    let [a, b, c, d] = p.t;
    if a.norm() == 0.0 {
        return Err(param("t1", "must be nonzero"));
    }
    if n == 0 {
        return Ok(re(1.0));
    }
    let q = ctx.q;
    let z = x + (x * x - 1.0).sqrt();
    let num = [
        re(q.powi(-(n as i32))),
        p.product() * q.powi(n as i32 - 1),
        a * z,
        a / z,
    ];
    let den = [a * b, a * c, a * d];
    let sum = basic_hyper_sum(&num, &den, ctx, re(q))?;
    let pre = qpoch(a * b, ctx, Order::Finite(n)) * qpoch(a * c, ctx, Order::Finite(n)) * qpoch(a * d, ctx, Order::Finite(n))
        / a.powi(n as i32);
    Ok(pre * sum)
}

/// Leading coefficient of `p_n` in `x`: `2^n (abcd q^{n-1}; q)_n`.
pub fn awp_leading(n: usize, p: &AWParams, ctx: &QContext) -> f64 {
    let lead = qpoch(p.product() * ctx.q.powi(n as i32 - 1), ctx, Order::Finite(n));
    2f64.powi(n as i32) * lead.re
}

/// `prod_j (t_j e^{i theta}, t_j e^{-i theta}; q)_inf`.
fn h_params(x: f64, t: &[C64], ctx: &QContext) -> f64 {
    let xc = re(x);
    t.iter()
        .map(|&tj| pair_product(xc, tj, ctx.q, ctx.eps_product))
        .product::<C64>()
        .re
}

/// `(e^{2i theta}, e^{-2i theta}; q)_inf`.
fn h_double(theta: f64, ctx: &QContext) -> f64 {
    pair_product(re((2.0 * theta).cos()), re(1.0), ctx.q, ctx.eps_product).re
}

/// Askey-Wilson weight in the angle variable, without normalization.
pub fn aw_weight(theta: f64, p: &AWParams, ctx: &QContext) -> f64 {
    h_double(theta, ctx) / h_params(theta.cos(), &p.t, ctx)
}

/// `int_0^pi p_n^2 w d theta`.
pub fn aw_norm(n: usize, p: &AWParams, ctx: &QContext) -> f64 {
    let q = ctx.q;
    let t = p.t;
    let prod = p.product();
    let qn = q.powi(n as i32);
    let mut num = 2.0 * PI * qpoch(prod * qn * qn, ctx, Order::Infinite);
    num *= qpoch(prod * q.powi(n as i32 - 1), ctx, Order::Finite(n));
    let mut den = re(qpoch_real(qn * q, q, Order::Infinite, ctx.eps_product));
    for j in 0..4 {
        for k in j + 1..4 {
            den *= qpoch(t[j] * t[k] * qn, ctx, Order::Infinite);
        }
    }
    (num / den).re
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralMethod {
    Closed,
    Quadrature,
}

impl std::str::FromStr for IntegralMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Self::Closed),
            "quadrature" => Ok(Self::Quadrature),
            _ => Err(param("method", format!("unknown method {s}"))),
        }
    }
}

/// `int_0^pi w_H(cos phi) sin phi / h(cos phi; a_1..a_4) d phi`.
pub fn aw_integral(a: [C64; 4], method: IntegralMethod, ctx: &QContext) -> Result<f64> {
    let p = AWParams::new(a)?;
    match method {
        IntegralMethod::Closed => {
            let mut den = re(1.0);
            for j in 0..4 {
                for k in j + 1..4 {
                    den *= qpoch(a[j] * a[k], ctx, Order::Infinite);
                }
            }
            Ok((qpoch(p.product(), ctx, Order::Infinite) / den).re)
        }
        IntegralMethod::Quadrature => {
            let rule = QuadratureRule::default_rule();
            Ok(rule.integrate(|phi| weight_sin(phi, ctx) / h_params(phi.cos(), &a, ctx)))
        }
    }
}

fn check_cd(c: f64, d: f64, ctx: &QContext) -> Result<()> {
    let b = -ctx.q.powf(0.75);
    AWParams::real([-ctx.q.powf(0.25), b, c, d]).map(|_| ())
}

/// Right side of the `T_a` action on `p_n(.; -q^{1/4}, b, c, d)` as a terminating 5phi4.
pub fn ta_on_awp(n: usize, a: f64, b: f64, c: f64, d: f64, x: f64, ctx: &QContext) -> Result<f64> {
    let q = ctx.q;
    let a0 = -q.powf(0.25);
    AWParams::real([a0, b, c, d])?;
    if !(a > 0.0) {
        return Err(param("a", "must be positive"));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!("x = {x} outside [-1, 1]")));
    }
    let fin = |v: f64| qpoch_real(v, q, Order::Finite(n), ctx.eps_product);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let pre = sign * fin(a0 * b) * fin(a0 * c) * fin(a0 * d) * c_factor(ctx).powf(a) * q.powf(-(n as f64) / 4.0)
        * qpoch_real(q.powf(a + 1.0), q, Order::Infinite, ctx.eps_product)
        / ctx.qq_inf()
        * g_eval(x, ctx)
        / g_shift_eval(x, a, ctx);
    if n == 0 {
        return Ok(pre);
    }
    let z = C64::new(x, (1.0 - x * x).max(0.0).sqrt());
    let s = -q.powf(0.5 * a + 0.25);
    let num = [
        re(q.powi(-(n as i32))),
        re(-q.powf(n as f64 - 0.75) * b * c * d),
        re(q),
        s * z,
        s / z,
    ];
    let den = [re(a0 * b), re(a0 * c), re(a0 * d), re(q.powf(a + 1.0))];
    Ok(pre * basic_hyper_sum(&num, &den, ctx, re(q))?.re)
}

/// Parameters of the image family in the connection relation.
pub fn image_params(a: f64, c: f64, d: f64, ctx: &QContext) -> Result<AWParams> {
    let q = ctx.q;
    let s = q.powf(-0.5 * a);
    AWParams::real([-q.powf(0.5 * a + 0.25), -q.powf(0.5 * a + 0.75), c * s, d * s])
}

/// Source parameters `(-q^{1/4}, -q^{3/4}, c, d)`.
pub fn source_params(c: f64, d: f64, ctx: &QContext) -> Result<AWParams> {
    AWParams::real([-ctx.q.powf(0.25), -ctx.q.powf(0.75), c, d])
}

/// `C_n = (q;q)_n q^{an/2} / ((q^a;q)_{n+1} (q;q)_inf)`.
fn c_seq(n: usize, a: f64, ctx: &QContext) -> f64 {
    let q = ctx.q;
    ctx.qq(n) * q.powf(0.5 * a * n as f64)
        / (qpoch_real(q.powf(a), q, Order::Finite(n + 1), ctx.eps_product) * ctx.qq_inf())
}

/// Closed form of `T_a p_n(.; -q^{1/4}, -q^{3/4}, c, d)` through the image family.
pub fn connection_rhs(n: usize, a: f64, c: f64, d: f64, x: f64, ctx: &QContext) -> Result<f64> {
    check_cd(c, d, ctx)?;
    let img = image_params(a, c, d, ctx)?;
    let scale = c_factor(ctx).powf(a)
        * qpoch_real(ctx.q.powf(a), ctx.q, Order::Infinite, ctx.eps_product)
        * c_seq(n, a, ctx);
    Ok(scale * g_eval(x, ctx) / g_shift_eval(x, a, ctx) * awp_eval(n, x, &img, ctx)?)
}

/// `T_a p_n` by quadrature of the semigroup kernel.
pub fn ta_on_awp_quadrature(n: usize, a: f64, p: &AWParams, x: f64, ctx: &QContext) -> Result<f64> {
    let p = *p;
    let ctx_owned = *ctx;
    let f = SymmetricLaurentFn::from_x(move |y| awp_eval_c(n, y, &p, &ctx_owned).unwrap_or(C64::new(f64::NAN, 0.0)));
    let image = apply_quadrature(Kind::T, a, &f, ctx)?;
    let v = image.eval_x(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature { diff: f64::NAN })
    }
}

/// The sequences `M_n` (source norms), `A_n`, `B_n`, `C_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AWNormalization {
    pub m: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl AWNormalization {
    pub fn new(n_max: usize, a: f64, c: f64, d: f64, ctx: &QContext) -> Result<Self> {
        let src = source_params(c, d, ctx)?;
        let img = image_params(a, c, d, ctx)?;
        let b: Vec<f64> = (0..=n_max).map(|n| aw_norm(n, &src, ctx)).collect();
        Ok(Self {
            m: b.clone(),
            a: (0..=n_max).map(|n| aw_norm(n, &img, ctx)).collect(),
            b,
            c: (0..=n_max).map(|n| c_seq(n, a, ctx)).collect(),
        })
    }

    /// Eigenvalue `A_n C_n^2 / B_n` of the kernel.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.a[n] * self.c[n] * self.c[n] / self.b[n]
    }

    /// Coefficient `A_n (C_n / B_n)^2` of the bilinear sum.
    pub fn bilinear_coeff(&self, n: usize) -> f64 {
        let r = self.c[n] / self.b[n];
        self.a[n] * r * r
    }
}

/// Pieces of the kernel shared by all evaluations with fixed `(a, c, d)`.
#[derive(Clone, Debug)]
pub struct HsKernel {
    pub a: f64,
    pub c: f64,
    pub d: f64,
    ctx: QContext,
    theta: QuadratureRule,
    w0: Vec<f64>,
}

impl HsKernel {
    pub fn new(a: f64, c: f64, d: f64, ctx: &QContext) -> Result<Self> {
        Self::with_rule(a, c, d, QuadratureRule::default_rule(), ctx)
    }

    pub fn with_rule(a: f64, c: f64, d: f64, theta: QuadratureRule, ctx: &QContext) -> Result<Self> {
        if !(a > 0.0) {
            return Err(param("a", "must be positive"));
        }
        check_cd(c, d, ctx)?;
        image_params(a, c, d, ctx)?;
        let w0 = theta.nodes.iter().map(|&t| w0_eval(t, a, c, d, ctx)).collect();
        Ok(Self {
            a,
            c,
            d,
            ctx: *ctx,
            theta,
            w0,
        })
    }

    /// `1 / h(cos phi; q^{a/2} e^{i theta}, q^{a/2} e^{-i theta})`.
    fn inv_h(&self, phi: f64, theta: f64) -> f64 {
        inv_h(phi, theta, self.a, &self.ctx)
    }

    /// `int_0^pi w_0(theta) / (h(phi_1) h(phi_2)) d theta`.
    pub fn inner(&self, phi1: f64, phi2: f64) -> f64 {
        self.theta
            .nodes
            .iter()
            .zip(&self.theta.weights)
            .zip(&self.w0)
            .map(|((&t, &w), &w0)| w * w0 * self.inv_h(phi1, t) * self.inv_h(phi2, t))
            .sum()
    }

    /// `K(cos phi_1, cos phi_2)`.
    pub fn value(&self, phi1: f64, phi2: f64) -> f64 {
        let ctx = &self.ctx;
        let u1 = weight_sin(phi1, ctx) / g_eval(phi1.cos(), ctx);
        // w_H sin / (g w) at phi_2 with the vanishing factors cancelled
        let ratio2 = ctx.qq_inf() / (2.0 * PI) * h_params(phi2.cos(), &[re(self.c), re(self.d)], ctx);
        u1 * ratio2 * self.inner(phi1, phi2)
    }

    /// `K / w(cos phi_1)` for the source weight; symmetric in its arguments.
    pub fn symmetric_value(&self, phi1: f64, phi2: f64) -> f64 {
        let ctx = &self.ctx;
        let ratio = |phi: f64| ctx.qq_inf() / (2.0 * PI) * h_params(phi.cos(), &[re(self.c), re(self.d)], ctx);
        ratio(phi1) * ratio(phi2) * self.inner(phi1, phi2)
    }
}

fn inv_h(phi: f64, theta: f64, a: f64, ctx: &QContext) -> f64 {
    let t = ctx.q.powf(0.5 * a);
    let e = C64::from_polar(t, theta);
    1.0 / h_params(phi.cos(), &[e, e.conj()], ctx)
}

/// `w_0(theta)`: the image weight times `g_a(cos theta)^2`.
fn w0_eval(theta: f64, a: f64, c: f64, d: f64, ctx: &QContext) -> f64 {
    let s = ctx.q.powf(-0.5 * a);
    h_double(theta, ctx) * g_shift_eval(theta.cos(), a, ctx) / h_params(theta.cos(), &[re(c * s), re(d * s)], ctx)
}

/// `K(cos phi_1, cos phi_2)` with the default inner rule.
pub fn hs_kernel(phi1: f64, phi2: f64, a: f64, c: f64, d: f64, ctx: &QContext) -> Result<f64> {
    Ok(HsKernel::new(a, c, d, ctx)?.value(phi1, phi2))
}

/// Result of [`bilinear_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearReport {
    /// Sup over sample `phi_2` of the relative eigen-relation defect, per `n`.
    pub eigen_residuals: Vec<f64>,
    /// Relative gap between `K / w` and the `N`-term bilinear sum at the sample point.
    pub partial_sum_gaps: Vec<f64>,
}

const CHECK_POINTS: [f64; 3] = [0.4, 1.3, 2.5];
const PARTIAL_POINT: (f64, f64) = (1.0, 0.6);
const PARTIAL_TERMS: usize = 48;

/// Eigen relation of the kernel for `n <= n_max` and the bilinear partial sums.
pub fn bilinear_check(n_max: usize, a: f64, c: f64, d: f64, ctx: &QContext) -> Result<BilinearReport> {
    let kernel = HsKernel::new(a, c, d, ctx)?;
    let terms = n_max.max(PARTIAL_TERMS);
    let norms = AWNormalization::new(terms, a, c, d, ctx)?;
    let src = source_params(c, d, ctx)?;
    let coarse = QuadratureRule::on_half_circle(96)?;
    let fine = QuadratureRule::on_half_circle(128)?;
    let mut eigen_residuals = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let lambda = norms.eigenvalue(n);
        let mut worst: f64 = 0.0;
        for &phi2 in &CHECK_POINTS {
            let lhs = |rule: &QuadratureRule| -> Result<f64> {
                let mut s = 0.0;
                for (&phi1, &w) in rule.nodes.iter().zip(&rule.weights) {
                    s += w * kernel.value(phi1, phi2) * awp_eval(n, phi1.cos(), &src, ctx)?;
                }
                Ok(s)
            };
            let (a1, a2) = (lhs(&coarse)?, lhs(&fine)?);
            let scale = a2.abs().max(lambda * lambda_scale(n, &src, ctx));
            if (a1 - a2).abs() > 1e-6 * scale {
                return Err(Error::Quadrature { diff: (a1 - a2).abs() });
            }
            let rhs = lambda * awp_eval(n, phi2.cos(), &src, ctx)?;
            worst = worst.max((a2 - rhs).abs() / scale);
        }
        eigen_residuals.push(worst);
    }
    let (phi1, phi2) = PARTIAL_POINT;
    let direct = kernel.symmetric_value(phi1, phi2);
    let mut sum = 0.0;
    let mut partial_sum_gaps = Vec::with_capacity(terms + 1);
    for n in 0..=terms {
        sum += norms.bilinear_coeff(n) * awp_eval(n, phi1.cos(), &src, ctx)? * awp_eval(n, phi2.cos(), &src, ctx)?;
        partial_sum_gaps.push((sum - direct).abs() / direct.abs());
    }
    Ok(BilinearReport {
        eigen_residuals,
        partial_sum_gaps,
    })
}

/// Sup of `|p_n|` over the check points, used to scale residuals near zeros.
fn lambda_scale(n: usize, p: &AWParams, ctx: &QContext) -> f64 {
    CHECK_POINTS
        .iter()
        .map(|&phi| awp_eval(n, phi.cos(), p, ctx).map(f64::abs).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

/// Which form of the integral-equation identity to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleForm {
    /// Inner `phi` integrals first, then `theta`.
    Nested,
    /// The `theta` integral innermost.
    Exchanged,
}

/// `int w_0(theta) I_n(theta) I_m(theta) d theta` with
/// `I_n(theta) = int w_H p_n sin phi / (g h(cos phi; q^{a/2} e^{+-i theta})) d phi`,
/// on a tensor Gauss-Legendre rule with `nodes` points per axis.
pub fn hs_triple_integral(
    m: usize,
    n: usize,
    a: f64,
    c: f64,
    d: f64,
    nodes: usize,
    form: TripleForm,
    ctx: &QContext,
) -> Result<f64> {
    let rule = QuadratureRule::on_half_circle(nodes)?;
    let kernel = HsKernel::with_rule(a, c, d, rule.clone(), ctx)?;
    let src = source_params(c, d, ctx)?;
    let mut un = Vec::with_capacity(nodes);
    let mut um = Vec::with_capacity(nodes);
    for (&phi, &w) in rule.nodes.iter().zip(&rule.weights) {
        let base = w * weight_sin(phi, ctx) / g_eval(phi.cos(), ctx);
        un.push(base * awp_eval(n, phi.cos(), &src, ctx)?);
        um.push(base * awp_eval(m, phi.cos(), &src, ctx)?);
    }
    // hinv[i][k] = 1 / h(phi_i; theta_k)
    let hinv: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&phi| rule.nodes.iter().map(|&t| kernel.inv_h(phi, t)).collect())
        .collect();
    let w0: Vec<f64> = kernel.w0.iter().zip(&rule.weights).map(|(a, b)| a * b).collect();
    let total = match form {
        TripleForm::Nested => (0..nodes)
            .map(|k| {
                let i_n: f64 = (0..nodes).map(|i| un[i] * hinv[i][k]).sum();
                let i_m: f64 = (0..nodes).map(|j| um[j] * hinv[j][k]).sum();
                w0[k] * i_n * i_m
            })
            .sum(),
        TripleForm::Exchanged => {
            let mut s = 0.0;
            for i in 0..nodes {
                for j in 0..nodes {
                    let inner: f64 = (0..nodes).map(|k| w0[k] * hinv[i][k] * hinv[j][k]).sum();
                    s += un[i] * um[j] * inner;
                }
            }
            s
        }
    };
    Ok(total)
}
