//! The q-Gauss-Weierstrass transform `W_q` and its inversion.
//!
//! `(W_q f)(t) = (q t^2; q^2)_inf int E_q(x; t) f(x) w_H(x) dx`, which on
//! `f = sum f_n H_n` is the power series `sum f_n q^{n^2/4} t^n`.

use crate::error::{param, Error, Result};
use crate::qcore::{qpoch_real, Order, QContext};
use crate::qhermite::{qexp_series, weight_sin, HermiteSeries};
use crate::quadrature::QuadratureRule;
use crate::semigroups::c_factor;

/// Power series `sum g_n t^n` at a finite working truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct EntireSeries {
    pub coeffs: Vec<f64>,
    pub ctx: QContext,
}

impl EntireSeries {
    pub fn new(coeffs: Vec<f64>, ctx: QContext) -> Self {
        Self { coeffs, ctx }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

fn quarter_power(n: usize, q: f64) -> f64 {
    q.powf((n * n) as f64 / 4.0)
}

/// Pointwise `(W_q f)(t)` by quadrature in the angle variable.
pub fn wq_forward_pointwise(f: impl Fn(f64) -> f64, t: f64, ctx: &QContext) -> Result<f64> {
    if !(t.abs() < 1.0) {
        return Err(param("t", "pointwise transform needs |t| < 1"));
    }
    let rule = QuadratureRule::default_rule();
    Ok(rule.integrate(|phi| {
        let x = phi.cos();
        qexp_series(x, t, ctx) * f(x) * weight_sin(phi, ctx)
    }))
}

/// Coefficient path: `f_n -> f_n q^{n^2/4}`.
pub fn wq_forward_series(f: &HermiteSeries) -> EntireSeries {
    let q = f.ctx.q;
    EntireSeries::new(
        f.coeffs.iter().enumerate().map(|(n, &c)| c * quarter_power(n, q)).collect(),
        f.ctx,
    )
}

/// `f_n = q^{-n^2/4} g_n` without any condition check.
pub fn wq_rescale(g: &EntireSeries) -> HermiteSeries {
    let q = g.ctx.q;
    HermiteSeries::new(
        g.coeffs.iter().enumerate().map(|(n, &c)| c / quarter_power(n, q)).collect(),
        g.ctx,
    )
}

/// Inverse transform. The rescaled coefficients must decay: the weighted
/// norm of their extrapolated tail has to stay below `eps_series` times the
/// norm of what was kept.
pub fn wq_invert(g: &EntireSeries) -> Result<HermiteSeries> {
    let f = wq_rescale(g).trimmed(0.0);
    if let Some(tail_norm) = f.extrapolated_tail() {
        let tol = g.ctx.eps_series * f.norm_sq().sqrt().max(1e-300);
        if !(tail_norm <= tol) {
            return Err(Error::ConditionFailed { tail_norm, tol });
        }
    }
    Ok(f)
}

/// Factor relating the transform of `G_a f` at `t` to that of `f` at `q^{a/2} t`:
/// `c^a (q^{a+1} t^2; q^2)_inf / (q t^2; q^2)_inf`.
pub fn multiplier_factor(a: f64, t: f64, ctx: &QContext) -> f64 {
    let q = ctx.q;
    let eps = ctx.eps_product;
    c_factor(ctx).powf(a) * qpoch_real(q.powf(a + 1.0) * t * t, q * q, Order::Infinite, eps)
        / qpoch_real(q * t * t, q * q, Order::Infinite, eps)
}

/// `int E_q(x; t) f(x) w_H(x) dx`, the transform without its normalizer.
pub fn qexp_moment(f: impl Fn(f64) -> f64, t: f64, ctx: &QContext) -> Result<f64> {
    let norm = qpoch_real(ctx.q * t * t, ctx.q * ctx.q, Order::Infinite, ctx.eps_product);
    Ok(wq_forward_pointwise(f, t, ctx)? / norm)
}
