//! The divided-difference operators D_q, C_q and B_q.

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qcore::QContext;
use crate::qhermite::{g_eval_c, HermiteSeries, Projector};
use crate::quadrature::QuadratureRule;

type Eval = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// Behaviour under `z -> 1/z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Even,
    Odd,
}

impl Symmetry {
    fn sign(self) -> f64 {
        match self {
            Symmetry::Even => 1.0,
            Symmetry::Odd => -1.0,
        }
    }

    fn times(self, other: Symmetry) -> Symmetry {
        if self == other {
            Symmetry::Even
        } else {
            Symmetry::Odd
        }
    }
}

/// A function of `z` on the annulus `q^{1/2} <= |z| <= q^{-1/2}` with a declared
/// symmetry under `z -> 1/z`. Functions known only on `[-1, 1]` are flagged
/// non-analytic and can only be evaluated on `|z| = 1`.
#[derive(Clone)]
pub struct SymmetricLaurentFn {
    eval: Arc<Eval>,
    pub symmetry: Symmetry,
    pub analytic: bool,
}

impl fmt::Debug for SymmetricLaurentFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricLaurentFn")
            .field("symmetry", &self.symmetry)
            .field("analytic", &self.analytic)
            .finish()
    }
}

/// `x = (z + 1/z) / 2`
pub fn x_of_z(z: Complex64) -> Complex64 {
    0.5 * (z + 1.0 / z)
}

/// `z = e^{i theta}` with `theta = arccos x`, for real `x` in `[-1, 1]`.
pub fn z_of_x(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x.clamp(-1.0, 1.0).acos())
}

impl SymmetricLaurentFn {
    pub fn new(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, symmetry: Symmetry) -> Self {
        Self {
            eval: Arc::new(f),
            symmetry,
            analytic: true,
        }
    }

    /// An analytic function of `x`, lifted through `x = (z + 1/z)/2`.
    pub fn from_x(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::new(move |z| f(x_of_z(z)), Symmetry::Even)
    }

    /// A function known only on `[-1, 1]`.
    pub fn real_only(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(move |z: Complex64| {
                if (z.norm() - 1.0).abs() > 1e-12 {
                    Complex64::new(f64::NAN, f64::NAN)
                } else {
                    Complex64::new(f(x_of_z(z).re.clamp(-1.0, 1.0)), 0.0)
                }
            }),
            symmetry: Symmetry::Even,
            analytic: false,
        }
    }

    pub fn from_series(s: HermiteSeries) -> Self {
        Self::from_x(move |x| s.eval_c(x))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| Complex64::new(c, 0.0), Symmetry::Even)
    }

    /// `g(x)` as a function of `z`.
    pub fn g(ctx: &QContext) -> Self {
        let ctx = *ctx;
        Self::from_x(move |x| g_eval_c(x, &ctx))
    }

    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub fn eval_theta(&self, theta: Complex64) -> Complex64 {
        (self.eval)((Complex64::i() * theta).exp())
    }

    /// Real value at `x in [-1, 1]`.
    pub fn eval_x(&self, x: f64) -> f64 {
        (self.eval)(z_of_x(x)).re
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |z| a(z) * b(z)),
            symmetry: self.symmetry.times(other.symmetry),
            analytic: self.analytic && other.analytic,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |z| a(z) / b(z)),
            symmetry: self.symmetry.times(other.symmetry),
            analytic: self.analytic && other.analytic,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let a = self.eval.clone();
        Self {
            eval: Arc::new(move |z| s * a(z)),
            symmetry: self.symmetry,
            analytic: self.analytic,
        }
    }

    /// Sum of two functions with the same symmetry.
    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |z| a(z) + b(z)),
            symmetry: self.symmetry,
            analytic: self.analytic && other.analytic,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Largest relative defect of `f(1/z) = +-f(z)` over a fixed set of points
    /// on the annulus.
    pub fn symmetry_defect(&self, ctx: &QContext) -> f64 {
        let s = self.symmetry.sign();
        let rmax = if self.analytic { ctx.q.powf(-0.5) } else { 1.0 };
        let mut worst: f64 = 0.0;
        for i in 0..12 {
            let r = 1.0 + (rmax - 1.0) * (i % 4) as f64 / 3.0;
            let ang = 0.3 + 0.47 * i as f64;
            let z = Complex64::from_polar(r, ang);
            let (a, b) = (self.eval_z(z), self.eval_z(1.0 / z));
            let scale = a.norm().max(b.norm()).max(1e-300);
            worst = worst.max((a - s * b).norm() / scale);
        }
        worst
    }

    pub fn check_symmetry(&self, ctx: &QContext, tol: f64) -> Result<()> {
        let d = self.symmetry_defect(ctx);
        if d.is_finite() && d <= tol {
            Ok(())
        } else {
            Err(Error::SymmetryViolation { defect: d })
        }
    }
}

/// Step used for the symmetric limit at `z = +-1`.
pub const LIMIT_DELTA: f64 = 1e-3;
/// Below this `|z - 1/z|` the divided differences switch to the symmetric limit.
const LIMIT_SWITCH: f64 = 1e-5;

/// Evaluate a divided-difference quotient `quot(z)` near `z0 = +-1` through
/// `z0 e^{d}`, which is even in `d`, with a Richardson table on `d, d/2, d/4, d/8`.
fn symmetric_limit(z0: Complex64, quot: impl Fn(Complex64) -> Complex64) -> Result<Complex64> {
    let mut row: Vec<Complex64> = (0..4).map(|k| quot(z0 * (LIMIT_DELTA / (1 << k) as f64).exp())).collect();
    let mut prev = row[row.len() - 1];
    let mut factor = 4.0;
    while row.len() > 1 {
        prev = row[row.len() - 1];
        row = row.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 4.0;
    }
    let r = row[0];
    let spread = (r - prev).norm();
    if !r.is_finite() || spread > 1e-6 * r.norm().max(1.0) {
        return Err(Error::LimitUnstable { spread });
    }
    Ok(r)
}

fn near_unit(z: Complex64) -> Option<Complex64> {
    if (z - 1.0 / z).norm() < LIMIT_SWITCH {
        Some(Complex64::new(if z.re >= 0.0 { 1.0 } else { -1.0 }, 0.0))
    } else {
        None
    }
}

/// `D_q f` at `z` without symmetry checks.
pub fn dq_at(f: &SymmetricLaurentFn, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    let sq = ctx.q.sqrt();
    let quot = |z: Complex64| (f.eval_z(sq * z) - f.eval_z(z / sq)) / ((sq - 1.0 / sq) * (z - 1.0 / z) * 0.5);
    let v = match near_unit(z) {
        Some(z0) => symmetric_limit(z0, quot)?,
        None => quot(z),
    };
    finite(v)
}

/// `C_q f` at `z` without symmetry checks.
pub fn cq_at(f: &SymmetricLaurentFn, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    let sq = ctx.q.sqrt();
    let q = ctx.q;
    let quot = |z: Complex64| {
        2.0 * (f.eval_z(sq * z) - z.powi(4) * f.eval_z(z / sq)) / ((1.0 - q) * (1.0 - z * z) * z)
    };
    let v = match near_unit(z) {
        Some(z0) => symmetric_limit(z0, quot)?,
        None => quot(z),
    };
    finite(v)
}

/// The displayed explicit form `2 q^{1/2} (f(q^{1/2} z) - z^2 f(q^{-1/2} z)) / ((q - 1)(z^2 - 1))`.
pub fn bq_explicit_at(f: &SymmetricLaurentFn, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    let sq = ctx.q.sqrt();
    let q = ctx.q;
    let quot = |z: Complex64| 2.0 * sq * (f.eval_z(sq * z) - z * z * f.eval_z(z / sq)) / ((q - 1.0) * (z * z - 1.0));
    let v = match near_unit(z) {
        Some(z0) => symmetric_limit(z0, quot)?,
        None => quot(z),
    };
    finite(v)
}

fn finite(v: Complex64) -> Result<Complex64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OutOfDomain(
            "operand could not be evaluated off the unit circle".into(),
        ))
    }
}

fn require_analytic(f: &SymmetricLaurentFn) -> Result<()> {
    if f.analytic {
        Ok(())
    } else {
        Err(Error::OutOfDomain(
            "pointwise divided differences need an analytic operand; project it to a HermiteSeries".into(),
        ))
    }
}

/// Symmetry tolerance for the pointwise operators.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn check_points(f: &SymmetricLaurentFn, z: Complex64, ctx: &QContext) -> Result<()> {
    let sq = ctx.q.sqrt();
    let s = f.symmetry.sign();
    for w in [sq * z, z / sq] {
        let (a, b) = (f.eval_z(w), f.eval_z(1.0 / w));
        let defect = (a - s * b).norm() / a.norm().max(b.norm()).max(1e-300);
        if !(defect <= SYMMETRY_TOL) {
            return Err(Error::SymmetryViolation { defect });
        }
    }
    Ok(())
}

/// `(D_q f)(x)` through the divided difference, checking the operand's symmetry
/// at the evaluation points.
pub fn dq_apply(f: &SymmetricLaurentFn, x: f64, ctx: &QContext) -> Result<f64> {
    require_analytic(f)?;
    let z = z_of_x(x);
    check_points(f, z, ctx)?;
    Ok(dq_at(f, z, ctx)?.re)
}

/// `(C_q f)(x)`
pub fn cq_apply(f: &SymmetricLaurentFn, x: f64, ctx: &QContext) -> Result<f64> {
    require_analytic(f)?;
    let z = z_of_x(x);
    check_points(f, z, ctx)?;
    Ok(cq_at(f, z, ctx)?.re)
}

/// `(B_q f)(x) = (D_q (f g))(x) / g(x)`.
///
/// The shifted values of `g` enter through the exact ratios
/// `g(q^{1/2} z)/g(z) = (1 + q^{-1/4}/z)/(1 + q^{1/4} z)` and its mirror, so the
/// small values of `g` near `x = -1` never get divided out.
pub fn bq_apply(f: &SymmetricLaurentFn, x: f64, ctx: &QContext) -> Result<f64> {
    require_analytic(f)?;
    let z = z_of_x(x);
    check_points(f, z, ctx)?;
    Ok(bq_at(f, z, ctx)?.re)
}

/// `B_q f` at `z` without symmetry checks.
pub fn bq_at(f: &SymmetricLaurentFn, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    let sq = ctx.q.sqrt();
    let r = ctx.q.powf(0.25);
    let quot = |z: Complex64| {
        let up = (1.0 + 1.0 / (r * z)) / (1.0 + r * z);
        let down = (1.0 + z / r) / (1.0 + r / z);
        (f.eval_z(sq * z) * up - f.eval_z(z / sq) * down) / ((sq - 1.0 / sq) * (z - 1.0 / z) * 0.5)
    };
    let v = match near_unit(z) {
        Some(z0) => symmetric_limit(z0, quot)?,
        None => quot(z),
    };
    finite(v)
}

/// The explicit z-form of `B_q` as displayed, without normalization change.
pub fn bq_explicit_apply(f: &SymmetricLaurentFn, x: f64, ctx: &QContext) -> Result<f64> {
    require_analytic(f)?;
    let z = z_of_x(x);
    check_points(f, z, ctx)?;
    Ok(bq_explicit_at(f, z, ctx)?.re)
}

/// Ratio of the explicit z-form to the `(1/g) D_q (g f)` form at `x`.
pub fn bq_normalization_ratio(f: &SymmetricLaurentFn, x: f64, ctx: &QContext) -> Result<f64> {
    Ok(bq_explicit_apply(f, x, ctx)? / bq_apply(f, x, ctx)?)
}

/// `D_q f` as a new function of `z`; failures surface as NaN values.
pub fn dq_fn(f: &SymmetricLaurentFn, ctx: &QContext) -> SymmetricLaurentFn {
    let (f, ctx) = (f.clone(), *ctx);
    let sym = f.symmetry;
    let analytic = f.analytic;
    let mut out = SymmetricLaurentFn::new(
        move |z| dq_at(&f, z, &ctx).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        sym,
    );
    out.analytic = analytic;
    out
}

/// `C_q f` as a new function of `z`.
pub fn cq_fn(f: &SymmetricLaurentFn, ctx: &QContext) -> SymmetricLaurentFn {
    let (f, ctx) = (f.clone(), *ctx);
    let sym = f.symmetry;
    let analytic = f.analytic;
    let mut out = SymmetricLaurentFn::new(
        move |z| cq_at(&f, z, &ctx).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        sym,
    );
    out.analytic = analytic;
    out
}

/// `B_q f = (1/g) D_q (g f)` as a new function of `z`.
pub fn bq_fn(f: &SymmetricLaurentFn, ctx: &QContext) -> SymmetricLaurentFn {
    let (f, ctx) = (f.clone(), *ctx);
    let sym = f.symmetry;
    let analytic = f.analytic;
    let mut out = SymmetricLaurentFn::new(
        move |z| bq_at(&f, z, &ctx).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        sym,
    );
    out.analytic = analytic;
    out
}

/// `D_q H_n = 2 (1 - q^n)/(1 - q) q^{(1-n)/2} H_{n-1}` applied to coefficients.
pub fn dq_series(s: &HermiteSeries) -> HermiteSeries {
    let q = s.ctx.q;
    if s.len() <= 1 {
        return HermiteSeries::zero(s.ctx);
    }
    let c = (1..s.len())
        .map(|n| s.coeffs[n] * 2.0 * (1.0 - q.powi(n as i32)) / (1.0 - q) * q.powf((1.0 - n as f64) / 2.0))
        .collect();
    HermiteSeries::new(c, s.ctx)
}

/// Series path for functions known only on `[-1, 1]`: project onto `H_0..H_m`
/// with the rule, then lower.
pub fn dq_apply_real(
    f: impl Fn(f64) -> f64,
    m: usize,
    rule: &QuadratureRule,
    ctx: &QContext,
) -> HermiteSeries {
    dq_series(&Projector::new(m, rule, ctx).project(f))
}

/// The q-Hermite weight as an odd function of `z`:
/// `w_H = (q;q)_inf (z^2, z^{-2}; q)_inf / (2 pi sin theta)`, `sin theta = (z - 1/z)/(2i)`.
pub fn weight_fn(ctx: &QContext) -> SymmetricLaurentFn {
    let ctx = *ctx;
    SymmetricLaurentFn::new(
        move |z| {
            let ws = crate::qhermite::weight_sin_c(x_of_z(z), &ctx);
            let sin = (z - 1.0 / z) / (2.0 * Complex64::i());
            ws / sin
        },
        Symmetry::Odd,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qhermite::{g_eval, hermite_eval, hermite_eval_c, weight_sin};
    use proptest::prelude::*;

    fn ctx(q: f64) -> QContext {
        QContext::new(q).unwrap()
    }

    fn poly(p: Vec<f64>) -> SymmetricLaurentFn {
        SymmetricLaurentFn::from_x(move |x| p.iter().rev().fold(Complex64::new(0.0, 0.0), |a, &k| a * x + k))
    }

    fn hermite_fn(n: usize, c: &QContext) -> SymmetricLaurentFn {
        let c = *c;
        SymmetricLaurentFn::from_x(move |x| hermite_eval_c(n, x, &c))
    }

    #[test]
    fn dq_examples() {
        let c = ctx(0.5);
        for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!(dq_apply(&SymmetricLaurentFn::constant(2.5), x, &c).unwrap().abs() < 1e-12);
            assert!((dq_apply(&poly(vec![0.0, 1.0]), x, &c).unwrap() - 1.0).abs() < 1e-10);
            assert!((dq_apply(&hermite_fn(1, &c), x, &c).unwrap() - 2.0).abs() < 1e-10);
        }
        let d = dq_series(&HermiteSeries::unit(1, c));
        assert_eq!(d.coeffs, vec![2.0]);
    }

    #[test]
    fn real_only_functions_are_refused_pointwise() {
        let c = ctx(0.5);
        let f = SymmetricLaurentFn::real_only(|x| x * x);
        assert!(dq_apply(&f, 0.2, &c).is_err());
        let s = dq_apply_real(|x| x * x, 6, &QuadratureRule::default_rule(), &c);
        // D_q x^2 = (1 + q) x / ... in Hermite terms: x^2 = (H_2 + 1 - q)/4
        assert!((s.eval(0.3) - dq_apply(&poly(vec![0.0, 0.0, 1.0]), 0.3, &c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_operand_is_rejected() {
        let c = ctx(0.5);
        let f = SymmetricLaurentFn::new(|z| z, Symmetry::Even);
        assert!(matches!(dq_apply(&f, 0.3, &c), Err(Error::SymmetryViolation { .. })));
        assert!(f.check_symmetry(&c, 1e-10).is_err());
        assert!(SymmetricLaurentFn::g(&c).check_symmetry(&c, 1e-10).is_ok());
        assert!(weight_fn(&c).check_symmetry(&c, 1e-10).is_ok());
    }

    #[test]
    fn lowering_relation_pointwise() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            for n in 1..=10usize {
                let f = hermite_fn(n, &c);
                for i in 0..=16 {
                    let x = -1.0 + i as f64 / 8.0;
                    let lhs = dq_apply(&f, x, &c).unwrap();
                    let rhs = 2.0 * (1.0 - q.powi(n as i32)) / (1.0 - q) * q.powf((1.0 - n as f64) / 2.0)
                        * hermite_eval(n - 1, x, &c);
                    assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0), "q={q} n={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn cq_examples() {
        let c = ctx(0.5);
        let q = c.q;
        for &x in &[-1.0, -0.4, 0.2, 1.0] {
            let v = cq_apply(&SymmetricLaurentFn::constant(1.0), x, &c).unwrap();
            assert!((v - 4.0 * x / (1.0 - q)).abs() < 1e-9);
        }
        let g = SymmetricLaurentFn::g(&c);
        let inv_g = SymmetricLaurentFn::constant(1.0).div(&g);
        for &x in &[-0.9, 0.0, 0.6] {
            let v = cq_apply(&inv_g, x, &c).unwrap();
            let expect = 2.0 * q.powf(0.25) / (1.0 - q) / g_eval(x, &c);
            assert!((v - expect).abs() < 1e-10 * expect.abs());
            // same x through 1/z
            let z = z_of_x(x);
            let a = cq_at(&inv_g, z, &c).unwrap();
            let b = cq_at(&inv_g, 1.0 / z, &c).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn bq_examples() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            let one = SymmetricLaurentFn::constant(1.0);
            for &x in &[-1.0, -0.5, 0.1, 0.8, 1.0] {
                let v = bq_apply(&one, x, &c).unwrap();
                assert!((v - 2.0 * q.powf(0.25) / (1.0 - q)).abs() < 1e-9, "q={q} x={x} {v}");
                let e = bq_explicit_apply(&one, x, &c).unwrap();
                assert!((e - 2.0 * q.sqrt() / (1.0 - q)).abs() < 1e-9);
                let p = poly(vec![0.2, -0.5, 1.0, 0.3]);
                let r = bq_normalization_ratio(&p, x, &c).unwrap();
                assert!((r - q.powf(0.25)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bq_matches_its_definition() {
        let c = ctx(0.5);
        let g = SymmetricLaurentFn::g(&c);
        let f = hermite_fn(3, &c);
        let via_def = dq_fn(&f.mul(&g), &c).div(&g);
        let b = bq_fn(&f, &c);
        for &x in &[-0.8, -0.1, 0.4, 0.9] {
            let (u, v) = (b.eval_x(x), via_def.eval_x(x));
            assert!((u - v).abs() < 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn dq_of_g_is_eigen() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            let g = SymmetricLaurentFn::g(&c);
            for &x in &[-1.0, -0.3, 0.5, 1.0] {
                let v = dq_apply(&g, x, &c).unwrap();
                let expect = 2.0 * q.powf(0.25) / (1.0 - q) * g_eval(x, &c);
                assert!((v - expect).abs() < 1e-10 * expect.max(g_eval(1.0, &c)), "q={q} x={x} {v} {expect}");
            }
        }
    }

    #[test]
    fn raising_relation() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            let w = weight_fn(&c);
            let rule = QuadratureRule::default_rule();
            for n in 0..=6usize {
                let wh = w.mul(&hermite_fn(n, &c));
                let d = dq_fn(&wh, &c);
                let k = 2.0 * q.powf(-(n as f64) / 2.0) / (1.0 - q);
                let err = rule.integrate(|t| {
                    let x = t.cos();
                    let lhs = d.eval_x(x);
                    let rhs = -k * weight_sin(t, &c) / t.sin() * hermite_eval(n + 1, x, &c);
                    (lhs - rhs).abs() * t.sin()
                });
                assert!(err < 1e-8, "q={q} n={n} err={err}");
            }
        }
    }

    #[test]
    fn q_integration_by_parts() {
        // int (D_q f) h w_H dx = - int f D_q[h w_H] dx
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            let rule = QuadratureRule::default_rule();
            let pairs: Vec<(Vec<f64>, SymmetricLaurentFn)> = vec![
                (vec![0.3, 1.0, -0.7, 0.2], hermite_fn(2, &c)),
                (vec![1.0, 0.0, 0.0, 0.0, 1.0], SymmetricLaurentFn::g(&c)),
                (vec![0.0, -2.0, 0.5], {
                    let cc = c;
                    SymmetricLaurentFn::from_x(move |x| 1.0 / crate::qcore::pair_product(x, Complex64::new(0.4, 0.0), cc.q, 1e-16))
                }),
            ];
            for (p, h) in pairs {
                let f = poly(p);
                let lhs = rule.integrate(|t| dq_apply(&f, t.cos(), &c).unwrap() * h.eval_x(t.cos()) * weight_sin(t, &c));
                let hw = dq_fn(&h.mul(&weight_fn(&c)), &c);
                let rhs = -rule.integrate(|t| f.eval_x(t.cos()) * hw.eval_x(t.cos()) * t.sin());
                assert!((lhs - rhs).abs() < 1e-8, "q={q} {lhs} {rhs}");
            }
        }
    }

    proptest! {
        #[test]
        fn pointwise_and_series_paths_agree(q in 0.2f64..0.85, coeffs in proptest::collection::vec(-1.0f64..1.0, 1..=11)) {
            let c = ctx(q);
            let s = HermiteSeries::new(coeffs, c);
            let f = SymmetricLaurentFn::from_series(s.clone());
            let d = dq_series(&s);
            for i in 0..=20 {
                let x = -1.0 + i as f64 / 10.0;
                let a = dq_apply(&f, x, &c).unwrap();
                let b = d.eval(x);
                prop_assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "x={x} {a} {b}");
            }
        }
    }
}
