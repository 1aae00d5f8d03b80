//! The integral semigroups `T_a`, `S_a`, `F_a` and `G_a`.
//!
//! All four share the kernel
//! `P_t(x, y) = (t^2; q)_inf / (t e^{+-i(theta+phi)}, t e^{+-i(theta-phi)}; q)_inf`
//! with `t = q^{a/2}`, which satisfies `int P_t(x, y) H_n(y) w_H(y) dy = t^n H_n(x)`.
//! With `c = (1 - q)/(2 q^{1/4})`:
//!
//! * `F_a f = int P_t f w_H`
//! * `G_a f = c^a F_a f`
//! * `T_a f = c^a g F_a(f / g)`
//! * `S_a f = c^a g^{-1} F_a(g f)`

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::awop::{dq_fn, x_of_z, SymmetricLaurentFn, Symmetry};
use crate::error::{param, Error, Result};
use crate::qcore::{log_qpoch_real, qpoch_inf_terms, qpoch_real, Order, PhiVariant, QContext};
use crate::qhermite::{g_eval, g_eval_c, g_shift_eval, g_shift_eval_c, hermite_eval, weight_sin, zeta, HermiteSeries, Projector};
use crate::quadrature::{QuadratureRule, Singularity, PANEL_NODES, PANEL_RATIO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    T,
    S,
    F,
    G,
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(Kind::T),
            "S" | "s" => Ok(Kind::S),
            "F" | "f" => Ok(Kind::F),
            "G" | "g" => Ok(Kind::G),
            _ => Err(param("kind", format!("expected T, S, F or G, got {s}"))),
        }
    }
}

/// `(1 - q) / (2 q^{1/4})`
pub fn c_factor(ctx: &QContext) -> f64 {
    (1.0 - ctx.q) / (2.0 * ctx.q.powf(0.25))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemigroupOrder {
    pub a: f64,
}

impl SemigroupOrder {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(param("a", format!("order must be positive, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn floor(&self) -> usize {
        self.a.floor() as usize
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> f64 {
        self.a - self.a.floor()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub kind: Kind,
    pub a: f64,
    pub prefactor: f64,
}

impl KernelSpec {
    pub fn new(kind: Kind, a: f64, ctx: &QContext) -> Result<Self> {
        let a = SemigroupOrder::new(a)?.a;
        let qa = qpoch_real(ctx.q.powf(a), ctx.q, Order::Infinite, ctx.eps_product);
        let prefactor = match kind {
            Kind::F => qa,
            Kind::T | Kind::S | Kind::G => c_factor(ctx).powf(a) * qa,
        };
        Ok(Self { kind, a, prefactor })
    }

    /// `prefactor / (four-factor denominator)` for real `x`, `y`.
    pub fn value(&self, x: f64, y: f64, ctx: &QContext) -> f64 {
        let k = KernelRow::real(self.a, x, ctx);
        let base = qpoch_real(ctx.q.powf(self.a), ctx.q, Order::Infinite, ctx.eps_product);
        self.prefactor / base * k.eval(y.clamp(-1.0, 1.0).acos()).re
    }
}

/// Precomputed factors of `P_t(x, .)` at `x = cos theta`, `theta` possibly complex.
/// Each quadratic factor is kept as `(1 - tau)^2 + 4 tau sin^2((theta +- phi)/2)`,
/// which stays accurate when `tau` is close to 1.
struct KernelRow {
    numer: f64,
    theta: Complex64,
    /// `((1 - tau)^2, 4 tau)` per factor.
    coef: Vec<(f64, f64)>,
}

impl KernelRow {
    fn new(a: f64, theta: Complex64, ctx: &QContext) -> Self {
        let q = ctx.q;
        let lq = q.ln();
        let t = q.powf(a / 2.0);
        // (q^a; q)_inf with the first factor from expm1
        let numer = -(a * lq).exp_m1() * qpoch_real(q.powf(a + 1.0), q, Order::Infinite, ctx.eps_product);
        let n = qpoch_inf_terms(t, q, ctx.eps_product).max(1);
        let coef = (0..n)
            .map(|k| {
                let e = a / 2.0 + k as f64;
                let om = -(e * lq).exp_m1();
                (om * om, 4.0 * (e * lq).exp())
            })
            .collect();
        Self { numer, theta, coef }
    }

    fn real(a: f64, x: f64, ctx: &QContext) -> Self {
        Self::new(a, Complex64::new(x.clamp(-1.0, 1.0).acos(), 0.0), ctx)
    }

    /// From `z = e^{i theta}`.
    fn from_z(a: f64, z: Complex64, ctx: &QContext) -> Self {
        Self::new(a, Complex64::new(z.arg(), -z.norm().ln()), ctx)
    }

    fn eval(&self, phi: f64) -> Complex64 {
        if self.theta.im == 0.0 {
            let th = self.theta.re;
            let sp = (0.5 * (th + phi)).sin().powi(2);
            let sm = (0.5 * (th - phi)).sin().powi(2);
            let mut d = 1.0;
            for &(c0, c1) in &self.coef {
                d *= (c0 + c1 * sp) * (c0 + c1 * sm);
            }
            return Complex64::new(self.numer / d, 0.0);
        }
        let sp = ((self.theta + phi) * 0.5).sin().powi(2);
        let sm = ((self.theta - phi) * 0.5).sin().powi(2);
        let mut d = Complex64::new(1.0, 0.0);
        for &(c0, c1) in &self.coef {
            d *= (sp * c1 + c0) * (sm * c1 + c0);
        }
        self.numer / d
    }
}

/// Which function multiplies `H_m` in the eigenfunctions of a kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenTag {
    GTimesH,
    HOverG,
    H,
}

impl EigenTag {
    pub fn of(kind: Kind) -> Self {
        match kind {
            Kind::T => EigenTag::GTimesH,
            Kind::S => EigenTag::HOverG,
            Kind::F | Kind::G => EigenTag::H,
        }
    }

    fn weight_c(self, x: Complex64, ctx: &QContext) -> Complex64 {
        match self {
            EigenTag::GTimesH => g_eval_c(x, ctx),
            EigenTag::HOverG => 1.0 / g_eval_c(x, ctx),
            EigenTag::H => Complex64::new(1.0, 0.0),
        }
    }

    fn weight(self, x: f64, ctx: &QContext) -> f64 {
        match self {
            EigenTag::GTimesH => g_eval(x, ctx),
            EigenTag::HOverG => 1.0 / g_eval(x, ctx),
            EigenTag::H => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair {
    pub m: usize,
    pub eigenvalue: f64,
    pub tag: EigenTag,
}

pub fn eigenvalue(kind: Kind, m: usize, a: f64, ctx: &QContext) -> f64 {
    let lam = ctx.q.powf(m as f64 * a / 2.0);
    match kind {
        Kind::F => lam,
        Kind::T | Kind::S | Kind::G => c_factor(ctx).powf(a) * lam,
    }
}

pub fn eigen_pair(kind: Kind, m: usize, a: f64, ctx: &QContext) -> EigenPair {
    EigenPair {
        m,
        eigenvalue: eigenvalue(kind, m, a, ctx),
        tag: EigenTag::of(kind),
    }
}

/// `weight(x) * sum c_m H_m(x)` with the weight given by the tag.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSeries {
    pub tag: EigenTag,
    pub series: HermiteSeries,
}

impl WeightedSeries {
    pub fn new(tag: EigenTag, series: HermiteSeries) -> Self {
        Self { tag, series }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.tag.weight(x, &self.series.ctx) * self.series.eval(x)
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        self.tag.weight_c(x, &self.series.ctx) * self.series.eval_c(x)
    }

    pub fn to_fn(&self) -> SymmetricLaurentFn {
        let s = self.clone();
        SymmetricLaurentFn::from_x(move |x| s.eval_c(x))
    }
}

/// Largest Hermite order kept by the spectral backend.
pub const SPECTRAL_CAP: usize = 48;

/// Project `f / weight` onto `H_0..H_{SPECTRAL_CAP}`; fails when the coefficients
/// beyond the cap (checked up to twice the cap) are not negligible.
pub fn project_weighted(
    kind: Kind,
    f: impl Fn(f64) -> f64,
    rule: &QuadratureRule,
    ctx: &QContext,
) -> Result<WeightedSeries> {
    let tag = EigenTag::of(kind);
    let s = Projector::new(2 * SPECTRAL_CAP, rule, ctx).project(|x| f(x) / tag.weight(x, ctx));
    let tail = s.tail_norm(SPECTRAL_CAP + 1);
    let tol = ctx.eps_series.max(1e-12) * s.norm_sq().sqrt().max(1.0);
    if tail > tol {
        return Err(Error::NotExpressible { tail, tol });
    }
    Ok(WeightedSeries::new(tag, s.truncated(SPECTRAL_CAP + 1)))
}

/// Coefficientwise multiplication by the eigenvalues.
pub fn apply_spectral(kind: Kind, a: f64, f: &WeightedSeries) -> Result<WeightedSeries> {
    let ctx = f.series.ctx;
    SemigroupOrder::new(a)?;
    if f.tag != EigenTag::of(kind) {
        return Err(Error::NotExpressible {
            tail: f64::INFINITY,
            tol: 0.0,
        });
    }
    let mut s = f.series.clone();
    if s.len() > SPECTRAL_CAP + 1 {
        let tail = s.tail_norm(SPECTRAL_CAP + 1);
        let tol = ctx.eps_series * s.norm_sq().sqrt().max(1.0);
        if tail > tol {
            return Err(Error::NotExpressible { tail, tol });
        }
        s = s.truncated(SPECTRAL_CAP + 1);
    }
    Ok(WeightedSeries::new(
        f.tag,
        s.map_coeffs(|m, c| c * eigenvalue(kind, m, a, &ctx)),
    ))
}

fn outer_factor(kind: Kind, a: f64, x: Complex64, ctx: &QContext) -> Complex64 {
    let ca = c_factor(ctx).powf(a);
    match kind {
        Kind::F => Complex64::new(1.0, 0.0),
        Kind::G => Complex64::new(ca, 0.0),
        Kind::T => ca * g_eval_c(x, ctx),
        Kind::S => ca / g_eval_c(x, ctx),
    }
}

fn inner_factor(kind: Kind, y: f64, ctx: &QContext) -> f64 {
    match kind {
        Kind::F | Kind::G => 1.0,
        Kind::T => 1.0 / g_eval(y, ctx),
        Kind::S => g_eval(y, ctx),
    }
}

/// Distance from the real axis of the zeros of `g(cos phi)` nearest to `phi = pi`.
fn g_distance(ctx: &QContext) -> f64 {
    0.25 * (1.0 / ctx.q).ln()
}

/// Singularities of the integrand in `phi` when evaluating at `z`.
fn integrand_singularities(a: f64, z: Complex64, ctx: &QContext) -> Result<Vec<Singularity>> {
    let kdist = 0.5 * a * (1.0 / ctx.q).ln() - z.norm().ln().abs();
    if !(kdist > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "|z| = {} is outside the analyticity annulus of the order-{a} kernel",
            z.norm()
        )));
    }
    let th = z.arg().abs();
    let mut out: Vec<Singularity> = [th, -th, 2.0 * PI - th]
        .into_iter()
        .map(|position| Singularity { position, distance: kdist })
        .collect();
    out.push(Singularity {
        position: PI,
        distance: g_distance(ctx),
    });
    // g and 1/g vary over many orders of magnitude when q is near 1; cap the
    // panel length by the log-slope of g
    let cap = g_panel_cap(ctx);
    let n = (PI / cap).ceil() as usize;
    out.extend((0..=n).map(|i| Singularity {
        position: PI * i as f64 / n as f64,
        distance: cap / PANEL_RATIO,
    }));
    Ok(out)
}

/// Longest panel over which `log g(cos phi)` changes by at most `GROWTH_STEP`.
fn g_panel_cap(ctx: &QContext) -> f64 {
    let span = (g_eval(1.0, ctx) / g_eval(-1.0, ctx)).ln();
    (2.0 * GROWTH_STEP / span.max(1e-300)).min(PI)
}

const GROWTH_STEP: f64 = 4.0;

/// `(Op_a f)` at a single point `z` by a graded rule.
pub fn apply_at(kind: Kind, a: f64, f: &SymmetricLaurentFn, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    SemigroupOrder::new(a)?;
    let sings = integrand_singularities(a, z, ctx)?;
    let rule = QuadratureRule::graded(0.0, PI, &sings, &[])?;
    Ok(apply_with_rule(kind, a, f, z, &rule, ctx))
}

fn apply_with_rule(
    kind: Kind,
    a: f64,
    f: &SymmetricLaurentFn,
    z: Complex64,
    rule: &QuadratureRule,
    ctx: &QContext,
) -> Complex64 {
    let x = x_of_z(z);
    let row = KernelRow::from_z(a, z, ctx);
    let mut s = Complex64::new(0.0, 0.0);
    for (&ph, &w) in rule.nodes.iter().zip(&rule.weights) {
        let y = ph.cos();
        s += w * weight_sin(ph, ctx) * inner_factor(kind, y, ctx) * f.eval_x(y) * row.eval(ph);
    }
    outer_factor(kind, a, x, ctx) * s
}

/// The operator applied by quadrature, as a function that can be evaluated on
/// the annulus `|log|z|| < (a/2) log(1/q)`. Failures surface as NaN.
pub fn apply_quadrature(kind: Kind, a: f64, f: &SymmetricLaurentFn, ctx: &QContext) -> Result<SymmetricLaurentFn> {
    SemigroupOrder::new(a)?;
    let (f, ctx) = (f.clone(), *ctx);
    Ok(SymmetricLaurentFn::new(
        move |z| apply_at(kind, a, &f, z, &ctx).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        Symmetry::Even,
    ))
}

/// The same integral with a caller-supplied rule on `(0, pi)`, real `x` only.
pub fn apply_fixed_rule(kind: Kind, a: f64, f: &SymmetricLaurentFn, x: f64, rule: &QuadratureRule, ctx: &QContext) -> Result<f64> {
    SemigroupOrder::new(a)?;
    Ok(apply_with_rule(kind, a, f, crate::awop::z_of_x(x), rule, ctx).re)
}

#[derive(Clone, Debug)]
pub enum Operand {
    Function(SymmetricLaurentFn),
    Series(WeightedSeries),
}

#[derive(Clone, Debug)]
pub enum Applied {
    Function(SymmetricLaurentFn),
    Series(WeightedSeries),
}

impl Applied {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Applied::Function(f) => f.eval_x(x),
            Applied::Series(s) => s.eval(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Quadrature,
    Spectral,
}

/// Apply `kind` of order `a` with either backend. The spectral backend projects
/// function operands with `rule` first.
pub fn apply(kind: Kind, a: f64, f: &Operand, backend: Backend, rule: &QuadratureRule, ctx: &QContext) -> Result<Applied> {
    match backend {
        Backend::Quadrature => {
            let f = match f {
                Operand::Function(f) => f.clone(),
                Operand::Series(s) => s.to_fn(),
            };
            Ok(Applied::Function(apply_quadrature(kind, a, &f, ctx)?))
        }
        Backend::Spectral => {
            let s = match f {
                Operand::Series(s) => s.clone(),
                Operand::Function(f) => {
                    let f = f.clone();
                    project_weighted(kind, move |x| f.eval_x(x), rule, ctx)?
                }
            };
            Ok(Applied::Series(apply_spectral(kind, a, &s)?))
        }
    }
}

/// A discretized operator on the nodes of a composite rule on `(0, pi)`:
/// `(Op f)(x_i) ~ sum_j m_ij f(x_j)`.
#[derive(Clone, Debug)]
pub struct NystromOperator {
    pub kind: Kind,
    pub a: f64,
    pub rule: QuadratureRule,
    pub matrix: Vec<Vec<f64>>,
    weights: Vec<f64>,
    ctx: QContext,
}

/// `w_j w_H(y_j) (1/g, g or 1)(y_j)` at the nodes of `rule`.
fn node_weights(kind: Kind, rule: &QuadratureRule, ctx: &QContext) -> Vec<f64> {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&ph, &w)| w * weight_sin(ph, ctx) * inner_factor(kind, ph.cos(), ctx))
        .collect()
}

fn row_at(kind: Kind, a: f64, theta: Complex64, rule: &QuadratureRule, nw: &[f64], ctx: &QContext) -> Vec<f64> {
    let k = KernelRow::new(a, theta, ctx);
    let outer = outer_factor(kind, a, Complex64::new(theta.re.cos(), 0.0), ctx).re;
    rule.nodes.iter().zip(nw).map(|(&ph, &w)| outer * w * k.eval(ph).re).collect()
}

/// Smallest singularity distance (in `phi`) among the kernels of `orders` and
/// `1/g`, shrunk further where `g` grows fast.
pub fn resolving_distance(orders: &[f64], ctx: &QContext) -> Result<f64> {
    let mut d = g_distance(ctx).min(g_panel_cap(ctx) / PANEL_RATIO);
    for &a in orders {
        d = d.min(0.5 * SemigroupOrder::new(a)?.a * (1.0 / ctx.q).ln());
    }
    Ok(d)
}

/// Uniform composite rule resolving kernels of every listed order and `1/g`.
pub fn nystrom_rule(orders: &[f64], ctx: &QContext) -> Result<QuadratureRule> {
    let d = resolving_distance(orders, ctx)?;
    // an even panel count puts a break at x = 0
    let half = ((0.5 * PI) / (PANEL_RATIO * d)).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=2 * half).map(|i| PI * i as f64 / (2 * half) as f64).collect();
    QuadratureRule::composite(&breaks, PANEL_NODES)
}

impl NystromOperator {
    pub fn new(kind: Kind, a: f64, rule: &QuadratureRule, ctx: &QContext) -> Result<Self> {
        SemigroupOrder::new(a)?;
        let weights = node_weights(kind, rule, ctx);
        let matrix = rule
            .nodes
            .iter()
            .map(|&th| row_at(kind, a, Complex64::new(th, 0.0), rule, &weights, ctx))
            .collect();
        Ok(Self {
            kind,
            a,
            rule: rule.clone(),
            matrix,
            weights,
            ctx: *ctx,
        })
    }

    /// Weights `K(x, y_j) w_j` of the operator at real `x` against the nodes of `rule`.
    pub fn row(kind: Kind, a: f64, x: f64, rule: &QuadratureRule, ctx: &QContext) -> Vec<f64> {
        let nw = node_weights(kind, rule, ctx);
        row_at(kind, a, Complex64::new(x.clamp(-1.0, 1.0).acos(), 0.0), rule, &nw, ctx)
    }

    /// `cos` of the nodes.
    pub fn points(&self) -> Vec<f64> {
        self.rule.nodes.iter().map(|t| t.cos()).collect()
    }

    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    pub fn apply_values(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|r| r.iter().zip(v).map(|(m, f)| m * f).sum())
            .collect()
    }

    /// Nystrom interpolation of the image of nodal values `v` at any real `x`.
    pub fn eval_at(&self, x: f64, v: &[f64]) -> f64 {
        let theta = Complex64::new(x.clamp(-1.0, 1.0).acos(), 0.0);
        row_at(self.kind, self.a, theta, &self.rule, &self.weights, &self.ctx)
            .iter()
            .zip(v)
            .map(|(m, f)| m * f)
            .sum()
    }
}

/// Closed forms of the actions on `e_j(x) = x^j`, `j = 0, 1, 2`.
pub fn moments_closed_form(kind: Kind, j: usize, a: f64, x: f64, ctx: &QContext) -> Result<f64> {
    SemigroupOrder::new(a)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!("x = {x} not in [-1, 1]")));
    }
    let q = ctx.q;
    let qa = q.powf(a);
    let ha = q.powf(a / 2.0);
    match kind {
        Kind::F => match j {
            0 => Ok(1.0),
            1 => Ok(ha * x),
            2 => Ok(qa * x * x + (1.0 - q) * (1.0 - qa) / 4.0),
            _ => Err(param("j", "closed forms exist for j = 0, 1, 2")),
        },
        Kind::T => {
            let eps = ctx.eps_product;
            let ca = c_factor(ctx).powf(a);
            let ratio = g_eval(x, ctx) / g_shift_eval(x, a, ctx);
            let p = |s: f64| qpoch_real(q.powf(s), q, Order::Infinite, eps);
            let qq = ctx.qq_inf();
            match j {
                0 => Ok(ca * p(a + 1.0) / qq * ratio),
                1 => {
                    let br = x * ha * (1.0 - q) + zeta(ctx) * q.sqrt() * (qa - 1.0);
                    Ok(ca * p(a + 2.0) / qq * br * ratio)
                }
                2 => {
                    let e = |s: f64| q.powf(s);
                    let a2 = a / 2.0;
                    let lin = 0.5
                        * ((qa + q) * (e(a2 + 0.25) + e(a2 + 0.75) + e(a2 + 1.25) + e(a2 + 1.75))
                            - (1.0 + q) * (e(a2 + 0.25) + e(a2 + 0.75) + e(3.0 * a2 + 1.25) + e(3.0 * a2 + 1.75)));
                    let cst = 0.25
                        * ((1.0 + q)
                            * (q.sqrt() + q + qa + e(a + 2.0) + e(2.0 * a + 1.0) + e(2.0 * a + 1.5)
                                - 1.0
                                - e(a + 0.5)
                                - e(a + 1.5)
                                - e(2.0 * a + 2.0))
                            + 2.0 * (1.0 - e(a + 1.0)) * (1.0 - e(a + 2.0))
                            - 2.0 * (qa + e(a + 3.0)));
                    let br = qa * (1.0 - q) * (1.0 - q * q) * x * x + lin * x + cst;
                    Ok(ca * p(a + 3.0) / qq * br * ratio)
                }
                _ => Err(param("j", "closed forms exist for j = 0, 1, 2")),
            }
        }
        _ => Err(Error::Unsupported("closed-form moments are given for T and F".into())),
    }
}

/// `T_a phi_beta = scalar * phi_{beta + a}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiAction {
    pub order: f64,
    pub scalar: f64,
}

/// Action of `T_a` on `phi_beta = g / g_beta`, which is the `Minus` variant.
pub fn action_phi_beta(a: f64, beta: f64, variant: PhiVariant, ctx: &QContext) -> Result<PhiAction> {
    if !(a >= 0.0) || !(beta >= 0.0) {
        return Err(param("a, beta", "must be non-negative"));
    }
    if variant == PhiVariant::Plus {
        return Err(Error::Unsupported(
            "T_a maps phi_beta to a multiple of phi_{beta+a} only for the (-q^{1/4}) variant".into(),
        ));
    }
    let q = ctx.q;
    let eps = ctx.eps_product;
    let scalar = c_factor(ctx).powf(a)
        * (log_qpoch_real(q.powf(a + beta + 1.0), q, eps) - log_qpoch_real(q.powf(beta + 1.0), q, eps)).exp();
    Ok(PhiAction { order: beta + a, scalar })
}

/// `T_a [g E_q(.; t)] = scalar * g E_q(.; q^{a/2} t)`; returns `(scalar, q^{a/2} t)`.
pub fn action_qexp(a: f64, t: f64, ctx: &QContext) -> Result<(f64, f64)> {
    if t.abs() >= 1.0 || !t.is_finite() {
        return Err(param("t", format!("|t| must be < 1, got {t}")));
    }
    if !(a >= 0.0) {
        return Err(param("a", "must be non-negative"));
    }
    let q = ctx.q;
    let eps = ctx.eps_product;
    let num = qpoch_real(q.powf(a + 1.0) * t * t, q * q, Order::Infinite, eps);
    let den = qpoch_real(q * t * t, q * q, Order::Infinite, eps);
    Ok((c_factor(ctx).powf(a) * num / den, q.powf(a / 2.0) * t))
}

/// The infinitesimal generator as a coefficient multiplier.
pub fn generator_apply(kind: Kind, f: &HermiteSeries) -> HermiteSeries {
    let q = f.ctx.q;
    match kind {
        Kind::F => f.map_coeffs(|m, c| c * 0.5 * m as f64 * q.ln()),
        Kind::T | Kind::S | Kind::G => {
            f.map_coeffs(|m, c| c * ((1.0 - q) / 2.0 * q.powf((2.0 * m as f64 - 1.0) / 4.0)).ln())
        }
    }
}

/// Assumption on the preimage that the `T` and `S` inversions exploit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestClass {
    /// `f = g h` (for `T`) or `f = h / g` (for `S`) with `h` smooth.
    Eigen,
    /// `f` a polynomial of at most this degree.
    Polynomial(usize),
    /// As `Eigen` with `h` a polynomial of at most this degree.
    Weighted(usize),
}

/// Relative tail allowed past the degree bound of [`TestClass::Weighted`].
pub const WEIGHTED_TAIL_TOL: f64 = 1e-6;

/// Coefficient magnitudes below this fraction of the largest one are treated as
/// quadrature noise.
pub const NOISE_FLOOR: f64 = 1e-13;
const FIT_ORDER: usize = 64;

/// Project and drop the trailing coefficients under the noise floor.
fn fit(values: impl Fn(f64) -> f64, ctx: &QContext) -> HermiteSeries {
    let s = Projector::new(FIT_ORDER, &QuadratureRule::default_rule(), ctx).project(values);
    s.trimmed(NOISE_FLOOR)
}

/// `D_q^{floor(a)+1} T_{1-{a}}` (or `C_q^{..} S_{..}`), and the coefficient map for `F`.
pub fn invert(kind: Kind, a: f64, gfun: &Operand, class: TestClass, ctx: &QContext) -> Result<Applied> {
    let ord = SemigroupOrder::new(a)?;
    match kind {
        Kind::F | Kind::G => {
            let s = match gfun {
                Operand::Series(s) if s.tag == EigenTag::H => s.series.clone(),
                Operand::Series(_) => {
                    return Err(Error::NotExpressible { tail: f64::INFINITY, tol: 0.0 });
                }
                Operand::Function(f) => {
                    let f = f.clone();
                    fit(move |x| f.eval_x(x), ctx)
                }
            };
            let s = if kind == Kind::G { s.scale(c_factor(ctx).powf(-a)) } else { s };
            Ok(Applied::Series(WeightedSeries::new(EigenTag::H, invert_f(a, &s)?)))
        }
        Kind::T | Kind::S => {
            let f = match gfun {
                Operand::Function(f) => f.clone(),
                Operand::Series(s) => s.to_fn(),
            };
            let frac = ord.frac();
            let (b, k) = if frac == 0.0 { (1.0, ord.floor() + 1) } else { (1.0 - frac, ord.floor() + 1) };
            // w = Op_k f on the projection nodes
            let rule = nystrom_rule(&[b], ctx)?;
            let pre = NystromOperator::new(kind, b, &rule, ctx)?;
            let nodal: Vec<f64> = pre.points().iter().map(|&y| f.eval_x(y)).collect();
            let w = move |x: f64| pre.eval_at(x, &nodal);
            let c = *ctx;
            let pre_image = match (kind, class) {
                (Kind::T, TestClass::Polynomial(n)) => {
                    // T_k phi_j = s phi_{j+k} and phi_{j+k} = phi_k * (degree-j polynomial)
                    let beta = k as f64;
                    let omega = move |x: f64| g_eval(x, &c) / g_shift_eval(x, beta, &c);
                    let p = Projector::new(n + 8, &QuadratureRule::default_rule(), ctx).project(|x| w(x) / omega(x));
                    let tail = p.tail_norm(n + 1);
                    let tol = 1e-9 * p.norm_sq().sqrt().max(1e-300);
                    if tail > tol {
                        return Err(Error::NotExpressible { tail, tol });
                    }
                    let p = p.truncated(n + 1);
                    SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &c) / g_shift_eval_c(x, beta, &c) * p.eval_c(x))
                }
                (Kind::S, TestClass::Polynomial(n)) => return invert_s_polynomial(k as f64, &w, n, ctx),
                (_, class) => {
                    // D_q (g H_m) = g H_m / (c q^{m/2}) and C_q (H_m / g) = (H_m / g) / (c q^{m/2})
                    let tag = EigenTag::of(kind);
                    let p = fit(|x| w(x) / tag.weight(x, &c), ctx);
                    let p = match class {
                        TestClass::Weighted(n) => {
                            let tail = p.tail_norm(n + 1);
                            let tol = WEIGHTED_TAIL_TOL * p.norm_sq().sqrt().max(1e-300);
                            if tail > tol {
                                return Err(Error::NotExpressible { tail, tol });
                            }
                            p.truncated(n + 1)
                        }
                        _ => p,
                    };
                    let kk = k as f64;
                    let p = p.map_coeffs(|m, v| v / eigenvalue(kind, m, kk, &c));
                    return Ok(Applied::Series(WeightedSeries::new(tag, p)));
                }
            };
            let mut out = pre_image;
            for _ in 0..k {
                out = dq_fn(&out, ctx);
            }
            Ok(Applied::Function(out))
        }
    }
}

/// Solve `S_k f = w` for a polynomial `f = sum a_j H_j`, `j <= n`, by least squares
/// on the Hermite coefficients of `g w = c^k F_k(g f)`.
fn invert_s_polynomial(k: f64, w: &dyn Fn(f64) -> f64, n: usize, ctx: &QContext) -> Result<Applied> {
    let c = *ctx;
    let proj = Projector::new(FIT_ORDER, &QuadratureRule::default_rule(), ctx);
    let rows = FIT_ORDER + 1;
    let scale: Vec<f64> = (0..rows).map(|i| ctx.qq(i).sqrt()).collect();
    let mut mat = DMatrix::zeros(rows, n + 1);
    for j in 0..=n {
        let col = proj.project(|x| g_eval(x, &c) * hermite_eval(j, x, &c));
        for i in 0..rows {
            mat[(i, j)] = col.coeffs[i] * eigenvalue(Kind::S, i, k, ctx) * scale[i];
        }
    }
    let target = proj.project(|x| w(x) * g_eval(x, &c));
    let rhs = DVector::from_iterator(rows, (0..rows).map(|i| target.coeffs[i] * scale[i]));
    let svd = mat.clone().svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-14 * svd.singular_values.max())
        .map_err(|e| Error::Data(e.to_string()))?;
    let tail = (&mat * &sol - &rhs).norm();
    let tol = 1e-9 * rhs.norm().max(1e-300);
    if tail > tol {
        return Err(Error::NotExpressible { tail, tol });
    }
    Ok(Applied::Series(WeightedSeries::new(
        EigenTag::H,
        HermiteSeries::new(sol.iter().copied().collect(), c),
    )))
}

/// Relative size allowed for the extrapolated tail of a rescaled sequence.
pub const INVERT_TAIL_TOL: f64 = 1e-8;

/// `g_n -> g_n q^{-na/2}`; fails when the rescaled coefficients are not
/// visibly square-summable at the given truncation.
pub fn invert_f(a: f64, s: &HermiteSeries) -> Result<HermiteSeries> {
    let q = s.ctx.q;
    let s = s.trimmed(0.0);
    let r = s.map_coeffs(|n, c| c * q.powf(-(n as f64) * a / 2.0));
    if let Some(tail_norm) = r.extrapolated_tail() {
        let tol = INVERT_TAIL_TOL * r.norm_sq().sqrt().max(1e-300);
        if !(tail_norm <= tol) {
            return Err(Error::ConditionFailed { tail_norm, tol });
        }
    }
    Ok(r)
}

/// `h(a) = log ||T_a e_0||_inf`.
pub fn contraction_profile(a: f64, ctx: &QContext) -> f64 {
    let q = ctx.q;
    let eps = ctx.eps_product;
    let sq = q.sqrt();
    a * c_factor(ctx).ln() + log_qpoch_real(q.powf(a + 1.0), q, eps) - log_qpoch_real(q, q, eps)
        + 2.0 * (log_qpoch_real(-q.powf(0.25), sq, eps) - log_qpoch_real(-q.powf(a / 2.0 + 0.25), sq, eps))
}

/// Number of terms kept in the derivative series.
pub const DERIVATIVE_TERMS: usize = 200;

pub fn contraction_h_prime(a: f64, ctx: &QContext) -> f64 {
    let q = ctx.q;
    let lq = q.ln();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for n in 0..DERIVATIVE_TERMS {
        let u = q.powf(a + n as f64 + 1.0);
        s1 += u / (1.0 - u);
        let v = q.powf((a + n as f64 + 0.5) / 2.0);
        s2 += v / (1.0 + v);
    }
    c_factor(ctx).ln() - lq * s1 - lq * s2
}

pub fn contraction_h_second(a: f64, ctx: &QContext) -> f64 {
    let q = ctx.q;
    let lq = q.ln();
    let mut s = 0.0;
    for n in 0..DERIVATIVE_TERMS {
        let u = q.powf(a + n as f64 + 1.0);
        s += u / (1.0 - u).powi(2);
        let v = q.powf((a + n as f64 + 0.5) / 2.0);
        s += 0.5 * v / (1.0 + v).powi(2);
    }
    -lq * lq * s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionThreshold {
    /// Root of `h'`; `h` is strictly decreasing beyond it.
    pub peak: f64,
    /// Smallest `a_0` with `h(a) < 0` for all `a > a_0`.
    pub threshold: f64,
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo) > 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn find_c(ctx: &QContext) -> Result<ContractionThreshold> {
    let c = c_factor(ctx);
    if c >= 1.0 {
        return Err(param("q", format!("(1-q)/(2q^(1/4)) = {c} is not below 1")));
    }
    let mut hi = 1.0;
    while contraction_h_prime(hi, ctx) >= 0.0 {
        hi *= 2.0;
    }
    let peak = if contraction_h_prime(0.0, ctx) <= 0.0 {
        0.0
    } else {
        bisect(0.0, hi, |a| contraction_h_prime(a, ctx))
    };
    let mut far = peak.max(1.0);
    while contraction_profile(far, ctx) >= 0.0 {
        far *= 2.0;
    }
    let threshold = if contraction_profile(peak, ctx) <= 0.0 {
        0.0
    } else {
        bisect(peak, far, |a| contraction_profile(a, ctx))
    };
    Ok(ContractionThreshold { peak, threshold })
}

/// `y / (y + m/2)`
pub fn resolvent_multiplier(m: usize, y: f64) -> f64 {
    y / (y + 0.5 * m as f64)
}

/// `log(q^{-y}) int_0^inf c^{-a} q^{ay} (Op_a f) da` on the eigen-coefficients.
pub fn resolvent_limit(kind: Kind, f: &HermiteSeries, y: f64) -> Result<HermiteSeries> {
    if !(y > 0.0) {
        return Err(param("y", "must be positive"));
    }
    match kind {
        Kind::T | Kind::S => Ok(f.map_coeffs(|m, c| c * resolvent_multiplier(m, y))),
        _ => Err(Error::Unsupported("the resolvent limit is stated for T and S".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::awop::{bq_fn, cq_fn, z_of_x};
    use crate::qcore::phi_basis_eval;
    use crate::qhermite::{hermite_eval_c, qexp_eval};
    use proptest::prelude::*;

    fn ctx(q: f64) -> QContext {
        QContext::new(q).unwrap()
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect()
    }

    fn mono(j: i32) -> SymmetricLaurentFn {
        SymmetricLaurentFn::from_x(move |x| x.powi(j))
    }

    fn g_hermite(n: usize, c: &QContext) -> SymmetricLaurentFn {
        let c = *c;
        SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &c) * hermite_eval_c(n, x, &c))
    }

    fn hermite_fn(n: usize, c: &QContext) -> SymmetricLaurentFn {
        let c = *c;
        SymmetricLaurentFn::from_x(move |x| hermite_eval_c(n, x, &c))
    }

    fn sup(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        xs.iter().map(|&x| f(x).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn eigenvalue_examples() {
        let c = ctx(0.5);
        assert!((eigenvalue(Kind::T, 0, 2.0, &c) - 0.0883883476).abs() < 1e-9);
        for m in 0..5 {
            for &a in &[0.3, 1.0, 2.5] {
                assert_eq!(eigenvalue(Kind::S, m, a, &c), eigenvalue(Kind::T, m, a, &c));
                assert!(eigenvalue(Kind::T, m + 1, a, &c) < eigenvalue(Kind::T, m, a, &c));
            }
            assert!((eigenvalue(Kind::F, m, 1e-14, &c) - 1.0).abs() < 1e-12);
        }
        assert!((eigenvalue(Kind::F, 2, 1.0, &c) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_reproduces_eigenvalues() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            for &a in &[0.5, 1.0, 2.3] {
                for m in [0usize, 1, 3] {
                    let cases = [
                        (Kind::T, g_hermite(m, &c)),
                        (Kind::S, hermite_fn(m, &c).div(&SymmetricLaurentFn::g(&c))),
                        (Kind::F, hermite_fn(m, &c)),
                    ];
                    for (kind, f) in cases {
                        let lam = eigenvalue(kind, m, a, &c);
                        let out = apply_quadrature(kind, a, &f, &c).unwrap();
                        for &x in &[-0.95, -0.3, 0.2, 0.9] {
                            let expect = lam * f.eval_x(x);
                            let got = out.eval_x(x);
                            let scale = expect.abs().max(lam * 1e-3);
                            assert!((got - expect).abs() < 1e-8 * scale, "{kind:?} q={q} a={a} m={m} x={x} {got} {expect}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn f_examples() {
        let c = ctx(0.5);
        let f = apply_quadrature(Kind::F, 1.0, &hermite_fn(2, &c), &c).unwrap();
        for x in grid(10) {
            assert!((f.eval_x(x) - 0.5 * hermite_eval(2, x, &c)).abs() < 1e-12);
        }
        // F_a e_2 - e_2 shrinks like a
        let d = |a: f64| sup(&grid(50), |x| moments_closed_form(Kind::F, 2, a, x, &c).unwrap() - x * x);
        let r = d(1e-3) / d(1e-4);
        assert!((r - 10.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn moments_match_quadrature() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            for &a in &[0.4, 1.5, 3.2] {
                for j in 0..3 {
                    for kind in [Kind::T, Kind::F] {
                        let out = apply_quadrature(kind, a, &mono(j as i32), &c).unwrap();
                        for &x in &[-1.0, -0.6, 0.2, 0.75, 1.0] {
                            let closed = moments_closed_form(kind, j, a, x, &c).unwrap();
                            let quad = out.eval_x(x);
                            assert!((closed - quad).abs() < 1e-9 * closed.abs().max(1e-2), "{kind:?} q={q} a={a} j={j} x={x} {closed} {quad}");
                        }
                    }
                }
            }
        }
        let c = ctx(0.5);
        let v = moments_closed_form(Kind::F, 2, 1.0, 0.3, &c).unwrap();
        assert!((v - (0.5 * 0.09 + 0.25 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn phi_action() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            let a = 1.3;
            for &beta in &[0.0, 0.7, 2.0] {
                let act = action_phi_beta(a, beta, PhiVariant::Minus, &c).unwrap();
                let f = SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &c) / g_shift_eval_c(x, beta, &c));
                let out = apply_quadrature(Kind::T, a, &f, &c).unwrap();
                for &x in &[-0.9, 0.0, 0.6, 1.0] {
                    let expect = act.scalar * phi_basis_eval(act.order, x, PhiVariant::Minus, &c);
                    assert!((out.eval_x(x) - expect).abs() < 1e-8 * expect.abs().max(1e-3));
                }
            }
            // beta = 0 agrees with the e_0 closed form
            let act = action_phi_beta(a, 0.0, PhiVariant::Minus, &c).unwrap();
            for &x in &[-0.5, 0.4] {
                let e0 = moments_closed_form(Kind::T, 0, a, x, &c).unwrap();
                assert!((act.scalar * phi_basis_eval(a, x, PhiVariant::Minus, &c) - e0).abs() < 1e-12 * e0.abs());
            }
            let zero = action_phi_beta(0.0, 1.5, PhiVariant::Minus, &c).unwrap();
            assert!((zero.scalar - 1.0).abs() < 1e-14 && zero.order == 1.5);
            assert!(action_phi_beta(a, 0.0, PhiVariant::Plus, &c).is_err());
        }
    }

    #[test]
    fn qexp_action() {
        let c = ctx(0.5);
        let (s, t1) = action_qexp(1.0, 0.3, &c).unwrap();
        let f = SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &c) * qexp_eval(x.re, 0.3, &c).unwrap());
        let out = apply_quadrature(Kind::T, 1.0, &f, &c).unwrap();
        for &x in &[-0.8, 0.1, 0.9] {
            let expect = s * g_eval(x, &c) * qexp_eval(x, t1, &c).unwrap();
            assert!((out.eval_x(x) - expect).abs() < 1e-8 * expect.abs());
        }
        // E_q(x; 0) = 1, so t = 0 is the m = 0 eigenrelation T_a g = c^a g
        let (s0, t0) = action_qexp(1.7, 0.0, &c).unwrap();
        assert!((s0 - eigenvalue(Kind::T, 0, 1.7, &c)).abs() < 1e-15 && t0 == 0.0);
        assert_eq!(action_qexp(0.0, 0.4, &c).unwrap(), (1.0, 0.4));
        assert!(action_qexp(1.0, 1.0, &c).is_err());
    }

    #[test]
    fn generator_examples_and_finite_differences() {
        let c = ctx(0.5);
        let h0 = HermiteSeries::unit(0, c);
        assert_eq!(generator_apply(Kind::F, &h0).coeffs, vec![0.0]);
        let t = generator_apply(Kind::T, &h0).coeffs[0];
        assert!((t - (0.5 * 0.5f64.powf(-0.25) / 2.0).ln()).abs() < 1e-15);
        let s = HermiteSeries::new(vec![1.0, -0.5, 0.25, 0.1], c);
        for kind in [Kind::T, Kind::F] {
            let j = generator_apply(kind, &s);
            let ws = WeightedSeries::new(EigenTag::of(kind), s.clone());
            let err = |a: f64| {
                let d = apply_spectral(kind, a, &ws).unwrap().series.add(&s.scale(-1.0)).scale(1.0 / a);
                d.add(&j.scale(-1.0)).norm_sq().sqrt()
            };
            let (e2, e3, e4) = (err(1e-2), err(1e-3), err(1e-4));
            assert!(e3 < e2 && e4 < e3);
            assert!((e2 / e3).log10() > 0.9 && (e3 / e4).log10() > 0.9);
        }
    }

    #[test]
    fn spectral_and_quadrature_agree_on_polynomials() {
        let c = ctx(0.5);
        let rule = QuadratureRule::default_rule();
        let p = HermiteSeries::from_monomials(&[0.3, -1.0, 0.5, 0.0, 0.2, 0.1, -0.3, 0.05, 0.4], c);
        for kind in [Kind::T, Kind::S, Kind::F, Kind::G] {
            let ws = WeightedSeries::new(EigenTag::of(kind), p.clone());
            let spec = apply(kind, 1.3, &Operand::Series(ws.clone()), Backend::Spectral, &rule, &c).unwrap();
            let quad = apply(kind, 1.3, &Operand::Series(ws), Backend::Quadrature, &rule, &c).unwrap();
            let e = sup(&grid(40), |x| spec.eval(x) - quad.eval(x));
            assert!(e < 1e-8, "{kind:?} {e}");
        }
        // a plain polynomial is not of the form g * (short series)
        let err = apply(Kind::T, 1.0, &Operand::Function(mono(2)), Backend::Spectral, &rule, &ctx(0.8));
        assert!(matches!(err, Err(Error::NotExpressible { .. })));
        let wrong = WeightedSeries::new(EigenTag::H, p);
        assert!(apply_spectral(Kind::T, 1.0, &wrong).is_err());
    }

    #[test]
    fn semigroup_law() {
        let c = ctx(0.5);
        let fs = [mono(0), mono(1), mono(2), g_hermite(3, &c)];
        let xs = grid(20);
        for kind in [Kind::T, Kind::S, Kind::F] {
            for &a in &[0.5, 1.0, 1.7] {
                for &b in &[0.5, 1.0, 1.7] {
                    let rule = nystrom_rule(&[a, b], &c).unwrap();
                    let nb = NystromOperator::new(kind, b, &rule, &c).unwrap();
                    let na = NystromOperator::new(kind, a, &rule, &c).unwrap();
                    for f in &fs {
                        let v: Vec<f64> = nb.points().iter().map(|&y| f.eval_x(y)).collect();
                        let inner = nb.apply_values(&v);
                        let direct = apply_quadrature(kind, a + b, f, &c).unwrap();
                        let e = sup(&xs, |x| na.eval_at(x, &inner) - direct.eval_x(x));
                        assert!(e < 1e-7, "{kind:?} a={a} b={b} {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn order_lowering() {
        let c = ctx(0.5);
        let xs = grid(16);
        let f = g_hermite(0, &c).add(&g_hermite(2, &c).scale(0.3));
        let fs = hermite_fn(0, &c).add(&hermite_fn(2, &c).scale(0.3)).div(&SymmetricLaurentFn::g(&c));
        let ff = hermite_fn(1, &c).add(&hermite_fn(3, &c).scale(-0.4));
        for &a in &[1.5, 2.2] {
            let lhs = dq_fn(&apply_quadrature(Kind::T, a, &f, &c).unwrap(), &c);
            let rhs = apply_quadrature(Kind::T, a - 1.0, &f, &c).unwrap();
            assert!(sup(&xs, |x| lhs.eval_x(x) - rhs.eval_x(x)) < 1e-7);
            let lhs = cq_fn(&apply_quadrature(Kind::S, a, &fs, &c).unwrap(), &c);
            let rhs = apply_quadrature(Kind::S, a - 1.0, &fs, &c).unwrap();
            assert!(sup(&xs, |x| lhs.eval_x(x) - rhs.eval_x(x)) < 1e-7);
            let lhs = bq_fn(&apply_quadrature(Kind::G, a, &ff, &c).unwrap(), &c);
            let rhs = apply_quadrature(Kind::G, a - 1.0, &ff, &c).unwrap();
            assert!(sup(&xs, |x| lhs.eval_x(x) - rhs.eval_x(x)) < 1e-7);
        }
    }

    #[test]
    fn commutation_and_product_identity() {
        let c = ctx(0.5);
        let xs = grid(16);
        let coeffs = [0.2, -0.7, 0.4, 1.0, -0.3, 0.25, 0.6];
        let p = SymmetricLaurentFn::from_x(move |x| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |s, &k| s * x + k));
        let dp = dq_fn(&p, &c);
        let xp = p.mul(&SymmetricLaurentFn::from_x(|x| x));
        for &a in &[1.5, 2.5] {
            let lhs = dq_fn(&apply_quadrature(Kind::F, a, &p, &c).unwrap(), &c);
            let fa_dp = apply_quadrature(Kind::F, a, &dp, &c).unwrap();
            let e = sup(&xs, |x| lhs.eval_x(x) - c.q.powf(a / 2.0) * fa_dp.eval_x(x));
            assert!(e < 1e-7, "commutation a={a} {e}");

            let b = a - 1.0;
            let f_mx = apply_quadrature(Kind::F, b, &xp, &c).unwrap();
            let f_p = apply_quadrature(Kind::F, b, &p, &c).unwrap();
            let k = 4.0 / ((1.0 - c.q) * (1.0 - c.q.powf(b)));
            let e = sup(&xs, |x| fa_dp.eval_x(x) - k * (f_mx.eval_x(x) - c.q.powf(b / 2.0) * x * f_p.eval_x(x)));
            assert!(e < 1e-7, "product identity a={a} {e}");
        }
    }

    #[test]
    fn kernel_positivity() {
        for &q in &[0.3, 0.5, 0.8] {
            let c = ctx(q);
            for &a in &[0.1, 1.0, 3.0] {
                for kind in [Kind::T, Kind::S, Kind::F] {
                    let spec = KernelSpec::new(kind, a, &c).unwrap();
                    assert!(spec.prefactor > 0.0);
                    for x in grid(12) {
                        let z = z_of_x(x);
                        let sings = integrand_singularities(a, z, &c).unwrap();
                        let rule = QuadratureRule::graded(0.0, PI, &sings, &[]).unwrap();
                        assert!(rule.nodes.iter().all(|&p| spec.value(x, p.cos(), &c) > 0.0));
                    }
                }
            }
            let rule = nystrom_rule(&[1.0], &c).unwrap();
            let n = NystromOperator::new(Kind::T, 1.0, &rule, &c).unwrap();
            assert!(n.matrix.iter().flatten().all(|&m| m > 0.0));
        }
    }

    #[test]
    fn identity_limit_is_first_order() {
        let c = ctx(0.5);
        let xs = grid(100);
        for kind in [Kind::T, Kind::F] {
            for j in 0..3 {
                if kind == Kind::F && j == 0 {
                    assert_eq!(moments_closed_form(kind, 0, 0.1, 0.3, &c).unwrap(), 1.0);
                    continue;
                }
                let err = |a: f64| sup(&xs, |x| moments_closed_form(kind, j, a, x, &c).unwrap() - x.powi(j as i32));
                let e: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&a| err(a)).collect();
                let slope = (e[0] / e[2]).log10() / 2.0;
                assert!((slope - 1.0).abs() < 0.15, "{kind:?} j={j} slope={slope}");
            }
        }
        // quadrature at small order stays consistent with the closed form
        let out = apply_quadrature(Kind::T, 1e-2, &mono(2), &c).unwrap();
        for &x in &[-0.7, 0.5] {
            let closed = moments_closed_form(Kind::T, 2, 1e-2, x, &c).unwrap();
            assert!((out.eval_x(x) - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn adjointness_and_conjugation() {
        let c = ctx(0.5);
        let a = 1.2;
        let rule = QuadratureRule::default_rule();
        let f = SymmetricLaurentFn::from_x(|x| 1.0 + x * x * x);
        let h = SymmetricLaurentFn::from_x(|x| (x * 0.7).exp());
        let tf = apply_quadrature(Kind::T, a, &f, &c).unwrap();
        let sh = apply_quadrature(Kind::S, a, &h, &c).unwrap();
        let inner = |u: &dyn Fn(f64) -> f64, v: &dyn Fn(f64) -> f64| rule.integrate(|t| u(t.cos()) * v(t.cos()) * weight_sin(t, &c));
        let l = inner(&|x| tf.eval_x(x), &|x| h.eval_x(x));
        let r = inner(&|x| f.eval_x(x), &|x| sh.eval_x(x));
        assert!((l - r).abs() < 1e-8 * l.abs());

        let g2 = SymmetricLaurentFn::g(&c).mul(&SymmetricLaurentFn::g(&c));
        let conj = apply_quadrature(Kind::T, a, &h.mul(&g2), &c).unwrap();
        for &x in &[-0.9, 0.0, 0.8] {
            let s = sh.eval_x(x);
            assert!((conj.eval_x(x) / g_eval(x, &c).powi(2) - s).abs() < 1e-8 * s.abs());
        }
    }

    #[test]
    fn qexp_intertwining() {
        let c = ctx(0.5);
        let (a, t) = (1.0, 0.4);
        let rule = QuadratureRule::default_rule();
        let f = SymmetricLaurentFn::from_x(|x| 1.0 + 0.5 * x - x * x);
        let tf = apply_quadrature(Kind::T, a, &f, &c).unwrap();
        let (s, t1) = action_qexp(a, t, &c).unwrap();
        let lhs = rule.integrate(|p| {
            let x = p.cos();
            qexp_eval(x, t, &c).unwrap() * tf.eval_x(x) / g_eval(x, &c) * weight_sin(p, &c)
        });
        let rhs = s * rule.integrate(|p| {
            let x = p.cos();
            qexp_eval(x, t1, &c).unwrap() * f.eval_x(x) / g_eval(x, &c) * weight_sin(p, &c)
        });
        assert!((lhs - rhs).abs() < 1e-8 * lhs.abs());
    }

    #[test]
    fn inversion_round_trips() {
        for &q in &[0.3, 0.8] {
            let c = ctx(q);
            let p = mono(3).add(&mono(1).scale(-0.5));
            for kind in [Kind::T, Kind::S] {
                let img = apply_quadrature(kind, 1.7, &p, &c).unwrap();
                let back = invert(kind, 1.7, &Operand::Function(img), TestClass::Polynomial(6), &c).unwrap();
                let e = sup(&grid(24), |x| back.eval(x) - p.eval_x(x));
                assert!(e < 1e-7, "{kind:?} q={q} {e}");
            }
        }
        let c = ctx(0.5);
        let xs = grid(24);
        let coeffs = [0.5, -0.2, 1.0, 0.3, -0.6, 0.1, 0.4];
        let p = SymmetricLaurentFn::from_x(move |x| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |s, &k| s * x + k));
        for &a in &[0.6, 1.0, 1.5, 2.3] {
            for kind in [Kind::T, Kind::S] {
                let img = apply_quadrature(kind, a, &p, &c).unwrap();
                let back = invert(kind, a, &Operand::Function(img), TestClass::Polynomial(6), &c)
                    .unwrap_or_else(|e| panic!("{kind:?} a={a} {e}"));
                let e = sup(&xs, |x| back.eval(x) - p.eval_x(x));
                assert!(e < 1e-7, "{kind:?} a={a} {e}");
            }
        }
        // eigen chain on g H_2
        let f = g_hermite(2, &c);
        let img = apply_quadrature(Kind::T, 1.0, &f, &c).unwrap();
        let back = invert(Kind::T, 1.0, &Operand::Function(img), TestClass::Eigen, &c).unwrap();
        assert!(sup(&xs, |x| back.eval(x) - f.eval_x(x)) < 1e-7);
        let f = hermite_fn(2, &c).add(&hermite_fn(0, &c).scale(0.4)).div(&SymmetricLaurentFn::g(&c));
        let img = apply_quadrature(Kind::S, 1.5, &f, &c).unwrap();
        let back = invert(Kind::S, 1.5, &Operand::Function(img), TestClass::Eigen, &c).unwrap();
        assert!(sup(&xs, |x| back.eval(x) - f.eval_x(x)) < 1e-7 * sup(&xs, |x| f.eval_x(x)));
    }

    #[test]
    fn f_inversion() {
        let c = ctx(0.5);
        let a = 1.5;
        let h3 = WeightedSeries::new(EigenTag::H, HermiteSeries::unit(3, c));
        let img = apply_spectral(Kind::F, a, &h3).unwrap();
        assert!((img.series.coeffs[3] - c.q.powf(2.25)).abs() < 1e-16);
        let back = invert(Kind::F, a, &Operand::Series(img), TestClass::Eigen, &c).unwrap();
        match back {
            Applied::Series(s) => assert!((s.series.coeffs[3] - 1.0).abs() < 1e-14),
            _ => unreachable!(),
        }
        // slowly decaying data is not in the range
        let bad = HermiteSeries::new((0..30).map(|n| 0.9f64.powi(n)).collect(), c);
        assert!(matches!(invert_f(a, &bad), Err(Error::ConditionFailed { .. })));
        let tiny = invert_f(1e-12, &HermiteSeries::new(vec![1.0, 2.0, 3.0], c)).unwrap();
        assert!((tiny.coeffs[2] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn contraction_examples() {
        for (q, peak, thr) in [(0.3, 1.5303, 3.8413), (0.5, 1.4939, 3.5668), (0.8, 1.4811, 3.4701)] {
            let c = ctx(q);
            assert!(contraction_profile(0.0, &c).abs() < 1e-14);
            let r = find_c(&c).unwrap();
            assert!((r.peak - peak).abs() < 1e-3, "{q} {:?}", r);
            assert!((r.threshold - thr).abs() < 1e-3, "{q} {:?}", r);
            for i in 0..50 {
                let a = 0.1 * i as f64;
                assert!(contraction_h_second(a, &c) < 0.0);
            }
            // sup of the e_0 closed form beyond the threshold
            let a = r.threshold + 0.1;
            let s = (0..=1000)
                .map(|i| moments_closed_form(Kind::T, 0, a, -1.0 + i as f64 / 500.0, &c).unwrap())
                .fold(0.0, f64::max);
            assert!(s < 1.0);
            assert!((s.ln() - contraction_profile(a, &c)).abs() < 1e-10);
        }
        assert!(find_c(&ctx(0.01)).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let c = ctx(0.5);
        assert_eq!(resolvent_multiplier(0, 3.0), 1.0);
        assert!((resolvent_multiplier(2, 10.0) - 10.0 / 11.0).abs() < 1e-15);
        let e2 = HermiteSeries::from_monomials(&[0.0, 0.0, 1.0], c);
        let mut last = f64::INFINITY;
        for &y in &[1.0, 10.0, 100.0, 1000.0] {
            let d = resolvent_limit(Kind::T, &e2, y).unwrap().add(&e2.scale(-1.0)).norm_sq().sqrt();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn complex_evaluation_stays_in_annulus() {
        let c = ctx(0.5);
        let out = apply_quadrature(Kind::F, 0.5, &mono(1), &c).unwrap();
        let z = z_of_x(0.2) * c.q.sqrt();
        assert!(out.eval_z(z).re.is_nan());
        assert!(apply_at(Kind::F, 0.5, &mono(1), z, &c).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn positivity_preserved(q in 0.2f64..0.85, a in 0.2f64..3.0, s in 0.0f64..2.0) {
            let c = ctx(q);
            let f = SymmetricLaurentFn::from_x(move |x| (x - s * 0.5) * (x - s * 0.5));
            for kind in [Kind::T, Kind::S, Kind::F] {
                let out = apply_quadrature(kind, a, &f, &c).unwrap();
                for x in grid(8) {
                    prop_assert!(out.eval_x(x) >= 0.0);
                }
            }
        }

        #[test]
        fn phi_scalars_telescope(q in 0.2f64..0.85, a in 0.0f64..3.0, b in 0.0f64..3.0, beta in 0.0f64..3.0) {
            let c = ctx(q);
            let first = action_phi_beta(b, beta, PhiVariant::Minus, &c).unwrap();
            let second = action_phi_beta(a, first.order, PhiVariant::Minus, &c).unwrap();
            let both = action_phi_beta(a + b, beta, PhiVariant::Minus, &c).unwrap();
            prop_assert!((first.scalar * second.scalar - both.scalar).abs() < 1e-12 * both.scalar);
            prop_assert!((second.order - both.order).abs() < 1e-12);
        }

        #[test]
        fn spectral_semigroup_law(q in 0.2f64..0.85, a in 0.1f64..3.0, b in 0.1f64..3.0,
                                  coeffs in proptest::collection::vec(-1.0f64..1.0, 1..12)) {
            let c = ctx(q);
            for kind in [Kind::T, Kind::S, Kind::F, Kind::G] {
                let ws = WeightedSeries::new(EigenTag::of(kind), HermiteSeries::new(coeffs.clone(), c));
                let ab = apply_spectral(kind, a, &apply_spectral(kind, b, &ws).unwrap()).unwrap();
                let direct = apply_spectral(kind, a + b, &ws).unwrap();
                for (u, v) in ab.series.coeffs.iter().zip(&direct.series.coeffs) {
                    prop_assert!((u - v).abs() < 1e-14);
                }
            }
        }
    }
}
