//! Dual integral equations
//!
//! ```text
//! T_a psi = k_a F  on (-1, 0),    T_b psi = k_b G  on (0, 1),    k_s = c^s (q^s; q)_inf
//! ```
//!
//! solved for `psi` by reducing to a single `T` inversion. Equal orders and
//! integer gaps are explicit; other gaps go through a first-kind equation on
//! one half of the interval.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::awop::{dq_fn, z_of_x, SymmetricLaurentFn};
use crate::error::{param, Error, Result};
use crate::qcore::{qpoch_real, Order, QContext};
use crate::qhermite::{g_eval, g_eval_c, hermite_eval, hermite_eval_c, weight_sin, Projector};
use crate::quadrature::{QuadratureRule, PANEL_NODES, PANEL_RATIO};
use crate::semigroups::{
    apply_at, apply_fixed_rule, c_factor, invert, nystrom_rule, resolving_distance, Applied, Kind, NystromOperator, Operand,
    TestClass,
};

/// Gauss-Legendre nodes on the half interval for the first-kind equation.
pub const NYSTROM_NODES: usize = 64;
/// Degree of the polynomial `u` in the unknown `g u` of the first-kind equation.
pub const FREDHOLM_DEGREE: usize = 12;
/// Largest condition number accepted for the reduced first-kind system.
pub const MAX_CONDITION: f64 = 1e12;

const INTEGER_GAP_TOL: f64 = 1e-12;
const SAMPLES: usize = 129;

/// `c^s (q^s; q)_inf`.
pub fn order_scale(s: f64, ctx: &QContext) -> f64 {
    c_factor(ctx).powf(s) * qpoch_real(ctx.q.powf(s), ctx.q, Order::Infinite, ctx.eps_product)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualCase {
    /// `a > b`, non-integer gap: first-kind equation for `g` on `(-1, 0)`.
    A,
    /// `a = b`.
    B,
    /// `a < b`, non-integer gap: first-kind equation for `f` on `(0, 1)`.
    C,
    /// `a - b` a positive integer.
    D,
    /// `b - a` a positive integer.
    E,
}

impl DualCase {
    pub fn classify(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(param("a, b", "orders must be positive"));
        }
        let gap = a - b;
        let k = gap.round();
        Ok(if gap.abs() <= INTEGER_GAP_TOL {
            Self::B
        } else if (gap - k).abs() <= INTEGER_GAP_TOL {
            if k > 0.0 {
                Self::D
            } else {
                Self::E
            }
        } else if gap > 0.0 {
            Self::A
        } else {
            Self::C
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
            Self::E => "e",
        }
    }
}

/// Boundary data, orders, output grid and the class assumed for `psi`.
#[derive(Clone)]
pub struct DualProblem {
    /// `F` on `(-1, 0)`.
    pub f: SymmetricLaurentFn,
    /// `G` on `(0, 1)`.
    pub g: SymmetricLaurentFn,
    pub a: f64,
    pub b: f64,
    pub grid: Vec<f64>,
    pub class: TestClass,
    pub nodes: usize,
    pub degree: usize,
}

impl DualProblem {
    pub fn new(f: SymmetricLaurentFn, g: SymmetricLaurentFn, a: f64, b: f64, grid: Vec<f64>) -> Result<Self> {
        DualCase::classify(a, b)?;
        if grid.iter().any(|x| !(-1.0..=1.0).contains(x)) {
            return Err(Error::OutOfDomain("grid must lie in [-1, 1]".into()));
        }
        check_continuous("F", &f, -1.0, 0.0)?;
        check_continuous("G", &g, 0.0, 1.0)?;
        Ok(Self {
            f,
            g,
            a,
            b,
            grid,
            class: TestClass::Eigen,
            nodes: NYSTROM_NODES,
            degree: FREDHOLM_DEGREE,
        })
    }

    pub fn with_class(mut self, class: TestClass) -> Self {
        self.class = class;
        self
    }

    pub fn case(&self) -> DualCase {
        DualCase::classify(self.a, self.b).expect("validated on construction")
    }
}

/// Finite values and no isolated jumps on a fine sample of the open interval.
fn check_continuous(name: &str, f: &SymmetricLaurentFn, lo: f64, hi: f64) -> Result<()> {
    let v: Vec<f64> = (1..=SAMPLES)
        .map(|i| f.eval_x(lo + (hi - lo) * i as f64 / (SAMPLES + 1) as f64))
        .collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data(format!("{name} is not finite on its interval")));
    }
    // a jump is a step far larger than both neighbouring steps
    let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for i in 0..d.len() {
        let left = if i > 0 { d[i - 1] } else { 0.0 };
        let right = d.get(i + 1).copied().unwrap_or(0.0);
        let local = v[i].abs().max(v[i + 1].abs());
        if d[i] > 20.0 * left.max(right) + 1e-3 * local {
            return Err(Error::Data(format!("{name} looks discontinuous (step {:.3e})", d[i])));
        }
    }
    Ok(())
}

/// The split data and the assembled right side `T_order psi = assembled`.
#[derive(Clone)]
pub struct PiecewiseData {
    pub f1: SymmetricLaurentFn,
    pub f2: Option<SymmetricLaurentFn>,
    pub g1: Option<SymmetricLaurentFn>,
    pub g2: SymmetricLaurentFn,
    pub order: f64,
    pub assembled: SymmetricLaurentFn,
    /// Diagnostics of the first-kind solve in cases (a) and (c).
    pub fredholm: Option<FredholmReport>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FredholmReport {
    pub condition: f64,
    pub rank: usize,
    pub size: usize,
    pub residual: f64,
}

fn indicator(f: &SymmetricLaurentFn, left: bool) -> SymmetricLaurentFn {
    let f = f.clone();
    SymmetricLaurentFn::real_only(move |x| if (x < 0.0) == left { f.eval_x(x) } else { 0.0 })
}

fn join(left: SymmetricLaurentFn, right: SymmetricLaurentFn, sl: f64, sr: f64) -> SymmetricLaurentFn {
    SymmetricLaurentFn::real_only(move |x| if x < 0.0 { sl * left.eval_x(x) } else { sr * right.eval_x(x) })
}

/// `D_q^k f`, going through a polynomial fit on `(lo, hi)` when `f` is only
/// known on the real line.
fn lowered(f: &SymmetricLaurentFn, k: usize, lo: f64, hi: f64, ctx: &QContext) -> Result<SymmetricLaurentFn> {
    let mut out = if f.analytic { f.clone() } else { polynomial_extension(f, lo, hi)? };
    for _ in 0..k {
        out = dq_fn(&out, ctx);
    }
    Ok(out)
}

const EXTENSION_DEGREE: usize = 24;

/// Chebyshev least-squares fit on `(lo, hi)`, usable at complex `x`.
fn polynomial_extension(f: &SymmetricLaurentFn, lo: f64, hi: f64) -> Result<SymmetricLaurentFn> {
    let n = 4 * EXTENSION_DEGREE;
    let s_of = move |x: Complex64| (2.0 * x - (lo + hi)) / (hi - lo);
    let pts: Vec<f64> = (0..n)
        .map(|i| {
            let s = (PI * (i as f64 + 0.5) / n as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * s
        })
        .collect();
    let mut m = DMatrix::zeros(n, EXTENSION_DEGREE + 1);
    for (i, &x) in pts.iter().enumerate() {
        let s = s_of(Complex64::new(x, 0.0)).re;
        for k in 0..=EXTENSION_DEGREE {
            m[(i, k)] = (k as f64 * s.acos()).cos();
        }
    }
    let rhs = DVector::from_iterator(n, pts.iter().map(|&x| f.eval_x(x)));
    let coef = m.clone().svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::Data(e.to_string()))?;
    let fit_err = (&m * &coef - &rhs).amax();
    if fit_err > 1e-9 * rhs.amax().max(1.0) {
        return Err(Error::Data(format!("boundary data not smooth enough to extend (fit error {fit_err:.3e})")));
    }
    let coef: Vec<f64> = coef.iter().copied().collect();
    Ok(SymmetricLaurentFn::from_x(move |x| {
        let s = s_of(x);
        let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &c in coef.iter().skip(1).rev() {
            let b0 = 2.0 * s * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        s * b1 - b2 + coef[0]
    }))
}

/// Legendre `P_0..P_d` at `s`.
fn legendre(d: usize, s: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(d + 1);
    p.push(1.0);
    if d >= 1 {
        p.push(s);
    }
    for k in 2..=d {
        let v = ((2 * k - 1) as f64 * s * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
        p.push(v);
    }
    p
}

/// Solve `k_small T_gap (unknown + known) = k_big data` on one half of the
/// interval for `unknown = g u`, `u` a polynomial of degree `degree`.
struct HalfProblem<'a> {
    gap: f64,
    left: bool,
    k_small: f64,
    k_big: f64,
    data: &'a SymmetricLaurentFn,
    known: &'a SymmetricLaurentFn,
    nodes: usize,
    degree: usize,
}

impl HalfProblem<'_> {
    fn solve(&self, ctx: &QContext) -> Result<(SymmetricLaurentFn, FredholmReport)> {
        let (lo, hi) = if self.left { (0.5 * PI, PI) } else { (0.0, 0.5 * PI) };
        let dist = resolving_distance(&[self.gap], ctx)?;
        let panels = ((hi - lo) / (PANEL_RATIO * dist)).ceil() as usize;
        let rule = if panels * PANEL_NODES <= self.nodes {
            QuadratureRule::gauss_legendre(self.nodes, lo, hi)?
        } else {
            let breaks: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
            QuadratureRule::composite(&breaks, PANEL_NODES)?
        };
        let other = QuadratureRule::uniform_for_distance(PI - hi, PI - lo, dist)?;
        let known_half = indicator(self.known, !self.left);
        // x in (-1, 0) maps to s = 2x + 1, x in (0, 1) to s = 2x - 1
        let shift = if self.left { 1.0 } else { -1.0 };
        let n = rule.len();
        let d = self.degree;
        let basis: Vec<Vec<f64>> = rule
            .nodes
            .iter()
            .map(|&p| {
                let y = p.cos();
                legendre(d, 2.0 * y + shift).into_iter().map(|v| v * g_eval(y, ctx)).collect()
            })
            .collect();
        let mut m = DMatrix::zeros(n, d + 1);
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            let x = rule.nodes[i].cos();
            // rows balanced by the size of the outer factor and the node weight
            let rw = (rule.weights[i] * weight_sin(rule.nodes[i], ctx)).sqrt() / g_eval(x, ctx);
            let row = NystromOperator::row(Kind::T, self.gap, x, &rule, ctx);
            for k in 0..=d {
                let s: f64 = (0..n).map(|j| row[j] * basis[j][k]).sum();
                m[(i, k)] = rw * self.k_small * s;
            }
            let tk = apply_fixed_rule(Kind::T, self.gap, &known_half, x, &other, ctx)?;
            rhs[i] = rw * (self.k_big * self.data.eval_x(x) - self.k_small * tk);
        }
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = smax / smin;
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-14 * smax).count();
        if !(condition < MAX_CONDITION) {
            return Err(Error::Nystrom { cond: condition, rank, size: d + 1 });
        }
        let coef = svd.solve(&rhs, 0.0).map_err(|e| Error::Data(e.to_string()))?;
        let residual = (&m * &coef - &rhs).amax() / rhs.amax().max(1e-300);
        let coef: Vec<f64> = coef.iter().copied().collect();
        let c = *ctx;
        let u = SymmetricLaurentFn::real_only(move |x| {
            let p = legendre(coef.len() - 1, 2.0 * x + shift);
            g_eval(x, &c) * p.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()
        });
        Ok((
            u,
            FredholmReport {
                condition,
                rank,
                size: d + 1,
                residual,
            },
        ))
    }
}

/// Split the data and assemble the right side of the single `T` equation.
pub fn assemble(p: &DualProblem, ctx: &QContext) -> Result<PiecewiseData> {
    let (a, b) = (p.a, p.b);
    let (ka, kb) = (order_scale(a, ctx), order_scale(b, ctx));
    let f1 = indicator(&p.f, true);
    let g2 = indicator(&p.g, false);
    let mut out = PiecewiseData {
        f1: f1.clone(),
        f2: None,
        g1: None,
        g2: g2.clone(),
        order: a,
        assembled: join(p.f.clone(), p.g.clone(), ka, ka),
        fredholm: None,
    };
    match p.case() {
        DualCase::B => {}
        DualCase::D => {
            let k = (a - b).round() as usize;
            let m1 = lowered(&p.f, k, -1.0, 0.0, ctx)?;
            out.order = b;
            out.assembled = join(m1, p.g.clone(), ka, kb);
        }
        DualCase::E => {
            let k = (b - a).round() as usize;
            let n2 = lowered(&p.g, k, 0.0, 1.0, ctx)?;
            out.assembled = join(p.f.clone(), n2, ka, kb);
        }
        DualCase::A => {
            let half = HalfProblem {
                gap: a - b,
                left: true,
                k_small: kb,
                k_big: ka,
                data: &p.f,
                known: &p.g,
                nodes: p.nodes,
                degree: p.degree,
            };
            let (g1, report) = half.solve(ctx)?;
            out.order = b;
            out.assembled = join(g1.clone(), p.g.clone(), kb, kb);
            out.g1 = Some(g1);
            out.fredholm = Some(report);
        }
        DualCase::C => {
            let half = HalfProblem {
                gap: b - a,
                left: false,
                k_small: ka,
                k_big: kb,
                data: &p.g,
                known: &p.f,
                nodes: p.nodes,
                degree: p.degree,
            };
            let (f2, report) = half.solve(ctx)?;
            out.assembled = join(p.f.clone(), f2.clone(), ka, ka);
            out.f2 = Some(f2);
            out.fredholm = Some(report);
        }
    }
    Ok(out)
}

pub struct DualSolution {
    pub case: DualCase,
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub solution: Applied,
    /// `sup |T_a psi / k_a - F|` on sample points of `(-1, 0)`.
    pub residual_a: f64,
    /// `sup |T_b psi / k_b - G|` on sample points of `(0, 1)`.
    pub residual_b: f64,
    pub fredholm: Option<FredholmReport>,
}

pub fn dual_solve(p: &DualProblem, ctx: &QContext) -> Result<DualSolution> {
    let data = assemble(p, ctx)?;
    let solution = invert(Kind::T, data.order, &Operand::Function(data.assembled.clone()), p.class, ctx)?;
    let psi = p.grid.iter().map(|&x| solution.eval(x)).collect();
    let (residual_a, residual_b) = certify(p, &solution, ctx)?;
    Ok(DualSolution {
        case: p.case(),
        grid: p.grid.clone(),
        psi,
        solution,
        residual_a,
        residual_b,
        fredholm: data.fredholm,
    })
}

const CHECK_POINTS: usize = 9;

/// Re-apply `T_a` and `T_b` to `psi` and compare with the data.
pub fn certify(p: &DualProblem, psi: &Applied, ctx: &QContext) -> Result<(f64, f64)> {
    let psi = psi.clone();
    let f = SymmetricLaurentFn::real_only(move |x| psi.eval(x));
    let residual = |order: f64, data: &SymmetricLaurentFn, sign: f64| -> Result<f64> {
        let k = order_scale(order, ctx);
        let mut worst: f64 = 0.0;
        for i in 1..=CHECK_POINTS {
            let x = sign * i as f64 / (CHECK_POINTS + 1) as f64;
            let v = apply_at(Kind::T, order, &f, z_of_x(x), ctx)?.re / k;
            worst = worst.max((v - data.eval_x(x)).abs());
        }
        Ok(worst)
    };
    Ok((residual(p.a, &p.f, -1.0)?, residual(p.b, &p.g, 1.0)?))
}

/// Equal orders through the printed representation: `D_q^{floor(a)+1}` applied
/// pointwise to `T_{1-{a}} h`, continued off the line by its `g`-weighted
/// Hermite fit.
pub fn case_b_direct(p: &DualProblem, ctx: &QContext) -> Result<Vec<f64>> {
    if p.case() != DualCase::B {
        return Err(param("a, b", "needs equal orders"));
    }
    let data = assemble(p, ctx)?;
    let frac = p.a - p.a.floor();
    let k = p.a.floor() as usize + 1;
    let inner = nystrom_rule(&[1.0 - frac], ctx)?;
    let w = Projector::new(48, &QuadratureRule::default_rule(), ctx).project(|x| {
        apply_fixed_rule(Kind::T, 1.0 - frac, &data.assembled, x, &inner, ctx).unwrap_or(f64::NAN) / g_eval(x, ctx)
    });
    let w = w.trimmed(1e-13);
    let c = *ctx;
    let mut out = SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &c) * w.eval_c(x));
    for _ in 0..k {
        out = dq_fn(&out, ctx);
    }
    Ok(p.grid.iter().map(|&x| out.eval_x(x)).collect())
}

/// Manufactured problem with solution `psi* = g (H_0 + 0.3 H_2)` on a 21-point grid.
/// Returns the problem and `psi*`.
pub fn manufactured(a: f64, b: f64, ctx: &QContext) -> Result<(DualProblem, impl Fn(f64) -> f64 + Clone)> {
    let cc = *ctx;
    let q = ctx.q;
    let side = move |s: f64| {
        let den = qpoch_real(q.powf(s), q, Order::Infinite, 1e-16);
        SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &cc) * (1.0 + 0.3 * q.powf(s) * hermite_eval_c(2, x, &cc)) / den)
    };
    let grid: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
    let p = DualProblem::new(side(a), side(b), a, b, grid)?;
    let exact = move |x: f64| g_eval(x, &cc) * (1.0 + 0.3 * hermite_eval(2, x, &cc));
    Ok((p, exact))
}
