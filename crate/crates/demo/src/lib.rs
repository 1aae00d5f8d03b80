//! wasm-bindgen exports behind `www/index.html`.
//!
//! Every curve is sampled on `samples` equispaced points of `[-1, 1]`
//! (or `[0, amax]` for the contraction profile).

use num_complex::Complex64;
use qfrac::awop::SymmetricLaurentFn;
use qfrac::qhermite::{poisson_kernel, KernelForm};
use qfrac::semigroups::{apply_quadrature, contraction_profile, find_c, Kind};
use qfrac::QContext;
use wasm_bindgen::prelude::*;

fn ctx(q: f64) -> Result<QContext, String> {
    QContext::new(q).map_err(|e| e.to_string())
}

fn grid(lo: f64, hi: f64, samples: usize) -> impl Iterator<Item = f64> {
    let n = samples.max(2);
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn input(name: &str) -> Result<SymmetricLaurentFn, String> {
    Ok(match name {
        "e0" => SymmetricLaurentFn::from_x(|_| Complex64::new(1.0, 0.0)),
        "e1" => SymmetricLaurentFn::from_x(|x| x),
        "e2" => SymmetricLaurentFn::from_x(|x| x * x),
        "cos2x" => SymmetricLaurentFn::from_x(|x| (x * 2.0).cos()),
        "exp" => SymmetricLaurentFn::from_x(|x| x.exp()),
        _ => return Err(format!("unknown input {name:?}")),
    })
}

/// `kind_a f` on the grid, for kind in T, S, F, G and the inputs listed in `input`.
pub fn semigroup_values(kind: &str, a: f64, q: f64, f: &str, samples: usize) -> Result<Vec<f64>, String> {
    let c = ctx(q)?;
    let kind: Kind = kind.parse().map_err(|e: qfrac::Error| e.to_string())?;
    let f = input(f)?;
    if a == 0.0 {
        return Ok(grid(-1.0, 1.0, samples).map(|x| f.eval_x(x)).collect());
    }
    let out = apply_quadrature(kind, a, &f, &c).map_err(|e| e.to_string())?;
    Ok(grid(-1.0, 1.0, samples).map(|x| out.eval_x(x)).collect())
}

/// Closed-form Poisson kernel `P(x, y | t)` for fixed `y`, as a function of `x`.
pub fn poisson_values(q: f64, y: f64, t: f64, samples: usize) -> Result<Vec<f64>, String> {
    let c = ctx(q)?;
    grid(-1.0, 1.0, samples)
        .map(|x| poisson_kernel(x, y, t, &c, KernelForm::Closed).map_err(|e| e.to_string()))
        .collect()
}

/// `log sup T_a e_0` on `[0, amax]`, followed by the threshold as the last entry.
pub fn contraction_values(q: f64, amax: f64, samples: usize) -> Result<Vec<f64>, String> {
    let c = ctx(q)?;
    let mut v: Vec<f64> = grid(0.0, amax, samples).map(|a| contraction_profile(a, &c)).collect();
    v.push(find_c(&c).map_err(|e| e.to_string())?.threshold);
    Ok(v)
}

#[wasm_bindgen]
pub fn semigroup_curve(kind: &str, a: f64, q: f64, f: &str, samples: usize) -> Result<Vec<f64>, JsValue> {
    semigroup_values(kind, a, q, f, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn poisson_curve(q: f64, y: f64, t: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    poisson_values(q, y, t, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn contraction_curve(q: f64, amax: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    contraction_values(q, amax, samples).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_order_is_identity() {
        let v = semigroup_values("F", 0.0, 0.5, "e2", 5).unwrap();
        for (y, e) in v.iter().zip([1.0, 0.25, 0.0, 0.25, 1.0]) {
            assert!((y - e).abs() < 1e-15);
        }
    }

    #[test]
    fn f_preserves_constants() {
        let v = semigroup_values("F", 0.8, 0.5, "e0", 9).unwrap();
        assert!(v.iter().all(|y| (y - 1.0).abs() < 1e-10), "{v:?}");
    }

    #[test]
    fn poisson_is_positive() {
        let v = poisson_values(0.5, 0.3, 0.4, 21).unwrap();
        assert!(v.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn contraction_ends_negative() {
        let v = contraction_values(0.5, 6.0, 61).unwrap();
        let (thr, h) = v.split_last().unwrap();
        assert!(*thr > 0.0 && *thr < 6.0);
        assert!(h[0].abs() < 1e-14 && *h.last().unwrap() < 0.0);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(semigroup_values("X", 1.0, 0.5, "e0", 3).is_err());
        assert!(semigroup_values("T", 1.0, 0.5, "sin", 3).is_err());
        assert!(poisson_values(1.2, 0.0, 0.1, 3).is_err());
    }
}
