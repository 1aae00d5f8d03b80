//! Gauss-Legendre rules on angle intervals, plain and composite.

use gauss_quad::legendre::GaussLegendre;
use std::f64::consts::PI;

use crate::error::{param, Result};

/// Nodes and positive weights on an interval of the angle variable.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A complex singularity of an integrand: real position and distance
/// from the real axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singularity {
    pub position: f64,
    pub distance: f64,
}

/// Default node count for the plain rule on `(0, pi)`.
pub const DEFAULT_NODES: usize = 256;
/// Nodes per panel of the composite rules.
pub const PANEL_NODES: usize = 16;
/// Largest ratio `panel length / distance to singularity`.
pub const PANEL_RATIO: f64 = 1.5;

fn reference(n: usize) -> Result<Vec<(f64, f64)>> {
    let gl = GaussLegendre::new(n).map_err(|e| param("nodes", e.to_string()))?;
    let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gauss-Legendre with `n` nodes mapped to `(lo, hi)`.
    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(param("interval", "empty"));
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let pairs = reference(n)?;
        Ok(Self {
            nodes: pairs.iter().map(|&(x, _)| mid + half * x).collect(),
            weights: pairs.iter().map(|&(_, w)| half * w).collect(),
        })
    }

    /// `n`-node Gauss-Legendre on `(0, pi)`.
    pub fn on_half_circle(n: usize) -> Result<Self> {
        Self::gauss_legendre(n, 0.0, PI)
    }

    pub fn default_rule() -> Self {
        Self::on_half_circle(DEFAULT_NODES).expect("256 nodes is a valid degree")
    }

    /// Composite rule with `per_panel` nodes on each of the given panels.
    pub fn composite(breaks: &[f64], per_panel: usize) -> Result<Self> {
        let pairs = reference(per_panel)?;
        let mut nodes = Vec::with_capacity(per_panel * breaks.len());
        let mut weights = Vec::with_capacity(per_panel * breaks.len());
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                continue;
            }
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(x, wt) in &pairs {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Uniform composite rule on `(lo, hi)` with panels no longer than
    /// `PANEL_RATIO * min_distance`.
    pub fn uniform_for_distance(lo: f64, hi: f64, min_distance: f64) -> Result<Self> {
        if !(min_distance > 0.0) {
            return Err(param("distance", "must be positive"));
        }
        let panels = ((hi - lo) / (PANEL_RATIO * min_distance)).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
            .collect();
        Self::composite(&breaks, PANEL_NODES)
    }

    /// Composite rule on `(lo, hi)` refined by bisection until each panel is no
    /// longer than `PANEL_RATIO` times its distance to every listed singularity.
    /// `breakpoints` are forced panel ends.
    pub fn graded(lo: f64, hi: f64, sings: &[Singularity], breakpoints: &[f64]) -> Result<Self> {
        let mut ends = vec![lo, hi];
        ends.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let mut breaks = vec![lo];
        for w in ends.windows(2) {
            refine(w[0], w[1], sings, &mut breaks, 0);
        }
        Self::composite(&breaks, PANEL_NODES)
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn panel_ok(lo: f64, hi: f64, sings: &[Singularity]) -> bool {
    let len = hi - lo;
    sings.iter().all(|s| {
        let dx = if s.position < lo {
            lo - s.position
        } else if s.position > hi {
            s.position - hi
        } else {
            0.0
        };
        let dist = (dx * dx + s.distance * s.distance).sqrt();
        len <= PANEL_RATIO * dist
    })
}

fn refine(lo: f64, hi: f64, sings: &[Singularity], breaks: &mut Vec<f64>, depth: usize) {
    if depth >= 60 || panel_ok(lo, hi, sings) {
        breaks.push(hi);
        return;
    }
    let mid = 0.5 * (lo + hi);
    refine(lo, mid, sings, breaks, depth + 1);
    refine(mid, hi, sings, breaks, depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rule_is_exact_on_polynomials() {
        let r = QuadratureRule::default_rule();
        assert_eq!(r.len(), 256);
        assert!(r.nodes.iter().all(|&t| t > 0.0 && t < PI));
        let v = r.integrate(|t| t.powi(5));
        assert!((v - PI.powi(6) / 6.0).abs() < 1e-10);
    }

    #[test]
    fn graded_rule_resolves_near_pole() {
        // 1/((t - 1)^2 + d^2) integrates to (atan((pi-1)/d) + atan(1/d))/d
        let d = 1e-4;
        let r = QuadratureRule::graded(0.0, PI, &[Singularity { position: 1.0, distance: d }], &[]).unwrap();
        let v = r.integrate(|t| 1.0 / ((t - 1.0).powi(2) + d * d));
        let exact = (((PI - 1.0) / d).atan() + (1.0 / d).atan()) / d;
        assert!(((v - exact) / exact).abs() < 1e-13, "{v} {exact}");
        assert!(r.len() < 1200);
    }

    #[test]
    fn uniform_rule_panel_width() {
        let r = QuadratureRule::uniform_for_distance(0.0, PI, 0.1).unwrap();
        assert_eq!(r.len() % PANEL_NODES, 0);
        assert!((r.integrate(|_| 1.0) - PI).abs() < 1e-13);
    }
}
