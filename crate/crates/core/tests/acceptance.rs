//! One line per acceptance criterion, each backed by a named verify suite run
//! at q = 0.3, 0.5, 0.8.

use std::time::{Duration, Instant};

use qfrac::verify::{run_suite, Check, DEFAULT_QS};

struct Criterion {
    id: usize,
    title: &'static str,
    suite: &'static str,
    budget: Option<Duration>,
}

const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, title: "orthogonality and normalization", suite: "orthogonality", budget: Some(Duration::from_secs(1)) },
    Criterion { id: 2, title: "Poisson and bilinear kernel identities", suite: "kernel", budget: None },
    Criterion { id: 3, title: "semigroup laws for T, S, F", suite: "semigroup", budget: Some(Duration::from_secs(30)) },
    Criterion { id: 4, title: "eigenstructure under quadrature", suite: "eigen", budget: None },
    Criterion { id: 5, title: "order lowering and commutation", suite: "lowering", budget: None },
    Criterion { id: 6, title: "closed-form moments and O(a) second moment", suite: "moments", budget: None },
    Criterion { id: 7, title: "approximation rate on cos(2x)", suite: "approximation", budget: None },
    Criterion { id: 8, title: "contraction threshold", suite: "contraction", budget: None },
    Criterion { id: 9, title: "AW connection relation and HS identity", suite: "awpoly", budget: Some(Duration::from_secs(120)) },
    Criterion { id: 10, title: "transform round trip", suite: "transform", budget: None },
    Criterion { id: 11, title: "resolvent limit", suite: "resolvent", budget: None },
    Criterion { id: 12, title: "dual equations, cases b, d, a", suite: "dual", budget: Some(Duration::from_secs(60)) },
];

const TOTAL_BUDGET: Duration = Duration::from_secs(300);

fn worst(rows: &[Check]) -> Option<&Check> {
    rows.iter().filter(|r| !r.pass).chain(rows.iter()).max_by(|a, b| (a.value / a.tol).total_cmp(&(b.value / b.tol)))
}

fn main() {
    let start = Instant::now();
    let mut failed = Vec::new();
    for c in &CRITERIA {
        let t0 = Instant::now();
        let result = run_suite(c.suite, &DEFAULT_QS);
        let took = t0.elapsed();
        let in_time = c.budget.is_none_or(|b| took < b);
        let (ok, detail) = match &result {
            Ok(rows) => {
                let ok = rows.iter().all(|r| r.pass);
                let w = worst(rows).map(|r| format!("worst {} at q={}: {:.3e} (tol {:.1e})", r.name, r.q, r.value, r.tol));
                (ok, format!("{} checks, {}", rows.len(), w.unwrap_or_default()))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = c.budget.map(|b| format!(" / {}s", b.as_secs())).unwrap_or_default();
        let verdict = if ok && in_time { "PASS" } else { "FAIL" };
        println!("[{verdict}] {:>2}. {} ({:.2}s{budget}); {detail}", c.id, c.title, took.as_secs_f64());
        if let Ok(rows) = &result {
            for r in rows.iter().filter(|r| !r.pass) {
                println!("       over tolerance: {} q={} value={:.3e} tol={:.1e}", r.name, r.q, r.value, r.tol);
            }
        }
        if !(ok && in_time) {
            failed.push(c.id);
        }
    }
    let total = start.elapsed();
    let in_time = total < TOTAL_BUDGET;
    println!("[{}] total runtime {:.1}s / {}s", if in_time { "PASS" } else { "FAIL" }, total.as_secs_f64(), TOTAL_BUDGET.as_secs());
    if !failed.is_empty() || !in_time {
        eprintln!("criteria failed: {failed:?}");
        std::process::exit(1);
    }
}
