//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error, 3 a `verify`
//! check over tolerance.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::awop::SymmetricLaurentFn;
use crate::dualeq::{dual_solve, manufactured, DualProblem};
use crate::qcore::{phi_basis_eval, PhiVariant, QContext};
use crate::qhermite::{
    bilinear_kernel, g_eval_c, hermite_eval, hermite_eval_c, poisson_kernel, qexp_eval, weight_eval, BilinearForm,
    HermiteSeries, KernelForm,
};
use crate::quadrature::QuadratureRule;
use crate::semigroups::{
    apply, contraction_h_second, contraction_profile, find_c, moments_closed_form, Backend, Kind, Operand, TestClass,
};
use crate::transforms::{wq_forward_pointwise, wq_forward_series, wq_invert, EntireSeries};
use crate::verify::{run_suite, DEFAULT_QS, SUITES};

pub const VERSION: &str = env!("QFRAC_GIT_DESCRIBE");

#[derive(Parser, Debug)]
#[command(name = "qfrac", version = VERSION, about = "q-fractional integral semigroups and q-Hermite tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Base of the q-calculus, 0 < q < 1.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Quadrature nodes for projections.
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    /// Hermite truncation order.
    #[arg(long, default_value_t = 48)]
    trunc: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate special functions on a list of points.
    Eval(EvalArgs),
    /// Apply T, S, F or G of order a.
    Apply(ApplyArgs),
    /// Closed-form images of 1, x, x^2.
    Moments(MomentsArgs),
    /// Run named invariant suites and print residuals.
    Verify(VerifyArgs),
    /// Contraction profile h(a) and the threshold c(q).
    Contraction(ContractionArgs),
    /// q-Gauss-Weierstrass transform.
    Gwt(GwtArgs),
    /// Solve a pair of dual integral equations.
    Dual(DualArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalFn {
    Hermite,
    Weight,
    Qexp,
    Phi,
    Poisson,
    Bilinear,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(value_enum)]
    what: EvalFn,
    #[command(flatten)]
    common: Common,
    /// Points, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    /// Evenly spaced points on [-1, 1] (N + 1 of them) instead of --x.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y: f64,
    /// Shift in phi_beta.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Sign in phi_beta.
    #[arg(long, value_enum, default_value_t = Sign::Minus)]
    sign: Sign,
    /// Index shift m in the bilinear kernel.
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, value_enum, default_value_t = KernelChoice::Closed)]
    form: KernelChoice,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelChoice {
    Closed,
    Series,
    Carlitz,
    IsmailStanton,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    T,
    S,
    F,
    G,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::T => Kind::T,
            KindArg::S => Kind::S,
            KindArg::F => Kind::F,
            KindArg::G => Kind::G,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Quadrature,
    Spectral,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[arg(long, value_enum, ignore_case = true)]
    kind: KindArg,
    #[arg(long)]
    a: f64,
    /// Built-in operand: e0, e1, e2, cos2x, exp, H<n>, gH<n> or H<n>/g.
    #[arg(long, conflicts_with = "data")]
    f: Option<String>,
    /// Two-column CSV (x, value) on [-1, 1], interpolated linearly.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendArg::Quadrature)]
    backend: BackendArg,
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long, value_enum, ignore_case = true, default_value_t = KindArg::T)]
    kind: KindArg,
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long)]
    suite: String,
    /// Bases to run at, comma separated. Defaults to 0.3, 0.5, 0.8.
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ContractionArgs {
    #[arg(long, default_value_t = 5.0)]
    amax: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Emit only c(q) and the peak of h.
    #[arg(long)]
    threshold: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GwtDir {
    Forward,
    Invert,
}

#[derive(Args, Debug)]
struct GwtArgs {
    #[arg(value_enum)]
    dir: GwtDir,
    /// Input coefficients, comma separated: Hermite coefficients for
    /// `forward`, power series coefficients for `invert`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "f")]
    coeffs: Vec<f64>,
    /// Built-in function for a pointwise forward transform at --t.
    #[arg(long, conflicts_with = "coeffs")]
    f: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DualArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    /// F on [-1, 0] as two-column CSV.
    #[arg(long, required_unless_present = "manufactured")]
    f_data: Option<PathBuf>,
    /// G on [0, 1] as two-column CSV.
    #[arg(long, required_unless_present = "manufactured")]
    g_data: Option<PathBuf>,
    /// Use the built-in problem with solution g (H_0 + 0.3 H_2).
    #[arg(long, conflicts_with_all = ["f_data", "g_data"])]
    manufactured: bool,
    /// Preimage class: eigen, poly:N or weighted:N.
    #[arg(long, default_value = "eigen")]
    class: String,
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Usage(String),
    Numeric(crate::Error),
    Io(io::Error),
    Checks,
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

#[derive(Clone, Debug)]
enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(if *v == 0.0 { 0.0 } else { *v }),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// 17 significant digits, with -0 printed as 0.
fn fmt_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    meta: Vec<(&'static str, Value)>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn meta(mut self, key: &'static str, v: Value) -> Self {
        self.meta.push((key, v));
        self
    }

    fn common(self, c: &Common) -> Self {
        self.meta("q", json!(c.q)).meta("nodes", json!(c.nodes)).meta("trunc", json!(c.trunc))
    }

    fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            Format::Json => {
                let mut meta = serde_json::Map::new();
                for (k, v) in &self.meta {
                    meta.insert((*k).to_string(), v.clone());
                }
                meta.insert("version".into(), json!(VERSION));
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let doc = json!({ "meta": meta, "columns": self.columns, "rows": rows });
                serde_json::to_writer_pretty(&mut *out, &doc)?;
                writeln!(out)
            }
        }
    }
}

fn emit(t: &Table, format: Format, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut f = File::create(p)?;
            t.write(format, &mut f)?;
        }
        None => t.write(format, stdout)?,
    }
    Ok(())
}

/// Parse argv and run. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match dispatch(cli.cmd, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
        Err(Failure::Numeric(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
        Err(Failure::Checks) => {
            let _ = writeln!(stderr, "error: residuals over tolerance");
            3
        }
    }
}

fn dispatch(cmd: Cmd, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Cmd::Eval(a) => {
            let t = eval(&a)?;
            emit(&t, a.common.format, a.common.output.as_deref(), stdout)
        }
        Cmd::Apply(a) => {
            let t = apply_cmd(&a)?;
            emit(&t, a.common.format, a.common.output.as_deref(), stdout)
        }
        Cmd::Moments(a) => {
            let t = moments(&a)?;
            emit(&t, a.common.format, a.common.output.as_deref(), stdout)
        }
        Cmd::Verify(a) => verify(&a, stdout),
        Cmd::Contraction(a) => {
            let t = contraction(&a)?;
            emit(&t, a.common.format, a.common.output.as_deref(), stdout)
        }
        Cmd::Gwt(a) => {
            let t = gwt(&a)?;
            emit(&t, a.common.format, a.common.output.as_deref(), stdout)
        }
        Cmd::Dual(a) => {
            let t = dual(&a)?;
            emit(&t, a.common.format, a.common.output.as_deref(), stdout)
        }
    }
}

fn context(c: &Common) -> Result<QContext, Failure> {
    QContext::new(c.q).map_err(|e| Failure::Usage(e.to_string()))
}

fn linspace(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 0 {
        return vec![lo];
    }
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn points(x: &[f64], grid: Option<usize>) -> Result<Vec<f64>, Failure> {
    match (grid, x.is_empty()) {
        (Some(n), _) => Ok(linspace(n, -1.0, 1.0)),
        (None, false) => Ok(x.to_vec()),
        (None, true) => Err(Failure::Usage("give points with --x or --grid".into())),
    }
}

fn eval(a: &EvalArgs) -> Result<Table, Failure> {
    let c = context(&a.common)?;
    let xs = points(&a.x, a.grid)?;
    let num = Cell::Num;
    let mut t = match a.what {
        EvalFn::Hermite => Table::new(&["n", "x", "value"]),
        EvalFn::Weight => Table::new(&["x", "value"]),
        EvalFn::Qexp => Table::new(&["x", "t", "value"]),
        EvalFn::Phi => Table::new(&["x", "beta", "value"]),
        EvalFn::Poisson => Table::new(&["x", "y", "t", "value"]),
        EvalFn::Bilinear => Table::new(&["x", "y", "t", "m", "value"]),
    };
    for &x in &xs {
        let row = match a.what {
            EvalFn::Hermite => vec![Cell::Int(a.n as i64), num(x), num(hermite_eval(a.n, x, &c))],
            EvalFn::Weight => vec![num(x), num(weight_eval(x, &c)?)],
            EvalFn::Qexp => vec![num(x), num(a.t), num(qexp_eval(x, a.t, &c)?)],
            EvalFn::Phi => {
                let v = match a.sign {
                    Sign::Plus => PhiVariant::Plus,
                    Sign::Minus => PhiVariant::Minus,
                };
                vec![num(x), num(a.beta), num(phi_basis_eval(a.beta, x, v, &c))]
            }
            EvalFn::Poisson => {
                let form = match a.form {
                    KernelChoice::Closed => KernelForm::Closed,
                    KernelChoice::Series => KernelForm::Series,
                    _ => return Err(Failure::Usage("poisson takes --form closed or series".into())),
                };
                vec![num(x), num(a.y), num(a.t), num(poisson_kernel(x, a.y, a.t, &c, form)?)]
            }
            EvalFn::Bilinear => {
                let form = match a.form {
                    KernelChoice::Closed | KernelChoice::Carlitz => BilinearForm::Carlitz,
                    KernelChoice::IsmailStanton => BilinearForm::IsmailStanton,
                    KernelChoice::Series => return Err(Failure::Usage("bilinear takes --form carlitz or ismail-stanton".into())),
                };
                let v = bilinear_kernel(x, a.y, a.t, a.m, &c, form)?;
                vec![num(x), num(a.y), num(a.t), Cell::Int(a.m as i64), num(v)]
            }
        };
        t.push(row);
    }
    Ok(t.common(&a.common))
}

/// Built-in operands by name.
fn builtin(name: &str, c: &QContext) -> Result<SymmetricLaurentFn, Failure> {
    let c = *c;
    let idx = |s: &str| s.parse::<usize>().map_err(|_| Failure::Usage(format!("unknown function `{name}`")));
    let f = match name {
        "e0" => SymmetricLaurentFn::from_x(|_| Complex64::new(1.0, 0.0)),
        "e1" => SymmetricLaurentFn::from_x(|x| x),
        "e2" => SymmetricLaurentFn::from_x(|x| x * x),
        "cos2x" => SymmetricLaurentFn::from_x(|x| (x * 2.0).cos()),
        "exp" => SymmetricLaurentFn::from_x(|x| x.exp()),
        s if s.starts_with("gH") => {
            let n = idx(&s[2..])?;
            SymmetricLaurentFn::from_x(move |x| g_eval_c(x, &c) * hermite_eval_c(n, x, &c))
        }
        s if s.starts_with('H') && s.ends_with("/g") => {
            let n = idx(&s[1..s.len() - 2])?;
            SymmetricLaurentFn::from_x(move |x| hermite_eval_c(n, x, &c) / g_eval_c(x, &c))
        }
        s if s.starts_with('H') => {
            let n = idx(&s[1..])?;
            SymmetricLaurentFn::from_x(move |x| hermite_eval_c(n, x, &c))
        }
        _ => return Err(Failure::Usage(format!("unknown function `{name}`"))),
    };
    Ok(f)
}

/// Linear interpolation through a tabulated function.
#[derive(Clone, Debug)]
struct Tabulated {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Tabulated {
    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let s = (x - x0) / (x1 - x0);
        self.ys[i - 1] * (1.0 - s) + self.ys[i] * s
    }
}

fn read_table(path: &Path, lo: f64, hi: f64) -> Result<Tabulated, Failure> {
    let bad = |m: String| Failure::Usage(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("line {} has {} fields, expected 2", i + 1, rec.len())));
        }
        let x = rec[0].parse::<f64>();
        let y = rec[1].parse::<f64>();
        match (x, y) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if i == 0 => continue,
            _ => return Err(bad(format!("line {} is not numeric", i + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(bad("need at least two rows".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad("x must be strictly increasing".into()));
    }
    if xs[0] < lo || xs[xs.len() - 1] > hi {
        return Err(bad(format!("x must lie in [{lo}, {hi}]")));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(bad("values must be finite".into()));
    }
    Ok(Tabulated { xs, ys })
}

fn apply_cmd(a: &ApplyArgs) -> Result<Table, Failure> {
    let c = context(&a.common)?;
    let f = match (&a.f, &a.data) {
        (Some(name), _) => builtin(name, &c)?,
        (None, Some(p)) => {
            let t = read_table(p, -1.0, 1.0)?;
            SymmetricLaurentFn::real_only(move |x| t.eval(x))
        }
        (None, None) => return Err(Failure::Usage("give --f or --data".into())),
    };
    let backend = match a.backend {
        BackendArg::Quadrature => Backend::Quadrature,
        BackendArg::Spectral => Backend::Spectral,
    };
    let rule = QuadratureRule::on_half_circle(a.common.nodes)?;
    let kind: Kind = a.kind.into();
    let out = apply(kind, a.a, &Operand::Function(f.clone()), backend, &rule, &c)?;
    let mut t = Table::new(&["x", "f", "value"]);
    for x in linspace(a.grid, -1.0, 1.0) {
        t.push(vec![Cell::Num(x), Cell::Num(f.eval_x(x)), Cell::Num(out.eval(x))]);
    }
    Ok(t.common(&a.common).meta("a", json!(a.a)).meta("kind", json!(format!("{kind:?}"))))
}

fn moments(a: &MomentsArgs) -> Result<Table, Failure> {
    let c = context(&a.common)?;
    let kind: Kind = a.kind.into();
    if !matches!(kind, Kind::T | Kind::F) {
        return Err(Failure::Usage("closed moments exist for T and F".into()));
    }
    let mut t = Table::new(&["x", "m0", "m1", "m2"]);
    for x in linspace(a.grid, -1.0, 1.0) {
        let mut row = vec![Cell::Num(x)];
        for j in 0..3 {
            // order zero is the identity
            let v = if a.a == 0.0 { x.powi(j as i32) } else { moments_closed_form(kind, j, a.a, x, &c)? };
            row.push(Cell::Num(v));
        }
        t.push(row);
    }
    Ok(t.common(&a.common).meta("a", json!(a.a)).meta("kind", json!(format!("{kind:?}"))))
}

fn verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let qs = if a.q.is_empty() { DEFAULT_QS.to_vec() } else { a.q.clone() };
    for &q in &qs {
        QContext::new(q).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let names: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        return Err(Failure::Usage(format!("unknown suite `{}`; one of {} or all", a.suite, SUITES.join(", "))));
    };
    let mut t = Table::new(&["suite", "check", "q", "value", "tol", "pass"]);
    let mut ok = true;
    for name in names {
        for r in run_suite(name, &qs)? {
            ok &= r.pass;
            t.push(vec![
                Cell::Text(r.suite.into()),
                Cell::Text(r.name),
                Cell::Num(r.q),
                Cell::Num(r.value),
                Cell::Num(r.tol),
                Cell::Bool(r.pass),
            ]);
        }
    }
    let t = t.meta("q", json!(qs)).meta("suite", json!(a.suite));
    emit(&t, a.format, a.output.as_deref(), stdout)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn contraction(a: &ContractionArgs) -> Result<Table, Failure> {
    let c = context(&a.common)?;
    if a.threshold {
        let r = find_c(&c)?;
        let mut t = Table::new(&["q", "peak", "threshold"]);
        t.push(vec![Cell::Num(c.q), Cell::Num(r.peak), Cell::Num(r.threshold)]);
        return Ok(t.common(&a.common));
    }
    if !(a.step > 0.0) || !(a.amax >= 0.0) {
        return Err(Failure::Usage("need --step > 0 and --amax >= 0".into()));
    }
    let n = (a.amax / a.step).round() as usize;
    let mut t = Table::new(&["a", "h", "h2"]);
    for i in 0..=n {
        let s = i as f64 * a.step;
        t.push(vec![Cell::Num(s), Cell::Num(contraction_profile(s, &c)), Cell::Num(contraction_h_second(s, &c))]);
    }
    Ok(t.common(&a.common))
}

fn gwt(a: &GwtArgs) -> Result<Table, Failure> {
    let c = context(&a.common)?;
    if let Some(name) = &a.f {
        if !matches!(a.dir, GwtDir::Forward) {
            return Err(Failure::Usage("pointwise evaluation is forward only".into()));
        }
        let f = builtin(name, &c)?;
        let mut t = Table::new(&["t", "value"]);
        for &s in &a.t {
            t.push(vec![Cell::Num(s), Cell::Num(wq_forward_pointwise(|x| f.eval_x(x), s, &c)?)]);
        }
        return Ok(t.common(&a.common));
    }
    let out = match a.dir {
        GwtDir::Forward => wq_forward_series(&HermiteSeries::new(a.coeffs.clone(), c)).coeffs,
        GwtDir::Invert => wq_invert(&EntireSeries::new(a.coeffs.clone(), c))?.coeffs,
    };
    let mut t = Table::new(&["n", "coeff"]);
    for (n, v) in out.iter().enumerate() {
        t.push(vec![Cell::Int(n as i64), Cell::Num(*v)]);
    }
    Ok(t.common(&a.common))
}

fn parse_class(s: &str) -> Result<TestClass, Failure> {
    let bad = || Failure::Usage(format!("unknown class `{s}`; eigen, poly:N or weighted:N"));
    if s == "eigen" {
        return Ok(TestClass::Eigen);
    }
    let (k, n) = s.split_once(':').ok_or_else(bad)?;
    let n: usize = n.parse().map_err(|_| bad())?;
    match k {
        "poly" => Ok(TestClass::Polynomial(n)),
        "weighted" => Ok(TestClass::Weighted(n)),
        _ => Err(bad()),
    }
}

fn dual(a: &DualArgs) -> Result<Table, Failure> {
    let c = context(&a.common)?;
    let class = parse_class(&a.class)?;
    let grid = linspace(a.grid, -1.0, 1.0);
    let p = if a.manufactured {
        let (p, _) = manufactured(a.a, a.b, &c)?;
        DualProblem { grid, ..p }
    } else {
        let (fp, gp) = match (&a.f_data, &a.g_data) {
            (Some(f), Some(g)) => (f, g),
            _ => return Err(Failure::Usage("give --f-data and --g-data".into())),
        };
        let ft = read_table(fp, -1.0, 0.0)?;
        let gt = read_table(gp, 0.0, 1.0)?;
        DualProblem::new(
            SymmetricLaurentFn::real_only(move |x| ft.eval(x)),
            SymmetricLaurentFn::real_only(move |x| gt.eval(x)),
            a.a,
            a.b,
            grid,
        )?
    }
    .with_class(class);
    let sol = dual_solve(&p, &c)?;
    let mut t = Table::new(&["x", "psi"]);
    for (x, v) in sol.grid.iter().zip(&sol.psi) {
        t.push(vec![Cell::Num(*x), Cell::Num(*v)]);
    }
    let fred = sol.fredholm.map(|r| json!({ "condition": r.condition, "rank": r.rank, "size": r.size, "residual": r.residual }));
    Ok(t
        .common(&a.common)
        .meta("a", json!(a.a))
        .meta("b", json!(a.b))
        .meta("case", json!(sol.case.label()))
        .meta("residual_a", json!(sol.residual_a))
        .meta("residual_b", json!(sol.residual_b))
        .meta("fredholm", fred.unwrap_or(Value::Null)))
}
