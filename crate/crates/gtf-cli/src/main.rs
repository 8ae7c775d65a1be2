//! gtf: evaluate generalized theta series and run identity, PDE, and
//! embedding checks from the shell.
//!
//! The first argument is a command name or the path of a JSON job file
//! whose fields mirror the flags; explicit flags win over the file.
//! Scalar results print as one-line JSON unless `--output csv` is given;
//! the grid command prints CSV unless `--output json` is given.
//!
//! Exit codes: 0 success, 1 malformed input, 2 domain error from the
//! series engine, 3 a printed check failed.

use clap::Parser;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gtf_core::{
    builtin_pdes, embed, group_multiply, inverse, pde_residual, phase_eval, shifted_params,
    theta_derivative, theta_eval, GroupElement, GtfError, MultiIndex, ParameterVector,
    PhasePolynomial,
};

const COMMANDS: [&str; 8] = [
    "eval",
    "derive",
    "quasiperiod",
    "lattice",
    "pde",
    "embed",
    "group",
    "grid",
];

// Pass bars for the check commands, matching the library's test suite.
const QUASIPERIOD_BAR: f64 = 1e-9;
const LATTICE_BAR: f64 = 1e-10;
const PDE_BAR: f64 = 1e-9;
const INVERSE_BAR: f64 = 1e-12;

/// Series evaluation and checks for generalized theta functions.
#[derive(Parser)]
#[command(name = "gtf", version)]
struct Cli {
    /// Command (eval, derive, quasiperiod, lattice, pde, embed, group,
    /// grid) or the path of a JSON job file naming one
    target: Option<String>,

    /// Parameters as a JSON array of [re, im] pairs, first entry tau_1
    #[arg(long)]
    params: Option<String>,

    /// Requested evaluation tolerance, in (0, 1)
    #[arg(long)]
    tol: Option<f64>,

    /// Embedding level for the embed command
    #[arg(long)]
    level: Option<u32>,

    /// Seed for the randomized checks
    #[arg(long)]
    seed: Option<u64>,

    /// Output format: json or csv
    #[arg(long)]
    output: Option<String>,

    /// Sweep axis re<k>:start:end:count or im<k>:start:end:count;
    /// repeat for a two-axis grid
    #[arg(long)]
    grid: Vec<String>,

    /// Integer index shift for the quasiperiod check
    #[arg(long)]
    a: Option<i64>,

    /// Derivative multi-index: comma-separated orders, one per parameter
    #[arg(long)]
    alpha: Option<String>,

    /// Left group element as {"t":[re,im],"a":[re,im],"b":[[re,im],...]}
    #[arg(long)]
    g1: Option<String>,

    /// Right group element, same form as --g1
    #[arg(long)]
    g2: Option<String>,
}

/// Job-file counterpart of the flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct JobFile {
    command: Option<String>,
    params: Option<Vec<[f64; 2]>>,
    tol: Option<f64>,
    level: Option<u32>,
    seed: Option<u64>,
    output: Option<String>,
    grid: Option<Vec<String>>,
    a: Option<i64>,
    alpha: Option<Vec<u32>>,
    g1: Option<ElementJson>,
    g2: Option<ElementJson>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ElementJson {
    t: [f64; 2],
    a: [f64; 2],
    b: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

struct Axis {
    imag: bool,
    k: usize,
    start: f64,
    end: f64,
    count: usize,
}

struct Job {
    command: String,
    params: Option<ParameterVector>,
    tol: f64,
    level: u32,
    seed: u64,
    output: Option<Format>,
    grid: Vec<Axis>,
    a: i64,
    alpha: Option<Vec<u32>>,
    g1: Option<GroupElement>,
    g2: Option<GroupElement>,
}

enum Fail {
    Malformed(String),
    Domain(String),
}

impl From<GtfError> for Fail {
    fn from(e: GtfError) -> Self {
        Fail::Domain(e.to_string())
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    relative_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Output {
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_range: Option<[i64; 2]>,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    element: Option<ElementJson>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let job = match resolve(cli) {
        Ok(j) => j,
        Err(f) => return report(f),
    };
    match dispatch(&job) {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(f) => report(f),
    }
}

fn report(f: Fail) -> i32 {
    match f {
        Fail::Malformed(m) => {
            eprintln!("error: {m}");
            1
        }
        Fail::Domain(m) => {
            eprintln!("error: {m}");
            2
        }
    }
}

fn cx(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// exp(2 pi i z) with the real part reduced mod 1 before the trig call.
fn exp_2pi_i(z: Complex64) -> Complex64 {
    let mag = (-std::f64::consts::TAU * z.im).exp();
    let ang = std::f64::consts::TAU * (z.re - z.re.floor());
    mag * Complex64::new(ang.cos(), ang.sin())
}

/// Merges the job file (when the target is a path) with the flags and
/// validates everything that can be checked before dispatch.
fn resolve(cli: Cli) -> Result<Job, Fail> {
    let target = cli.target.ok_or_else(|| {
        Fail::Malformed(format!(
            "command: give one of {} or a job file",
            COMMANDS.join(", ")
        ))
    })?;
    let mut file = JobFile::default();
    let command;
    if COMMANDS.contains(&target.as_str()) {
        command = target;
    } else {
        let text = std::fs::read_to_string(&target).map_err(|_| {
            Fail::Malformed(format!(
                "command: {target} is neither a command ({}) nor a readable job file",
                COMMANDS.join(", ")
            ))
        })?;
        file = serde_json::from_str(&text)
            .map_err(|e| Fail::Malformed(format!("job file {target}: {e}")))?;
        command = file
            .command
            .clone()
            .ok_or_else(|| Fail::Malformed("command: the job file names no command".into()))?;
        if !COMMANDS.contains(&command.as_str()) {
            return Err(Fail::Malformed(format!(
                "command: {command} is not one of {}",
                COMMANDS.join(", ")
            )));
        }
    }

    let raw_params: Option<Vec<[f64; 2]>> = match cli.params {
        Some(s) => {
            Some(serde_json::from_str(&s).map_err(|e| Fail::Malformed(format!("params: {e}")))?)
        }
        None => file.params,
    };
    let params = match raw_params {
        Some(v) => Some(
            ParameterVector::new(v.into_iter().map(cx).collect())
                .map_err(|e| Fail::Malformed(format!("params: {e}")))?,
        ),
        None => None,
    };

    let tol = cli.tol.or(file.tol).unwrap_or(1e-12);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Fail::Malformed(format!(
            "tol: {tol} does not lie in (0, 1)"
        )));
    }

    let level = cli.level.or(file.level).unwrap_or(1);
    if level == 0 {
        return Err(Fail::Malformed("level: must be at least 1".into()));
    }

    let output = match cli.output.or(file.output) {
        None => None,
        Some(s) if s == "json" => Some(Format::Json),
        Some(s) if s == "csv" => Some(Format::Csv),
        Some(s) => {
            return Err(Fail::Malformed(format!(
                "output: {s} is neither json nor csv"
            )))
        }
    };

    let grid_specs = if cli.grid.is_empty() {
        file.grid.unwrap_or_default()
    } else {
        cli.grid
    };
    let grid = grid_specs
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<Vec<_>, _>>()?;

    let alpha = match cli.alpha {
        Some(s) => Some(
            s.split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    Fail::Malformed(format!("alpha: {s} is not a comma list of orders"))
                })?,
        ),
        None => file.alpha,
    };

    let g1 = parse_element(cli.g1, file.g1, "g1")?;
    let g2 = parse_element(cli.g2, file.g2, "g2")?;

    Ok(Job {
        command,
        params,
        tol,
        level,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        output,
        grid,
        a: cli.a.or(file.a).unwrap_or(1),
        alpha,
        g1,
        g2,
    })
}

fn parse_element(
    flag: Option<String>,
    file: Option<ElementJson>,
    name: &str,
) -> Result<Option<GroupElement>, Fail> {
    let json = match flag {
        Some(s) => {
            Some(serde_json::from_str(&s).map_err(|e| Fail::Malformed(format!("{name}: {e}")))?)
        }
        None => file,
    };
    Ok(json.map(|j: ElementJson| {
        GroupElement::new(cx(j.t), cx(j.a), j.b.into_iter().map(cx).collect())
    }))
}

fn parse_axis(s: &str) -> Result<Axis, Fail> {
    let bad = || Fail::Malformed(format!("grid: {s} is not re<k>:start:end:count or im<k>:..."));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let (imag, index) = if let Some(rest) = parts[0].strip_prefix("re") {
        (false, rest)
    } else if let Some(rest) = parts[0].strip_prefix("im") {
        (true, rest)
    } else {
        return Err(bad());
    };
    let k: usize = index.parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(bad());
    }
    let start: f64 = parts[1].parse().map_err(|_| bad())?;
    let end: f64 = parts[2].parse().map_err(|_| bad())?;
    let count: usize = parts[3].parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(Fail::Malformed(format!(
            "grid: {s} asks for zero sweep points"
        )));
    }
    Ok(Axis {
        imag,
        k,
        start,
        end,
        count,
    })
}

fn need_params(job: &Job) -> Result<&ParameterVector, Fail> {
    job.params
        .as_ref()
        .ok_or_else(|| Fail::Malformed(format!("params: required for {}", job.command)))
}

fn dispatch(job: &Job) -> Result<bool, Fail> {
    let fmt = job.output.unwrap_or(if job.command == "grid" {
        Format::Csv
    } else {
        Format::Json
    });
    if job.command == "grid" {
        return run_grid(job, fmt);
    }
    let out = match job.command.as_str() {
        "eval" => run_eval(job)?,
        "derive" => run_derive(job)?,
        "quasiperiod" => run_quasiperiod(job)?,
        "lattice" => run_lattice(job)?,
        "pde" => run_pde(job)?,
        "embed" => run_embed(job)?,
        "group" => run_group(job)?,
        _ => unreachable!("command list is closed"),
    };
    emit(&out, fmt);
    Ok(out.checks.iter().all(|c| c.pass))
}

fn run_eval(job: &Job) -> Result<Output, Fail> {
    let p = need_params(job)?;
    let r = theta_eval(p, job.tol)?;
    Ok(Output {
        value: Some(pair(r.value)),
        tail_bound: Some(r.tail_bound),
        n_range: Some([r.n_min, r.n_max]),
        checks: vec![],
        coords: None,
        element: None,
    })
}

fn run_derive(job: &Job) -> Result<Output, Fail> {
    let p = need_params(job)?;
    let orders = job
        .alpha
        .clone()
        .ok_or_else(|| Fail::Malformed("alpha: required for derive".into()))?;
    if orders.len() != p.len() {
        return Err(Fail::Malformed(format!(
            "alpha: {} orders given for {} parameters",
            orders.len(),
            p.len()
        )));
    }
    let r = theta_derivative(&MultiIndex::new(orders), p, job.tol)?;
    Ok(Output {
        value: Some(pair(r.value)),
        tail_bound: Some(r.tail_bound),
        n_range: Some([r.n_min, r.n_max]),
        checks: vec![],
        coords: None,
        element: None,
    })
}

fn run_quasiperiod(job: &Job) -> Result<Output, Fail> {
    let p = need_params(job)?;
    let a = Complex64::new(job.a as f64, 0.0);
    let base = theta_eval(p, job.tol)?;
    let phi = PhasePolynomial::new(p.clone());
    let mult = exp_2pi_i(-phase_eval(a, &phi));
    // the shifted series peaks |mult| times higher, so the budget scales
    let r = theta_eval(&shifted_params(a, p), job.tol * mult.norm().max(1.0))?;
    let rhs = mult * base.value;
    let rel = (r.value - rhs).norm() / rhs.norm();
    Ok(Output {
        value: Some(pair(r.value)),
        tail_bound: Some(r.tail_bound),
        n_range: Some([r.n_min, r.n_max]),
        checks: vec![Check {
            name: "quasiperiod".into(),
            relative_error: rel,
            pass: rel < QUASIPERIOD_BAR,
        }],
        coords: None,
        element: None,
    })
}

fn run_lattice(job: &Job) -> Result<Output, Fail> {
    let p = need_params(job)?;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let mut fact = 1.0f64;
    let taus: Vec<Complex64> = p
        .taus()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            fact *= (k + 1) as f64;
            t + fact * rng.gen_range(-2i64..=2) as f64
        })
        .collect();
    let moved = ParameterVector::new(taus).expect("same length as the input");
    let va = theta_eval(p, job.tol)?;
    let vb = theta_eval(&moved, job.tol)?;
    let rel = (va.value - vb.value).norm() / va.value.norm();
    Ok(Output {
        value: Some(pair(va.value)),
        tail_bound: Some(va.tail_bound),
        n_range: Some([va.n_min, va.n_max]),
        checks: vec![Check {
            name: "lattice".into(),
            relative_error: rel,
            pass: rel < LATTICE_BAR,
        }],
        coords: None,
        element: None,
    })
}

fn run_pde(job: &Job) -> Result<Output, Fail> {
    let p = need_params(job)?;
    let r = theta_eval(p, job.tol)?;
    let mut checks = Vec::new();
    for spec in builtin_pdes(p.len()) {
        let (res, scale) = pde_residual(&spec, p, job.tol)?;
        let rel = res.norm() / scale;
        checks.push(Check {
            name: spec.name.clone(),
            relative_error: rel,
            pass: rel < PDE_BAR,
        });
    }
    Ok(Output {
        value: Some(pair(r.value)),
        tail_bound: Some(r.tail_bound),
        n_range: Some([r.n_min, r.n_max]),
        checks,
        coords: None,
        element: None,
    })
}

fn run_embed(job: &Job) -> Result<Output, Fail> {
    let p = need_params(job)?;
    let point = embed(p, job.level, job.tol)?;
    Ok(Output {
        value: Some(pair(point.coords[0])),
        tail_bound: Some(point.tail_bound),
        n_range: None,
        checks: vec![],
        coords: Some(point.coords.iter().map(|&z| pair(z)).collect()),
        element: None,
    })
}

fn run_group(job: &Job) -> Result<Output, Fail> {
    let g1 = job
        .g1
        .as_ref()
        .ok_or_else(|| Fail::Malformed("g1: required for group".into()))?;
    let g2 = job
        .g2
        .as_ref()
        .ok_or_else(|| Fail::Malformed("g2: required for group".into()))?;
    let prod = group_multiply(g1, g2)?;
    let ident = group_multiply(g1, &inverse(g1))?;
    let defect = (ident.t().re - ident.t().re.round()).abs()
        + ident.t().im.abs()
        + ident.a().norm()
        + ident.b().iter().map(|b| b.norm()).sum::<f64>();
    Ok(Output {
        value: Some(pair(prod.t())),
        tail_bound: None,
        n_range: None,
        checks: vec![Check {
            name: "inverse".into(),
            relative_error: defect,
            pass: defect < INVERSE_BAR,
        }],
        coords: None,
        element: Some(ElementJson {
            t: pair(prod.t()),
            a: pair(prod.a()),
            b: prod.b().iter().map(|&z| pair(z)).collect(),
        }),
    })
}

fn axis_points(axis: &Axis) -> Vec<f64> {
    if axis.count == 1 {
        return vec![axis.start];
    }
    (0..axis.count)
        .map(|i| axis.start + (axis.end - axis.start) * (i as f64 / (axis.count - 1) as f64))
        .collect()
}

fn axis_label(axis: &Axis) -> String {
    format!("{}{}", if axis.imag { "im" } else { "re" }, axis.k)
}

fn run_grid(job: &Job, fmt: Format) -> Result<bool, Fail> {
    let p = need_params(job)?;
    if job.grid.is_empty() || job.grid.len() > 2 {
        return Err(Fail::Malformed(format!(
            "grid: give one or two axes, got {}",
            job.grid.len()
        )));
    }
    for axis in &job.grid {
        if axis.k > p.len() {
            return Err(Fail::Malformed(format!(
                "grid: axis {} exceeds the {} parameters",
                axis_label(axis),
                p.len()
            )));
        }
    }
    let outer = axis_points(&job.grid[0]);
    let inner: Vec<f64> = job.grid.get(1).map(axis_points).unwrap_or_default();
    let labels: Vec<String> = job.grid.iter().map(axis_label).collect();

    struct Row {
        coords: Vec<f64>,
        result: Result<(Complex64, f64), String>,
    }
    let mut rows = Vec::new();
    let mut eval_at = |coords: Vec<f64>| {
        let mut taus = p.taus().to_vec();
        for (axis, &v) in job.grid.iter().zip(&coords) {
            let t = &mut taus[axis.k - 1];
            if axis.imag {
                *t = Complex64::new(t.re, v);
            } else {
                *t = Complex64::new(v, t.im);
            }
        }
        let q = ParameterVector::new(taus).expect("same length as the input");
        let result = theta_eval(&q, job.tol)
            .map(|r| (r.value, r.tail_bound))
            .map_err(|e| e.to_string());
        rows.push(Row { coords, result });
    };
    for &x in &outer {
        if inner.is_empty() {
            eval_at(vec![x]);
        } else {
            for &y in &inner {
                eval_at(vec![x, y]);
            }
        }
    }

    match fmt {
        Format::Csv => {
            println!("{},real,imag,abs,tail_bound,error", labels.join(","));
            for row in &rows {
                let coords: Vec<String> = row.coords.iter().map(|v| v.to_string()).collect();
                match &row.result {
                    Ok((v, tail)) => println!(
                        "{},{},{},{},{},",
                        coords.join(","),
                        v.re,
                        v.im,
                        v.norm(),
                        tail
                    ),
                    Err(msg) => println!(
                        "{},,,,,\"{}\"",
                        coords.join(","),
                        msg.replace('"', "\"\"")
                    ),
                }
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (label, &v) in labels.iter().zip(&row.coords) {
                        obj.insert(label.clone(), v.into());
                    }
                    match &row.result {
                        Ok((v, tail)) => {
                            obj.insert("value".into(), serde_json::json!([v.re, v.im]));
                            obj.insert("abs".into(), v.norm().into());
                            obj.insert("tail_bound".into(), (*tail).into());
                        }
                        Err(msg) => {
                            obj.insert("error".into(), msg.clone().into());
                        }
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            println!("{}", serde_json::json!({ "rows": rows }));
        }
    }
    Ok(true)
}

fn emit(out: &Output, fmt: Format) {
    match fmt {
        Format::Json => println!("{}", serde_json::to_string(out).expect("serializable output")),
        Format::Csv => {
            if let Some(coords) = &out.coords {
                println!("index,re,im");
                for (i, c) in coords.iter().enumerate() {
                    println!("{},{},{}", i, c[0], c[1]);
                }
            } else if !out.checks.is_empty() {
                println!("name,relative_error,pass");
                for c in &out.checks {
                    println!("{},{},{}", c.name, c.relative_error, c.pass);
                }
            } else if let Some(v) = out.value {
                println!("value_re,value_im,abs,tail_bound,n_min,n_max");
                let z = cx(v);
                println!(
                    "{},{},{},{},{},{}",
                    v[0],
                    v[1],
                    z.norm(),
                    out.tail_bound.map(|t| t.to_string()).unwrap_or_default(),
                    out.n_range.map(|r| r[0].to_string()).unwrap_or_default(),
                    out.n_range.map(|r| r[1].to_string()).unwrap_or_default()
                );
            }
        }
    }
}
