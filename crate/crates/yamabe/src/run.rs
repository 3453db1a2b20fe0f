//! Command execution: configuration resolution, library calls and the
//! output document. No numerical work happens here beyond calling
//! `yamabe_core`.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use yamabe_core::analysis::{certify_delta_matrix, harnack_audit, AuditOptions};
use yamabe_core::conformal::{bubble_exact, bubble_kappa, schouten_flat};
use yamabe_core::curvature::{elementary_symmetric, in_gamma_k, CurvatureSpec, EigenvalueVector};
use yamabe_core::field::{AnalyticField, FieldDescriptor, ScalarField};
use yamabe_core::radial::{check_solution, continuation_solve, gauge_initial_guess, newton_solve, SolverConfig};
use yamabe_core::suites::{run_suite, Suite, SuiteOptions};

use crate::cli::{AuditArgs, BubbleArgs, Cli, Command, ConeCheckArgs, EvalArgs, SolveArgs, SpecArgs};
use crate::error::CliError;
use crate::io::{self, Format, SCHEMA};

/// On-disk run configuration; `params` is specific to the command.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig<P> {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: P,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeCheckParams {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    pub spec: Option<CurvatureSpec>,
    pub lambdas: Vec<Vec<f64>>,
    pub field: Option<FieldDescriptor>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleCommandParams {
    pub spec: Option<CurvatureSpec>,
    pub s: f64,
    pub center: Option<Vec<f64>>,
}

impl Default for BubbleCommandParams {
    fn default() -> Self {
        Self { spec: None, s: 1.0, center: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    pub spec: Option<CurvatureSpec>,
    pub solver: SolverConfig,
    /// The starting guess is the gauge bubble times `1 + initial_perturbation`.
    pub initial_perturbation: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { spec: None, solver: SolverConfig::default(), initial_perturbation: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditParams {
    pub field: Option<FieldDescriptor>,
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub audit: AuditOptions,
}

impl Default for AuditParams {
    fn default() -> Self {
        Self { field: None, radius: 1.0, n: None, delta: None, audit: AuditOptions::default() }
    }
}

/// Result of one run: the primary output, companion files and exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: u8,
    pub output: String,
    pub companions: Vec<(PathBuf, String)>,
}

struct Resolved<P> {
    seed: u64,
    params: P,
}

fn load<P: DeserializeOwned + Default>(cli: &Cli) -> Result<Resolved<P>, CliError> {
    let cfg: RunConfig<P> = match &cli.config {
        Some(path) => io::read_json(path)?,
        None => RunConfig { seed: None, params: P::default() },
    };
    Ok(Resolved { seed: cli.seed.or(cfg.seed).unwrap_or(0), params: cfg.params })
}

fn usage(e: yamabe_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn resolve_spec(args: &SpecArgs, from_config: Option<CurvatureSpec>) -> Result<Option<CurvatureSpec>, CliError> {
    match (args.n, args.k) {
        (Some(n), Some(k)) => {
            let spec = match args.t {
                Some(t) => CurvatureSpec::homotopy(n, k, t),
                None => CurvatureSpec::sigma_k(n, k),
            };
            spec.map(Some).map_err(usage)
        }
        (None, None) if args.t.is_none() => Ok(from_config),
        _ => Err(CliError::Usage("a spec needs both --n and --k".into())),
    }
}

fn require_spec(spec: Option<CurvatureSpec>) -> Result<CurvatureSpec, CliError> {
    spec.ok_or_else(|| CliError::Usage("no curvature spec: pass --n and --k or set params.spec".into()))
}

fn read_field(
    path: &Option<PathBuf>,
    from_config: Option<FieldDescriptor>,
) -> Result<Option<FieldDescriptor>, CliError> {
    match path {
        Some(p) => io::read_json(p).map(Some),
        None => Ok(from_config),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable value")
}

/// Assembles the JSON envelope or the CSV body with its comment preamble.
struct Render<'a> {
    cli: &'a Cli,
    seed: u64,
    config: Value,
}

impl Render<'_> {
    fn config_value(&self) -> Value {
        json!({
            "seed": self.seed,
            "params": self.config,
            "output": {
                "path": self.cli.out.as_ref().map(|p| p.display().to_string()),
                "format": self.cli.format,
            },
        })
    }

    fn document(&self, status: &str, result: Value) -> String {
        io::to_json_string(&json!({
            "schema": SCHEMA,
            "command": self.cli.command.name(),
            "seed": self.seed,
            "config": self.config_value(),
            "status": status,
            "result": result,
        }))
    }

    fn error_document(&self, err: &CliError) -> String {
        match self.cli.format {
            Format::Json => io::to_json_string(&json!({
                "schema": SCHEMA,
                "command": self.cli.command.name(),
                "seed": self.seed,
                "config": self.config_value(),
                "status": "error",
                "error": { "code": err.code(), "message": err.to_string() },
            })),
            Format::Csv => {
                let mut s = io::csv_preamble(self.cli.command.name(), self.seed, &self.config_value());
                s.push_str(&io::csv_key_values(
                    &json!({ "status": "error", "code": err.code(), "message": err.to_string() }),
                ));
                s
            }
        }
    }

    /// `csv` is the table body used for `--format csv`.
    fn output(&self, status: &str, result: Value, csv: impl FnOnce(&Value) -> String) -> String {
        match self.cli.format {
            Format::Json => self.document(status, result),
            Format::Csv => {
                let mut s = io::csv_preamble(self.cli.command.name(), self.seed, &self.config_value());
                s.push_str(&csv(&result));
                s
            }
        }
    }
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::ConeCheck(a) => cone_check(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Bubble(a) => bubble(cli, a),
        Command::Solve(a) => solve(cli, a),
        Command::Continue(a) => continue_path(cli, a),
        Command::AuditHarnack(a) => audit(cli, a),
        Command::Verify(a) => verify(cli, &a.suite),
    }
}

fn finish(
    render: &Render<'_>,
    computed: Result<(u8, String, Vec<(PathBuf, String)>), CliError>,
) -> Result<Outcome, CliError> {
    match computed {
        Ok((exit_code, output, companions)) => Ok(Outcome { exit_code, output, companions }),
        Err(e @ CliError::Usage(_)) => Err(e),
        Err(e) => Ok(Outcome { exit_code: e.exit_code(), output: render.error_document(&e), companions: Vec::new() }),
    }
}

fn cone_check(cli: &Cli, args: &ConeCheckArgs) -> Result<Outcome, CliError> {
    let r = load::<ConeCheckParams>(cli)?;
    let mut params = r.params;
    params.k = args.k.or(params.k);
    params.n = args.n.or(params.n);
    let k = params.k.ok_or_else(|| CliError::Usage("cone-check needs --k".into()))?;
    if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        params.vectors.extend(io::parse_vector_list(&text, params.n)?);
    }
    for v in &args.vectors {
        params.vectors.push(io::parse_vector(v, params.n)?);
    }
    if params.vectors.is_empty() {
        return Err(CliError::Usage("no vectors given".into()));
    }
    let mut rows = Vec::with_capacity(params.vectors.len());
    for v in &params.vectors {
        let lambda = EigenvalueVector::new(v.clone()).map_err(usage)?;
        if k == 0 || k > lambda.len() {
            return Err(usage(yamabe_core::Error::KOutOfRange { k, n: lambda.len() }));
        }
        let sigma = elementary_symmetric(v, k)[1..=k].to_vec();
        rows.push(json!({ "lambda": v, "sigma": sigma, "member": in_gamma_k(&lambda, k) }));
    }
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let result = json!({ "k": k, "rows": rows });
    let out = render.output("ok", result, |res| {
        let mut header = vec!["lambda".to_string()];
        header.extend((1..=k).map(|j| format!("sigma_{j}")));
        header.push("member".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<Value>> = res["rows"]
            .as_array()
            .expect("rows")
            .iter()
            .map(|row| {
                let mut cells = vec![row["lambda"].clone()];
                cells.extend(row["sigma"].as_array().expect("sigma").iter().cloned());
                cells.push(row["member"].clone());
                cells
            })
            .collect();
        io::csv_table(&header, &rows)
    });
    Ok(Outcome { exit_code: 0, output: out, companions: Vec::new() })
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<Outcome, CliError> {
    let r = load::<EvalParams>(cli)?;
    let mut params = r.params;
    params.spec = resolve_spec(&args.spec, params.spec)?;
    params.field = read_field(&args.field, params.field)?;
    let n = params.spec.as_ref().map(|s| s.dim()).or(params.field.as_ref().map(|f| f.dim()));
    for l in &args.lambdas {
        params.lambdas.push(io::parse_vector(l, n)?);
    }
    for p in &args.points {
        params.points.push(io::parse_vector(p, n)?);
    }
    if !params.lambdas.is_empty() && params.spec.is_none() {
        return Err(CliError::Usage("eigenvalue vectors need a spec".into()));
    }
    if !params.points.is_empty() && params.field.is_none() {
        return Err(CliError::Usage("points need a field (--field)".into()));
    }
    let mut lambda_rows = Vec::new();
    for l in &params.lambdas {
        let spec = params.spec.as_ref().expect("checked above");
        if l.len() != spec.dim() {
            return Err(usage(yamabe_core::Error::DimensionMismatch { expected: spec.dim(), got: l.len() }));
        }
        let f = spec.eval(l).ok();
        lambda_rows.push(json!({ "lambda": l, "member": spec.in_cone(l), "f": f }));
    }
    let mut point_rows = Vec::new();
    let mut failed = false;
    if let Some(field) = &params.field {
        for p in &params.points {
            if p.len() != field.dim() {
                return Err(usage(yamabe_core::Error::DimensionMismatch { expected: field.dim(), got: p.len() }));
            }
            let row = match field.value(p).and_then(|u| Ok((u, schouten_flat(field, p)?.eigenvalues()))) {
                Ok((u, ev)) => {
                    let f = params.spec.as_ref().and_then(|s| s.eval(&ev).ok());
                    json!({ "point": p, "u": u, "eigenvalues": ev, "f": f })
                }
                Err(e) => {
                    failed = true;
                    json!({ "point": p, "error": e.code() })
                }
            };
            point_rows.push(row);
        }
    }
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let result = json!({ "lambdas": lambda_rows, "points": point_rows });
    let out = render.output(if failed { "fail" } else { "ok" }, result, |res| {
        let mut rows = Vec::new();
        for row in res["lambdas"].as_array().expect("lambdas") {
            rows.push(vec![
                json!("lambda"),
                row["lambda"].clone(),
                row["member"].clone(),
                row["f"].clone(),
                Value::Null,
                Value::Null,
            ]);
        }
        for row in res["points"].as_array().expect("points") {
            rows.push(vec![
                json!("point"),
                row["point"].clone(),
                Value::Null,
                row.get("f").cloned().unwrap_or(Value::Null),
                row.get("u").cloned().unwrap_or(Value::Null),
                row.get("eigenvalues").cloned().or(row.get("error").cloned()).unwrap_or(Value::Null),
            ]);
        }
        io::csv_table(&["kind", "vector", "member", "f", "u", "eigenvalues"], &rows)
    });
    Ok(Outcome { exit_code: u8::from(failed), output: out, companions: Vec::new() })
}

fn bubble(cli: &Cli, args: &BubbleArgs) -> Result<Outcome, CliError> {
    let r = load::<BubbleCommandParams>(cli)?;
    let mut params = r.params;
    params.spec = resolve_spec(&args.spec, params.spec)?;
    params.s = args.s.unwrap_or(params.s);
    let spec = require_spec(params.spec.clone())?;
    if let Some(c) = &args.center {
        params.center = Some(io::parse_vector(c, Some(spec.dim()))?);
    }
    let center = params.center.clone().unwrap_or_else(|| vec![0.0; spec.dim()]);
    params.center = Some(center.clone());
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let computed = (|| -> Result<_, CliError> {
        let b = bubble_exact(&spec, params.s, center.clone()).map_err(usage)?;
        let field = AnalyticField::Bubble(b.clone());
        let ev = schouten_flat(&field, &center)?.eigenvalues();
        let result = json!({
            "field": field,
            "kappa": bubble_kappa(spec.dim()),
            "far_field_constant": b.far_field_constant(),
            "eigenvalues_at_center": ev,
            "f_at_center": spec.eval(&ev)?,
        });
        Ok((0, render.output("ok", result, io::csv_key_values), Vec::new()))
    })();
    finish(&render, computed)
}

fn apply_solver_args(params: &mut SolveParams, args: &SolveArgs) -> Result<CurvatureSpec, CliError> {
    params.spec = resolve_spec(&args.spec, params.spec.clone())?;
    if let Some(p) = args.points {
        params.solver.grid.points = p;
    }
    if let Some(r) = args.r_max {
        params.solver.grid.r_max = r;
    }
    if let Some(c) = args.far_field {
        params.solver.far_field_constant = c;
    }
    params.solver.validate().map_err(usage)?;
    require_spec(params.spec.clone())
}

fn solution_outputs(
    render: &Render<'_>,
    status: &str,
    result: Value,
    sol: &yamabe_core::radial::RadialSolution,
) -> Result<(String, Vec<(PathBuf, String)>), CliError> {
    let csv = sol.to_csv()?;
    let json_doc = render.document(status, result);
    let out = match render.cli.format {
        Format::Json => json_doc.clone(),
        Format::Csv => {
            let mut s = io::csv_preamble(render.cli.command.name(), render.seed, &render.config_value());
            s.push_str(&csv);
            s
        }
    };
    let companions = match &render.cli.out {
        Some(path) => match render.cli.format {
            Format::Json => {
                let mut s = io::csv_preamble(render.cli.command.name(), render.seed, &render.config_value());
                s.push_str(&csv);
                vec![(io::companion_path(path, Format::Csv), s)]
            }
            Format::Csv => vec![(io::companion_path(path, Format::Json), json_doc)],
        },
        None => Vec::new(),
    };
    Ok((out, companions))
}

fn solve(cli: &Cli, args: &SolveArgs) -> Result<Outcome, CliError> {
    let r = load::<SolveParams>(cli)?;
    let mut params = r.params;
    let spec = apply_solver_args(&mut params, args)?;
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let computed = (|| -> Result<_, CliError> {
        let init = gauge_initial_guess(&spec, &params.solver, 1.0 + params.initial_perturbation)?;
        let sol = newton_solve(&spec, &init, &params.solver)?;
        let check = check_solution(&sol, &params.solver)?;
        let status = if check.pass { "pass" } else { "fail" };
        let result = json!({ "certified": check.pass, "check": check, "solution": sol });
        let (out, companions) = solution_outputs(&render, status, result, &sol)?;
        Ok((u8::from(!check.pass), out, companions))
    })();
    finish(&render, computed)
}

fn continue_path(cli: &Cli, args: &SolveArgs) -> Result<Outcome, CliError> {
    let r = load::<SolveParams>(cli)?;
    let mut params = r.params;
    let spec = apply_solver_args(&mut params, args)?;
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let computed = (|| -> Result<_, CliError> {
        let path = continuation_solve(&spec, &params.solver)?;
        let check = check_solution(&path.solution, &params.solver)?;
        let status = if check.pass { "pass" } else { "fail" };
        let result = json!({
            "certified": check.pass,
            "steps": path.steps(),
            "oscillation_growth": path.oscillation_growth(),
            "path": path.points,
            "check": check,
            "solution": path.solution,
        });
        let (out, companions) = solution_outputs(&render, status, result, &path.solution)?;
        Ok((u8::from(!check.pass), out, companions))
    })();
    finish(&render, computed)
}

fn audit(cli: &Cli, args: &AuditArgs) -> Result<Outcome, CliError> {
    let r = load::<AuditParams>(cli)?;
    let mut params = r.params;
    params.field = read_field(&args.field, params.field)?;
    let field = params.field.clone().ok_or_else(|| CliError::Usage("audit-harnack needs --field".into()))?;
    params.radius = args.radius.unwrap_or(params.radius);
    let n = args.n.or(params.n).unwrap_or(field.dim());
    params.n = Some(n);
    if let Some(k) = args.k {
        params.audit.spec = Some(CurvatureSpec::sigma_k(n, k).map_err(usage)?);
    }
    if let Some(s) = args.samples {
        params.audit.samples = s;
    }
    params.audit.seed = r.seed;
    if field.dim() != n {
        return Err(usage(yamabe_core::Error::DimensionMismatch { expected: n, got: field.dim() }));
    }
    let delta = match (args.delta.or(params.delta), &params.audit.spec) {
        (Some(d), _) => d,
        (None, Some(spec)) => certify_delta_matrix(spec, 1e-12).delta,
        (None, None) => 1.0,
    };
    params.delta = Some(delta);
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let computed = (|| -> Result<_, CliError> {
        let report = harnack_audit(&field, params.radius, delta, n, &params.audit)?;
        let status = if report.pass { "pass" } else { "fail" };
        let out = render.output(status, to_value(&report), io::csv_key_values);
        Ok((u8::from(!report.pass), out, Vec::new()))
    })();
    finish(&render, computed)
}

fn verify(cli: &Cli, suite: &str) -> Result<Outcome, CliError> {
    let suite: Suite = suite.parse().map_err(|_| {
        CliError::Usage(format!(
            "unknown suite `{suite}`; expected invariance, lemma2, touching, duality, concavity or all"
        ))
    })?;
    let r = load::<SuiteOptions>(cli)?;
    let mut params = r.params;
    params.seed = r.seed;
    let render = Render { cli, seed: r.seed, config: to_value(&params) };
    let computed = (|| -> Result<_, CliError> {
        let report = run_suite(suite, &params)?;
        let status = if report.pass { "pass" } else { "fail" };
        let out = render.output(status, to_value(&report), |res| {
            let rows: Vec<Vec<Value>> = res["checks"]
                .as_array()
                .expect("checks")
                .iter()
                .map(|c| {
                    ["name", "cases", "failures", "worst", "tolerance", "pass"].iter().map(|k| c[*k].clone()).collect()
                })
                .collect();
            io::csv_table(&["name", "cases", "failures", "worst", "tolerance", "pass"], &rows)
        });
        Ok((u8::from(!report.pass), out, Vec::new()))
    })();
    finish(&render, computed)
}

/// Parses `args`, runs, writes outputs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&cli, &outcome) {
                eprintln!("{e}");
                return e.exit_code();
            }
            if outcome.exit_code != 0 {
                if let Ok(v) = serde_json::from_str::<Value>(&outcome.output) {
                    if let Some(err) = v.get("error") {
                        eprintln!(
                            "error: {} ({})",
                            err["message"].as_str().unwrap_or(""),
                            err["code"].as_str().unwrap_or("")
                        );
                    }
                }
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            io::write_text(path, &outcome.output)?;
            for (p, text) in &outcome.companions {
                io::write_text(p, text)?;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.output.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}
