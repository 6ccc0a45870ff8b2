mod output;

use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use quantpoly::model::fmt17;
use quantpoly::percentile::{audit, fit_pm, pm_grid, ErrorSummary, FitReport, FitSettings};
use quantpoly::pwm::{fit_pwm, read_samples, PwmDiagnostics};
use quantpoly::{Error, PolynomialQuantileModel, ReferenceDistribution, WeibullBase};

use output::{sidecar_json, write_atomic, Artifact};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PARTIAL: u8 = 4;
const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "quantpoly", version, about = "Polynomial quantile models over a Weibull basis")]
struct Cli {
    /// Treat missing seeds as errors instead of falling back to a default.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a named distribution by percentile matching and audit the result.
    QuantileFit(QuantileFitArgs),
    /// Fit a model to a sample file by probability-weighted moments.
    DataFit(DataFitArgs),
    /// Draw variates from a model by inverse transform.
    Sample(SampleArgs),
    /// Evaluate a model's quantile, CDF or PDF at given points.
    Eval(EvalArgs),
    /// Audit an existing model against a named distribution.
    Audit(AuditArgs),
}

#[derive(Args)]
struct BaseArgs {
    /// Polynomial degree.
    #[arg(long)]
    degree: Option<usize>,
    /// Weibull scale λ of the basis.
    #[arg(long)]
    lambda: Option<f64>,
    /// Weibull shape k of the basis.
    #[arg(long = "shape-k")]
    shape_k: Option<f64>,
}

#[derive(Args)]
struct QuantileFitArgs {
    /// Distribution, e.g. `gamma(a=10,b=1)`, `t(nu=5)` or `weibull-self`.
    spec: String,
    #[command(flatten)]
    base: BaseArgs,
    /// Number of percentile-matching points.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of audit points.
    #[arg(long = "audit-grid")]
    audit_grid: Option<usize>,
    #[arg(long = "range-lo")]
    range_lo: Option<f64>,
    #[arg(long = "range-hi")]
    range_hi: Option<f64>,
    #[arg(long = "out-model", default_value = "model.json")]
    out_model: PathBuf,
    /// Report CSV; the JSON summary is written next to it with a `.json` extension.
    #[arg(long = "out-report", default_value = "report.csv")]
    out_report: PathBuf,
}

#[derive(Args)]
struct DataFitArgs {
    /// Sample file: one value per line or a single-column CSV.
    input: PathBuf,
    #[command(flatten)]
    base: BaseArgs,
    /// Number of u-points in the PDF curve.
    #[arg(long = "audit-grid", default_value_t = 10_000)]
    audit_grid: usize,
    #[arg(long = "out-model", default_value = "model.json")]
    out_model: PathBuf,
    /// PDF curve CSV; the PWM diagnostics are written next to it with a `.json` extension.
    #[arg(long = "out-report", default_value = "curve.csv")]
    out_report: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    model: PathBuf,
    /// Number of variates.
    #[arg(short = 'n', long = "count")]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Quantile,
    Cdf,
    Pdf,
}

#[derive(Args)]
struct EvalArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = Direction::Quantile)]
    direction: Direction,
    /// Points to evaluate; read one per line from standard input when omitted.
    #[arg(allow_negative_numbers = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct AuditArgs {
    model: PathBuf,
    /// Target distribution, as for quantile-fit.
    spec: String,
    #[arg(long = "audit-grid", default_value_t = 10_000)]
    audit_grid: usize,
    #[arg(long = "out-report", default_value = "report.csv")]
    out_report: PathBuf,
}

/// A failed command: message for standard error plus exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::QuantileFit(args) => quantile_fit(args),
        Command::DataFit(args) => data_fit(args),
        Command::Sample(args) => sample(args, cli.strict),
        Command::Eval(args) => eval(args),
        Command::Audit(args) => audit_model(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

enum Target {
    WeibullSelf(WeibullBase),
    Named(ReferenceDistribution),
}

impl Target {
    fn parse(spec: &str, base: WeibullBase) -> Result<Self, Failure> {
        let trimmed = spec.trim();
        if trimmed == "weibull-self" || trimmed == "weibull-self()" {
            return Ok(Target::WeibullSelf(base));
        }
        Ok(Target::Named(trimmed.parse()?))
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            Target::WeibullSelf(w) => w.quantile(u).unwrap_or(f64::NAN),
            Target::Named(d) => d.quantile(u).unwrap_or(f64::NAN),
        }
    }

    fn label(&self) -> String {
        match self {
            Target::WeibullSelf(w) => format!("weibull-self(lambda={},k={})", w.lambda(), w.k()),
            Target::Named(d) => d.to_string(),
        }
    }

    fn check_supported(&self) -> Result<(), Failure> {
        if let Target::Named(ReferenceDistribution::Mixture { .. }) = self {
            return Err(Error::Unsupported(
                "percentile matching needs a closed-form quantile; the mixture has none".into(),
            )
            .into());
        }
        Ok(())
    }
}

fn settings_for(spec: &str, args: &QuantileFitArgs) -> Result<FitSettings, Failure> {
    let defaults = match spec.trim().parse::<ReferenceDistribution>() {
        Ok(d) => FitSettings::for_distribution(&d),
        Err(_) => FitSettings::default(),
    };
    let base = WeibullBase::new(
        args.base.lambda.unwrap_or(defaults.base.lambda()),
        args.base.shape_k.unwrap_or(defaults.base.k()),
    )?;
    Ok(FitSettings {
        base,
        degree: args.base.degree.unwrap_or(defaults.degree),
        grid_count: args.grid.unwrap_or(defaults.grid_count),
        audit_count: args.audit_grid.unwrap_or(defaults.audit_count),
        range_lo: args.range_lo.unwrap_or(defaults.range_lo),
        range_hi: args.range_hi.unwrap_or(defaults.range_hi),
    })
}

#[derive(Serialize)]
struct FitSummary<'a> {
    target: String,
    lambda: f64,
    k: f64,
    degree: usize,
    grid_count: usize,
    audit_count: usize,
    range_lo: f64,
    range_hi: f64,
    residual_norm: f64,
    condition_estimate: f64,
    error_pct: &'a ErrorSummary,
}

fn report_artifacts(report: &FitReport, summary: &impl Serialize, path: &Path) -> Result<Vec<Artifact>, Failure> {
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    let json = serde_json::to_string_pretty(summary).map_err(|e| usage(e.to_string()))? + "\n";
    Ok(vec![
        Artifact::new(path, csv),
        Artifact::new(sidecar_json(path), json.into_bytes()),
    ])
}

fn print_summary(s: &ErrorSummary) {
    println!(
        "average {}%  minimum {}%  maximum {}%  (scored {}, skipped {})",
        fmt17(s.average),
        fmt17(s.min),
        fmt17(s.max),
        s.scored,
        s.skipped
    );
}

fn quantile_fit(args: QuantileFitArgs) -> Result<u8, Failure> {
    let settings = settings_for(&args.spec, &args)?;
    let target = Target::parse(&args.spec, settings.base)?;
    target.check_supported()?;
    let grid = pm_grid(settings.grid_count, settings.range_lo, settings.range_hi)?;
    let fit = fit_pm(|u| target.quantile(u), settings.base, settings.degree, &grid)?;
    let report = audit(&fit.model, |u| target.quantile(u), settings.audit_count)?;
    let summary = FitSummary {
        target: target.label(),
        lambda: settings.base.lambda(),
        k: settings.base.k(),
        degree: settings.degree,
        grid_count: settings.grid_count,
        audit_count: settings.audit_count,
        range_lo: settings.range_lo,
        range_hi: settings.range_hi,
        residual_norm: fit.residual_norm,
        condition_estimate: fit.condition_estimate,
        error_pct: &report.summary,
    };
    let mut artifacts = vec![Artifact::new(&args.out_model, fit.model.to_json().into_bytes())];
    artifacts.extend(report_artifacts(&report, &summary, &args.out_report)?);
    output::write_all(&artifacts)?;
    println!(
        "{}: W({}, {}), degree {}, {} grid points",
        summary.target, summary.lambda, summary.k, summary.degree, summary.grid_count
    );
    print_summary(&report.summary);
    Ok(0)
}

fn data_fit(args: DataFitArgs) -> Result<u8, Failure> {
    let data = read_samples(&args.input)?;
    let base = WeibullBase::new(args.base.lambda.unwrap_or(1.0), args.base.shape_k.unwrap_or(4.0))?;
    let degree = args.base.degree.unwrap_or(20);
    if args.audit_grid < 2 {
        return Err(usage("--audit-grid must be at least 2"));
    }
    let fit = fit_pwm(&data, base, degree)?;
    let model = &fit.model;
    let range = model.valid_range();
    let grid = pm_grid(args.audit_grid, range.lo(), range.hi())?;
    let mut curve = String::from("x,f(x)\n");
    for &u in &grid {
        let x = model.quantile(u)?;
        let d = model.quantile_derivative(u)?;
        let f = if d > 0.0 { 1.0 / d } else { f64::NAN };
        curve.push_str(&format!("{},{}\n", fmt17(x), fmt17(f)));
    }
    let diagnostics: &PwmDiagnostics = &fit.diagnostics;
    let json = serde_json::to_string_pretty(diagnostics).map_err(|e| usage(e.to_string()))? + "\n";
    output::write_all(&[
        Artifact::new(&args.out_model, model.to_json().into_bytes()),
        Artifact::new(&args.out_report, curve.into_bytes()),
        Artifact::new(sidecar_json(&args.out_report), json.into_bytes()),
    ])?;
    println!(
        "PWM fit of {} values: degree {}, residual {}, condition estimate {}",
        data.len(),
        degree,
        fmt17(diagnostics.residual),
        fmt17(diagnostics.condition_estimate)
    );
    if !diagnostics.monotone.is_monotone() {
        eprintln!(
            "warning: fitted quantile is not increasing at {} of {} grid points; the density is undefined there",
            diagnostics.monotone.violating_points, diagnostics.monotone.grid_size
        );
    }
    Ok(0)
}

fn load_model(path: &Path) -> Result<PolynomialQuantileModel, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(PolynomialQuantileModel::from_json(&text)?)
}

fn sample(args: SampleArgs, strict: bool) -> Result<u8, Failure> {
    let seed = match (args.seed, strict) {
        (Some(s), _) => s,
        (None, true) => return Err(usage("--seed is required in --strict mode")),
        (None, false) => {
            eprintln!("note: no --seed given, using {DEFAULT_SEED}");
            DEFAULT_SEED
        }
    };
    let model = load_model(&args.model)?;
    let values = model.sample_seeded(args.count, seed)?;
    let mut text = String::with_capacity(values.len() * 25);
    for v in values {
        text.push_str(&fmt17(v));
        text.push('\n');
    }
    match args.output {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn eval(args: EvalArgs) -> Result<u8, Failure> {
    let model = load_model(&args.model)?;
    let lines: Vec<String> = if args.values.is_empty() {
        let mut text = String::new();
        io::stdin().lock().read_to_string(&mut text)?;
        text.lines().map(str::to_owned).collect()
    } else {
        args.values
    };
    let mut failed = 0usize;
    for (idx, line) in lines.iter().enumerate() {
        let item = line.trim();
        if item.is_empty() {
            continue;
        }
        let value = item
            .parse::<f64>()
            .map_err(|_| Error::Input(format!("cannot parse '{item}'")))
            .and_then(|v| match args.direction {
                Direction::Quantile => model.quantile(v),
                Direction::Cdf => model.cdf_at(v).map(|c| c.u),
                Direction::Pdf => model.pdf_at(v),
            });
        match value {
            Ok(v) => println!("{}", fmt17(v)),
            Err(e) => {
                failed += 1;
                println!("nan");
                eprintln!("line {}: {e}", idx + 1);
            }
        }
    }
    Ok(if failed > 0 { EXIT_PARTIAL } else { 0 })
}

#[derive(Serialize)]
struct AuditSummary<'a> {
    target: String,
    model: String,
    audit_count: usize,
    error_pct: &'a ErrorSummary,
}

fn audit_model(args: AuditArgs) -> Result<u8, Failure> {
    let model = load_model(&args.model)?;
    let target = Target::parse(&args.spec, model.base())?;
    target.check_supported()?;
    let report = audit(&model, |u| target.quantile(u), args.audit_grid)?;
    let summary = AuditSummary {
        target: target.label(),
        model: args.model.display().to_string(),
        audit_count: args.audit_grid,
        error_pct: &report.summary,
    };
    output::write_all(&report_artifacts(&report, &summary, &args.out_report)?)?;
    print_summary(&report.summary);
    Ok(0)
}
