use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use locpoly::experiment::{
    emit_csv, emit_svg, fit_rate, run_convergence, Aggregate, ExperimentSpec, RateFit, SvgOptions,
    AGGREGATE_FILE, RAW_FILE,
};
use locpoly::{
    csv_header, estimate, estimate_robust, for_each_sample, gen_random_polynomial, write_csv_row,
    AggregationConfig, CoefficientLaw, Dataset, DifferentialOperator, Error, EstimateResult,
    EstimatorConfig, ExperimentFunctionSpec, NoiseModel, OperatorSpec, PolynomialMap, RadiusMode,
    VectorFunction,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{
    AggregateArg, ConvergenceArgs, EstimatorArgs, FitArgs, GenerateArgs, RobustArgs,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_AGGREGATION: u8 = 5;

const SCHEMA: u32 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub name: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: String) -> Self {
        Self {
            code: EXIT_USAGE,
            name: "UsageError",
            message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::SpecInvalid(_)
            | Error::DimensionMismatch(_)
            | Error::OperatorOrderTooHigh { .. } => EXIT_USAGE,
            Error::Parse(_) | Error::Io { .. } | Error::NoData | Error::TooFewPoints { .. } => {
                EXIT_DATA
            }
            Error::InsufficientSamples { .. } | Error::RankDeficient { .. } | Error::ZeroScale => {
                EXIT_NUMERICAL
            }
            Error::TooFewSamples { .. } | Error::NoMajorityBall { .. } => EXIT_AGGREGATION,
        };
        Self {
            code,
            name: e.name(),
            message: e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|source| {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(
    path: &Path,
    invalid: fn(String) -> Error,
) -> Outcome<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())).into())
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|source| {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn emit_report(report: &Value, output: Option<&Path>) -> Outcome<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match output {
        Some(path) => write_text(path, &text),
        None => print_stdout(&text),
    }
}

// A closed pipe (`locpoly fit ... | head`) is not an error.
fn print_stdout(text: &str) -> Outcome<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::from(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })),
        _ => Ok(()),
    }
}

/// Settings shared by `fit` and `robust`, read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<usize>,
    operator: Option<OperatorSpec>,
    bandwidth_constant: Option<f64>,
    center: Option<Vec<f64>>,
    rank_rtol: Option<f64>,
    min_condition_warn: Option<f64>,
    failure_prob: Option<f64>,
    eps0: Option<f64>,
    radius: Option<f64>,
    seed: Option<u64>,
}

struct Prepared {
    data: Dataset,
    op: DifferentialOperator,
    config: EstimatorConfig,
    center: Vec<f64>,
}

fn prepare(args: &EstimatorArgs) -> Outcome<(Prepared, FileConfig)> {
    let file: FileConfig = match &args.config {
        Some(p) => read_json(p, Error::InvalidArgument)?,
        None => FileConfig::default(),
    };
    let k =
        args.k.map(|k| k as usize).or(file.k).ok_or_else(|| {
            Failure::usage("k is required: pass --k or set it in --config".into())
        })?;
    let mut config = EstimatorConfig::new(k);
    if let Some(b) = args.bandwidth_constant.or(file.bandwidth_constant) {
        config = config.with_bandwidth_constant(b);
    }
    config.rank_rtol = args.rank_rtol.or(file.rank_rtol);
    if let Some(w) = file.min_condition_warn {
        config.min_condition_warn = w;
    }
    config.validate()?;

    let mut data = Dataset::read_csv(&args.data)?;
    let d = data.input_dim();
    let op = match (&args.operator, &file.operator) {
        (Some(text), _) => DifferentialOperator::parse(text, d)?,
        (None, Some(spec)) => spec.resolve(d)?,
        (None, None) => DifferentialOperator::identity(d),
    };
    let center = args
        .center
        .clone()
        .or_else(|| file.center.clone())
        .unwrap_or_else(|| vec![0.0; d]);
    if center.len() != d {
        return Err(Failure::usage(format!(
            "--center has {} coordinates, the data have d = {d}",
            center.len()
        )));
    }
    if center.iter().any(|c| *c != 0.0) {
        data = data.translated(&center)?;
    }
    Ok((
        Prepared {
            data,
            op,
            config,
            center,
        },
        file,
    ))
}

fn base_report(command: &str, p: &Prepared) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m.insert("status".into(), json!("ok"));
    m.insert("n".into(), json!(p.data.len()));
    m.insert("d".into(), json!(p.data.input_dim()));
    m.insert("D".into(), json!(p.data.output_dim()));
    m.insert("k".into(), json!(p.config.k));
    m.insert(
        "bandwidth_constant".into(),
        json!(p.config.bandwidth_constant),
    );
    m.insert("operator".into(), json!(p.op.terms()));
    m.insert("order".into(), json!(p.op.order()));
    m.insert("center".into(), json!(p.center));
    m
}

fn fit_fields(r: &EstimateResult) -> Value {
    json!({
        "estimate": r.value,
        "N_n": r.neighborhood.count(),
        "delta_n": r.neighborhood.delta,
        "epsilon_n": r.neighborhood.epsilon,
        "condition_number": r.condition_number,
        "rank_ok": r.rank_ok,
        "ill_conditioned": r.ill_conditioned,
    })
}

fn merge(m: &mut serde_json::Map<String, Value>, v: Value) {
    if let Value::Object(o) = v {
        m.extend(o);
    }
}

fn warn_conditioning(r: &EstimateResult) {
    if r.ill_conditioned {
        eprintln!(
            "warning: design matrix condition number {:.3e}",
            r.condition_number
        );
    }
}

pub fn fit(args: FitArgs) -> Outcome<()> {
    let (p, _) = prepare(&args.est)?;
    let r = estimate(&p.data, &p.op, &p.config)?;
    warn_conditioning(&r);
    let mut report = base_report("fit", &p);
    merge(&mut report, fit_fields(&r));
    emit_report(&Value::Object(report), args.est.output.as_deref())
}

pub fn robust(args: RobustArgs) -> Outcome<()> {
    let (p, file) = prepare(&args.est)?;
    let mut agg = AggregationConfig::new(
        args.failure_prob
            .or(file.failure_prob)
            .ok_or_else(|| Failure::usage("--failure-prob is required".into()))?,
    );
    if let Some(e0) = args.eps0.or(file.eps0) {
        agg.epsilon_zero = e0;
    }
    if let Some(r) = args.radius.or(file.radius) {
        agg.radius_mode = RadiusMode::Fixed(r);
    }
    agg.validate()?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let r = estimate_robust(&p.data, &p.op, &p.config, &agg, seed)?;
    let chosen = &r.splits[r.center.index];
    warn_conditioning(chosen);

    let mut report = base_report("robust", &p);
    let mode = match r.mode {
        RadiusMode::Fixed(_) => "fixed",
        RadiusMode::Adaptive => "adaptive",
    };
    merge(
        &mut report,
        json!({
            "estimate": r.value,
            "N_n": chosen.neighborhood.count(),
            "delta_n": chosen.neighborhood.delta,
            "epsilon_n": chosen.neighborhood.epsilon,
            "condition_number": chosen.condition_number,
            "rank_ok": chosen.rank_ok,
            "ill_conditioned": chosen.ill_conditioned,
            "failure_prob": agg.target_failure,
            "eps0": agg.epsilon_zero,
            "nu": r.num_splits(),
            "mode": mode,
            "rho": match r.mode { RadiusMode::Fixed(rho) => Some(rho), RadiusMode::Adaptive => None },
            "ball_radius": r.center.radius,
            "support": r.center.support,
            "center_index": r.center.index,
            "seed": seed,
            "splits": r.splits.iter().map(fit_fields).collect::<Vec<_>>(),
        }),
    );
    emit_report(&Value::Object(report), args.est.output.as_deref())
}

/// Files created by a command, deleted again unless the command succeeds.
struct Cleanup {
    files: Vec<PathBuf>,
    dir: Option<PathBuf>,
    armed: bool,
}

impl Cleanup {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            dir: None,
            armed: true,
        }
    }

    fn track(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn disarm(mut self) {
        self.armed = false;
    }
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        if !self.armed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(d) = &self.dir {
            let _ = fs::remove_dir(d);
        }
    }
}

pub const SVG_FILE: &str = "plot.svg";
pub const RATE_FILE: &str = "rate.json";

#[derive(Serialize)]
struct Untrusted {
    #[serde(rename = "D")]
    dim_out: usize,
    n: usize,
    failure_rate: f64,
}

pub fn convergence(args: ConvergenceArgs) -> Outcome<()> {
    let mut spec: ExperimentSpec = read_json(&args.spec, Error::SpecInvalid)?;
    if let Some(t) = args.trials {
        spec.trials = t as usize;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if args.fix_function {
        spec.fix_function = true;
    }
    if let Some(a) = args.aggregate {
        spec.aggregate = match a {
            AggregateArg::Mean => Aggregate::Mean,
            AggregateArg::Median => Aggregate::Median,
        };
    }
    let r_expected = spec.expected_rate()?;

    let mut cleanup = Cleanup::new();
    if !args.out.exists() {
        fs::create_dir_all(&args.out).map_err(|source| Error::Io {
            path: args.out.clone(),
            source,
        })?;
        cleanup.dir = Some(args.out.clone());
    }
    cleanup.track(args.out.join(RAW_FILE));
    cleanup.track(args.out.join(AGGREGATE_FILE));
    let svg_path = cleanup.track(args.out.join(SVG_FILE));
    let rate_path = cleanup.track(args.out.join(RATE_FILE));

    let table = run_convergence(&spec)?;
    emit_csv(&table, &args.out)?;

    let (rate, rate_error): (Option<RateFit>, Option<String>) = match fit_rate(&table, r_expected) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::TooFewPoints { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let opts = SvgOptions {
        width: args.width,
        height: args.height,
        title: None,
    };
    let plot = if table.aggregates.is_empty() {
        eprintln!("warning: every trial failed; no plot written");
        None
    } else {
        emit_svg(&table, rate.as_ref(), &svg_path, &opts)?;
        Some(SVG_FILE)
    };
    let untrusted: Vec<Untrusted> = table
        .untrusted()
        .into_iter()
        .map(|(dim_out, n)| Untrusted {
            dim_out,
            n,
            failure_rate: table.failure_rate(dim_out, n),
        })
        .collect();
    for u in &untrusted {
        eprintln!(
            "warning: D = {}, n = {} is untrusted ({:.0}% failed trials)",
            u.dim_out,
            u.n,
            100.0 * u.failure_rate
        );
    }
    if let Some(r) = &rate {
        for e in &r.excluded {
            eprintln!(
                "note: n = {} excluded from the D = {} fit ({:.0}% failed)",
                e.n,
                e.dim_out,
                100.0 * e.failure_rate
            );
        }
    }
    let summary = json!({
        "schema": SCHEMA,
        "r_expected": r_expected,
        "rate": rate,
        "prefactor": rate.as_ref().map(|r| r.intercept.exp()),
        "rate_error": rate_error,
        "trials_total": table.rows.len(),
        "trials_failed": table.failed_trials(),
        "untrusted": untrusted,
        "plot": plot,
    });
    let text = serde_json::to_string_pretty(&summary).expect("reports serialize") + "\n";
    write_text(&rate_path, &text)?;
    match &rate {
        Some(r) => eprintln!(
            "slope {:.4} (expected {:.4}), {} of {} trials failed; outputs in {}",
            r.slope,
            -r_expected,
            table.failed_trials(),
            table.rows.len(),
            args.out.display()
        ),
        None => eprintln!("no rate fit; outputs in {}", args.out.display()),
    }
    cleanup.disarm();
    Ok(())
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateSpec {
    d: usize,
    #[serde(rename = "D")]
    dim_out: usize,
    degree: usize,
    n: usize,
    #[serde(default = "NoiseModel::none")]
    noise: NoiseModel,
    #[serde(default = "one")]
    half_width: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    coefficient_law: CoefficientLaw,
    /// Explicit coefficients, one row per output coordinate in basis order.
    #[serde(default)]
    coefficients: Option<Vec<Vec<f64>>>,
}

// Derivation key separating the function draw from the sample draw.
const FUNCTION_SEED_KEY: u64 = 0xF0;

fn build_function(spec: &GenerateSpec) -> Outcome<PolynomialMap> {
    let invalid = |m: String| Failure::from(Error::SpecInvalid(m));
    if spec.d == 0 || spec.dim_out == 0 || spec.n == 0 {
        return Err(invalid("d, D and n must be positive".into()));
    }
    spec.noise.validate().map_err(|e| invalid(e.to_string()))?;
    if !(spec.half_width > 0.0 && spec.half_width.is_finite()) {
        return Err(invalid("half_width must be positive".into()));
    }
    match &spec.coefficients {
        Some(rows) => {
            if rows.len() != spec.dim_out {
                return Err(invalid(format!(
                    "{} coefficient rows for D = {}",
                    rows.len(),
                    spec.dim_out
                )));
            }
            PolynomialMap::new(spec.d, spec.degree, rows.clone())
                .map_err(|e| invalid(e.to_string()))
        }
        None => gen_random_polynomial(&ExperimentFunctionSpec {
            d: spec.d,
            dim_out: spec.dim_out,
            degree: spec.degree,
            coefficient_law: spec.coefficient_law,
            seed: locpoly::seed::derive(spec.seed, &[FUNCTION_SEED_KEY]),
        })
        .map_err(|e| invalid(e.to_string())),
    }
}

/// `data.csv` → `data.truth.json`
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("truth.json")
}

pub fn generate(args: GenerateArgs) -> Outcome<()> {
    let mut spec: GenerateSpec = read_json(&args.spec, Error::SpecInvalid)?;
    if let Some(n) = args.n {
        spec.n = n as usize;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let f = build_function(&spec)?;

    let mut cleanup = Cleanup::new();
    let out = cleanup.track(args.out.clone());
    let truth_path = cleanup.track(sidecar_path(&args.out));
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Failure::from(Error::Io { path, source })
    };
    let file = File::create(&out).map_err(io(&out))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    writeln!(w, "{}", csv_header(spec.d, spec.dim_out)).map_err(io(&out))?;
    let mut line = String::new();
    let mut write_err = None;
    for_each_sample(
        &f,
        spec.n,
        &spec.noise,
        spec.half_width,
        f64::INFINITY,
        spec.seed,
        |x, y| {
            if write_err.is_none() {
                if let Err(e) = write_csv_row(&mut w, x, y, &mut line) {
                    write_err = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = write_err {
        return Err(io(&out)(e));
    }
    w.flush().map_err(io(&out))?;

    let derivatives: Vec<Value> = f
        .basis()
        .indices()
        .iter()
        .map(|alpha| json!({ "alpha": alpha, "value": f.derivative_at_origin(alpha) }))
        .collect();
    let identity = f.operator_at_origin(&DifferentialOperator::identity(spec.d));
    let truth = json!({
        "schema": SCHEMA,
        "d": spec.d,
        "D": spec.dim_out,
        "degree": spec.degree,
        "n": spec.n,
        "seed": spec.seed,
        "half_width": spec.half_width,
        "noise": spec.noise,
        "basis": f.basis().indices(),
        "coefficients": f.coefficient_rows(),
        "identity": identity,
        "derivatives": derivatives,
    });
    let text = serde_json::to_string_pretty(&truth).expect("sidecars serialize") + "\n";
    write_text(&truth_path, &text)?;
    cleanup.disarm();
    eprintln!(
        "wrote {} rows to {} and {}",
        spec.n,
        out.display(),
        truth_path.display()
    );
    Ok(())
}
