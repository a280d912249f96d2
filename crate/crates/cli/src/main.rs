use std::fmt::{Debug, Display};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use approxrate::cartoon::{
    make_hypercube_with, rasterize, star_membership, vertex_function, CartoonError, HypercubeOptions, Raster, StarFunction,
    BASE_CENTER, BASE_RADIUS,
};
use approxrate::constructors::{
    build_bspline_net, build_plus_monomial, build_plus_power, build_power, build_relu, certify, BuildReport,
};
use approxrate::nnet::{network_from_json, network_to_json, ActivationSpec, NetError};
use approxrate::quantizer::{minimal_k, quantize_with_report, QuantError};
use approxrate::ratelab::{run_experiment, Experiment, RateError};
use approxrate::splines::{BSpline, SplineError};
use approxrate::wedgelet::{decode, encode, encode_target, render, DictionaryParams, WedgeCode, WedgeError, FORMAT_VERSION};

const NETWORK_JSON_VERSION: u32 = 1;
const RASTER_RAW_VERSION: u32 = 1;

fn version_text() -> String {
    format!(
        "{}\nnetwork-json {NETWORK_JSON_VERSION}\nwdgl {FORMAT_VERSION}\nraster-raw {RASTER_RAW_VERSION}\nrates-csv 1",
        env!("CARGO_PKG_VERSION")
    )
}

/// Sparse networks, quantization, cartoon images and wedgelet coding.
#[derive(Parser, Serialize)]
#[command(name = "approxrate")]
struct Cli {
    /// Seed for every sampled grid or randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads made available to the library.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    /// Write a JSON manifest of the full run configuration.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Sample the cardinal B-spline N_m on [0, m] as CSV.
    Bspline(BsplineArgs),
    /// Build an approximating network and its certificate.
    Build(BuildArgs),
    /// Round network weights to a grid and report the bit cost.
    Quantize(QuantizeArgs),
    /// Rasterize a disc or a petal hypercube vertex.
    Star(StarArgs),
    /// Wedgelet encoder and decoder.
    #[command(subcommand)]
    Wedge(WedgeCommand),
    /// Run a rate experiment and write CSV.
    Rates(RatesArgs),
}

#[derive(Args, Serialize)]
struct BsplineArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m: u64,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
    samples: u64,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BuildTarget {
    PlusPower,
    Power,
    Relu,
    Monomial,
    Bspline,
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ActivationArg {
    ReluPower,
    LogisticPower,
}

#[derive(Args, Serialize)]
struct BuildArgs {
    #[arg(long, value_enum)]
    target: BuildTarget,
    /// Sigmoidal order of the activation.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Level of the power constructions.
    #[arg(long = "L", default_value_t = 1)]
    level: u32,
    /// Monomial power or B-spline order.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    eps: f64,
    /// Half-width of the domain [-D, D].
    #[arg(long = "D", default_value_t = 1.0)]
    d: f64,
    #[arg(long, value_enum, default_value = "relu-power")]
    activation: ActivationArg,
    #[arg(long)]
    out: PathBuf,
    /// Certificate path; stdout when absent.
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("precision").required(true).args(["m", "auto"])))]
struct QuantizeArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    eta: f64,
    /// Range exponent; the smallest one covering every weight when absent.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    /// Search the smallest m reaching error eta.
    #[arg(long)]
    auto: bool,
    #[arg(long = "D", default_value_t = 1.0)]
    d: f64,
    /// Sup-norm grid size.
    #[arg(long, default_value_t = 2001, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long)]
    out: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StarKind {
    Disc,
    Petals,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum RasterFormat {
    Pgm,
    Raw,
}

fn parse_bits(s: &str) -> Result<String, String> {
    if s.chars().all(|c| c == '0' || c == '1') {
        Ok(s.to_string())
    } else {
        Err("expected a string of 0 and 1".into())
    }
}

#[derive(Args, Serialize)]
struct StarArgs {
    #[arg(long, value_enum)]
    kind: StarKind,
    #[arg(long, default_value_t = 0.0625)]
    delta: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Hypercube vertex, one bit per petal; all ones when absent.
    #[arg(long, value_parser = parse_bits)]
    xi: Option<String>,
    /// Half-sine petals with the angular-integral normalization.
    #[arg(long)]
    angular_half_sine: bool,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Samples per pixel side.
    #[arg(long, default_value_t = 8)]
    supersample: usize,
    #[arg(long)]
    out: PathBuf,
    /// Output format; taken from the extension when absent.
    #[arg(long, value_enum)]
    format: Option<RasterFormat>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WedgeCommand {
    /// Encode a raw raster into a WDGL stream.
    Encode(WedgeEncodeArgs),
    /// Decode a WDGL stream into a raster.
    Decode(WedgeDecodeArgs),
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("penalty").required(true).args(["lambda", "target_eps"])))]
struct WedgeEncodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Finest level; log2 of the raster side when absent.
    #[arg(long = "J")]
    j: Option<u32>,
    /// Vertex refinement levels; J when absent.
    #[arg(long = "K")]
    k: Option<u32>,
    #[arg(long = "Mcap")]
    m_cap: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    target_eps: Option<f64>,
}

#[derive(Args, Serialize)]
struct WedgeDecodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Render the partition at level J' instead of the coded level.
    #[arg(long = "render-J")]
    render_j: Option<u32>,
    #[arg(long, value_enum)]
    format: Option<RasterFormat>,
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ExperimentArg {
    BsplineNet,
    Quantize,
    WedgeDisc,
    WedgePetals,
    Hamming,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::BsplineNet => Experiment::BsplineNet,
            ExperimentArg::Quantize => Experiment::Quantize,
            ExperimentArg::WedgeDisc => Experiment::WedgeDisc,
            ExperimentArg::WedgePetals => Experiment::WedgePetals,
            ExperimentArg::Hamming => Experiment::Hamming,
        }
    }
}

#[derive(Args, Serialize)]
struct RatesArgs {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Write 0 in the runtime column so reruns are byte-identical.
    #[arg(long)]
    omit_timing: bool,
}

/// Failure of a run, named after the module error that caused it.
#[derive(Debug)]
struct CliError {
    name: String,
    message: String,
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.name, self.message)
    }
}

fn variant_name<E: Debug>(e: &E) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or_default().to_string()
}

fn named<E: Debug + Display>(module: &str, e: E) -> CliError {
    CliError { name: format!("{module}::{}", variant_name(&e)), message: e.to_string() }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError { name: "IoError".into(), message: e.to_string() }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        named("NetError", e)
    }
}

impl From<QuantError> for CliError {
    fn from(e: QuantError) -> Self {
        match e {
            QuantError::Net(e) => e.into(),
            e => named("QuantError", e),
        }
    }
}

impl From<SplineError> for CliError {
    fn from(e: SplineError) -> Self {
        named("SplineError", e)
    }
}

impl From<CartoonError> for CliError {
    fn from(e: CartoonError) -> Self {
        match e {
            CartoonError::Io(e) => e.into(),
            e => named("CartoonError", e),
        }
    }
}

impl From<WedgeError> for CliError {
    fn from(e: WedgeError) -> Self {
        named("WedgeError", e)
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::Net(e) => e.into(),
            RateError::Quant(e) => e.into(),
            RateError::Wedge(e) => e.into(),
            RateError::Cartoon(e) => e.into(),
            e => named("RateError", e),
        }
    }
}

/// What a subcommand produced: the paths it wrote and a summary.
struct Outcome {
    outputs: Vec<PathBuf>,
    report: Value,
}

fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if is_stdout(path) {
        let mut out = io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn usage_error(message: String) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, message).exit()
}

fn raster_format(path: &Path, explicit: Option<RasterFormat>) -> RasterFormat {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => RasterFormat::Pgm,
        _ => RasterFormat::Raw,
    })
}

fn write_raster(r: &Raster, path: &Path, format: RasterFormat) -> Result<(), CliError> {
    let mut bytes = Vec::new();
    match format {
        RasterFormat::Pgm => r.write_pgm(&mut bytes)?,
        RasterFormat::Raw => r.write_raw(&mut bytes)?,
    }
    write_out(path, &bytes)
}

fn run_bspline(a: &BsplineArgs) -> Result<Outcome, CliError> {
    let m = a.m as usize;
    let spline = BSpline::new(m)?;
    let last = (a.samples - 1) as f64;
    let mut csv = String::from("x,value\n");
    for i in 0..a.samples {
        let x = m as f64 * i as f64 / last;
        csv.push_str(&format!("{x:.16e},{:.16e}\n", spline.eval(x)));
    }
    write_out(&a.out, csv.as_bytes())?;
    Ok(Outcome { outputs: vec![a.out.clone()], report: json!({ "rows": a.samples }) })
}

fn activation(kind: ActivationArg, k: u32) -> ActivationSpec {
    match kind {
        ActivationArg::ReluPower => ActivationSpec::relu_power(k),
        ActivationArg::LogisticPower => ActivationSpec::logistic_power(k),
    }
}

fn run_build(a: &BuildArgs) -> Result<Outcome, CliError> {
    let spec = activation(a.activation, a.k);
    let need_m = |what: &str| a.m.unwrap_or_else(|| usage_error(format!("--target {what} requires --m\n")));
    let report: BuildReport = match a.target {
        BuildTarget::PlusPower => build_plus_power(a.level, a.eps, a.d, &spec)?,
        BuildTarget::Power => build_power(a.level, a.eps, a.d, &spec)?,
        BuildTarget::Relu => build_relu(a.eps, a.d, &spec)?,
        BuildTarget::Monomial => build_plus_monomial(need_m("monomial"), a.eps, a.d, &spec)?,
        BuildTarget::Bspline => build_bspline_net(need_m("bspline"), a.eps, a.d, &spec)?,
    };
    let cert = certify(&report)?;
    let mut cert_json = serde_json::to_value(&cert).map_err(NetError::Format)?;
    if let Value::Object(map) = &mut cert_json {
        map.insert("error_ok".into(), cert.error_ok().into());
        map.insert("structure_ok".into(), cert.structure_ok().into());
        map.insert("passed".into(), cert.passed().into());
    }
    let mut net_text = network_to_json(&report.network);
    net_text.push('\n');
    write_out(&a.out, net_text.as_bytes())?;
    let cert_path = a.cert.clone().unwrap_or_else(|| PathBuf::from("-"));
    write_out(&cert_path, json_text(&cert_json).as_bytes())?;
    Ok(Outcome { outputs: vec![a.out.clone(), cert_path], report: cert_json })
}

fn run_quantize(a: &QuantizeArgs) -> Result<Outcome, CliError> {
    let net = network_from_json(&fs::read_to_string(&a.net)?)?;
    let k = a.k.unwrap_or_else(|| minimal_k(&net, a.eta));
    let m = if a.auto { None } else { a.m };
    let (q, report) = quantize_with_report(&net, a.eta, k, m, a.d, a.grid as usize)?;
    let mut net_text = network_to_json(&q);
    net_text.push('\n');
    write_out(&a.out, net_text.as_bytes())?;
    let report_json = serde_json::to_value(&report).map_err(NetError::Format)?;
    let report_path = a.report.clone().unwrap_or_else(|| PathBuf::from("-"));
    write_out(&report_path, json_text(&report_json).as_bytes())?;
    Ok(Outcome { outputs: vec![a.out.clone(), report_path], report: report_json })
}

fn run_star(a: &StarArgs) -> Result<Outcome, CliError> {
    let (f, m): (StarFunction, Option<usize>) = match a.kind {
        StarKind::Disc => (StarFunction::disc(BASE_CENTER, BASE_RADIUS, a.beta, a.c), None),
        StarKind::Petals => {
            let options = if a.angular_half_sine { HypercubeOptions::angular_half_sine() } else { HypercubeOptions::default() };
            let spec = make_hypercube_with(a.delta, a.beta, a.c, options)?;
            let xi: Vec<bool> = match &a.xi {
                Some(bits) => bits.chars().map(|c| c == '1').collect(),
                None => vec![true; spec.m],
            };
            (vertex_function(&spec, &xi)?, Some(spec.m))
        }
    };
    let raster = rasterize(&f, a.n, a.supersample)?;
    write_raster(&raster, &a.out, raster_format(&a.out, a.format))?;
    let membership = star_membership(&f);
    let report = json!({
        "m": m,
        "n": a.n,
        "mean": raster.mean(),
        "membership": serde_json::to_value(&membership).map_err(NetError::Format)?,
        "member": membership.passed(),
    });
    if !is_stdout(&a.out) {
        write_out(Path::new("-"), json_text(&report).as_bytes())?;
    }
    Ok(Outcome { outputs: vec![a.out.clone()], report })
}

fn run_wedge_encode(a: &WedgeEncodeArgs) -> Result<Outcome, CliError> {
    let f = Raster::from_raw(&fs::read(&a.input)?)?;
    let j = match a.j {
        Some(j) => j,
        None => f.n.trailing_zeros(),
    };
    if 1usize.checked_shl(j) != Some(f.n) {
        return Err(WedgeError::Params(format!("raster side {} differs from 2^J = 2^{j}", f.n)).into());
    }
    let params = DictionaryParams::new(j, a.k.unwrap_or(j), a.m_cap)?;
    let (code, report) = match (a.lambda, a.target_eps) {
        (Some(lambda), _) => encode(&f, params, lambda)?,
        (None, Some(eps)) => encode_target(&f, params, eps)?,
        (None, None) => unreachable!("clap requires one of --lambda and --target-eps"),
    };
    write_out(&a.out, &code.to_bytes())?;
    let report = serde_json::to_value(&report).map_err(NetError::Format)?;
    if !is_stdout(&a.out) {
        write_out(Path::new("-"), json_text(&report).as_bytes())?;
    }
    Ok(Outcome { outputs: vec![a.out.clone()], report })
}

fn run_wedge_decode(a: &WedgeDecodeArgs) -> Result<Outcome, CliError> {
    let code = WedgeCode::from_bytes(&fs::read(&a.input)?)?;
    let decoded = decode(&code)?;
    let raster = match a.render_j {
        Some(j) => render(&code, j)?,
        None => decoded.array.clone(),
    };
    for w in &decoded.warnings {
        eprintln!("warning: {w}");
    }
    write_raster(&raster, &a.out, raster_format(&a.out, a.format))?;
    let report = json!({
        "n": raster.n,
        "leaves": decoded.leaves.len(),
        "total_bits": code.total_bits(),
        "warnings": decoded.warnings,
    });
    if !is_stdout(&a.out) {
        write_out(Path::new("-"), json_text(&report).as_bytes())?;
    }
    Ok(Outcome { outputs: vec![a.out.clone()], report })
}

fn run_rates(a: &RatesArgs, seed: u64) -> Result<Outcome, CliError> {
    let rows = run_experiment(a.experiment.into(), seed)?;
    let mut csv = String::from("knob,size_bits_or_connectivity,error,runtime_ms\n");
    for r in &rows {
        let ms = if a.omit_timing { 0.0 } else { r.runtime_ms };
        csv.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.knob, r.size, r.error, ms));
    }
    write_out(&a.out, csv.as_bytes())?;
    Ok(Outcome { outputs: vec![a.out.clone()], report: json!({ "rows": rows.len() }) })
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Bspline(a) => run_bspline(a),
        Command::Build(a) => run_build(a),
        Command::Quantize(a) => run_quantize(a),
        Command::Star(a) => run_star(a),
        Command::Wedge(WedgeCommand::Encode(a)) => run_wedge_encode(a),
        Command::Wedge(WedgeCommand::Decode(a)) => run_wedge_decode(a),
        Command::Rates(a) => run_rates(a, cli.seed),
    }
}

fn write_manifest(cli: &Cli, path: &Path, outcome: &Outcome) -> Result<(), CliError> {
    let manifest = json!({
        "tool": "approxrate",
        "version": env!("CARGO_PKG_VERSION"),
        "formats": {
            "network-json": NETWORK_JSON_VERSION,
            "wdgl": FORMAT_VERSION,
            "raster-raw": RASTER_RAW_VERSION,
        },
        "seed": cli.seed,
        "threads": cli.threads,
        "command": serde_json::to_value(&cli.command).map_err(NetError::Format)?,
        "outputs": outcome.outputs,
        "report": outcome.report,
    });
    fs::write(path, json_text(&manifest))?;
    Ok(())
}

fn main() -> ExitCode {
    let matches = Cli::command().version(version_text()).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let result = run(&cli).and_then(|outcome| match &cli.manifest {
        Some(path) => write_manifest(&cli, path, &outcome),
        None => Ok(()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
