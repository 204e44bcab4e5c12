//! Command-line surface for the torus-bundle growth pipeline.
//!
//! Subcommands:
//!   analyze    spectral screen + canonical form report
//!   series     cross-section growth series (JSON + CSV), oracle-gated
//!   oracle     brute-force Cayley-graph sphere/ball counts (CSV)
//!   convexity  AC(2) probe + divergence sweep report files
//!
//! Exit codes: 0 success, 1 file/parse/config error, 2 hypothesis or
//! tolerance failure, 3 oracle mismatch, 4 resource cap exceeded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;

use torus_growth::automaton::{AutomatonError, RationalSeries};
use torus_growth::convexity::{
    abs_jordan, ac2_probe, divergence_bracket, divergence_estimate, lattice_embed,
    ConvexityError,
};
use torus_growth::cross_section::{
    canonical_cross_section, fftp_constants, group_series, CrossSectionError, SectionParams,
};
use torus_growth::group::{Group, GroupError};
use torus_growth::matrix::{
    select_power, spectral_classify, CanonicalSetup, IntMatrix, MatrixError,
};
use torus_growth::poly::IntPoly;

#[derive(Parser)]
#[command(
    name = "torus-growth",
    about = "Rational growth series and convexity probes for torus-bundle groups Z^N x_A Z"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral screen, power selection, and canonical-form report.
    Analyze(CommonArgs),
    /// Build the minimal cross-section and emit sphere/ball series.
    Series(CommonArgs),
    /// Brute-force sphere/ball counts from the Cayley graph.
    Oracle(CommonArgs),
    /// Almost-convexity probe and divergence estimates.
    Convexity(CommonArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Mode {
    /// Literal fellow-traveling constants (desk-scale only).
    Certified,
    /// Empirical parameters, trusted only after the oracle comparison.
    Tightened,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Path to a whitespace/row-separated integer matrix file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Parameter regime for the cross-section construction.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Tightened coefficient bound n (series); probe radius (convexity).
    #[arg(long)]
    n: Option<i64>,
    /// Tightened padding allowance between a word and its witness.
    #[arg(long)]
    i: Option<usize>,
    /// Tightened clamp on the running weight difference.
    #[arg(long)]
    kft: Option<i64>,
    /// Largest power of A tried when selecting the canonical form.
    #[arg(long)]
    max_power: Option<u32>,
    /// Radius of the brute-force comparison (and of `oracle` output).
    #[arg(long)]
    oracle_radius: Option<u32>,
    /// Output directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on explored automaton states / enumerated group elements.
    #[arg(long)]
    cap_states: Option<usize>,
    /// Numerical tolerance for spectral and isometry checks.
    #[arg(long)]
    tol: Option<f64>,
}

/// Effective run configuration after merging defaults, the config
/// file, and flag overrides. Echoed into every output header.
#[derive(Clone, Debug)]
struct RunConfig {
    matrix_path: PathBuf,
    mode: Mode,
    n: i64,
    i: usize,
    kft: i64,
    max_power: u32,
    oracle_radius: u32,
    out: PathBuf,
    cap_states: usize,
    tol: f64,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        let code = match e {
            MatrixError::Parse(_) => 1,
            _ => 2,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        CliError::new(4, e.to_string())
    }
}

impl From<AutomatonError> for CliError {
    fn from(e: AutomatonError) -> Self {
        CliError::new(4, e.to_string())
    }
}

impl From<CrossSectionError> for CliError {
    fn from(e: CrossSectionError) -> Self {
        let code = match e {
            CrossSectionError::Automaton(_) => 4,
            _ => 2,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<ConvexityError> for CliError {
    fn from(e: ConvexityError) -> Self {
        let code = match e {
            ConvexityError::Resource(_) => 4,
            _ => 2,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(1, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (
        &CommonArgs,
        fn(&RunConfig) -> Result<(), CliError>,
    ) = match &cli.command {
        Command::Analyze(a) => (a, cmd_analyze),
        Command::Series(a) => (a, cmd_series),
        Command::Oracle(a) => (a, cmd_oracle),
        Command::Convexity(a) => (a, cmd_convexity),
    };
    let config = match build_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code);
        }
    };
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut file: BTreeMap<String, String> = BTreeMap::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new(1, format!("config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::new(1, format!("config line {}: expected key=value", lineno + 1))
            })?;
            file.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    fn pick<T: std::str::FromStr>(
        flag: Option<T>,
        file: &BTreeMap<String, String>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|_| CliError::new(1, format!("config key {key}: bad value `{raw}`"))),
            None => Ok(default),
        }
    }
    let matrix_path = match (&args.matrix, file.get("matrix")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(CliError::new(1, "no matrix file given (--matrix PATH)")),
    };
    let mode = match (args.mode, file.get("mode").map(String::as_str)) {
        (Some(m), _) => m,
        (None, Some("certified")) => Mode::Certified,
        (None, Some("tightened")) | (None, None) => Mode::Tightened,
        (None, Some(other)) => {
            return Err(CliError::new(1, format!("config key mode: bad value `{other}`")))
        }
    };
    let out = match (&args.out, file.get("out")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from("out"),
    };
    let config = RunConfig {
        matrix_path,
        mode,
        n: pick(args.n, &file, "n", 10)?,
        i: pick(args.i, &file, "i", 2)?,
        kft: pick(args.kft, &file, "kft", 8)?,
        max_power: pick(args.max_power, &file, "max_power", 6)?,
        oracle_radius: pick(args.oracle_radius, &file, "oracle_radius", 10)?,
        out,
        cap_states: pick(args.cap_states, &file, "cap_states", 2_000_000)?,
        tol: pick(args.tol, &file, "tol", 1e-9)?,
    };
    Ok(config)
}

impl RunConfig {
    fn echo_lines(&self) -> Vec<String> {
        let mode = match self.mode {
            Mode::Certified => "certified",
            Mode::Tightened => "tightened",
        };
        vec![
            format!("matrix={}", self.matrix_path.display()),
            format!("mode={mode}"),
            format!("n={}", self.n),
            format!("i={}", self.i),
            format!("kft={}", self.kft),
            format!("max_power={}", self.max_power),
            format!("oracle_radius={}", self.oracle_radius),
            format!("cap_states={}", self.cap_states),
            format!("tol={:e}", self.tol),
        ]
    }

    fn section_params(&self, setup: &CanonicalSetup) -> SectionParams {
        let consts = fftp_constants(setup);
        let mut params = match self.mode {
            Mode::Certified => SectionParams::certified(&consts),
            Mode::Tightened => SectionParams::tightened(self.n, self.i, self.kft),
        };
        params.cap_states = self.cap_states;
        params
    }
}

fn load_matrix(config: &RunConfig) -> Result<IntMatrix, CliError> {
    let text = fs::read_to_string(&config.matrix_path)
        .map_err(|e| CliError::new(1, format!("{}: {e}", config.matrix_path.display())))?;
    IntMatrix::parse_text(&text).map_err(CliError::from)
}

fn csv_header(config: &RunConfig) -> String {
    let mut s = String::new();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(s, "# generated_unix={stamp}");
    for line in config.echo_lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn write_out(config: &RunConfig, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&config.out)?;
    let path = config.out.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn poly_strings(p: &IntPoly) -> Vec<String> {
    p.coeffs().iter().map(|c| c.to_string()).collect()
}

/// Margin of the dominant-coefficient condition 2*max|c| - sum|c|;
/// positive iff the condition holds.
fn dominance_margin(p: &IntPoly) -> BigInt {
    let max = p
        .coeffs()
        .iter()
        .map(|c| c.magnitude().clone())
        .max()
        .unwrap_or_default();
    let sum: num_bigint::BigUint = p.coeffs().iter().map(|c| c.magnitude().clone()).sum();
    BigInt::from(max.clone()) * 2 - BigInt::from(sum)
}

fn prepare(config: &RunConfig) -> Result<(IntMatrix, CanonicalSetup), CliError> {
    let a = load_matrix(config)?;
    spectral_classify(&a, config.tol)?;
    let setup = select_power(&a, config.max_power)?;
    Ok((a, setup))
}

fn cmd_analyze(config: &RunConfig) -> Result<(), CliError> {
    let a = load_matrix(config)?;
    for line in config.echo_lines() {
        println!("# {line}");
    }
    let report = spectral_classify(&a, config.tol)?;
    println!("dimension: {}", a.n);
    println!(
        "eigenvalues: {}",
        report
            .eigenvalues
            .iter()
            .map(|l| format!("{:.6}{:+.6}i", l.re, l.im))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "moduli: {}",
        report
            .moduli
            .iter()
            .map(|m| format!("{m:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("margin: {:.6e}", report.margin);
    let setup = select_power(&a, config.max_power)?;
    println!("selected power: {}", setup.power);
    println!("blocks (ascending coefficients, dominance margin):");
    for p in &setup.blocks {
        println!(
            "  [{}]  margin {}",
            poly_strings(p).join(", "),
            dominance_margin(p)
        );
    }
    let consts = fftp_constants(&setup);
    println!(
        "constants: M={} N={} k={} A={} B={} K1={} K2={} K3={} K_ft={}",
        consts.m,
        consts.n_dim,
        consts.k,
        consts.a_bound,
        consts.b,
        consts.k1,
        consts.k2,
        consts.k3,
        consts.k_ft
    );
    Ok(())
}

#[derive(Serialize)]
struct SeriesJson {
    config: BTreeMap<String, String>,
    sphere_numerator: Vec<String>,
    sphere_denominator: Vec<String>,
    ball_numerator: Vec<String>,
    ball_denominator: Vec<String>,
    sphere_coefficients: Vec<String>,
    ball_coefficients: Vec<String>,
}

fn config_map(config: &RunConfig) -> BTreeMap<String, String> {
    config
        .echo_lines()
        .iter()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn cmd_series(config: &RunConfig) -> Result<(), CliError> {
    if config.mode == Mode::Tightened && config.oracle_radius < 6 {
        return Err(CliError::new(
            1,
            "tightened mode requires oracle_radius >= 6; a series is never emitted unverified",
        ));
    }
    let (_a, setup) = prepare(config)?;
    let params = config.section_params(&setup);
    let dfa = canonical_cross_section(&setup, &params)?;
    let (sphere, ball) = group_series(&dfa);
    if config.mode == Mode::Tightened {
        let group = Group::new(setup.clone());
        let oracle = group.bfs_spheres(config.oracle_radius, config.cap_states)?;
        let ours = sphere.coefficients(oracle.len());
        for (d, (got, want)) in ours.iter().zip(oracle.iter()).enumerate() {
            if got != &BigInt::from(*want) {
                return Err(CliError::new(
                    3,
                    format!("oracle mismatch at distance {d}: series {got}, oracle {want}"),
                ));
            }
        }
    }
    let count = 51;
    let json = SeriesJson {
        config: config_map(config),
        sphere_numerator: poly_strings(&sphere.num),
        sphere_denominator: poly_strings(&sphere.den),
        ball_numerator: poly_strings(&ball.num),
        ball_denominator: poly_strings(&ball.den),
        sphere_coefficients: series_strings(&sphere, count),
        ball_coefficients: series_strings(&ball, count),
    };
    let json_text = serde_json::to_string_pretty(&json).expect("series report serializes");
    let json_path = write_out(config, "series.json", &json_text)?;
    let mut csv = csv_header(config);
    csv.push_str("d,sphere,ball\n");
    let spheres = sphere.coefficients(count);
    let balls = ball.coefficients(count);
    for d in 0..count {
        let _ = writeln!(csv, "{d},{},{}", spheres[d], balls[d]);
    }
    let csv_path = write_out(config, "series.csv", &csv)?;
    println!("cross-section states: {}", dfa.num_states());
    println!("wrote {}", json_path.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn series_strings(s: &RationalSeries, count: usize) -> Vec<String> {
    s.coefficients(count)
        .iter()
        .map(|c| c.to_string())
        .collect()
}

fn cmd_oracle(config: &RunConfig) -> Result<(), CliError> {
    let (_a, setup) = prepare(config)?;
    let group = Group::new(setup);
    let spheres = group.bfs_spheres(config.oracle_radius, config.cap_states)?;
    let mut csv = csv_header(config);
    csv.push_str("n,sphere,ball\n");
    let mut ball = 0usize;
    for (n, s) in spheres.iter().enumerate() {
        ball += s;
        let _ = writeln!(csv, "{n},{s},{ball}");
    }
    let path = write_out(config, "oracle.csv", &csv)?;
    print!("{csv}");
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct DivergenceRow {
    k: u32,
    j: u32,
    bracket: f64,
    estimate: Option<f64>,
}

#[derive(Serialize)]
struct DivergenceJson {
    config: BTreeMap<String, String>,
    moduli: Vec<f64>,
    rows: Vec<DivergenceRow>,
}

fn cmd_convexity(config: &RunConfig) -> Result<(), CliError> {
    let (a, setup) = prepare(config)?;
    let jordan = abs_jordan(&a, config.tol)?;
    let group = Group::new(setup);
    let emb = lattice_embed(&group, config.tol)?;
    let n_max = u32::try_from(config.n.max(1)).unwrap_or(8);
    let report = ac2_probe(&group, n_max, config.cap_states)?;
    let mut csv = csv_header(config);
    csv.push_str(&report.to_csv());
    let csv_path = write_out(config, "convexity.csv", &csv)?;
    let mut rows = Vec::new();
    for k in 1..=8u32 {
        for j in [0, 1, 2, 4, 8, 16, 32, 64] {
            let bracket = divergence_bracket(&emb, j);
            let estimate = divergence_estimate(&emb, k, j).ok();
            rows.push(DivergenceRow {
                k,
                j,
                bracket,
                estimate,
            });
        }
    }
    let json = DivergenceJson {
        config: config_map(config),
        moduli: jordan.blocks.iter().map(|b| b.modulus).collect(),
        rows,
    };
    let json_text = serde_json::to_string_pretty(&json).expect("divergence report serializes");
    let json_path = write_out(config, "divergence.json", &json_text)?;
    for row in &report.rows {
        println!(
            "n={} max_inner_distance={} pairs_checked={}",
            row.n, row.max_inner_distance, row.pairs_checked
        );
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(())
}
