//! Command-line front end: file-based inputs, CSV/JSON outputs, exit-code
//! contract for scripting.
//!
//! Subcommands: `solve-periodic`, `oracle-1d`, `verify`, `toric`. Exit
//! codes: 0 success, 1 failed verification suite, 2 admissibility safeguard
//! violated, 3 no convergence, 4 bad input.

use crate::complexmm::{residual_complex, FourierModes, TTensor};
use crate::linalg::C64;
use crate::matfun::SymMatC;
use crate::oracle1d::{self, LowRankHiggs};
use crate::realmm::{self, RealMmError, SolveOptions};
use crate::toricstab::{
    self, build_polygon, guillemin, l_functional, parse_polygon_text, Affine, DelzantPolygon,
    ProbeFunction,
};

struct ReportSummary {
    lambda_hat: f64,
    worst: usize,
}
use crate::torusfield::{self, ComplexField, MatrixField, TorusGrid, TAU};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILED: i32 = 1;
pub const EXIT_SAFEGUARD: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_BAD_INPUT: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hcsk", version, about = "HcscK system toolkit: periodic solver and toric stability")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized suites and samplers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid nodes per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Worker threads (HCSK_THREADS overrides).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Field output format.
    #[arg(long, global = true, value_parser = ["csv", "binary"], default_value = "binary")]
    format: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the periodic real moment map for a fixed Higgs field.
    SolvePeriodic,
    /// Closed-form translation-invariant solve on the abelian surface.
    #[command(name = "oracle-1d")]
    Oracle1d,
    /// Run the randomized invariant suites.
    Verify,
    /// Delzant polygon toolkit: stability functional and boundary checks.
    Toric,
}

/// Entry point used by the binary and by in-process tests. Returns the exit
/// code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version through this path.
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    init_threads(cli.global.threads);
    let result = match cli.command {
        Command::SolvePeriodic => cmd_solve_periodic(&cli.global),
        Command::Oracle1d => cmd_oracle_1d(&cli.global),
        Command::Verify => cmd_verify(&cli.global),
        Command::Toric => cmd_toric(&cli.global),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = std::env::var("HCSK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(flag);
    if let Some(n) = n.filter(|&n| n > 0) {
        // Ignore the error if a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    exit_code: i32,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl CliError {
    fn bad_input(message: impl Into<String>) -> CliError {
        CliError { message: message.into(), exit_code: EXIT_BAD_INPUT }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::bad_input(format!("io: {e}"))
    }
}

impl From<RealMmError> for CliError {
    fn from(e: RealMmError) -> Self {
        let code = match e {
            RealMmError::SafeguardViolated { .. } => EXIT_SAFEGUARD,
            RealMmError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            _ => EXIT_BAD_INPUT,
        };
        CliError { message: e.to_string(), exit_code: code }
    }
}

impl From<toricstab::ToricError> for CliError {
    fn from(e: toricstab::ToricError) -> Self {
        CliError::bad_input(e.to_string())
    }
}

impl From<oracle1d::OracleError> for CliError {
    fn from(e: oracle1d::OracleError) -> Self {
        CliError::bad_input(e.to_string())
    }
}

impl From<torusfield::FieldError> for CliError {
    fn from(e: torusfield::FieldError) -> Self {
        CliError::bad_input(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// FNV-1a 64 of the raw config bytes; the provenance hash stamped on every
/// artifact.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Provenance {
    config_hash: u64,
    grid: usize,
    seed: u64,
}

impl Provenance {
    fn header(&self) -> String {
        format!(
            "# hcsk {} | config_hash={:016x} | grid={} | seed={}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.grid,
            self.seed
        )
    }
}

/// Write a file atomically (temp + rename in the same directory).
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_config_bytes(global: &GlobalArgs) -> Result<Vec<u8>, CliError> {
    match &global.config {
        Some(path) => Ok(std::fs::read(path)?),
        None => Err(CliError::bad_input("--config is required for this command")),
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::bad_input(format!("config: {e}")))
}

fn write_field(
    path_base: &Path,
    name: &str,
    field: &crate::torusfield::ScalarField,
    format: &str,
    prov: &Provenance,
) -> Result<PathBuf, CliError> {
    if format == "csv" {
        let mut text = prov.header();
        torusfield::scalar_to_csv(field, &mut text);
        let path = path_base.join(format!("{name}.csv"));
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    } else {
        let mut bytes = Vec::new();
        torusfield::write_scalar(&mut bytes, field)?;
        let path = path_base.join(format!("{name}.hcsk"));
        atomic_write(&path, &bytes)?;
        Ok(path)
    }
}

// ---------------------------------------------------------------------------
// solve-periodic
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    grid: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    #[serde(default)]
    run: RunSection,
    xi: XiSection,
    #[serde(default)]
    solver: SolveOptions,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct XiSection {
    /// One of "zero", "field", "modes", "t-tensor", "low-rank".
    source: String,
    path: Option<PathBuf>,
    low_rank: Option<LowRankSection>,
    t_tensor: Option<TTensorSection>,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct LowRankSection {
    /// Complex constant c as [re, im].
    c: [f64; 2],
    /// Waveform of F(y1): "zero", "sin", or "cos".
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default)]
    amplitude: f64,
    #[serde(default = "default_mode")]
    mode: i64,
    /// Constant phase factor e^{i phase} on F.
    #[serde(default)]
    phase: f64,
}

fn default_kind() -> String {
    "zero".to_string()
}

fn default_mode() -> i64 {
    1
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
struct TTensorSection {
    t112: Vec<ModeEntry>,
    t212: Vec<ModeEntry>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ModeEntry {
    k1: i64,
    k2: i64,
    re: f64,
    im: f64,
}

impl LowRankSection {
    fn higgs(&self, samples: usize) -> Result<LowRankHiggs, CliError> {
        let c = C64::new(self.c[0], self.c[1]);
        let amp = self.amplitude;
        let mode = self.mode as f64;
        let phase = self.phase;
        let f: Box<dyn Fn(f64) -> C64> = match self.kind.as_str() {
            "zero" => Box::new(move |_| C64::new(0.0, 0.0)),
            "sin" => Box::new(move |y| C64::from_polar(1.0, phase) * (amp * (TAU * mode * y).sin())),
            "cos" => Box::new(move |y| C64::from_polar(1.0, phase) * (amp * (TAU * mode * y).cos())),
            other => return Err(CliError::bad_input(format!("unknown low-rank kind {other}"))),
        };
        Ok(LowRankHiggs::second_type_from_fn(c, samples, |y| f(y)))
    }
}

fn synth_modes(entries: &[ModeEntry], grid: TorusGrid) -> Result<ComplexField, CliError> {
    let n = grid.n_axis() as i64;
    let mut buf = vec![C64::new(0.0, 0.0); grid.nodes()];
    for e in entries {
        if e.k1.abs() > n / 2 || e.k2.abs() > n / 2 {
            return Err(CliError::bad_input(format!(
                "mode ({}, {}) beyond grid resolution",
                e.k1, e.k2
            )));
        }
        let i = e.k1.rem_euclid(n) as usize;
        let j = e.k2.rem_euclid(n) as usize;
        buf[i * grid.n_axis() + j] += C64::new(e.re, e.im) * grid.nodes() as f64;
    }
    torusfield::fft2_inverse(&mut buf, grid.n_axis());
    Ok(ComplexField { grid, values: buf })
}

fn build_xi(section: &XiSection, grid: TorusGrid) -> Result<MatrixField, CliError> {
    match section.source.as_str() {
        "zero" => Ok(MatrixField::zeros(grid)),
        "field" => {
            let path = section
                .path
                .as_ref()
                .ok_or_else(|| CliError::bad_input("xi.path required for source = field"))?;
            let bytes = std::fs::read(path)?;
            let xi = torusfield::read_matrix(&mut bytes.as_slice())?;
            if xi.grid != grid {
                return Err(CliError::bad_input(format!(
                    "field grid {} does not match requested grid {}",
                    xi.grid.n_axis(),
                    grid.n_axis()
                )));
            }
            Ok(xi)
        }
        "modes" => {
            let path = section
                .path
                .as_ref()
                .ok_or_else(|| CliError::bad_input("xi.path required for source = modes"))?;
            let text = std::fs::read_to_string(path)?;
            let modes = parse_mode_table(&text)?;
            modes.synthesize(grid).map_err(|e| CliError::bad_input(e.to_string()))
        }
        "t-tensor" => {
            let section = section
                .t_tensor
                .as_ref()
                .ok_or_else(|| CliError::bad_input("xi.t_tensor required for source = t-tensor"))?;
            let t = TTensor::new(synth_modes(&section.t112, grid)?, synth_modes(&section.t212, grid)?);
            Ok(crate::complexmm::from_t_tensor(&t))
        }
        "low-rank" => {
            let lr = section
                .low_rank
                .as_ref()
                .ok_or_else(|| CliError::bad_input("xi.low_rank required for source = low-rank"))?;
            let h = lr.higgs(grid.n_axis())?;
            match &h {
                LowRankHiggs::SecondType { c, f12 } => {
                    let line: Vec<C64> = f12.clone();
                    let c = *c;
                    Ok(MatrixField::from_fn(grid, |y| {
                        let i = (y[0] * grid.n_axis() as f64).round() as usize % grid.n_axis();
                        let f = line[i];
                        SymMatC::sym2(c, f, f * f / c)
                    }))
                }
                LowRankHiggs::FirstType { .. } => {
                    Err(CliError::bad_input("first-family Higgs not supported here"))
                }
            }
        }
        other => Err(CliError::bad_input(format!("unknown xi source {other}"))),
    }
}

/// Parse a mode-table CSV: rows `k1,k2,re11,im11,re12,im12,re22,im22`.
fn parse_mode_table(text: &str) -> Result<FourierModes, CliError> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        if parts.len() != 8 {
            return Err(CliError::bad_input(format!(
                "mode table line {}: expected 8 columns",
                lineno + 1
            )));
        }
        let k1: i64 = parts[0]
            .parse()
            .map_err(|_| CliError::bad_input(format!("line {}: bad k1", lineno + 1)))?;
        let k2: i64 = parts[1]
            .parse()
            .map_err(|_| CliError::bad_input(format!("line {}: bad k2", lineno + 1)))?;
        let mut vals = [0.0_f64; 6];
        for (t, p) in parts[2..].iter().enumerate() {
            vals[t] = p
                .parse()
                .map_err(|_| CliError::bad_input(format!("line {}: bad value", lineno + 1)))?;
        }
        entries.push((
            [k1, k2],
            [
                C64::new(vals[0], vals[1]),
                C64::new(vals[2], vals[3]),
                C64::new(vals[4], vals[5]),
            ],
        ));
    }
    Ok(FourierModes { entries })
}

fn cmd_solve_periodic(global: &GlobalArgs) -> CliResult {
    let bytes = load_config_bytes(global)?;
    let text = String::from_utf8_lossy(&bytes).to_string();
    let config: SolveConfig = parse_toml(&text)?;

    let grid_n = global.grid.or(config.run.grid).unwrap_or(config.solver.grid_n);
    let seed = global.seed.or(config.run.seed).unwrap_or(0);
    let grid = TorusGrid::new(grid_n)?;
    let mut opts = config.solver.clone();
    opts.grid_n = grid_n;

    let xi = build_xi(&config.xi, grid)?;
    let prov = Provenance { config_hash: fnv1a(&bytes), grid: grid_n, seed };

    let report = realmm::solve_continuity(&xi, 0.0, &opts, None)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    write_field(&global.out, "u_phi", &report.u.phi, &global.format, &prov)?;

    let mut log_text = prov.header();
    for rec in &report.log {
        log_text.push_str(&serde_json::to_string(rec).unwrap());
        log_text.push('\n');
    }
    atomic_write(&global.out.join("log.jsonl"), log_text.as_bytes())?;

    let json = serde_json::json!({
        "tool": format!("hcsk {}", env!("CARGO_PKG_VERSION")),
        "config_hash": format!("{:016x}", prov.config_hash),
        "grid": grid_n,
        "seed": seed,
        "converged": true,
        "residual_sup": report.residual_sup,
        "energy": { "f": report.energy.0, "h": report.energy.1, "total": report.energy.2 },
        "spec_rad_final": report.spec_rad_final,
        "path": report.path,
        "warnings": report.warnings,
        "phi_sup": report.u.phi.sup_norm(),
    });
    atomic_write(
        &global.out.join("report.json"),
        serde_json::to_string_pretty(&json).unwrap().as_bytes(),
    )?;
    println!(
        "converged: residual_sup = {:.3e}, energy = {:.6e}, spec_rad = {:.3}",
        report.residual_sup, report.energy.2, report.spec_rad_final
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// oracle-1d
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct OracleConfig {
    oracle: OracleSection,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    /// "second-type" (needs c and a waveform) or "first-type".
    #[serde(default = "default_family")]
    family: String,
    c: Option<[f64; 2]>,
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default)]
    amplitude: f64,
    #[serde(default = "default_mode")]
    mode: i64,
    #[serde(default)]
    phase: f64,
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_family() -> String {
    "second-type".to_string()
}

fn default_samples() -> usize {
    1024
}

fn cmd_oracle_1d(global: &GlobalArgs) -> CliResult {
    let bytes = load_config_bytes(global)?;
    let text = String::from_utf8_lossy(&bytes).to_string();
    let config: OracleConfig = parse_toml(&text)?;
    let sec = &config.oracle;
    let prov = Provenance {
        config_hash: fnv1a(&bytes),
        grid: sec.samples,
        seed: global.seed.unwrap_or(0),
    };

    let higgs = match sec.family.as_str() {
        "first-type" => {
            let amp = sec.amplitude;
            let mode = sec.mode as f64;
            LowRankHiggs::first_type_from_fn(sec.samples, move |y| {
                C64::new(amp * (TAU * mode * y).sin(), 0.0)
            })
        }
        "second-type" => {
            let c = sec
                .c
                .ok_or_else(|| CliError::bad_input("oracle.c required for the second family"))?;
            LowRankSection {
                c,
                kind: sec.kind.clone(),
                amplitude: sec.amplitude,
                mode: sec.mode,
                phase: sec.phase,
            }
            .higgs(sec.samples)?
        }
        other => return Err(CliError::bad_input(format!("unknown oracle family {other}"))),
    };

    let result = oracle1d::solve_translation_invariant(&higgs)?;

    let mut csv = prov.header();
    csv.push_str("y1,fpp,p,k,residual\n");
    let n = result.fpp.len();
    for i in 0..n {
        csv.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            i as f64 / n as f64,
            result.fpp[i],
            result.p[i],
            result.k,
            result.residual[i]
        ));
    }
    atomic_write(&global.out.join("oracle.csv"), csv.as_bytes())?;
    println!(
        "oracle: k = {:.12}, residual_sup = {:.3e}, samples = {}",
        result.k,
        result.residual_sup(),
        n
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(global: &GlobalArgs) -> CliResult {
    let seed = global.seed.unwrap_or(0);
    let grid_n = global.grid.unwrap_or(32);
    let results = crate::verify::run_all(seed, grid_n);
    let mut all_pass = true;
    let mut text = format!("# hcsk {} | seed={} | grid={}\n", env!("CARGO_PKG_VERSION"), seed, grid_n);
    for r in &results {
        let line = format!(
            "{}: {} (max defect {:.3e}, threshold {:.1e}, {} cases)",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.max_defect,
            r.threshold,
            r.cases
        );
        println!("{line}");
        text.push_str(&line);
        text.push('\n');
        all_pass &= r.pass;
    }
    atomic_write(&global.out.join("verify.txt"), text.as_bytes())?;
    Ok(if all_pass { EXIT_OK } else { EXIT_SUITE_FAILED })
}

// ---------------------------------------------------------------------------
// toric
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ToricConfig {
    toric: ToricSection,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ToricSection {
    polygon: PathBuf,
    probes: PathBuf,
    #[serde(default = "default_margins")]
    margins: Vec<f64>,
    boundary_check: Option<BoundaryCheckSection>,
}

fn default_margins() -> Vec<f64> {
    vec![0.08, 0.04, 0.02, 0.01]
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct BoundaryCheckSection {
    /// "zero", "constant", or "smooth" (G_P^{-1} Phi G_P^{-1}).
    xi: String,
    /// Entries [re11, im11, re12, im12, re22, im22] for the constant matrix.
    #[serde(default)]
    entries: Vec<f64>,
}

/// Parse a probe file: per line `affine a1 a2 b`,
/// `quadratic q11 q12 q22 a1 a2 b`, or `plconvex a1,a2,b; a1,a2,b; ...`.
fn parse_probes(text: &str) -> Result<Vec<ProbeFunction>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| CliError::bad_input(format!("probe line {}: {msg}", lineno + 1));
        let (kind, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match kind {
            "affine" => {
                let v: Vec<f64> = rest
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| bad("bad number")))
                    .collect::<Result<_, _>>()?;
                if v.len() != 3 {
                    return Err(bad("expected: affine a1 a2 b"));
                }
                out.push(ProbeFunction::Affine(Affine { grad: [v[0], v[1]], offset: v[2] }));
            }
            "quadratic" => {
                let v: Vec<f64> = rest
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| bad("bad number")))
                    .collect::<Result<_, _>>()?;
                if v.len() != 6 {
                    return Err(bad("expected: quadratic q11 q12 q22 a1 a2 b"));
                }
                out.push(ProbeFunction::Quadratic {
                    q: [v[0], v[1], v[2]],
                    grad: [v[3], v[4]],
                    offset: v[5],
                });
            }
            "plconvex" => {
                let mut pieces = Vec::new();
                for piece in rest.split(';') {
                    let v: Vec<f64> = piece
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|_| bad("bad number")))
                        .collect::<Result<_, _>>()?;
                    if v.len() != 3 {
                        return Err(bad("each plconvex piece is a1,a2,b"));
                    }
                    pieces.push(Affine { grad: [v[0], v[1]], offset: v[2] });
                }
                if pieces.is_empty() {
                    return Err(bad("plconvex needs at least one piece"));
                }
                out.push(ProbeFunction::PLConvex { pieces });
            }
            other => return Err(bad(&format!("unknown probe kind {other}"))),
        }
    }
    Ok(out)
}

fn boundary_check_closure<'p>(
    p: &'p DelzantPolygon,
    section: &BoundaryCheckSection,
) -> Result<Box<dyn Fn([f64; 2]) -> SymMatC + 'p>, CliError> {
    let entries = |e: &Vec<f64>| -> Result<SymMatC, CliError> {
        if e.len() != 6 {
            return Err(CliError::bad_input("boundary_check.entries needs 6 numbers"));
        }
        Ok(SymMatC::sym2(
            C64::new(e[0], e[1]),
            C64::new(e[2], e[3]),
            C64::new(e[4], e[5]),
        ))
    };
    match section.xi.as_str() {
        "zero" => Ok(Box::new(|_| SymMatC::zero(2))),
        "constant" => {
            let m = entries(&section.entries)?;
            Ok(Box::new(move |_| m.clone()))
        }
        "smooth" => {
            let phi = entries(&section.entries)?;
            Ok(Box::new(move |y| {
                let g = toricstab::guillemin_hessian(p, y).expect("interior point");
                let gp = crate::matfun::PosDefR::sym2(g[0], g[1], g[2]).unwrap();
                let gi = gp.inverse().to_complex();
                let m = gi.matmul(phi.mat()).matmul(&gi);
                SymMatC::sym2(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
            }))
        }
        other => Err(CliError::bad_input(format!("unknown boundary_check.xi {other}"))),
    }
}

fn cmd_toric(global: &GlobalArgs) -> CliResult {
    let bytes = load_config_bytes(global)?;
    let text = String::from_utf8_lossy(&bytes).to_string();
    let config: ToricConfig = parse_toml(&text)?;
    let sec = &config.toric;
    let prov = Provenance {
        config_hash: fnv1a(&bytes),
        grid: 0,
        seed: global.seed.unwrap_or(0),
    };

    let poly_text = std::fs::read_to_string(&sec.polygon)?;
    let vertices = parse_polygon_text(&poly_text)?;
    let polygon = build_polygon(&vertices)?;

    let probe_text = std::fs::read_to_string(&sec.probes)?;
    let raw_probes = parse_probes(&probe_text)?;
    let p0 = polygon.centroid();
    let probes: Vec<ProbeFunction> = raw_probes.iter().map(|f| f.normalized_at(p0)).collect();

    // Probes normalized to zero (affine functions) are excluded from the
    // stability ratio but still tabulated.
    let mut csv = prov.header();
    csv.push_str("probe_id,L_C,boundary_integral,ratio\n");
    let mut lambda_hat = f64::INFINITY;
    let mut worst = None;
    for (i, f) in probes.iter().enumerate() {
        let l_c = l_functional(&polygon, f);
        let boundary = toricstab::boundary_integral(&polygon, &|y| f.eval(y));
        let ratio = if boundary.abs() > 1e-14 {
            let r = l_c / boundary;
            if r < lambda_hat {
                lambda_hat = r;
                worst = Some(i);
            }
            r
        } else {
            f64::NAN
        };
        csv.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", i, l_c, boundary, ratio));
    }
    if worst.is_none() {
        return Err(CliError::bad_input(
            "every probe is degenerate after normalization; add a nonaffine probe",
        ));
    }
    let report = ReportSummary { lambda_hat, worst: worst.unwrap() };
    atomic_write(&global.out.join("lc_table.csv"), csv.as_bytes())?;

    let boundary = match &sec.boundary_check {
        Some(bc) => {
            let xi = boundary_check_closure(&polygon, bc)?;
            let rep = toricstab::xi_boundary_check(&polygon, xi.as_ref(), &sec.margins)?;
            Some(serde_json::json!({
                "pass": rep.pass,
                "shell_sups": rep.shell_sups,
                "growth_ratios": rep.growth_ratios,
                "divergent_face": rep.divergent_face,
            }))
        }
        None => None,
    };

    let (u_center, g_center) = guillemin(&polygon, p0)
        .map(|(u, g)| (u, [g.mat()[(0, 0)], g.mat()[(0, 1)], g.mat()[(1, 1)]]))
        .map_err(CliError::from)?;
    let json = serde_json::json!({
        "tool": format!("hcsk {}", env!("CARGO_PKG_VERSION")),
        "config_hash": format!("{:016x}", prov.config_hash),
        "faces": polygon.faces().len(),
        "area": polygon.area(),
        "sigma_boundary": polygon.sigma_boundary(),
        "c_constant": polygon.c_constant(),
        "lambda_hat": report.lambda_hat,
        "worst_probe": report.worst,
        "guillemin_at_centroid": { "u": u_center, "hessian": g_center },
        "boundary_check": boundary,
        "stability": if report.lambda_hat > 0.0 { "evidence" } else { "instability witness" },
    });
    atomic_write(
        &global.out.join("report.json"),
        serde_json::to_string_pretty(&json).unwrap().as_bytes(),
    )?;
    println!(
        "lambda_hat = {:.6} ({})",
        report.lambda_hat,
        if report.lambda_hat > 0.0 { "evidence of stability" } else { "instability witness" }
    );
    Ok(EXIT_OK)
}

/// Expose the L_C functional on parsed probes for tests.
pub fn l_functional_of_probe(p: &DelzantPolygon, f: &ProbeFunction) -> f64 {
    l_functional(p, f)
}

/// Sanity accessor used by integration tests: residual of a Higgs field
/// built from a config section.
pub fn residual_of_xi(xi: &MatrixField) -> f64 {
    residual_complex(xi).sup_norm()
}
