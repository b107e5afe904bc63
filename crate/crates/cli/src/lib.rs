//! `nbreak` command line: one JSON document per invocation on stdout,
//! diagnostics on stderr.
//!
//! Exit codes: 0 success, 1 internal error, 2 malformed input, 3 channel not
//! completely positive, 4 EB solver undecided, 5 channel not entanglement
//! breaking (`filter` only).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use nbreak_core::channel::{
    apply_to_state, classify, is_cp, is_nb, nb_threshold, random_channel, ChannelKind, ClassificationReport,
    ClassifyOptions, GaussianChannel,
};
use nbreak_core::document::{parse, ChannelDocument, Conventions, MatrixDocument, StateDocument, SCHEMA_VERSION};
use nbreak_core::duality::filter_to_nb;
use nbreak_core::eb::{eb_check, EbOptions, EbStatus};
use nbreak_core::matrix::{max_abs_diff, to_row_major};
use nbreak_core::oracle::{
    witness_scan, FockState, OracleInput, WitnessOptions, DEFAULT_CUTOFF, DEFAULT_EXTENT, DEFAULT_POINTS,
    DEFAULT_S_SCHEDULE, DEFAULT_WITNESS_TOL,
};
use nbreak_core::state::is_classical_gaussian;
use nbreak_core::symplectic::{euler_decompose, is_symplectic, williamson};
use nbreak_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_NOT_CP: i32 = 3;
pub const EXIT_UNDECIDED: i32 = 4;
pub const EXIT_NOT_EB: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "nbreak", version, about = "Classify bosonic Gaussian channels")]
pub struct Cli {
    /// PSD margin tolerance.
    #[arg(long, global = true, env = "NBREAK_TOL", default_value_t = 1e-9)]
    pub tol: f64,
    /// Iteration budget of the EB projection solver.
    #[arg(long, global = true, default_value_t = 20000)]
    pub eb_max_iter: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CP / PPT / EB / NB report for one channel or a directory of channels.
    Classify(ClassifyArgs),
    /// Least isotropic noise that makes the channel nonclassicality breaking.
    Threshold(ChannelArg),
    /// Squeezing filter turning an EB channel into an NB channel.
    Filter(ChannelArg),
    /// Push a Gaussian state through a channel.
    Evolve(EvolveArgs),
    /// Search single-mode output quasiprobabilities for negativity.
    Witness(WitnessArgs),
    /// Williamson or Euler decomposition of a matrix.
    Decompose(DecomposeArgs),
    /// Seeded random channel of a given class.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct ChannelArg {
    #[arg(long)]
    pub channel: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// Every `*.json` file in the directory, reported in file-name order.
    #[arg(long)]
    pub channel_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Orders to scan, each below 1.
    #[arg(long = "s", value_delimiter = ',', num_args = 1..)]
    pub s: Vec<f64>,
    /// Grid points per axis (power of two ≥ 64).
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub grid: usize,
    /// Half-width of the grid in units of α.
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    /// `fock:m` or `coherent:RE,IM`; defaults to `fock:1`.
    #[arg(long = "input")]
    pub inputs: Vec<String>,
    /// Gaussian input state documents.
    #[arg(long = "state")]
    pub states: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: usize,
    #[arg(long, default_value_t = DEFAULT_WITNESS_TOL)]
    pub witness_tol: f64,
    /// Write the witnessing (or last) grid as a PGM image.
    #[arg(long)]
    pub emit_grid: Option<PathBuf>,
    /// Embed that grid in the JSON output.
    #[arg(long)]
    pub include_grid: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DecomposeKind {
    Williamson,
    Euler,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum)]
    pub kind: DecomposeKind,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: ChannelKind,
    #[arg(long)]
    pub modes: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub noise_scale: f64,
}

fn parse_kind(s: &str) -> Result<ChannelKind, String> {
    s.parse::<ChannelKind>().map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Input(String),
    Undecided(String),
    NotEb(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::NotCompletelyPositive { .. }) => EXIT_NOT_CP,
            Failure::Core(Error::DegenerateCertificate(_)) => EXIT_INTERNAL,
            Failure::Core(_) | Failure::Input(_) => EXIT_MALFORMED,
            Failure::Undecided(_) => EXIT_UNDECIDED,
            Failure::NotEb(_) => EXIT_NOT_EB,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Input(m) | Failure::Undecided(m) | Failure::NotEb(m) | Failure::Internal(m) => m.clone(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<Value, Failure>;

/// Parse `args` (including the program name), run, and write the output.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(doc) => match serde_json::to_string_pretty(&doc) {
            Ok(text) => {
                if writeln!(out, "{text}").is_err() {
                    return EXIT_INTERNAL;
                }
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(err, "error: cannot serialize output: {e}");
                EXIT_INTERNAL
            }
        },
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Outcome {
    if !(cli.tol > 0.0) || !cli.tol.is_finite() {
        return Err(Failure::Input(format!("--tol must be positive, got {}", cli.tol)));
    }
    let ctx = Context { tol: cli.tol, eb_max_iter: cli.eb_max_iter };
    match &cli.command {
        Command::Classify(a) => ctx.classify(a),
        Command::Threshold(a) => ctx.threshold(&a.channel),
        Command::Filter(a) => ctx.filter(&a.channel),
        Command::Evolve(a) => ctx.evolve(a),
        Command::Witness(a) => ctx.witness(a),
        Command::Decompose(a) => ctx.decompose(a),
        Command::Generate(a) => ctx.generate(a),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_channel(path: &Path) -> std::result::Result<GaussianChannel, Failure> {
    let doc: ChannelDocument = parse(&read(path)?)?;
    Ok(doc.to_channel()?)
}

fn matrix_json(m: &nbreak_core::matrix::RMatrix) -> Value {
    json!(to_row_major(m))
}

struct Context {
    tol: f64,
    eb_max_iter: usize,
}

impl Context {
    fn envelope(&self, command: &str, seed: Option<u64>, payload: Value) -> Value {
        let mut doc = Map::new();
        doc.insert("command".into(), json!(command));
        doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
        doc.insert("tol".into(), json!(self.tol));
        doc.insert("seed".into(), json!(seed));
        doc.insert("conventions".into(), json!(Conventions::default()));
        if let Value::Object(map) = payload {
            doc.extend(map);
        }
        Value::Object(doc)
    }

    fn eb_options(&self) -> EbOptions {
        EbOptions::with_tol(self.tol, self.eb_max_iter)
    }

    /// CP check up front so every subcommand reports exit 3 the same way.
    fn require_cp(&self, ch: &GaussianChannel) -> std::result::Result<(), Failure> {
        let cp = is_cp(ch, self.tol)?;
        if !cp.is_psd {
            return Err(Error::NotCompletelyPositive { margin: cp.margin }.into());
        }
        Ok(())
    }

    fn report_json(&self, r: &ClassificationReport) -> Value {
        json!({
            "modes": r.modes,
            "cp": r.flags.cp,
            "ppt": r.flags.ppt,
            "eb": r.eb_status,
            "nb": r.flags.nb,
            "nb_threshold": r.nb_threshold,
            "margins": { "cp": r.cp_margin, "ppt": r.ppt_margin, "nb": r.nb_margin },
            "eb_solver": { "path": r.eb_path, "iterations": r.eb_iterations, "gap": r.eb_gap },
            "eb_certificate": r.eb_certificate,
        })
    }

    fn classify_one(&self, path: &Path) -> Outcome {
        let ch = load_channel(path)?;
        let opts = ClassifyOptions { tol: self.tol, eb_max_iter: self.eb_max_iter };
        Ok(self.report_json(&classify(&ch, &opts)?))
    }

    fn classify(&self, a: &ClassifyArgs) -> Outcome {
        if let Some(path) = &a.channel {
            let report = self.classify_one(path)?;
            return Ok(self.envelope("classify", None, report));
        }
        let dir = a.channel_dir.as_ref().ok_or_else(|| Failure::Input("no channel given".into()))?;
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let results: Vec<Value> = files
            .par_iter()
            .map(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                match self.classify_one(p) {
                    Ok(r) => json!({ "file": name, "report": r }),
                    Err(f) => json!({ "file": name, "error": { "exit_code": f.exit_code(), "message": f.message() } }),
                }
            })
            .collect();
        Ok(self.envelope("classify", None, json!({ "results": results })))
    }

    fn threshold(&self, path: &Path) -> Outcome {
        let ch = load_channel(path)?;
        let t = nb_threshold(&ch, self.tol)?;
        let nb = is_nb(&ch, self.tol)?;
        Ok(self.envelope("threshold", None, json!({ "nb_threshold": t, "nb_margin": nb.margin, "nb": nb.is_psd })))
    }

    fn filter(&self, path: &Path) -> Outcome {
        let ch = load_channel(path)?;
        self.require_cp(&ch)?;
        let eb = eb_check(&ch, &self.eb_options())?;
        match eb.status {
            EbStatus::Undecided => {
                return Err(Failure::Undecided(format!(
                    "EB solver undecided after {} iterations (gap {:.3e}); raise --eb-max-iter",
                    eb.iterations, eb.gap
                )))
            }
            EbStatus::Infeasible => {
                return Err(Failure::NotEb(format!(
                    "channel is not entanglement breaking ({:?})",
                    eb.witness
                )))
            }
            EbStatus::Feasible => {}
        }
        let cert = eb
            .certificate
            .ok_or_else(|| Failure::Internal("feasible verdict without certificate".into()))?;
        let f = filter_to_nb(&ch, &cert, self.tol)?;
        let payload = json!({
            "s_filter": matrix_json(&f.s_filter),
            "euler": f.euler,
            "squeeze_parameters": f.euler.d,
            "nb_margin": f.nb_margin,
            "regularized": f.regularized,
            "eb_certificate": cert,
            "eb_path": eb.path,
            "filtered": ChannelDocument::from_channel(&f.filtered, None),
        });
        Ok(self.envelope("filter", None, payload))
    }

    fn evolve(&self, a: &EvolveArgs) -> Outcome {
        let ch = load_channel(&a.channel)?;
        self.require_cp(&ch)?;
        let doc: StateDocument = parse(&read(&a.state)?)?;
        let input = doc.to_state()?;
        let out = apply_to_state(&ch, &input)?;
        let verdict = is_classical_gaussian(out.cov(), self.tol)?;
        let payload = json!({
            "state": StateDocument::from_state(&out, None),
            "classical": verdict.is_classical,
            "classicality_margin": verdict.margin,
            "mean_photon_number": out.mean_photon_number(),
        });
        Ok(self.envelope("evolve", None, payload))
    }

    fn witness(&self, a: &WitnessArgs) -> Outcome {
        let ch = load_channel(&a.channel)?;
        if ch.modes() != 1 {
            return Err(Failure::Input(format!("witness is single mode; channel has {} modes", ch.modes())));
        }
        self.require_cp(&ch)?;
        let mut inputs = Vec::new();
        for spec in &a.inputs {
            inputs.push(parse_input(spec, a.cutoff)?);
        }
        for p in &a.states {
            let doc: StateDocument = parse(&read(p)?)?;
            inputs.push(OracleInput::Gaussian(doc.to_state()?));
        }
        if inputs.is_empty() {
            inputs.push(OracleInput::Fock(FockState::number(1, a.cutoff)?));
        }
        let opts = WitnessOptions {
            s_schedule: if a.s.is_empty() { DEFAULT_S_SCHEDULE.to_vec() } else { a.s.clone() },
            extent: a.extent,
            points: a.grid,
            witness_tol: a.witness_tol,
        };
        let scan = witness_scan(&ch, &inputs, &opts)?;
        if let (Some(path), Some(grid)) = (&a.emit_grid, &scan.grid) {
            fs::write(path, grid.to_pgm())
                .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        }
        let nb = is_nb(&ch, self.tol)?;
        let mut payload = json!({
            "nb": nb.is_psd,
            "nb_margin": nb.margin,
            "nb_threshold": nb_threshold(&ch, self.tol)?,
            "witness": scan.witness,
            "scans": scan.records,
            "grid_options": { "points": a.grid, "extent": a.extent, "cutoff": a.cutoff, "witness_tol": a.witness_tol },
        });
        if a.include_grid {
            payload["grid"] = json!(scan.grid);
        }
        Ok(self.envelope("witness", None, payload))
    }

    fn decompose(&self, a: &DecomposeArgs) -> Outcome {
        let doc: MatrixDocument = parse(&read(&a.matrix)?)?;
        let m = doc.to_matrix()?;
        let payload = match a.kind {
            DecomposeKind::Williamson => {
                let w = williamson(&m)?;
                let normal = w.s_matrix.transpose() * &m * &w.s_matrix;
                let residual = max_abs_diff(&normal, &w.normal_form());
                let (_, symp) = is_symplectic(&w.s_matrix, self.tol)?;
                json!({
                    "kind": "williamson",
                    "s_matrix": matrix_json(&w.s_matrix),
                    "nu": w.nu,
                    "residuals": { "normal_form": residual, "symplectic": symp },
                })
            }
            DecomposeKind::Euler => {
                let e = euler_decompose(&m)?;
                let residual = max_abs_diff(&e.reconstruct(), &m);
                json!({
                    "kind": "euler",
                    "r1": matrix_json(&e.r1),
                    "r2": matrix_json(&e.r2),
                    "d": e.d,
                    "residuals": { "reconstruction": residual },
                })
            }
        };
        Ok(self.envelope("decompose", None, payload))
    }

    fn generate(&self, a: &GenerateArgs) -> Outcome {
        let g = random_channel(a.kind, a.modes, a.seed, a.noise_scale)?;
        let mut meta = Map::new();
        meta.insert("kind".into(), json!(a.kind));
        meta.insert("seed".into(), json!(a.seed));
        meta.insert("noise_scale".into(), json!(a.noise_scale));
        if let Some(c) = &g.certificate {
            meta.insert("eb_certificate".into(), json!(c));
        }
        let doc = ChannelDocument::from_channel(&g.channel, Some(meta));
        Ok(self.envelope("generate", Some(a.seed), json!(doc)))
    }
}

fn parse_input(spec: &str, cutoff: usize) -> std::result::Result<OracleInput, Failure> {
    let bad = || Failure::Input(format!("unrecognized input {spec:?}; expected fock:m or coherent:RE,IM"));
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "fock" => {
            let m: usize = rest.trim().parse().map_err(|_| bad())?;
            Ok(OracleInput::Fock(FockState::number(m, cutoff)?))
        }
        "coherent" => {
            let (re, im) = rest.split_once(',').ok_or_else(bad)?;
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            Ok(OracleInput::Fock(FockState::coherent(Complex64::new(re, im), cutoff)?))
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_specs() {
        assert!(matches!(parse_input("fock:3", 10), Ok(OracleInput::Fock(_))));
        assert!(matches!(parse_input("coherent:0.5,-1", 10), Ok(OracleInput::Fock(_))));
        assert!(parse_input("fock:11", 10).is_err());
        assert!(parse_input("squeezed:1", 10).is_err());
        assert!(parse_input("fock", 10).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Core(Error::NotCompletelyPositive { margin: -1.0 }).exit_code(), 3);
        assert_eq!(Failure::Core(Error::Malformed("x".into())).exit_code(), 2);
        assert_eq!(Failure::Undecided("x".into()).exit_code(), 4);
        assert_eq!(Failure::NotEb("x".into()).exit_code(), 5);
    }
}
