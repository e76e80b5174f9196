//! Command-line front end.
//!
//! Exit codes: 0 success or certified, 1 error, 2 refuted, 3 inconclusive or
//! not converged, 4 refused because the model is not certified.
//!
//! Values come from flags first, then the TOML file given by `--config`,
//! then built-in defaults.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::axioms::{auto_cones, certify_blender, cones_for_alpha, BlenderCertificate, CertifyOptions, Status};
use crate::disks::graph_transform;
use crate::error::{Error, Result};
use crate::folding::{locate_tangency, make_quadratic_fold, LocateOptions, DEFAULT_T_GRID};
use crate::map::Saddle;
use crate::model::{default_instance, BlenderModel, Branch, ModelConfig};
use crate::orbit::ReferenceLeaves;
use crate::perturbation::{random_perturbations, robustness_suite, FoldSpec, RobustnessOptions};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_REFUTED: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_REFUSED: u8 = 4;

const DEFAULT_APEX: f64 = 0.05;
const DEFAULT_N_ITER: usize = 60;
/// The window shrinks like `lambda^(-i/2)`; 60 steps of the default model reach about 6e-3.
const DEFAULT_TOL: f64 = 1e-2;
const DEFAULT_SAMPLES: usize = 500;
const SWEEP_SAMPLES: usize = 100;

#[derive(Parser, Debug)]
#[command(name = "blenderlab", version, about = "Blender-horseshoe certification and tangency search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the six blender-horseshoe conditions.
    Certify(CertifyArgs),
    /// Locate a tangency between a quadratic fold and the local stable set.
    Tangency(TangencyArgs),
    /// Certify a grid of (lambda, mu) values.
    Sweep(SweepArgs),
    /// Re-certify and re-locate the tangency under random small perturbations.
    Robustness(RobustnessArgs),
    /// Write local manifolds, fold disks and their images for plotting.
    ExportDisks(ExportArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in default instance, ignoring any model in the config.
    #[arg(long)]
    default: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Random disks per position class in the audit.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    /// Cone opening; chosen automatically when absent.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct FoldArgs {
    #[arg(long)]
    apex: Option<f64>,
    /// Central slope of every fold disk.
    #[arg(long)]
    lip: Option<f64>,
    /// Anchoring saddle, `p` or `q`.
    #[arg(long)]
    saddle: Option<String>,
    #[arg(long = "n-iter")]
    n_iter: Option<usize>,
    /// Stop once the parameter window is this narrow.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct TangencyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    fold: FoldArgs,
    #[arg(long)]
    alpha: Option<f64>,
    /// Run even when the model is not certified.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated lambda values.
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated mu values; overrides the fractions.
    #[arg(long)]
    mu: Option<String>,
    /// Comma-separated fractions of (lambda - 1) delta.
    #[arg(long = "mu-fraction")]
    mu_fraction: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also locate the tangency at every certified grid point.
    #[arg(long)]
    tangency: bool,
    #[command(flatten)]
    fold: FoldArgs,
}

#[derive(Args, Debug)]
struct RobustnessArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    fold: FoldArgs,
    /// Number of random perturbations.
    #[arg(long)]
    count: Option<usize>,
    /// Perturbation size as a fraction of the smallest certificate margin.
    #[arg(long = "c1-fraction")]
    c1_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    fold: FoldArgs,
    /// Fold disks to export.
    #[arg(long = "fold-samples")]
    fold_samples: Option<usize>,
}

#[derive(Debug, Default)]
struct FoldSection {
    apex: Option<f64>,
    lip: Option<f64>,
    saddle: Option<String>,
    n_iter: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertifySection {
    alpha: Option<f64>,
    samples_per_class: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TangencySection {
    alpha: Option<f64>,
    samples_per_class: Option<usize>,
    out: Option<PathBuf>,
    force: Option<bool>,
    apex: Option<f64>,
    lip: Option<f64>,
    saddle: Option<String>,
    n_iter: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    lambdas: Option<Vec<f64>>,
    mus: Option<Vec<f64>>,
    mu_fractions: Option<Vec<f64>>,
    alpha: Option<f64>,
    tangency: Option<bool>,
    samples_per_class: Option<usize>,
    out: Option<PathBuf>,
    apex: Option<f64>,
    lip: Option<f64>,
    saddle: Option<String>,
    n_iter: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobustnessSection {
    count: Option<usize>,
    c1_fraction: Option<f64>,
    samples_per_class: Option<usize>,
    out: Option<PathBuf>,
    apex: Option<f64>,
    lip: Option<f64>,
    saddle: Option<String>,
    n_iter: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportSection {
    fold_samples: Option<usize>,
    out: Option<PathBuf>,
    apex: Option<f64>,
    lip: Option<f64>,
    saddle: Option<String>,
    n_iter: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model_path: Option<PathBuf>,
    model: Option<ModelConfig>,
    lambda: Option<f64>,
    mu: Option<f64>,
    delta: Option<f64>,
    seed: Option<u64>,
    jobs: Option<usize>,
    #[serde(default)]
    certify: CertifySection,
    #[serde(default)]
    tangency: TangencySection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    robustness: RobustnessSection,
    #[serde(default)]
    export_disks: ExportSection,
}

macro_rules! fold_section {
    ($($t:ty),*) => {$(
        impl $t {
            fn fold(&self) -> FoldSection {
                FoldSection { apex: self.apex, lip: self.lip, saddle: self.saddle.clone(), n_iter: self.n_iter, tol: self.tol }
            }
        }
    )*};
}

fold_section!(TangencySection, SweepSection, RobustnessSection, ExportSection);

struct Loaded {
    file: FileConfig,
    dir: PathBuf,
}

fn load(common: &Common) -> Result<Loaded> {
    match &common.config {
        None => Ok(Loaded { file: FileConfig::default(), dir: PathBuf::from(".") }),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let file: FileConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
            Ok(Loaded { file, dir })
        }
    }
}

impl Loaded {
    fn base_model(&self, common: &Common) -> Result<BlenderModel> {
        if common.default {
            return Ok(default_instance());
        }
        if let Some(m) = &self.file.model {
            return m.to_model_unchecked();
        }
        if let Some(p) = &self.file.model_path {
            let path = self.dir.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            return ModelConfig::from_toml(&text)?.to_model_unchecked();
        }
        Ok(default_instance())
    }

    fn model(&self, common: &Common, args: &ModelArgs) -> Result<BlenderModel> {
        let base = self.base_model(common)?;
        let lambda = args.lambda.or(self.file.lambda).unwrap_or(base.lambda);
        let mu = args.mu.or(self.file.mu).unwrap_or(base.mu);
        let delta = common.delta.or(self.file.delta).unwrap_or(base.delta);
        for (name, v) in [("lambda", lambda), ("mu", mu), ("delta", delta)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(base.with_params(lambda, mu, delta))
    }

    fn seed(&self, common: &Common) -> u64 {
        common.seed.or(self.file.seed).unwrap_or(0)
    }

    fn jobs(&self, common: &Common) -> usize {
        common.jobs.or(self.file.jobs).unwrap_or(1).max(1)
    }
}

struct FoldChoice {
    saddle: Saddle,
    apex: f64,
    lip: f64,
    n_iter: usize,
    tol: f64,
}

fn parse_saddle(s: &str) -> Result<Saddle> {
    match s.to_ascii_lowercase().as_str() {
        "p" => Ok(Saddle::P),
        "q" => Ok(Saddle::Q),
        _ => Err(Error::Config(format!("saddle must be p or q, got {s:?}"))),
    }
}

fn fold_choice(args: &FoldArgs, file: &FoldSection, default_tol: f64) -> Result<FoldChoice> {
    let saddle = match args.saddle.as_deref().or(file.saddle.as_deref()) {
        Some(s) => parse_saddle(s)?,
        None => Saddle::P,
    };
    Ok(FoldChoice {
        saddle,
        apex: args.apex.or(file.apex).unwrap_or(DEFAULT_APEX),
        lip: args.lip.or(file.lip).unwrap_or(0.0),
        n_iter: args.n_iter.or(file.n_iter).unwrap_or(DEFAULT_N_ITER),
        tol: args.tol.or(file.tol).unwrap_or(default_tol),
    })
}

fn model_summary(m: &BlenderModel) -> Value {
    let d = m.dims();
    json!({ "lambda": m.lambda, "mu": m.mu, "delta": m.delta, "s": d.s, "u": d.u })
}

fn envelope(command: &str, m: Option<&BlenderModel>, key: &str, body: Value) -> Value {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let Some(m) = m {
        doc["model"] = model_summary(m);
    }
    doc[key] = body;
    doc
}

fn emit(doc: &Value, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Certified => EXIT_OK,
        Status::Refuted => EXIT_REFUTED,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn certify_with(m: &BlenderModel, alpha: Option<f64>, samples: usize, seed: u64) -> Result<BlenderCertificate> {
    let opts = CertifyOptions { samples_per_class: samples, seed, ..Default::default() };
    let cones = match alpha {
        Some(a) if !(a > 0.0 && a < 1.0) => return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}"))),
        Some(a) => cones_for_alpha(m, a, &opts),
        None => auto_cones(m, &opts),
    };
    certify_blender(m, Some(cones), &opts)
}

fn cmd_certify(a: &CertifyArgs, stdout: &mut dyn Write) -> Result<u8> {
    let cfg = load(&a.common)?;
    let m = cfg.model(&a.common, &a.model)?;
    let sec = &cfg.file.certify;
    let samples = a.common.samples.or(sec.samples_per_class).unwrap_or(DEFAULT_SAMPLES);
    let cert = certify_with(&m, a.alpha.or(sec.alpha), samples, cfg.seed(&a.common))?;
    let doc = envelope("certify", Some(&m), "certificate", serde_json::to_value(&cert)?);
    emit(&doc, a.common.out.as_deref().or(sec.out.as_deref()), stdout)?;
    Ok(status_code(cert.status))
}

fn cmd_tangency(a: &TangencyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    let cfg = load(&a.common)?;
    let m = cfg.model(&a.common, &a.model)?;
    let sec = &cfg.file.tangency;
    let samples = a.common.samples.or(sec.samples_per_class).unwrap_or(DEFAULT_SAMPLES);
    let cert = certify_with(&m, a.alpha.or(sec.alpha), samples, cfg.seed(&a.common))?;
    let force = a.force || sec.force.unwrap_or(false);
    if !cert.is_certified() && !force {
        writeln!(stderr, "refused: model is {:?}, not certified (use --force to run anyway)", cert.status)?;
        return Ok(EXIT_REFUSED);
    }
    let f = fold_choice(&a.fold, &sec.fold(), DEFAULT_TOL)?;
    let fold = make_quadratic_fold(&m, f.saddle, f.apex, f.lip, DEFAULT_T_GRID)?;
    let r = locate_tangency(&fold, &m, &LocateOptions { n_iter: f.n_iter, tol: f.tol, alpha: Some(cert.alpha) })?;
    let mut doc = envelope("tangency", Some(&m), "tangency", serde_json::to_value(&r)?);
    doc["certificate_status"] = serde_json::to_value(cert.status)?;
    emit(&doc, a.common.out.as_deref().or(sec.out.as_deref()), stdout)?;
    Ok(if r.converged { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Error::Config(format!("bad number {t:?}: {e}"))))
        .collect()
}

/// One row of the sweep output; field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub status: Status,
    pub bh1: Status,
    pub bh1_margin: f64,
    pub bh2: Status,
    pub bh2_margin: f64,
    pub bh3: Status,
    pub bh3_margin: f64,
    pub bh4: Status,
    pub bh4_margin: f64,
    pub bh5: Status,
    pub bh5_margin: f64,
    pub bh6: Status,
    pub bh6_margin: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub alpha_admissible: f64,
    pub min_margin: f64,
    pub tangency_residual: Option<f64>,
    pub tangency_width: Option<f64>,
    pub error: Option<String>,
}

fn sweep_row(m: &BlenderModel, alpha: Option<f64>, samples: usize, seed: u64, fold: Option<&FoldChoice>) -> SweepRow {
    let mut row = SweepRow {
        lambda: m.lambda,
        mu: m.mu,
        delta: m.delta,
        status: Status::Inconclusive,
        bh1: Status::Inconclusive,
        bh1_margin: 0.0,
        bh2: Status::Inconclusive,
        bh2_margin: 0.0,
        bh3: Status::Inconclusive,
        bh3_margin: 0.0,
        bh4: Status::Inconclusive,
        bh4_margin: 0.0,
        bh5: Status::Inconclusive,
        bh5_margin: 0.0,
        bh6: Status::Inconclusive,
        bh6_margin: 0.0,
        alpha: 0.0,
        alpha_prime: 0.0,
        alpha_admissible: 0.0,
        min_margin: 0.0,
        tangency_residual: None,
        tangency_width: None,
        error: None,
    };
    let cert = match certify_with(m, alpha, samples, seed) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let c = |k: &str| (cert.condition(k).status, cert.condition(k).margin);
    (row.bh1, row.bh1_margin) = c("BH1");
    (row.bh2, row.bh2_margin) = c("BH2");
    (row.bh3, row.bh3_margin) = c("BH3");
    (row.bh4, row.bh4_margin) = c("BH4");
    (row.bh5, row.bh5_margin) = c("BH5");
    (row.bh6, row.bh6_margin) = c("BH6");
    row.status = cert.status;
    row.alpha = cert.alpha;
    row.alpha_prime = cert.alpha_prime;
    row.alpha_admissible = cert.alpha_admissible;
    row.min_margin = cert.min_margin;
    if let (Some(f), true) = (fold, cert.is_certified()) {
        let r = make_quadratic_fold(m, f.saddle, f.apex, f.lip, DEFAULT_T_GRID)
            .and_then(|fold| locate_tangency(&fold, m, &LocateOptions { n_iter: f.n_iter, tol: f.tol, alpha: Some(cert.alpha) }));
        match r {
            Ok(t) => {
                row.tangency_residual = Some(t.residual_angle);
                row.tangency_width = Some(t.interval_width);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

fn cmd_sweep(a: &SweepArgs, pool: &rayon::ThreadPool, stdout: &mut dyn Write) -> Result<u8> {
    let cfg = load(&a.common)?;
    let base = cfg.model(&a.common, &ModelArgs { lambda: None, mu: None })?;
    let sec = &cfg.file.sweep;
    let lambdas = match &a.lambda {
        Some(s) => parse_list(s)?,
        None => sec.lambdas.clone().unwrap_or_else(|| (1..=9).map(|k| 1.0 + 0.1 * k as f64).collect()),
    };
    let mus = match &a.mu {
        Some(s) => Some(parse_list(s)?),
        None => sec.mus.clone(),
    };
    let fractions = match &a.mu_fraction {
        Some(s) => parse_list(s)?,
        None => sec.mu_fractions.clone().unwrap_or_else(|| (1..=9).map(|k| 0.1 * k as f64).collect()),
    };
    let delta = base.delta;
    let mut grid = Vec::new();
    for &l in &lambdas {
        match &mus {
            Some(ms) => grid.extend(ms.iter().map(|&mu| (l, mu))),
            None => grid.extend(fractions.iter().map(|&fr| (l, fr * (l - 1.0) * delta))),
        }
    }
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let samples = a.common.samples.or(sec.samples_per_class).unwrap_or(SWEEP_SAMPLES);
    let seed = cfg.seed(&a.common);
    let alpha = a.alpha.or(sec.alpha);
    let fold = if a.tangency || sec.tangency.unwrap_or(false) { Some(fold_choice(&a.fold, &sec.fold(), DEFAULT_TOL)?) } else { None };
    let rows: Vec<SweepRow> = pool.install(|| {
        grid.par_iter()
            .map(|&(l, mu)| sweep_row(&base.with_params(l, mu, delta), alpha, samples, seed, fold.as_ref()))
            .collect()
    });

    let mut csv_buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv_buf);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let doc = envelope("sweep", None, "rows", serde_json::to_value(&rows)?);
    match a.common.out.as_deref().or(sec.out.as_deref()) {
        Some(p) => {
            let is_csv = p.extension().is_some_and(|e| e == "csv");
            let (json_path, csv_path) = if is_csv { (p.with_extension("json"), p.to_path_buf()) } else { (p.to_path_buf(), p.with_extension("csv")) };
            emit(&doc, Some(&json_path), stdout)?;
            std::fs::write(csv_path, &csv_buf)?;
        }
        None => stdout.write_all(&csv_buf)?,
    }
    Ok(EXIT_OK)
}

fn cmd_robustness(a: &RobustnessArgs, pool: &rayon::ThreadPool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    let cfg = load(&a.common)?;
    let m = cfg.model(&a.common, &a.model)?;
    let sec = &cfg.file.robustness;
    let samples = a.common.samples.or(sec.samples_per_class).unwrap_or(DEFAULT_SAMPLES);
    let seed = cfg.seed(&a.common);
    let base = certify_with(&m, None, samples, seed)?;
    if !base.is_certified() {
        writeln!(stderr, "refused: base model is {:?}, not certified", base.status)?;
        return Ok(EXIT_REFUSED);
    }
    let f = fold_choice(&a.fold, &sec.fold(), 0.0)?;
    let count = a.count.or(sec.count).unwrap_or(20);
    let fraction = a.c1_fraction.or(sec.c1_fraction).unwrap_or(0.1);
    let perturbations = random_perturbations(&m, count, fraction * base.min_margin, seed);
    let opts = RobustnessOptions {
        certify: CertifyOptions { samples_per_class: samples, seed, ..Default::default() },
        fold: FoldSpec { saddle: f.saddle, apex: f.apex, lip: f.lip, n_iter: f.n_iter, tol: f.tol },
        ..Default::default()
    };
    let report = pool.install(|| robustness_suite(&m, &perturbations, &opts))?;
    let mut doc = envelope("robustness", Some(&m), "report", serde_json::to_value(&report)?);
    doc["c1_budget"] = json!(fraction * base.min_margin);
    emit(&doc, a.common.out.as_deref().or(sec.out.as_deref()), stdout)?;
    Ok(if report.all_passed { EXIT_OK } else { EXIT_REFUTED })
}

fn cmd_export(a: &ExportArgs, stdout: &mut dyn Write) -> Result<u8> {
    let cfg = load(&a.common)?;
    let m = cfg.model(&a.common, &a.model)?;
    let sec = &cfg.file.export_disks;
    let f = fold_choice(&a.fold, &sec.fold(), DEFAULT_TOL)?;
    let n = a.fold_samples.or(sec.fold_samples).unwrap_or(9).max(2);
    let lm = m.local_manifolds();
    let manifolds = vec![
        lm.ws_p.to_record("ws_loc_p"),
        lm.ws_q.to_record("ws_loc_q"),
        lm.wuu_p.to_record("wuu_loc_p"),
        lm.wuu_q.to_record("wuu_loc_q"),
    ];
    let fold = make_quadratic_fold(&m, f.saddle, f.apex, f.lip, DEFAULT_T_GRID)?;
    let refs = ReferenceLeaves::new(&m)?;
    let mut disks = Vec::new();
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let d = fold.disk(&refs, t)?.to_uu_disk();
        let mut entry = json!({ "t": t, "disk": d.to_record(&format!("fold_t{t:.4}")) });
        for b in Branch::BOTH {
            let img = graph_transform(&d, b, &m);
            entry[format!("image_{}", b.letter().to_ascii_lowercase())] = serde_json::to_value(img.to_record(&format!("fold_t{t:.4}_{b}")))?;
        }
        disks.push(entry);
    }
    let body = json!({
        "local_manifolds": manifolds,
        "markov": crate::axioms::markov_boxes(&m),
        "fold": { "saddle": fold.saddle, "apex": fold.apex, "lip": fold.lip, "span": fold.span, "disks": disks },
    });
    let doc = envelope("export-disks", Some(&m), "export", body);
    emit(&doc, a.common.out.as_deref().or(sec.out.as_deref()), stdout)?;
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli, pool: &rayon::ThreadPool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(a, stdout),
        Command::Tangency(a) => cmd_tangency(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, pool, stdout),
        Command::Robustness(a) => cmd_robustness(a, pool, stdout, stderr),
        Command::ExportDisks(a) => cmd_export(a, stdout),
    }
}

fn common(cli: &Cli) -> &Common {
    match &cli.command {
        Command::Certify(a) => &a.common,
        Command::Tangency(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Robustness(a) => &a.common,
        Command::ExportDisks(a) => &a.common,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
            } else {
                let _ = write!(stdout, "{e}");
            }
            return code;
        }
    };
    let jobs = match load(common(&cli)) {
        Ok(cfg) => cfg.jobs(common(&cli)),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    match dispatch(&cli, &pool, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
