//! Command-line front end.
//!
//! Exit codes: 0 for a certified, orphan-free or fully passing result, 1
//! when the answer is negative, 2 for inapplicable conditions and errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::certify::{certify_pipeline, Certificate, PipelineError, Verdict};
use crate::diagram::{
    detect_orphans, label_grid, neighbor_pairs, orphan_mask, render_ppm, render_svg, Component, DiagramError,
    GridLabeling,
};
use crate::metric::io::{mesh_dimension, parse_mesh, ParseError};
use crate::metric::{DistanceKind, SimplicialMetricMesh};
use crate::sites::{parse_sites, sites_dimension, SiteSet, SitesError};
use crate::variation::{sigma1_pl_bound, variation_report, SampleOptions, VariationError, VariationReport};
use crate::verify::{verify_suite, SuiteReport, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "AVD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "avdcert", version, about = "Orphan-freedom certificates for anisotropic Voronoi diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variation bound of a mesh, optionally with sampled estimates.
    Sigma(RunConfig),
    /// End-to-end certificate for a mesh and a site set.
    Certify(RunConfig),
    /// Grid diagram with orphan report, optionally rendered.
    Diagram(RunConfig),
    /// Numerical checks of the lemmas behind the certificate.
    Verify(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Ppm,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Dw,
    Ls,
}

impl From<KindArg> for DistanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dw => DistanceKind::Dw,
            KindArg::Ls => DistanceKind::Ls,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Mesh file (`avdmesh` format).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Sites file (`avdsites` format).
    #[arg(long)]
    pub sites: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dw")]
    pub kind: KindArg,
    /// Grid cells per axis for diagrams, grid nodes per axis for the cover constant.
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    /// Cover constant for the restricted σ₀ bound (sigma only).
    #[arg(long)]
    pub cover: Option<f64>,
    /// Seed for every sampled quantity.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Shorthand for `--format text`.
    #[arg(long)]
    pub text: bool,
    /// Also report sampled σ₁ and σ₀ estimates (sigma only).
    #[arg(long)]
    pub sampled: bool,
    /// Variation bound to test instead of the mesh bound (verify only).
    #[arg(long)]
    pub sigma_override: Option<f64>,
}

impl RunConfig {
    fn format(&self) -> Format {
        if self.text {
            Format::Text
        } else {
            self.format
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Sites { path: String, source: SitesError },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("writing output: {0}")]
    Output(#[source] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn parse_err(path: &Path) -> impl FnOnce(ParseError) -> CliError + '_ {
    move |source| CliError::Parse { path: path.display().to_string(), source }
}

struct Inputs {
    mesh_text: String,
    dim: usize,
    sites_text: Option<String>,
}

fn load(cfg: &RunConfig, need_sites: bool) -> Result<Inputs, CliError> {
    let mesh_text = read(&cfg.mesh)?;
    let dim = mesh_dimension(&mesh_text).map_err(parse_err(&cfg.mesh))?;
    let sites_text = match (&cfg.sites, need_sites) {
        (Some(p), true) => {
            let text = read(p)?;
            let sd = sites_dimension(&text).map_err(parse_err(p))?;
            if sd != dim {
                return Err(CliError::Usage(format!("mesh is {dim}-dimensional but sites are {sd}-dimensional")));
            }
            Some(text)
        }
        (None, true) => return Err(CliError::Usage("--sites is required for this command".into())),
        (_, false) => None,
    };
    Ok(Inputs { mesh_text, dim, sites_text })
}

fn mesh<const N: usize>(cfg: &RunConfig, text: &str) -> Result<SimplicialMetricMesh<f64, N>, CliError> {
    parse_mesh(text).map_err(parse_err(&cfg.mesh))
}

fn sites<const N: usize>(cfg: &RunConfig, text: &str) -> Result<SiteSet<f64, N>, CliError> {
    let path = cfg.sites.as_deref().unwrap_or(Path::new("-"));
    let pts = parse_sites(text).map_err(parse_err(path))?;
    SiteSet::new(pts).map_err(|source| CliError::Sites { path: path.display().to_string(), source })
}

fn require_format(cfg: &RunConfig, allowed: &[Format]) -> Result<Format, CliError> {
    let f = cfg.format();
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!("format {f:?} is not available for this command").to_lowercase()))
    }
}

fn json<S: Serialize>(value: &S) -> Vec<u8> {
    let mut v = serde_json::to_vec(value).expect("reports serialize");
    v.push(b'\n');
    v
}

/// Report bytes, the exit code they imply, and an image destined for `--out`.
struct Output {
    bytes: Vec<u8>,
    code: i32,
    image: Option<Vec<u8>>,
}

fn cmd_sigma(cfg: &RunConfig) -> Result<Output, CliError> {
    let fmt = require_format(cfg, &[Format::Json, Format::Text])?;
    let inputs = load(cfg, false)?;
    let opts = SampleOptions { seed: cfg.seed, ..SampleOptions::default() };
    let sampled = cfg.sampled.then_some(&opts);
    let report = match inputs.dim {
        2 => variation_report(&mesh::<2>(cfg, &inputs.mesh_text)?, sampled, cfg.cover)?,
        _ => variation_report(&mesh::<3>(cfg, &inputs.mesh_text)?, sampled, cfg.cover)?,
    };
    let bytes = match fmt {
        Format::Text => sigma_text(&report).into_bytes(),
        _ => json(&report),
    };
    Ok(Output { bytes, code: EXIT_OK, image: None })
}

fn sigma_text(r: &VariationReport<f64>) -> String {
    let mut s = format!("sigma1 bound     {} (simplex {})\n", r.sigma1_bound, r.sigma1_bound_simplex);
    if let (Some(s1), Some(s0)) = (r.sigma1_sampled, r.sigma0_sampled) {
        s += &format!("sigma1 sampled   {s1}\nsigma0 sampled   {s0}\n");
    }
    if let (Some(c), Some(b)) = (r.cover, r.sigma0_of_c_bound) {
        s += &format!("sigma0(C) bound  {b} (C = {c})\n");
    }
    s
}

fn certify_typed<const N: usize>(cfg: &RunConfig, inputs: &Inputs) -> Result<Certificate<f64>, CliError> {
    let m = mesh::<N>(cfg, &inputs.mesh_text)?;
    let s = sites::<N>(cfg, inputs.sites_text.as_deref().unwrap())?;
    Ok(certify_pipeline(&m, &s, cfg.kind.into(), cfg.resolution)?)
}

fn cmd_certify(cfg: &RunConfig) -> Result<Output, CliError> {
    let fmt = require_format(cfg, &[Format::Json, Format::Text])?;
    let inputs = load(cfg, true)?;
    let cert = match inputs.dim {
        2 => certify_typed::<2>(cfg, &inputs)?,
        _ => certify_typed::<3>(cfg, &inputs)?,
    };
    let code = match cert.verdict {
        Verdict::Certified => EXIT_OK,
        Verdict::NotCertified => EXIT_NEGATIVE,
        Verdict::Inapplicable => EXIT_ERROR,
    };
    let bytes = match fmt {
        Format::Text => certificate_text(&cert).into_bytes(),
        _ => json(&cert),
    };
    Ok(Output { bytes, code, image: None })
}

fn certificate_text(c: &Certificate<f64>) -> String {
    let mut s = format!(
        "kind       {}\nsigma1     {} ({:?})\ncover      {} ({} nodes per axis)\npacking    {}\nratio      {}\n",
        c.kind, c.sigma1, c.sigma1_provenance, c.cover, c.cover_resolution, c.packing, c.ratio
    );
    match c.condition_value {
        Some(v) => s += &format!("condition  {v}\n"),
        None => s += "condition  n/a\n",
    }
    s += &format!("verdict    {:?}\n", c.verdict);
    if let Some(r) = &c.reason {
        s += &format!("reason     {r}\n");
    }
    s
}

#[derive(Debug, Serialize)]
struct DiagramReport {
    kind: DistanceKind,
    resolution: usize,
    cells: usize,
    ties: usize,
    orphan_free: bool,
    component_counts: Vec<usize>,
    orphans: Vec<Component>,
    displaced_sites: Vec<usize>,
    neighbor_pairs: usize,
}

fn diagram_typed<const N: usize>(
    cfg: &RunConfig,
    inputs: &Inputs,
) -> Result<(DiagramReport, GridLabeling<f64, N>, SiteSet<f64, N>), CliError> {
    let m = mesh::<N>(cfg, &inputs.mesh_text)?;
    let s = sites::<N>(cfg, inputs.sites_text.as_deref().unwrap())?;
    let grid = label_grid(&m, &s, cfg.kind.into(), cfg.resolution)?;
    let orphans = detect_orphans(&grid, &s)?;
    let report = DiagramReport {
        kind: grid.kind(),
        resolution: cfg.resolution,
        cells: grid.num_cells(),
        ties: grid.ties(),
        orphan_free: orphans.orphan_free,
        component_counts: orphans.component_counts,
        orphans: orphans.orphans,
        displaced_sites: orphans.displaced_sites,
        neighbor_pairs: neighbor_pairs(&grid).len(),
    };
    Ok((report, grid, s))
}

fn cmd_diagram(cfg: &RunConfig) -> Result<Output, CliError> {
    let fmt = cfg.format();
    let image_format = matches!(fmt, Format::Ppm | Format::Svg);
    let inputs = load(cfg, true)?;
    if image_format && inputs.dim != 2 {
        return Err(DiagramError::NotPlanar.into());
    }
    if image_format && cfg.out.is_none() {
        return Err(CliError::Usage("image formats need --out PATH".into()));
    }
    let (report, image) = match inputs.dim {
        2 => {
            let (report, grid, s) = diagram_typed::<2>(cfg, &inputs)?;
            let image = match fmt {
                Format::Ppm => Some(render_ppm(&grid, &orphan_mask(&grid, &s)?)),
                Format::Svg => Some(render_svg(&grid, &s, &orphan_mask(&grid, &s)?).into_bytes()),
                _ => None,
            };
            (report, image)
        }
        _ => (diagram_typed::<3>(cfg, &inputs)?.0, None),
    };
    let code = if report.orphan_free { EXIT_OK } else { EXIT_NEGATIVE };
    let bytes = match fmt {
        Format::Text => format!(
            "kind         {}\nresolution   {}\norphan free  {}\norphans      {}\ndisplaced    {}\nties         {}\n",
            report.kind,
            report.resolution,
            report.orphan_free,
            report.orphans.len(),
            report.displaced_sites.len(),
            report.ties
        )
        .into_bytes(),
        _ => json(&report),
    };
    Ok(Output { bytes, code, image })
}

fn verify_typed<const N: usize>(cfg: &RunConfig, inputs: &Inputs) -> Result<SuiteReport, CliError> {
    let m = mesh::<N>(cfg, &inputs.mesh_text)?;
    let sigma = match cfg.sigma_override {
        Some(s) if s >= 0.0 => s,
        Some(s) => return Err(CliError::Usage(format!("--sigma-override must be non-negative, got {s}"))),
        None => sigma1_pl_bound(&m)?.value,
    };
    let opts = VerifyOptions { seed: cfg.seed, ..VerifyOptions::default() };
    Ok(verify_suite(&m, sigma, &opts))
}

fn cmd_verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let fmt = require_format(cfg, &[Format::Json, Format::Text])?;
    let inputs = load(cfg, false)?;
    let report = match inputs.dim {
        2 => verify_typed::<2>(cfg, &inputs)?,
        _ => verify_typed::<3>(cfg, &inputs)?,
    };
    let code = if report.all_passed { EXIT_OK } else { EXIT_NEGATIVE };
    let bytes = match fmt {
        Format::Text => {
            let mut s = format!("sigma1 {}\n", report.sigma1);
            for p in &report.properties {
                s += &format!(
                    "{} {}: {} checked, {} violations, worst excess {:e}\n",
                    if p.passed { "PASS" } else { "FAIL" },
                    p.name,
                    p.checked,
                    p.violations,
                    p.worst_excess
                );
            }
            s += &format!("{} passed, {} failed\n", report.passed, report.failed);
            s.into_bytes()
        }
        _ => json(&report),
    };
    Ok(Output { bytes, code, image: None })
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second call within one process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs the command line, writing results to `out` and diagnostics to
/// `err`, and returns the exit code.
pub fn run<I, A>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = target.write_all(rendered.as_bytes());
            return code;
        }
    };
    configure_threads();
    let (cfg, result) = match &cli.command {
        Command::Sigma(c) => (c, cmd_sigma(c)),
        Command::Certify(c) => (c, cmd_certify(c)),
        Command::Diagram(c) => (c, cmd_diagram(c)),
        Command::Verify(c) => (c, cmd_verify(c)),
    };
    let result = result.and_then(|o| {
        let write = |path: &PathBuf, bytes: &[u8]| {
            std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
        };
        match (&cfg.out, &o.image) {
            (Some(path), Some(img)) => {
                write(path, img)?;
                out.write_all(&o.bytes).map_err(CliError::Output)?;
            }
            (Some(path), None) => write(path, &o.bytes)?,
            (None, _) => out.write_all(&o.bytes).map_err(CliError::Output)?,
        }
        Ok(o.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
