//! Command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::census::{census, grid_spectrum, CensusConfig, Convention};
use crate::check::{self, CheckOptions};
use crate::eigen::{smallest_eigs, EigResult, EigSolveConfig};
use crate::error::{Error, Result};
use crate::grid::{assemble_dirichlet, rasterize, read_polygon, GridMask};
use crate::heat::{
    gap_summary, heat_content, lemma1_gap, required_lambda, spectral_heat_curve, strip_coefficients_exact,
    strip_coefficients_grid, GapRow, HeatContent, HeatCurve, HeatGapParams, StripData,
};
use crate::mc::{mc_heat_mass, mc_survival, HalfSpace, McConfig};
use crate::spectra::{
    ball3_mean_carrying, box_mean_carrying, disk_mean_carrying, enumerate_ball3, enumerate_box, enumerate_disk,
    DomainSpec, Shape, Spectrum,
};

#[derive(Debug, Parser)]
#[command(name = "meanspec", version, about = "Dirichlet eigenfunction mean values and heat-mass diagnostics")]
pub struct Cli {
    /// Worker threads; falls back to MEANSPEC_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// File of `key=value` lines supplying defaults for the run flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues and mean values, one JSON line per mode.
    Spectrum(RunArgs),
    /// Nonzero-mean census report.
    Census(RunArgs),
    /// Spectral heat mass of strip data, gap table and heat content.
    Heat(RunArgs),
    /// Monte Carlo survival (`halfspace`) or heat mass.
    Mc(RunArgs),
    /// Runs the acceptance suite.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// box:L1xL2[xL3], disk:R, ball3:R, poly:FILE, mask:FILE or halfspace.
    pub domain: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid spacing; forces the finite-difference solver.
    #[arg(long)]
    pub grid_h: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub t: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub bridge: Option<bool>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckArgs {
    /// Criterion numbers to run, comma separated; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
}

/// Resolved settings of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub domain: String,
    pub n: Option<usize>,
    pub grid_h: Option<f64>,
    pub eps: Vec<f64>,
    pub t: Option<Vec<f64>>,
    pub seed: u64,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub convention: Option<Convention>,
    pub paths: usize,
    pub dt: Option<f64>,
    pub bridge: bool,
    pub c1: f64,
    pub c2: f64,
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad value for {key}: {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_value(key, s)).collect()
}

fn parse_convention(s: &str) -> Result<Convention> {
    match s.trim() {
        "canonical" => Ok(Convention::Canonical),
        "cluster" => Ok(Convention::Cluster),
        other => Err(Error::InvalidInput(format!("unknown convention {other:?}"))),
    }
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// Flags win over config-file entries, which win over defaults.
    pub fn resolve(args: &RunArgs, file: &BTreeMap<String, String>) -> Result<Self> {
        const KEYS: [&str; 15] = [
            "domain", "n", "grid_h", "eps", "t", "seed", "format", "output", "convention", "paths", "dt", "bridge",
            "c1", "c2", "threads",
        ];
        if let Some(k) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidInput(format!("unknown config key {k:?}")));
        }
        let get = |k: &str| file.get(k).map(String::as_str);
        let domain = match (&args.domain, get("domain")) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(Error::InvalidInput("missing domain descriptor".into())),
        };
        let n = match (args.n, get("n")) {
            (Some(v), _) => Some(v),
            (None, Some(v)) => Some(parse_value("n", v)?),
            _ => None,
        };
        let grid_h = match (args.grid_h, get("grid_h")) {
            (Some(v), _) => Some(v),
            (None, Some(v)) => Some(parse_value("grid_h", v)?),
            _ => None,
        };
        let eps = match (&args.eps, get("eps")) {
            (Some(v), _) => v.clone(),
            (None, Some(v)) => parse_list("eps", v)?,
            _ => vec![0.05],
        };
        let t = match (&args.t, get("t")) {
            (Some(v), _) => Some(v.clone()),
            (None, Some(v)) => Some(parse_list("t", v)?),
            _ => None,
        };
        let format = match (args.format, get("format")) {
            (Some(f), _) => Some(f),
            (None, Some(v)) => Some(
                Format::from_str(v.trim(), true).map_err(|_| Error::InvalidInput(format!("unknown format {v:?}")))?,
            ),
            _ => None,
        };
        let convention = match (&args.convention, get("convention")) {
            (Some(c), _) => Some(parse_convention(c)?),
            (None, Some(c)) => Some(parse_convention(c)?),
            _ => None,
        };
        let cfg = Self {
            domain,
            n,
            grid_h,
            eps,
            t,
            seed: args.seed.map_or_else(|| get("seed").map_or(Ok(0), |v| parse_value("seed", v)), Ok)?,
            format,
            output: args.output.clone().or_else(|| get("output").map(PathBuf::from)),
            convention,
            paths: args.paths.map_or_else(|| get("paths").map_or(Ok(100_000), |v| parse_value("paths", v)), Ok)?,
            dt: match (args.dt, get("dt")) {
                (Some(v), _) => Some(v),
                (None, Some(v)) => Some(parse_value("dt", v)?),
                _ => None,
            },
            bridge: args.bridge.map_or_else(|| get("bridge").map_or(Ok(true), |v| parse_value("bridge", v)), Ok)?,
            c1: args.c1.map_or_else(|| get("c1").map_or(Ok(1.0), |v| parse_value("c1", v)), Ok)?,
            c2: args.c2.map_or_else(|| get("c2").map_or(Ok(100.0), |v| parse_value("c2", v)), Ok)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n == Some(0) {
            return Err(Error::InvalidInput("n must be >= 1".into()));
        }
        if let Some(h) = self.grid_h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput(format!("grid_h must be positive, got {h}")));
            }
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidInput("eps must be a nonempty list of positive numbers".into()));
        }
        if let Some(t) = &self.t {
            if t.is_empty() {
                return Err(Error::InvalidInput("empty time list".into()));
            }
            if t.iter().any(|v| !(*v > 0.0 && v.is_finite())) || t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput("times must be positive and strictly increasing".into()));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
            }
        }
        HeatGapParams {
            c1: self.c1,
            c2: self.c2,
        }
        .validate()
    }
}

/// A parsed domain descriptor.
#[derive(Debug, Clone)]
pub enum DomainArg {
    Domain(DomainSpec),
    HalfSpace,
}

pub fn parse_domain(desc: &str) -> Result<DomainArg> {
    let bad = || Error::InvalidInput(format!("cannot parse domain descriptor {desc:?}"));
    if desc == "halfspace" {
        return Ok(DomainArg::HalfSpace);
    }
    let (kind, rest) = desc.split_once(':').ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let spec = match kind {
        "box" => {
            let lengths = rest.split('x').map(num).collect::<Result<Vec<_>>>()?;
            if lengths.is_empty() || lengths.len() > 3 {
                return Err(bad());
            }
            DomainSpec::boxed(&lengths)?
        }
        "disk" => DomainSpec::disk(num(rest)?)?,
        "ball3" => DomainSpec::ball3(num(rest)?)?,
        "poly" => DomainSpec::polygon(&read_polygon(Path::new(rest))?)?,
        "mask" => DomainSpec::mask(Arc::new(GridMask::read(Path::new(rest))?)),
        _ => return Err(bad()),
    };
    Ok(DomainArg::Domain(spec))
}

/// Output of the finite-difference pipeline.
pub struct GridRun {
    pub spectrum: Spectrum,
    pub result: EigResult,
    pub mask: Arc<GridMask>,
}

/// Rasterizes a planar domain at spacing `h` (masks keep their own) and
/// computes its first `n` modes.
pub fn grid_solve(domain: &DomainSpec, h: Option<f64>, n: usize, seed: u64) -> Result<GridRun> {
    let mask = match &domain.shape {
        Shape::Mask { mask, .. } => mask.clone(),
        _ => {
            let h = h.ok_or_else(|| Error::InvalidInput("grid_h is required for the grid solver".into()))?;
            Arc::new(rasterize(domain, h)?)
        }
    };
    let op = assemble_dirichlet(&mask);
    let mut cfg = EigSolveConfig::new(n);
    cfg.seed = seed;
    cfg.weight = mask.h * mask.h;
    let mut result = smallest_eigs(&op, &cfg)?;
    let spectrum = grid_spectrum(DomainSpec::mask(mask.clone()), &mask, &mut result)?;
    Ok(GridRun {
        spectrum,
        result,
        mask,
    })
}

fn uses_grid(domain: &DomainSpec, grid_h: Option<f64>) -> bool {
    matches!(domain.shape, Shape::Polygon { .. } | Shape::Mask { .. }) || grid_h.is_some()
}

fn exact_spectrum(domain: &DomainSpec, n: usize) -> Result<Spectrum> {
    match &domain.shape {
        Shape::Box { lengths } => enumerate_box(lengths, n),
        Shape::Disk { radius } => enumerate_disk(*radius, n),
        Shape::Ball3 { radius } => enumerate_ball3(*radius, n),
        _ => Err(Error::InvalidInput("no closed form for this domain".into())),
    }
}

fn domain_of(cfg: &RunConfig) -> Result<DomainSpec> {
    match parse_domain(&cfg.domain)? {
        DomainArg::Domain(d) => Ok(d),
        DomainArg::HalfSpace => Err(Error::InvalidInput("halfspace is only available to mc".into())),
    }
}

fn spectrum_of(cfg: &RunConfig, default_n: usize) -> Result<(Spectrum, Option<GridRun>)> {
    let domain = domain_of(cfg)?;
    let n = cfg.n.unwrap_or(default_n);
    if uses_grid(&domain, cfg.grid_h) {
        let run = grid_solve(&domain, cfg.grid_h, n, cfg.seed)?;
        Ok((run.spectrum.clone(), Some(run)))
    } else {
        Ok((exact_spectrum(&domain, n)?, None))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

pub fn spectrum_output(spectrum: &Spectrum, format: Format) -> String {
    let ids = spectrum.cluster_ids();
    let mut out = String::new();
    if format == Format::Csv {
        out.push_str("index,lambda,mean,label,source,residual,cluster_id\n");
    }
    for (k, m) in spectrum.modes.iter().enumerate() {
        match format {
            Format::Json => {
                let line = json!({
                    "index": k + 1,
                    "lambda": m.lambda,
                    "mean": m.mean,
                    "label": m.label,
                    "source": m.source,
                    "residual": m.residual,
                    "cluster_id": ids[k],
                });
                out.push_str(&line.to_string());
                out.push('\n');
            }
            Format::Csv => {
                let label = to_json(&m.label).replace('"', "\"\"");
                let source = to_json(&m.source);
                let _ = writeln!(
                    out,
                    "{},{},{},\"{label}\",{},{},{}",
                    k + 1,
                    m.lambda,
                    m.mean,
                    source.trim_matches('"'),
                    m.residual,
                    ids[k]
                );
            }
        }
    }
    out
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Outputs> {
    let (spectrum, _) = spectrum_of(cfg, 100)?;
    Ok(Outputs::Single(spectrum_output(&spectrum, cfg.format.unwrap_or(Format::Json))))
}

fn cmd_census(cfg: &RunConfig) -> Result<Outputs> {
    let (spectrum, _) = spectrum_of(cfg, 1000)?;
    let mut config = CensusConfig::default_for(&spectrum);
    if let Some(c) = cfg.convention {
        config = config.with_convention(c);
    }
    let report = census(&spectrum, &config)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
        Format::Csv => {
            let mut s = String::from("n,count,density,parseval\n");
            for i in 0..report.n {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    i + 1,
                    report.counting[i],
                    report.density[i],
                    report.parseval_partial[i]
                );
            }
            s
        }
    };
    Ok(Outputs::Single(text))
}

/// Default heat sample times: nine points log-spaced over `[c1 eps², c2 eps²]`.
fn heat_times(cfg: &RunConfig, eps: f64) -> Vec<f64> {
    if let Some(t) = &cfg.t {
        return t.clone();
    }
    let (a, b) = (cfg.c1 * eps * eps, cfg.c2 * eps * eps);
    if a == b {
        return vec![a];
    }
    (0..9).map(|i| a * (b / a).powf(i as f64 / 8.0)).collect()
}

/// Mean-carrying spectrum reaching `λ` large enough for sums down to `t_min`.
pub fn mean_carrying_for(domain: &DomainSpec, t_min: f64) -> Result<Spectrum> {
    let lam = required_lambda(t_min, 1e-3);
    match &domain.shape {
        Shape::Box { lengths } => box_mean_carrying(lengths, lam),
        Shape::Disk { radius } => disk_mean_carrying(*radius, (radius * lam.sqrt() / std::f64::consts::PI).ceil() as usize + 2),
        Shape::Ball3 { radius } => ball3_mean_carrying(*radius, (radius * lam.sqrt() / std::f64::consts::PI).ceil() as usize + 1),
        _ => Err(Error::InvalidInput("no closed form for this domain".into())),
    }
}

#[derive(Serialize)]
struct HeatReport {
    curves: Vec<(f64, HeatCurve)>,
    gaps: Vec<GapRow>,
    min_ratio: f64,
    max_ratio: f64,
    content: Vec<HeatContent>,
}

fn cmd_heat(cfg: &RunConfig) -> Result<Outputs> {
    let domain = domain_of(cfg)?;
    let params = HeatGapParams { c1: cfg.c1, c2: cfg.c2 };
    let grid = uses_grid(&domain, cfg.grid_h);
    let t_min = cfg
        .eps
        .iter()
        .map(|&e| heat_times(cfg, e)[0].min(cfg.c1 * e * e))
        .fold(f64::INFINITY, f64::min);
    let (spectrum, run) = if grid {
        let run = grid_solve(&domain, cfg.grid_h, cfg.n.unwrap_or(200), cfg.seed)?;
        (run.spectrum.clone(), Some(run))
    } else {
        (mean_carrying_for(&domain, t_min)?, None)
    };
    let strips = cfg
        .eps
        .iter()
        .map(|&e| match &run {
            Some(r) => strip_coefficients_grid(&r.mask, &r.result, e),
            None => strip_coefficients_exact(&spectrum, e),
        })
        .collect::<Result<Vec<StripData>>>()?;
    let mut curves = Vec::new();
    let mut gaps = Vec::new();
    for s in &strips {
        curves.push((s.eps, spectral_heat_curve(s, &spectrum, &heat_times(cfg, s.eps))?));
        gaps.push(lemma1_gap(s, &spectrum, &params)?);
    }
    let content = if grid {
        Vec::new()
    } else {
        let times = cfg.t.clone().unwrap_or_else(|| heat_times(cfg, cfg.eps[0]));
        times.iter().map(|&t| heat_content(&spectrum, t)).collect::<Result<Vec<_>>>()?
    };
    let sweep = gap_summary(gaps);
    let report = HeatReport {
        curves,
        gaps: sweep.rows,
        min_ratio: sweep.min_ratio,
        max_ratio: sweep.max_ratio,
        content,
    };
    Ok(match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => Outputs::Single(serde_json::to_string_pretty(&report).expect("serializable") + "\n"),
        Format::Csv => heat_csv(&report),
    })
}

fn heat_csv(report: &HeatReport) -> Outputs {
    let mut files = Vec::new();
    for (i, (_, c)) in report.curves.iter().enumerate() {
        files.push((format!("curve_eps{}.csv", i + 1), c.to_csv()));
    }
    let mut g = String::from("eps,m1,m2,gap,ratio,strip_measure\n");
    for r in &report.gaps {
        let _ = writeln!(g, "{},{},{},{},{},{}", r.eps, r.m1, r.m2, r.gap, r.ratio, r.strip_measure);
    }
    files.push(("gap.csv".into(), g));
    if !report.content.is_empty() {
        let mut c = String::from("t,value,expansion,residual,terms,truncation_bound\n");
        for h in &report.content {
            let _ = writeln!(
                c,
                "{},{},{},{},{},{}",
                h.t, h.value, h.expansion, h.residual, h.terms, h.truncation_bound
            );
        }
        files.push(("content.csv".into(), c));
    }
    Outputs::Files(files)
}

fn cmd_mc(cfg: &RunConfig) -> Result<Outputs> {
    let config = McConfig {
        n_paths: cfg.paths,
        dt: cfg.dt,
        seed: cfg.seed,
        bridge_correction: cfg.bridge,
    };
    if cfg.eps.len() != 1 {
        return Err(Error::InvalidInput("mc takes a single eps".into()));
    }
    let eps = cfg.eps[0];
    let times = cfg.t.clone().unwrap_or_else(|| vec![eps * eps]);
    let curve = match parse_domain(&cfg.domain)? {
        DomainArg::HalfSpace => {
            let config = McConfig {
                dt: Some(config.step(eps)),
                ..config
            };
            let c = mc_survival(&HalfSpace, &[eps], &times, &config)?;
            HeatCurve {
                samples: c
                    .times
                    .iter()
                    .zip(&c.estimates)
                    .map(|(&t, e)| crate::heat::HeatSample {
                        t,
                        value: e.value,
                        stderr: e.stderr,
                    })
                    .collect(),
                method: crate::heat::Method::MonteCarlo,
                truncation_bound: 0.0,
            }
        }
        DomainArg::Domain(d) => mc_heat_mass(&d, eps, &times, &config)?,
    };
    Ok(Outputs::Single(match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => curve.to_csv(),
        Format::Json => serde_json::to_string_pretty(&curve).expect("serializable") + "\n",
    }))
}

/// What a command produces: one document, or named files for a directory.
pub enum Outputs {
    Single(String),
    Files(Vec<(String, String)>),
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("bad output path {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn emit(outputs: Outputs, dest: Option<&Path>) -> Result<()> {
    match (outputs, dest) {
        (Outputs::Single(s), Some(p)) => write_atomic(p, &s),
        (Outputs::Single(s), None) => {
            print!("{s}");
            Ok(())
        }
        (Outputs::Files(files), Some(dir)) => {
            std::fs::create_dir_all(dir)?;
            for (name, body) in &files {
                write_atomic(&dir.join(name), body)?;
            }
            Ok(())
        }
        (Outputs::Files(files), None) => {
            for (name, body) in &files {
                print!("# {name}\n{body}\n");
            }
            Ok(())
        }
    }
}

fn thread_count(flag: Option<usize>, file: Option<&String>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    if let Some(v) = file {
        return Ok(Some(parse_value("threads", v)?));
    }
    match std::env::var("MEANSPEC_THREADS") {
        Ok(v) if !v.trim().is_empty() => Ok(Some(parse_value("MEANSPEC_THREADS", &v)?)),
        _ => Ok(None),
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let threads = thread_count(cli.threads, file.get("threads"))?;
    if threads == Some(0) {
        return Err(Error::InvalidInput("threads must be >= 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Check(a) => {
            let opts = CheckOptions {
                only: a.only.clone(),
                ..CheckOptions::default()
            };
            let summary = check::run(&opts, &mut std::io::stdout())?;
            Ok(if summary.all_passed() { 0 } else { 1 })
        }
        Command::Spectrum(a) | Command::Census(a) | Command::Heat(a) | Command::Mc(a) => {
            let cfg = RunConfig::resolve(a, &file)?;
            let out = match &cli.command {
                Command::Spectrum(_) => cmd_spectrum(&cfg)?,
                Command::Census(_) => cmd_census(&cfg)?,
                Command::Heat(_) => cmd_heat(&cfg)?,
                _ => cmd_mc(&cfg)?,
            };
            emit(out, cfg.output.as_deref())?;
            Ok(0)
        }
    })
}

/// Parses `args` (including the program name) and runs; errors are printed
/// to stderr and mapped to exit codes.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        assert!(matches!(parse_domain("halfspace").unwrap(), DomainArg::HalfSpace));
        let DomainArg::Domain(d) = parse_domain("box:1x2").unwrap() else { panic!() };
        assert_eq!(d.volume, 2.0);
        let DomainArg::Domain(d) = parse_domain("disk:2").unwrap() else { panic!() };
        assert_eq!(d.dim, 2);
        for bad in ["disc:1", "box:", "box:1xa", "disk:-1", "ball3", "box:1x1x1x1"] {
            let e = parse_domain(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn config_merging() {
        let mut file = BTreeMap::new();
        file.insert("n".to_string(), "7".to_string());
        file.insert("eps".to_string(), "0.1,0.2".to_string());
        file.insert("domain".to_string(), "disk:1".to_string());
        let args = RunArgs {
            n: Some(3),
            ..RunArgs::default()
        };
        let cfg = RunConfig::resolve(&args, &file).unwrap();
        assert_eq!(cfg.n, Some(3));
        assert_eq!(cfg.eps, vec![0.1, 0.2]);
        assert_eq!(cfg.domain, "disk:1");
        file.insert("t".to_string(), String::new());
        assert!(RunConfig::resolve(&args, &file).is_err());
        file.remove("t");
        file.insert("bogus".to_string(), "1".to_string());
        assert!(RunConfig::resolve(&args, &file).is_err());
    }

    #[test]
    fn spectrum_lines() {
        let s = enumerate_box(&[1.0, 1.0], 3).unwrap();
        let out = spectrum_output(&s, Format::Json);
        let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
        assert_eq!(first["index"], 1);
        assert_eq!(first["label"], json!([1, 1]));
        assert_eq!(first["source"], "exact");
        let csv = spectrum_output(&s, Format::Csv);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().contains("\"[1,1]\""));
    }
}
