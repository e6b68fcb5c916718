//! Command-line front end.
//!
//! Every subcommand resolves its full configuration and computes all outputs
//! in memory before touching the output location, so a failing run leaves no
//! files behind. Exit codes: 0 success, 1 data or domain error, 2 usage error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{bandwidth_sweep, evaluate_surfaces, global_diagnostics, SurfaceOptions, DEFAULT_SWEEP_FRACTIONS};
use crate::error::{Error, Result};
use crate::inference::{local_permutation_tests, morans_i_test_with, MoranOptions, PermutationConfig, Tail};
use crate::io::{format_significant, read_samples, write_mask, write_p_values, write_reports, write_samples, write_surface, SampleFileFormat};
use crate::model::{Bandwidth, DiagnosticKind, EvaluationGrid, KernelSpec, Point, SampleSet};
use crate::synth::{self, Scenario};

#[derive(Debug, Parser)]
#[command(name = "gwdiag", version, about = "Global and geographically weighted error diagnostics")]
pub struct Cli {
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, global = true, env = "GWDIAG_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global msd, mae, rmse, r and Moran's I of the deviations.
    Global(GlobalArgs),
    /// Local diagnostic surfaces with optional permutation tests.
    Gw(GwArgs),
    /// One local diagnostic over a ladder of adaptive bandwidths.
    Sweep(SweepArgs),
    /// Write a synthetic sample file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Delimited sample file with id, x, y, predicted and reference columns.
    #[arg(long, short)]
    pub input: PathBuf,

    /// Field delimiter of the input file.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Kernel family.
    #[arg(long, default_value = "bisquare")]
    pub kernel: String,

    /// `adaptive:<fraction>`, `knn:<count>` or `fixed:<distance>`.
    #[arg(long, default_value = "adaptive:0.10")]
    pub bandwidth: String,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Explicit extent `xmin,ymin,xmax,ymax`; requires --cellsize.
    #[arg(long, value_delimiter = ',', requires = "cellsize")]
    pub bbox: Option<Vec<f64>>,

    #[arg(long, requires = "bbox")]
    pub cellsize: Option<f64>,

    /// Cells along the longer side of the automatic grid.
    #[arg(long, default_value_t = 100)]
    pub grid_target: usize,

    /// Padding of the automatic grid around the sample bounding box.
    #[arg(long, default_value_t = 0.05)]
    pub grid_pad: f64,

    /// Largest number of cells accepted.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_cells: usize,

    /// Minimum positively weighted samples for a local correlation.
    #[arg(long, default_value_t = 3)]
    pub min_points_r: usize,
}

#[derive(Debug, Args)]
pub struct PermutationArgs {
    /// Permutation replicates; 0 disables the local tests.
    #[arg(long, default_value_t = 999)]
    pub permutations: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// two_sided, upper or lower.
    #[arg(long, default_value = "two_sided")]
    pub tail: String,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,

    #[command(flatten)]
    pub permutation: PermutationArgs,

    /// Row-standardize the Moran's I weights.
    #[arg(long)]
    pub row_standardize: bool,
}

#[derive(Debug, Args)]
pub struct GwArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,

    #[command(flatten)]
    pub kernel: KernelArgs,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Diagnostics to compute.
    #[arg(long, value_delimiter = ',', default_value = "gw_msd,gw_mae,gw_rmse,gw_r")]
    pub kinds: Vec<String>,

    #[command(flatten)]
    pub permutation: PermutationArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,

    #[command(flatten)]
    pub grid: GridArgs,

    #[arg(long, default_value = "gw_mae")]
    pub kind: String,

    /// Adaptive fractions; defaults to 0.05 through 0.50 in steps of 0.05.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// null, cluster or bias.
    #[arg(long)]
    pub scenario: String,

    #[arg(long, default_value_t = 550)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV path.
    #[arg(long, short)]
    pub output: PathBuf,
}

/// Grid selection before samples are known.
#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    Explicit { lo: Point, hi: Point, cell_size: f64 },
    Auto { pad: f64, target: usize },
}

impl GridChoice {
    fn from_args(args: &GridArgs) -> Result<Self> {
        match (&args.bbox, args.cellsize) {
            (Some(b), _) if b.len() != 4 => Err(Error::InvalidConfig(format!(
                "--bbox takes xmin,ymin,xmax,ymax, got {} values",
                b.len()
            ))),
            (Some(b), Some(cell_size)) => Ok(GridChoice::Explicit {
                lo: Point::new(b[0], b[1]),
                hi: Point::new(b[2], b[3]),
                cell_size,
            }),
            _ => {
                if !(args.grid_pad >= 0.0) {
                    return Err(Error::InvalidConfig(format!("grid padding must be non-negative, got {}", args.grid_pad)));
                }
                Ok(GridChoice::Auto {
                    pad: args.grid_pad,
                    target: args.grid_target,
                })
            }
        }
    }

    pub fn resolve(&self, samples: &SampleSet) -> Result<EvaluationGrid> {
        match *self {
            GridChoice::Explicit { lo, hi, cell_size } => EvaluationGrid::from_extent(lo, hi, cell_size),
            GridChoice::Auto { pad, target } => EvaluationGrid::covering(samples, pad, target),
        }
    }
}

/// Subcommand inputs resolved to concrete library values.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: SampleFileFormat,
    pub output: PathBuf,
    pub kernel: KernelSpec,
    pub grid: GridChoice,
    pub kinds: BTreeSet<DiagnosticKind>,
    pub permutations: Option<PermutationConfig>,
    pub surface: SurfaceOptions,
}

fn parse_kernel(args: &KernelArgs) -> Result<KernelSpec> {
    if !args.kernel.eq_ignore_ascii_case("bisquare") {
        return Err(Error::InvalidKernel(format!("unsupported kernel family {:?}", args.kernel)));
    }
    KernelSpec::bisquare(args.bandwidth.parse::<Bandwidth>()?)
}

fn parse_format(args: &InputArgs) -> Result<SampleFileFormat> {
    let delimiter = u8::try_from(args.delimiter)
        .map_err(|_| Error::InvalidConfig(format!("delimiter {:?} is not a single byte", args.delimiter)))?;
    Ok(SampleFileFormat { delimiter })
}

fn parse_permutations(args: &PermutationArgs) -> Result<PermutationConfig> {
    let cfg = PermutationConfig {
        n_permutations: args.permutations,
        seed: args.seed,
        alpha: args.alpha,
        tail: args.tail.parse::<Tail>()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn surface_options(args: &GridArgs) -> SurfaceOptions {
    SurfaceOptions {
        min_points_for_r: args.min_points_r,
        max_cells: args.max_cells,
    }
}

impl RunConfig {
    pub fn for_gw(args: &GwArgs) -> Result<Self> {
        let kinds = args
            .kinds
            .iter()
            .map(|k| k.parse::<DiagnosticKind>())
            .collect::<Result<BTreeSet<_>>>()?;
        if kinds.is_empty() {
            return Err(Error::InvalidConfig("no diagnostic kinds requested".into()));
        }
        let permutations = if args.permutation.permutations == 0 {
            None
        } else {
            Some(parse_permutations(&args.permutation)?)
        };
        Ok(Self {
            input: args.input.input.clone(),
            format: parse_format(&args.input)?,
            output: args.output.clone(),
            kernel: parse_kernel(&args.kernel)?,
            grid: GridChoice::from_args(&args.grid)?,
            kinds,
            permutations,
            surface: surface_options(&args.grid),
        })
    }
}

fn load(path: &Path, fmt: &SampleFileFormat) -> Result<SampleSet> {
    let file = fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_samples(file, fmt)
}

/// Files produced by a run, written only once everything has succeeded.
#[derive(Debug, Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((path, buf));
        Ok(())
    }

    fn commit(self) -> Result<()> {
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| {
            for (path, bytes) in &self.files {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).map_err(|source| Error::File {
                        path: parent.to_path_buf(),
                        source,
                    })?;
                }
                fs::write(path, bytes).map_err(|source| Error::File {
                    path: path.clone(),
                    source,
                })?;
                written.push(path.clone());
            }
            Ok(())
        })();
        if result.is_err() {
            for path in &written {
                let _ = fs::remove_file(path);
            }
        }
        result
    }
}

pub fn cmd_global(args: &GlobalArgs) -> Result<()> {
    let format = parse_format(&args.input)?;
    let cfg = parse_permutations(&args.permutation)?;
    let samples = load(&args.input.input, &format)?;
    let global = global_diagnostics(&samples)?;
    let moran_opts = MoranOptions {
        row_standardize: args.row_standardize,
    };
    let moran = match morans_i_test_with(&samples, &cfg, &moran_opts) {
        Ok(m) => Some(m),
        Err(Error::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    let mut out = Outputs::default();
    out.add(args.output.join("global_report.txt"), |buf| write_reports(&global, moran.as_ref(), &cfg, buf))?;
    out.commit()?;
    println!(
        "n={} msd={} mae={} rmse={} r={} moran_i={} moran_p={}",
        global.n,
        format_significant(global.msd, 6),
        format_significant(global.mae, 6),
        format_significant(global.rmse, 6),
        global.r.map_or("NA".into(), |r| format_significant(r, 6)),
        moran.map_or("NA".into(), |m| format_significant(m.i_value, 6)),
        moran.map_or("NA".into(), |m| format_significant(m.p_value, 6)),
    );
    Ok(())
}

fn summary(label: &str, values: &[Option<f64>]) -> String {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let missing = values.len() - present.len();
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format_significant(v, 6));
    let min = present.iter().copied().reduce(f64::min);
    let max = present.iter().copied().reduce(f64::max);
    format!("{label}: min={} max={} missing={missing}", fmt(min), fmt(max))
}

pub fn cmd_gw(cfg: &RunConfig) -> Result<()> {
    let samples = load(&cfg.input, &cfg.format)?;
    let grid = cfg.grid.resolve(&samples)?;
    let surfaces = evaluate_surfaces(&samples, &grid, &cfg.kernel, &cfg.kinds, &cfg.surface)?;
    let reports = match &cfg.permutations {
        Some(p) => Some(local_permutation_tests(&samples, &grid, &cfg.kernel, &cfg.kinds, p, &cfg.surface)?),
        None => None,
    };

    let mut out = Outputs::default();
    let mut lines = Vec::new();
    for (i, surface) in surfaces.iter().enumerate() {
        let name = surface.kind.name();
        out.add(cfg.output.join(format!("{name}.asc")), |buf| write_surface(surface, buf))?;
        let mut line = summary(name, &surface.values);
        if let Some(reports) = &reports {
            let report = &reports[i];
            out.add(cfg.output.join(format!("{name}_p.asc")), |buf| write_p_values(report, buf))?;
            out.add(cfg.output.join(format!("{name}_sig.asc")), |buf| write_mask(report, buf))?;
            line.push_str(&format!(" significant={}", report.flagged_count()));
        }
        lines.push(line);
    }
    out.commit()?;
    for line in lines {
        println!("{line}");
    }
    Ok(())
}

/// File-name label of an adaptive fraction: `0.05` becomes `05`, `1.0` `100`.
pub fn fraction_label(f: f64) -> String {
    let percent = f * 100.0;
    let rounded = percent.round();
    if (percent - rounded).abs() < 1e-9 {
        format!("{:02}", rounded as u64)
    } else {
        format_significant(percent, 6).replace('.', "_")
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let format = parse_format(&args.input)?;
    let kind: DiagnosticKind = args.kind.parse()?;
    let fractions = args.fractions.clone().unwrap_or_else(|| DEFAULT_SWEEP_FRACTIONS.to_vec());
    let mut labels = BTreeSet::new();
    for &f in &fractions {
        Bandwidth::AdaptiveFraction(f).validate()?;
        if !labels.insert(fraction_label(f)) {
            return Err(Error::InvalidConfig(format!("fraction {f} is listed twice")));
        }
    }
    let grid_choice = GridChoice::from_args(&args.grid)?;
    let opts = surface_options(&args.grid);
    let samples = load(&args.input.input, &format)?;
    let grid = grid_choice.resolve(&samples)?;
    let sweep = bandwidth_sweep(&samples, &grid, kind, &fractions, &opts)?;

    let mut out = Outputs::default();
    let mut table = String::from("fraction,mean,sd\n");
    for (f, surface) in &sweep {
        let path = args.output.join(format!("{}_f{}.asc", kind.name(), fraction_label(*f)));
        out.add(path, |buf| write_surface(surface, buf))?;
        let (mean, sd) = surface
            .mean_sd()
            .map_or(("NA".to_string(), "NA".to_string()), |(m, s)| (format_significant(m, 10), format_significant(s, 10)));
        table.push_str(&format!("{},{mean},{sd}\n", format_significant(*f, 10)));
    }
    out.add(args.output.join(format!("{}_sweep.csv", kind.name())), |buf| {
        buf.extend_from_slice(table.as_bytes());
        Ok(())
    })?;
    out.commit()?;
    print!("{table}");
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let scenario: Scenario = args.scenario.parse()?;
    let data = synth::generate(scenario, args.n, args.seed)?;
    let mut out = Outputs::default();
    out.add(args.output.clone(), |buf| write_samples(&data.samples, buf))?;
    out.commit()?;
    println!("wrote {} {scenario} samples to {}", data.samples.len(), args.output.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Global(args) => cmd_global(args),
        Command::Gw(args) => cmd_gw(&RunConfig::for_gw(args)?),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidConfig("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start {n} worker threads: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli))),
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}
