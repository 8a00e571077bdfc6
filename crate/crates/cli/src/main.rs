use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use amrpack::amr::merge_to_uniform;
use amrpack::archive::CompressedArchive;
use amrpack::bench::{run_case, sweep, write_halo_csv, write_rd_csv, write_spectrum_csv};
use amrpack::codec::{BoundMode, ErrorBound};
use amrpack::datagen::{generate_dataset, GenSpec};
use amrpack::gsp::GspParams;
use amrpack::io::{load_dataset, save_dataset};
use amrpack::metrics::halo::{DEFAULT_MIN_CELLS, DEFAULT_THRESHOLD_FACTOR};
use amrpack::metrics::{halo_compare, halo_find, power_spectrum, power_spectrum_error, HaloParams};
use amrpack::pipeline::{compress_with_stats, decompress_dataset, CompressionConfig, StrategyChoice};
use amrpack::{AmrDataset, ValueType};

#[derive(Parser)]
#[command(name = "amrpack", version, about = "Error-bounded compression of tree-structured AMR data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic AMR dataset directory.
    Generate(GenerateArgs),
    /// Compress a dataset directory into an archive.
    Compress {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        opts: CompressArgs,
    },
    /// Restore a dataset directory from an archive.
    Decompress {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sweep error bounds over strategies and write a rate-distortion CSV.
    Bench(BenchArgs),
    /// Compare power spectra and halos of original and decompressed data.
    Analyze(AnalyzeArgs),
    /// Print a summary of an archive or dataset directory.
    Inspect { path: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 256)]
    finest_side: usize,
    /// Target fraction of non-empty unit blocks on the finest level.
    #[arg(long, default_value_t = 0.23)]
    finest_density: f64,
    #[arg(long, default_value_t = 16)]
    unit_block: usize,
    #[arg(long, default_value_t = 2)]
    refinement_factor: usize,
    /// Correlation length of the field, in units of side/32 cells.
    #[arg(long, default_value_t = 2.0)]
    smoothness: f64,
    #[arg(long, default_value_t = ValueType::F32)]
    value_type: ValueType,
}

#[derive(Args, Clone)]
struct CompressArgs {
    /// Density below which OpST is used.
    #[arg(long, default_value_t = 0.50)]
    t1: f64,
    /// Density above which GSP is used.
    #[arg(long, default_value_t = 0.60)]
    t2: f64,
    /// Finest-level density at which the whole dataset falls back to 3D.
    #[arg(long, default_value_t = 0.60)]
    fallback_density: f64,
    #[arg(long, default_value_t = 1e-3)]
    eb: f64,
    #[arg(long, default_value_t = BoundMode::Relative, value_parser = parse_mode)]
    eb_mode: BoundMode,
    /// Per-level bound ratios, finest first, e.g. 3:1.
    #[arg(long, value_parser = parse_ratios)]
    level_ratios: Option<Ratios>,
    #[arg(long, default_value_t = 1)]
    gsp_x: usize,
    #[arg(long, default_value_t = 1)]
    gsp_y: usize,
    #[arg(long, default_value = "lorenzo", value_parser = ["lorenzo", "lossless-ref"])]
    codec: String,
    #[arg(long, default_value = "auto", value_parser = parse_strategy)]
    strategy: StrategyChoice,
}

#[derive(Clone, Debug)]
struct Ratios(Vec<f64>);

#[derive(Args)]
struct BenchArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Comma-separated bound magnitudes.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    ebs: Vec<f64>,
    /// Comma-separated strategies; the --strategy flag is ignored here.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy, default_value = "auto,opst,akdtree,gsp,nast,zf,1d,3d")]
    strategies: Vec<StrategyChoice>,
    /// Write zeros in the timing columns so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    #[command(flatten)]
    opts: CompressArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Decompressed archive to compare; compressed on the fly when absent.
    #[arg(long)]
    archive: Option<PathBuf>,
    #[arg(long)]
    spectrum_out: PathBuf,
    #[arg(long)]
    halo_out: PathBuf,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    threshold_factor: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_CELLS)]
    min_cells: usize,
    #[command(flatten)]
    opts: CompressArgs,
}

fn parse_mode(s: &str) -> Result<BoundMode, String> {
    s.parse().map_err(|e: amrpack::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<StrategyChoice, String> {
    s.parse().map_err(|e: amrpack::Error| e.to_string())
}

fn parse_ratios(s: &str) -> Result<Ratios, String> {
    s.split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad ratio `{p}`: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Ratios)
}

impl CompressArgs {
    fn config(&self) -> Result<CompressionConfig> {
        let config = CompressionConfig {
            t1: self.t1,
            t2: self.t2,
            finest_density_fallback: self.fallback_density,
            base_bound: ErrorBound {
                mode: self.eb_mode,
                magnitude: self.eb,
            },
            level_bound_ratios: self.level_ratios.as_ref().map(|r| r.0.clone()),
            codec: self.codec.clone(),
            gsp: GspParams {
                x_layers: self.gsp_x,
                y_slices: self.gsp_y,
            },
            strategy: self.strategy,
        };
        config.validate()?;
        Ok(config)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load(path: &Path) -> Result<AmrDataset> {
    load_dataset(path).with_context(|| format!("cannot load dataset {}", path.display()))
}

fn open_archive(path: &Path) -> Result<CompressedArchive> {
    CompressedArchive::load(path).with_context(|| format!("cannot read archive {}", path.display()))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let spec = GenSpec {
        seed: a.seed,
        finest_side: a.finest_side,
        num_levels: a.levels,
        target_finest_density: a.finest_density,
        smoothness: a.smoothness,
        unit_block_size: a.unit_block,
        refinement_factor: a.refinement_factor,
        value_type: a.value_type,
        ..GenSpec::default()
    };
    let (dataset, report) = generate_dataset(&spec)?;
    save_dataset(&dataset, &a.output)?;
    let d: Vec<String> = report.densities.iter().map(|d| format!("{d:.4}")).collect();
    println!("wrote {} levels, densities {}", dataset.num_levels(), d.join(", "));
    if !report.converged {
        eprintln!("warning: finest density did not reach the target within tolerance");
    }
    Ok(())
}

fn compress(input: &Path, output: &Path, opts: &CompressArgs) -> Result<()> {
    let config = opts.config()?;
    let dataset = load(input)?;
    let (archive, stats) = compress_with_stats(&dataset, &config)?;
    archive
        .save(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    for (i, l) in stats.levels.iter().enumerate() {
        println!(
            "record {i}: {} density {:.4} bound {} metadata {} B payload {} B",
            l.tag, l.density, l.bound, l.metadata_bytes, l.payload_bytes
        );
    }
    Ok(())
}

fn decompress(input: &Path, output: &Path) -> Result<()> {
    let archive = open_archive(input)?;
    let dataset = decompress_dataset(&archive)?;
    save_dataset(&dataset, output)?;
    println!("restored {} levels", dataset.num_levels());
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let base = a.opts.config()?;
    let dataset = load(&a.input)?;
    let bounds: Vec<ErrorBound> = a
        .ebs
        .iter()
        .map(|&magnitude| ErrorBound {
            mode: base.base_bound.mode,
            magnitude,
        })
        .collect();
    let rows = sweep(&dataset, &base, &a.strategies, &bounds)?;
    let mut buf = Vec::new();
    write_rd_csv(&rows, a.deterministic, &mut buf)?;
    write_file(&a.output, &buf)?;
    println!("wrote {} rows to {}", rows.len(), a.output.display());
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let dataset = load(&a.input)?;
    let decoded = match &a.archive {
        Some(p) => decompress_dataset(&open_archive(p)?)?,
        None => run_case(&dataset, &a.opts.config()?)?.1,
    };
    let original = merge_to_uniform(&dataset)?;
    let restored = merge_to_uniform(&decoded)?;
    let p = power_spectrum(&original, a.k_max)?;
    let q = power_spectrum(&restored, a.k_max)?;
    let mut out = create(&a.spectrum_out)?;
    write_spectrum_csv(&p, &q, &mut out)?;
    out.flush()?;

    let params = HaloParams {
        threshold_factor: a.threshold_factor,
        min_cells: a.min_cells,
    };
    let h0 = halo_find(&original, params)?;
    let h1 = halo_find(&restored, params)?;
    let mut out = create(&a.halo_out)?;
    write_halo_csv(&[("original", &h0), ("decompressed", &h1)], &mut out)?;
    out.flush()?;

    println!("power spectrum max rel error (k < {}): {}", a.k_max, power_spectrum_error(&p, &q, a.k_max));
    println!("halos: {} original, {} decompressed", h0.len(), h1.len());
    match halo_compare(&h0, &h1) {
        Ok(c) => println!(
            "biggest halo: rel mass diff {}, cell count diff {}",
            c.rel_mass_diff, c.cell_count_diff
        ),
        Err(_) => println!("biggest halo: no halos to compare"),
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    if path.is_dir() || path.extension().is_some_and(|e| e == "txt") {
        let d = load(path)?;
        println!(
            "dataset: {} levels, finest side {}, unit block {}, refinement {}, {}",
            d.num_levels(),
            d.finest_side(),
            d.unit_block_size(),
            d.refinement_factor(),
            d.value_type()
        );
        for (i, l) in d.levels().iter().enumerate() {
            println!("level {i}: side {} density {:.4}", l.side(), l.density());
        }
        return Ok(());
    }
    let a = open_archive(path)?;
    let h = &a.header;
    println!(
        "archive: {} levels, finest side {}, unit block {}, refinement {}, {}, {} bytes",
        h.num_levels,
        h.finest_side,
        h.unit_block_size,
        h.refinement_factor,
        h.value_type,
        a.size_bytes()
    );
    for (k, v) in &h.config {
        println!("  {k} = {v}");
    }
    for (i, r) in a.records.iter().enumerate() {
        println!(
            "record {i}: {} bound {} metadata {} B payloads {} ({} B)",
            r.tag,
            r.bound,
            r.metadata.len(),
            r.payloads.len(),
            r.payload_bytes()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Compress { input, output, opts } => compress(input, output, opts),
        Command::Decompress { input, output } => decompress(input, output),
        Command::Bench(a) => bench(a),
        Command::Analyze(a) => analyze(a),
        Command::Inspect { path } => inspect(path),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
