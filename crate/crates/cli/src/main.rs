mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use phc_core::complex::FiltrationKind;
use phc_core::dataset::{
    self, BenchMode, DatasetIndex, ExportConfig, ExportMode, DEFAULT_RATIOS, DEFAULT_TARGET_PER_CLASS,
};
use phc_core::imgprep::load_gray;
use phc_core::persistence::PersistenceDiagram;
use phc_core::phc::{self, prepare_image};
use phc_core::synthetic::{synthetic_slide, SlideParams};

use config::{echo, PipelineArgs};

#[derive(Debug, Parser)]
#[command(name = "phc", version, about = "Persistent homology convolutions of slide images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute PHC tensors, global persistence images or preprocessed images
    /// for a dataset and write them with a manifest.
    Generate {
        /// Class-subfoldered image directory, or an index JSON file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// local, global or image.
        #[arg(long)]
        mode: Option<ExportMode>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Time persistence per image for every filtration in local and global mode.
    Bench {
        /// Dataset directory or index JSON; synthetic slides are used when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sample: usize,
        #[arg(long, value_delimiter = ',')]
        filtrations: Option<Vec<FiltrationKind>>,
        #[arg(long, value_delimiter = ',', value_enum)]
        modes: Option<Vec<ModeArg>>,
        /// Also write the report as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Print intermediates for one image as CSV.
    Inspect {
        image: PathBuf,
        #[arg(long, value_enum)]
        dump: Dump,
        /// Treat the whole image as a single window.
        #[arg(long)]
        global: bool,
        /// Origin of the window whose complex is dumped, as ROW,COL.
        #[arg(long, value_delimiter = ',')]
        origin: Option<Vec<usize>>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Index a class-subfoldered image directory.
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Subsample or augment every class to a common size.
    Balance {
        index: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TARGET_PER_CLASS)]
        target: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign stratified train/val/test splits.
    Split {
        index: PathBuf,
        /// TRAIN,VAL,TEST fractions summing to 1.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dump {
    Complex,
    Diagram,
    Grid,
}

fn load_index(input: &Path) -> Result<DatasetIndex> {
    if input.is_dir() {
        Ok(dataset::ingest(input)?)
    } else {
        DatasetIndex::load(input).with_context(|| format!("reading index {}", input.display()))
    }
}

fn generate(input: &Path, out: &Path, cfg: &ExportConfig) -> Result<ExitCode> {
    let mut index = load_index(input)?;
    if index.entries.iter().all(|e| e.split.is_none()) {
        index = dataset::split(&index, DEFAULT_RATIOS, cfg.seed)?;
    }
    let report = dataset::export(&index, cfg, out)?;
    println!(
        "wrote {} arrays to {} ({} unchanged, {} failed)",
        report.manifest.entries.len(),
        out.display(),
        report.reused,
        report.failures.len()
    );
    for failure in &report.failures {
        eprintln!("failed: {}: {}", failure.source.display(), failure.message);
    }
    Ok(if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_bench(
    input: Option<&Path>,
    sample: usize,
    filtrations: &[FiltrationKind],
    modes: &[BenchMode],
    cfg: &ExportConfig,
) -> Result<dataset::BenchReport> {
    let pool = phc::WorkerPool::new(cfg.workers)?;
    pool.install(|| match input {
        Some(path) => {
            let index = load_index(path)?;
            Ok(dataset::bench(&index, sample, cfg.seed, &cfg.phc, filtrations, modes)?)
        }
        None => {
            let images: Vec<_> = (0..sample as u64)
                .map(|k| synthetic_slide(SlideParams::default(), cfg.seed.wrapping_add(k)))
                .collect();
            Ok(dataset::bench_images(&images, &cfg.phc, filtrations, modes)?)
        }
    })
}

fn inspect(image: &Path, dump: Dump, global: bool, origin: Option<&[usize]>, cfg: &ExportConfig) -> Result<()> {
    let img = prepare_image(&load_gray(image)?, &cfg.phc)?;
    let mut out = BufWriter::new(io::stdout().lock());
    match dump {
        Dump::Complex => {
            let origin = match (global, origin) {
                (true, _) => None,
                (false, Some(&[row, col])) => Some((row, col)),
                (false, Some(_)) => bail!("--origin takes ROW,COL"),
                (false, None) => Some((0, 0)),
            };
            phc::region_complex(&img, &cfg.phc, origin)?.write_csv(&mut out)?;
        }
        Dump::Diagram => {
            PersistenceDiagram::write_csv_header(&mut out)?;
            if global {
                phc::global_diagram(&img, &cfg.phc)?.write_csv_rows(&mut out)?;
            } else {
                for d in phc::window_diagrams(&img, &cfg.phc)? {
                    d.write_csv_rows(&mut out)?;
                }
            }
        }
        Dump::Grid => {
            writeln!(out, "window_row,window_col,persistence_bin,birth_bin,value")?;
            let slices: Vec<((usize, usize), Vec<f32>)> = if global {
                vec![((0, 0), phc::global_ph(&img, &cfg.phc)?.to_f32())]
            } else {
                let t = phc::phc_stack(&img, &cfg.phc)?;
                (0..t.shape()[0])
                    .map(|k| (t.window_index()[k], t.slice(k).to_vec()))
                    .collect()
            };
            let n = cfg.phc.resolution;
            for ((wr, wc), values) in slices {
                for (i, v) in values.iter().enumerate() {
                    writeln!(out, "{wr},{wc},{},{},{v}", i / n, i % n)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate {
            input,
            out,
            mode,
            pipeline,
        } => {
            let cfg = pipeline.resolve(mode)?;
            echo(&cfg)?;
            generate(&input, &out, &cfg)
        }
        Command::Bench {
            input,
            sample,
            filtrations,
            modes,
            csv,
            pipeline,
        } => {
            let cfg = pipeline.resolve(None)?;
            echo(&cfg)?;
            let filtrations = filtrations.unwrap_or_else(|| FiltrationKind::ALL.to_vec());
            let modes: Vec<BenchMode> = modes
                .unwrap_or_else(|| vec![ModeArg::Local, ModeArg::Global])
                .into_iter()
                .map(|m| match m {
                    ModeArg::Local => BenchMode::Local,
                    ModeArg::Global => BenchMode::Global,
                })
                .collect();
            let report = run_bench(input.as_deref(), sample, &filtrations, &modes, &cfg)?;
            print!("{}", report.to_table());
            if let Some(path) = csv {
                fs::write(&path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect {
            image,
            dump,
            global,
            origin,
            pipeline,
        } => {
            let cfg = pipeline.resolve(None)?;
            echo(&cfg)?;
            inspect(&image, dump, global, origin.as_deref(), &cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest { dir, out } => {
            eprintln!("# ingest dir = {}", dir.display());
            let index = dataset::ingest(&dir)?;
            report_counts(&index);
            index.save(&out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Balance {
            index,
            target,
            seed,
            out,
        } => {
            eprintln!("# balance target = {target}, seed = {seed}");
            let balanced = dataset::balance(&DatasetIndex::load(&index)?, target, seed)?;
            report_counts(&balanced);
            balanced.save(&out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Split {
            index,
            ratios,
            seed,
            out,
        } => {
            let ratios = match ratios.as_deref() {
                Some(&[a, b, c]) => (a, b, c),
                Some(_) => bail!("--ratios takes three values"),
                None => DEFAULT_RATIOS,
            };
            eprintln!("# split ratios = {ratios:?}, seed = {seed}");
            let split = dataset::split(&DatasetIndex::load(&index)?, ratios, seed)?;
            for (s, count) in split.split_counts() {
                println!("{}: {count}", s.name());
            }
            split.save(&out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn report_counts(index: &DatasetIndex) {
    for (class, count) in index.class_counts() {
        println!("{class}: {count}");
    }
    println!("total: {}", index.len());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
