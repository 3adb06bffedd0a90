use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use nssfr::config::{AnalyzeConfig, ConfigFile, OrientationSelection};
use nssfr::error::{Error, Result};
use nssfr::ingest::decode_frame;
use nssfr::mask::{rasterize, RegionMask, ValidityMap};
use nssfr::radial::RadialSegmentation;
use nssfr::report::{svg, write_reports};
use nssfr::synth::{render_job, save_png16, GroundTruth, SynthJob};

#[derive(Parser)]
#[command(name = "nssfr", version, about = "Camera sharpness from slanted edges in natural scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure a directory of frames and write tables and figures.
    Analyze(AnalyzeArgs),
    /// Render synthetic edge frames with known MTF.
    Synth(SynthArgs),
    /// Show how a mask segments a frame.
    MaskCheck(MaskCheckArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory holding the frames (searched recursively).
    #[arg(long)]
    input: Option<PathBuf>,
    /// File pattern matched against paths relative to the input directory.
    #[arg(long)]
    glob: Option<String>,
    /// Only use the first N frames in sorted order.
    #[arg(long)]
    limit: Option<usize>,
    /// Region mask (JSON polygons).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Noise bound on the flat sides of an edge, as a fraction of full scale.
    #[arg(long)]
    st: Option<f64>,
    /// Edge spread width in pixels.
    #[arg(long)]
    esfw: Option<usize>,
    /// Accepted edge contrast range as `min,max`.
    #[arg(long)]
    contrast: Option<String>,
    #[arg(long)]
    angle_exclusion: Option<f64>,
    /// Polynomial order of the edge fit (1, 3 or 5).
    #[arg(long)]
    edge_fit_order: Option<usize>,
    /// horizontal, vertical or both.
    #[arg(long)]
    orientation: Option<String>,
    #[arg(long)]
    overshoot_limit: Option<f64>,
    #[arg(long)]
    noise_min_limit: Option<f64>,
    #[arg(long)]
    segments: Option<usize>,
    /// Cumulative outer radii as fractions of r_e, e.g. `0.3,0.7,1`.
    #[arg(long, value_delimiter = ',')]
    segment_ratios: Option<Vec<f64>>,
    /// Exclusion margin around masked pixels (default 2 * esfw).
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// JSON file with defaults for any of these options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MaskCheckArgs {
    #[arg(long)]
    mask: PathBuf,
    /// Frame to draw under the mask; its size is used for rasterization.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Write the figure here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = nssfr::radial::DEFAULT_SEGMENTS)]
    segments: usize,
    #[arg(long, value_delimiter = ',')]
    segment_ratios: Option<Vec<f64>>,
}

fn parse_contrast(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("contrast must be `min,max` (got `{s}`)"));
    if parts.len() != 2 {
        return Err(bad());
    }
    Ok((parts[0].parse().map_err(|_| bad())?, parts[1].parse().map_err(|_| bad())?))
}

fn build_config(a: AnalyzeArgs) -> Result<AnalyzeConfig> {
    let mut cfg = AnalyzeConfig::default();
    if let Some(path) = &a.config {
        cfg.apply_file(&ConfigFile::load(path)?);
    }
    if let Some(v) = a.input {
        cfg.input = v;
    }
    if let Some(v) = a.glob {
        cfg.glob = v;
    }
    if a.limit.is_some() {
        cfg.limit = a.limit;
    }
    if a.mask.is_some() {
        cfg.mask = a.mask;
    }
    if let Some(v) = a.st {
        cfg.params.st = v;
    }
    if let Some(v) = a.esfw {
        cfg.params.esfw = v;
    }
    if let Some(s) = a.contrast {
        (cfg.params.contrast_min, cfg.params.contrast_max) = parse_contrast(&s)?;
    }
    if let Some(v) = a.angle_exclusion {
        cfg.params.angle_exclusion_deg = v;
    }
    if let Some(v) = a.edge_fit_order {
        cfg.params.edge_fit_order = v;
    }
    if let Some(s) = a.orientation {
        cfg.orientation = s.parse::<OrientationSelection>()?;
    }
    if let Some(v) = a.overshoot_limit {
        cfg.thresholds.overshoot_limit = v;
    }
    if let Some(v) = a.noise_min_limit {
        cfg.thresholds.noise_min_limit = v;
    }
    if let Some(v) = a.segments {
        cfg.segments = v;
        cfg.segment_ratios = None;
    }
    if a.segment_ratios.is_some() {
        cfg.segment_ratios = a.segment_ratios;
    }
    if a.margin.is_some() {
        cfg.margin = a.margin;
    }
    if let Some(v) = a.threads {
        cfg.threads = v;
    }
    if let Some(v) = a.out {
        cfg.out = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let cfg = build_config(a)?;
    let analysis = nssfr::analyze(&cfg)?;
    let files = write_reports(&analysis, &cfg.out)?;
    info!("wrote {} and {}", files.measurements.display(), files.summary.display());
    for s in analysis.selected_stats() {
        let m = s.mean_mtf50.map_or("-".to_string(), |m| format!("{m:.4}"));
        println!(
            "{:<8} {:<10} valid {:>5}  invalid {:>5}  mean MTF50 {m}",
            analysis.geometry.segmentation.segment_name(s.segment_index),
            s.orientation,
            s.count_valid,
            s.count_invalid
        );
    }
    if analysis.measurements.is_empty() {
        eprintln!("warning: no slanted-edge candidates found");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_synth(a: SynthArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.spec).map_err(|e| Error::Config(format!("{}: {e}", a.spec.display())))?;
    let job: SynthJob = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", a.spec.display())))?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Config(format!("{}: {e}", a.out.display())))?;
    let mut truth = Vec::new();
    for (k, (frame, edges)) in render_job(&job)?.into_iter().enumerate() {
        let file = format!("frame_{k:04}.png");
        save_png16(&frame, &a.out.join(&file))?;
        truth.push(GroundTruth { file, edges });
    }
    let path = a.out.join("ground_truth.json");
    std::fs::write(&path, serde_json::to_string_pretty(&truth)? + "\n")
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    println!("wrote {} frames to {}", truth.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_mask_check(a: MaskCheckArgs) -> Result<ExitCode> {
    let mask = RegionMask::load(&a.mask)?;
    let frame = a.image.as_deref().map(|p: &Path| decode_frame(p, p.display().to_string())).transpose()?;
    let (w, h) = match &frame {
        Some(f) => (f.width(), f.height()),
        None => (mask.reference_size.0 as usize, mask.reference_size.1 as usize),
    };
    let vmap: ValidityMap = rasterize(&mask, w, h)?;
    let seg = RadialSegmentation::build(&vmap, Some(&mask), a.segments, a.segment_ratios.as_deref())?;
    println!("size {w}x{h}");
    println!("valid fraction {:.4}", vmap.valid_fraction());
    println!("center {:.3},{:.3}", seg.center.0, seg.center.1);
    println!("r_e {:.3}", seg.r_e);
    let b: Vec<String> = seg.boundaries.iter().map(|r| format!("{r:.3}")).collect();
    println!("boundaries {}", b.join(","));
    if let Some(out) = &a.out {
        let figure = svg::mask_check_figure(frame.as_ref(), w, h, Some(&mask), &seg);
        std::fs::write(out, figure).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Synth(a) => run_synth(a),
        Command::MaskCheck(a) => run_mask_check(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
