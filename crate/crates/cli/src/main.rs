//! `oilu`: encode, decode and evaluate OILU markers.
//!
//! stdout carries only machine-readable output (JSON lines or CSV);
//! diagnostics go to stderr. Exit codes: 0 success, 1 usage error,
//! 2 decode or self-test failure, 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oilu_core::decoder::{decode_traced, Binarization, Trace};
use oilu_core::harness::{render_curves, run_eval, write_csv, SweepConfig};
use oilu_core::render::layout_rings;
use oilu_core::selftest::{self, Fault};
use oilu_core::vision::PolarityHint;
use oilu_core::{
    facet_values, render_marker, DecodeConfig, Error, MarkerStyle, OiluNumber, Polarity, Raster,
};

const DEFAULT_SWEEP: &str = include_str!("../configs/default_sweep.json");

const EXIT_USAGE: u8 = 1;
const EXIT_DECODE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "oilu", version, about = "OILU fiducial marker toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a marker image and a geometry sidecar; prints the facet group.
    Encode(EncodeArgs),
    /// Decode a marker image; prints one JSON line.
    Decode(DecodeArgs),
    /// Print the four facet values of a number, one per quarter turn.
    Facets { number: String },
    /// Run a robustness sweep and write CSV (and optional plots).
    Eval(EvalArgs),
    /// Run the embedded oracle suites.
    Selftest {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Codec,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    DarkOnLight,
    LightOnDark,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Polarity {
        match p {
            PolarityArg::DarkOnLight => Polarity::DarkOnLight,
            PolarityArg::LightOnDark => Polarity::LightOnDark,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityHintArg {
    Auto,
    Dark,
    Light,
}

#[derive(Args)]
struct EncodeArgs {
    number: String,
    /// Output image (.png, .pgm or .ppm). Defaults to oilu_<number>.png.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    canvas: u32,
    #[arg(long, default_value_t = 32)]
    quiet_zone: u32,
    #[arg(long, default_value_t = 12)]
    stroke: u32,
    #[arg(long, default_value_t = 48)]
    pitch: u32,
    #[arg(long, value_enum, default_value = "dark-on-light")]
    polarity: PolarityArg,
    /// Grow the canvas to fit the number, keeping the other proportions.
    #[arg(long)]
    fit: bool,
}

#[derive(Args)]
struct DecodeArgs {
    path: PathBuf,
    #[arg(long)]
    rectify: bool,
    #[arg(long, default_value_t = 512)]
    out_size: usize,
    /// Expected number of code rings.
    #[arg(long)]
    rings: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    floor_factor: f64,
    #[arg(long, value_enum, default_value = "auto")]
    polarity: PolarityHintArg,
    /// Use a local-mean threshold with this window instead of Otsu.
    #[arg(long)]
    adaptive_window: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    adaptive_offset: f64,
    /// Write intermediate stage images into this directory.
    #[arg(long)]
    debug_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Sweep configuration JSON; the bundled default is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-kind success-rate charts.
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Write zeros in the timing columns so the CSV is byte-stable.
    #[arg(long)]
    no_timing: bool,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(m: impl ToString) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: m.to_string(),
        }
    }

    fn io(m: impl ToString) -> Failure {
        Failure {
            code: EXIT_IO,
            message: m.to_string(),
        }
    }
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Io(_) | Error::Format(_) | Error::UnsupportedFormat(_) | Error::Csv(_) => {
            Failure::io(e)
        }
        other => Failure::usage(other),
    }
}

fn parse_number(s: &str) -> Result<OiluNumber, Failure> {
    OiluNumber::parse(s).map_err(Failure::usage)
}

fn cmd_encode(a: EncodeArgs) -> Result<(), Failure> {
    let n = parse_number(&a.number)?;
    let style = if a.fit {
        MarkerStyle::sized_for(n.len()).with_polarity(a.polarity.into())
    } else {
        MarkerStyle {
            canvas_px: a.canvas,
            quiet_zone_px: a.quiet_zone,
            stroke_px: a.stroke,
            pitch_px: a.pitch,
            polarity: a.polarity.into(),
        }
    };
    let geom = layout_rings(&n, &style).map_err(Failure::usage)?;
    let img = render_marker(&n, &style).map_err(Failure::usage)?;
    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("oilu_{n}.png")));
    img.save(&out).map_err(classify)?;
    let sidecar = out.with_extension("geometry.json");
    let geom_json = serde_json::to_string_pretty(&geom).expect("geometry serializes");
    std::fs::write(&sidecar, geom_json).map_err(Failure::io)?;
    let record = serde_json::json!({
        "value": n.to_string(),
        "facets": facet_values(&n),
        "image": out.display().to_string(),
        "geometry": sidecar.display().to_string(),
    });
    println!("{record}");
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<(), Failure> {
    let cfg = DecodeConfig {
        rectify: a.rectify,
        out_size: a.out_size,
        ring_count_hint: a.rings,
        beta: a.beta,
        floor_factor: a.floor_factor,
        binarization: match a.adaptive_window {
            Some(window) => Binarization::AdaptiveMean {
                window,
                offset: a.adaptive_offset,
            },
            None => Binarization::Otsu,
        },
        polarity: match a.polarity {
            PolarityHintArg::Auto => PolarityHint::Auto,
            PolarityHintArg::Dark => PolarityHint::DarkStrokes,
            PolarityHintArg::Light => PolarityHint::LightStrokes,
        },
        ..DecodeConfig::default()
    };
    cfg.validate().map_err(Failure::usage)?;
    let img = Raster::load(&a.path).map_err(Failure::io)?;
    let mut trace = Trace::default();
    let result = decode_traced(&img, &cfg, &mut trace);
    if let Some(dir) = &a.debug_dir {
        trace.write_to_dir(dir).map_err(classify)?;
    }
    match result {
        Ok(r) => {
            println!("{}", r.to_json());
            Ok(())
        }
        Err(f) => {
            println!("{}", f.to_json());
            Err(Failure {
                code: EXIT_DECODE,
                message: f.to_string(),
            })
        }
    }
}

fn cmd_facets(number: &str) -> Result<(), Failure> {
    let n = parse_number(number)?;
    let mut out = std::io::stdout().lock();
    for v in facet_values(&n).values {
        writeln!(out, "{v}").map_err(Failure::io)?;
    }
    Ok(())
}

fn load_sweep(path: Option<&Path>) -> Result<SweepConfig, Failure> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?
        }
        None => DEFAULT_SWEEP.to_string(),
    };
    SweepConfig::from_json(&text).map_err(Failure::usage)
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let mut cfg = load_sweep(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    cfg.validate().map_err(Failure::usage)?;
    let records = run_eval(&cfg).map_err(classify)?;
    match &a.out {
        Some(p) => {
            let f = std::fs::File::create(p)
                .map_err(|e| Failure::io(format!("{}: {e}", p.display())))?;
            write_csv(&records, f, !a.no_timing).map_err(classify)?;
        }
        None => write_csv(&records, std::io::stdout().lock(), !a.no_timing).map_err(classify)?,
    }
    if let Some(dir) = &a.plots {
        render_curves(&records, dir).map_err(classify)?;
    }
    eprintln!(
        "{:<9} {:>7} {:>9} {:>9} {:>9}",
        "kind", "level", "success", "mean_ms", "p95_ms"
    );
    for r in &records {
        eprintln!(
            "{:<9} {:>7} {:>8.1}% {:>9.2} {:>9.2}",
            r.kind.name(),
            r.level,
            100.0 * r.success_rate,
            r.mean_ms,
            r.p95_ms
        );
    }
    Ok(())
}

fn cmd_selftest(fault: Option<FaultArg>) -> Result<(), Failure> {
    let reports = selftest::run(fault.map(|FaultArg::Codec| Fault::Codec));
    let mut failed = Vec::new();
    for r in &reports {
        println!("{}", serde_json::to_string(r).expect("report serializes"));
        eprintln!(
            "{} {:<10} {:>9.2} ms  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.suite,
            r.ms,
            r.detail
        );
        if !r.passed {
            failed.push(r.suite);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_DECODE,
            message: format!("failed suites: {}", failed.join(", ")),
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Facets { number } => cmd_facets(&number),
        Command::Eval(a) => cmd_eval(a),
        Command::Selftest { inject_fault } => cmd_selftest(inject_fault),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("oilu: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
