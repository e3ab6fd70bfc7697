use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use textanchor::pipeline::{
    align_stage, load_transcripts, locate_stage, map_recordings, run_pipeline, segment_stage,
    BookIndex,
};
use textanchor::suffix_array::SuffixAlgorithm;
use textanchor::PipelineConfig;

#[derive(Parser, Debug)]
#[command(
    name = "textanchor",
    version,
    about = "Locate, align and segment transcripts against book text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run locate, align and segment and write cuts as JSON lines.
    Pipeline {
        #[command(flatten)]
        io: StageIo,
        /// Optional JSONL sidecar of {"id", "speaker"} records.
        #[arg(long)]
        speakers: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print the anchor chain and located region of every recording.
    Locate {
        #[command(flatten)]
        io: StageIo,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print the alignment of every recording as an op string.
    Align {
        #[command(flatten)]
        io: StageIo,
        /// Align against the whole located region without anchor blocks.
        #[arg(long)]
        no_anchors: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print boundary and segment candidates with their scores.
    Segment {
        #[command(flatten)]
        io: StageIo,
        #[command(flatten)]
        tuning: Tuning,
    },
}

#[derive(Args, Debug)]
struct StageIo {
    /// UTF-8 book text.
    #[arg(long)]
    book: PathBuf,
    /// Transcript JSONL, one recording per line.
    #[arg(long)]
    transcripts: PathBuf,
    /// Output JSONL; stage commands default to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Algorithm {
    Dc3,
    PrefixDoubling,
}

/// Overrides for values in the config file.
#[derive(Args, Debug, Default)]
struct Tuning {
    /// TOML config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bytes of preceding text stored in each cut's pre_texts.
    #[arg(long)]
    context_bytes: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Close matches taken on each side of every query position.
    #[arg(long)]
    close_matches: Option<usize>,
    /// Look up close matches for every n-th query symbol only.
    #[arg(long)]
    query_stride: Option<usize>,
    #[arg(long, value_enum)]
    suffix_algorithm: Option<Algorithm>,
    /// Minimum query distance between anchors used by the aligner.
    #[arg(long)]
    anchor_spacing: Option<usize>,
    /// Symbols added around each alignment block.
    #[arg(long)]
    block_slack: Option<usize>,
    /// Symbols added on each side of the located region.
    #[arg(long)]
    region_margin: Option<usize>,
    /// Minimum fraction of the query covered by the chain.
    #[arg(long)]
    min_chain_coverage: Option<f64>,
    /// Diagonal drift allowed between neighbouring chain pairs.
    #[arg(long)]
    chain_tolerance: Option<usize>,
    /// Alignment ops counted on each side of a boundary.
    #[arg(long)]
    error_window: Option<usize>,
    /// Weight of the silence score.
    #[arg(long)]
    w_sil: Option<f64>,
    /// Weight of the match count in segment scores.
    #[arg(long)]
    w_match: Option<f64>,
    /// Weight of alignment errors.
    #[arg(long)]
    w_err: Option<f64>,
    /// Allowed overlap as a fraction of the shorter segment.
    #[arg(long)]
    overlap_fraction: Option<f64>,
    /// Symbols beyond the aligned span where boundaries are still accepted.
    #[arg(long)]
    edge_reach: Option<usize>,
    /// Also split at inter-word silences of at least this many seconds.
    #[arg(long)]
    silence_split: Option<f64>,
}

impl Tuning {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(context_bytes => context_bytes);
        set!(jobs => jobs);
        set!(close_matches => close_matches_per_side);
        set!(query_stride => query_stride);
        set!(anchor_spacing => anchor_spacing);
        set!(block_slack => block_slack);
        set!(min_chain_coverage => min_chain_coverage);
        set!(chain_tolerance => chain_diagonal_tolerance);
        set!(error_window => segmenter.error_window);
        set!(w_sil => segmenter.w_sil);
        set!(w_match => segmenter.w_match);
        set!(w_err => segmenter.w_err);
        set!(overlap_fraction => segmenter.overlap_fraction);
        set!(edge_reach => segmenter.edge_reach);
        if let Some(m) = self.region_margin {
            cfg.region_margin = Some(m);
        }
        if let Some(t) = self.silence_split {
            cfg.segmenter.silence_split = Some(t);
        }
        if let Some(a) = self.suffix_algorithm {
            cfg.suffix_algorithm = match a {
                Algorithm::Dc3 => SuffixAlgorithm::Dc3,
                Algorithm::PrefixDoubling => SuffixAlgorithm::PrefixDoubling,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Runs one stage over every recording and writes one JSON line each.
/// Recordings the stage cannot handle are logged and skipped.
fn run_stage<R, F>(io: &StageIo, cfg: &PipelineConfig, stage: F) -> Result<usize>
where
    R: serde::Serialize + Send,
    F: Fn(&BookIndex, &textanchor::TimedTranscript) -> textanchor::Result<R> + Sync + Send,
{
    let book = BookIndex::load(&io.book)?;
    let transcripts = load_transcripts(&io.transcripts)?;
    let results = map_recordings(&transcripts, cfg.jobs, |t| {
        Ok(stage(&book, t).map_err(|e| {
            warn!("{}: {e}", t.recording_id);
        }))
    })?;
    let mut out = open_out(&io.out)?;
    let mut written = 0;
    for record in results.into_iter().flatten() {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
        written += 1;
    }
    out.flush()?;
    Ok(written)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Pipeline {
            io,
            speakers,
            tuning,
        } => {
            let cfg = tuning.resolve()?;
            let out = io.out.context("pipeline needs --out")?;
            let summary = run_pipeline(&io.book, &io.transcripts, &out, speakers.as_deref(), &cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(summary.succeeded())
        }
        Command::Locate { io, tuning } => {
            let cfg = tuning.resolve()?;
            Ok(run_stage(&io, &cfg, |b, t| locate_stage(b, t, &cfg))? > 0)
        }
        Command::Align {
            io,
            no_anchors,
            tuning,
        } => {
            let cfg = tuning.resolve()?;
            Ok(run_stage(&io, &cfg, |b, t| align_stage(b, t, &cfg, !no_anchors))? > 0)
        }
        Command::Segment { io, tuning } => {
            let cfg = tuning.resolve()?;
            Ok(run_stage(&io, &cfg, |b, t| segment_stage(b, t, &cfg))? > 0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
