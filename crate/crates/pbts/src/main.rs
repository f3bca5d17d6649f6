use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbts::harness::{self, Mode, PbtsTracker};
use pbts::{export, load_sequence, synth, Error, Settings};

#[derive(Parser)]
#[command(name = "track", about = "Part-based colour-patch tracker", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence and write per-frame results and summaries.
    Run {
        /// Frame directory or manifest file.
        #[arg(long)]
        seq: PathBuf,
        /// Ground-truth file; defaults to groundtruth.txt next to the frames.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// key = value config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "supervised")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Also write frames with the boxes drawn on.
        #[arg(long)]
        annotate: bool,
        /// Comma-separated ablation switches to turn on.
        #[arg(long, value_delimiter = ',')]
        ablate: Vec<String>,
        /// Dump the first frame's object mask and superpixel labels.
        #[arg(long)]
        dump_placement: bool,
    },
    /// Render a synthetic sequence from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute summary and curves from a results directory.
    Eval {
        #[arg(long)]
        results: PathBuf,
    },
}

#[allow(clippy::too_many_arguments)]
fn run(
    seq: &Path,
    gt: Option<&Path>,
    config: Option<&Path>,
    seed: u64,
    mode: Mode,
    out: &Path,
    annotate: bool,
    ablate: &[String],
    dump_placement: bool,
) -> pbts::Result<()> {
    let mut settings = match config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    for name in ablate.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        settings
            .tracker
            .ablation
            .enable(name)
            .map_err(|_| Error::Invalid(format!("unknown ablation switch `{name}`")))?;
    }
    let seq = load_sequence(seq, gt)?;
    let mut tracker = PbtsTracker::new(settings.tracker, seed);
    let result = harness::run(&seq, &mut tracker, mode, settings.reinit_skip)?;

    export::write_run(out, &result)?;
    if annotate {
        export::write_annotated(&out.join("annotated"), &seq, &result)?;
    }
    if dump_placement {
        if let Some(diag) = &tracker.first_init {
            export::write_placement(&out.join("placement"), diag)?;
        }
    }
    print_summary(&result.summary());
    Ok(())
}

fn print_summary(s: &harness::Summary) {
    println!(
        "{}: AO {:.4}  failures {}  AUC {:.4}  precision@20 {:.4}{}",
        s.sequence,
        s.ao,
        s.failures,
        s.auc,
        s.precision_20,
        s.fps.map(|f| format!("  {f:.1} fps")).unwrap_or_default()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            seq,
            gt,
            config,
            seed,
            mode,
            out,
            annotate,
            ablate,
            dump_placement,
        } => run(
            seq,
            gt.as_deref(),
            config.as_deref(),
            *seed,
            *mode,
            out,
            *annotate,
            ablate,
            *dump_placement,
        ),
        Command::Synth { spec, out } => synth::read_spec(spec).and_then(|s| {
            let seq = s.materialise(out)?;
            println!("{}: {} frames in {}", seq.name, seq.len(), out.display());
            Ok(())
        }),
        Command::Eval { results } => export::reevaluate(results).map(|s| print_summary(&s)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
