use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emocorpus::labeler::LabelingPolicy;
use emocorpus_cli::{commands, CliResult, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "emocorpus", version, about = "Weakly supervised emotion corpus builder")]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, expand and curate the lexicon; print its content hash.
    LexiconBuild,
    /// Label a raw post stream.
    Label,
    /// Build the dataset bundle with gold split and masked variants.
    Build,
    /// Train and evaluate one masking variant.
    TrainEval {
        /// Mask fraction of the variant to train (0 = NoMask).
        #[arg(long, default_value_t = 0.0)]
        variant: f64,
    },
    /// Train and evaluate every masking variant and compare them.
    Ablate,
    /// Per-category counts of a labeled corpus.
    Stats {
        /// Labeled JSON-lines file (defaults to the configured labeled corpus).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PolicyArg {
    Union,
    CollectionTerm,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    conjugations: Option<PathBuf>,
    #[arg(long, global = true)]
    additions: Option<PathBuf>,
    #[arg(long, global = true)]
    removals: Option<PathBuf>,
    /// Raw JSON-lines post stream.
    #[arg(long, global = true)]
    stream: Option<PathBuf>,
    #[arg(long, global = true)]
    labeled: Option<PathBuf>,
    #[arg(long, global = true)]
    bundle: Option<PathBuf>,
    /// Gold annotations, JSON-lines `{id, labels}`.
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    policy: Option<PolicyArg>,
    /// Negation window in tokens.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Comma-separated mask fractions, e.g. `0,0.3,1`.
    #[arg(long, global = true, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    #[arg(long, global = true)]
    gold_size: Option<usize>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    keep_urls: bool,
    #[arg(long, global = true)]
    keep_mentions: bool,
}

fn resolve_config(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_toml_file(p)?,
        None => PipelineConfig::default(),
    };
    let o = &cli.overrides;
    macro_rules! set_path {
        ($($field:ident <- $arg:ident),*) => {
            $(if let Some(v) = &o.$arg { cfg.$field = Some(v.clone()); })*
        };
    }
    set_path!(
        schema <- schema,
        lexicon <- lexicon,
        conjugations <- conjugations,
        curation_additions <- additions,
        curation_removals <- removals,
        raw_stream <- stream,
        labeled <- labeled,
        bundle <- bundle,
        gold_annotations <- annotations
    );
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(p) = o.policy {
        cfg.policy = match p {
            PolicyArg::Union => LabelingPolicy::Union,
            PolicyArg::CollectionTerm => LabelingPolicy::CollectionTerm,
        };
    }
    if let Some(w) = o.window {
        cfg.negation_window = w;
    }
    if let Some(f) = &o.fractions {
        cfg.mask_fractions = f.clone();
    }
    if let Some(g) = o.gold_size {
        cfg.gold_size = g;
    }
    if let Some(t) = o.threshold {
        cfg.threshold = t;
    }
    if let Some(e) = o.epochs {
        cfg.train.epochs = e;
    }
    if let Some(lr) = o.lr {
        cfg.train.learning_rate = lr;
    }
    if let Some(b) = o.batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(d) = o.dim {
        cfg.train.dim = d;
    }
    if o.keep_urls {
        cfg.remove_urls = false;
    }
    if o.keep_mentions {
        cfg.remove_mentions = false;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = resolve_config(&cli)?;
    match &cli.command {
        Command::LexiconBuild => {
            let s = commands::cmd_lexicon_build(&cfg)?;
            for w in &s.warnings {
                log::warn!("{w}");
            }
            println!("{}\t{} items", s.lexicon_hash, s.items);
        }
        Command::Label => {
            let s = commands::cmd_label(&cfg)?;
            print!("{}", s.stats.to_tsv());
            if s.malformed > 0 {
                log::warn!("{} malformed records skipped", s.malformed);
            }
        }
        Command::Build => {
            let s = commands::cmd_build(&cfg)?;
            println!(
                "bundle {}: train {}, gold {}, duplicates removed {}",
                s.bundle_dir.display(),
                s.train,
                s.gold,
                s.duplicates_removed
            );
            for v in &s.variants {
                println!("{}\t{} masked", v.variant, v.masked);
            }
            if !s.missing_annotations.is_empty() {
                log::warn!("{} gold examples lack annotations", s.missing_annotations.len());
            }
        }
        Command::TrainEval { variant } => {
            let r = commands::cmd_train_eval(&cfg, *variant)?;
            print!("{}", r.to_tsv());
        }
        Command::Ablate => {
            let r = commands::cmd_ablate(&cfg)?;
            print!("{}", r.to_table());
        }
        Command::Stats { input } => {
            let s = commands::cmd_stats(&cfg, input.as_deref())?;
            print!("{}", s.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
