use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stylebench::dataset::load_pgn_dir;
use stylebench::harness::artifacts::{Layout, Manifest};
use stylebench::harness::report::{accuracy_csv, accuracy_json, emit_report};
use stylebench::harness::{self, ExperimentConfig, ExperimentResults, PolicyArtifacts, StyleSpace};
use stylebench::mcts::{run_search, select_most_visited, PolicyEvaluator};
use stylebench::policy::TrainReport;
use stylebench::style::AeTrainReport;
use stylebench::synthetic::{corpus_to_pgn, generate_corpus, ScriptedPolicy};
use stylebench::Error;
use stylebench_chess::{BoardState, PositionHistory};

#[derive(Parser)]
#[command(name = "stylebench", version, about = "Player-style modeling and evaluation on chess games")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; missing keys take their defaults.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Config override `key.path=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Players to evaluate (comma separated); overrides `players`.
    #[arg(long, value_delimiter = ',', global = true)]
    players: Option<Vec<String>>,
    /// Directory of .pgn files; overrides `data_dir`.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Alignment moves per test position; overrides `metric.samples`.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write self-play games of the scripted players to `<data>/synthetic.pgn`.
    Synth,
    /// Parse PGNs and write per-player train/test dataset caches.
    Ingest,
    /// Train the shared backbone and generic embedding on pooled train pairs.
    Pretrain,
    /// Fit one embedding per player with the backbone frozen.
    Finetune,
    /// Search one position and print root visit counts.
    Search {
        #[arg(long)]
        fen: String,
        /// Player embedding to use; the generic embedding when omitted.
        #[arg(long)]
        player: Option<String>,
    },
    /// Train the transition autoencoder on pooled transitions.
    TrainAe,
    /// Fit the 2D projector on pooled latents.
    FitProjector,
    /// Move-accuracy table for every player and variant.
    EvalAccuracy,
    /// Train-vs-test divergence matrix and heatmaps.
    JsdMatrix,
    /// Alignment table plus accuracy and divergence on one common grid.
    Align,
    /// Run every stage from the PGN directory and write all reports.
    Report,
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for o in &c.overrides {
        cfg.set(o)?;
    }
    if let Some(p) = &c.players {
        cfg.players = p.clone();
    }
    if let Some(d) = &c.data {
        cfg.data_dir = d.clone();
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(k) = c.samples {
        cfg.metric.samples = k;
    }
    Ok(cfg.resolved())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingArtifact(_) => 3,
        Error::Config(_) | Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

fn open_manifest(layout: &Layout, cfg: &ExperimentConfig) -> Manifest {
    let mut m = Manifest::new(cfg);
    if let Ok(text) = std::fs::read_to_string(layout.manifest_path()) {
        if let Ok(old) = serde_json::from_str::<Manifest>(&text) {
            m.timings = old.timings;
        }
    }
    m
}

fn style_space(layout: &Layout) -> Result<StyleSpace, Error> {
    Ok(StyleSpace {
        ae: layout.load_autoencoder()?,
        ae_report: AeTrainReport::default(),
        projector: layout.load_projector()?,
    })
}

fn policy_artifacts(layout: &Layout, cfg: &ExperimentConfig) -> Result<PolicyArtifacts, Error> {
    Ok(PolicyArtifacts {
        model: layout.load_policy()?,
        pretrain_report: TrainReport::default(),
        embeddings: layout.load_embeddings(&cfg.players)?,
        finetune_reports: Vec::new(),
    })
}

fn write_reports(layout: &Layout, results: &ExperimentResults) -> Result<(), Error> {
    for p in emit_report(results, &layout.reports_dir())? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.common)?;
    let threads = harness::init_thread_pool()?;
    log::info!("using {threads} worker threads");
    let layout = Layout::new(&cfg.output_dir);
    let mut manifest = open_manifest(&layout, &cfg);
    let needs_players = !matches!(cli.command, Command::Synth | Command::Search { .. });
    if needs_players {
        cfg.validate()?;
    }

    match cli.command {
        Command::Synth => {
            let games = generate_corpus(&ScriptedPolicy::STYLES, &cfg.synthetic);
            let path = cfg.data_dir.join("synthetic.pgn");
            std::fs::create_dir_all(&cfg.data_dir)
                .map_err(|e| Error::io(format!("creating {}", cfg.data_dir.display()), e))?;
            std::fs::write(&path, corpus_to_pgn(&games))
                .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
            println!("wrote {} games to {}", games.len(), path.display());
            return Ok(());
        }
        Command::Ingest => {
            let datasets = manifest.time("ingest", || {
                if !cfg.data_dir.is_dir() {
                    return Err(Error::MissingArtifact(cfg.data_dir.clone()));
                }
                let corpus = load_pgn_dir(&cfg.data_dir)?;
                harness::build_datasets(&cfg, &corpus)
            })?;
            layout.save_datasets(&datasets)?;
            for d in &datasets {
                println!(
                    "{}: {} train pairs ({} games), {} test pairs ({} games)",
                    d.player,
                    d.train.len(),
                    d.train_games,
                    d.test.len(),
                    d.test_games
                );
            }
        }
        Command::Pretrain => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let (model, report) = manifest.time("pretrain", || harness::pretrain_pooled(&cfg, &datasets))?;
            layout.save_policy(&model)?;
            println!("pretrain losses per epoch: {:?}", report.epoch_total());
            println!("backbone checksum {}", model.frozen_checksum());
        }
        Command::Finetune => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let model = layout.load_policy()?;
            let before = model.frozen_checksum();
            let tuned = manifest.time("finetune", || harness::finetune_all(&cfg, &model, &datasets))?;
            debug_assert_eq!(before, model.frozen_checksum());
            let embeddings: Vec<_> = tuned.iter().map(|(e, _)| e.clone()).collect();
            layout.save_embeddings(&embeddings)?;
            for (e, r) in &tuned {
                println!("{}: cross-entropy per epoch {:?}", e.player, r.epoch_policy_loss);
            }
        }
        Command::Search { fen, player } => {
            let state: BoardState = fen.parse().map_err(Error::Chess)?;
            let model = layout.load_policy()?;
            let embedding = match &player {
                Some(p) => layout.load_embeddings(std::slice::from_ref(p))?.remove(0).values,
                None => model.generic.clone(),
            };
            let eval = PolicyEvaluator { model: &model, embedding: &embedding };
            let r = run_search(&state, &PositionHistory::new(), &eval, &cfg.mcts)?;
            for ((m, n), p) in r.visit_distribution().iter().zip(&r.priors) {
                println!("{m}\t{n}\tprior {p:.4}");
            }
            println!("best {}", select_most_visited(&r.visit_distribution())?);
            return Ok(());
        }
        Command::TrainAe => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let (ae, report) = manifest.time("train-ae", || harness::train_autoencoder_on(&cfg.autoencoder, &datasets))?;
            layout.save_autoencoder(&ae)?;
            println!(
                "autoencoder mse per epoch ({} samples): {:?}",
                report.samples_used, report.epoch_loss
            );
        }
        Command::FitProjector => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let ae = layout.load_autoencoder()?;
            let space = manifest.time("fit-projector", || {
                harness::fit_projector_on(ae, AeTrainReport::default(), &cfg.metric.projector, &datasets)
            })?;
            layout.save_projector(&space.projector)?;
            println!("projector variances {:?}", space.projector.variances);
        }
        Command::EvalAccuracy => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let arts = policy_artifacts(&layout, &cfg)?;
            let table = manifest.time("eval-accuracy", || {
                let moves = harness::generate_moves(&cfg, &arts, &datasets)?;
                harness::eval_accuracy_table(&cfg, &datasets, &moves)
            })?;
            let dir = layout.reports_dir();
            let csv = accuracy_csv(&table);
            let json = serde_json::to_string_pretty(&accuracy_json(&table)).expect("serializable") + "\n";
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
            for (name, text) in [("accuracy.csv", &csv), ("accuracy.json", &json)] {
                let p = dir.join(name);
                std::fs::write(&p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
            }
            print!("{csv}");
        }
        Command::JsdMatrix => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let space = style_space(&layout)?;
            let results = manifest.time("jsd-matrix", || harness::run_divergence(&cfg, &space, &datasets))?;
            write_reports(&layout, &results)?;
        }
        Command::Align => {
            let datasets = layout.load_datasets(&cfg.players)?;
            let space = style_space(&layout)?;
            let arts = policy_artifacts(&layout, &cfg)?;
            let results = manifest.time("align", || harness::run_full(&cfg, &space, &arts, &datasets))?;
            write_reports(&layout, &results)?;
        }
        Command::Report => {
            if !cfg.data_dir.is_dir() {
                return Err(Error::MissingArtifact(cfg.data_dir.clone()));
            }
            let corpus = manifest.time("ingest", || load_pgn_dir(&cfg.data_dir))?;
            let datasets = manifest.time("ingest", || harness::build_datasets(&cfg, &corpus))?;
            layout.save_datasets(&datasets)?;
            let arts = manifest.time("train-policy", || harness::train_policies(&cfg, &datasets))?;
            layout.save_policy(&arts.model)?;
            layout.save_embeddings(&arts.embeddings)?;
            let space = manifest.time("train-style", || {
                harness::fit_style_space(&cfg.autoencoder, &cfg.metric.projector, &datasets)
            })?;
            layout.save_autoencoder(&space.ae)?;
            layout.save_projector(&space.projector)?;
            let results = manifest.time("evaluate", || harness::run_full(&cfg, &space, &arts, &datasets))?;
            write_reports(&layout, &results)?;
        }
    }
    manifest.write(&layout)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
