use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use latent_chess::dataset::{load_dataset, write_dataset};
use latent_chess::export::{export_embeddings, fit_on_game, trajectory, trajectory_csv, trajectory_svg};
use latent_chess::harness::{
    append_tally_rows, rate_rows, read_tally_rows, run_match, MatchConfig, MoveLimit, OpponentSpec, TallyRow,
};
use latent_chess::model::Model;
use latent_chess::train::{run_training, RunFile, LOSS_LOG};
use latent_chess::uci::uci_loop;
use latent_chess_core::pgn::pgn_parse_all;
use latent_chess_core::planner::ScoreMode;
use latent_chess_core::projection::fit_projection;
use latent_chess_core::synthetic::generate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "latent-chess", version, about = "Latent-space planning chess engine")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train an encoder and fit its advantage model.
    Train(TrainArgs),
    /// Write a dataset of material-labeled positions from random games.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        count: usize,
        #[arg(long, default_value_t = 120)]
        max_plies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve UCI on stdin/stdout.
    Uci {
        /// Model directory; the built-in untrained model when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Play a match against an external UCI engine.
    Match(MatchArgs),
    /// Estimate ratings from a tally file.
    Rate {
        #[arg(long)]
        tally: PathBuf,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write embeddings, advantage scores and 2D coordinates of a dataset.
    ExportEmbeddings {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the per-ply latent trajectory of a PGN game.
    ExportTrajectory {
        #[arg(long)]
        pgn: PathBuf,
        /// 1-based index of the game within the file.
        #[arg(long, default_value_t = 1)]
        game: usize,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Dataset whose embeddings define the projection; the game itself otherwise.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct TrainArgs {
    /// TOML run file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "model")]
    out: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

#[derive(clap::Args)]
struct MatchArgs {
    /// Opponent command line, shell-quoted.
    #[arg(long)]
    opponent_cmd: String,
    /// Opponent UCI option as NAME=VALUE; repeatable.
    #[arg(long = "opponent-option", value_parser = parse_pair)]
    opponent_options: Vec<(String, String)>,
    #[arg(long, default_value_t = 20)]
    games: u32,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value = "anchored")]
    mode: String,
    /// Per-move time for both sides; otherwise fixed depth.
    #[arg(long)]
    movetime: Option<u64>,
    /// Depth sent to the opponent; defaults to --depth.
    #[arg(long)]
    opponent_depth: Option<usize>,
    #[arg(long, default_value_t = 400)]
    max_plies: usize,
    #[arg(long)]
    no_alternate: bool,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "tally.csv")]
    tally: PathBuf,
    #[arg(long)]
    pgn: Option<PathBuf>,
    #[arg(long, default_value = "match")]
    label: String,
    #[arg(long, default_value_t = 0.0)]
    opponent_rating: f64,
    /// Games played at once, one opponent process each.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    start_fen: Option<String>,
    /// Seconds to wait for any opponent reply.
    #[arg(long, default_value_t = 10)]
    timeout: u64,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))
}

fn parse_mode(s: &str) -> Result<ScoreMode> {
    ScoreMode::parse(s).with_context(|| format!("unknown mode '{s}' (unanchored, anchored, anchored-raw)"))
}

fn load_model(dir: Option<&Path>) -> Result<Model> {
    match dir {
        Some(d) => Model::load(d).with_context(|| format!("loading model from {}", d.display())),
        None => Ok(Model::untrained(ScoreMode::Anchored)),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let mut run = match &a.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    if let Some(v) = a.steps {
        run.train.steps = v;
    }
    if let Some(v) = a.batch_size {
        run.train.batch_size = v;
    }
    if let Some(v) = a.lr {
        run.train.lr = v;
    }
    if let Some(v) = a.seed {
        run.train.seed = v;
    }
    if let Some(v) = a.mode {
        run.advantage.mode = v;
    }
    if let Some(v) = a.checkpoint_every {
        run.train.checkpoint_every = v;
    }
    let data = load_dataset(&a.dataset)?;
    let every = (run.train.steps / 20).max(1);
    let summary = run_training(&data, &run, &a.out, |r| {
        if r.step % every == 0 {
            log::info!("step {} loss {:.5}", r.step, r.loss);
        }
    })?;
    let report = serde_json::json!({
        "model_dir": a.out,
        "loss_log": a.out.join(LOSS_LOG),
        "steps": summary.losses.len(),
        "first_loss": summary.losses.first(),
        "last_loss": summary.losses.last(),
        "white_samples": summary.fit.white_samples,
        "black_samples": summary.fit.black_samples,
    });
    println!("{report}");
    Ok(())
}

fn play(a: MatchArgs) -> Result<()> {
    let mut cfg = MatchConfig::new(OpponentSpec {
        command: a.opponent_cmd,
        options: a.opponent_options,
        timeout: Duration::from_secs(a.timeout),
    });
    cfg.games = a.games;
    cfg.alternate = !a.no_alternate;
    cfg.depth = a.depth;
    cfg.width = a.width;
    cfg.mode = parse_mode(&a.mode)?;
    cfg.limit = match a.movetime {
        Some(ms) => MoveLimit::MoveTime(Duration::from_millis(ms)),
        None => MoveLimit::Depth(a.opponent_depth.unwrap_or(a.depth)),
    };
    cfg.max_plies = a.max_plies;
    cfg.start_fen = a.start_fen;
    let model = load_model(a.model.as_deref())?;
    let outcome = run_match(&cfg, &model, a.jobs)?;
    for (i, g) in outcome.games.iter().enumerate() {
        if let Some(msg) = &g.incident {
            eprintln!("game {}: {msg}", i + 1);
        }
    }
    if let Some(p) = &a.pgn {
        emit(Some(p), &outcome.pgn()?)?;
    }
    let row = TallyRow::new(&a.label, a.opponent_rating, &cfg, outcome.tally);
    append_tally_rows(&a.tally, std::slice::from_ref(&row))?;
    println!("{}", serde_json::to_string(&row)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Cmd::Train(a) => train(a),
        Cmd::Synth {
            out,
            count,
            max_plies,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            write_dataset(&out, &generate(&mut rng, count, max_plies))?;
            println!("{}", serde_json::json!({ "dataset": out, "positions": count }));
            Ok(())
        }
        Cmd::Uci { model } => {
            let m = load_model(model.as_deref())?;
            uci_loop(m, model).context("UCI session")
        }
        Cmd::Match(a) => play(a),
        Cmd::Rate { tally, out } => {
            let rows = read_tally_rows(&tally)?;
            if rows.is_empty() {
                bail!("{} has no tally rows", tally.display());
            }
            let text = serde_json::to_string_pretty(&rate_rows(&rows)?)? + "\n";
            if let Some(p) = &out {
                emit(Some(p), &text)?;
            }
            print!("{text}");
            Ok(())
        }
        Cmd::ExportEmbeddings { dataset, model, out } => {
            let m = load_model(model.as_deref())?;
            let (text, proj) = export_embeddings(&m, &load_dataset(&dataset)?, None)?;
            log::info!("explained variance ratio {:.4}", proj.explained_variance_ratio());
            emit(out.as_deref(), &text)
        }
        Cmd::ExportTrajectory {
            pgn,
            game,
            model,
            reference,
            out,
            svg,
        } => {
            let text = fs::read_to_string(&pgn).with_context(|| format!("reading {}", pgn.display()))?;
            let games = pgn_parse_all(&text).with_context(|| format!("parsing {}", pgn.display()))?;
            let Some(record) = game.checked_sub(1).and_then(|i| games.get(i)) else {
                bail!("{} holds {} games; --game {game} is out of range", pgn.display(), games.len());
            };
            let m = load_model(model.as_deref())?;
            let proj = match &reference {
                Some(r) => {
                    let items = load_dataset(r)?;
                    let positions = items
                        .iter()
                        .map(|i| latent_chess_core::chess::Position::from_fen(&i.fen))
                        .collect::<Result<Vec<_>, _>>()?;
                    fit_projection(&latent_chess::export::embed_positions(&m, &positions)?)?
                }
                None => fit_on_game(record, &m)?,
            };
            let points = trajectory(record, &m, &proj)?;
            if let Some(p) = &svg {
                let title = format!("{} vs {} {}", record.roster.white, record.roster.black, record.result.as_str());
                emit(Some(p), &trajectory_svg(&points, &title))?;
            }
            emit(out.as_deref(), &trajectory_csv(&points))
        }
    }
}
