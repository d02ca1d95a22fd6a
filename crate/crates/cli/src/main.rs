use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use atg_core::config::{Checkpoints, RunConfig};
use atg_core::eval::{build_ground_truth, emit_curves, grasp_accuracy, model_error, run_trials};
use atg_core::learner::{write_step_log, ActionSet, Learner, Method};
use atg_core::sim::SimWorld;
use atg_core::Model;
use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "atg", version, about = "Aspect transition graph learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a model with intrinsically motivated exploration.
    Learn(RunArgs),
    /// Learn a model with uniform random exploration.
    Baseline(RunArgs),
    /// Build the exhaustive-sweep reference model.
    GroundTruth(RunArgs),
    /// Run seeded trials of both methods and tabulate model error.
    Evaluate(RunArgs),
    /// Render a saved model as Graphviz DOT.
    ExportDot(DotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds both the world and the learner (the first trial when evaluating).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    /// `start..end:step` or a comma list.
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    max_actions: Option<usize>,
    /// `orbit` or `orbit+grasp`.
    #[arg(long)]
    actions: Option<String>,
}

#[derive(Args, Debug)]
struct DotArgs {
    #[arg(long)]
    model: PathBuf,
    /// Directory for model.dot; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_file(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => anyhow!("{what} `{}` not found", path.display()),
        _ => anyhow!("cannot read {what} `{}`: {e}", path.display()),
    })
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml_str(&read_file(path, "config file")?)
                .with_context(|| format!("in {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg = cfg.with_seed(seed);
        }
        if let Some(n) = self.trials {
            cfg.eval.trials = n;
        }
        if let Some(c) = &self.checkpoints {
            cfg.eval.checkpoints = c.parse::<Checkpoints>()?;
        }
        if let Some(n) = self.max_actions {
            cfg.learner.max_actions = n;
        }
        if let Some(a) = &self.actions {
            cfg.learner.actions = a.parse::<ActionSet>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_artifact(dir: &Path, name: &str, body: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("cannot write `{}`", path.display()))?;
    Ok(path)
}

fn dot_with_header(model: &Model, header: &[String]) -> String {
    let mut text: String = header.iter().map(|l| format!("// {l}\n")).collect();
    text.push_str(&model.to_dot());
    text
}

fn truth_for(cfg: &RunConfig) -> Result<Model> {
    Ok(build_ground_truth(&cfg.sim, cfg.learner.actions, cfg.eval.resolution())?.model)
}

fn learn(args: &RunArgs, method: Method) -> Result<String> {
    let cfg = args.resolve()?;
    let header = cfg.provenance();
    let world = SimWorld::new(cfg.sim.clone(), cfg.sim.seed)?;
    let out = Learner::new(world, cfg.learner.clone(), method)?.run()?;
    let model_path = write_artifact(&args.out, "model.atg", out.model.to_document_with_header(&header)?.as_bytes())?;
    let mut steps = Vec::new();
    write_step_log(&mut steps, &out.log, cfg.learner.actions, &header)?;
    write_artifact(&args.out, "steps.csv", &steps)?;
    write_artifact(&args.out, "model.dot", dot_with_header(&out.model, &header).as_bytes())?;

    let truth = truth_for(&cfg)?;
    let err = model_error(&out.model, &truth)?;
    let mut summary = format!(
        "{} nodes, {} edges after {} actions, error {:.4} rad",
        out.model.node_count(),
        out.model.edge_count(),
        out.log.len(),
        err
    );
    if cfg.learner.actions == ActionSet::OrbitGrasp {
        let g = grasp_accuracy(&out.model, &truth);
        summary.push_str(&format!(", grasp edges {}/{}", g.discovered, g.total));
        if let Some(d) = g.mean_distance {
            summary.push_str(&format!(" (mean offset {d:.4} m)"));
        }
    }
    Ok(format!("{summary}; wrote {}", model_path.display()))
}

fn ground_truth(args: &RunArgs) -> Result<String> {
    let cfg = args.resolve()?;
    let header = cfg.provenance();
    let truth = truth_for(&cfg)?;
    let path = write_artifact(&args.out, "ground_truth.atg", truth.to_document_with_header(&header)?.as_bytes())?;
    write_artifact(&args.out, "ground_truth.dot", dot_with_header(&truth, &header).as_bytes())?;
    Ok(format!(
        "{} nodes, {} edges; wrote {}",
        truth.node_count(),
        truth.edge_count(),
        path.display()
    ))
}

fn evaluate(args: &RunArgs) -> Result<String> {
    let cfg = args.resolve()?;
    let base_seed = cfg.learner.seed;
    let mut header = cfg.provenance();
    header.push(format!("trials: {} (seeds {} to {})", cfg.eval.trials, base_seed, base_seed + cfg.eval.trials as u64 - 1));
    let truth = truth_for(&cfg)?;
    let exp = run_trials(&cfg, cfg.eval.trials, base_seed, cfg.eval.checkpoints.steps(), &truth)?;

    let mut table = Vec::new();
    exp.table.write_csv(&mut table, &header)?;
    let table_path = write_artifact(&args.out, "table1.csv", &table)?;

    let logs: Vec<&[_]> = exp.proposed.iter().map(|t| t.log.as_slice()).collect();
    let curves = emit_curves(&logs);
    let mut curve_header = header.clone();
    curve_header.push("method: proposed".into());
    let prefix: String = curve_header.iter().map(|l| format!("# {l}\n")).collect();
    write_artifact(&args.out, "reward_curve.csv", format!("{prefix}{}", curves.reward_csv).as_bytes())?;
    write_artifact(&args.out, "value_curve.csv", format!("{prefix}{}", curves.value_csv).as_bytes())?;

    for (name, trials) in [("proposed", &exp.proposed), ("baseline", &exp.baseline)] {
        for t in trials.iter() {
            let mut h = header.clone();
            h.push(format!("method: {name}, trial seed: {}", t.seed));
            write_artifact(
                &args.out,
                &format!("{name}_seed{}.dot", t.seed),
                dot_with_header(&t.model, &h).as_bytes(),
            )?;
        }
    }

    let last = exp.table.rows.last().ok_or_else(|| anyhow!("no checkpoints"))?;
    let p = last.p.map_or_else(|| "n/a".to_string(), |p| format!("{p:.3e}"));
    Ok(format!(
        "error at {}: proposed {:.4}, baseline {:.4}, p {p}; wrote {}",
        last.checkpoint,
        last.proposed.mean,
        last.baseline.mean,
        table_path.display()
    ))
}

/// Keeps the `# ` provenance lines of a saved model.
fn model_header(text: &str) -> Vec<String> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start().to_string())
        .collect()
}

fn export_dot(args: &DotArgs) -> Result<String> {
    let text = read_file(&args.model, "model file")?;
    let model = Model::from_document(&text).with_context(|| format!("in {}", args.model.display()))?;
    let dot = dot_with_header(&model, &model_header(&text));
    match &args.out {
        Some(dir) => {
            let path = write_artifact(dir, "model.dot", dot.as_bytes())?;
            Ok(format!(
                "{} nodes, {} edges; wrote {}",
                model.node_count(),
                model.edge_count(),
                path.display()
            ))
        }
        None => {
            print!("{dot}");
            Ok(String::new())
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ATG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("ATG_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<String> {
    init_threads()?;
    match &cli.command {
        Command::Learn(a) => learn(a, Method::Proposed),
        Command::Baseline(a) => learn(a, Method::Baseline),
        Command::GroundTruth(a) => ground_truth(a),
        Command::Evaluate(a) => evaluate(a),
        Command::ExportDot(a) => export_dot(a),
    }
}

/// Parse errors exit with status 2 and always show the usage line.
fn parse_args() -> Cli {
    match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            std::process::exit(2);
        }
        Err(e) => e.exit(),
    }
}

fn main() -> ExitCode {
    let cli = parse_args();
    match dispatch(cli) {
        Ok(summary) => {
            if !summary.is_empty() {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
