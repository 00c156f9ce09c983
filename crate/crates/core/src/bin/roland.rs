use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roland::eval::Protocol;
use roland::experiment::{
    collect_runs, grid_search, run_experiment, ExperimentConfig, GridAxes, GridOptions, RunOptions,
};
use roland::snapshots::load_cached;
use roland::Error;

#[derive(Parser)]
#[command(name = "roland", version, about = "Dynamic graph link prediction over snapshot sequences")]
struct Cli {
    /// Directory holding run directories.
    #[arg(long, global = true, env = "ROLAND_RUN_ROOT", default_value = "runs")]
    root: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and partition an edge file, fill the snapshot cache, print statistics.
    Ingest {
        #[command(flatten)]
        exp: ExpArgs,
        /// Also print one line per snapshot.
        #[arg(long)]
        per_snapshot: bool,
    },
    /// Live-update evaluation for every seed.
    RunLive(RunArgs),
    /// Fixed-split evaluation for every seed.
    RunFixed(RunArgs),
    /// Hyperparameter grid over config keys.
    Grid(GridArgs),
    /// Summary tables from run directories.
    Report {
        /// Run directories or roots containing them (default: the run root).
        dirs: Vec<PathBuf>,
        /// Where to write the TSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(hide = true)]
    Worker {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct ExpArgs {
    /// Base config file (flat TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Column roles, e.g. `src,dst,weight,timestamp`.
    #[arg(long)]
    columns: Option<String>,
    /// `,` `tab` `whitespace` or one character.
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long)]
    skip_header: bool,
    /// `weekly`, `daily`, or seconds like `86400s`.
    #[arg(long)]
    frequency: Option<String>,
    /// moving_average, mlp or gru.
    #[arg(long)]
    update: Option<String>,
    /// Meta-model smoothing in [0, 1], or `none` to disable the meta-model.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    k_neg: Option<i64>,
    #[arg(long)]
    hidden_dim: Option<i64>,
    #[arg(long)]
    max_epochs: Option<i64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Extra `key=value` overrides, values in TOML syntax.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// Re-run even if a completed run directory exists.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    run: RunArgs,
    /// TOML file of axes, each key mapping to an array of values.
    #[arg(long)]
    axes: Option<PathBuf>,
    /// Sweep α ∈ {0.1, …, 1.0}.
    #[arg(long)]
    alpha_grid: bool,
    /// Sweep batch-norm, skip connections and aggregation.
    #[arg(long)]
    ablation_grid: bool,
    /// Worker processes.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl ExpArgs {
    fn resolve(&self, protocol: Option<Protocol>) -> roland::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let mut set = |key: &str, v: toml::Value| -> roland::Result<()> {
            cfg = cfg.with_override(key, &v)?;
            Ok(())
        };
        let s = |x: &str| toml::Value::String(x.to_string());
        if let Some(p) = protocol {
            set("protocol", s(&p.to_string()))?;
        }
        if let Some(d) = &self.dataset {
            set("dataset", s(&d.to_string_lossy()))?;
        }
        if let Some(v) = &self.columns {
            set("columns", s(v))?;
        }
        if let Some(v) = &self.delimiter {
            set("delimiter", s(v))?;
        }
        if self.skip_header {
            set("skip_header", true.into())?;
        }
        if let Some(v) = &self.frequency {
            set("frequency", s(v))?;
        }
        if let Some(v) = &self.update {
            set("update", s(&v.replace('-', "_")))?;
        }
        if let Some(v) = &self.alpha {
            if v == "none" {
                set("meta", false.into())?;
            } else {
                let a: f64 = v.parse().map_err(|_| Error::Config(format!("alpha: cannot parse `{v}`")))?;
                set("meta", true.into())?;
                set("alpha", a.into())?;
            }
        }
        if let Some(v) = &self.seeds {
            let arr = v.iter().map(|&x| toml::Value::Integer(x as i64)).collect();
            set("seeds", toml::Value::Array(arr))?;
        }
        for (key, v) in [("k_neg", self.k_neg), ("hidden_dim", self.hidden_dim), ("max_epochs", self.max_epochs)] {
            if let Some(v) = v {
                set(key, v.into())?;
            }
        }
        if let Some(v) = self.learning_rate {
            set("learning_rate", v.into())?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            let wrapped: toml::Table = format!("v = {v}")
                .parse()
                .or_else(|_| format!("v = {:?}", v).parse())
                .map_err(|e: toml::de::Error| Error::Config(format!("{k}: {}", e.message())))?;
            set(k.trim(), wrapped["v"].clone())?;
        }
        if cfg.dataset.as_os_str().is_empty() {
            return Err(Error::Config("dataset: no dataset given (use --dataset or a config file)".into()));
        }
        Ok(cfg)
    }
}

fn run_options(r: &RunArgs) -> RunOptions {
    RunOptions {
        force: r.force,
        cache_dir: r.cache_dir.clone(),
    }
}

fn ingest(root: &Path, exp: &ExpArgs, per_snapshot: bool) -> roland::Result<()> {
    let cfg = exp.resolve(None)?;
    let g = load_cached(&cfg.dataset, &cfg.schema()?, cfg.frequency()?, root.join(".cache"))?;
    println!("# roland.ingest/1");
    println!("dataset\tnodes\tedges\tsnapshots\tfrequency\tempty_snapshots");
    let empty = g.snapshots.iter().filter(|s| s.edge_count() == 0).count();
    println!(
        "{}\t{}\t{}\t{}\t{}\t{empty}",
        cfg.dataset_name(),
        g.node_count,
        g.total_edges(),
        g.len(),
        g.frequency
    );
    if per_snapshot {
        println!("# roland.ingest.snapshots/1");
        println!("t\tstart\tend\tedges");
        for s in &g.snapshots {
            println!("{}\t{}\t{}\t{}", s.index, s.window.0, s.window.1, s.edge_count());
        }
    }
    Ok(())
}

fn run(root: &Path, args: &RunArgs, protocol: Protocol) -> roland::Result<()> {
    let cfg = args.exp.resolve(Some(protocol))?;
    let out = run_experiment(&cfg, root, &run_options(args))?;
    let s = &out.summary;
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
    println!(
        "{}\t{}\tmean_mrr={}\tstd_mrr={}\tseeds={}{}",
        out.dir.display(),
        s.protocol,
        fmt(s.mean_mrr),
        fmt(s.std_mrr),
        s.seeds.len(),
        if out.reused { "\t(already complete)" } else { "" }
    );
    Ok(())
}

fn grid(root: &Path, args: &GridArgs) -> roland::Result<()> {
    let cfg = args.run.exp.resolve(None)?;
    let mut axes = match &args.axes {
        Some(p) => GridAxes::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?)?,
        None => GridAxes::new(),
    };
    if args.alpha_grid {
        axes.0.extend(GridAxes::alpha_grid().0);
    }
    if args.ablation_grid {
        axes.0.extend(GridAxes::ablation_grid().0);
    }
    let opts = GridOptions {
        workers: args.workers,
        worker_program: std::env::current_exe().ok(),
        run: run_options(&args.run),
    };
    let result = grid_search(&cfg, &axes, root, &opts)?;
    print!("{}", result.index_tsv());
    eprintln!("index: {}", result.index_path.display());
    for c in result.failures() {
        eprintln!("failed cell {:?}: {}", c.overrides, c.result.as_ref().unwrap_err());
    }
    match result.best_cell() {
        Some(c) => eprintln!("best: {:?}", c.overrides),
        None => return Err(Error::Config("no grid cell completed".into())),
    }
    Ok(())
}

fn report(root: &Path, dirs: &[PathBuf], out: Option<&Path>) -> roland::Result<()> {
    let dirs = if dirs.is_empty() { vec![root.to_path_buf()] } else { dirs.to_vec() };
    let tables = collect_runs(&dirs);
    print!("{}", tables.mrr_table());
    print!("{}", tables.meta_gain_table());
    for (p, why) in &tables.skipped {
        eprintln!("skipped {}: {why}", p.display());
    }
    if let Some(out) = out {
        for p in tables.write_all(out)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Ingest { exp, per_snapshot } => ingest(&cli.root, exp, *per_snapshot),
        Cmd::RunLive(a) => run(&cli.root, a, Protocol::LiveUpdate),
        Cmd::RunFixed(a) => run(&cli.root, a, Protocol::FixedSplit),
        Cmd::Grid(a) => grid(&cli.root, a),
        Cmd::Report { dirs, out } => report(&cli.root, dirs, out.as_deref()),
        Cmd::Worker {
            config,
            force,
            cache_dir,
        } => ExperimentConfig::load(config).and_then(|cfg| {
            let opts = RunOptions {
                force: *force,
                cache_dir: cache_dir.clone(),
            };
            run_experiment(&cfg, &cli.root, &opts).map(|_| ())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
        }
    }
}
