use clap::{Args, Parser, Subcommand};
use projfree_harness::config::{ExperimentConfig, SolverKind};
use projfree_harness::diagnostics::{run_check, DEFAULT_RSC_PAIRS};
use projfree_harness::experiment::{csv_name, obtain_reference, run_experiment, run_solver, Instance};
use projfree_harness::io::{self, read_problem, read_trace, write_problem};
use projfree_harness::plot::{emit_plot, Series, XAxis, YAxis};
use projfree_harness::{HarnessError, Result};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "projfree", version, about = "Projection-free solvers for nuclear-norm constrained matrix regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Use only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference certificate tolerance, overriding `reference.tol`.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated instances to disk.
    Generate(Common),
    /// Run one solver on one instance.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Defaults to the first configured solver.
        #[arg(long)]
        solver: Option<SolverKind>,
        /// Previously generated instance to solve instead of generating one.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Run every configured solver on every seed.
    Bench(Common),
    /// Plot traces as an SVG with a log-scale y axis.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "cum_component_grads")]
        x: XAxis,
        #[arg(long, value_enum, default_value = "gap_to_ref")]
        y: YAxis,
        /// SVG file, or a directory to receive `plot.svg`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Restricted strong convexity and cone-membership diagnostics.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RSC_PAIRS)]
        pairs: usize,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(tol) = common.tol {
        cfg.reference.set_tol(tol);
    }
    cfg.validate()?;
    cfg.check_files()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = load(&common)?;
            for (i, seed) in cfg.seeds.iter().enumerate() {
                let spec = cfg.gen_spec(i);
                let inst = Instance::generate(&spec)?;
                let path = cfg.out_dir.join(format!("instance_seed{seed}.bin"));
                write_problem(&path, &spec, &inst.problem, &inst.truth)?;
                println!("{}", path.display());
            }
        }
        Command::Solve { common, solver, instance } => {
            let cfg = load(&common)?;
            let solver = solver.unwrap_or(cfg.solvers[0]);
            let seed = cfg.seeds[0];
            let inst = match &instance {
                Some(path) => {
                    let (problem, truth, sidecar) = read_problem(path)?;
                    let spec = sidecar.map(|s| s.spec).unwrap_or_else(|| cfg.gen_spec(0));
                    Instance::from_parts(spec, problem, truth)?
                }
                None => Instance::generate(&cfg.gen_spec(0))?,
            };
            let reference = obtain_reference(&cfg.reference, &inst, &cfg.out_dir.join("refcache"))?;
            let out = run_solver(&inst, solver, &cfg, inst.spec.seed, &reference)?;
            create_dir(&cfg.out_dir)?;
            let path = cfg.out_dir.join(csv_name(solver, seed));
            io::write_trace(&path, &out.rows)?;
            let last = out.rows.last().expect("trace has the initial row");
            println!(
                "{solver} seed {seed}: f = {:.6e}, gap_to_ref = {:.3e}, component grads = {}, LO calls = {}, projections = {}",
                last.f_value, last.gap_to_ref, out.ledger.component_grad_evals, out.ledger.lo_calls, out.ledger.projection_calls
            );
            println!("{}", path.display());
        }
        Command::Bench(common) => {
            let cfg = load(&common)?;
            let out = run_experiment(&cfg)?;
            for p in &out.csvs {
                println!("{}", p.display());
            }
            println!("{}", out.manifest.display());
        }
        Command::Plot { traces, x, y, out } => {
            let series = traces
                .iter()
                .map(|p| {
                    Ok(Series {
                        label: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                        rows: read_trace(p)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let svg = emit_plot(&series, x, y)?;
            let path = if out.is_dir() { out.join("plot.svg") } else { out };
            fs::write(&path, svg).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            println!("{}", path.display());
        }
        Command::Check { common, pairs } => {
            let cfg = load(&common)?;
            let report = run_check(&cfg, 0, pairs, &cfg.out_dir.join("refcache"))?;
            let text = io::to_json(&report)?;
            if common.out.is_some() {
                create_dir(&cfg.out_dir)?;
                let path = cfg.out_dir.join(format!("check_seed{}.json", cfg.seeds[0]));
                fs::write(&path, &text).map_err(|source| HarnessError::Io { path, source })?;
            }
            print!("{text}");
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
