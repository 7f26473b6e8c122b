use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use saws_core::closeness::{
    min_delta, path_variation, segment_greedy_lipschitz, segment_greedy_strongly_convex, tv_to_j_bound, GridFunction,
    SegmentConstants, Segmentation,
};
use saws_core::domain::Regularity;
use saws_core::envgen::{ParameterPath, PathMetric};
use saws_core::error::{Result, SawsError};
use saws_core::harness::{emit_all, reference_curves, run_experiment, run_sweep, summarize, ExperimentConfig};
use saws_core::rng::{Purpose, SeedTree};

#[derive(Debug, Parser)]
#[command(name = "saws", version, about = "Adaptive window selection experiments and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Replaces the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replaces the config replication count.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory; falls back to `output.dir`, then `saws-out`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run replications concurrently (`--parallel false` for one thread).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    parallel: Option<bool>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run SAWS and the configured baselines; write traces, plot data and a summary.
    Run { config: PathBuf },
    /// Run the `[sweep]` grid over V, u and C_tau.
    Sweep { config: PathBuf },
    /// Greedy segmentation of a parameter path CSV (`n,theta_1,...`).
    Segment {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "strongly-convex")]
        regime: RegimeArg,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Gradient bound of the loss.
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Radius within which the loss stays strongly convex.
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1)]
        batch_size: usize,
    },
    /// Smallest delta making two grid functions (eps, delta)-close.
    Closeness {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Upper and lower reference curves along the configured path (replication 0).
    Bounds { config: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    StronglyConvex,
    Lipschitz,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let o = &cli.overrides;
    match cli.command {
        Command::Run { config } => run(&load(&config, o)?, o),
        Command::Sweep { config } => sweep(&load(&config, o)?, o),
        Command::Segment { path, regime, rho, sigma, m, r, batch_size } => {
            let metric = match regime {
                RegimeArg::StronglyConvex => PathMetric::Euclidean,
                RegimeArg::Lipschitz => PathMetric::MeanAbs,
            };
            let p = ParameterPath::read_csv(&path, metric)?;
            let c = SegmentConstants { rho, sigma, m, r, d: p.dim(), b: batch_size };
            segment(&p, regime, &c)
        }
        Command::Closeness { f, g, eps } => {
            let f = GridFunction::read_csv(&f)?;
            let g = GridFunction::read_csv(&g)?;
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(SawsError::Config("--eps must be finite and >= 0".into()));
            }
            println!("eps,delta_star");
            println!("{eps},{}", min_delta(&f, &g, eps)?);
            Ok(())
        }
        Command::Bounds { config } => bounds(&load(&config, o)?, o),
    }
}

fn load(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(r) = o.reps {
        cfg.replications = r;
    }
    if let Some(p) = o.parallel {
        cfg.parallel = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, o: &Overrides) -> PathBuf {
    o.out_dir.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("saws-out"))
}

fn write_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| SawsError::Io { path: dir.display().to_string(), source: e })?;
    let p = dir.join("config.toml");
    std::fs::write(&p, cfg.to_toml_string()?).map_err(|e| SawsError::Io { path: p.display().to_string(), source: e })
}

fn run(cfg: &ExperimentConfig, o: &Overrides) -> Result<()> {
    let dir = out_dir(cfg, o);
    let result = run_experiment(cfg)?;
    let emitted = emit_all(&result, &dir)?;
    write_config(cfg, &dir)?;
    let summary = summarize(&result)?;
    println!("learner,median_final_regret,q25,q75");
    for label in &result.labels {
        let q = &summary.learners[label].final_regret;
        println!("{label},{:.6},{:.6},{:.6}", q.median, q.q25, q.q75);
    }
    eprintln!("wrote {} traces and {}", emitted.traces.len(), emitted.summary.display());
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, o: &Overrides) -> Result<()> {
    let dir = out_dir(cfg, o);
    let rows = run_sweep(cfg, &dir)?;
    write_config(cfg, &dir)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    println!("point,v,u,c_tau,learner,median_regret");
    for r in &rows {
        println!("{},{},{},{},{},{:.6}", r.point, opt(r.v), opt(r.u), opt(r.c_tau), r.learner, r.median_regret);
    }
    Ok(())
}

fn segment(p: &ParameterPath, regime: RegimeArg, c: &SegmentConstants) -> Result<()> {
    let (seg, bound): (Segmentation, f64) = match regime {
        RegimeArg::StronglyConvex => {
            let seg = segment_greedy_strongly_convex(p.values(), c)?;
            let v = path_variation(p.values());
            (seg, tv_to_j_bound(Regularity::StronglyConvex, v, p.len(), c))
        }
        RegimeArg::Lipschitz => {
            let vals = p.values();
            let dist: Vec<Vec<f64>> =
                vals.iter().map(|a| vals.iter().map(|b| PathMetric::MeanAbs.distance(a, b)).collect()).collect();
            let seg = segment_greedy_lipschitz(&dist, c)?;
            let v: f64 = vals[..vals.len().saturating_sub(1)]
                .windows(2)
                .map(|w| PathMetric::MeanAbs.distance(&w[0], &w[1]))
                .sum();
            (seg, tv_to_j_bound(Regularity::Lipschitz, v, p.len(), c))
        }
    };
    println!("J = {}", seg.num_segments());
    println!("J bound from variation = {bound:.6}");
    println!("boundaries = {:?}", seg.boundaries);
    println!("segment,first,last,length,spread,threshold");
    for (j, len) in seg.lengths().into_iter().enumerate() {
        let range = seg.segment(j);
        println!(
            "{},{},{},{len},{:.6e},{:.6e}",
            j + 1,
            range.start(),
            range.end(),
            seg.certificates[j],
            seg.thresholds[j]
        );
    }
    Ok(())
}

fn bounds(cfg: &ExperimentConfig, o: &Overrides) -> Result<()> {
    let problem = cfg.build_problem()?;
    let mut rng = SeedTree::new(cfg.seed).stream(Purpose::Path, 0, 0);
    let path = cfg.generate_path(&problem, &mut rng)?;
    let rows = reference_curves(cfg.regime(), &path, cfg.dim, cfg.batch_size);
    let dir = out_dir(cfg, o);
    std::fs::create_dir_all(&dir).map_err(|e| SawsError::Io { path: dir.display().to_string(), source: e })?;
    let file = dir.join("bounds.csv");
    let mut w = csv::Writer::from_path(&file)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| SawsError::Io { path: file.display().to_string(), source: e })?;
    path.write_csv(dir.join("path.csv"))?;
    let last = rows.last().ok_or_else(|| SawsError::Config("empty horizon".into()))?;
    println!("n,variation,upper_reference,lower_reference");
    println!("{},{:.6},{:.6},{:.6}", last.n, last.variation, last.upper_reference, last.lower_reference);
    eprintln!("wrote {}", file.display());
    Ok(())
}
