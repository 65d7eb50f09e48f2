//! `stiffctl`: generate demonstrations, segment them, optimize per-phase
//! stiffness and aggregate the results.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stiffctl_core::io::{self, SegmentationFile, SensitivityLine, SummaryRow};
use stiffctl_core::pareto::{pareto_indices, ObjectivePoint};
use stiffctl_core::pipeline::{
    run_benchmark, run_sensitivity, run_with_segmentation, segment_demo, CellSummary, ExperimentConfig, RunRecord, RunRow,
};
use stiffctl_core::segment::Method;
use stiffctl_core::sim::TaskKind;
use stiffctl_core::{IoError, PipelineError, RandomStream, SimError, Trajectory};

/// Failure with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::config(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Segment(_) => 4,
            PipelineError::Sim(_) => 3,
            PipelineError::AtIteration { source, .. } => match **source {
                PipelineError::Sim(_) => 3,
                _ => 2,
            },
            PipelineError::Config(_) | PipelineError::Data(_) => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::Invalid(_) => 2,
            SimError::Diverged { .. } => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "stiffctl", version, about = "Phase segmentation and stiffness optimization from demonstrations")]
struct Cli {
    /// JSON experiment config; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print progress details.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command that runs something seeded.
#[derive(Args, Debug, Clone)]
struct Common {
    /// wipe2d, door1d or track.
    #[arg(long)]
    task: Option<String>,
    /// Seed; falls back to STIFFCTL_SEED, then to the config's first seed.
    #[arg(long, env = "STIFFCTL_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct SegmentFlags {
    /// icsld, gmm or sld.
    #[arg(long)]
    method: Option<String>,
    /// Number of phases.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct OptimizeFlags {
    /// Total evaluations including the initial design.
    #[arg(long = "n")]
    n_iters: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Ignore the segmentation prior.
    #[arg(long)]
    no_prior: bool,
    /// Candidate pool per suggestion.
    #[arg(long)]
    pool: Option<usize>,
    /// Record wall-clock milliseconds per iteration.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scripted demonstration and write it as JSON.
    Demo {
        #[command(flatten)]
        common: Common,
        /// Position noise standard deviation (m).
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a demonstration into phases and estimate the prior stiffness.
    Segment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seg: SegmentFlags,
        demo: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize per-phase stiffness for a segmented demonstration.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opt: OptimizeFlags,
        #[arg(long)]
        demo: PathBuf,
        #[arg(long)]
        segmentation: PathBuf,
        /// Output directory for run.csv, pareto.csv and summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate optimize output directories into curve, front and grid CSVs.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full method × prior grid over several seeds.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seg: SegmentFlags,
        #[command(flatten)]
        opt: OptimizeFlags,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Final hypervolume over a grid of phase counts and prior strengths.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seg: SegmentFlags,
        #[command(flatten)]
        opt: OptimizeFlags,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        ms: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,10,100")]
        betas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => Ok(io::read_json(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_common(c: &mut ExperimentConfig, common: &Common) -> Result<()> {
    if let Some(t) = &common.task {
        c.task = t.parse::<TaskKind>().map_err(Failure::config)?;
    }
    if let Some(s) = common.seed {
        c.seeds = vec![s];
    }
    Ok(())
}

fn apply_segment(c: &mut ExperimentConfig, f: &SegmentFlags) -> Result<()> {
    if let Some(m) = &f.method {
        c.method = m.parse::<Method>().map_err(Failure::config)?;
    }
    if f.m.is_some() {
        c.m = f.m;
    }
    if let Some(k) = f.kappa {
        c.kappa = k;
    }
    Ok(())
}

fn apply_optimize(c: &mut ExperimentConfig, f: &OptimizeFlags) {
    if let Some(n) = f.n_iters {
        c.n_iters = n;
    }
    if let Some(n) = f.n_init {
        c.n_init = n;
    }
    if let Some(b) = f.beta {
        c.beta = b;
    }
    if f.no_prior {
        c.use_prior = false;
    }
    if let Some(p) = f.pool {
        c.pool = p;
    }
    if f.timing {
        c.timing = true;
    }
}

fn seed_of(c: &ExperimentConfig) -> u64 {
    c.seeds[0]
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))
}

fn cmd_demo(mut c: ExperimentConfig, common: &Common, noise: Option<f64>, out: &Path) -> Result<()> {
    apply_common(&mut c, common)?;
    if let Some(n) = noise {
        c.demo_noise = n;
    }
    c.validate()?;
    let (_, demo) = c.demonstrate(seed_of(&c))?;
    io::write_trajectory(out, &demo)?;
    println!(
        "T={} dt={} peak_force={}",
        demo.len(),
        demo.dt(),
        demo.peak_force()
    );
    Ok(())
}

/// Makes the configured inertia match the demonstration's axis count.
fn check_axes(c: &ExperimentConfig, demo: &Trajectory, path: &Path) -> Result<()> {
    let n = c.setup().cfg.n_axes();
    if n != demo.n_axes() {
        return Err(Failure::config(format!(
            "{}: demonstration has {} axes but task {} has {n}; pass --task",
            path.display(),
            demo.n_axes(),
            c.task
        )));
    }
    Ok(())
}

fn cmd_segment(
    mut c: ExperimentConfig,
    common: &Common,
    flags: &SegmentFlags,
    demo_path: &Path,
    out: Option<&Path>,
) -> Result<()> {
    apply_common(&mut c, common)?;
    apply_segment(&mut c, flags)?;
    c.validate()?;
    let demo = io::read_trajectory(demo_path)?;
    check_axes(&c, &demo, demo_path)?;
    let result = segment_demo(&c, &demo, seed_of(&c))?;
    let file = SegmentationFile::new(
        &result.segmentation,
        &result.prior.stiffness,
        result.objective,
        result.method,
    );
    if let Some(out) = out {
        io::write_json(out, &file)?;
    }
    let starts: Vec<String> = result
        .segmentation
        .boundaries()
        .iter()
        .map(ToString::to_string)
        .collect();
    println!("method={} M={} boundaries=[{}]", result.method, file.m, starts.join(","));
    for (j, k) in file.k_prior.iter().enumerate() {
        let at_bound = result.prior.at_bound[j].iter().any(|&b| b);
        let ks: Vec<String> = k.iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "K_prior[{}] = [{}]{}",
            j + 1,
            ks.join(", "),
            if at_bound { " (at bound)" } else { "" }
        );
    }
    Ok(())
}

fn write_run_dir(dir: &Path, c: &ExperimentConfig, rec: &RunRecord) -> Result<()> {
    create_dir(dir)?;
    io::write_run_csv(&dir.join("run.csv"), &rec.rows)?;
    io::write_pareto_csv(&dir.join("pareto.csv"), &rec.pareto())?;
    io::write_summary_csv(
        &dir.join("summary.csv"),
        &[SummaryRow {
            method: rec.method,
            prior: c.prior_active(),
            seed: rec.seed,
            final_hv: rec.final_hv(),
        }],
    )?;
    Ok(())
}

fn cmd_optimize(
    mut c: ExperimentConfig,
    common: &Common,
    flags: &OptimizeFlags,
    demo_path: &Path,
    seg_path: &Path,
    out: &Path,
    verbose: bool,
) -> Result<()> {
    apply_common(&mut c, common)?;
    apply_optimize(&mut c, flags);
    let demo = io::read_trajectory(demo_path)?;
    let seg_file = io::read_segmentation(seg_path)?;
    c.method = seg_file.method;
    c.m = Some(seg_file.m);
    c.validate()?;
    check_axes(&c, &demo, demo_path)?;
    let seg = seg_file
        .segmentation()
        .map_err(|e| Failure::config(format!("{}: {e}", seg_path.display())))?;
    if seg.len() != demo.len() {
        return Err(Failure::config(format!(
            "{}: {} labels for a {}-sample demonstration",
            seg_path.display(),
            seg.len(),
            demo.len()
        )));
    }
    let prior = seg_file
        .prior(c.bounds())
        .map_err(|e| Failure::config(format!("{}: {e}", seg_path.display())))?;
    // the evaluation environment does not depend on the demonstration noise
    let (env, _) = c.setup().demonstrate(0.0, &mut RandomStream::new(0, "env"))?;
    let rec = run_with_segmentation(&c, &env, &demo, &seg, &prior, seed_of(&c))?;
    write_run_dir(out, &c, &rec)?;
    if verbose {
        let diverged = rec.rows.iter().filter(|r| r.diverged).count();
        eprintln!(
            "{} evaluations, {} on the front, {diverged} diverged, {} surrogate fallbacks",
            rec.rows.len(),
            rec.pareto().len(),
            rec.fallbacks
        );
    }
    println!("final_hv={}", rec.final_hv());
    Ok(())
}

/// Run rows and the matching summary line from one optimize directory.
fn read_run_dir(dir: &Path) -> Result<(Vec<RunRow>, SummaryRow)> {
    let rows = io::read_run_csv(&dir.join("run.csv"))?;
    let summary_path = dir.join("summary.csv");
    let mut summary = io::read_summary_csv(&summary_path)?;
    if summary.len() != 1 {
        return Err(Failure::config(format!(
            "{}: expected one row, found {}",
            summary_path.display(),
            summary.len()
        )));
    }
    Ok((rows, summary.remove(0)))
}

fn grouped<T>(items: Vec<(Method, bool, T)>) -> Vec<(Method, bool, Vec<T>)> {
    let mut out: Vec<(Method, bool, Vec<T>)> = Vec::new();
    for (m, p, v) in items {
        match out.iter_mut().find(|(gm, gp, _)| *gm == m && *gp == p) {
            Some(g) => g.2.push(v),
            None => out.push((m, p, vec![v])),
        }
    }
    out
}

fn write_aggregates(
    out: &Path,
    runs: Vec<(Method, bool, Vec<RunRow>)>,
    summaries: &[SummaryRow],
) -> Result<()> {
    create_dir(out)?;
    let curves: Vec<(Method, bool, Vec<io::CurvePoint>)> = grouped(runs.clone())
        .into_iter()
        .map(|(m, p, group)| {
            let hv: Vec<Vec<f64>> = group
                .iter()
                .map(|rows| rows.iter().map(|r| r.hv).collect())
                .collect();
            (m, p, io::learning_curve(&hv))
        })
        .collect();
    io::write_curve_csv(&out.join("curve.csv"), &curves)?;

    let all: Vec<(Vec<f64>, ObjectivePoint)> = runs
        .iter()
        .flat_map(|(_, _, rows)| rows.iter().map(|r| (r.theta.clone(), ObjectivePoint::new(r.y_t, r.y_c))))
        .collect();
    let ys: Vec<ObjectivePoint> = all.iter().map(|(_, y)| *y).collect();
    let front: Vec<(Vec<f64>, ObjectivePoint)> =
        pareto_indices(&ys).into_iter().map(|i| all[i].clone()).collect();
    io::write_pareto_csv(&out.join("pareto.csv"), &front)?;

    let grid: Vec<CellSummary> = grouped(
        summaries
            .iter()
            .map(|s| (s.method, s.prior, s.final_hv))
            .collect(),
    )
    .into_iter()
    .map(|(m, p, finals)| CellSummary::from_finals(m, p, &finals, 0))
    .collect();
    io::write_grid_csv(&out.join("grid.csv"), &grid)?;
    io::write_summary_csv(&out.join("summary.csv"), summaries)?;
    Ok(())
}

fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<()> {
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for d in dirs {
        let (rows, summary) = read_run_dir(d)?;
        runs.push((summary.method, summary.prior, rows));
        summaries.push(summary);
    }
    let lens: Vec<usize> = runs.iter().map(|r| r.2.len()).collect();
    if lens.iter().any(|&l| l != lens[0]) {
        eprintln!("warning: run lengths differ {lens:?}; curves are truncated to the shortest");
    }
    write_aggregates(out, runs, &summaries)?;
    println!("{} runs aggregated into {}", summaries.len(), out.display());
    Ok(())
}

fn print_grid(cells: &[CellSummary]) {
    println!("{:<6} {:<6} {:>10} {:>10} {:>10} {:>5}", "method", "prior", "median", "mean", "std", "runs");
    for s in cells {
        println!(
            "{:<6} {:<6} {:>10.4} {:>10.4} {:>10.4} {:>5}",
            s.method.to_string(),
            if s.use_prior { "yes" } else { "no" },
            s.median,
            s.mean,
            s.std,
            s.completed
        );
    }
}

fn cmd_benchmark(c: ExperimentConfig, out: &Path, verbose: bool) -> Result<()> {
    c.validate()?;
    let report = run_benchmark(&c)?;
    let runs_dir = out.join("runs");
    create_dir(&runs_dir)?;
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for cell in &report.cells {
        let tag = if cell.use_prior { "prior" } else { "noprior" };
        for (seed, r) in cell.seeds.iter().zip(&cell.runs) {
            match r {
                Ok(rec) => {
                    let cfg = ExperimentConfig {
                        method: cell.method,
                        use_prior: cell.use_prior,
                        ..c.clone()
                    };
                    write_run_dir(&runs_dir.join(format!("{}-{tag}-{seed}", cell.method)), &cfg, rec)?;
                    runs.push((cell.method, cell.use_prior, rec.rows.clone()));
                    summaries.push(SummaryRow {
                        method: cell.method,
                        prior: cell.use_prior,
                        seed: *seed,
                        final_hv: rec.final_hv(),
                    });
                }
                Err(e) => eprintln!("{} {tag} seed {seed} failed: {e}", cell.method),
            }
        }
    }
    write_aggregates(out, runs, &summaries)?;
    // failed runs are counted in the grid written from the report itself
    let grid = report.summaries();
    io::write_grid_csv(&out.join("grid.csv"), &grid)?;
    print_grid(&grid);
    if verbose {
        eprintln!("outputs in {}", out.display());
    }
    Ok(())
}

fn cmd_sensitivity(c: ExperimentConfig, ms: &[usize], betas: &[f64], out: &Path) -> Result<()> {
    c.validate()?;
    let rows = run_sensitivity(&c, ms, betas)?;
    create_dir(out)?;
    let lines: Vec<SensitivityLine> = rows.iter().map(SensitivityLine::from).collect();
    io::write_sensitivity_csv(&out.join("sensitivity.csv"), &lines)?;
    print!("{:>4}", "M");
    for b in betas {
        print!(" {:>9}", format!("b={b}"));
    }
    println!();
    for &m in ms {
        print!("{m:>4}");
        for &b in betas {
            let r = lines.iter().find(|l| l.m == m && l.beta == b);
            print!(" {:>9.4}", r.map_or(f64::NAN, |l| l.median));
        }
        println!();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let base = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Demo { common, noise, out } => cmd_demo(base, &common, noise, &out),
        Command::Segment {
            common,
            seg,
            demo,
            out,
        } => cmd_segment(base, &common, &seg, &demo, out.as_deref()),
        Command::Optimize {
            common,
            opt,
            demo,
            segmentation,
            out,
        } => cmd_optimize(base, &common, &opt, &demo, &segmentation, &out, cli.verbose),
        Command::Report { runs, out } => cmd_report(&runs, &out),
        Command::Benchmark {
            common,
            seg,
            opt,
            seeds,
            out,
        } => {
            let mut c = base;
            apply_common(&mut c, &common)?;
            apply_segment(&mut c, &seg)?;
            apply_optimize(&mut c, &opt);
            if let Some(s) = seeds {
                c.seeds = s;
            }
            cmd_benchmark(c, &out, cli.verbose)
        }
        Command::Sensitivity {
            common,
            seg,
            opt,
            ms,
            betas,
            seeds,
            out,
        } => {
            let mut c = base;
            apply_common(&mut c, &common)?;
            apply_segment(&mut c, &seg)?;
            apply_optimize(&mut c, &opt);
            if let Some(s) = seeds {
                c.seeds = s;
            }
            cmd_sensitivity(c, &ms, &betas, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
