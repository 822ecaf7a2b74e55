use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use bgm_core::analysis::{log_grid, memory_report, regularity_scaling};
use bgm_core::catalog::{check_conditions, default_catalog, BernsteinFamily, CatalogError, Flavor};
use bgm_core::covariance::{read_covariance_csv, CovarianceTable};
use bgm_core::kernels::{kernel_eval, ProcessSpec};
use bgm_core::ou::{ou_cov_matrix, ou_simulate, OuSpec};
use bgm_core::simulate::{read_paths_csv, simulate, Method, PathEnsemble};
use bgm_core::validation::{covariance_deviations, cross_check_suite, Check};
use bgm_core::Error;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

mod config;

/// Bernstein-Gaussian motions: kernels, covariances, paths and diagnostics.
#[derive(Parser, Debug)]
#[command(name = "bgm", version, about)]
struct Cli {
    /// File with one `key=value` per line; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output CSV (standard output when absent).
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Condition checks for every catalog entry.
    Catalog,
    /// Kernel k(t, u) on a grid of u.
    Kernel {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        /// Grid of u, `start:stop:step`; may start below zero.
        #[arg(long, allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Covariance table.
    Cov {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        grid: Grid,
        #[arg(long, value_enum, default_value_t = RouteArg::Time)]
        route: RouteArg,
    },
    /// Sample paths, plus a `<out>.meta` sidecar.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Increment correlations and memory classification.
    Memory {
        #[command(flatten)]
        spec: SpecArgs,
        /// Largest lag.
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Small-scale behavior of the spectral scaling integral.
    Regularity {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.01)]
        a_min: f64,
        #[arg(long, default_value_t = 100.0)]
        a_max: f64,
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Ornstein-Uhlenbeck paths driven by the process.
    Ou {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        u0: f64,
        /// Write the analytic covariance on the grid instead of paths.
        #[arg(long)]
        analytic: bool,
    },
    /// Cross-check suite, or simulated against analytic covariance.
    Validate {
        /// Restrict the suite to one family (all catalog entries otherwise).
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        flavor: Option<String>,
        /// Analytic covariance CSV to compare `--paths` against.
        #[arg(long, requires = "paths")]
        against: Option<PathBuf>,
        #[arg(long, requires = "against")]
        paths: Option<PathBuf>,
        /// Band in standard errors.
        #[arg(long, default_value_t = 3.0)]
        z_max: f64,
    },
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Family, e.g. `stable:alpha=0.5` or `ml:alpha=0.3,beta=0.7`.
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "derivative")]
    flavor: String,
}

impl SpecArgs {
    fn build(&self) -> Result<ProcessSpec, Error> {
        ProcessSpec::parse(&self.family, &self.flavor)
    }
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Time grid `0:stop:step`.
    #[arg(long)]
    grid: Grid,
    #[arg(long, default_value_t = 1000)]
    n_paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "cholesky")]
    method: Method,
}

impl SimArgs {
    fn run(&self, spec: &ProcessSpec) -> Result<PathEnsemble, Error> {
        if self.grid.start != 0.0 {
            return Err(Error::InvalidArgument(format!("simulation grids start at 0, got {}", self.grid.start)));
        }
        let n_steps = self.grid.points.len() - 1;
        simulate(spec, n_steps, self.grid.step, self.n_paths, self.seed, self.method)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RouteArg {
    Time,
    Fourier,
}

/// Uniform grid `start:stop:step`.
#[derive(Clone, Debug)]
struct Grid {
    start: f64,
    step: f64,
    points: Vec<f64>,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("grid `{s}` is not of the form start:stop:step"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("grid `{s}`: {e}"));
        let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(format!("grid `{s}` has non-finite entries"));
        }
        if !(step > 0.0) || stop < start {
            return Err(format!("grid `{s}` needs step > 0 and stop >= start"));
        }
        let cells = (stop - start) / step;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 * cells.max(1.0) {
            return Err(format!("grid `{s}`: step does not divide stop - start"));
        }
        if n > 1e7 {
            return Err(format!("grid `{s}` has too many points"));
        }
        let points = (0..=n as usize).map(|k| start + k as f64 * step).collect();
        Ok(Self { start, step, points })
    }
}

/// Failure of a run, with its exit code.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidArgument(_)
            | Error::ConditionsNotMet { .. }
            | Error::InvalidFlavor { .. }
            | Error::Catalog(CatalogError::Parse { .. } | CatalogError::InvalidParameter { .. }) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numerical(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Numerical(format!("csv error: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::inject(argv, &Cli::command()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn target(out: Option<&Path>) -> String {
    out.map_or_else(|| "stdout".to_string(), |p| p.display().to_string())
}

fn csv_writer(out: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let out = cli.out.as_deref();
    match &cli.command {
        Cmd::Catalog => {
            let mut w = csv_writer(open_out(out)?);
            w.write_record(["family", "flavor", "cond_c", "cond_k", "a1", "a2", "b1", "b2", "admitted"])?;
            let entries = default_catalog();
            let mut admitted = 0;
            for (family, flavor) in &entries {
                let r = check_conditions(family, *flavor);
                let ok = r.admits(*flavor);
                admitted += ok as usize;
                w.write_record([
                    family.to_string(),
                    flavor.to_string(),
                    r.cond_c.status.to_string(),
                    r.cond_k.status.to_string(),
                    r.a1.status.to_string(),
                    r.a2.status.to_string(),
                    r.b1.status.to_string(),
                    r.b2.status.to_string(),
                    ok.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(format!("bgm catalog: {admitted} of {} entries admitted, written to {}", entries.len(), target(out)))
        }
        Cmd::Kernel { spec, t, grid } => {
            let spec = spec.build()?;
            let mut w = csv_writer(open_out(out)?);
            w.write_record(["t", "u", "k"])?;
            for &u in &grid.points {
                let k = kernel_eval(&spec, *t, u)?;
                w.write_record([format!("{t}"), format!("{u}"), format!("{k:.16e}")])?;
            }
            w.flush()?;
            Ok(format!("bgm kernel: {} values of k({t}, u) for {spec} written to {}", grid.points.len(), target(out)))
        }
        Cmd::Cov { spec, grid, route } => {
            let spec = spec.build()?;
            let table = match route {
                RouteArg::Time => CovarianceTable::time_domain(&spec, &grid.points)?,
                RouteArg::Fourier => CovarianceTable::fourier(&spec, &grid.points)?,
            };
            table.write_csv(open_out(out)?)?;
            let n = grid.points.len();
            Ok(format!("bgm cov: {n}x{n} {} table for {spec} written to {}", table.route.as_str(), target(out)))
        }
        Cmd::Simulate { spec, sim } => {
            let spec = spec.build()?;
            let ens = sim.run(&spec)?;
            write_ensemble(&ens, out)?;
            Ok(format!(
                "bgm simulate: {} paths of {spec} on {} points ({}) written to {}",
                ens.n_paths(),
                ens.grid().len(),
                ens.method_used(),
                target(out)
            ))
        }
        Cmd::Memory { spec, n } => {
            let spec = spec.build()?;
            let report = memory_report(&spec, *n)?;
            report.write_csv(open_out(out)?)?;
            let fit = report.decay_exponent_fit.map_or_else(|| "none".to_string(), |f| format!("{:.4}", f.exponent));
            Ok(format!(
                "bgm memory: {spec} is {} (decay exponent {fit}), written to {}",
                report.classification,
                target(out)
            ))
        }
        Cmd::Regularity { spec, a_min, a_max, points } => {
            let spec = spec.build()?;
            if !(*a_min > 0.0 && a_max > a_min) || *points < 2 {
                return Err(Failure::Usage("regularity needs 0 < a-min < a-max and at least 2 points".into()));
            }
            let report = regularity_scaling(&spec, &log_grid(*a_min, *a_max, *points))?;
            report.write_csv(open_out(out)?)?;
            let beta = report.local_time_beta.map_or_else(|| "none".to_string(), |b| format!("{b:.4}"));
            Ok(format!(
                "bgm regularity: {spec} exponent {:.4}, Hoelder bound {:.4}, local-time beta {beta}, written to {}",
                report.fitted_exponent,
                report.holder_gamma_bound,
                target(out)
            ))
        }
        Cmd::Ou { spec, sim, theta, sigma, u0, analytic } => {
            let spec = spec.build()?;
            let ou = OuSpec::new(spec.clone(), *theta, *sigma, *u0)?;
            if *analytic {
                let grid = &sim.grid.points;
                let m = ou_cov_matrix(&ou, grid)?;
                let mut w = csv_writer(open_out(out)?);
                w.write_record(["t", "s", "cov", "route"])?;
                for (i, t) in grid.iter().enumerate() {
                    for (j, s) in grid.iter().enumerate() {
                        w.write_record([format!("{t}"), format!("{s}"), format!("{:.16e}", m[(i, j)]), "ou".into()])?;
                    }
                }
                w.flush()?;
                return Ok(format!("bgm ou: analytic covariance for {spec} written to {}", target(out)));
            }
            let driver = sim.run(&spec)?;
            let ens = ou_simulate(&ou, &driver)?;
            write_ensemble(&ens, out)?;
            Ok(format!(
                "bgm ou: {} paths driven by {spec} (theta {theta}) written to {}",
                ens.n_paths(),
                target(out)
            ))
        }
        Cmd::Validate { family, flavor, against, paths, z_max } => match (against, paths) {
            (Some(cov), Some(paths)) => validate_against(cov, paths, *z_max, out),
            _ => validate_suite(family.as_deref(), flavor.as_deref(), out),
        },
    }
}

fn write_ensemble(ens: &PathEnsemble, out: Option<&Path>) -> Result<(), Failure> {
    ens.write_csv(open_out(out)?)?;
    match out {
        Some(p) => {
            let mut meta = p.as_os_str().to_owned();
            meta.push(".meta");
            let mut f = BufWriter::new(File::create(PathBuf::from(meta))?);
            ens.write_metadata(&mut f)?;
            f.flush()?;
        }
        None => log::info!("no --out given, metadata sidecar skipped"),
    }
    for w in ens.warnings() {
        log::warn!("{w}");
    }
    Ok(())
}

fn validate_suite(family: Option<&str>, flavor: Option<&str>, out: Option<&Path>) -> Result<String, Failure> {
    let specs: Vec<ProcessSpec> = match family {
        Some(f) => {
            let family: BernsteinFamily = f.parse().map_err(Error::from)?;
            let flavors = match flavor {
                Some(fl) => vec![fl.parse::<Flavor>().map_err(Error::from)?],
                None => vec![Flavor::Derivative, Flavor::Integral],
            };
            let admitted: Vec<ProcessSpec> =
                flavors.iter().filter_map(|fl| ProcessSpec::new(family.clone(), *fl).ok()).collect();
            if admitted.is_empty() {
                // surface the reason
                ProcessSpec::new(family, flavors[0])?;
            }
            admitted
        }
        None => default_catalog().into_iter().filter_map(|(f, fl)| ProcessSpec::new(f, fl).ok()).collect(),
    };
    let checks: Vec<Check> = specs.iter().flat_map(cross_check_suite).collect();
    let mut w = csv_writer(open_out(out)?);
    w.write_record(["check", "subject", "value", "threshold", "pass", "detail"])?;
    for c in &checks {
        log::info!("{c}");
        w.write_record([
            c.name.clone(),
            c.subject.clone(),
            format!("{:e}", c.value),
            format!("{:e}", c.threshold),
            c.passed.to_string(),
            c.detail.clone(),
        ])?;
    }
    w.flush()?;
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        eprintln!("{c}");
    }
    if failed.is_empty() {
        Ok(format!("bgm validate: {} checks over {} specs passed", checks.len(), specs.len()))
    } else {
        Err(Failure::Numerical(format!("bgm validate: {} of {} checks failed", failed.len(), checks.len())))
    }
}

fn validate_against(cov: &Path, paths: &Path, z_max: f64, out: Option<&Path>) -> Result<String, Failure> {
    let open = |p: &Path| File::open(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())));
    let (cov_grid, analytic) = read_covariance_csv(open(cov)?)?;
    let (path_grid, matrix) = read_paths_csv(open(paths)?)?;
    let devs = covariance_deviations(&path_grid, &matrix, &cov_grid, &analytic)?;
    let mut w = csv_writer(open_out(out)?);
    w.write_record(["t", "s", "empirical", "analytic", "std_error", "z", "pass"])?;
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for d in &devs {
        // both sides vanish at t = 0
        let z = if d.std_error == 0.0 && d.analytic.abs() <= 1e-12 && d.empirical.abs() <= 1e-12 { 0.0 } else { d.z() };
        let ok = z.abs() <= z_max;
        outside += !ok as usize;
        worst = worst.max(z.abs());
        w.write_record([
            format!("{}", d.t),
            format!("{}", d.s),
            format!("{:.16e}", d.empirical),
            format!("{:.16e}", d.analytic),
            format!("{:.6e}", d.std_error),
            format!("{z:.4}"),
            ok.to_string(),
        ])?;
    }
    w.flush()?;
    let summary = format!(
        "bgm validate: {} of {} covariance entries within {z_max} standard errors (worst |z| {worst:.3}), {} paths",
        devs.len() - outside,
        devs.len(),
        matrix.nrows()
    );
    if outside == 0 {
        Ok(summary)
    } else {
        Err(Failure::Numerical(summary))
    }
}
