use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use piecemeal::config::{read_config, Mode, RunConfig};
use piecemeal::modular::precision_bounds;
use piecemeal::monte_carlo::{
    photon_budget, run_trial, sweep, trial_rng, uniform_angle, DOMAIN_PIECEMEAL,
};
use piecemeal::output::{emit_results, render_csv, write_results, ResultRow};
use piecemeal::reference::reference_sweep;
use piecemeal::units::{arcsec_to_rad, rad_to_arcsec, rad_to_mas};
use piecemeal::{Error, Result, SingleBaselineModel};

#[derive(Parser)]
#[command(
    name = "piecemeal",
    version,
    about = "Doubling-baseline phase reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct one source angle at every M in the grid.
    Estimate(RunArgs),
    /// Failure probability against photon number.
    Sweep(RunArgs),
    /// Sweep plus the analytic single-baseline curve on the same N grid.
    Compare(RunArgs),
    /// Sweep in differential mode against a reference object.
    Reference(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output CSV; printed to stdout when neither this nor `out` is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs, mode: Mode) -> Result<RunConfig> {
    let mut cfg = read_config(&args.config)?;
    cfg.mode = mode;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Error::Config("--trials must be at least 1".into()));
        }
        cfg.trials = trials;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.require_seed()?;
    Ok(cfg)
}

fn meta_text(cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    for (k, v) in cfg.derived_summary()? {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s.push_str(&cfg.to_config_text());
    Ok(s)
}

fn print_derived(cfg: &RunConfig) -> Result<()> {
    let line = cfg
        .derived_summary()?
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    eprintln!("{line}");
    Ok(())
}

fn emit(cfg: &RunConfig, rows: &[ResultRow], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            write_results(p, rows, &meta_text(cfg)?)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{}", render_csv(rows)),
    }
    Ok(())
}

fn estimate(cfg: &RunConfig) -> Result<()> {
    let array = cfg.array()?;
    let seed = cfg.require_seed()?;
    let theta = match cfg.theta_as {
        Some(t) => arcsec_to_rad(t),
        None => uniform_angle(&array, &mut trial_rng(seed, DOMAIN_PIECEMEAL, 0, u64::MAX)),
    };
    let (_, dtheta) = precision_bounds(&array);
    println!("theta_as = {}", rad_to_arcsec(theta));
    println!("delta_theta_mas = {}", rad_to_mas(dtheta));
    println!("M,N,theta_estimate_as,error_mas,success");
    for &m in &cfg.m_grid {
        let mut rng = trial_rng(seed, DOMAIN_PIECEMEAL, m, 0);
        let o = run_trial(theta, &array, &cfg.noise, m, cfg.options, &mut rng)?;
        let est = piecemeal::modular::phi_to_theta(o.estimated_phi1, &array)?;
        println!(
            "{},{:.6e},{},{:.6},{}",
            m,
            photon_budget(m, &array, &cfg.noise),
            rad_to_arcsec(est),
            rad_to_mas(est - theta),
            o.success
        );
    }
    Ok(())
}

fn run_sweep(cfg: &RunConfig) -> Result<()> {
    let array = cfg.array()?;
    let seed = cfg.require_seed()?;
    let result = sweep(
        &array,
        &cfg.noise,
        &cfg.m_grid,
        cfg.trials,
        seed,
        cfg.options,
    )?;
    emit(
        cfg,
        &result.result_rows(),
        cfg.out.as_deref().map(Path::new),
    )
}

fn run_reference(cfg: &RunConfig) -> Result<()> {
    let array = cfg.array()?;
    let seed = cfg.require_seed()?;
    let scenario = cfg.reference_scenario()?;
    let result = reference_sweep(
        &scenario,
        &array,
        &cfg.noise,
        &cfg.m_grid,
        cfg.decorrelation,
        cfg.trials,
        seed,
        cfg.options,
    )?;
    emit(
        cfg,
        &result.result_rows(),
        cfg.out.as_deref().map(Path::new),
    )
}

/// `<dir>/<stem>_<suffix>.csv` from the requested output path.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "compare".into());
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn compare(cfg: &RunConfig) -> Result<()> {
    let array = cfg.array()?;
    let seed = cfg.require_seed()?;
    let (_, dtheta) = precision_bounds(&array);
    let model = SingleBaselineModel::matching(&array, &cfg.noise);

    let result = sweep(
        &array,
        &cfg.noise,
        &cfg.m_grid,
        cfg.trials,
        seed,
        cfg.options,
    )?;
    let single: Vec<ResultRow> = result
        .rows
        .iter()
        .map(|r| {
            Ok(ResultRow {
                m: r.m,
                n_photons: r.n_photons,
                eps_mean: model.failure_at(r.n_photons, dtheta)?,
                eps_stderr: 0.0,
                trials: 0,
                seed,
            })
        })
        .collect::<Result<_>>()?;

    let out = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "compare.csv".into()));
    let meta = meta_text(cfg)?;
    let pm_path = sibling(&out, "piecemeal");
    let sb_path = sibling(&out, "single_baseline");
    emit_results(&result, &pm_path, &meta)?;
    write_results(&sb_path, &single, &meta)?;
    eprintln!("wrote {} and {}", pm_path.display(), sb_path.display());

    let n_single = model.photons_for_failure(0.01, dtheta)?;
    println!("single_baseline_photons_at_eps_0.01 = {n_single}");
    if let Some(r) = result
        .rows
        .iter()
        .find(|r| r.eps_mean() + 3.0 * r.eps_stderr() < 0.01)
    {
        println!("piecemeal_photons_at_eps_0.01 = {:.1}", r.n_photons);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (args, mode) = match &cli.command {
        Command::Estimate(a) => (a, Mode::Estimate),
        Command::Sweep(a) => (a, Mode::Sweep),
        Command::Compare(a) => (a, Mode::Compare),
        Command::Reference(a) => (a, Mode::Reference),
    };
    let cfg = load(args, mode)?;
    print_derived(&cfg)?;
    match mode {
        Mode::Estimate => estimate(&cfg),
        Mode::Sweep => run_sweep(&cfg),
        Mode::Compare => compare(&cfg),
        Mode::Reference => run_reference(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
