//! Command-line experiment runner: Monte-Carlo sweeps over
//! (n, m, k, noise level, ensemble, algorithm) with CSV and SVG output.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::Parser;
use nalgebra::DVector;

use tbp::error::{Error, Result};
use tbp::harness::plot::{emit_amplitude_scatter, emit_plot, PlotKind};
use tbp::harness::{run_sweep, AlgoSpec, Algorithm, ExperimentConfig, NoiseModel, SnrMode};
use tbp::recovery::LassoConfig;
use tbp::{
    basis_pursuit, gen_matrix, gen_measurement, gen_signal, lasso, AmplitudeMode, Ensemble,
    NoiseSpec, RngStream, SignMode, ToleranceSet,
};

/// Sparse sign-pattern recovery benchmarks.
///
/// Exactly one of --m/--m-grid, one of --k/--k-grid, and one of
/// --snr/--theta-grid must be set (directly or through --config).
/// A config file holds the same keys as the long flags (without the
/// leading dashes), one `key=value` per line; flags override the file.
#[derive(Debug, Parser)]
#[command(name = "tbp", version, about)]
struct Cli {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Signal dimension.
    #[arg(long)]
    n: Option<usize>,

    /// Measurement count (per block for tbp-ols, which takes 3m in total).
    #[arg(long)]
    m: Option<usize>,

    /// Sparsity level.
    #[arg(long)]
    k: Option<usize>,

    /// Sparsity grid LO:HI:STEP (inclusive).
    #[arg(long, value_name = "LO:HI:STEP")]
    k_grid: Option<String>,

    /// Measurement grid LO:HI:STEP (inclusive).
    #[arg(long, value_name = "LO:HI:STEP")]
    m_grid: Option<String>,

    /// Matrix ensemble: gaussian | bernoulli.
    #[arg(long)]
    ensemble: Option<String>,

    /// Noise model: output | input-det | input-gauss.
    #[arg(long)]
    noise: Option<String>,

    /// Fixed SNR: noise variance is 1/SNR.
    #[arg(long)]
    snr: Option<f64>,

    /// Log-spaced theta grid LO:HI:POINTS in log10 units
    /// (e.g. -2:2:13 for 13 points from 1e-2 to 1e2);
    /// sets the noise through 1/sigma = (2*sqrt(12 log n) + 2)*theta.
    #[arg(long, value_name = "LO:HI:POINTS", allow_hyphen_values = true)]
    theta_grid: Option<String>,

    /// Monte-Carlo trials per grid point.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; every trial seed derives from it deterministically.
    #[arg(long)]
    seed: Option<u64>,

    /// Algorithm to run: tbp | tbp-ols | lasso | maxcorr | ml (repeatable).
    #[arg(long = "algo")]
    algo: Vec<String>,

    /// LASSO penalty weight.
    #[arg(long)]
    lambda: Option<f64>,

    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Plot kind: success-vs-k | success-vs-m | success-vs-theta |
    /// amplitude-scatter. Written next to --out with an .svg extension.
    #[arg(long)]
    plot: Option<String>,

    /// Worker threads (default: all cores, capped by TBP_MAX_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(mut cli: Cli) -> Result<()> {
    if let Some(path) = &cli.config {
        let file = parse_config_file(path)?;
        merge_config(&mut cli, &file)?;
    }

    let n = cli.n.ok_or_else(|| Error::Config("--n is required".into()))?;
    let m_grid = one_of_usize_grid(cli.m, cli.m_grid.as_deref(), "--m", "--m-grid")?;
    let k_grid = one_of_usize_grid(cli.k, cli.k_grid.as_deref(), "--k", "--k-grid")?;
    let ensemble = match cli.ensemble.as_deref() {
        None | Some("gaussian") => Ensemble::Gaussian,
        Some("bernoulli") => Ensemble::Bernoulli,
        Some(other) => return Err(Error::Config(format!("unknown ensemble '{other}'"))),
    };
    let noise = match cli.noise.as_deref() {
        None | Some("output") => NoiseModel::Output,
        Some(s) => NoiseModel::parse(s)?,
    };
    let snr_mode = match (cli.snr, cli.theta_grid.as_deref()) {
        (Some(snr), None) => SnrMode::FixedSnr(snr),
        (None, Some(grid)) => SnrMode::ThetaScan(parse_theta_grid(grid)?),
        (Some(_), Some(_)) => {
            return Err(Error::Config("--snr and --theta-grid are exclusive".into()))
        }
        (None, None) => return Err(Error::Config("one of --snr/--theta-grid is required".into())),
    };
    if cli.algo.is_empty() {
        return Err(Error::Config("at least one --algo is required".into()));
    }
    let algos: Vec<AlgoSpec> = cli
        .algo
        .iter()
        .map(|s| {
            Algorithm::parse(s).map(|algo| AlgoSpec {
                algo,
                lambda: if algo == Algorithm::Lasso { cli.lambda } else { None },
            })
        })
        .collect::<Result<_>>()?;

    let cfg = ExperimentConfig {
        n,
        m_grid,
        k_grid,
        ensemble,
        noise,
        snr_mode,
        algos,
        trials: cli.trials.unwrap_or(1),
        master_seed: cli.seed.unwrap_or(0),
        out: cli.out.clone(),
    };

    let plot_kind = cli.plot.as_deref().map(PlotKind::parse).transpose()?;
    if plot_kind == Some(PlotKind::AmplitudeScatter) {
        return amplitude_scatter(&cfg, &cli);
    }

    let table = run_sweep(&cfg, &ToleranceSet::default(), cli.workers)?;

    println!("algo            m     k      snr        theta   success  failures");
    for g in &table.groups {
        println!(
            "{:<12} {:>5} {:>5} {:>9.3} {:>9}  {:>7.3}  {:>8}",
            g.point.algo.label(),
            g.point.m,
            g.point.k,
            g.point.snr,
            g.point
                .theta
                .map_or("-".to_string(), |t| format!("{t:.4}")),
            g.success_prob,
            g.failures
        );
    }
    if let Some(path) = &cfg.out {
        println!("wrote {}", path.display());
    }

    if let Some(kind) = plot_kind {
        let out = cfg
            .out
            .as_ref()
            .ok_or_else(|| Error::Config("--plot needs --out for the file location".into()))?;
        let svg = out.with_extension("svg");
        emit_plot(&table, kind, &svg)?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}

/// One seeded instance, basis-pursuit vs LASSO amplitudes.
fn amplitude_scatter(cfg: &ExperimentConfig, cli: &Cli) -> Result<()> {
    cfg.validate()?;
    let grid = cfg.grid();
    let points: Vec<_> = grid
        .iter()
        .filter(|p| p.algo != Algorithm::Lasso)
        .collect();
    if points.len() != 1 {
        return Err(Error::Config(
            "amplitude-scatter needs a single grid point (one m, one k, one noise level)".into(),
        ));
    }
    let point = points[0];
    let lambda = cli
        .lambda
        .ok_or_else(|| Error::Config("amplitude-scatter needs --lambda for the LASSO side".into()))?;
    let out = cfg
        .out
        .as_ref()
        .ok_or_else(|| Error::Config("amplitude-scatter needs --out".into()))?;

    let seed = tbp::harness::derive_trial_seed(cfg.master_seed, point, 0);
    let g = gen_matrix(point.m, point.n, point.ensemble, RngStream::new(seed, 0))?;
    let x = gen_signal(
        point.n,
        point.k,
        SignMode::RandomSigns,
        AmplitudeMode::Unit,
        RngStream::new(seed, 1),
    )?;
    let sigma = 1.0 / point.snr.sqrt();
    let (y, _) = gen_measurement(
        &g,
        &x,
        &NoiseSpec::OutputGaussian { sigma },
        RngStream::new(seed, 3),
    )?;

    let bp = basis_pursuit(&g, &y, &ToleranceSet::default())?;
    let la = lasso(&g, &y, &LassoConfig::with_lambda(lambda))?;
    let svg = out.with_extension("svg");
    let series: Vec<(String, DVector<f64>)> = vec![
        ("basis pursuit".to_string(), bp.beta),
        (format!("lasso lambda={lambda}"), la.estimate),
    ];
    emit_amplitude_scatter(&x.to_dense(), &series, &svg)?;
    println!("wrote {}", svg.display());
    Ok(())
}

fn one_of_usize_grid(
    single: Option<usize>,
    grid: Option<&str>,
    single_flag: &str,
    grid_flag: &str,
) -> Result<Vec<usize>> {
    match (single, grid) {
        (Some(v), None) => Ok(vec![v]),
        (None, Some(spec)) => parse_usize_grid(spec),
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "{single_flag} and {grid_flag} are exclusive"
        ))),
        (None, None) => Err(Error::Config(format!(
            "one of {single_flag}/{grid_flag} is required"
        ))),
    }
}

fn parse_usize_grid(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("grid '{spec}' is not LO:HI:STEP")));
    }
    let lo: usize = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid start '{}'", parts[0])))?;
    let hi: usize = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid end '{}'", parts[1])))?;
    let step: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid step '{}'", parts[2])))?;
    if step == 0 || hi < lo {
        return Err(Error::Config(format!("grid '{spec}' is empty")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn parse_theta_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "theta grid '{spec}' is not LO:HI:POINTS (log10 units)"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad exponent '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad exponent '{}'", parts[1])))?;
    let points: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad point count '{}'", parts[2])))?;
    if points == 0 || hi < lo {
        return Err(Error::Config(format!("theta grid '{spec}' is empty")));
    }
    if points == 1 {
        return Ok(vec![10f64.powf(lo)]);
    }
    Ok((0..points)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect())
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Fill unset CLI fields from the config file (flags win).
fn merge_config(cli: &mut Cli, file: &HashMap<String, String>) -> Result<()> {
    fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Config(format!("bad value '{v}' for key '{key}'")))
    }
    for (key, value) in file {
        match key.as_str() {
            "n" if cli.n.is_none() => cli.n = Some(parse(key, value)?),
            "m" if cli.m.is_none() => cli.m = Some(parse(key, value)?),
            "k" if cli.k.is_none() => cli.k = Some(parse(key, value)?),
            "k-grid" if cli.k_grid.is_none() => cli.k_grid = Some(value.clone()),
            "m-grid" if cli.m_grid.is_none() => cli.m_grid = Some(value.clone()),
            "ensemble" if cli.ensemble.is_none() => cli.ensemble = Some(value.clone()),
            "noise" if cli.noise.is_none() => cli.noise = Some(value.clone()),
            "snr" if cli.snr.is_none() => cli.snr = Some(parse(key, value)?),
            "theta-grid" if cli.theta_grid.is_none() => cli.theta_grid = Some(value.clone()),
            "trials" if cli.trials.is_none() => cli.trials = Some(parse(key, value)?),
            "seed" if cli.seed.is_none() => cli.seed = Some(parse(key, value)?),
            "algo" if cli.algo.is_empty() => {
                cli.algo = value.split(',').map(|s| s.trim().to_string()).collect();
            }
            "lambda" if cli.lambda.is_none() => cli.lambda = Some(parse(key, value)?),
            "out" if cli.out.is_none() => cli.out = Some(PathBuf::from(value)),
            "plot" if cli.plot.is_none() => cli.plot = Some(value.clone()),
            "workers" if cli.workers.is_none() => cli.workers = Some(parse(key, value)?),
            // A flag already set on the command line wins silently.
            "n" | "m" | "k" | "k-grid" | "m-grid" | "ensemble" | "noise" | "snr"
            | "theta-grid" | "trials" | "seed" | "algo" | "lambda" | "out" | "plot"
            | "workers" => {}
            other => {
                return Err(Error::Config(format!("unknown config key '{other}'")));
            }
        }
    }
    Ok(())
}
