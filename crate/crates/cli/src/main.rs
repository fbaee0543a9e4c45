mod config;
mod csv;
mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dlgc::measures::Discriminant;
use dlgc::model::PhysicalParams;
use dlgc::selfcheck::{self, CheckConfig};
use dlgc::sweep::{self, Measure, SweepResult, SweepSpec};
use thiserror::Error;

use config::{FileConfig, Format, Value};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unstable operating point: {0}")]
    Unstable(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0} self-test check(s) failed")]
    CheckFailed(usize),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
            CliError::Unstable(_) => 3,
            CliError::Io(_) => 4,
            CliError::CheckFailed(_) => 5,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dlgc",
    version,
    about = "Steady-state entanglement, steering and discord between two rotating mirrors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML file with [params], [sweep], [output] and [check] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override, e.g. `mass_ng=60` (repeatable, wins over the file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,svg.
    #[arg(long)]
    formats: Option<String>,
    /// Worker threads for grid evaluation (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a single parameter point.
    Point {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a user-defined 1-D or 2-D grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis as name:start:stop:count (one or two).
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// Comma-separated subset of E,S12,S21,Ds,GGD.
        #[arg(long)]
        measures: Option<String>,
        /// Base name of the output files.
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// Regenerate one figure panel.
    Figure {
        /// fig2a..fig2d, fig3a..fig3d, fig4a, fig4b
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the oracle self-test battery.
    Check {
        /// Seed for the random states and drift matrices (overrides [check] seed)
        #[arg(long)]
        seed: Option<u64>,
        /// TOML file; only the [check] table is read
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the closed form without its factor-4 correction.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

struct Resolved {
    file: FileConfig,
    overrides: BTreeMap<String, Value>,
    out: PathBuf,
    formats: Vec<Format>,
    jobs: usize,
}

fn resolve(common: &Common) -> Result<Resolved, CliError> {
    let file = match &common.config {
        Some(path) => config::load_file_config(path)?,
        None => FileConfig::default(),
    };
    let mut overrides = file.params.clone();
    for item in &common.set {
        let (k, v) = config::parse_assignment(item)?;
        overrides.insert(k, v);
    }
    let formats = match &common.formats {
        Some(s) => Format::parse_list(s)?,
        None => file.formats.clone().unwrap_or(vec![Format::Csv, Format::Svg]),
    };
    Ok(Resolved {
        out: common
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        jobs: common.jobs.or(file.jobs).unwrap_or(0),
        formats,
        overrides,
        file,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn pair(v: [f64; 2]) -> String {
    format!("{:.6e}, {:.6e}", v[0], v[1])
}

fn point_report(p: &PhysicalParams) -> Result<(String, Option<dlgc::CorrelationSet>, f64), CliError> {
    let eval = sweep::evaluate_point(p).map_err(|e| CliError::Run(e.to_string()))?;
    let d = &eval.derived;
    let mut rows: Vec<(String, String)> = vec![
        ("detuning_mode".into(), p.detuning_mode.as_str().into()),
        ("inertia_kg_m2".into(), pair(d.inertia)),
        ("opto_coupling_g_rad_s".into(), pair(d.opto_coupling)),
        ("drive_amplitude_eps".into(), pair(d.drive_amplitude)),
        ("cavity_decay_rad_s".into(), pair(d.cavity_decay)),
        ("mirror_damping_rad_s".into(), pair(d.mirror_damping)),
        (
            "cavity_amplitude_abs".into(),
            pair([d.cavity_amplitude[0].norm(), d.cavity_amplitude[1].norm()]),
        ),
        ("steady_angle".into(), pair(d.steady_angle)),
        ("effective_detuning_rad_s".into(), pair(d.effective_detuning)),
        ("enhanced_coupling_G_rad_s".into(), pair(d.enhanced_coupling)),
        ("occupation_nbar".into(), pair(d.occupation)),
        ("omega_eff_rad_s".into(), pair(d.omega_eff)),
        ("fixed_point_iterations".into(), d.fixed_point_iterations.to_string()),
        ("stable".into(), eval.stability.stable.to_string()),
        (
            "spectral_abscissa_rad_s".into(),
            format!("{:.6e}", eval.stability.spectral_abscissa),
        ),
        (
            "spectral_abscissa_over_wphi".into(),
            format!("{:.6e}", eval.stability.spectral_abscissa / p.reference_omega()),
        ),
    ];
    let mut correlations = None;
    if let Some(s) = &eval.steady {
        let c = &s.correlations;
        rows.extend([
            ("lyapunov_residual".into(), format!("{:.3e}", s.residual)),
            ("E".into(), format!("{:.10}", c.log_negativity)),
            ("S12".into(), format!("{:.10}", c.steering_12)),
            ("S21".into(), format!("{:.10}", c.steering_21)),
            ("Ds".into(), format!("{:.10}", c.steering_asymmetry)),
            ("GGD".into(), format!("{:.10}", c.ggd)),
            ("nu_min_pt".into(), format!("{:.10}", c.nu_min_pt)),
            ("nu_min".into(), format!("{:.10}", c.nu_min)),
        ]);
        if let Some(w) = &c.ggd_warning {
            rows.push(("ggd_warning".into(), w.clone()));
        }
        correlations = Some(c.clone());
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut text = String::new();
    for (k, v) in rows {
        let _ = writeln!(text, "{k:<width$}  {v}");
    }
    Ok((text, correlations, eval.stability.spectral_abscissa))
}

fn cmd_point(common: &Common) -> Result<(), CliError> {
    let r = resolve(common)?;
    let p = config::apply_overrides(&PhysicalParams::default(), &r.overrides)?;
    let (text, correlations, abscissa) = point_report(&p)?;
    print!("{text}");
    let Some(c) = correlations else {
        return Err(CliError::Unstable(format!(
            "spectral abscissa {abscissa:.6e} rad/s >= 0; measures withheld"
        )));
    };
    if common.out.is_some() && r.formats.contains(&Format::Csv) {
        let spec = SweepSpec {
            base: p.clone(),
            axes: vec![],
            measures: Measure::ALL.to_vec(),
            preset: None,
            notes: vec![],
        };
        let mut s = csv::metadata_block(&sweep::metadata(&spec));
        s.push_str("E,S12,S21,Ds,GGD,nu_min_pt,stable\n");
        let fields: Vec<String> = [
            c.log_negativity,
            c.steering_12,
            c.steering_21,
            c.steering_asymmetry,
            c.ggd,
            c.nu_min_pt,
        ]
        .iter()
        .map(|&x| csv::number(x))
        .collect();
        let _ = writeln!(s, "{},1", fields.join(","));
        let path = write_file(&r.out, "point.csv", &s)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn emit(result: &SweepResult, name: &str, r: &Resolved) -> Result<(), CliError> {
    if r.formats.contains(&Format::Csv) {
        let path = write_file(&r.out, &format!("{name}.csv"), &csv::sweep_csv(result))?;
        eprintln!("wrote {}", path.display());
    }
    if r.formats.contains(&Format::Svg) {
        let spec = &result.spec;
        let measures: Vec<&str> = spec.measures.iter().map(|m| m.column()).collect();
        let title = format!("{name}: {}", measures.join(", "));
        let image = match spec.axes.get(1) {
            Some(a2) if a2.count > 8 => svg::heatmap(result, spec.measures[0], &title),
            _ => {
                let reference = spec
                    .measures
                    .contains(&Measure::Ds)
                    .then_some((std::f64::consts::LN_2, "ln 2"));
                svg::line_plot(result, &title, reference)
            }
        };
        let path = write_file(&r.out, &format!("{name}.svg"), &image)?;
        eprintln!("wrote {}", path.display());
    }
    summarize(result);
    Ok(())
}

fn summarize(result: &SweepResult) {
    let stable = result.rows.iter().filter(|r| r.is_stable()).count();
    eprintln!("{} points, {} stable", result.rows.len(), stable);
    for m in &result.spec.measures {
        let best = result
            .rows
            .iter()
            .filter_map(|r| r.measure(*m).map(|v| (v, &r.coords)))
            .fold(None::<(f64, &Vec<f64>)>, |acc, x| match acc {
                Some(a) if a.0 >= x.0 => Some(a),
                _ => Some(x),
            });
        if let Some((v, at)) = best {
            eprintln!("max {} = {v:.6} at {at:?}", m.column());
        }
    }
}

fn run_spec(spec: &SweepSpec, jobs: usize) -> Result<SweepResult, CliError> {
    sweep::run_sweep(spec, jobs).map_err(|e| match e {
        sweep::SweepError::Pool(msg) => CliError::Run(msg),
        other => CliError::Config(other.to_string()),
    })
}

fn cmd_sweep(
    common: &Common,
    axes: &[String],
    measures: &Option<String>,
    name: &str,
) -> Result<(), CliError> {
    let r = resolve(common)?;
    let base = config::apply_overrides(&PhysicalParams::default(), &r.overrides)?;
    let axes = if axes.is_empty() {
        r.file.axes.clone()
    } else {
        axes.iter()
            .map(|a| config::parse_axis(a))
            .collect::<Result<Vec<_>, _>>()?
    };
    let measures = match measures {
        Some(m) => config::parse_measures(m)?,
        None => r.file.measures.clone().unwrap_or(vec![Measure::E]),
    };
    let spec = SweepSpec {
        base,
        axes,
        measures,
        preset: None,
        notes: vec![],
    };
    let result = run_spec(&spec, r.jobs)?;
    emit(&result, name, &r)
}

fn cmd_figure(id: &str, common: &Common) -> Result<(), CliError> {
    let r = resolve(common)?;
    let mut spec = sweep::figure_preset(id).map_err(|e| CliError::Config(e.to_string()))?;
    spec.base = config::apply_overrides(&spec.base, &r.overrides)?;
    let result = run_spec(&spec, r.jobs)?;
    emit(&result, id, &r)
}

fn cmd_check(seed: Option<u64>, config: &Option<PathBuf>, inject_fault: bool) -> Result<(), CliError> {
    let file_seed = match config {
        Some(path) => config::load_file_config(path)?.seed,
        None => None,
    };
    let cfg = CheckConfig {
        seed: seed.or(file_seed).unwrap_or(selfcheck::DEFAULT_SEED),
        discriminant: if inject_fault {
            Discriminant::MissingFactorFour
        } else {
            Discriminant::Standard
        },
        ..CheckConfig::default()
    };
    println!("seed {}", cfg.seed);
    let outcomes = selfcheck::run_all(&cfg);
    let width = outcomes.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &outcomes {
        println!(
            "{} {:<width$}  worst {:.3e}  tol {:.1e}  cases {:>4}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance,
            c.cases,
            c.detail
        );
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Point { common } => cmd_point(common),
        Command::Sweep {
            common,
            axes,
            measures,
            name,
        } => cmd_sweep(common, axes, measures, name),
        Command::Figure { id, common } => cmd_figure(id, common),
        Command::Check {
            seed,
            config,
            inject_fault,
        } => cmd_check(*seed, config, *inject_fault),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(&e, CliError::Config(m) if m.contains("unknown parameter key")) {
                eprintln!("known parameter keys: {}", config::parameter_keys().collect::<Vec<_>>().join(", "));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
