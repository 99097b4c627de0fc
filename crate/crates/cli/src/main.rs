//! `wcmdp`: command-line front end for relaxed-LP solves, degeneracy
//! reports, Monte Carlo campaigns, rate studies and the screening case study.
//!
//! Exit codes: 0 success, 1 error or failed validation, 2 degenerate verdict
//! from `check-degeneracy`.

mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use wcmdp::casestudy::{Preset, Scenario, ScenarioFile, ScreeningParams};
use wcmdp::degeneracy::is_nondegenerate;
use wcmdp::model::{validate_model, ConfigVector, WcMdpModel};
use wcmdp::policies::{PolicyConfig, PolicyKind};
use wcmdp::relaxation::solve_relaxed;
use wcmdp::rounding::RoundingMethod;
use wcmdp::simulator::{evaluate_against, rate_study, to_csv};
use wcmdp::{Config, Model, Tolerances};

#[derive(Parser, Debug)]
#[command(name = "wcmdp", version, about = "LP-update policies for finite-horizon weakly coupled MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model against its structural invariants.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Feasibility tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Solve the relaxed LP and print its value.
    Relax {
        #[command(flatten)]
        model: ModelArgs,
        /// Write the optimal trajectory as JSON.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Rank test of the active constraint system at every epoch.
    CheckDegeneracy {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo evaluation of one policy for each N.
    Simulate(CampaignArgs),
    /// Gap against N with a log-log slope fit and plot.
    RateStudy {
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Selective LP-update against the occupation-measure policy on the
    /// screening model.
    Casestudy(CasestudyArgs),
}

/// Run configuration shared by every command that needs a model.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Model JSON file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    model: Option<PathBuf>,
    /// Built-in instance, e.g. `counterexample:b=0.3` or `screening:scarce,fairness`.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Initial configuration as a comma-separated list; defaults to the
    /// preset's own, or uniform for model files.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    m0: Option<Vec<f64>>,
    /// Override the fairness constraints of a screening preset.
    #[arg(long)]
    fairness: Option<OnOff>,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "lp-update-full", value_parser = parse_policy)]
    policy: PolicyKind,
    #[arg(long, default_value = "floor", value_parser = parse_rounding)]
    rounding: RoundingMethod,
    /// Population sizes, comma separated.
    #[arg(long = "N", value_name = "LIST", value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CasestudyArgs {
    /// Scenarios, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "scarce,abundant", conflicts_with = "scenario_file")]
    scenario: Vec<ScenarioArg>,
    /// Scenario preset file `{"scenario": ..., "fairness": ...}`.
    #[arg(long, value_name = "PATH")]
    scenario_file: Option<PathBuf>,
    /// Restrict to one fairness setting; both are run by default.
    #[arg(long)]
    fairness: Option<OnOff>,
    #[arg(long, default_value = "floor", value_parser = parse_rounding)]
    rounding: RoundingMethod,
    #[arg(long = "N", value_name = "LIST", value_delimiter = ',', default_value = "20,50,100,200")]
    n: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn flag(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Scarce,
    Abundant,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Scarce => Scenario::Scarce,
            ScenarioArg::Abundant => Scenario::Abundant,
        }
    }
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: wcmdp::Error| e.to_string())
}

fn parse_rounding(s: &str) -> Result<RoundingMethod, String> {
    s.parse().map_err(|e: wcmdp::Error| e.to_string())
}

fn load(args: &ModelArgs) -> Result<(Model, Config)> {
    let (model, default_m0) = match (&args.model, &args.preset) {
        (Some(path), _) => {
            let model = WcMdpModel::<f64>::from_json_file(path).with_context(|| format!("reading {}", path.display()))?;
            let d = model.num_states();
            (model, ConfigVector::new(vec![1.0 / d as f64; d]))
        }
        (None, Some(name)) => {
            let mut preset = Preset::parse(name)?;
            if let Some(f) = args.fairness {
                preset = preset.with_fairness(f.flag());
            }
            preset.instantiate::<f64>()?
        }
        (None, None) => bail!("either --model or --preset is required"),
    };
    let m0 = match &args.m0 {
        Some(v) => {
            let m = ConfigVector::new(v.clone());
            if m.len() != model.num_states() {
                bail!("--m0 has {} entries, the model has {} states", m.len(), model.num_states());
            }
            m.check(None, 1e-9)?;
            m
        }
        None => default_m0,
    };
    Ok((model, m0))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validate(model: &ModelArgs, tol: Option<f64>) -> Result<ExitCode> {
    let (model, _) = load(model)?;
    let mut tolerances = Tolerances::default();
    if let Some(t) = tol {
        tolerances = tolerances.with_feasibility(t);
    }
    let violations = validate_model(&model, &tolerances);
    if violations.is_empty() {
        println!(
            "ok: {} states, {} action values, {} resources, horizon {}",
            model.num_states(),
            model.num_action_values(),
            model.num_resources(),
            model.horizon()
        );
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        println!("violation: {v}");
    }
    println!("{} violation(s)", violations.len());
    Ok(ExitCode::from(1))
}

fn relax(model: &ModelArgs, output: Option<&Path>) -> Result<ExitCode> {
    let (model, m0) = load(model)?;
    let sol = solve_relaxed(&model, &m0, 0)?;
    println!("{:.10}", sol.value);
    if let Some(path) = output {
        std::fs::write(path, serde_json::to_string_pretty(&sol.to_json())? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn check_degeneracy(model: &ModelArgs) -> Result<ExitCode> {
    let (model, m0) = load(model)?;
    let sol = solve_relaxed(&model, &m0, 0)?;
    let report = is_nondegenerate(&model, &sol);
    println!("{report}");
    Ok(if report.nondegenerate() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn policy_config(args: &CampaignArgs) -> PolicyConfig<f64> {
    PolicyConfig::new(args.policy).with_rounding(args.rounding)
}

fn simulate(args: &CampaignArgs) -> Result<ExitCode> {
    let (model, m0) = load(&args.model)?;
    let v_rel = solve_relaxed(&model, &m0, 0)?.value;
    let cfg = policy_config(args);
    let rows = args
        .n
        .iter()
        .map(|&n| evaluate_against(&model, &cfg, &m0, n, args.reps, args.seed, v_rel))
        .collect::<wcmdp::Result<Vec<_>>>()?;
    write_output(args.csv.as_deref(), &to_csv(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn run_rate_study(args: &CampaignArgs, svg_path: Option<&Path>) -> Result<ExitCode> {
    let (model, m0) = load(&args.model)?;
    let study = rate_study(&model, &policy_config(args), &m0, &args.n, args.reps, args.seed)?;
    write_output(args.csv.as_deref(), &to_csv(&study.rows))?;
    match study.slope {
        Some(s) => eprintln!("slope: {s:.4}"),
        None => eprintln!("slope: undefined (fewer than two positive gaps)"),
    }
    if let Some(path) = svg_path {
        std::fs::write(path, svg::rate_plot(&study.rows, study.slope)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

pub const CASESTUDY_HEADER: &str = "scenario,fairness,policy,N,mean,ci95,gap,updates_mean";

fn casestudy(args: &CasestudyArgs) -> Result<ExitCode> {
    let runs: Vec<(Scenario, Vec<bool>)> = match &args.scenario_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file = ScenarioFile::parse(&text)?;
            vec![(file.scenario, vec![file.fairness])]
        }
        None => {
            let fair = match args.fairness {
                Some(f) => vec![f.flag()],
                None => vec![true, false],
            };
            args.scenario.iter().map(|&s| (s.into(), fair.clone())).collect()
        }
    };
    let mut csv = String::new();
    writeln!(csv, "{CASESTUDY_HEADER}")?;
    let mut panels = Vec::new();
    for (scenario, fairness) in runs {
        let mut series = Vec::new();
        for fair in fairness {
            let params: ScreeningParams = scenario.params(fair);
            let (model, m0) = Preset::Screening(params).instantiate::<f64>()?;
            let v_rel = solve_relaxed(&model, &m0, 0)?.value;
            for kind in [PolicyKind::LpUpdateSelective, PolicyKind::OccupationMeasure] {
                let cfg = PolicyConfig::new(kind).with_rounding(args.rounding);
                let mut points = Vec::new();
                for &n in &args.n {
                    let r = evaluate_against(&model, &cfg, &m0, n, args.reps, args.seed, v_rel)?;
                    writeln!(
                        csv,
                        "{},{},{},{},{:.12},{:.12},{:.12},{:.6}",
                        scenario.name(),
                        fair,
                        kind,
                        n,
                        r.mean,
                        r.ci95,
                        r.gap,
                        r.updates_mean
                    )?;
                    points.push(svg::Point { n, value: r.mean, ci95: r.ci95 });
                }
                let label = format!("{kind}, fairness {}", if fair { "on" } else { "off" });
                series.push(svg::Series { label, points });
            }
        }
        panels.push(svg::Panel { title: format!("{} scenario", scenario.name()), series });
    }
    write_output(args.csv.as_deref(), &csv)?;
    if let Some(path) = &args.svg {
        let plot = svg::panels_plot("screening case study", &panels);
        std::fs::write(path, plot).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Validate { model, tol } => validate(model, *tol),
        Command::Relax { model, output } => relax(model, output.as_deref()),
        Command::CheckDegeneracy { model } => check_degeneracy(model),
        Command::Simulate(args) => simulate(args),
        Command::RateStudy { campaign, svg } => run_rate_study(campaign, svg.as_deref()),
        Command::Casestudy(args) => casestudy(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
