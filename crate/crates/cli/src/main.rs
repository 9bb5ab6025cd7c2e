use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dsg_core::chart::{self, Chart};
use dsg_core::config::{self, parse_config_with_overrides};
use dsg_core::csv::write_timeseries;
use dsg_core::scenarios::{self, BUILTIN_NAMES};
use dsg_core::sim::{integrate, Column, Scenario, TimeSeries};
use dsg_core::stability::{
    braking_gain_criterion, detect_los, find_equilibria, power_angle_curve, revised_power_curve, BrakingCurveParams,
    LosEvent,
};
use dsg_core::DsgError;

const EXIT_USAGE: u8 = 2;
const EXIT_LOS: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

/// Phasor-domain simulator and stability toolkit for dual synchronous
/// generator (DSG) converter control.
#[derive(Parser)]
#[command(name = "dsg-lab", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Input {
    /// Config file, or the name of a built-in scenario.
    config: String,

    /// Override a config key, e.g. `--set dsg.k_q=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Output {
    /// Output directory.
    #[arg(short = 'o', long = "out", env = "DSG_LAB_OUT", default_value = ".")]
    out: PathBuf,

    /// Also write an SVG chart.
    #[arg(long)]
    chart: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory as CSV.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Columns drawn in the chart.
        #[arg(long, value_delimiter = ',', default_value = "delta_1,P_E,Q_E")]
        columns: Vec<String>,
    },
    /// Print the power-angle curve at the configured grid voltage and current limit.
    Curve {
        #[command(flatten)]
        input: Input,
        /// Add the revised power seen by the braking loop.
        #[arg(long)]
        braking: bool,
        /// Number of samples over (-pi, pi].
        #[arg(long, default_value_t = 360)]
        samples: usize,
        /// Write curve.csv (and curve.svg with --chart) here instead of printing.
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
        #[arg(long, requires = "out")]
        chart: bool,
    },
    /// List the equilibria of the plain and revised power-angle curves.
    Equilibria {
        #[command(flatten)]
        input: Input,
    },
    /// Evaluate the braking-gain stability criterion.
    CheckBraking {
        #[command(flatten)]
        input: Input,
    },
    /// Run built-in reproduction scenarios.
    Repro {
        /// One of fig4, fig5a, fig5b, fig6a, fig6b, fig8, or `all`.
        name: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<DsgError> for Failure {
    fn from(e: DsgError) -> Self {
        match e {
            DsgError::NonFinite { .. } | DsgError::EmptyTrajectory | DsgError::ZeroPower => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn load(input: &Input) -> Result<(String, Scenario), Failure> {
    let path = Path::new(&input.config);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let sc = parse_config_with_overrides(&text, &input.overrides).map_err(|e| match e {
            DsgError::Config { line, message } if line > 0 => {
                Failure::Usage(format!("{}:{line}: {message}", path.display()))
            }
            other => Failure::from(other),
        })?;
        let name = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        Ok((name, sc))
    } else if BUILTIN_NAMES.contains(&input.config.as_str()) {
        let sc = parse_config_with_overrides(&format!("base = {}", input.config), &input.overrides)?;
        Ok((input.config.clone(), sc))
    } else {
        Err(Failure::Usage(format!(
            "`{}` is neither a readable file nor a built-in scenario ({})",
            input.config,
            BUILTIN_NAMES.join(", ")
        )))
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))
}

struct RunReport {
    name: String,
    series: TimeSeries,
    los: Vec<LosEvent>,
    seconds: f64,
}

fn run(name: &str, sc: &Scenario) -> Result<RunReport, Failure> {
    let start = Instant::now();
    let series = integrate(sc)?;
    let los = detect_los(&series)?;
    Ok(RunReport {
        name: name.to_string(),
        series,
        los,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn write_outputs(report: &RunReport, output: &Output, columns: &[Column]) -> Result<Vec<PathBuf>, Failure> {
    create_dir(&output.out)?;
    let csv = output.out.join(format!("{}.csv", report.name));
    write_timeseries(&report.series, &csv)?;
    let mut written = vec![csv];
    if output.chart {
        let svg = output.out.join(format!("{}.svg", report.name));
        let c = chart::timeseries_chart(&report.series, columns, &report.name)?;
        chart::write_chart(&c, &svg)?;
        written.push(svg);
    }
    Ok(written)
}

fn summarize(report: &RunReport) -> String {
    let mut lines = vec![format!(
        "{}: {} samples in {:.3} s",
        report.name,
        report.series.len(),
        report.seconds
    )];
    if let Some(s) = report.series.last() {
        lines.push(format!(
            "  final t={} delta_1={:.6} freq={:.6} P_E={:.6} Q_E={:.6} V_mag={:.6} I_d={:.6}",
            s.t, s.delta_1, s.freq, s.p_e, s.q_e, s.v_mag, s.i_d
        ));
    }
    match report.los.first() {
        Some(first) => lines.push(format!(
            "  loss of synchronism: {} pole slip(s), first at t={:.4} s",
            report.los.len(),
            first.t
        )),
        None => lines.push("  synchronism maintained".to_string()),
    }
    lines.join("\n")
}

fn parse_columns(names: &[String]) -> Result<Vec<Column>, Failure> {
    names
        .iter()
        .map(|n| {
            Column::from_name(n.trim()).ok_or_else(|| {
                let all: Vec<_> = Column::ALL.iter().map(|c| c.name()).collect();
                Failure::Usage(format!("unknown column `{n}` (expected one of {})", all.join(", ")))
            })
        })
        .collect()
}

fn simulate(input: &Input, output: &Output, columns: &[String]) -> CmdResult {
    let columns = parse_columns(columns)?;
    let (name, sc) = load(input)?;
    let report = run(&name, &sc)?;
    println!("{}", summarize(&report));
    for p in write_outputs(&report, output, &columns)? {
        println!("  wrote {}", p.display());
    }
    Ok(if report.los.is_empty() { 0 } else { EXIT_LOS })
}

fn curve(input: &Input, braking: bool, samples: usize, out: Option<&Path>, with_chart: bool) -> CmdResult {
    let (_, sc) = load(input)?;
    let plain = power_angle_curve(sc.dsg.i_max, &sc.grid, samples)?;
    let revised = if braking {
        Some(revised_power_curve(
            &BrakingCurveParams::from_setup(&sc.grid, &sc.dsg, sc.grid.u),
            samples,
        )?)
    } else {
        None
    };
    let mut text = String::from(if braking { "delta_1,P_E,S\n" } else { "delta_1,P_E\n" });
    for (k, (d, p)) in plain.iter().enumerate() {
        match &revised {
            Some(r) => text.push_str(&format!("{d:.16e},{p:.16e},{:.16e}\n", r[k].1)),
            None => text.push_str(&format!("{d:.16e},{p:.16e}\n")),
        }
    }
    let Some(dir) = out else {
        print!("{text}");
        return Ok(0);
    };
    create_dir(dir)?;
    let csv = dir.join("curve.csv");
    fs::write(&csv, text).map_err(|e| Failure::Usage(format!("{}: {e}", csv.display())))?;
    println!("wrote {}", csv.display());
    if with_chart {
        let mut c = Chart::new("power-angle curve", "delta_1 [rad]", "power [p.u.]").with_series("P_E", plain);
        if let Some(r) = revised {
            c = c.with_series("S", r);
        }
        let svg = dir.join("curve.svg");
        chart::write_chart(&c, &svg)?;
        println!("wrote {}", svg.display());
    }
    Ok(0)
}

fn equilibria(input: &Input) -> CmdResult {
    let (_, sc) = load(input)?;
    let params = BrakingCurveParams::from_setup(&sc.grid, &sc.dsg, sc.grid.u);
    println!("P_ref = {}, U = {}, I_max = {}", sc.dsg.p_ref, sc.grid.u, sc.dsg.i_max);
    for (label, braking) in [("power-angle curve", false), ("revised power curve", true)] {
        let roots = find_equilibria(sc.dsg.p_ref, &params, braking)?;
        println!("{label}:");
        if roots.is_empty() {
            println!("  none (P_ref not reachable)");
        }
        for e in roots {
            println!(
                "  delta_1 = {:.10} rad  slope = {:+.6}  {}",
                e.delta_1,
                e.curve_slope,
                if e.stable { "stable" } else { "unstable" }
            );
        }
    }
    Ok(0)
}

fn check_braking(input: &Input) -> CmdResult {
    let (_, sc) = load(input)?;
    let d = &sc.dsg;
    let x = sc.grid.reactance();
    let c = braking_gain_criterion(d.k_q, d.k_p, d.p_ref, d.i_max, x)?;
    println!("K_Q/K_p = {}", d.k_q / d.k_p);
    println!("P_ref/(I_max X) = {}", d.p_ref / (d.i_max * x));
    println!("criterion {} (margin = {})", if c.holds { "holds" } else { "violated" }, c.margin);
    Ok(0)
}

fn repro(name: &str, output: &Output) -> CmdResult {
    let names: Vec<&str> = if name == "all" {
        BUILTIN_NAMES.to_vec()
    } else if BUILTIN_NAMES.contains(&name) {
        vec![name]
    } else {
        return Err(Failure::Usage(format!(
            "unknown scenario `{name}` (expected one of {}, all)",
            BUILTIN_NAMES.join(", ")
        )));
    };
    let reports: Vec<Result<RunReport, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = names
            .iter()
            .map(|&n| s.spawn(move || run(n, &scenarios::builtin(n)?)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario worker panicked"))
            .collect()
    });
    let mut code = 0;
    for r in reports {
        let report = r?;
        println!("{}", summarize(&report));
        for p in write_outputs(&report, output, &[Column::Delta1, Column::PE, Column::QE])? {
            println!("  wrote {}", p.display());
        }
        let lost = !report.los.is_empty();
        if names.len() == 1 {
            code = if lost { EXIT_LOS } else { 0 };
        } else if lost != scenarios::expects_los(&report.name) {
            println!("  unexpected outcome");
            code = EXIT_LOS;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", config::defaults_text());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(EXIT_USAGE);
    };
    let result = match &command {
        Command::Simulate { input, output, columns } => simulate(input, output, columns),
        Command::Curve {
            input,
            braking,
            samples,
            out,
            chart,
        } => curve(input, *braking, *samples, out.as_deref(), *chart),
        Command::Equilibria { input } => equilibria(input),
        Command::CheckBraking { input } => check_braking(input),
        Command::Repro { name, output } => repro(name, output),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
