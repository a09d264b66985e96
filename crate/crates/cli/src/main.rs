use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use hybrid_entanglement::config::{self, parse_quantity, Assignments};
use hybrid_entanglement::gaussian::BipartitePartition;
use hybrid_entanglement::params::{Dimension, ParamName, SignConvention, SystemParams};
use hybrid_entanglement::sweep::{
    emit_csv, preset, render_svg, render_svg_lines, run_point, run_sweep, Axis, DerivedLink,
    Output, Scale, SweepResult, SweepRow, SweepSpec,
};
use hybrid_entanglement::validate::run_suite;

/// Steady-state entanglement in a cavity coupled to a vibrating mirror and a
/// condensate density mode.
///
/// Every parameter can be given in a TOML config (`--config`) or as a flag
/// named after the key, e.g. `--temperature "100 mK"` or `--zeta_mc 300`.
/// Frequencies with a Hz suffix are multiplied by 2π; bare numbers are SI
/// (rad/s for frequencies).
#[derive(Parser, Debug)]
#[command(name = "hybrid-ent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with parameter assignments.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for CSV and SVG files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[arg(long = "sign-convention", global = true, value_name = "paper|derived")]
    sign_convention: Option<SignConvention>,

    /// Exit with status 1 if any grid point fails in the pipeline.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a single parameter point.
    Point,
    /// Sweep one or two parameters over a grid.
    Sweep {
        /// First axis, `name=lo:hi:n[:log]`, e.g. `delta_over_omega_m=0:2:200`.
        #[arg(long)]
        axis1: String,
        /// Optional second axis in the same form.
        #[arg(long)]
        axis2: Option<String>,
        /// Derived parameter, `target=factor*source`, e.g. `zeta_ac=0.7*zeta_mc`.
        #[arg(long = "link")]
        links: Vec<String>,
        /// Base name of the output files.
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// Run the parameter grid of one reference figure.
    Preset {
        /// fig1a, fig1b, fig1c, fig2a, fig2b, fig2b_caption, fig2b_text, fig2c or fig3.
        id: String,
        /// Resample the first axis to this many points.
        #[arg(long)]
        points1: Option<usize>,
        /// Resample the second axis to this many points.
        #[arg(long)]
        points2: Option<usize>,
    },
    /// Run the numerical invariant suite.
    Validate {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn command() -> clap::Command {
    let params = ParamName::ALL.iter().map(|p| {
        let key = p.as_str();
        let arg = Arg::new(key)
            .long(key)
            .global(true)
            .value_name("VALUE")
            .help(unit_hint(p.dimension()))
            .help_heading("Parameters");
        if key.contains('_') {
            // Built once per process; leaking gives clap the 'static name it wants.
            arg.alias(&*key.replace('_', "-").leak())
        } else {
            arg
        }
    });
    Cli::command().args(params)
}

fn unit_hint(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Length => "length, m or e.g. \"1 mm\"",
        Dimension::AngularFrequency => "rad/s, or Hz with a unit suffix",
        Dimension::Power => "W or e.g. \"50 mW\"",
        Dimension::Mass => "kg or e.g. \"5 ng\"",
        Dimension::Temperature => "K or e.g. \"100 mK\"",
        Dimension::Dimensionless => "dimensionless",
    }
}

fn main() -> ExitCode {
    let matches = match command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(&cli, &matches) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Config file first, then command-line flags.
fn assignments(cli: &Cli, matches: &ArgMatches) -> Result<Assignments, Failure> {
    let mut a = match &cli.config {
        Some(path) => config::load(path).map_err(usage)?,
        None => Assignments::default(),
    };
    let sub = matches.subcommand().map(|(_, m)| m);
    for p in ParamName::ALL {
        let value = sub
            .and_then(|m| m.get_one::<String>(p.as_str()))
            .or_else(|| matches.get_one::<String>(p.as_str()));
        if let Some(text) = value {
            let v =
                parse_quantity(text, p.dimension()).map_err(|e| usage(format!("--{p}: {e}")))?;
            a.push(*p, v);
        }
    }
    if let Some(sc) = cli.sign_convention {
        a.sign_convention = Some(sc);
    }
    Ok(a)
}

fn run(cli: &Cli, matches: &ArgMatches) -> Result<ExitCode, Failure> {
    match &cli.command {
        Command::Validate { seed } => {
            let outcomes = run_suite(*seed);
            let mut ok = true;
            for c in &outcomes {
                println!(
                    "{} {} ({:.2} s): {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.seconds,
                    c.detail
                );
                ok &= c.passed;
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Point => {
            let params = assignments(cli, matches)?.into_params().map_err(usage)?;
            point(cli, &params)
        }
        Command::Sweep {
            axis1,
            axis2,
            links,
            name,
        } => {
            let base = assignments(cli, matches)?.into_params().map_err(usage)?;
            let spec = SweepSpec {
                name: name.clone(),
                axis1: parse_axis(axis1)?,
                axis2: axis2.as_deref().map(parse_axis).transpose()?,
                derived_links: links
                    .iter()
                    .map(|l| parse_link(l))
                    .collect::<Result<_, _>>()?,
                outputs: Output::ALL.to_vec(),
                base,
            };
            sweep(cli, &spec)
        }
        Command::Preset {
            id,
            points1,
            points2,
        } => {
            let mut spec = preset(id).map_err(usage)?;
            let overrides = assignments(cli, matches)?;
            apply_overrides(&mut spec.base, &overrides);
            if let Some(n) = points1 {
                spec.axis1 = spec.axis1.resample(*n).map_err(usage)?;
            }
            if let (Some(n), Some(a)) = (points2, &spec.axis2) {
                spec.axis2 = Some(a.resample(*n).map_err(usage)?);
            }
            sweep(cli, &spec)
        }
    }
}

fn apply_overrides(base: &mut SystemParams, a: &Assignments) {
    for (name, value) in &a.values {
        base.set(*name, *value);
    }
    if let Some(sc) = a.sign_convention {
        base.model.sign_convention = sc;
    }
}

fn point(cli: &Cli, params: &SystemParams) -> Result<ExitCode, Failure> {
    let outcome = run_point(params);
    match &outcome {
        Ok(p) => {
            println!("stability      {}", p.verdict.as_str());
            println!("max_real_part  {:.6e} rad/s", p.max_real_part);
            println!("c_s            {:.6e}", p.c_s);
            if let Some(e) = &p.entanglement {
                for part in BipartitePartition::ALL {
                    let n = e.get(part);
                    println!(
                        "E_{}           {:.9}  (eps {:.9})",
                        part.label(),
                        n.log_negativity,
                        n.epsilon
                    );
                }
                println!("nu_min         {:.12}", e.nu_min);
            }
        }
        Err(e) => eprintln!("point failed in {}: {e}", e.stage()),
    }
    if let Some(dir) = &cli.out {
        let axis = Axis::new(
            ParamName::Temperature,
            vec![params.temperature],
            Scale::Linear,
        )
        .map_err(usage)?;
        let result = SweepResult {
            name: "point".into(),
            axis1: axis,
            axis2: None,
            outputs: Output::ALL.to_vec(),
            rows: vec![SweepRow {
                axis1: params.temperature,
                axis2: None,
                outcome: outcome.clone(),
            }],
        };
        std::fs::create_dir_all(dir).map_err(runtime)?;
        write_csv(&result, &dir.join("point.csv"))?;
    }
    Ok(match outcome {
        Err(_) if cli.strict => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn sweep(cli: &Cli, spec: &SweepSpec) -> Result<ExitCode, Failure> {
    let result = run_sweep(spec);
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(runtime)?;
    let mut written = Vec::new();
    if matches!(cli.format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{}.csv", spec.name));
        write_csv(&result, &path)?;
        written.push(path);
    }
    if matches!(cli.format, Format::Svg | Format::Both) {
        written.extend(write_svgs(&result, &dir, &spec.name)?);
    }
    let errors = result.error_count();
    let stable = result
        .rows
        .iter()
        .filter(|r| r.outcome.as_ref().is_ok_and(|p| p.entanglement.is_some()))
        .count();
    eprintln!(
        "{}: {} points, {} solved, {} failed",
        spec.name,
        result.rows.len(),
        stable,
        errors
    );
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    for row in result.rows.iter().filter(|r| r.outcome.is_err()).take(5) {
        if let Err(e) = &row.outcome {
            eprintln!("  at {} = {}: {e}", spec.axis1.name, row.axis1);
        }
    }
    Ok(if cli.strict && errors > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn write_csv(result: &SweepResult, path: &Path) -> Result<(), Failure> {
    emit_csv(result, path).map_err(runtime)
}

fn write_svgs(result: &SweepResult, dir: &Path, name: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    let mut write = |suffix: &str, text: String| -> Result<(), Failure> {
        let path = dir.join(format!("{name}_{suffix}.svg"));
        std::fs::write(&path, text).map_err(runtime)?;
        out.push(path);
        Ok(())
    };
    match &result.axis2 {
        None => write(
            "negativities",
            render_svg(result, "negativities").map_err(runtime)?,
        )?,
        Some(a2) => {
            for q in ["E_mc", "E_ac", "E_ma"] {
                write(q, render_svg(result, q).map_err(runtime)?)?;
                if a2.len() <= 4 {
                    write(
                        &format!("{q}_lines"),
                        render_svg_lines(result, q).map_err(runtime)?,
                    )?;
                }
            }
        }
    }
    write(
        "stability",
        render_svg(result, "max_real_part").map_err(runtime)?,
    )?;
    Ok(out)
}

/// `name=lo:hi:n[:log]`; bounds may carry units.
fn parse_axis(text: &str) -> Result<Axis, Failure> {
    let (name, rest) = text
        .split_once('=')
        .ok_or_else(|| usage(format!("axis `{text}`: expected name=lo:hi:n[:log]")))?;
    let name: ParamName = name.trim().parse().map_err(usage)?;
    let parts: Vec<&str> = rest.split(':').collect();
    let (lo, hi, n, log) = match parts.as_slice() {
        [lo, hi, n] => (lo, hi, n, false),
        [lo, hi, n, "log"] => (lo, hi, n, true),
        _ => return Err(usage(format!("axis `{text}`: expected name=lo:hi:n[:log]"))),
    };
    let bound = |s: &str| {
        parse_quantity(s, name.dimension()).map_err(|e| usage(format!("axis `{name}`: {e}")))
    };
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| usage(format!("axis `{name}`: bad point count `{n}`")))?;
    let (lo, hi) = (bound(lo)?, bound(hi)?);
    if log {
        Axis::log(name, lo, hi, n)
    } else {
        Axis::linear(name, lo, hi, n)
    }
    .map_err(usage)
}

/// `target=factor*source` or `target=source`.
fn parse_link(text: &str) -> Result<DerivedLink, Failure> {
    let bad = || usage(format!("link `{text}`: expected target=factor*source"));
    let (target, rhs) = text.split_once('=').ok_or_else(bad)?;
    let (factor, source) = match rhs.split_once('*') {
        Some((f, s)) => (f.trim().parse::<f64>().map_err(|_| bad())?, s),
        None => (1.0, rhs),
    };
    Ok(DerivedLink {
        target: target.trim().parse().map_err(usage)?,
        source: source.trim().parse().map_err(usage)?,
        factor,
    })
}
