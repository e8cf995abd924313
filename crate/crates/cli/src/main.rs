use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpgcl::check::Property;
use cpgcl::cli::{self, Binding, Engine, Format, Report, RunConfig, TransformKind};
use cpgcl::{parse_rational, Error, Result};

/// Conditional weakest pre-expectations for probabilistic programs with
/// observations.
///
/// Parameters and initial-state variables are bound with `--param p=1/2`,
/// `--state k=5`, or the shorthand `--p 1/2`. Sweeps accept lists
/// (`--p 0.6,0.8`) and integer ranges (`--k 1..20`).
#[derive(Parser)]
#[command(name = "cpgcl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional expected value of a program or explicit model.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Print wp/wlp(1), wlp/wlp(1), wp/wp(1) and wlp/wp(1).
        #[arg(long)]
        table: bool,
        /// Credit non-termination (cwlp).
        #[arg(long)]
        liberal: bool,
        #[arg(long, default_value = "auto", value_parser = parse_with::<Engine>)]
        engine: Engine,
        /// Root state of an explicit model.
        #[arg(long)]
        root: Option<usize>,
    },
    /// Interval enclosures from growing partial models.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Program transformations: hoist, deobserve, deloop.
    Transform {
        #[arg(value_parser = parse_with::<TransformKind>)]
        kind: TransformKind,
        #[command(flatten)]
        common: Common,
        /// Drop branches taken with probability 0.
        #[arg(long)]
        simplify: bool,
    },
    /// Export the operational model.
    Model {
        #[command(flatten)]
        common: Common,
        /// Graphviz instead of the explicit format.
        #[arg(long)]
        dot: bool,
    },
    /// Randomised cross-checks between the engines.
    Check {
        /// A property name or `all`.
        #[arg(long, default_value = "all")]
        property: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value = "text", value_parser = parse_with::<Format>)]
        format: Format,
    },
    /// One analysis per point of a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "auto", value_parser = parse_with::<Engine>)]
        engine: Engine,
    },
}

#[derive(Args)]
struct Common {
    /// Program file, explicit model, or example name.
    program: String,
    /// Post-expectation.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    post: String,
    /// Parameter binding `name=values`.
    #[arg(long = "param", value_name = "NAME=VALUES")]
    params: Vec<String>,
    /// Initial-state binding `name=values`.
    #[arg(long = "state", value_name = "NAME=VALUES")]
    states: Vec<String>,
    /// Loop unrolling depth for the symbolic engine.
    #[arg(long, default_value_t = 20)]
    unroll: usize,
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
    /// Upper bound of the post-expectation, for intervals.
    #[arg(long)]
    post_bound: Option<String>,
    #[arg(long, default_value = "1e-6")]
    tol: String,
    #[arg(long, default_value = "text", value_parser = parse_with::<Format>)]
    format: Format,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Long options understood directly; any other `--name value` is a binding.
const KNOWN: &[&str] = &[
    "post", "param", "state", "unroll", "max-states", "post-bound", "tol", "format", "table",
    "liberal", "engine", "root", "simplify", "dot", "property", "n", "seed", "help", "version",
];

fn rewrite_args(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut args = args.peekable();
    while let Some(a) = args.next() {
        let Some(name) = a.strip_prefix("--") else {
            out.push(a);
            continue;
        };
        let (name, inline) = match name.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (name.to_string(), None),
        };
        if name.is_empty() || KNOWN.contains(&name.as_str()) {
            out.push(a);
            continue;
        }
        let value = inline.or_else(|| args.next()).unwrap_or_default();
        out.push("--param".into());
        out.push(format!("{name}={value}"));
    }
    out
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let bindings = self
            .params
            .iter()
            .chain(&self.states)
            .map(|b| cli::parse_binding(b))
            .collect::<Result<Vec<Binding>>>()?;
        let post_bound = match &self.post_bound {
            Some(b) => Some(
                parse_rational(b)
                    .ok_or_else(|| Error::Usage(format!("cannot read --post-bound `{b}`")))?,
            ),
            None => None,
        };
        Ok(RunConfig {
            program: self.program.clone(),
            post: self.post.clone(),
            bindings,
            unroll: self.unroll,
            max_states: self.max_states,
            post_bound,
            tol: cli::parse_tolerance(&self.tol)?,
            format: self.format,
            ..RunConfig::default()
        })
    }
}

fn run(command: Command) -> Result<(Report, Format)> {
    match command {
        Command::Analyze {
            common,
            table,
            liberal,
            engine,
            root,
        } => {
            let cfg = RunConfig {
                table,
                liberal,
                engine,
                root,
                ..common.config()?
            };
            Ok((cli::cmd_analyze(&cfg)?, cfg.format))
        }
        Command::Bounds { common } => {
            let cfg = common.config()?;
            Ok((cli::cmd_bounds(&cfg)?, cfg.format))
        }
        Command::Transform {
            kind,
            common,
            simplify,
        } => {
            let cfg = common.config()?;
            Ok((cli::cmd_transform(&cfg, kind, simplify)?, cfg.format))
        }
        Command::Model { common, dot } => {
            let cfg = common.config()?;
            Ok((cli::cmd_model(&cfg, dot)?, cfg.format))
        }
        Command::Check {
            property,
            n,
            seed,
            format,
        } => {
            let properties = if property == "all" {
                Property::ALL.to_vec()
            } else {
                vec![property.parse()?]
            };
            Ok((cli::cmd_check(&properties, n, seed), format))
        }
        Command::Sweep { common, engine } => {
            let cfg = RunConfig {
                engine,
                ..common.config()?
            };
            Ok((cli::cmd_sweep(&cfg)?, cfg.format))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(rewrite_args(std::env::args()));
    match run(cli.command) {
        Ok((report, format)) => {
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(report.render(format).as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
