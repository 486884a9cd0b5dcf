use std::path::PathBuf;
use std::str::FromStr;

use actdiag::planner::{Aggregation, Exploration};
use actdiag::simulator::Scenario;
use actdiag::Cost;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "actdiag",
    version,
    about = "Active diagnosis of discrete-event models"
)]
pub struct Cli {
    /// Report format for summaries.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// SpaceWire case-study models.
    #[command(subcommand)]
    Spacewire(SpacewireCommand),
    /// Composes the components of one or more model files into one automaton.
    Compose {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Prints state, event and transition counts of the composed model.
    Stats {
        /// Model file, or `-` for standard input.
        #[arg(default_value = "-")]
        file: PathBuf,
        #[command(flatten)]
        behavior: BehaviorArgs,
    },
    /// Builds the diagnoser of a model.
    Diagnoser {
        file: PathBuf,
        #[command(flatten)]
        behavior: BehaviorArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Builds the active diagnoser and reports its size and tag histogram.
    ActiveDiagnoser {
        file: PathBuf,
        #[command(flatten)]
        behavior: BehaviorArgs,
        /// Faults to tag, comma separated (all faults when omitted).
        #[arg(long, value_delimiter = ',')]
        faults: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Format of the file written with `--output`.
        #[arg(long, value_enum, default_value_t = AdFormat::Json)]
        format: AdFormat,
    },
    /// Searches for a conditional diagnosis plan.
    Plan(PlanArgs),
    /// Renders a plan.
    Export {
        plan: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::PseudoObcp)]
        format: ExportFormat,
        /// Service mapping file overriding the default templates.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Executes a plan against a simulated network.
    Simulate {
        plan: PathBuf,
        /// Injected faults, e.g. `persistent:3,transient:1`, or `none`.
        #[arg(long, value_parser = Scenario::from_str)]
        scenario: Scenario,
        /// Number of instruments (defaults to the number of plan targets).
        #[arg(short = 'n', long)]
        instruments: Option<usize>,
        /// Writes the execution trace log to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SpacewireCommand {
    /// Emits the instrument/port model for `n` instruments.
    Gen {
        #[arg(short = 'n', long)]
        instruments: usize,
        /// File of `event = cost` lines overriding action costs.
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Emits the behavior automaton with the health check spliced in.
        #[arg(long)]
        with_check: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct BehaviorArgs {
    /// Splices the health check (`check`, answered by `sat` in states
    /// labeled `saturated` and `unsat` elsewhere) into every state.
    #[arg(long)]
    pub check: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AdFormat {
    /// Full active diagnoser, readable by `plan`.
    Json,
    /// Nodes with beliefs and tags plus labeled edges.
    Graph,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    PseudoObcp,
    Dot,
    Json,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Model file, or an active diagnoser written by `active-diagnoser`.
    pub input: PathBuf,
    #[command(flatten)]
    pub behavior: BehaviorArgs,
    /// Faults to resolve, comma separated (all faults when omitted).
    #[arg(long, value_delimiter = ',')]
    pub faults: Vec<String>,
    /// `saturated-all-open`, `initial`, `trace:<obs>,<obs>...` or `node:<id>`.
    #[arg(long, default_value = "saturated-all-open", value_parser = RootSpec::from_str)]
    pub root: RootSpec,
    #[arg(long, default_value = "worst_case", value_parser = Aggregation::from_str)]
    pub criterion: Aggregation,
    #[arg(long, default_value = "all", value_parser = Exploration::from_str)]
    pub explore: Exploration,
    #[arg(long, value_parser = Cost::from_str)]
    pub budget: Option<Cost>,
    #[arg(long, default_value_t = actdiag::planner::DEFAULT_NODE_LIMIT)]
    pub node_limit: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootSpec {
    SaturatedAllOpen,
    Initial,
    Trace(Vec<String>),
    Node(usize),
}

impl FromStr for RootSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<RootSpec, String> {
        match s {
            "saturated-all-open" => return Ok(RootSpec::SaturatedAllOpen),
            "initial" => return Ok(RootSpec::Initial),
            _ => {}
        }
        if let Some(trace) = s.strip_prefix("trace:") {
            let events: Vec<String> = trace.split(',').map(|e| e.trim().to_string()).collect();
            if events.iter().any(String::is_empty) {
                return Err(format!("empty event in `{s}`"));
            }
            return Ok(RootSpec::Trace(events));
        }
        if let Some(id) = s.strip_prefix("node:") {
            return id
                .parse()
                .map(RootSpec::Node)
                .map_err(|_| format!("bad node id in `{s}`"));
        }
        Err(format!(
            "unknown root `{s}`; expected saturated-all-open, initial, trace:<obs>,... or node:<id>"
        ))
    }
}
