use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use sbfd_isac::channel::{Mode, ScenarioFile};
use sbfd_isac::pipeline::{convert_iq, inspect_waveform, run_simulation, synthesize_ground_truth, RunOptions};
use sbfd_isac::waveform::NodeId;

#[derive(Parser)]
#[command(name = "sbfd", version, about = "SBFD OFDM sensing and communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate runs of a scenario and write velocity, RMSE, BER and PSD reports.
    Run(RunArgs),
    /// Dump transmit PSD, PAPR and the subcarrier allocation.
    Inspect(InspectArgs),
    /// Convert IQ between .cf32 and .csv (direction from the extensions).
    Convert { input: PathBuf, output: PathBuf },
    /// Write the synthesized ground-truth trajectory of one run as CSV.
    GtSynth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        run: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sbfd,
    Multiband,
    SameBand,
    All,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Sbfd => vec![Mode::Sbfd],
            ModeArg::Multiband => vec![Mode::Multiband],
            ModeArg::SameBand => vec![Mode::SameBand],
            ModeArg::All => Mode::ALL.to_vec(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SBFD_OUT", default_value = "out")]
    out: PathBuf,
    /// Same ZC root on every node (worst-case same-band collision).
    #[arg(long)]
    identical_payload: bool,
    /// RMSE on speeds rather than signed velocities.
    #[arg(long)]
    absolute: bool,
    /// Worker threads, 0 = one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Only this node (1-3); default is the composite of all nodes.
    #[arg(long)]
    node: Option<usize>,
    #[arg(long, default_value_t = 16)]
    symbols: usize,
    #[arg(long, env = "SBFD_OUT", default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(a) => {
            let mut opts = RunOptions::new(&a.scenario, &a.out);
            opts.modes = a.mode.map(ModeArg::modes).unwrap_or_default();
            opts.runs = a.runs;
            opts.seed = a.seed;
            opts.identical_payload = a.identical_payload;
            opts.absolute_rmse = a.absolute;
            opts.threads = a.threads;
            let m = run_simulation(&opts).with_context(|| format!("running {}", a.scenario.display()))?;
            println!("wrote {} artifacts to {}", m.artifacts.len() + 1, m.out_dir);
        }
        Command::Inspect(a) => {
            let file = ScenarioFile::load(&a.scenario)?;
            let mode = match a.mode {
                None => file.mode,
                Some(ModeArg::All) => anyhow::bail!("inspect takes a single mode"),
                Some(m) => m.modes()[0],
            };
            let node = a.node.map(NodeId::from_number).transpose()?;
            let r = inspect_waveform(&file, mode, node, a.symbols, &a.out)?;
            for (lo, hi) in r.occupied_bands {
                println!("occupied {lo:.0} .. {hi:.0} Hz");
            }
        }
        Command::Convert { input, output } => {
            convert_iq(&input, &output).with_context(|| format!("converting {}", input.display()))?;
        }
        Command::GtSynth { scenario, run, seed, out } => {
            let mut file = ScenarioFile::load(&scenario)?;
            if let Some(s) = seed {
                file.seed = s;
            }
            synthesize_ground_truth(&file, run, &out)?;
        }
    }
    Ok(())
}
