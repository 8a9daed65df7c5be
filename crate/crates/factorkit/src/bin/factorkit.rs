use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use factorkit::field::DEFAULT_PRIME_BITS;
use factorkit::io::{run, Command, Flags};
use factorkit::sssp::Backend;

/// Factors, b-matchings, undirected shortest paths and flows.
#[derive(Parser)]
#[command(name = "factorkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Bit length of the random primes.
    #[arg(long, global = true, default_value_t = DEFAULT_PRIME_BITS)]
    prime_bits: u32,
    /// Distance computation for `sssp`.
    #[arg(long, global = true, default_value_t = Backend::Algebraic)]
    backend: Backend,
    /// Print the JSON envelope instead of a text summary.
    #[arg(long, global = true)]
    json: bool,
    /// Check the result's certificate before printing it.
    #[arg(long, global = true)]
    certify: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find an f-factor.
    Ffactor { instance: PathBuf },
    /// Find a maximum-weight f-factor with its blossom forest.
    FfactorMax { instance: PathBuf },
    /// Maximum-weight perfect b-matching.
    Bmatch { instance: PathBuf },
    /// Shortest paths to the sink and the gsp-tree.
    Sssp { instance: PathBuf },
    /// Maximum flow.
    Maxflow { instance: PathBuf },
    /// Minimum-cost maximum flow.
    Mincost { instance: PathBuf },
    /// Re-check a JSON envelope against its instance.
    Verify { instance: PathBuf, envelope: PathBuf },
    /// Brute-force answer for small instances.
    Oracle { instance: PathBuf },
}

fn read(path: &Path) -> std::io::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, instance, envelope) = match &cli.command {
        Cmd::Ffactor { instance } => (Command::Ffactor, instance, None),
        Cmd::FfactorMax { instance } => (Command::FfactorMax, instance, None),
        Cmd::Bmatch { instance } => (Command::Bmatch, instance, None),
        Cmd::Sssp { instance } => (Command::Sssp, instance, None),
        Cmd::Maxflow { instance } => (Command::Maxflow, instance, None),
        Cmd::Mincost { instance } => (Command::Mincost, instance, None),
        Cmd::Verify { instance, envelope } => (Command::Verify, instance, Some(envelope)),
        Cmd::Oracle { instance } => (Command::Oracle, instance, None),
    };
    let text = match read(instance) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("factorkit: cannot read {}: {e}", instance.display());
            return ExitCode::from(3);
        }
    };
    let envelope = match envelope.map(|p| read(p).map_err(|e| (p, e))).transpose() {
        Ok(e) => e,
        Err((p, e)) => {
            eprintln!("factorkit: cannot read {}: {e}", p.display());
            return ExitCode::from(3);
        }
    };
    let flags = Flags { seed: cli.opts.seed, prime_bits: cli.opts.prime_bits, backend: cli.opts.backend, certify: cli.opts.certify };
    let env = run(command, &text, envelope.as_deref(), &flags);
    if let Some(m) = &env.message {
        eprintln!("factorkit: {m}");
    }
    if cli.opts.json {
        println!("{}", serde_json::to_string_pretty(&env).expect("envelope serializes"));
    } else {
        print!("{}", env.summary());
    }
    ExitCode::from(env.exit_code() as u8)
}
