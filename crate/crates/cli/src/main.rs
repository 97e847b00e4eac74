//! `slnkh`: brackets, homology and verification suites for braid closures.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use slnkh::diagram::{parse_braid, BraidWord};
use slnkh::homology::HomologyError;
use slnkh::morphisms::MorphismRules;
use slnkh::statesum::diagram_bracket;
use slnkh::verify::{diagram_homology, run_suite, Status, Suite, VerifyConfig};

const USAGE: u8 = 2;
const FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "slnkh", version, about = "sl(n) link homology of braid closures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the quantum sl(n) bracket of the closure.
    Polynomial {
        braid: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Print the bigraded integral homology of the closure.
    Homology {
        braid: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a verification suite: d2, euler, moy, markov, duality or all.
    Verify {
        suite: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long = "max-crossings", default_value_t = 8)]
    max_crossings: usize,
    /// Strands in the verification corpus.
    #[arg(long = "max-strands", default_value_t = 3)]
    max_strands: usize,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Which reading of the distinguished-circle conditions to use.
    #[arg(long, value_enum, default_value_t = Reading::Default)]
    reading: Reading,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Reading {
    Default,
    Literal,
    Direct,
}

impl Reading {
    fn rules(self) -> MorphismRules {
        match self {
            Reading::Default => MorphismRules::default(),
            Reading::Literal => MorphismRules::literal(),
            Reading::Direct => MorphismRules::direct(),
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn braid_arg(text: &str, opts: &Opts) -> Result<BraidWord, ExitCode> {
    if opts.n < 1 {
        return Err(usage("--n must be at least 1"));
    }
    let b = parse_braid(text).map_err(usage)?;
    if b.len() > opts.max_crossings {
        return Err(usage(format!(
            "{} crossings exceed the budget of {}; raise it with --max-crossings",
            b.len(),
            opts.max_crossings
        )));
    }
    Ok(b)
}

fn polynomial(text: &str, opts: &Opts) -> ExitCode {
    let b = match braid_arg(text, opts) {
        Ok(b) => b,
        Err(code) => return code,
    };
    println!("{}", diagram_bracket(&b.closure(), opts.n));
    ExitCode::SUCCESS
}

fn homology(text: &str, opts: &Opts) -> ExitCode {
    let b = match braid_arg(text, opts) {
        Ok(b) => b,
        Err(code) => return code,
    };
    match diagram_homology(&b.closure(), opts.n, &opts.reading.rules()) {
        Ok(h) => {
            match opts.format {
                Format::Json => println!("{}", serde_json::to_string(&h).expect("homology serializes")),
                Format::Table => print!("{}", h.table()),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let witness = match &e {
                HomologyError::DSquared(w) => json!({"degree": w.degree, "column": w.column}),
                _ => json!(null),
            };
            eprintln!("{}", json!({"error": e.to_string(), "witness": witness}));
            ExitCode::from(FAILED)
        }
    }
}

fn verify(name: &str, opts: &Opts) -> ExitCode {
    let suite: Suite = match name.parse() {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    if opts.n < 1 || (suite == Suite::Moy && opts.n < 2) {
        return usage("--n must be at least 1 (at least 2 for moy)");
    }
    let config = VerifyConfig {
        n: opts.n,
        max_crossings: opts.max_crossings,
        max_strands: opts.max_strands,
        workers: opts.workers,
        rules: opts.reading.rules(),
    };
    let run = run_suite(suite, &config);
    for r in &run.reports {
        match opts.format {
            Format::Json => println!("{}", r.to_json_line()),
            Format::Table => println!("{}\t{}\t{}\t{}", r.status, r.check, r.n, r.input),
        }
    }
    eprintln!(
        "pass {} fail {} expected-open {}",
        run.count(Status::Pass),
        run.count(Status::Fail),
        run.count(Status::ExpectedOpen)
    );
    if run.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match &cli.command {
        Command::Polynomial { braid, opts } => polynomial(braid, opts),
        Command::Homology { braid, opts } => homology(braid, opts),
        Command::Verify { suite, opts } => verify(suite, opts),
    }
}
