use clap::{Parser, Subcommand};

use ucs_cli::commands;
use ucs_cli::config::{OutputFormat, RunConfig};
use ucs_cli::output::Table;
use ucs_cli::verify;

/// Canonical-system chains from unimodular symbols: scans, kernels, and the
/// verification harness.
#[derive(Parser)]
#[command(name = "ucs", version, about)]
struct Cli {
    /// Run configuration file (sectioned key = value text).
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output path (defaults to the config value or stdout).
    #[arg(long, global = true)]
    output: Option<String>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker pool size (0 = library default; UCS_JOBS applies when unset).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operator norms ||K[t]|| over the scan range.
    NormScan,
    /// Hamiltonian samples (t, alpha, beta, gamma, re_phipsibar).
    Hamiltonian,
    /// A(t,z), B(t,z) by the direct and ODE paths.
    Evolve,
    /// Reproducing kernel j(t;z,w) by formula and Gram integral.
    Rkernel,
    /// Chain-endpoint diagnostics over the scan range.
    T0Scan,
    /// Replay the acceptance criteria; exit 3 on any failure.
    Verify {
        /// Run every criterion (default).
        #[arg(long)]
        all: bool,
        /// Run a single criterion by number.
        #[arg(long)]
        only: Option<usize>,
    },
    /// List the registry of unimodular symbols.
    ListFunctions,
}

fn load_config(cli: &Cli) -> Result<RunConfig, ucs_core::Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ucs_core::Error::Config(format!("cannot read config {path}: {e}"))
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.output {
        cfg.output_path = Some(out.clone());
    }
    if let Some(fmt) = &cli.format {
        cfg.format = match fmt.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => {
                return Err(ucs_core::Error::Config(format!(
                    "unknown format `{other}` (csv or json)"
                )))
            }
        };
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &Table, cfg: &RunConfig) -> i32 {
    match table.write_to(cfg.output_path.as_deref(), &cfg.format) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ucs: {e}");
            1
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = run(&cli);
    std::process::exit(code);
}

fn run(cli: &Cli) -> i32 {
    if let Command::ListFunctions = cli.command {
        let table = commands::cmd_list_functions();
        return table
            .write_to(cli.output.as_deref(), &OutputFormat::Csv)
            .map(|_| 0)
            .unwrap_or(1);
    }
    if let Command::Verify { only, .. } = &cli.command {
        let results = match only {
            Some(n) => verify::run_all().into_iter().filter(|r| r.id == *n).collect(),
            None => verify::run_all(),
        };
        if results.is_empty() {
            eprintln!("ucs: no such criterion");
            return 1;
        }
        let mut all_pass = true;
        for r in &results {
            all_pass &= r.pass;
            println!(
                "{} {:2} {}: {}",
                if r.pass { "PASS" } else { "FAIL" },
                r.id,
                r.name,
                r.detail
            );
        }
        let doc = serde_json::json!({
            "criteria": results.iter().map(|r| serde_json::json!({
                "id": r.id, "name": r.name, "pass": r.pass, "detail": r.detail,
            })).collect::<Vec<_>>(),
            "pass": all_pass,
        });
        if let Some(path) = &cli.output {
            if std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).is_err() {
                eprintln!("ucs: cannot write {path}");
                return 1;
            }
        }
        return if all_pass { 0 } else { 3 };
    }

    let cfg = match load_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("ucs: config error: {e}");
            return 1;
        }
    };
    let result = match &cli.command {
        Command::NormScan => commands::cmd_norm_scan(&cfg),
        Command::Hamiltonian => commands::cmd_hamiltonian(&cfg),
        Command::Evolve => commands::cmd_evolve(&cfg),
        Command::Rkernel => commands::cmd_rkernel(&cfg),
        Command::T0Scan => commands::cmd_t0(&cfg),
        Command::Verify { .. } | Command::ListFunctions => unreachable!(),
    };
    match result {
        Ok((table, clean)) => {
            let code = emit(&table, &cfg);
            if code != 0 {
                code
            } else if clean {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("ucs: {e}");
            2
        }
    }
}
