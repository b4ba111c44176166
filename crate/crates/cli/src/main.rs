use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aggdiff_cli::{run_command, run_sweep, CliError, Command, RunSpec, EXIT_OK, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "aggdiff", version, about = "Aggregation-diffusion solvers, exact profiles and blow-up diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run specification.
    config: PathBuf,
    /// Override a value, e.g. `--set params.a=1.5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (same as `--set output.dir=...`).
    #[arg(long)]
    out: Option<String>,
    /// Print the resolved specification and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the local or nonlocal PDE and write snapshots, diagnostics and events.
    Simulate(Common),
    /// Check a Barenblatt bump configuration and tabulate exact profiles and residuals.
    VerifyExact(Common),
    /// Evaluate the blow-up, global-existence and non-existence certificates.
    Regimes(Common),
    /// Run the particle system and compare it to the nonlocal PDE.
    Particles(Common),
    /// Run every entry of the `[sweep]` table as an independent spec.
    Sweep(Common),
}

fn overrides(c: &Common) -> Vec<String> {
    let mut set = c.set.clone();
    if let Some(dir) = &c.out {
        set.push(format!("output.dir={}", toml::Value::String(dir.clone())));
    }
    set
}

fn read(c: &Common) -> Result<String, CliError> {
    std::fs::read_to_string(&c.config).map_err(|source| CliError::Io {
        path: c.config.display().to_string(),
        source,
    })
}

fn single(cmd: Command, c: &Common) -> Result<i32, CliError> {
    let spec = RunSpec::from_toml_with(&read(c)?, &overrides(c))?;
    if c.dry_run {
        print!("{}", spec.to_toml());
        return Ok(EXIT_OK);
    }
    let out = run_command(cmd, &spec)?;
    println!("{}", out.message);
    for f in &out.files {
        println!("  {}", f.display());
    }
    Ok(out.exit_code)
}

fn sweep(c: &Common) -> Result<i32, CliError> {
    let text = read(c)?;
    if c.dry_run {
        print!("{}", RunSpec::from_toml_with(&text, &overrides(c))?.to_toml());
        return Ok(EXIT_OK);
    }
    let mut code = EXIT_OK;
    for item in run_sweep(&text, &overrides(c))? {
        match item.result {
            Ok(out) => {
                println!("[{}] {}", item.name, out.message);
                code = code.max(out.exit_code);
            }
            Err(e) => {
                eprintln!("[{}] error: {e}", item.name);
                code = code.max(e.exit_code());
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Simulate(c) => single(Command::Simulate, c),
        Cmd::VerifyExact(c) => single(Command::VerifyExact, c),
        Cmd::Regimes(c) => single(Command::Regimes, c),
        Cmd::Particles(c) => single(Command::Particles, c),
        Cmd::Sweep(c) => sweep(c),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_VALIDATION as u8))
}
