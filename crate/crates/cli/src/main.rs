use std::io;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cur::server::Server;
use cur::session::Session;
use cur::{env_for, repl};
use cur_kernel::check::Elaborator;
use cur_kernel::elab::process;
use cur_kernel::env::{Config, Env, Positivity};
use cur_kernel::print::show;
use cur_kernel::reader::{parse, parse_one};
use cur_kernel::Context;

#[derive(Parser)]
#[command(name = "cur", version, about = "A small dependently typed proof kernel")]
struct Cli {
    /// Reduction fuel per normalization.
    #[arg(long, global = true)]
    fuel: Option<u64>,
    /// How strictly positivity of datatype declarations is enforced.
    #[arg(long, global = true, value_enum)]
    positivity: Option<PositivityArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PositivityArg {
    Off,
    Warn,
    Error,
}

#[derive(Subcommand)]
enum Command {
    /// Elaborate every form of a file and print each definition.
    Check { file: PathBuf },
    /// Prove a goal interactively, with the definitions of a file in scope.
    Prove {
        file: PathBuf,
        #[arg(long)]
        goal: String,
    },
    /// Serve the proof-session protocol over TCP.
    Serve {
        #[arg(long, default_value_t = 7171)]
        port: u16,
    },
    /// Print the normal form of an expression.
    Norm {
        file: PathBuf,
        #[arg(short = 'e', long = "expr")]
        expr: String,
    },
}

fn config(cli: &Cli) -> Config {
    let mut c = Config::default();
    if let Some(f) = cli.fuel {
        c.fuel = f;
    }
    if let Some(p) = cli.positivity {
        c.positivity = match p {
            PositivityArg::Off => Positivity::Off,
            PositivityArg::Warn => Positivity::Warn,
            PositivityArg::Error => Positivity::Error,
        };
    }
    c
}

fn read(file: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(file).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", file.display());
        ExitCode::from(2)
    })
}

/// Elaborates a whole file, printing definitions when `echo` is set.
fn load(config: Config, file: &Path, echo: bool) -> Result<Env, ExitCode> {
    let text = read(file)?;
    let mut env = env_for(config, file.parent());
    let name = file.display().to_string();
    let forms = parse(&name, &text).map_err(|e| {
        eprintln!("{}", cur_kernel::Error::from(e));
        ExitCode::from(1)
    })?;
    for f in &forms {
        let warned = env.warnings.len();
        match process(&mut env, f) {
            Ok(out) => {
                for w in &env.warnings[warned..] {
                    eprintln!("warning: {w}");
                }
                if echo {
                    for o in out {
                        println!("{o}");
                    }
                }
            }
            Err(e) => {
                eprintln!("{e}");
                return Err(ExitCode::from(1));
            }
        }
    }
    Ok(env)
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let cfg = config(&cli);
    match cli.command {
        Command::Check { file } => load(cfg, &file, true).map(|_| ()),
        Command::Norm { file, expr } => {
            let env = load(cfg, &file, false)?;
            let fail = |e: cur_kernel::Error| {
                eprintln!("{e}");
                ExitCode::from(1)
            };
            let s = parse_one("<expr>", &expr).map_err(|e| fail(e.into()))?;
            let (core, ty) = Elaborator::new(&env).infer(&Context::new(), &s).map_err(fail)?;
            let v = env.normalize(&core).map_err(fail)?;
            println!("{} : {}", show(&v), show(&ty));
            Ok(())
        }
        Command::Prove { file, goal } => {
            let env = load(cfg, &file, false)?;
            let mut session = Session::new("terminal", env);
            if let Err(e) = session.start_proof(&goal) {
                eprintln!("{e}");
                return Err(ExitCode::from(1));
            }
            let stdin = io::stdin();
            repl::run(&mut session, stdin.lock(), io::stdout().lock()).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(1)
            })?;
            Ok(())
        }
        Command::Serve { port } => {
            let listener = TcpListener::bind(("127.0.0.1", port)).map_err(|e| {
                eprintln!("error: cannot listen on port {port}: {e}");
                ExitCode::from(1)
            })?;
            if let Ok(addr) = listener.local_addr() {
                println!("listening on {addr}");
            }
            Server::new(cfg).run(listener).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
