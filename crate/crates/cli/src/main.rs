use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blimp_cli::api::{router, AppState};
use blimp_cli::report::{check_text, evaluate, payload_text, perf_text};
use blimp_cli::store::DesignStore;
use blimp_core::mapping::{parse_command, Role, ServoOrder, Tail};
use blimp_core::performance::PerformanceError;
use blimp_core::sim::csv::write_csv;
use blimp_core::sim::session::Pacing;
use blimp_core::sim::{run, Actuation, Integrator};
use blimp_core::{max_performance, parse_design, DesignSpec, SimConfig, SimState};
use clap::{Parser, Subcommand, ValueEnum};

/// Feasibility failures.
const EXIT_FAIL: u8 = 1;
/// Bad input: unreadable or invalid files, malformed arguments.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "blimp", version, about = "Design checks and flight simulation for indoor blimps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check motion primitives and payload; exit 0 only if everything passes.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Envelope volume, buoyancy and payload capacity.
    Payload {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Terminal velocity at the best feasible thrust allocation.
    Perf {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Simulate under constant duties and write the trajectory as CSV.
    Sim {
        file: PathBuf,
        /// Seconds of simulated time.
        #[arg(long)]
        duration: f64,
        /// Duty per thruster in design order, each in [-1, 1]; idle if omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        duty: Vec<f64>,
        /// Servo deflection per thruster in degrees, design order.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        deflection: Vec<f64>,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = Method::Rk4)]
        integrator: Method,
        /// Output file; standard output if omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Parse a channel mapping command and print its structure.
    RemapParse { command: String },
    /// Run the HTTP/JSON service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "BLIMP_DATA_DIR", default_value = "blimp-data")]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rk4,
    Euler,
}

/// A failure already reported on standard error, carrying its exit code.
struct Exit(u8);

fn input_error(msg: impl std::fmt::Display) -> Exit {
    eprintln!("error: {msg}");
    Exit(EXIT_INPUT)
}

fn load(path: &Path) -> Result<DesignSpec, Exit> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    parse_design(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code)) => ExitCode::from(code),
    }
}

fn dispatch(command: Command) -> Result<(), Exit> {
    match command {
        Command::Check { file, json } => {
            let design = load(&file)?;
            let eval = evaluate(&design).map_err(input_error)?;
            if json {
                print_json(&eval.feasibility);
            } else {
                print!("{}", check_text(&design, &eval.feasibility));
            }
            if eval.passes() {
                Ok(())
            } else {
                Err(Exit(EXIT_FAIL))
            }
        }
        Command::Payload { file, json } => {
            let design = load(&file)?;
            let eval = evaluate(&design).map_err(input_error)?;
            if json {
                let r = &eval.feasibility;
                print_json(&serde_json::json!({
                    "envelope_volume": r.envelope_volume,
                    "buoyancy": r.buoyancy,
                    "payload_mass": r.payload_mass,
                    "payload_ok": r.payload_ok,
                }));
            } else {
                print!("{}", payload_text(&design, &eval.feasibility));
            }
            if eval.feasibility.payload_ok {
                Ok(())
            } else {
                Err(Exit(EXIT_FAIL))
            }
        }
        Command::Perf { file, json } => {
            let design = load(&file)?;
            match max_performance(&design) {
                Ok(report) if json => print_json(&report),
                Ok(report) => print!("{}", perf_text(&design, &report)),
                Err(e @ PerformanceError::Infeasible(_)) => {
                    eprintln!("{}: {e}", design.name);
                    return Err(Exit(EXIT_FAIL));
                }
                Err(e) => return Err(input_error(e)),
            }
            Ok(())
        }
        Command::Sim { file, duration, duty, deflection, dt, integrator, csv } => {
            let design = load(&file)?;
            simulate(&design, duration, duty, deflection, dt, integrator, csv.as_deref())
        }
        Command::RemapParse { command } => remap_parse(&command),
        Command::Serve { port, data_dir, host } => serve(SocketAddr::new(host, port), data_dir),
    }
}

fn simulate(
    design: &DesignSpec,
    duration: f64,
    duty: Vec<f64>,
    deflection: Vec<f64>,
    dt: f64,
    method: Method,
    csv: Option<&Path>,
) -> Result<(), Exit> {
    let n = design.thrusters.len();
    let duties = if duty.is_empty() { vec![0.0; n] } else { duty };
    let deflections = if deflection.is_empty() {
        vec![0.0; n]
    } else {
        deflection.iter().map(|d| d.to_radians()).collect()
    };
    let actuation = Actuation { duties, deflections };
    // Validate once up front so a bad duty is an input error, not a mid-run failure.
    actuation.wrench(design).map_err(input_error)?;
    let config = SimConfig {
        dt,
        integrator: match method {
            Method::Rk4 => Integrator::Rk4,
            Method::Euler => Integrator::SemiImplicitEuler,
        },
        ..SimConfig::default()
    };
    let trajectory = run(design, SimState::default(), |_| actuation.clone(), duration, &config).map_err(input_error)?;
    let written = match csv {
        Some(path) => fs::File::create(path)
            .and_then(|f| {
                let mut w = std::io::BufWriter::new(f);
                write_csv(&trajectory, &mut w)?;
                w.flush()
            })
            .map_err(|e| format!("{}: {e}", path.display())),
        None => write_csv(&trajectory, std::io::stdout().lock()).map_err(|e| e.to_string()),
    };
    written.map_err(input_error)?;
    let last = trajectory.last();
    eprintln!(
        "t = {} s, speed = {} m/s, steady {}",
        last.time,
        last.speed(),
        trajectory.steady_at.map_or("not reached".to_string(), |t| format!("from t = {t} s")),
    );
    Ok(())
}

fn remap_parse(text: &str) -> Result<(), Exit> {
    let cmd = match parse_command(text) {
        Ok(cmd) => cmd,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("  {text}");
            eprintln!("  {}^", " ".repeat(e.position.saturating_sub(1)));
            return Err(Exit(EXIT_INPUT));
        }
    };
    println!("command = {}", cmd.render());
    for (channel, role) in cmd.roles {
        let name = match role {
            Role::Forward => "forward",
            Role::Backward => "backward",
            Role::Up => "up",
            Role::Down => "down",
            Role::Unassigned => "unassigned",
        };
        println!("channel.{channel} = {name}");
    }
    match cmd.tail {
        Tail::Unconfirmed => println!("mode = unconfirmed"),
        Tail::Dc { left, right } => {
            println!("mode = dc");
            println!("yaw.left = {left}");
            println!("yaw.right = {right}");
        }
        Tail::Servo { servo_a, servo_b, order } => {
            let (left, right) = match order {
                ServoOrder::LR => (servo_a, servo_b),
                ServoOrder::RL => (servo_b, servo_a),
            };
            println!("mode = servo");
            println!("servos = {servo_a},{servo_b}");
            println!("yaw.left_servo = {left}");
            println!("yaw.right_servo = {right}");
        }
    }
    Ok(())
}

fn serve(addr: SocketAddr, data_dir: PathBuf) -> Result<(), Exit> {
    let store = DesignStore::open(&data_dir).map_err(input_error)?;
    let state = AppState::new(store, Pacing::RealTime);
    let runtime = tokio::runtime::Runtime::new().map_err(input_error)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| input_error(format!("{addr}: {e}")))?;
        eprintln!("listening on http://{addr} (data in {})", data_dir.display());
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(input_error)
    })
}
