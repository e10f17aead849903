use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use siepi::harness::{self, presets, ScenarioConfig};
use siepi::ode::{self, OdeSweepSettings, OdeSystem, SiOdeParams, SisOdeParams};
use siepi::{Error, Result};

#[derive(Parser)]
#[command(name = "siepi", version, about = "Diffusive SI epidemic model with nonlinear incidence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Directory for diagnostics.csv, snapshots/ and summary.txt
    #[arg(long)]
    out: Option<PathBuf>,
    /// `section.key=value`, applied after the config file (repeatable)
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config file
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in scenario (`--list` shows the catalog)
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        list: bool,
        /// Use the 2D variant on a square
        #[arg(long)]
        two_d: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a parameter sweep spec
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal eigenvalue and R0 of a scenario's linearization
    R0 {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Spatially homogeneous ODE tools
    Ode {
        #[command(subcommand)]
        command: OdeCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Si,
    Sis,
}

#[derive(Subcommand)]
enum OdeCommand {
    /// Predict the limit from the case tables; `--integrate` adds an RK4 check
    Classify {
        #[arg(value_enum)]
        system: System,
        #[arg(long)]
        beta: f64,
        /// Mortality (SI)
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Recovery (SIS)
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        s0: f64,
        /// Initial infected (SI)
        #[arg(long, default_value_t = 0.0)]
        i0: f64,
        /// Total population (SIS)
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        #[arg(long)]
        integrate: bool,
    },
    /// Random oracle sweep: predicted vs RK4-observed limits
    Sweep {
        #[arg(value_enum)]
        system: System,
        #[arg(long, default_value_t = OdeSweepSettings::default().points)]
        points: usize,
        #[arg(long, default_value_t = OdeSweepSettings::default().seed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run_and_print(config: &ScenarioConfig, out: Option<&Path>) -> Result<()> {
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let report = harness::run_scenario(config, out)?;
    print!("{}", report.summary);
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, common } => {
            let cfg = harness::load_config_file(&config, &common.overrides)?;
            run_and_print(&cfg, common.out.as_deref())
        }
        Command::Preset {
            name,
            list,
            two_d,
            common,
        } => {
            if list {
                for p in presets::CATALOG {
                    println!("{:<22} {}", p.name, p.summary);
                }
                return Ok(());
            }
            let name = name.expect("clap enforces a name without --list");
            let cfg = harness::preset_config(&name, two_d, &common.overrides)?;
            run_and_print(&cfg, common.out.as_deref())
        }
        Command::Sweep { spec, out } => {
            let table = harness::run_sweep_file(&spec, out.as_deref())?;
            print!("{}", table.to_csv());
            Ok(())
        }
        Command::R0 { config, overrides } => {
            let cfg = harness::load_config_file(&config, &overrides)?;
            let result = harness::spectral_for(&cfg)?;
            println!("applicable={}", harness::spectral_applies(&cfg));
            print!("{}", harness::spectral_listing(&result));
            Ok(())
        }
        Command::Ode { command } => ode_command(command),
    }
}

fn ode_command(command: OdeCommand) -> Result<()> {
    let settings = OdeSweepSettings::default();
    match command {
        OdeCommand::Classify {
            system,
            beta,
            mu,
            gamma,
            p,
            q,
            s0,
            i0,
            n,
            integrate,
        } => {
            let sys = match system {
                System::Si => {
                    let params = SiOdeParams::new(beta, mu, p, q, s0, i0)?;
                    println!("predicted={}", ode::si_classify(&params).label());
                    match ode::extinction_time_bound(&params) {
                        Ok(t) => println!("extinction_time_bound={t}"),
                        Err(e) => println!("extinction_time_bound=undefined ({e})"),
                    }
                    OdeSystem::Si(params)
                }
                System::Sis => {
                    let params = SisOdeParams::new(beta, gamma, p, q, n, s0)?;
                    let states = ode::sis_steady_states(&params);
                    println!("predicted={}", ode::sis_classify(&params));
                    println!("interior_states={}", states.interior_count());
                    for st in &states.states {
                        println!("steady_state=({};{}) {:?}", st.s, st.i, st.stability);
                    }
                    OdeSystem::Sis(params)
                }
            };
            if integrate {
                let term = ode::rk4_until_settled(&sys, settings.dt, settings.t_start, settings.t_max, settings.movement)?;
                println!("observed_S={}", term.s);
                println!("observed_I={}", term.i);
                println!("horizon={}", term.t);
                if let Some(tc) = term.clamp_time {
                    println!("clamp_time={tc}");
                }
            }
            Ok(())
        }
        OdeCommand::Sweep {
            system,
            points,
            seed,
            out,
        } => {
            let settings = OdeSweepSettings { points, seed, ..settings };
            let rows = match system {
                System::Si => ode::si_sweep(&settings)?,
                System::Sis => ode::sis_sweep(&settings)?,
            };
            let csv = ode::ode_sweep_csv(&rows);
            if let Some(dir) = out {
                create_dir(&dir)?;
                let path = dir.join("ode_sweep.csv");
                std::fs::write(&path, &csv).map_err(|e| Error::Io { path, source: e })?;
            }
            print!("{csv}");
            let agree = rows.iter().filter(|r| r.agree).count();
            eprintln!("agreement {agree}/{}", rows.len());
            Ok(())
        }
    }
}
