use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use usthreshold::channel_sim::LossModel;
use usthreshold::harness::{
    calibrate, run_grid, run_scenario_files, CalibrationTargets, ConditionGrid, HarnessConfig,
    HarnessError, SearchGrid,
};
use usthreshold::modem::{decode, encode, read_wav, write_wav, ModemParams, UsFrame};

const SHIPPED_SEARCH_GRID: &str = include_str!("../scenarios/search_grid.json");

#[derive(Parser)]
#[command(
    name = "usthreshold",
    version,
    about = "Near-ultrasonic threshold presence toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode one frame to a WAV file.
    Encode {
        #[arg(long)]
        payload: String,
        #[arg(long, default_value_t = 0)]
        channel: usize,
        #[arg(long, default_value_t = 0.7)]
        amplitude: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a WAV file, printing one payload per line.
    Decode {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        channel: usize,
    },
    /// Run the full evaluation grid and write one CSV row per condition.
    RunGrid {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long)]
        out: PathBuf,
        /// Loss model for both environments; defaults to the shipped model.
        #[arg(long)]
        losses: Option<PathBuf>,
    },
    /// Play a scripted scenario and write transition and command logs.
    RunScenario {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit the loss model to aggregate reception targets.
    Calibrate {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Search grid; defaults to the shipped one.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write the achieved aggregates here.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn run(cmd: Cmd) -> Result<(), HarnessError> {
    match cmd {
        Cmd::Encode {
            payload,
            channel,
            amplitude,
            out,
        } => {
            let frame = UsFrame::new(channel, &payload)?;
            let pcm = encode(&frame, &ModemParams::default(), amplitude)?;
            write(&out, write_wav(&pcm)?)?;
        }
        Cmd::Decode { input, channel } => {
            let bytes = fs::read(&input)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", input.display())))?;
            let pcm = read_wav(&bytes)?;
            let params = ModemParams::default();
            params.check_channel(channel)?;
            for d in decode(&pcm, &params, channel) {
                println!("{}", d.payload);
            }
        }
        Cmd::RunGrid {
            seed,
            trials,
            out,
            losses,
        } => {
            let model = match losses {
                Some(p) => {
                    let m: LossModel = parse_json(&p)?;
                    m.validate()?;
                    m
                }
                None => LossModel::shipped(),
            };
            let config = HarnessConfig::with_losses(model);
            let report = run_grid(&ConditionGrid::default(), trials, seed, &config)?;
            write(&out, report.to_csv()?)?;
            println!("{}", report.summary);
        }
        Cmd::RunScenario {
            scene,
            script,
            out_dir,
        } => {
            let logs = run_scenario_files(&scene, &script, &out_dir, &HarnessConfig::default())?;
            for (device, state) in &logs.final_states {
                println!("{device}: {}", serde_json::to_string(state).expect("enum"));
            }
        }
        Cmd::Calibrate {
            targets,
            out,
            grid,
            trials,
            seed,
            manifest,
        } => {
            let targets: CalibrationTargets = parse_json(&targets)?;
            let grid: SearchGrid = match grid {
                Some(p) => parse_json(&p)?,
                None => serde_json::from_str(SHIPPED_SEARCH_GRID).expect("shipped search grid"),
            };
            let cal = calibrate(&targets, &grid, trials, seed, &HarnessConfig::default())?;
            let mut text = serde_json::to_string_pretty(&cal.model).expect("loss model");
            text.push('\n');
            write(&out, text)?;
            if let Some(m) = manifest {
                let doc = serde_json::json!({
                    "seed": seed,
                    "trials_per_condition": trials,
                    "targets": targets,
                    "candidates_evaluated": cal.candidates_evaluated,
                    "objective": cal.objective,
                    "model": cal.model,
                    "achieved": cal.summary,
                });
                let mut text = serde_json::to_string_pretty(&doc).expect("manifest");
                text.push('\n');
                write(&m, text)?;
            }
            println!("{}", cal.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
