use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use propinfer::harness::{
    attack_model, emit_report, read_result, run_experiment, run_sweep, train_target, write_result, write_timing, ExperimentConfig, ExperimentResult, HarnessError,
};
use propinfer::models::{read_model, write_model};
use propinfer::server::{serve, RemoteModel};

#[derive(Parser)]
#[command(name = "propinfer", version, about = "Property inference attacks on models trained with pooled data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run an experiment once per value of a swept field.
    Sweep {
        config: PathBuf,
        /// queries, split, classes or with_a (or any config key).
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rebuild report files from saved result files.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train a target model as an experiment repetition would and save it.
    TrainTarget {
        config: PathBuf,
        /// Share of the property value in the honest party's data.
        #[arg(long)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        rep: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a saved model over the query protocol.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Close connections idle for this long.
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
    /// Attack a model behind a query server.
    AttackRemote {
        config: PathBuf,
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
}

fn save_results(results: &[ExperimentResult], out: &Path) -> Result<(), HarnessError> {
    for path in emit_report(results, out)? {
        println!("wrote {}", path.display());
    }
    for (i, r) in results.iter().enumerate() {
        let name = if results.len() == 1 { "result.json".to_string() } else { format!("result-{i:02}.json") };
        write_result(r, out.join(name))?;
    }
    write_timing(results, out.join("timing.csv"))?;
    print!("{}", propinfer::harness::render_text(results));
    Ok(())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let result = run_experiment(&cfg)?;
            save_results(&[result], &out)
        }
        Command::Sweep { config, axis, values, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let results = run_sweep(&cfg, &axis, &values)?;
            save_results(&results, &out)
        }
        Command::Report { results, out } => {
            let loaded = results.iter().map(read_result).collect::<Result<Vec<_>, _>>()?;
            for path in emit_report(&loaded, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::TrainTarget { config, ratio, rep, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let model = train_target(&cfg, ratio, rep)?;
            let file = File::create(&out).map_err(|e| io_err(&out, e))?;
            let mut w = BufWriter::new(file);
            write_model(&model, &mut w).and_then(|_| w.flush()).map_err(|e| io_err(&out, e))?;
            println!("wrote {} ({}, {} parameters)", out.display(), model.arch(), model.flatten_params().len());
            Ok(())
        }
        Command::Serve { model, listen, timeout_ms } => {
            let file = File::open(&model).map_err(|e| io_err(&model, e))?;
            let trained = read_model(BufReader::new(file)).map_err(|e| io_err(&model, e))?;
            let handle = serve(trained, &listen, timeout_ms.map(Duration::from_millis)).map_err(|e| HarnessError::Io(e.to_string()))?;
            println!("serving on {}", handle.local_addr());
            handle.wait();
            Ok(())
        }
        Command::AttackRemote { config, endpoint, timeout_ms } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let target = RemoteModel::new(endpoint, Duration::from_millis(timeout_ms));
            let verdict = attack_model(&cfg, &target)?;
            println!("predicted {} (confidence {:.4})", verdict.property, verdict.prediction.confidence);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
