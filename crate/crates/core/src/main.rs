use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use filterbound::bounds::BoundConfig;
use filterbound::filter::FloatFormat;
use filterbound::frontend::{analyze, check, parse, AnalyzeOptions, CheckOptions};

const EXIT_UNBOUNDED: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_VIOLATION: u8 = 4;
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(name = "filterbound", version, about = "Sound worst-case output bounds for linear filter networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Bound every output of a network file.
    Analyze {
        file: PathBuf,
        /// Number format: ieee32, ieee64, exact, fixed:<delta>[:rne].
        #[arg(long)]
        format: Option<FloatFormat>,
        #[arg(long, value_enum, default_value = "text")]
        report: ReportKind,
        /// Cap on developed impulse-response coefficients per kernel.
        #[arg(long, default_value_t = filterbound::bounds::DEFAULT_N_MAX)]
        dev_max: usize,
        /// Coefficient size (bits) above which kernels are re-approximated; 0 disables.
        #[arg(long, default_value_t = filterbound::filter::DEFAULT_QUANTIZE_BITS)]
        quantize_bits: u64,
        /// Charge every reset slot separately, even when groups are declared.
        #[arg(long)]
        no_refine: bool,
        /// Exit with status 2 if some output is unbounded.
        #[arg(long)]
        strict: bool,
        /// Simulate the network and compare against the computed bounds.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        runs: usize,
        /// Multiplies the bounds handed to --check (values below 1 test the harness).
        #[arg(long, default_value_t = 1.0)]
        bound_scale: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_OTHER } else { 0 });
        }
    };
    let Command::Analyze { file, format, report, dev_max, quantize_bits, no_refine, strict, check: run_check, steps, seed, runs, bound_scale, jobs } =
        cli.command;

    let src = match std::fs::read_to_string(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return ExitCode::from(EXIT_OTHER);
        }
    };
    let model = match parse(&src) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{}:{e}", file.display());
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let opts = AnalyzeOptions {
        format,
        bounds: BoundConfig { n_max: dev_max, jobs: jobs.max(1) },
        quantize_bits: (quantize_bits > 0).then_some(quantize_bits),
        refine: if no_refine { Some(false) } else { None },
    };
    let rep = match analyze(&model, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: analysis failed: {e}", file.display());
            return ExitCode::from(EXIT_OTHER);
        }
    };
    info!("analyzed {} in {:?}", file.display(), rep.elapsed);

    let outcome = if run_check {
        let fmt = format.or(model.format).unwrap_or_default();
        let bounds: Vec<f64> = rep.outputs.iter().map(|o| o.bound.0 * bound_scale).collect();
        match check(&model, &bounds, &fmt, &CheckOptions { steps, seed, runs }) {
            Ok(o) => Some(o),
            Err(e) => {
                eprintln!("{}: check failed: {e}", file.display());
                return ExitCode::from(EXIT_OTHER);
            }
        }
    } else {
        None
    };

    match report {
        ReportKind::Json => match &outcome {
            None => println!("{}", rep.to_json()),
            Some(o) => {
                let v = serde_json::json!({ "report": rep, "check": o });
                println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            }
        },
        ReportKind::Text => {
            print!("{}", rep.to_text());
            println!("elapsed {:.3} s", rep.elapsed.as_secs_f64());
            if let Some(o) = &outcome {
                println!("check: {} runs x {} steps, {} violation(s)", o.runs, o.steps, o.violations.len());
                for (name, (m, s)) in model.outputs.iter().zip(o.max_observed.iter().zip(&o.slack)) {
                    println!("    {name}: max |y| = {m:.6e}, slack {s:.6e}");
                }
            }
        }
    }

    if let Some(o) = &outcome {
        if !o.passed() {
            for v in &o.violations {
                eprintln!(
                    "violation: run {} output {} step {}: |y| = {:e} > {:e}; inputs {:?}",
                    v.run, v.output, v.step, v.value, v.bound, v.trace_prefix
                );
            }
            return ExitCode::from(EXIT_VIOLATION);
        }
    }
    if !rep.bounded {
        warn!("unbounded: {}", rep.unbounded.join(", "));
        if strict {
            return ExitCode::from(EXIT_UNBOUNDED);
        }
    }
    ExitCode::SUCCESS
}
