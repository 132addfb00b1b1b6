use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use entcut::cft::KacLabel;
use entcut_cli::analyze::{self, AnalyzeRequest, MatchOptions, Mode, NuOptions};
use entcut_cli::config::{parse_label, AnalysisOptions, RunConfig, OUTPUT_ENV};
use entcut_cli::record::Method;
use entcut_cli::{predict, run, CliError, CliResult};

/// Entanglement spectra of critical RSOS and Blume-Capel chains.
#[derive(Parser)]
#[command(name = "entcut", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the boundary-CFT tower between Cardy states a and b as JSON.
    Predict {
        #[arg(long)]
        p: u32,
        /// Kac label "r,s".
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "levels", default_value_t = 8)]
        max_level: usize,
    },
    /// Run DMRG (and ED for small chains) for every length in a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and $ENTCUT_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Independent jobs run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Analyze run records matched by glob patterns.
    Analyze {
        #[arg(required = true)]
        records: Vec<String>,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Dmrg)]
        method: MethodArg,
        /// Accept records written by different versions.
        #[arg(long)]
        force: bool,
        /// Where the report and table go; defaults to $ENTCUT_OUT, then ".".
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = AnalysisOptions::default().n_levels)]
        n_levels: usize,
        #[arg(long, default_value_t = AnalysisOptions::default().rel_gap)]
        rel_gap: f64,
        #[arg(long, default_value_t = AnalysisOptions::default().max_level)]
        max_level: usize,
        #[arg(long, default_value_t = AnalysisOptions::default().min_fit_length)]
        min_fit_length: usize,
        /// Entanglement-cut label to match against (repeatable); default is
        /// the label with the largest g-function.
        #[arg(long = "cut-label")]
        cut_labels: Vec<String>,
        /// Field whose weight is the predicted ν (fit-nu).
        #[arg(long)]
        field: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Match,
    FitC,
    FitEps0,
    FitNu,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dmrg,
    Ed,
}

fn label(text: &str) -> CliResult<KacLabel> {
    text.parse().map_err(CliError::from)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Predict { p, a, b, max_level } => {
            let doc = predict::predict(p, parse_label(p, &a)?, parse_label(p, &b)?, max_level)?;
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(())
        }
        Command::Run { config, out, jobs } => {
            let cfg = RunConfig::from_file(&config)?;
            let dir = cfg.output_dir(out);
            let plan = run::plan(&cfg)?;
            eprintln!("{} jobs, writing to {}", plan.len(), dir.display());
            let summary = run::run(&cfg, &dir, jobs)?;
            for path in run::record_paths(&dir, &summary) {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Analyze {
            records,
            mode,
            method,
            force,
            out,
            n_levels,
            rel_gap,
            max_level,
            min_fit_length,
            cut_labels,
            field,
        } => {
            let mode = match mode {
                ModeArg::Match => Mode::Match,
                ModeArg::FitC => Mode::FitC,
                ModeArg::FitEps0 => Mode::FitEps0,
                ModeArg::FitNu => Mode::FitNu,
            };
            let req = AnalyzeRequest {
                patterns: records,
                mode,
                method: match method {
                    MethodArg::Dmrg => Method::Dmrg,
                    MethodArg::Ed => Method::Ed,
                },
                force,
                options: AnalysisOptions {
                    n_levels,
                    rel_gap,
                    max_level,
                    min_fit_length,
                },
                matching: MatchOptions {
                    cut_labels: cut_labels.iter().map(|t| label(t)).collect::<CliResult<_>>()?,
                },
                nu: NuOptions {
                    field: field.as_deref().map(label).transpose()?,
                },
            };
            let doc = analyze::analyze(&req)?;
            let dir = out
                .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let (json, csv) = analyze::write_outputs(&doc, &dir, mode)?;
            print_summary(&doc.report);
            println!("{}\n{}", json.display(), csv.display());
            Ok(())
        }
    }
}

fn print_summary(report: &analyze::Report) {
    use analyze::Report;
    match report {
        Report::Match(r) => {
            for row in &r.rows {
                let m: Vec<String> = row.matches.iter().map(|t| format!("a={} matched {}", t.a, t.matched)).collect();
                println!("L = {}: counts {:?}; {}", row.length, row.counts, m.join(", "));
            }
        }
        Report::FitC(r) => println!("c = {:.5} ± {:.5} (expected {:.5})", r.c, r.c_err, r.c_expected),
        Report::FitEps0(r) => {
            for f in &r.fits {
                println!(
                    "{} {}: slope {:.6} ± {:.6} (expected {:.6}), intercept {:.6} ± {:.6}",
                    f.family.left, f.family.right, f.fit.slope, f.fit.slope_err, f.slope_expected, f.fit.intercept, f.fit.intercept_err
                );
            }
            if let Some(d) = &r.difference {
                println!("intercept difference {:.6} ± {:.6} (expected {:.6})", d.measured, d.measured_err, d.expected);
            }
        }
        Report::FitNu(r) => {
            let expected = r.nu_expected.map_or(String::new(), |n| format!(" (expected {n:.5})"));
            println!("nu = {:.5} ± {:.5}{expected}", r.fit.nu, r.fit.nu_err);
        }
    }
}
