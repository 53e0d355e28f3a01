use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use propest::estimators::estimate;
use propest::io::{
    digest_bytes, parse_population_csv, write_population_csv, ParamsDocument, ReportDocument,
};
use propest::montecarlo::{
    enumerate_exact, generate_population, run_experiment, run_experiment_with_workers,
    SyntheticSpec,
};
use propest::theory::{
    comparison_conditions, evaluate_theory, sensitivity, table_lineup, EstimatorTheory,
};
use propest::{
    compute_population_params, sample_stats, Constant, Design, Error, EstimatorConfig, T1Config,
    T2Config, T3Config, TbConfig, TcConfig,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Estimate a population proportion with the help of an auxiliary variable.
#[derive(Debug, Parser)]
#[command(name = "propest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute population parameters from a `phi,x` CSV frame.
    Params {
        #[arg(long)]
        input: PathBuf,
        /// Sample size to record as the design.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// First-order biases, MSEs, optimal constants and comparison checks.
    Theory {
        #[arg(long)]
        params: PathBuf,
        #[command(flatten)]
        configs: ConfigArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Percent relative efficiency table.
    Pre {
        #[arg(long)]
        params: PathBuf,
        #[command(flatten)]
        configs: ConfigArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Point estimate from one sample.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// 0-based row indices: a file of whitespace/comma separated
        /// integers, or an inline list such as `0,4,7`.
        #[arg(long)]
        indices: String,
        #[arg(long, value_enum)]
        estimator: EstimatorName,
        #[command(flatten)]
        configs: ConfigArgs,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo (or exact) sampling experiment on a population frame.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Visit every sample instead of drawing (small frames only).
        #[arg(long)]
        exact: bool,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        configs: ConfigArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Draw a synthetic population frame.
    Generate {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        /// JSON synthetic-population recipe; `--size` overrides its size.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Efficiency intervals under rounding of the summary statistics.
    Sensitivity {
        #[arg(long)]
        params: PathBuf,
        /// Significant digits the statistics were rounded to.
        #[arg(long)]
        digits: u32,
        #[command(flatten)]
        configs: ConfigArgs,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorName {
    P,
    Ta,
    Tb,
    Tc,
    T1,
    T2,
    T3,
}

/// Estimator settings as `key=value` lists; weights accept `optimal`.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// e.g. `h1=optimal`
    #[arg(long, value_parser = parse_tb)]
    tb: Option<TbConfig>,
    /// e.g. `a=1,b=0,alpha=1,beta=0[,q1=..,q2=..]`
    #[arg(long, value_parser = parse_tc)]
    tc: Option<TcConfig>,
    /// e.g. `alpha=optimal,beta=0`
    #[arg(long, value_parser = parse_t1)]
    t1: Option<T1Config>,
    /// e.g. `h1=optimal,h2=optimal`
    #[arg(long, value_parser = parse_t2)]
    t2: Option<T2Config>,
    /// e.g. `gamma=1,g=1,delta=1[,m1=..,m2=..]`
    #[arg(long, value_parser = parse_t3)]
    t3: Option<T3Config>,
}

impl ConfigArgs {
    fn lineup(&self) -> Vec<EstimatorConfig> {
        let mut lineup = table_lineup(self.tc.unwrap_or_default(), self.t3.unwrap_or_default());
        for c in &mut lineup {
            match c {
                EstimatorConfig::RegressionTb(v) => *v = self.tb.unwrap_or_default(),
                EstimatorConfig::T1(v) => *v = self.t1.unwrap_or_default(),
                EstimatorConfig::T2(v) => *v = self.t2.unwrap_or_default(),
                _ => {}
            }
        }
        lineup
    }

    fn single(&self, name: EstimatorName) -> EstimatorConfig {
        match name {
            EstimatorName::P => EstimatorConfig::Usual,
            EstimatorName::Ta => EstimatorConfig::RatioTa,
            EstimatorName::Tb => EstimatorConfig::RegressionTb(self.tb.unwrap_or_default()),
            EstimatorName::Tc => EstimatorConfig::FamilyTc(self.tc.unwrap_or_default()),
            EstimatorName::T1 => EstimatorConfig::T1(self.t1.unwrap_or_default()),
            EstimatorName::T2 => EstimatorConfig::T2(self.t2.unwrap_or_default()),
            EstimatorName::T3 => EstimatorConfig::T3(self.t3.unwrap_or_default()),
        }
    }
}

fn key_values(s: &str) -> Result<Vec<(String, String)>, String> {
    s.split(',')
        .filter(|kv| !kv.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn number(key: &str, v: &str) -> Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("{key}: `{v}` is not a finite number"))
}

fn constant(key: &str, v: &str) -> Result<Constant, String> {
    if v == "optimal" {
        Ok(Constant::Optimal)
    } else {
        number(key, v).map(Constant::Value)
    }
}

fn unknown(key: &str, allowed: &str) -> String {
    format!("unknown key `{key}` (expected {allowed})")
}

fn parse_tb(s: &str) -> Result<TbConfig, String> {
    let mut c = TbConfig::default();
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "h1" => c.h1 = constant(&k, &v)?,
            _ => return Err(unknown(&k, "h1")),
        }
    }
    Ok(c)
}

fn parse_tc(s: &str) -> Result<TcConfig, String> {
    let mut c = TcConfig::default();
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "a" => c.a = number(&k, &v)?,
            "b" => c.b = number(&k, &v)?,
            "alpha" => c.alpha = number(&k, &v)?,
            "beta" => c.beta = number(&k, &v)?,
            "q1" => c.q1 = constant(&k, &v)?,
            "q2" => c.q2 = constant(&k, &v)?,
            _ => return Err(unknown(&k, "a, b, alpha, beta, q1, q2")),
        }
    }
    Ok(c)
}

fn parse_t1(s: &str) -> Result<T1Config, String> {
    let mut c = T1Config::default();
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "alpha" => c.alpha = constant(&k, &v)?,
            "beta" => c.beta = constant(&k, &v)?,
            _ => return Err(unknown(&k, "alpha, beta")),
        }
    }
    Ok(c)
}

fn parse_t2(s: &str) -> Result<T2Config, String> {
    let mut c = T2Config::default();
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "h1" => c.h1 = constant(&k, &v)?,
            "h2" => c.h2 = constant(&k, &v)?,
            _ => return Err(unknown(&k, "h1, h2")),
        }
    }
    Ok(c)
}

fn parse_t3(s: &str) -> Result<T3Config, String> {
    let mut c = T3Config::default();
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "gamma" => c.gamma = number(&k, &v)?,
            "g" => c.g = number(&k, &v)?,
            "delta" => c.delta = number(&k, &v)?,
            "m1" => c.m1 = constant(&k, &v)?,
            "m2" => c.m2 = constant(&k, &v)?,
            _ => return Err(unknown(&k, "gamma, g, delta, m1, m2")),
        }
    }
    Ok(c)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_params(path: &Path) -> Result<(ParamsDocument, String), Error> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Parse {
        line: 0,
        message: "params file is not UTF-8".into(),
    })?;
    Ok((ParamsDocument::from_json(&text)?, digest_bytes(&bytes)))
}

fn load_frame(path: &Path) -> Result<(propest::PopulationFrame, String), Error> {
    let bytes = read_bytes(path)?;
    Ok((
        parse_population_csv(bytes.as_slice())?,
        digest_bytes(&bytes),
    ))
}

fn parse_indices(arg: &str) -> Result<Vec<usize>, Error> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        String::from_utf8(read_bytes(path)?).map_err(|_| Error::Parse {
            line: 0,
            message: "indices file is not UTF-8".into(),
        })?
    } else {
        arg.to_string()
    };
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for token in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if token.is_empty() {
                continue;
            }
            out.push(token.parse().map_err(|_| Error::Parse {
                line: line_no as u64 + 1,
                message: format!("`{token}` is not a row index"),
            })?);
        }
    }
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "—".to_string(), |x| format!("{x:.2}"))
}

fn render_table(rows: &[EstimatorTheory]) -> String {
    let cells: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r.label.clone(), cell(r.pre)))
        .collect();
    let widths: Vec<usize> = cells
        .iter()
        .map(|(l, c)| l.chars().count().max(c.chars().count()))
        .collect();
    let line = |pick: &dyn Fn(&(String, String)) -> &String| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| {
                let s = pick(c);
                format!("{}{s}", " ".repeat(w - s.chars().count()))
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let header = line(&|c| &c.0);
    let values = line(&|c| &c.1);
    format!("{header}\n{values}\n")
}

fn render_csv(rows: &[EstimatorTheory]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["estimator", "pre"]).map_err(io)?;
    for r in rows {
        let pre = r.pre.map_or_else(String::new, |v| format!("{v}"));
        w.write_record([r.label.as_str(), pre.as_str()])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Params { input, n, output } => {
            let (frame, _) = load_frame(&input)?;
            let params = compute_population_params(&frame)?;
            if let Some(n) = n {
                Design::new(n, frame.len())?;
            }
            let doc = ParamsDocument::from_params(&params, n);
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
            write_text(&output, &(text + "\n"))
        }
        Command::Theory {
            params,
            configs,
            output,
        } => {
            let (doc, digest) = load_params(&params)?;
            let pop = doc.params()?;
            let design = doc.design()?;
            let lineup = configs.lineup();
            let mut report = ReportDocument::new(digest, lineup.clone());
            report.theory = Some(evaluate_theory(&pop, &design, &lineup)?);
            report.comparisons = Some(comparison_conditions(
                &pop,
                design.f,
                &configs.tc.unwrap_or_default(),
                &configs.t3.unwrap_or_default(),
            ));
            write_text(&output, &(report.to_json()? + "\n"))
        }
        Command::Pre {
            params,
            configs,
            format,
        } => {
            let (doc, digest) = load_params(&params)?;
            let pop = doc.params()?;
            let design = doc.design()?;
            let lineup = configs.lineup();
            let theory = evaluate_theory(&pop, &design, &lineup)?;
            let text = match format {
                Format::Table => render_table(&theory.estimators),
                Format::Csv => render_csv(&theory.estimators)?,
                Format::Json => {
                    let mut report = ReportDocument::new(digest, lineup);
                    report.theory = Some(theory);
                    report.to_json()? + "\n"
                }
            };
            print!("{text}");
            Ok(())
        }
        Command::Estimate {
            input,
            indices,
            estimator,
            configs,
            output,
        } => {
            let (frame, digest) = load_frame(&input)?;
            let pop = compute_population_params(&frame)?;
            let s = sample_stats(&frame, &parse_indices(&indices)?)?;
            let config = configs.single(estimator);
            let est = estimate(&s, &pop, &config)?;
            let mut report = ReportDocument::new(digest, vec![config]);
            report.estimates = Some(vec![est]);
            let text = report.to_json()? + "\n";
            match output {
                Some(path) => write_text(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Simulate {
            input,
            n,
            reps,
            seed,
            exact,
            threads,
            configs,
            output,
        } => {
            let (frame, digest) = load_frame(&input)?;
            let lineup = configs.lineup();
            let sim = if exact {
                enumerate_exact(&frame, n, &lineup)?
            } else {
                if reps == 0 {
                    return Err(Error::InvalidParameter("--reps must be positive".into()));
                }
                match threads {
                    Some(0) => {
                        return Err(Error::InvalidParameter("--threads must be positive".into()))
                    }
                    Some(w) => run_experiment_with_workers(&frame, n, &lineup, reps, seed, w)?,
                    None => run_experiment(&frame, n, &lineup, reps, seed)?,
                }
            };
            let mut report = ReportDocument::new(digest, lineup);
            report.simulation = Some(sim);
            write_text(&output, &(report.to_json()? + "\n"))
        }
        Command::Generate {
            size,
            seed,
            spec,
            output,
        } => {
            let mut recipe = match spec {
                Some(path) => {
                    let bytes = read_bytes(&path)?;
                    serde_json::from_slice::<SyntheticSpec>(&bytes).map_err(|e| Error::Parse {
                        line: e.line() as u64,
                        message: e.to_string(),
                    })?
                }
                None => SyntheticSpec::default(),
            };
            recipe.population_size = size;
            let g = generate_population(&recipe, seed)?;
            let mut buf = Vec::new();
            write_population_csv(&g.frame, &mut buf)?;
            fs::write(&output, buf).map_err(|e| Error::Io(format!("{}: {e}", output.display())))?;
            eprintln!(
                "N = {}, P = {:.4}, rho_pb = {:.4}, Cx = {:.4}, l03 = {:.4}, l04 = {:.4}",
                g.frame.len(),
                g.params.proportion,
                g.params.rho_pb,
                g.params.cx,
                g.params.lambda03,
                g.params.lambda04
            );
            Ok(())
        }
        Command::Sensitivity {
            params,
            digits,
            configs,
            output,
        } => {
            let (doc, digest) = load_params(&params)?;
            let pop = doc.params()?;
            let design = doc.design()?;
            let lineup = configs.lineup();
            let mut report = ReportDocument::new(digest, lineup.clone());
            report.sensitivity = Some(sensitivity(&pop, design.f, &lineup, digits)?);
            write_text(&output, &(report.to_json()? + "\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DATA
            })
        }
    }
}
