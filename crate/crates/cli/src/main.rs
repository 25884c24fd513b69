//! `psdo`: scenario runner for the symbol pipeline.

mod pipeline;
mod report;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use psdo_core::oracle::{quantize, riesz_refine, write_operator, REFINEMENT_NODES};
use psdo_core::symbol::serialize::SymbolRecord;
use rayon::prelude::*;

use pipeline::Refusal;
use scenario::{ConfigError, Scenario};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_REFUSED: u8 = 3;

const LEMMA_A1: &str = include_str!("../scenarios/lemma_a1.cfg");
const VANISHING_N1: &str = include_str!("../scenarios/vanishing_n1.cfg");
const VANISHING_N2: &str = include_str!("../scenarios/vanishing_n2.cfg");

#[derive(Parser)]
#[command(name = "psdo", version, about = "Projection symbols, residues and their matrix oracle")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory for reports, tables and exports.
    #[arg(long, global = true, env = "PSDO_OUT_DIR", default_value = "psdo-out")]
    out: PathBuf,
    /// Scenarios run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Rerun a scenario over a parameter range and write a CSV table.
    Sweep {
        config: PathBuf,
        /// `J=a..b` (orders, step 1), `M=a..b` or `N=a..b` (doubling), or a
        /// comma list such as `N=32,64`.
        #[arg(long)]
        param: String,
    },
    /// Run a bundled scenario.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Write the projection symbol of a scenario as JSON.
    ExportSymbol { config: PathBuf },
    /// Write the quantized projection of a scenario as a binary blob.
    ExportOperator {
        config: PathBuf,
        /// Replace the quantization by its idempotent refinement.
        #[arg(long)]
        realize: bool,
    },
}

#[derive(Subcommand)]
enum Demo {
    LemmaA1,
    Vanishing {
        #[arg(long, value_enum, default_value = "1")]
        dim: DemoDim,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoDim {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn config_error(e: &ConfigError) -> u8 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn refusal(origin: &str, r: &Refusal) -> u8 {
    match r {
        Refusal::Invalid(m) => {
            eprintln!("error: {origin}: {m}");
            EXIT_CONFIG
        }
        Refusal::Numerical(m) => {
            eprintln!("refused: {origin}: {m}");
            EXIT_REFUSED
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), u8> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| {
            eprintln!("error: cannot create {}: {e}", dir.display());
            EXIT_CONFIG
        })?;
    }
    std::fs::write(path, bytes).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_CONFIG
    })
}

/// Runs one parsed scenario, writes its report and returns the exit code.
fn run_one(s: &Scenario, text: &str, origin: &str, common: &Common) -> u8 {
    match pipeline::run(s, text, common.tol_scale, now()) {
        Ok(outcome) => {
            let path = common.out.join(format!("{}.report", s.name));
            if let Err(code) = write_file(&path, outcome.report.render().as_bytes()) {
                return code;
            }
            for sec in outcome.report.sections.iter().filter(|s| s.name.starts_with("check.")) {
                let pass = sec.get("pass") == Some(&report::Value::Bool(true));
                println!("{} {} {}", s.name, &sec.name[6..], if pass { "PASS" } else { "FAIL" });
            }
            println!("{} report {}", s.name, path.display());
            if outcome.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(r) => {
            let code = refusal(origin, &r);
            let mut rep = report::Report::new(&s.name, text, now());
            let mut sec = report::Section::new("summary");
            let msg = match &r {
                Refusal::Invalid(m) | Refusal::Numerical(m) => m.clone(),
            };
            sec.text("status", if code == EXIT_REFUSED { "refused" } else { "invalid" })
                .text("error", msg);
            rep.sections.push(sec);
            let _ = write_file(&common.out.join(format!("{}.report", s.name)), rep.render().as_bytes());
            code
        }
    }
}

fn load(path: &Path) -> Result<(Scenario, String), u8> {
    Scenario::load(path).map_err(|e| config_error(&e))
}

fn run_files(configs: &[PathBuf], common: &Common) -> u8 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let codes: Vec<u8> = pool.install(|| {
        configs
            .par_iter()
            .map(|path| match load(path) {
                Ok((s, text)) => run_one(&s, &text, &path.display().to_string(), common),
                Err(code) => code,
            })
            .collect()
    });
    // Config errors outrank refusals, which outrank failed checks.
    [EXIT_CONFIG, EXIT_REFUSED, EXIT_FAIL]
        .into_iter()
        .find(|c| codes.contains(c))
        .unwrap_or(EXIT_PASS)
}

fn run_demo(name: &str, text: &str, common: &Common) -> u8 {
    let origin = format!("demo:{name}");
    match Scenario::parse(text, &origin) {
        Ok(s) => run_one(&s, text, &origin, common),
        Err(e) => config_error(&e),
    }
}

/// Values named by a `--param` argument.
fn parse_param(arg: &str) -> Result<(String, Vec<usize>), String> {
    let (name, values) = arg.split_once('=').ok_or("expected NAME=RANGE")?;
    let name = name.trim().to_string();
    if !["J", "M", "N"].contains(&name.as_str()) {
        return Err(format!("unknown sweep parameter {name} (expected J, M or N)"));
    }
    let int = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("bad value {s:?}: {e}"));
    let list = if let Some((a, b)) = values.split_once("..") {
        let (a, b) = (int(a)?, int(b)?);
        if a > b {
            return Err(format!("empty range {a}..{b}"));
        }
        if name == "J" {
            (a..=b).collect()
        } else {
            if a == 0 {
                return Err("doubling range must start above zero".into());
            }
            std::iter::successors(Some(a), |v| Some(v * 2)).take_while(|v| *v <= b).collect()
        }
    } else {
        values.split(',').map(int).collect::<Result<Vec<_>, _>>()?
    };
    Ok((name, list))
}

fn sweep(config: &Path, param: &str, common: &Common) -> u8 {
    let (base, _) = match load(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let (name, values) = match parse_param(param) {
        Ok(v) => v,
        Err(m) => {
            eprintln!("error: --param: {m}");
            return EXIT_CONFIG;
        }
    };
    let mut rows = csv::Writer::from_writer(Vec::new());
    let _ = rows.write_record(["param", "value", "section", "key", "number"]);
    let mut worst = EXIT_PASS;
    for v in values {
        let mut s = base.clone();
        match name.as_str() {
            "J" => s.projection.order = v,
            "M" => s.projection.nodes = v,
            _ => {
                if let Some(m) = s.manifold.as_mut() {
                    m.n = v;
                }
            }
        }
        if let Err(m) = s.validate() {
            eprintln!("error: {}: {name}={v}: {m}", config.display());
            return EXIT_CONFIG;
        }
        let text = format!("{name}={v}");
        match pipeline::run(&s, &text, common.tol_scale, 0) {
            Ok(outcome) => {
                if !outcome.passed {
                    worst = worst.max(EXIT_FAIL);
                }
                for sec in &outcome.report.sections {
                    for (k, val) in &sec.entries {
                        let number = match val {
                            report::Value::Float(x) => report::float(*x),
                            report::Value::Int(i) => i.to_string(),
                            report::Value::Bool(b) => (*b as u8).to_string(),
                            report::Value::Text(_) => continue,
                        };
                        let _ = rows.write_record([name.as_str(), &v.to_string(), &sec.name, k, &number]);
                    }
                }
            }
            Err(r) => {
                let code = refusal(&format!("{} ({name}={v})", config.display()), &r);
                if code == EXIT_CONFIG {
                    return code;
                }
                worst = EXIT_REFUSED;
            }
        }
    }
    let bytes = rows.into_inner().unwrap_or_default();
    let path = common.out.join(format!("{}.sweep-{name}.csv", base.name));
    if let Err(code) = write_file(&path, &bytes) {
        return code;
    }
    println!("{} sweep {}", base.name, path.display());
    worst
}

fn export(config: &Path, common: &Common, operator: Option<bool>) -> u8 {
    let (s, _) = match load(config) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let origin = config.display().to_string();
    let pi = match pipeline::field(&s).and_then(|f| pipeline::projection(&s, &f)) {
        Ok(pi) => pi,
        Err(r) => return refusal(&origin, &r),
    };
    let (path, bytes) = match operator {
        None => {
            let json = serde_json::to_vec(&SymbolRecord::from_symbol(&pi)).expect("symbol records serialize");
            (common.out.join(format!("{}.symbol.json", s.name)), json)
        }
        Some(realize) => {
            let op = quantize(&pi, pi.manifold().n() / 2).and_then(|q| {
                if realize {
                    riesz_refine(&q, REFINEMENT_NODES)
                } else {
                    Ok(q)
                }
            });
            let mut buf = Vec::new();
            if let Err(e) = op.and_then(|op| write_operator(&op, &mut buf)) {
                return refusal(&origin, &e.into());
            }
            (common.out.join(format!("{}.operator.bin", s.name)), buf)
        }
    };
    if let Err(code) = write_file(&path, &bytes) {
        return code;
    }
    println!("{} export {}", s.name, path.display());
    EXIT_PASS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.common;
    if !(common.tol_scale.is_finite() && common.tol_scale > 0.0) {
        eprintln!("error: --tol-scale must be a positive number");
        return ExitCode::from(EXIT_CONFIG);
    }
    let code = match cli.command {
        Command::Run { configs } => run_files(&configs, &common),
        Command::Sweep { config, param } => sweep(&config, &param, &common),
        Command::Demo { which } => match which {
            Demo::LemmaA1 => run_demo("lemma_a1", LEMMA_A1, &common),
            Demo::Vanishing { dim: DemoDim::One } => run_demo("vanishing_n1", VANISHING_N1, &common),
            Demo::Vanishing { dim: DemoDim::Two } => run_demo("vanishing_n2", VANISHING_N2, &common),
        },
        Command::ExportSymbol { config } => export(&config, &common, None),
        Command::ExportOperator { config, realize } => export(&config, &common, Some(realize)),
    };
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parameters() {
        assert_eq!(parse_param("J=0..4").unwrap(), ("J".into(), vec![0, 1, 2, 3, 4]));
        assert_eq!(parse_param("N=16..128").unwrap().1, vec![16, 32, 64, 128]);
        assert_eq!(parse_param("M=32,64").unwrap().1, vec![32, 64]);
        assert!(parse_param("K=1..2").is_err());
        assert!(parse_param("J=3..1").is_err());
    }

    #[test]
    fn bundled_scenarios_parse() {
        for (name, text) in [("a", LEMMA_A1), ("b", VANISHING_N1), ("c", VANISHING_N2)] {
            Scenario::parse(text, name).unwrap();
        }
    }
}
