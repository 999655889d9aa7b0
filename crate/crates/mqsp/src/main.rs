use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use mqsp::grid::GridExport;
use mqsp::named::Family;
use mqsp::peel::{conjecture_scan, readoff, DEFAULT_TOLERANCE, TOLERANCE_ENV};
use mqsp::protocol::verify_structure;
use mqsp::spectral1d::complete_qsp_1d;
use mqsp::spectral2d::{complete_mqsp_2d, Spectral2Error};
use mqsp::{build_unitary, LaurentPoly2, ProtocolSpec, Su2LaurentUnitary, Var};

#[derive(Parser)]
#[command(
    name = "mqsp",
    version,
    about = "Multivariable quantum signal processing toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build P and Q from a protocol file and check their structure.
    Build { protocol: PathBuf },
    /// Check a polynomial file against the structure conditions for n iterates, m of them in a.
    Verify {
        poly: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    /// Recover a protocol from a polynomial file.
    Readoff { poly: PathBuf },
    /// Complete real parts to a unitary and read off its phases.
    Complete {
        poly: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        vars: u8,
        /// Degree bound, `n` for one variable or `n,m` for two.
        #[arg(long)]
        deg: String,
    },
    /// Check leading-slice proportionality on random protocols.
    Scan {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving counterexample files.
        #[arg(long, default_value = "mqsp-counterexamples")]
        dump_dir: PathBuf,
    },
    /// Write |P|^2 on a torus grid.
    Plot {
        #[arg(conflicts_with = "named", required_unless_present = "named")]
        protocol: Option<PathBuf>,
        /// Named family, `trivial:N` or `xyz:N`.
        #[arg(long)]
        named: Option<String>,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Check(anyhow::Error),
    Input(anyhow::Error),
    NotPeelable,
    Counterexample(PathBuf),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Input(_) => 2,
            Failure::NotPeelable => 3,
            Failure::Counterexample(_) => 4,
        }
    }
}

type Outcome = Result<(), Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

#[derive(Deserialize)]
struct PolyFile {
    #[serde(rename = "P")]
    p: LaurentPoly2,
    #[serde(rename = "Q")]
    q: LaurentPoly2,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(input)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn tolerance() -> Result<f64, Failure> {
    match std::env::var(TOLERANCE_ENV) {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| {
                input(anyhow!(
                    "{TOLERANCE_ENV} must be a positive number, got {s:?}"
                ))
            }),
        Err(_) => Ok(DEFAULT_TOLERANCE),
    }
}

fn cmd_build(path: &Path) -> Outcome {
    let spec: ProtocolSpec = read_json(path)?;
    let u = build_unitary(&spec);
    let report = verify_structure(&u, spec.len(), spec.count_a());
    print_json(&json!({"P": u.p, "Q": u.q, "report": report}));
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check(anyhow!("structure check failed")))
    }
}

fn cmd_verify(path: &Path, n: usize, m: usize) -> Outcome {
    let f: PolyFile = read_json(path)?;
    let report = verify_structure(&Su2LaurentUnitary::new(f.p, f.q), n, m);
    print_json(&report);
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check(anyhow!("structure check failed")))
    }
}

fn cmd_readoff(path: &Path) -> Outcome {
    let f: PolyFile = read_json(path)?;
    let res = readoff(&f.p, &f.q, tolerance()?).map_err(|e| Failure::Check(e.into()))?;
    print_json(&res);
    Ok(())
}

fn parse_deg(deg: &str, vars: u8) -> Result<(usize, usize), Failure> {
    let parts: Vec<&str> = deg.split(',').map(str::trim).collect();
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| input(anyhow!("bad degree {s:?}")))
    };
    match (vars, parts.as_slice()) {
        (1, [n]) => Ok((num(n)?, 0)),
        (2, [n, m]) => Ok((num(n)?, num(m)?)),
        _ => Err(input(anyhow!("--deg {deg:?} does not match --vars {vars}"))),
    }
}

fn cmd_complete(path: &Path, vars: u8, deg: &str) -> Outcome {
    let (n, m) = parse_deg(deg, vars)?;
    let f: PolyFile = read_json(path)?;
    let tol = tolerance()?;
    if vars == 1 {
        let p = f.p.to_univariate(Var::A).map_err(input)?;
        let q = f.q.to_univariate(Var::A).map_err(input)?;
        let out = complete_qsp_1d(&p, &q, n, tol).map_err(|e| Failure::Check(e.into()))?;
        print_json(&json!({
            "unitary": out.unitary,
            "spec": out.spec,
            "readoffResidual": out.readoff_residual,
            "factorResidual": out.factorization.residual,
            "rootClass": out.factorization.root_class,
        }));
        return Ok(());
    }
    match complete_mqsp_2d(&f.p, &f.q, n, m, tol) {
        Ok(out) => {
            print_json(&out);
            if out.is_peelable() {
                Ok(())
            } else {
                eprintln!("completion valid but not peelable");
                Err(Failure::NotPeelable)
            }
        }
        Err(Spectral2Error::RankConditionFailed(report)) => {
            print_json(&json!({
                "satisfied": false,
                "singularValues": report.singular_values,
                "rank": report,
            }));
            Err(Failure::Check(anyhow!("rank condition not satisfied")))
        }
        Err(e) => Err(Failure::Check(e.into())),
    }
}

fn cmd_scan(n_max: usize, trials: usize, seed: u64, dump_dir: &Path) -> Outcome {
    let summary = conjecture_scan(n_max, trials, seed, tolerance()?);
    print_json(&summary);
    if summary.counterexamples.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dump_dir)
        .with_context(|| format!("creating {}", dump_dir.display()))
        .map_err(Failure::Check)?;
    for c in &summary.counterexamples {
        let file = dump_dir.join(format!("counterexample-{}.json", c.trial));
        let text = serde_json::to_string_pretty(c).expect("serializable");
        fs::write(&file, text)
            .with_context(|| format!("writing {}", file.display()))
            .map_err(Failure::Check)?;
    }
    Err(Failure::Counterexample(dump_dir.to_path_buf()))
}

fn cmd_plot(
    protocol: Option<&Path>,
    named: Option<&str>,
    grid: usize,
    format: Format,
    output: &Path,
) -> Outcome {
    let spec = match (protocol, named) {
        (Some(p), None) => read_json::<ProtocolSpec>(p)?,
        (None, Some(name)) => {
            let fam: Family = name.parse().map_err(input)?;
            fam.build().map_err(input)?.spec
        }
        _ => return Err(input(anyhow!("give a protocol file or --named"))),
    };
    let g = GridExport::from_protocol(&spec, grid).map_err(input)?;
    let bytes = match format {
        Format::Csv => g.to_csv().into_bytes(),
        Format::Pgm => g.to_pgm(),
    };
    fs::write(output, bytes)
        .with_context(|| format!("writing {}", output.display()))
        .map_err(Failure::Check)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { protocol } => cmd_build(&protocol),
        Command::Verify { poly, n, m } => cmd_verify(&poly, n, m),
        Command::Readoff { poly } => cmd_readoff(&poly),
        Command::Complete { poly, vars, deg } => cmd_complete(&poly, vars, &deg),
        Command::Scan {
            n_max,
            trials,
            seed,
            dump_dir,
        } => cmd_scan(n_max, trials, seed, &dump_dir),
        Command::Plot {
            protocol,
            named,
            grid,
            format,
            output,
        } => cmd_plot(protocol.as_deref(), named.as_deref(), grid, format, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(e) | Failure::Input(e) => eprintln!("error: {e:#}"),
                Failure::NotPeelable => {}
                Failure::Counterexample(dir) => {
                    eprintln!("counterexamples written to {}", dir.display())
                }
            }
            ExitCode::from(f.code())
        }
    }
}
