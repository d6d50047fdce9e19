//! Command-line front end for the `escape-lab` binary.
//!
//! Every command produces a [`Report`] (JSON by default, CSV for tabular
//! payloads with `--csv`). Exit codes: 0 on success, 1 when the verdict is
//! negative for the question the command asks, 2 on usage or runtime errors.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::circle::{
    deviation_profile, jamison_constant, lambda_set, pair_check, write_profile_csv, EstimateOptions, PairVerdict,
    ScanOptions, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::escape::{
    algebra_escape, default_witness_scan, non_jamison_witness, semigroup_scan, torus_escape, EscapeReport,
    EscapeVerdict, LatticeBasis, Real, SemigroupVerdict, TimeSet, WitnessOutcome,
};
use crate::matops::{ComplexMatrix, C64};
use crate::positivity::{
    deprima_test, nagisa_check, sector_root_check, write_scan_csv, DePrimaOutcome, NagisaVerdict,
    SectorRootVerdict,
};
use crate::random;
use crate::seqcore::SequenceSpec;

pub const SCHEMA: &str = "escape-lab/1";

#[derive(Debug, Parser)]
#[command(
    name = "escape-lab",
    version,
    about = "Jamison constants, pair decisions, escape and positivity checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// JSON output (default).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// CSV output for tabular payloads.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Numerical tolerance; each command has its own default.
    #[arg(long, global = true, value_parser = parse_tol)]
    pub tol: Option<f64>,
    /// Seed for generated matrices (`psd:`, `accretive:`, `hermitian:`).
    #[arg(long, global = true, default_value_t = random::DEFAULT_SEED)]
    pub seed: u64,
    /// Truncation index K.
    #[arg(long = "K", global = true)]
    pub k: Option<usize>,
    /// Denominator limit Q.
    #[arg(long = "Q", global = true, value_parser = parse_q)]
    pub q: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Two-sided estimate of the Jamison constant.
    Constant {
        spec: SequenceSpec,
        /// Left end of the branch-and-bound region [theta0, 1/2].
        #[arg(long, default_value_t = 1e-3)]
        theta0: f64,
        /// Node budget for branch-and-bound.
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
    },
    /// Decide whether (spec, epsilon) is a (strict) Jamison pair.
    Pair {
        spec: SequenceSpec,
        epsilon: Epsilon,
        #[arg(long)]
        strict: bool,
    },
    /// Rational points p/q (q <= Q) with deviation below epsilon.
    LambdaSet { spec: SequenceSpec, epsilon: Epsilon },
    /// Deviation on the grid theta = j/grid.
    Profile {
        spec: SequenceSpec,
        #[arg(long, default_value_t = 4096)]
        grid: u64,
    },
    /// Escape of A^{n_k} from I, or of n_k x from a lattice.
    Escape {
        #[command(subcommand)]
        target: EscapeTarget,
    },
    /// Accretive-power scan against positivity of a matrix.
    Positivity {
        matrix: MatrixSource,
        spec: SequenceSpec,
        /// Require Re A^{n_k} >= tol and test A >= tol·I.
        #[arg(long)]
        strict: bool,
        /// Also compare sup ‖A^{n_k} - I‖ <= 1 with 0 <= A <= I.
        #[arg(long)]
        interval: bool,
    },
    /// Principal m-th root with its numerical range in the sector of half-angle π/m.
    Root {
        matrix: MatrixSource,
        m: u32,
        #[arg(long, default_value_t = 256)]
        angles: usize,
        #[arg(long, default_value_t = 1e-6)]
        sector_tol: f64,
    },
    /// ‖exp(tG) - I‖ over a time set containing [0, 1].
    Semigroup {
        generator: MatrixSource,
        epsilon: Epsilon,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        /// Extra times, comma separated.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Diagonal matrix != I with sup_k ‖D^{n_k} - I‖ < epsilon.
    Witness {
        spec: SequenceSpec,
        epsilon: Epsilon,
        dim: usize,
        #[arg(long, default_value_t = 2048)]
        family_limit: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum EscapeTarget {
    /// First k with ‖A^{n_k} - I‖ >= epsilon.
    Algebra {
        spec: SequenceSpec,
        epsilon: Epsilon,
        matrix: MatrixSource,
    },
    /// First k with dist(n_k x, Γ) >= epsilon.
    Torus {
        spec: SequenceSpec,
        epsilon: Epsilon,
        /// Point coordinates, e.g. `1/3,0.25`.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        /// Lattice basis `v1;v2;...` with comma-separated entries (default: standard).
        #[arg(long)]
        basis: Option<String>,
    },
}

/// An ε argument; the literal is kept to size the default tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Epsilon {
    pub value: f64,
    pub literal: String,
}

impl Epsilon {
    /// `10^-d` for a literal with `d` decimals, at least [`DEFAULT_TOL`].
    pub fn literal_tolerance(&self) -> f64 {
        let mantissa = self.literal.split(['e', 'E']).next().unwrap_or("");
        let decimals = mantissa.split_once('.').map(|(_, f)| f.len()).unwrap_or(0);
        let exp: i32 = self
            .literal
            .split_once(['e', 'E'])
            .and_then(|(_, e)| e.parse().ok())
            .unwrap_or(0);
        DEFAULT_TOL.max(10f64.powi(exp - decimals as i32))
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value: f64 = s
            .parse()
            .map_err(|_| Error::Usage(format!("epsilon {s:?} is not a number")))?;
        if !(value > 0.0 && value <= 2.0) {
            return Err(Error::Usage(format!("epsilon {s} not in (0, 2]")));
        }
        Ok(Epsilon {
            value,
            literal: s.to_string(),
        })
    }
}

/// Where a matrix comes from: a file (JSON or text format), inline JSON, or a
/// generator `psd:<d>[:<rank>]`, `accretive:<d>[:<margin>]`, `hermitian:<d>`,
/// `scalar:<re>,<im>:<d>`, `identity:<d>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSource(pub String);

impl FromStr for MatrixSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Usage("empty matrix argument".into()));
        }
        Ok(MatrixSource(s.to_string()))
    }
}

impl MatrixSource {
    pub fn load(&self, seed: u64) -> Result<ComplexMatrix> {
        let s = self.0.as_str();
        let dim = |t: &str| -> Result<usize> {
            t.parse::<usize>()
                .ok()
                .filter(|&d| d >= 1)
                .ok_or_else(|| Error::Usage(format!("bad dimension {t:?} in {s:?}")))
        };
        let num = |t: &str| -> Result<f64> { t.parse().map_err(|_| Error::Usage(format!("bad number {t:?} in {s:?}"))) };
        let parts: Vec<&str> = s.split(':').collect();
        let mut rng = random::rng(seed);
        match parts.as_slice() {
            ["psd", d] => Ok(random::random_psd(dim(d)?, dim(d)?, &mut rng)),
            ["psd", d, r] => Ok(random::random_psd(dim(d)?, dim(r)?, &mut rng)),
            ["accretive", d] => Ok(random::random_accretive(dim(d)?, 0.1, &mut rng)),
            ["accretive", d, m] => Ok(random::random_accretive(dim(d)?, num(m)?, &mut rng)),
            ["hermitian", d] => Ok(random::random_hermitian(dim(d)?, &mut rng)),
            ["identity", d] => Ok(ComplexMatrix::identity(dim(d)?)),
            ["scalar", z, d] => {
                let (re, im) = z.split_once(',').unwrap_or((z, "0"));
                Ok(ComplexMatrix::identity(dim(d)?).scale(C64::new(num(re)?, num(im)?)))
            }
            _ if s.trim_start().starts_with('[') => ComplexMatrix::parse_any(s),
            _ => {
                let text = std::fs::read_to_string(Path::new(s)).map_err(|e| Error::Io(format!("{s}: {e}")))?;
                ComplexMatrix::parse_any(&text)
            }
        }
    }
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
        _ => Err(format!("tolerance {s:?} must be a finite number >= 0")),
    }
}

fn parse_q(s: &str) -> std::result::Result<u64, String> {
    match s.parse::<u64>() {
        Ok(q) if q >= 2 => Ok(q),
        _ => Err(format!("Q = {s:?} must be an integer >= 2")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    /// Arguments after the program name; re-running them reproduces `payload`.
    pub argv: Vec<String>,
    pub payload: Value,
    pub certificates: Value,
    pub exit_code: i32,
    pub timing: Timing,
}

/// A finished run: the report plus the CSV rendering when one was asked for.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    /// What the binary prints.
    pub fn render(&self) -> String {
        match &self.csv {
            Some(c) => c.clone(),
            None => {
                let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Parses argv (without the program name).
pub fn parse<I, S>(args: I) -> Result<Cli>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("escape-lab")).chain(args.into_iter().map(Into::into));
    Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.render().to_string()))
}

/// Parses and runs argv (without the program name).
pub fn run_args<S: AsRef<str>>(args: &[S]) -> Result<Outcome> {
    let argv: Vec<String> = args.iter().map(|a| a.as_ref().to_string()).collect();
    let cli = parse(argv.iter())?;
    run(&cli, argv)
}

struct Payload {
    value: Value,
    certificates: Value,
    exit_code: i32,
    csv: Option<String>,
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn run(cli: &Cli, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let g = &cli.global;
    let name = command_name(&cli.command);
    let p = dispatch(&cli.command, g)?;
    if g.csv && p.csv.is_none() {
        return Err(Error::Usage(format!("`{name}` has no tabular output; drop --csv")));
    }
    let mut payload = p.value;
    normalize_floats(&mut payload);
    let mut certificates = p.certificates;
    normalize_floats(&mut certificates);
    Ok(Outcome {
        report: Report {
            schema: SCHEMA.into(),
            command: name.into(),
            argv,
            payload,
            certificates,
            exit_code: p.exit_code,
            timing: Timing {
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            },
        },
        csv: if g.csv { p.csv } else { None },
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Constant { .. } => "constant",
        Command::Pair { .. } => "pair",
        Command::LambdaSet { .. } => "lambda-set",
        Command::Profile { .. } => "profile",
        Command::Escape { .. } => "escape",
        Command::Positivity { .. } => "positivity",
        Command::Root { .. } => "root",
        Command::Semigroup { .. } => "semigroup",
        Command::Witness { .. } => "witness",
    }
}

fn scan_options(g: &GlobalOpts, default: ScanOptions) -> ScanOptions {
    ScanOptions {
        q_max: g.q.unwrap_or(default.q_max),
        ..default
    }
}

fn dispatch(cmd: &Command, g: &GlobalOpts) -> Result<Payload> {
    match cmd {
        Command::Constant { spec, theta0, budget } => {
            if !(*theta0 > 0.0 && *theta0 < 0.5) {
                return Err(Error::Usage(format!("--theta0 {theta0} not in (0, 1/2)")));
            }
            let options = EstimateOptions {
                theta0: *theta0,
                truncation: g.k,
                node_budget: *budget,
                scan: scan_options(g, ScanOptions::default()),
                always_branch: false,
            };
            let est = jamison_constant(spec, &options)?;
            let value = json!({
                "spec": spec.to_string(),
                "lb": est.lower_bound,
                "lb_exactness": "certified_global",
                "ub": est.upper_bound,
                "ub_exactness": "exact_algebraic",
                "witness": est.witness_label,
                "witness_theta": est.witness.to_string(),
                "attains": est.witness_attains,
                "gap": est.upper_bound - est.lower_bound,
                "conventions": est.conventions,
            });
            let certificates = json!({
                "lower_region": est.lower_region,
                "analytic": est.analytic,
                "region_bound": est.region_bound,
                "truncation_k": est.truncation_k,
                "scan": options.scan,
                "theta0": options.theta0,
            });
            Ok(Payload {
                value,
                certificates,
                exit_code: 0,
                csv: None,
            })
        }
        Command::Pair { spec, epsilon, strict } => {
            let tol = g.tol.unwrap_or_else(|| epsilon.literal_tolerance());
            let options = EstimateOptions {
                truncation: g.k,
                scan: scan_options(g, ScanOptions::default()),
                ..EstimateOptions::default()
            };
            let r = pair_check(spec, epsilon.value, *strict, tol, &options)?;
            let exit_code = matches!(r.verdict, PairVerdict::CertifiedNo { .. }) as i32;
            let exactness = match r.verdict {
                PairVerdict::CertifiedYes { .. } => "certified_global_lower_bound",
                PairVerdict::CertifiedNo { .. } => "exact_rational_witness",
                PairVerdict::Unknown { .. } => "none",
            };
            let mut value = to_value(&r);
            value["exactness"] = exactness.into();
            Ok(Payload {
                value,
                certificates: json!({ "tol": tol, "scan": options.scan }),
                exit_code,
                csv: None,
            })
        }
        Command::LambdaSet { spec, epsilon } => {
            let q = g.q.unwrap_or(64);
            let set = lambda_set(spec, epsilon.value, q)?;
            let csv = csv_string(|buf| {
                let mut w = csv::Writer::from_writer(buf);
                let io = |e: csv::Error| Error::Io(e.to_string());
                w.write_record(["theta", "label", "deviation"]).map_err(io)?;
                for m in &set.members {
                    w.write_record([m.theta.to_string(), m.label.clone(), format!("{:.15e}", m.deviation)])
                        .map_err(io)?;
                }
                w.flush()?;
                Ok(())
            })?;
            let mut value = to_value(&set);
            value["exactness"] = "exact_rational".into();
            Ok(Payload {
                value,
                certificates: json!({ "denominator_limit": q, "complete": set.complete }),
                exit_code: 0,
                csv: Some(csv),
            })
        }
        Command::Profile { spec, grid } => {
            let k = g.k.unwrap_or(64);
            let rows = deviation_profile(spec, k, *grid)?;
            let csv = csv_string(|buf| write_profile_csv(&rows, buf))?;
            Ok(Payload {
                value: json!({ "spec": spec.to_string(), "grid": grid, "rows": rows }),
                certificates: json!({ "truncation_k": k }),
                exit_code: 0,
                csv: Some(csv),
            })
        }
        Command::Escape { target } => {
            let k = g.k.unwrap_or(64);
            let report = match target {
                EscapeTarget::Algebra { spec, epsilon, matrix } => {
                    algebra_escape(&matrix.load(g.seed)?, spec, epsilon.value, k)?
                }
                EscapeTarget::Torus { spec, epsilon, x, basis } => {
                    let x: Vec<Real> = x.iter().map(|t| t.parse()).collect::<Result<_>>()?;
                    let basis = match basis {
                        Some(b) => parse_basis(b)?,
                        None => LatticeBasis::standard(x.len()),
                    };
                    torus_escape(&x, &basis, spec, epsilon.value, k)?
                }
            };
            escape_payload(report, k)
        }
        Command::Positivity {
            matrix,
            spec,
            strict,
            interval,
        } => {
            let a = matrix.load(g.seed)?;
            let k = g.k.unwrap_or(64);
            let tol = g.tol.unwrap_or(DEFAULT_TOL);
            let r = deprima_test(&a, spec, k, tol, *strict)?;
            let csv = csv_string(|buf| write_scan_csv(&r.scan, buf))?;
            let mut exit_code = match r.outcome {
                DePrimaOutcome::Consistent | DePrimaOutcome::ConsistentWithoutCondition => 0,
                _ => 1,
            };
            let mut value = to_value(&r);
            if *interval {
                let n = nagisa_check(&a, spec, k, tol)?;
                if matches!(n.verdict, NagisaVerdict::Violation { .. }) {
                    exit_code = 1;
                }
                value["interval"] = to_value(&n);
            }
            value["exactness"] = if r.scalar_exact.is_some() {
                "exact_scalar_and_float_matrix"
            } else {
                "float_matrix"
            }
            .into();
            Ok(Payload {
                value,
                certificates: json!({ "tol": tol, "truncation_k": k, "seed": g.seed }),
                exit_code,
                csv: Some(csv),
            })
        }
        Command::Root {
            matrix,
            m,
            angles,
            sector_tol,
        } => {
            let a = matrix.load(g.seed)?;
            let tol = g.tol.unwrap_or(1e-8);
            let r = sector_root_check(&a, *m, *angles, tol, *sector_tol)?;
            let exit_code = matches!(r.verdict, SectorRootVerdict::Failed { .. }) as i32;
            let mut value = to_value(&r);
            value["exactness"] = "float".into();
            Ok(Payload {
                value,
                certificates: json!({ "residual_tol": tol, "sector_tol": sector_tol, "angles": angles }),
                exit_code,
                csv: None,
            })
        }
        Command::Semigroup {
            generator,
            epsilon,
            grid,
            times,
        } => {
            let gen = generator.load(g.seed)?;
            let ts = TimeSet::new(*grid, times.clone())?;
            let r = semigroup_scan(&gen, &ts, epsilon.value)?;
            let exit_code = matches!(r.verdict, SemigroupVerdict::Violation { .. }) as i32;
            let mut value = to_value(&r);
            value["exactness"] = "float_sampled".into();
            Ok(Payload {
                value,
                certificates: json!({ "epsilon_f": r.epsilon_f, "threshold": r.threshold, "prefix_only": r.prefix_only }),
                exit_code,
                csv: None,
            })
        }
        Command::Witness {
            spec,
            epsilon,
            dim,
            family_limit,
        } => {
            let mut scan = scan_options(g, default_witness_scan(spec));
            scan.family_limit = *family_limit;
            let r = non_jamison_witness(spec, epsilon.value, *dim, &scan)?;
            let exit_code = !matches!(r, WitnessOutcome::Found(_)) as i32;
            let mut value = to_value(&r);
            value["exactness"] = match r {
                WitnessOutcome::Found(_) => "exact_rational_phases",
                WitnessOutcome::NotFound { .. } => "certified_global_lower_bound",
                WitnessOutcome::Exhausted { .. } => "none",
            }
            .into();
            Ok(Payload {
                value,
                certificates: json!({ "scan": scan }),
                exit_code,
                csv: None,
            })
        }
    }
}

fn escape_payload(report: EscapeReport, k: usize) -> Result<Payload> {
    let exit_code = matches!(report.verdict, EscapeVerdict::TrappedUpTo { .. }) as i32;
    let csv = csv_string(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["k", "value"]).map_err(io)?;
        for (i, v) in report.trace.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.15e}")]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(Payload {
        certificates: json!({ "band": report.band, "truncation_k": k, "exactness": report.exactness }),
        value: to_value(&report),
        exit_code,
        csv: Some(csv),
    })
}

/// `v1;v2;...` with comma-separated entries, or a file holding that text.
fn parse_basis(s: &str) -> Result<LatticeBasis> {
    let text = if Path::new(s).is_file() {
        std::fs::read_to_string(s)?
    } else {
        s.to_string()
    };
    let vectors: Vec<Vec<Real>> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.split(',').map(|t| t.parse()).collect::<Result<Vec<Real>>>())
        .collect::<Result<_>>()?;
    LatticeBasis::new(vectors)
}

/// Fields whose values are compared against the closed forms of
/// [`symbolic`].
const SYMBOLIC_FIELDS: &[&str] = &[
    "lb",
    "ub",
    "lower_bound",
    "upper_bound",
    "deviation",
    "certified_lower_bound",
    "epsilon_f",
    "value",
];

/// `√2`, `√3` or `2 sin(π/(c+1))` for `c <= 1000` when `x` matches within
/// 1e-12. Integers are left alone.
pub fn symbolic(x: f64) -> Option<String> {
    if !x.is_finite() || x <= 0.0 || x.fract() == 0.0 {
        return None;
    }
    let close = |y: f64| (x - y).abs() <= 1e-12;
    if close(3f64.sqrt()) {
        return Some("√3".into());
    }
    if close(2f64.sqrt()) {
        return Some("√2".into());
    }
    (4..=1001u32)
        .find(|&m| close(2.0 * (std::f64::consts::PI / m as f64).sin()))
        .map(|m| format!("2 sin(π/{m})"))
}

/// Rounds every float to 15 significant digits and tags recognized closed
/// forms with a `<field>_symbolic` sibling.
fn normalize_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r: f64 = format!("{x:.14e}").parse().expect("float");
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(normalize_floats),
        Value::Object(o) => {
            let mut tags = Map::new();
            for (key, val) in o.iter_mut() {
                normalize_floats(val);
                if SYMBOLIC_FIELDS.contains(&key.as_str()) {
                    if let Some(s) = val.as_f64().and_then(symbolic) {
                        tags.insert(format!("{key}_symbolic"), s.into());
                    }
                }
            }
            o.extend(tags);
        }
        _ => {}
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with(args: Vec<String>, out: &mut impl std::io::Write, err: &mut impl std::io::Write) -> i32 {
    let argv = args.clone();
    let cli = match parse(argv.iter()) {
        Ok(c) => c,
        Err(Error::Usage(msg)) => {
            // help and version requests arrive as clap "errors"
            if let Err(e) = Cli::try_parse_from(std::iter::once("escape-lab".to_string()).chain(args.iter().cloned())) {
                if !e.use_stderr() {
                    let _ = write!(out, "{}", e.render());
                    return 0;
                }
            }
            let _ = write!(err, "{msg}");
            let _ = writeln!(out, "{}", error_json(&Error::Usage(first_line(&msg))));
            return 2;
        }
        Err(e) => {
            let _ = writeln!(out, "{}", error_json(&e));
            return 2;
        }
    };
    match run(&cli, argv) {
        Ok(o) => {
            let _ = write!(out, "{}", o.render());
            o.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "escape-lab: {e}");
            let _ = writeln!(out, "{}", error_json(&e));
            2
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").trim_start_matches("error: ").to_string()
}

fn error_json(e: &Error) -> String {
    serde_json::to_string_pretty(&json!({
        "schema": SCHEMA,
        "error": { "code": e.code(), "message": e.to_string() },
    }))
    .expect("serializes")
}
