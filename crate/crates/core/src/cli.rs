//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 check mismatch, 2 usage or parse error,
//! 3 optimizer non-convergence, 4 singular design.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::design_space::{
    count_pairs, enumerate_orbit, param_dims, ExplicitDesign, ModelSpec, PairSpace,
};
use crate::document::{depth_design_of, read_plan_csv, write_plan_csv, DesignDocument};
use crate::equivalence::{kw_certify, variance_at, ExactVariance, DEFAULT_KW_TOL};
use crate::error::DesignError;
use crate::information::{h_values, info_matrix_exact, mix_h, ORACLE_MAX_PAIRS};
use crate::optimizer::{optimize_full, OptimOptions};
use crate::tables;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_SINGULAR: i32 = 4;

/// Largest K for which `verify --oracle` sweeps every pair.
const SWEEP_MAX_K: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "pcdesign",
    version,
    about = "D-optimal paired-comparison designs with interactions up to third order"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parameter block dimensions p1..p4 and p
    Dims {
        #[arg(long)]
        k: usize,
    },
    /// Block values h1..h4 of uniform single-depth designs, as exact fractions
    Hvalues {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        /// Only this depth (default: every depth 0..=S)
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Dump one depth orbit as a CSV plan, uniform weights
    Enumerate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        d: usize,
    },
    /// Compute and certify the D-optimal depth weights
    Optimize {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        /// Relative Kiefer-Wolfowitz tolerance
        #[arg(long, default_value_t = DEFAULT_KW_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// Print the design document as JSON
        #[arg(long)]
        json: bool,
        /// Write explicit pair rows (CSV, or JSON document for *.json)
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Regenerate table 1, 2 or 3
    Tables {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
        /// Compare with the printed values; exit 1 on mismatch
        #[arg(long)]
        check: bool,
    },
    /// Certify a design file (JSON document or CSV plan)
    Verify {
        file: PathBuf,
        /// Also cross-check closed forms against brute force
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_KW_TOL)]
        tol: f64,
    },
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &DesignError) -> i32 {
    match e {
        DesignError::Singular { .. } => EXIT_SINGULAR,
        DesignError::NonConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_USAGE,
    }
}

type CmdResult = Result<i32, DesignError>;

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Dims { k } => cmd_dims(k, out),
        Command::Hvalues { k, s, d, json } => cmd_hvalues(k, s, d, json, out),
        Command::Enumerate { k, s, d } => cmd_enumerate(k, s, d, out),
        Command::Optimize {
            k,
            s,
            tol,
            max_iter,
            json,
            export,
        } => cmd_optimize(
            k,
            s,
            OptimOptions { tol, max_iter },
            json,
            export.as_deref(),
            out,
        ),
        Command::Tables { which, check } => cmd_tables(which, check, out),
        Command::Verify { file, oracle, tol } => cmd_verify(&file, oracle, tol, out),
    }
}

fn io(e: std::io::Error) -> DesignError {
    DesignError::Parse(format!("i/o error: {e}"))
}

fn cmd_dims(k: usize, out: &mut dyn Write) -> CmdResult {
    let d = param_dims(k)?;
    writeln!(out, "{} {} {} {} {}", d.p1, d.p2, d.p3, d.p4, d.p).map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_hvalues(k: usize, s: usize, d: Option<usize>, json: bool, out: &mut dyn Write) -> CmdResult {
    let space = PairSpace::new(k, s)?;
    let depths: Vec<usize> = match d {
        Some(d) => vec![d],
        None => (0..=s).collect(),
    };
    let infos = depths
        .iter()
        .map(|&d| h_values(&space, d))
        .collect::<Result<Vec<_>, _>>()?;
    if json {
        let records: Vec<_> = depths
            .iter()
            .zip(&infos)
            .map(|(d, info)| serde_json::json!({ "d": d, "h": info.record() }))
            .collect();
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&records).expect("json")
        )
        .map_err(io)?;
    } else {
        writeln!(
            out,
            "{:>3} {:>10} {:>10} {:>10} {:>10}",
            "d", "h1", "h2", "h3", "h4"
        )
        .map_err(io)?;
        for (d, info) in depths.iter().zip(&infos) {
            let h = info.h();
            writeln!(
                out,
                "{d:>3} {:>10} {:>10} {:>10} {:>10}",
                h[0], h[1], h[2], h[3]
            )
            .map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_enumerate(k: usize, s: usize, d: usize, out: &mut dyn Write) -> CmdResult {
    let spec = ModelSpec::new(k, s)?;
    let n = count_pairs(&spec, d)?;
    if n > ORACLE_MAX_PAIRS {
        return Err(DesignError::OracleTooLarge(format!("orbit has {n} pairs")));
    }
    let weight = 1.0 / n as f64;
    let entries: Vec<_> = enumerate_orbit(&spec, d)?
        .map(|pair| (pair, weight))
        .collect();
    // depth 0 designs are legal to list even though they carry no information
    let design = ExplicitDesign::new(spec, entries)?;
    write_plan_csv(&design, out)?;
    Ok(EXIT_OK)
}

fn cmd_optimize(
    k: usize,
    s: usize,
    options: OptimOptions,
    json: bool,
    export: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let spec = ModelSpec::new(k, s)?;
    let result = match optimize_full(spec, options) {
        Ok(r) => r,
        Err(DesignError::NonConvergence {
            iterations,
            excess,
            best_weights,
        }) => {
            writeln!(out, "no convergence after {iterations} iterations").map_err(io)?;
            writeln!(out, "best iterate (w_1..w_S): {best_weights:?}").map_err(io)?;
            writeln!(out, "KW excess: {excess:.3e}").map_err(io)?;
            return Ok(EXIT_NO_CONVERGENCE);
        }
        Err(e) => return Err(e),
    };
    let doc = DesignDocument::from_result(&result);

    if let Some(path) = export {
        let total: u128 = result
            .support
            .iter()
            .map(|&d| count_pairs(&spec, d))
            .sum::<Result<u128, _>>()?;
        if total > ORACLE_MAX_PAIRS {
            return Err(DesignError::OracleTooLarge(format!(
                "explicit plan would have {total} rows"
            )));
        }
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            fs::write(path, doc.clone().with_rows()?.to_json()).map_err(io)?;
        } else {
            let explicit = ExplicitDesign::from_depth_weights(
                spec,
                &result.design.iter().collect::<Vec<_>>(),
            )?;
            let file = fs::File::create(path).map_err(io)?;
            write_plan_csv(&explicit, std::io::BufWriter::new(file))?;
        }
    }

    if json {
        writeln!(out, "{}", doc.to_json()).map_err(io)?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "{spec} p={}", spec.p()).map_err(io)?;
    writeln!(out, "{:>5} {:>8}  fraction", "depth", "weight").map_err(io)?;
    for w in &doc.depth_weights {
        writeln!(
            out,
            "{:>5} {:>8.3}  {}",
            w.depth,
            w.decimal,
            w.fraction.as_deref().unwrap_or("-")
        )
        .map_err(io)?;
    }
    writeln!(out, "log det: {:.10}", result.log_det).map_err(io)?;
    writeln!(out, "KW max excess: {:.3e}", result.kw_excess).map_err(io)?;
    writeln!(out, "iterations: {}", result.iterations).map_err(io)?;
    let verdict = if result.certificate.optimal {
        "certified D-optimal"
    } else {
        "NOT certified"
    };
    writeln!(out, "verdict: {verdict} (tol {:e})", options.tol).map_err(io)?;
    write!(out, "{}", result.certificate.table()).map_err(io)?;
    if let Some(path) = export {
        writeln!(out, "exported: {}", path.display()).map_err(io)?;
    }
    Ok(if result.certificate.optimal {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    })
}

fn cmd_tables(which: u8, check: bool, out: &mut dyn Write) -> CmdResult {
    let (text, issues) = match which {
        1 => {
            let t = tables::table1()?;
            (tables::format_table1(&t), tables::check_table1(&t))
        }
        2 => {
            let t = tables::table2()?;
            (tables::format_table2(&t), tables::check_table2(&t))
        }
        _ => {
            let t = tables::table3()?;
            (tables::format_table3(&t), tables::check_table3(&t))
        }
    };
    write!(out, "{text}").map_err(io)?;
    if check {
        if issues.is_empty() {
            writeln!(out, "check: table {which} matches the printed values").map_err(io)?;
        } else {
            for issue in &issues {
                writeln!(out, "mismatch: {issue}").map_err(io)?;
            }
            return Ok(EXIT_MISMATCH);
        }
    }
    Ok(EXIT_OK)
}

/// Loads a design file: JSON document if it starts with `{`, else CSV plan.
pub fn load_design_file(path: &Path) -> Result<DesignDocument, DesignError> {
    let text = fs::read_to_string(path).map_err(io)?;
    if text.trim_start().starts_with('{') {
        let doc = DesignDocument::from_json(&text)?;
        doc.check_rows_realize_weights()?;
        Ok(doc)
    } else {
        let explicit = read_plan_csv(text.as_bytes())?;
        let design = depth_design_of(&explicit)?;
        let mut doc = DesignDocument::from_design(&design, None, None);
        doc.explicit_rows = Some(
            explicit
                .entries()
                .iter()
                .map(|(pair, w)| crate::document::PlanRow {
                    i: pair.first().levels().to_vec(),
                    j: pair.second().levels().to_vec(),
                    weight: *w,
                })
                .collect(),
        );
        Ok(doc)
    }
}

/// Brute-force cross-check of a design: largest deviations between the
/// dense oracle and the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    /// max |M_oracle - M_block| entrywise
    pub matrix_deviation: f64,
    /// max |V_dense(pair) - V_closed(depth)| over every pair, when swept
    pub variance_deviation: Option<f64>,
}

pub fn oracle_check(doc: &DesignDocument) -> Result<OracleReport, DesignError> {
    let spec = doc.spec()?;
    let design = doc.depth_design()?;
    let explicit = match doc.explicit_design()? {
        Some(e) => e,
        None => ExplicitDesign::from_depth_weights(spec, &design.iter().collect::<Vec<_>>())?,
    };
    let dense = info_matrix_exact(&explicit)?;
    let block = mix_h(&design);
    let matrix_deviation = (dense.matrix() - block.to_dense()).amax();

    let variance_deviation = if spec.k() <= SWEEP_MAX_K {
        let exact = ExactVariance::from_info(dense)?;
        let mut worst: f64 = 0.0;
        for d in 1..=spec.s() {
            let closed = variance_at(&block, d);
            for pair in enumerate_orbit(&spec, d)? {
                worst = worst.max((exact.at(&pair)? - closed).abs());
            }
        }
        Some(worst)
    } else {
        None
    };
    Ok(OracleReport {
        matrix_deviation,
        variance_deviation,
    })
}

fn cmd_verify(path: &Path, oracle: bool, tol: f64, out: &mut dyn Write) -> CmdResult {
    let doc = load_design_file(path)?;
    let design = doc.depth_design()?;
    let cert = kw_certify(&design, tol)?;
    writeln!(out, "K={} S={} p={}", cert.k, cert.s, cert.p).map_err(io)?;
    writeln!(out, "verdict: {}", cert.verdict).map_err(io)?;
    writeln!(out, "max excess: {:.3e}", cert.max_excess).map_err(io)?;
    writeln!(
        out,
        "support condition: {}",
        if cert.support_condition {
            "holds"
        } else {
            "fails"
        }
    )
    .map_err(io)?;
    write!(out, "{}", cert.table()).map_err(io)?;
    if oracle {
        let report = oracle_check(&doc)?;
        writeln!(
            out,
            "oracle matrix deviation: {:.3e}",
            report.matrix_deviation
        )
        .map_err(io)?;
        match report.variance_deviation {
            Some(v) => writeln!(out, "oracle variance deviation: {v:.3e}"),
            None => writeln!(out, "oracle variance sweep skipped (K > {SWEEP_MAX_K})"),
        }
        .map_err(io)?;
        let worst = report
            .matrix_deviation
            .max(report.variance_deviation.unwrap_or(0.0));
        if worst > 1e-9 {
            writeln!(out, "oracle: MISMATCH").map_err(io)?;
            return Ok(EXIT_MISMATCH);
        }
        writeln!(out, "oracle: agrees").map_err(io)?;
    }
    Ok(EXIT_OK)
}
