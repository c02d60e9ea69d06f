use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use smcurve::arith::{qi, Q};
use smcurve::etaforms::{level_data, quotient_series, search_eta_quotients};
use smcurve::lattice::cm_splitting;
use smcurve::pipeline::{self, curve, NormResult, TableRow};
use smcurve::weilrep::{Vectorizer, WeilAction};
use smcurve::Error;

/// Exponent bound for `vectorize --deep-check`.
const DEEP_CHECK_EXP: i64 = 1;

#[derive(Parser)]
#[command(
    name = "smcurve",
    version,
    about = "Norms of CM values on X*_6 and X*_10"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Norm of t_D (or of its companion) at the CM points of discriminant Δ.
    Norm {
        #[arg(long = "D")]
        d: u64,
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        companion: bool,
        #[arg(long)]
        json: bool,
    },
    /// Table of norms for fundamental discriminants up to |d| ≤ max.
    Table {
        #[arg(long = "D")]
        d: u64,
        #[arg(long, default_value_t = 250)]
        max: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes the normalization constant c_D from the base point.
    Calibrate {
        #[arg(long = "D")]
        d: u64,
    },
    /// Runs the built-in reference cases.
    Selfcheck {
        #[arg(long)]
        json: bool,
    },
    /// Weight-1/2 eta quotients of level N with a pole of the given order at ∞.
    EtaSearch {
        #[arg(long)]
        level: u64,
        #[arg(long, default_value = "1/2")]
        weight: String,
        #[arg(long = "pole-order")]
        pole_order: i64,
        /// |L∨/L| entering the character condition; defaults from the level.
        #[arg(long = "group-order")]
        group_order: Option<u64>,
        #[arg(long, default_value_t = 20)]
        terms: i64,
        #[arg(long)]
        json: bool,
    },
    /// Nonpositive-exponent coefficients of the vector-valued input forms.
    Vectorize {
        #[arg(long = "D")]
        d: u64,
        #[arg(long = "deep-check")]
        deep_check: bool,
    },
    /// Gram matrices, discriminant group and (optionally) the CM splitting.
    DumpLattice {
        #[arg(long = "D")]
        d: u64,
        #[arg(long, allow_hyphen_values = true)]
        disc: Option<i64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Calibration(_) => 2,
        Error::Precision(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> smcurve::Result<u8> {
    match cmd {
        Command::Norm {
            d,
            disc,
            companion,
            json,
        } => norm(d, disc, companion, json),
        Command::Table { d, max, out } => table(d, max, out),
        Command::Calibrate { d } => {
            emit(format!("c_{d} = {}", pipeline::calibrate(d)?))?;
            Ok(0)
        }
        Command::Selfcheck { json } => selfcheck(json),
        Command::EtaSearch {
            level,
            weight,
            pole_order,
            group_order,
            terms,
            json,
        } => eta_search(level, &weight, pole_order, group_order, terms, json),
        Command::Vectorize { d, deep_check } => vectorize(d, deep_check),
        Command::DumpLattice { d, disc } => dump_lattice(d, disc),
    }
}

/// Writes a line to stdout; a closed pipe ends output quietly.
fn emit(line: String) -> smcurve::Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        r => Ok(r?),
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> smcurve::Result<String> {
    serde_json::to_string_pretty(x).map_err(|e| Error::Internal(e.to_string()))
}

fn norm(d: u64, disc: i64, companion: bool, json: bool) -> smcurve::Result<u8> {
    let r: NormResult = pipeline::cm_norm(d, disc)?;
    if json {
        emit(to_json(&r)?)?;
        return Ok(0);
    }
    let shown = if companion {
        &r.companion_value
    } else {
        &r.value
    };
    let sign = if r.signed || companion {
        ""
    } else {
        " (sign unknown)"
    };
    emit(format!("{shown}{sign}"))?;
    emit(format!(
        "degree {}  residual {:e}",
        r.degree_info, r.arch_residual
    ))?;
    Ok(0)
}

fn table_csv(rows: &[TableRow], w: impl Write) -> smcurve::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Internal(e.to_string());
    out.write_record(["disc", "value", "companion", "residual", "flags"])
        .map_err(csv_err)?;
    for row in rows {
        let (value, companion, residual) = match &row.result {
            Some(r) => (
                r.value.to_string(),
                r.companion_value.to_string(),
                format!("{:e}", r.arch_residual),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        out.write_record([
            row.disc.to_string(),
            value,
            companion,
            residual,
            row.flags.join(";"),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn table(d: u64, max: i64, out: Option<PathBuf>) -> smcurve::Result<u8> {
    let rows = pipeline::table(d, max)?;
    match out {
        Some(path) => table_csv(&rows, std::fs::File::create(path)?)?,
        None => table_csv(&rows, std::io::stdout().lock())?,
    }
    let failed = rows.iter().any(|r| r.result.is_none());
    Ok(if failed { 1 } else { 0 })
}

fn selfcheck(json: bool) -> smcurve::Result<u8> {
    let checks = pipeline::selfcheck();
    if json {
        emit(to_json(&checks)?)?;
    } else {
        for c in &checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            emit(format!("{tag} {}: {}", c.name, c.detail))?;
        }
    }
    Ok(if checks.iter().all(|c| c.passed) {
        0
    } else {
        2
    })
}

fn eta_search(
    level: u64,
    weight: &str,
    pole: i64,
    group_order: Option<u64>,
    terms: i64,
    json: bool,
) -> smcurve::Result<u8> {
    let weight: Q = weight
        .parse()
        .map_err(|_| Error::Argument(format!("weight '{weight}' is not a rational")))?;
    let order = match group_order {
        Some(n) => n,
        None => match level {
            12 => level_data(6)?.1,
            20 => level_data(10)?.1,
            _ => {
                return Err(Error::Argument(
                    "--group-order is required for this level".into(),
                ))
            }
        },
    };
    let found = search_eta_quotients(level, &weight, pole, true, order)?;
    let mut rows = Vec::new();
    for eq in &found {
        let series = quotient_series(eq, terms.max(pole + 1))?;
        rows.push((eq, series));
    }
    if json {
        let v: Vec<_> = rows
            .iter()
            .map(|(eq, s)| json!({ "exponents": eq.exponents, "expansion": s.to_string() }))
            .collect();
        emit(to_json(&v)?)?;
    } else {
        emit(format!("{} quotients", rows.len()))?;
        for (eq, s) in &rows {
            emit(format!("{eq}  =  {s}"))?;
        }
    }
    Ok(0)
}

fn vectorize(d: u64, deep_check: bool) -> smcurve::Result<u8> {
    let c = curve(d)?;
    let dump = |coeffs: &pipeline::Coefficients| -> Vec<serde_json::Value> {
        coeffs
            .iter()
            .map(|(eta, m, v)| {
                json!({
                    "eta": c.group.elems[*eta],
                    "den": c.group.den,
                    "m": m.to_string(),
                    "coeff": v.to_string(),
                })
            })
            .collect()
    };
    let mut out = json!({
        "D": d,
        "level": c.group.level,
        "group_order": c.group.len(),
        "value_form": dump(&c.value_coeffs),
        "companion_form": dump(&c.companion_coeffs),
    });
    if deep_check {
        let action = WeilAction::new(c.group.clone());
        let vz = Vectorizer::new(&action);
        let trunc = qi(DEEP_CHECK_EXP);
        let mut report = Vec::new();
        for (name, form) in [
            ("value_form", &c.value_form),
            ("companion_form", &c.companion_form),
        ] {
            let f = vz.form(form, &trunc)?;
            let violations = f.support_violations(&c.group);
            let poles = f.finite_poles();
            if !violations.is_empty() || !poles.is_empty() {
                return Err(Error::Internal(format!(
                    "{name}: {} support violations, {} poles off e_0",
                    violations.len(),
                    poles.len()
                )));
            }
            f.rational_table()?;
            report.push(json!({ "form": name, "checked_to": trunc.to_string(), "ok": true }));
        }
        out["deep_check"] = json!(report);
    }
    emit(to_json(&out)?)?;
    Ok(0)
}

fn dump_lattice(d: u64, disc: Option<i64>) -> smcurve::Result<u8> {
    let c = curve(d)?;
    let mut out = json!({
        "D": d,
        "q": c.config.q,
        "gram": c.lattice.gram,
        "discriminant_group": c.group,
    });
    if let Some(disc) = disc {
        let z = pipeline::cm_vector(c, disc)?;
        out["splitting"] = serde_json::to_value(cm_splitting(&c.lattice, &z)?)
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    emit(to_json(&out)?)?;
    Ok(0)
}
