//! CSV and metadata emission. Formatting is done by hand with explicit
//! float rendering so repeated runs produce byte-identical files.

use super::flops::{fit_reference_counts, FlopsFit};
use super::metrics::STATE_NAMES;
use super::runner::BenchResult;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Deterministic float rendering: shortest round-trip representation.
fn fmt(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v}").unwrap();
    s
}

/// `armse.csv`: one row per filter, one column per state.
pub fn armse_csv(result: &BenchResult) -> String {
    let mut out = String::from("filter");
    for name in STATE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for f in &result.filters {
        out.push_str(&f.spec.label());
        for v in f.armse {
            out.push(',');
            out.push_str(&fmt(v));
        }
        out.push('\n');
    }
    out
}

/// `rmse_<state>.csv`: time column plus one column per filter.
pub fn rmse_csv(result: &BenchResult, state: usize) -> String {
    let mut out = String::from("t");
    for f in &result.filters {
        out.push(',');
        out.push_str(&f.spec.label());
    }
    out.push('\n');
    for k in 0..result.steps {
        out.push_str(&fmt(result.t0 + k as f64));
        for f in &result.filters {
            out.push(',');
            out.push_str(&fmt(f.rmse[k][state]));
        }
        out.push('\n');
    }
    out
}

/// `flops.csv`: the closed-form counts and the benchmark-table fit.
pub fn flops_csv(fits: &[FlopsFit]) -> String {
    let mut out = String::from("filter,reference,best_m,best_t,computed,residual\n");
    for f in fits {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.kind.name(),
            fmt(f.reference),
            f.best_m,
            f.best_t,
            fmt(f.computed),
            fmt(f.residual)
        ));
    }
    out
}

/// `meta.json`: run provenance and robustness counters.
pub fn meta_json(result: &BenchResult) -> String {
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"seed\": {},\n", result.seed));
    out.push_str(&format!("  \"mc_runs\": {},\n", result.mc_runs));
    out.push_str(&format!("  \"steps\": {},\n", result.steps));
    out.push_str(&format!(
        "  \"crate_version\": \"{}\",\n",
        env!("CARGO_PKG_VERSION")
    ));
    out.push_str("  \"filters\": [\n");
    for (i, f) in result.filters.iter().enumerate() {
        out.push_str(&format!(
            "    {{\"label\": \"{}\", \"factorization_failures\": {}, \"propagation_fallbacks\": {}, \"fpi_nonconverged\": {}, \"fpi_iterations\": {}, \"updates\": {}, \"wall_seconds\": {:.3}}}{}\n",
            f.spec.label(),
            f.stats.factorization_failures,
            f.stats.propagation_fallbacks,
            f.stats.fpi_nonconverged,
            f.stats.fpi_iterations,
            f.stats.updates,
            f.wall_seconds,
            if i + 1 < result.filters.len() { "," } else { "" }
        ));
    }
    out.push_str("  ]\n}\n");
    out
}

/// Write the full artifact set into `dir`.
pub fn write_artifacts(result: &BenchResult, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("armse.csv"), armse_csv(result))?;
    for (i, name) in STATE_NAMES.iter().enumerate() {
        std::fs::write(dir.join(format!("rmse_{name}.csv")), rmse_csv(result, i))?;
    }
    std::fs::write(dir.join("flops.csv"), flops_csv(&fit_reference_counts(9)))?;
    std::fs::write(dir.join("meta.json"), meta_json(result))?;
    Ok(())
}
