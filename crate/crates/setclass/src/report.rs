//! Rendering of benchmark reports and prediction outputs.
//!
//! Every CSV artifact starts with a `#` comment line echoing the full
//! configuration that produced it, followed by a header row, so files are
//! self-describing and reproducible from their own contents.

use std::io::Write;

use setclass_core::set::ClassLabel;
use setclass_core::simulate::BenchmarkReport;

use crate::Result;

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Writes a benchmark report as CSV with a leading config-echo comment.
pub fn write_benchmark_csv(
    report: &BenchmarkReport,
    config_echo: &str,
    mut writer: impl Write,
) -> Result<()> {
    let io_err = |e: std::io::Error| crate::Error::io("<benchmark csv>", e);
    writeln!(writer, "# {config_echo}").map_err(io_err)?;
    writeln!(
        writer,
        "method,mean_error_pct,std_dev_pct,std_error_pct,replications,failures"
    )
    .map_err(io_err)?;
    for m in &report.methods {
        writeln!(
            writer,
            "{},{:.4},{},{},{},{}",
            m.method.name(),
            m.mean_error,
            fmt_opt(m.std_dev),
            fmt_opt(m.std_error),
            m.replications_used,
            m.failures
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Plain-text table of a benchmark report, Table-style `mean(sd)` cells.
pub fn render_benchmark_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let config = &report.config;
    out.push_str(&format!(
        "model {} | p = {} | N = {} | rho = {} | {} replications\n",
        config.model.id(),
        config.dim,
        config.n_sets,
        config.correlation,
        config.replications
    ));
    out.push_str(&format!("{:<10} {:>18} {:>8}\n", "method", "error % (sd)", "fails"));
    for m in &report.methods {
        let cell = match m.std_dev {
            Some(sd) => format!("{:.2}({:.2})", m.mean_error, sd),
            None => format!("{:.2}(-)", m.mean_error),
        };
        out.push_str(&format!("{:<10} {:>18} {:>8}\n", m.method.name(), cell, m.failures));
    }
    out
}

/// Writes per-set predicted labels as CSV with a config-echo comment.
pub fn write_predictions_csv(
    rows: &[(String, ClassLabel)],
    config_echo: &str,
    mut writer: impl Write,
) -> Result<()> {
    let io_err = |e: std::io::Error| crate::Error::io("<predictions csv>", e);
    writeln!(writer, "# {config_echo}").map_err(io_err)?;
    writeln!(writer, "set_id,predicted_label").map_err(io_err)?;
    for (set_id, label) in rows {
        writeln!(writer, "{set_id},{label}").map_err(io_err)?;
    }
    Ok(())
}
