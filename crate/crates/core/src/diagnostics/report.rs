use super::{DiagnosticsError, EosHistogram};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const REPORT_SCHEMA: &str = "v1";

/// Versioned JSON report: {"schema":"v1","params":…,"data":…}.
pub fn write_json_report<T: Serialize>(
    path: &Path,
    params: &Value,
    data: &T,
) -> Result<(), DiagnosticsError> {
    let report = json!({
        "schema": REPORT_SCHEMA,
        "params": params,
        "data": data,
    });
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_writer_with_params(
    path: &Path,
    params: &Value,
) -> Result<csv::Writer<BufWriter<File>>, DiagnosticsError> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# params: {}", serde_json::to_string(params)?)?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_histogram_csv(
    path: &Path,
    params: &Value,
    histogram: &EosHistogram,
) -> Result<(), DiagnosticsError> {
    let mut w = csv_writer_with_params(path, params)?;
    w.write_record(["bin_lo", "bin_hi", "count_all", "count_under"])?;
    for (&bin, &(all, under)) in &histogram.bins {
        let lo = bin as f64 * histogram.bin_width;
        let hi = (bin + 1) as f64 * histogram.bin_width;
        w.write_record([
            format!("{lo}"),
            format!("{hi}"),
            all.to_string(),
            under.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv(
    path: &Path,
    params: &Value,
    curve: &BTreeMap<usize, (usize, f64)>,
) -> Result<(), DiagnosticsError> {
    let mut w = csv_writer_with_params(path, params)?;
    w.write_record(["missing", "count", "mean_eos_logprob"])?;
    for (&missing, &(count, mean)) in curve {
        w.write_record([missing.to_string(), count.to_string(), format!("{mean}")])?;
    }
    w.flush()?;
    Ok(())
}
