//! File formats: series CSV (one row per timestep, feature columns,
//! optional trailing label column), run reports as JSON, plot-data CSV
//! dumps, and the TOML run configuration.

use crate::error::{Error, Result};
use crate::trainer::{RunConfig, RunReport};
use crate::windows::TimeSeries;
use std::fs;
use std::path::Path;

/// Writes a series as CSV with columns f0..f{d-1} and, when labels are
/// present, a final `label` column.
pub fn write_series_csv(series: &TimeSeries, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let d = series.dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("f{i}")).collect();
    if series.labels.is_some() {
        header.push("label".into());
    }
    wtr.write_record(&header)?;
    for i in 0..series.len() {
        let mut row: Vec<String> = series.point(i).iter().map(|v| format!("{v}")).collect();
        if let Some(labels) = &series.labels {
            row.push(labels[i].to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let has_labels = headers.iter().next_back() == Some("label");
    let d = if has_labels {
        headers.len() - 1
    } else {
        headers.len()
    };
    if d == 0 {
        return Err(Error::InvalidArgument(format!(
            "{}: no feature columns",
            path.display()
        )));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::DimensionMismatch {
                what: "csv row",
                expected: headers.len(),
                got: record.len(),
            });
        }
        for field in record.iter().take(d) {
            data.push(field.trim().parse::<f64>().map_err(|e| {
                Error::InvalidArgument(format!("{}: bad value {field:?}: {e}", path.display()))
            })?);
        }
        if has_labels {
            let field = &record[d];
            labels.push(field.trim().parse::<u8>().map_err(|e| {
                Error::InvalidArgument(format!("{}: bad label {field:?}: {e}", path.display()))
            })?);
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    TimeSeries::new(name, data, d, has_labels.then_some(labels))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: RunConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Echoes a configuration back out as TOML, loadable by [`load_config`].
pub fn write_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    // go through a Table so scalar keys are emitted before the hessian table
    let table = toml::Table::try_from(cfg).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(
        path,
        toml::to_string_pretty(&table).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    Ok(())
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    serde_json::to_writer_pretty(file, report)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let file = fs::File::open(path)?;
    Ok(serde_json::from_reader(file)?)
}

/// Per-epoch plot data: epoch, phase, losses, set size, AC/HS fractions.
pub fn write_epoch_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record([
        "epoch",
        "phase",
        "mean_train_loss",
        "val_loss",
        "set_size",
        "agent_loss",
        "ac_frac",
        "hs_frac",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.epochs {
        let phase = match r.phase {
            crate::trainer::Phase::Augment => "augment",
            crate::trainer::Phase::Final => "final",
        };
        wtr.write_record([
            r.epoch.to_string(),
            phase.to_string(),
            r.mean_train_loss.to_string(),
            r.val_loss.to_string(),
            r.set_size.to_string(),
            opt(r.agent_loss),
            opt(r.ac_frac),
            opt(r.hs_frac),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Generic two-column plot dump, e.g. (f, amplitude) or (r_l, r_p).
pub fn write_pairs_csv(header: (&str, &str), rows: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record([header.0, header.1])?;
    for (a, b) in rows {
        wtr.write_record([a.to_string(), b.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
