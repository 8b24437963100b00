//! Output directory writer. Rows are collected in memory and written once,
//! in insertion order, by [`RunWriter::finish`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adapid_core::DiagnosticSeries;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Overrides, Resolved};
use crate::CliResult;

pub const CSV_HEADER: [&str; 8] = ["experiment", "metric", "model", "schedule_label", "t", "value", "seed", "extra"];

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("ADAPID_GIT_DESCRIBE"), ")");

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub metric: String,
    pub model: String,
    pub schedule_label: String,
    pub t: Option<f64>,
    pub value: Option<f64>,
    pub seed: Option<u64>,
    pub extra: String,
}

pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => "null".into(),
    }
}

pub struct RunWriter {
    pub dir: PathBuf,
    experiment: String,
    tables: Vec<(String, Vec<Row>)>,
    summary: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl RunWriter {
    pub fn create(dir: &Path, experiment: &str) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            experiment: experiment.to_string(),
            tables: Vec::new(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    /// Echoes the config text, version and seeds.
    pub fn write_meta(&self, config_text: Option<&str>, resolved: &Resolved, overrides: &Overrides) -> CliResult<()> {
        let text = config_text.unwrap_or("# no config file: defaults and command-line overrides only\n");
        fs::write(self.dir.join("config.toml"), text)?;
        let meta = serde_json::json!({
            "recipe": resolved.recipe,
            "version": VERSION,
            "seeds": resolved.seeds,
            "overrides": overrides,
            "resolved": resolved,
        });
        self.write_json("run.json", &meta)
    }

    pub fn push(&mut self, table: &str, row: Row) {
        match self.tables.iter_mut().find(|(name, _)| name == table) {
            Some((_, rows)) => rows.push(row),
            None => self.tables.push((table.to_string(), vec![row])),
        }
    }

    pub fn scalar(&mut self, table: &str, metric: &str, model: &str, label: &str, value: Option<f64>, seed: Option<u64>, extra: impl Into<String>) {
        self.push(
            table,
            Row {
                metric: metric.into(),
                model: model.into(),
                schedule_label: label.into(),
                t: None,
                value,
                seed,
                extra: extra.into(),
            },
        );
    }

    pub fn series(&mut self, table: &str, model: &str, series: &DiagnosticSeries, seed: Option<u64>, extra: &str) {
        for (t, v) in series.times.iter().zip(&series.values) {
            self.push(
                table,
                Row {
                    metric: series.name.clone(),
                    model: model.into(),
                    schedule_label: series.schedule_label.clone(),
                    t: Some(*t),
                    value: *v,
                    seed,
                    extra: extra.into(),
                },
            );
        }
    }

    pub fn summary(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    /// Writes a figure; `None` (no drawable data) only records a warning.
    pub fn svg(&mut self, name: &str, svg: Option<String>) -> CliResult<()> {
        match svg {
            Some(text) => self.write_text(name, &text),
            None => {
                let msg = format!("{name}: no finite data, figure skipped");
                eprintln!("warning: {msg}");
                self.warnings.push(msg);
                Ok(())
            }
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        for (table, rows) in &self.tables {
            let mut w = csv::Writer::from_path(self.dir.join(format!("{table}.csv")))?;
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.write_record([
                    self.experiment.as_str(),
                    &r.metric,
                    &r.model,
                    &r.schedule_label,
                    &fmt_opt(r.t),
                    &fmt_opt(r.value),
                    &r.seed.map_or("null".into(), |s| s.to_string()),
                    &r.extra,
                ])?;
            }
            w.flush()?;
        }
        let warnings = std::mem::take(&mut self.warnings);
        self.summary("warnings", warnings);
        self.write_json("summary.json", &self.summary)?;
        Ok(self.dir)
    }
}
