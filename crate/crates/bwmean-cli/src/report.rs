//! Output assembly. Every artifact, CSV or JSON, embeds the schema version,
//! the subcommand, the fully resolved configuration, and a timestamp that is
//! confined to a single line — so re-running from the embedded config
//! reproduces the file byte-for-byte except that one line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::OutFormat;
use crate::fail::{CliResult, Failure};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that prefixes relative `--out` paths.
pub const OUT_DIR_ENV: &str = "BWM_OUT_DIR";

pub struct Emission {
    pub command: &'static str,
    pub cfg: BTreeMap<String, String>,
    /// Extra deterministic `# key=value` comment lines (CSV only), placed
    /// after the timestamp; carries per-run scalars like coefficient lists.
    pub meta: Vec<(String, String)>,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
    /// Command-specific structured body for the JSON envelope.
    pub json_report: Value,
}

fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .expect("UTC timestamps always format")
}

impl Emission {
    pub fn render(&self, format: OutFormat) -> String {
        match format {
            OutFormat::Csv => self.render_csv(),
            OutFormat::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema_version={SCHEMA_VERSION}\n"));
        out.push_str(&format!("# command={}\n", self.command));
        for (k, v) in &self.cfg {
            out.push_str(&format!("# cfg {k}={v}\n"));
        }
        out.push_str(&format!("# timestamp={}\n", timestamp()));
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.csv_header);
        out.push('\n');
        for row in &self.csv_rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let envelope = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.cfg,
            "timestamp": timestamp(),
            "report": self.json_report,
        });
        let mut text = serde_json::to_string_pretty(&envelope)
            .expect("envelope serialization cannot fail");
        text.push('\n');
        text
    }
}

/// Apply the output-directory override to relative paths.
pub fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn write_out(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
        Some(path) => {
            let path = resolve_out_path(path);
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| Failure::Io(format!("{}: {e}", parent.display())))?;
                }
            }
            std::fs::write(&path, text)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
    }
}
