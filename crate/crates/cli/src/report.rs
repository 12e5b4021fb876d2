//! Consolidated markdown and CSV report over verified artifact directories.

use std::fs;
use std::path::{Path, PathBuf};

use choquard::fmt17;
use serde_json::Value;

use crate::manifest::{verify, Manifest, MANIFEST};
use crate::CliError;

pub const REPORT_MD: &str = "report.md";
pub const REPORT_CSV: &str = "report.csv";
/// CSV artifacts longer than this are listed by row count only.
pub const MAX_TABLE_ROWS: usize = 64;

/// `run_dir` itself and its immediate subdirectories that hold a manifest, in path order.
fn artifact_dirs(run_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut dirs = Vec::new();
    if run_dir.join(MANIFEST).is_file() {
        dirs.push(run_dir.to_path_buf());
    }
    let mut subs: Vec<PathBuf> =
        fs::read_dir(run_dir)?.map(|e| e.map(|e| e.path())).collect::<Result<Vec<_>, _>>()?.into_iter().filter(|p| p.join(MANIFEST).is_file()).collect();
    subs.sort();
    dirs.extend(subs);
    Ok(dirs)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.as_f64().map_or_else(|| n.to_string(), fmt17)),
        Value::Bool(b) => Some(b.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Null => Some("null".into()),
        _ => None,
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn csv_as_table(text: &str) -> String {
    let mut lines = text.lines();
    let Some(header) = lines.next() else { return String::new() };
    let cols = header.split(',').count();
    let mut s = format!("| {} |\n|{}\n", header.split(',').collect::<Vec<_>>().join(" | "), " --- |".repeat(cols));
    for line in lines {
        s.push_str(&format!("| {} |\n", line.split(',').map(md_escape).collect::<Vec<_>>().join(" | ")));
    }
    s
}

struct Section {
    label: String,
    manifest: Manifest,
    dir: PathBuf,
}

/// Builds the report strings; pure in the directory contents.
pub fn render(run_dir: &Path) -> Result<(String, String), CliError> {
    let mut sections = Vec::new();
    for dir in artifact_dirs(run_dir)? {
        let manifest = verify(&dir)?;
        let label = dir.strip_prefix(run_dir).ok().filter(|p| !p.as_os_str().is_empty()).map_or(".".into(), |p| p.display().to_string());
        sections.push(Section { label, manifest, dir });
    }
    if sections.is_empty() {
        return Err(CliError::Validation(format!("no artifacts in {}", run_dir.display())));
    }
    let mut md = String::from("# Run report\n");
    let mut csv = String::from("artifact,command,file,key,value\n");
    for s in &sections {
        let m = &s.manifest;
        md.push_str(&format!("\n## {} ({})\n\n", s.label, m.command));
        if m.nonrigorous {
            md.push_str("Tagged nonrigorous.\n\n");
        }
        md.push_str("| file | sha256 |\n| --- | --- |\n");
        for (name, hash) in &m.files {
            md.push_str(&format!("| {name} | `{hash}` |\n"));
        }
        for name in m.files.keys() {
            let text = fs::read_to_string(s.dir.join(name));
            if name.ends_with(".json") {
                let Ok(Value::Object(obj)) = text.as_deref().map(serde_json::from_str::<Value>).unwrap_or(Ok(Value::Null)) else { continue };
                let rows: Vec<(String, String)> = obj.iter().filter_map(|(k, v)| scalar(v).map(|v| (k.clone(), v))).collect();
                if rows.is_empty() {
                    continue;
                }
                md.push_str(&format!("\n### {name}\n\n| key | value |\n| --- | --- |\n"));
                for (k, v) in rows {
                    md.push_str(&format!("| {k} | {} |\n", md_escape(&v)));
                    csv.push_str(&format!("{},{},{},{},{}\n", csv_escape(&s.label), m.command, name, csv_escape(&k), csv_escape(&v)));
                }
            } else if name.ends_with(".csv") {
                let text = text?;
                let rows = text.lines().count().saturating_sub(1);
                md.push_str(&format!("\n### {name}\n\n"));
                if rows <= MAX_TABLE_ROWS {
                    md.push_str(&csv_as_table(&text));
                } else {
                    md.push_str(&format!("{rows} rows, not tabulated.\n"));
                }
            }
        }
    }
    Ok((md, csv))
}

pub fn report(run_dir: &Path) -> Result<(PathBuf, usize), CliError> {
    if !run_dir.is_dir() {
        return Err(CliError::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{} is not a directory", run_dir.display()))));
    }
    let (md, csv) = render(run_dir)?;
    let sections = md.matches("\n## ").count();
    fs::write(run_dir.join(REPORT_MD), md)?;
    fs::write(run_dir.join(REPORT_CSV), csv)?;
    Ok((run_dir.join(REPORT_MD), sections))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_table_rendering() {
        assert_eq!(csv_as_table("a,b\n1,2\n"), "| a | b |\n| --- | --- |\n| 1 | 2 |\n");
        assert_eq!(csv_escape("x,y"), "\"x,y\"");
        assert_eq!(scalar(&serde_json::json!(0.1)).unwrap(), "1.0000000000000001e-1");
    }
}
