//! Report emission: every command writes a JSON document (the authoritative
//! record) and a plain-text sibling next to it, both atomically via a
//! temporary file in the target directory. The text also goes to stdout.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde_json::Value;

/// Target of the JSON report: `--out` if given, else `$RADNF_OUT_DIR/<slug>.json`,
/// else `./<slug>.json`.
pub fn resolve_out(out: Option<PathBuf>, slug: &str) -> PathBuf {
    if let Some(path) = out {
        return path;
    }
    let file = format!("{slug}.json");
    match std::env::var_os("RADNF_OUT_DIR") {
        Some(dir) => Path::new(&dir).join(file),
        None => PathBuf::from(file),
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(&format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Write the JSON report to `json_path` and the text to a `.txt` sibling;
/// print the text to stdout. Returns the two paths.
pub fn emit(json_path: &Path, json: &Value, text: &str) -> std::io::Result<(PathBuf, PathBuf)> {
    let mut body = serde_json::to_string_pretty(json).expect("report serialization");
    body.push('\n');
    atomic_write(json_path, body.as_bytes())?;
    let text_path = json_path.with_extension("txt");
    atomic_write(&text_path, text.as_bytes())?;
    print!("{text}");
    Ok((json_path.to_path_buf(), text_path))
}

pub fn vec_json(v: &DVector<f64>) -> Value {
    Value::from(v.iter().cloned().collect::<Vec<f64>>())
}

pub fn vecs_json(vs: &[DVector<f64>]) -> Value {
    Value::from(vs.iter().map(vec_json).collect::<Vec<Value>>())
}

/// Bracketed fixed-notation rendering for text reports.
pub fn vec_text(v: &DVector<f64>) -> String {
    let inner: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("[{}]", inner.join(", "))
}
