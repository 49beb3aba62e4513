//! Flat `key=value` defaults files.
//!
//! Keys are long flag names without the leading dashes. Blank lines and
//! lines starting with `#` are skipped. Flags given on the command line win.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected key=value".into(),
        })?;
        let k = k.trim();
        if k.is_empty() || k.starts_with('-') {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("bad key `{k}`"),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

/// Inserts `--key value` pairs for keys not already present among `args`
/// (right after the subcommand path, so explicit flags keep precedence).
pub fn merge_defaults(args: &[String], insert_at: usize, defaults: &[(String, String)]) -> Vec<String> {
    let present = |k: &str| {
        let flag = format!("--{k}");
        let prefix = format!("--{k}=");
        args.iter().any(|a| *a == flag || a.starts_with(&prefix))
    };
    let mut extra = Vec::new();
    for (k, v) in defaults {
        if !present(k) {
            extra.push(format!("--{k}={v}"));
        }
    }
    let mut out = args[..insert_at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[insert_at..]);
    out
}
