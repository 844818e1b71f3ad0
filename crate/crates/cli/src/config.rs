//! `--config FILE` support: `key = value` lines become long flags inserted
//! right after the subcommand, so anything on the real command line, which
//! comes later, overrides them.

use std::path::Path;

use crate::args::SUBCOMMANDS;
use crate::{CliError, CliResult};

/// Parses config text into flag tokens. `true` gives a bare switch and
/// `false` drops the key.
pub fn tokens(text: &str) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key.starts_with('-') {
            return Err(CliError::usage(format!("config line {}: bad key {key:?}", n + 1)));
        }
        if key == "config" {
            return Err(CliError::usage("config files cannot include other config files"));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Returns `argv` with config-file flags spliced in after the subcommand.
pub fn merge(argv: Vec<String>) -> CliResult<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::usage(format!("cannot read config {path}: {e}")))?;
    let extra = tokens(&text)?;
    let Some(pos) = argv.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let at = pos + 2;
    let mut merged = argv[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn parses_pairs_comments_and_switches() {
        let t = tokens("# run\nmode = fixed\nwindow_len=50 # trailing\ncurves = true\neval = false\n").unwrap();
        assert_eq!(t, s(&["--mode", "fixed", "--window-len", "50", "--curves"]));
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(tokens("mode fixed"), Err(CliError::Usage(_))));
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "mode = fixed\n").unwrap();
        let argv = s(&["seqwin", "--config", cfg.to_str().unwrap(), "localize", "--mode", "sweep"]);
        let out = merge(argv).unwrap();
        assert_eq!(&out[3..], &s(&["localize", "--mode", "fixed", "--mode", "sweep"])[..]);
    }
}
