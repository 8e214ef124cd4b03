//! `key=value` configuration files merged into the command line.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses a flat configuration file. Blank lines and lines starting with `#`
/// are ignored; keys may use `-` or `_`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", n + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", n + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text)
}

/// Extracts `--config PATH` (or `--config=PATH`) from `args`, returning the
/// remaining arguments and the path.
pub fn take_config_flag(args: Vec<String>) -> Result<(Vec<String>, Option<String>)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    Ok((rest, path))
}

/// Inserts config pairs right after the subcommand token so that flags given
/// later on the command line override them.
pub fn splice(args: Vec<String>, pairs: &[(String, String)], subcommands: &[&str]) -> Vec<String> {
    let Some(pos) = args.iter().position(|a| subcommands.contains(&a.as_str())) else {
        return args;
    };
    let mut out = args[..=pos].to_vec();
    for (k, v) in pairs {
        out.push(format!("--{k}"));
        out.push(v.clone());
    }
    out.extend_from_slice(&args[pos + 1..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# run\nmu = 0.1\n\nmax_cuts=5\n").unwrap();
        assert_eq!(p, vec![("mu".into(), "0.1".into()), ("max-cuts".into(), "5".into())]);
        assert!(parse("mu 0.1").is_err());
    }

    #[test]
    fn flags_follow_config_values() {
        let args: Vec<String> = ["hill4bp", "--threads", "2", "poincare", "--mu", "0.2"].map(String::from).to_vec();
        let out = splice(args, &[("mu".into(), "0.1".into())], &["poincare"]);
        assert_eq!(out, ["hill4bp", "--threads", "2", "poincare", "--mu", "0.1", "--mu", "0.2"]);
    }

    #[test]
    fn config_flag_is_removed() {
        let args: Vec<String> = ["a", "--config=x.cfg", "b"].map(String::from).to_vec();
        assert_eq!(take_config_flag(args).unwrap(), (vec!["a".into(), "b".into()], Some("x.cfg".into())));
    }
}
