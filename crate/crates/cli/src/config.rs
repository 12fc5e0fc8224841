//! TOML option overlay.
//!
//! ```toml
//! seed = 7              # top level: any subcommand with a --seed option
//! [sound]
//! frames = 300
//! noise = "off"
//! save-iq = true        # booleans toggle flags
//! [approximate]
//! profile = ["a.csv", "b.csv"]
//! ```
//!
//! Values are turned into `--key value` arguments placed right after the
//! subcommand name. A key whose option also appears on the command line is
//! skipped, so flags always win over the file. `[section]` values win over
//! top-level ones.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Command;

fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn scalar(key: &str, v: &toml::Value) -> anyhow::Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        other => bail!("config key '{key}': unsupported value {other}"),
    })
}

fn push_option(out: &mut Vec<String>, key: &str, v: &toml::Value) -> anyhow::Result<()> {
    match v {
        toml::Value::Boolean(true) => out.push(format!("--{key}")),
        toml::Value::Boolean(false) => {}
        toml::Value::Array(items) => {
            for item in items {
                out.push(format!("--{key}"));
                out.push(scalar(key, item)?);
            }
        }
        other => {
            out.push(format!("--{key}"));
            out.push(scalar(key, other)?);
        }
    }
    Ok(())
}

/// Returns `argv` with the config file's options spliced in.
pub fn apply_overlay(cmd: &Command, argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .with_context(|| format!("parsing config {}", path.display()))?;

    let Some(pos) = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| cmd.find_subcommand(a.as_str()).is_some())
        .map(|(i, _)| i)
    else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(argv[pos].as_str()).expect("found above");
    let known = |key: &str| sub.get_arguments().any(|a| a.get_long() == Some(key));
    // Options given explicitly are left to the command line. Repeatable
    // options are replaced wholesale rather than merged.
    let given = |key: &str| {
        let flag = format!("--{key}");
        argv[pos + 1..]
            .iter()
            .any(|a| *a == flag || a.strip_prefix(flag.as_str()).is_some_and(|r| r.starts_with('=')))
    };

    let section = match table.get(sub.get_name()) {
        Some(v) => Some(
            v.as_table()
                .with_context(|| format!("config key '{}' must be a table", sub.get_name()))?,
        ),
        None => None,
    };
    let in_section = |key: &str| section.is_some_and(|t| t.contains_key(key));

    let mut injected = Vec::new();
    for (key, value) in &table {
        if value.is_table() || key == "config" {
            continue;
        }
        if known(key) && !given(key) && !in_section(key) {
            push_option(&mut injected, key, value)?;
        }
    }
    for (key, value) in section.into_iter().flatten() {
        if !known(key) {
            bail!("config [{}]: unknown option '{key}'", sub.get_name());
        }
        if !given(key) {
            push_option(&mut injected, key, value)?;
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
