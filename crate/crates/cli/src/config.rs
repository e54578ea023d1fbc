//! `key=value` config files and the resolved configuration written next to
//! every run's outputs.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, ArgMatches, Command};

/// Arguments that do not influence any output and are left out of the
/// recorded configuration.
const UNRECORDED: [&str; 4] = ["config", "workers", "verbose", "out"];

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are long flag names without the dashes.
pub fn parse_config(text: &str, source: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}: line {}: expected key=value", source.display(), ln + 1);
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Index of the subcommand token in `argv`, skipping the values of global
/// options given as separate tokens.
fn subcommand_position(argv: &[OsString], cmd: &Command) -> Option<usize> {
    let names: Vec<&str> = cmd.get_subcommands().map(|s| s.get_name()).collect();
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" || a == "--workers" {
            i += 2;
            continue;
        }
        if names.contains(&a.as_ref()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// `argv` with the config entries spliced in right after the subcommand, so
/// that flags given on the command line come later and win.
pub fn splice_config(argv: &[OsString], cmd: &Command, sub: &str, entries: &[(String, String)]) -> Result<Vec<OsString>> {
    let subcmd = cmd.find_subcommand(sub).expect("parsed subcommand exists");
    let mut flags: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            bail!("a config file cannot name another config file");
        }
        let arg = subcmd
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .with_context(|| format!("unknown config key '{key}' for '{sub}'"))?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => flags.push(format!("--{key}").into()),
                "false" => {}
                _ => bail!("config key '{key}' takes true or false"),
            }
        } else {
            flags.push(format!("--{key}").into());
            flags.push(value.into());
        }
    }
    let at = subcommand_position(argv, cmd).context("no subcommand on the command line")?;
    let mut out = argv[..=at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

/// The subcommand's arguments as `key=value` lines, defaults included, in
/// declaration order.
pub fn resolved(cmd: &Command, sub: &str, m: &ArgMatches) -> String {
    let subcmd = cmd.find_subcommand(sub).expect("parsed subcommand exists");
    let mut out = format!("command={sub}\n");
    for arg in subcmd.get_arguments() {
        let id = arg.get_id().as_str();
        if UNRECORDED.contains(&id) || matches!(arg.get_action(), ArgAction::Help | ArgAction::Version) {
            continue;
        }
        let key = arg.get_long().unwrap_or(id);
        let value = m
            .get_raw(id)
            .map(|vs| vs.map(|v| v.to_string_lossy().into_owned()).collect::<Vec<_>>().join(","))
            .unwrap_or_default();
        out.push_str(&format!("{key}={value}\n"));
    }
    out
}
