//! `--config FILE`: each `key=value` line becomes `--key value` unless the
//! flag is already on the command line. Keys meant for other subcommands are
//! skipped, so one file can serve several commands; unknown keys warn.

use std::fs;

use clap::{ArgAction, Command};

const GLOBAL_VALUED: [&str; 3] = ["--config", "--threads", "--out"];

/// Position of the subcommand name and the config path, if any.
fn scan(argv: &[String]) -> (Option<usize>, Option<String>) {
    let mut sub = None;
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if a == "--config" {
            config = argv.get(i + 1).cloned();
            i += 1;
        } else if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 1;
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    (sub, config)
}

fn given(argv: &[String], flag: &str) -> bool {
    argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")))
}

/// Returns `argv` with the config entries appended.
pub fn inject(mut argv: Vec<String>, cmd: &Command) -> Result<Vec<String>, String> {
    let (sub, config) = scan(&argv);
    let Some(path) = config else { return Ok(argv) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let sub_cmd = sub.and_then(|i| cmd.find_subcommand(&argv[i]));
    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value, got `{line}`", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            continue;
        }
        let arg = sub_cmd
            .into_iter()
            .chain(std::iter::once(cmd))
            .flat_map(|c| c.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            let known = cmd.get_subcommands().flat_map(|c| c.get_arguments()).any(|a| a.get_long() == Some(key.as_str()));
            if known {
                log::debug!("{path}: `{key}` is not used by this command");
            } else {
                eprintln!("warning: {path}:{}: unknown key `{key}` skipped", lineno + 1);
            }
            continue;
        };
        let flag = format!("--{key}");
        if given(&argv, &flag) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                "true" | "1" | "yes" => extra.push(flag),
                "false" | "0" | "no" => {}
                _ => return Err(format!("{path}:{}: `{key}` expects true or false", lineno + 1)),
            },
            _ => {
                extra.push(flag);
                extra.push(value.to_string());
            }
        }
    }
    argv.extend(extra);
    Ok(argv)
}
