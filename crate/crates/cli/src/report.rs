//! Text + JSON report accumulation shared by every subcommand.
//!
//! The text form goes to standard output; the JSON form is written only when
//! `--json PATH` is given. Both are deterministic functions of the command
//! line and input files.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_FAIL: u8 = 3;

pub struct Report {
    lines: Vec<String>,
    json: Map<String, Value>,
    failed: bool,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut json = Map::new();
        json.insert("command".into(), Value::String(command.to_string()));
        Self {
            lines: vec![format!("command: {command}")],
            json,
            failed: false,
        }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn field<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        let v = serde_json::to_value(value).with_context(|| format!("serializing {key}"))?;
        self.json.insert(key.to_string(), v);
        Ok(())
    }

    pub fn fail(&mut self) {
        self.failed = true;
    }

    pub fn exit_code(&self) -> u8 {
        if self.failed {
            EXIT_FAIL
        } else {
            EXIT_PASS
        }
    }

    pub fn text(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }

    /// Prints the status line, writes the JSON document if requested and
    /// returns the process exit code.
    pub fn finish(mut self, json_path: Option<&Path>, to_stderr: bool) -> Result<ExitCode> {
        let code = self.exit_code();
        let status = if self.failed { "fail" } else { "pass" };
        self.line(format!("status: {status} (exit {code})"));
        self.json.insert("status".into(), Value::String(status.into()));
        self.json.insert("exit".into(), Value::from(code));
        if let Some(path) = json_path {
            let mut doc = serde_json::to_string_pretty(&Value::Object(self.json.clone()))?;
            doc.push('\n');
            fs::write(path, doc).with_context(|| format!("--json: cannot write {}", path.display()))?;
        }
        if to_stderr {
            eprint!("{}", self.text());
        } else {
            print!("{}", self.text());
        }
        Ok(ExitCode::from(code))
    }
}

/// Reconstructs the invocation as a shell-safe line starting with the
/// program name.
pub fn command_echo<I: IntoIterator<Item = String>>(args: I) -> String {
    let mut words = vec!["effrand".to_string()];
    words.extend(args.into_iter().skip(1).map(|a| quote(&a)));
    words.join(" ")
}

fn quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./=,:+@%".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}
