//! Output files of one run and its manifest. Every file is named
//! `<subcommand>_<name>` and listed in the manifest `<subcommand>_manifest.jsonl`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::settings::Settings;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub stats: Value,
}

pub struct Run {
    pub subcommand: &'static str,
    dir: PathBuf,
    created_dir: bool,
    files: Vec<String>,
    pub checks: Vec<Check>,
    started: Instant,
    started_unix: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    config: &'a std::collections::BTreeMap<String, String>,
    checks: &'a [Check],
    files: &'a [String],
    passed: bool,
    started_unix: u64,
    wall_time_s: f64,
}

impl Run {
    pub fn new(subcommand: &'static str, dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("out: cannot create {}: {e}", dir.display())))?;
        Ok(Run {
            subcommand,
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            checks: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    /// Create `<subcommand>_<name>` and register it.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let file = format!("{}_{name}", self.subcommand);
        let path = self.dir.join(&file);
        let f = File::create(&path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
        self.files.push(file);
        Ok(BufWriter::new(f))
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, stats: Value) {
        self.checks.push(Check { name: name.into(), passed, stats });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn finish(mut self, settings: &Settings) -> Result<bool, CliError> {
        let passed = self.passed();
        let file = format!("{}_manifest.jsonl", self.subcommand);
        let path = self.dir.join(&file);
        let m = Manifest {
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION"),
            config: settings.effective(),
            checks: &self.checks,
            files: &self.files,
            passed,
            started_unix: self.started_unix,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let mut f = File::create(&path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
        if let Err(e) = kmpflow::io::write_jsonl(&mut f, &m) {
            let _ = fs::remove_file(&path);
            return Err(CliError::Runtime(e.to_string()));
        }
        self.files.clear();
        self.created_dir = false;
        Ok(passed)
    }

    /// Remove everything this run wrote.
    pub fn discard(&mut self) {
        for f in self.files.drain(..) {
            let _ = fs::remove_file(self.dir.join(f));
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

impl Drop for Run {
    fn drop(&mut self) {
        // finish() clears the list; anything left belongs to a failed run
        self.discard();
    }
}
