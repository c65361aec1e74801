use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::PathBuf;

use equipart_core::report::{Check, IdentityReport};

use crate::config::RunConfig;

/// Fixed-width scientific notation, so identical runs give identical bytes.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.12e}")
}

/// Output directory writer; every file starts with the config hash.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    json: String,
    pub files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            dir: config.out.clone(),
            hash: config.hash(),
            json: config.to_json(),
            files: Vec::new(),
        }
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut buf = format!("# config_hash={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.into_iter().collect::<Vec<_>>())?;
            }
            w.flush()?;
        }
        fs::write(&path, buf)?;
        self.files.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        let header = if name.ends_with(".json") {
            String::new()
        } else {
            format!("# config_hash={}\n# config={}\n", self.hash, self.json)
        };
        fs::write(&path, format!("{header}{body}"))?;
        self.files.push(path);
        Ok(())
    }
}

/// One block of a report: checks, extra key-value facts and notes.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub key: String,
    pub title: String,
    pub checks: Vec<Check>,
    pub kv: Vec<(String, String)>,
    pub notes: Vec<String>,
    /// Pre-rendered body from the core report, if any.
    body: Option<(String, String)>,
}

impl Section {
    pub fn new(key: &str, title: &str) -> Self {
        Self {
            key: key.into(),
            title: title.into(),
            checks: Vec::new(),
            kv: Vec::new(),
            notes: Vec::new(),
            body: None,
        }
    }

    pub fn from_report(key: &str, report: &IdentityReport) -> Self {
        Self {
            key: key.into(),
            title: report.case.clone(),
            checks: report.checks.clone(),
            kv: Vec::new(),
            notes: report.notes.clone(),
            body: Some((report.to_kv(), report.to_table())),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        match &self.body {
            Some((kv, _)) => {
                for line in kv.lines() {
                    let _ = writeln!(s, "{}.{line}", self.key);
                }
            }
            None => {
                let _ = writeln!(s, "{}.case={}", self.key, self.title);
                for c in &self.checks {
                    let _ = writeln!(
                        s,
                        "{}.check.{}={}",
                        self.key,
                        c.name,
                        if c.passed { "pass" } else { "fail" }
                    );
                }
                for (k, n) in self.notes.iter().enumerate() {
                    let _ = writeln!(s, "{}.note.{k}={n}", self.key);
                }
                let _ = writeln!(s, "{}.result={}", self.key, if self.passed() { "pass" } else { "fail" });
            }
        }
        for (k, v) in &self.kv {
            let _ = writeln!(s, "{}.{k}={v}", self.key);
        }
        s
    }

    pub fn to_table(&self) -> String {
        if let Some((_, table)) = &self.body {
            return table.clone();
        }
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.title);
        let _ = writeln!(s, "{:<24} {:>30} {:>30}  result", "check", "expected", "actual");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<24} {:>30} {:>30}  {}",
                c.name,
                c.expected,
                c.actual,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}
