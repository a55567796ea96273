//! Flat-file outputs: CSV tables with a provenance header, JSON metadata,
//! plot scripts.

use crate::config::Format;
use anyhow::{Context, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Where and how one command writes its files.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config_sha256: String,
    pub formats: Vec<Format>,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(
        dir: PathBuf,
        command: &'static str,
        config_sha256: String,
        formats: Vec<Format>,
    ) -> Result<Self> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Sink {
            dir,
            command,
            config_sha256,
            formats,
            written: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with `#` lines naming the command, the config hash and the units,
    /// then the column row. Skipped when CSV output is disabled.
    pub fn csv(
        &mut self,
        name: &str,
        units: &str,
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> Result<()> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let mut body = format!(
            "# greenlab {}\n# config_sha256: {}\n# units: {units}\n{}\n",
            self.command,
            self.config_sha256,
            columns.join(",")
        );
        for row in rows {
            body.push_str(&row.join(","));
            body.push('\n');
        }
        self.write(name, &body).map(|_| ())
    }

    /// Pretty JSON; skipped when JSON output is disabled.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body).map(|_| ())
    }

    /// Always written: scripts and diagnostics do not depend on the format list.
    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.write(name, body).map(|_| ())
    }
}

/// Shortest round-trip decimal, stable across runs.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn coordinate_names(dim: usize) -> Vec<String> {
    match dim {
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=dim).map(|k| format!("x{k}")).collect(),
    }
}

/// Gnuplot script for the sweep table.
pub fn sweep_plot_script(csv: &Path) -> String {
    let data = csv
        .file_name()
        .map_or_else(|| "sweep.csv".into(), |n| n.to_string_lossy().into_owned());
    format!(
        "# gnuplot script for {data}\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1000,420\n\
         set output 'sweep.png'\n\
         set multiplot layout 1,2\n\
         set xlabel 'alpha'\n\
         set ylabel 'G(x,y0) |x-y0|^(d-alpha)'\n\
         plot '{data}' using 1:2 with linespoints, '' using 1:3 with linespoints\n\
         set ylabel 'fitted exponent'\n\
         plot '{data}' using 1:4 with linespoints, '' using 1:($1-3) with lines title 'alpha - d (d = 3)'\n\
         unset multiplot\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_carries_hash_and_units() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = Sink::new(
            dir.path().to_path_buf(),
            "solve",
            "ab".repeat(32),
            vec![Format::Csv],
        )
        .unwrap();
        sink.csv(
            "t.csv",
            "unit-free",
            &["a", "b"],
            &[vec![num(1.0), num(0.5)]],
        )
        .unwrap();
        sink.json("t.json", &1).unwrap();
        let body = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "# greenlab solve");
        assert_eq!(lines[1], format!("# config_sha256: {}", "ab".repeat(32)));
        assert_eq!(lines[2], "# units: unit-free");
        assert_eq!(&lines[3..], &["a,b", "1,0.5"]);
        assert!(!dir.path().join("t.json").exists());
        assert_eq!(sink.written.len(), 1);
    }

    #[test]
    fn coordinates_are_named_by_dimension() {
        assert_eq!(coordinate_names(3), ["x", "y", "z"]);
        assert_eq!(coordinate_names(4)[3], "x4");
    }
}
