//! Run reports and their JSON, CSV and SVG artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::SlopeFit;
use crate::cns::write_atomic;
use crate::error::{Error, Result};

/// Column layout of the decay table.
pub const DECAY_COLUMNS: [&str; 6] = ["t", "besov_s0_low", "besov_s1_low", "D_high_alpha", "D_tnablau_high", "Xp"];

/// Column layout of the low Mach table.
pub const LOW_MACH_COLUMNS: [&str; 4] = ["eps", "sup_Qu_L2", "err_Pu_vs_v_LinfL2", "C0_eps_nu"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV bytes with every value in `{:.12e}` form.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.12e}"))).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub quantity: String,
    pub slope: f64,
    pub stderr: f64,
    /// `slope ± 1.96·stderr`.
    pub ci95: (f64, f64),
    pub window: (f64, f64),
    pub points: usize,
}

impl SlopeRow {
    pub fn new(quantity: &str, fit: &SlopeFit, window: (f64, f64)) -> Self {
        Self {
            quantity: quantity.to_string(),
            slope: fit.slope,
            stderr: fit.stderr,
            ci95: (fit.slope - 1.96 * fit.stderr, fit.slope + 1.96 * fit.stderr),
            window,
            points: fit.points,
        }
    }
}

/// A measured constant with the statement it belongs to and the seeds used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub anchor: String,
    pub seeds: Vec<u64>,
}

/// One asserted inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub measured: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, anchor: &str, measured: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            lower: None,
            upper: Some(upper),
            passed: measured <= upper,
        }
    }

    pub fn at_least(name: &str, anchor: &str, measured: f64, lower: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            lower: Some(lower),
            upper: None,
            passed: measured >= lower,
        }
    }

    pub fn within(name: &str, anchor: &str, measured: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            lower: Some(lower),
            upper: Some(upper),
            passed: measured >= lower && measured <= upper,
        }
    }

    /// Boolean property; `measured` is 1 when it holds.
    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured: if ok { 1.0 } else { 0.0 },
            lower: Some(1.0),
            upper: None,
            passed: ok,
        }
    }

    pub fn describe(&self) -> String {
        let bound = match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!("in [{l:.3e}, {u:.3e}]"),
            (None, Some(u)) => format!("<= {u:.3e}"),
            (Some(l), None) => format!(">= {l:.3e}"),
            (None, None) => String::new(),
        };
        format!(
            "{} {}: {:.4e} {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            bound,
            self.anchor
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub slopes: Vec<SlopeRow>,
    pub constants: Vec<Constant>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            tables: Vec::new(),
            slopes: Vec::new(),
            constants: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn constant(&mut self, name: &str, value: f64, anchor: &str, seeds: &[u64]) {
        self.constants.push(Constant {
            name: name.into(),
            value,
            anchor: anchor.into(),
            seeds: seeds.to_vec(),
        });
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Plain-text summary for the terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {} (seed {})", self.config.experiment.name(), self.config.seed);
        for c in &self.checks {
            let _ = writeln!(s, "  {}", c.describe());
        }
        for k in &self.slopes {
            let _ = writeln!(
                s,
                "  slope {}: {:.4} ± {:.4} on [{}, {}]",
                k.quantity, k.slope, k.stderr, k.window.0, k.window.1
            );
        }
        for k in &self.constants {
            let _ = writeln!(s, "  constant {} = {:.4e} ({}; seeds {:?})", k.name, k.value, k.anchor, k.seeds);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        let _ = writeln!(
            s,
            "  {} in {:.2} s",
            if self.passed() { "all checks pass" } else { "some checks FAIL" },
            self.wall_clock_s
        );
        s
    }

    /// Writes `report.json`, one CSV per table and optionally one SVG per table.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        write_atomic(&json, serde_json::to_string_pretty(self)?.as_bytes())?;
        written.push(json);
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            write_atomic(&path, &t.to_csv()?)?;
            written.push(path);
            if svg && t.rows.len() >= 2 && t.columns.len() >= 2 {
                let path = dir.join(format!("{}.svg", t.name));
                write_atomic(&path, line_plot(t).as_bytes())?;
                written.push(path);
            }
        }
        Ok(written)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of every column against the first; log axes when all values are positive.
pub fn line_plot(t: &Table) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let finite = |v: f64| v.is_finite();
    let xs: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = t.rows.iter().flat_map(|r| r[1..].iter().copied()).filter(|v| finite(*v)).collect();
    let log_x = xs.iter().all(|x| *x > 0.0);
    let log_y = !ys.is_empty() && ys.iter().all(|y| *y > 0.0);
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = range(&mut xs.iter().map(|x| tx(*x)));
    let (y0, y1) = range(&mut ys.iter().map(|y| ty(*y)));
    let px = |x: f64| pad + (tx(x) - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (ty(y) - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, w / 2.0, t.name);
    let axis = |log: bool, name: &str| if log { format!("log10 {name}") } else { name.to_string() };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 15.0,
        axis(log_x, &t.columns[0])
    );
    for (k, (a, b)) in [(x0, x1), (y0, y1)].iter().enumerate() {
        let label = if k == 0 {
            format!(r#"<text x="{pad}" y="{}">{a:.3}</text><text x="{}" y="{}" text-anchor="end">{b:.3}</text>"#, h - pad + 15.0, w - pad, h - pad + 15.0)
        } else {
            format!(r#"<text x="{}" y="{}" text-anchor="end">{a:.3}</text><text x="{}" y="{}" text-anchor="end">{b:.3}</text>"#, pad - 4.0, h - pad, pad - 4.0, pad + 10.0)
        };
        let _ = writeln!(s, "{label}");
    }
    for (c, name) in t.columns.iter().enumerate().skip(1) {
        let color = PALETTE[(c - 1) % PALETTE.len()];
        let pts: Vec<String> = t
            .rows
            .iter()
            .filter(|r| finite(r[c]) && (!log_y || r[c] > 0.0))
            .map(|r| format!("{:.2},{:.2}", px(r[0]), py(r[c])))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - pad + 4.0,
            pad + 14.0 * c as f64,
            axis(log_y, name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Experiment, ExperimentConfig};

    fn sample() -> Table {
        let mut t = Table::new("decay", &DECAY_COLUMNS);
        for i in 1..5 {
            let x = i as f64;
            t.push(vec![x, 1.0 / x, 2.0 / x, 0.1, 0.2 / x, 1e-2]);
        }
        t
    }

    #[test]
    fn csv_is_deterministic() {
        let t = sample();
        let a = t.to_csv().unwrap();
        assert_eq!(a, t.to_csv().unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("t,besov_s0_low,besov_s1_low,D_high_alpha,D_tnablau_high,Xp\n"));
    }

    #[test]
    fn artifacts_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = RunReport::new(&ExperimentConfig::preset(Experiment::Decay, 1));
        r.tables.push(sample());
        r.check(Check::at_most("x", "bound", 1.0, 2.0));
        let files = r.write(dir.path(), true).unwrap();
        assert_eq!(files.len(), 3);
        let svg = std::fs::read_to_string(dir.path().join("decay.svg")).unwrap();
        assert!(svg.contains("<polyline"));
        let back = RunReport::load(&dir.path().join("report.json")).unwrap();
        assert!(back.passed());
        assert_eq!(back.tables[0], r.tables[0]);
    }

    #[test]
    fn check_bounds() {
        assert!(Check::within("s", "a", -0.5, -0.75, -0.3).passed);
        assert!(!Check::at_least("m", "a", 0.8, 0.9).passed);
        assert!(Check::at_least("m", "a", 0.8, 0.9).describe().starts_with("FAIL"));
    }
}
