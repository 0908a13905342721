//! Ingestion, aggregation, model files, bundled fixtures and plot output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Axis, Breakpoints, GridField, MsiModel, StripSeries};
use crate::predict::RectangleTotals;

/// Parses a plain numeric CSV into rows of numbers. Blank lines are skipped;
/// `header` drops the first non-blank line.
pub fn parse_table(text: &str, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut skip = header;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if skip {
            skip = false;
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                let c = c.trim();
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NonNumeric { line: i + 1, value: c.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Ragged {
                    line: i + 1,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidField("no data rows".into()));
    }
    Ok(rows)
}

pub fn parse_grid(text: &str, header: bool) -> Result<GridField> {
    let rows = parse_table(text, header)?;
    let offset = text.lines().take_while(|l| l.trim().is_empty()).count() + usize::from(header);
    for (r, row) in rows.iter().enumerate() {
        if let Some(&v) = row.iter().find(|v| **v < 0.0) {
            return Err(Error::Negative { line: r + 1 + offset, value: v });
        }
    }
    let cols = rows[0].len();
    GridField::new(rows.len(), cols, rows.concat())
}

pub fn load_grid(path: impl AsRef<Path>, header: bool) -> Result<GridField> {
    parse_grid(&std::fs::read_to_string(path)?, header)
}

/// Row sums (vertical strips) or column sums (horizontal strips).
pub fn strip_sums(g: &GridField, axis: Axis) -> Result<StripSeries> {
    let values = match axis {
        Axis::Vertical => (0..g.rows()).map(|r| g.row(r).iter().sum()).collect(),
        Axis::Horizontal => (0..g.cols()).map(|c| (0..g.rows()).map(|r| g.get(r, c)).sum()).collect(),
        Axis::Time => {
            return Err(Error::InvalidArgument("strip sums are defined for the spatial axes only".into()))
        }
    };
    StripSeries::new(axis, values)
}

/// Reads a one-row or one-column grid as a series.
pub fn series_from_grid(g: &GridField, axis: Axis) -> Result<StripSeries> {
    if g.rows() != 1 && g.cols() != 1 {
        return Err(Error::InvalidField(format!(
            "a series needs a single row or column, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    StripSeries::new(axis, g.values().to_vec())
}

pub fn load_series(path: impl AsRef<Path>, header: bool, axis: Axis) -> Result<StripSeries> {
    series_from_grid(&load_grid(path, header)?, axis)
}

fn check_extent(b: &Breakpoints, extent: usize) -> Result<()> {
    match b.points().iter().find(|&&p| p < 0.0 || p > extent as f64) {
        Some(&value) => Err(Error::OutOfExtent { value, extent }),
        None => Ok(()),
    }
}

/// Overlap of cell `[i, i+1)` with `[lo, hi)`.
fn overlap(i: usize, lo: f64, hi: f64) -> f64 {
    let a = (i as f64).max(lo);
    let b = ((i + 1) as f64).min(hi);
    (b - a).max(0.0)
}

fn region_sum(g: &GridField, rows: (f64, f64), cols: (f64, f64)) -> f64 {
    let r0 = rows.0.floor() as usize;
    let r1 = (rows.1.ceil() as usize).min(g.rows());
    let c0 = cols.0.floor() as usize;
    let c1 = (cols.1.ceil() as usize).min(g.cols());
    let mut total = 0.0;
    for r in r0..r1 {
        let wr = overlap(r, rows.0, rows.1);
        if wr == 0.0 {
            continue;
        }
        for c in c0..c1 {
            let wc = overlap(c, cols.0, cols.1);
            total += wr * wc * g.get(r, c);
        }
    }
    total
}

/// Sums the grid over each scale rectangle of `a` (rows) × `b` (columns).
///
/// Breakpoints are in cell units; cells cut by a fractional boundary are
/// split by overlapped area. With `sub_split` each rectangle is halved on
/// both axes and the four parts are stored in the order low-low, low-high,
/// high-low, high-high (row half first).
pub fn rect_sums(g: &GridField, a: &Breakpoints, b: &Breakpoints, sub_split: bool) -> Result<RectangleTotals> {
    check_extent(a, g.rows())?;
    check_extent(b, g.cols())?;
    let mut out = RectangleTotals::new();
    for (k1, ra) in a.points().windows(2).enumerate() {
        for (k2, rb) in b.points().windows(2).enumerate() {
            let subs = if sub_split {
                let ma = (ra[0] + ra[1]) / 2.0;
                let mb = (rb[0] + rb[1]) / 2.0;
                let rows = [(ra[0], ma), (ma, ra[1])];
                let cols = [(rb[0], mb), (mb, rb[1])];
                rows.iter()
                    .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
                    .map(|(r, c)| region_sum(g, r, c))
                    .collect()
            } else {
                vec![region_sum(g, (ra[0], ra[1]), (rb[0], rb[1]))]
            };
            out.insert((k1 + 1, k2 + 1), subs)?;
        }
    }
    Ok(out)
}

/// JSON form of an [`MsiModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    #[serde(rename = "Hprime1")]
    pub hprime1: Vec<f64>,
    #[serde(rename = "Hprime2")]
    pub hprime2: Vec<f64>,
    pub breakpoints_a: Vec<f64>,
    pub breakpoints_b: Vec<f64>,
    /// Derived on write; ignored on read.
    #[serde(default)]
    pub simulatable: bool,
}

impl From<&MsiModel> for ModelFile {
    fn from(m: &MsiModel) -> Self {
        Self {
            lambda1: m.lambda[0],
            lambda2: m.lambda[1],
            h1: m.hurst[0],
            h2: m.hurst[1],
            hprime1: m.hprime1.clone(),
            hprime2: m.hprime2.clone(),
            breakpoints_a: m.breakpoints_a.points().to_vec(),
            breakpoints_b: m.breakpoints_b.points().to_vec(),
            simulatable: m.simulatable(),
        }
    }
}

impl ModelFile {
    /// Structurally checked model; `H'` outside (0, 1) is allowed.
    pub fn into_model(self) -> Result<MsiModel> {
        let m = MsiModel {
            lambda: [self.lambda1, self.lambda2],
            hurst: [self.h1, self.h2],
            hprime1: self.hprime1,
            hprime2: self.hprime2,
            breakpoints_a: Breakpoints::new(self.breakpoints_a)?,
            breakpoints_b: Breakpoints::new(self.breakpoints_b)?,
        };
        m.check_structure()?;
        Ok(m)
    }
}

pub fn model_to_json(m: &MsiModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from(m))?)
}

pub fn model_from_json(text: &str) -> Result<MsiModel> {
    serde_json::from_str::<ModelFile>(text)?.into_model()
}

pub fn read_model(path: impl AsRef<Path>) -> Result<MsiModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_model(path: impl AsRef<Path>, m: &MsiModel) -> Result<()> {
    std::fs::write(path, model_to_json(m)? + "\n")?;
    Ok(())
}

/// A bundled table: shape and checksum are fixed.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub sum: f64,
    text: &'static str,
}

macro_rules! fixture {
    ($name:literal, $desc:literal, $rows:literal, $cols:literal, $sum:literal) => {
        Fixture {
            name: $name,
            description: $desc,
            rows: $rows,
            cols: $cols,
            sum: $sum,
            text: include_str!(concat!("../fixtures/", $name, ".csv")),
        }
    };
}

pub const FIXTURES: &[Fixture] = &[
    fixture!("table1", "accumulated precipitation on vertical strips", 1, 60, 837199.0),
    fixture!("table2", "accumulated precipitation on horizontal strips", 1, 50, 837199.0),
    fixture!("table3", "vertical subinterval samples, rows (n,m)", 6, 7, 707439.0),
    fixture!("table4", "horizontal subinterval samples, rows (n,m)", 6, 5, 652779.0),
    fixture!("table5", "vertical SS ratios and Hurst values", 2, 4, 12.881),
    fixture!("table6", "horizontal SS ratios and Hurst values", 2, 4, 17.31),
    fixture!("table7", "30-minute precipitation series", 1, 96, 832723.0),
    fixture!("table8", "time subinterval samples, rows (n,m)", 6, 3, 467694.0),
    fixture!("table9", "time SS ratios and Hurst values", 2, 4, 231.04),
    fixture!("table10", "sub-rectangle accumulations, rows A11..A33", 9, 4, 552394.0),
    fixture!("table11", "rectangle actual and predicted totals", 2, 9, 1157655.0),
    fixture!("table12", "absolute relative prediction errors", 1, 9, 0.838),
];

/// Environment variable naming a directory that replaces the bundled fixtures.
pub const FIXTURE_ENV: &str = "MSI_FIXTURES";

pub fn fixture(name: &str) -> Result<&'static Fixture> {
    let name = name.trim_end_matches(".csv");
    let name = name.rsplit(['/', '\\']).next().unwrap_or(name);
    FIXTURES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown fixture {name:?}")))
}

fn fixture_dir() -> Option<PathBuf> {
    std::env::var_os(FIXTURE_ENV).map(PathBuf::from)
}

impl Fixture {
    /// CSV text, read from the override directory when one is set.
    pub fn text(&self) -> Result<String> {
        match fixture_dir() {
            Some(dir) => Ok(std::fs::read_to_string(dir.join(format!("{}.csv", self.name)))?),
            None => Ok(self.text.to_string()),
        }
    }

    pub fn bundled_text(&self) -> &'static str {
        self.text
    }

    pub fn grid(&self) -> Result<GridField> {
        parse_grid(&self.text()?, false)
    }

    pub fn rows(&self) -> Result<Vec<Vec<f64>>> {
        parse_table(&self.text()?, false)
    }

    /// Checks shape and checksum.
    pub fn validate(&self) -> Result<()> {
        let g = self.grid()?;
        if (g.rows(), g.cols()) != (self.rows, self.cols) {
            return Err(Error::InvalidField(format!(
                "{}: shape {}x{}, expected {}x{}",
                self.name,
                g.rows(),
                g.cols(),
                self.rows,
                self.cols
            )));
        }
        let sum = g.sum();
        if (sum - self.sum).abs() > 1e-9 * self.sum.abs().max(1.0) {
            return Err(Error::InvalidField(format!("{}: checksum {sum}, expected {}", self.name, self.sum)));
        }
        Ok(())
    }
}

/// Resolves a path argument: an existing file wins, otherwise a bundled
/// fixture of the same stem.
pub fn read_input(path: &str) -> Result<String> {
    let p = Path::new(path);
    if p.is_file() {
        return Ok(std::fs::read_to_string(p)?);
    }
    match fixture(path) {
        Ok(f) => f.text(),
        Err(_) => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{path}: no such file or bundled fixture"),
        ))),
    }
}

pub fn fmt_fixed(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}

pub fn rows_to_csv(rows: &[Vec<f64>], digits: usize) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_fixed(*v, digits)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 360.0;
const PAD: f64 = 40.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Polyline chart of one or more series sharing an index axis. Optional
/// vertical markers are drawn at the given x positions.
pub fn svg_lines(title: &str, series: &[(&str, &[f64])], markers: &[f64]) -> String {
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let (lo, hi) = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0), lo.max(0.0) + 1.0) };
    let x = |i: f64| PAD + i / (n - 1) as f64 * (SVG_W - 2.0 * PAD);
    let y = |v: f64| SVG_H - PAD - (v - lo) / (hi - lo) * (SVG_H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        SVG_W - 2.0 * PAD,
        SVG_H - 2.0 * PAD
    );
    for &m in markers {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{PAD}" x2="{0:.2}" y2="{1}" stroke="red"/>"#,
            x(m),
            SVG_H - PAD
        );
    }
    for (k, (label, v)) in series.iter().enumerate() {
        let pts: Vec<String> = v
            .iter()
            .enumerate()
            .map(|(i, &val)| format!("{:.2},{:.2}", x(i as f64), y(val)))
            .collect();
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grayscale heat map of a row-major grid.
pub fn svg_heat(title: &str, rows: usize, cols: usize, values: &[f64]) -> String {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cw = (SVG_W - 2.0 * PAD) / cols.max(1) as f64;
    let ch = (SVG_H - 2.0 * PAD) / rows.max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-size="14">{}</text>"#, escape(title));
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let shade = (255.0 * (1.0 - (v - lo) / span)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="rgb({shade},{shade},{shade})"/>"#,
                PAD + c as f64 * cw,
                PAD + r as f64 * ch
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
