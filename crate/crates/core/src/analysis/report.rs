//! Output files: CSV matrices, SVG renderings and JSON manifests. Everything
//! written here is a pure function of its inputs so reruns are byte-identical;
//! wall-clock timings go to a separate file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scan::ScanResult;
use super::spectrogram::Spectrogram;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    #[default]
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

/// CSV matrix: the first row holds the column axis, the first column the row axis.
pub fn write_matrix_csv<W: Write>(
    mut w: W,
    corner: &str,
    rows: &[f64],
    cols: &[f64],
    data: &[f64],
) -> Result<()> {
    if data.len() != rows.len() * cols.len() {
        return Err(Error::invalid("matrix shape does not match its axes"));
    }
    write!(w, "{corner}")?;
    for c in cols {
        write!(w, ",{c:.9e}")?;
    }
    writeln!(w)?;
    for (i, r) in rows.iter().enumerate() {
        write!(w, "{r:.9e}")?;
        for v in &data[i * cols.len()..(i + 1) * cols.len()] {
            write!(w, ",{v:.9e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colormap {
    /// Dark blue through green to yellow.
    Sequential,
    /// Hue wheel for phases in (−π, π].
    Cyclic,
}

impl Colormap {
    /// `x` in [0, 1].
    pub fn rgb(self, x: f64) -> [u8; 3] {
        let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { return [200, 200, 200] };
        match self {
            Colormap::Sequential => {
                const STOPS: [[f64; 3]; 5] = [
                    [68.0, 1.0, 84.0],
                    [59.0, 82.0, 139.0],
                    [33.0, 145.0, 140.0],
                    [94.0, 201.0, 98.0],
                    [253.0, 231.0, 37.0],
                ];
                let s = x * 4.0;
                let i = (s.floor() as usize).min(3);
                let f = s - i as f64;
                let c = |k: usize| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8;
                [c(0), c(1), c(2)]
            }
            Colormap::Cyclic => {
                let h = x * 6.0;
                let sector = (h.floor() as i32).rem_euclid(6);
                let f = h - h.floor();
                let (up, down) = ((255.0 * f).round() as u8, (255.0 * (1.0 - f)).round() as u8);
                match sector {
                    0 => [255, up, 0],
                    1 => [down, 255, 0],
                    2 => [0, 255, up],
                    3 => [0, down, 255],
                    4 => [up, 0, 255],
                    _ => [255, 0, down],
                }
            }
        }
    }
}

/// A heat map with `nx × ny` cells; `value(ix, iy)` is in [0, 1] and `iy`
/// runs upward.
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub colormap: Colormap,
    /// Colorbar end labels.
    pub range: (f64, f64),
    /// Horizontal guide lines at these y values.
    pub guides: &'a [f64],
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 100.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn svg_open(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = x0 + f * (x1 - x0);
        let py = y0 - f * (y0 - y1);
        let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{y0}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick(xr.0 + f * (xr.1 - xr.0))
        );
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick(yr.0 + f * (yr.1 - yr.0))
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) { format!("{v:.2e}") } else { format!("{v:.3}") }
}

fn span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) }
}

impl Heatmap<'_> {
    pub fn render(&self, value: impl Fn(usize, usize) -> f64) -> String {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut s = String::new();
        svg_open(&mut s, self.title);
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        let cw = (x1 - x0) / nx as f64;
        let ch = (y0 - y1) / ny as f64;
        for iy in 0..ny {
            for ix in 0..nx {
                let [r, g, b] = self.colormap.rgb(value(ix, iy));
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                    x0 + ix as f64 * cw,
                    y0 - (iy + 1) as f64 * ch,
                    cw + 0.05,
                    ch + 0.05
                );
            }
        }
        // axis ranges at cell centres
        let xr = span(self.xs);
        let yr = span(self.ys);
        let half = |r: (f64, f64), n: usize| {
            let d = if n > 1 { 0.5 * (r.1 - r.0) / (n - 1) as f64 } else { 0.5 };
            (r.0 - d, r.1 + d)
        };
        let (xr, yr) = (half(xr, nx), half(yr, ny));
        for &g in self.guides {
            if g < yr.0 || g > yr.1 {
                continue;
            }
            let py = y0 - (g - yr.0) / (yr.1 - yr.0) * (y0 - y1);
            let _ = writeln!(
                s,
                r#"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="red" stroke-width="0.8"/>"#
            );
        }
        axes(&mut s, self.x_label, self.y_label, xr, yr);
        // colorbar
        let bx = W - RIGHT + 25.0;
        let steps = 64;
        let bh = (y0 - y1) / steps as f64;
        for k in 0..steps {
            let [r, g, b] = self.colormap.rgb((k as f64 + 0.5) / steps as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                y0 - (k + 1) as f64 * bh,
                bh + 0.05
            );
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx + 20.0, y0, tick(self.range.0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx + 20.0, y1 + 10.0, tick(self.range.1));
        s.push_str("</svg>\n");
        s
    }
}

pub struct LinePlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub series: &'a [(String, Vec<f64>)],
}

impl LinePlot<'_> {
    pub fn render(&self) -> String {
        let mut s = String::new();
        svg_open(&mut s, self.title);
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        let xr = span(self.xs);
        let all: Vec<f64> = self.series.iter().flat_map(|(_, v)| v.iter().cloned()).filter(|v| v.is_finite()).collect();
        let yr = if all.is_empty() { (0.0, 1.0) } else { span(&all) };
        let yr = (yr.0.min(0.0), yr.1);
        for (k, (name, ys)) in self.series.iter().enumerate() {
            let [r, g, b] = Colormap::Cyclic.rgb(k as f64 / self.series.len().max(1) as f64);
            let mut path = String::new();
            for (i, (x, y)) in self.xs.iter().zip(ys).enumerate() {
                if !y.is_finite() {
                    continue;
                }
                let px = x0 + (x - xr.0) / (xr.1 - xr.0) * (x1 - x0);
                let py = y0 - (y - yr.0) / (yr.1 - yr.0) * (y0 - y1);
                let _ = write!(path, "{}{px:.2},{py:.2}", if i == 0 { "M" } else { " L" });
            }
            let _ = writeln!(s, r#"<path d="{path}" fill="none" stroke="rgb({r},{g},{b})" stroke-width="1.5"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="rgb({r},{g},{b})">{}</text>"#,
                W - RIGHT + 8.0,
                y1 + 14.0 * (k + 1) as f64,
                escape(name)
            );
        }
        axes(&mut s, self.x_label, self.y_label, xr, yr);
        s.push_str("</svg>\n");
        s
    }
}

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<fs::File> {
    let path = dir.join(name);
    let f = fs::File::create(&path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    written.push(path);
    Ok(f)
}

fn write_text(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    create(dir, name, written)?.write_all(text.as_bytes())?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::config(dir.display().to_string(), format!("cannot create output directory: {e}")))
}

/// Transferred, overlap and fidelity matrices, per-cell metrics JSON, and two heat maps.
pub fn emit_scan(dir: &Path, scan: &ScanResult, format: Format) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    let (rows, cols) = (&scan.rows.values, &scan.cols.values);
    let corner = format!("{}\\{}", scan.rows.name, scan.cols.name);
    let tables = [
        ("transferred", scan.matrix(|m| m.transferred)),
        ("overlap", scan.matrix(|m| m.overlap)),
        ("fidelity", scan.matrix(|m| m.fidelity)),
    ];
    if format.csv() {
        for (name, data) in &tables {
            write_matrix_csv(create(dir, &format!("scan_{name}.csv"), &mut out)?, &corner, rows, cols, data)?;
        }
        let mut text = serde_json::to_string_pretty(&scan.cells)?;
        text.push('\n');
        write_text(dir, "scan_cells.json", &text, &mut out)?;
    }
    if format.svg() {
        for (name, data) in tables.iter().take(2) {
            let hm = Heatmap {
                title: name,
                x_label: &scan.cols.label(),
                y_label: &scan.rows.label(),
                xs: cols,
                ys: rows,
                colormap: Colormap::Sequential,
                range: (0.0, 1.0),
                guides: &[],
            };
            let svg = hm.render(|ix, iy| data[iy * cols.len() + ix]);
            write_text(dir, &format!("scan_{name}.svg"), &svg, &mut out)?;
        }
    }
    Ok(out)
}

/// Normalized magnitude and phase matrices (rows = probe time), a magnitude
/// heat map with resonance guide lines and a phase map with a cyclic scale.
pub fn emit_spectrogram(dir: &Path, spec: &Spectrogram, resonances: &[f64], format: Format) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    let ts: Vec<f64> = spec.times.values().collect();
    let ws: Vec<f64> = spec.freqs.values().collect();
    let mag = spec.normalized_magnitude();
    let phase: Vec<f64> = spec.values.iter().map(|z| z.arg()).collect();
    if format.csv() {
        write_matrix_csv(create(dir, "spectrogram_magnitude.csv", &mut out)?, "t_fs\\omega", &ts, &ws, &mag)?;
        write_matrix_csv(create(dir, "spectrogram_phase.csv", &mut out)?, "t_fs\\omega", &ts, &ws, &phase)?;
    }
    if format.svg() {
        let nw = ws.len();
        let title = format!("probe width {} fs", spec.probe_width);
        let hm = Heatmap {
            title: &title,
            x_label: "probe time [fs]",
            y_label: "probe frequency [rad/fs]",
            xs: &ts,
            ys: &ws,
            colormap: Colormap::Sequential,
            range: (0.0, 1.0),
            guides: resonances,
        };
        write_text(dir, "spectrogram_magnitude.svg", &hm.render(|it, iw| mag[it * nw + iw]), &mut out)?;
        let hm = Heatmap { colormap: Colormap::Cyclic, range: (-std::f64::consts::PI, std::f64::consts::PI), guides: &[], ..hm };
        let svg = hm.render(|it, iw| (phase[it * nw + iw] + std::f64::consts::PI) / std::f64::consts::TAU);
        write_text(dir, "spectrogram_phase.svg", &svg, &mut out)?;
    }
    Ok(out)
}

/// Amplitudes and phases per level over time, plus a population plot.
pub fn emit_trajectory(dir: &Path, traj: &Trajectory, format: Format) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    if format.csv() {
        traj.write_csv(std::io::BufWriter::new(create(dir, "trajectory.csv", &mut out)?))?;
    }
    if format.svg() {
        let series: Vec<(String, Vec<f64>)> = traj
            .labels
            .iter()
            .map(|l| (l.clone(), traj.population_series(l).unwrap_or_default()))
            .collect();
        let plot = LinePlot {
            title: &format!("populations ({})", traj.frame.name()),
            x_label: "t [fs]",
            y_label: "population",
            xs: &traj.times,
            series: &series,
        };
        write_text(dir, "populations.svg", &plot.render(), &mut out)?;
    }
    Ok(out)
}

/// Provenance written next to every command's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// The resolved configuration, sufficient to rerun the command.
    pub config: serde_json::Value,
    pub model_fingerprint: String,
    pub outputs: Vec<String>,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, model_fingerprint: String) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            model_fingerprint,
            outputs: vec![],
            failed: false,
            notes: vec![],
        }
    }

    /// Records output file names relative to `dir`, sorted.
    pub fn add_outputs(&mut self, dir: &Path, paths: &[PathBuf]) {
        for p in paths {
            let rel = p.strip_prefix(dir).unwrap_or(p).display().to_string();
            if !self.outputs.contains(&rel) {
                self.outputs.push(rel);
            }
        }
        self.outputs.sort();
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        ensure_dir(dir)?;
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn write_timing(dir: &Path, seconds: f64) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("timing.json");
    fs::write(&path, format!("{{\n  \"wall_seconds\": {seconds:.3}\n}}\n"))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_layout() {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, "r\\c", &[1.0, 2.0], &[10.0, 20.0, 30.0], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("r\\c,1.000000000e1"));
        assert!(lines[2].starts_with("2.000000000e0,4.0"));
        assert!(write_matrix_csv(Vec::new(), "", &[1.0], &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn colormaps_hit_endpoints() {
        assert_eq!(Colormap::Sequential.rgb(0.0), [68, 1, 84]);
        assert_eq!(Colormap::Sequential.rgb(1.0), [253, 231, 37]);
        assert_eq!(Colormap::Cyclic.rgb(0.0), Colormap::Cyclic.rgb(1.0 - 1e-12));
        assert_eq!(Colormap::Sequential.rgb(f64::NAN), [200, 200, 200]);
    }
}
