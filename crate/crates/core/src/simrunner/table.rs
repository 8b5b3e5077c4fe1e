use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub x: f64,
    pub method: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Labeled series with provenance, written as CSV with a `#` comment header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub rows: Vec<ResultRow>,
    pub config_hash: String,
    pub seed: u64,
    pub provenance: String,
    /// Replicates dropped because nobody was served.
    pub skipped: usize,
}

/// Mean and standard error of independent replicate values.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl ResultTable {
    pub fn new(title: &str, x_label: &str, y_label: &str, config_hash: String, seed: u64) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            rows: Vec::new(),
            config_hash,
            seed,
            provenance: format!("pairclust {}", env!("CARGO_PKG_VERSION")),
            skipped: 0,
        }
    }

    /// Appends a row summarizing replicate `values`.
    pub fn push_replicates(&mut self, x: f64, method: &str, values: &[f64]) {
        let (mean, stderr) = mean_stderr(values);
        self.rows.push(ResultRow {
            x,
            method: method.into(),
            mean,
            stderr,
            n: values.len(),
        });
    }

    pub fn push(&mut self, x: f64, method: &str, mean: f64, stderr: f64, n: usize) {
        self.rows.push(ResultRow {
            x,
            method: method.into(),
            mean,
            stderr,
            n,
        });
    }

    pub fn get(&self, x: f64, method: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.x == x && r.method == method)
    }

    /// Methods in first-appearance order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn series(&self, method: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.title);
        let _ = writeln!(s, "# config_hash = {}", self.config_hash);
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# provenance = {}", self.provenance);
        let _ = writeln!(s, "# skipped_replicates = {}", self.skipped);
        let _ = writeln!(s, "x,method,mean,stderr,n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.x, r.method, r.mean, r.stderr, r.n);
        }
        s
    }

    /// Line chart: one polyline per method, axes with tick labels, legend.
    pub fn to_svg(&self) -> String {
        let (w, h) = (720.0, 480.0);
        let (left, right, top, bottom) = (70.0, 180.0, 40.0, 60.0);
        let finite: Vec<&ResultRow> = self.rows.iter().filter(|r| r.mean.is_finite()).collect();
        let span = |vals: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut finite.iter().map(|r| r.x));
        let (y0, y1) = span(&mut finite.iter().map(|r| r.mean));
        let y0 = y0.min(0.0);
        let pw = w - left - right;
        let ph = h - top - bottom;
        let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;
        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"];

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, "<!-- config_hash = {} seed = {} -->", self.config_hash, self.seed);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
            top + ph,
            left + pw
        );
        for i in 0..=5 {
            let fx = x0 + (x1 - x0) * i as f64 / 5.0;
            let fy = y0 + (y1 - y0) * i as f64 / 5.0;
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, px(fx), top + ph + 18.0, tick(fx));
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 6.0, py(fy) + 4.0, tick(fy));
            let _ = writeln!(s, r##"<path d="M{left},{:.1} H{:.1}" stroke="#ddd"/>"##, py(fy), left + pw);
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            top + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, m) in self.methods().iter().enumerate() {
            let color = palette[i % palette.len()];
            let mut pts: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
            for r in self.series(m).into_iter().filter(|r| r.mean.is_finite()) {
                pts.insert(r.x.to_bits() ^ (1 << 63), (r.x, r.mean));
            }
            let mut pts: Vec<(f64, f64)> = pts.into_values().collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
            let ly = top + 10.0 + 18.0 * i as f64;
            let lx = left + pw + 15.0;
            let _ = writeln!(s, r#"<path d="M{lx},{ly} h20" stroke="{color}" stroke-width="2"/>"#);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(m));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        format!("{:.2}", v)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
