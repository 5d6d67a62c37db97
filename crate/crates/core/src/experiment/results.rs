use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::estimators::Method;
use crate::neuralnet::TrainHistory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelFamily {
    Sensing,
    Communication,
}

impl ChannelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelFamily::Sensing => "sensing",
            ChannelFamily::Communication => "communication",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// Value of the swept dimension; `None` for the plain SNR evaluation.
    pub point: Option<usize>,
    pub snr_db: f64,
    pub channel: ChannelFamily,
    pub method: Method,
    pub nmse: f64,
    pub n: usize,
}

/// Rows of an evaluation or sweep. `variable` names the swept dimension
/// (`l` or `m`) and becomes the first CSV column.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub variable: Option<&'static str>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn new(variable: Option<&'static str>) -> Self {
        SweepResult {
            variable,
            rows: Vec::new(),
        }
    }

    pub fn find(&self, point: Option<usize>, snr_db: f64, channel: ChannelFamily, method: Method) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.point == point && r.snr_db == snr_db && r.channel == channel && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(v) = self.variable {
            out.push_str(v);
            out.push(',');
        }
        out.push_str("snr_db,channel,method,nmse,n\n");
        for r in &self.rows {
            if self.variable.is_some() {
                let _ = write!(out, "{},", r.point.unwrap_or_default());
            }
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{}",
                r.snr_db,
                r.channel.as_str(),
                r.method,
                r.nmse,
                r.n
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Log-scale line chart of NMSE against SNR (or the swept dimension),
    /// one line per channel, method and, for sweeps, SNR.
    pub fn to_svg(&self, title: &str) -> String {
        let x_of = |r: &SweepRow| match self.variable {
            Some(_) => r.point.unwrap_or_default() as f64,
            None => r.snr_db,
        };
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.nmse > 0.0) {
            let label = match self.variable {
                Some(_) => format!("{} {} {} dB", r.channel.as_str(), r.method, r.snr_db),
                None => format!("{} {}", r.channel.as_str(), r.method),
            };
            let point = (x_of(r), r.nmse.log10());
            match series.iter_mut().find(|(l, _)| *l == label) {
                Some((_, pts)) => pts.push(point),
                None => series.push((label, vec![point])),
            }
        }
        let all = series.iter().flat_map(|(_, p)| p.iter().copied());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, -1.0, 0.0);
        }
        let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
        let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };

        let (w, h, left, right, top, bottom) = (720.0, 480.0, 70.0, 220.0, 40.0, 50.0);
        let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
        let py = |y: f64| top + (y1 - y) / (y1 - y0) * (h - top - bottom);
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

        let mut svg = String::new();
        let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, (left + w - right) / 2.0, escape(title));
        let _ = writeln!(
            svg,
            r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - left - right,
            h - top - bottom
        );
        let mut decade = y0;
        while decade <= y1 {
            let y = py(decade);
            let _ = writeln!(svg, r##"<line x1="{left}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, w - right);
            let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{}</text>"#, left - 6.0, y + 4.0, decade);
            decade += 1.0;
        }
        let mut xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for x in xs {
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#, px(x), h - bottom + 16.0);
        }
        let x_label = match self.variable {
            Some(v) => v.to_uppercase(),
            None => "SNR (dB)".to_string(),
        };
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, (left + w - right) / 2.0, h - 10.0);
        let _ = writeln!(svg, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">NMSE</text>"#, h / 2.0, h / 2.0);
        for (i, (label, pts)) in series.iter().enumerate() {
            let color = colors[i % colors.len()];
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
            let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
            for &(x, y) in pts {
                let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
            }
            let ly = top + 16.0 * i as f64 + 8.0;
            let lx = w - right + 12.0;
            let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(label));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Per-epoch losses with the running minimum of the validation loss, the
/// retained-epoch marker, and the stop reason on the last row.
pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,best_val_loss,is_best,stop\n");
    let mut best = f64::INFINITY;
    let last = history.epochs.len();
    for (i, e) in history.epochs.iter().enumerate() {
        best = best.min(e.val_loss);
        let stop = if i + 1 == last { history.stop.to_string() } else { String::new() };
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{},{}",
            e.epoch,
            e.train_loss,
            e.val_loss,
            best,
            u8::from(e.epoch == history.best_epoch),
            stop
        );
    }
    out
}
