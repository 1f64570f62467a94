use std::fmt::Write as _;
use std::path::Path;

use super::{RateFit, ResultTable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SvgOptions {
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 720,
            height: 480,
            title: None,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Log-decade axis covering `[lo, hi]`.
struct LogAxis {
    lo: i32,
    hi: i32,
    from: f64,
    to: f64,
}

impl LogAxis {
    fn new(min: f64, max: f64, from: f64, to: f64) -> Self {
        let lo = min.log10().floor() as i32;
        let mut hi = max.log10().ceil() as i32;
        if hi <= lo {
            hi = lo + 1;
        }
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        let t = (v.log10() - self.lo as f64) / (self.hi - self.lo) as f64;
        self.from + t * (self.to - self.from)
    }

    fn floor(&self) -> f64 {
        10f64.powi(self.lo)
    }
}

fn tick_label(e: i32) -> String {
    format!("1e{e}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Mean error per `n` for each `D`, error bars of one standard deviation and
/// a dashed reference line of slope `−r_expected`.
pub fn render_svg(
    table: &ResultTable,
    rate: Option<&RateFit>,
    opts: &SvgOptions,
) -> Result<String> {
    let pts: Vec<_> = table
        .aggregates
        .iter()
        .filter(|a| a.mean_error > 0.0 && a.mean_error.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(Error::NoData);
    }
    let w = opts.width as f64;
    let h = opts.height as f64;
    let (x0, x1) = (MARGIN_LEFT, w - MARGIN_RIGHT);
    let (y0, y1) = (h - MARGIN_BOTTOM, MARGIN_TOP);

    let n_min = pts.iter().map(|a| a.n).min().unwrap() as f64;
    let n_max = pts.iter().map(|a| a.n).max().unwrap() as f64;
    let e_min = pts
        .iter()
        .map(|a| a.mean_error)
        .fold(f64::INFINITY, f64::min);
    let e_max = pts
        .iter()
        .map(|a| a.mean_error + a.var_error.sqrt())
        .fold(0.0, f64::max);
    let xa = LogAxis::new(n_min, n_max, x0, x1);
    let ya = LogAxis::new(e_min, e_max, y0, y1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(title) = &opts.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="18" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
    }

    // axes and decade ticks
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
    );
    let mut ticks = String::new();
    for e in xa.lo..=xa.hi {
        let x = xa.map(10f64.powi(e));
        let _ = write!(ticks, "M{x:.2},{y0:.2}v5");
        let _ = writeln!(
            s,
            r#"<text class="tick-x" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick_label(e)
        );
    }
    for e in ya.lo..=ya.hi {
        let y = ya.map(10f64.powi(e));
        let _ = write!(ticks, "M{x0:.2},{y:.2}h-5");
        let _ = writeln!(
            s,
            r#"<text class="tick-y" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            tick_label(e)
        );
    }
    let _ = writeln!(s, r#"<path class="ticks" d="{ticks}" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        (x0 + x1) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">mean error</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, dim_out) in table.dims().into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut series: Vec<_> = pts.iter().filter(|a| a.dim_out == dim_out).collect();
        series.sort_by_key(|a| a.n);
        let points: Vec<String> = series
            .iter()
            .map(|a| format!("{:.2},{:.2}", xa.map(a.n as f64), ya.map(a.mean_error)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-d="{dim_out}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let mut bars = String::new();
        for a in &series {
            let sd = a.var_error.sqrt();
            let x = xa.map(a.n as f64);
            let top = ya.map(a.mean_error + sd);
            // the lower whisker is clipped at the bottom of the axis
            let low = a.mean_error - sd;
            let bottom = if low > ya.floor() { ya.map(low) } else { y0 };
            let _ = write!(
                bars,
                "M{x:.2},{top:.2}V{bottom:.2}M{:.2},{top:.2}h6M{:.2},{bottom:.2}h6",
                x - 3.0,
                x - 3.0
            );
        }
        let _ = writeln!(
            s,
            r#"<path class="errorbar" d="{bars}" stroke="{color}" fill="none"/>"#
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">D = {dim_out}</text>"#,
            x1 + 12.0,
            x1 + 32.0,
            x1 + 38.0,
            ly + 4.0
        );
    }

    if let Some(rate) = rate {
        // anchored on the pooled fit at the smallest n
        let at = |n: f64| {
            (rate.intercept + rate.slope * n_min.ln() - rate.r_expected * (n / n_min).ln()).exp()
        };
        let _ = writeln!(
            s,
            r#"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            xa.map(n_min),
            ya.map(at(n_min)),
            xa.map(n_max),
            ya.map(at(n_max))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="gray">slope -{:.4}</text>"#,
            x1 + 12.0,
            y0 - 10.0,
            rate.r_expected
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(
    table: &ResultTable,
    rate: Option<&RateFit>,
    path: &Path,
    opts: &SvgOptions,
) -> Result<()> {
    let text = render_svg(table, rate, opts)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
