//! Minimal static SVG charts.
//!
//! Output depends only on the data, so identical runs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// A chart with linear x and linear or log10 y axes.
pub struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    log_y: bool,
    body: String,
    legend: Vec<(String, String, bool)>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - d, hi + d);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Chart {
    pub fn new(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: padded(x_range.0, x_range.1),
            y_range: padded(y_range.0, y_range.1),
            log_y: false,
            body: String::new(),
            legend: Vec::new(),
        }
    }

    /// Logarithmic y axis over `[lo, hi]` (both > 0).
    pub fn log_y(mut self, lo: f64, hi: f64) -> Self {
        let lo = lo.max(1e-300).log10().floor();
        let hi = hi.max(1e-300).log10().ceil().max(lo + 1.0);
        self.log_y = true;
        self.y_range = (lo, hi);
        self
    }

    fn sx(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let y = if self.log_y { y.max(1e-300).log10() } else { y };
        let (a, b) = self.y_range;
        let y = y.clamp(a, b);
        HEIGHT - BOTTOM - (y - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn line(&mut self, xs: &[f64], ys: &[f64], color: &str, dashed: bool, label: Option<&str>) {
        let mut pts = String::new();
        for (x, y) in xs.iter().zip(ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", self.sx(*x), self.sy(*y));
            }
        }
        let dash = if dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            pts.trim_end()
        );
        if let Some(l) = label {
            self.legend.push((l.into(), color.into(), dashed));
        }
    }

    pub fn markers(&mut self, xs: &[f64], ys: &[f64], color: &str) {
        for (x, y) in xs.iter().zip(ys) {
            if x.is_finite() && y.is_finite() {
                let _ = writeln!(
                    self.body,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                    self.sx(*x),
                    self.sy(*y)
                );
            }
        }
    }

    pub fn hline(&mut self, y: f64, color: &str, label: Option<&str>) {
        let (a, b) = self.x_range;
        self.line(&[a, b], &[y, y], color, true, label);
    }

    /// Vertical bars centred on `xs`, one colour per bar.
    pub fn bars(&mut self, xs: &[f64], ys: &[f64], colors: &[&str], width: f64) {
        let base = if self.log_y {
            10f64.powf(self.y_range.0)
        } else {
            0.0
        };
        for ((x, y), c) in xs.iter().zip(ys).zip(colors.iter().cycle()) {
            let x0 = self.sx(x - width / 2.0);
            let x1 = self.sx(x + width / 2.0);
            let y0 = self.sy(base);
            let y1 = self.sy(*y);
            let _ = writeln!(
                self.body,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{c}\"/>",
                x0,
                y1.min(y0),
                (x1 - x0).max(0.5),
                (y0 - y1).abs()
            );
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
        );
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            s,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
            x1 - x0,
            y0 - y1
        );
        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let px = self.sx(xv);
            let _ = writeln!(
                s,
                "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#444\"/><text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                y0 + 5.0,
                y0 + 18.0,
                fmt_tick(xv)
            );
        }
        let ticks: Vec<f64> = if self.log_y {
            let (a, b) = self.y_range;
            let step = ((b - a) / 6.0).ceil().max(1.0);
            let mut t = Vec::new();
            let mut e = a;
            while e <= b + 1e-9 {
                t.push(10f64.powf(e));
                e += step;
            }
            t
        } else {
            (0..=5)
                .map(|i| self.y_range.0 + i as f64 / 5.0 * (self.y_range.1 - self.y_range.0))
                .collect()
        };
        for yv in ticks {
            let py = self.sy(yv);
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"#444\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                fmt_tick(yv)
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        s.push_str(&self.body);
        for (i, (label, color, dashed)) in self.legend.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * i as f64;
            let dash = if *dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/><text x=\"{}\" y=\"{}\">{}</text>",
                x1 - 150.0,
                x1 - 125.0,
                x1 - 120.0,
                y + 4.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let mut c = Chart::new("t & λ", "x", "y", (0.0, 10.0), (0.0, 1.0));
        c.line(
            &[0.0, 5.0, 10.0],
            &[0.0, 1.0, 0.5],
            PALETTE[0],
            false,
            Some("a"),
        );
        c.bars(&[1.0, 2.0], &[0.2, 0.4], &[PALETTE[1]], 0.8);
        c.hline(0.7, PALETTE[2], None);
        let svg = c.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t &amp; λ"));
        assert_eq!(svg, c.render());
    }

    #[test]
    fn log_axis_clamps_nonpositive_values() {
        let mut c = Chart::new("", "", "", (0.0, 1.0), (0.0, 1.0)).log_y(0.1, 1000.0);
        c.line(&[0.0, 1.0], &[0.0, 100.0], PALETTE[0], false, None);
        assert!(!c.render().contains("NaN"));
    }
}
