//! Static SVG charts drawn from the data series stored in a report. Output
//! depends only on the report, so identical reports give identical files.

use std::fmt::Write;

use super::{AuditReport, Block};
use crate::multivariate::SurvivalCurve;

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 240.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 34.0;
const BOTTOM: f64 = 36.0;
const REAL: &str = "#1f77b4";
const SYN: &str = "#ff7f0e";

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Panel {
    body: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Panel {
        let mut p = Panel {
            body: String::new(),
            x: if x.1 > x.0 { x } else { (x.0, x.0 + 1.0) },
            y: if y.1 > y.0 { y } else { (y.0, y.0 + 1.0) },
        };
        let (x0, y0, x1, y1) = (LEFT, TOP, WIDTH - RIGHT, PANEL_H - BOTTOM);
        let _ = write!(
            p.body,
            r##"<text x="{LEFT}" y="20" font-size="14" font-family="sans-serif">{}</text><rect x="{x0}" y="{y0}" width="{:.2}" height="{:.2}" fill="none" stroke="#999"/>"##,
            esc(title),
            x1 - x0,
            y1 - y0
        );
        for (v, py) in [(p.y.0, y1), (p.y.1, y0)] {
            let _ = write!(
                p.body,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="end">{}</text>"#,
                LEFT - 4.0,
                py + 3.0,
                super::fmt_value(v)
            );
        }
        for (v, px) in [(p.x.0, x0), (p.x.1, x1)] {
            let _ = write!(
                p.body,
                r#"<text x="{px:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="middle">{}</text>"#,
                y1 + 14.0,
                super::fmt_value(v)
            );
        }
        p
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - RIGHT - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        let h = PANEL_H - BOTTOM - TOP;
        PANEL_H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * h
    }

    fn line(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed {
            r#" stroke-dasharray="5,3""#
        } else {
            ""
        };
        let _ = write!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    /// Side-by-side bars of two series over the same categories.
    fn paired_bars(&mut self, a: &[f64], b: &[f64]) {
        let n = a.len().max(1) as f64;
        let slot = (WIDTH - RIGHT - LEFT) / n;
        for (i, (va, vb)) in a.iter().zip(b).enumerate() {
            for (k, (v, color)) in [(va, REAL), (vb, SYN)].into_iter().enumerate() {
                let x = LEFT + slot * i as f64 + slot * (0.1 + 0.4 * k as f64);
                let top = self.py(*v);
                let _ = write!(
                    self.body,
                    r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                    slot * 0.4,
                    (self.py(self.y.0) - top).max(0.0)
                );
            }
        }
    }

    fn legend(&mut self, items: &[(&str, &str)]) {
        for (i, (label, color)) in items.iter().enumerate() {
            let x = WIDTH - RIGHT - 150.0;
            let y = 14.0 + 12.0 * i as f64;
            let _ = write!(
                self.body,
                r#"<rect x="{x:.2}" y="{:.2}" width="10" height="8" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{}</text>"#,
                y - 7.0,
                x + 14.0,
                y,
                esc(label)
            );
        }
    }
}

fn shares(v: &[u64]) -> Vec<f64> {
    let t: u64 = v.iter().sum();
    v.iter()
        .map(|&c| if t == 0 { 0.0 } else { c as f64 / t as f64 })
        .collect()
}

fn steps(c: &SurvivalCurve) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 1.0)];
    let mut last = 1.0;
    for (t, s) in c.times.iter().zip(&c.survival) {
        pts.push((*t, last));
        pts.push((*t, *s));
        last = *s;
    }
    pts
}

fn panels(report: &AuditReport) -> Vec<Panel> {
    let mut out = Vec::new();
    if let Some(f) = report.fidelity.ok() {
        if let Block::Ok { result } = &f.marginals {
            for m in result {
                let Some(h) = &m.histogram else { continue };
                let (a, b) = (shares(&h.real), shares(&h.synthetic));
                let top = a.iter().chain(&b).copied().fold(0.0, f64::max);
                let mut p = Panel::new(
                    &format!("{}: share per bin", m.column),
                    (0.0, a.len() as f64),
                    (0.0, top),
                );
                p.paired_bars(&a, &b);
                p.legend(&[("real", REAL), ("synthetic", SYN)]);
                out.push(p);
            }
        }
        if let Block::Ok { result } = &f.tstr {
            if let Some(run) = result.runs.first() {
                let mut p = Panel::new(
                    &format!("ROC, target {}", result.target),
                    (0.0, 1.0),
                    (0.0, 1.0),
                );
                p.line(&run.real_curve.points, REAL, false);
                p.line(&run.syn_curve.points, SYN, false);
                p.line(&[(0.0, 0.0), (1.0, 1.0)], "#bbb", true);
                p.legend(&[("trained on real", REAL), ("trained on synthetic", SYN)]);
                out.push(p);
            }
        }
        if let Block::Ok { result } = &f.survival {
            let t_max = result
                .real
                .curves
                .iter()
                .chain(&result.synthetic.curves)
                .flat_map(|g| g.curve.times.last())
                .copied()
                .fold(0.0, f64::max);
            let mut p = Panel::new(
                &format!("Kaplan-Meier, {}", result.time_column),
                (0.0, t_max),
                (0.0, 1.0),
            );
            for (side, color) in [(&result.real, REAL), (&result.synthetic, SYN)] {
                for (i, g) in side.curves.iter().enumerate() {
                    p.line(&steps(&g.curve), color, i % 2 == 1);
                }
            }
            p.legend(&[("real", REAL), ("synthetic", SYN)]);
            out.push(p);
        }
    }
    if let Some(pr) = report.privacy.ok() {
        if let Block::Ok { result } = &pr.membership {
            if let Some(c) = result.last() {
                let x = (
                    c.rows[0].threshold,
                    c.rows.last().map_or(1.0, |r| r.threshold),
                );
                let mut p = Panel::new(
                    &format!(
                        "membership inference, attacker fraction {}",
                        super::fmt_value(c.attacker_fraction)
                    ),
                    x,
                    (0.0, 1.0),
                );
                let prec: Vec<(f64, f64)> = c
                    .rows
                    .iter()
                    .filter_map(|r| r.precision.map(|v| (r.threshold, v)))
                    .collect();
                let rec: Vec<(f64, f64)> = c.rows.iter().map(|r| (r.threshold, r.recall)).collect();
                p.line(&prec, REAL, false);
                p.line(&rec, SYN, false);
                p.legend(&[("precision", REAL), ("recall", SYN)]);
                out.push(p);
            }
        }
        if let Block::Ok { result } = &pr.dcr {
            let to_u64 = |v: &[usize]| v.iter().map(|&c| c as u64).collect::<Vec<_>>();
            let a = shares(&to_u64(&result.syn_to_real.counts));
            let b = shares(&to_u64(&result.real_to_real.counts));
            let top = a.iter().chain(&b).copied().fold(0.0, f64::max);
            let edges = &result.syn_to_real.edges;
            let mut p = Panel::new(
                "distance to closest record",
                (edges[0], *edges.last().unwrap_or(&1.0)),
                (0.0, top),
            );
            p.paired_bars(&a, &b);
            p.legend(&[("real to synthetic", REAL), ("real to real", SYN)]);
            out.push(p);
        }
    }
    out
}

/// All charts of a report stacked in one SVG document.
pub fn render_svg(report: &AuditReport) -> String {
    let panels = panels(report);
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut s = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    s.push('\n');
    if panels.is_empty() {
        s.push_str(r#"<text x="20" y="40" font-size="14" font-family="sans-serif">no chartable data in report</text>"#);
        s.push('\n');
    }
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<g transform="translate(0,{:.0})">{}</g>"#,
            PANEL_H * i as f64,
            p.body
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{Metadata, REPORT_VERSION};

    #[test]
    fn empty_report_renders_placeholder() {
        let r = AuditReport {
            report_version: REPORT_VERSION.into(),
            metadata: Metadata {
                tool: "synthaudit".into(),
                tool_version: "0".into(),
                seed: 0,
                generated_at_unix: None,
                datasets: vec![],
            },
            fidelity: Block::Skipped { reason: "x".into() },
            privacy: Block::Skipped { reason: "x".into() },
            verdicts: vec![],
            warnings: vec![],
        };
        let svg = render_svg(&r);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("no chartable data"));
    }

    #[test]
    fn escapes_titles() {
        assert_eq!(esc("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
