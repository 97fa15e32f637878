use std::fmt::Write as _;

use crate::limits::{CurvePoint, SweepResult, Verdict};
use crate::seminorm::EnergyKind;

pub const SWEEP_HEADER: &str = "s,kind,energy,stderr,one_minus_s_energy,target,target_stderr,rel_gap";
pub const COUNTEREXAMPLE_HEADER: &str = "s,classical,classical_stderr,truncated,truncated_stderr,one_minus_s_classical,one_minus_s_truncated,target";

/// Nine significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.8e}")
    }
}

fn target_value(result: &SweepResult) -> f64 {
    result.target.finite().unwrap_or(f64::INFINITY)
}

/// Rows of `sweep.csv` followed by the limit footer.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    let target = target_value(result);
    for pt in &result.points {
        for e in &pt.estimates {
            let scaled = (1.0 - pt.s) * e.value;
            let rel_gap = if target.is_finite() && target != 0.0 {
                (scaled - target).abs() / target.abs()
            } else if target == 0.0 {
                scaled.abs()
            } else {
                f64::NAN
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                num(pt.s),
                e.kind,
                num(e.value),
                num(e.stderr),
                num(scaled),
                num(target),
                num(result.target.stderr),
                num(rel_gap)
            );
        }
    }
    for (i, lim) in result.limits.iter().enumerate() {
        if i == 0 {
            let _ = writeln!(out, "# limit,{},{}", num(lim.value), num(lim.uncertainty));
        } else {
            let _ = writeln!(out, "# limit[{}],{},{}", lim.kind, num(lim.value), num(lim.uncertainty));
        }
    }
    out
}

pub fn aborted_trailer(s: Option<f64>, message: &str) -> String {
    let message = message.replace('\n', " ");
    match s {
        Some(s) => format!("# ABORTED,{},{message}\n", num(s)),
        None => format!("# ABORTED,,{message}\n"),
    }
}

/// Side-by-side classical and truncated curves with the divergence verdict.
pub fn counterexample_csv(result: &SweepResult, verdict: Option<&Verdict>) -> String {
    let mut out = String::new();
    out.push_str(COUNTEREXAMPLE_HEADER);
    out.push('\n');
    let target = target_value(result);
    for (i, pt) in result.points.iter().enumerate() {
        let (Some(c), Some(t)) = (result.estimate(i, EnergyKind::Classical), result.estimate(i, EnergyKind::Truncated))
        else {
            continue;
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(pt.s),
            num(c.value),
            num(c.stderr),
            num(t.value),
            num(t.stderr),
            num((1.0 - pt.s) * c.value),
            num((1.0 - pt.s) * t.value),
            num(target)
        );
    }
    if let Some(v) = verdict {
        let _ = writeln!(out, "# verdict,{},{},{},{}", v.status, num(v.lhs), num(v.rhs), num(v.tolerance));
    }
    out
}

pub fn verdicts_json(verdicts: &[Verdict]) -> String {
    let mut s = serde_json::to_string_pretty(verdicts).expect("verdicts serialize");
    s.push('\n');
    s
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Static line plot of named `(1 - s) E` curves against `s`, with a dashed
/// horizontal line at `target` when it is finite.
pub fn curves_svg(title: &str, series: &[(String, Vec<CurvePoint>)], target: Option<f64>) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (80.0, 20.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|(_, c)| c.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in pts {
        if !c.value.is_finite() {
            continue;
        }
        x0 = x0.min(c.s);
        x1 = x1.max(c.s);
        y0 = y0.min(c.value - c.stderr);
        y1 = y1.max(c.value + c.stderr);
    }
    if let Some(t) = target.filter(|t| t.is_finite()) {
        y0 = y0.min(t);
        y1 = y1.max(t);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x0 -= 0.01;
        x1 += 0.01;
    }
    let pad = ((y1 - y0) * 0.08).max(1e-9 * y1.abs().max(1.0));
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        h - bottom,
        w - right
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            px(fx),
            h - bottom + 18.0,
            fx
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.4e}</text>"#,
            left - 6.0,
            py(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">s</text>"#, (left + w - right) / 2.0, h - 12.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">(1-s) E</text>"#,
        h / 2.0,
        h / 2.0
    );
    if let Some(t) = target.filter(|t| t.is_finite()) {
        let _ = writeln!(
            out,
            r#"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            w - right,
            y = py(t)
        );
    }
    let mut legend_y = top + 6.0;
    for (k, (name, curve)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let finite: Vec<&CurvePoint> = curve.iter().filter(|c| c.value.is_finite()).collect();
        let path: Vec<String> = finite.iter().map(|c| format!("{:.2},{:.2}", px(c.s), py(c.value))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for c in &finite {
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{colour}"/><circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#,
                py(c.value - c.stderr),
                py(c.value + c.stderr),
                py(c.value),
                x = px(c.s)
            );
        }
        let lx = w - right - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            legend_y + 4.0,
            escape(name)
        );
        legend_y += 16.0;
    }
    if target.is_some_and(f64::is_finite) {
        let lx = w - right - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="gray" stroke-dasharray="6 4"/><text x="{}" y="{}">target</text>"#,
            lx + 20.0,
            lx + 26.0,
            legend_y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(std::f64::consts::FRAC_PI_2), "1.57079633e0");
        assert_eq!(num(0.0), "0.00000000e0");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let c = vec![
            CurvePoint { s: 0.9, value: 1.0, stderr: 0.1 },
            CurvePoint { s: 0.99, value: 1.2, stderr: 0.1 },
        ];
        let svg = curves_svg("a < b", &[("truncated".into(), c)], Some(1.1));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("stroke-dasharray"));
    }
}
