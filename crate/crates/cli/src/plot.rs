//! Static SVG 1.1 figures for a simulated run.
//!
//! `scene.svg` shows the arm at the first, middle and last logged
//! configuration together with the obstacles, margins, goal and the
//! end-effector path. `curves.svg` plots the reduced constraint `h'` and the
//! solution error `e` (log scale) against time.

use std::fmt::Write as _;

use cbflcp_core::robot::{end_effector, forward_kinematics, JointState, Point};
use cbflcp_core::simulate::SimConfig;

use crate::trajectory::TrajectoryTable;

const ARM_COLORS: [&str; 3] = ["#1f77b4", "#ff7f0e", "#2ca02c"];

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
    height: f64,
    pad: f64,
}

impl Frame {
    fn px(&self, p: Point) -> (f64, f64) {
        (
            self.pad + (p[0] - self.x0) * self.scale,
            self.height - self.pad - (p[1] - self.y0) * self.scale,
        )
    }
}

fn fmt_points(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    let pts: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let rad = if i % 2 == 0 { r } else { 0.45 * r };
            let a = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 5.0;
            (cx + rad * a.cos(), cy + rad * a.sin())
        })
        .collect();
    fmt_points(&pts)
}

pub fn scene_svg(config: &SimConfig, table: &TrajectoryTable) -> String {
    let (w, h, pad) = (640.0, 640.0, 40.0);
    let base = config.model.base_position();
    let reach = config.model.reach();
    let margins = config.margins();
    let dof = config.model.dof();

    let mut lo = [base[0] - reach, base[1] - reach];
    let mut hi = [base[0] + reach, base[1] + reach];
    for o in &config.obstacles {
        lo = [
            lo[0].min(o.center[0] - o.radius),
            lo[1].min(o.center[1] - o.radius),
        ];
        hi = [
            hi[0].max(o.center[0] + o.radius),
            hi[1].max(o.center[1] + o.radius),
        ];
    }
    lo = [lo[0].min(config.goal[0]), lo[1].min(config.goal[1])];
    hi = [hi[0].max(config.goal[0]), hi[1].max(config.goal[1])];
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let frame = Frame {
        x0: lo[0],
        y0: lo[1],
        scale: (w - 2.0 * pad) / span,
        height: h,
        pad,
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect width="100%" height="100%" fill="white"/>"#
    );
    let (bx, by) = frame.px(base);
    let _ = writeln!(
        s,
        r##"<circle cx="{bx:.2}" cy="{by:.2}" r="{:.2}" fill="none" stroke="#ddd" stroke-dasharray="2,4"/>"##,
        reach * frame.scale
    );
    for (i, o) in config.obstacles.iter().enumerate() {
        let (cx, cy) = frame.px(o.center);
        let delta = margins[i * dof..(i + 1) * dof]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#999" stroke-dasharray="4,3"/>"##,
            (o.radius + delta) * frame.scale
        );
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#bbb" stroke="#666"/>"##,
            o.radius * frame.scale
        );
    }

    let path: Vec<(f64, f64)> = table
        .q
        .iter()
        .filter_map(|q| JointState::new(q.clone()).ok())
        .filter_map(|q| end_effector(&config.model, &q).ok())
        .map(|p| frame.px(p))
        .collect();
    if path.len() > 1 {
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
            fmt_points(&path)
        );
    }

    let n = table.q.len();
    let snapshots: Vec<usize> = if n == 0 {
        vec![]
    } else {
        vec![0, n / 2, n - 1]
    };
    let labels = ["start", "middle", "end"];
    for (slot, &idx) in snapshots.iter().enumerate() {
        let Ok(q) = JointState::new(table.q[idx].clone()) else {
            continue;
        };
        let Ok(joints) = forward_kinematics(&config.model, &q) else {
            continue;
        };
        let pts: Vec<(f64, f64)> = joints.iter().map(|p| frame.px(*p)).collect();
        let color = ARM_COLORS[slot];
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="4" stroke-linecap="round" opacity="0.85"/>"#,
            fmt_points(&pts)
        );
        for (x, y) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="13" fill="{color}">{} (t = {:.3} s)</text>"#,
            pad,
            22.0 + 16.0 * slot as f64,
            labels[slot],
            table.t[idx]
        );
    }
    let (gx, gy) = frame.px(config.goal);
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#ffd700" stroke="#8a6d00"/>"##,
        star(gx, gy, 9.0)
    );
    s.push_str("</svg>\n");
    s
}

struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

fn nice_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return None;
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

fn panel_svg(
    s: &mut String,
    p: &Panel,
    title: &str,
    t: &[f64],
    y: &[f64],
    log_scale: bool,
    zero_line: bool,
) {
    let yv: Vec<f64> = if log_scale {
        y.iter()
            .map(|v| if *v > 0.0 { v.log10() } else { f64::NAN })
            .collect()
    } else {
        y.to_vec()
    };
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        p.left, p.top, p.width, p.height
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14">{title}</text>"#,
        p.left,
        p.top - 8.0
    );
    let tr = nice_range(t.iter().copied());
    let mut yr = nice_range(yv.iter().copied());
    if zero_line {
        yr = yr.map(|(lo, hi)| (lo.min(0.0 - 0.05 * (hi - lo)), hi));
    }
    let (Some((t0, t1)), Some((y0, y1))) = (tr, yr) else {
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" font-family="sans-serif" font-size="13" fill="#777">no data</text>"##,
            p.left + p.width / 2.0 - 25.0,
            p.top + p.height / 2.0
        );
        return;
    };
    let sx = |v: f64| p.left + (v - t0) / (t1 - t0) * p.width;
    let sy = |v: f64| p.top + p.height - (v - y0) / (y1 - y0) * p.height;

    for i in 0..=4 {
        let tv = t0 + (t1 - t0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{tv:.3}</text>"#,
            sx(tv),
            p.top + p.height + 14.0
        );
        let yv_tick = y0 + (y1 - y0) * i as f64 / 4.0;
        let label = if log_scale {
            format!("1e{yv_tick:.1}")
        } else {
            format!("{yv_tick:.2e}")
        };
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="#eee"/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"##,
            p.left,
            sy(yv_tick),
            p.left + p.width,
            sy(yv_tick),
            p.left - 4.0,
            sy(yv_tick) + 4.0
        );
    }
    if zero_line {
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="#d62728" stroke-dasharray="5,3"/>"##,
            p.left,
            sy(0.0),
            p.left + p.width,
            sy(0.0)
        );
    }
    // break the curve at missing samples
    let mut runs: Vec<Vec<(f64, f64)>> = vec![vec![]];
    for (tv, v) in t.iter().zip(&yv) {
        if v.is_finite() && tv.is_finite() {
            runs.last_mut().expect("non-empty").push((sx(*tv), sy(*v)));
        } else if !runs.last().expect("non-empty").is_empty() {
            runs.push(vec![]);
        }
    }
    for run in runs.iter().filter(|r| !r.is_empty()) {
        if run.len() == 1 {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f77b4"/>"##,
                run[0].0, run[0].1
            );
        } else {
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.2"/>"##,
                fmt_points(run)
            );
        }
    }
}

pub fn curves_svg(table: &TrajectoryTable) -> String {
    let (w, h) = (800.0, 600.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect width="100%" height="100%" fill="white"/>"#
    );
    let top = Panel {
        left: 90.0,
        top: 40.0,
        width: 680.0,
        height: 210.0,
    };
    let bottom = Panel {
        left: 90.0,
        top: 330.0,
        width: 680.0,
        height: 210.0,
    };
    panel_svg(
        &mut s,
        &top,
        "reduced constraint h' (m)",
        &table.t,
        &table.hprime,
        false,
        true,
    );
    panel_svg(
        &mut s,
        &bottom,
        "solution error e = |u_LC - u_CBF| (log scale)",
        &table.t,
        &table.e,
        true,
        false,
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">time (s)</text>"#,
        bottom.left + bottom.width / 2.0,
        bottom.top + bottom.height + 34.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: usize) -> TrajectoryTable {
        TrajectoryTable {
            t: (0..n).map(|k| k as f64 * 0.005).collect(),
            q: (0..n).map(|k| vec![0.1 * k as f64, 0.2, 0.3]).collect(),
            hprime: (0..n).map(|k| 0.01 + k as f64 * 1e-3).collect(),
            e: (0..n)
                .map(|k| if k == 0 { 0.0 } else { 1e-14 * k as f64 })
                .collect(),
        }
    }

    #[test]
    fn curves_have_both_panels() {
        let svg = curves_svg(&table(10));
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn single_sample_is_still_valid() {
        let svg = curves_svg(&table(1));
        assert!(svg.contains("<circle") || svg.contains("no data"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn no_error_samples_reports_no_data() {
        let mut t = table(3);
        t.e = vec![f64::NAN; 3];
        assert!(curves_svg(&t).contains("no data"));
    }
}
