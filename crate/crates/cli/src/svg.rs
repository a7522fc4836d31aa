//! Trajectory rendering: relay and agent paths plus the sensing cone drawn
//! at six evenly spaced snapshot instants (t = 0, T/5, ..., T).
//!
//! World coordinates are y-up; SVG is y-down, so points are mirrored at the
//! x axis before layout. Output is self-contained SVG 1.1.

use std::fmt::Write;

use fovrelay::geometry::Vec2;
use fovrelay::simulator::{Scenario, SimTrace};

const WEDGE_COUNT: usize = 6;
const TARGET_POINTS: usize = 2000;

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// World to screen: mirror y.
fn screen(p: Vec2) -> (f64, f64) {
    (p.x, -p.y)
}

struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Bounds {
    fn new() -> Self {
        Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }
    fn add(&mut self, (x, y): (f64, f64)) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }
}

fn polyline(points: &[(f64, f64)], stroke: &str, width: f64, class: &str) -> String {
    let mut pts = String::with_capacity(points.len() * 14);
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            pts.push(' ');
        }
        write!(pts, "{},{}", fmt(*x), fmt(*y)).unwrap();
    }
    format!(
        "<polyline class=\"{class}\" points=\"{pts}\" fill=\"none\" \
         stroke=\"{stroke}\" stroke-width=\"{width}\"/>\n"
    )
}

/// Render the run. `trace` must come from `scenario` (the cone geometry and
/// snapshot instants are taken from it).
pub fn render_svg(trace: &SimTrace, scenario: &Scenario) -> String {
    let records = &trace.records;
    let n = records.first().map_or(0, |r| r.agents.len());
    let stride = (records.len() / TARGET_POINTS).max(1);

    let sample = |f: &dyn Fn(usize) -> Vec2| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = records
            .iter()
            .enumerate()
            .filter(|(k, _)| k % stride == 0)
            .map(|(k, _)| screen(f(k)))
            .collect();
        // Always include the final state.
        pts.push(screen(f(records.len() - 1)));
        pts
    };

    let relay_path = sample(&|k| records[k].p_r);
    let agent_paths: Vec<Vec<(f64, f64)>> =
        (0..n).map(|i| sample(&|k| records[k].agents[i])).collect();

    // Wedge snapshots at k T/5.
    let last = records.len() - 1;
    let snapshot_idx: Vec<usize> = (0..WEDGE_COUNT)
        .map(|k| (k * last + (WEDGE_COUNT - 1) / 2) / (WEDGE_COUNT - 1))
        .collect();

    let mut bounds = Bounds::new();
    for p in relay_path.iter().chain(agent_paths.iter().flatten()) {
        bounds.add(*p);
    }
    let span = (bounds.max_x - bounds.min_x).max(bounds.max_y - bounds.min_y);
    let ray = (0.18 * span).max(1.0);
    let b1 = scenario.fov.border1().as_vec2();
    let b2 = scenario.fov.border2().as_vec2();
    for k in &snapshot_idx {
        let apex = records[*k].p_r;
        bounds.add(screen(apex + b1 * ray));
        bounds.add(screen(apex + b2 * ray));
        bounds.add(screen(apex + scenario.fov.bisector().as_vec2() * ray));
    }

    let pad = 0.05 * span.max(1.0);
    let (x0, y0) = (bounds.min_x - pad, bounds.min_y - pad);
    let w = bounds.max_x - bounds.min_x + 2.0 * pad;
    let h = bounds.max_y - bounds.min_y + 2.0 * pad;

    let mut out = String::with_capacity(64 * 1024);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         viewBox=\"{} {} {} {}\" width=\"800\" height=\"{}\">",
        fmt(x0),
        fmt(y0),
        fmt(w),
        fmt(h),
        fmt(800.0 * h / w),
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        fmt(x0),
        fmt(y0),
        fmt(w),
        fmt(h)
    )
    .unwrap();

    // Sensing wedges, oldest faintest.
    for (i, k) in snapshot_idx.iter().enumerate() {
        let apex = records[*k].p_r;
        let p1 = screen(apex + b1 * ray);
        let p2 = screen(apex + b2 * ray);
        let a = screen(apex);
        let opacity = 0.10 + 0.06 * i as f64;
        writeln!(
            out,
            "<g class=\"fov-wedge\" data-t=\"{}\">\
             <path d=\"M {} {} L {} {} A {} {} 0 0 0 {} {} Z\" \
             fill=\"#4a90d9\" fill-opacity=\"{}\" stroke=\"#2a6ab0\" \
             stroke-width=\"0.08\"/></g>",
            fmt(records[*k].t),
            fmt(a.0),
            fmt(a.1),
            fmt(p1.0),
            fmt(p1.1),
            fmt(ray),
            fmt(ray),
            fmt(p2.0),
            fmt(p2.1),
            fmt(opacity),
        )
        .unwrap();
    }

    let palette = [
        "#d05030", "#2f8f4e", "#8450c8", "#c8a020", "#c04080", "#508090",
    ];
    for (i, path) in agent_paths.iter().enumerate() {
        out.push_str(&polyline(
            path,
            palette[i % palette.len()],
            0.25,
            &format!("agent agent-{i}"),
        ));
        let (sx, sy) = path[0];
        writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"0.5\" fill=\"{}\"/>",
            fmt(sx),
            fmt(sy),
            palette[i % palette.len()]
        )
        .unwrap();
    }
    out.push_str(&polyline(&relay_path, "#1a1a1a", 0.35, "relay"));
    let (rx, ry) = relay_path[0];
    writeln!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"0.6\" fill=\"#1a1a1a\"/>",
        fmt(rx),
        fmt(ry)
    )
    .unwrap();

    out.push_str("</svg>\n");
    out
}
