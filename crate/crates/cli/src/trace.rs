//! CSV trace export.
//!
//! One row per recorded step. Floats are printed with 15 significant digits
//! (scientific notation), so identical runs serialize to identical bytes.
//! A `#`-prefixed footer summarizes the run's events.

use std::fmt::Write;

use fovrelay::simulator::SimTrace;

/// Column header for a trace with `n` agents: `t, pr_x, pr_y`, then per
/// agent `a{i}_x, a{i}_y, a{i}_margin, a{i}_in_fov`, then the command block
/// `ur_x, ur_y, chi_n, d_r, eta, a_r` — `9 + 4n` columns.
pub fn header(n: usize) -> String {
    let mut h = String::from("t,pr_x,pr_y");
    for i in 0..n {
        write!(h, ",a{i}_x,a{i}_y,a{i}_margin,a{i}_in_fov").unwrap();
    }
    h.push_str(",ur_x,ur_y,chi_n,d_r,eta,a_r");
    h
}

fn num(x: f64) -> String {
    format!("{x:.14e}")
}

/// Render the full trace file: header, data rows, event footer.
pub fn write_trace(trace: &SimTrace) -> String {
    let n = trace.records.first().map_or(0, |r| r.agents.len());
    let mut out = String::with_capacity(trace.records.len() * (9 + 4 * n) * 22);
    out.push_str(&header(n));
    out.push('\n');
    for r in &trace.records {
        let mut row = String::with_capacity((9 + 4 * n) * 22);
        row.push_str(&num(r.t));
        row.push(',');
        row.push_str(&num(r.p_r.x));
        row.push(',');
        row.push_str(&num(r.p_r.y));
        for i in 0..n {
            write!(
                row,
                ",{},{},{},{}",
                num(r.agents[i].x),
                num(r.agents[i].y),
                num(r.margins[i]),
                u8::from(r.in_fov[i]),
            )
            .unwrap();
        }
        write!(
            row,
            ",{},{},{},{},{},{}",
            num(r.u_r.x),
            num(r.u_r.y),
            r.chi_n,
            num(r.d_r),
            num(r.eta),
            num(r.a_r),
        )
        .unwrap();
        out.push_str(&row);
        out.push('\n');
    }

    let ev = &trace.events;
    writeln!(
        out,
        "# events: chi_switches={} fov_violations={}",
        ev.chi_switches.len(),
        ev.fov_violations.len()
    )
    .unwrap();
    if !ev.chi_switches.is_empty() {
        let times: Vec<String> = ev.chi_switches.iter().map(|t| num(*t)).collect();
        writeln!(out, "# chi_switch_times_s: {}", times.join(" ")).unwrap();
    }
    for v in &ev.fov_violations {
        writeln!(out, "# fov_violation: t={} agent={}", num(v.t), v.agent).unwrap();
    }
    writeln!(out, "# min_distance_m: {}", num(ev.min_distance)).unwrap();
    writeln!(out, "# min_margin_rad: {}", num(ev.min_margin)).unwrap();
    out
}
