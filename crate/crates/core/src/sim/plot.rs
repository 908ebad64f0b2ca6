//! Deterministic SVG rendering of a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::csv::num;
use super::TickRecord;
use crate::geometry::Vec2;
use crate::mission::ActionKind;

const WIDTH: f64 = 800.0;
const PAD: f64 = 20.0;
const AGENT_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const ACTION_COLORS: [&str; 8] =
    ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#999999"];

struct Frame {
    min: Vec2,
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(points: &[(Vec2, f64)]) -> Self {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(p, r) in points {
            lo = Vec2::new(lo.x.min(p.x - r), lo.y.min(p.y - r));
            hi = Vec2::new(hi.x.max(p.x + r), hi.y.max(p.y + r));
        }
        let span = Vec2::new((hi.x - lo.x).max(1.0), (hi.y - lo.y).max(1.0));
        let scale = (WIDTH - 2.0 * PAD) / span.x.max(span.y);
        Self { min: lo, scale, height: span.y * scale + 2.0 * PAD }
    }

    // y grows upwards in the world, downwards in SVG
    fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale + PAD, self.height - PAD - (p.y - self.min.y) * self.scale)
    }

    fn x(&self, p: Vec2) -> String {
        num(self.px(p).0)
    }

    fn y(&self, p: Vec2) -> String {
        num(self.px(p).1)
    }

    fn len(&self, r: f64) -> String {
        num(r * self.scale)
    }
}

/// Renders trajectories, obstacles, chargers, final safety and communication
/// radii, and markers where the active action changed. Panics on an empty log.
pub fn render(records: &[TickRecord]) -> String {
    let first = &records.first().expect("cannot plot an empty log").world;
    let last = &records[records.len() - 1].world;
    let p = &last.params;
    let n = first.agents.len();
    let show_comms = n > 1;

    let mut extent: Vec<(Vec2, f64)> = Vec::new();
    for rec in records {
        extent.extend(rec.world.agents.iter().map(|a| (a.x, 0.0)));
    }
    extent.extend(last.obstacles.iter().map(|o| (o.center, o.radius)));
    extent.extend(last.chargers.iter().map(|c| (c.position, 0.5)));
    extent.extend(last.agents.iter().map(|a| (a.x, if show_comms { p.r_c } else { p.m_s })));
    let f = Frame::fit(&extent);

    let mut s = String::new();
    let w = num(WIDTH);
    let h = num(f.height);
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    for o in &last.obstacles {
        writeln!(
            s,
            r##"<circle class="obstacle" cx="{}" cy="{}" r="{}" fill="#555555"/>"##,
            f.x(o.center),
            f.y(o.center),
            f.len(o.radius)
        )
        .unwrap();
    }
    for c in &last.chargers {
        let (cx, cy) = f.px(c.position);
        writeln!(
            s,
            r##"<rect class="charger" x="{}" y="{}" width="10" height="10" fill="#ffcc00" stroke="black"/>"##,
            num(cx - 5.0),
            num(cy - 5.0),
        )
        .unwrap();
    }

    for i in 0..n {
        let color = AGENT_COLORS[i % AGENT_COLORS.len()];
        let pts: Vec<String> =
            records.iter().map(|r| format!("{},{}", f.x(r.world.agents[i].x), f.y(r.world.agents[i].x))).collect();
        if pts.windows(2).all(|w| w[0] == w[1]) {
            let x0 = first.agents[i].x;
            writeln!(s, r#"<circle class="agent" cx="{}" cy="{}" r="3" fill="{color}"/>"#, f.x(x0), f.y(x0)).unwrap();
        } else {
            writeln!(
                s,
                r#"<polyline class="trajectory" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
        let end = last.agents[i].x;
        writeln!(
            s,
            r#"<circle class="safety-margin" cx="{}" cy="{}" r="{}" fill="none" stroke="{color}" stroke-dasharray="2,2"/>"#,
            f.x(end),
            f.y(end),
            f.len(p.m_s)
        )
        .unwrap();
        if show_comms {
            writeln!(
                s,
                r#"<circle class="comm-range" cx="{}" cy="{}" r="{}" fill="none" stroke="{color}" stroke-opacity="0.3"/>"#,
                f.x(end),
                f.y(end),
                f.len(p.r_c)
            )
            .unwrap();
        }
    }

    // switch events, coloured by the action switched to
    let mut used: BTreeMap<ActionKind, &str> = BTreeMap::new();
    for pair in records.windows(2) {
        for (i, (before, after)) in pair[0].decisions.iter().zip(&pair[1].decisions).enumerate() {
            if before.action == after.action {
                continue;
            }
            let Some(kind) = after.action else { continue };
            let color = ACTION_COLORS[ActionKind::ALL.iter().position(|k| *k == kind).unwrap_or(0)];
            used.insert(kind, color);
            let x = pair[1].world.agents[i].x;
            writeln!(s, r#"<circle class="switch" cx="{}" cy="{}" r="2" fill="{color}"/>"#, f.x(x), f.y(x)).unwrap();
        }
    }
    for (row, (kind, color)) in used.iter().enumerate() {
        let y = PAD + 14.0 * row as f64;
        writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, num(PAD), num(y)).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">{kind}</text>"#,
            num(PAD + 8.0),
            num(y + 4.0)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
