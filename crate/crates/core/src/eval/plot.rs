use std::fmt::Write as _;

use crate::agent::{EpisodeTrace, Strategy};
use crate::geometry::{Rect, WorldPoint};
use crate::world::Scenario;

const SIZE: f64 = 800.0;

fn stage_color(s: Strategy) -> &'static str {
    match s {
        Strategy::Navigate => "#1f77b4",
        Strategy::Search => "#ff7f0e",
        Strategy::Localize => "#2ca02c",
    }
}

struct Frame {
    region: Rect,
    k: f64,
}

impl Frame {
    fn xy(&self, p: &WorldPoint) -> (f64, f64) {
        (
            (p.x - self.region.min_x) * self.k,
            (self.region.max_y - p.y) * self.k,
        )
    }
}

/// Top-down SVG: landmark contours, stage-colored trajectory, start and
/// target markers. Without the scenario, the view fits the trajectory.
pub fn plot_svg(trace: &EpisodeTrace, scenario: Option<&Scenario>) -> String {
    let traj = trace.trajectory();
    let region = match scenario {
        Some(s) => s.bounds.rect(),
        None => {
            let pts: Vec<WorldPoint> = traj
                .iter()
                .map(|p| p.position())
                .chain(std::iter::once(trace.target_position))
                .collect();
            Rect::envelope(pts.iter())
                .expect("at least the start")
                .expanded(50.0)
        }
    };
    let frame = Frame {
        k: SIZE / region.width().max(region.height()).max(1.0),
        region,
    };
    let w = region.width() * frame.k;
    let h = region.height() * frame.k;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    if let Some(sc) = scenario {
        for lm in &sc.landmarks {
            let pts: Vec<String> = lm
                .contour
                .vertices()
                .iter()
                .map(|p| {
                    let (x, y) = frame.xy(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="#dddddd" stroke="#555555" stroke-width="1"/>"##,
                pts.join(" ")
            );
            let (cx, cy) = frame.xy(&lm.contour.centroid());
            let _ = writeln!(
                s,
                r##"<text x="{cx:.2}" y="{cy:.2}" font-size="10" text-anchor="middle" fill="#333333">{}</text>"##,
                xml_escape(&lm.name)
            );
        }
    }

    for (i, step) in trace.steps.iter().enumerate() {
        let (x0, y0) = frame.xy(&traj[i].position());
        let (x1, y1) = frame.xy(&step.pose.position());
        if (x0, y0) == (x1, y1) {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="{}" stroke-width="2"/>"#,
            stage_color(step.stage)
        );
    }

    let (sx, sy) = frame.xy(&trace.start.position());
    let _ = writeln!(
        s,
        r##"<circle cx="{sx:.2}" cy="{sy:.2}" r="5" fill="#000000"><title>start</title></circle>"##
    );
    if !trace.steps.is_empty() {
        let (tx, ty) = frame.xy(&trace.target_position);
        let r = crate::eval::SUCCESS_THRESHOLD * frame.k;
        let _ = writeln!(
            s,
            r##"<circle cx="{tx:.2}" cy="{ty:.2}" r="{r:.2}" fill="none" stroke="#d62728" stroke-dasharray="4 2"/>"##
        );
        let _ = writeln!(
            s,
            r##"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="#d62728" stroke-width="2"><title>target</title></path>"##,
            tx - 5.0,
            ty - 5.0,
            tx + 5.0,
            ty + 5.0,
            tx - 5.0,
            ty + 5.0,
            tx + 5.0,
            ty - 5.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
