//! Actual and predicted pull actions drawn over the cloth outline.

use std::fmt::Write as _;

use clothflat::datagen::{Action, ClothFrame, WrinkleType};
use clothflat::pipeline::Prediction;

/// Viewport pixels per meter of cloth.
pub const SCALE: f64 = 1000.0;
/// Blank border around the cloth, pixels.
pub const MARGIN: f64 = 60.0;

pub const ACTUAL_COLOR: &str = "green";
pub const PREDICTED_COLOR: &str = "blue";

/// Cloth-frame meters to viewport pixels (y axis flipped).
pub fn to_viewport(frame: &ClothFrame, x: f64, y: f64) -> (f64, f64) {
    (
        MARGIN + (x + frame.width / 2.0) * SCALE,
        MARGIN + (frame.height / 2.0 - y) * SCALE,
    )
}

/// Start and end of the arrow for `a`, in cloth meters.
pub fn arrow_ends(a: &Action) -> ((f64, f64), (f64, f64)) {
    let (s, c) = a.theta.sin_cos();
    ((a.x, a.y), (a.x + a.d * c, a.y + a.d * s))
}

fn arrow(out: &mut String, frame: &ClothFrame, a: &Action, color: &str, index: usize) {
    let ((x0, y0), (x1, y1)) = arrow_ends(a);
    let (px0, py0) = to_viewport(frame, x0, y0);
    let (px1, py1) = to_viewport(frame, x1, y1);
    let _ = writeln!(
        out,
        r#"  <line class="{color}" data-index="{index}" x1="{px0:.3}" y1="{py0:.3}" x2="{px1:.3}" y2="{py1:.3}" stroke="{color}" stroke-width="2" marker-end="url(#head-{color})"/>"#
    );
}

pub fn render(predictions: &[Prediction], frame: &ClothFrame) -> String {
    let w = frame.width * SCALE + 2.0 * MARGIN;
    let h = frame.height * SCALE + 2.0 * MARGIN;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<!-- Cloth frame {cw} m x {ch} m, origin at the cloth center, +x right, +y toward the pinned edge.\n     \
         Viewport mapping: px = {MARGIN} + {SCALE} * (x + {hw}), py = {MARGIN} + {SCALE} * ({hh} - y).\n     \
         Arrows start at (x, y) and end at (x + d cos(theta), y + d sin(theta)).\n     \
         Green: actual action. Blue: predicted action. Blue dot at the origin: flat cloth. -->",
        cw = frame.width,
        ch = frame.height,
        hw = frame.width / 2.0,
        hh = frame.height / 2.0,
    );
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let (rx, ry) = to_viewport(frame, -frame.width / 2.0, frame.height / 2.0);
    let _ = writeln!(
        out,
        r#"  <rect class="cloth" x="{rx}" y="{ry}" width="{}" height="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        frame.width * SCALE,
        frame.height * SCALE
    );
    let has_arrows = predictions.iter().any(|p| p.kind != WrinkleType::Flat);
    if has_arrows {
        out.push_str("  <defs>\n");
        for color in [ACTUAL_COLOR, PREDICTED_COLOR] {
            let _ = writeln!(
                out,
                r#"    <marker id="head-{color}" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{color}"/></marker>"#
            );
        }
        out.push_str("  </defs>\n");
    }
    for p in predictions {
        if p.kind == WrinkleType::Flat {
            let (cx, cy) = to_viewport(frame, 0.0, 0.0);
            let _ = writeln!(
                out,
                r#"  <circle class="flat" data-index="{}" cx="{cx:.3}" cy="{cy:.3}" r="5" fill="{PREDICTED_COLOR}"/>"#,
                p.index
            );
        } else {
            arrow(&mut out, frame, &p.actual, ACTUAL_COLOR, p.index);
            arrow(&mut out, frame, &p.predicted, PREDICTED_COLOR, p.index);
        }
    }
    out.push_str("</svg>\n");
    out
}
