//! Standalone SVG 1.1 rendering of arrow-plot grids. Output bytes are a
//! pure function of the input: fixed float formatting, no timestamps.

use crate::projection::ArrowPlot;

const PANEL_SIZE: f64 = 240.0;
const PANEL_PAD: f64 = 16.0;
const TITLE_BAND: f64 = 20.0;

fn fmt(x: f64) -> String {
    // fixed-width decimal keeps the byte stream deterministic
    format!("{x:.4}")
}

/// Render one subplot per plot, laid out left-to-right in rows of
/// `grid_columns`.
pub fn render_svg(plots: &[ArrowPlot], grid_columns: usize) -> Vec<u8> {
    let cols = grid_columns.max(1).min(plots.len().max(1));
    let rows = plots.len().div_ceil(cols);
    let cell_w = PANEL_SIZE + 2.0 * PANEL_PAD;
    let cell_h = PANEL_SIZE + TITLE_BAND + 2.0 * PANEL_PAD;
    let width = cols as f64 * cell_w;
    let height = rows as f64 * cell_h;

    let mut out = String::new();
    out.push_str(r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    out.push('\n');
    out.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    ));
    out.push('\n');
    out.push_str(concat!(
        r#"<defs><marker id="arrowhead" markerWidth="8" markerHeight="6" refX="7" refY="3" orient="auto">"#,
        r##"<polygon points="0 0, 8 3, 0 6" fill="#1f4e79"/></marker></defs>"##,
    ));
    out.push('\n');

    for (idx, plot) in plots.iter().enumerate() {
        let col = idx % cols;
        let row = idx / cols;
        let ox = col as f64 * cell_w + PANEL_PAD;
        let oy = row as f64 * cell_h + PANEL_PAD;
        out.push_str(&format!(
            r#"<g class="panel" transform="translate({},{})">"#,
            fmt(ox),
            fmt(oy)
        ));
        out.push('\n');
        out.push_str(&format!(
            r#"<text x="{}" y="12" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt(PANEL_SIZE / 2.0),
            escape(&plot.title)
        ));
        out.push('\n');
        out.push_str(&format!(
            r##"<rect x="0" y="{}" width="{}" height="{}" fill="none" stroke="#888" stroke-width="1"/>"##,
            fmt(TITLE_BAND),
            fmt(PANEL_SIZE),
            fmt(PANEL_SIZE)
        ));
        out.push('\n');

        let vp = plot.viewport;
        let sx = PANEL_SIZE / (vp.max_x - vp.min_x);
        let sy = PANEL_SIZE / (vp.max_y - vp.min_y);
        let to_px = |p: (f64, f64)| -> (f64, f64) {
            (
                (p.0 - vp.min_x) * sx,
                // SVG y grows downward
                TITLE_BAND + PANEL_SIZE - (p.1 - vp.min_y) * sy,
            )
        };
        for arrow in &plot.arrows {
            let (x1, y1) = to_px(arrow.tail);
            let (x2, y2) = to_px(arrow.head);
            if arrow.zero_length {
                out.push_str(&format!(
                    r##"<circle cx="{}" cy="{}" r="2" fill="#c0392b"><title>{}</title></circle>"##,
                    fmt(x1),
                    fmt(y1),
                    escape(&arrow.label)
                ));
            } else {
                out.push_str(&format!(
                    r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#1f4e79" stroke-width="1" marker-end="url(#arrowhead)"><title>{}</title></line>"##,
                    fmt(x1),
                    fmt(y1),
                    fmt(x2),
                    fmt(y2),
                    escape(&arrow.label)
                ));
            }
            out.push('\n');
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
