//! Dependency-free SVG renderer for convergence studies: error against
//! mesh size on log-log axes, one polyline per order. Coordinates are
//! rounded to a tenth of a pixel so re-rendering the same data is
//! byte-identical.

use std::collections::BTreeSet;
use std::fmt::Write as _;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 510.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 380.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

// Errors of exactly zero still need a finite log position.
const FLOOR: f64 = 1e-300;

/// Renders `series` as a standalone SVG document. Each entry pairs an
/// order with its (mesh size, error) points; points are plotted at
/// (log10 n, log10 error).
pub(super) fn render(case: &str, series: &[(f64, Vec<(usize, f64)>)]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{case}: error \
         against mesh size, log-log</text>",
        (LEFT + RIGHT) / 2.0
    );

    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, cells)| {
            cells
                .iter()
                .map(|&(n, err)| ((n as f64).log10(), err.max(FLOOR).log10()))
        })
        .collect();
    if points.is_empty() {
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">no data</text>",
            (LEFT + RIGHT) / 2.0,
            (TOP + BOTTOM) / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let (x_min, x_max) = padded_span(points.iter().map(|p| p.0));
    let (y_min, y_max) = padded_span(points.iter().map(|p| p.1));
    let map_x = |u: f64| LEFT + (u - x_min) / (x_max - x_min) * (RIGHT - LEFT);
    let map_y = |v: f64| BOTTOM - (v - y_min) / (y_max - y_min) * (BOTTOM - TOP);

    let _ = writeln!(
        svg,
        "  <line x1=\"{LEFT:.1}\" y1=\"{BOTTOM:.1}\" x2=\"{RIGHT:.1}\" y2=\"{BOTTOM:.1}\" \
         stroke=\"#000000\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{LEFT:.1}\" y1=\"{TOP:.1}\" x2=\"{LEFT:.1}\" y2=\"{BOTTOM:.1}\" \
         stroke=\"#000000\"/>"
    );

    let mesh_sizes: BTreeSet<usize> = series
        .iter()
        .flat_map(|(_, cells)| cells.iter().map(|&(n, _)| n))
        .collect();
    for n in mesh_sizes {
        let x = map_x((n as f64).log10());
        let _ = writeln!(
            svg,
            "  <line x1=\"{x:.1}\" y1=\"{BOTTOM:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#000000\"/>",
            BOTTOM + 5.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{n}</text>",
            BOTTOM + 20.0
        );
    }
    for k in 0..=4 {
        let v = y_min + (y_max - y_min) * k as f64 / 4.0;
        let y = map_y(v);
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{LEFT:.1}\" y2=\"{y:.1}\" \
             stroke=\"#000000\"/>",
            LEFT - 5.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.1e}</text>",
            LEFT - 9.0,
            y + 4.0,
            10f64.powf(v)
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">n</text>",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">\
         error</text>",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    for (i, (alpha, cells)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if cells.len() > 1 {
            let path: Vec<String> = cells
                .iter()
                .map(|&(n, err)| {
                    format!(
                        "{:.1},{:.1}",
                        map_x((n as f64).log10()),
                        map_y(err.max(FLOOR).log10())
                    )
                })
                .collect();
            let _ = writeln!(
                svg,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>",
                path.join(" ")
            );
        }
        for &(n, err) in cells {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>",
                map_x((n as f64).log10()),
                map_y(err.max(FLOOR).log10())
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>",
            RIGHT + 16.0,
            RIGHT + 40.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\">alpha = {alpha:?}</text>",
            RIGHT + 46.0,
            ly + 4.0
        );
    }

    svg.push_str("</svg>\n");
    svg
}

fn padded_span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-9 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}
