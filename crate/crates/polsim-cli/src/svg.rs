//! Flat SVG renderings of sphere-valued data.
//!
//! Sphere points are shown in equirectangular projection: azimuth
//! atan2(r_D, r_H) across the width (H at the left edge, then D, V, A),
//! polar angle from the circular axis down the height (R at the top, L at
//! the bottom). Pure string assembly with fixed-precision coordinates, so
//! identical inputs render byte-identical files.

use polsim::{PoincareVector, SphereMap, UncertaintyEllipsoid};
use std::f64::consts::{PI, TAU};
use std::fmt::Write;

const MAP_WIDTH: f64 = 720.0;
const MAP_HEIGHT: f64 = 360.0;
const MARGIN: f64 = 46.0;

/// Cardinal labels and plot colors, in the order the mapper appends them.
const CARDINALS: [(&str, &str); 6] = [
    ("H", "#2e8b57"),
    ("V", "#e6b800"),
    ("D", "#7b2fbe"),
    ("A", "#1e6bd6"),
    ("R", "#d62728"),
    ("L", "#ff9ecf"),
];

/// Equirectangular pixel position of a Poincare vector; the unpolarized
/// center has no direction and is parked mid-plot.
fn project(r: &PoincareVector) -> (f64, f64) {
    let norm = r.norm();
    if norm < 1e-9 {
        return (MARGIN + MAP_WIDTH / 2.0, MARGIN + MAP_HEIGHT / 2.0);
    }
    let polar = (r.r_r / norm).clamp(-1.0, 1.0).acos();
    let azimuth = r.r_d.atan2(r.r_h).rem_euclid(TAU);
    (
        MARGIN + azimuth / TAU * MAP_WIDTH,
        MARGIN + polar / PI * MAP_HEIGHT,
    )
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" \
         font-family=\"sans-serif\" font-size=\"11\">"
    )
    .expect("string write");
    writeln!(out, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>")
        .expect("string write");
}

fn map_grid(out: &mut String) {
    writeln!(
        out,
        "<rect x=\"{MARGIN:.0}\" y=\"{MARGIN:.0}\" width=\"{MAP_WIDTH:.0}\" \
         height=\"{MAP_HEIGHT:.0}\" fill=\"none\" stroke=\"#444444\"/>"
    )
    .expect("string write");
    // Meridians through the linear cardinals, and the equator.
    for quarter in 1..4 {
        let x = MARGIN + MAP_WIDTH * quarter as f64 / 4.0;
        writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{MARGIN:.0}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#dddddd\"/>",
            MARGIN + MAP_HEIGHT
        )
        .expect("string write");
    }
    let equator = MARGIN + MAP_HEIGHT / 2.0;
    writeln!(
        out,
        "<line x1=\"{MARGIN:.0}\" y1=\"{equator:.2}\" x2=\"{:.2}\" y2=\"{equator:.2}\" \
         stroke=\"#dddddd\"/>",
        MARGIN + MAP_WIDTH
    )
    .expect("string write");
    for (label, quarter) in [("H", 0.0), ("D", 0.25), ("V", 0.5), ("A", 0.75), ("H", 1.0)] {
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#444444\">{label}</text>",
            MARGIN + MAP_WIDTH * quarter,
            MARGIN + MAP_HEIGHT + 18.0
        )
        .expect("string write");
    }
    for (label, frac) in [("R", 0.0), ("L", 1.0)] {
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#444444\">{label}</text>",
            MARGIN - 8.0,
            MARGIN + MAP_HEIGHT * frac + 4.0
        )
        .expect("string write");
    }
    writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#444444\">azimuth \
         atan2(r_D, r_H)</text>",
        MARGIN + MAP_WIDTH / 2.0,
        MARGIN + MAP_HEIGHT + 34.0
    )
    .expect("string write");
}

/// Draws a mapped sphere: gray input-to-output displacement segments,
/// output dots with opacity tracking the survival weight, and the six
/// cardinal outputs highlighted and labeled.
pub fn sphere_map_svg(map: &SphereMap) -> String {
    let mut out = String::with_capacity(128 * (map.samples.len() + 16));
    svg_open(&mut out, MAP_WIDTH + 2.0 * MARGIN, MAP_HEIGHT + 2.0 * MARGIN);
    map_grid(&mut out);
    let grid_count = map.samples.len().saturating_sub(CARDINALS.len());
    for sample in &map.samples[..grid_count] {
        let (x1, y1) = project(&sample.input);
        let (x2, y2) = project(&sample.output);
        if (x2 - x1).hypot(y2 - y1) > 0.75 {
            writeln!(
                out,
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
                 stroke=\"#b0b8c4\" stroke-width=\"0.6\" stroke-opacity=\"0.5\"/>"
            )
            .expect("string write");
        }
        writeln!(
            out,
            "<circle cx=\"{x2:.2}\" cy=\"{y2:.2}\" r=\"2.2\" fill=\"#3a6ea5\" \
             fill-opacity=\"{:.3}\"/>",
            sample.weight.clamp(0.15, 1.0)
        )
        .expect("string write");
    }
    for (sample, (label, color)) in map.samples[grid_count..].iter().zip(CARDINALS) {
        let (x1, y1) = project(&sample.input);
        let (x2, y2) = project(&sample.output);
        if (x2 - x1).hypot(y2 - y1) > 0.75 {
            writeln!(
                out,
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
                 stroke=\"{color}\" stroke-width=\"1.2\" stroke-opacity=\"0.7\"/>"
            )
            .expect("string write");
        }
        writeln!(
            out,
            "<circle cx=\"{x2:.2}\" cy=\"{y2:.2}\" r=\"4\" fill=\"{color}\">\
             <title>{label} out, weight {:.3}</title></circle>",
            sample.weight
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\">{label}</text>",
            x2 + 7.0,
            y2 + 4.0
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}

const CHART_WIDTH: f64 = 540.0;
const CHART_HEIGHT: f64 = 300.0;
const CHART_LEFT: f64 = 74.0;
const CHART_TOP: f64 = 34.0;
const CHART_BOTTOM_PAD: f64 = 56.0;
const CHART_RIGHT_PAD: f64 = 150.0;

const SERIES: [(&str, &str); 3] = [
    ("radial", "#d62728"),
    ("transverse 1", "#1f77b4"),
    ("transverse 2", "#2ca02c"),
];

/// Chart of ellipsoid semi-axes against mean radius: the thickness
/// profile of the reconstruction-uncertainty patches through the ball.
pub fn profile_chart_svg(profile: &[UncertaintyEllipsoid]) -> String {
    let ymax = profile
        .iter()
        .flat_map(|e| {
            [
                e.radial_semiaxis,
                e.transverse_semiaxes[0],
                e.transverse_semiaxes[1],
            ]
        })
        .fold(1e-12, f64::max)
        * 1.15;
    let x_of = |radius: f64| CHART_LEFT + radius.clamp(0.0, 1.0) * CHART_WIDTH;
    let y_of = |value: f64| CHART_TOP + (1.0 - (value / ymax).clamp(0.0, 1.0)) * CHART_HEIGHT;

    let mut out = String::with_capacity(4096);
    svg_open(
        &mut out,
        CHART_LEFT + CHART_WIDTH + CHART_RIGHT_PAD,
        CHART_TOP + CHART_HEIGHT + CHART_BOTTOM_PAD,
    );
    writeln!(
        out,
        "<rect x=\"{CHART_LEFT:.0}\" y=\"{CHART_TOP:.0}\" width=\"{CHART_WIDTH:.0}\" \
         height=\"{CHART_HEIGHT:.0}\" fill=\"none\" stroke=\"#444444\"/>"
    )
    .expect("string write");
    writeln!(
        out,
        "<text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" fill=\"#222222\">uncertainty \
         semi-axes (1.69 sigma) vs mean |r|</text>",
        CHART_LEFT + CHART_WIDTH / 2.0
    )
    .expect("string write");
    for tick in 0..=4 {
        let radius = tick as f64 / 4.0;
        let x = x_of(radius);
        writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444444\"/>",
            CHART_TOP + CHART_HEIGHT,
            CHART_TOP + CHART_HEIGHT + 5.0
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#444444\">{radius:.2}\
             </text>",
            CHART_TOP + CHART_HEIGHT + 20.0
        )
        .expect("string write");
    }
    for tick in 0..=4 {
        let value = ymax * tick as f64 / 4.0;
        let y = y_of(value);
        writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{CHART_LEFT:.0}\" y2=\"{y:.2}\" \
             stroke=\"#444444\"/>",
            CHART_LEFT - 5.0
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#444444\">{value:.4}</text>",
            CHART_LEFT - 9.0,
            y + 4.0
        )
        .expect("string write");
    }
    for (series_idx, (name, color)) in SERIES.iter().enumerate() {
        let value_of = |e: &UncertaintyEllipsoid| match series_idx {
            0 => e.radial_semiaxis,
            1 => e.transverse_semiaxes[0],
            _ => e.transverse_semiaxes[1],
        };
        let mut points = String::new();
        for e in profile {
            write!(
                points,
                "{:.2},{:.2} ",
                x_of(e.mean_r.norm()),
                y_of(value_of(e))
            )
            .expect("string write");
        }
        writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        )
        .expect("string write");
        for e in profile {
            writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                x_of(e.mean_r.norm()),
                y_of(value_of(e))
            )
            .expect("string write");
        }
        let legend_y = CHART_TOP + 16.0 + 20.0 * series_idx as f64;
        writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>",
            CHART_LEFT + CHART_WIDTH + 16.0,
            legend_y - 10.0
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\" fill=\"#222222\">{name}</text>",
            CHART_LEFT + CHART_WIDTH + 34.0
        )
        .expect("string write");
    }
    writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#444444\">mean |r|</text>",
        CHART_LEFT + CHART_WIDTH / 2.0,
        CHART_TOP + CHART_HEIGHT + 40.0
    )
    .expect("string write");
    out.push_str("</svg>\n");
    out
}
