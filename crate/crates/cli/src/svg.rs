//! Minimal SVG renderers: a color-mapped heatmap with optional curve
//! overlays, and a log-log multi-line plot. Convenience views over the CSV
//! data, never the source of truth.

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn color(t: f64) -> String {
    // Five-stop dark-blue -> teal -> green -> yellow ramp.
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [13.0, 8.0, 135.0]),
        (0.25, [84.0, 2.0, 163.0]),
        (0.5, [219.0, 92.0, 104.0]),
        (0.75, [249.0, 140.0, 10.0]),
        (1.0, [240.0, 249.0, 33.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let mut rgb = STOPS[0].1;
    for pair in STOPS.windows(2) {
        let (t0, c0) = pair[0];
        let (t1, c1) = pair[1];
        if t >= t0 && t <= t1 {
            let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            rgb = [
                c0[0] + f * (c1[0] - c0[0]),
                c0[1] + f * (c1[1] - c0[1]),
                c0[2] + f * (c1[2] - c0[2]),
            ];
            break;
        }
    }
    format!("rgb({},{},{})", rgb[0] as u8, rgb[1] as u8, rgb[2] as u8)
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{tx}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{title}</text>\n",
        w = PLOT_W,
        h = PLOT_H,
        tx = PLOT_W / 2.0,
    )
}

fn axis_labels(x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) -> String {
    let inner_w = PLOT_W - 2.0 * MARGIN;
    let inner_h = PLOT_H - 2.0 * MARGIN;
    format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{inner_w}\" height=\"{inner_h}\" fill=\"none\" \
         stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{by}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{cy}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">{y_label}</text>\n\
         <text x=\"{m}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"middle\">{x0:.3}</text>\n\
         <text x=\"{rx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"middle\">{x1:.3}</text>\n\
         <text x=\"{lx}\" y=\"{my1}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"end\">{y0:.3}</text>\n\
         <text x=\"{lx}\" y=\"{my0}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"end\">{y1:.3}</text>\n",
        m = MARGIN,
        cx = PLOT_W / 2.0,
        by = PLOT_H - 16.0,
        cy = PLOT_H / 2.0,
        ty = PLOT_H - MARGIN + 18.0,
        rx = PLOT_W - MARGIN,
        lx = MARGIN - 6.0,
        my0 = MARGIN + 4.0,
        my1 = PLOT_H - MARGIN,
        x0 = xr.0,
        x1 = xr.1,
        y0 = yr.0,
        y1 = yr.1,
    )
}

/// An overlay curve in data coordinates of the heatmap axes.
pub struct Overlay {
    pub points: Vec<(f64, f64)>,
    pub stroke: &'static str,
    pub dash: &'static str,
}

/// Heatmap of `values[yi][xi]` over the given axes, plus overlays. Cells
/// are placed by index; the axis extents are labeled with the data range.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    values: &[Vec<f64>],
    overlays: &[Overlay],
) -> String {
    let inner_w = PLOT_W - 2.0 * MARGIN;
    let inner_h = PLOT_H - 2.0 * MARGIN;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in values {
        for &v in row {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if !lo.is_finite() || hi <= lo {
        hi = lo + 1.0;
    }

    let mut body = header(title);
    let cell_w = inner_w / xs.len() as f64;
    let cell_h = inner_h / ys.len() as f64;
    for (yi, row) in values.iter().enumerate() {
        for (xi, &v) in row.iter().enumerate() {
            let t = if v.is_finite() { (v - lo) / (hi - lo) } else { 0.0 };
            // y axis points up: row 0 sits at the bottom.
            let x = MARGIN + xi as f64 * cell_w;
            let y = PLOT_H - MARGIN - (yi as f64 + 1.0) * cell_h;
            body.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
                 fill=\"{c}\"/>\n",
                w = cell_w + 0.5,
                h = cell_h + 0.5,
                c = color(t),
            ));
        }
    }

    // Overlays are mapped through the index positions of the nearest axis
    // values, matching the cell placement on unevenly spaced axes.
    let x_pos = |x: f64| {
        let idx = nearest_index(xs, x);
        MARGIN + (idx + 0.5) * cell_w
    };
    let y_pos = |y: f64| {
        let span = ys[ys.len() - 1] - ys[0];
        let frac = if ys.len() > 8 {
            (nearest_index(ys, y) + 0.5) / ys.len() as f64
        } else {
            ((y - ys[0]) / span).clamp(0.0, 1.0)
        };
        PLOT_H - MARGIN - frac * inner_h
    };
    for overlay in overlays {
        let pts: Vec<String> = overlay
            .points
            .iter()
            .filter(|(_, y)| y.is_finite() && *y >= ys[0] && *y <= ys[ys.len() - 1])
            .map(|&(x, y)| format!("{:.2},{:.2}", x_pos(x), y_pos(y)))
            .collect();
        if pts.len() > 1 {
            body.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" \
                 stroke-dasharray=\"{}\"/>\n",
                pts.join(" "),
                overlay.stroke,
                overlay.dash,
            ));
        }
    }

    body.push_str(&axis_labels(x_label, y_label, (xs[0], xs[xs.len() - 1]), (ys[0], ys[ys.len() - 1])));
    body.push_str("</svg>\n");
    body
}

fn nearest_index(axis: &[f64], value: f64) -> f64 {
    let mut best = 0usize;
    let mut dist = f64::INFINITY;
    for (i, &a) in axis.iter().enumerate() {
        let d = (a - value).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best as f64
}

pub struct Curve {
    pub label: &'static str,
    pub stroke: &'static str,
    pub dash: &'static str,
    pub points: Vec<(f64, f64)>,
}

/// Log-log multi-curve line plot.
pub fn log_log_lines(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let inner_w = PLOT_W - 2.0 * MARGIN;
    let inner_h = PLOT_H - 2.0 * MARGIN;
    let finite: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter().copied())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .collect();
    if finite.is_empty() {
        return header(title) + "</svg>\n";
    }
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if y1 <= y0 {
        y1 = y0 * 10.0;
    }
    let map = |x: f64, y: f64| {
        let fx = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
        let fy = (y.ln() - y0.ln()) / (y1.ln() - y0.ln());
        (MARGIN + fx * inner_w, PLOT_H - MARGIN - fy * inner_h)
    };

    let mut body = header(title);
    for (ci, curve) in curves.iter().enumerate() {
        let pts: Vec<String> = curve
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
            .map(|&(x, y)| {
                let (px, py) = map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        if pts.len() > 1 {
            body.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" \
                 stroke-dasharray=\"{}\"/>\n",
                pts.join(" "),
                curve.stroke,
                curve.dash,
            ));
        }
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{}\">{}</text>\n",
            MARGIN + 8.0,
            MARGIN + 16.0 + 16.0 * ci as f64,
            curve.stroke,
            curve.label,
        ));
    }
    body.push_str(&axis_labels(x_label, y_label, (x0, x1), (y0, y1)));
    body.push_str("</svg>\n");
    body
}
