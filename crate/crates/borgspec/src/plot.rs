//! SVG figures: eigenvalue clouds and level-set contours of the field.

use std::collections::HashMap;
use std::fmt::Write as _;

use borgspec_core::field::PseudoField;
use borgspec_core::Complex64;

/// A traced level curve in complex-plane coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub level: f64,
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

const BOTTOM: usize = 0;
const RIGHT: usize = 1;
const TOP: usize = 2;
const LEFT: usize = 3;

/// Marching squares at `level`; nodes with `psi < level` are inside.
///
/// Saddle cells are split by the cell-centre average. Segments sharing a
/// grid edge are chained, so each returned curve is one connected piece of
/// the level set.
pub fn contours(field: &PseudoField, level: f64) -> Vec<Contour> {
    let g = &field.grid;
    let (nx, ny) = (g.nx, g.ny);
    // edge ids: 2 * node for the edge to the right of a node, 2 * node + 1 for the edge above it
    let h_edge = |ix: usize, iy: usize| 2 * (iy * nx + ix);
    let v_edge = |ix: usize, iy: usize| 2 * (iy * nx + ix) + 1;
    let mut crossing: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();

    let mut point = |id: usize| {
        crossing.entry(id).or_insert_with(|| {
            let node = id / 2;
            let (ix, iy) = (node % nx, node / nx);
            let (jx, jy) = if id % 2 == 0 { (ix + 1, iy) } else { (ix, iy + 1) };
            let (va, vb) = (field.at(ix, iy), field.at(jx, jy));
            let t = if vb == va { 0.5 } else { ((level - va) / (vb - va)).clamp(0.0, 1.0) };
            (
                g.re(ix) + t * (g.re(jx) - g.re(ix)),
                g.im(iy) + t * (g.im(jy) - g.im(iy)),
            )
        });
    };

    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let v = [field.at(ix, iy), field.at(ix + 1, iy), field.at(ix + 1, iy + 1), field.at(ix, iy + 1)];
            let inside = v.map(|x| x < level);
            let case = inside.iter().enumerate().fold(0, |acc, (i, &b)| acc | (usize::from(b) << i));
            let edge = [h_edge(ix, iy), v_edge(ix + 1, iy), h_edge(ix, iy + 1), v_edge(ix, iy)];
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(BOTTOM, LEFT)],
                2 | 13 => &[(BOTTOM, RIGHT)],
                3 | 12 => &[(LEFT, RIGHT)],
                4 | 11 => &[(RIGHT, TOP)],
                6 | 9 => &[(BOTTOM, TOP)],
                7 | 8 => &[(LEFT, TOP)],
                5 | 10 => {
                    let centre_inside = (v[0] + v[1] + v[2] + v[3]) * 0.25 < level;
                    // cut off the two corners that are not joined through the centre
                    if (case == 5) == centre_inside {
                        &[(BOTTOM, RIGHT), (LEFT, TOP)]
                    } else {
                        &[(BOTTOM, LEFT), (RIGHT, TOP)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                point(edge[a]);
                point(edge[b]);
                segments.push((edge[a], edge[b]));
            }
        }
    }

    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let other = |s: usize, e: usize| if segments[s].0 == e { segments[s].1 } else { segments[s].0 };
    let next = |used: &[bool], e: usize| by_edge[&e].iter().copied().find(|&s| !used[s]);
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut forward = vec![a, b];
        let mut e = b;
        while let Some(s) = next(&used, e) {
            used[s] = true;
            e = other(s, e);
            forward.push(e);
        }
        let closed = forward.len() > 2 && forward.first() == forward.last();
        if !closed {
            let mut backward = Vec::new();
            let mut e = a;
            while let Some(s) = next(&used, e) {
                used[s] = true;
                e = other(s, e);
                backward.push(e);
            }
            backward.reverse();
            backward.extend(forward);
            forward = backward;
        }
        out.push(Contour {
            level,
            points: forward.iter().map(|id| crossing[id]).collect(),
            closed,
        });
    }
    out
}

/// Plot area in complex-plane coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bounds {
    pub fn of_points(points: impl IntoIterator<Item = Complex64>) -> Bounds {
        let mut b = Bounds {
            re_min: f64::INFINITY,
            re_max: f64::NEG_INFINITY,
            im_min: f64::INFINITY,
            im_max: f64::NEG_INFINITY,
        };
        for z in points {
            b.re_min = b.re_min.min(z.re);
            b.re_max = b.re_max.max(z.re);
            b.im_min = b.im_min.min(z.im);
            b.im_max = b.im_max.max(z.im);
        }
        if !b.re_min.is_finite() {
            return Bounds { re_min: -1.0, re_max: 1.0, im_min: -1.0, im_max: 1.0 };
        }
        b.padded(0.05)
    }

    /// Widened by `frac` of the larger side; degenerate sides get unit width.
    pub fn padded(self, frac: f64) -> Bounds {
        let span = (self.re_max - self.re_min).max(self.im_max - self.im_min);
        let pad = if span > 0.0 { frac * span } else { 0.5 };
        Bounds {
            re_min: self.re_min - pad,
            re_max: self.re_max + pad,
            im_min: self.im_min - pad,
            im_max: self.im_max + pad,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Step of about `span / 6` from the 1-2-5 sequence.
fn tick_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let m = raw / mag;
    let nice = if m < 1.5 {
        1.0
    } else if m < 3.5 {
        2.0
    } else if m < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Figure under construction.
pub struct Figure {
    bounds: Bounds,
    body: String,
    legend: Vec<(String, String)>,
    title: String,
}

impl Figure {
    pub fn new(bounds: Bounds, title: &str) -> Self {
        Figure { bounds, body: String::new(), legend: Vec::new(), title: title.to_string() }
    }

    fn sx(&self, re: f64) -> f64 {
        let b = &self.bounds;
        MARGIN_L + (re - b.re_min) / (b.re_max - b.re_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn sy(&self, im: f64) -> f64 {
        let b = &self.bounds;
        HEIGHT - MARGIN_B - (im - b.im_min) / (b.im_max - b.im_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }

    pub fn points(&mut self, pts: &[Complex64], color: &str, label: &str) {
        let _ = writeln!(self.body, "<g fill=\"{color}\" stroke=\"none\">");
        for z in pts {
            let _ = writeln!(self.body, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\"/>", self.sx(z.re), self.sy(z.im));
        }
        self.body.push_str("</g>\n");
        self.legend.push((color.to_string(), label.to_string()));
    }

    pub fn curves(&mut self, curves: &[Contour], color: &str, label: &str) {
        let _ = writeln!(self.body, "<g fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\">");
        for c in curves {
            let mut d = String::new();
            for (i, &(x, y)) in c.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, self.sx(x), self.sy(y));
            }
            if c.closed {
                d.push_str(" Z");
            }
            let _ = writeln!(self.body, "<path d=\"{d}\"/>");
        }
        self.body.push_str("</g>\n");
        self.legend.push((color.to_string(), label.to_string()));
    }

    /// Complete document; `timestamp` goes into a metadata element.
    pub fn render(&self, timestamp: Option<&str>) -> String {
        let b = &self.bounds;
        let (x0, x1, y0, y1) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">"
        );
        if let Some(ts) = timestamp {
            let _ = writeln!(s, "<metadata>generated {ts}</metadata>");
        }
        let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", (x0 + x1) / 2.0, escape(&self.title));
        let _ = writeln!(s, "<g stroke=\"#bbbbbb\" stroke-width=\"0.5\">");
        let xt = ticks(b.re_min, b.re_max);
        let yt = ticks(b.im_min, b.im_max);
        for &t in &xt {
            let x = self.sx(t);
            let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{y1}\"/>");
        }
        for &t in &yt {
            let y = self.sy(t);
            let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\"/>");
        }
        s.push_str("</g>\n");
        let _ = writeln!(s, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
        for &t in &xt {
            let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>", self.sx(t), y1 + 16.0, tick_label(t));
        }
        for &t in &yt {
            let _ = writeln!(s, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", x0 - 6.0, self.sy(t) + 4.0, tick_label(t));
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">Re z</text>", (x0 + x1) / 2.0, HEIGHT - 18.0);
        let _ = writeln!(
            s,
            "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">Im z</text>",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        );
        let _ = writeln!(s, "<clipPath id=\"plot\"><rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\"/></clipPath>", x1 - x0, y1 - y0);
        let _ = writeln!(s, "<g clip-path=\"url(#plot)\">");
        s.push_str(&self.body);
        s.push_str("</g>\n");
        for (i, (color, label)) in self.legend.iter().enumerate() {
            let y = y0 + 10.0 + 18.0 * i as f64;
            let _ = writeln!(s, "<rect x=\"{}\" y=\"{:.1}\" width=\"12\" height=\"3\" fill=\"{color}\"/>", x1 + 12.0, y - 3.0);
            let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\">{}</text>", x1 + 30.0, y + 1.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn color(i: usize) -> &'static str {
    COLORS[i % COLORS.len()]
}

/// Eigenvalue cloud.
pub fn spectrum_svg(points: &[Complex64], bounds: Bounds, title: &str, timestamp: Option<&str>) -> String {
    let mut fig = Figure::new(bounds, title);
    fig.points(points, "black", "eigenvalues");
    fig.render(timestamp)
}

/// Contours of `field` at each level over the eigenvalue cloud.
pub fn pseudospectrum_svg(field: &PseudoField, levels: &[f64], points: &[Complex64], title: &str, timestamp: Option<&str>) -> String {
    let g = &field.grid;
    let bounds = Bounds { re_min: g.re_min, re_max: g.re_max, im_min: g.im_min, im_max: g.im_max };
    let mut fig = Figure::new(bounds, title);
    for (i, &level) in levels.iter().enumerate() {
        fig.curves(&contours(field, level), color(i), &format!("eps = {level:e}"));
    }
    if !points.is_empty() {
        fig.points(points, "black", "eigenvalues");
    }
    fig.render(timestamp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use borgspec_core::field::GridSpec;

    fn field_of(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> PseudoField {
        let mut psi = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                psi[grid.index(ix, iy)] = f(grid.re(ix), grid.im(iy));
            }
        }
        PseudoField { grid, psi, theta_count: 1 }
    }

    #[test]
    fn circle_is_one_closed_curve_on_the_level() {
        let grid = GridSpec::new(-2.0, 2.0, -2.0, 2.0, 81, 81).unwrap();
        let f = field_of(grid, |x, y| (x * x + y * y).sqrt());
        let cs = contours(&f, 1.0);
        assert_eq!(cs.len(), 1);
        assert!(cs[0].closed);
        for &(x, y) in &cs[0].points {
            // linear interpolation of the exact distance along grid edges
            assert!(((x * x + y * y).sqrt() - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn two_discs_and_open_curves() {
        let grid = GridSpec::new(-3.0, 3.0, -1.5, 1.5, 121, 61).unwrap();
        let f = field_of(grid, |x, y| ((x - 1.5).hypot(y)).min((x + 1.5).hypot(y)));
        let cs = contours(&f, 1.0);
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.closed));
        // a half-plane level set crosses the frame: one open curve
        let h = field_of(grid, |x, _| x);
        let cs = contours(&h, 0.32);
        assert_eq!(cs.len(), 1);
        assert!(!cs[0].closed);
        assert_eq!(cs[0].points.len(), 61);
    }

    #[test]
    fn saddle_resolved_by_centre() {
        let grid = GridSpec::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        // inside at (0,0) and (1,1)
        let f = PseudoField { grid, psi: vec![0.0, 1.0, 1.0, 0.0], theta_count: 1 };
        assert_eq!(contours(&f, 0.4).len(), 2);
        assert_eq!(contours(&f, 0.6).len(), 2);
    }

    #[test]
    fn ticks_cover_range() {
        assert_eq!(ticks(-1.0, 2.0), vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(ticks(0.05, 0.95).iter().all(|t| (0.05..=0.95).contains(t)));
        assert_eq!(tick_label(0.30000000000000004), "0.3");
        let svg = spectrum_svg(&[Complex64::new(0.0, 1.0)], Bounds::of_points([Complex64::new(0.0, 1.0)]), "t", None);
        assert!(svg.contains("Re z") && svg.contains("Im z") && !svg.contains("metadata"));
    }
}
