//! Static SVG rendering of empirical CDFs.

use std::fmt::Write;

use hetmimo_core::CdfSummary;

pub struct Curve {
    pub label: String,
    pub cdf: CdfSummary,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
/// Quantile grid resolution of each plotted curve.
const STEPS: usize = 500;

/// Round tick spacing covering `[0, max]` with about five intervals.
fn tick_step(max: f64) -> f64 {
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// Staircase points `(x, F(x))` of a curve on a fixed quantile grid.
pub fn curve_points(cdf: &CdfSummary) -> Vec<(f64, f64)> {
    let n = cdf.n() as f64;
    let mut pts = Vec::with_capacity(2 * STEPS + 2);
    let mut last_x = cdf.sorted()[0];
    pts.push((last_x, 0.0));
    for j in 1..=STEPS {
        let q = j as f64 / STEPS as f64;
        let x = cdf.percentile(q).expect("non-empty");
        // Exact ECDF level reached at x.
        let level = cdf.sorted().partition_point(|v| *v <= x) as f64 / n;
        if x > last_x {
            pts.push((x, pts.last().map(|p| p.1).unwrap_or(0.0)));
            last_x = x;
        }
        if level > pts.last().map(|p| p.1).unwrap_or(0.0) {
            pts.push((x, level));
        }
    }
    pts
}

/// One SVG document with every curve, axes, legend and a dashed line at the
/// 5th percentile marking each curve's 95%-likely rate.
pub fn cdf_svg(title: &str, curves: &[Curve]) -> String {
    let x_max_data = curves.iter().map(|c| *c.cdf.sorted().last().expect("non-empty")).fold(0.0, f64::max);
    let step = tick_step(if x_max_data > 0.0 { x_max_data } else { 1.0 });
    let x_max = (x_max_data / step).ceil().max(1.0) * step;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + pw * x / x_max;
    let sy = |y: f64| TOP + ph * (1.0 - y);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#, LEFT + pw / 2.0);

    // Grid and ticks.
    let mut x = 0.0;
    while x <= x_max + 1e-9 * x_max {
        let px = sx(x);
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + ph);
        let _ =
            writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(x));
        x += step;
    }
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let py = sy(y);
        let _ =
            writeln!(s, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"#, LEFT - 8.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Per-user spectral efficiency (bit/s/Hz)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Cumulative probability</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    // 5th percentile marker line.
    let y5 = sy(0.05);
    let _ = writeln!(
        s,
        r##"<line class="p5" x1="{LEFT}" y1="{y5:.2}" x2="{:.2}" y2="{y5:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
        LEFT + pw
    );
    let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#555">5th percentile</text>"##, LEFT + 6.0, y5 - 5.0);

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts = curve_points(&c.cdf);
        let mut d = String::new();
        for (j, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, sx(*x), sy(*y));
        }
        let _ = writeln!(
            s,
            r#"<path class="cdf" data-label="{}" d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            c.label,
            d.trim_end()
        );
        let p5 = c.cdf.likely95();
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{y5:.2}" r="4" fill="{color}"/>"#, sx(p5));
        let ly = TOP + 20.0 + 36.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, ly + 4.0, c.label);
        let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#555">5%: {p5:.3}</text>"##, lx + 28.0, ly + 18.0);
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(x: f64) -> String {
    let t = format!("{x:.2}");
    t.trim_end_matches('0').trim_end_matches('.').to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cdf(v: Vec<f64>) -> CdfSummary {
        CdfSummary::new(v).unwrap()
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(10.0), 2.0);
        assert_eq!(tick_step(7.3), 2.0);
        assert_eq!(tick_step(1.0), 0.2);
        assert_eq!(tick_step(12.0), 2.5);
    }

    #[test]
    fn staircase_is_monotone_and_spans_unit_interval() {
        let values: Vec<f64> = (0..1234).map(|i| ((i * 7919) % 1000) as f64 / 100.0).collect();
        let pts = curve_points(&cdf(values));
        assert_eq!(pts[0].1, 0.0);
        assert_eq!(pts.last().unwrap().1, 1.0);
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn svg_has_a_curve_per_scenario_and_the_marker_line() {
        let curves = vec![
            Curve { label: "a".into(), cdf: cdf(vec![1.0, 2.0, 3.0]) },
            Curve { label: "b".into(), cdf: cdf(vec![0.5, 4.0]) },
        ];
        let svg = cdf_svg("t", &curves);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches(r#"class="cdf""#).count(), 2);
        assert_eq!(svg.matches(r#"class="p5""#).count(), 1);
    }
}
