//! Hand-rolled static SVG log-log trend plot: one series with error bars and
//! a fitted-slope annotation. No plotting dependency, and the output is a
//! pure function of the inputs, so identical studies yield identical bytes.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 54.0;

pub struct TrendPoint {
    pub n: f64,
    pub mean: f64,
    pub stderr: f64,
}

struct Axis {
    lo: f64, // log10 at plot start
    hi: f64,
    px0: f64,
    px1: f64,
}

impl Axis {
    fn place(&self, v: f64) -> f64 {
        let t = (v.log10() - self.lo) / (self.hi - self.lo);
        self.px0 + t * (self.px1 - self.px0)
    }
    fn decades(&self) -> Vec<i32> {
        // `lo`/`hi` are plot ends, which for the y axis run top-down
        let (a, b) = if self.lo <= self.hi {
            (self.lo, self.hi)
        } else {
            (self.hi, self.lo)
        };
        (a.floor() as i32..=b.ceil() as i32).collect()
    }
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Render the trend plot. `slope`/`slope_stderr` annotate the fitted log-log
/// slope; `ylabel` names the metric.
pub fn trend_plot(points: &[TrendPoint], slope: f64, slope_stderr: f64, ylabel: &str) -> String {
    assert!(!points.is_empty());
    let xs: Vec<f64> = points.iter().map(|p| p.n).collect();
    let mut ylo = f64::INFINITY;
    let mut yhi = f64::NEG_INFINITY;
    for p in points {
        let low = if p.mean - p.stderr > 0.0 {
            p.mean - p.stderr
        } else {
            p.mean
        };
        ylo = ylo.min(low);
        yhi = yhi.max(p.mean + p.stderr);
    }
    let pad = 0.15;
    let x = Axis {
        lo: xs.iter().cloned().fold(f64::INFINITY, f64::min).log10() - pad,
        hi: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).log10() + pad,
        px0: MARGIN_L,
        px1: WIDTH - MARGIN_R,
    };
    let y = Axis {
        lo: yhi.log10() + pad, // SVG y grows downward: top is the max
        hi: ylo.log10() - pad,
        px0: MARGIN_T,
        px1: HEIGHT - MARGIN_B,
    };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes frame
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        coord(MARGIN_L),
        coord(MARGIN_T),
        coord(WIDTH - MARGIN_L - MARGIN_R),
        coord(HEIGHT - MARGIN_T - MARGIN_B)
    ));

    // decade ticks and gridlines
    for d in x.decades() {
        let v = 10f64.powi(d);
        if v.log10() < x.lo || v.log10() > x.hi {
            continue;
        }
        let px = x.place(v);
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#cccccc\"/>\n",
            coord(px),
            coord(MARGIN_T),
            coord(HEIGHT - MARGIN_B)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>\n",
            coord(px),
            coord(HEIGHT - MARGIN_B + 16.0)
        ));
    }
    for d in y.decades() {
        let lg = d as f64;
        if lg > y.lo || lg < y.hi {
            continue;
        }
        let py = y.px0 + (lg - y.lo) / (y.hi - y.lo) * (y.px1 - y.px0);
        s.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#cccccc\"/>\n",
            coord(py),
            coord(MARGIN_L),
            coord(WIDTH - MARGIN_R)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>\n",
            coord(MARGIN_L - 6.0),
            coord(py + 4.0)
        ));
    }

    // error bars
    for p in points {
        let px = x.place(p.n);
        let top = y.place(p.mean + p.stderr);
        let low = if p.mean - p.stderr > 0.0 {
            p.mean - p.stderr
        } else {
            p.mean
        };
        let bot = y.place(low);
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#1f6feb\"/>\n",
            coord(px),
            coord(top),
            coord(bot)
        ));
        for py in [top, bot] {
            s.push_str(&format!(
                "<line x1=\"{}\" y1=\"{2}\" x2=\"{}\" y2=\"{2}\" stroke=\"#1f6feb\"/>\n",
                coord(px - 4.0),
                coord(px + 4.0),
                coord(py)
            ));
        }
    }

    // series polyline and markers
    let pts: Vec<String> = points
        .iter()
        .map(|p| format!("{},{}", coord(x.place(p.n)), coord(y.place(p.mean))))
        .collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    ));
    for p in points {
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#1f6feb\"/>\n",
            coord(x.place(p.n)),
            coord(y.place(p.mean))
        ));
    }

    // labels and the slope annotation
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">n</text>\n",
        coord((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        coord(HEIGHT - 14.0)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {0})\">{ylabel}</text>\n",
        coord((MARGIN_T + HEIGHT - MARGIN_B) / 2.0)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">slope = {slope:.6} &#177; {slope_stderr:.6}</text>\n",
        coord((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        coord(MARGIN_T - 14.0)
    ));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TrendPoint> {
        vec![
            TrendPoint { n: 1e3, mean: 1e-3, stderr: 1e-4 },
            TrendPoint { n: 1e4, mean: 3e-4, stderr: 2e-5 },
            TrendPoint { n: 1e5, mean: 1e-4, stderr: 5e-6 },
        ]
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = trend_plot(&sample(), -0.5, 0.01, "hellinger_sq");
        let b = trend_plot(&sample(), -0.5, 0.01, "hellinger_sq");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn slope_annotation_six_decimals() {
        let s = trend_plot(&sample(), -0.927512345, 0.043951111, "hellinger_sq");
        assert!(s.contains("slope = -0.927512"), "{s}");
        assert!(s.contains("0.043951"));
    }
}
