//! Self-contained SVG plots of sweep results, with a sidecar CSV of the
//! plotted points.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

use super::{SweepGroup, SweepTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SuccessVsK,
    SuccessVsM,
    SuccessVsTheta,
    AmplitudeScatter,
}

impl PlotKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "success-vs-k" => Ok(PlotKind::SuccessVsK),
            "success-vs-m" => Ok(PlotKind::SuccessVsM),
            "success-vs-theta" => Ok(PlotKind::SuccessVsTheta),
            "amplitude-scatter" => Ok(PlotKind::AmplitudeScatter),
            other => Err(Error::InvalidArgument(format!("unknown plot kind '{other}'"))),
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-12);
        MARGIN_L + (v - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        HEIGHT - MARGIN_B - (v - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn series_label(g: &SweepGroup) -> String {
    let mut label = g.point.algo.label().to_string();
    if let Some(l) = g.point.lambda {
        let _ = write!(label, " lambda={l}");
    }
    let _ = write!(label, " ({})", g.point.ensemble.label());
    label
}

fn open_svg(buf: &mut String, x_label: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        buf,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    buf.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
    let _ = write!(
        buf,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    // Ticks and grid.
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let xp = frame.x(xv);
        let yp = frame.y(yv);
        let _ = write!(
            buf,
            "<line x1=\"{xp}\" y1=\"{y0}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#dddddd\"/>\n\
             <line x1=\"{xp}\" y1=\"{y0}\" x2=\"{xp}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y1,
            y0 + 5.0,
            y0 + 20.0,
            trim_num(xv)
        );
        let _ = write!(
            buf,
            "<line x1=\"{x0}\" y1=\"{yp}\" x2=\"{x1}\" y2=\"{yp}\" stroke=\"#dddddd\"/>\n\
             <line x1=\"{}\" y1=\"{yp}\" x2=\"{x0}\" y2=\"{yp}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 5.0,
            x0 - 8.0,
            yp + 4.0,
            trim_num(yv)
        );
    }
    let _ = writeln!(
        buf,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        x_label
    );
    let _ = writeln!(
        buf,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        y_label
    );
}

fn trim_num(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Plot aggregated success curves. The x axis is k, m, or log10(θ)
/// depending on the kind; one series per (algorithm, lambda, ensemble).
///
/// Next to the SVG a sidecar CSV of the plotted points is written with
/// extension `points.csv`.
pub fn emit_plot(table: &SweepTable, kind: PlotKind, path: &Path) -> Result<()> {
    if table.groups.is_empty() {
        return Err(Error::InvalidArgument("empty sweep table".into()));
    }
    if kind == PlotKind::AmplitudeScatter {
        return Err(Error::InvalidArgument(
            "amplitude-scatter plots one instance; use emit_amplitude_scatter".into(),
        ));
    }
    let x_of = |g: &SweepGroup| -> Result<f64> {
        Ok(match kind {
            PlotKind::SuccessVsK => g.point.k as f64,
            PlotKind::SuccessVsM => g.point.m as f64,
            PlotKind::SuccessVsTheta => g
                .point
                .theta
                .ok_or_else(|| {
                    Error::InvalidArgument("success-vs-theta needs a theta-scan sweep".into())
                })?
                .log10(),
            PlotKind::AmplitudeScatter => unreachable!(),
        })
    };

    // Group in first-seen order.
    let mut series: Vec<(String, Vec<(f64, f64, usize)>)> = Vec::new();
    for g in &table.groups {
        let label = series_label(g);
        let x = x_of(g)?;
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((x, g.success_prob, g.trials)),
            None => series.push((label, vec![(x, g.success_prob, g.trials)])),
        }
    }
    for (_, pts) in series.iter_mut() {
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }

    let xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame {
        x_min,
        x_max: if x_max > x_min { x_max } else { x_min + 1.0 },
        y_min: 0.0,
        y_max: 1.0,
    };
    let x_label = match kind {
        PlotKind::SuccessVsK => "sparsity k",
        PlotKind::SuccessVsM => "measurements m",
        PlotKind::SuccessVsTheta => "log10(theta)",
        PlotKind::AmplitudeScatter => unreachable!(),
    };

    let mut svg = String::new();
    open_svg(&mut svg, x_label, "success probability", &frame);
    let mut sidecar = String::from("series,x,success_prob,trials\n");
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut poly = String::new();
        for &(x, p, trials) in pts {
            let _ = write!(poly, "{:.2},{:.2} ", frame.x(x), frame.y(p));
            let _ = writeln!(sidecar, "{label},{x},{p},{trials}");
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            poly.trim_end()
        );
        for &(x, p, _) in pts {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                frame.x(x),
                frame.y(p)
            );
        }
        let ly = MARGIN_T + 14.0 * si as f64 + 4.0;
        let _ = write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\">{label}</text>\n",
            MARGIN_L + 8.0,
            ly - 9.0,
            MARGIN_L + 22.0,
            ly
        );
    }
    svg.push_str("</svg>\n");

    std::fs::write(path, svg)?;
    std::fs::write(path.with_extension("points.csv"), sidecar)?;
    Ok(())
}

/// Scatter of per-index amplitudes for one instance: the truth plus one
/// series per labeled estimate.
pub fn emit_amplitude_scatter(
    truth: &DVector<f64>,
    series: &[(String, DVector<f64>)],
    path: &Path,
) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("no estimate series given".into()));
    }
    let n = truth.len();
    for (label, est) in series {
        if est.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "series '{label}' has length {} but truth has {}",
                est.len(),
                n
            )));
        }
    }
    let mut y_min = truth.min().min(0.0);
    let mut y_max = truth.max().max(0.0);
    for (_, est) in series {
        y_min = y_min.min(est.min());
        y_max = y_max.max(est.max());
    }
    let pad = 0.1 * (y_max - y_min).max(1.0);
    let frame = Frame {
        x_min: 0.0,
        x_max: (n.saturating_sub(1)).max(1) as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut svg = String::new();
    open_svg(&mut svg, "index", "amplitude", &frame);
    let mut sidecar = String::from("series,index,value\n");

    // Truth as crosses.
    for j in 0..n {
        let v = truth[j];
        let _ = writeln!(sidecar, "truth,{j},{v}");
        if v != 0.0 {
            let (cx, cy) = (frame.x(j as f64), frame.y(v));
            let _ = writeln!(
                svg,
                "<path d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"black\" stroke-width=\"1.2\"/>",
                cx - 4.0, cy - 4.0, cx + 4.0, cy + 4.0,
                cx - 4.0, cy + 4.0, cx + 4.0, cy - 4.0
            );
        }
    }
    for (si, (label, est)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for j in 0..n {
            let v = est[j];
            let _ = writeln!(sidecar, "{label},{j},{v}");
            if v != 0.0 {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"none\" stroke=\"{color}\"/>",
                    frame.x(j as f64),
                    frame.y(v)
                );
            }
        }
        let ly = MARGIN_T + 14.0 * si as f64 + 4.0;
        let _ = write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\">{label}</text>\n",
            MARGIN_L + 8.0,
            ly - 9.0,
            MARGIN_L + 22.0,
            ly
        );
    }
    let ly = MARGIN_T + 14.0 * series.len() as f64 + 4.0;
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\">x = truth</text>",
        MARGIN_L + 22.0,
        ly
    );
    svg.push_str("</svg>\n");

    std::fs::write(path, svg)?;
    std::fs::write(path.with_extension("points.csv"), sidecar)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Algorithm, GridPoint, NoiseModel, SweepGroup, SweepTable};
    use crate::Ensemble;

    fn group(k: usize, prob: f64) -> SweepGroup {
        SweepGroup {
            point: GridPoint {
                algo: Algorithm::Tbp,
                lambda: None,
                n: 200,
                m: 100,
                k,
                ensemble: Ensemble::Gaussian,
                noise: NoiseModel::Output,
                snr: 30.0,
                theta: None,
            },
            trials: 40,
            failures: 0,
            successes: (prob * 40.0) as usize,
            success_prob: prob,
            mean_l2: 0.1,
        }
    }

    #[test]
    fn single_point_plot_renders() {
        let dir = std::env::temp_dir().join("tbp_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("one.svg");
        let table = SweepTable {
            groups: vec![group(10, 1.0)],
            records: Vec::new(),
        };
        emit_plot(&table, PlotKind::SuccessVsK, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<circle"));
        assert!(svg.contains("sparsity k"));
        let sidecar = std::fs::read_to_string(path.with_extension("points.csv")).unwrap();
        assert!(sidecar.lines().count() == 2);
    }

    #[test]
    fn theta_plot_requires_theta() {
        let table = SweepTable {
            groups: vec![group(10, 0.5)],
            records: Vec::new(),
        };
        let path = std::env::temp_dir().join("tbp_plot_test_theta.svg");
        assert!(emit_plot(&table, PlotKind::SuccessVsTheta, &path).is_err());
    }

    #[test]
    fn scatter_renders_truth_and_series() {
        let dir = std::env::temp_dir().join("tbp_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scatter.svg");
        let truth = DVector::from_vec(vec![1.0, 0.0, -1.0, 0.0]);
        let est = DVector::from_vec(vec![0.8, 0.0, -0.7, 0.1]);
        emit_amplitude_scatter(&truth, &[("bp".to_string(), est)], &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.contains("<path"));
        assert!(svg.contains("<circle"));
    }
}
