//! Static figure emission: limit sets, measure scatters and histograms,
//! convergence curves. Figures are self-contained SVG 1.1 strings and every
//! figure carries a sibling CSV with the plotted numbers, so tests read
//! numbers, never pixels. Identical inputs give byte-identical output.

use crate::cocycle::ProjPoint;
use crate::group::{GroupElement, Representation};
use crate::measures::{Atoms, ConvergenceTable, EmpiricalMeasure};
use thiserror::Error;

pub const HISTOGRAM_BINS: usize = 256;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("figure kind {0:?} does not match the measure support")]
    KindMismatch(FigureKind),
    #[error("measure must be normalised before rendering")]
    NotNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    LimitSet,
    SphereScatter,
    AngleHistogram,
    ConvergenceCurve,
}

/// Styling knobs; the defaults match the run reports.
#[derive(Debug, Clone)]
pub struct FigureStyle {
    pub width: u32,
    pub height: u32,
    pub point_radius: f64,
    pub color: String,
}

impl Default for FigureStyle {
    fn default() -> Self {
        FigureStyle { width: 640, height: 640, point_radius: 1.2, color: "#1f4e8c".to_string() }
    }
}

/// A rendered figure: SVG text plus the CSV sibling with the same data.
#[derive(Debug, Clone)]
pub struct Figure {
    pub kind: FigureKind,
    pub svg: String,
    pub csv: String,
    pub manifest_hash: String,
}

fn svg_open(style: &FigureStyle, manifest_hash: &str, title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ",
            "width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<metadata>manifest:{hash}</metadata>\n",
            "<title>{title}</title>\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
        ),
        w = style.width,
        h = style.height,
        hash = manifest_hash,
        title = title,
    )
}

/// Scatter of the orbit of a fiber point under a representation: the output
/// has two panels, the identity chart on the left and the `1/z` chart on the
/// right for points escaping to infinity.
pub fn render_limit_set(
    rep: &Representation,
    ball: &[GroupElement],
    x0: &ProjPoint,
    style: &FigureStyle,
    manifest_hash: &str,
) -> Figure {
    let points: Vec<ProjPoint> = ball.iter().map(|e| x0.apply(&rep.eval(&e.word))).collect();
    let mut csv = String::from("re,im,inv_re,inv_im\n");
    for p in &points {
        let (u0, u1) = p.homogeneous();
        let z = u0 / u1;
        let zi = u1 / u0;
        csv.push_str(&format!("{},{},{},{}\n", z.re, z.im, zi.re, zi.im));
    }
    let w = style.width as f64;
    let h = style.height as f64;
    let half = w / 2.0;
    // each panel shows the square [-3, 3]²
    let scale = half / 6.0;
    let mut svg = svg_open(style, manifest_hash, "limit set");
    svg.push_str(&format!(
        "<line x1=\"{half}\" y1=\"0\" x2=\"{half}\" y2=\"{h}\" stroke=\"#cccccc\"/>\n"
    ));
    for p in &points {
        let (u0, u1) = p.homogeneous();
        for (panel, z) in [(0.0, u0 / u1), (half, u1 / u0)] {
            if !z.re.is_finite() || !z.im.is_finite() || z.norm() > 5.9 {
                continue;
            }
            let cx = panel + half / 2.0 + z.re * scale;
            let cy = h / 2.0 - z.im * scale;
            svg.push_str(&format!(
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{}\" fill=\"{}\"/>\n",
                cx, cy, style.point_radius, style.color
            ));
        }
    }
    svg.push_str("</svg>\n");
    Figure { kind: FigureKind::LimitSet, svg, csv, manifest_hash: manifest_hash.to_string() }
}

/// Renders a measure: angle histogram for circle-supported measures (256
/// bins, total area one), scatter in the chordal chart otherwise.
pub fn render_measure(
    m: &EmpiricalMeasure,
    kind: FigureKind,
    style: &FigureStyle,
    manifest_hash: &str,
) -> Result<Figure, RenderError> {
    if !m.is_normalized() {
        return Err(RenderError::NotNormalized);
    }
    match (kind, m.atoms()) {
        (FigureKind::AngleHistogram, Atoms::Circle(atoms)) => {
            Ok(render_histogram(atoms, style, manifest_hash))
        }
        (FigureKind::SphereScatter, Atoms::Projective(atoms)) => {
            Ok(render_scatter(atoms, style, manifest_hash))
        }
        _ => Err(RenderError::KindMismatch(kind)),
    }
}

fn render_histogram(atoms: &[(f64, f64)], style: &FigureStyle, manifest_hash: &str) -> Figure {
    let tau = std::f64::consts::TAU;
    let mut bins = vec![0.0f64; HISTOGRAM_BINS];
    for (angle, weight) in atoms {
        let idx = ((angle.rem_euclid(tau) / tau) * HISTOGRAM_BINS as f64) as usize;
        bins[idx.min(HISTOGRAM_BINS - 1)] += weight;
    }
    let mut csv = String::from("bin,angle_lo,mass\n");
    for (i, b) in bins.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", i, i as f64 * tau / HISTOGRAM_BINS as f64, b));
    }
    let w = style.width as f64;
    let h = style.height as f64;
    let peak = bins.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
    let bar_w = w / HISTOGRAM_BINS as f64;
    let mut svg = svg_open(style, manifest_hash, "angle histogram");
    for (i, b) in bins.iter().enumerate() {
        let bh = (b / peak) * (h - 10.0);
        svg.push_str(&format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{}\"/>\n",
            i as f64 * bar_w,
            h - bh,
            bar_w,
            bh,
            style.color
        ));
    }
    svg.push_str("</svg>\n");
    Figure { kind: FigureKind::AngleHistogram, svg, csv, manifest_hash: manifest_hash.to_string() }
}

fn render_scatter(atoms: &[(ProjPoint, f64)], style: &FigureStyle, manifest_hash: &str) -> Figure {
    let mut csv = String::from("re,im,weight\n");
    let w = style.width as f64;
    let h = style.height as f64;
    let scale = w / 6.0;
    let mut svg = svg_open(style, manifest_hash, "measure scatter");
    let wmax = atoms.iter().map(|(_, w)| *w).fold(0.0f64, f64::max).max(1e-300);
    for (p, weight) in atoms {
        let (u0, u1) = p.homogeneous();
        let z = u0 / u1;
        csv.push_str(&format!("{},{},{}\n", z.re, z.im, weight));
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() > 2.9 {
            continue;
        }
        let r = style.point_radius * (weight / wmax).sqrt().max(0.15);
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.3}\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
            w / 2.0 + z.re * scale,
            h / 2.0 - z.im * scale,
            r,
            style.color
        ));
    }
    svg.push_str("</svg>\n");
    Figure { kind: FigureKind::SphereScatter, svg, csv, manifest_hash: manifest_hash.to_string() }
}

/// Log-scale polyline of the successive distances in a convergence table.
pub fn render_convergence(
    table: &ConvergenceTable,
    style: &FigureStyle,
    manifest_hash: &str,
) -> Figure {
    let csv = table.to_csv();
    let w = style.width as f64;
    let h = style.height as f64;
    let n = table.successive.len().max(1);
    let logs: Vec<f64> = table.successive.iter().map(|d| d.max(1e-16).log10()).collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min) - 0.5;
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.5;
    let span = (hi - lo).max(1e-9);
    let mut pts = String::new();
    for (k, l) in logs.iter().enumerate() {
        let x = 40.0 + (w - 60.0) * k as f64 / (n.max(2) - 1) as f64;
        let y = h - 30.0 - (h - 60.0) * (l - lo) / span;
        pts.push_str(&format!("{:.2},{:.2} ", x, y));
    }
    let mut svg = svg_open(style, manifest_hash, "convergence");
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
        pts.trim_end(),
        style.color
    ));
    for (k, l) in logs.iter().enumerate() {
        let x = 40.0 + (w - 60.0) * k as f64 / (n.max(2) - 1) as f64;
        let y = h - 30.0 - (h - 60.0) * (l - lo) / span;
        svg.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>\n", x, y, style.color));
    }
    svg.push_str("</svg>\n");
    Figure { kind: FigureKind::ConvergenceCurve, svg, csv, manifest_hash: manifest_hash.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{bend, octagon_generators, Representation};
    use crate::measures::theta;
    use crate::potential::Potential;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn limit_set_real_and_bent() {
        let g = octagon_generators();
        let ball = g.ball(6.0, 40).unwrap();
        let rep = Representation::fuchsian(&g);
        let x0 = ProjPoint::from_chart(Complex64::new(0.37, 0.0));
        let fig = render_limit_set(&rep, &ball, &x0, &FigureStyle::default(), "testhash");
        assert!(fig.svg.contains("manifest:testhash"));
        // every CSV row from the fuchsian orbit has |Im| below 1e-9 in chart
        for line in fig.csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let im: f64 = cols[1].parse().unwrap();
            if im.is_finite() {
                assert!(im.abs() < 1e-9, "imag leak {im}");
            }
        }
        let bent = bend(&rep, 0.3).unwrap();
        let figb = render_limit_set(&bent, &ball, &x0, &FigureStyle::default(), "testhash");
        let max_im = figb
            .csv
            .lines()
            .skip(1)
            .filter_map(|l| l.split(',').nth(1).unwrap().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(max_im > 1e-2, "bent orbit stayed real: {max_im}");
        // tiny ball: single point x0
        let tiny = g.ball(0.1, 10).unwrap();
        let figt = render_limit_set(&rep, &tiny, &x0, &FigureStyle::default(), "h");
        assert_eq!(figt.csv.lines().count(), 2);
    }

    #[test]
    fn histogram_uniform_and_dirac() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let n = 100_000usize;
        let uniform = crate::measures::EmpiricalMeasure::from_circle_atoms(
            (0..n).map(|_| (rng.gen::<f64>() * std::f64::consts::TAU, 1.0)).collect(),
        )
        .normalized()
        .unwrap();
        let fig =
            render_measure(&uniform, FigureKind::AngleHistogram, &FigureStyle::default(), "h").unwrap();
        let masses: Vec<f64> = fig
            .csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .collect();
        assert_eq!(masses.len(), HISTOGRAM_BINS);
        let total: f64 = masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "bins sum {total}");
        let tol = 4.0 / ((n * HISTOGRAM_BINS) as f64).sqrt();
        for m in &masses {
            assert!((m - 1.0 / HISTOGRAM_BINS as f64).abs() < tol, "bin off: {m}");
        }
        // Dirac: single bin holds everything
        let dirac = crate::measures::EmpiricalMeasure::from_circle_atoms(vec![(1.0, 1.0)])
            .normalized()
            .unwrap();
        let figd =
            render_measure(&dirac, FigureKind::AngleHistogram, &FigureStyle::default(), "h").unwrap();
        let md: Vec<f64> = figd
            .csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .collect();
        assert_eq!(md.iter().filter(|m| **m > 0.0).count(), 1);
        assert!((md.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn figures_are_byte_identical() {
        let g = octagon_generators();
        let ball = g.ball(5.0, 40).unwrap();
        let rep = Representation::fuchsian(&g);
        let x0 = ProjPoint::from_chart(Complex64::new(0.37, 0.0));
        let th = theta(&rep, &Potential::zero(), 5.0, &x0, &ball).unwrap();
        let a = render_measure(&th, FigureKind::SphereScatter, &FigureStyle::default(), "same").unwrap();
        let b = render_measure(&th, FigureKind::SphereScatter, &FigureStyle::default(), "same").unwrap();
        assert_eq!(a.svg, b.svg);
        assert_eq!(a.csv, b.csv);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let dirac = crate::measures::EmpiricalMeasure::from_circle_atoms(vec![(1.0, 1.0)])
            .normalized()
            .unwrap();
        assert!(matches!(
            render_measure(&dirac, FigureKind::SphereScatter, &FigureStyle::default(), "h"),
            Err(RenderError::KindMismatch(_))
        ));
    }
}
