//! Command implementations: argument resolution against the config file,
//! the library calls, and deterministic persistence of results.

use crate::config::{parse_window, Config};
use crate::manifest::{output_dir, RunManifest};
use crate::report;
use crate::{numeric, CliError, Command};
use gibbslab::cocycle::{
    basin_check, lyapunov_section_plus, lyapunov_top, oseledets_flags, DiscreteCocycle, ProjPoint,
};
use gibbslab::group::{bend, octagon_generators, GroupPresentation, Representation};
use gibbslab::hypgeom::{geodesic_point_to_boundary, BoundaryPoint, HPoint};
use gibbslab::measures::{ball_average, ledrappier_boundary, sphere_average, theta};
use gibbslab::potential::{estimate_pressure, Potential};
use gibbslab::render::{render_limit_set, render_measure, FigureKind, FigureStyle};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn dispatch(cmd: Command, cfg: Config, out: Option<&Path>) -> Result<PathBuf, CliError> {
    match cmd {
        Command::Ball { radius, cap } => run_ball(cfg, out, radius, cap),
        Command::Pressure { potential, window, radius, cap } => {
            run_pressure(cfg, out, potential, window, radius, cap)
        }
        Command::Theta { radius, cap, potential, rep, x } => {
            run_theta(cfg, out, radius, cap, potential, rep, x)
        }
        Command::BallAverage { radius, potential, rep, x, samples, seed } => {
            run_leaf_average(cfg, out, radius, potential, rep, x, samples, seed, false)
        }
        Command::SphereAverage { radius, potential, rep, x, samples, seed } => {
            run_leaf_average(cfg, out, radius, potential, rep, x, samples, seed, true)
        }
        Command::Ledrappier { radius, cap, potential, window } => {
            run_ledrappier(cfg, out, radius, cap, potential, window)
        }
        Command::Lyapunov { radius, cap, potential, rep } => {
            run_lyapunov(cfg, out, radius, cap, potential, rep)
        }
        Command::Section { rep, depth, count, seed, x } => {
            run_section(cfg, out, rep, depth, count, seed, x)
        }
        Command::LimitSet { radius, cap, rep, x } => run_limit_set(cfg, out, radius, cap, rep, x),
        Command::Basin { matrices, steps, points, seed } => {
            run_basin(cfg, out, matrices, steps, points, seed)
        }
        Command::Report { radius, samples, seed } => report::run_report(cfg, out, radius, samples, seed),
    }
}

// ---------------------------------------------------------------------------
// argument resolution helpers
// ---------------------------------------------------------------------------

pub struct Resolver<'a> {
    pub cfg: &'a Config,
    pub section: &'a str,
    pub snapshot: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(cfg: &'a Config, section: &'a str) -> Self {
        Resolver { cfg, section, snapshot: BTreeMap::new() }
    }

    pub fn resolve<T: std::str::FromStr>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError>
    where
        T: ToString,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.cfg.get(self.section, key) {
                Some(s) => s
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad value for {key}: {s}")))?,
                None => default,
            },
        };
        self.snapshot.insert(format!("{}.{key}", self.section), v.to_string());
        Ok(v)
    }
}

pub fn parse_potential(group: &GroupPresentation, s: &str) -> Result<Potential, CliError> {
    if s == "zero" {
        return Ok(Potential::zero());
    }
    if let Some(c) = s.strip_prefix("const:") {
        let c: f64 = c.parse().map_err(|_| CliError::Config(format!("bad constant {c}")))?;
        return Ok(Potential::constant(c));
    }
    if let Some(rest) = s.strip_prefix("bump:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 4 {
            return Err(CliError::Config(format!(
                "bump potential needs q_re,q_im,r,A — got {rest}"
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("bad bump parameters {rest}")))?;
        let center = HPoint::new(Complex64::new(nums[0], nums[1]))
            .map_err(|e| CliError::Config(format!("bump centre: {e}")))?;
        return Potential::bump(group, center, nums[2], nums[3])
            .map_err(|e| CliError::Config(e.to_string()));
    }
    Err(CliError::Config(format!(
        "unknown potential {s}; expected zero, const:<c> or bump:q_re,q_im,r,A"
    )))
}

pub fn parse_rep(group: &GroupPresentation, s: &str) -> Result<Representation, CliError> {
    if s == "fuchsian" {
        return Ok(Representation::fuchsian(group));
    }
    if let Some(theta) = s.strip_prefix("bent:") {
        let theta: f64 =
            theta.parse().map_err(|_| CliError::Config(format!("bad bending angle {theta}")))?;
        return bend(&Representation::fuchsian(group), theta)
            .map_err(|e| CliError::Config(e.to_string()));
    }
    Err(CliError::Config(format!("unknown representation {s}; expected fuchsian or bent:<θ>")))
}

pub fn parse_proj(s: &str) -> Result<ProjPoint, CliError> {
    if s.trim() == "inf" {
        return Ok(ProjPoint::infinity());
    }
    // accept `re,im` and `re+imi`
    let cleaned = s.trim().trim_end_matches('i');
    let (re, im) = if let Some((a, b)) = cleaned.split_once(',') {
        (a.trim(), b.trim())
    } else if let Some((a, b)) = cleaned[1..].split_once('+') {
        (&cleaned[..1 + a.len()], b)
    } else if let Some((a, b)) = cleaned[1..].split_once('-') {
        let neg = format!("-{b}");
        return build_proj(&cleaned[..1 + a.len()], &neg, s);
    } else {
        (cleaned, "0")
    };
    build_proj(re, im, s)
}

fn build_proj(re: &str, im: &str, orig: &str) -> Result<ProjPoint, CliError> {
    let re: f64 = re.parse().map_err(|_| CliError::Config(format!("bad fiber point {orig}")))?;
    let im: f64 = im.parse().map_err(|_| CliError::Config(format!("bad fiber point {orig}")))?;
    Ok(ProjPoint::from_chart(Complex64::new(re, im)))
}

fn finish(
    mut manifest: RunManifest,
    dir: &PathBuf,
    started: Instant,
) -> Result<PathBuf, CliError> {
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(dir)?;
    Ok(dir.clone())
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), body)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn run_ball(
    cfg: Config,
    out: Option<&Path>,
    radius: Option<f64>,
    cap: Option<usize>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "ball");
    let radius = r.resolve("radius", radius, 8.0)?;
    let cap = r.resolve("cap", cap, 40usize)?;
    let group = octagon_generators();
    let ball = group.ball(radius, cap).map_err(numeric)?;
    let manifest = RunManifest::new(
        "ball",
        r.snapshot.clone(),
        0,
        radius,
        cap,
        "n/a".into(),
        "n/a".into(),
    );
    let dir = output_dir(out, "ball", manifest.short_hash())?;
    let mut csv = String::from("word,re_a,im_a,re_b,im_b,re_c,im_c,re_d,im_d,orbit_dist\n");
    for e in &ball {
        let [a, b, c, d] = e.matrix.entries();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            e.word, a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im, e.orbit_dist
        ));
    }
    write(&dir, "ball.csv", &csv)?;
    write(
        &dir,
        "ball.json",
        &serde_json::to_string_pretty(&serde_json::json!({
            "radius": radius,
            "count": ball.len(),
        }))
        .unwrap(),
    )?;
    finish(manifest, &dir, started)
}

fn run_pressure(
    cfg: Config,
    out: Option<&Path>,
    potential: Option<String>,
    window: Option<String>,
    radius: Option<f64>,
    cap: Option<usize>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "pressure");
    let window = parse_window(&r.resolve("window", window, "8:11".to_string())?)?;
    let radius = r.resolve("radius", radius, window.1)?;
    let cap = r.resolve("cap", cap, 40usize)?;
    let pot_s = r.resolve("potential", potential, "zero".to_string())?;
    let group = octagon_generators();
    let f = parse_potential(&group, &pot_s)?;
    let ball = group.ball(radius, cap).map_err(numeric)?;
    let estimate = estimate_pressure(&f, &ball, window).map_err(numeric)?;
    let manifest =
        RunManifest::new("pressure", r.snapshot.clone(), 0, radius, cap, pot_s, "n/a".into());
    let dir = output_dir(out, "pressure", manifest.short_hash())?;
    let mut body = serde_json::to_value(&estimate).unwrap();
    body["potential"] = serde_json::Value::String(f.describe());
    write(&dir, "pressure.json", &serde_json::to_string_pretty(&body).unwrap())?;
    finish(manifest, &dir, started)
}

#[allow(clippy::too_many_arguments)]
fn run_theta(
    cfg: Config,
    out: Option<&Path>,
    radius: Option<f64>,
    cap: Option<usize>,
    potential: Option<String>,
    rep: Option<String>,
    x: Option<String>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "theta");
    let radius = r.resolve("radius", radius, 8.0)?;
    let cap = r.resolve("cap", cap, 40usize)?;
    let pot_s = r.resolve("potential", potential, "zero".to_string())?;
    let rep_s = r.resolve("rep", rep, "fuchsian".to_string())?;
    let x_s = r.resolve("x", x, "0.37,0".to_string())?;
    let group = octagon_generators();
    let f = parse_potential(&group, &pot_s)?;
    let representation = parse_rep(&group, &rep_s)?;
    let x = parse_proj(&x_s)?;
    let ball = group.ball(radius, cap).map_err(numeric)?;
    let measure = theta(&representation, &f, radius, &x, &ball).map_err(numeric)?;
    let manifest = RunManifest::new("theta", r.snapshot.clone(), 0, radius, cap, pot_s, rep_s);
    let dir = output_dir(out, "theta", manifest.short_hash())?;
    write(&dir, "theta.csv", &measure.to_csv())?;
    write(&dir, "theta.json", &serde_json::to_string_pretty(&measure.to_json()).unwrap())?;
    let fig = render_measure(&measure, FigureKind::SphereScatter, &FigureStyle::default(), manifest.short_hash())
        .map_err(|e| CliError::Config(e.to_string()))?;
    write(&dir, "theta.svg", &fig.svg)?;
    finish(manifest, &dir, started)
}

#[allow(clippy::too_many_arguments)]
fn run_leaf_average(
    cfg: Config,
    out: Option<&Path>,
    radius: Option<f64>,
    potential: Option<String>,
    rep: Option<String>,
    x: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
    sphere: bool,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let section = if sphere { "sphere-average" } else { "ball-average" };
    let mut r = Resolver::new(&cfg, section);
    let radius = r.resolve("radius", radius, 8.0)?;
    let pot_s = r.resolve("potential", potential, "zero".to_string())?;
    let rep_s = r.resolve("rep", rep, "fuchsian".to_string())?;
    let x_s = r.resolve("x", x, "0.37,0".to_string())?;
    let samples = r.resolve("samples", samples, 10_000usize)?;
    let seed = r.resolve("seed", seed, 1u64)?;
    let group = octagon_generators();
    let f = parse_potential(&group, &pot_s)?;
    let representation = parse_rep(&group, &rep_s)?;
    let x = parse_proj(&x_s)?;
    let measure = if sphere {
        sphere_average(&group, &representation, &f, radius, &x, samples, seed)
    } else {
        ball_average(&group, &representation, &f, radius, &x, samples, seed)
    }
    .map_err(numeric)?;
    let manifest = RunManifest::new(section, r.snapshot.clone(), seed, radius, 0, pot_s, rep_s);
    let dir = output_dir(out, section, manifest.short_hash())?;
    write(&dir, "average.csv", &measure.to_csv())?;
    write(&dir, "fiber_marginal.csv", &measure.fiber_marginal().to_csv())?;
    finish(manifest, &dir, started)
}

fn run_ledrappier(
    cfg: Config,
    out: Option<&Path>,
    radius: Option<f64>,
    cap: Option<usize>,
    potential: Option<String>,
    window: Option<String>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "ledrappier");
    let radius = r.resolve("radius", radius, 8.0)?;
    let cap = r.resolve("cap", cap, 40usize)?;
    let pot_s = r.resolve("potential", potential, "zero".to_string())?;
    let window = parse_window(&r.resolve("window", window, format!("{}:{}", (radius - 3.0).max(4.0), radius))?)?;
    let group = octagon_generators();
    let f = parse_potential(&group, &pot_s)?;
    let ball = group.ball(radius, cap).map_err(numeric)?;
    let pressure = estimate_pressure(&f, &ball, window).map_err(numeric)?;
    let measure = ledrappier_boundary(&f, &ball, radius, pressure.value).map_err(numeric)?;
    let manifest =
        RunManifest::new("ledrappier", r.snapshot.clone(), 0, radius, cap, pot_s, "n/a".into());
    let dir = output_dir(out, "ledrappier", manifest.short_hash())?;
    write(&dir, "boundary.csv", &measure.to_csv())?;
    write(&dir, "pressure.json", &serde_json::to_string_pretty(&pressure).unwrap())?;
    let fig = render_measure(
        &measure,
        FigureKind::AngleHistogram,
        &FigureStyle::default(),
        manifest.short_hash(),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    write(&dir, "boundary.svg", &fig.svg)?;
    write(&dir, "boundary_hist.csv", &fig.csv)?;
    finish(manifest, &dir, started)
}

fn run_lyapunov(
    cfg: Config,
    out: Option<&Path>,
    radius: Option<f64>,
    cap: Option<usize>,
    potential: Option<String>,
    rep: Option<String>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "lyapunov");
    let radius = r.resolve("radius", radius, 8.0)?;
    let cap = r.resolve("cap", cap, 40usize)?;
    let pot_s = r.resolve("potential", potential, "zero".to_string())?;
    let rep_s = r.resolve("rep", rep, "fuchsian".to_string())?;
    let group = octagon_generators();
    let f = parse_potential(&group, &pot_s)?;
    let representation = parse_rep(&group, &rep_s)?;
    let ball = group.ball(radius, cap).map_err(numeric)?;
    let chi = lyapunov_top(&representation, &ball, &f, radius).map_err(numeric)?;
    let manifest = RunManifest::new("lyapunov", r.snapshot.clone(), 0, radius, cap, pot_s, rep_s);
    let dir = output_dir(out, "lyapunov", manifest.short_hash())?;
    write(
        &dir,
        "lyapunov.json",
        &serde_json::to_string_pretty(&serde_json::json!({
            "radius": radius,
            "chi_top": chi,
        }))
        .unwrap(),
    )?;
    finish(manifest, &dir, started)
}

fn run_section(
    cfg: Config,
    out: Option<&Path>,
    rep: Option<String>,
    depth: Option<f64>,
    count: Option<usize>,
    seed: Option<u64>,
    x: Option<String>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "section");
    let rep_s = r.resolve("rep", rep, "fuchsian".to_string())?;
    let depth = r.resolve("depth", depth, 25.0)?;
    let count = r.resolve("count", count, 20usize)?;
    let seed = r.resolve("seed", seed, 1u64)?;
    let x_s = r.resolve("x", x, "0.21,0.73".to_string())?;
    let group = octagon_generators();
    let representation = parse_rep(&group, &rep_s)?;
    let x0 = parse_proj(&x_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for _ in 0..count {
        let base = geodesic_point_to_boundary(
            HPoint::base(),
            BoundaryPoint::from_visual_angle(rng.gen::<f64>() * std::f64::consts::TAU),
            rng.gen::<f64>() * 1.5,
        );
        let angle = rng.gen::<f64>() * std::f64::consts::TAU;
        let v = gibbslab::hypgeom::UnitTangent::from_base_angle(base, angle);
        let s = lyapunov_section_plus(&group, &representation, &v, depth, &x0).map_err(numeric)?;
        let (u0, u1) = s.homogeneous();
        let backward = gibbslab::cocycle::fuchsian_section_plus(&v);
        rows.push(serde_json::json!({
            "base": [base.re(), base.im()],
            "angle": angle,
            "section": {"u0": [u0.re, u0.im], "u1": [u1.re, u1.im]},
            "chordal_to_backward_endpoint": s.chordal(&backward),
            "chordal_to_real_circle": s.chordal_to_real_circle(),
        }));
    }
    let manifest = RunManifest::new("section", r.snapshot.clone(), seed, 0.0, 0, "n/a".into(), rep_s);
    let dir = output_dir(out, "section", manifest.short_hash())?;
    write(
        &dir,
        "sections.json",
        &serde_json::to_string_pretty(&serde_json::json!({
            "depth": depth,
            "points": rows,
        }))
        .unwrap(),
    )?;
    finish(manifest, &dir, started)
}

fn run_limit_set(
    cfg: Config,
    out: Option<&Path>,
    radius: Option<f64>,
    cap: Option<usize>,
    rep: Option<String>,
    x: Option<String>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "limit-set");
    let radius = r.resolve("radius", radius, 9.0)?;
    let cap = r.resolve("cap", cap, 40usize)?;
    let rep_s = r.resolve("rep", rep, "fuchsian".to_string())?;
    let x_s = r.resolve("x", x, "0.37,0".to_string())?;
    let group = octagon_generators();
    let representation = parse_rep(&group, &rep_s)?;
    let x0 = parse_proj(&x_s)?;
    let ball = group.ball(radius, cap).map_err(numeric)?;
    let manifest =
        RunManifest::new("limit-set", r.snapshot.clone(), 0, radius, cap, "n/a".into(), rep_s);
    let dir = output_dir(out, "limit-set", manifest.short_hash())?;
    let fig = render_limit_set(&representation, &ball, &x0, &FigureStyle::default(), manifest.short_hash());
    write(&dir, "limit_set.svg", &fig.svg)?;
    write(&dir, "limit_set.csv", &fig.csv)?;
    finish(manifest, &dir, started)
}

fn run_basin(
    cfg: Config,
    out: Option<&Path>,
    matrices: Option<String>,
    steps: Option<usize>,
    points: Option<usize>,
    seed: Option<u64>,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut r = Resolver::new(&cfg, "basin");
    let matrices = r.resolve("matrices", matrices, "demo2".to_string())?;
    let steps = r.resolve("steps", steps, 10_000usize)?;
    let points = r.resolve("points", points, 100usize)?;
    let seed = r.resolve("seed", seed, 1u64)?;
    let cocycle = load_cocycle(&matrices)?;
    let flag = oseledets_flags(&cocycle, seed, steps.max(20_000)).map_err(numeric)?;
    let report = basin_check(&cocycle, &flag, points, steps, seed.wrapping_add(1)).map_err(numeric)?;
    let manifest =
        RunManifest::new("basin", r.snapshot.clone(), seed, 0.0, 0, "n/a".into(), matrices);
    let dir = output_dir(out, "basin", manifest.short_hash())?;
    let passes = report.generic_hits(0.05);
    let mut body = serde_json::to_value(&report).unwrap();
    body["passes_at_0.05"] = serde_json::json!(passes);
    write(&dir, "basin.json", &serde_json::to_string_pretty(&body).unwrap())?;
    finish(manifest, &dir, started)
}

fn load_cocycle(spec: &str) -> Result<DiscreteCocycle, CliError> {
    match spec {
        "demo2" => Ok(DiscreteCocycle::demo2()),
        "diag2" => Ok(DiscreteCocycle::constant_diag2()),
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| CliError::Config(format!("unknown matrices {other}; expected demo2, diag2 or file:<path>")))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
            let parsed: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad cocycle json: {e}")))?;
            let probs: Vec<f64> = serde_json::from_value(parsed["probs"].clone())
                .map_err(|e| CliError::Config(format!("bad probs: {e}")))?;
            let raw: Vec<Vec<Vec<[f64; 2]>>> = serde_json::from_value(parsed["mats"].clone())
                .map_err(|e| CliError::Config(format!("bad mats (need [[[re,im],..],..] per symbol): {e}")))?;
            let mats = raw
                .into_iter()
                .map(|rows| {
                    let d = rows.len();
                    let flat: Vec<Complex64> = rows
                        .iter()
                        .flat_map(|row| row.iter().map(|z| Complex64::new(z[0], z[1])))
                        .collect();
                    nalgebra_matrix(d, flat)
                })
                .collect();
            DiscreteCocycle::new(probs, mats).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn nalgebra_matrix(d: usize, flat: Vec<Complex64>) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_row_slice(d, d, &flat)
}
