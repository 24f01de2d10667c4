use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::Serialize;
use serde_json::json;

use vortexcorr::density::{DensityEngine, DensityField1, FormVariant};
use vortexcorr::kind::StateKind;
use vortexcorr::oracle::{self, DiscrepancyReport};
use vortexcorr::pairs::{
    angle_distribution, closed_form_distance_variant, distance_distribution, summarize, two_angle_distribution,
    DistSummary, PairDistribution, DEFAULT_ANGLE_POINTS, DEFAULT_DISTANCE_POINTS, DEFAULT_TWO_ANGLE_POINTS,
    DISTANCE_MAX,
};
use vortexcorr::sampler::{empirical_pair_stats, empirical_profile, generate_frames_with, FrameSet, PairSampler};
use vortexcorr::stats::{bin_probabilities, chi_square_gof, mean_and_standard_error, ChiSquare, Histogram};
use vortexcorr::svg::{heatmap, Plot, Series};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{Provenance, Sink};

pub const DEFAULT_PROFILE_POINTS: usize = 241;
pub const DEFAULT_FRAME_COUNT: usize = 1000;
pub const DEFAULT_BINS: usize = 40;
pub const SIGNIFICANCE: f64 = 0.01;

fn sink(command: &str, cfg: &RunConfig, flags: Vec<&str>) -> Result<Sink, CliError> {
    Sink::new(cfg.out_dir(), Provenance::new(command, cfg).with_flags(flags))
}

fn curve(dist: &PairDistribution) -> Vec<(f64, f64)> {
    dist.grid.iter().copied().zip(dist.values.iter().copied()).collect()
}

pub fn profile(cfg: &RunConfig) -> Result<Sink, CliError> {
    let (kind, state) = cfg.state()?;
    let engine = DensityEngine::new(&state);
    let field = DensityField1::from_engine_with(&engine, cfg.grid.unwrap_or(DEFAULT_PROFILE_POINTS))?;
    let mut out = sink("profile", cfg, kind.flags())?;
    let centre = field.value(field.points / 2, field.points / 2);
    if cfg.wants(Format::Csv) {
        out.csv("rho1.csv", |w| field.write_csv(w))?;
        out.csv("rho1_radial.csv", |w| {
            writeln!(w, "r,value")?;
            for (r, v) in field.radial_cut() {
                writeln!(w, "{r:.16e},{v:.16e}")?;
            }
            Ok(())
        })?;
    }
    if cfg.wants(Format::Json) {
        out.raw("rho1.bin", |w| field.write_binary(w))?;
        out.json(
            "rho1.json",
            &json!({
                "state": kind,
                "points": field.points,
                "spacing": field.spacing,
                "origin": field.coordinate(0),
                "layout": "row-major, values[iy * points + ix]",
                "dtype": "f64",
                "byte_order": "little-endian",
                "data": "rho1.bin",
                "total": field.total,
                "mean_number": engine.mean_number(),
                "centre_value": centre,
            }),
        )?;
    }
    if cfg.wants(Format::Svg) {
        // heatmap rows run along x
        let n = field.points;
        let by_x: Vec<f64> = (0..n * n).map(|k| field.value(k / n, k % n)).collect();
        out.svg(
            "rho1.svg",
            &heatmap(
                &format!("rho1 {kind}"),
                field.coordinate(0),
                field.coordinate(n - 1),
                n,
                &by_x,
            ),
        )?;
    }
    println!(
        "state {kind}: <N> = {:.12}, lattice total = {:.12}, centre = {:.3e}",
        engine.mean_number(),
        field.total,
        centre
    );
    Ok(out)
}

#[derive(Serialize)]
struct DistanceReport<'a> {
    state: StateKind,
    variable: &'static str,
    points: usize,
    normalization: f64,
    integral: f64,
    #[serde(flatten)]
    summary: &'a DistSummary,
    closed_form_max_deviation: f64,
    bose_form_corrected: bool,
    flags: &'a [String],
}

pub fn pairdist(cfg: &RunConfig, two_angle: bool, printed_bose: bool) -> Result<Sink, CliError> {
    let (kind, state) = cfg.state()?;
    if two_angle {
        return joint_angles(cfg, kind, &state);
    }
    let n = cfg.grid.unwrap_or(DEFAULT_DISTANCE_POINTS);
    let variant = if printed_bose {
        FormVariant::Printed
    } else {
        FormVariant::Corrected
    };
    let dist = distance_distribution(&state, n)?.with_flag(format!("bose-form-corrected={}", !printed_bose));
    let summary = summarize(&dist)?;
    let closed = |d: f64| closed_form_distance_variant(&kind, d, variant).unwrap_or(f64::NAN);
    let deviation = dist.sup_diff(closed);
    let mut flags = kind.flags();
    let corrected_flag = format!("bose-form-corrected={}", !printed_bose);
    flags.push(&corrected_flag);
    let mut out = sink("pairdist", cfg, flags)?;
    if cfg.wants(Format::Csv) {
        out.csv("distance.csv", |w| dist.write_csv(w))?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "distance_summary.json",
            &DistanceReport {
                state: kind,
                variable: "distance",
                points: dist.grid.len(),
                normalization: dist.normalization,
                integral: dist.integral(),
                summary: &summary,
                closed_form_max_deviation: deviation,
                bose_form_corrected: !printed_bose,
                flags: &dist.flags,
            },
        )?;
    }
    if cfg.wants(Format::Svg) {
        let grid = &dist.grid;
        let mut plot = Plot::new(format!("D(d) {kind}"), "d", "D(d)")
            .with(Series::line("quadrature", curve(&dist)))
            .with(Series::line(
                if printed_bose {
                    "closed form (printed)"
                } else {
                    "closed form"
                },
                grid.iter().map(|d| (*d, closed(*d))).collect(),
            ));
        if !printed_bose && kind == (StateKind::BoseFock { n: 1, m: 1 }) {
            let p = |d: f64| closed_form_distance_variant(&kind, d, FormVariant::Printed).unwrap_or(f64::NAN);
            plot = plot.with(Series::line(
                "closed form (printed)",
                grid.iter().map(|d| (*d, p(*d))).collect(),
            ));
        }
        out.svg("distance.svg", &plot.render())?;
    }
    println!(
        "state {kind}: mean = {:.10}, E[d²] = {:.10}, variance = {:.10}, maxima = {:?}",
        summary.mean, summary.second_moment, summary.variance, summary.local_maxima
    );
    Ok(out)
}

fn joint_angles(cfg: &RunConfig, kind: StateKind, state: &vortexcorr::fock::QuantumState) -> Result<Sink, CliError> {
    let dist = two_angle_distribution(state, cfg.grid.unwrap_or(DEFAULT_TWO_ANGLE_POINTS))?;
    let mut out = sink("pairdist", cfg, kind.flags())?;
    let peak = dist.values.iter().cloned().fold(0.0, f64::max);
    if cfg.wants(Format::Csv) {
        out.csv("two_angle.csv", |w| dist.write_csv(w))?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "two_angle_summary.json",
            &json!({
                "state": kind,
                "variable": "two-angle",
                "points_per_axis": dist.grid.len(),
                "normalization": dist.normalization,
                "integral": dist.integral(),
                "max": peak,
                "flags": dist.flags,
            }),
        )?;
    }
    if cfg.wants(Format::Svg) {
        out.svg(
            "two_angle.svg",
            &heatmap(&format!("D(θ, ϑ) {kind}"), 0.0, TAU, dist.grid.len(), &dist.values),
        )?;
    }
    println!(
        "state {kind}: joint angle law on {0}×{0}, integral = {1:.12}, max = {peak:.10}",
        dist.grid.len(),
        dist.integral()
    );
    Ok(out)
}

pub fn pairangle(cfg: &RunConfig) -> Result<Sink, CliError> {
    let (kind, state) = cfg.state()?;
    let dist = angle_distribution(&state, cfg.grid.unwrap_or(DEFAULT_ANGLE_POINTS))?;
    let summary = summarize(&dist)?;
    let mut out = sink("pairangle", cfg, kind.flags())?;
    if cfg.wants(Format::Csv) {
        out.csv("angle.csv", |w| dist.write_csv(w))?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "angle_summary.json",
            &json!({
                "state": kind,
                "variable": "relative-angle",
                "points": dist.grid.len(),
                "normalization": dist.normalization,
                "integral": dist.integral(),
                "mean": summary.mean,
                "second_moment": summary.second_moment,
                "local_maxima": summary.local_maxima,
                "min": dist.values.iter().cloned().fold(f64::INFINITY, f64::min),
                "max": dist.values.iter().cloned().fold(0.0, f64::max),
                "flags": dist.flags,
            }),
        )?;
    }
    if cfg.wants(Format::Svg) {
        let g = &dist.grid;
        let plot = Plot::new(format!("D(Δθ) {kind}"), "Δθ", "D(Δθ)")
            .with(Series::line("quadrature", curve(&dist)))
            .with(Series::line(
                "(2/π) sin²",
                g.iter().map(|x| (*x, 2.0 / PI * x.sin().powi(2))).collect(),
            ))
            .with(Series::line(
                "(2/π) cos²",
                g.iter().map(|x| (*x, 2.0 / PI * x.cos().powi(2))).collect(),
            ))
            .with(Series::line("1/π", g.iter().map(|x| (*x, 1.0 / PI)).collect()));
        out.svg("angle.svg", &plot.render())?;
    }
    let (lo, hi) = dist
        .values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    println!(
        "state {kind}: relative angle law min = {lo:.10}, max = {hi:.10}, maxima = {:?}",
        summary.local_maxima
    );
    Ok(out)
}

#[derive(Serialize)]
struct Gof {
    #[serde(flatten)]
    chi_square: ChiSquare,
    significance: f64,
    passes: bool,
}

fn gof(hist: &Histogram, f: impl Fn(f64) -> f64) -> Gof {
    let probs = bin_probabilities(hist, f, 16);
    let c = chi_square_gof(&hist.counts, &probs, hist.underflow + hist.overflow);
    Gof {
        chi_square: c,
        significance: SIGNIFICANCE,
        passes: c.passes(SIGNIFICANCE),
    }
}

fn write_hist(w: &mut dyn Write, hist: &Histogram, f: &dyn Fn(f64) -> f64) -> vortexcorr::Result<()> {
    writeln!(w, "lo,hi,count,density,expected")?;
    let density = hist.density();
    let probs = bin_probabilities(hist, f, 16);
    for i in 0..hist.bins() {
        let (a, b) = hist.edges(i);
        writeln!(
            w,
            "{a:.16e},{b:.16e},{},{:.16e},{:.16e}",
            hist.counts[i],
            density[i],
            probs[i] / (b - a)
        )?;
    }
    Ok(())
}

pub fn frames(cfg: &RunConfig, stats: bool) -> Result<Sink, CliError> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Config("frames needs --seed; runs never draw implicit entropy".into()))?;
    let (kind, state) = cfg.state()?;
    let count = cfg.count.unwrap_or(DEFAULT_FRAME_COUNT);
    let sampler = PairSampler::new(&state)?;
    let set = generate_frames_with(
        &sampler,
        count,
        seed,
        serde_json::to_value(kind).map_err(vortexcorr::Error::from)?,
    )?;
    let mut out = sink("frames", cfg, kind.flags())?;
    let mut header = set.header();
    header.provenance = out.provenance.to_map();
    out.raw("frames.csv", |w| set.write_with_header(w, &header))?;
    println!(
        "state {kind}: {} frames, seed {seed}, angular acceptance {:.4}",
        set.len(),
        set.acceptance_rate
    );
    if stats {
        frame_stats(cfg, kind, &state, &set, &mut out)?;
    }
    Ok(out)
}

fn frame_stats(
    cfg: &RunConfig,
    kind: StateKind,
    state: &vortexcorr::fock::QuantumState,
    set: &FrameSet,
    out: &mut Sink,
) -> Result<(), CliError> {
    let bins = cfg.bins.unwrap_or(DEFAULT_BINS);
    let pairs = empirical_pair_stats(set, bins)?;
    let profile = empirical_profile(set, bins)?;
    let (mean, se) = mean_and_standard_error(&pairs.distances);
    let law = distance_distribution(state, DEFAULT_DISTANCE_POINTS)?;
    let exact_mean = summarize(&law)?.mean;
    let dist_f = law.evaluator().expect("distance law has an evaluator");
    let distance_gof = gof(&pairs.distance, |d| dist_f(d));
    let angle_law = angle_distribution(state, DEFAULT_ANGLE_POINTS).ok();
    let angle_gof = angle_law.as_ref().map(|a| {
        let f = a.evaluator().expect("angle law has an evaluator");
        gof(&pairs.angle, move |x| f(x))
    });
    let z = if se > 0.0 { (mean - exact_mean) / se } else { 0.0 };
    if cfg.wants(Format::Json) {
        out.json(
            "frames_stats.json",
            &json!({
                "state": kind,
                "frames": set.len(),
                "seed": set.seed,
                "acceptance_rate": set.acceptance_rate,
                "mean_distance": mean,
                "standard_error": se,
                "quadrature_mean_distance": exact_mean,
                "z_score": z,
                "distance_chi_square": distance_gof,
                "angle_chi_square": angle_gof,
                "bins": bins,
            }),
        )?;
    }
    if cfg.wants(Format::Csv) {
        out.csv("frames_distance.csv", |w| {
            write_hist(w, &pairs.distance, &|d| dist_f(d))
        })?;
        if let Some(a) = &angle_law {
            let f = a.evaluator().expect("angle law has an evaluator");
            out.csv("frames_angle.csv", |w| write_hist(w, &pairs.angle, &|x| f(x)))?;
        }
        out.csv("frames_profile.csv", |w| {
            writeln!(w, "x,y,count")?;
            for ix in 0..profile.bins {
                for iy in 0..profile.bins {
                    writeln!(
                        w,
                        "{:.16e},{:.16e},{}",
                        profile.center(ix),
                        profile.center(iy),
                        profile.count(ix, iy)
                    )?;
                }
            }
            Ok(())
        })?;
    }
    if cfg.wants(Format::Svg) {
        let density = pairs.distance.density();
        let bars: Vec<(f64, f64)> = (0..pairs.distance.bins())
            .map(|i| (pairs.distance.center(i), density[i]))
            .collect();
        let line: Vec<(f64, f64)> = (0..=400)
            .map(|k| DISTANCE_MAX * k as f64 / 400.0)
            .map(|d| (d, dist_f(d)))
            .collect();
        let plot = Plot::new(format!("pair distances {kind}"), "d", "density")
            .with(Series::bars("frames", bars))
            .with(Series::line("quadrature", line));
        out.svg("frames_distance.svg", &plot.render())?;
        let n = profile.bins;
        let by_x: Vec<f64> = (0..n * n).map(|k| profile.count(k / n, k % n) as f64).collect();
        out.svg(
            "frames_profile.svg",
            &heatmap(&format!("pooled detections {kind}"), profile.lo, profile.hi, n, &by_x),
        )?;
    }
    println!(
        "mean distance {mean:.6} ± {se:.6} (quadrature {exact_mean:.6}, z = {z:.2}); distance χ² p = {:.4}{}",
        distance_gof.chi_square.p_value,
        angle_gof
            .as_ref()
            .map(|g| format!(", angle χ² p = {:.4}", g.chi_square.p_value))
            .unwrap_or_default()
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    resolution: usize,
    passed: bool,
    reports: &'a [DiscrepancyReport],
}

pub fn verify(cfg: &RunConfig) -> Result<Sink, CliError> {
    let resolution = cfg.grid.unwrap_or(oracle::DEFAULT_RESOLUTION);
    let reports = oracle::verify_all(resolution)?;
    let failures: Vec<&DiscrepancyReport> = reports.iter().filter(|r| r.is_failure()).collect();
    let mut out = sink("verify", cfg, vec![])?;
    if cfg.wants(Format::Json) {
        out.json(
            "verify.json",
            &VerifyOutput {
                resolution,
                passed: failures.is_empty(),
                reports: &reports,
            },
        )?;
    }
    if cfg.wants(Format::Csv) {
        out.csv("verify.csv", |w| {
            writeln!(w, "claim,category,verdict,max_deviation")?;
            for r in &reports {
                writeln!(
                    w,
                    "{},{},{},{:.16e}",
                    r.claim.replace(',', ";"),
                    serde_json::to_value(r.category)?.as_str().unwrap_or_default(),
                    r.verdict,
                    r.max_deviation
                )?;
            }
            Ok(())
        })?;
    }
    print!("{}", oracle::format_table(&reports));
    if !failures.is_empty() {
        let names: Vec<&str> = failures.iter().map(|r| r.claim.as_str()).collect();
        return Err(CliError::Verification(names.join(", ")));
    }
    Ok(out)
}
