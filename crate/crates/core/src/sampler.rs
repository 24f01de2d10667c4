//! Monte Carlo single-shot frames.
//!
//! Every state in this crate lives in the two ring modes, whose amplitudes
//! share the radial profile `r e^{-r²/2}`. The pair density therefore
//! factorizes as `r² s² e^{-r²-s²} A(θ, ϑ)`, and a pair is drawn by two
//! independent inverse-CDF radii followed by rejection sampling of the two
//! angles against a constant majorant of `A`.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityEngine;
use crate::error::{Error, Result};
use crate::fock::QuantumState;
use crate::modes::Point2D;
use crate::pairs::{ring_radial_cdf, ring_radial_density, RADIUS_MAX};
use crate::par::{self, IntoParallelIterator, ParallelIterator};
use crate::rng::{stream_rng, StreamRng};
use crate::stats::{Histogram, Histogram2D};

pub const GENERATOR_VERSION: &str = concat!("vortexcorr-frames/", env!("CARGO_PKG_VERSION"));
pub const METHOD: &str = "radial-inverse-cdf+angular-rejection";

const RADIAL_KNOTS: usize = 10_000;
const MAJORANT_GRID: usize = 256;
const MAJORANT_MARGIN: f64 = 1.01;
const MIN_ACCEPTANCE: f64 = 0.01;
const MAX_TRIES: u32 = 100_000;

/// Inverse CDF of the ring radial law truncated at `r = 6`.
#[derive(Debug)]
pub struct RingRadius {
    mass: f64,
    knots: Vec<f64>,
}

fn ring_radius_table() -> &'static RingRadius {
    static TABLE: OnceLock<RingRadius> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mass = ring_radial_cdf(RADIUS_MAX);
        let knots = (0..=RADIAL_KNOTS)
            .map(|k| bisect_cdf(mass * k as f64 / RADIAL_KNOTS as f64, 0.0, RADIUS_MAX))
            .collect();
        RingRadius { mass, knots }
    })
}

fn bisect_cdf(target: f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if ring_radial_cdf(m) < target {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}

impl RingRadius {
    /// Radius with CDF `u` (of the truncated law), `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let target = u * self.mass;
        let t = u * RADIAL_KNOTS as f64;
        let i = (t as usize).min(RADIAL_KNOTS - 1);
        let (mut a, mut b) = (self.knots[i], self.knots[i + 1]);
        let mut r = a + (t - i as f64) * (b - a);
        // safeguarded Newton inside the knot bracket
        for _ in 0..50 {
            let f = ring_radial_cdf(r) - target;
            if f < 0.0 {
                a = r;
            } else {
                b = r;
            }
            let slope = ring_radial_density(r);
            let mut next = if slope > 0.0 { r - f / slope } else { 0.5 * (a + b) };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            let step = (next - r).abs();
            r = next;
            if step < 1e-12 || b - a < 1e-12 {
                break;
            }
        }
        r
    }
}

/// Inverse CDF of a tabulated density, linear in the cumulative trapezoid.
#[derive(Debug, Clone)]
pub struct TableSampler {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl TableSampler {
    pub fn new(grid: &[f64], values: &[f64]) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidState(
                "density table needs matching grid and values".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(grid.len());
        cdf.push(0.0);
        for i in 1..grid.len() {
            let area = 0.5 * (values[i].max(0.0) + values[i - 1].max(0.0)) * (grid[i] - grid[i - 1]);
            cdf.push(cdf[i - 1] + area);
        }
        let total = *cdf.last().unwrap();
        if total <= 0.0 {
            return Err(Error::NoPairs(total));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(TableSampler {
            grid: grid.to_vec(),
            cdf,
        })
    }

    pub fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.grid[i - 1] + f * (self.grid[i] - self.grid[i - 1])
    }
}

#[derive(Debug, Clone)]
pub enum RadialSampler {
    Ring(&'static RingRadius),
    Table(TableSampler),
}

impl RadialSampler {
    pub fn ring() -> Self {
        RadialSampler::Ring(ring_radius_table())
    }

    pub fn sample(&self, u: f64) -> f64 {
        match self {
            RadialSampler::Ring(r) => r.sample(u),
            RadialSampler::Table(t) => t.sample(u),
        }
    }
}

/// Pair sampler for one state.
#[derive(Debug, Clone)]
pub struct PairSampler {
    engine: DensityEngine,
    radius: &'static RingRadius,
    majorant: f64,
    expected_acceptance: f64,
}

impl PairSampler {
    pub fn new(state: &QuantumState) -> Result<Self> {
        Self::from_engine(DensityEngine::new(state))
    }

    pub fn from_engine(engine: DensityEngine) -> Result<Self> {
        let n2 = engine.pair_number();
        if n2 <= 1e-14 {
            return Err(Error::NoPairs(n2));
        }
        let unit: Vec<_> = (0..MAJORANT_GRID)
            .map(|k| {
                engine.mode_values(Point2D::from_polar(
                    1.0,
                    std::f64::consts::TAU * k as f64 / MAJORANT_GRID as f64,
                ))
            })
            .collect();
        let rows = par::map_range(MAJORANT_GRID, |i| {
            let row: Vec<f64> = unit.iter().map(|v| engine.rho2_values(unit[i], *v).re).collect();
            (
                row.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                row.iter().sum::<f64>(),
            )
        });
        let peak = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        let mean = rows.iter().map(|r| r.1).sum::<f64>() / (MAJORANT_GRID * MAJORANT_GRID) as f64;
        if peak <= 0.0 {
            return Err(Error::NoPairs(n2));
        }
        let majorant = peak * MAJORANT_MARGIN;
        let expected_acceptance = mean / majorant;
        if expected_acceptance < MIN_ACCEPTANCE {
            return Err(Error::SamplingMethod {
                rate: expected_acceptance,
            });
        }
        Ok(PairSampler {
            engine,
            radius: ring_radius_table(),
            majorant,
            expected_acceptance,
        })
    }

    /// Acceptance probability of the angular rejection step.
    pub fn expected_acceptance(&self) -> f64 {
        self.expected_acceptance
    }

    fn angular_weight(&self, theta: f64, vartheta: f64) -> f64 {
        let u = self.engine.mode_values(Point2D::from_polar(1.0, theta));
        let v = self.engine.mode_values(Point2D::from_polar(1.0, vartheta));
        self.engine.rho2_values(u, v).re
    }

    /// One position pair and the number of angular proposals it took.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(Point2D, Point2D, u32)> {
        let r1 = self.radius.sample(rng.random());
        let r2 = self.radius.sample(rng.random());
        let tau = std::f64::consts::TAU;
        for tries in 1..=MAX_TRIES {
            let t: f64 = rng.random::<f64>() * tau;
            let v: f64 = rng.random::<f64>() * tau;
            let u: f64 = rng.random();
            if u * self.majorant < self.angular_weight(t, v) {
                return Ok((Point2D::from_polar(r1, t), Point2D::from_polar(r2, v), tries));
            }
        }
        Err(Error::SamplingMethod { rate: 0.0 })
    }
}

/// Draws one pair of positions from `rho2 / <:N²:>`.
pub fn sample_pair(sampler: &PairSampler, stream: &mut StreamRng) -> Result<(Point2D, Point2D)> {
    sampler.sample(stream).map(|(p, q, _)| (p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_index: u64,
    pub rng_stream_id: u64,
    pub points: [Point2D; 2],
}

/// Header written before the CSV body of a frame file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub format: String,
    pub descriptor: serde_json::Value,
    pub seed: u64,
    pub count: u64,
    pub method: String,
    pub acceptance_rate: f64,
    pub generator_version: String,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub provenance: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub descriptor: serde_json::Value,
    pub seed: u64,
    pub frames: Vec<Frame>,
    pub method: String,
    /// Accepted over proposed angle pairs.
    pub acceptance_rate: f64,
}

impl FrameSet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn header(&self) -> FrameHeader {
        FrameHeader {
            format: "vortexcorr-frames".into(),
            descriptor: self.descriptor.clone(),
            seed: self.seed,
            count: self.frames.len() as u64,
            method: self.method.clone(),
            acceptance_rate: self.acceptance_rate,
            generator_version: GENERATOR_VERSION.into(),
            provenance: serde_json::Map::new(),
        }
    }

    /// One JSON header line, then `frame_index,x1,y1,x2,y2` rows.
    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        self.write_with_header(w, &self.header())
    }

    pub fn write_with_header<W: Write>(&self, mut w: W, header: &FrameHeader) -> Result<()> {
        writeln!(w, "{}", serde_json::to_string(header)?)?;
        writeln!(w, "frame_index,x1,y1,x2,y2")?;
        for f in &self.frames {
            let [p, q] = f.points;
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                f.frame_index, p.x, p.y, q.x, q.y
            )?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<(FrameHeader, FrameSet)> {
        let mut lines = BufReader::new(r).lines();
        let header: FrameHeader = match lines.next() {
            Some(l) => serde_json::from_str(&l?)?,
            None => return Err(Error::Parse("missing frame header".into())),
        };
        match lines.next() {
            Some(l)
                if l.as_ref()
                    .map(|s| s.trim() == "frame_index,x1,y1,x2,y2")
                    .unwrap_or(false) => {}
            _ => return Err(Error::Parse("missing CSV column header".into())),
        }
        let mut frames = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Parse(format!("bad frame row: {line}")));
            }
            let idx: u64 = cols[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad frame index: {}", cols[0])))?;
            let v: Vec<f64> = cols[1..]
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad coordinate: {c}")))
                })
                .collect::<Result<_>>()?;
            frames.push(Frame {
                frame_index: idx,
                rng_stream_id: idx,
                points: [Point2D::new(v[0], v[1]), Point2D::new(v[2], v[3])],
            });
        }
        let set = FrameSet {
            descriptor: header.descriptor.clone(),
            seed: header.seed,
            frames,
            method: header.method.clone(),
            acceptance_rate: header.acceptance_rate,
        };
        Ok((header, set))
    }
}

/// `count` independent frames; frame `k` draws from stream `k` of `seed`.
pub fn generate_frames(state: &QuantumState, count: usize, seed: u64) -> Result<FrameSet> {
    let sampler = PairSampler::new(state)?;
    generate_frames_with(&sampler, count, seed, serde_json::Value::Null)
}

pub fn generate_frames_with(
    sampler: &PairSampler,
    count: usize,
    seed: u64,
    descriptor: serde_json::Value,
) -> Result<FrameSet> {
    let drawn: Vec<Result<(Frame, u32)>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let (p, q, tries) = sampler.sample(&mut rng)?;
            Ok((
                Frame {
                    frame_index: k as u64,
                    rng_stream_id: k as u64,
                    points: [p, q],
                },
                tries,
            ))
        })
        .collect();
    let mut frames = Vec::with_capacity(count);
    let mut proposals: u64 = 0;
    for d in drawn {
        let (f, t) = d?;
        proposals += t as u64;
        frames.push(f);
    }
    let acceptance_rate = if proposals == 0 {
        sampler.expected_acceptance()
    } else {
        count as f64 / proposals as f64
    };
    Ok(FrameSet {
        descriptor,
        seed,
        frames,
        method: METHOD.into(),
        acceptance_rate,
    })
}

/// Pooled 2D histogram of every detected point on `[-6, 6]²`.
pub fn empirical_profile(frames: &FrameSet, bins: usize) -> Result<Histogram2D> {
    if frames.is_empty() {
        return Err(Error::EmptyFrames);
    }
    let mut h = Histogram2D::new(-RADIUS_MAX, RADIUS_MAX, bins);
    for f in &frames.frames {
        for p in f.points {
            h.add(p.x, p.y);
        }
    }
    Ok(h)
}

/// Relative polar angle folded to `[0, π]`.
pub fn relative_angle(p: Point2D, q: Point2D) -> f64 {
    let d = (p.theta() - q.theta()).abs();
    if d > std::f64::consts::PI {
        std::f64::consts::TAU - d
    } else {
        d
    }
}

/// Per-pair distances and relative angles with their histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPairStats {
    pub distances: Vec<f64>,
    pub angles: Vec<f64>,
    pub distance: Histogram,
    pub angle: Histogram,
}

fn pair_stats(pairs: impl Iterator<Item = (Point2D, Point2D)>, bins: usize) -> EmpiricalPairStats {
    let (distances, angles): (Vec<f64>, Vec<f64>) = pairs.map(|(p, q)| (p.distance(&q), relative_angle(p, q))).unzip();
    EmpiricalPairStats {
        distance: Histogram::from_samples(0.0, crate::pairs::DISTANCE_MAX, bins, distances.iter().copied()),
        angle: Histogram::from_samples(0.0, std::f64::consts::PI, bins, angles.iter().copied()),
        distances,
        angles,
    }
}

/// Pair statistics computed within each frame.
pub fn empirical_pair_stats(frames: &FrameSet, bins: usize) -> Result<EmpiricalPairStats> {
    if frames.is_empty() {
        return Err(Error::EmptyFrames);
    }
    Ok(pair_stats(
        frames.frames.iter().map(|f| (f.points[0], f.points[1])),
        bins,
    ))
}

/// Pair statistics after pooling: the first point of frame `k` is paired
/// with the second point of frame `k + 1`.
pub fn pooled_pair_stats(frames: &FrameSet, bins: usize) -> Result<EmpiricalPairStats> {
    if frames.len() < 2 {
        return Err(Error::EmptyFrames);
    }
    let n = frames.len();
    Ok(pair_stats(
        (0..n).map(|k| (frames.frames[k].points[0], frames.frames[(k + 1) % n].points[1])),
        bins,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kind::StateKind;

    #[test]
    fn ring_radius_inverts_cdf() {
        let r = RadialSampler::ring();
        let mass = ring_radial_cdf(RADIUS_MAX);
        for k in 0..200 {
            let u = k as f64 / 200.0 + 1e-4;
            let x = r.sample(u);
            assert!((ring_radial_cdf(x) - u * mass).abs() < 1e-12, "{u}");
        }
        assert_eq!(r.sample(0.0), 0.0);
        let top = r.sample(1.0 - 1e-16);
        assert!(top > 4.0 && top <= RADIUS_MAX);
    }

    #[test]
    fn table_sampler_uniform() {
        let t = TableSampler::new(&[0.0, 1.0, 2.0], &[0.5, 0.5, 0.5]).unwrap();
        assert!((t.sample(0.25) - 0.5).abs() < 1e-15);
        assert!((t.sample(0.75) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn coherent_accepts_nearly_always() {
        let s = PairSampler::new(&StateKind::unit_coherent().build().unwrap()).unwrap();
        assert!(s.expected_acceptance() > 0.98);
        let f = PairSampler::new(&StateKind::FermiFock.build().unwrap()).unwrap();
        assert!(f.expected_acceptance() > 0.25);
    }

    #[test]
    fn frames_are_deterministic() {
        let s = StateKind::BoseFock { n: 1, m: 1 }.build().unwrap();
        assert!(generate_frames(&s, 0, 1).unwrap().is_empty());
        let a = generate_frames(&s, 500, 7).unwrap();
        let b = generate_frames(&s, 500, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_frames(&s, 500, 8).unwrap();
        assert_ne!(a.frames, c.frames);
        for f in &a.frames {
            for p in f.points {
                assert!(p.x.abs() <= 6.0 && p.y.abs() <= 6.0);
            }
        }
    }

    #[test]
    fn frame_file_round_trip() {
        let s = StateKind::FermiFock.build().unwrap();
        let a = generate_frames(&s, 20, 3).unwrap();
        let mut buf = Vec::new();
        a.write(&mut buf).unwrap();
        let (h, b) = FrameSet::read(buf.as_slice()).unwrap();
        assert_eq!(h.count, 20);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_frames_error() {
        let s = StateKind::FermiFock.build().unwrap();
        let e = generate_frames(&s, 0, 3).unwrap();
        assert!(matches!(empirical_profile(&e, 10), Err(Error::EmptyFrames)));
        assert!(matches!(empirical_pair_stats(&e, 10), Err(Error::EmptyFrames)));
    }

    #[test]
    fn relative_angle_folding() {
        let p = Point2D::from_polar(1.0, 0.1);
        let q = Point2D::from_polar(1.0, 6.2);
        assert!((relative_angle(p, q) - (std::f64::consts::TAU - 6.1)).abs() < 1e-12);
    }
}
