//! Toy 2D point clouds.
//!
//! Fixed parametric constructions: an Archimedean spiral, Neal-style funnel marginals,
//! a Sierpinski triangle from a 10-step chaos game, a 5-blade pinwheel and the usual
//! 4×4 checkerboard on `[-2, 2]²`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetName {
    Spiral,
    Funnel,
    Sierpinski,
    Pinwheel,
    Checkerboard,
}

impl DatasetName {
    pub const ALL: [DatasetName; 5] = [
        DatasetName::Spiral,
        DatasetName::Funnel,
        DatasetName::Sierpinski,
        DatasetName::Pinwheel,
        DatasetName::Checkerboard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Spiral => "spiral",
            DatasetName::Funnel => "funnel",
            DatasetName::Sierpinski => "sierpinski",
            DatasetName::Pinwheel => "pinwheel",
            DatasetName::Checkerboard => "checkerboard",
        }
    }
}

impl std::fmt::Display for DatasetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetName::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown dataset {s:?} (expected spiral, funnel, sierpinski, pinwheel or checkerboard)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset2D {
    pub name: DatasetName,
    pub points: Vec<Vec<f64>>,
    /// `[x_min, x_max, y_min, y_max]`.
    pub bbox: [f64; 4],
}

impl Dataset2D {
    pub fn new(name: DatasetName, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("dataset must be nonempty"));
        }
        if points
            .iter()
            .any(|p| p.len() != 2 || p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::domain("dataset points must be finite 2-vectors"));
        }
        let mut bbox = [
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ];
        for p in &points {
            bbox[0] = bbox[0].min(p[0]);
            bbox[1] = bbox[1].max(p[0]);
            bbox[2] = bbox[2].min(p[1]);
            bbox[3] = bbox[3].max(p[1]);
        }
        Ok(Dataset2D { name, points, bbox })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) const SPIRAL_TURNS_ANGLE: f64 = 4.0 * PI;
pub(crate) const SPIRAL_RADIUS: f64 = 2.0;
pub(crate) const SPIRAL_NOISE: f64 = 0.03;

const PINWHEEL_BLADES: usize = 5;
const PINWHEEL_RADIAL_STD: f64 = 0.3;
const PINWHEEL_TANGENTIAL_STD: f64 = 0.1;
const PINWHEEL_RATE: f64 = 0.25;

const SIERPINSKI_ITERATIONS: usize = 10;

pub fn generate_dataset(name: DatasetName, n: usize, seed: u64) -> Result<Dataset2D> {
    if n == 0 {
        return Err(Error::domain("dataset size must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| match name {
            DatasetName::Spiral => spiral(&mut rng),
            DatasetName::Funnel => funnel(&mut rng),
            DatasetName::Sierpinski => sierpinski(&mut rng),
            DatasetName::Pinwheel => pinwheel(&mut rng),
            DatasetName::Checkerboard => checkerboard(&mut rng),
        })
        .collect();
    Dataset2D::new(name, points)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Radius proportional to angle; `√u` spreads points evenly along the arc.
fn spiral<R: Rng>(rng: &mut R) -> Vec<f64> {
    let theta = SPIRAL_TURNS_ANGLE * rng.random::<f64>().sqrt();
    let radius = SPIRAL_RADIUS * theta / SPIRAL_TURNS_ANGLE;
    vec![
        radius * theta.cos() + SPIRAL_NOISE * normal(rng),
        radius * theta.sin() + SPIRAL_NOISE * normal(rng),
    ]
}

/// `v ~ N(0, 1)`, `x | v ~ N(0, e^v)`; returned as `(x, v)`.
fn funnel<R: Rng>(rng: &mut R) -> Vec<f64> {
    let v = normal(rng);
    let x = (0.5 * v).exp() * normal(rng);
    vec![x, v]
}

fn sierpinski<R: Rng>(rng: &mut R) -> Vec<f64> {
    const VERTICES: [[f64; 2]; 3] = [[-1.5, -1.3], [1.5, -1.3], [0.0, 1.3]];
    let mut p = [rng.random_range(-1.5..1.5), rng.random_range(-1.3..1.3)];
    for _ in 0..SIERPINSKI_ITERATIONS {
        let v = VERTICES[rng.random_range(0..3)];
        p = [0.5 * (p[0] + v[0]), 0.5 * (p[1] + v[1])];
    }
    p.to_vec()
}

fn pinwheel<R: Rng>(rng: &mut R) -> Vec<f64> {
    let blade = rng.random_range(0..PINWHEEL_BLADES);
    let radial = 1.0 + PINWHEEL_RADIAL_STD * normal(rng);
    let tangential = PINWHEEL_TANGENTIAL_STD * normal(rng);
    let angle = 2.0 * PI * blade as f64 / PINWHEEL_BLADES as f64 + PINWHEEL_RATE * radial.exp();
    let (s, c) = angle.sin_cos();
    vec![c * radial - s * tangential, s * radial + c * tangential]
}

/// Occupied unit squares are those with `⌊x⌋ + ⌊y⌋` even.
fn checkerboard<R: Rng>(rng: &mut R) -> Vec<f64> {
    let x: f64 = rng.random_range(-2.0..2.0);
    let lower = if rng.random::<bool>() { 0.0 } else { -2.0 };
    let y = rng.random::<f64>() + lower + (x.floor() as i64).rem_euclid(2) as f64;
    vec![x, y]
}

pub fn in_checkerboard(p: &[f64]) -> bool {
    let (x, y) = (p[0], p[1]);
    (-2.0..2.0).contains(&x)
        && (-2.0..2.0).contains(&y)
        && (x.floor() as i64 + y.floor() as i64).rem_euclid(2) == 0
}

/// Writes rows `x,y` without a header, 17 significant digits.
pub fn write_points_csv<W: Write>(points: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for p in points {
        w.write_record(p.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    r.records()
        .map(|rec| {
            let rec = rec?;
            rec.iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::config(format!("bad number {f:?}: {e}")))
                })
                .collect()
        })
        .collect()
}
