//! Chain and sample-quality diagnostics, and the limiting acceptance curve of the
//! Barker-adjusted Langevin corrector in high dimension.

use std::io::Write;
use std::sync::OnceLock;

use gauss_quad::GaussHermite;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, StateVector};
use crate::sampler::{run_corrector_chain, CorrectorKernel, LevelStats};
use crate::targets::{gaussian_oracle, ScoreOracle};

/// Mean squared jump between consecutive states.
pub fn esjd(chain: &[StateVector]) -> Result<f64> {
    if chain.len() < 2 {
        return Err(Error::domain("ESJD needs at least two states"));
    }
    let total: f64 = chain.windows(2).map(|w| dist_sq(&w[1], &w[0])).sum();
    Ok(total / (chain.len() - 1) as f64)
}

/// Mean and standard error from non-overlapping batch means.
pub fn batch_means(values: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || values.len() < batches {
        return Err(Error::domain(format!(
            "batch means need >= 2 batches and >= 1 value per batch, got {} values in {batches} batches",
            values.len()
        )));
    }
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((grand, (var / batches as f64).sqrt()))
}

const HERMITE_NODES: usize = 256;

fn hermite() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(HERMITE_NODES.try_into().expect("nonzero")))
}

fn sigmoid(z: f64) -> f64 {
    crate::decision::sigmoid(z)
}

/// Limiting acceptance `A(ℓ) = E[1 / (1 + e^{-W})]` with `W ~ N(-σ²/2, σ²)`, `σ² = ℓ⁶/16`.
///
/// Gauss–Hermite with 256 nodes: relative error below 1e-10 for `ℓ ≤ 2.5`, degrading to
/// about 1e-6 at `ℓ = 3` where the sigmoid's transition is narrower than the node spacing.
pub fn barker_limit_a(ell: f64) -> Result<f64> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::domain(format!(
            "scaling constant must be > 0, got {ell}"
        )));
    }
    let var = ell.powi(6) / 16.0;
    let sd = var.sqrt();
    let mean = -0.5 * var;
    // ∫ e^{-x²} g(μ + √2 σ x) dx / √π.
    let integral = hermite().integrate(|x| sigmoid(mean + std::f64::consts::SQRT_2 * sd * x));
    Ok(integral / std::f64::consts::PI.sqrt())
}

/// Limiting efficiency `ℓ² A(ℓ)`.
pub fn scaling_efficiency(ell: f64) -> Result<f64> {
    Ok(ell * ell * barker_limit_a(ell)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub ell: f64,
    pub acceptance: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCurve {
    pub points: Vec<ScalingPoint>,
    /// Best grid point.
    pub grid_best: ScalingPoint,
    /// Maximiser refined by golden-section search.
    pub optimum: ScalingPoint,
}

fn scaling_point(ell: f64) -> Result<ScalingPoint> {
    let acceptance = barker_limit_a(ell)?;
    Ok(ScalingPoint {
        ell,
        acceptance,
        efficiency: ell * ell * acceptance,
    })
}

/// Evaluates the efficiency curve on `grid` and refines its maximiser.
pub fn optimal_scaling_curve(grid: &[f64]) -> Result<ScalingCurve> {
    if grid.is_empty() {
        return Err(Error::domain("scaling grid must be nonempty"));
    }
    let points = grid
        .iter()
        .map(|&l| scaling_point(l))
        .collect::<Result<Vec<_>>>()?;
    let best_idx = (0..points.len())
        .max_by(|&a, &b| points[a].efficiency.total_cmp(&points[b].efficiency))
        .expect("nonempty");
    let grid_best = points[best_idx];
    let optimum = if points.len() < 3 {
        grid_best
    } else {
        let mut sorted: Vec<f64> = grid.to_vec();
        sorted.sort_by(f64::total_cmp);
        let pos = sorted.partition_point(|&l| l < grid_best.ell);
        let lo = sorted[pos.saturating_sub(1)];
        let hi = sorted[(pos + 1).min(sorted.len() - 1)];
        let ell = golden_section_max(
            |l| scaling_efficiency(l).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            1e-10,
        );
        let refined = scaling_point(ell)?;
        if refined.efficiency >= grid_best.efficiency {
            refined
        } else {
            grid_best
        }
    };
    Ok(ScalingCurve {
        points,
        grid_best,
        optimum,
    })
}

/// Maximiser of a unimodal function on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

/// One row of the finite-dimension scaling study.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalScaling {
    pub dim: usize,
    pub ell: f64,
    pub h: f64,
    pub kernel: String,
    pub proposals: u64,
    pub acceptance: f64,
    pub esjd: f64,
    /// `"ok"` or the error that stopped the chain.
    pub status: String,
}

/// Runs the corrector on `N(0, I_d)` from stationarity at `h = ℓ² d^{-1/3}`.
pub fn empirical_scaling<R: Rng + ?Sized>(
    dim: usize,
    ell: f64,
    kernel: &CorrectorKernel,
    proposals: usize,
    rng: &mut R,
) -> Result<EmpiricalScaling> {
    if dim == 0 || proposals == 0 {
        return Err(Error::domain(
            "empirical scaling needs dim >= 1 and proposals >= 1",
        ));
    }
    let h = ell * ell * (dim as f64).powf(-1.0 / 3.0);
    let mut oracle: ScoreOracle = gaussian_oracle(vec![0.0; dim], 1.0)?;
    let x0: StateVector = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let (stats, status) =
        match run_corrector_chain(&mut oracle, kernel, 0.0, h, x0, 0, proposals, rng, |_| {}) {
            Ok(run) => (run.stats, "ok".to_string()),
            Err(e) if e.is_config() => return Err(e),
            Err(e) => (LevelStats::default(), e.to_string()),
        };
    Ok(EmpiricalScaling {
        dim,
        ell,
        h,
        kernel: kernel.kind.name(),
        proposals: stats.proposals,
        acceptance: stats.acceptance_rate(),
        esjd: stats.esjd(),
        status,
    })
}

/// Summary of nearest-neighbour distances from samples to a reference cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub quantile: f64,
    pub distance: f64,
    pub mean: f64,
}

/// Uniform-grid index over 2D points for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct GridIndex {
    points: Vec<[f64; 2]>,
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    /// CSR layout: points of cell `c` are `order[starts[c]..starts[c + 1]]`.
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl GridIndex {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("reference cloud must be nonempty"));
        }
        if points.iter().any(|p| p.len() != 2) {
            return Err(Error::domain("grid index needs 2D points"));
        }
        let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = [(hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12)];
        // About two points per cell.
        let cell = (span[0] * span[1] * 2.0 / pts.len() as f64)
            .sqrt()
            .max(span[0].max(span[1]) / 4096.0);
        let nx = ((span[0] / cell).floor() as usize + 1).max(1);
        let ny = ((span[1] / cell).floor() as usize + 1).max(1);
        let mut index = GridIndex {
            points: pts,
            origin: lo,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            order: Vec::new(),
        };
        let cells: Vec<usize> = index
            .points
            .iter()
            .map(|p| {
                let (i, j) = index.cell_of(p);
                j * nx + i
            })
            .collect();
        for &c in &cells {
            index.starts[c + 1] += 1;
        }
        for c in 0..nx * ny {
            index.starts[c + 1] += index.starts[c];
        }
        let mut fill = index.starts.clone();
        index.order = vec![0; cells.len()];
        for (p, &c) in cells.iter().enumerate() {
            index.order[fill[c]] = p;
            fill[c] += 1;
        }
        Ok(index)
    }

    fn cell_of(&self, p: &[f64; 2]) -> (usize, usize) {
        let clamp = |v: f64, n: usize| -> usize {
            if v.is_nan() || v <= 0.0 {
                0
            } else {
                (v as usize).min(n - 1)
            }
        };
        (
            clamp((p[0] - self.origin[0]) / self.cell, self.nx),
            clamp((p[1] - self.origin[1]) / self.cell, self.ny),
        )
    }

    /// Distance from `q` to its nearest indexed point.
    pub fn nearest_distance(&self, q: &[f64]) -> f64 {
        let q = [q[0], q[1]];
        let (ci, cj) = self.cell_of(&q);
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            let lo_i = ci as isize - ring as isize;
            let hi_i = ci as isize + ring as isize;
            let lo_j = cj as isize - ring as isize;
            let hi_j = cj as isize + ring as isize;
            for j in lo_j..=hi_j {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                let on_edge_row = j == lo_j || j == hi_j;
                let step = if on_edge_row {
                    1
                } else {
                    (hi_i - lo_i).max(1) as usize
                };
                let mut i = lo_i;
                while i <= hi_i {
                    if i >= 0 && i < self.nx as isize {
                        let c = j as usize * self.nx + i as usize;
                        for &p in &self.order[self.starts[c]..self.starts[c + 1]] {
                            let pt = self.points[p];
                            best = best.min((pt[0] - q[0]).powi(2) + (pt[1] - q[1]).powi(2));
                        }
                    }
                    i += step as isize;
                }
            }
            let reach = ring as f64 * self.cell;
            if best <= reach * reach {
                break;
            }
        }
        best.sqrt()
    }
}

/// Brute-force nearest-neighbour distance, any dimension.
pub fn nearest_distance_brute(q: &[f64], reference: &[Vec<f64>]) -> f64 {
    reference
        .iter()
        .map(|r| dist_sq(q, r))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// `q`-quantile (nearest rank) and mean of sample-to-reference nearest-neighbour distances.
pub fn containment_distance(
    samples: &[Vec<f64>],
    reference: &[Vec<f64>],
    q: f64,
) -> Result<Containment> {
    if samples.is_empty() || reference.is_empty() {
        return Err(Error::domain("containment distance needs nonempty clouds"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!(
            "quantile must lie in (0, 1], got {q}"
        )));
    }
    let dim = reference[0].len();
    if samples.iter().chain(reference).any(|p| p.len() != dim) {
        return Err(Error::domain("clouds disagree in dimension"));
    }
    let mut d: Vec<f64> = if dim == 2 {
        let index = GridIndex::new(reference)?;
        samples.iter().map(|s| index.nearest_distance(s)).collect()
    } else {
        samples
            .iter()
            .map(|s| nearest_distance_brute(s, reference))
            .collect()
    };
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.sort_by(f64::total_cmp);
    let rank = ((q * d.len() as f64).ceil() as usize).clamp(1, d.len());
    Ok(Containment {
        quantile: q,
        distance: d[rank - 1],
        mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Errors at or below this are floored before taking logs.
pub const ERROR_FLOOR: f64 = 1e-16;

/// Least-squares slope of `log error` against `log h`.
pub fn order_fit(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 4 {
        return Err(Error::domain(format!(
            "order fit needs >= 4 pairs, got {}",
            pairs.len()
        )));
    }
    if let Some(&(h, e)) = pairs
        .iter()
        .find(|(h, e)| !(*h > 0.0 && h.is_finite()) || !(*e >= 0.0 && e.is_finite()))
    {
        return Err(Error::domain(format!(
            "order fit needs positive steps and nonnegative errors, got ({h}, {e})"
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, e)| e.max(ERROR_FLOOR).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain(
            "order fit needs at least two distinct step sizes",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(OrderFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header: `ell,acceptance,efficiency`.
pub fn write_scaling_csv<W: Write>(points: &[ScalingPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ell", "acceptance", "efficiency"])?;
    for p in points {
        w.write_record([num(p.ell), num(p.acceptance), num(p.efficiency)])?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `d,ell,h,kernel,proposals,acceptance,esjd,status`.
pub fn write_empirical_scaling_csv<W: Write>(rows: &[EmpiricalScaling], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "d",
        "ell",
        "h",
        "kernel",
        "proposals",
        "acceptance",
        "esjd",
        "status",
    ])?;
    for r in rows {
        w.write_record([
            r.dim.to_string(),
            num(r.ell),
            num(r.h),
            r.kernel.clone(),
            r.proposals.to_string(),
            num(r.acceptance),
            num(r.esjd),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `x0,x1,...`, one row per sample.
pub fn write_samples_csv<W: Write>(samples: &[StateVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = samples.first().map_or(0, Vec::len);
    w.write_record((0..dim).map(|i| format!("x{i}")))?;
    for s in samples {
        w.write_record(s.iter().map(|v| num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `t,acceptance_rate,mean_rounds,mean_queries`.
pub fn write_levels_csv<W: Write>(levels: &[LevelStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "acceptance_rate", "mean_rounds", "mean_queries"])?;
    for l in levels {
        w.write_record([
            num(l.t),
            num(l.acceptance_rate()),
            num(l.mean_rounds()),
            num(l.mean_queries()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `label,quantile,containment_distance,mean_distance`.
pub fn write_containment_csv<W: Write>(rows: &[(String, Containment)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "quantile", "containment_distance", "mean_distance"])?;
    for (label, c) in rows {
        w.write_record([label.clone(), num(c.quantile), num(c.distance), num(c.mean)])?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `rule,h,error`.
pub fn write_order_table_csv<W: Write>(rows: &[(String, f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rule", "h", "error"])?;
    for (rule, h, e) in rows {
        w.write_record([rule.clone(), num(*h), num(*e)])?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `h,error`.
pub fn write_order_csv<W: Write>(pairs: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "error"])?;
    for (h, e) in pairs {
        w.write_record([num(*h), num(*e)])?;
    }
    w.flush()?;
    Ok(())
}
