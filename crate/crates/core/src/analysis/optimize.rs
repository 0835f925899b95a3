use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fastprob::detection_probability;
use crate::schemes::{build_scheme, Scheme, SchemeParams};
use crate::{Error, Result};

/// Grid spacing of the initial scan.
pub const GRID_RESOLUTION: f64 = 1.0 / 64.0;
const SIMPLEX_MAX_ITER: usize = 2000;
const SIMPLEX_VALUE_TOL: f64 = 1e-16;
const SIMPLEX_SIZE_TOL: f64 = 1e-10;
const PAPER_MATCH_TOL: f64 = 1e-6;

/// Box on `r_k^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { lo: [0.0; 3], hi: [1.0; 3] }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for k in 0..3 {
            let (lo, hi) = (self.lo[k], self.hi[k]);
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::InvalidParameter(format!("empty bounds on r{}^2: [{lo}, {hi}]", k + 1)));
            }
            if lo < 0.0 || hi > 1.0 {
                return Err(Error::InvalidParameter(format!("bounds on r{}^2 leave [0, 1]", k + 1)));
            }
        }
        Ok(())
    }

    fn clamp(&self, k: usize, x: f64) -> f64 {
        x.clamp(self.lo[k], self.hi[k])
    }

    fn axis(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = (self.lo[k], self.hi[k]);
        let mut v = vec![lo];
        let first = (lo / GRID_RESOLUTION).ceil() as i64;
        let last = (hi / GRID_RESOLUTION).floor() as i64;
        v.extend((first..=last).map(|j| j as f64 * GRID_RESOLUTION));
        v.push(hi);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub stage: &'static str,
    pub r2: [f64; 3],
    pub value: f64,
}

/// Published maximum for a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaperClaim {
    pub r2: [f64; 3],
    pub value: f64,
}

pub fn paper_claim(scheme: Scheme) -> PaperClaim {
    let r2 = match scheme {
        Scheme::I => [0.25, 1.0 / 3.0, 0.5],
        Scheme::II | Scheme::Sps => [0.5; 3],
    };
    PaperClaim { r2, value: 3.0 / 32.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub scheme: Scheme,
    pub best_params: SchemeParams,
    /// Reflectivities of the active splitters; inactive entries are fixed.
    pub best_r2: [f64; 3],
    pub best_value: f64,
    pub grid_points: usize,
    pub evaluations: usize,
    pub trace: Vec<TracePoint>,
    pub paper_claim: PaperClaim,
    /// Simulated probability at the published parameters.
    pub value_at_claim: f64,
    /// Whether the maximum found equals the published one within 1e-6.
    pub matches_paper: bool,
}

/// Post-selection probability at polarization-independent reflectivities.
pub fn probability_at(scheme: Scheme, r2: [f64; 3]) -> Result<f64> {
    detection_probability(&build_scheme(scheme, &SchemeParams::uniform(r2))?)
}

/// Maximizes the post-selection probability over `bounds`: a full grid
/// at spacing 1/64 (plus the box edges) followed by Nelder-Mead started
/// from the best grid point. Ties go to the lexicographically smallest
/// parameters.
pub fn optimize_probability(scheme: Scheme, bounds: &Bounds) -> Result<OptimizationResult> {
    bounds.validate()?;
    let active = scheme.active_splitters().to_vec();
    let claim = paper_claim(scheme);
    let mut base = [0.0; 3];
    for k in 0..3 {
        base[k] = bounds.clamp(k, claim.r2[k]);
    }

    let mut points: Vec<[f64; 3]> = vec![base];
    for &k in &active {
        let axis = bounds.axis(k);
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p;
                    q[k] = x;
                    q
                })
            })
            .collect();
    }
    points.sort_by(lex);
    let values: Vec<f64> = points.par_iter().map(|p| probability_at(scheme, *p)).collect::<Result<_>>()?;
    let mut best = 0;
    for i in 1..points.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    let grid_points = points.len();
    let mut trace = vec![TracePoint { stage: "grid", r2: points[best], value: values[best] }];

    let mut evaluations = grid_points;
    let mut f = |x: &[f64; 3]| -> Result<f64> {
        evaluations += 1;
        probability_at(scheme, *x)
    };
    let refined = nelder_mead(&active, bounds, points[best], values[best], &mut f, &mut trace)?;

    let best_params = SchemeParams::uniform(refined);
    let best_value = build_scheme(scheme, &best_params)?.postselect()?.probability;
    let value_at_claim = build_scheme(scheme, &SchemeParams::uniform(claim.r2))?.postselect()?.probability;
    let matches_paper = (best_value - claim.value).abs() <= PAPER_MATCH_TOL
        && active.iter().all(|&k| (refined[k] - claim.r2[k]).abs() <= 1e-3);
    Ok(OptimizationResult {
        scheme,
        best_params,
        best_r2: refined,
        best_value,
        grid_points,
        evaluations,
        trace,
        paper_claim: claim,
        value_at_claim,
        matches_paper,
    })
}

fn lex(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Higher value first, then lexicographic parameters.
fn rank(a: &([f64; 3], f64), b: &([f64; 3], f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| lex(&a.0, &b.0))
}

fn nelder_mead(
    active: &[usize],
    bounds: &Bounds,
    start: [f64; 3],
    start_value: f64,
    f: &mut impl FnMut(&[f64; 3]) -> Result<f64>,
    trace: &mut Vec<TracePoint>,
) -> Result<[f64; 3]> {
    let project = |mut x: [f64; 3]| {
        for &k in active {
            x[k] = bounds.clamp(k, x[k]);
        }
        x
    };
    let mut simplex = vec![(start, start_value)];
    for &k in active {
        let mut x = start;
        x[k] += if start[k] + GRID_RESOLUTION <= bounds.hi[k] { GRID_RESOLUTION } else { -GRID_RESOLUTION };
        let x = project(x);
        simplex.push((x, f(&x)?));
    }
    let combine = |a: &[f64; 3], b: &[f64; 3], t: f64| {
        let mut x = *a;
        for &k in active {
            x[k] = a[k] + t * (b[k] - a[k]);
        }
        project(x)
    };
    for _ in 0..SIMPLEX_MAX_ITER {
        simplex.sort_by(rank);
        trace.push(TracePoint { stage: "simplex", r2: simplex[0].0, value: simplex[0].1 });
        let spread = simplex[0].1 - simplex[simplex.len() - 1].1;
        let best = simplex[0].0;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| active.iter().map(move |&k| (x[k] - best[k]).abs()))
            .fold(0.0, f64::max);
        if spread <= SIMPLEX_VALUE_TOL && size <= SIMPLEX_SIZE_TOL {
            break;
        }
        let n = simplex.len() - 1;
        let mut centroid = [0.0; 3];
        for (x, _) in &simplex[..n] {
            for k in 0..3 {
                centroid[k] += x[k] / n as f64;
            }
        }
        let worst = simplex[n];
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = f(&reflected)?;
        if fr > simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = f(&expanded)?;
            simplex[n] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (toward, fw) = if fr > worst.1 { (reflected, fr) } else { (worst.0, worst.1) };
            let contracted = combine(&centroid, &toward, 0.5);
            let fc = f(&contracted)?;
            if fc > fw {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x = combine(&best, &v.0, 0.5);
                    *v = (x, f(&x)?);
                }
            }
        }
    }
    simplex.sort_by(rank);
    Ok(simplex[0].0)
}
