use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate, TriggerPolicy};
use super::target::WTarget;
use crate::schemes::{build_scheme, PerturbationSpec, Scheme};
use crate::{Error, Result};

/// Smallest finite-difference step accepted by [`fidelity_hessian`].
pub const MIN_HESSIAN_STEP: f64 = 1e-5;
const MAX_SCAN_ROWS: usize = 1_000_000;

/// Fidelity to the equal-weight W state with splitter errors `spec`.
/// `None` when the conditioning events never happen.
pub fn perturbed_fidelity(scheme: Scheme, policy: TriggerPolicy, spec: &PerturbationSpec) -> Result<Option<f64>> {
    let circuit = build_scheme(scheme, &spec.to_params()?)?;
    Ok(evaluate(&circuit, policy, &WTarget::equal())?.fidelity)
}

fn fidelity_at(scheme: Scheme, policy: TriggerPolicy, d: [f64; 3]) -> Result<f64> {
    perturbed_fidelity(scheme, policy, &PerturbationSpec::symmetric(scheme, d))?
        .ok_or_else(|| Error::InvalidParameter(format!("no heralded events at delta = {d:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hessian {
    pub scheme: Scheme,
    pub policy: TriggerPolicy,
    pub step: f64,
    /// `d^2 F / d delta_j d delta_k` at the optimum.
    pub matrix: [[f64; 3]; 3],
    /// Values implied by the printed expansion, when there is one.
    pub printed: Option<[[f64; 3]; 3]>,
}

/// Second derivatives of the fidelity in `delta_k = delta_kH - delta_kV`
/// by central differences with step `h`, probing `delta_kH = +delta_k/2`,
/// `delta_kV = -delta_k/2`.
pub fn fidelity_hessian(scheme: Scheme, policy: TriggerPolicy, h: f64) -> Result<Hessian> {
    if !(h.is_finite() && h >= MIN_HESSIAN_STEP) {
        return Err(Error::InvalidParameter(format!("finite-difference step {h} below {MIN_HESSIAN_STEP}")));
    }
    let mut stencil: Vec<[f64; 3]> = vec![[0.0; 3]];
    for j in 0..3 {
        for s in [h, -h] {
            let mut d = [0.0; 3];
            d[j] = s;
            stencil.push(d);
        }
        for k in j + 1..3 {
            for (sj, sk) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                let mut d = [0.0; 3];
                d[j] = sj;
                d[k] = sk;
                stencil.push(d);
            }
        }
    }
    let values: Vec<f64> = stencil.par_iter().map(|d| fidelity_at(scheme, policy, *d)).collect::<Result<_>>()?;
    let at = |d: [f64; 3]| values[stencil.iter().position(|s| *s == d).expect("stencil point")];
    let f0 = values[0];
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut p = [0.0; 3];
        p[j] = h;
        let mut q = [0.0; 3];
        q[j] = -h;
        m[j][j] = (at(p) - 2.0 * f0 + at(q)) / (h * h);
        for k in j + 1..3 {
            let e = |sj: f64, sk: f64| {
                let mut d = [0.0; 3];
                d[j] = sj;
                d[k] = sk;
                at(d)
            };
            let v = (e(h, h) - e(h, -h) - e(-h, h) + e(-h, -h)) / (4.0 * h * h);
            m[j][k] = v;
            m[k][j] = v;
        }
    }
    Ok(Hessian { scheme, policy, step: h, matrix: m, printed: printed_hessian(scheme) })
}

/// Hessian of the printed second-order expansions
/// `1 - (27 d2^2 + 16 d3^2)/24` and `1 - (2/9)((2 d1 + d2)^2 + 3 d3^2)`.
pub fn printed_hessian(scheme: Scheme) -> Option<[[f64; 3]; 3]> {
    match scheme {
        Scheme::I => Some([[0.0, 0.0, 0.0], [0.0, -27.0 / 12.0, 0.0], [0.0, 0.0, -16.0 / 12.0]]),
        Scheme::II => Some([[-16.0 / 9.0, -8.0 / 9.0, 0.0], [-8.0 / 9.0, -4.0 / 9.0, 0.0], [0.0, 0.0, -4.0 / 3.0]]),
        Scheme::Sps => None,
    }
}

/// Inclusive range `min, min + step, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn fixed(x: f64) -> Self {
        AxisRange { min: x, max: x, step: 1.0 }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let AxisRange { min, max, step } = *self;
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::InvalidParameter(format!("bad scan range [{min}, {max}]")));
        }
        if min == max {
            return Ok(vec![min]);
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("scan step {step} must be positive")));
        }
        let n = ((max - min) / step + 1e-9).floor();
        if n + 1.0 > MAX_SCAN_ROWS as f64 {
            return Err(Error::InvalidParameter("scan range too fine".into()));
        }
        Ok((0..=n as usize).map(|i| min + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub delta: [f64; 3],
    /// NaN where the perturbed reflectivities leave `[0, 1]` or nothing is
    /// heralded.
    pub fidelity: f64,
}

/// One fitted monomial coefficient of `F(delta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitTerm {
    pub term: String,
    pub fitted: f64,
    pub printed: Option<f64>,
}

/// Least-squares polynomial (total degree <= 4) through the finite rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialFit {
    pub constant: f64,
    /// Second-order coefficients, compared with the printed expansion.
    pub quadratic: Vec<FitTerm>,
    pub rms_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityScan {
    pub scheme: Scheme,
    pub policy: TriggerPolicy,
    pub rows: Vec<ScanRow>,
    pub fit: Option<PolynomialFit>,
}

/// Fidelity over the product grid of `ranges` (symmetric H/V split).
pub fn scan_fidelity(scheme: Scheme, policy: TriggerPolicy, ranges: [AxisRange; 3]) -> Result<FidelityScan> {
    let axes: Vec<Vec<f64>> = ranges.iter().map(AxisRange::values).collect::<Result<_>>()?;
    let total = axes.iter().map(Vec::len).product::<usize>();
    if total > MAX_SCAN_ROWS {
        return Err(Error::InvalidParameter(format!("scan has {total} rows (limit {MAX_SCAN_ROWS})")));
    }
    let mut grid = Vec::with_capacity(total);
    for &a in &axes[0] {
        for &b in &axes[1] {
            for &c in &axes[2] {
                grid.push([a, b, c]);
            }
        }
    }
    let rows: Vec<ScanRow> = grid
        .par_iter()
        .map(|d| {
            let spec = PerturbationSpec::symmetric(scheme, *d);
            let fid = match spec.to_params() {
                Err(_) => f64::NAN,
                Ok(_) => perturbed_fidelity(scheme, policy, &spec)?.unwrap_or(f64::NAN),
            };
            Ok(ScanRow { delta: *d, fidelity: fid })
        })
        .collect::<Result<_>>()?;
    let distinct: Vec<usize> = axes.iter().map(Vec::len).collect();
    let fit = fit_polynomial(scheme, &rows, &distinct);
    Ok(FidelityScan { scheme, policy, rows, fit })
}

fn term_name(e: [u32; 3]) -> String {
    let mut parts = Vec::new();
    for (k, &p) in e.iter().enumerate() {
        match p {
            0 => {}
            1 => parts.push(format!("delta{}", k + 1)),
            _ => parts.push(format!("delta{}^{p}", k + 1)),
        }
    }
    parts.join("*")
}

fn fit_polynomial(scheme: Scheme, rows: &[ScanRow], distinct: &[usize]) -> Option<PolynomialFit> {
    let finite: Vec<&ScanRow> = rows.iter().filter(|r| r.fidelity.is_finite()).collect();
    let mut exps: Vec<[u32; 3]> = Vec::new();
    for a in 0..5u32 {
        for b in 0..5u32 {
            for c in 0..5u32 {
                let e = [a, b, c];
                if a + b + c <= 4 && e.iter().zip(distinct).all(|(&p, &n)| (p as usize) < n) {
                    exps.push(e);
                }
            }
        }
    }
    exps.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(*e)));
    // Short scans drop the highest degrees first, keeping at least the quadratics.
    while exps.len() + 1 > finite.len() && exps.last().is_some_and(|e| e.iter().sum::<u32>() > 2) {
        let top = exps.last().map(|e| e.iter().sum::<u32>());
        exps.retain(|e| Some(e.iter().sum::<u32>()) != top);
    }
    if exps.len() < 2 || finite.len() < exps.len() + 1 {
        return None;
    }
    let mut scale = [1.0f64; 3];
    for k in 0..3 {
        let m = finite.iter().map(|r| r.delta[k].abs()).fold(0.0, f64::max);
        if m > 0.0 {
            scale[k] = m;
        }
    }
    let mono = |d: &[f64; 3], e: &[u32; 3]| -> f64 { (0..3).map(|k| (d[k] / scale[k]).powi(e[k] as i32)).product() };
    let a = DMatrix::from_fn(finite.len(), exps.len(), |i, j| mono(&finite[i].delta, &exps[j]));
    let y = DVector::from_iterator(finite.len(), finite.iter().map(|r| r.fidelity));
    let coef = a.clone().svd(true, true).solve(&y, 1e-13).ok()?;
    let resid = &a * &coef - &y;
    let unscale = |j: usize| coef[j] / (0..3).map(|k| scale[k].powi(exps[j][k] as i32)).product::<f64>();
    let printed = printed_hessian(scheme);
    let quadratic = exps
        .iter()
        .enumerate()
        .filter(|(_, e)| e.iter().sum::<u32>() == 2)
        .map(|(j, e)| {
            let idx: Vec<usize> = (0..3).flat_map(|k| std::iter::repeat_n(k, e[k] as usize)).collect();
            let p = printed.map(|h| if idx[0] == idx[1] { h[idx[0]][idx[0]] / 2.0 } else { h[idx[0]][idx[1]] });
            FitTerm { term: term_name(*e), fitted: unscale(j), printed: p }
        })
        .collect();
    Some(PolynomialFit {
        constant: unscale(0),
        quadratic,
        rms_residual: (resid.norm_squared() / finite.len() as f64).sqrt(),
        points: finite.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_guard() {
        assert!(fidelity_hessian(Scheme::I, TriggerPolicy::D1V, 1e-6).is_err());
        assert!(fidelity_hessian(Scheme::I, TriggerPolicy::D1V, f64::NAN).is_err());
    }

    #[test]
    fn range_values() {
        let r = AxisRange { min: -0.05, max: 0.05, step: 0.01 };
        assert_eq!(r.values().unwrap().len(), 11);
        assert_eq!(AxisRange::fixed(0.0).values().unwrap(), vec![0.0]);
        assert!(AxisRange { min: 0.1, max: 0.0, step: 0.01 }.values().is_err());
        assert!(AxisRange { min: 0.0, max: 0.1, step: 0.0 }.values().is_err());
    }

    #[test]
    fn zero_range_scan_is_one_ideal_row() {
        let s = scan_fidelity(Scheme::I, TriggerPolicy::D1V, [AxisRange::fixed(0.0); 3]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!((s.rows[0].fidelity - 1.0).abs() < 1e-12);
        assert!(s.fit.is_none());
    }

    #[test]
    fn infeasible_rows_are_nan() {
        // r3^2 = 1/2 +- 0.6 leaves [0, 1].
        let r = [AxisRange::fixed(0.0), AxisRange::fixed(0.0), AxisRange { min: 1.2, max: 1.2, step: 1.0 }];
        let s = scan_fidelity(Scheme::I, TriggerPolicy::D1V, r).unwrap();
        assert!(s.rows[0].fidelity.is_nan());
    }

    #[test]
    fn term_names() {
        assert_eq!(term_name([0, 2, 0]), "delta2^2");
        assert_eq!(term_name([1, 1, 0]), "delta1*delta2");
    }
}
