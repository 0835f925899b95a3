//! Test oracles written independently of the library's propagation code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use pwsim::elements::{AttenuatorSpec, BeamSplitterSpec, Element, PhaseShifterSpec, RotatorSpec};
use pwsim::fock::{FockState, Occupation, Polarization, Registry, SpatialMode};

pub fn fact(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Output state of `input` under creation-operator map `u` (`u[(out, in)]`),
/// expanding one photon at a time into monomials of output operators.
pub fn expand(u: &DMatrix<Complex64>, input: &FockState) -> FockState {
    let reg = input.registry().clone();
    let m = reg.len();
    let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for (occ, amp) in input.terms() {
        let norm: f64 = occ.counts().iter().map(|&n| fact(n)).product::<f64>().sqrt();
        let mut poly: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        poly.insert(vec![0; m], *amp / norm);
        for (i, &n) in occ.counts().iter().enumerate() {
            for _ in 0..n {
                let mut next = BTreeMap::new();
                for (mono, c) in &poly {
                    for j in 0..m {
                        let w = u[(j, i)];
                        if w == Complex64::default() {
                            continue;
                        }
                        let mut k = mono.clone();
                        k[j] += 1;
                        *next.entry(k).or_insert(Complex64::default()) += c * w;
                    }
                }
                poly = next;
            }
        }
        for (mono, c) in poly {
            let s: f64 = mono.iter().map(|&n| fact(n)).product::<f64>().sqrt();
            *out.entry(mono).or_default() += c * s;
        }
    }
    FockState::from_terms(reg, out.into_iter().map(|(k, v)| (Occupation::new(k), v))).unwrap()
}

/// Probability that lossy detectors on `detected` paths report one photon
/// per path (`pnr`) or at least one click per path, by enumerating every
/// binomial loss outcome per mode.
pub fn loss_acceptance(state: &FockState, detected: &[&str], eta: f64, pnr: bool) -> f64 {
    let reg = state.registry();
    let idx: Vec<[usize; 2]> = detected
        .iter()
        .map(|d| {
            let s = SpatialMode::new(d);
            [reg.require(&s.with(Polarization::H)).unwrap(), reg.require(&s.with(Polarization::V)).unwrap()]
        })
        .collect();
    let binom = |n: u32, k: u32| fact(n) / (fact(k) * fact(n - k)) * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32);
    let mut total = 0.0;
    for (occ, a) in state.terms() {
        // Distribution of detected photons per path.
        let mut accept = a.norm_sqr();
        for [h, v] in &idx {
            let (nh, nv) = (occ[*h], occ[*v]);
            let mut p = 0.0;
            for kh in 0..=nh {
                for kv in 0..=nv {
                    let ok = if pnr { kh + kv == 1 } else { kh + kv >= 1 };
                    if ok {
                        p += binom(nh, kh) * binom(nv, kv);
                    }
                }
            }
            accept *= p;
        }
        total += accept;
    }
    total / state.norm_sqr()
}

/// Splitter matrix written straight from the transformation rules, on
/// `(in H, in V, refl H, refl V, trans H, trans V)` columns/rows, for
/// an implicit vacuum second port mapped onto `in`.
pub fn printed_splitter(r2h: f64, r2v: f64, phi: f64, psi: f64) -> DMatrix<Complex64> {
    let (rh, th, rv, tv) = (r2h.sqrt(), (1.0 - r2h).sqrt(), r2v.sqrt(), (1.0 - r2v).sqrt());
    let mut u = DMatrix::from_element(6, 6, Complex64::default());
    u[(2, 0)] = Complex64::new(rh, 0.0);
    u[(4, 0)] = Complex64::new(th, 0.0);
    u[(3, 1)] = Complex64::from_polar(rv, phi);
    u[(5, 1)] = Complex64::from_polar(tv, psi);
    u
}

pub fn random_element(rng: &mut ChaCha8Rng, spatial: &[&str], aux: &mut Vec<String>) -> Element {
    let pick = |rng: &mut ChaCha8Rng| spatial[rng.random_range(0..spatial.len())];
    match rng.random_range(0..4) {
        0 => {
            let a = pick(rng);
            let mut b = pick(rng);
            while b == a {
                b = pick(rng);
            }
            let mut c = pick(rng);
            while c == a || c == b {
                c = pick(rng);
            }
            let bs = BeamSplitterSpec::new(a, b, c, rng.random(), rng.random())
                .unwrap()
                .with_v_phases(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
                .with_h_phases(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            Element::BeamSplitter(bs)
        }
        1 => Element::Phase(PhaseShifterSpec { target: pick(rng).into(), theta_v: rng.random_range(-6.0..6.0) }),
        2 => Element::Rotator(RotatorSpec { target: pick(rng).into(), angle: rng.random_range(-3.2..3.2) }),
        _ => {
            let t = pick(rng);
            let name = format!("aux-r{}", aux.len());
            aux.push(name.clone());
            let mut a = AttenuatorSpec::new(t, rng.random(), rng.random());
            a.aux = name.into();
            Element::Attenuator(a)
        }
    }
}

pub struct RandomCircuit {
    pub registry: Registry,
    pub elements: Vec<Element>,
    pub input: FockState,
}

/// Random element sequence over `3..=5` paths (plus loss paths) and a
/// random superposition of up to `max_photons` photons in the first paths.
pub fn random_circuit(rng: &mut ChaCha8Rng, max_photons: u32) -> RandomCircuit {
    const NAMES: [&str; 5] = ["a", "b", "c", "d", "e"];
    let n = rng.random_range(3..=5);
    let spatial = &NAMES[..n];
    let mut aux = Vec::new();
    let count = rng.random_range(1..=6);
    let elements: Vec<Element> = (0..count).map(|_| random_element(rng, spatial, &mut aux)).collect();
    let mut all: Vec<String> = spatial.iter().map(|s| s.to_string()).collect();
    all.extend(aux);
    let registry = Registry::from_spatial(&all).unwrap();
    let m = registry.len();
    let mut terms = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let mut occ = vec![0u32; m];
        let photons = rng.random_range(1..=max_photons);
        for _ in 0..photons {
            // Only the non-loss paths carry input photons.
            occ[rng.random_range(0..2 * n)] += 1;
        }
        terms.push((Occupation::new(occ), Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
    }
    let raw = FockState::from_terms(registry.clone(), terms).unwrap();
    let input = raw.normalize().unwrap().0;
    RandomCircuit { registry, elements, input }
}

/// Largest value of `f` on the grid `{0, 1/n, ..., 1}` over `dims` axes,
/// other axes fixed at `fixed`.
pub fn dense_grid_max(n: usize, active: &[usize], fixed: [f64; 3], f: impl Fn([f64; 3]) -> f64) -> ([f64; 3], f64) {
    let mut best = (fixed, f64::NEG_INFINITY);
    let mut idx = vec![0usize; active.len()];
    loop {
        let mut x = fixed;
        for (a, &k) in active.iter().enumerate() {
            x[k] = idx[a] as f64 / n as f64;
        }
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
        let mut a = 0;
        loop {
            if a == idx.len() {
                return best;
            }
            idx[a] += 1;
            if idx[a] <= n {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}
