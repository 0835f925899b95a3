//! Optical elements as linear maps on creation operators.
//!
//! Every element becomes a [`ModeMap`]: a unitary matrix `M` over the state
//! registry with `a_i^dag -> sum_j M[(j, i)] a_j^dag`. A multi-photon ket is
//! transformed by substituting each creation operator and re-expanding the
//! product with exact multinomial and `sqrt(n!)` factors, so beam-splitter
//! coefficients such as `sqrt(2) r t` on the `|1>|1>` branch fall out of the
//! single-photon map instead of being tabulated.
//!
//! Beam splitters and attenuators only prescribe where the photons of their
//! input modes go. The remaining columns are filled with a unitary
//! completion (unused input port, and output modes sent back to the input
//! path), which is immaterial whenever the output modes start empty.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::{FockState, ModeLabel, Occupation, Polarization, Registry, SpatialMode};
use crate::{Error, Result};

/// Tolerance for `r^2 + t^2 = 1` and for unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSplitterSpec {
    pub input: SpatialMode,
    /// Second input port. When absent the unused port is implicit.
    pub second_input: Option<SpatialMode>,
    pub reflected: SpatialMode,
    pub transmitted: SpatialMode,
    /// Intensity reflectivities as given; kept so the wire form round-trips.
    pub r2_h: f64,
    pub r2_v: f64,
    pub r_h: f64,
    pub t_h: f64,
    pub r_v: f64,
    pub t_v: f64,
    /// Phase on the reflected V photon.
    pub phi: f64,
    /// Phase on the transmitted V photon.
    pub psi: f64,
    /// Phase on the reflected H photon; zero for the W-state schemes.
    pub phi_h: f64,
    /// Phase on the transmitted H photon; zero for the W-state schemes.
    pub psi_h: f64,
}

impl BeamSplitterSpec {
    /// Lossless splitter from intensity reflectivities `r_L^2`.
    pub fn new(
        input: impl Into<SpatialMode>,
        reflected: impl Into<SpatialMode>,
        transmitted: impl Into<SpatialMode>,
        r2_h: f64,
        r2_v: f64,
    ) -> Result<Self> {
        for (name, r2) in [("r2_H", r2_h), ("r2_V", r2_v)] {
            if !(0.0..=1.0).contains(&r2) {
                return Err(Error::InvalidParameter(format!("{name} = {r2} outside [0, 1]")));
            }
        }
        let spec = BeamSplitterSpec {
            input: input.into(),
            second_input: None,
            reflected: reflected.into(),
            transmitted: transmitted.into(),
            r2_h,
            r2_v,
            r_h: r2_h.sqrt(),
            t_h: (1.0 - r2_h).sqrt(),
            r_v: r2_v.sqrt(),
            t_v: (1.0 - r2_v).sqrt(),
            phi: 0.0,
            psi: 0.0,
            phi_h: 0.0,
            psi_h: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_v_phases(mut self, phi: f64, psi: f64) -> Self {
        self.phi = phi;
        self.psi = psi;
        self
    }

    pub fn with_h_phases(mut self, phi_h: f64, psi_h: f64) -> Self {
        self.phi_h = phi_h;
        self.psi_h = psi_h;
        self
    }

    pub fn with_second_input(mut self, port: impl Into<SpatialMode>) -> Self {
        self.second_input = Some(port.into());
        self
    }

    /// Two-input 50:50 splitter taking `|1>|1>` to `(|2,0> + |0,2>)/sqrt(2)`.
    ///
    /// Uses `a -> (r + i t)`, `b -> (r - i t)` with `r = t = 1/sqrt(2)`, i.e.
    /// a quarter-wave phase on both transmitted polarizations.
    pub fn symmetric_two_input(
        a: impl Into<SpatialMode>,
        b: impl Into<SpatialMode>,
        reflected: impl Into<SpatialMode>,
        transmitted: impl Into<SpatialMode>,
    ) -> Result<Self> {
        Ok(BeamSplitterSpec::new(a, reflected, transmitted, 0.5, 0.5)?
            .with_second_input(b)
            .with_v_phases(0.0, FRAC_PI_2)
            .with_h_phases(0.0, FRAC_PI_2))
    }

    pub fn validate(&self) -> Result<()> {
        for (pol, r, t) in [("H", self.r_h, self.t_h), ("V", self.r_v, self.t_v)] {
            if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!("beam splitter {pol} coefficients must lie in [0, 1]")));
            }
            let defect = r * r + t * t - 1.0;
            if defect.abs() > UNITARITY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "beam splitter {pol} coefficients not normalized (r^2 + t^2 - 1 = {defect:e})"
                )));
            }
        }
        for x in [self.phi, self.psi, self.phi_h, self.psi_h] {
            if !x.is_finite() {
                return Err(Error::InvalidParameter("beam splitter phase must be finite".into()));
            }
        }
        let mut ports = vec![&self.input, &self.reflected, &self.transmitted];
        ports.extend(self.second_input.as_ref());
        for (i, p) in ports.iter().enumerate() {
            if ports[..i].contains(p) {
                return Err(Error::InvalidParameter(format!("beam splitter port `{p}` used twice")));
            }
        }
        Ok(())
    }

    /// `(reflected, transmitted)` amplitudes including phases.
    pub fn coefficients(&self, pol: Polarization) -> (Complex64, Complex64) {
        match pol {
            Polarization::H => {
                (Complex64::from_polar(self.r_h, self.phi_h), Complex64::from_polar(self.t_h, self.psi_h))
            }
            Polarization::V => (Complex64::from_polar(self.r_v, self.phi), Complex64::from_polar(self.t_v, self.psi)),
        }
    }

    /// `(reflected, transmitted)` phases.
    pub fn phases(&self, pol: Polarization) -> (f64, f64) {
        match pol {
            Polarization::H => (self.phi_h, self.psi_h),
            Polarization::V => (self.phi, self.psi),
        }
    }

    pub fn r2(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::H => self.r2_h,
            Polarization::V => self.r2_v,
        }
    }
}

/// Birefringent phase shifter: phase `theta_v` on the V photon of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifterSpec {
    pub target: SpatialMode,
    pub theta_v: f64,
}

/// Polarization rotator. `H -> cos H + sin V`, `V -> -sin H + cos V`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatorSpec {
    pub target: SpatialMode,
    pub angle: f64,
}

/// Polarization-dependent loss, dilated into a dedicated `aux` path.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuatorSpec {
    pub target: SpatialMode,
    pub amp_h: f64,
    pub amp_v: f64,
    pub aux: SpatialMode,
}

impl AttenuatorSpec {
    /// Attenuator whose loss path is `aux-<target>`.
    pub fn new(target: impl Into<SpatialMode>, amp_h: f64, amp_v: f64) -> Self {
        let target = target.into();
        let aux = SpatialMode::aux_for(&target);
        AttenuatorSpec { target, amp_h, amp_v, aux }
    }

    fn amp(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::H => self.amp_h,
            Polarization::V => self.amp_v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ElementDef", try_from = "ElementDef")]
pub enum Element {
    BeamSplitter(BeamSplitterSpec),
    Phase(PhaseShifterSpec),
    Rotator(RotatorSpec),
    Attenuator(AttenuatorSpec),
}

impl Element {
    /// Spatial paths the element touches, in port order.
    pub fn spatial_modes(&self) -> Vec<SpatialMode> {
        match self {
            Element::BeamSplitter(bs) => {
                let mut v = vec![bs.input.clone()];
                v.extend(bs.second_input.clone());
                v.push(bs.reflected.clone());
                v.push(bs.transmitted.clone());
                v
            }
            Element::Phase(p) => vec![p.target.clone()],
            Element::Rotator(r) => vec![r.target.clone()],
            Element::Attenuator(a) => vec![a.target.clone(), a.aux.clone()],
        }
    }

    pub fn to_mode_map(&self, registry: &Registry) -> Result<ModeMap> {
        let mut m = DMatrix::<Complex64>::identity(registry.len(), registry.len());
        let idx = |s: &SpatialMode, p: Polarization| registry.require(&s.with(p));
        match self {
            Element::BeamSplitter(bs) => {
                bs.validate()?;
                for pol in Polarization::BOTH {
                    let input = idx(&bs.input, pol)?;
                    let refl = idx(&bs.reflected, pol)?;
                    let trans = idx(&bs.transmitted, pol)?;
                    let second = bs.second_input.as_ref().map(|s| idx(s, pol)).transpose()?;
                    let mut ports = vec![input, refl, trans];
                    ports.extend(second);
                    for &p in &ports {
                        m.column_mut(p).fill(Complex64::default());
                    }
                    let (r, t) = bs.coefficients(pol);
                    let (phase_r, phase_t) = bs.phases(pol);
                    // unit vector orthogonal to (r, t) on (refl, trans)
                    let (r2, t2) = (Complex64::from_polar(t.norm(), phase_r), -Complex64::from_polar(r.norm(), phase_t));
                    m[(refl, input)] = r;
                    m[(trans, input)] = t;
                    match second {
                        Some(b) => {
                            m[(refl, b)] = r2;
                            m[(trans, b)] = t2;
                            m[(input, refl)] = Complex64::new(1.0, 0.0);
                            m[(b, trans)] = Complex64::new(1.0, 0.0);
                        }
                        None => {
                            m[(refl, refl)] = r2;
                            m[(trans, refl)] = t2;
                            m[(input, trans)] = Complex64::new(1.0, 0.0);
                        }
                    }
                }
            }
            Element::Phase(p) => {
                if !p.theta_v.is_finite() {
                    return Err(Error::InvalidParameter("phase must be finite".into()));
                }
                let v = idx(&p.target, Polarization::V)?;
                idx(&p.target, Polarization::H)?;
                m[(v, v)] = Complex64::from_polar(1.0, p.theta_v);
            }
            Element::Rotator(r) => {
                if !r.angle.is_finite() {
                    return Err(Error::InvalidParameter("rotator angle must be finite".into()));
                }
                let h = idx(&r.target, Polarization::H)?;
                let v = idx(&r.target, Polarization::V)?;
                let (s, c) = r.angle.sin_cos();
                m[(h, h)] = Complex64::new(c, 0.0);
                m[(v, h)] = Complex64::new(s, 0.0);
                m[(h, v)] = Complex64::new(-s, 0.0);
                m[(v, v)] = Complex64::new(c, 0.0);
            }
            Element::Attenuator(a) => {
                if a.aux == a.target {
                    return Err(Error::InvalidParameter("attenuator aux path must differ from its target".into()));
                }
                for pol in Polarization::BOTH {
                    let amp = a.amp(pol);
                    if !(0.0..=1.0).contains(&amp) {
                        return Err(Error::InvalidParameter(format!("attenuator amp_{pol} = {amp} outside [0, 1]")));
                    }
                    let lost = (1.0 - amp * amp).sqrt();
                    let t = idx(&a.target, pol)?;
                    let x = idx(&a.aux, pol)?;
                    m[(t, t)] = Complex64::new(amp, 0.0);
                    m[(x, t)] = Complex64::new(lost, 0.0);
                    m[(t, x)] = Complex64::new(-lost, 0.0);
                    m[(x, x)] = Complex64::new(amp, 0.0);
                }
            }
        }
        Ok(ModeMap { registry: registry.clone(), matrix: m })
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        match self {
            Element::Phase(p) => apply_phase(state, p),
            _ => self.to_mode_map(state.registry())?.apply(state),
        }
    }
}

/// Single-photon transfer matrix over a registry; column `i` is the image
/// of `a_i^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMap {
    registry: Registry,
    matrix: DMatrix<Complex64>,
}

impl ModeMap {
    pub fn identity(registry: Registry) -> Self {
        let n = registry.len();
        ModeMap { registry, matrix: DMatrix::identity(n, n) }
    }

    pub fn from_matrix(registry: Registry, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != registry.len() || matrix.ncols() != registry.len() {
            return Err(Error::Dimension { expected: registry.len(), found: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(ModeMap { registry, matrix })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &ModeMap) -> Result<ModeMap> {
        if self.registry != next.registry {
            return Err(Error::Registry("mode maps use different registries".into()));
        }
        Ok(ModeMap { registry: self.registry.clone(), matrix: &next.matrix * &self.matrix })
    }

    /// Largest entry of `|M^dag M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let g = self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(n, n);
        g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when no entry couples an H mode to a V mode.
    pub fn preserves_polarization(&self) -> bool {
        let labels = self.registry.labels();
        self.matrix
            .iter()
            .enumerate()
            .all(|(k, z)| *z == Complex64::default() || labels[k % labels.len()].pol == labels[k / labels.len()].pol)
    }

    /// Transforms every basis ket of `state`.
    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if state.registry() != &self.registry {
            if state.registry().len() != self.registry.len() {
                return Err(Error::Dimension { expected: self.registry.len(), found: state.registry().len() });
            }
            return Err(Error::Registry("state and mode map use different registries".into()));
        }
        let defect = self.unitarity_defect();
        if defect > UNITARITY_TOL {
            return Err(Error::NonUnitary(defect));
        }
        let n = self.registry.len();
        let columns: Vec<Vec<(usize, Complex64)>> = (0..n)
            .map(|i| (0..n).map(|j| (j, self.matrix[(j, i)])).filter(|(_, z)| z.norm() > 0.0).collect())
            .collect();
        let mut spreads: HashMap<(usize, u32), Vec<Spread>> = HashMap::new();
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in state.terms() {
            let counts = occ.counts();
            let norm: f64 = counts.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            let mut partial: HashMap<Vec<u32>, Complex64> = HashMap::from([(vec![0; n], amp / norm)]);
            for (i, &k) in counts.iter().enumerate().filter(|(_, &k)| k > 0) {
                let options = spreads.entry((i, k)).or_insert_with(|| spread(k, &columns[i]));
                let mut next: HashMap<Vec<u32>, Complex64> = HashMap::with_capacity(partial.len() * options.len());
                for (base, c) in &partial {
                    for s in options.iter() {
                        let mut key = base.clone();
                        for &(j, kj) in &s.counts {
                            key[j] += kj;
                        }
                        *next.entry(key).or_default() += c * s.coef;
                    }
                }
                partial = next;
            }
            for (m, c) in partial {
                let f: f64 = m.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
                *out.entry(Occupation::new(m)).or_default() += c * f;
            }
        }
        Ok(FockState::from_map_unchecked(self.registry.clone(), out))
    }
}

/// Free-function form of [`ModeMap::apply`].
pub fn apply_mode_map(state: &FockState, map: &ModeMap) -> Result<FockState> {
    map.apply(state)
}

/// Multiplies each term by `exp(i n theta)`, `n` the V count in the target.
pub fn apply_phase(state: &FockState, spec: &PhaseShifterSpec) -> Result<FockState> {
    if !spec.theta_v.is_finite() {
        return Err(Error::InvalidParameter("phase must be finite".into()));
    }
    let v = state.registry().require(&spec.target.with(Polarization::V))?;
    Ok(state.map_amplitudes(|occ, a| a * Complex64::from_polar(1.0, f64::from(occ[v]) * spec.theta_v)))
}

pub fn apply_rotator(state: &FockState, spec: &RotatorSpec) -> Result<FockState> {
    Element::Rotator(spec.clone()).apply(state)
}

/// One way of distributing `k` photons over a column's output modes.
#[derive(Debug, Clone)]
struct Spread {
    counts: Vec<(usize, u32)>,
    coef: Complex64,
}

/// All distributions of `k` photons over `column`, each weighted by the
/// multinomial `k! / prod(k_j!)` times `prod(c_j^k_j)`.
fn spread(k: u32, column: &[(usize, Complex64)]) -> Vec<Spread> {
    fn rec(left: u32, col: &[(usize, Complex64)], acc: &mut Vec<(usize, u32)>, coef: Complex64, out: &mut Vec<Spread>) {
        match col {
            [] => {
                if left == 0 {
                    out.push(Spread { counts: acc.clone(), coef });
                }
            }
            [(j, c), rest @ ..] => {
                let lo = if rest.is_empty() { left } else { 0 };
                for kj in lo..=left {
                    if kj > 0 {
                        acc.push((*j, kj));
                    }
                    let w = c.powu(kj) / factorial(kj);
                    rec(left - kj, rest, acc, coef * w, out);
                    if kj > 0 {
                        acc.pop();
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(k, column, &mut Vec::new(), Complex64::new(factorial(k), 0.0), &mut out);
    out
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Wire form of [`Element`]; reflectivities are intensities `r^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementDef {
    Bs {
        #[serde(rename = "in")]
        input: SpatialMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        in2: Option<SpatialMode>,
        refl: SpatialMode,
        trans: SpatialMode,
        #[serde(rename = "r2_H")]
        r2_h: f64,
        #[serde(rename = "r2_V")]
        r2_v: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        psi: f64,
        #[serde(rename = "phi_H", default, skip_serializing_if = "is_zero")]
        phi_h: f64,
        #[serde(rename = "psi_H", default, skip_serializing_if = "is_zero")]
        psi_h: f64,
    },
    Bps {
        target: SpatialMode,
        #[serde(rename = "theta_V")]
        theta_v: f64,
    },
    Rot {
        target: SpatialMode,
        angle: f64,
    },
    Att {
        target: SpatialMode,
        #[serde(rename = "amp_H")]
        amp_h: f64,
        #[serde(rename = "amp_V")]
        amp_v: f64,
        aux: SpatialMode,
    },
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl From<Element> for ElementDef {
    fn from(e: Element) -> Self {
        match e {
            Element::BeamSplitter(bs) => ElementDef::Bs {
                r2_h: bs.r2(Polarization::H),
                r2_v: bs.r2(Polarization::V),
                input: bs.input,
                in2: bs.second_input,
                refl: bs.reflected,
                trans: bs.transmitted,
                phi: bs.phi,
                psi: bs.psi,
                phi_h: bs.phi_h,
                psi_h: bs.psi_h,
            },
            Element::Phase(p) => ElementDef::Bps { target: p.target, theta_v: p.theta_v },
            Element::Rotator(r) => ElementDef::Rot { target: r.target, angle: r.angle },
            Element::Attenuator(a) => ElementDef::Att { target: a.target, amp_h: a.amp_h, amp_v: a.amp_v, aux: a.aux },
        }
    }
}

impl TryFrom<ElementDef> for Element {
    type Error = Error;

    fn try_from(d: ElementDef) -> Result<Self> {
        Ok(match d {
            ElementDef::Bs { input, in2, refl, trans, r2_h, r2_v, phi, psi, phi_h, psi_h } => {
                let mut bs = BeamSplitterSpec::new(input, refl, trans, r2_h, r2_v)?
                    .with_v_phases(phi, psi)
                    .with_h_phases(phi_h, psi_h);
                bs.second_input = in2;
                bs.validate()?;
                Element::BeamSplitter(bs)
            }
            ElementDef::Bps { target, theta_v } => Element::Phase(PhaseShifterSpec { target, theta_v }),
            ElementDef::Rot { target, angle } => Element::Rotator(RotatorSpec { target, angle }),
            ElementDef::Att { target, amp_h, amp_v, aux } => {
                Element::Attenuator(AttenuatorSpec { target, amp_h, amp_v, aux })
            }
        })
    }
}

/// Convenience: `ModeLabel` for `(spatial, pol)`.
pub fn label(spatial: &str, pol: Polarization) -> ModeLabel {
    ModeLabel::new(spatial, pol)
}
