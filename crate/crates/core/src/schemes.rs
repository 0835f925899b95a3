//! Photon sources and the prebuilt W-state circuits.
//!
//! All three circuits split photons from a single input path `0` into one
//! trigger path (`1`, absent for single-photon sources) and three signal
//! paths `2`, `3`, `3'`:
//!
//! | scheme | splitting chain                                          |
//! |--------|----------------------------------------------------------|
//! | I      | `0 -> (1, 1')`, `1' -> (2, 2')`, `2' -> (3, 3')`         |
//! | II     | `0 -> (A, B)`, `A -> (2, 1)`, `B -> (3, 3')`             |
//! | SPS    | `0 -> (2, 2')`, `2' -> (3, 3')`                          |
//!
//! Splitter outputs are listed as `(reflected, transmitted)`. Birefringent
//! phase shifters on `2V` and `3V` cancel the V-photon phases picked up in
//! the splitters so the three kets of each W branch share one phase.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{BeamSplitterSpec, Element, ModeMap, PhaseShifterSpec};
use crate::fock::{FockState, ModeLabel, Occupation, Polarization, Registry, SpatialMode};
use crate::postselection::{project, DetectionPattern, ModeConstraint, PostselectionResult};
use crate::{Error, Result};

/// Source path shared by every scheme.
pub const SOURCE_MODE: &str = "0";
pub const TRIGGER_MODE: &str = "1";
pub const SIGNAL_MODES: [&str; 3] = ["2", "3", "3'"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "sps")]
    Sps,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::I, Scheme::II, Scheme::Sps];

    /// Splitter indices (0-based) whose reflectivity matters.
    pub fn active_splitters(self) -> &'static [usize] {
        match self {
            Scheme::I | Scheme::II => &[0, 1, 2],
            Scheme::Sps => &[1, 2],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::I => "I",
            Scheme::II => "II",
            Scheme::Sps => "sps",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Scheme::I),
            "ii" | "2" => Ok(Scheme::II),
            "sps" => Ok(Scheme::Sps),
            _ => Err(Error::Parse(format!("unknown scheme `{s}` (expected I, II or sps)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    #[default]
    Auto,
    None,
}

/// Splitter settings of a scheme; index `k - 1` holds splitter `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Intensity reflectivity `r^2` per splitter, `[H, V]`.
    pub r2: [[f64; 2]; 3],
    /// Reflected-V phases.
    pub phi: [f64; 3],
    /// Transmitted-V phases.
    pub psi: [f64; 3],
    #[serde(default)]
    pub compensation: Compensation,
}

impl SchemeParams {
    /// Polarization-independent splitters, zero phases, auto compensation.
    pub fn uniform(r2: [f64; 3]) -> Self {
        SchemeParams { r2: r2.map(|x| [x, x]), phi: [0.0; 3], psi: [0.0; 3], compensation: Compensation::Auto }
    }

    /// Reflectivities at which the published maximum is attained. For the
    /// single-photon-source scheme this is the stated `r2^2 = r3^2 = 1/2`
    /// point, which is not the true maximizer (see
    /// [`crate::analysis::optimize_probability`]).
    pub fn design_optimum(scheme: Scheme) -> Self {
        SchemeParams::uniform(optimal_r2(scheme))
    }

    pub fn with_phases(mut self, phi: [f64; 3], psi: [f64; 3]) -> Self {
        self.phi = phi;
        self.psi = psi;
        self
    }

    pub fn with_compensation(mut self, compensation: Compensation) -> Self {
        self.compensation = compensation;
        self
    }

    pub fn r2_of(&self, k: usize, pol: Polarization) -> f64 {
        self.r2[k][pol.index()]
    }

    pub fn is_polarization_independent(&self) -> bool {
        self.r2.iter().all(|[h, v]| h == v)
    }

    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        for &k in scheme.active_splitters() {
            for x in self.r2[k] {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidParameter(format!("r{}^2 = {x} outside [0, 1]", k + 1)));
                }
            }
            if !self.phi[k].is_finite() || !self.psi[k].is_finite() {
                return Err(Error::InvalidParameter(format!("phases of splitter {} must be finite", k + 1)));
            }
        }
        Ok(())
    }

    fn splitter(&self, k: usize, input: &str, refl: &str, trans: &str) -> Result<Element> {
        let bs = BeamSplitterSpec::new(input, refl, trans, self.r2[k][0], self.r2[k][1])?
            .with_v_phases(self.phi[k], self.psi[k]);
        Ok(Element::BeamSplitter(bs))
    }
}

fn optimal_r2(scheme: Scheme) -> [f64; 3] {
    match scheme {
        Scheme::I => [0.25, 1.0 / 3.0, 0.5],
        Scheme::II | Scheme::Sps => [0.5, 0.5, 0.5],
    }
}

/// Polarization-dependent reflectivity errors `delta_kL = r_kL^2 - r_k,opt^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// `[H, V]` per splitter.
    pub delta: [[f64; 2]; 3],
    pub r_opt: [f64; 3],
}

impl PerturbationSpec {
    pub fn new(scheme: Scheme, delta: [[f64; 2]; 3]) -> Self {
        PerturbationSpec { delta, r_opt: optimal_r2(scheme) }
    }

    /// `delta_kH = +d_k / 2`, `delta_kV = -d_k / 2`.
    pub fn symmetric(scheme: Scheme, diff: [f64; 3]) -> Self {
        PerturbationSpec::new(scheme, diff.map(|d| [0.5 * d, -0.5 * d]))
    }

    /// `delta_kH = d_k`, `delta_kV = 0`.
    pub fn h_only(scheme: Scheme, diff: [f64; 3]) -> Self {
        PerturbationSpec::new(scheme, diff.map(|d| [d, 0.0]))
    }

    /// `d_k = delta_kH - delta_kV`.
    pub fn differences(&self) -> [f64; 3] {
        self.delta.map(|[h, v]| h - v)
    }

    pub fn to_params(&self) -> Result<SchemeParams> {
        let mut r2 = [[0.0; 2]; 3];
        for k in 0..3 {
            for l in 0..2 {
                let x = self.r_opt[k] + self.delta[k][l];
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidParameter(format!(
                        "perturbed reflectivity r{}{}^2 = {x} outside [0, 1]",
                        k + 1,
                        if l == 0 { 'H' } else { 'V' }
                    )));
                }
                r2[k][l] = x;
            }
        }
        Ok(SchemeParams { r2, phi: [0.0; 3], psi: [0.0; 3], compensation: Compensation::Auto })
    }
}

/// `|2>_0H |2>_0V`.
pub fn pdc_source() -> FockState {
    pdc_source_npairs(2)
}

/// `|n>_0H |n>_0V` on a fresh `{0H, 0V}` registry.
pub fn pdc_source_npairs(n: u32) -> FockState {
    let reg = Registry::from_spatial(&[SOURCE_MODE]).expect("single spatial mode");
    FockState::number_state(reg, vec![n, n]).expect("two counts for two modes")
}

const SPS_PORTS: [&str; 2] = ["sps1", "sps2"];
const SPS_IDLE: &str = "sps-idle";

/// Two H photons after the symmetric combining splitter, over
/// `{sps1, sps2, 0, sps-idle}`: `(|2,0> + |0,2>)/sqrt(2)` on `(0H, sps-idle H)`.
pub fn sps_combiner_output() -> Result<FockState> {
    let reg = Registry::from_spatial(&[SPS_PORTS[0], SPS_PORTS[1], SOURCE_MODE, SPS_IDLE])?;
    let input = FockState::from_labels(
        reg,
        &[(ModeLabel::new(SPS_PORTS[0], Polarization::H), 1), (ModeLabel::new(SPS_PORTS[1], Polarization::H), 1)],
    )?;
    let bs = BeamSplitterSpec::symmetric_two_input(SPS_PORTS[0], SPS_PORTS[1], SOURCE_MODE, SPS_IDLE)?;
    Element::BeamSplitter(bs).apply(&input)
}

/// `|2>_0H |1>_0V` and the probability `1/2` of preparing it from three
/// single photons.
pub fn sps_source() -> Result<(FockState, f64)> {
    let combined = sps_combiner_output()?;
    let pattern = DetectionPattern::new([
        (SpatialMode::new(SOURCE_MODE), ModeConstraint::Exactly(2, Polarization::H)),
        (SpatialMode::new(SPS_IDLE), ModeConstraint::Vacuum),
    ])?;
    let selected = project(&combined, &pattern)?;
    let conditional = selected
        .conditional
        .ok_or_else(|| Error::InvalidParameter("combiner never bunches into the source path".into()))?;
    let with_v = conditional.create(&ModeLabel::new(SOURCE_MODE, Polarization::V))?;
    let state = with_v.reduce_to(&Registry::from_spatial(&[SOURCE_MODE])?)?;
    Ok((state, selected.probability))
}

/// One ket of an explicit source, keyed by mode labels such as `"0H"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceTerm {
    pub counts: BTreeMap<String, u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceDef {
    /// `n` collinear type-II pairs in path `0`.
    Pdc { pairs: u32 },
    /// Three single-photon sources combined into `|2>_0H |1>_0V`.
    Sps,
    /// Explicit superposition with a preparation probability.
    Fock {
        terms: Vec<SourceTerm>,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
}

fn unit_weight() -> f64 {
    1.0
}

impl SourceDef {
    /// Source state (own registry) and its preparation weight.
    pub fn prepare(&self) -> Result<(FockState, f64)> {
        match self {
            SourceDef::Pdc { pairs } => Ok((pdc_source_npairs(*pairs), 1.0)),
            SourceDef::Sps => sps_source(),
            SourceDef::Fock { terms, weight } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::InvalidParameter(format!("source weight {weight} outside [0, 1]")));
                }
                let mut labels: Vec<ModeLabel> = Vec::new();
                let mut parsed = Vec::new();
                for t in terms {
                    let mut ket = Vec::new();
                    for (name, n) in &t.counts {
                        let label: ModeLabel = name.parse()?;
                        if !labels.contains(&label) {
                            labels.push(label.clone());
                        }
                        ket.push((label, *n));
                    }
                    parsed.push((ket, Complex64::new(t.re, t.im)));
                }
                let spatial: Vec<SpatialMode> = Registry::new(labels)?.spatial_modes();
                let reg = Registry::from_spatial(&spatial)?;
                let mut kets = Vec::new();
                for (ket, amp) in parsed {
                    let mut occ = vec![0; reg.len()];
                    for (label, n) in ket {
                        occ[reg.require(&label)?] += n;
                    }
                    kets.push((Occupation::new(occ), amp));
                }
                let state = FockState::from_terms(reg, kets)?;
                if !state.is_normalized() {
                    return Err(Error::InvalidParameter("explicit source state is not normalized".into()));
                }
                Ok((state, *weight))
            }
        }
    }
}

/// Wire form of a [`Circuit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDef {
    pub source: SourceDef,
    pub elements: Vec<Element>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<SpatialMode>,
    pub signal: Vec<SpatialMode>,
}

/// Source plus an ordered element list over a fixed mode registry.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    def: CircuitDef,
    registry: Registry,
    source: FockState,
    source_weight: f64,
}

impl Circuit {
    /// Builds and checks a circuit.
    ///
    /// The registry lists every spatial path in order of first appearance
    /// (source, elements, trigger, signal), H before V. Elements must be
    /// topologically ordered: a splitter reads live paths and writes fresh
    /// ones, single-path elements act on live paths, and each attenuator has
    /// its own fresh loss path.
    pub fn from_def(def: CircuitDef) -> Result<Circuit> {
        let (source, source_weight) = def.source.prepare()?;
        let mut spatial: Vec<SpatialMode> = source.registry().spatial_modes();
        let mut live = spatial.clone();
        let push = |m: &SpatialMode, spatial: &mut Vec<SpatialMode>| {
            if !spatial.contains(m) {
                spatial.push(m.clone());
            }
        };
        for (i, e) in def.elements.iter().enumerate() {
            let needs_live = |m: &SpatialMode, live: &Vec<SpatialMode>| {
                if live.contains(m) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("element {i} reads path `{m}` before it carries light")))
                }
            };
            let fresh = |m: &SpatialMode, spatial: &Vec<SpatialMode>| {
                if spatial.contains(m) {
                    Err(Error::InvalidParameter(format!("element {i} writes to path `{m}` which is already in use")))
                } else {
                    Ok(())
                }
            };
            match e {
                Element::BeamSplitter(bs) => {
                    bs.validate()?;
                    let inputs: Vec<&SpatialMode> = std::iter::once(&bs.input).chain(bs.second_input.as_ref()).collect();
                    for m in &inputs {
                        needs_live(m, &live)?;
                    }
                    for m in [&bs.reflected, &bs.transmitted] {
                        fresh(m, &spatial)?;
                    }
                    live.retain(|m| !inputs.contains(&m));
                    for m in [&bs.reflected, &bs.transmitted] {
                        push(m, &mut spatial);
                        live.push(m.clone());
                    }
                }
                Element::Phase(p) => needs_live(&p.target, &live)?,
                Element::Rotator(r) => needs_live(&r.target, &live)?,
                Element::Attenuator(a) => {
                    needs_live(&a.target, &live)?;
                    fresh(&a.aux, &spatial)?;
                    push(&a.aux, &mut spatial);
                }
            }
        }
        for m in def.trigger.iter().chain(&def.signal) {
            if !live.contains(m) {
                return Err(Error::InvalidParameter(format!("detected path `{m}` is not a circuit output")));
            }
        }
        if def.signal.is_empty() {
            return Err(Error::InvalidParameter("circuit needs at least one signal path".into()));
        }
        let registry = Registry::from_spatial(&spatial)?;
        let source = source.embed(&registry)?;
        Ok(Circuit { def, registry, source, source_weight })
    }

    pub fn def(&self) -> &CircuitDef {
        &self.def
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Source state embedded in the circuit registry.
    pub fn source(&self) -> &FockState {
        &self.source
    }

    /// Probability that the source delivered [`Circuit::source`].
    pub fn source_weight(&self) -> f64 {
        self.source_weight
    }

    pub fn elements(&self) -> &[Element] {
        &self.def.elements
    }

    pub fn trigger(&self) -> Option<&SpatialMode> {
        self.def.trigger.as_ref()
    }

    pub fn signal_modes(&self) -> &[SpatialMode] {
        &self.def.signal
    }

    /// Trigger followed by signal paths.
    pub fn detected_modes(&self) -> Vec<SpatialMode> {
        self.def.trigger.iter().chain(&self.def.signal).cloned().collect()
    }

    /// Same elements, different source.
    pub fn with_source(&self, source: SourceDef) -> Result<Circuit> {
        Circuit::from_def(CircuitDef { source, ..self.def.clone() })
    }

    /// Appends elements at the end of the circuit.
    pub fn with_appended(&self, extra: impl IntoIterator<Item = Element>) -> Result<Circuit> {
        let mut def = self.def.clone();
        def.elements.extend(extra);
        Circuit::from_def(def)
    }

    /// Output state for the circuit's own source.
    pub fn run(&self) -> Result<FockState> {
        self.run_on(&self.source)
    }

    /// Output state for an arbitrary input over the circuit registry.
    pub fn run_on(&self, input: &FockState) -> Result<FockState> {
        self.def.elements.iter().try_fold(input.clone(), |s, e| e.apply(&s))
    }

    /// Product of all element maps.
    pub fn composed_map(&self) -> Result<ModeMap> {
        self.def.elements.iter().try_fold(ModeMap::identity(self.registry.clone()), |acc, e| {
            acc.then(&e.to_mode_map(&self.registry)?)
        })
    }

    /// One photon in every detected path.
    pub fn detection_pattern(&self) -> DetectionPattern {
        DetectionPattern::new(self.detected_modes().into_iter().map(|m| (m, ModeConstraint::OneAny)))
            .expect("circuits have at least one signal path")
    }

    /// Runs the circuit and post-selects one photon per detected path. The
    /// probability includes the source weight.
    pub fn postselect(&self) -> Result<PostselectionResult> {
        let mut result = project(&self.run()?, &self.detection_pattern())?;
        result.probability *= self.source_weight;
        Ok(result)
    }
}

pub fn build_scheme(scheme: Scheme, params: &SchemeParams) -> Result<Circuit> {
    match scheme {
        Scheme::I => build_scheme_i(params),
        Scheme::II => build_scheme_ii(params),
        Scheme::Sps => build_sps_scheme(params),
    }
}

fn bps(target: &str, theta_v: f64) -> Element {
    Element::Phase(PhaseShifterSpec { target: target.into(), theta_v })
}

fn signal() -> Vec<SpatialMode> {
    SIGNAL_MODES.iter().map(SpatialMode::new).collect()
}

/// Three-splitter chain feeding paths `1`, `2`, `3`, `3'` in turn.
pub fn build_scheme_i(params: &SchemeParams) -> Result<Circuit> {
    params.validate(Scheme::I)?;
    let (phi, psi) = (params.phi, params.psi);
    let mut elements = vec![
        params.splitter(0, "0", "1", "1'")?,
        params.splitter(1, "1'", "2", "2'")?,
        params.splitter(2, "2'", "3", "3'")?,
    ];
    if params.compensation == Compensation::Auto {
        elements.push(bps("2", -phi[1] + psi[1] + psi[2]));
        elements.push(bps("3", -phi[2] + psi[2]));
    }
    Circuit::from_def(CircuitDef {
        source: SourceDef::Pdc { pairs: 2 },
        elements,
        trigger: Some(TRIGGER_MODE.into()),
        signal: signal(),
    })
}

/// Symmetric tree: the reflected arm of splitter 1 feeds trigger and path
/// `2`, the transmitted arm feeds `3` and `3'`.
///
/// Path `2` is the reflected output of splitter 2, which is what makes the
/// `2V` compensation `-phi1 - phi2 + psi1 + psi3` line the W kets up.
pub fn build_scheme_ii(params: &SchemeParams) -> Result<Circuit> {
    params.validate(Scheme::II)?;
    let (phi, psi) = (params.phi, params.psi);
    let mut elements = vec![
        params.splitter(0, "0", "A", "B")?,
        params.splitter(1, "A", "2", "1")?,
        params.splitter(2, "B", "3", "3'")?,
    ];
    if params.compensation == Compensation::Auto {
        elements.push(bps("2", -phi[0] - phi[1] + psi[0] + psi[2]));
        elements.push(bps("3", -phi[2] + psi[2]));
    }
    Circuit::from_def(CircuitDef {
        source: SourceDef::Pdc { pairs: 2 },
        elements,
        trigger: Some(TRIGGER_MODE.into()),
        signal: signal(),
    })
}

/// Single-photon-source variant: `|2>_0H |1>_0V` split over `2`, `3`, `3'`
/// with no trigger. Splitter 1 settings in `params` are ignored.
pub fn build_sps_scheme(params: &SchemeParams) -> Result<Circuit> {
    params.validate(Scheme::Sps)?;
    let (phi, psi) = (params.phi, params.psi);
    let mut elements = vec![params.splitter(1, "0", "2", "2'")?, params.splitter(2, "2'", "3", "3'")?];
    if params.compensation == Compensation::Auto {
        elements.push(bps("2", -phi[1] + psi[1] + psi[2]));
        elements.push(bps("3", -phi[2] + psi[2]));
    }
    Circuit::from_def(CircuitDef { source: SourceDef::Sps, elements, trigger: None, signal: signal() })
}

/// `(|2,0> + |0,2>)/sqrt(2)` on `(0H, sps-idle H)` over the combiner registry.
pub fn hom_reference() -> Result<FockState> {
    let reg = Registry::from_spatial(&[SPS_PORTS[0], SPS_PORTS[1], SOURCE_MODE, SPS_IDLE])?;
    let a = FockState::from_labels(reg.clone(), &[(ModeLabel::new(SOURCE_MODE, Polarization::H), 2)])?;
    let b = FockState::from_labels(reg, &[(ModeLabel::new(SPS_IDLE, Polarization::H), 2)])?;
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    FockState::scale_add(&[(h, &a), (h, &b)])
}
