//! Detection patterns, post-selection and the trigger measurement.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::elements::{AttenuatorSpec, Element, RotatorSpec};
use crate::fock::{FockState, Polarization, Registry, SpatialMode, DEGENERATE_NORM_SQR};
use crate::schemes::Circuit;
use crate::{Error, Result};

/// Requirement on the photons found in one spatial path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModeConstraint {
    /// Exactly one photon, either polarization (`"one_any"`).
    OneAny,
    /// No photons (`"vacuum"`).
    Vacuum,
    /// `n` photons in the given polarization, the other unconstrained
    /// (`"2H"`, `"1V"`).
    Exactly(u32, Polarization),
    /// `n` photons in total (`"total:3"`).
    Total(u32),
    /// Not measured (`"unconstrained"`).
    Unconstrained,
}

impl ModeConstraint {
    /// Whether `h` H-photons and `v` V-photons satisfy the constraint.
    pub fn accepts(self, h: u32, v: u32) -> bool {
        match self {
            ModeConstraint::OneAny => h + v == 1,
            ModeConstraint::Vacuum => h + v == 0,
            ModeConstraint::Exactly(n, Polarization::H) => h == n,
            ModeConstraint::Exactly(n, Polarization::V) => v == n,
            ModeConstraint::Total(n) => h + v == n,
            ModeConstraint::Unconstrained => true,
        }
    }

    /// Same question for click/no-click detectors on each polarization.
    pub fn accepts_clicks(self, h_click: bool, v_click: bool) -> bool {
        match self {
            ModeConstraint::OneAny => h_click || v_click,
            ModeConstraint::Vacuum | ModeConstraint::Total(0) => !h_click && !v_click,
            ModeConstraint::Total(_) => h_click || v_click,
            ModeConstraint::Exactly(n, pol) => {
                let click = if pol == Polarization::H { h_click } else { v_click };
                click == (n > 0)
            }
            ModeConstraint::Unconstrained => true,
        }
    }
}

impl fmt::Display for ModeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeConstraint::OneAny => f.write_str("one_any"),
            ModeConstraint::Vacuum => f.write_str("vacuum"),
            ModeConstraint::Exactly(n, p) => write!(f, "{n}{p}"),
            ModeConstraint::Total(n) => write!(f, "total:{n}"),
            ModeConstraint::Unconstrained => f.write_str("unconstrained"),
        }
    }
}

impl From<ModeConstraint> for String {
    fn from(c: ModeConstraint) -> Self {
        c.to_string()
    }
}

impl TryFrom<String> for ModeConstraint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown mode constraint `{s}`"));
        match s.as_str() {
            "one_any" => Ok(ModeConstraint::OneAny),
            "vacuum" => Ok(ModeConstraint::Vacuum),
            "unconstrained" => Ok(ModeConstraint::Unconstrained),
            _ => {
                if let Some(n) = s.strip_prefix("total:") {
                    return n.parse().map(ModeConstraint::Total).map_err(|_| bad());
                }
                let (n, pol) = s.split_at(s.len().saturating_sub(1));
                let pol: Polarization = pol.parse().map_err(|_| bad())?;
                n.parse().map(|n| ModeConstraint::Exactly(n, pol)).map_err(|_| bad())
            }
        }
    }
}

/// Per-path constraints; paths not listed are unconstrained except
/// attenuator loss paths (`aux-*`), which must be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<SpatialMode, ModeConstraint>", into = "BTreeMap<SpatialMode, ModeConstraint>")]
pub struct DetectionPattern(BTreeMap<SpatialMode, ModeConstraint>);

impl DetectionPattern {
    pub fn new(entries: impl IntoIterator<Item = (SpatialMode, ModeConstraint)>) -> Result<Self> {
        let map: BTreeMap<_, _> = entries.into_iter().collect();
        if map.values().all(|c| *c == ModeConstraint::Unconstrained) {
            return Err(Error::InvalidParameter("detection pattern constrains no mode".into()));
        }
        Ok(DetectionPattern(map))
    }

    /// One photon in each listed path.
    pub fn one_per_mode<S: Into<SpatialMode> + Clone>(modes: &[S]) -> Result<Self> {
        DetectionPattern::new(modes.iter().cloned().map(|m| (m.into(), ModeConstraint::OneAny)))
    }

    pub fn get(&self, mode: &SpatialMode) -> Option<ModeConstraint> {
        self.0.get(mode).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&SpatialMode, &ModeConstraint)> {
        self.0.iter()
    }

    /// `(h index, v index, constraint)` for every checked path of `registry`.
    fn resolve(&self, registry: &Registry, aux_vacuum: bool) -> Result<Vec<(usize, usize, ModeConstraint)>> {
        let mut out = Vec::new();
        for (mode, c) in &self.0 {
            if !registry.contains_spatial(mode) {
                return Err(Error::UnknownMode(mode.to_string()));
            }
            out.push((registry.require(&mode.with(Polarization::H))?, registry.require(&mode.with(Polarization::V))?, *c));
        }
        if aux_vacuum {
            for mode in registry.spatial_modes().into_iter().filter(|m| m.is_aux() && !self.0.contains_key(m)) {
                out.push((
                    registry.require(&mode.with(Polarization::H))?,
                    registry.require(&mode.with(Polarization::V))?,
                    ModeConstraint::Vacuum,
                ));
            }
        }
        Ok(out)
    }
}

impl TryFrom<BTreeMap<SpatialMode, ModeConstraint>> for DetectionPattern {
    type Error = Error;

    fn try_from(map: BTreeMap<SpatialMode, ModeConstraint>) -> Result<Self> {
        DetectionPattern::new(map)
    }
}

impl From<DetectionPattern> for BTreeMap<SpatialMode, ModeConstraint> {
    fn from(p: DetectionPattern) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostselectionResult {
    /// Squared norm of the projected state relative to the input.
    pub probability: f64,
    /// Renormalized projected state; `None` when the pattern never occurs.
    pub conditional: Option<FockState>,
}

impl PostselectionResult {
    pub fn zero() -> Self {
        PostselectionResult { probability: 0.0, conditional: None }
    }

    pub fn is_zero(&self) -> bool {
        self.conditional.is_none()
    }
}

/// Keeps the terms allowed by `pattern` and renormalizes.
pub fn project(state: &FockState, pattern: &DetectionPattern) -> Result<PostselectionResult> {
    let total = state.norm_sqr();
    if total < DEGENERATE_NORM_SQR {
        return Err(Error::DegenerateState(total));
    }
    let checks = pattern.resolve(state.registry(), true)?;
    let kept = state.filter(|occ| checks.iter().all(|&(h, v, c)| c.accepts(occ[h], occ[v])));
    let p = kept.norm_sqr();
    if p < DEGENERATE_NORM_SQR {
        return Ok(PostselectionResult { probability: p / total, conditional: None });
    }
    let (conditional, _) = kept.normalize()?;
    Ok(PostselectionResult { probability: p / total, conditional: Some(conditional) })
}

/// Polarization registered by the trigger detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trigger {
    #[serde(rename = "d1v")]
    D1V,
    #[serde(rename = "d1h")]
    D1H,
}

impl Trigger {
    pub fn polarization(self) -> Polarization {
        match self {
            Trigger::D1V => Polarization::V,
            Trigger::D1H => Polarization::H,
        }
    }
}

/// Where the trigger photon is measured and which paths carry the W state.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSetup {
    pub mode: SpatialMode,
    pub signal: Vec<SpatialMode>,
}

impl TriggerSetup {
    pub fn of(circuit: &Circuit) -> Result<Self> {
        let mode = circuit
            .trigger()
            .cloned()
            .ok_or_else(|| Error::InvalidParameter("circuit has no trigger mode".into()))?;
        Ok(TriggerSetup { mode, signal: circuit.signal_modes().to_vec() })
    }
}

/// Measures the trigger photon's polarization and removes the trigger path.
///
/// The returned probability is cumulative: the probability carried by
/// `result` times that of the trigger outcome. For [`Trigger::D1H`] with
/// `rotate_on_h`, a 90 degree rotator is applied to every signal path.
pub fn trigger_select(
    result: &PostselectionResult,
    setup: &TriggerSetup,
    trigger: Trigger,
    rotate_on_h: bool,
) -> Result<PostselectionResult> {
    let Some(state) = &result.conditional else {
        return Ok(PostselectionResult::zero());
    };
    let reg = state.registry();
    if !reg.contains_spatial(&setup.mode) {
        return Err(Error::UnknownMode(setup.mode.to_string()));
    }
    let h = reg.require(&setup.mode.with(Polarization::H))?;
    let v = reg.require(&setup.mode.with(Polarization::V))?;
    if state.terms().any(|(o, _)| o[h] + o[v] != 1) {
        return Err(Error::InvalidParameter(format!("trigger path `{}` must hold exactly one photon", setup.mode)));
    }
    let pattern = DetectionPattern::new([(setup.mode.clone(), ModeConstraint::Exactly(1, trigger.polarization()))])?;
    let branch = project(state, &pattern)?;
    let Some(cond) = branch.conditional else {
        return Ok(PostselectionResult { probability: result.probability * branch.probability, conditional: None });
    };
    let mut out = cond.strip_spatial(&setup.mode)?;
    if trigger == Trigger::D1H && rotate_on_h {
        for m in &setup.signal {
            out = Element::Rotator(RotatorSpec { target: m.clone(), angle: FRAC_PI_2 }).apply(&out)?;
        }
    }
    Ok(PostselectionResult { probability: result.probability * branch.probability, conditional: Some(out) })
}

/// Detector efficiency and number resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub photon_number_resolving: bool,
}

impl DetectorModel {
    pub fn ideal() -> Self {
        DetectorModel { efficiency: 1.0, photon_number_resolving: true }
    }

    pub fn threshold(efficiency: f64) -> Self {
        DetectorModel { efficiency, photon_number_resolving: false }
    }
}

/// Probability that lossy detectors on the constrained paths of `pattern`
/// report an outcome consistent with it.
///
/// Each detected path loses photons through a beam-splitter dilation with
/// amplitude `sqrt(efficiency)`; lost photons (and pre-existing `aux-*`
/// loss paths) are summed over. Number-resolving detectors must see the
/// exact counts; threshold detectors only distinguish click from no click
/// per polarization.
pub fn threshold_outcome_probability(state: &FockState, detectors: &DetectorModel, pattern: &DetectionPattern) -> Result<f64> {
    let eta = detectors.efficiency;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("detector efficiency {eta} outside [0, 1]")));
    }
    let total = state.norm_sqr();
    if total < DEGENERATE_NORM_SQR {
        return Err(Error::DegenerateState(total));
    }
    let detected: Vec<SpatialMode> = pattern
        .entries()
        .filter(|(_, c)| **c != ModeConstraint::Unconstrained)
        .map(|(m, _)| m.clone())
        .collect();
    let losses: Vec<AttenuatorSpec> = detected
        .iter()
        .map(|m| {
            let amp = eta.sqrt();
            AttenuatorSpec { target: m.clone(), amp_h: amp, amp_v: amp, aux: SpatialMode::new(format!("aux-det-{m}")) }
        })
        .collect();
    let extra = Registry::from_spatial(&losses.iter().map(|a| a.aux.clone()).collect::<Vec<_>>())?;
    let registry = state.registry().union(&extra);
    let mut lossy = state.embed(&registry)?;
    for a in losses {
        lossy = Element::Attenuator(a).apply(&lossy)?;
    }
    let checks = pattern.resolve(&registry, false)?;
    let accepted: f64 = lossy
        .terms()
        .filter(|(occ, _)| {
            checks.iter().all(|&(h, v, c)| {
                if detectors.photon_number_resolving {
                    c.accepts(occ[h], occ[v])
                } else {
                    c.accepts_clicks(occ[h] > 0, occ[v] > 0)
                }
            })
        })
        .fold(0.0, |acc, (_, a)| acc + a.norm_sqr());
    Ok(accepted / total)
}
