use serde::Serialize;

use super::evaluate::{evaluate, TriggerPolicy};
use super::target::WTarget;
use crate::elements::{AttenuatorSpec, Element, PhaseShifterSpec};
use crate::schemes::{build_scheme_i, Circuit, Scheme, SchemeParams, SIGNAL_MODES};
use crate::Result;

/// Per-path settings appended to Scheme I at its optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSettings {
    pub target: WTarget,
    /// `[H, V]` transmission amplitudes for paths `2`, `3`, `3'`.
    pub attenuation: [[f64; 2]; 3],
    /// Extra phase on the V photon of paths `2`, `3`, `3'`.
    pub phase_v: [f64; 3],
    /// Probability of the pattern with a V trigger after the losses.
    pub predicted_probability: f64,
}

/// Loss and phase settings that turn the D1V-heralded equal W state into
/// `target`.
///
/// Term `c1` (V in `3'`), `c2` (V in `3`) and `c3` (V in `2`) each pick up
/// the amplitude and phase of the V photon they carry, so
/// `a_3'V : a_3V : a_2V = |c1| : |c2| : |c3|` with the largest set to 1, and
/// the V phases are `arg c1`, `arg c2`, `arg c3`. H photons pass untouched.
pub fn design_w_class(target: &WTarget) -> DesignSettings {
    let c = target.amplitudes();
    let max = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut attenuation = [[1.0; 2]; 3];
    let mut phase_v = [0.0; 3];
    // Path index (2, 3, 3') -> amplitude index whose term has V there.
    for (path, amp) in [(0, 2), (1, 1), (2, 0)] {
        attenuation[path][1] = c[amp].norm() / max;
        phase_v[path] = if c[amp].norm() > 0.0 { c[amp].arg() } else { 0.0 };
    }
    // Each of the three terms is heralded with probability 1/64 at the optimum.
    let predicted_probability = attenuation.iter().map(|a| a[1] * a[1]).sum::<f64>() / 64.0;
    DesignSettings { target: *target, attenuation, phase_v, predicted_probability }
}

/// Scheme I at its optimum followed by the designed losses and phases.
pub fn designed_circuit(settings: &DesignSettings) -> Result<Circuit> {
    let base = build_scheme_i(&SchemeParams::design_optimum(Scheme::I))?;
    let mut extra = Vec::new();
    for (k, m) in SIGNAL_MODES.iter().enumerate() {
        let [ah, av] = settings.attenuation[k];
        if ah < 1.0 || av < 1.0 {
            extra.push(Element::Attenuator(AttenuatorSpec::new(*m, ah, av)));
        }
        if settings.phase_v[k] != 0.0 {
            extra.push(Element::Phase(PhaseShifterSpec { target: (*m).into(), theta_v: settings.phase_v[k] }));
        }
    }
    base.with_appended(extra)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub settings: DesignSettings,
    /// Simulated D1V-heralded probability of the designed circuit.
    pub probability: f64,
    /// Simulated fidelity to the target; `None` when nothing is heralded.
    pub fidelity: Option<f64>,
}

/// Simulates the designed circuit and scores it against the target.
pub fn verify_design(settings: &DesignSettings) -> Result<DesignReport> {
    let circuit = designed_circuit(settings)?;
    let e = evaluate(&circuit, TriggerPolicy::D1V, &settings.target)?;
    let probability = e.branches.first().map_or(0.0, |b| b.probability);
    Ok(DesignReport { settings: settings.clone(), probability, fidelity: e.fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn equal_target_is_identity() {
        let s = design_w_class(&WTarget::equal());
        assert_eq!(s.attenuation, [[1.0; 2]; 3]);
        assert_eq!(s.phase_v, [0.0; 3]);
        assert!((s.predicted_probability - 3.0 / 64.0).abs() < 1e-15);
        assert_eq!(designed_circuit(&s).unwrap().elements().len(), 5);
    }

    #[test]
    fn teleportation_example_settings() {
        let s = design_w_class(&WTarget::teleportation_example());
        assert!((s.attenuation[0][1] - 0.5).abs() < 1e-15);
        assert!((s.attenuation[1][1] - 0.5).abs() < 1e-15);
        assert_eq!(s.attenuation[2], [1.0, 1.0]);
        assert_eq!(s.phase_v, [PI, PI, 0.0]);
        let r = verify_design(&s).unwrap();
        assert!(r.fidelity.unwrap() > 1.0 - 1e-9);
        assert!((r.probability - s.predicted_probability).abs() < 1e-12);
    }

    #[test]
    fn product_state_limit() {
        let s = design_w_class(&WTarget::from_real([1.0, 0.0, 0.0]).unwrap());
        assert_eq!(s.attenuation[0][1], 0.0);
        assert_eq!(s.attenuation[1][1], 0.0);
        let r = verify_design(&s).unwrap();
        assert!(r.fidelity.unwrap() > 1.0 - 1e-12);
        let state = crate::analysis::evaluate(&designed_circuit(&s).unwrap(), TriggerPolicy::D1V, &s.target)
            .unwrap()
            .conditional
            .unwrap();
        assert_eq!(state.len(), 1);
    }
}
