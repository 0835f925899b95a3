use serde::{Deserialize, Serialize};

use super::target::{fidelity, WTarget};
use crate::fock::FockState;
use crate::postselection::{trigger_select, Trigger, TriggerSetup};
use crate::schemes::{Circuit, Scheme, SchemeParams};
use crate::{Error, Result};

/// Which trigger outcome(s) a fidelity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerPolicy {
    /// Trigger photon found V.
    #[default]
    D1V,
    /// Trigger photon found H, signal rotated by 90 degrees.
    D1H,
    /// Probability-weighted average of both outcomes.
    Both,
}

impl std::str::FromStr for TriggerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1v" => Ok(TriggerPolicy::D1V),
            "d1h" => Ok(TriggerPolicy::D1H),
            "both" => Ok(TriggerPolicy::Both),
            _ => Err(Error::Parse(format!("unknown trigger policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub trigger: Trigger,
    /// Overall probability of the pattern and this trigger outcome.
    pub probability: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    /// Probability of one photon in every detected path.
    pub probability: f64,
    /// Fidelity to the target under the chosen policy; `None` when the
    /// relevant events never happen.
    pub fidelity: Option<f64>,
    pub branches: Vec<Branch>,
    /// Conditional state behind `fidelity` (the untriggered post-selected
    /// state for [`TriggerPolicy::Both`]).
    #[serde(skip)]
    pub conditional: Option<FockState>,
}

/// Post-selects `circuit`, splits on the trigger and scores the result
/// against the V flavor of `target`.
pub fn evaluate(circuit: &Circuit, policy: TriggerPolicy, target: &WTarget) -> Result<Evaluation> {
    let post = circuit.postselect()?;
    if circuit.trigger().is_none() {
        let fid = post.conditional.as_ref().map(|s| fidelity(s, target)).transpose()?;
        return Ok(Evaluation {
            probability: post.probability,
            fidelity: fid,
            branches: Vec::new(),
            conditional: post.conditional,
        });
    }
    let setup = TriggerSetup::of(circuit)?;
    let mut branches = Vec::with_capacity(2);
    let mut states = Vec::with_capacity(2);
    for t in [Trigger::D1V, Trigger::D1H] {
        let b = trigger_select(&post, &setup, t, true)?;
        let fid = b.conditional.as_ref().map(|s| fidelity(s, target)).transpose()?;
        branches.push(Branch { trigger: t, probability: b.probability, fidelity: fid });
        states.push(b.conditional);
    }
    let [sv, sh]: [Option<FockState>; 2] = states.try_into().expect("two branches");
    let (fid, conditional) = match policy {
        TriggerPolicy::D1V => (branches[0].fidelity, sv),
        TriggerPolicy::D1H => (branches[1].fidelity, sh),
        TriggerPolicy::Both => {
            let w: f64 = branches.iter().filter(|b| b.fidelity.is_some()).map(|b| b.probability).sum();
            let f = if w > 0.0 {
                Some(branches.iter().filter_map(|b| b.fidelity.map(|f| f * b.probability)).sum::<f64>() / w)
            } else {
                None
            };
            (f, post.conditional)
        }
    };
    Ok(Evaluation { probability: post.probability, fidelity: fid, branches, conditional })
}

/// The printed success probabilities, evaluated as written.
///
/// Scheme I `(2 sqrt6 r1 t1^3 r2 t2^2 r3 t3)^2`, Scheme II
/// `(2 sqrt6 r1^2 t1^2 r2 t2 r3 t3)^2`, single-photon sources
/// `(1/2)(sqrt6 r2 t2^2 r3 t3)^2`.
pub fn closed_form_probability(scheme: Scheme, params: &SchemeParams) -> Result<f64> {
    if !params.is_polarization_independent() {
        return Err(Error::InvalidParameter("closed forms assume polarization-independent splitters".into()));
    }
    params.validate(scheme)?;
    let r = |k: usize| params.r2[k][0].sqrt();
    let t = |k: usize| (1.0 - params.r2[k][0]).sqrt();
    let s6 = 6f64.sqrt();
    Ok(match scheme {
        Scheme::I => (2.0 * s6 * r(0) * t(0).powi(3) * r(1) * t(1).powi(2) * r(2) * t(2)).powi(2),
        Scheme::II => (2.0 * s6 * r(0).powi(2) * t(0).powi(2) * r(1) * t(1) * r(2) * t(2)).powi(2),
        Scheme::Sps => 0.5 * (s6 * r(1) * t(1).powi(2) * r(2) * t(2)).powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{build_scheme, build_scheme_i, PerturbationSpec};

    #[test]
    fn closed_form_examples() {
        let p = closed_form_probability(Scheme::I, &SchemeParams::design_optimum(Scheme::I)).unwrap();
        assert!((p - 3.0 / 32.0).abs() < 1e-15);
        let p = closed_form_probability(Scheme::II, &SchemeParams::uniform([0.5; 3])).unwrap();
        assert!((p - 3.0 / 32.0).abs() < 1e-15);
        let p = closed_form_probability(Scheme::I, &SchemeParams::uniform([0.5; 3])).unwrap();
        assert!((p - 0.046875).abs() < 1e-15);
        let bad = PerturbationSpec::symmetric(Scheme::I, [0.0, 0.01, 0.0]).to_params().unwrap();
        assert!(closed_form_probability(Scheme::I, &bad).is_err());
    }

    #[test]
    fn ideal_scheme_i_branches() {
        let c = build_scheme_i(&SchemeParams::design_optimum(Scheme::I)).unwrap();
        let e = evaluate(&c, TriggerPolicy::Both, &WTarget::equal()).unwrap();
        assert!((e.probability - 3.0 / 32.0).abs() < 1e-12);
        for b in &e.branches {
            assert!((b.probability - 3.0 / 64.0).abs() < 1e-12);
            assert!((b.fidelity.unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((e.fidelity.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sps_scheme_is_scored_without_trigger() {
        let c = build_scheme(Scheme::Sps, &SchemeParams::design_optimum(Scheme::Sps)).unwrap();
        let e = evaluate(&c, TriggerPolicy::D1V, &WTarget::equal()).unwrap();
        assert!(e.branches.is_empty());
        assert!((e.fidelity.unwrap() - 1.0).abs() < 1e-12);
        assert!((e.probability - 3.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn blocked_scheme_has_no_fidelity() {
        let c = build_scheme_i(&SchemeParams::uniform([0.0, 0.3, 0.5])).unwrap();
        let e = evaluate(&c, TriggerPolicy::D1V, &WTarget::equal()).unwrap();
        assert_eq!(e.probability, 0.0);
        assert_eq!(e.fidelity, None);
    }
}
