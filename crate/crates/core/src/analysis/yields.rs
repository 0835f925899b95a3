use serde::{Deserialize, Serialize};

use crate::postselection::{threshold_outcome_probability, DetectorModel};
use crate::schemes::{build_scheme, Scheme, SchemeParams, SourceDef};
use crate::{Error, Result};

/// Published W-state success probability at the Scheme I/II optimum.
const W_PROBABILITY: f64 = 3.0 / 32.0;

/// Source rates entering the yield comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YieldModel {
    /// Pair-generation probability per pulse.
    pub gamma: f64,
    /// Single-photon probability per pulse and source.
    pub sps_rate: f64,
    /// Gain of stimulated over spontaneous emission.
    pub stimulated_gain: f64,
    /// GHZ success probability from two pairs.
    pub ghz_reference: f64,
}

impl Default for YieldModel {
    fn default() -> Self {
        YieldModel { gamma: 1e-4, sps_rate: 0.4, stimulated_gain: 16.0, ghz_reference: 3.0 / 8.0 }
    }
}

impl YieldModel {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("gamma", self.gamma), ("sps_rate", self.sps_rate), ("ghz_reference", self.ghz_reference)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")));
            }
        }
        if !(self.stimulated_gain.is_finite() && self.stimulated_gain >= 1.0) {
            return Err(Error::InvalidParameter(format!("stimulated_gain = {} below 1", self.stimulated_gain)));
        }
        if self.ghz_reference == 0.0 {
            return Err(Error::InvalidParameter("ghz_reference must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldReport {
    pub model: YieldModel,
    /// Success probability per two-pair event used for the comparison.
    pub w_probability: f64,
    /// W yield relative to the GHZ yield from the same two-pair events.
    pub ghz_ratio: f64,
    pub two_pair_rate: f64,
    pub w_rate_spontaneous: f64,
    pub stimulated_gain: f64,
    pub w_rate_stimulated: f64,
    /// All three single-photon sources firing in one pulse.
    pub sps_three_photon_rate: f64,
    /// Simulated SPS-scheme probability at `r2^2 = r3^2 = 1/2`.
    pub sps_scheme_probability: f64,
    pub sps_w_rate: f64,
}

pub fn yield_report(model: &YieldModel) -> Result<YieldReport> {
    model.validate()?;
    let sps_scheme_probability =
        build_scheme(Scheme::Sps, &SchemeParams::design_optimum(Scheme::Sps))?.postselect()?.probability;
    let two_pair_rate = model.gamma * model.gamma;
    let sps_three_photon_rate = model.sps_rate.powi(3);
    Ok(YieldReport {
        model: *model,
        w_probability: W_PROBABILITY,
        ghz_ratio: W_PROBABILITY / model.ghz_reference,
        two_pair_rate,
        w_rate_spontaneous: two_pair_rate * W_PROBABILITY,
        stimulated_gain: model.stimulated_gain,
        w_rate_stimulated: model.stimulated_gain * two_pair_rate * W_PROBABILITY,
        sps_three_photon_rate,
        sps_scheme_probability,
        sps_w_rate: sps_three_photon_rate * sps_scheme_probability,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContaminationReport {
    pub scheme: Scheme,
    pub gamma: f64,
    pub detectors: DetectorModel,
    /// Relative weight of three-pair to two-pair emission (`gamma`).
    pub generation_ratio: f64,
    /// Probability that a two-pair event passes the detection pattern.
    pub two_pair_acceptance: f64,
    /// Same for a three-pair event.
    pub three_pair_acceptance: f64,
    pub signal_rate: f64,
    pub false_accept_rate: f64,
    /// `false_accept_rate / signal_rate`.
    pub ratio: f64,
}

/// Three-pair false accepts relative to two-pair events, with `n`-pair
/// emission weighted by `gamma^n` and both propagated through the scheme
/// at its optimum.
pub fn contamination_estimate(scheme: Scheme, model: &YieldModel, detectors: &DetectorModel) -> Result<ContaminationReport> {
    let gamma = model.gamma;
    if !(gamma > 0.0 && gamma <= 0.1) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 0.1]")));
    }
    let eta = detectors.efficiency;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("detector efficiency {eta} outside (0, 1]")));
    }
    if scheme == Scheme::Sps {
        return Err(Error::InvalidParameter("multi-pair contamination applies to the down-conversion schemes".into()));
    }
    let circuit = build_scheme(scheme, &SchemeParams::design_optimum(scheme))?;
    let pattern = circuit.detection_pattern();
    let mut acceptance = [0.0; 2];
    for (slot, pairs) in acceptance.iter_mut().zip([2, 3]) {
        let c = circuit.with_source(SourceDef::Pdc { pairs })?;
        *slot = threshold_outcome_probability(&c.run()?, detectors, &pattern)?;
    }
    let (w2, w3) = (gamma.powi(2), gamma.powi(3));
    let signal_rate = w2 * acceptance[0];
    let false_accept_rate = w3 * acceptance[1];
    Ok(ContaminationReport {
        scheme,
        gamma,
        detectors: *detectors,
        generation_ratio: w3 / w2,
        two_pair_acceptance: acceptance[0],
        three_pair_acceptance: acceptance[1],
        signal_rate,
        false_accept_rate,
        ratio: if signal_rate > 0.0 { false_accept_rate / signal_rate } else { f64::NAN },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_report() {
        let r = yield_report(&YieldModel::default()).unwrap();
        assert_eq!(r.ghz_ratio, 0.25);
        assert_eq!(r.stimulated_gain, 16.0);
        assert!((r.sps_three_photon_rate - 0.064).abs() < 1e-15);
        assert!((r.sps_w_rate - 0.064 * 3.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn model_validation() {
        let m = YieldModel { stimulated_gain: 0.5, ..YieldModel::default() };
        assert!(yield_report(&m).is_err());
        let m = YieldModel { sps_rate: 1.5, ..YieldModel::default() };
        assert!(m.validate().is_err());
    }

    #[test]
    fn ideal_detectors_reject_six_photons() {
        let r = contamination_estimate(Scheme::I, &YieldModel::default(), &DetectorModel::ideal()).unwrap();
        assert_eq!(r.three_pair_acceptance, 0.0);
        assert_eq!(r.ratio, 0.0);
        assert!((r.generation_ratio - 1e-4).abs() < 1e-18);
        assert!((r.two_pair_acceptance - 3.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_inputs() {
        let d = DetectorModel::threshold(0.6);
        let m = YieldModel { gamma: 0.2, ..YieldModel::default() };
        assert!(contamination_estimate(Scheme::I, &m, &d).is_err());
        assert!(contamination_estimate(Scheme::I, &YieldModel::default(), &DetectorModel::threshold(0.0)).is_err());
        assert!(contamination_estimate(Scheme::Sps, &YieldModel::default(), &d).is_err());
    }
}
