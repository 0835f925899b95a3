use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::{FockState, ModeLabel, Polarization, Registry, DEGENERATE_NORM_SQR};
use crate::schemes::SIGNAL_MODES;
use crate::{Error, Result};

/// Registry over the three signal paths.
pub fn w_registry() -> Registry {
    Registry::from_spatial(&SIGNAL_MODES).expect("signal paths are distinct")
}

/// Normalized amplitudes `(c1, c2, c3)` on `2H 3H 3'V`, `2H 3V 3'H` and
/// `2V 3H 3'H`. The H flavor swaps every polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Complex64; 3]", into = "[Complex64; 3]")]
pub struct WTarget {
    amplitudes: [Complex64; 3],
}

impl WTarget {
    /// Normalizes `raw`; fails when all three vanish.
    pub fn new(raw: [Complex64; 3]) -> Result<Self> {
        let n2: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
        if !n2.is_finite() || n2 < DEGENERATE_NORM_SQR {
            return Err(Error::InvalidParameter("target amplitudes are not normalizable".into()));
        }
        let n = n2.sqrt();
        Ok(WTarget { amplitudes: raw.map(|c| c / n) })
    }

    pub fn from_real(raw: [f64; 3]) -> Result<Self> {
        WTarget::new(raw.map(|x| Complex64::new(x, 0.0)))
    }

    /// `(1, 1, 1) / sqrt(3)`.
    pub fn equal() -> Self {
        WTarget::from_real([1.0; 3]).expect("nonzero")
    }

    /// `(sqrt(2/3), -1/sqrt(6), -1/sqrt(6))`.
    pub fn teleportation_example() -> Self {
        WTarget::from_real([2.0, -1.0, -1.0]).expect("nonzero")
    }

    pub fn amplitudes(&self) -> [Complex64; 3] {
        self.amplitudes
    }

    /// Polarizations of paths `2`, `3`, `3'` in each basis term.
    pub fn basis(flavor: Polarization) -> [[Polarization; 3]; 3] {
        let (o, f) = (flavor.flipped(), flavor);
        [[o, o, f], [o, f, o], [f, o, o]]
    }

    /// Target ket over `registry`, which must contain the signal paths.
    pub fn to_state(&self, flavor: Polarization, registry: &Registry) -> Result<FockState> {
        let mut terms = Vec::with_capacity(3);
        for (pols, c) in WTarget::basis(flavor).iter().zip(self.amplitudes) {
            let counts: Vec<(ModeLabel, u32)> =
                SIGNAL_MODES.iter().zip(pols).map(|(m, p)| (ModeLabel::new(*m, *p), 1)).collect();
            terms.push(FockState::from_labels(registry.clone(), &counts)?.scaled(c));
        }
        let refs: Vec<(Complex64, &FockState)> = terms.iter().map(|s| (Complex64::new(1.0, 0.0), s)).collect();
        FockState::scale_add(&refs)
    }
}

impl TryFrom<[Complex64; 3]> for WTarget {
    type Error = Error;

    fn try_from(raw: [Complex64; 3]) -> Result<Self> {
        WTarget::new(raw)
    }
}

impl From<WTarget> for [Complex64; 3] {
    fn from(t: WTarget) -> Self {
        t.amplitudes
    }
}

/// `|<a|b>|^2`.
pub fn state_fidelity(a: &FockState, b: &FockState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Fidelity of a normalized signal state to the V flavor of `target`.
pub fn fidelity(state: &FockState, target: &WTarget) -> Result<f64> {
    fidelity_to(state, target, Polarization::V)
}

pub fn fidelity_to(state: &FockState, target: &WTarget, flavor: Polarization) -> Result<f64> {
    state_fidelity(&target.to_state(flavor, state.registry())?, state)
}
