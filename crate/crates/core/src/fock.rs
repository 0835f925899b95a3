//! Polarization-resolved Fock states.
//!
//! A [`FockState`] is a sparse superposition of number-basis kets over an
//! ordered [`Registry`] of (spatial, polarization) modes. Basis kets are the
//! normalized number states `|n_1, n_2, ...>`, so the amplitudes stored here
//! are plain probability amplitudes; every `sqrt(n!)` factor is handled when
//! optical elements are applied (see [`crate::elements`]).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numfmt::sig17;
use crate::{Error, Result};

/// Amplitudes with magnitude below this are dropped from a state.
pub const PRUNE_TOL: f64 = 1e-15;

/// Squared norms below this are treated as the zero vector.
pub const DEGENERATE_NORM_SQR: f64 = 1e-24;

/// Tolerance on `|<psi|psi> - 1|` for a state to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            _ => Err(Error::Parse(format!("unknown polarization `{s}`"))),
        }
    }
}

/// Opaque spatial-path identifier such as `0`, `1'` or `aux-2`.
///
/// A trailing `p` after a purely numeric name is read as a prime, so `3p`
/// and `3'` name the same path (handy in shells and JSON keys).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct SpatialMode(String);

impl SpatialMode {
    pub fn new(name: impl AsRef<str>) -> Self {
        let name = name.as_ref().trim();
        if let Some(stem) = name.strip_suffix('p') {
            if !stem.is_empty() && stem.chars().all(|c| c.is_ascii_digit()) {
                return SpatialMode(format!("{stem}'"));
            }
        }
        SpatialMode(name.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Loss/dilation modes are named `aux-...`; post-selection forces them
    /// to vacuum unless a pattern says otherwise.
    pub fn is_aux(&self) -> bool {
        self.0.starts_with("aux")
    }

    pub fn aux_for(target: &SpatialMode) -> Self {
        SpatialMode(format!("aux-{}", target.0))
    }

    pub fn with(&self, pol: Polarization) -> ModeLabel {
        ModeLabel::new(self.clone(), pol)
    }
}

impl From<String> for SpatialMode {
    fn from(s: String) -> Self {
        SpatialMode::new(s)
    }
}

impl From<&str> for SpatialMode {
    fn from(s: &str) -> Self {
        SpatialMode::new(s)
    }
}

impl From<SpatialMode> for String {
    fn from(m: SpatialMode) -> Self {
        m.0
    }
}

impl fmt::Display for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub spatial: SpatialMode,
    pub pol: Polarization,
}

impl ModeLabel {
    pub fn new(spatial: impl Into<SpatialMode>, pol: Polarization) -> Self {
        ModeLabel { spatial: spatial.into(), pol }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.spatial, self.pol)
    }
}

/// Parses `"<spatial><H|V>"`, e.g. `"3'V"` or `"0H"`.
impl FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let last = chars.next_back().ok_or_else(|| Error::Parse("empty mode label".into()))?;
        let spatial = chars.as_str();
        if spatial.is_empty() {
            return Err(Error::Parse(format!("mode label `{s}` has no spatial part")));
        }
        Ok(ModeLabel::new(spatial, last.to_string().parse()?))
    }
}

/// Ordered, duplicate-free list of modes shared by every term of a state.
///
/// Cloning is cheap; equality compares the label lists.
#[derive(Debug, Clone)]
pub struct Registry(Arc<[ModeLabel]>);

impl PartialEq for Registry {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Registry {}

impl Registry {
    pub fn new(labels: Vec<ModeLabel>) -> Result<Self> {
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::Registry(format!("duplicate mode {a}")));
            }
        }
        Ok(Registry(labels.into()))
    }

    /// Both polarizations of each spatial mode, H first.
    pub fn from_spatial<S: Into<SpatialMode> + Clone>(spatial: &[S]) -> Result<Self> {
        let labels = spatial
            .iter()
            .cloned()
            .flat_map(|s| {
                let s: SpatialMode = s.into();
                Polarization::BOTH.map(|p| s.with(p))
            })
            .collect();
        Registry::new(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.0
    }

    pub fn index_of(&self, label: &ModeLabel) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn require(&self, label: &ModeLabel) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn contains_spatial(&self, spatial: &SpatialMode) -> bool {
        self.0.iter().any(|l| &l.spatial == spatial)
    }

    /// Distinct spatial modes in registry order.
    pub fn spatial_modes(&self) -> Vec<SpatialMode> {
        let mut out: Vec<SpatialMode> = Vec::new();
        for l in self.0.iter() {
            if !out.contains(&l.spatial) {
                out.push(l.spatial.clone());
            }
        }
        out
    }

    /// Indices of every polarization of `spatial`.
    pub fn indices_of_spatial(&self, spatial: &SpatialMode) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, l)| &l.spatial == spatial).map(|(i, _)| i).collect()
    }

    /// This registry followed by any modes of `other` not already present.
    pub fn union(&self, other: &Registry) -> Registry {
        let mut labels = self.0.to_vec();
        for l in other.labels() {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
        Registry(labels.into())
    }
}

/// Photon count per registry mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn new(counts: Vec<u32>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.0
    }
}

impl std::ops::Index<usize> for Occupation {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    registry: Registry,
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    pub fn vacuum(registry: Registry) -> Self {
        let n = registry.len();
        FockState::from_terms(registry, [(Occupation::vacuum(n), Complex64::new(1.0, 0.0))])
            .expect("vacuum has registry length")
    }

    /// Single normalized basis ket `|counts>`.
    pub fn number_state(registry: Registry, counts: Vec<u32>) -> Result<Self> {
        FockState::from_terms(registry, [(Occupation::new(counts), Complex64::new(1.0, 0.0))])
    }

    /// Number state given as `(label, count)` pairs; unlisted modes are empty.
    pub fn from_labels(registry: Registry, counts: &[(ModeLabel, u32)]) -> Result<Self> {
        let mut occ = vec![0; registry.len()];
        for (label, n) in counts {
            occ[registry.require(label)?] += n;
        }
        FockState::number_state(registry, occ)
    }

    /// Sums duplicate occupations and prunes small amplitudes.
    pub fn from_terms<I>(registry: Registry, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.len() != registry.len() {
                return Err(Error::Registry(format!(
                    "occupation has {} entries but registry has {} modes",
                    occ.len(),
                    registry.len()
                )));
            }
            *map.entry(occ).or_default() += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_TOL);
        Ok(FockState { registry, terms: map })
    }

    pub(crate) fn from_map_unchecked(registry: Registry, mut terms: BTreeMap<Occupation, Complex64>) -> Self {
        terms.retain(|_, a| a.norm() >= PRUNE_TOL);
        FockState { registry, terms }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Terms in lexicographic occupation order.
    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    /// Amplitude of the ket with the given `(label, count)` content.
    pub fn amplitude_of(&self, counts: &[(ModeLabel, u32)]) -> Result<Complex64> {
        let mut occ = vec![0; self.registry.len()];
        for (label, n) in counts {
            occ[self.registry.require(label)?] += n;
        }
        Ok(self.amplitude(&Occupation::new(occ)))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, a| acc + a.norm_sqr())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORMALIZED_TOL
    }

    /// Photon numbers present in the state, ascending.
    pub fn photon_numbers(&self) -> Vec<u32> {
        let mut n: Vec<u32> = self.terms.keys().map(Occupation::total).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn check_registry(&self, other: &FockState) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::Registry("states use different mode registries".into()));
        }
        Ok(())
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        self.check_registry(other)?;
        let (small, large, flip) =
            if self.len() <= other.len() { (self, other, false) } else { (other, self, true) };
        let mut acc = Complex64::default();
        for (occ, a) in &small.terms {
            if let Some(b) = large.terms.get(occ) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    /// `sum_i c_i |psi_i>`; no normalization.
    pub fn scale_add(states: &[(Complex64, &FockState)]) -> Result<FockState> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidParameter("scale_add needs at least one state".into()))?;
        let registry = first.1.registry.clone();
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (c, s) in states {
            first.1.check_registry(s)?;
            for (occ, a) in &s.terms {
                *map.entry(occ.clone()).or_default() += c * a;
            }
        }
        Ok(FockState::from_map_unchecked(registry, map))
    }

    pub fn scaled(&self, c: Complex64) -> FockState {
        let map = self.terms.iter().map(|(o, a)| (o.clone(), c * a)).collect();
        FockState::from_map_unchecked(self.registry.clone(), map)
    }

    /// Returns the normalized state and the original squared norm.
    pub fn normalize(&self) -> Result<(FockState, f64)> {
        let n2 = self.norm_sqr();
        if n2 < DEGENERATE_NORM_SQR {
            return Err(Error::DegenerateState(n2));
        }
        Ok((self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)), n2))
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Occupation) -> bool) -> FockState {
        let map = self.terms.iter().filter(|(o, _)| keep(o)).map(|(o, a)| (o.clone(), *a)).collect();
        FockState { registry: self.registry.clone(), terms: map }
    }

    /// Multiplies each amplitude by `f(occupation)`.
    pub fn map_amplitudes(&self, mut f: impl FnMut(&Occupation, Complex64) -> Complex64) -> FockState {
        let map = self.terms.iter().map(|(o, a)| (o.clone(), f(o, *a))).collect();
        FockState::from_map_unchecked(self.registry.clone(), map)
    }

    /// Applies the creation operator of `label` (with its `sqrt(n + 1)`).
    pub fn create(&self, label: &ModeLabel) -> Result<FockState> {
        let i = self.registry.require(label)?;
        let map = self
            .terms
            .iter()
            .map(|(o, a)| {
                let mut c = o.0.clone();
                c[i] += 1;
                (Occupation(c), a * (c_sqrt(o.0[i] + 1)))
            })
            .collect();
        Ok(FockState::from_map_unchecked(self.registry.clone(), map))
    }

    /// Re-expresses the state over a larger registry; new modes are empty.
    pub fn embed(&self, target: &Registry) -> Result<FockState> {
        let positions: Vec<usize> =
            self.registry.labels().iter().map(|l| target.require(l)).collect::<Result<_>>()?;
        let map = self
            .terms
            .iter()
            .map(|(o, a)| {
                let mut c = vec![0; target.len()];
                for (k, &p) in positions.iter().enumerate() {
                    c[p] = o.0[k];
                }
                (Occupation(c), *a)
            })
            .collect();
        Ok(FockState { registry: target.clone(), terms: map })
    }

    /// Restricts the state to the modes of `keep`.
    ///
    /// Every dropped mode must have the same occupation in all terms, which
    /// makes the result a pure state (a factor of a product).
    pub fn reduce_to(&self, keep: &Registry) -> Result<FockState> {
        let positions: Vec<usize> =
            keep.labels().iter().map(|l| self.registry.require(l)).collect::<Result<_>>()?;
        let dropped: Vec<usize> = (0..self.registry.len()).filter(|i| !positions.contains(i)).collect();
        let mut reference: Option<Vec<u32>> = None;
        let mut map = BTreeMap::new();
        for (o, a) in &self.terms {
            let rest: Vec<u32> = dropped.iter().map(|&i| o.0[i]).collect();
            match &reference {
                None => reference = Some(rest),
                Some(r) if *r != rest => {
                    return Err(Error::Registry(
                        "cannot drop modes whose occupation differs between terms".into(),
                    ))
                }
                Some(_) => {}
            }
            map.insert(Occupation(positions.iter().map(|&i| o.0[i]).collect()), *a);
        }
        Ok(FockState { registry: keep.clone(), terms: map })
    }

    /// Removes every polarization of `spatial` (see [`FockState::reduce_to`]).
    pub fn strip_spatial(&self, spatial: &SpatialMode) -> Result<FockState> {
        let keep: Vec<ModeLabel> =
            self.registry.labels().iter().filter(|l| &l.spatial != spatial).cloned().collect();
        self.reduce_to(&Registry::new(keep)?)
    }

    /// One line per term: `<counts comma list> <re> <im>`, lexicographic
    /// occupation order, 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (o, a) in &self.terms {
            let counts: Vec<String> = o.0.iter().map(u32::to_string).collect();
            out.push_str(&format!("{} {} {}\n", counts.join(","), sig17(a.re), sig17(a.im)));
        }
        out
    }

    /// Inverse of [`FockState::dump`].
    pub fn parse_dump(registry: Registry, text: &str) -> Result<FockState> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Parse(format!("state dump line {}: `{line}`", lineno + 1));
            let mut parts = line.split_whitespace();
            let counts = parts.next().ok_or_else(bad)?;
            let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let im: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let counts: Vec<u32> =
                counts.split(',').map(|c| c.parse().map_err(|_| bad())).collect::<Result<_>>()?;
            terms.push((Occupation(counts), Complex64::new(re, im)));
        }
        FockState::from_terms(registry, terms)
    }
}

fn c_sqrt(n: u32) -> Complex64 {
    Complex64::new(f64::from(n).sqrt(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn w_registry() -> Registry {
        Registry::from_spatial(&["2", "3", "3'"]).unwrap()
    }

    fn w_state(flavor: Polarization) -> FockState {
        let reg = w_registry();
        let other = flavor.flipped();
        let kets: Vec<FockState> = [[other, other, flavor], [other, flavor, other], [flavor, other, other]]
            .iter()
            .map(|pols| {
                let counts: Vec<(ModeLabel, u32)> =
                    ["2", "3", "3'"].iter().zip(pols).map(|(s, p)| (ModeLabel::new(*s, *p), 1)).collect();
                FockState::from_labels(reg.clone(), &counts).unwrap()
            })
            .collect();
        let w = c(1.0 / 3f64.sqrt(), 0.0);
        FockState::scale_add(&[(w, &kets[0]), (w, &kets[1]), (w, &kets[2])]).unwrap()
    }

    #[test]
    fn vacuum_is_normalized() {
        let reg = Registry::from_spatial(&["0", "1"]).unwrap();
        let v = FockState::number_state(reg.clone(), vec![0; 4]).unwrap();
        assert!(v.is_normalized());
        assert_eq!(v, FockState::vacuum(reg));
        assert_eq!(v.photon_numbers(), vec![0]);
    }

    #[test]
    fn pdc_like_number_state() {
        let reg = Registry::from_spatial(&["0"]).unwrap();
        let s = FockState::number_state(reg, vec![2, 2]).unwrap();
        assert_eq!(s.norm_sqr(), 1.0);
        assert_eq!(s.photon_numbers(), vec![4]);
    }

    #[test]
    fn length_mismatch_is_registry_error() {
        let reg = Registry::from_spatial(&["0"]).unwrap();
        assert!(matches!(FockState::number_state(reg, vec![1, 1, 1]), Err(Error::Registry(_))));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let l = ModeLabel::new("0", Polarization::H);
        assert!(Registry::new(vec![l.clone(), l]).is_err());
    }

    #[test]
    fn label_parsing_and_prime_alias() {
        let l: ModeLabel = "3pV".parse().unwrap();
        assert_eq!(l, ModeLabel::new("3'", Polarization::V));
        assert_eq!(l.to_string(), "3'V");
        assert!("H".parse::<ModeLabel>().is_err());
        assert!("0X".parse::<ModeLabel>().is_err());
        assert!(SpatialMode::new("aux-2").is_aux());
        assert_eq!(SpatialMode::new("p").as_str(), "p");
    }

    #[test]
    fn w_states_are_normalized_and_orthogonal() {
        let wv = w_state(Polarization::V);
        let wh = w_state(Polarization::H);
        assert!(wv.is_normalized());
        assert!((wv.inner(&wv).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(wv.inner(&wh).unwrap(), Complex64::default());
    }

    #[test]
    fn distinct_basis_kets_are_orthogonal() {
        let reg = w_registry();
        let a = FockState::number_state(reg.clone(), vec![1, 0, 1, 0, 0, 1]).unwrap();
        let b = FockState::number_state(reg, vec![1, 0, 0, 1, 1, 0]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), Complex64::default());
    }

    #[test]
    fn registry_mismatch_is_an_error() {
        let a = FockState::vacuum(Registry::from_spatial(&["0"]).unwrap());
        let b = FockState::vacuum(Registry::from_spatial(&["1"]).unwrap());
        assert!(a.inner(&b).is_err());
        assert!(FockState::scale_add(&[(c(1.0, 0.0), &a), (c(1.0, 0.0), &b)]).is_err());
    }

    #[test]
    fn scale_add_identity_and_hom_state() {
        let reg = Registry::new(vec![ModeLabel::new("a", Polarization::H), ModeLabel::new("b", Polarization::H)])
            .unwrap();
        let k20 = FockState::number_state(reg.clone(), vec![2, 0]).unwrap();
        let k02 = FockState::number_state(reg, vec![0, 2]).unwrap();
        let same = FockState::scale_add(&[(c(1.0, 0.0), &k20), (c(0.0, 0.0), &k02)]).unwrap();
        assert_eq!(same, k20);
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let hom = FockState::scale_add(&[(h, &k20), (h, &k02)]).unwrap();
        assert!(hom.is_normalized());
    }

    #[test]
    fn normalize_reports_squared_norm() {
        let wv = w_state(Polarization::V);
        let (n, p) = wv.normalize().unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!((n.inner(&wv).unwrap() - 1.0).norm() < 1e-15);
        let (n, p) = wv.scaled(c(2.0, 0.0)).normalize().unwrap();
        assert!((p - 4.0).abs() < 1e-14);
        assert!((n.inner(&wv).unwrap() - 1.0).norm() < 1e-15);
        let zero = wv.scaled(c(0.0, 0.0));
        assert!(matches!(zero.normalize(), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn create_applies_bosonic_factor() {
        let reg = Registry::from_spatial(&["0"]).unwrap();
        let s = FockState::number_state(reg.clone(), vec![2, 0]).unwrap();
        let t = s.create(&ModeLabel::new("0", Polarization::H)).unwrap();
        let occ = Occupation::new(vec![3, 0]);
        assert!((t.amplitude(&occ).re - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn embed_then_reduce_round_trips() {
        let small = w_state(Polarization::V);
        let big = Registry::from_spatial(&["1", "2", "3", "3'", "aux-2"]).unwrap();
        let e = small.embed(&big).unwrap();
        assert!(e.is_normalized());
        assert_eq!(e.reduce_to(&w_registry()).unwrap(), small);
    }

    #[test]
    fn reduce_rejects_entangled_drop() {
        let wv = w_state(Polarization::V);
        assert!(wv.strip_spatial(&SpatialMode::new("2")).is_err());
    }

    #[test]
    fn dump_is_sorted_and_parses_back() {
        let wv = w_state(Polarization::V).scaled(c(0.3, -0.7));
        let text = wv.dump();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert!(lines[0].starts_with("0,1,1,0,1,0 "));
        let back = FockState::parse_dump(wv.registry().clone(), &text).unwrap();
        assert_eq!(back, wv);
    }

    fn arb_state() -> impl Strategy<Value = FockState> {
        prop::collection::vec((prop::collection::vec(0u32..3, 4), -1.0f64..1.0, -1.0f64..1.0), 1..8).prop_map(
            |terms| {
                let reg = Registry::from_spatial(&["a", "b"]).unwrap();
                FockState::from_terms(reg, terms.into_iter().map(|(o, re, im)| (Occupation::new(o), c(re, im))))
                    .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn inner_is_conjugate_symmetric(a in arb_state(), b in arb_state()) {
            let ab = a.inner(&b).unwrap();
            let ba = b.inner(&a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-14);
        }

        #[test]
        fn parallelogram_law(a in arb_state(), b in arb_state()) {
            let one = c(1.0, 0.0);
            let sum = FockState::scale_add(&[(one, &a), (one, &b)]).unwrap();
            let diff = FockState::scale_add(&[(one, &a), (-one, &b)]).unwrap();
            let lhs = sum.norm_sqr() + diff.norm_sqr();
            let rhs = 2.0 * (a.norm_sqr() + b.norm_sqr());
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn number_state_round_trips(counts in prop::collection::vec(0u32..5, 6)) {
            let reg = w_registry();
            let s = FockState::number_state(reg, counts.clone()).unwrap();
            let (occ, amp) = s.terms().next().unwrap();
            prop_assert_eq!(occ.counts(), &counts[..]);
            prop_assert_eq!(*amp, c(1.0, 0.0));
            prop_assert_eq!(s.len(), 1);
        }
    }
}
