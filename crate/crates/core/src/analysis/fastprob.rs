use num_complex::Complex64;

use crate::elements::factorial;
use crate::fock::Polarization;
use crate::schemes::Circuit;
use crate::Result;

/// Permanent of a square row-major matrix by Ryser's formula.
pub fn permanent(a: &[Vec<Complex64>]) -> Complex64 {
    let n = a.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut total = Complex64::default();
    let mut row_sums = vec![Complex64::default(); n];
    // Gray-code walk over column subsets.
    let mut subset = 0usize;
    for k in 1..(1usize << n) {
        let j = k.trailing_zeros() as usize;
        let adding = subset & (1 << j) == 0;
        subset ^= 1 << j;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += a[i][j];
            } else {
                *s -= a[i][j];
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if subset.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Probability of one photon in every detected path, including the source
/// weight; identical to `circuit.postselect()?.probability`.
///
/// When the source is a single number state whose photon count equals the
/// number of detected paths, the amplitudes are permanents of the composed
/// mode map and no state is propagated. Otherwise this falls back to full
/// simulation.
pub fn detection_probability(circuit: &Circuit) -> Result<f64> {
    let source = circuit.source();
    let detected = circuit.detected_modes();
    let mut terms = source.terms();
    let (occ, amp) = match (terms.next(), terms.next()) {
        (Some(t), None) if t.0.total() as usize == detected.len() && detected.len() <= 16 => t,
        _ => return circuit.postselect().map(|r| r.probability),
    };
    let reg = circuit.registry();
    let map = circuit.composed_map()?;
    let m = map.matrix();
    let mut cols = Vec::new();
    let mut norm = 1.0;
    for (i, &n) in occ.counts().iter().enumerate() {
        cols.extend(std::iter::repeat_n(i, n as usize));
        norm *= factorial(n);
    }
    let rows: Vec<[usize; 2]> = detected
        .iter()
        .map(|d| Ok([reg.require(&d.with(Polarization::H))?, reg.require(&d.with(Polarization::V))?]))
        .collect::<Result<_>>()?;
    let n = cols.len();
    let mut total = 0.0;
    let mut sub = vec![vec![Complex64::default(); n]; n];
    for mask in 0..(1usize << n) {
        for (i, row) in sub.iter_mut().enumerate() {
            let r = rows[i][(mask >> i) & 1];
            for (j, &c) in cols.iter().enumerate() {
                row[j] = m[(r, c)];
            }
        }
        total += permanent(&sub).norm_sqr();
    }
    Ok(total / norm * amp.norm_sqr() / source.norm_sqr() * circuit.source_weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{build_scheme, Scheme, SchemeParams};
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn small_permanents() {
        assert_eq!(permanent(&[vec![c(3.0)]]), c(3.0));
        let a = vec![vec![c(1.0), c(2.0)], vec![c(3.0), c(4.0)]];
        assert_eq!(permanent(&a), c(10.0));
        let ones = vec![vec![c(1.0); 4]; 4];
        assert_eq!(permanent(&ones), c(24.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn agrees_with_simulation(
            s in 0usize..3,
            r in proptest::array::uniform3(0.0f64..1.0),
            phi in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let scheme = Scheme::ALL[s];
            let params = SchemeParams::uniform(r).with_phases(phi, [0.3, -0.2, 1.1]);
            let circuit = build_scheme(scheme, &params).unwrap();
            let slow = circuit.postselect().unwrap().probability;
            let fast = detection_probability(&circuit).unwrap();
            prop_assert!((slow - fast).abs() < 1e-13, "{slow} vs {fast}");
        }
    }
}
