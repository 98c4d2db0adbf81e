//! Gain-controlled RF beamformers and their directivity.
//!
//! A beam is `(1/√m) · Φ ⊙ g`, where `Φ` is the phase response toward the
//! (possibly perturbed) steering direction and `g` holds one real gain in
//! `[0, 1]` per element. Receive beams use the conjugated phase response.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{conjugate_response, phase_response, ArrayLayout, SteeringAngles};

/// One real gain coefficient per array element, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if let Some((i, g)) = gains
            .iter()
            .enumerate()
            .find(|(_, g)| !(0.0..=1.0).contains(*g))
        {
            return Err(Error::InvalidGain(format!(
                "gain[{i}] = {g} is outside [0, 1]"
            )));
        }
        Ok(Self(gains))
    }

    /// All gains equal to one (constant-modulus beam).
    pub fn unit(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn uniform(len: usize, gain: f64) -> Result<Self> {
        Self::new(vec![gain; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamKind {
    /// Downlink beamformer, built on the phase response.
    Tx,
    /// Uplink combiner, built on the conjugated phase response.
    Rx,
}

/// Complex weights of one sub-array beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    weights: Vec<Complex64>,
    layout: ArrayLayout,
    steer: SteeringAngles,
    kind: BeamKind,
}

impl BeamWeights {
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn layout(&self) -> &ArrayLayout {
        &self.layout
    }

    /// The direction the phase shifters were set for.
    pub fn steer(&self) -> &SteeringAngles {
        &self.steer
    }

    pub fn kind(&self) -> BeamKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Complex conjugate of the weights, with the opposite beam kind.
    pub fn conj(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w.conj()).collect(),
            kind: match self.kind {
                BeamKind::Tx => BeamKind::Rx,
                BeamKind::Rx => BeamKind::Tx,
            },
            ..self.clone()
        }
    }
}

fn build(
    layout: &ArrayLayout,
    angles: &SteeringAngles,
    gains: &GainVector,
    kind: BeamKind,
) -> Result<BeamWeights> {
    if gains.len() != layout.len() {
        return Err(Error::DimensionMismatch {
            context: "gain vector vs layout element count",
            expected: layout.len(),
            actual: gains.len(),
        });
    }
    let mut phase = phase_response(layout, angles)?;
    if kind == BeamKind::Rx {
        phase = conjugate_response(&phase);
    }
    let norm = 1.0 / (layout.len() as f64).sqrt();
    let weights = phase
        .entries()
        .iter()
        .zip(gains.as_slice())
        .map(|(p, g)| p * (g * norm))
        .collect();
    Ok(BeamWeights {
        weights,
        layout: *layout,
        steer: *angles,
        kind,
    })
}

/// Downlink beamformer `f_D = Φ(angles) ⊙ g / √m`.
pub fn build_tx_beam(
    layout: &ArrayLayout,
    angles: &SteeringAngles,
    gains: &GainVector,
) -> Result<BeamWeights> {
    build(layout, angles, gains, BeamKind::Tx)
}

/// Uplink combiner `f_U = Φ*(angles) ⊙ g / √m`.
pub fn build_rx_beam(
    layout: &ArrayLayout,
    angles: &SteeringAngles,
    gains: &GainVector,
) -> Result<BeamWeights> {
    build(layout, angles, gains, BeamKind::Rx)
}

/// Array gain of `beam` toward `at`.
///
/// Uses the matched inner product: `|Φ(at)^H f|²` for transmit beams and
/// `|f^T Φ(at)|²` for receive beams (whose weights already carry the
/// conjugate). With exact steering and unit gains this equals the element
/// count `m`, and by Cauchy-Schwarz it never exceeds `m`.
pub fn directivity(beam: &BeamWeights, at: &SteeringAngles) -> Result<f64> {
    let phase = phase_response(&beam.layout, at)?;
    let acc: Complex64 = match beam.kind {
        BeamKind::Tx => phase
            .entries()
            .iter()
            .zip(&beam.weights)
            .map(|(p, w)| p.conj() * w)
            .sum(),
        BeamKind::Rx => phase
            .entries()
            .iter()
            .zip(&beam.weights)
            .map(|(p, w)| p * w)
            .sum(),
    };
    Ok(acc.norm_sqr())
}

/// `m − directivity(beam, nominal)`: how much array gain toward the nominal
/// user direction was given up. A feasible beam keeps this at or below `ε`.
pub fn directivity_degradation(beam: &BeamWeights, nominal: &SteeringAngles) -> Result<f64> {
    Ok(beam.layout.len() as f64 - directivity(beam, nominal)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn deg(t: f64, p: f64) -> SteeringAngles {
        SteeringAngles::from_degrees(t, p).unwrap()
    }

    fn assert_weights(beam: &BeamWeights, want: &[f64]) {
        assert_eq!(beam.len(), want.len());
        for (w, e) in beam.weights().iter().zip(want) {
            assert!((w - Complex64::new(*e, 0.0)).norm() < 1e-12, "{w} vs {e}");
        }
    }

    #[test]
    fn broadside_unit_gain_weights() {
        let l = ArrayLayout::ura(2, 2).unwrap();
        let b = build_tx_beam(&l, &deg(0.0, 0.0), &GainVector::unit(4)).unwrap();
        assert_weights(&b, &[0.5; 4]);
        let b = build_rx_beam(&l, &deg(0.0, 33.0), &GainVector::unit(4)).unwrap();
        assert_weights(&b, &[0.5; 4]);
    }

    #[test]
    fn zero_gains_give_zero_beam() {
        let l = ArrayLayout::ura(3, 2).unwrap();
        let b = build_tx_beam(&l, &deg(40.0, 10.0), &GainVector::uniform(6, 0.0).unwrap()).unwrap();
        assert!(b.weights().iter().all(|w| w.norm() == 0.0));
        assert_eq!(directivity(&b, &deg(12.0, 80.0)).unwrap(), 0.0);
        assert_eq!(directivity_degradation(&b, &deg(40.0, 10.0)).unwrap(), 6.0);
    }

    #[test]
    fn tapered_beam_at_ninety_ninety() {
        // Phase response is [1, -1, 1, -1]; gains taper the odd entries.
        let l = ArrayLayout::ura(2, 2).unwrap();
        let g = GainVector::new(vec![1.0, 0.5, 1.0, 0.5]).unwrap();
        let b = build_tx_beam(&l, &deg(90.0, 90.0), &g).unwrap();
        assert_weights(&b, &[0.5, -0.25, 0.5, -0.25]);
        let b = build_rx_beam(&l, &deg(90.0, 90.0), &GainVector::unit(4)).unwrap();
        assert_weights(&b, &[0.5, -0.5, 0.5, -0.5]);
    }

    #[test]
    fn directivity_examples() {
        let l = ArrayLayout::ura(2, 2).unwrap();
        let b = build_tx_beam(&l, &deg(90.0, 90.0), &GainVector::unit(4)).unwrap();
        assert!((directivity(&b, &deg(90.0, 90.0)).unwrap() - 4.0).abs() < 1e-12);
        assert!(directivity(&b, &deg(0.0, 17.0)).unwrap() < 1e-24);
        assert!(directivity_degradation(&b, &deg(90.0, 90.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn uniform_gain_degradation_closed_form() {
        // At exact steering, directivity = (Σ g/√m)² = m g², so degradation = m(1 − g²).
        let l = ArrayLayout::ura(4, 4).unwrap();
        let a = deg(63.0, 141.0);
        for g in [0.0, 0.3, 0.75, 1.0] {
            for build_fn in [build_tx_beam, build_rx_beam] {
                let b = build_fn(&l, &a, &GainVector::uniform(16, g).unwrap()).unwrap();
                let got = directivity_degradation(&b, &a).unwrap();
                assert!((got - 16.0 * (1.0 - g * g)).abs() < 1e-12, "g={g}: {got}");
            }
        }
    }

    #[test]
    fn rejects_bad_gains() {
        assert!(GainVector::new(vec![0.5, 1.5]).is_err());
        assert!(GainVector::new(vec![-0.1]).is_err());
        assert!(GainVector::new(vec![f64::NAN]).is_err());
        let l = ArrayLayout::ura(2, 2).unwrap();
        let err = build_tx_beam(&l, &deg(0.0, 0.0), &GainVector::unit(3)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                actual: 3,
                ..
            }
        ));
    }

    fn gains_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, n)
    }

    proptest! {
        #[test]
        fn rx_is_conjugate_of_tx((mx, my, g) in (1usize..5, 1usize..5)
                                    .prop_flat_map(|(a, b)| (Just(a), Just(b), gains_strategy(a * b))),
                                 theta in 0.0f64..(2.0 * PI), psi in 0.0f64..(2.0 * PI)) {
            let l = ArrayLayout::ura(mx, my).unwrap();
            let a = SteeringAngles::new(theta, psi).unwrap();
            let g = GainVector::new(g).unwrap();
            let tx = build_tx_beam(&l, &a, &g).unwrap();
            let rx = build_rx_beam(&l, &a, &g).unwrap();
            let conj = tx.conj();
            prop_assert_eq!(rx.weights(), conj.weights());
            for w in tx.weights() {
                prop_assert!(w.norm() <= 1.0 / (l.len() as f64).sqrt() + 1e-15);
            }
        }

        #[test]
        fn directivity_bounded_and_scales((mx, my, g) in (1usize..5, 1usize..5)
                                             .prop_flat_map(|(a, b)| (Just(a), Just(b), gains_strategy(a * b))),
                                          steer in (0.0f64..(2.0 * PI), 0.0f64..(2.0 * PI)),
                                          at in (0.0f64..(2.0 * PI), 0.0f64..(2.0 * PI)),
                                          c in 0.0f64..=1.0, rx in any::<bool>()) {
            let l = ArrayLayout::ura(mx, my).unwrap();
            let s = SteeringAngles::new(steer.0, steer.1).unwrap();
            let at = SteeringAngles::new(at.0, at.1).unwrap();
            let build_fn = if rx { build_rx_beam } else { build_tx_beam };
            let m = l.len() as f64;
            let scaled: Vec<f64> = g.iter().map(|x| x * c).collect();
            let b = build_fn(&l, &s, &GainVector::new(g).unwrap()).unwrap();
            let bc = build_fn(&l, &s, &GainVector::new(scaled).unwrap()).unwrap();
            let d = directivity(&b, &at).unwrap();
            prop_assert!(d <= m + 1e-9);
            prop_assert!(directivity_degradation(&b, &s).unwrap() >= -1e-9);
            let dc = directivity(&bc, &at).unwrap();
            prop_assert!((dc - c * c * d).abs() <= 1e-12 * m);
        }
    }
}
