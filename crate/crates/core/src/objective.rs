//! Wideband SI power through a Tx/Rx beam pair, and the penalized fitness the
//! optimizer minimizes.
//!
//! Decision vectors are laid out as
//! `[θ_D, θ_U, ψ_D, ψ_U, g_tx[0..M_ds], g_rx[0..M_us]]`.

use num_complex::Complex64;

use crate::beamformer::{
    build_rx_beam, build_tx_beam, directivity_degradation, BeamWeights, GainVector,
};
use crate::channel::{BandSlice, SiChannel};
use crate::error::{Error, Result};
use crate::geometry::SteeringAngles;

/// Suppression substituted when the residual power is exactly zero.
pub const DEFAULT_DB_FLOOR: f64 = 300.0;

pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e3;

/// Allowed directivity loss as a fraction of the element count.
pub const DEFAULT_EPSILON_FRACTION: f64 = 0.05;

/// Number of angle coordinates at the front of a decision vector.
pub const ANGLE_COORDS: usize = 4;

/// `(1/N) Σ_n |f_Uᵀ H(:,:,n) f_D|²` over the samples of `band`.
pub fn si_power(
    f_u: &BeamWeights,
    f_d: &BeamWeights,
    ch: &SiChannel,
    band: &BandSlice,
) -> Result<f64> {
    if f_u.len() != ch.n_rx() {
        return Err(Error::DimensionMismatch {
            context: "rx beam length vs channel rx elements",
            expected: ch.n_rx(),
            actual: f_u.len(),
        });
    }
    if f_d.len() != ch.n_tx() {
        return Err(Error::DimensionMismatch {
            context: "tx beam length vs channel tx elements",
            expected: ch.n_tx(),
            actual: f_d.len(),
        });
    }
    if band.indices().end > ch.n_freqs() || band.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "band slice vs channel frequency count",
            expected: ch.n_freqs(),
            actual: band.indices().end,
        });
    }
    Ok(band_power(f_u.weights(), f_d.weights(), ch, band))
}

fn band_power(fu: &[Complex64], fd: &[Complex64], ch: &SiChannel, band: &BandSlice) -> f64 {
    let idx = band.indices();
    let mut acc = vec![Complex64::default(); idx.len()];
    for (u, wu) in fu.iter().enumerate() {
        for (d, wd) in fd.iter().enumerate() {
            let c = wu * wd;
            if c == Complex64::default() {
                continue;
            }
            for (a, h) in acc.iter_mut().zip(&ch.series(u, d)[idx.clone()]) {
                *a += c * h;
            }
        }
    }
    acc.iter().map(|a| a.norm_sqr()).sum::<f64>() / idx.len() as f64
}

/// Suppression in dB, `−10 log10(power)`. Zero (or negative) power has no
/// finite value and is reported as [`Error::BelowNumericFloor`].
pub fn to_db(power: f64) -> Result<f64> {
    if power > 0.0 {
        Ok(-10.0 * power.log10())
    } else {
        Err(Error::BelowNumericFloor(power))
    }
}

/// [`to_db`], substituting `floor_db` when the power is not positive.
pub fn to_db_or_floor(power: f64, floor_db: f64) -> f64 {
    to_db(power).unwrap_or(floor_db)
}

/// Directivity slack and penalty weight for the degradation constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintConfig {
    pub epsilon: f64,
    pub penalty_weight: f64,
}

impl ConstraintConfig {
    pub fn new(epsilon: f64, penalty_weight: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        if !(penalty_weight.is_finite() && penalty_weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "penalty weight must be > 0, got {penalty_weight}"
            )));
        }
        Ok(Self {
            epsilon,
            penalty_weight,
        })
    }

    /// 5% of the smaller sub-array's element count, penalty weight 10³.
    pub fn default_for(m_ds: usize, m_us: usize) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON_FRACTION * m_ds.min(m_us) as f64,
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiEvaluation {
    /// Band-averaged residual SI power (linear).
    pub mean_si_power: f64,
    /// `−10 log10(mean_si_power)`, or the floor when the power is zero.
    pub suppression_db: f64,
    pub tx_degradation: f64,
    pub rx_degradation: f64,
}

impl SiEvaluation {
    /// Residual SI level in dB (negative for a suppressed beam pair).
    pub fn si_level_db(&self) -> f64 {
        -self.suppression_db
    }

    pub fn is_feasible(&self, epsilon: f64) -> bool {
        self.tx_degradation <= epsilon && self.rx_degradation <= epsilon
    }
}

/// Beams and angles decoded from a decision vector.
#[derive(Debug, Clone)]
pub struct DecodedBeams {
    pub tx_angles: SteeringAngles,
    pub rx_angles: SteeringAngles,
    pub tx: BeamWeights,
    pub rx: BeamWeights,
}

/// One SI-suppression instance: a sub-array channel restricted to a band,
/// nominal user directions and the constraint settings.
#[derive(Debug, Clone)]
pub struct SiProblem {
    channel: SiChannel,
    band: BandSlice,
    nominal_tx: SteeringAngles,
    nominal_rx: SteeringAngles,
    constraints: ConstraintConfig,
}

impl SiProblem {
    /// `channel` is the sub-array channel; only the samples in `band` are kept.
    pub fn new(
        channel: &SiChannel,
        band: &BandSlice,
        nominal_tx: SteeringAngles,
        nominal_rx: SteeringAngles,
        constraints: ConstraintConfig,
    ) -> Result<Self> {
        let channel = channel.select_band(band)?;
        let band = BandSlice::full(&channel);
        Ok(Self {
            channel,
            band,
            nominal_tx,
            nominal_rx,
            constraints,
        })
    }

    pub fn channel(&self) -> &SiChannel {
        &self.channel
    }

    pub fn nominal_tx(&self) -> &SteeringAngles {
        &self.nominal_tx
    }

    pub fn nominal_rx(&self) -> &SteeringAngles {
        &self.nominal_rx
    }

    pub fn constraints(&self) -> &ConstraintConfig {
        &self.constraints
    }

    pub fn m_ds(&self) -> usize {
        self.channel.n_tx()
    }

    pub fn m_us(&self) -> usize {
        self.channel.n_rx()
    }

    /// Decision-vector length `4 + M_ds + M_us`.
    pub fn dimension(&self) -> usize {
        ANGLE_COORDS + self.m_ds() + self.m_us()
    }

    /// Packs angles and gains into a decision vector.
    pub fn encode(
        &self,
        tx_angles: &SteeringAngles,
        rx_angles: &SteeringAngles,
        tx_gains: &GainVector,
        rx_gains: &GainVector,
    ) -> Result<Vec<f64>> {
        if tx_gains.len() != self.m_ds() || rx_gains.len() != self.m_us() {
            return Err(Error::DimensionMismatch {
                context: "gain vectors vs sub-array sizes",
                expected: self.m_ds() + self.m_us(),
                actual: tx_gains.len() + rx_gains.len(),
            });
        }
        let mut x = vec![
            tx_angles.theta,
            rx_angles.theta,
            tx_angles.psi,
            rx_angles.psi,
        ];
        x.extend_from_slice(tx_gains.as_slice());
        x.extend_from_slice(rx_gains.as_slice());
        Ok(x)
    }

    /// Exact steering toward the nominal users with unit gains.
    pub fn nominal_point(&self) -> Vec<f64> {
        self.encode(
            &self.nominal_tx,
            &self.nominal_rx,
            &GainVector::unit(self.m_ds()),
            &GainVector::unit(self.m_us()),
        )
        .expect("unit gains match sub-array sizes")
    }

    pub fn decode(&self, x: &[f64]) -> Result<DecodedBeams> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                context: "decision vector length",
                expected: self.dimension(),
                actual: x.len(),
            });
        }
        let tx_angles = SteeringAngles::new(x[0], x[2])?;
        let rx_angles = SteeringAngles::new(x[1], x[3])?;
        let split = ANGLE_COORDS + self.m_ds();
        let tx_gains = GainVector::new(x[ANGLE_COORDS..split].to_vec())?;
        let rx_gains = GainVector::new(x[split..].to_vec())?;
        Ok(DecodedBeams {
            tx: build_tx_beam(self.channel.tx_layout(), &tx_angles, &tx_gains)?,
            rx: build_rx_beam(self.channel.rx_layout(), &rx_angles, &rx_gains)?,
            tx_angles,
            rx_angles,
        })
    }

    /// SI power and both directivity degradations for a decision vector.
    pub fn evaluate(&self, x: &[f64]) -> Result<SiEvaluation> {
        let beams = self.decode(x)?;
        let mean_si_power = band_power(
            beams.rx.weights(),
            beams.tx.weights(),
            &self.channel,
            &self.band,
        );
        Ok(SiEvaluation {
            mean_si_power,
            suppression_db: to_db_or_floor(mean_si_power, DEFAULT_DB_FLOOR),
            tx_degradation: directivity_degradation(&beams.tx, &self.nominal_tx)?,
            rx_degradation: directivity_degradation(&beams.rx, &self.nominal_rx)?,
        })
    }

    /// Hinge penalty `w · (max(0, δ_tx − ε) + max(0, δ_rx − ε))`.
    pub fn penalty(&self, eval: &SiEvaluation) -> f64 {
        let eps = self.constraints.epsilon;
        let hinge = (eval.tx_degradation - eps).max(0.0) + (eval.rx_degradation - eps).max(0.0);
        self.constraints.penalty_weight * hinge
    }

    /// SI power plus the constraint penalty; lower is better.
    pub fn fitness(&self, x: &[f64]) -> Result<f64> {
        let eval = self.evaluate(x)?;
        Ok(eval.mean_si_power + self.penalty(&eval))
    }
}
