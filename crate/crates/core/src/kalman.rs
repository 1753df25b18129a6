//! Constant-velocity Kalman filter over bounding boxes.
//!
//! State is `[u, v, s, r, u̇, v̇, ṡ]`: box center, area, aspect ratio
//! (width / height) and the rates of the first three. The aspect ratio is
//! modelled as constant. One step is one frame.

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::linalg::{self, Mat};

pub const STATE_DIM: usize = 7;
pub const MEAS_DIM: usize = 4;

/// Noise model. Standard deviations scale with the box: position-like terms
/// with `sqrt(area)`, area terms with `area`, aspect terms with the ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KalmanConfig {
    /// Relative std of position-like components per frame.
    pub std_weight_position: f64,
    /// Relative std of velocity components per frame.
    pub std_weight_velocity: f64,
    /// Relative std of the measurement.
    pub std_weight_measurement: f64,
    /// Multiplier applied to the position stds in the initial covariance.
    pub init_position_factor: f64,
    /// Multiplier applied to the velocity stds in the initial covariance.
    pub init_velocity_factor: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            std_weight_measurement: 1.0 / 20.0,
            init_position_factor: 1.0,
            init_velocity_factor: 1000.0,
        }
    }
}

impl KalmanConfig {
    fn position_stds(weight: f64, mean: &[f64; STATE_DIM]) -> [f64; MEAS_DIM] {
        let (s, r) = (mean[2].abs(), mean[3].abs());
        let size = libm::sqrt(s);
        [weight * size, weight * size, 2.0 * weight * s, weight * r]
    }

    fn velocity_stds(weight: f64, mean: &[f64; STATE_DIM]) -> [f64; 3] {
        let s = mean[2].abs();
        let size = libm::sqrt(s);
        [weight * size, weight * size, 2.0 * weight * s]
    }

    /// Diagonal of the process noise `Q` for a state with the given mean.
    pub fn process_noise_diag(&self, mean: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
        let p = Self::position_stds(self.std_weight_position, mean);
        let v = Self::velocity_stds(self.std_weight_velocity, mean);
        [p[0], p[1], p[2], p[3], v[0], v[1], v[2]].map(|x| x * x)
    }

    /// Diagonal of the measurement noise `R` for a state with the given mean.
    pub fn measurement_noise_diag(&self, mean: &[f64; STATE_DIM]) -> [f64; MEAS_DIM] {
        Self::position_stds(self.std_weight_measurement, mean).map(|x| x * x)
    }

    /// Diagonal of the initial covariance for a state with the given mean.
    pub fn initial_covariance_diag(&self, mean: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
        let p = Self::position_stds(self.std_weight_position * self.init_position_factor, mean);
        let v = Self::velocity_stds(self.std_weight_velocity * self.init_velocity_factor, mean);
        [p[0], p[1], p[2], p[3], v[0], v[1], v[2]].map(|x| x * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub mean: [f64; STATE_DIM],
    pub covariance: Mat<STATE_DIM, STATE_DIM>,
}

impl KalmanState {
    /// True when the state cannot be turned into a box (area or ratio ≤ 0).
    pub fn is_degenerate(&self) -> bool {
        !(self.mean[2] > 0.0 && self.mean[3] > 0.0) || !self.mean.iter().all(|m| m.is_finite())
    }

    pub fn to_bbox(&self) -> Result<BBox> {
        state_to_bbox(self)
    }
}

/// Measurement vector `[u, v, s, r]` of a box.
pub fn bbox_to_measurement(b: &BBox) -> [f64; MEAS_DIM] {
    let (u, v) = b.center();
    [u, v, b.width * b.height, b.width / b.height]
}

pub fn state_to_bbox(st: &KalmanState) -> Result<BBox> {
    let [u, v, s, r, ..] = st.mean;
    if !(s > 0.0 && r > 0.0) {
        return Err(Error::InvalidInput(
            "state has nonpositive area or aspect ratio",
        ));
    }
    let w = libm::sqrt(s * r);
    let h = s / w;
    BBox::checked(u - w / 2.0, v - h / 2.0, w, h)
}

fn transition() -> Mat<STATE_DIM, STATE_DIM> {
    let mut f = linalg::identity::<STATE_DIM>();
    f[0][4] = 1.0;
    f[1][5] = 1.0;
    f[2][6] = 1.0;
    f
}

fn observation() -> Mat<MEAS_DIM, STATE_DIM> {
    let mut h = [[0.0; STATE_DIM]; MEAS_DIM];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    h
}

fn symmetrize<const N: usize>(m: &mut Mat<N, N>) {
    for i in 0..N {
        for j in i + 1..N {
            let avg = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KalmanFilter {
    pub config: KalmanConfig,
}

impl KalmanFilter {
    pub fn new(config: KalmanConfig) -> Self {
        Self { config }
    }

    /// New state centered on `b` with zero velocity.
    pub fn init_from_bbox(&self, b: &BBox) -> Result<KalmanState> {
        b.validate()?;
        let z = bbox_to_measurement(b);
        let mean = [z[0], z[1], z[2], z[3], 0.0, 0.0, 0.0];
        let covariance = linalg::diag(&self.config.initial_covariance_diag(&mean));
        Ok(KalmanState { mean, covariance })
    }

    /// One-frame prediction. The result may be degenerate (see
    /// [`KalmanState::is_degenerate`]); callers decide what to do with it.
    pub fn predict(&self, st: &KalmanState) -> KalmanState {
        let f = transition();
        let q = self.config.process_noise_diag(&st.mean);
        let mean = linalg::mul_vec(&f, &st.mean);
        let mut covariance = linalg::mul(&linalg::mul(&f, &st.covariance), &linalg::transpose(&f));
        for (i, qi) in q.iter().enumerate() {
            covariance[i][i] += qi;
        }
        symmetrize(&mut covariance);
        KalmanState { mean, covariance }
    }

    /// Kalman correction with the box `z` as measurement.
    pub fn update(&self, st: &KalmanState, z: &BBox) -> Result<KalmanState> {
        z.validate()?;
        let h = observation();
        let ht = linalg::transpose(&h);
        let meas = bbox_to_measurement(z);
        let predicted = linalg::mul_vec(&h, &st.mean);
        let mut innovation = [0.0; MEAS_DIM];
        for i in 0..MEAS_DIM {
            innovation[i] = meas[i] - predicted[i];
        }

        let p_ht = linalg::mul(&st.covariance, &ht);
        let mut s = linalg::mul(&h, &p_ht);
        for (i, ri) in self
            .config
            .measurement_noise_diag(&st.mean)
            .iter()
            .enumerate()
        {
            s[i][i] += ri;
        }
        let s_inv = linalg::spd_inverse(&s)?;
        let gain = linalg::mul(&p_ht, &s_inv);

        let correction = linalg::mul_vec(&gain, &innovation);
        let mut mean = st.mean;
        for i in 0..STATE_DIM {
            mean[i] += correction[i];
        }

        let kh = linalg::mul(&gain, &h);
        let mut i_kh = linalg::identity::<STATE_DIM>();
        for i in 0..STATE_DIM {
            for j in 0..STATE_DIM {
                i_kh[i][j] -= kh[i][j];
            }
        }
        let mut covariance = linalg::mul(&i_kh, &st.covariance);
        symmetrize(&mut covariance);
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::Numeric("kalman update produced a non-finite mean"));
        }
        Ok(KalmanState { mean, covariance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kf() -> KalmanFilter {
        KalmanFilter::default()
    }

    #[test]
    fn init_examples() {
        let st = kf().init_from_bbox(&BBox::new(0.0, 0.0, 2.0, 2.0)).unwrap();
        assert_eq!(st.mean, [1.0, 1.0, 4.0, 1.0, 0.0, 0.0, 0.0]);
        let st = kf()
            .init_from_bbox(&BBox::new(10.0, 20.0, 4.0, 8.0))
            .unwrap();
        assert_eq!(st.mean, [12.0, 24.0, 32.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(st.to_bbox().unwrap(), BBox::new(10.0, 20.0, 4.0, 8.0));
        assert!(kf()
            .init_from_bbox(&BBox::new(0.0, 0.0, -1.0, 2.0))
            .is_err());
    }

    #[test]
    fn initial_velocity_is_inflated() {
        let st = kf()
            .init_from_bbox(&BBox::new(0.0, 0.0, 20.0, 40.0))
            .unwrap();
        let q = kf().config.process_noise_diag(&st.mean);
        for i in 4..STATE_DIM {
            assert!(st.covariance[i][i] > q[i]);
        }
    }

    #[test]
    fn predict_examples() {
        let st = kf().init_from_bbox(&BBox::new(0.0, 0.0, 2.0, 2.0)).unwrap();
        let p = kf().predict(&st);
        assert_eq!(p.mean, st.mean);
        for i in 0..STATE_DIM {
            assert!(p.covariance[i][i] > st.covariance[i][i]);
        }

        let moving = KalmanState {
            mean: [0.0, 0.0, 4.0, 1.0, 2.0, 3.0, 0.0],
            covariance: st.covariance,
        };
        assert_eq!(
            kf().predict(&moving).mean,
            [2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 0.0]
        );
    }

    #[test]
    fn degenerate_prediction_is_flagged() {
        let st = KalmanState {
            mean: [5.0, 5.0, 4.0, 1.0, 0.0, 0.0, -10.0],
            covariance: linalg::identity(),
        };
        let p = kf().predict(&st);
        assert!(p.is_degenerate());
        assert!(p.to_bbox().is_err());
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let b = BBox::new(10.0, 10.0, 20.0, 40.0);
        let st = kf().predict(&kf().init_from_bbox(&b).unwrap());
        let up = kf().update(&st, &b).unwrap();
        for i in 0..STATE_DIM {
            assert!((up.mean[i] - st.mean[i]).abs() < 1e-9);
            assert!(up.covariance[i][i] <= st.covariance[i][i] + 1e-12);
        }
    }

    #[test]
    fn tiny_measurement_noise_snaps_to_measurement() {
        let filter = KalmanFilter::new(KalmanConfig {
            std_weight_measurement: 1e-9,
            ..KalmanConfig::default()
        });
        let st = filter.predict(
            &filter
                .init_from_bbox(&BBox::new(0.0, 0.0, 20.0, 40.0))
                .unwrap(),
        );
        let z = BBox::new(3.0, -2.0, 22.0, 41.0);
        let up = filter.update(&st, &z).unwrap();
        let m = bbox_to_measurement(&z);
        for i in 0..MEAS_DIM {
            assert!((up.mean[i] - m[i]).abs() < 1e-6, "component {i}");
        }
    }

    #[test]
    fn singular_innovation_is_reported() {
        let filter = KalmanFilter::new(KalmanConfig {
            std_weight_measurement: 0.0,
            ..KalmanConfig::default()
        });
        let st = KalmanState {
            mean: [1.0, 1.0, 4.0, 1.0, 0.0, 0.0, 0.0],
            covariance: [[0.0; STATE_DIM]; STATE_DIM],
        };
        assert!(matches!(
            filter.update(&st, &BBox::new(0.0, 0.0, 2.0, 2.0)),
            Err(Error::Numeric(_))
        ));
    }

    fn trace(m: &Mat<STATE_DIM, STATE_DIM>) -> f64 {
        (0..STATE_DIM).map(|i| m[i][i]).sum()
    }

    proptest! {
        #[test]
        fn init_roundtrip(l in -500.0..500.0f64, t in -500.0..500.0f64, w in 0.5..300.0f64, h in 0.5..300.0f64) {
            let b = BBox::new(l, t, w, h);
            let out = kf().init_from_bbox(&b).unwrap().to_bbox().unwrap();
            prop_assert!((out.left - l).abs() < 1e-9);
            prop_assert!((out.top - t).abs() < 1e-9);
            prop_assert!((out.width - w).abs() < 1e-9);
            prop_assert!((out.height - h).abs() < 1e-9);
        }

        #[test]
        fn noiseless_constant_velocity_converges(
            vx in -10.0..10.0f64, vy in -10.0..10.0f64, w in 10.0..100.0f64, h in 10.0..200.0f64,
        ) {
            let truth = |f: u32| BBox::new(200.0 + vx * f as f64, 100.0 + vy * f as f64, w, h);
            let mut st = kf().init_from_bbox(&truth(1)).unwrap();
            for f in 2..=10 {
                let pred = kf().predict(&st);
                let (b, t) = (pred.to_bbox().unwrap(), truth(f));
                if f == 10 {
                    prop_assert!((b.left - t.left).abs() < 1e-3 && (b.top - t.top).abs() < 1e-3);
                    prop_assert!((b.right() - t.right()).abs() < 1e-3 && (b.bottom() - t.bottom()).abs() < 1e-3);
                }
                st = kf().update(&pred, &t).unwrap();
            }
        }

        #[test]
        fn update_does_not_grow_trace(
            l in 0.0..500.0f64, t in 0.0..500.0f64, w in 5.0..100.0f64, h in 5.0..100.0f64,
            dl in -5.0..5.0f64, dt in -5.0..5.0f64, dw in -2.0..2.0f64, dh in -2.0..2.0f64,
        ) {
            let st = kf().predict(&kf().init_from_bbox(&BBox::new(l, t, w, h)).unwrap());
            let up = kf().update(&st, &BBox::new(l + dl, t + dt, w + dw, h + dh)).unwrap();
            prop_assert!(trace(&up.covariance) <= trace(&st.covariance) * (1.0 + 1e-12));
            for i in 0..STATE_DIM {
                prop_assert!(up.covariance[i][i] >= 0.0);
            }
        }
    }
}
