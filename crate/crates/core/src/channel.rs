//! Line-of-sight link budget.
//!
//! Units at the boundary: powers in dBm, gains and losses in dB, SNR linear,
//! bandwidth and carrier frequency in Hz, distances in metres.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise floor at room temperature, dBm/Hz.
pub const THERMAL_NOISE_FLOOR_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_freq: f64,
    pub pathloss_exponent: f64,
    pub shadowing_std_db: f64,
    pub bandwidth: f64,
    pub noise_figure_db: f64,
    pub tx_power_dbm: f64,
    #[serde(default = "default_noise_floor")]
    pub noise_floor_dbm_per_hz: f64,
}

fn default_noise_floor() -> f64 {
    THERMAL_NOISE_FLOOR_DBM_PER_HZ
}

impl Default for ChannelParams {
    /// 60 GHz, 2.16 GHz channel, free-space exponent, 5.8 dB shadowing.
    fn default() -> Self {
        Self {
            carrier_freq: 60e9,
            pathloss_exponent: 2.0,
            shadowing_std_db: 5.8,
            bandwidth: 2.16e9,
            noise_figure_db: 6.0,
            tx_power_dbm: 1.0,
            noise_floor_dbm_per_hz: THERMAL_NOISE_FLOOR_DBM_PER_HZ,
        }
    }
}

impl ChannelParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            problems.push("channel.carrier_freq must be positive".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            problems.push("channel.bandwidth must be positive".into());
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            problems.push("channel.pathloss_exponent must be positive".into());
        }
        if !(self.shadowing_std_db >= 0.0 && self.shadowing_std_db.is_finite()) {
            problems.push("channel.shadowing_std_db must be non-negative".into());
        }
        for (name, v) in [
            ("channel.noise_figure_db", self.noise_figure_db),
            ("channel.tx_power_dbm", self.tx_power_dbm),
            ("channel.noise_floor_dbm_per_hz", self.noise_floor_dbm_per_hz),
        ] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite"));
            }
        }
        problems
    }

    /// Draws one log-normal shadowing term in dB.
    pub fn draw_shadowing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.shadowing_std_db == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, self.shadowing_std_db)
            .expect("validated shadowing std")
            .sample(rng)
    }
}

/// `20 log10(4 pi / lambda) + 10 kappa log10(D) + shadow_db`.
pub fn path_loss_db(distance: f64, params: &ChannelParams, shadow_db: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI / params.wavelength()).log10()
        + 10.0 * params.pathloss_exponent * distance.log10()
        + shadow_db
}

pub fn noise_power_dbm(params: &ChannelParams) -> f64 {
    params.noise_floor_dbm_per_hz + 10.0 * params.bandwidth.log10() + params.noise_figure_db
}

pub fn snr(rx_power_dbm: f64, noise_power_dbm: f64) -> f64 {
    10f64.powf((rx_power_dbm - noise_power_dbm) / 10.0)
}

/// Shannon rate `eta * B * log2(1 + snr)` in bits per second.
pub fn rate_bps(efficiency: f64, bandwidth: f64, snr_linear: f64) -> f64 {
    efficiency * bandwidth * (1.0 + snr_linear).log2()
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// One evaluation of the link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudgetSample {
    pub path_loss_db: f64,
    pub gain1_db: f64,
    pub gain2_db: f64,
    pub rx_power_dbm: f64,
    pub snr_linear: f64,
}

impl LinkBudgetSample {
    pub fn evaluate(
        params: &ChannelParams,
        path_loss_db: f64,
        gain1_linear: f64,
        gain2_linear: f64,
        noise_power_dbm: f64,
    ) -> Self {
        let gain1_db = to_db(gain1_linear);
        let gain2_db = to_db(gain2_linear);
        let rx_power_dbm = params.tx_power_dbm + gain1_db + gain2_db - path_loss_db;
        Self {
            path_loss_db,
            gain1_db,
            gain2_db,
            rx_power_dbm,
            snr_linear: snr(rx_power_dbm, noise_power_dbm),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn free_space_reference_loss() {
        let p = ChannelParams::default();
        assert_abs_diff_eq!(p.wavelength(), 4.9965e-3, epsilon = 1e-7);
        assert_abs_diff_eq!(path_loss_db(1.0, &p, 0.0), 68.0, epsilon = 0.03);
        assert_abs_diff_eq!(path_loss_db(5.0, &p, 0.0), 81.99, epsilon = 0.02);
        assert_abs_diff_eq!(
            path_loss_db(5.0, &p, 3.5) - path_loss_db(5.0, &p, 0.0),
            3.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noise_power_examples() {
        let mut p = ChannelParams::default();
        assert_abs_diff_eq!(noise_power_dbm(&p), -74.655, epsilon = 0.005);
        let base = noise_power_dbm(&p);
        p.noise_figure_db += 3.0;
        assert_abs_diff_eq!(noise_power_dbm(&p) - base, 3.0, epsilon = 1e-12);
        p.bandwidth = 1.0;
        p.noise_figure_db = 0.0;
        assert_eq!(noise_power_dbm(&p), -174.0);
    }

    #[test]
    fn snr_examples() {
        assert_eq!(snr(-50.0, -50.0), 1.0);
        assert_abs_diff_eq!(snr(-44.87, -74.655), 10f64.powf(2.9785), epsilon = 1e-6);
        assert_abs_diff_eq!(snr(-44.87, -74.655), 952.0, epsilon = 1.0);
        assert!(snr(-40.0, -74.0) > snr(-41.0, -74.0));
    }

    #[test]
    fn chained_perfect_alignment_budget() {
        // N = 64 at both ends, perfect alignment, zero shadowing.
        let p = ChannelParams::default();
        let s = LinkBudgetSample::evaluate(&p, path_loss_db(5.0, &p, 0.0), 64.0, 64.0, noise_power_dbm(&p));
        assert_abs_diff_eq!(s.rx_power_dbm, -44.87, epsilon = 0.02);
        assert_abs_diff_eq!(s.snr_linear, 952.0, epsilon = 5.0);
        assert_abs_diff_eq!(rate_bps(0.99, p.bandwidth, s.snr_linear) / 1e9, 21.2, epsilon = 0.05);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_bps(0.8, 2.16e9, 0.0), 0.0);
        assert_eq!(rate_bps(1.0, 1.0, 1.0), 1.0);
        assert_abs_diff_eq!(rate_bps(0.99, 2.16e9, 952.0), 21.2e9, epsilon = 0.05e9);
    }

    #[test]
    fn shadowing_spread() {
        let p = ChannelParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let draws: Vec<f64> = (0..100_000).map(|_| p.draw_shadowing(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var.sqrt() / 5.8 - 1.0).abs() < 0.02);
    }

    proptest! {
        #[test]
        fn budget_decomposition_is_exact(
            pl in 60.0f64..120.0, g1 in 0.01f64..500.0, g2 in 0.01f64..500.0,
        ) {
            let p = ChannelParams::default();
            let s = LinkBudgetSample::evaluate(&p, pl, g1, g2, noise_power_dbm(&p));
            prop_assert_eq!(s.rx_power_dbm, p.tx_power_dbm + s.gain1_db + s.gain2_db - s.path_loss_db);
            prop_assert!(s.snr_linear >= 0.0);
        }

        #[test]
        fn rate_monotone(
            eta in 0.0f64..1.0, b in 1.0f64..1e10, snr_lin in 0.0f64..1e4, bump in 0.0f64..1.0,
        ) {
            let r = rate_bps(eta, b, snr_lin);
            prop_assert!(rate_bps((eta + bump).min(1.0), b, snr_lin) >= r);
            prop_assert!(rate_bps(eta, b * (1.0 + bump), snr_lin) >= r);
            prop_assert!(rate_bps(eta, b, snr_lin + bump) >= r);
        }
    }
}
