//! Mapping between SNR in dB and the channel noise variance.

use serde::{Deserialize, Serialize};

/// How an SNR figure relates to the noise variance `σ²` when both users
/// transmit at unit average power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrConvention {
    /// `SNR = 1/σ²`: per-user power over noise. This is the convention that
    /// reproduces the published MC sum capacity at 10 dB (see the
    /// calibration test).
    #[default]
    PerUser,
    /// `SNR = 2/σ²`: total received power over noise.
    Total,
}

impl SnrConvention {
    pub fn noise_variance(self, snr_db: f64) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        match self {
            SnrConvention::PerUser => 1.0 / snr,
            SnrConvention::Total => 2.0 / snr,
        }
    }

    pub fn snr_db(self, noise_variance: f64) -> f64 {
        let snr = match self {
            SnrConvention::PerUser => 1.0 / noise_variance,
            SnrConvention::Total => 2.0 / noise_variance,
        };
        10.0 * snr.log10()
    }
}

/// Noise variance at `snr_db` under the calibrated convention.
pub fn noise_variance(snr_db: f64) -> f64 {
    SnrConvention::default().noise_variance(snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventions_invert() {
        for c in [SnrConvention::PerUser, SnrConvention::Total] {
            let v = c.noise_variance(12.5);
            assert!((c.snr_db(v) - 12.5).abs() < 1e-12);
        }
        assert!((SnrConvention::PerUser.noise_variance(10.0) - 0.1).abs() < 1e-15);
        assert!((SnrConvention::Total.noise_variance(10.0) - 0.2).abs() < 1e-15);
    }
}
