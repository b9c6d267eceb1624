//! Decibel and power-unit conversions.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// `P_W = 10^((dBm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}

/// Total noise power over `bandwidth_hz` for a density given in dBm/MHz.
pub fn noise_floor_watts(n0_dbm_per_mhz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(n0_dbm_per_mhz + 10.0 * (bandwidth_hz / 1e6).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_powers() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(20.0) - 0.1).abs() < 1e-16);
        let noise = noise_floor_watts(-134.0, 800e6);
        assert!((noise - 3.1848e-14).abs() / 3.1848e-14 < 1e-4, "{noise}");
    }

    proptest! {
        #[test]
        fn db_round_trip(x in 1e-20f64..1e20) {
            let back = db_to_linear(linear_to_db(x));
            prop_assert!(((back - x) / x).abs() < 1e-12);
        }

        #[test]
        fn dbm_round_trip(dbm in -200f64..100.0) {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            prop_assert!((back - dbm).abs() < 1e-12 * dbm.abs().max(1.0));
        }
    }
}
