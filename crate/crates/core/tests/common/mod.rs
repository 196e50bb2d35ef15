#![allow(dead_code)]

use crvirtres::model::{PuService, RawParams, SuLoad, SuService, SystemConfig};
use proptest::prelude::*;

pub fn t1() -> SystemConfig {
    RawParams::direct(1, 1, 1, 0, 1.0, 1.0, 1.0, 1.0)
        .build()
        .unwrap()
}

pub fn default_point() -> SystemConfig {
    RawParams::operating_point().build().unwrap()
}

fn rate() -> impl Strategy<Value = f64> {
    0.05f64..5.0
}

/// Small but structurally varied configurations (at most 24 channels).
pub fn small_config() -> impl Strategy<Value = SystemConfig> {
    (1i64..=4, 1i64..=6)
        .prop_flat_map(|(m, n)| {
            let c = m * n;
            (Just(m), Just(n), 1..=c)
        })
        .prop_flat_map(|(m, n, c_min)| {
            let r_max = m * n - c_min;
            (
                Just(m),
                Just(n),
                Just(c_min),
                0..=r_max,
                rate(),
                rate(),
                rate(),
                rate(),
            )
        })
        .prop_map(|(m, n, c_min, r, lp, mp, ls, ms)| {
            RawParams {
                bands: m,
                channels_per_band: n,
                c_min,
                reserved: r,
                lambda_p: lp,
                pu_service: PuService::PerBand(mp),
                su_service: SuService::AtMinimum(ms),
                su_load: SuLoad::ArrivalRate(ls),
            }
            .build()
            .unwrap()
        })
}
