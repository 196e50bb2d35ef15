mod common;

use std::collections::BTreeSet;

use common::{small_config, t1};
use crvirtres::model::{
    admit_su, build_generator, enumerate_states, max_pu, max_su, pu_arrival_outcome,
    transition_rates, RawParams, StateSpace, SystemState, TransitionKind,
};
use proptest::prelude::*;

#[test]
fn r_zero_default_point_state_set_is_exact() {
    let cfg = RawParams::operating_point().build().unwrap();
    let expected: BTreeSet<_> = (0..=4usize)
        .flat_map(|n_p| (0..=20usize).map(move |n_s| SystemState::new(n_p, n_s)))
        .filter(|s| 5 * s.n_p + 2 * s.n_s <= 20)
        .collect();
    let got: BTreeSet<_> = enumerate_states(&cfg).states().iter().copied().collect();
    assert_eq!(got, expected);
}

#[test]
fn x1_excludes_saturated_overflow() {
    let cfg = RawParams {
        bands: 3,
        channels_per_band: 4,
        c_min: 2,
        reserved: 2,
        ..RawParams::operating_point()
    }
    .build()
    .unwrap();
    let space = enumerate_states(&cfg);
    assert!(space.contains(SystemState::new(1, 4)));
    assert!(!space.contains(SystemState::new(2, 4)));
    let q = build_generator(&cfg, &space).unwrap();
    assert_eq!(q.dim(), space.len());
}

#[test]
fn from_states_rejects_duplicates() {
    let s = SystemState::EMPTY;
    assert!(StateSpace::from_states(vec![s, s]).is_err());
    assert_eq!(
        StateSpace::from_states(vec![s]).unwrap().index_of(s),
        Some(0)
    );
}

#[test]
fn t1_generator_rows() {
    let cfg = t1();
    let q = build_generator(&cfg, &enumerate_states(&cfg)).unwrap();
    assert_eq!(q.row(0), &[-2.0, 1.0, 1.0]);
    assert_eq!(q.row(1), &[1.0, -2.0, 1.0]);
    assert_eq!(q.row(2), &[1.0, 0.0, -1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generator_rows_sum_to_zero(cfg in small_config()) {
        let space = enumerate_states(&cfg);
        let q = build_generator(&cfg, &space).unwrap();
        for i in 0..q.dim() {
            let sum: f64 = q.row(i).iter().sum();
            prop_assert!(sum.abs() < 1e-12, "row {i} sums to {sum}");
            for (j, &v) in q.row(i).iter().enumerate() {
                if i != j {
                    prop_assert!(v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn every_su_holds_c_min(cfg in small_config()) {
        let n = cfg.channels_per_band();
        for &s in enumerate_states(&cfg).states() {
            prop_assert!(s.n_p <= cfg.bands());
            prop_assert!(n * (cfg.bands() - s.n_p) >= cfg.c_min() * s.n_s, "state {s}");
        }
    }

    #[test]
    fn dropped_count_is_bounded(cfg in small_config()) {
        let bound = cfg.channels_per_band().div_ceil(cfg.c_min());
        for &s in enumerate_states(&cfg).states() {
            if s.n_p < cfg.bands() {
                let (_, dropped) = pu_arrival_outcome(&cfg, s).unwrap();
                prop_assert!(dropped <= bound, "{s}: {dropped} > {bound}");
            } else {
                prop_assert!(pu_arrival_outcome(&cfg, s).is_err());
            }
        }
    }

    #[test]
    fn no_overflow_without_reservation(cfg in small_config()) {
        let cfg = cfg.with_reserved(0).unwrap();
        let (m, n, c, cmin) = (cfg.bands(), cfg.channels_per_band(), cfg.total_channels(), cfg.c_min());
        let expected: BTreeSet<_> = (0..=m)
            .flat_map(|n_p| (0..=c).map(move |n_s| SystemState::new(n_p, n_s)))
            .filter(|s| n * s.n_p + cmin * s.n_s <= c)
            .collect();
        let got: BTreeSet<_> = enumerate_states(&cfg).states().iter().copied().collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn overflow_entered_only_by_pu_arrival(cfg in small_config()) {
        let space = enumerate_states(&cfg);
        let overflow = |s: SystemState| s.n_s > max_su(&cfg, s.n_p);
        for &s in space.states() {
            for t in transition_rates(&cfg, s) {
                prop_assert!(space.contains(t.target));
                if !overflow(t.target) {
                    continue;
                }
                if t.kind == TransitionKind::SuArrival {
                    prop_assert!(false, "SU admission {s} -> {} enters overflow", t.target);
                }
                if !overflow(s) {
                    let pu = matches!(
                        t.kind,
                        TransitionKind::PuArrival | TransitionKind::ForcedTermination { .. }
                    );
                    prop_assert!(pu, "{s} -> {} via {:?}", t.target, t.kind);
                    prop_assert_eq!(t.target.n_p, s.n_p + 1);
                }
            }
        }
    }

    #[test]
    fn bounds_are_monotone(cfg in small_config()) {
        for n_p in 1..=cfg.bands() {
            prop_assert!(max_su(&cfg, n_p) <= max_su(&cfg, n_p - 1));
        }
        for r in 1..=cfg.max_reserved() {
            let lo = cfg.with_reserved(r - 1).unwrap();
            let hi = cfg.with_reserved(r).unwrap();
            for n_p in 0..=cfg.bands() {
                prop_assert!(max_su(&hi, n_p) <= max_su(&lo, n_p));
            }
        }
        for n_s in 1..=cfg.total_channels() {
            prop_assert!(max_pu(&cfg, n_s) <= max_pu(&cfg, n_s - 1));
        }
    }

    #[test]
    fn admission_matches_bound(cfg in small_config()) {
        for &s in enumerate_states(&cfg).states() {
            prop_assert_eq!(admit_su(&cfg, s), s.n_s < max_su(&cfg, s.n_p));
        }
    }
}
