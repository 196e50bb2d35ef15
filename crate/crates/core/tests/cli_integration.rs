use std::path::PathBuf;
use std::process::{Command, Output};

use crvirtres::cli::{
    DRIFT_HEADER, OPTIMIZE_HEADER, SIMULATE_HEADER, SOLVE_HEADER, SWEEP_HEADER, VALIDATE_HEADER,
};
use crvirtres::model::{PuService, RawParams, SuLoad, SuService};
use crvirtres::scenario::{Scenario, SweepAxes};
use crvirtres::sim::{SimPolicy, SimSettings};
use proptest::prelude::*;

fn scenario_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crvirtres-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crvirtres"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_scenario(command: &str, name: &str, text: &str) -> Output {
    let path = scenario_file(name, text);
    run(&[command, "--scenario", path.to_str().unwrap()])
}

fn table(out: &Output) -> (String, Vec<Vec<String>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn col(header: &str, name: &str) -> usize {
    header.split(',').position(|h| h == name).unwrap()
}

#[test]
fn solve_defaults() {
    let out = run(&["solve"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(header, SOLVE_HEADER);
    assert_eq!(rows.len(), 1);
    for v in &rows[0] {
        assert!(v.parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn unknown_command_prints_usage() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_scenario_value_exits_2() {
    let out = run_scenario("solve", "neg.txt", "[system]\nlambda_p = -1\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("λp must be positive"));
}

#[test]
fn syntax_error_names_line() {
    let out = run_scenario("solve", "syntax.txt", "[system]\nM = 4\nN five\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn sweep_pft_is_ordered_in_r() {
    let out = run_scenario(
        "sweep-pft",
        "pft.txt",
        "[sweep]\nlambda_p = 0.5:3.0:0.5\nr = 0, 2, 4\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(header, SWEEP_HEADER);
    assert_eq!(rows.len(), 18);
    let (lp, r, pft) = (
        col(&header, "lambda_p"),
        col(&header, "r"),
        col(&header, "p_ft"),
    );
    for chunk in rows.chunks(3) {
        assert!(chunk.iter().all(|row| row[lp] == chunk[0][lp]));
        let rs: Vec<&str> = chunk.iter().map(|row| row[r].as_str()).collect();
        assert_eq!(rs, ["0", "2", "4"]);
        let p: Vec<f64> = chunk.iter().map(|row| row[pft].parse().unwrap()).collect();
        assert!(p.windows(2).all(|w| w[1] <= w[0]), "{p:?}");
    }
}

#[test]
fn sweeps_over_mu1_and_cmin() {
    let out = run_scenario(
        "sweep-mu1",
        "mu1.txt",
        "[sweep]\nmu_1 = 0.5, 1, 2, 4\nrho_s = 0.4, 0.6, 0.8\nr = 0, 2\n",
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(table(&out).1.len(), 24);

    let out = run_scenario(
        "sweep-cmin",
        "cmin.txt",
        "[sweep]\nc_min = 1, 2, 4\nr = 0, 2\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(rows.len(), 6);
    let cmin: Vec<&str> = rows
        .iter()
        .map(|r| r[col(&header, "c_min")].as_str())
        .collect();
    assert_eq!(cmin, ["1", "1", "2", "2", "4", "4"]);
}

#[test]
fn optimize_r_star_non_decreasing() {
    let out = run_scenario(
        "optimize",
        "opt.txt",
        "[sweep]\nlambda_p = 0.5:3.0:0.25\n[optimize]\nalpha = 1\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(header, OPTIMIZE_HEADER);
    let stars: Vec<usize> = rows
        .iter()
        .map(|r| r[col(&header, "r_star")].parse().unwrap())
        .collect();
    assert_eq!(stars.len(), 11);
    assert!(stars.windows(2).all(|w| w[1] >= w[0]), "{stars:?}");
}

#[test]
fn alpha_flag_overrides_scenario() {
    let out = run(&["optimize", "--alpha", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(rows[0][col(&header, "alpha")], "1000");
    assert_eq!(run(&["optimize", "--alpha", "-1"]).status.code(), Some(2));
}

#[test]
fn drift_lists_every_state() {
    let out = run(&["drift"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(header, DRIFT_HEADER);
    assert_eq!(rows.len(), 29);
}

#[test]
fn simulate_and_validate() {
    let text =
        "[system]\nM = 1\nN = 1\nc_min = 1\nlambda_p = 1\nmu_p = 1\nmu_s = 1\nlambda_s = 1\n\
                [simulation]\nhorizon = 1e5\nreplications = 4\nseed = 9\n";
    let out = run_scenario("simulate", "t1.txt", text);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&out);
    assert_eq!(header, SIMULATE_HEADER);
    assert_eq!(rows.len(), 1);

    let path = scenario_file("t1v.txt", text);
    let out = run(&[
        "validate",
        "--scenario",
        path.to_str().unwrap(),
        "--horizon",
        "2e5",
        "--reps",
        "6",
    ]);
    let (header, rows) = table(&out);
    assert_eq!(header, VALIDATE_HEADER);
    assert_eq!(rows.len(), 3);
    let all_covered = rows.iter().all(|r| r[col(&header, "covered")] == "true");
    assert_eq!(out.status.code(), Some(if all_covered { 0 } else { 1 }));
}

#[test]
fn seed_flag_is_deterministic() {
    let args = ["simulate", "--seed", "5", "--horizon", "5e3", "--reps", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--seed", "6", "--horizon", "5e3", "--reps", "3"]);
    assert_ne!(a.stdout, c.stdout);
}

fn positive() -> impl Strategy<Value = f64> {
    0.01f64..10.0
}

fn raw_params() -> impl Strategy<Value = RawParams> {
    (1i64..=5, 1i64..=6)
        .prop_flat_map(|(m, n)| (Just(m), Just(n), 1..=m * n))
        .prop_flat_map(|(m, n, c)| {
            (
                Just(m),
                Just(n),
                Just(c),
                0..=m * n - c,
                positive(),
                (positive(), any::<bool>()),
                (positive(), any::<bool>()),
                (positive(), any::<bool>()),
            )
        })
        .prop_map(|(m, n, c, r, lp, pu, su, load)| RawParams {
            bands: m,
            channels_per_band: n,
            c_min: c,
            reserved: r,
            lambda_p: lp,
            pu_service: if pu.1 {
                PuService::PerBand(pu.0)
            } else {
                PuService::PerChannel(pu.0)
            },
            su_service: if su.1 {
                SuService::AtMinimum(su.0)
            } else {
                SuService::PerChannel(su.0)
            },
            su_load: if load.1 {
                SuLoad::ArrivalRate(load.0)
            } else {
                SuLoad::Utilization(load.0)
            },
        })
}

fn grid() -> impl Strategy<Value = Option<Vec<f64>>> {
    proptest::option::of(proptest::collection::vec(positive(), 1..5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scenario_round_trips(
        system in raw_params(),
        lambda_p in grid(),
        rho_s in grid(),
        mu_1 in grid(),
        alpha in 0.0f64..100.0,
        horizon in 1.0f64..1e7,
        replications in 1usize..50,
        seed in any::<u64>(),
        policy in prop_oneof![
            Just(SimPolicy::FsuVirtualReservation),
            Just(SimPolicy::MinAllocCooperative),
            Just(SimPolicy::NonCooperative),
        ],
    ) {
        let r_max = (system.bands * system.channels_per_band - system.c_min) as usize;
        let sc = Scenario {
            system,
            sweep: SweepAxes {
                lambda_p,
                rho_s,
                r: Some((0..=r_max).step_by(2).collect()),
                mu_1,
                c_min: Some(vec![1]),
            },
            alpha,
            simulation: SimSettings { horizon, replications, seed },
            policy,
        };
        prop_assert!(sc.check().is_ok(), "{:?}", sc.check());
        let text = sc.to_text();
        let back = Scenario::parse(&text).unwrap();
        prop_assert_eq!(&back, &sc);
        prop_assert_eq!(back.to_text(), text);
    }
}
