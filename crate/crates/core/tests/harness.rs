mod common;

use std::path::Path;

use proptest::prelude::*;
use qglab::cli;
use qglab::config::RunConfig;
use qglab::export::{export_sweep, parse_table};
use qglab::sweep::{fit_rate, run_convergence_sweep, SUP_OSC_L2};

use common::small_config;

fn quick_config() -> RunConfig {
    let mut c = small_config(16, 0.05);
    c.dt = Some(0.01);
    c.diag.cadence = 1;
    c
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, cfg.to_text()).unwrap();
    p.display().to_string()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qglab").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn fit_rate_exact_power_laws() {
    let eps = [0.1, 0.05, 0.02, 0.01];
    let lin = fit_rate(&eps, &eps);
    assert!((lin.slope - 1.0).abs() <= 1e-12);
    let flat = fit_rate(&eps, &[3.0; 4]);
    assert!(flat.slope.abs() <= 1e-12);
    let one = fit_rate(&[0.1], &[0.2]);
    assert!(!one.is_present() && one.slope.is_nan());
    let bad = fit_rate(&eps, &[0.1, -1.0, 0.02, 0.0]);
    assert_eq!(bad.excluded, vec![1, 3]);
    assert_eq!(bad.points, 2);
}

#[test]
fn single_epsilon_sweep_has_no_slope() {
    let mut c = quick_config();
    c.sweep.epsilons = vec![0.05];
    let r = run_convergence_sweep(&c).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(r.slopes.iter().all(|(_, f)| !f.is_present()));
}

#[test]
fn sweep_is_deterministic_and_exports_one_row_per_epsilon() {
    let c = quick_config();
    let a = run_convergence_sweep(&c).unwrap();
    let b = run_convergence_sweep(&c).unwrap();
    assert_eq!(a.rows.len(), 4);
    for ((na, va), (nb, vb)) in a.metrics().iter().zip(b.metrics().iter()) {
        assert_eq!(na, nb);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(va), bits(vb), "{na}");
    }
    let dir = tempfile::tempdir().unwrap();
    let paths = export_sweep(&a, dir.path()).unwrap();
    assert!(paths.iter().all(|p| p.exists()));
    let (header, rows) = parse_table(&std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(header[0], "epsilon");
    let col = header.iter().position(|h| h == SUP_OSC_L2).unwrap();
    let want = a.metric(SUP_OSC_L2).unwrap();
    for (row, w) in rows.iter().zip(&want) {
        assert_eq!(row[col], *w);
    }
}

#[test]
fn pure_qg_data_equal_viscosities_osc_part_shrinks() {
    let mut c = small_config(16, 0.3);
    c.dt = Some(0.01);
    c.params.nu_prime = c.params.nu;
    c.sweep.osc_coefficient = 0.0;
    let r = run_convergence_sweep(&c).unwrap();
    let osc = r.metric(SUP_OSC_L2).unwrap();
    assert!(osc[3] <= osc[0], "{osc:?}");
}

#[test]
fn missing_config_is_a_validation_error() {
    let (code, _, err) = cli(&["run-pe"]);
    assert_eq!(code, 1);
    assert!(err.contains("--config"));
    let (code, _, err) = cli(&["sweep", "--config", "/nonexistent/x.cfg"]);
    assert_ne!(code, 0);
    assert!(!err.is_empty());
}

#[test]
fn unknown_override_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let (code, _, err) = cli(&["run-qg", "--config", &cfg, "--override", "params.gamma=3"]);
    assert_eq!(code, 1);
    assert!(err.contains("params.gamma"), "{err}");
    std::fs::write(dir.path().join("bad.cfg"), "grid.n = 16\nfoo.bar = 1\n").unwrap();
    let bad = dir.path().join("bad.cfg").display().to_string();
    let (code, _, err) = cli(&["decompose", "--config", &bad]);
    assert_eq!(code, 1);
    assert!(err.contains("foo.bar"), "{err}");
}

#[test]
fn cli_subcommands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let out = dir.path().join("out");
    let o = out.display().to_string();
    let files: &[(&str, &[&str])] = &[
        ("decompose", &["decompose_qg.csv", "decompose_osc.csv", "decompose_norms.csv"]),
        ("check-conditions", &["conditions.csv"]),
        ("run-pe", &["pe_series.csv", "pe_series.gp"]),
        ("run-qg", &["qg_series.csv", "qg_series.gp"]),
        ("sweep", &["sweep.csv", "slopes.csv", "qg_series.csv", "convergence.gp"]),
    ];
    for (cmd, names) in files {
        let (code, stdout, err) = cli(&[cmd, "--config", &cfg, "--out", &o]);
        assert_eq!(code, 0, "{cmd}: {err}");
        for n in *names {
            assert!(out.join(n).exists(), "{cmd} did not write {n}");
            assert!(stdout.contains(n), "{cmd} did not list {n}");
        }
    }
    let (_, rows) = parse_table(&std::fs::read_to_string(out.join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn snapshots_from_config_give_residual_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config();
    c.diag.snapshot_every = 1;
    let cfg = write_config(dir.path(), &c);
    let o = dir.path().display().to_string();
    let (code, _, err) = cli(&["run-pe", "--config", &cfg, "--out", &o]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.path().join("vorticity_residual.csv").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = blocker.join("sub").display().to_string();
    let (code, _, err) = cli(&["check-conditions", "--config", &cfg, "--out", &o]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn invariants_subcommand_prints_a_passing_table() {
    let (code, out, err) = cli(&["check-invariants", "--count", "5", "--override", "grid.n=16"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("all checks passed"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_rate_recovers_noisy_half_power(noise in prop::array::uniform4(-1.0f64..1.0)) {
        let eps = [0.1, 0.05, 0.02, 0.01];
        let m: Vec<f64> = eps.iter().zip(noise).map(|(e, z): (&f64, f64)| e.sqrt() * (1.0 + 0.01 * z)).collect();
        let fit = fit_rate(&eps, &m);
        prop_assert!((fit.slope - 0.5).abs() <= 0.05);
    }

    #[test]
    fn fit_rate_exact_for_any_power(p in -3.0f64..3.0, c in 0.01f64..100.0) {
        let eps = [1.0, 0.3, 0.1, 0.03, 0.01];
        let m: Vec<f64> = eps.iter().map(|e: &f64| c * e.powf(p)).collect();
        let fit = fit_rate(&eps, &m);
        prop_assert!((fit.slope - p).abs() <= 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() <= 1e-10);
        prop_assert!(fit.residual <= 1e-10);
    }

    #[test]
    fn config_text_round_trip(
        log_n in 3u32..7,
        eps in 1e-4f64..1.0,
        nu in 1e-4f64..1.0,
        seed in any::<u64>(),
        t_end in 0.01f64..10.0,
    ) {
        let mut c = RunConfig::default();
        c.n = 1 << log_n;
        c.params.epsilon = eps;
        c.params.nu = nu;
        c.init.seed = seed;
        c.t_end = t_end;
        c.dt = Some(t_end / 7.0);
        let back = RunConfig::parse(&c.to_text()).unwrap();
        prop_assert_eq!(back, c);
    }
}
