use std::path::{Path, PathBuf};
use std::process::Command;

use qparity::io::read_table;

const BIN: &str = env!("CARGO_BIN_EXE_qparity");

struct Run {
    code: i32,
    stderr: String,
}

fn qparity(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("QPARITY_DATA_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(path: &Path) -> Vec<(String, String)> {
    let t = read_table(path).unwrap();
    let k = t.str_column("key").unwrap();
    let v = t.str_column("value").unwrap();
    k.into_iter().zip(v).collect()
}

fn value(rep: &[(String, String)], key: &str) -> String {
    rep.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("report lacks `{key}`"))
        .1
        .clone()
}

fn num(rep: &[(String, String)], key: &str) -> f64 {
    value(rep, key).parse().unwrap()
}

/// Every emitted table parses back and carries the provenance header.
fn check_tables(dir: &Path) {
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "tsv") {
                let t = read_table(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
                for key in ["tool", "config_sha256", "seed", "command"] {
                    assert!(t.comment_value(key).is_some(), "{} lacks `{key}`", p.display());
                }
            } else if p.extension().is_some_and(|x| x == "svg") {
                let s = std::fs::read_to_string(&p).unwrap();
                assert!(s.starts_with("<!-- tool: qparity"));
                assert!(s.trim_end().ends_with("</svg>"));
            }
        }
    }
}

#[test]
fn spectrum_extrema_and_single_point_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let r = qparity(tmp.path(), &["spectrum", "--device", "S1-Q1", "--out", "o"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&tmp.path().join("o/spectrum_report.tsv"));
    assert!((num(&rep, "even_01_max_ghz") / 6.833 - 1.0).abs() < 0.01);
    assert!((num(&rep, "even_01_min_ghz") / 4.473 - 1.0).abs() < 0.01);
    check_tables(&tmp.path().join("o"));

    write(tmp.path(), "one.toml", "device = \"S1-Q1\"\n[spectrum]\npoints = 1\nng_min = 0.0\n");
    let r = qparity(tmp.path(), &["spectrum", "--config", "one.toml", "--out", "p"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = read_table(&tmp.path().join("p/spectrum.tsv")).unwrap();
    assert_eq!(t.rows.len(), 1);
}

#[test]
fn validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(qparity(tmp.path(), &["spectrum", "--out", "o"]).code, 2);
    assert_eq!(qparity(tmp.path(), &["spectrum", "--device", "S9-Q9", "--out", "o"]).code, 2);
    write(tmp.path(), "bad.toml", "seeed = 1\n");
    let r = qparity(tmp.path(), &["spectrum", "--config", "bad.toml"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("seeed"), "{}", r.stderr);
    write(tmp.path(), "missing.toml", "[jumps]\ntrajectories = \"absent.tsv\"\n");
    assert_eq!(qparity(tmp.path(), &["jumps", "--config", "missing.toml"]).code, 2);
    write(tmp.path(), "other.toml", "command = \"antenna\"\n");
    assert_eq!(qparity(tmp.path(), &["jumps", "--config", "other.toml"]).code, 2);
    assert!(!tmp.path().join("qparity-out/jumps_report.tsv").exists());
}

#[test]
fn fit_tp_simulated_ensemble() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "tp.toml", "seed = 5\n[fit_tp.simulate]\nn_traces = 120\n");
    let r = qparity(tmp.path(), &["fit-tp", "--config", "tp.toml", "--out", "o"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&tmp.path().join("o/fit_tp_report.tsv"));
    let tp = num(&rep, "lorentzian_tp_s");
    assert!((tp / 2.7 - 1.0).abs() < 0.15, "T_P = {tp}");
    assert_eq!(value(&rep, "knee_in_band"), "true");
    assert_eq!(value(&rep, "cross_check_flag"), "false");
    check_tables(&tmp.path().join("o"));

    // A zero tolerance turns any disagreement into a flag.
    write(tmp.path(), "strict.toml", "seed = 5\n[fit_tp]\ncross_check_tol = 0.0\n[fit_tp.simulate]\nn_traces = 40\n");
    let r = qparity(tmp.path(), &["fit-tp", "--config", "strict.toml", "--out", "s"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(value(&report(&tmp.path().join("s/fit_tp_report.tsv")), "cross_check_flag"), "true");
    assert!(r.stderr.contains("disagree"), "{}", r.stderr);
}

#[test]
fn simulated_files_feed_fit_tp() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "sim.toml",
        "seed = 2\n[simulate_rts]\ngamma_p_hz = 20.0\nn_traces = 16\nduration_s = 10.0\ndt_ms = 0.5\nnoise_sigma = 0.25\n",
    );
    let r = qparity(tmp.path(), &["simulate-rts", "--config", "sim.toml", "--out", "sim"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    check_tables(&tmp.path().join("sim"));
    write(tmp.path(), "fit.toml", "[fit_tp]\ntraces_dir = \"sim/traces\"\n");
    let r = qparity(tmp.path(), &["fit-tp", "--config", "fit.toml", "--out", "fit"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&tmp.path().join("fit/fit_tp_report.tsv"));
    assert_eq!(value(&rep, "source"), "files");
    let g = num(&rep, "lorentzian_gamma_p_hz");
    assert!((g / 20.0 - 1.0).abs() < 0.2, "Γ = {g}");
}

#[test]
fn flat_noise_warns_knee_outside_band() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("flat")).unwrap();
    // Independent ±1 samples from a fixed LCG: a white spectrum.
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for k in 0..8 {
        let mut text = String::from("time_s\tvalue\n");
        for i in 0..4096 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = if state >> 63 == 1 { 1 } else { -1 };
            text.push_str(&format!("{}\t{v}\n", i as f64 * 1e-3));
        }
        write(&tmp.path().join("flat"), &format!("t{k}.tsv"), &text);
    }
    write(tmp.path(), "flat.toml", "[fit_tp]\ntraces_dir = \"flat\"\n");
    let r = qparity(tmp.path(), &["fit-tp", "--config", "flat.toml", "--out", "o"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.contains("outside the fit band"), "{}", r.stderr);
    let rep = report(&tmp.path().join("o/fit_tp_report.tsv"));
    assert_eq!(value(&rep, "knee_in_band"), "false");
}

#[test]
fn thermal_fit_round_trip_and_rank_deficiency() {
    let tmp = tempfile::tempdir().unwrap();
    let r = qparity(tmp.path(), &["thermal-fit", "--out", "syn"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    check_tables(&tmp.path().join("syn"));
    let rep = report(&tmp.path().join("syn/thermal_fit_report.tsv"));
    assert!((num(&rep, "S4/delta_ghz") / 52.53 - 1.0).abs() < 0.01);

    // Re-fitting the emitted series reproduces the fit.
    write(tmp.path(), "refit.toml", "[thermal_fit]\nseries = \"syn/thermal_series.tsv\"\n");
    let r = qparity(tmp.path(), &["thermal-fit", "--config", "refit.toml", "--out", "re"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let a = read_table(&tmp.path().join("syn/thermal_fit.tsv")).unwrap();
    let b = read_table(&tmp.path().join("re/thermal_fit.tsv")).unwrap();
    for col in ["gp0_hz", "xqp_1e7", "delta_ghz"] {
        for (x, y) in a.f64_column(col).unwrap().iter().zip(b.f64_column(col).unwrap()) {
            assert!((x / y - 1.0).abs() < 1e-6, "{col}: {x} vs {y}");
        }
    }

    write(
        tmp.path(),
        "one.tsv",
        "qubit_id\tchip_id\ttemperature_mk\tgamma_p_hz\tsigma_hz\nS4-Q1\tS4\t20\t0.6\t0.01\n",
    );
    write(tmp.path(), "one.toml", "[thermal_fit]\nseries = \"one.tsv\"\n");
    let r = qparity(tmp.path(), &["thermal-fit", "--config", "one.toml", "--out", "one"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("rank deficient"), "{}", r.stderr);
}

fn impedance_table(dir: &Path, name: &str, re: impl Fn(f64) -> f64) {
    let mut text = String::from("freq_ghz\tre_ohm\tim_ohm\n");
    for i in 0..=40 {
        let f = 50.0 + 2.5 * i as f64;
        text.push_str(&format!("{f}\t{}\t{}\n", re(f), -50.0));
    }
    write(dir, name, &text);
}

fn ec_star(dir: &Path, config: &str, out: &str) -> f64 {
    let r = qparity(dir, &["antenna", "--config", config, "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    num(&report(&dir.join(out).join("antenna_report.tsv")), "ec_star")
}

#[test]
fn antenna_range_and_impedance_tables() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "circuit.toml", "");
    let ec = ec_star(tmp.path(), "circuit.toml", "c");
    assert!(ec > 0.0 && ec < 1.0);
    let rep = report(&tmp.path().join("c/antenna_report.tsv"));
    assert!((num(&rep, "gamma_p_pred_hz") - 3e5 * ec).abs() <= 1e-9 * 3e5 * ec);
    check_tables(&tmp.path().join("c"));

    impedance_table(tmp.path(), "zero.tsv", |_| 0.0);
    impedance_table(tmp.path(), "open.tsv", |f| 40.0 + 0.1 * f);
    impedance_table(tmp.path(), "capped.tsv", |f| 0.25 * (40.0 + 0.1 * f));
    write(tmp.path(), "zero.toml", "[antenna]\nimpedance_table = \"zero.tsv\"\n");
    write(tmp.path(), "open.toml", "[antenna]\nimpedance_table = \"open.tsv\"\n");
    write(tmp.path(), "capped.toml", "[antenna]\nimpedance_table = \"capped.tsv\"\n");
    assert_eq!(ec_star(tmp.path(), "zero.toml", "z"), 0.0);
    let ec_col = read_table(&tmp.path().join("z/antenna.tsv")).unwrap().f64_column("ec").unwrap();
    assert!(ec_col.iter().all(|e| *e == 0.0));
    assert!(ec_star(tmp.path(), "capped.toml", "k") < ec_star(tmp.path(), "open.toml", "u"));
}

#[test]
fn jump_catalog_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let hours = 40.0 * 3600.0;
    let mut text = String::from("time_s\tng_e\tqubit_id\n");
    for i in 0..=400 {
        let t = hours * i as f64 / 400.0;
        let jumps = (1..=9).filter(|k| i >= 40 * k).count();
        text.push_str(&format!("{t}\t{}\tQA\n", (0.05 + 0.3 * jumps as f64).rem_euclid(1.0)));
        text.push_str(&format!("{t}\t0.3\tQB\n"));
    }
    write(tmp.path(), "traj.tsv", &text);
    write(tmp.path(), "j.toml", "[jumps]\ntrajectories = \"traj.tsv\"\n");
    let r = qparity(tmp.path(), &["jumps", "--config", "j.toml", "--out", "o"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&tmp.path().join("o/jumps_report.tsv"));
    assert!((num(&rep, "QA/rate_mhz") - 0.0625).abs() < 1e-12);
    assert_eq!(num(&rep, "QB/rate_mhz"), 0.0);
    check_tables(&tmp.path().join("o"));

    write(tmp.path(), "high.toml", "[jumps]\ntrajectories = \"traj.tsv\"\nthreshold_e = 0.45\n");
    let r = qparity(tmp.path(), &["jumps", "--config", "high.toml", "--out", "h"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(read_table(&tmp.path().join("h/jumps.tsv")).unwrap().rows.len(), 0);
}

#[test]
fn coherence_fits_and_dephasing_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut t1 = String::from("# kind: relaxation\ntime_s\tpopulation\n");
    let mut echo = String::from("# kind: echo\ntime_s\tpopulation\n");
    for i in 0..40 {
        let t = i as f64 * 5e-6;
        t1.push_str(&format!("{t}\t{}\n", 0.9 * (-t / 50e-6).exp() + 0.05));
        let t = i as f64 * 1e-6;
        echo.push_str(&format!("{t}\t{}\n", 0.45 * (-t / 100e-6 - (t / 12e-6).powi(2)).exp() + 0.5));
    }
    write(tmp.path(), "t1.tsv", &t1);
    write(tmp.path(), "echo.tsv", &echo);
    write(
        tmp.path(),
        "c.toml",
        "[coherence_fit]\nrelaxation = \"t1.tsv\"\necho = \"echo.tsv\"\nslope_mhz_per_ng = 100.0\n",
    );
    let r = qparity(tmp.path(), &["coherence-fit", "--config", "c.toml", "--out", "o"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(&tmp.path().join("o/coherence_report.tsv"));
    assert!((num(&rep, "t1_us") / 50.0 - 1.0).abs() < 1e-6);
    assert!((num(&rep, "tphi_us") / 12.0 - 1.0).abs() < 1e-6);
    assert_eq!(num(&rep, "dephasing_prefactor_mhz"), 0.4);
    let a = num(&rep, "charge_noise_e2");
    let tphi = num(&rep, "tphi_us") * 1e-6;
    let back = qparity::coherence::echo_tphi_from_charge_noise(a, 100e6).unwrap();
    assert!((back / tphi - 1.0).abs() < 1e-9);
    let g = read_table(&tmp.path().join("o/thermal_dephasing.tsv"))
        .unwrap()
        .f64_column("gamma_phi_hz")
        .unwrap();
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    check_tables(&tmp.path().join("o"));

    // An echo curve alone needs T1 from somewhere.
    write(tmp.path(), "e.toml", "[coherence_fit]\necho = \"echo.tsv\"\n");
    assert_eq!(qparity(tmp.path(), &["coherence-fit", "--config", "e.toml", "--out", "e"]).code, 2);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "tp.toml", "seed = 9\n[fit_tp.simulate]\nn_traces = 20\nduration_s = 4.0\n");
    for out in ["a", "b"] {
        let r = qparity(tmp.path(), &["fit-tp", "--config", "tp.toml", "--out", out]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    for name in ["psd.tsv", "acf.tsv", "fit_tp_report.tsv", "fit_tp.svg", "acf.svg"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
    let r = qparity(tmp.path(), &["fit-tp", "--config", "tp.toml", "--seed", "10", "--out", "c"]);
    assert_eq!(r.code, 0);
    let a = std::fs::read(tmp.path().join("a/psd.tsv")).unwrap();
    let c = std::fs::read(tmp.path().join("c/psd.tsv")).unwrap();
    assert_ne!(a, c);
}
