use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn uwbcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwbcap"))
        .args(args)
        .env_remove("UWB_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from summary"))
        .to_string()
}

#[test]
fn c_band_unconstrained_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = uwbcap(&[
        "run", "--bands", "C", "--channels", "full", "--spans", "1", "--plim-dbm", "inf", "--accuracy", "48",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(summary_value(&out, "n_channels"), "29");
    assert_eq!(summary_value(&out, "tau"), "1");
    for f in ["grid.csv", "launch_power.csv", "snr.csv", "eta.csv", "rho.csv", "summary.txt", "launch_power.svg", "snr.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let snr = fs::read_to_string(out.join("snr.csv")).unwrap();
    assert!(snr.starts_with("# uwbcap "));
    assert!(snr.contains("# bands = \"C\""));
    let rows: Vec<&str> = snr.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "channel_index,band,frequency_THz,wavelength_nm,snr_dB,p_ase_mW,p_nli_mW");
    assert_eq!(rows.len(), 30);
}

#[test]
fn missing_fibre_profile() {
    let o = uwbcap(&["run", "--fibre", "/definitely/not/here.csv", "--bands", "C"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("profile not found: /definitely/not/here.csv"), "{}", stderr(&o));
}

#[test]
fn validation_errors_exit_1() {
    for args in [
        vec!["run", "--bands", "X"],
        vec!["run", "--bands", "C", "--channels", "30"],
        vec!["run", "--seg-mode", "spline"],
        vec!["run", "--spans", "0"],
        vec!["run", "--accuracy", "4"],
        vec!["run", "--spans", "1,6"],
        vec!["run", "--plim-dbm", "lots"],
        vec!["run", "--no-such-flag"],
    ] {
        let o = uwbcap(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn empty_schedule_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[channel_grid]\nbands = \"C\"\n[scenario_sweep]\nschedule = []\n").unwrap();
    let o = uwbcap(&["run", "--sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty channel schedule"), "{}", stderr(&o));
}

#[test]
fn non_convergence_writes_artifacts_and_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[power_optimizer]\nmax_outer = 1\ninitial_dbm = -20.0\n").unwrap();
    let out = tmp.path().join("run");
    let o = uwbcap(&[
        "run", "--config", cfg.to_str().unwrap(), "--bands", "C", "--channels", "10", "--accuracy", "16",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(summary_value(&out, "converged"), "false");
}

#[test]
fn identical_configs_give_identical_data() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = tmp.path().join(name);
        let o = uwbcap(&[
            "run", "--bands", "CL", "--channels", "40", "--plim-dbm", "15", "--accuracy", "24", "--workers", workers,
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let a = run("a", "1");
    let b = run("b", "3");
    for f in ["grid.csv", "launch_power.csv", "snr.csv", "eta.csv", "rho.csv", "summary.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[channel_grid]\nbands = \"C\"\nchannels = 12\n[noise_budget]\nspans = 3\n").unwrap();
    let o = uwbcap(&["config", "--config", cfg.to_str().unwrap(), "--spans", "6", "--trx-snr-db", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("channels = 12"));
    assert!(text.contains("spans = 6"));
    assert!(text.contains("trx_snr_db = 20.0"));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_uwbcap"))
        .args(["run", "--bands", "C", "--channels", "5", "--accuracy", "16", "--no-plots"])
        .env("UWB_OUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dirs: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    assert!(dirs[0].file_name().unwrap().to_str().unwrap().starts_with("run-"));
    assert!(dirs[0].join("summary.txt").exists());
    assert!(!dirs[0].join("snr.svg").exists());
}

fn saturation_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("saturation.csv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn sweep_reports_saturation_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let args = [
        "run", "--sweep", "--bands", "SCL", "--schedule", "10,29,50,76,100", "--spans", "6", "--plim-dbm", "15,20",
        "--trx-snr-db", "20", "--accuracy", "16", "--out", out.to_str().unwrap(),
    ];
    let o = uwbcap(&args);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 resumed"), "{}", stdout(&o));

    let rows = saturation_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][1].as_str(), rows[1][1].as_str()), ("15", "20"));
    let bw: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(bw[0] <= bw[1], "{bw:?}");

    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    let data: Vec<&str> = results.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(data[0].starts_with("scenario_id,n_channels,bandwidth_THz,spans,p_lim_dBm,trx_snr_dB,throughput_Tbps,total_power_dBm,tau,converged"));
    assert_eq!(data.len(), 11);

    let stamps = |dir: &Path| {
        let mut v: Vec<_> = fs::read_dir(dir.join("points"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), e.metadata().unwrap().modified().unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let before = stamps(&out);
    assert_eq!(before.len(), 10);
    let o = uwbcap(&args);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    assert!(stdout(&o).contains("10 resumed"), "{}", stdout(&o));
    assert_eq!(stamps(&out), before);
    assert_eq!(fs::read_to_string(out.join("results.csv")).unwrap(), results);
}
