use std::fs;
use std::process::{Command, Output};

fn iniqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iniqkd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn show_config_reflects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# narrow grid\nl_max_km = 100\nmu_points=7 # trailing\n").unwrap();
    let o = iniqkd(&["show-config", "--preset", "d25", "--config", cfg.to_str().unwrap(), "--b-max", "3", "--ie-eta", "arm-etad"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in ["delta=0.25", "l_max_km=100", "mu_points=7", "b_max=3", "ie_eta=arm-etad", "clamp=per-event"] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
    // the echo is itself a valid config
    fs::write(&cfg, &text).unwrap();
    let again = iniqkd(&["show-config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn sweep_writes_identical_csv_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "l_min_km=200\nl_max_km=240\nl_step_km=20\nmu_points=8\n").unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("w{workers}.csv"));
        let o = iniqkd(&[
            "sweep", "--preset", "ed30", "--config", cfg.to_str().unwrap(),
            "--workers", workers, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("distance_km,r_original,r_ad,b_opt,mu_opt_original,mu_opt_ad,plob"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn max_distance_appends_a_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("md.csv");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "mu_points=12\n").unwrap();
    for _ in 0..2 {
        let o = iniqkd(&[
            "max-distance", "--preset", "ed30", "--config", cfg.to_str().unwrap(),
            "--use-ad", "false", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("use_ad=false distance_km=3"), "{}", stdout(&o));
    }
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "use_ad,distance_km,b_at_endpoint,mu_at_endpoint");
    assert_eq!(lines[1], lines[2]);
}

#[test]
fn config_errors_exit_with_one() {
    let o = iniqkd(&["sweep", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("preset"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "eta_d=1.5\n").unwrap();
    let o = iniqkd(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta_d"));

    let o = iniqkd(&["sweep", "--clamp", "sometimes"]);
    assert_eq!(o.status.code(), Some(1));
    let o = iniqkd(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_an_error() {
    let o = iniqkd(&["sweep", "--out", "/nonexistent-dir/rates.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.cfg");
    fs::write(&cfg, "n_mc=2000000\nn_mc_blocks=100000\n").unwrap();
    let out = dir.path().join("verify.csv");
    let o = iniqkd(&["verify", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().last().unwrap().ends_with("PASS"));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 180);
}
