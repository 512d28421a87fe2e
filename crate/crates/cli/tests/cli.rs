use std::path::Path;
use std::process::{Command, Output};

fn awva(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awva"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn sweep_frequency_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = awva(&["sweep-frequency"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep_frequency.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("frequency_hz,delta_t_us,noise_mv"));
    assert_eq!(lines.len(), 7);
    assert!(lines[6].starts_with("20000,1,0,"));
}

#[test]
fn sweep_noise_is_reproducible_with_seed_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("noise.toml");
    std::fs::write(&config, "[sweep_noise]\nnoise_mv = [0.0, 100.0, 1000.0]\n").unwrap();
    let config = config.to_str().unwrap();
    let run = |sub: &str, workers: &str| {
        let out_dir = dir.path().join(sub);
        let out = awva(
            &[
                "sweep-noise",
                "--config",
                config,
                "--seed",
                "7",
                "--trials",
                "50",
                "--workers",
                workers,
            ],
            &out_dir,
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("sweep_noise.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "3"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("200,50,0,50,inf,1,0,1,0,"));
}

#[test]
fn simulate_then_ingest_and_calibrate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.toml");
    std::fs::write(
        &config,
        "[simulate]\ndelta_t_us = 50.0\nnoise_mv = [20.0]\n[calibrate]\ndelta_t_us = 50.0\n",
    )
    .unwrap();
    let config = config.to_str().unwrap();
    let out = awva(&["simulate", "--config", config], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let traces = dir.path().join("simulate_na20mv.csv");
    let observed = dir.path().join("simulate_na20mv_observed.csv");
    assert!(traces.exists() && observed.exists());

    let ingest = awva(
        &[
            "ingest",
            "--input",
            traces.to_str().unwrap(),
            "--ch1",
            "i1_noisy_v",
            "--ch2",
            "i2_noisy_v",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&ingest),
        0,
        "{}",
        String::from_utf8_lossy(&ingest.stderr)
    );
    assert!(dir.path().join("ingest.csv").exists());

    let calib = awva(
        &[
            "calibrate-phase",
            "--config",
            config,
            "--input",
            observed.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(
        code(&calib),
        0,
        "{}",
        String::from_utf8_lossy(&calib.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("calibrate_phase.csv")).unwrap();
    let lag: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((lag - 75.0).abs() <= 1.0, "lag {lag} µs");
}

#[test]
fn invalid_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[circuit]\npolarity = 3\n").unwrap();
    let out = awva(
        &["simulate", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("polarity"));
}

#[test]
fn missing_input_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = awva(&["ingest", "--input", "/nonexistent/scope.csv"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/scope.csv"));
}

#[test]
fn malformed_scope_file_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scope.csv");
    std::fs::write(&input, "time_s,a,b\n0,1,2\n1e-6,x,2\n").unwrap();
    let out = awva(&["ingest", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));
}

#[test]
fn flat_recording_fails_calibration_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    let mut text = String::from("time_s,observed_v\n");
    for i in 0..5000 {
        text.push_str(&format!("{},0.5\n", i as f64 * 1e-6));
    }
    std::fs::write(&input, text).unwrap();
    let out = awva(
        &["calibrate-phase", "--input", input.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = awva(&["print-config", "--seed", "11"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("base_seed = 11"));
    let path = dir.path().join("printed.toml");
    std::fs::write(&path, &text).unwrap();
    let again = awva(
        &["print-config", "--config", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
