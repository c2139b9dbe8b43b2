use std::path::Path;
use std::process::{Command, Output};

fn nlkg(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nlkg"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("out/summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const SMALL: &str = "[grid]\nn = 128\nL = 32.0\n[integrator]\ndt = 0.01\n[matching]\nT = 4.0\n";

#[test]
fn negative_mass_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlkg(&["evolve"], "[grid]\nm = -1.0\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.m"), "{err}");
}

#[test]
fn malformed_toml_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlkg(&["evolve"], "seed = 1\n[grid]\nn = \"many\"\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn free_single_mode_matches_the_analytic_solution() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[grid]\nn = 128\nL = 32.0\nlambda = 0.0\n\
                  [integrator]\ndt = 0.01\n\
                  [profile]\nkind = \"mode\"\nk = [3]\namplitude = 0.5\n\
                  [evolve]\nt = 7.3\nstride = 50\n";
    let out = nlkg(&["evolve"], config, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["results"]["analytic_match"], true);
    assert!(s["results"]["max_analytic_error"].as_f64().unwrap() < 1e-10);
    assert!(dir.path().join("out/evolve.csv").exists());
    assert!(dir.path().join("out/final.nlkg").exists());
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    // Same output directory both times: the config echo includes it.
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let config = format!("{SMALL}[profile]\nkind = \"ensemble\"\namplitude = 0.1\n");
        let out = nlkg(&["scatter", "--seed", "7", "--threads", "1"], &config, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let read = |name: &str| std::fs::read(dir.path().join("out").join(name)).unwrap();
        outputs.push((read("summary.json"), read("cauchy.csv"), read("out.nlkg")));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}[verify]\ncriteria = [2, 3, 8]\nsmoke = false\n");
    let out = nlkg(&["verify"], &config, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    let s = summary(dir.path());
    assert_eq!(s["seed"], 1);
    assert_eq!(s["results"]["outcomes"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("out/residuals.csv").exists());
}

#[test]
fn basis_and_kernel_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlkg(&["basis"], SMALL, dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("out/gram.csv").exists());
    let config = format!("{SMALL}[kernel.partner]\nkind = \"ensemble\"\nindex = 1\n");
    let out = nlkg(&["kernel"], &config, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(summary(dir.path())["results"]["bound_ratio"].as_f64().unwrap().is_finite());
}
