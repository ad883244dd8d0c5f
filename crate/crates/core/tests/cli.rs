use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
domain = [[-8.0, 8.0]]
grid_n = [128]
beta = 50.0

[potential]
name = "harmonic"

[initial]
name = "gaussian"
width = 1.5

[solver]
order = 2
tau = 0.05
tol = 1e-9
"#;

fn gpe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpe")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_writes_trace_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().to_string_lossy().into_owned();
    let run = gpe(&["solve", "--config", &config, "--out", &out]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let trace = std::fs::read_to_string(dir.path().join("small_2_0.05.csv")).unwrap();
    assert!(trace.starts_with("iter,tau,kappa,E_relaxed,E_original,residual,wall_ns,stage"));
    assert!(dir.path().join("small_2_0.05.gpef").exists());

    let audit = gpe(&["audit", &dir.path().join("small_2_0.05.csv").to_string_lossy()]);
    assert_eq!(audit.status.code(), Some(0));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("beta", "betta"));
    let run = gpe(&["solve", "--config", &config, "--out", &dir.path().to_string_lossy()]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("betta"), "{err}");

    let run = gpe(&["solve", "--builtin", "no_such_problem"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = gpe(&["solve", "--config", &config, "--n-max", "2", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn tampered_trace_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = gpe(&["solve", "--config", &config, "--out", &dir.path().to_string_lossy()]);
    assert_eq!(run.status.code(), Some(0));
    let path = dir.path().join("small_2_0.05.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[5].split(',').map(str::to_string).collect();
    let bumped: f64 = cells[3].parse::<f64>().unwrap() + 1.0;
    cells[3] = format!("{bumped:.16e}");
    lines[5] = cells.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let audit = gpe(&["audit", &path.to_string_lossy()]);
    assert_eq!(audit.status.code(), Some(4));
}
