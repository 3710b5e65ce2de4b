use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cpk() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cpk"));
    c.env_remove("CPK_THREADS");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("cpk runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_writes_documented_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lih.csv");
    let o = run(cpk()
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "0",
            "--max",
            "300",
        ])
        .args([
            "--points",
            "7",
            "--asymptotes",
            "eq9,eq10",
            "--per-transition",
        ])
        .arg("--scenario")
        .arg(scenario("lih_perfect.toml"))
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "temperature_K,u_nonresonant_J,u_evanescent_J,u_total_J,eq9_J,eq10_J,u_nr_0_J,u_ev_0_J,regime,far_field_warning,error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    let u: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for v in &u {
        assert!((v / u[0] - 1.0).abs() < 0.03, "{v:e} vs {:e}", u[0]);
    }
}

#[test]
fn thread_count_gives_identical_bytes() {
    let go = |threads: &str| {
        let o = run(cpk()
            .env("CPK_THREADS", threads)
            .args([
                "sweep",
                "--axis",
                "temperature",
                "--min",
                "0",
                "--max",
                "300",
            ])
            .args(["--points", "41", "--asymptotes", "eq16,eq17"])
            .arg("--scenario")
            .arg(scenario("rb_au.toml")));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    assert_eq!(go("1"), go("8"));
}

#[test]
fn json_numbers_match_csv() {
    let common = |fmt: &str| {
        let o = run(cpk()
            .args([
                "sweep", "--axis", "distance", "--min", "1e-7", "--max", "1e-5",
            ])
            .args(["--points", "5", "--spacing", "log", "--format", fmt])
            .arg("--scenario")
            .arg(scenario("oh_au.toml")));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        String::from_utf8(o.stdout).unwrap()
    };
    let json: serde_json::Value = serde_json::from_str(&common("json")).unwrap();
    let csv = common("csv");
    for (row, line) in json["rows"]
        .as_array()
        .unwrap()
        .iter()
        .zip(csv.lines().skip(1))
    {
        let fields: Vec<&str> = line.split(',').collect();
        let from_csv: f64 = fields[3].parse().unwrap();
        assert_eq!(row["u_total"].as_f64().unwrap(), from_csv);
        assert_eq!(
            row["axis_value"].as_f64().unwrap(),
            fields[0].parse::<f64>().unwrap()
        );
    }
}

#[test]
fn numeric_failure_exits_two_and_keeps_rows() {
    let o = run(cpk()
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "0",
            "--max",
            "10",
        ])
        .args(["--points", "3"])
        .arg("--scenario")
        .arg(scenario("lih-thermal_perfect.toml")));
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().contains("T > 0"));
}

#[test]
fn config_errors_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "schema = 1\nspecies = \"LiH\"\nsurface = \"perfect\"\nz_m = 5e-6\ntemperature_K = 1.0\nfoo = 2\n",
    )
    .unwrap();
    let o = run(cpk()
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "1",
            "--max",
            "2",
            "--points",
            "2",
        ])
        .arg("--scenario")
        .arg(&bad));
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.toml") && err.contains("line 6"), "{err}");

    let o = run(cpk()
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "1",
            "--max",
            "2",
            "--points",
            "2",
        ])
        .arg("--scenario")
        .arg(dir.path().join("missing.toml")));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(cpk().args(["sweep", "--nope"])).status.code(), Some(1));
    let o = run(cpk()
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "5",
            "--max",
            "1",
            "--points",
            "3",
        ])
        .arg("--scenario")
        .arg(scenario("lih_perfect.toml")));
    assert_eq!(o.status.code(), Some(1));
    let o = run(cpk()
        .env("CPK_THREADS", "many")
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "1",
            "--max",
            "5",
            "--points",
            "3",
        ])
        .arg("--scenario")
        .arg(scenario("lih_perfect.toml")));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CPK_THREADS"));
    assert_eq!(run(cpk().arg("--help")).status.code(), Some(0));
}

#[test]
fn compare_reports_growth_of_crossover_species() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ybf.json");
    let o = run(cpk()
        .args([
            "compare",
            "--tmin",
            "1",
            "--tmax",
            "300",
            "--points",
            "4",
            "--tolerance",
            "0.01",
        ])
        .arg("--scenario")
        .arg(scenario("ybf_perfect.toml"))
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let change = report["summary"]["relative_change"].as_f64().unwrap();
    assert!(change > 0.2 && change < 0.6, "{change}");
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);

    let o = run(cpk()
        .args([
            "compare",
            "--tmin",
            "1",
            "--tmax",
            "300",
            "--points",
            "4",
            "--tolerance",
            "0.01",
        ])
        .arg("--scenario")
        .arg(scenario("ybf_au.toml")));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn casimir_prints_both_paths() {
    let dir = tempfile::tempdir().unwrap();
    let sp = dir.path().join("gas.toml");
    fs::write(
        &sp,
        "schema = 1\n[[species]]\nname = \"gas\"\nlevels = [{ energy_J = 0.0 }, { omega_rad_s = 2.758e12 }]\ntransitions = [{ from = 0, to = 1, d2_debye2 = 1.0 }]\npreparation = \"thermal_ensemble\"\n",
    )
    .unwrap();
    let o = run(cpk()
        .args(["casimir", "--eta", "1e20", "--z", "1e-6", "--T", "300"])
        .arg("--species")
        .arg(&sp));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let closed = e["closed"].as_f64().unwrap();
    let numerical = e["numerical"].as_f64().unwrap();
    assert!(closed < 0.0);
    assert!(
        (numerical / closed - 1.0).abs() < 1e-3,
        "{numerical:e} {closed:e}"
    );

    let o = run(cpk()
        .args(["casimir", "--eta", "-1", "--z", "1e-6", "--T", "300"])
        .arg("--species")
        .arg(&sp));
    assert_eq!(o.status.code(), Some(1));
}
