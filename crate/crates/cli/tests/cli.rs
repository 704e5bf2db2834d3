use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

const TABLE3: [usize; 60] = [
    1, 1, 1, 1, 2, 2, 3, 3, 4, 6, 4, 5, 5, 9, 11, 10, 12, 8, 6, 11, 5, 4, 6, 3, 2, 1, 3, 1, 1, 3,
    2, 5, 6, 12, 21, 19, 15, 16, 24, 18, 18, 17, 14, 24, 24, 28, 30, 36, 49, 44, 52, 53, 55, 67,
    69, 72, 81, 79, 85, 83,
];

fn primegame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primegame"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn floor60() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let t = tempfile::tempdir().unwrap();
        let d = t.path().join("floor");
        let o = primegame(&[
            "run",
            "--variant",
            "floor",
            "--to-stage",
            "60",
            "--checkpoint-dir",
            d.to_str().unwrap(),
            "-q",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (t, d)
    })
    .1
}

fn dir_arg() -> String {
    floor60().to_str().unwrap().to_string()
}

#[test]
fn run_writes_table3_stage_log() {
    let log = std::fs::read_to_string(floor60().join("stagelog.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("s,p,n,q_digits,elapsed_ms"));
    let n: Vec<usize> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(n, TABLE3);
    assert!(floor60().join("stage_29.pgy").exists());
    assert!(floor60().join("parents_60.csv").exists());
    let s29 = std::fs::read_to_string(floor60().join("stage_29.pgy")).unwrap();
    assert_eq!(
        s29,
        "a=350842542483891235293716663559065020274899073; d=[0]\n"
    );
}

#[test]
fn run_reports_progress_on_stderr_only() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("r");
    let o = primegame(&[
        "run",
        "--to-stage",
        "12",
        "--checkpoint-dir",
        d.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stage 12/12  p=37  n=5"), "{err}");
    let out = stdout(&o);
    assert_eq!(field(&out, "n"), "5");
    assert!(!out.contains("stage 12/12"));
}

#[test]
fn round_variant_reports_extinction() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("round");
    let o = primegame(&[
        "run",
        "--variant",
        "round",
        "--to-stage",
        "30",
        "--checkpoint-dir",
        d.to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(field(&out, "extinct_at"), "24");
    assert_eq!(field(&out, "last_n"), "1");
    let s23 = std::fs::read_to_string(d.join("stage_23.pgy")).unwrap();
    assert!(s23.starts_with("a=206780313999369083332356327764879;"));
}

#[test]
fn resume_matches_fresh_run() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    let run = |d: &Path, s: &str| {
        let o = primegame(&[
            "run",
            "--to-stage",
            s,
            "--checkpoint-dir",
            d.to_str().unwrap(),
            "-q",
        ]);
        assert!(o.status.success());
    };
    run(&a, "40");
    run(&a, "41");
    run(&b, "41");
    let read = |d: &Path| std::fs::read_to_string(d.join("stage_41.pgy")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(
        std::fs::read_to_string(a.join("parents_41.csv")).unwrap(),
        std::fs::read_to_string(b.join("parents_41.csv")).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let t = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let d = t.path().join(threads);
        let o = primegame(&[
            "--threads",
            threads,
            "run",
            "--to-stage",
            "45",
            "--checkpoint-dir",
            d.to_str().unwrap(),
            "-q",
        ]);
        assert!(o.status.success());
        outs.push((
            stdout(&o),
            std::fs::read_to_string(d.join("stage_45.pgy")).unwrap(),
        ));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn analyze_ybounds_contains_constant_prefix() {
    let o = primegame(&[
        "analyze",
        "ybounds",
        "--dir",
        &dir_arg(),
        "--stage",
        "60",
        "--digits",
        "80",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(field(&out, "y_min").starts_with("1.2541961015780119362776795549142134237798692"));
    assert!(field(&out, "y_max").starts_with("1.25419610157801193627767955491421342377"));
    assert_eq!(field(&out, "n"), "83");
}

#[test]
fn analyze_tuplets_and_descendants() {
    let o = primegame(&["analyze", "tuplets", "--dir", &dir_arg(), "--size", "4"]);
    let out = stdout(&o);
    assert_eq!(field(&out, "stage"), "9");
    assert_eq!(field(&out, "ordinal"), "2");
    assert_eq!(field(&out, "offsets"), "6,14,24,26");
    let o = primegame(&[
        "analyze",
        "descendants",
        "--dir",
        &dir_arg(),
        "--order",
        "3",
        "--count",
        "4",
    ]);
    let out = stdout(&o);
    assert_eq!(
        field(&out, "notation"),
        "(1st prime of stage 6)*17*19*23+ {3742, 3780, 3880, 3882}"
    );
    let o = primegame(&["analyze", "tuplets", "--dir", &dir_arg(), "--size", "6"]);
    assert_eq!(field(&stdout(&o), "found"), "false");
}

#[test]
fn analyze_survivors_and_strength_csv() {
    let o = primegame(&[
        "analyze",
        "survivors",
        "--dir",
        &dir_arg(),
        "--horizon",
        "60",
    ]);
    let out = stdout(&o);
    assert!(out.starts_with("s,p,n,n_star\n1,2,1,1\n"));
    assert_eq!(out.lines().count(), 61);
    assert!(out.ends_with("60,281,83,83\n"));
    let o = primegame(&[
        "analyze",
        "strength",
        "--dir",
        &dir_arg(),
        "--split",
        "29",
        "--horizon",
        "60",
    ]);
    assert_eq!(stdout(&o), "index,size,percent\n1,83,100.00\n");
}

#[test]
fn analyze_without_parent_maps_fails_with_io_code() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("np");
    let o = primegame(&[
        "run",
        "--to-stage",
        "10",
        "--checkpoint-dir",
        d.to_str().unwrap(),
        "--no-parents",
        "-q",
    ]);
    assert!(o.status.success());
    let o = primegame(&["analyze", "survivors", "--dir", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("re-run with genealogy enabled"));
}

#[test]
fn corrupt_checkpoint_is_an_invariant_violation() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("bad");
    std::fs::create_dir_all(&d).unwrap();
    // 2897 + 4 = 2901 = 3·967.
    std::fs::write(d.join("stage_5.pgy"), "a=2897; d=[0, 4]\n").unwrap();
    let o = primegame(&[
        "run",
        "--to-stage",
        "6",
        "--checkpoint-dir",
        d.to_str().unwrap(),
        "--prp-rechecks",
        "-q",
    ]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(d.join("stage_5.pgy"), "a=2897; d=[0, x]\n").unwrap();
    let o = primegame(&[
        "run",
        "--to-stage",
        "6",
        "--checkpoint-dir",
        d.to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(primegame(&["run"]).status.code(), Some(1));
    assert_eq!(primegame(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        primegame(&["--threads", "0", "predict", "omega", "--stage", "10"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        primegame(&["predict", "omega", "--stage", "10", "--psi", "sometimes"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        primegame(&[
            "run",
            "--variant",
            "diagonal",
            "--to-stage",
            "3",
            "--dir",
            "/tmp/x"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(primegame(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_directory_is_io_error() {
    let o = primegame(&["analyze", "ybounds", "--dir", "/nonexistent/primegame"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_run_settings() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("cfg");
    let cfg = t.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "variant = semi:2\nto_stage = 10\ncheckpoint_dir = {}\nthreads = 1\nprecision = 5\n",
            d.display()
        ),
    )
    .unwrap();
    let o = primegame(&["--config", cfg.to_str().unwrap(), "run", "-q"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "variant"), "semi:2");
    assert_eq!(field(&out, "extinct_at"), "4");
    let o = primegame(&[
        "--config",
        cfg.to_str().unwrap(),
        "run",
        "--variant",
        "floor",
        "--checkpoint-dir",
        t.path().join("f").to_str().unwrap(),
        "-q",
    ]);
    let out = stdout(&o);
    assert_eq!(field(&out, "n"), "6");
    assert_eq!(field(&out, "y_min"), "1.25419");
}

#[test]
fn predict_omega() {
    let o = primegame(&["predict", "omega", "--stage", "100", "--k", "7"]);
    assert!(o.status.success());
    let w: f64 = field(&stdout(&o), "omega").parse().unwrap();
    assert!((w - 0.914_345_844).abs() < 5e-4, "{w}");
    let o = primegame(&[
        "predict", "omega", "--stage", "1990", "--start", "2000", "--series",
    ]);
    let out = stdout(&o);
    assert!(out.starts_with("s,p,omega\n1990,"));
    assert_eq!(out.lines().count(), 1 + 2000 - 1990 + 1);
}

#[test]
fn predict_project_and_split() {
    let o = primegame(&["predict", "project", "--targets", "1e6,1e9"]);
    let out = stdout(&o);
    let stages: Vec<usize> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(
        stages[0].abs_diff(339) <= 3 && stages[1].abs_diff(702) <= 5,
        "{out}"
    );
    let o = primegame(&[
        "predict", "split", "--stage", "101", "--fold", "3", "--n", "594",
    ]);
    let out = stdout(&o);
    let v: f64 = field(&out, "per_prime_percent").parse().unwrap();
    assert!((v - 0.0043).abs() < 0.001, "{v}");
    let agg: f64 = field(&out, "aggregate_percent").parse().unwrap();
    assert!((agg - 2.76).abs() < 0.3);
}

#[test]
fn predict_table6_and_growth() {
    let o = primegame(&["predict", "table6", "--rows", "101"]);
    assert_eq!(stdout(&o), "s,p,P0,P1,P2,P3,P4,P5,P6,P7,Pgt7\n101,547,34.52,36.75,19.53,6.90,1.83,0.39,0.07,0.01,0.00\n");
    let o = primegame(&["predict", "growth", "--dir", &dir_arg()]);
    let out = stdout(&o);
    assert!(out.starts_with("s,predicted,actual,sigma\n2,"));
    assert_eq!(out.lines().count(), 60);
    let o = primegame(&["predict", "growth", "--stage", "100", "--n", "594"]);
    let p: f64 = field(&stdout(&o), "predicted").parse().unwrap();
    assert!(p > 600.0 && p < 700.0);
    assert_eq!(
        primegame(&["predict", "growth", "--stage", "100"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn variants_commands() {
    let o = primegame(&["variants", "chains", "--r-max", "19"]);
    assert_eq!(stdout(&o), "r,m\n5,2\n7,2\n11,9\n13,9\n17,9\n19,224719\n");
    let o = primegame(&["variants", "semi", "--b-max", "20"]);
    assert_eq!(stdout(&o), "B,extinct_stage\n2,4\n3,7\n5,11\n16,14\n");
    let o = primegame(&["variants", "semi", "--base", "978", "--horizon", "40"]);
    assert_eq!(field(&stdout(&o), "extinct_at"), "17");
    let o = primegame(&["variants", "power", "--c", "3", "--q0", "2", "--depth", "2"]);
    assert!(stdout(&o).ends_with("n,q\n0,2\n1,11\n2,1361\n"));
    let o = primegame(&[
        "variants",
        "verify-power",
        "--a",
        "2.2",
        "--c",
        "3",
        "--n-max",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = primegame(&[
        "variants",
        "verify-power",
        "--a",
        "1.30637788386308069046",
        "--c",
        "3",
        "--n-max",
        "2",
    ]);
    assert_eq!(
        stdout(&o),
        "n,prp,digits,floor\n0,false,1,1\n1,true,1,2\n2,true,2,11\n"
    );
}
