use std::path::Path;
use std::process::{Command, Output};

use xcbs_bench::runner::revalidate_dump;
use xcbs_bench::CSV_HEADER;

const SCENE: &str = r#"
domain = "grid"
map = ["....", ".#..", "...."]

[[agents]]
start = [0, 0]
goal = [3, 2]

[[agents]]
start = [3, 0]
goal = [0, 2]
"#;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xcbs-bench"))
        .args(args)
        .output()
        .unwrap()
}

fn write_scene(dir: &Path, text: &str) -> String {
    let p = dir.join("s.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// CSV lines with the `time_s` column blanked.
fn without_time(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[4] = "";
            f.join(",")
        })
        .collect()
}

#[test]
fn scene_run_writes_csv_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), SCENE);
    let out = dir.path().join("m.csv");
    let dumps = dir.path().join("paths");
    let o = bench(&[
        "--scene",
        &scene,
        "--planners",
        "CBS,xECBS,PP",
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--dump-paths",
        dumps.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1].starts_with("s,CBS,0,true,"));
    let files: Vec<_> = std::fs::read_dir(&dumps).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 6);
    for f in files {
        revalidate_dump(&std::fs::read_to_string(&f).unwrap()).unwrap();
    }
}

#[test]
fn summary_goes_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), SCENE);
    let o = bench(&["--scene", &scene, "--planners", "CBS,ECBS"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stdout.starts_with("scene,planner,"));
    assert!(stderr.contains("success 1/1"), "{stderr}");
    assert!(
        stderr.contains("median ratio ECBS/CBS over 1 mutual successes"),
        "{stderr}"
    );
}

#[test]
fn generated_runs_are_reproducible() {
    let args = [
        "--generate",
        "corridor-grid:n=3,width=8,height=6",
        "--planners",
        "ECBS,xECBS",
        "--trials",
        "3",
        "--seed",
        "11",
        "--quiet",
    ];
    let a = bench(&args);
    let b = bench(&args);
    assert_eq!(a.status.code(), Some(0));
    let (a, b) = (
        String::from_utf8(a.stdout).unwrap(),
        String::from_utf8(b.stdout).unwrap(),
    );
    assert_eq!(without_time(&a), without_time(&b));
    let scenes: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(scenes[0], "corridor-grid-n3-s11");
    assert_eq!(scenes[2], "corridor-grid-n3-s12");
    assert_eq!(scenes[4], "corridor-grid-n3-s13");

    let e1 = bench(&["--generate", "circle-arms:n=3", "--seed", "5", "--emit-scene"]);
    let e2 = bench(&["--generate", "circle-arms:n=3", "--seed", "5", "--emit-scene"]);
    assert_eq!(e1.stdout, e2.stdout);
    assert!(String::from_utf8(e1.stdout).unwrap().contains("domain = \"arm\""));
}

#[test]
fn parallel_jobs_match_sequential_rows() {
    let args = [
        "--generate",
        "corridor-grid:n=2,width=6,height=5",
        "--planners",
        "CBS,PP",
        "--trials",
        "4",
        "--quiet",
    ];
    let seq = bench(&args);
    let mut par_args = args.to_vec();
    par_args.extend(["--jobs", "3"]);
    let par = bench(&par_args);
    assert_eq!(
        without_time(&String::from_utf8(seq.stdout).unwrap()),
        without_time(&String::from_utf8(par.stdout).unwrap())
    );
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["--planners", "CBS"][..],
        &["--scene", "x.toml", "--generate", "circle-arms"],
        &["--generate", "circle-arms", "--planners", "FOO"],
        &["--generate", "circle-arms", "--cache", "maybe"],
        &["--generate", "circle-arms", "--timeout", "-1"],
        &["--generate", "circle-arms:n=0"],
        &["--generate", "circle-arms", "--bogus"],
    ] {
        let o = bench(args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_eq!(bench(&["--help"]).status.code(), Some(0));
}

#[test]
fn scene_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_scene(dir.path(), &SCENE.replace("goal = [3, 2]", "goal = [1, 1]"));
    let o = bench(&["--scene", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("agents[0].goal"));
    let o = bench(&["--scene", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let broken = write_scene(dir.path(), "domain = ");
    let o = bench(&["--scene", &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn cache_and_termination_flags_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), SCENE);
    for extra in [
        ["--cache", "off"],
        ["--termination", "simple"],
        ["--termination", "path-aware"],
    ] {
        let mut args = vec!["--scene", scene.as_str(), "--planners", "xCBS,xECBS", "--quiet"];
        args.extend(extra);
        let o = bench(&args);
        assert_eq!(o.status.code(), Some(0), "{extra:?}");
        assert_eq!(
            String::from_utf8(o.stdout)
                .unwrap()
                .lines()
                .filter(|l| l.contains(",true,"))
                .count(),
            2
        );
    }
}
