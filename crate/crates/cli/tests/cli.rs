use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SCENARIOS: [&str; 6] = [
    "single_gazer",
    "two_gazers",
    "four_gazers",
    "unknown_person",
    "id_request_mixed",
    "five_bins",
];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn socialcue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socialcue")).args(args).output().expect("binary runs")
}

fn run_scenario(name: &str, variant: &str, out: &Path, extra: &[&str]) -> Output {
    let scn = root().join(format!("scenarios/{name}.scn"));
    let mut args = vec![
        "run",
        "--scenario",
        scn.to_str().unwrap(),
        "--variant",
        variant,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = socialcue(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn without_throughput(report: &str) -> String {
    report.lines().filter(|l| !l.starts_with("throughput_fps=")).collect::<Vec<_>>().join("\n")
}

#[test]
fn bundled_scenarios_match_goldens() {
    let dir = tempfile::tempdir().unwrap();
    for name in SCENARIOS {
        for variant in ["audio", "haptics"] {
            let out = dir.path().join(format!("{name}-{variant}"));
            run_scenario(name, variant, &out, &["--deterministic"]);
            let got = fs::read_to_string(out.join("commands.log")).unwrap();
            let golden = fs::read_to_string(root().join(format!("goldens/{name}.{variant}.commands.log"))).unwrap();
            assert_eq!(got, golden, "{name} {variant}");
            if variant == "audio" {
                assert!(!got.lines().any(|l| l.split(' ').nth(2) == Some("belt")), "{name}");
            }
        }
    }
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario("single_gazer", "haptics", dir.path(), &[]);
    for f in ["events.log", "commands.log", "truth_events.log", "truth_commands.log", "report.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("yaw_bin_accuracy=1.0000"));
    assert!(report.contains("gaze_event_precision=1.0000"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("yaw_bin_accuracy"));
}

#[test]
fn identical_arguments_reproduce_logs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_scenario("id_request_mixed", "haptics", out, &["--seed", "7", "--identify"]);
    }
    for f in ["events.log", "commands.log"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let ra = fs::read_to_string(a.join("report.txt")).unwrap();
    let rb = fs::read_to_string(b.join("report.txt")).unwrap();
    assert_eq!(without_throughput(&ra), without_throughput(&rb));
    assert!(ra.contains("id_rank1=1.0000"), "{ra}");
    assert!(ra.contains("unknown_rejection_rate=1.0000"), "{ra}");
}

#[test]
fn mute_drops_speech_but_keeps_pulses() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("two_gazers", "haptics", dir.path(), &["--mute"]);
    let log = fs::read_to_string(dir.path().join("commands.log")).unwrap();
    assert!(!log.is_empty());
    assert!(log.lines().all(|l| l.split(' ').nth(2) == Some("belt")), "{log}");
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let golden = root().join("goldens/id_request_mixed.haptics.commands.log");
    let g = golden.to_str().unwrap();

    let same = socialcue(&["compare", g, g]);
    assert_eq!(same.status.code(), Some(0));
    assert!(same.stdout.is_empty());

    // one extra belt pulse at the end
    let text = fs::read_to_string(&golden).unwrap();
    let last_seq: u64 = text.lines().last().unwrap().split(' ').next().unwrap().parse().unwrap();
    let extra = dir.path().join("extra.log");
    fs::write(&extra, format!("{text}{} 9000 belt 3 200 400\n", last_seq + 1)).unwrap();
    let diff = socialcue(&["compare", g, extra.to_str().unwrap()]);
    assert_eq!(diff.status.code(), Some(1));
    let report = String::from_utf8_lossy(&diff.stdout);
    assert!(report.contains(&(last_seq + 1).to_string()) && report.contains("belt"), "{report}");

    // every timestamp moved by 3 ms
    let shifted: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<String> = l.split(' ').map(str::to_string).collect();
            f[1] = (f[1].parse::<u64>().unwrap() + 3).to_string();
            f.join(" ") + "\n"
        })
        .collect();
    let moved = dir.path().join("moved.log");
    fs::write(&moved, shifted).unwrap();
    let m = moved.to_str().unwrap();
    assert_eq!(socialcue(&["compare", g, m, "--tol-ms", "5"]).status.code(), Some(0));
    assert_eq!(socialcue(&["compare", g, m]).status.code(), Some(1));

    let missing = dir.path().join("missing.log");
    assert_eq!(socialcue(&["compare", g, missing.to_str().unwrap()]).status.code(), Some(2));
    let junk = dir.path().join("junk.log");
    fs::write(&junk, "not a log line\n").unwrap();
    assert_eq!(socialcue(&["compare", g, junk.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(socialcue(&["run"]).status.code(), Some(2));
    assert_eq!(socialcue(&["run", "--scenario", "/nonexistent.scn"]).status.code(), Some(2));
    let scn = root().join("scenarios/single_gazer.scn");
    assert_eq!(
        socialcue(&["run", "--scenario", scn.to_str().unwrap(), "--variant", "smell"]).status.code(),
        Some(2)
    );
}

#[test]
fn metrics_scores_a_run_against_its_truth() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("two_gazers", "audio", dir.path(), &[]);
    let scn = root().join("scenarios/two_gazers.scn");
    let o = socialcue(&[
        "metrics",
        dir.path().join("events.log").to_str().unwrap(),
        "--truth",
        dir.path().join("truth_events.log").to_str().unwrap(),
        "--scenario",
        scn.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("gaze_event_precision=1.0000"), "{text}");
    assert!(text.contains("gaze_event_recall=1.0000"), "{text}");
    assert!(text.contains("mean_gaze_latency_ms=133.0"), "{text}");
}
