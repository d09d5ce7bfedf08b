//! End-to-end checks of the `gaudin` binary: exit codes, JSON and CSV schemas.

use std::process::{Command, Output};

use gaudin_cli::report::{ClosureJson, ReportJson};

fn gaudin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaudin")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn passing_suite_exits_zero_with_a_full_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = gaudin(&["verify", "--suite", "rmatrix", "--T", "3", "--seed", "7", "--report", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let file = std::fs::read_to_string(&path).unwrap();
    assert_eq!(file, stdout(&out));
    let report: ReportJson = serde_json::from_str(&file).unwrap();
    assert_eq!(report.suite, "rmatrix");
    assert_eq!(report.seed, 7);
    assert_eq!(report.config_digest.len(), 64);
    assert!(report.pass);
    assert!(report.cases.iter().all(|c| c.pass && c.residual <= c.tol));
    let names: Vec<&str> = report.cases.iter().map(|c| c.name.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for key in ["cybe", "averaging", "kernel_projection", "sklyanin_toda", "sklyanin_dst", "sklyanin_coupled"] {
        assert!(names.contains(&key), "missing {key}");
    }
}

#[test]
fn report_keys_are_exactly_the_schema() {
    let out = gaudin(&["verify", "--suite", "algebra", "--T", "3"]);
    assert_eq!(code(&out), 0);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mut keys: Vec<&String> = value.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["cases", "config_digest", "pass", "seed", "suite"]);
    let mut case_keys: Vec<&String> = value["cases"][0].as_object().unwrap().keys().collect();
    case_keys.sort();
    assert_eq!(case_keys, ["name", "pass", "residual", "tol"]);
    let back: ReportJson = serde_json::from_value(value.clone()).unwrap();
    assert_eq!(serde_json::to_value(&back).unwrap(), value);
}

#[test]
fn same_seed_gives_identical_reports() {
    let a = gaudin(&["verify", "--suite", "gaudin", "--T", "3", "--seed", "3"]);
    let b = gaudin(&["verify", "--suite", "gaudin", "--T", "3", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invalid_configuration_exits_two() {
    assert_eq!(code(&gaudin(&["verify", "--suite", "all", "--T", "0"])), 2);
    assert_eq!(code(&gaudin(&["verify", "--suite", "algebra", "--h", "-1"])), 2);
    assert_eq!(code(&gaudin(&["simulate", "--model", "toda", "--schedule", "1;0;1"])), 2);
    assert_eq!(code(&gaudin(&["simulate", "--model", "toda", "--schedule", "1:1:1"])), 2);
    assert_eq!(code(&gaudin(&["closure", "--model", "dst", "--pair", "1:0"])), 2);
    let out = gaudin(&["verify", "--suite", "all", "--T", "0"]);
    assert!(!out.stderr.is_empty());
}

#[test]
fn toda_trajectory_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let args = ["simulate", "--model", "toda", "--T", "3", "--schedule", "1:0:1.0", "--csv", path.to_str().unwrap()];
    assert_eq!(code(&gaudin(&args)), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));

    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.join(","), "sample,seg,flow_p,flow_r,t_local,q1,q2,q3,p1,p2,p3,H_1_0,H_2_0,H_3_0,drift_max");
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 1001);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i);
        for field in row.iter().skip(4) {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), field);
        }
    }
    let last_t: f64 = rows[1000][4].parse().unwrap();
    assert!((last_t - 1.0).abs() < 1e-12);
    let drift: f64 = rows[1000][14].parse().unwrap();
    assert!(drift <= 1e-8);

    let again = gaudin(&args);
    assert_eq!(code(&again), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn multi_segment_schedule_labels_segments() {
    let out = gaudin(&["simulate", "--model", "dst", "--T", "2", "--depth", "2", "--schedule", "1:1:0.01,2:1:0.02"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header.join(","),
        "sample,seg,flow_p,flow_r,t_local,x_re1,x_im1,x_re2,x_im2,X_re1,X_im1,X_re2,X_im2,\
         H_1_0_re,H_1_0_im,H_2_0_re,H_2_0_im,H_1_1_re,H_1_1_im,H_2_1_re,H_2_1_im,drift_max"
    );
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 1 + 10 + 20);
    assert_eq!((&rows[10][1], &rows[10][2], &rows[10][3]), ("0", "1", "1"));
    assert_eq!((&rows[11][1], &rows[11][2], &rows[11][3]), ("1", "2", "1"));
}

#[test]
fn divergence_exits_three_with_partial_csv() {
    let out =
        gaudin(&["simulate", "--model", "toda", "--T", "3", "--p", "40,-40,0", "--h", "0.5", "--schedule", "1:0:30"]);
    assert_eq!(code(&out), 3);
    let text = stdout(&out);
    assert!(text.ends_with("# diverged\n"));
    assert!(text.lines().count() >= 3);
}

#[test]
fn closure_command_reports_residual_and_ratio() {
    let out = gaudin(&["closure", "--model", "coupled", "--T", "2", "--pair", "1:0,1:1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: ClosureJson = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary.model, "coupled");
    assert_eq!(summary.pair, [[1, 0], [1, 1]]);
    assert!(summary.residual <= 1e-6);
    assert!(summary.ratio >= 3.0);
    assert!(summary.pass);

    let same = gaudin(&["closure", "--model", "dst", "--T", "3", "--pair", "1:1,1:1"]);
    assert_eq!(code(&same), 0);
    let summary: ClosureJson = serde_json::from_str(&stdout(&same)).unwrap();
    assert!(summary.residual <= 1e-12);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "model = \"toda\"\nT = 4\nseed = 9\n").unwrap();
    let out = gaudin(&["verify", "--suite", "algebra", "--config", path.to_str().unwrap(), "--seed", "10"]);
    assert_eq!(code(&out), 0);
    let report: ReportJson = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report.seed, 10);

    std::fs::write(&path, "model = \"toda\"\nunknown = 1\n").unwrap();
    assert_eq!(code(&gaudin(&["verify", "--suite", "algebra", "--config", path.to_str().unwrap()])), 2);
}

mod parsing {
    use gaudin_cli::report::json_number;
    use gaudin_cli::simulate::{parse_pair, parse_schedule};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn schedules_round_trip(entries in proptest::collection::vec((1usize..6, 0usize..4, 0.0f64..10.0), 1..6)) {
            let text = entries.iter().map(|(p, r, d)| format!("{p}:{r}:{d}")).collect::<Vec<_>>().join(",");
            let parsed = parse_schedule(&text).unwrap();
            prop_assert_eq!(parsed.len(), entries.len());
            for ((flow, d), (p, r, d0)) in parsed.iter().zip(&entries) {
                prop_assert_eq!((flow.p, flow.r), (*p, *r));
                prop_assert_eq!(d.to_bits(), d0.to_bits());
            }
        }

        #[test]
        fn pairs_round_trip(a in (1usize..6, 0usize..4), b in (1usize..6, 0usize..4)) {
            let (f, g) = parse_pair(&format!("{}:{},{}:{}", a.0, a.1, b.0, b.1)).unwrap();
            prop_assert_eq!(((f.p, f.r), (g.p, g.r)), (a, b));
        }

        #[test]
        fn malformed_schedules_are_rejected(p in 0usize..3, sep in prop_oneof![Just(';'), Just(' '), Just('/')]) {
            let text = format!("{p}{sep}0{sep}1");
            prop_assert!(parse_schedule(&text).is_err());
        }

        #[test]
        fn json_numbers_are_finite(v in proptest::num::f64::ANY) {
            let j = json_number(v);
            prop_assert!(j.is_finite());
            if v.is_finite() {
                prop_assert_eq!(j.to_bits(), v.to_bits());
            }
        }
    }
}
