use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use affinest::linalg::spd_factorize;
use affinest::{iterate, mean_state, DistributionKind, DistributionSpec, Sample, Sampler, WeightScheme};
use affinest_cli::ellipses::EllipseRecord;
use affinest_cli::estimate::EstimateReport;
use affinest_cli::input::{parse_rows, write_sample_csv};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_affinest"));
    c.env_remove("AFFINEST_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("run affinest")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn reference_sample(n: usize, seed: u64) -> Sample {
    Sampler::new(DistributionSpec::reference(DistributionKind::Normal))
        .unwrap()
        .sample_stream(n, seed, 0)
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_json_reproduces_library() {
    let dir = TempDir::new().unwrap();
    let sample = reference_sample(100, 17);
    let input = write(&dir, "x.csv", &write_sample_csv(&sample));
    for (flag, scheme) in [
        ("l1", WeightScheme::TrimmedL1 { k_n: 15 }),
        ("l2", WeightScheme::RankWeightedL2 { k_n: 15 }),
    ] {
        let o = run(&["estimate", s(&input), "--scheme", flag, "--kn", "15", "--format", "json"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let report: EstimateReport = serde_json::from_str(&stdout(&o)).unwrap();
        let trace = iterate(&sample, &scheme, 10, 0.0).unwrap();
        assert_eq!(report, EstimateReport::new(&sample, &scheme, &trace));
        assert_eq!(report.steps.len(), 11);
        assert_eq!(report.steps[10].center, trace.states[10].center);
    }
}

#[test]
fn estimate_other_schemes_and_formats() {
    let dir = TempDir::new().unwrap();
    let sample = reference_sample(30, 3);
    let input = write(&dir, "x.csv", &write_sample_csv(&sample));

    let o = run(&["estimate", s(&input), "--scheme", "lk", "--kn", "12", "--k", "3", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_rows(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 11);
    let trace = iterate(&sample, &WeightScheme::GeneralLk { k_n: 12, k: 3 }, 10, 0.0).unwrap();
    for (row, state) in rows.iter().zip(&trace.states) {
        assert_eq!(row[0] as usize, state.step);
        assert_eq!(&row[1..4], &state.center[..]);
    }

    let o = run(&["estimate", s(&input), "--scheme", "poisson", "--lambda", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("Poisson(lambda=0.5)  n = 30  p = 3"), "{text}");
    assert_eq!(text.lines().count(), 14);

    let scores: Vec<String> = (0..30).map(|i| (30 - i).to_string()).collect();
    let o = run(&["estimate", s(&input), "--scheme", "scores", "--scores", &scores.join(","), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = run(&["estimate", s(&input), "--tol", "1e-9", "--iterations", "50", "--format", "json"]);
    let report: EstimateReport = serde_json::from_str(&stdout(&o)).unwrap();
    let stop = report.converged_at.expect("L1 ranks settle");
    assert_eq!(report.steps.len(), stop + 1);
}

#[test]
fn estimate_writes_out_file() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", &write_sample_csv(&reference_sample(40, 1)));
    let out = dir.path().join("report.json");
    let o = run(&["estimate", s(&input), "--format", "json", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let report: EstimateReport = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report.n, 40);
}

#[test]
fn exit_code_2_for_bad_input() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "a,b\n1,2\n3,x\n4,5\n");
    let o = run(&["estimate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 3, column 2"), "{}", stderr(&o));

    let ok = write(&dir, "ok.csv", &write_sample_csv(&reference_sample(20, 2)));
    let o = run(&["estimate", s(&ok), "--kn", "50"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["estimate", s(&ok), "--scheme", "lk"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--k"));
    let o = run(&["estimate", s(&dir.path().join("missing.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["estimate"]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write(&dir, "cfg.json", "{\"n\": 10,\n \"oops\": }");
    let o = run(&["simulate", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn exit_code_3_for_degenerate_sample() {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "line.csv", "x,y\n0,0\n1,2\n2,4\n3,6\n4,8\n");
    let o = run(&["estimate", s(&line), "--kn", "3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("degenerate"));
}

#[test]
fn exit_code_4_for_too_many_failures() {
    // Extremely heavy tails put nearly all scatter on one observation.
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"spec": {"kind": {"type": "student_t", "df": 0.05}, "theta": [0, 0],
             "sigma": {"rows": 2, "cols": 2, "data": [1, 0, 0, 1]}},
            "n": 4, "replications": 200, "schemes": [{"type": "trimmed_l1", "k_n": 2}],
            "iterations": 2, "master_seed": 1}"#,
    );
    let o = run(&["simulate", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn exit_code_5_for_ellipses_outside_the_plane() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", &write_sample_csv(&reference_sample(30, 4)));
    let o = run(&["ellipses", s(&input)]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn ellipses_pass_through_their_observations() {
    let dir = TempDir::new().unwrap();
    let spec = DistributionSpec {
        kind: DistributionKind::Normal,
        theta: vec![1.0, 2.0],
        sigma: affinest::Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap(),
    };
    let sample = Sampler::new(spec).unwrap().sample_stream(100, 8, 0).unwrap();
    let input = write(&dir, "x.csv", &write_sample_csv(&sample));
    let o = run(&["ellipses", s(&input), "--every", "10", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records: Vec<EllipseRecord> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(records.len(), 30);
    for est in ["mean", "l1", "l2"] {
        let ranks: Vec<usize> = records.iter().filter(|r| r.estimator == est).map(|r| r.rank).collect();
        assert_eq!(ranks, (0..10).map(|k| 1 + 10 * k).collect::<Vec<_>>());
    }
    let mean = mean_state(&sample).unwrap();
    let first = &records[0];
    assert_eq!(first.estimator, "mean");
    assert_eq!(vec![first.center_x, first.center_y], mean.center);
    for r in &records {
        let shape = affinest::Matrix::from_rows(&[vec![r.shape_xx, r.shape_xy], vec![r.shape_xy, r.shape_yy]]).unwrap();
        let f = spd_factorize(&shape).unwrap();
        let x = sample.row(r.observation - 1);
        let q = f.quad_form(&[x[0] - r.center_x, x[1] - r.center_y]).unwrap();
        assert!((q - r.level).abs() < 1e-12, "{q} vs {}", r.level);
    }

    let o = run(&["ellipses", s(&input), "--estimators", "l2", "--every", "1"]);
    let rows = stdout(&o);
    let mut lines = rows.lines();
    assert_eq!(
        lines.next(),
        Some("estimator,observation,rank,center_x,center_y,shape_xx,shape_xy,shape_yy,level")
    );
    let levels: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(levels.len(), 100);
    assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    assert!((levels.iter().sum::<f64>() - 2.0).abs() < 1e-10);
}

fn small_config(dir: &TempDir) -> PathBuf {
    let mut cfg: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/reference_t3.json")).unwrap(),
    )
    .unwrap();
    cfg["replications"] = 40.into();
    write(dir, "small.json", &cfg.to_string())
}

#[test]
fn simulate_writes_consistent_files() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(&dir);
    let out = dir.path().join("out");
    let o = run(&["simulate", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let digest = stdout(&o);
    assert_eq!(digest.lines().count(), 1);
    assert!(digest.starts_with("40 of 40 replications (n = 100, p = 3, seed "), "{digest}");

    let summary: affinest::SimulationSummary =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.succeeded, 40);
    assert_eq!(summary.schemes.len(), 2);

    let est = std::fs::read_to_string(out.join("estimates.csv")).unwrap();
    let mut lines = est.lines();
    assert_eq!(lines.next(), Some("scheme,iteration,coordinate,mean,median,q25,q75,min,max"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 2 * 10 * 3);
    for line in body {
        let cells: Vec<&str> = line.split(',').collect();
        let sc = summary.schemes.iter().find(|x| x.label == cells[0]).unwrap();
        let it: usize = cells[1].parse().unwrap();
        let j: usize = cells[2].parse().unwrap();
        let stats = &sc.iterations[it - 1].center[j - 1];
        let mean: f64 = cells[3].parse().unwrap();
        assert!((mean - stats.mean).abs() <= 5e-7);
        let max: f64 = cells[8].parse().unwrap();
        assert!((max - stats.max).abs() <= 5e-7);
    }

    let d = std::fs::read_to_string(out.join("defficiency.csv")).unwrap();
    assert_eq!(d.lines().count(), 1 + 2 * 10);
    let first: Vec<f64> = d.lines().nth(1).unwrap().split(',').skip(2).map(|c| c.parse().unwrap()).collect();
    assert!((first[1] - summary.schemes[0].iterations[0].d_efficiency.median).abs() <= 5e-7);

    let c = std::fs::read_to_string(out.join("comparators.csv")).unwrap();
    assert_eq!(c.lines().count(), 1 + 3 * 3);
    assert!(c.lines().nth(7).unwrap().starts_with("spatial_median,1,"));
}

#[test]
fn simulate_respects_threads_and_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(&dir);
    let go = |sub: &str, threads: &str, seed: Option<&str>| -> Vec<u8> {
        let out = dir.path().join(sub);
        let mut c = bin();
        c.args(["simulate", s(&cfg), "--out", s(&out)]).env("AFFINEST_THREADS", threads);
        if let Some(seed) = seed {
            c.args(["--seed", seed]);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("summary.json")).unwrap()
    };
    let a = go("a", "1", None);
    let b = go("b", "2", None);
    let c = go("c", "0", Some("77"));
    assert_eq!(a, b);
    assert_ne!(a, c);

    let o = bin()
        .args(["simulate", s(&cfg), "--out", s(&dir.path().join("d"))])
        .env("AFFINEST_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
