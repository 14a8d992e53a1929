use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pearl_lab::engines::{read_jsonl, EngineKind};
use pearl_lab::models::SequenceModel;
use pearl_lab::simulator::{simulate_run, TimingParams};
use pearl_lab::theory::pearl_speedup;
use pearl_lab::TokenId;
use pearl_lab_bench::train::{load_model, train_bytes};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pearl-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn synthetic(engine: &str, gamma: Option<usize>, tokens: usize, extra: &str) -> String {
    let gamma = gamma.map(|g| format!(r#""gamma": {g},"#)).unwrap_or_default();
    format!(
        r#"{{"engine": "{engine}", {gamma} "seed": 11, "max_new_tokens": {tokens}, {extra}
            "model": {{"synthetic": {{"alpha": 0.8}}}}, "timing": {{"t": 1, "c": 5}}}}"#
    )
}

/// Reads the `all` row of a summary CSV into (header -> value) pairs.
fn summary_all(dir: &Path) -> Vec<(String, String)> {
    let mut r = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    let row = r.records().map(|x| x.unwrap()).find(|x| &x[0] == "all").unwrap();
    headers.into_iter().zip(row.iter().map(str::to_owned)).collect()
}

fn field(pairs: &[(String, String)], name: &str) -> String {
    pairs.iter().find(|p| p.0 == name).unwrap().1.clone()
}

#[test]
fn missing_gamma_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sd.json", &synthetic("sd", None, 10, ""));
    let out = cli(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn unknown_key_is_config_error_with_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        &synthetic("pearl", Some(3), 10, r#""gama": 3,"#),
    );
    let out = cli(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`gama`"));
}

#[test]
fn missing_config_is_io_error() {
    let out = cli(&["run", "--config", "/nonexistent/pearl.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/pearl.json"));
}

#[test]
fn autoregressive_speedup_is_exactly_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ar.json", &synthetic("ar", None, 300, ""));
    let out_dir = tmp.path().join("out");
    let out = cli(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let all = summary_all(&out_dir);
    assert_eq!(field(&all, "simulated_speedup"), "1.000000");
    assert_eq!(field(&all, "tokens"), "300");
    for f in [
        "trace.jsonl",
        "outputs.jsonl",
        "run_lengths.csv",
        "steps.svg",
        "run_lengths.svg",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn pearl_synthetic_speedup_matches_theory() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "pearl.json", &synthetic("pearl", Some(5), 100_000, ""));
    let out_dir = tmp.path().join("out");
    let out = cli(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let speedup: f64 = field(&summary_all(&out_dir), "simulated_speedup").parse().unwrap();
    let want = pearl_speedup(0.8, 5.0, 5.0);
    assert!((speedup / want - 1.0).abs() < 0.05, "{speedup} vs {want}");

    // the summary agrees with re-timing the written trace
    let trace = read_jsonl(
        fs::File::open(out_dir.join("trace.jsonl"))
            .map(std::io::BufReader::new)
            .unwrap(),
    )
    .unwrap();
    let sim = simulate_run(&trace, TimingParams::new(1.0, 5.0).unwrap(), EngineKind::Pearl).unwrap();
    assert!((sim.speedup_vs_ar - speedup).abs() < 1e-6);

    // histogram mass equals the number of completed segments
    let all = summary_all(&out_dir);
    let mut r = csv::Reader::from_path(out_dir.join("run_lengths.csv")).unwrap();
    let mass: usize = r.records().map(|x| x.unwrap()[1].parse::<usize>().unwrap()).sum();
    assert_eq!(mass.to_string(), field(&all, "segments"));
}

#[test]
fn csv_outputs_are_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("prompts.txt"), "0\n1 0\n\n0 0 1\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        "exp.json",
        &synthetic("pearl", Some(4), 500, r#""prompts": "prompts.txt","#),
    );
    let mut outputs = Vec::new();
    for (i, extra) in [None, None, Some("--parallel-prompts")].iter().enumerate() {
        let dir = tmp.path().join(format!("out{i}"));
        let mut args = vec!["run", "--config", &cfg, "--out", dir.to_str().unwrap()];
        args.extend(extra.iter());
        assert!(cli(&args).status.success());
        outputs.push(
            ["summary.csv", "run_lengths.csv", "trace.jsonl"]
                .map(|f| fs::read(dir.join(f)).unwrap())
                .to_vec(),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let summary = String::from_utf8(outputs[0][0].clone()).unwrap();
    assert_eq!(summary.lines().count(), 6);
}

#[test]
fn seed_flag_changes_trace() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "exp.json", &synthetic("sd", Some(3), 200, ""));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(cli(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])
        .status
        .success());
    assert!(
        cli(&["run", "--config", &cfg, "--seed", "12", "--out", b.to_str().unwrap()])
            .status
            .success()
    );
    assert_ne!(
        fs::read(a.join("trace.jsonl")).unwrap(),
        fs::read(b.join("trace.jsonl")).unwrap()
    );
}

#[test]
fn ngram_run_from_corpus() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("corpus.txt"),
        pearl_lab_bench::corpus::synthetic_text(20_000, 1),
    )
    .unwrap();
    fs::write(tmp.path().join("prompts.txt"), "the cat\na dog \n").unwrap();
    let body = r#"{"engine": "pearl", "gamma": 3, "seed": 1, "max_new_tokens": 40,
        "prompts": "prompts.txt", "output_dir": "res",
        "model": {"ngram": {"corpus": "corpus.txt", "draft_order": 2, "target_order": 3, "lambda": 0.5}},
        "timing": {"draft_latency": 1.0, "target_latency": 3.0}}"#;
    let cfg = write_config(tmp.path(), "exp.json", body);
    let out = cli(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let outputs = fs::read_to_string(tmp.path().join("res/outputs.jsonl")).unwrap();
    assert_eq!(outputs.lines().count(), 2);
    assert!(outputs.contains(r#""input":"the cat""#));
}

#[test]
fn sweep_single_cell_has_one_row() {
    let tmp = TempDir::new().unwrap();
    let out = cli(&[
        "sweep",
        "--alphas",
        "0.8",
        "--cs",
        "5",
        "--gammas",
        "5",
        "--steps",
        "4000",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(fs::read_to_string(tmp.path().join("sweep.svg"))
        .unwrap()
        .contains("crimson"));
}

#[test]
fn sweep_marks_ratio_as_best_window() {
    let tmp = TempDir::new().unwrap();
    let out = cli(&[
        "sweep",
        "--alphas",
        "0.8",
        "--cs",
        "3,5",
        "--gammas",
        "1-8",
        "--steps",
        "40000",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha=0.8 c=3: best gamma 3"), "{stdout}");
    assert!(stdout.contains("alpha=0.8 c=5: best gamma 5"), "{stdout}");
    assert_eq!(
        fs::read_to_string(tmp.path().join("sweep.csv"))
            .unwrap()
            .lines()
            .count(),
        17
    );
}

#[test]
fn train_round_trips() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("tiny.txt");
    fs::write(&corpus, "abcab").unwrap();
    let model_path = tmp.path().join("m/bigram.bin");
    let out = cli(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--order",
        "2",
        "--out",
        model_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("vocab size: 257"), "{stdout}");
    let loaded = load_model(&model_path).unwrap();
    let fresh = train_bytes(b"abcab", 2, 1.0).unwrap();
    assert!(stdout.contains(&format!("contexts: {}", fresh.context_count())));
    for prefix in [&b""[..], b"a", b"ab", b"zz"] {
        let p: Vec<TokenId> = prefix.iter().map(|&b| TokenId(b.into())).collect();
        assert_eq!(loaded.next_dist(&p).as_slice(), fresh.next_dist(&p).as_slice());
    }
}

#[test]
fn train_missing_corpus_names_path() {
    let out = cli(&["train", "--corpus", "/no/such/corpus.txt", "--out", "/tmp/x.bin"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/corpus.txt"));
}

#[test]
fn train_empty_corpus_rejected() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("empty.txt");
    fs::write(&corpus, "").unwrap();
    let out = cli(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        tmp.path().join("m.bin").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_theorems_subset_reports_markdown() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("report.md");
    let out = cli(&["verify-theorems", "--only", "8,9", "--out", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = fs::read_to_string(report).unwrap();
    assert!(text.contains("| 8 | scripted worked trace | pass |"));
    assert!(text.contains("| 9 | concurrent equals serial | pass |"));
    assert!(text.contains("passed: 2/2"));
}

/// Wall-clock comparison with injected sleeps: 2 ms per draft forward and
/// 10 ms per target forward.
#[test]
fn real_latency_parallel_beats_speculative() {
    let tmp = TempDir::new().unwrap();
    let mut walls = Vec::new();
    for engine in ["sd", "pearl"] {
        let extra = r#""real_latency": {"unit_ms": 2.0},"#;
        let cfg = write_config(
            tmp.path(),
            &format!("{engine}.json"),
            &synthetic(engine, Some(5), 150, extra),
        );
        let dir = tmp.path().join(engine);
        let out = cli(&[
            "run",
            "--config",
            &cfg,
            "--real-latency",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        walls.push(field(&summary_all(&dir), "wall_clock_s").parse::<f64>().unwrap());
    }
    assert!(walls[1] < walls[0], "pearl {} s vs sd {} s", walls[1], walls[0]);
}
