use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hsnli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsnli"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HSNLI_MODEL_DIR")
        .env_remove("HSNLI_REFERENCES")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap()
}

fn lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write_posts(path: &Path, language: &str, spec: &[(&str, usize)]) {
    let mut body = String::new();
    for (split, n) in spec {
        for i in 0..*n {
            let hate = i % 2 == 0;
            body.push_str(&serde_json::json!({
                "id": format!("{language}-{split}-{i}"),
                "text": format!("{} {i} @someone https://x.y/{i}", if hate { "vile" } else { "fine" }),
                "label": if hate { "hate" } else { "not_hate" },
                "language": language,
                "split": split,
            }).to_string());
            body.push('\n');
        }
    }
    std::fs::write(path, body).unwrap();
}

const MOCK: &str = concat!(
    "{\"match\":\"vile\",\"slot\":\"main\",\"scores\":[0.9,0.05,0.05]}\n",
    "{\"match\":\"fine\",\"slot\":\"main\",\"scores\":[0.1,0.1,0.8]}\n",
    "{\"match\":\"vile 0 \",\"slot\":\"counter:opposes_referenced\",\"scores\":[0.9,0.05,0.05]}\n",
    "{\"match\":\"*\",\"slot\":\"counter:opposes_referenced\",\"scores\":[0.1,0.1,0.8]}\n",
    "{\"match\":\"*\",\"slot\":\"*\",\"scores\":[0.9,0.05,0.05]}\n",
);

#[test]
fn classify_with_strategies_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_posts(&d.join("posts.jsonl"), "es", &[("test", 4)]);
    std::fs::write(d.join("mock.jsonl"), MOCK).unwrap();
    let catalog = repo_file("config/catalog.toml");
    let strategies = repo_file("config/strategies.toml");
    let summary = ok(&hsnli(
        &[
            "classify",
            "--backend",
            "mock.jsonl",
            "--catalog",
            catalog.to_str().unwrap(),
            "--in",
            "posts.jsonl",
            "--strategies",
            strategies.to_str().unwrap(),
            "--out",
            "traces.jsonl",
        ],
        d,
    ));
    assert_eq!(summary["inputs"], 4);
    let traces = lines(&d.join("traces.jsonl"));
    assert_eq!(traces.len(), 4);
    // "vile 0" is flagged as counterspeech, "vile 2" stays hate, "fine" posts never reach the filters.
    assert_eq!(traces[0]["main_label"], "hate");
    assert_eq!(traces[0]["final_label"], "not_hate");
    assert_eq!(traces[0]["fired_filters"], serde_json::json!(["filter_counterspeech"]));
    assert_eq!(traces[2]["final_label"], "hate");
    assert_eq!(traces[1]["main_label"], "not_hate");
    assert_eq!(traces[1]["filters"]["filter_by_target"], "skipped");
}

#[test]
fn classify_with_exported_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("posts.jsonl"),
        "{\"id\":\"a\",\"text\":\"they are vermin\"}\n{\"id\":\"b\",\"text\":\"i love you all\"}\n",
    )
    .unwrap();
    let model = repo_file("crates/onnx/tests/fixtures/tiny-nli");
    let out = Command::new(env!("CARGO_BIN_EXE_hsnli"))
        .args(["classify", "--in", "posts.jsonl", "--language", "en", "--out", "t.jsonl"])
        .env("HSNLI_MODEL_DIR", &model)
        .current_dir(d)
        .output()
        .unwrap();
    ok(&out);
    let traces = lines(&d.join("t.jsonl"));
    assert_eq!(traces[0]["main_label"], "hate");
    assert_eq!(traces[1]["main_label"], "not_hate");
}

#[test]
fn preprocess_sample_convert_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_posts(&d.join("raw.jsonl"), "es", &[("train", 40), ("test", 10)]);
    let summary = ok(&hsnli(&["preprocess", "--in", "raw.jsonl", "--out", "clean.jsonl"], d));
    assert_eq!(summary["records"], 50);
    let clean = lines(&d.join("clean.jsonl"));
    assert_eq!(clean[0]["text"], "vile 0 @user https");

    ok(&hsnli(
        &["sample", "--in", "clean.jsonl", "--out", "s.jsonl", "--n", "20", "--seed", "4", "--stratified"],
        d,
    ));
    assert_eq!(lines(&d.join("s.jsonl")).len(), 20);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("s.jsonl.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["class_counts"]["hate"], 10);
    assert_eq!(meta["mode"], "stratified");

    ok(&hsnli(&["convert-nli", "--in", "s.jsonl", "--out", "nli.jsonl"], d));
    let nli = lines(&d.join("nli.jsonl"));
    assert!(nli.iter().all(|e| e["hypothesis"] == "This text is hate speech."));
    assert!(nli.iter().all(|e| e["label"] == "entailment" || e["label"] == "contradiction"));

    std::fs::write(d.join("mock.jsonl"), MOCK).unwrap();
    ok(&hsnli(
        &["classify", "--backend", "mock.jsonl", "--in", "clean.jsonl", "--out", "t.jsonl"],
        d,
    ));
    let eval = ok(&hsnli(
        &["evaluate", "--gold", "clean.jsonl", "--pred", "t.jsonl", "--pred", "t.jsonl", "--resamples", "200"],
        d,
    ));
    assert_eq!(eval["macro_f1"], 1.0);
    assert_eq!(eval["ci_low"], 1.0);
}

#[test]
fn downsampling_and_strict_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut body = String::new();
    for i in 0..1000 {
        let hate = i % 20 == 0;
        body.push_str(&format!(
            "{{\"id\":\"p{i}\",\"text\":\"t{i}\",\"label\":\"{}\",\"language\":\"en\",\"split\":\"train\"}}\n",
            if hate { "hate" } else { "not_hate" }
        ));
    }
    std::fs::write(d.join("raw.jsonl"), body).unwrap();
    std::fs::write(
        d.join("m.toml"),
        "code = \"T\"\nexpected_hate_pct = 0.22\n[tolerance]\nhate_pct = 0.001\n",
    )
    .unwrap();
    let summary = ok(&hsnli(
        &[
            "preprocess", "--in", "raw.jsonl", "--out", "ds.jsonl", "--downsample-non-hate", "0.22", "--seed", "1",
            "--manifest", "m.toml", "--strict",
        ],
        d,
    ));
    let frac = summary["hate_fraction"].as_f64().unwrap();
    assert!((frac - 0.22).abs() <= 0.001, "{frac}");

    let err = error_line(&hsnli(
        &["preprocess", "--in", "raw.jsonl", "--out", "bad.jsonl", "--manifest", "m.toml", "--strict"],
        d,
    ));
    assert_eq!(err["error"], "manifest");
    assert!(!d.join("bad.jsonl").exists());
}

#[test]
fn shuffle_xnli_mixes_languages() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut body = String::new();
    for i in 0..400 {
        let label = ["entailment", "neutral", "contradiction"][i % 3];
        body.push_str(&serde_json::json!({
            "id": format!("x{i}"),
            "label": label,
            "premise": {"en": format!("p{i}"), "es": format!("pe{i}")},
            "hypothesis": {"en": format!("h{i}"), "es": format!("he{i}")},
        }).to_string());
        body.push('\n');
    }
    std::fs::write(d.join("par.jsonl"), body).unwrap();
    let summary = ok(&hsnli(&["shuffle-xnli", "--in", "par.jsonl", "--out", "mix.jsonl", "--seed", "2"], d));
    let frac = summary["mismatched_fraction"].as_f64().unwrap();
    assert!((0.4..0.6).contains(&frac), "{frac}");
    let mixed = lines(&d.join("mix.jsonl"));
    assert_eq!(mixed.len(), 400);
    assert_eq!(mixed[4]["label"], "neutral");
}

fn grid_fixture(d: &Path) {
    write_posts(&d.join("es.jsonl"), "es", &[("train", 40), ("test", 10)]);
    write_posts(&d.join("pt.jsonl"), "pt", &[("train", 40), ("test", 10)]);
    std::fs::write(d.join("mock.jsonl"), MOCK).unwrap();
    let catalog = repo_file("config/catalog.toml");
    std::fs::write(
        d.join("grid.toml"),
        format!("catalog = {:?}\n", catalog.to_str().unwrap())
            + r#"
languages = ["es", "pt"]
n_shots = [0, 20]
test_sets = ["held_out"]
runs = 2
resamples = 100
seed = 5

[[variants]]
tag = "X+DEN"

[[variants]]
tag = "M"

[datasets.es]
held_out = { code = "BAS19_ES", path = "es.jsonl" }

[datasets.pt]
held_out = { code = "FOR19_PT", path = "pt.jsonl" }

[[backends]]
variant = "X+DEN"
kind = "mock"
path = "mock.jsonl"

[[backends]]
variant = "M"
kind = "mock"
path = "mock.jsonl"
"#,
    )
    .unwrap();
}

#[test]
fn grid_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid_fixture(d);
    let summary = ok(&hsnli(&["grid", "--config", "grid.toml", "--out", "results", "--jobs", "2", "--quiet"], d));
    assert_eq!(summary["cells"], 8);
    assert_eq!(summary["computed"], 8);
    assert_eq!(lines(&d.join("results/cells.jsonl")).len(), 8);
    let report = std::fs::read_to_string(d.join("results/report.csv")).unwrap();
    assert!(report.starts_with("variant,"), "{report}");
    assert_eq!(report.lines().count(), 3);

    let again = ok(&hsnli(&["grid", "--config", "grid.toml", "--out", "results", "--quiet"], d));
    assert_eq!(again["resumed"], 8);
    assert_eq!(again["computed"], 0);

    let reference = repo_file("references");
    let cmp = ok(&hsnli(
        &["report", "--results", "results", "--reference", reference.to_str().unwrap(), "--out", "diff.csv"],
        d,
    ));
    assert_eq!(cmp["tables"], 1);
    let diff = std::fs::read_to_string(d.join("diff.csv")).unwrap();
    assert!(diff.contains("X+DEN"), "{diff}");
    assert!(diff.lines().last().unwrap().starts_with("Avg. Diff."));
}

#[test]
fn grid_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid_fixture(d);
    let summary = ok(&hsnli(
        &["grid", "--config", "grid.toml", "--out", "r", "--languages", "es", "--n-shots", "0", "--quiet"],
        d,
    ));
    assert_eq!(summary["cells"], 2);
}

#[test]
fn grid_with_failed_cells_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid_fixture(d);
    std::fs::remove_file(d.join("pt.jsonl")).unwrap();
    let out = hsnli(&["grid", "--config", "grid.toml", "--out", "results", "--quiet"], d);
    assert_eq!(error_line(&out)["error"], "grid_incomplete");
    let records = lines(&d.join("results/cells.jsonl"));
    assert_eq!(records.iter().filter(|r| r["status"] == "failed").count(), 4);
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = hsnli(&["classify", "--bogus"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = hsnli(&["frobnicate"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn missing_input_is_a_json_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let err = error_line(&hsnli(&["convert-nli", "--in", "nope.jsonl", "--out", "o.jsonl"], d));
    assert_eq!(err["error"], "missing_file");
    assert!(!d.join("o.jsonl").exists());
}

#[test]
fn failure_midway_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // The second post matches no mock row, so classification fails after the first.
    std::fs::write(d.join("mock.jsonl"), "{\"match\":\"good\",\"slot\":\"main\",\"scores\":[0.9,0.05,0.05]}\n")
        .unwrap();
    std::fs::write(
        d.join("posts.jsonl"),
        "{\"id\":\"a\",\"text\":\"good\",\"language\":\"en\"}\n{\"id\":\"b\",\"text\":\"other\",\"language\":\"en\"}\n",
    )
    .unwrap();
    let err = error_line(&hsnli(
        &["classify", "--backend", "mock.jsonl", "--in", "posts.jsonl", "--out", "t.jsonl"],
        d,
    ));
    assert_eq!(err["error"], "backend");
    assert!(!d.join("t.jsonl").exists());
    let leftovers: Vec<_> = std::fs::read_dir(d).unwrap().collect();
    assert_eq!(leftovers.len(), 2);
}
