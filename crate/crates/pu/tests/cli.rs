use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pu::ingest::DatasetRecipe;
use pu::report::summarize;
use pu_core::numkit::Matrix;
use pu_core::synth::{generate, SynthSpec};
use pu_core::ModelParams;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pu-enhanced"))
}

fn run(config: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).args(extra).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    fs::write(&path, body).unwrap();
    path
}

fn read_table(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    r.records()
        .map(|rec| {
            header
                .iter()
                .cloned()
                .zip(rec.unwrap().iter().map(str::to_owned))
                .collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

const SYNTHETIC: &str = r#"
seed = 4
c_grid = [0.6]
classifiers = ["naive", "enhanced"]
record_timing = true

[split]
replications = 20

[data]
kind = "synthetic"
n_grid = [5000]
test_n = 5000
"#;

#[test]
fn synthetic_run_writes_every_row_and_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SYNTHETIC);
    let out = dir.path().join("out");
    let result = run(&config, &["--out", out.to_str().unwrap(), "--quiet"]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(result.stderr.is_empty());

    let raw = read_table(&out.join("raw.csv"));
    assert_eq!(raw.len(), 40);
    assert!(raw
        .iter()
        .all(|r| r["status"] == "ok" && r["n"] == "5000" && !r["angle_degrees"].is_empty()));
    let aggregate = read_table(&out.join("aggregate.csv"));
    assert_eq!(aggregate.len(), 2);
    let timings = read_table(&out.join("timings.csv"));
    assert_eq!(timings.len(), 2);

    for cell in &aggregate {
        let rows: Vec<&HashMap<String, String>> = raw
            .iter()
            .filter(|r| r["classifier"] == cell["classifier"])
            .collect();
        for metric in ["f1", "balanced_accuracy", "angle_degrees", "eta_hat"] {
            let values: Vec<f64> = rows.iter().map(|r| num(r, metric)).collect();
            let s = summarize(&values).unwrap();
            assert!((num(cell, &format!("{metric}_mean")) - s.mean).abs() <= 1e-12);
            assert!((num(cell, &format!("{metric}_se")) - s.se).abs() <= 1e-12);
        }
    }
    for t in &timings {
        let times: Vec<f64> = raw
            .iter()
            .filter(|r| r["classifier"] == t["classifier"])
            .map(|r| num(r, "train_seconds"))
            .collect();
        let expected = times.iter().sum::<f64>() / times.len() as f64;
        assert!((num(t, "mean_train_seconds") - expected).abs() <= 1e-12);
        assert_eq!(t["replications"], "20");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let body = SYNTHETIC
        .replace("replications = 20", "replications = 2")
        .replace("record_timing = true", "");
    let config = write_config(dir.path(), &body);
    let read = |seed: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["--out", out.to_str().unwrap(), "--quiet"];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        assert!(run(&config, &args).status.success());
        fs::read(out.join("raw.csv")).unwrap()
    };
    assert_eq!(read(None, "a"), read(Some("4"), "b"));
    assert_ne!(read(None, "a"), read(Some("5"), "c"));
}

#[test]
fn all_failed_cells_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = SYNTHETIC
        .replace("c_grid = [0.6]", "c_grid = [0.0001]")
        .replace("n_grid = [5000]", "n_grid = [50]")
        .replace("replications = 20", "replications = 3");
    let config = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let result = run(&config, &["--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(result.status.code(), Some(1));
    let raw = read_table(&out.join("raw.csv"));
    assert_eq!(raw.len(), 6);
    assert!(raw
        .iter()
        .all(|r| r["status"].starts_with("failed") && r["f1"].is_empty()));
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SYNTHETIC.replace("[0.6]", "[0.6, 2.0]"));
    let result = run(&config, &["--quiet"]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("line 3") && stderr.contains("outside (0, 1]"),
        "{stderr}"
    );

    let config = write_config(dir.path(), &SYNTHETIC.replace("\"naive\"", "\"tice\""));
    let stderr = String::from_utf8_lossy(&run(&config, &[]).stderr).into_owned();
    assert!(
        stderr.contains("line 4") && stderr.contains("tice"),
        "{stderr}"
    );

    assert_eq!(
        run(&dir.path().join("missing.toml"), &[]).status.code(),
        Some(2)
    );
}

/// Four features, a sharp posterior and about 44% positives, written
/// headerless like the UCI file.
fn write_stand_in(dir: &Path) -> PathBuf {
    let spec = SynthSpec {
        mean: vec![0.0; 4],
        covariance: Matrix::identity(4),
        beta: ModelParams::new(-0.3, vec![3.0, -2.5, 2.0, -1.5]),
        c: 1.0,
        n: 1372,
        seed: 17,
    };
    let d = generate(&spec).unwrap();
    let mut text = String::new();
    for i in 0..d.len() {
        let row: Vec<String> = d.features().row(i).iter().map(|v| format!("{v}")).collect();
        text.push_str(&format!("{},{}\n", row.join(","), d.y_labels().unwrap()[i]));
    }
    let path = dir.join("stand_in.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn recipe_pipeline_on_a_banknote_shaped_stand_in() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_stand_in(dir.path());
    let recipe_text = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/recipes/banknote.toml"),
    )
    .unwrap()
    .replace(
        "../banknote/data_banknote_authentication.txt",
        data.to_str().unwrap(),
    );
    fs::write(dir.path().join("recipe.toml"), recipe_text).unwrap();
    let d = DatasetRecipe::from_toml(dir.path().join("recipe.toml"))
        .unwrap()
        .load()
        .unwrap();
    assert_eq!((d.len(), d.num_features()), (1372, 4));
    let positive = d.y_labels().unwrap().iter().filter(|&&v| v == 1).count() as f64 / 1372.0;
    assert!((0.35..0.55).contains(&positive), "{positive}");

    let config = write_config(
        dir.path(),
        r#"
seed = 2
c_grid = [0.3]
classifiers = ["oracle", "naive", "enhanced"]
[split]
replications = 50
[data]
kind = "recipe"
recipe = "recipe.toml"
"#,
    );
    let out = dir.path().join("out");
    assert!(run(&config, &["--out", out.to_str().unwrap(), "--quiet"])
        .status
        .success());
    let raw = read_table(&out.join("raw.csv"));
    assert_eq!(raw.len(), 150);
    assert!(raw
        .iter()
        .all(|r| r["n"].is_empty() && r["angle_degrees"].is_empty() && r["eta_hat"].is_empty()));
    assert!(raw.iter().all(|r| r["train_seconds"].is_empty()));

    let aggregate = read_table(&out.join("aggregate.csv"));
    let f1 = |name: &str| {
        num(
            aggregate.iter().find(|r| r["classifier"] == name).unwrap(),
            "f1_mean",
        )
    };
    let se = |name: &str| {
        num(
            aggregate.iter().find(|r| r["classifier"] == name).unwrap(),
            "f1_se",
        )
    };
    assert!(
        f1("enhanced") - f1("naive") >= 0.15,
        "{} vs {}",
        f1("enhanced"),
        f1("naive")
    );
    assert!((f1("oracle") - f1("enhanced")).abs() <= 0.15);
    assert!(f1("oracle") + 2.0 * se("oracle") >= f1("enhanced") - 2.0 * se("enhanced"));
    assert!(["oracle", "naive", "enhanced"]
        .iter()
        .all(|k| se(k) <= 0.03));
}

#[test]
fn banknote_standard_errors_at_fifty_splits() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let recipe = DatasetRecipe::from_toml(root.join("data/recipes/banknote.toml")).unwrap();
    let source = std::env::var_os("BANKNOTE_CSV").map_or(recipe.source.clone(), PathBuf::from);
    assert!(
        source.exists(),
        "banknote data not found at {} (set BANKNOTE_CSV)",
        source.display()
    );
    let d = recipe.load_from(&source).unwrap();
    assert_eq!((d.len(), d.num_features()), (1372, 4));
    let positive =
        d.y_labels().unwrap().iter().filter(|&&v| v == 1).count() as f64 / d.len() as f64;
    assert!((positive - 0.44).abs() <= 0.005, "{positive}");

    let cfg = pu::ExperimentConfig::from_toml_str(
        r#"
seed = 3
c_grid = [0.3]
classifiers = ["oracle", "naive", "enhanced"]
[split]
replications = 50
[data]
kind = "recipe"
recipe = "unused"
"#,
    )
    .unwrap();
    let rows = pu::runner::execute_on(&cfg, Some(&d), None).unwrap();
    for cell in pu::report::aggregate(&rows) {
        assert!(
            cell.f1.unwrap().se <= 0.03,
            "{}: se {}",
            cell.classifier,
            cell.f1.unwrap().se
        );
    }
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in ["synthetic.toml", "banknote.toml"] {
        let cfg = pu::ExperimentConfig::load(root.join("configs").join(name)).unwrap();
        assert_eq!(
            pu::ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
    }
    DatasetRecipe::from_toml(root.join("data/recipes/banknote.toml")).unwrap();
}
