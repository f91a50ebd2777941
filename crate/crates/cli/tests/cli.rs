use std::path::Path;
use std::process::{Command, Output};

use osse_core::corpus::{gen_synthetic_corpus, FrequencyLaw, SyntheticSpec};

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osse-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("OSSE_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(report: &str, key: &str) -> f64 {
    let line = report.lines().find(|l| l.split_whitespace().next() == Some(key)).unwrap_or_else(|| panic!("{key} missing"));
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn dp_report_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["dp-report", "--p", "0.5", "--q", "0.25"]);
    assert!(o.status.success());
    let s = stdout(&o);
    // 1 + 0.5 / (0.25 * 0.5) = 5
    assert!((value(&s, "osse_epsilon_documents") - 5f64.ln()).abs() < 1e-12);
    // TPR = 0.625, FPR = 0.25: max(2.5, 2) = 2.5
    assert!((value(&s, "clrz_epsilon_documents") - 2.5f64.ln()).abs() < 1e-12);
    assert!(s.contains("clrz_epsilon_keywords") && s.contains("inf"));

    let csv = stdout(&lab(dir.path(), &["dp-report", "--tpr", "0.9999", "--fpr", "0.01", "--n", "2000", "--freqmax", "100", "--format", "csv"]));
    assert!(csv.starts_with("quantity,value\n"));
    assert!(csv.contains("\noverhead,"));

    assert!(!lab(dir.path(), &["dp-report"]).status.success());
}

#[test]
fn build_then_query_exact_at_unit_rates() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--n", "120", "--universe", "15", "--freqmax", "30", "--law", "uniform", "--corpus-seed", "9"];
    let mut build = vec!["build-index", "--out", "idx.osse"];
    build.extend(args);
    assert!(lab(dir.path(), &build).status.success());
    let o = lab(dir.path(), &["query", "--index", "idx.osse", "--keyword", "4", "--keyword", "11", "--trace", "trace.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let ds = gen_synthetic_corpus(&SyntheticSpec { n: 120, universe: 15, law: FrequencyLaw::Uniform, freqmax: 30, sizemax: None, seed: 9 }).unwrap();
    let post = ds.postings();
    let out = stdout(&o);
    for (line, w) in out.lines().take(2).zip([4usize, 11]) {
        let ids: Vec<u32> = line.split("returned=").nth(1).unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(ids, post[w - 1]);
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("q_idx,outcome_kind,index,count\n"));
    assert_eq!(trace.lines().filter(|l| l.starts_with("0,doc,")).count(), 30);

    let bad = lab(dir.path(), &["query", "--index", "idx.osse", "--keyword", "16"]);
    assert!(!bad.status.success());
}

#[test]
fn query_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    assert!(lab(dir.path(), &["build-index", "--n", "80", "--universe", "10", "--freqmax", "20"]).status.success());
    let q = |seed: &str| stdout(&lab(dir.path(), &["query", "--keyword", "2", "--tpr", "0.9", "--fpr", "0.1", "--seed", seed]));
    assert_eq!(q("5"), q("5"));
    assert_ne!(q("5"), q("6"));
}

#[test]
fn output_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("elsewhere");
    let o = Command::new(env!("CARGO_BIN_EXE_osse-lab"))
        .args(["clrz-build", "--n", "50", "--universe", "8", "--freqmax", "10", "--tpr", "0.9", "--fpr", "0.1"])
        .current_dir(dir.path())
        .env("OSSE_LAB_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("clrz.json").exists());
    assert!(!dir.path().join("clrz.json").exists());
}

#[test]
fn attack_results_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        dir.path(),
        &["attack", "--attack", "count", "--defense", "none", "--seed", "3", "--runs", "2", "--n", "300", "--universe", "30", "--freqmax", "150", "--out", "r.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "attack,defense,tpr,fpr,n_q,universe,seed,accuracy,failed,runtime_ms");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..7], ["count", "none", "1", "0", "200", "30", "3"]);
    assert_eq!(rows[1][6], "4");
    for r in &rows {
        let acc: f64 = r[7].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
    assert!(!lab(dir.path(), &["attack", "--attack", "bogus", "--defense", "none"]).status.success());
}

const CONFIG: &str = r#"
name = "smoke"
seeds = [1, 2]
[corpus]
source = "synthetic"
n = 300
universe = 20
law = "uniform"
freqmax = 30
[scheme]
defense = "osse"
tpr = 0.9
fpr = 0.05
countermax = "tight"
[queries]
dist = "uniform"
count = 60
[costs]
token_size = 1
document_size = 100
"#;

#[test]
fn run_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = format!(
        "{CONFIG}\n[[checks]]\nmetric = \"fpr_empirical\"\nop = \"eq\"\nvalue = 0.05\ntolerance = 0.02\n\n[[checks]]\nmetric = \"evaluations_within_bound\"\nop = \"eq\"\nvalue = 1\n"
    );
    std::fs::write(dir.path().join("pass.toml"), pass).unwrap();
    let o = lab(dir.path(), &["run", "--config", "pass.toml", "--check"]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).matches("PASS ").count(), 2);
    assert!(dir.path().join("results/smoke.csv").exists());
    assert!(dir.path().join("results/smoke_costs.csv").exists());

    let fail = format!("{CONFIG}\n[[checks]]\nmetric = \"fpr_empirical\"\nop = \"lt\"\nvalue = 0.0\n");
    std::fs::write(dir.path().join("fail.toml"), fail).unwrap();
    let o = lab(dir.path(), &["run", "--config", "fail.toml", "--check"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL "));
    // Without --check a failed assertion is reported but not fatal.
    assert!(lab(dir.path(), &["run", "--config", "fail.toml"]).status.success());

    std::fs::write(dir.path().join("bad.toml"), "name = 1").unwrap();
    assert_eq!(lab(dir.path(), &["run", "--config", "bad.toml"]).status.code(), Some(2));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            osse_core::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn quick_config_passes_its_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_osse-lab"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--check"])
        .env("OSSE_LAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(dir.path().join("quick.csv").exists());
}
