use osse_core::harness::{
    emit, evaluate_checks, run_experiment, write_rows_csv, EmitFormat, ExperimentConfig, RowKind,
    Sampler,
};
use osse_core::scheme::Defense;

const BASE: &str = r#"
name = "small"
seeds = [3, 4, 5]
[corpus]
source = "synthetic"
n = 300
universe = 20
law = "zipf"
freqmax = 120
[scheme]
defense = "osse"
tpr = 0.95
fpr = 0.05
countermax = "tight"
[queries]
dist = "zipf"
count = 60
[attack]
kinds = ["count", "ikk-star", "graphm"]
[sweep]
defense = ["none", "clrz", "osse"]
fpr = [0.02, 0.05]
"#;

#[test]
fn same_config_same_rows() {
    let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| x.same_result(y)));
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    write_rows_csv(&a, false, &mut ca).unwrap();
    write_rows_csv(&b, false, &mut cb).unwrap();
    assert_eq!(ca, cb);
    assert!(a.iter().all(|r| r.digest == cfg.digest()));
}

#[test]
fn rows_cover_every_setting_and_aggregate() {
    let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
    let rows = run_experiment(&cfg).unwrap();
    // none appears once at (1, 0); clrz and osse at both FPRs
    let settings = cfg.settings().unwrap();
    assert_eq!(settings.len(), 5);
    for s in &settings {
        let runs: Vec<_> = rows
            .iter()
            .filter(|r| {
                r.defense == s.defense
                    && r.fpr == s.fpr
                    && r.kind == RowKind::Run
                    && r.metric == "accuracy"
            })
            .collect();
        assert_eq!(runs.len(), 3 * 3, "{s:?}");
        let mean = rows
            .iter()
            .find(|r| {
                r.defense == s.defense
                    && r.fpr == s.fpr
                    && r.kind == RowKind::Mean
                    && r.metric == "accuracy"
                    && r.attack == runs[0].attack
            })
            .unwrap();
        let vals: Vec<f64> = runs
            .iter()
            .filter(|r| r.attack == runs[0].attack)
            .map(|r| r.value)
            .collect();
        assert!((mean.value - vals.iter().sum::<f64>() / vals.len() as f64).abs() < 1e-12);
    }
    let none_fpr: Vec<f64> = rows
        .iter()
        .filter(|r| r.defense == Defense::None && r.metric == "fpr_empirical")
        .map(|r| r.value)
        .collect();
    assert!(none_fpr.iter().all(|&v| v == 0.0));
}

#[test]
fn digest_ignores_field_order_but_not_values() {
    let a = ExperimentConfig::from_toml_str(BASE).unwrap();
    let reordered = BASE
        .replace("tpr = 0.95\nfpr = 0.05\n", "fpr = 0.05\ntpr = 0.95\n")
        .replace("n = 300\nuniverse = 20\n", "universe = 20\nn = 300\n");
    assert_ne!(reordered, BASE);
    assert_eq!(
        ExperimentConfig::from_toml_str(&reordered)
            .unwrap()
            .digest(),
        a.digest()
    );
    let changed =
        ExperimentConfig::from_toml_str(&BASE.replace("count = 60", "count = 61")).unwrap();
    assert_ne!(changed.digest(), a.digest());
    let back = ExperimentConfig::from_toml_str(&a.to_toml_string()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn invalid_configs_rejected() {
    for bad in [
        BASE.replace("seeds = [3, 4, 5]", "seeds = []"),
        BASE.replace(
            "kinds = [\"count\", \"ikk-star\", \"graphm\"]",
            "kinds = [\"freq\"]",
        ),
        BASE.replace("fpr = [0.02, 0.05]", "fpr = [0.99]"),
        BASE.replace("law = \"zipf\"", "law = \"zipf\"\nbogus = 1"),
        BASE.replace("freqmax = 120", "freqmax = 301"),
    ] {
        assert!(ExperimentConfig::from_toml_str(&bad).is_err(), "{bad}");
    }
}

#[test]
fn direct_sampler_matches_scheme_rates() {
    let base = BASE
        .replace(
            "[attack]\nkinds = [\"count\", \"ikk-star\", \"graphm\"]\n",
            "",
        )
        .replace("count = 60", "count = 400");
    let mut cfg = ExperimentConfig::from_toml_str(&base).unwrap();
    let rate = |cfg: &ExperimentConfig, metric: &str| {
        let rows = run_experiment(cfg).unwrap();
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| {
                r.kind == RowKind::Run
                    && r.defense == Defense::Osse
                    && r.fpr == 0.05
                    && r.metric == metric
            })
            .map(|r| r.value)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let scheme = (rate(&cfg, "tpr_empirical"), rate(&cfg, "fpr_empirical"));
    cfg.scheme.sampler = Sampler::Direct;
    let direct = (rate(&cfg, "tpr_empirical"), rate(&cfg, "fpr_empirical"));
    assert!(
        (scheme.0 - direct.0).abs() < 0.01 && (scheme.0 - 0.95).abs() < 0.01,
        "{scheme:?} {direct:?}"
    );
    assert!(
        (scheme.1 - direct.1).abs() < 0.005 && (scheme.1 - 0.05).abs() < 0.005,
        "{scheme:?} {direct:?}"
    );
}

#[test]
fn emits_csv_and_plots_with_checks() {
    let mut text = BASE.to_string();
    text.push_str("\n[[checks]]\nmetric = \"accuracy\"\nattack = \"count\"\ndefense = \"none\"\nop = \"eq\"\nvalue = 1.0\ntolerance = 0.0\n");
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let rows = run_experiment(&cfg).unwrap();
    let res = evaluate_checks(&cfg.checks, &rows);
    assert!(res[0].passed, "{res:?}");
    let dir = tempfile::tempdir().unwrap();
    let csv = emit(&rows, EmitFormat::Csv, dir.path(), &cfg.name).unwrap();
    let svg = emit(&rows, EmitFormat::SvgPlot, dir.path(), &cfg.name).unwrap();
    assert_eq!(csv.len(), 1);
    assert!(svg
        .iter()
        .any(|p| p.to_string_lossy().ends_with("small_count_accuracy.svg")));
    let lines = std::fs::read_to_string(&csv[0]).unwrap().lines().count();
    assert_eq!(lines, rows.len() + 1);
}
