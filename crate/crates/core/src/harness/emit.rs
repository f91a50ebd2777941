//! CSV and SVG output of result rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::run::{ResultRow, RowKind};
use super::HarnessError;
use crate::attacks::AttackKind;
use crate::scheme::Defense;

/// Environment variable that overrides every output directory.
pub const OUTPUT_DIR_ENV: &str = "OSSE_LAB_OUT";

/// `$OSSE_LAB_OUT` when set, else `configured`, else `results`.
pub fn output_dir(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("results")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    /// Line plot of a metric's mean against FPR, one series per defense.
    SvgPlot,
}

pub const RESULT_HEADER: [&str; 10] = [
    "digest",
    "attack",
    "defense",
    "tpr",
    "fpr",
    "seed",
    "kind",
    "metric",
    "value",
    "runtime_ms",
];

/// Rows in input order. With `timing = false` the runtime column is zeroed so
/// output depends only on config and seeds.
pub fn write_rows_csv<W: Write>(
    rows: &[ResultRow],
    timing: bool,
    w: W,
) -> Result<(), HarnessError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(RESULT_HEADER)?;
    for r in rows {
        wr.write_record([
            r.digest.clone(),
            r.attack.map(|a| a.to_string()).unwrap_or_default(),
            r.defense.to_string(),
            r.tpr.to_string(),
            r.fpr.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.kind.as_str().to_string(),
            r.metric.clone(),
            r.value.to_string(),
            if timing {
                format!("{:.3}", r.runtime_ms)
            } else {
                "0".into()
            },
        ])?;
    }
    wr.flush()?;
    Ok(())
}

struct Point {
    fpr: f64,
    mean: f64,
    lo: f64,
    hi: f64,
}

const COLORS: [&str; 3] = ["#1b9e77", "#d95f02", "#7570b3"];

/// SVG of `metric` (for `attack`) against FPR.
pub fn render_svg(rows: &[ResultRow], attack: Option<AttackKind>, metric: &str) -> String {
    let mut series: BTreeMap<Defense, BTreeMap<u64, Point>> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.attack == attack && r.metric == metric && r.kind != RowKind::Run)
    {
        let p = series
            .entry(r.defense)
            .or_default()
            .entry(r.fpr.to_bits())
            .or_insert(Point {
                fpr: r.fpr,
                mean: 0.0,
                lo: 0.0,
                hi: 0.0,
            });
        match r.kind {
            RowKind::Mean => p.mean = r.value,
            RowKind::Ci95Lo => p.lo = r.value,
            RowKind::Ci95Hi => p.hi = r.value,
            RowKind::Run => {}
        }
    }
    let fprs: Vec<f64> = series
        .values()
        .flat_map(|s| s.values().map(|p| p.fpr))
        .collect();
    let xmax = fprs.iter().copied().fold(0.0f64, f64::max).max(1e-9);
    let ymax = series
        .values()
        .flat_map(|s| s.values().map(|p| p.hi.max(p.mean)))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let ymax = if ymax <= 1.0 { 1.0 } else { ymax * 1.05 };
    let (w, h, l, r, t, b) = (640.0, 400.0, 60.0, 130.0, 30.0, 50.0);
    let x = |v: f64| l + v / xmax * (w - l - r);
    let y = |v: f64| h - b - v / ymax * (h - t - b);
    let title = match attack {
        Some(a) => format!("{a}: {metric}"),
        None => metric.to_string(),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{title}</text>"#,
        w / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{l}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - b,
        w - r,
        h - b
    );
    let _ = writeln!(
        s,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{}" stroke="black"/>"#,
        h - b
    );
    for i in 0..=4 {
        let (fx, fy) = (xmax * i as f64 / 4.0, ymax * i as f64 / 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{fx:.3}</text>"#,
            x(fx),
            h - b + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{fy:.2}</text>"#,
            l - 6.0,
            y(fy) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">FPR</text>"#,
        (l + w - r) / 2.0,
        h - 12.0
    );
    for (k, (defense, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts
            .values()
            .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.mean)))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                path.join(" ")
            );
        }
        for p in pts.values() {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                x(p.fpr),
                y(p.lo.max(0.0)),
                y(p.hi)
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x(p.fpr),
                y(p.mean)
            );
        }
        let ly = t + 20.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            w - r + 10.0,
            w - r + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{defense}</text>"#,
            w - r + 36.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `rows` under `dir`: `<stem>.csv`, or one `<stem>_<attack>_<metric>.svg`
/// per plotted attack and metric. Returns the written paths.
pub fn emit(
    rows: &[ResultRow],
    format: EmitFormat,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    match format {
        EmitFormat::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            write_rows_csv(rows, true, std::fs::File::create(&path)?)?;
            Ok(vec![path])
        }
        EmitFormat::SvgPlot => {
            let mut keys: Vec<(Option<AttackKind>, String)> = Vec::new();
            for r in rows {
                let k = (r.attack, r.metric.clone());
                let plotted = r.attack.is_some() && r.metric == "accuracy"
                    || r.attack.is_none() && r.metric.ends_with("_empirical");
                if plotted && !keys.contains(&k) {
                    keys.push(k);
                }
            }
            let mut out = Vec::new();
            for (attack, metric) in keys {
                let name = attack
                    .map(|a| a.to_string())
                    .unwrap_or_else(|| "utility".into());
                let path = dir.join(format!("{stem}_{name}_{metric}.svg"));
                std::fs::write(&path, render_svg(rows, attack, &metric))?;
                out.push(path);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(defense: Defense, fpr: f64, kind: RowKind, value: f64) -> ResultRow {
        ResultRow {
            digest: "d".into(),
            attack: Some(AttackKind::Count),
            defense,
            tpr: 0.9999,
            fpr,
            seed: None,
            kind,
            metric: "accuracy".into(),
            value,
            runtime_ms: 1.5,
        }
    }

    #[test]
    fn empty_rows_header_only() {
        let mut buf = Vec::new();
        write_rows_csv(&[], true, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", RESULT_HEADER.join(","))
        );
    }

    #[test]
    fn two_defenses_two_series() {
        let mut rows = Vec::new();
        for d in [Defense::Clrz, Defense::Osse] {
            for f in [0.01, 0.02] {
                rows.push(row(d, f, RowKind::Mean, 0.5));
                rows.push(row(d, f, RowKind::Ci95Lo, 0.4));
                rows.push(row(d, f, RowKind::Ci95Hi, 0.6));
            }
        }
        let svg = render_svg(&rows, Some(AttackKind::Count), "accuracy");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">clrz<") && svg.contains(">osse<"));
    }

    #[test]
    fn emission_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(Defense::Osse, 0.01, RowKind::Mean, 0.3)];
        let a = emit(&rows, EmitFormat::Csv, dir.path(), "x").unwrap();
        let first = std::fs::read(&a[0]).unwrap();
        emit(&rows, EmitFormat::Csv, dir.path(), "x").unwrap();
        assert_eq!(std::fs::read(&a[0]).unwrap(), first);
        let svgs = emit(&rows, EmitFormat::SvgPlot, dir.path(), "x").unwrap();
        assert_eq!(svgs.len(), 1);
    }
}
