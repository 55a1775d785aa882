use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::features::AnovaRow;
use super::metrics::{ConfusionMatrix, MetricsReport};
use super::stats::KdeCurve;
use super::{AnalysisError, Result};

/// Summary columns, in order.
pub const SUMMARY_METRICS: [&str; 5] = ["S1 Sens.", "Avg Sens.", "Avg Spec.", "Epoch-Wise Acc", "Patient-Wise Acc"];

/// Values below this are printed as `<1e-300`.
pub const P_FLOOR: f64 = 1e-300;

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.4}")
    }
}

fn summary_values(m: &MetricsReport) -> [f64; 5] {
    [
        m.class_sensitivity("S1").unwrap_or(f64::NAN),
        m.avg_sensitivity,
        m.avg_specificity,
        m.epoch_accuracy,
        m.patient_accuracy,
    ]
}

fn csv_bytes(rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| AnalysisError::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| AnalysisError::Format(e.to_string()))
}

fn check_nonempty(m: &MetricsReport) -> Result<()> {
    if m.confusion.total() == 0 {
        return Err(AnalysisError::EmptyMetrics);
    }
    Ok(())
}

/// `metric,class,value`: per-class sensitivity and specificity, then the
/// summary metrics with an empty class column.
pub fn metrics_csv(m: &MetricsReport) -> Result<Vec<u8>> {
    check_nonempty(m)?;
    let mut rows = vec![vec!["metric".into(), "class".into(), "value".into()]];
    for (metric, vals) in [("Sens.", &m.sensitivity), ("Spec.", &m.specificity)] {
        for (name, v) in m.class_names.iter().zip(vals.iter()) {
            rows.push(vec![metric.into(), name.clone(), v.map_or(String::new(), num)]);
        }
    }
    for (name, v) in SUMMARY_METRICS.iter().zip(summary_values(m)) {
        rows.push(vec![name.to_string(), String::new(), num(v)]);
    }
    rows.push(vec!["Patient-Wise Acc (recording mean)".into(), String::new(), num(m.recording_mean_accuracy)]);
    for &c in &m.excluded_classes {
        rows.push(vec!["excluded".into(), m.class_names[c].clone(), String::new()]);
    }
    csv_bytes(rows)
}

/// One row per system with the summary metrics as columns.
pub fn summary_csv(systems: &[(&str, &MetricsReport)]) -> Result<Vec<u8>> {
    if systems.is_empty() {
        return Err(AnalysisError::EmptyMetrics);
    }
    let mut header = vec!["system".to_string()];
    header.extend(SUMMARY_METRICS.iter().map(|s| s.to_string()));
    let mut rows = vec![header];
    for (name, m) in systems {
        check_nonempty(m)?;
        let mut row = vec![name.to_string()];
        row.extend(summary_values(m).into_iter().map(num));
        rows.push(row);
    }
    csv_bytes(rows)
}

/// Counts followed by row percentages, both with a `true\pred` corner.
pub fn confusion_csv(cm: &ConfusionMatrix, class_names: &[String]) -> Result<Vec<u8>> {
    if cm.total() == 0 {
        return Err(AnalysisError::EmptyMetrics);
    }
    let mut header = vec!["table".to_string(), "true\\pred".to_string()];
    header.extend(class_names.iter().cloned());
    let mut rows = vec![header];
    for (name, counts) in class_names.iter().zip(&cm.counts) {
        let mut r = vec!["count".into(), name.clone()];
        r.extend(counts.iter().map(|c| c.to_string()));
        rows.push(r);
    }
    for (name, pcts) in class_names.iter().zip(cm.row_percent()) {
        let mut r = vec!["row_percent".into(), name.clone()];
        r.extend(pcts.iter().map(|p| format!("{p:.2}")));
        rows.push(r);
    }
    csv_bytes(rows)
}

/// `recording_id,subject_id,subset,accuracy`.
pub fn per_recording_csv(m: &MetricsReport) -> Result<Vec<u8>> {
    if m.per_recording.is_empty() {
        return Err(AnalysisError::EmptyMetrics);
    }
    let mut rows = vec![vec!["recording_id".into(), "subject_id".into(), "subset".into(), "accuracy".into()]];
    for r in &m.per_recording {
        rows.push(vec![r.recording_id.clone(), r.subject_id.clone(), r.subset.as_str().into(), num(r.accuracy)]);
    }
    csv_bytes(rows)
}

pub fn format_p(p: f64) -> String {
    if p < P_FLOOR {
        "<1e-300".into()
    } else {
        format!("{p:.6e}")
    }
}

/// `feature,band,F,df_b,df_w,p`.
pub fn anova_csv(rows: &[AnovaRow]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(AnalysisError::EmptyMetrics);
    }
    let mut out = vec![vec!["feature".into(), "band".into(), "F".into(), "df_b".into(), "df_w".into(), "p".into()]];
    for r in rows {
        out.push(vec![
            r.feature.as_str().into(),
            r.band.as_str().into(),
            format!("{:.6}", r.result.f),
            r.result.df_between.to_string(),
            r.result.df_within.to_string(),
            format_p(r.result.p_value),
        ]);
    }
    csv_bytes(out)
}

/// Plain-text listing of the tests, least significant first, with the
/// pairs at or above `alpha` marked.
pub fn anova_summary(rows: &[AnovaRow], alpha: f64) -> String {
    let mut sorted: Vec<&AnovaRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.result.p_value.total_cmp(&a.result.p_value).then(a.result.f.total_cmp(&b.result.f)));
    let significant = rows.iter().filter(|r| r.result.p_value < alpha).count();
    let mut s = format!("{significant} of {} pairs with p < {alpha}\n", rows.len());
    for r in sorted {
        let flag = if r.result.p_value >= alpha { "  not significant" } else { "" };
        let zero = if r.result.zero_within { "  zero within-group variance" } else { "" };
        let _ = writeln!(
            s,
            "{:<16} {:<6} F={:<14.4} p={}{flag}{zero}",
            r.feature.as_str(),
            r.band.as_str(),
            r.result.f,
            format_p(r.result.p_value)
        );
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Bar chart of per-recording accuracy.
pub fn per_recording_svg(m: &MetricsReport) -> Result<String> {
    if m.per_recording.is_empty() {
        return Err(AnalysisError::EmptyMetrics);
    }
    let (left, top, plot_h, bar_w) = (50.0, 30.0, 200.0, 14.0);
    let n = m.per_recording.len() as f64;
    let width = left + n * bar_w + 20.0;
    let height = top + plot_h + 90.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1}" height="{height:.1}">"#
    );
    let _ = writeln!(s, r#"<text x="{left:.1}" y="18" font-size="12">Per-recording accuracy (%)</text>"#);
    for tick in [0, 25, 50, 75, 100] {
        let y = top + plot_h * (1.0 - tick as f64 / 100.0);
        let _ = writeln!(
            s,
            "<line x1=\"{left:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>",
            width - 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{tick}</text>"#, left - 4.0, y + 3.0);
    }
    for (i, r) in m.per_recording.iter().enumerate() {
        let x = left + i as f64 * bar_w + 1.0;
        let h = plot_h * r.accuracy.clamp(0.0, 100.0) / 100.0;
        let colour = PALETTE[r.subset as usize % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{colour}"><title>{} {:.2}</title></rect>"#,
            top + plot_h - h,
            bar_w - 2.0,
            xml_escape(&r.recording_id),
            r.accuracy
        );
        let lx = x + bar_w / 2.0;
        let ly = top + plot_h + 6.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-size="8" transform="rotate(90 {lx:.1} {ly:.1})">{}</text>"#,
            xml_escape(&r.recording_id)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Overlaid density curves sharing one axis.
pub fn kde_svg(title: &str, curves: &[(&str, &KdeCurve)]) -> Result<String> {
    if curves.is_empty() || curves.iter().any(|(_, c)| c.grid.len() < 2) {
        return Err(AnalysisError::EmptyMetrics);
    }
    let (left, top, plot_w, plot_h) = (50.0, 30.0, 400.0, 220.0);
    let lo = curves.iter().map(|(_, c)| c.grid[0]).fold(f64::INFINITY, f64::min);
    let hi = curves.iter().map(|(_, c)| *c.grid.last().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let peak = curves.iter().flat_map(|(_, c)| c.density.iter().copied()).fold(0.0, f64::max);
    let sx = |x: f64| left + plot_w * if hi > lo { (x - lo) / (hi - lo) } else { 0.5 };
    let sy = |y: f64| top + plot_h * (1.0 - if peak > 0.0 { y / peak } else { 0.0 });
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.1}" height="{:.1}">"#,
        left + plot_w + 120.0,
        top + plot_h + 40.0
    );
    let _ = writeln!(s, r#"<text x="{left:.1}" y="18" font-size="12">{}</text>"#, xml_escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left:.1}" y="{top:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
    );
    for (x, anchor) in [(lo, "start"), (hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="{anchor}">{x:.3}</text>"#,
            sx(x),
            top + plot_h + 14.0
        );
    }
    for (i, (label, c)) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c.grid.iter().zip(&c.density).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = top + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="10" fill="{colour}">{}</text>"#,
            left + plot_w + 10.0,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Everything one report may contain. Absent parts are skipped.
#[derive(Default)]
pub struct ReportInputs<'a> {
    pub metrics: Option<&'a MetricsReport>,
    /// Extra systems for the combined summary, e.g. the baseline.
    pub compare: Vec<(&'a str, &'a MetricsReport)>,
    pub system_name: Option<&'a str>,
    pub anova: &'a [AnovaRow],
    pub kde: Vec<(String, Vec<(&'a str, &'a KdeCurve)>)>,
}

fn write(dir: &Path, name: &str, bytes: &[u8], out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| AnalysisError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    out.push(path);
    Ok(())
}

/// Writes the report files into `dir` and returns their paths. Every
/// table is rendered before anything is written, so a failure leaves no
/// partial report.
pub fn emit_report(dir: &Path, inputs: &ReportInputs) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    if let Some(m) = inputs.metrics {
        let name = inputs.system_name.unwrap_or("network");
        files.push(("metrics.csv".into(), metrics_csv(m)?));
        files.push(("confusion.csv".into(), confusion_csv(&m.confusion, &m.class_names)?));
        files.push(("per_recording.csv".into(), per_recording_csv(m)?));
        files.push(("per_recording.svg".into(), per_recording_svg(m)?.into_bytes()));
        let mut systems = vec![(name, m)];
        systems.extend(inputs.compare.iter().copied());
        files.push(("summary.csv".into(), summary_csv(&systems)?));
    }
    if !inputs.anova.is_empty() {
        files.push(("anova.csv".into(), anova_csv(inputs.anova)?));
        files.push(("anova_summary.txt".into(), anova_summary(inputs.anova, 1e-3).into_bytes()));
    }
    for (name, curves) in &inputs.kde {
        files.push((format!("kde_{name}.svg"), kde_svg(name, curves)?.into_bytes()));
    }
    if files.is_empty() {
        return Err(AnalysisError::EmptyMetrics);
    }
    fs::create_dir_all(dir).map_err(|e| AnalysisError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut out = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        write(dir, &name, &bytes, &mut out)?;
    }
    Ok(out)
}
