//! Stage reports: per-pair intermediate records, statistics rows, and their
//! JSON, CSV and SVG renderings. Every row is rebuilt from the persisted
//! pair records, so a report can be regenerated from disk alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use plagguard_core::matcher::ComparisonResult;
use plagguard_core::stats::{
    cliffs_delta, delta_report, summarize, wilcoxon_one_sided, CliffsDeltaResult, DeltaReport, DistributionSummary,
    Interpretation, WilcoxonMethod, WilcoxonOptions, WilcoxonResult,
};
use serde::{Deserialize, Serialize};

use crate::config::{Category, StageKind, Variant};
use crate::{write_file, HarnessError};

pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "summary.csv";
pub const SVG_FILE: &str = "boxplot.svg";

/// One scored pair, as persisted in `pairs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub variant: Variant,
    pub pairs: Category,
    pub id_a: String,
    pub id_b: String,
    pub similarity: f64,
    pub coverage_a: usize,
    pub coverage_b: usize,
    pub len_a: usize,
    pub len_b: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PairRecord {
    pub fn from_result(variant: Variant, pairs: Category, r: &ComparisonResult) -> Self {
        PairRecord {
            variant,
            pairs,
            id_a: r.id_a.clone(),
            id_b: r.id_b.clone(),
            similarity: r.similarity,
            coverage_a: r.coverage_a,
            coverage_b: r.coverage_b,
            len_a: r.len_seq_a,
            len_b: r.len_seq_b,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub variant: Variant,
    pub pairs: Category,
    pub summary: DistributionSummary,
    /// This category against the OP pairs of the same variant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<DeltaReport>,
    /// This variant against Base on the same pairs (one-sided, greater).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilcoxon: Option<WilcoxonResult>,
    /// This variant against Base on the same category.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cliffs: Option<CliffsDeltaResult>,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: StageKind,
    pub quartile_method: String,
    pub ci_method: String,
    pub whiskers: String,
    pub continuity_correction: bool,
    pub rows: Vec<StatsRow>,
}

impl StageReport {
    pub fn row(&self, variant: Variant, pairs: Category) -> Option<&StatsRow> {
        self.rows.iter().find(|r| r.variant == variant && r.pairs == pairs)
    }
}

type Key = (String, String);

fn grouped(records: &[PairRecord]) -> BTreeMap<(Variant, Category), BTreeMap<Key, f64>> {
    let mut out: BTreeMap<(Variant, Category), BTreeMap<Key, f64>> = BTreeMap::new();
    for r in records {
        out.entry((r.variant, r.pairs))
            .or_default()
            .insert((r.id_a.clone(), r.id_b.clone()), r.similarity);
    }
    out
}

/// Statistics for every (variant, category) group present in `records`.
pub fn build_report(stage: StageKind, records: &[PairRecord]) -> Result<StageReport, HarnessError> {
    let groups = grouped(records);
    let opts = WilcoxonOptions::default();
    let values = |m: &BTreeMap<Key, f64>| m.values().copied().collect::<Vec<f64>>();
    let mut rows = Vec::new();
    for (&(variant, pairs), sims) in &groups {
        let v = values(sims);
        let summary = summarize(&v).map_err(|e| HarnessError::Data(e.to_string()))?;
        let deltas = match (pairs, groups.get(&(variant, Category::Op))) {
            (Category::Op, _) | (_, None) => None,
            (_, Some(op)) => Some(delta_report(
                &summary,
                &summarize(&values(op)).map_err(|e| HarnessError::Data(e.to_string()))?,
            )),
        };
        let base = groups.get(&(Variant::Base, pairs)).filter(|_| variant != Variant::Base);
        let (wilcoxon, cliffs) = match base {
            None => (None, None),
            Some(base) => {
                let (x, y): (Vec<f64>, Vec<f64>) =
                    sims.iter().filter_map(|(k, s)| base.get(k).map(|b| (*s, *b))).unzip();
                let w = if x.is_empty() {
                    None
                } else {
                    Some(wilcoxon_one_sided(&x, &y, opts).map_err(|e| HarnessError::Data(e.to_string()))?)
                };
                let c = cliffs_delta(&v, &values(base)).map_err(|e| HarnessError::Data(e.to_string()))?;
                (w, Some(c))
            }
        };
        let alpha = pairs.alpha();
        rows.push(StatsRow {
            variant,
            pairs,
            summary,
            deltas,
            significant: wilcoxon.map(|w| w.method != WilcoxonMethod::AllZero && w.p < alpha),
            wilcoxon,
            cliffs,
            alpha,
        });
    }
    Ok(StageReport {
        stage,
        quartile_method: "type-7".into(),
        ci_method: "asymptotic variance (Cliff)".into(),
        whiskers: "1.5 IQR".into(),
        continuity_correction: opts.continuity_correction,
        rows,
    })
}

/// Flat table row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub variant: String,
    pub pairs: String,
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub delta_mean: Option<f64>,
    pub delta_median: Option<f64>,
    pub delta_iqr: Option<f64>,
    pub p: Option<f64>,
    pub w: Option<f64>,
    pub test_method: Option<String>,
    pub cliffs_delta: Option<f64>,
    pub cliffs_interpretation: Option<String>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl CsvRow {
    fn from_row(r: &StatsRow) -> Self {
        let s = r.summary;
        CsvRow {
            variant: r.variant.label().into(),
            pairs: r.pairs.label().into(),
            n: s.n,
            median: s.median,
            mean: s.mean,
            q1: s.q1,
            q3: s.q3,
            min: s.min,
            max: s.max,
            delta_mean: r.deltas.map(|d| d.delta_mean),
            delta_median: r.deltas.map(|d| d.delta_median),
            delta_iqr: r.deltas.map(|d| d.delta_iqr),
            p: r.wilcoxon.map(|w| w.p),
            w: r.wilcoxon.map(|w| w.w),
            test_method: r.wilcoxon.map(|w| {
                serde_json::to_value(w.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default()
            }),
            cliffs_delta: r.cliffs.map(|c| c.delta),
            cliffs_interpretation: r.cliffs.map(|c| interpretation_label(c.interpretation).to_string()),
            ci_low: r.cliffs.map(|c| c.ci_low),
            ci_high: r.cliffs.map(|c| c.ci_high),
        }
    }
}

fn interpretation_label(i: Interpretation) -> &'static str {
    i.label()
}

pub fn to_csv(report: &StageReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(CsvRow::from_row(r)).expect("csv row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, HarnessError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Data(format!("summary csv: {e}")))
}

pub fn write_pairs(dir: &Path, records: &[PairRecord]) -> Result<(), HarnessError> {
    write_jsonl(&dir.join(PAIRS_FILE), records)
}

pub fn read_pairs(dir: &Path) -> Result<Vec<PairRecord>, HarnessError> {
    read_jsonl(&dir.join(PAIRS_FILE))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("record serializes"));
        text.push('\n');
    }
    write_file(path, &text)
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::missing(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| HarnessError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Writes `report.json`, `summary.csv` and `boxplot.svg` into `dir`.
pub fn emit_report(dir: &Path, report: &StageReport, records: &[PairRecord]) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&dir.join(REPORT_FILE), &(json + "\n"))?;
    write_file(&dir.join(CSV_FILE), &to_csv(report))?;
    let groups: Vec<BoxGroup> = grouped(records)
        .into_iter()
        .map(|((variant, pairs), sims)| BoxGroup {
            group: variant.label().to_string(),
            series: pairs.label().to_string(),
            values: sims.into_values().collect(),
        })
        .collect();
    let title = format!("{}: similarity by detector variant", report.stage.name());
    write_file(&dir.join(SVG_FILE), &box_plot_svg(&title, "similarity (%)", &groups))
}

/// Rebuilds the statistics and renderings of a stage from its persisted
/// `pairs.jsonl`.
pub fn regenerate(dir: &Path, stage: StageKind) -> Result<StageReport, HarnessError> {
    let records = read_pairs(dir)?;
    let report = build_report(stage, &records)?;
    emit_report(dir, &report, &records)?;
    Ok(report)
}

/// One box of a box plot: `group` selects the cluster on the x axis,
/// `series` the color within it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGroup {
    pub group: String,
    pub series: String,
    pub values: Vec<f64>,
}

struct BoxStats {
    q1: f64,
    median: f64,
    q3: f64,
    lo: f64,
    hi: f64,
    outliers: Vec<f64>,
}

/// Tukey box: whiskers reach the most extreme values within 1.5 IQR of the
/// box; everything beyond is an outlier.
fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let s = summarize(values).ok()?;
    let iqr = s.q3 - s.q1;
    let (lo_fence, hi_fence) = (s.q1 - 1.5 * iqr, s.q3 + 1.5 * iqr);
    let inside: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| *v >= lo_fence && *v <= hi_fence)
        .collect();
    let mut outliers: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| *v < lo_fence || *v > hi_fence)
        .collect();
    outliers.sort_by(f64::total_cmp);
    Some(BoxStats {
        q1: s.q1,
        median: s.median,
        q3: s.q3,
        lo: inside.iter().copied().fold(f64::INFINITY, f64::min),
        hi: inside.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        outliers,
    })
}

const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// Side-by-side box plots, one cluster per group and one colored box per
/// series within it. Output depends only on the input.
pub fn box_plot_svg(title: &str, y_label: &str, boxes: &[BoxGroup]) -> String {
    let mut groups: Vec<&str> = Vec::new();
    let mut series: Vec<&str> = Vec::new();
    for b in boxes {
        if !groups.contains(&b.group.as_str()) {
            groups.push(&b.group);
        }
        if !series.contains(&b.series.as_str()) {
            series.push(&b.series);
        }
    }
    let data_max = boxes
        .iter()
        .flat_map(|b| b.values.iter().copied())
        .fold(100.0f64, f64::max);
    let y_max = (data_max / 50.0).ceil() * 50.0;

    let (left, top, plot_h) = (60.0, 40.0, 300.0);
    let box_w = 26.0;
    let cluster_w = series.len().max(1) as f64 * (box_w + 8.0) + 30.0;
    let width = left + groups.len().max(1) as f64 * cluster_w + 140.0;
    let height = top + plot_h + 60.0;
    let y = |v: f64| top + plot_h * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left:.0}" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(y_label)
    );
    let steps = 5;
    for k in 0..=steps {
        let v = y_max * k as f64 / steps as f64;
        let _ = writeln!(
            s,
            r##"<line x1="{left:.0}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.0}" y="{:.1}" text-anchor="end">{v:.0}</text>"##,
            width - 140.0,
            y(v),
            y(v),
            left - 6.0,
            y(v) + 4.0
        );
    }
    for (gi, g) in groups.iter().enumerate() {
        let gx = left + gi as f64 * cluster_w + 15.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + (cluster_w - 30.0) / 2.0,
            top + plot_h + 20.0,
            escape(g)
        );
        for (si, ser) in series.iter().enumerate() {
            let Some(b) = boxes.iter().find(|b| &b.group == g && &b.series == ser) else {
                continue;
            };
            let Some(st) = box_stats(&b.values) else {
                continue;
            };
            let x = gx + si as f64 * (box_w + 8.0);
            let cx = x + box_w / 2.0;
            let color = PALETTE[si % PALETTE.len()];
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
                y(st.hi),
                y(st.q3)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
                y(st.q1),
                y(st.lo)
            );
            for w in [st.lo, st.hi] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
                    x + 6.0,
                    x + box_w - 6.0,
                    y(w),
                    y(w)
                );
            }
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{box_w:.1}" height="{:.1}" fill="{color}" fill-opacity="0.7" stroke="black"/>"#,
                y(st.q3),
                (y(st.q1) - y(st.q3)).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
                x + box_w,
                y(st.median),
                y(st.median)
            );
            for o in &st.outliers {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx:.1}" cy="{:.1}" r="2.5" fill="none" stroke="{color}"/>"#,
                    y(*o)
                );
            }
        }
    }
    let lx = width - 125.0;
    for (si, ser) in series.iter().enumerate() {
        let ly = top + 10.0 + si as f64 * 18.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}" fill-opacity="0.7" stroke="black"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            ly - 10.0,
            PALETTE[si % PALETTE.len()],
            lx + 18.0,
            ly,
            escape(ser)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{lx:.1}" y="{:.1}" font-size="10">whiskers: 1.5 IQR</text>"#,
        top + 20.0 + series.len() as f64 * 18.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(variant: Variant, pairs: Category, a: &str, b: &str, sim: f64) -> PairRecord {
        PairRecord {
            variant,
            pairs,
            id_a: a.into(),
            id_b: b.into(),
            similarity: sim,
            coverage_a: 0,
            coverage_b: 0,
            len_a: 10,
            len_b: 10,
            warnings: Vec::new(),
        }
    }

    fn sample() -> Vec<PairRecord> {
        let mut r = Vec::new();
        for (i, (base, tsn)) in [(10.0, 12.0), (20.0, 19.0), (30.0, 33.0)].into_iter().enumerate() {
            let (a, b) = (format!("o{i}"), format!("o{}", i + 1));
            r.push(rec(Variant::Base, Category::Op, &a, &b, base));
            r.push(rec(Variant::Tsn, Category::Op, &a, &b, tsn));
        }
        for (i, (base, tsn)) in [(50.0, 100.0), (60.0, 100.0), (70.0, 99.5)].into_iter().enumerate() {
            let (a, b) = (format!("p{i}"), format!("o{i}"));
            r.push(rec(Variant::Base, Category::P2s, &a, &b, base));
            r.push(rec(Variant::Tsn, Category::P2s, &a, &b, tsn));
        }
        r
    }

    #[test]
    fn rows_carry_deltas_and_tests() {
        let report = build_report(StageKind::Insertion, &sample()).unwrap();
        assert_eq!(report.rows.len(), 4);
        let base_p2s = report.row(Variant::Base, Category::P2s).unwrap();
        let d = base_p2s.deltas.unwrap();
        assert_eq!(d.delta_median, 40.0);
        assert_eq!(d.delta_iqr, 55.0 - 25.0);
        assert!(base_p2s.wilcoxon.is_none() && base_p2s.cliffs.is_none());
        let tsn_p2s = report.row(Variant::Tsn, Category::P2s).unwrap();
        let w = tsn_p2s.wilcoxon.unwrap();
        assert_eq!(w.n_effective, 3);
        assert_eq!(w.w, 6.0);
        assert_eq!(tsn_p2s.cliffs.unwrap().delta, 1.0);
        assert_eq!(tsn_p2s.significant, Some(false));
        assert!(report.row(Variant::Tsn, Category::Op).unwrap().deltas.is_none());
    }

    #[test]
    fn csv_round_trips_and_delta_iqr_is_consistent() {
        let report = build_report(StageKind::Insertion, &sample()).unwrap();
        let text = to_csv(&report);
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), report.rows.len());
        for (row, stats) in rows.iter().zip(&report.rows) {
            assert_eq!(row, &CsvRow::from_row(stats));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r).unwrap();
        }
        assert_eq!(String::from_utf8(w.into_inner().unwrap()).unwrap(), text);
        for r in rows.iter().filter(|r| r.pairs == "P2S") {
            let op = rows.iter().find(|o| o.variant == r.variant && o.pairs == "OP").unwrap();
            assert_eq!(r.delta_iqr, Some(r.q1 - op.q3));
        }
    }

    #[test]
    fn svg_has_one_box_per_variant_and_category() {
        let groups: Vec<BoxGroup> = [("Base", "OP"), ("Base", "P2S"), ("TSN", "OP"), ("TSN", "P2S")]
            .iter()
            .map(|(g, s)| BoxGroup {
                group: g.to_string(),
                series: s.to_string(),
                values: vec![1.0, 2.0, 3.0, 4.0, 50.0],
            })
            .collect();
        let svg = box_plot_svg("t", "y", &groups);
        assert_eq!(svg.matches("fill-opacity=\"0.7\" stroke=\"black\"/>\n").count(), 4);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg, box_plot_svg("t", "y", &groups));
    }
}
