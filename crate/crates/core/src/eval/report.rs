//! Metric report serialization: one row per scene plus an aggregate row,
//! emitted both as CSV with a fixed column set and as JSON.

use serde::{Deserialize, Serialize};

/// One scene's metrics. Fields a command does not compute stay `None` and
/// serialize as empty CSV cells / absent JSON keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scene: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap50: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mota: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idf1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mt_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mt_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

pub const CSV_HEADER: &str =
    "scene,ap50,ar,mota,motp,idf1,far,mt_count,mt_ratio,precision,recall,f1";

fn cell_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders rows as CSV under the fixed header. Scene names must not contain
/// commas or newlines (the CLI derives them from file stems).
pub fn to_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [
            r.scene.clone(),
            cell_f64(r.ap50),
            cell_f64(r.ar),
            cell_f64(r.mota),
            cell_f64(r.motp),
            cell_f64(r.idf1),
            cell_f64(r.far),
            r.mt_count.map(|x| x.to_string()).unwrap_or_default(),
            cell_f64(r.mt_ratio),
            cell_f64(r.precision),
            cell_f64(r.recall),
            cell_f64(r.f1),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(rows: &[MetricRow]) -> String {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        rows: &'a [MetricRow],
    }
    let mut s = serde_json::to_string_pretty(&Wrapper { rows }).expect("report serializes");
    s.push('\n');
    s
}

/// Mean of every populated rate column and sum of `mt_count`, labeled
/// "aggregate". Columns absent from every row stay absent.
pub fn aggregate(rows: &[MetricRow]) -> MetricRow {
    fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
        let present: Vec<f64> = values.flatten().collect();
        if present.is_empty() {
            None
        } else {
            Some(present.iter().sum::<f64>() / present.len() as f64)
        }
    }
    let mt_counts: Vec<u64> = rows.iter().filter_map(|r| r.mt_count).collect();
    MetricRow {
        scene: "aggregate".to_string(),
        ap50: mean(rows.iter().map(|r| r.ap50)),
        ar: mean(rows.iter().map(|r| r.ar)),
        mota: mean(rows.iter().map(|r| r.mota)),
        motp: mean(rows.iter().map(|r| r.motp)),
        idf1: mean(rows.iter().map(|r| r.idf1)),
        far: mean(rows.iter().map(|r| r.far)),
        mt_count: if mt_counts.is_empty() { None } else { Some(mt_counts.iter().sum()) },
        mt_ratio: mean(rows.iter().map(|r| r.mt_ratio)),
        precision: mean(rows.iter().map(|r| r.precision)),
        recall: mean(rows.iter().map(|r| r.recall)),
        f1: mean(rows.iter().map(|r| r.f1)),
    }
}
