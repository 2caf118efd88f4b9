use std::fmt::Write;

use super::crossval::{EvalReport, MetricSummary};

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.6}")
    }
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.4}")
    }
}

/// One row per fold, then `mean` and `std` rows.
pub fn metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("fold,n_train,n_train_resampled,n_test,n_test_fraud,tp,fp,tn,fn,accuracy,recall,precision,auc\n");
    for f in &report.folds {
        let c = &f.confusion;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.fold,
            f.n_train,
            f.n_train_resampled,
            f.n_test,
            f.n_test_fraud,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            num(f.accuracy),
            num(f.recall),
            num(f.precision),
            num(f.auc)
        )
        .unwrap();
    }
    for (name, s) in [("mean", &report.mean), ("std", &report.std)] {
        writeln!(
            out,
            "{name},,,,,,,,,{},{},{},{}",
            num(s.accuracy),
            num(s.recall),
            num(s.precision),
            num(s.auc)
        )
        .unwrap();
    }
    out
}

/// Pooled ROC curve as `fpr<TAB>tpr` lines under a header.
pub fn roc_tsv(report: &EvalReport) -> String {
    let mut out = String::from("fpr\ttpr\n");
    for p in &report.roc_points {
        writeln!(out, "{}\t{}", p.fpr, p.tpr).unwrap();
    }
    out
}

/// Markdown table with `Method | Accuracy | Recall | AUC` columns.
pub fn metrics_table_markdown(rows: &[(String, MetricSummary)]) -> String {
    let mut out = String::from("| Method | Accuracy | Recall | AUC |\n|---|---|---|---|\n");
    for (name, m) in rows {
        writeln!(out, "| {name} | {} | {} | {} |", cell(m.accuracy), cell(m.recall), cell(m.auc)).unwrap();
    }
    out
}

/// AUC of one (method, sampler) cell; `None` marks a failed run.
pub type GridCell = Option<f64>;

/// Methods as rows, samplers as columns.
pub fn auc_grid_markdown(samplers: &[String], rows: &[(String, Vec<GridCell>)]) -> String {
    let mut out = String::from("| Method |");
    for s in samplers {
        write!(out, " {s} |").unwrap();
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(samplers.len()));
    out.push('\n');
    for (name, cells) in rows {
        write!(out, "| {name} |").unwrap();
        for c in cells {
            match c {
                Some(auc) => write!(out, " {} |", cell(*auc)).unwrap(),
                None => out.push_str(" FAILED |"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn auc_grid_csv(samplers: &[String], rows: &[(String, Vec<GridCell>)]) -> String {
    let mut out = String::from("method");
    for s in samplers {
        write!(out, ",{s}").unwrap();
    }
    out.push('\n');
    for (name, cells) in rows {
        out.push_str(name);
        for c in cells {
            match c {
                Some(auc) => write!(out, ",{}", num(*auc)).unwrap(),
                None => out.push_str(",FAILED"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let samplers = vec!["Smote".to_string(), "Smote-Kmeans".to_string()];
        let rows = vec![
            ("DT".to_string(), vec![Some(0.86), None]),
            ("Ours".to_string(), vec![Some(0.92), Some(0.96)]),
        ];
        let md = auc_grid_markdown(&samplers, &rows);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Method | Smote | Smote-Kmeans |");
        assert_eq!(lines[1], "|---|---|---|");
        assert_eq!(lines[2], "| DT | 0.8600 | FAILED |");
        let csv = auc_grid_csv(&samplers, &rows);
        assert_eq!(csv.lines().nth(1), Some("DT,0.860000,FAILED"));
    }

    #[test]
    fn table_layout() {
        let m = MetricSummary { accuracy: 0.88, recall: f64::NAN, precision: 0.5, auc: 0.89 };
        let md = metrics_table_markdown(&[("Ours".to_string(), m)]);
        assert_eq!(md.lines().nth(2), Some("| Ours | 0.8800 | NaN | 0.8900 |"));
    }
}
