use std::fmt::Write as _;

use super::loso::SiteReport;
use super::sweep::SweepRow;
use crate::ppi::InferenceReport;

/// Coefficient rows for all sites and estimators, one line per coefficient.
pub fn forest_csv(reports: &[SiteReport]) -> String {
    let mut out = Vec::new();
    out.extend_from_slice(InferenceReport::CSV_HEADER.as_bytes());
    out.push(b'\n');
    for r in reports {
        let inf = &r.inference;
        for rep in [&inf.ground_truth, &inf.classical, &inf.naive, &inf.multippi].into_iter().flatten() {
            rep.write_csv_rows(&r.site, &mut out).expect("writing to memory");
        }
    }
    String::from_utf8(out).expect("csv is utf-8")
}

/// Long-format confusion counts: `site,truth,predicted,count`.
pub fn confusion_csv(reports: &[SiteReport]) -> String {
    let mut s = String::from("site,truth,predicted,count\n");
    for r in reports {
        let cm = &r.confusion;
        for (i, row) in cm.counts.iter().enumerate() {
            for (j, n) in row.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{n}", r.site, cm.labels[i], cm.labels[j]);
            }
        }
    }
    s
}

/// Per-site accuracy and macro-F1.
pub fn metrics_csv(reports: &[SiteReport]) -> String {
    let mut s = String::from("site,provenance,n_records,accuracy,macro_f1\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{},{},{}", r.site, r.provenance, r.confusion.total(), r.accuracy, r.f1.macro_f1);
    }
    s
}

/// `lambda,coefficient,estimate,std_error`; a failed lambda gives one row with empty fields.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("lambda,coefficient,estimate,std_error\n");
    for r in rows {
        if r.error.is_some() {
            let _ = writeln!(s, "{},,,", r.lambda);
        }
        for (j, (e, se)) in r.estimates.iter().zip(&r.std_errors).enumerate() {
            let _ = writeln!(s, "{},{j},{e},{se}", r.lambda);
        }
    }
    s
}
