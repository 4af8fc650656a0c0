//! CSV traces.

use std::io::Write;

use nonmono::solver::IterateTrace;

use crate::json::fmt_f64;

/// Columns `k, res_norm, projdiff_norm, shadow_norm`, then `x…, y…` when the
/// run kept its iterates.
pub fn write_csv<W: Write>(w: W, trace: &IterateTrace, n: usize, m: usize) -> csv::Result<()> {
    let iterates = !trace.records.is_empty() && trace.records.iter().all(|r| r.state.is_some());
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["k", "res_norm", "projdiff_norm", "shadow_norm"]
        .map(String::from)
        .to_vec();
    if iterates {
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..m).map(|i| format!("y{i}")));
    }
    out.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            fmt_f64(r.res_norm),
            fmt_f64(r.projdiff_norm),
            fmt_f64(r.shadow_norm),
        ];
        if let (true, Some(s)) = (iterates, &r.state) {
            row.extend(s.x.iter().chain(s.y.iter()).map(|&v| fmt_f64(v)));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
