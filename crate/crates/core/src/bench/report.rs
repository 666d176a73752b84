//! Result serialization. CSV keeps a stable column order for spreadsheet
//! ingestion; JSON carries every field (including useful_ops) and
//! round-trips losslessly.

use crate::bench::BenchResult;

pub const CSV_HEADER: &str = "label,backend,m,n,k,instances,reps,wall_seconds,gops,checksum";

/// CSV with a header line even when there are no results. Labels and
/// backend names never contain commas (workload parsing splits on them),
/// so no quoting is needed; floats print in shortest round-trip form.
pub fn results_to_csv(results: &[BenchResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.label, r.backend, r.m, r.n, r.k, r.instances, r.reps, r.wall_seconds, r.gops, r.checksum
        ));
    }
    out
}

pub fn results_to_json(results: &[BenchResult]) -> String {
    serde_json::to_string_pretty(results).expect("benchmark results always serialize")
}

pub fn results_from_json(text: &str) -> Result<Vec<BenchResult>, String> {
    serde_json::from_str(text).map_err(|e| format!("invalid results JSON: {e}"))
}
