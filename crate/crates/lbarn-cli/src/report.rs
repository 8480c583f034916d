//! Report rendering: human tables on stdout plus one machine-readable JSON
//! line behind a fixed marker.

use serde::Serialize;

pub const MACHINE_MARKER: &str = "---machine-json---";

/// Print the machine-readable section: the marker line followed by exactly
/// one line of JSON.
pub fn machine_section<T: Serialize>(payload: &T) {
    println!("{MACHINE_MARKER}");
    println!(
        "{}",
        serde_json::to_string(payload).expect("report serialization cannot fail")
    );
}

/// Render per-dimension truncations as a compact table; long vectors get an
/// abbreviated summary (the machine section always carries the full list).
pub fn truncation_table(truncations: &[usize]) -> String {
    let mut out = String::new();
    if truncations.len() <= 32 {
        out.push_str("dim  trees\n");
        for (i, t) in truncations.iter().enumerate() {
            out.push_str(&format!("{:>3}  {t}\n", i + 1));
        }
    } else {
        let mut sorted = truncations.to_vec();
        sorted.sort_unstable();
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let median = sorted[sorted.len() / 2];
        let mean = truncations.iter().sum::<usize>() as f64 / truncations.len() as f64;
        out.push_str(&format!(
            "trees per dimension: min {min}, median {median}, mean {mean:.1}, max {max} \
             ({} dimensions)\n",
            truncations.len()
        ));
    }
    out
}
