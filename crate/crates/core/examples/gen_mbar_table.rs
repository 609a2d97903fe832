//! Regenerates `data/mbar.json` from finite-field point counts.
//!
//! cargo run -p bbatlas-core --example gen_mbar_table --release

use std::collections::BTreeMap;

use bbatlas_core::cohomology::MBAR_TABLE_MAX;
use bbatlas_core::oracles::betti_from_counts;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut table = BTreeMap::new();
    for m in 3..=MBAR_TABLE_MAX {
        let oracle = betti_from_counts(m)?;
        eprintln!("m = {m}: {} from counts {:?}", oracle.poly, oracle.counts);
        table.insert(m.to_string(), oracle.poly);
    }
    let doc = serde_json::json!({
        "source": "interpolated point counts of the moduli of stable marked rational curves over prime fields, with one extra verification prime",
        "table": table,
    });
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/mbar.json");
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    eprintln!("wrote {path}");
    Ok(())
}
