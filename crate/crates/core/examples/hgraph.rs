//! H-graphs: canonical form under the moves and minimization.

use std::sync::Arc;

use qigraph::fixtures::{fixture_catalog, random_h_graph, rng, GraphOptions, LabelMode};
use qigraph::hgraph::{h_canonical_moves, minimize_h, verify_h_morphism};

fn main() -> qigraph::Result<()> {
    let cat = Arc::new(fixture_catalog());
    let mut r = rng(6);
    for _ in 0..3 {
        let h = random_h_graph(&mut r, &cat, &GraphOptions::new(4, 5, LabelMode::Random));
        let canon = h_canonical_moves(&h)?;
        let (q, m) = minimize_h(&h)?;
        println!(
            "{}+{} pieces, canonical signs {:?}, minimal {}+{}, morphism report {}",
            h.hyperbolic.vertices.len(),
            h.seifert.len(),
            canon.signs.values().collect::<Vec<_>>(),
            q.hyperbolic.vertices.len(),
            q.seifert.len(),
            verify_h_morphism(&h, &q, &m).len()
        );
    }
    Ok(())
}
