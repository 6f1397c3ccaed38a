//! Minimization: lifts of one graph share a minimal graph.

use std::sync::Arc;

use qigraph::canon::canonical_form;
use qigraph::fixtures::{fixture_catalog, random_graph, random_lift, rng, GraphOptions, LabelMode};
use qigraph::minimize::{bisimilar, minimize};

fn main() -> qigraph::Result<()> {
    let cat = Arc::new(fixture_catalog());
    let mut r = rng(4);
    let opts = GraphOptions::new(4, 6, LabelMode::Random);
    let g = std::iter::repeat_with(|| random_graph(&mut r, &cat, &opts)).find(|g| g.vertices.len() >= 3).expect("some draw");
    let (q, _) = minimize(&g)?;
    println!("{} vertices minimize to {}", g.vertices.len(), q.vertices.len());
    for copies in 2..=3 {
        let (lift, _) = random_lift(&mut r, &g, copies);
        let (ql, _) = minimize(&lift)?;
        println!(
            "lift with {} vertices: bisimilar = {}, same minimal graph = {}",
            lift.vertices.len(),
            bisimilar(&lift, &g)?,
            canonical_form(&ql)? == canonical_form(&q)?
        );
    }
    Ok(())
}
