//! Realization of a balanced graph by an integral one.

use std::collections::BTreeMap;
use std::sync::Arc;

use qigraph::fixtures::{fixture_catalog, random_graph, rng, GraphOptions, LabelMode};
use qigraph::graph::is_integral;
use qigraph::minimize::bisimilar;
use qigraph::realize::realize;

fn main() -> qigraph::Result<()> {
    let cat = Arc::new(fixture_catalog());
    let opts = GraphOptions::new(3, 4, LabelMode::Balanced);
    let g = (0..)
        .map(|s| random_graph(&mut rng(s), &cat, &opts))
        .find(|g| g.vertices.len() >= 2 && !is_integral(g).unwrap_or(true))
        .expect("some seed");
    let real = realize(&g, &BTreeMap::new())?;
    println!("scale {}: {} pieces, {} gluings", real.plan.scale, real.graph.vertices.len(), real.graph.edges.len());
    println!("integral = {}, bisimilar = {}", is_integral(&real.graph)?, bisimilar(&real.graph, &g)?);
    println!("{} synthetic covers", real.fragment.coverings.len());
    Ok(())
}
