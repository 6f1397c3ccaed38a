//! Balanced and integral predicates on random graphs.

use std::sync::Arc;

use qigraph::fixtures::{fixture_catalog, random_graph, rng, GraphOptions, LabelMode};
use qigraph::graph::{balanced, is_integral, validate};
use qigraph::linear::format_rational;

fn main() -> qigraph::Result<()> {
    let cat = Arc::new(fixture_catalog());
    for mode in [LabelMode::Random, LabelMode::Balanced, LabelMode::Integral] {
        let opts = GraphOptions::new(4, 6, mode);
        let g = (0..).map(|s| random_graph(&mut rng(s), &cat, &opts)).find(|g| g.vertices.len() >= 3).expect("some seed");
        assert!(validate(&g).is_empty());
        let b = balanced(&g)?;
        print!("{mode:?}: {} vertices, balanced = {}", g.vertices.len(), b.balanced);
        if let Some((edge, product)) = &b.witness {
            print!(" (cycle through {edge} has product {})", format_rational(product));
        }
        println!(", integral = {}", is_integral(&g)?);
    }
    Ok(())
}
