//! A random lift, its covering morphism and the balance transfer along it.

use std::sync::Arc;

use qigraph::fixtures::{fixture_catalog, random_graph, random_lift, rng, GraphOptions, LabelMode};
use qigraph::linear::format_rational;
use qigraph::morphism::{check_balance_transfer, verify_morphism};

fn main() -> qigraph::Result<()> {
    let cat = Arc::new(fixture_catalog());
    let mut r = rng(3);
    let g = random_graph(&mut r, &cat, &GraphOptions::new(3, 4, LabelMode::Balanced));
    let (lift, m) = random_lift(&mut r, &g, 2);
    println!("lift: {} -> {} vertices", lift.vertices.len(), g.vertices.len());
    println!("morphism report: {} violation(s)", verify_morphism(&lift, &g, &m).len());
    for t in check_balance_transfer(&lift, &g, &m)? {
        println!(
            "{} -> {}: d_e = {}, d_ebar = {}, holds = {}",
            t.edge,
            t.image,
            format_rational(&t.d_e),
            format_rational(&t.d_ebar),
            t.holds
        );
    }
    Ok(())
}
