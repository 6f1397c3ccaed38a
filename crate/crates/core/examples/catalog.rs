//! The built-in orbifold catalog: validation and reachable coverings.

use qigraph::catalog::{reachable_coverings, validate_catalog};
use qigraph::fixtures::fixture_catalog;

fn main() -> qigraph::Result<()> {
    let cat = fixture_catalog();
    println!("{} orbifolds, {} coverings", cat.orbifolds.len(), cat.coverings.len());
    println!("catalog report: {} violation(s)", validate_catalog(&cat).len());
    for id in ["S1", "M1", "N1"] {
        let reach: Vec<String> = reachable_coverings(&cat, id, 4)?.into_iter().map(|c| c.target).collect();
        println!("{id} covers {reach:?}");
    }
    Ok(())
}
