//! Smallest common cover of a 4-cycle and a 6-cycle.

use qigraph::cover::{degree_refinement, find_common_cover, verify_covering, TypedGraph};

fn cycle(n: usize) -> TypedGraph {
    let mut g = TypedGraph::default();
    for i in 0..n {
        g.add_vertex(format!("v{i}"), if i % 2 == 0 { "x" } else { "y" });
    }
    for i in 0..n {
        g.add_edge(format!("e{i}"), format!("v{i}"), format!("v{}", (i + 1) % n), "k");
    }
    g
}

fn main() -> qigraph::Result<()> {
    let (a, b) = (cycle(4), cycle(6));
    println!("refinement blocks: {}", degree_refinement(&a).matrix.len());
    match find_common_cover(&a, &b, 24)? {
        Some(c) => println!(
            "common cover with {} vertices, maps verify: {}",
            c.cover.types.len(),
            verify_covering(&c.cover, &a, &c.first) && verify_covering(&c.cover, &b, &c.second)
        ),
        None => println!("none within 24 vertices"),
    }
    Ok(())
}
