//! Canonical JSON documents and the command line entry point.

use std::sync::Arc;

use qigraph::fixtures::{fixture_catalog, random_graph, rng, GraphOptions, LabelMode};
use qigraph::io::{graph_to_doc, parse, serialize, Document};

fn main() {
    let g = random_graph(&mut rng(9), &Arc::new(fixture_catalog()), &GraphOptions::new(2, 2, LabelMode::Integral));
    let bytes = serialize(&Document::NahGraph(graph_to_doc(&g)));
    let back = parse(&bytes).expect("own output parses");
    assert_eq!(serialize(&back), bytes);
    println!("{} bytes, stable under a round trip", bytes.len());

    let dir = std::env::temp_dir().join("qigraph-example.json");
    std::fs::write(&dir, &bytes).expect("temp dir is writable");
    let args: Vec<String> = ["qigraph", "integral", dir.to_str().unwrap()].map(String::from).to_vec();
    let code = qigraph::cli::run_with(&args, &mut std::io::stdout(), &mut std::io::stderr());
    println!("exit status {code}");
}
