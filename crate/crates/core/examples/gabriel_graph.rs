//! Builds the Gabriel graph of five points and explains one rejected pair.
//!
//! ```text
//! cargo run --example gabriel_graph
//! ```

use ggflex::graph::{build_gabriel, is_gabriel_edge, vertex_degrees, Points};

fn main() -> ggflex::Result<()> {
    let coords = [0.0, 0.0, 0.5, 1.0, 2.0, 0.3, 1.5, 1.3, 1.2, -0.3];
    let points = Points::new(&coords, 2)?;
    let graph = build_gabriel(points)?;

    println!("edges:");
    for (i, j) in graph.edges() {
        println!("  {i} -- {j}");
    }
    println!("degrees: {:?}", vertex_degrees(&graph));
    println!("connected: {}", graph.is_connected());

    // (0, 2) is not an edge: some point lies inside the sphere on that diameter
    let (is_edge, cert) = is_gabriel_edge(0, 2, points)?;
    println!("0 -- 2 is an edge: {is_edge}, blocked by {:?}", cert.blocked_by);

    graph.write_edge_list(std::io::stdout().lock()).expect("stdout");
    Ok(())
}
