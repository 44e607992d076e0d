mod common;

use common::{edge_set, naive_gabriel, random_coords};
use ggflex::graph::{build_gabriel, is_gabriel_edge, Points};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_naive_oracle_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.random_range(2..=64);
        let dim = rng.random_range(1..=8);
        let coords = random_coords(&mut rng, n, dim);
        assert_eq!(edge_set(&coords, dim), naive_gabriel(&coords, dim), "n={n} d={dim}");
    }
}

#[test]
fn matches_oracle_on_lattice_with_ties() {
    // lattice points sit exactly on many diametral spheres
    let mut coords = Vec::new();
    for x in 0..6 {
        for y in 0..5 {
            coords.extend([x as f64, y as f64]);
        }
    }
    assert_eq!(edge_set(&coords, 2), naive_gabriel(&coords, 2));
}

#[test]
fn certificates_agree_with_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coords = random_coords(&mut rng, 30, 3);
    let p = Points::new(&coords, 3).unwrap();
    let g = build_gabriel(p).unwrap();
    for i in 0..30 {
        for j in (i + 1)..30 {
            let (ok, cert) = is_gabriel_edge(i, j, p).unwrap();
            assert_eq!(ok, g.has_edge(i, j));
            if let Some(k) = cert.blocked_by {
                assert!(p.sq_dist(i, k) + p.sq_dist(j, k) < p.sq_dist(i, j));
            }
        }
    }
    assert!(g.is_connected());
}

#[test]
fn build_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let coords = random_coords(&mut rng, 200, 4);
    let a = build_gabriel(Points::new(&coords, 4).unwrap()).unwrap();
    let b = build_gabriel(Points::new(&coords, 4).unwrap()).unwrap();
    assert_eq!(a.edges(), b.edges());
}
