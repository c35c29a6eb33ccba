//! End-to-end runs at a size that keeps the suite fast.

use bwres_core::adversary::{prune_to_floor, triangle_blocker, wipe_neighborhood};
use bwres_core::bandwidth::{Labeling, PlanConstants};
use bwres_core::embedder::{embed_spanning, EmbedParams};
use bwres_core::graphcore::{complete, cycle, disjoint_copies, generate_gnp, path};
use bwres_core::packing::{almost_perfect_pack, validate_packing, PackParams};
use bwres_core::regularity::EngineParams;

fn engine(r: usize, p: f64, eps: f64, seed: u64) -> EngineParams {
    let mut e = EngineParams::new(r, 0.1, p, eps, seed);
    e.d = 0.1;
    e.xi0 = 0.05;
    e
}

#[test]
fn c4_factor_embeds_into_pruned_host() {
    let (n, p, seed) = (2000, 0.6, 11);
    let g = generate_gnp(n, p, seed).unwrap();
    let (gp, _) = prune_to_floor(&g, 720, seed).unwrap();
    let h = disjoint_copies(&cycle(4).unwrap(), n / 4).unwrap();
    let order: Vec<usize> = (0..n / 4).flat_map(|t| [4 * t, 4 * t + 1, 4 * t + 3, 4 * t + 2]).collect();
    let mut params = EmbedParams::new(engine(2, p, 0.2, seed), 0.002, 0.05, 2);
    params.consts = PlanConstants { beta_denominator: 0.01, block_factor: 1.0 };
    let rep = embed_spanning(&gp, Some(&g), &h, Some(&Labeling::from_order(&order).unwrap()), &params).unwrap();
    rep.embedding.check(&h, &gp).unwrap();
    assert!(rep.embedding.is_total());
}

#[test]
fn hamilton_path_embeds_with_identity_labels() {
    let (n, p, seed) = (2000, 0.6, 5);
    let g = generate_gnp(n, p, seed).unwrap();
    let (gp, _) = prune_to_floor(&g, 720, seed).unwrap();
    let mut params = EmbedParams::new(engine(2, p, 0.2, seed), 0.002, 0.05, 2);
    params.consts = PlanConstants { beta_denominator: 0.01, block_factor: 1.0 };
    let rep = embed_spanning(&gp, Some(&g), &path(n), None, &params).unwrap();
    assert!(rep.embedding.is_total());
}

#[test]
fn wiped_vertex_stops_a_spanning_embedding() {
    let (n, p, seed) = (2000, 0.6, 3);
    let g = generate_gnp(n, p, seed).unwrap();
    let (gp, _) = wipe_neighborhood(&g, 0).unwrap();
    let mut params = EmbedParams::new(engine(2, p, 0.2, seed), 0.002, 0.05, 2);
    params.consts = PlanConstants { beta_denominator: 0.01, block_factor: 1.0 };
    let err = embed_spanning(&gp, Some(&g), &path(n), None, &params).unwrap_err();
    assert_eq!(err.as_stage().unwrap().stage, "precondition");
}

#[test]
fn blocked_vertices_stay_uncovered_by_triangles() {
    let (n, p, seed) = (4000, 0.2, 9);
    let g = generate_gnp(n, p, seed).unwrap();
    let (gp, adv) = triangle_blocker(&g, p, 0.3, seed).unwrap();
    let mut e = engine(3, p, 0.3, seed);
    e.d = 0.05;
    let k3 = complete(3);
    let rep = almost_perfect_pack(&gp, Some(&g), &k3, &PackParams::new(e)).unwrap();
    validate_packing(&gp, &k3, &rep.packing).unwrap();
    assert!(adv.blocked_set.iter().all(|v| rep.packing.uncovered.contains(v)));
}
