//! Fixtures shared by the benchmarks: seeded hosts and the desk-scale parameter set.

use bwres_core::adversary::prune_to_floor;
use bwres_core::bandwidth::PlanConstants;
use bwres_core::embedder::EmbedParams;
use bwres_core::graphcore::generate_gnp;
use bwres_core::regularity::EngineParams;
use bwres_core::Graph;

/// `G(n, p)` and the same graph pruned down to minimum degree `(1 - 1/r + gamma) n p`.
pub fn pruned_host(n: usize, p: f64, r: usize, gamma: f64, seed: u64) -> (Graph, Graph) {
    let g = generate_gnp(n, p, seed).expect("valid p");
    let floor = ((1.0 - 1.0 / r as f64 + gamma) * n as f64 * p - 1e-9).ceil() as usize;
    let (gp, _) = prune_to_floor(&g, floor, seed).expect("floor below the minimum degree");
    (g, gp)
}

pub fn desk_engine(r: usize, p: f64, seed: u64) -> EngineParams {
    let mut e = EngineParams::new(r, 0.1, p, 0.2, seed);
    e.d = 0.1;
    e.xi0 = 0.05;
    e
}

pub fn desk_embed(r: usize, p: f64, max_degree: usize, seed: u64) -> EmbedParams {
    let mut params = EmbedParams::new(desk_engine(r, p, seed), 0.002, 0.05, max_degree);
    params.consts = PlanConstants { beta_denominator: 0.01, block_factor: 1.0 };
    params
}
