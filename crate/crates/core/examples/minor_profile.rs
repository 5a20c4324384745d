use std::time::Instant;
use speclore::genmodel::{draw_model, preset_spec, Preset};
use speclore::kmedian::{weighted_kmedian_with, KMedianConfig};
use speclore::spectral::{spectral_embedding, EigenMethod};

fn main() {
    let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
    let draw = draw_model(&spec, 3).unwrap();
    let minor = draw.adjacency.minor(0).unwrap();

    let t = Instant::now();
    let mut emb = None;
    for _ in 0..20 {
        emb = Some(spectral_embedding(&minor, 2, EigenMethod::Lanczos).unwrap());
    }
    println!("spectral_embedding (lanczos+normalize): {:?}/run", t.elapsed() / 20);

    let emb = emb.unwrap();
    let weights: Vec<f64> = emb.active_nodes.iter().map(|&i| emb.row_weights[i]).collect();
    let cfg = KMedianConfig { max_swaps: 0, swap_candidates: 0, restarts: 1, max_iterations: 40, seed: 5 };
    let t = Instant::now();
    for _ in 0..20 {
        let km = weighted_kmedian_with(&emb.normalized_rows, &weights, 2, &cfg).unwrap();
        std::hint::black_box(km.cost);
    }
    println!("kmedian: {:?}/run", t.elapsed() / 20);

    let t = Instant::now();
    for _ in 0..20 {
        let f = speclore::spectral::best_rank_k_with(&minor, 2, EigenMethod::Lanczos).unwrap();
        std::hint::black_box(f.eigenvalues()[0]);
    }
    println!("lanczos only: {:?}/run", t.elapsed() / 20);
}
