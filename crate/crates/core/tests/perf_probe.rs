//! Manual timing probe for the heavy pipelines. Run with
//! `cargo test --release -p speclore --test perf_probe -- --ignored --nocapture`.

use std::time::Instant;

use speclore::genmodel::{draw_model, preset_spec, Preset};
use speclore::pipeline::cluster;
use speclore::provable::provable_cluster;
use speclore::theory::misclustering_loss;

#[test]
#[ignore = "timing probe, not a correctness test"]
fn time_spec1_pipeline_and_leave_one_out() {
    let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();

    let t0 = Instant::now();
    let draw = draw_model(&spec, 1).unwrap();
    println!("draw_model n=1000: {:?}", t0.elapsed());
    println!("avg degree: {:.2}", draw.adjacency.degree_stats().avg_degree);

    let t1 = Instant::now();
    let out = cluster(&draw.adjacency, 2, 10, 1).unwrap();
    println!(
        "cluster R=10: {:?} (init {:?}, refine {:?})",
        t1.elapsed(),
        out.init_time,
        out.refine_time
    );
    let init_loss = misclustering_loss(&draw.truth, &out.init_labels).unwrap();
    let final_loss = misclustering_loss(&draw.truth, &out.labels).unwrap();
    println!("init loss {:.4}, R=10 loss {:.4}", init_loss, final_loss);

    let small = preset_spec(Preset::Spec1 { tau: 0.5 })
        .unwrap()
        .with_n(300)
        .unwrap();
    let sd = draw_model(&small, 2).unwrap();
    let t2 = Instant::now();
    let prov = provable_cluster(&sd.adjacency, 2, 2).unwrap();
    println!("provable n=300: {:?}", t2.elapsed());
    println!(
        "provable loss {:.4}",
        misclustering_loss(&sd.truth, &prov).unwrap()
    );
}
