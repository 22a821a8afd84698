use std::time::Instant;

use rsc_core::data::{generate_synthetic, SyntheticSpec};
use rsc_core::model::{build_plan, init_params, BaselineConfig};
use rsc_core::train::{train, SplitSpec, TrainConfig};

fn main() {
    env_logger::init();
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let data = generate_synthetic(&SyntheticSpec {
        n_samples: 1200,
        image_size: 64,
        seed: 7,
        ..Default::default()
    })
    .unwrap();
    let cfg = BaselineConfig {
        input_size: 64,
        num_blocks: 3,
        ..Default::default()
    };
    let plan = build_plan(&cfg).unwrap();
    let params = init_params(&plan, 7);
    let t = Instant::now();
    let out = train(
        &plan,
        params,
        &data.samples,
        &TrainConfig { epochs, seed: 7, ..Default::default() },
        &SplitSpec { seed: 7, ..Default::default() },
    )
    .unwrap();
    for r in &out.records {
        println!("{:?}", r);
    }
    println!("elapsed {:.1}s", t.elapsed().as_secs_f64());
}
