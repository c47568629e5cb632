//! Manual performance probe; run with
//! `cargo test --release -p sbsp-core --test perf_probe -- --ignored --nocapture`.

use std::time::{Duration, Instant};

use sbsp_core::instance::{generate, Family, GeneratorSpec, SizeClass};
use sbsp_core::lp::build_lp3s;
use sbsp_core::schedule::HorizonMode;
use sbsp_core::simplex::{solve, SimplexLimits};

fn probe(slots: u32, schools: u32, gamma_max: u32) {
    let spec = GeneratorSpec::new(
        SizeClass::Explicit { slots, schools, gamma_max },
        Family::Base,
        1,
    );
    let inst = generate(&spec).unwrap();
    let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
    let t1 = Instant::now();
    let sol = solve(
        &model,
        &SimplexLimits { max_iterations: None, time_budget: Some(Duration::from_secs(240)) },
    );
    println!(
        "M={slots} N={schools} G={gamma_max}: vars={} rows={} nnz={} | solve {:?} iters={} status={:?} z={:.3}",
        model.num_vars,
        model.num_rows(),
        model.nonzeros(),
        t1.elapsed(),
        sol.iterations,
        sol.status,
        sol.objective
    );
}

#[test]
#[ignore]
fn scaling_probe() {
    let _ = env_logger::builder().is_test(false).try_init();
    probe(6, 4, 3);
    probe(10, 5, 5);
    probe(15, 10, 6);
    probe(20, 15, 8);
    probe(30, 20, 10);
}

#[test]
#[ignore]
fn single_large() {
    let _ = env_logger::builder().is_test(false).try_init();
    probe(30, 20, 10);
}
