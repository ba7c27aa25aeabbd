use flexfem::tutorials::{run_tutorial07, CahnHilliardConfig};

#[test]
fn probe_ch_steady() {
    let t0 = std::time::Instant::now();
    let config = CahnHilliardConfig {
        subdivisions: 16,
        theta: 36.0,
        ..CahnHilliardConfig::default()
    };
    let r = run_tutorial07(&config, None).unwrap();
    println!(
        "steps {} failures {} t_final {:.4} dt_final {:.3e} steady {} wall {:?}",
        r.steps_run, r.newton_failures, r.final_time, r.final_time_step, r.reached_steady, t0.elapsed()
    );
}
