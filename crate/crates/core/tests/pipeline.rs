use fado::instancegen::{gen_instance, GenSpec, Monotonicity};
use fado::model::{design_latency, Instance};
use fado::oracle::{self, OracleStatus};
use fado::packer::check_legal;
use fado::search::{boot, run, Initial, SearchOptions};
use fado::{Error, Problem};

#[test]
fn generated_files_round_trip_through_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen_instance(&GenSpec::mixed(3)).unwrap();
    g.write_to(dir.path()).unwrap();
    let d = dir.path();
    let inst = Instance::load(
        d.join("device.json"),
        d.join("design.json"),
        d.join("qor.json"),
    )
    .unwrap();
    let p = Problem::new(inst);
    let pack = boot(&p, Initial::Mincut).unwrap();
    assert!(check_legal(&p, &pack).is_legal());
    let baseline = design_latency(&p.instance.design, &pack.config, &p.instance.qor).unwrap();
    let st = run(&p, pack, &SearchOptions::default()).unwrap();
    assert!(check_legal(&p, &st.pack).is_legal());
    assert!(!st.cap_reached);
    assert!(st.design_latency(&p) < baseline);
    // Balancing ignores connectivity; on this design it overflows a boundary and
    // must say so rather than boot.
    match boot(&p, Initial::Balanced) {
        Ok(pack) => assert!(check_legal(&p, &pack).is_legal()),
        Err(Error::Infeasible(msg)) => assert!(msg.contains("SLL budget"), "{msg}"),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn search_never_beats_the_oracle() {
    for mode in [Monotonicity::Monotone, Monotonicity::NonMonotone] {
        for seed in 0..20 {
            let p = Problem::new(
                gen_instance(&GenSpec::small(seed, mode))
                    .unwrap()
                    .instance()
                    .unwrap(),
            );
            let st = run(
                &p,
                boot(&p, Initial::Mincut).unwrap(),
                &SearchOptions::default(),
            )
            .unwrap();
            let best = oracle::solve(&p, 50_000_000).unwrap();
            assert_eq!(best.status, OracleStatus::Optimal);
            let lat = st.design_latency(&p);
            assert!(
                lat >= best.latency.unwrap(),
                "seed {seed}: search {lat} below optimum"
            );
            let w = best.witness.unwrap().into_state();
            assert!(check_legal(&p, &w).is_legal());
        }
    }
}
