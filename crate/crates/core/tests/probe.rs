// Scratch calibration probes, run explicitly with --ignored --nocapture.

use zoal::apcu::{zo_apcu, ApcuConfig};
use zoal::baselines::{zo_ars, BaselineConfig, BaselineMethod, GradientEstimator};
use zoal::estimator::stencil_coefficients;
use zoal::problems::{gen_uscqp_with, ProblemData};
use zoal::vec_norm;

#[test]
#[ignore]
fn probe_uscqp() {
    for l in [8.0, 10.0, 12.0] {
        let mut apcu_queries = Vec::new();
        let mut ars_queries = Vec::new();
        for seed in 0..8u64 {
            let inst = gen_uscqp_with(100, 1.0, l, seed).unwrap();
            let built = inst.build().unwrap();
            let f0 = built.problem.g.eval(&built.x0).unwrap();
            let gap0 = f0 - built.f_star.unwrap();

            let stencil = stencil_coefficients(2, 1e-5).unwrap();
            let mut cfg = ApcuConfig::new(1.0, l, 1e-3, stencil.clone());
            cfg.seed = seed + 1000;
            cfg.max_queries = 3_000_000;
            let res = zo_apcu(&built.problem.g, &built.problem.h, &built.x0, &cfg).unwrap();
            let grad = built.problem.g.true_gradient(&res.x).unwrap();
            let q = built.problem.ledger().solver_queries();
            apcu_queries.push(q);
            println!(
                "L={l} seed={seed}: apcu {:?} q={q} g={:.3e}",
                res.status,
                vec_norm(&grad)
            );

            let built2 = inst.build().unwrap();
            let mut bcfg = BaselineConfig::new(
                BaselineMethod::Ars,
                l,
                GradientEstimator::Random {
                    radius: 1e-5,
                    batch: 1,
                    distribution: zoal::estimator::DirectionDistribution::Gaussian,
                },
            );
            bcfg.mu = 1.0;
            bcfg.epsilon = 1e-3;
            bcfg.seed = seed + 2000;
            bcfg.max_queries = 3_000_000;
            bcfg.check_every = 100;
            let ares = zo_ars(&built2.problem.g, &built2.x0, &bcfg).unwrap();
            let agrad = built2.problem.g.true_gradient(&ares.x).unwrap();
            let aq = built2.problem.ledger().solver_queries();
            ars_queries.push(aq);
            println!(
                "L={l} seed={seed}: ars  {:?} q={aq} g={:.3e}",
                ares.status,
                vec_norm(&agrad)
            );
        }
        apcu_queries.sort();
        ars_queries.sort();
        println!(
            "L={l}: apcu median={} ars median={} ratio={:.2}\n",
            apcu_queries[4],
            ars_queries[4],
            ars_queries[4] as f64 / apcu_queries[4] as f64
        );
    }
    let _ = ProblemData::Uscqp;
}
