// Sensor calibration probe, run explicitly with --ignored --nocapture.

use zoal::apcu::ApcuConfig;
use zoal::estimator::stencil_coefficients;
use zoal::ialm::{zo_ialm, CurvatureModel, IalmConfig};
use zoal::problems::gen_sensor;
use zoal::trace::RecordKind;

#[test]
#[ignore]
fn probe_sensor() {
    for (beta0, sigma, rho_c, rho_b) in [(0.3, 3.0, 2.0, 0.5), (1.0, 3.0, 2.0, 0.5), (0.3, 3.0, 5.0, 1.0)] {
        for seed in 0..3u64 {
            let inst = gen_sensor(80, 0.5, seed).unwrap();
            let built = inst.build().unwrap();
            let stencil = stencil_coefficients(2, 1e-6).unwrap();
            let mut inner = ApcuConfig::new(1.0, 1.0, 1.0, stencil);
            inner.seed = seed + 900;
            inner.epoch_length = 80;
            inner.check_at_start = true;
            let mut cfg = IalmConfig::new(beta0, sigma, 0.5, inner);
            cfg.max_outer = 10;
            cfg.max_queries = 3_000_000;
            cfg.ippm_max_outer = 25;
            cfg.curvature = CurvatureModel::Affine {
                rho_const: rho_c,
                rho_beta: rho_b,
                l_const: 50.0,
                l_beta: 0.3,
            };
            let t0 = std::time::Instant::now();
            let res = zo_ialm(&built.problem, &built.x0, &cfg).unwrap();
            let q = built.problem.ledger().solver_queries();
            println!(
                "b0={beta0} rho=({rho_c},{rho_b}) seed={seed}: {:?} outer={} pres={:.3e} dres={:.3e} q={q} wall={:.1}s",
                res.status, res.outer_iterations, res.pres, res.dres,
                t0.elapsed().as_secs_f64()
            );
            let mut prev_q = 0u64;
            let mut inner_steps = 0u64;
            for r in res.trace.records() {
                match r.kind {
                    RecordKind::Inner => inner_steps += 1,
                    RecordKind::Outer => {
                        println!(
                            "  outer {}: beta={:.2e} steps={} dq={} pres={:.2e} dres={:.2e}",
                            r.index, r.beta, inner_steps, r.solver_queries - prev_q, r.pres, r.dres
                        );
                        prev_q = r.solver_queries;
                        inner_steps = 0;
                    }
                    _ => {}
                }
            }
        }
    }
}
