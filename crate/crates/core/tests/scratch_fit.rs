use pgarch::gqmle::*;
use pgarch::optim::OptimOptions;
use pgarch::*;

#[test]
#[ignore]
fn debug_fit() {
    let p_true = ModelParams::new(0.1, 0.05, 0.15, 0.9, 2.0).unwrap();
    let series = simulate(&p_true, &InnovationDist::StandardNormal, 20_000, 500, 42).unwrap();
    let fit = fit_gqmle(&series, 2.0, 2.0, &OptimOptions::default()).unwrap();
    println!("theta_hat = {:?}", fit.params.theta());
    println!("converged = {}, iters = {}", fit.converged, fit.iterations);
    println!("objective = {}, starts = {:?}", fit.objective, fit.start_objectives);
    let avar = gqmle_avar(&fit, &series).unwrap();
    for k in 0..4 {
        println!("comp {k}: err {:+.6}  se {:.6}", fit.params.theta()[k] - p_true.theta()[k], avar.cov_theta[(k,k)].sqrt());
    }
    println!("cond_j = {:.3e}", fit.cond_j);

    let p_iid = ModelParams::new(1.0, 0.0, 0.0, 0.0, 2.0).unwrap();
    let s2 = simulate(&p_iid, &InnovationDist::StandardNormal, 20_000, 100, 9).unwrap();
    let f2 = fit_gqmle(&s2, 2.0, 2.0, &OptimOptions::default()).unwrap();
    println!("iid fit = {:?} converged={} obj={} starts={:?}", f2.params.theta(), f2.converged, f2.objective, f2.start_objectives);
}
