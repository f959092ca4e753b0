//! Sweep the proximal weight on a tiny instance and watch the divergence
//! interpolate between eps * KL and the exact transport cost.
//!
//! The source is a unit mass at 0; the target splits evenly between 0 and 1
//! under squared-distance cost. As eps grows the intermediate measure drifts
//! from the source-optimal reweighting toward the target itself.
//!
//! Run: cargo run --example interpolation

use proxot::exact_ot::solve_exact_ot;
use proxot::measures::{build_cost, CostSpec, DiscreteMeasure};
use proxot::prox::{solve_proximal, SolverConfig};

fn main() {
    let p = DiscreteMeasure::uniform_1d(&[0.0]).unwrap();
    let q = DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap();
    let cost = build_cost(&p, &q, &CostSpec::power(2.0).unwrap()).unwrap();
    let (plan, _) = solve_exact_ot(p.weights(), q.weights(), &cost).unwrap();

    println!(
        "{:>10} {:>12} {:>12} {:>10} {:>8} {:>8}",
        "eps", "divergence", "div/eps", "gap", "w0", "w1"
    );
    for k in 0..9 {
        let eps = 10f64.powf(-2.0 + 0.5 * k as f64);
        let sol = solve_proximal(p.weights(), q.weights(), &cost, eps, &SolverConfig::default())
            .unwrap();
        println!(
            "{:>10.4} {:>12.8} {:>12.8} {:>10.1e} {:>8.5} {:>8.5}",
            eps,
            sol.divergence,
            sol.divergence / eps,
            sol.gap,
            sol.weights_w[0],
            sol.weights_w[1]
        );
    }
    println!();
    println!("exact transport cost: {:.8}", plan.value());
    println!("div/eps tends to KL = ln 2 = {:.8} as eps shrinks", std::f64::consts::LN_2);
}
