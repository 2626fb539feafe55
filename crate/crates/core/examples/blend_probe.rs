//! Diagnostics for the blended-source Helmholtz problem: checks the
//! transmission reference against the equation itself, measures the
//! self-convergence of the enriched solutions, and compares partitions
//! that do or do not align with the source breakpoints.

use wavint::fixtures;
use wavint::interval::Boundary;
use wavint::rat::q;
use wavint::solvers::helmholtz::{
    ode_max_residual, relative_l2_error, run_helmholtz, transmission_reference,
    HelmholtzOptions,
};

fn main() {
    let bd = Boundary::new(fixtures::cdf22()).unwrap();
    let problem = fixtures::helmholtz_blend();
    let k = 200000.0f64;
    let f = problem.source.to_osc::<f64>();

    let u_ref = transmission_reference::<f64>(&problem).unwrap();
    let res = ode_max_residual(&u_ref, &k, &f, 4000);
    let v0 = u_ref.eval(&0.0);
    let du = u_ref.derivative();
    let imp = du.eval(&1.0) - wavint::scalar::Cx::new(0.0, k) * u_ref.eval(&1.0);
    println!(
        "reference: max ODE residual {:.3e} (|f| ~ 6.4e6), u(0) = {:.3e}, impedance defect {:.3e}",
        res,
        v0.abs(),
        imp.abs()
    );
    println!("reference norm: {:.6e}", u_ref.norm_l2_sq().sqrt());

    // Self-convergence: distance between successive enriched solutions.
    let opts = HelmholtzOptions::default();
    let mut sols = Vec::new();
    for n in [6u32, 7, 8, 10] {
        let r = run_helmholtz(&bd, &problem, n, &opts, Some(&u_ref)).unwrap();
        println!(
            "N={n}: err vs reference {:.4}%  residual {:.1e}",
            r.rel_error.unwrap() * 100.0,
            r.residual
        );
        sols.push((n, r.solution));
    }
    let (_, u10) = sols.last().unwrap().clone();
    for (n, u) in &sols[..sols.len() - 1] {
        println!(
            "self-convergence: |u_{n} - u_10| / |u_10| = {:.4}%",
            relative_l2_error(u, &u10) * 100.0
        );
    }

    // Same source, but with the partition aligned to the source breakpoints.
    let mut aligned = problem.clone();
    aligned.partition = vec![q(0, 1), q(1, 3), q(3, 5), q(5, 7), q(1, 1)];
    for n in [6u32, 7] {
        let r = run_helmholtz(&bd, &aligned, n, &opts, Some(&u_ref)).unwrap();
        println!(
            "aligned partition N={n}: err vs reference {:.4}%  kappa {:.0}  kappa* {:.0}",
            r.rel_error.unwrap() * 100.0,
            r.kappa,
            r.kappa_star.unwrap()
        );
    }

    // L2 best approximation from each enriched span (Gram/normal equations):
    // a floor below which no solve from that span can go.
    for (tag, prob) in [("stated", &problem), ("aligned", &aligned)] {
        for n in [6u32, 7] {
            let (trial, _) =
                wavint::solvers::helmholtz::helmholtz_basis(&bd, prob, n, &opts).unwrap();
            let m = trial.len();
            let mut gram = wavint::solvers::CxMat::<f64>::zeros(m, m);
            let mut rhs = Vec::with_capacity(m);
            for l in 0..m {
                for c in 0..m {
                    gram[(l, c)] = trial[c].f.hermitian(&trial[l].f);
                }
                rhs.push(u_ref.hermitian(&trial[l].f));
            }
            let coef = wavint::solvers::linear::solve(&gram, &rhs).unwrap();
            let mut v = wavint::oscpiece::OscFn::zero();
            for (c, t) in coef.iter().zip(&trial) {
                v = v.add(&t.f.scale(c));
            }
            println!(
                "{tag} partition N={n}: best-approximation error {:.4}%",
                relative_l2_error(&v, &u_ref) * 100.0
            );
        }
    }
}
