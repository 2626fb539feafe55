//! Prints condition numbers and errors for the bundled Helmholtz problems
//! across scale levels (double precision throughout).

use wavint::fixtures;
use wavint::interval::Boundary;
use wavint::solvers::helmholtz::{
    run_helmholtz, transmission_reference, HelmholtzOptions,
};

fn main() {
    let bd = Boundary::new(fixtures::cdf22()).unwrap();
    for (tag, problem, levels) in [
        ("bursts", fixtures::helmholtz_bursts(), 3u32..8),
        ("blend", fixtures::helmholtz_blend(), 6u32..8),
    ] {
        let u_ref = transmission_reference::<f64>(&problem).unwrap();
        for n in levels {
            let t0 = std::time::Instant::now();
            let enriched =
                run_helmholtz(&bd, &problem, n, &HelmholtzOptions::default(), Some(&u_ref))
                    .unwrap();
            let wav_only = run_helmholtz(
                &bd,
                &problem,
                n,
                &HelmholtzOptions { enrich: false, recombine: None },
                Some(&u_ref),
            )
            .unwrap();
            println!(
                "{tag} N={n} size={} | enriched kappa={:.0} kappa*={:.0} err={:.3}% res={:.1e} | wavelet-only kappa={:.3} err={:.2}% | {:.1?}",
                enriched.size,
                enriched.kappa,
                enriched.kappa_star.unwrap(),
                enriched.rel_error.unwrap() * 100.0,
                enriched.residual,
                wav_only.kappa,
                wav_only.rel_error.unwrap() * 100.0,
                t0.elapsed(),
            );
        }
    }
}
