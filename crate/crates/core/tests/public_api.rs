use madm_core::adjust_quadrature::QuadratureRule;
use madm_core::sampler::{chain_rng, run_corrector_chain, CorrectorKernel, CorrectorKind};
use madm_core::targets::{gaussian_oracle, quartic_oracle};
use madm_core::{bound_c, poisson_product_w, ula_propose, BoundStrategy};
use proptest::prelude::*;

proptest! {
    #[test]
    fn poisson_product_stays_in_unit_interval(x in -3.0f64..3.0, h in 0.01f64..1.0, seed in 0u64..1000) {
        let mut oracle = gaussian_oracle(vec![0.0], 1.0).unwrap();
        let mut rng = chain_rng(seed, 0);
        let p = ula_propose(&[x], &mut oracle, 0.0, h, &mut rng).unwrap();
        let spec = BoundStrategy::BoundedDenoiser.resolve(oracle.model(), 0.0).unwrap();
        let c = bound_c(&p, &spec, oracle.model()).unwrap();
        let draw = poisson_product_w(&p, &mut oracle, c, &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&draw.w));
    }
}

fn chain_variance(kind: CorrectorKind, seed: u64) -> f64 {
    let mut oracle = gaussian_oracle(vec![0.0], 1.0).unwrap();
    let kernel = CorrectorKernel::new(kind);
    let mut rng = chain_rng(seed, 0);
    let (mut n, mut sum_sq) = (0.0, 0.0);
    run_corrector_chain(
        &mut oracle,
        &kernel,
        0.0,
        0.1,
        vec![0.0],
        1000,
        100_000,
        &mut rng,
        |x| {
            n += 1.0;
            sum_sq += x[0] * x[0];
        },
    )
    .unwrap();
    sum_sq / n
}

#[test]
fn adjusted_chains_target_the_standard_normal() {
    for kind in [
        CorrectorKind::TwoCoin,
        CorrectorKind::Quadrature(QuadratureRule::SIMPSON13),
    ] {
        let v = chain_variance(kind, 11);
        assert!((v - 1.0).abs() < 0.05, "{kind:?}: variance {v}");
    }
}

#[test]
fn chains_are_reproducible_from_the_seed() {
    let run = |seed| {
        let mut oracle = quartic_oracle(1.0).unwrap();
        let kernel = CorrectorKernel::new(CorrectorKind::Quadrature(QuadratureRule::TRAPEZOID));
        let mut rng = chain_rng(seed, 3);
        run_corrector_chain(
            &mut oracle,
            &kernel,
            0.0,
            0.2,
            vec![0.5],
            0,
            2000,
            &mut rng,
            |_| {},
        )
        .unwrap()
        .final_state
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}
