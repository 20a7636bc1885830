use cltlab::bounds::{bound_b, c_delta, dominance_check, rate_fit, BoundInputs};
use cltlab::frechet::{LambdaCheckConfig, SmoothTestFunction};
use cltlab::gaussian::GaussianSampler;
use cltlab::generators::{FiniteMarkov, IidModel, Marginal, ProcessModel};
use cltlab::metrics::Certification;
use proptest::prelude::*;

fn reference_models() -> Vec<ProcessModel> {
    vec![
        ProcessModel::Iid(IidModel::new(Marginal::Rademacher)),
        ProcessModel::Iid(IidModel::new(Marginal::uniform(-1.0, 1.0).unwrap())),
        ProcessModel::Markov(FiniteMarkov::two_state(0.75).unwrap()),
        ProcessModel::Markov(FiniteMarkov::reference_three_state()),
    ]
}

#[test]
fn c_delta_spot_value() {
    assert!((c_delta(1.0, 1.0, 1.0) - 6.0).abs() < 1e-15);
}

#[test]
fn bound_factors_are_monotone() {
    for model in reference_models() {
        for delta in [0.5, 1.0] {
            let inputs = BoundInputs::exact_scalar(&model, delta, 0.0, 24, 32).unwrap();
            let vals: Vec<_> = [1, 2, 5, 10, 50, 100, 1000].iter().map(|&n| bound_b(&inputs, n).unwrap()).collect();
            for w in vals.windows(2) {
                assert!(w[1].prefactor <= w[0].prefactor, "{}", model.tag());
                assert!(w[1].bracket >= w[0].bracket - 1e-12, "{}", model.tag());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_fit_recovers_planted_slopes(slope in -2.0f64..0.5, c in 0.01f64..100.0, noise in prop::collection::vec(-0.01f64..0.01, 7)) {
        let ns: Vec<usize> = (0..7).map(|i| 32usize << i).collect();
        let vals: Vec<f64> = ns.iter().zip(&noise).map(|(&n, e)| c * (n as f64).powf(slope) * e.exp()).collect();
        let fit = rate_fit(&ns, &vals).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 0.01, "{} vs {slope}", fit.slope);
    }
}

#[test]
fn dominance_holds_on_reference_models() {
    let f = SmoothTestFunction::abs_cube();
    let ns = [16, 32, 64, 128, 256];
    for model in reference_models() {
        let inputs = BoundInputs::exact_scalar(&model, 1.0, 0.0, 32, 64).unwrap();
        let g = GaussianSampler::scalar(inputs.eg2).unwrap();
        let cert = Certification::Check(LambdaCheckConfig::new(1.0, 0.0));
        let rep = dominance_check(&inputs, &f, &model, &ns, 5000, &g, 21, &cert).unwrap();
        assert!(rep.pass, "{}: {:?}", model.tag(), rep.rows);
    }
}
