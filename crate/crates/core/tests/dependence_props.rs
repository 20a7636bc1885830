mod common;

use cltlab::dependence::{
    alpha2_exact, beta2_exact, change_of_variables_sides, exact_coefficient, gamma2_tilde_exact, gamma_tilde_exact,
    mc_coefficient, mixing_integral_tau, tau1_exact, tau2_exact, tau_pair_exact, CoefficientKind, NonnegLaw,
};
use cltlab::generators::FiniteMarkov;
use common::law;
use proptest::prelude::*;

/// A random centered chain on 2..=4 states with strictly positive rows.
fn chain() -> impl Strategy<Value = FiniteMarkov> {
    (2usize..=4)
        .prop_flat_map(|d| {
            (
                prop::collection::btree_set(-50i32..50, d),
                prop::collection::vec(prop::collection::vec(0.05f64..1.0, d), d),
            )
        })
        .prop_map(|(states, rows)| {
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|r| {
                    let t: f64 = r.iter().sum();
                    r.iter().map(|x| x / t).collect()
                })
                .collect();
            let states = states.into_iter().map(|s| s as f64 / 10.0).collect();
            FiniteMarkov::new(states, rows).unwrap().centered()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orderings_and_signs(c in chain(), k in 1usize..5) {
        let t1 = tau1_exact(&c, k).unwrap();
        let t2 = tau2_exact(&c, k, 16).unwrap().value;
        prop_assert!(t1 >= 0.0 && t1 <= t2 + 1e-12);
        let a = alpha2_exact(&c, k, 16).unwrap().value;
        let b = beta2_exact(&c, k, 16).unwrap().value;
        prop_assert!(a >= -1e-15 && a <= b + 1e-12, "alpha {a} beta {b}");
        for kind in CoefficientKind::ALL {
            prop_assert!(exact_coefficient(&c, kind, k, 0.5, 16).unwrap().value >= -1e-12);
        }
    }

    #[test]
    fn tau_controls_gamma(c in chain(), k in 1usize..5, delta in prop::sample::select(vec![0.25, 0.5, 1.0])) {
        let bound = |c: &FiniteMarkov, d: f64| {
            let law = NonnegLaw::abs_of(c.states(), c.stationary()).unwrap();
            mixing_integral_tau(&law, tau2_exact(c, k, 16).unwrap().value, d).unwrap()
        };
        let g = gamma_tilde_exact(&c, k).unwrap();
        let g2 = gamma2_tilde_exact(&c, k, delta, 16).unwrap().value;
        // γ̃ carries no |X|^δ weight, so its own bound uses Q¹.
        prop_assert!(g <= bound(&c, 0.0) * (1.0 + 1e-10) + 1e-12, "gamma {g}");
        prop_assert!(g2 <= bound(&c, delta) * (1.0 + 1e-10) + 1e-12, "gamma2 {g2}");
        // With |X₀| ≥ 1 the single Q^{1+δ} form dominates both.
        let m = c.states().iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(m > 1e-3);
        let rows: Vec<Vec<f64>> = (0..c.dim()).map(|i| (0..c.dim()).map(|j| c.transition()[(i, j)]).collect()).collect();
        let scaled = FiniteMarkov::with_stationary(
            c.states().iter().map(|s| s / m).collect(),
            rows,
            c.stationary().to_vec(),
        )
        .unwrap();
        let lhs = gamma_tilde_exact(&scaled, k).unwrap().max(gamma2_tilde_exact(&scaled, k, delta, 16).unwrap().value);
        prop_assert!(lhs <= bound(&scaled, delta) * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn independent_chains_have_zero_coefficients((atoms, probs) in law(5), k in 1usize..4) {
        prop_assume!(atoms.len() >= 2);
        let c = FiniteMarkov::iid(atoms, probs).unwrap().centered();
        for kind in CoefficientKind::ALL {
            let v = exact_coefficient(&c, kind, k, 1.0, 8).unwrap().value;
            prop_assert!(v.abs() <= 1e-12, "{} = {v}", kind.name());
        }
    }

    #[test]
    fn change_of_variables_inequality((atoms, probs) in law(6), beta in 0.0f64..1.0, delta in 0.05f64..1.0) {
        let abs: Vec<f64> = atoms.iter().map(|a| a.abs()).collect();
        let law = NonnegLaw::abs_of(&abs, &probs).unwrap();
        let (lhs, rhs) = change_of_variables_sides(&law, beta, delta).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14, "{lhs} > {rhs}");
    }

    #[test]
    fn primitive_inverts_g((atoms, probs) in law(6), frac in 0.0f64..=1.0) {
        let abs: Vec<f64> = atoms.iter().map(|a| a.abs() + 0.01).collect();
        let law = NonnegLaw::abs_of(&abs, &probs).unwrap();
        let y = frac * law.mean();
        let x = law.g_inverse(y).unwrap();
        prop_assert!((law.primitive(x) - y).abs() <= 1e-12 * law.mean().max(1.0));
    }
}

/// W₁ between two laws on `{0,1}²` under Hamming distance times `unit`,
/// by exhausting integer-valued 1-Lipschitz potentials (the dual LP of a
/// graph metric has integral optimal vertices).
fn hamming_w1(p: &[f64; 4], q: &[f64; 4], unit: f64) -> f64 {
    let ham = |u: usize, v: usize| ((u ^ v) & 1) + ((u ^ v) >> 1);
    let mut best = f64::NEG_INFINITY;
    for f1 in -2i32..=2 {
        for f2 in -2i32..=2 {
            for f3 in -2i32..=2 {
                let f = [0, f1, f2, f3];
                let lip = (0..4).all(|u| (0..4).all(|v| (f[u] - f[v]).unsigned_abs() as usize <= ham(u, v)));
                if lip {
                    let val: f64 = (0..4).map(|u| f[u] as f64 * (p[u] - q[u])).sum();
                    best = best.max(val);
                }
            }
        }
    }
    best * unit
}

fn pow2(m: [[f64; 2]; 2], k: usize) -> [[f64; 2]; 2] {
    let mut r = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..k {
        let mut n = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                n[i][j] = r[i][0] * m[0][j] + r[i][1] * m[1][j];
            }
        }
        r = n;
    }
    r
}

#[test]
fn tau_pair_matches_brute_force_on_two_state_chains() {
    for &(a, b) in &[(0.75, 0.75), (0.9, 0.6), (0.3, 0.8), (0.55, 0.2)] {
        let m = [[a, 1.0 - a], [1.0 - b, b]];
        let chain = FiniteMarkov::new(vec![-1.0, 2.0], vec![m[0].to_vec(), m[1].to_vec()]).unwrap().centered();
        let pi0 = (1.0 - b) / (2.0 - a - b);
        let pi = [pi0, 1.0 - pi0];
        // Cost ½(|Δs_a| + |Δs_b|) with state gap 3 is 1.5 per differing coordinate.
        let unit = 1.5;
        for k in 1..=4 {
            for l in 0..=3 {
                let (pk, pl) = (pow2(m, k), pow2(m, l));
                let stat: [f64; 4] = std::array::from_fn(|u| pi[u >> 1] * pl[u >> 1][u & 1]);
                let mut expect = 0.0;
                for j in 0..2 {
                    let cond: [f64; 4] = std::array::from_fn(|u| pk[j][u >> 1] * pl[u >> 1][u & 1]);
                    expect += pi[j] * hamming_w1(&cond, &stat, unit);
                }
                expect *= 0.5;
                let got = tau_pair_exact(&chain, k, l).unwrap();
                assert!((got - expect).abs() < 1e-12, "a={a} b={b} k={k} l={l}: {got} vs {expect}");
            }
        }
    }
}

#[test]
fn exact_values_agree_with_simulation() {
    let chains = [FiniteMarkov::two_state(0.75).unwrap(), FiniteMarkov::reference_three_state()];
    for (ci, chain) in chains.iter().enumerate() {
        for kind in CoefficientKind::ALL {
            for k in 1..=2 {
                let at = exact_coefficient(chain, kind, k, 1.0, 32).unwrap();
                let mc = mc_coefficient(chain, kind, k, 1.0, &at, 200_000, (ci * 100 + k) as u64).unwrap();
                let tol = 4.0 * mc.stderr + 1e-3 * at.value.abs().max(1e-3);
                assert!(
                    (mc.value - at.value).abs() <= tol,
                    "chain {ci} {} k={k}: mc {} ± {} vs exact {}",
                    kind.name(),
                    mc.value,
                    mc.stderr,
                    at.value
                );
            }
        }
    }
}
