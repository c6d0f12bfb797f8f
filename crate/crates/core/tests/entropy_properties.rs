use etoff::decision::{
    bounded_entropy, error_of_rule, fano_upper_bounds, lower_bounds, standard_decision,
    DecisionRule,
};
use etoff::entropy::{
    cond_renyi, cond_shannon, cond_tsallis_first, cond_tsallis_second, renyi_entropy,
    shannon_entropy, tsallis_entropy, Family, JointDistribution, ProbVector,
};
use proptest::prelude::*;

const GRID: [f64; 6] = [0.3, 0.5, 1.0, 1.5, 2.0, 5.0];

fn normalised(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        let n = raw.len() as f64;
        return vec![1.0 / n; raw.len()];
    }
    raw.into_iter().map(|v| v / total).collect()
}

/// Weights with a fair share of exact zeros.
fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64]
}

fn prob_vector(max_len: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(weight(), 1..=max_len)
        .prop_map(|v| ProbVector::new(normalised(v)).unwrap())
}

fn joint(max_x: usize, max_y: usize) -> impl Strategy<Value = JointDistribution> {
    (1..=max_x, 1..=max_y).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(weight(), nx * ny)
            .prop_map(move |v| JointDistribution::new(nx, ny, normalised(v)).unwrap())
    })
}

/// `p(x, y, z)` flattened row-major, with its shape.
fn triple() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>)> {
    (1..=3usize, 1..=3usize, 1..=3usize).prop_flat_map(|(nx, ny, nz)| {
        prop::collection::vec(weight(), nx * ny * nz).prop_map(move |v| (nx, ny, nz, normalised(v)))
    })
}

fn marginalise_z(nx: usize, ny: usize, nz: usize, data: &[f64]) -> JointDistribution {
    let mut out = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            out[x * ny + y] = (0..nz).map(|z| data[(x * ny + y) * nz + z]).sum();
        }
    }
    JointDistribution::new(nx, ny, out).unwrap()
}

// Plain-sum Tsallis entropy for the chain-rule check.
fn tsallis_direct(p: &[f64], a: f64) -> f64 {
    if (a - 1.0).abs() < 1e-12 {
        return -p
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| v * v.ln())
            .sum::<f64>();
    }
    (p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v.powf(a))
        .sum::<f64>()
        - 1.0)
        / (1.0 - a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn renyi_is_non_increasing_in_order(p in prob_vector(6)) {
        let vals: Vec<f64> = GRID.iter().map(|&a| renyi_entropy(&p, a).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{vals:?}");
        }
    }

    #[test]
    fn conditional_renyi_is_non_increasing_in_order(j in joint(4, 4)) {
        let vals: Vec<f64> = GRID.iter().map(|&a| cond_renyi(&j, a).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{vals:?}");
        }
    }

    #[test]
    fn conditioning_on_more_lowers_tsallis((nx, ny, nz, data) in triple()) {
        let fine = JointDistribution::from_triple(nx, ny, nz, data.clone()).unwrap();
        let coarse = marginalise_z(nx, ny, nz, &data);
        for a in GRID {
            let f = cond_tsallis_second(&fine, a).unwrap();
            let c = cond_tsallis_second(&coarse, a).unwrap();
            prop_assert!(f <= c + 1e-10, "alpha {a}: {f} > {c}");
        }
    }

    #[test]
    fn conditioning_on_more_lowers_renyi((nx, ny, nz, data) in triple()) {
        let fine = JointDistribution::from_triple(nx, ny, nz, data.clone()).unwrap();
        let coarse = marginalise_z(nx, ny, nz, &data);
        let top = if nx == 2 { 2.0 } else { 1.0 };
        for a in GRID.into_iter().chain([0.1, 0.8]).filter(|&a| a <= top) {
            let f = cond_renyi(&fine, a).unwrap();
            let c = cond_renyi(&coarse, a).unwrap();
            prop_assert!(f <= c + 1e-10, "alpha {a}: {f} > {c}");
        }
    }

    #[test]
    fn first_tsallis_form_obeys_chain_rule(j in joint(4, 4)) {
        for a in GRID {
            let pair = tsallis_direct(j.data(), a);
            let y = tsallis_direct(&j.marginal_y(), a);
            let cond = cond_tsallis_first(&j, a).unwrap();
            prop_assert!((pair - (cond + y)).abs() <= 1e-10, "alpha {a}: {pair} vs {}", cond + y);
        }
    }

    #[test]
    fn merging_columns_never_lowers_entropy(j in joint(4, 4), pick in any::<(usize, usize)>()) {
        prop_assume!(j.ny() >= 2);
        let (a, b) = (pick.0 % j.ny(), pick.1 % j.ny());
        prop_assume!(a != b);
        // merge column b into a, then relabel to close the gap
        let g: Vec<usize> = (0..j.ny())
            .map(|y| if y == b { a } else { y })
            .map(|y| if y > b { y - 1 } else { y })
            .collect();
        let merged = j.coarse_grain(&g, j.ny() - 1).unwrap();
        prop_assert!(cond_shannon(&j) <= cond_shannon(&merged) + 1e-10);
        for al in GRID {
            prop_assert!(cond_tsallis_second(&j, al).unwrap() <= cond_tsallis_second(&merged, al).unwrap() + 1e-10);
            if al <= 1.0 {
                prop_assert!(cond_renyi(&j, al).unwrap() <= cond_renyi(&merged, al).unwrap() + 1e-10);
            }
        }
    }

    #[test]
    fn order_one_limits(p in prob_vector(6), j in joint(4, 4)) {
        let h = shannon_entropy(&p);
        let hc = cond_shannon(&j);
        for a in [1.0 - 1e-8, 1.0 + 1e-8] {
            prop_assert!((renyi_entropy(&p, a).unwrap() - h).abs() <= 1e-5);
            prop_assert!((tsallis_entropy(&p, a).unwrap() - h).abs() <= 1e-5);
            prop_assert!((cond_renyi(&j, a).unwrap() - hc).abs() <= 1e-5);
            prop_assert!((cond_tsallis_first(&j, a).unwrap() - hc).abs() <= 1e-5);
            prop_assert!((cond_tsallis_second(&j, a).unwrap() - hc).abs() <= 1e-5);
        }
    }

    #[test]
    fn error_bounds_sandwich_the_entropy(j in joint(4, 4)) {
        let rule = standard_decision(&j).rule;
        for a in [0.3, 0.7, 1.0, 1.5, 2.0, 3.0] {
            for fam in [Family::Tsallis, Family::Renyi] {
                let h = bounded_entropy(&j, a, fam).unwrap();
                for lb in lower_bounds(&j, a, fam) {
                    prop_assert!(lb.value <= h + 1e-9, "{fam:?} {a}: {lb:?} > {h}");
                }
                for ub in fano_upper_bounds(&j, a, fam, &rule).unwrap() {
                    prop_assert!(h <= ub.value + 1e-9, "{fam:?} {a}: {ub:?} < {h}");
                }
            }
        }
    }

    #[test]
    fn standard_decision_is_optimal(j in joint(3, 3)) {
        let best = standard_decision(&j).p_error;
        for rule in DecisionRule::enumerate(j.nx(), j.ny()) {
            prop_assert!(best <= error_of_rule(&j, &rule).unwrap().p_error + 1e-12);
        }
    }

    #[test]
    fn vanishing_error_forces_small_upper_bounds(j in joint(4, 3)) {
        // keep only the MAP entry of each column: zero error by construction
        let rule = standard_decision(&j).rule;
        let data: Vec<f64> = (0..j.nx())
            .flat_map(|x| (0..j.ny()).map(move |y| (x, y)))
            .map(|(x, y)| if rule.guess[y] == x { j.column(y).iter().sum() } else { 0.0 })
            .collect();
        let clean = JointDistribution::new(j.nx(), j.ny(), data).unwrap();
        prop_assert!(standard_decision(&clean).p_error < 1e-9);
        for a in [0.3, 1.0, 2.0] {
            for fam in [Family::Tsallis, Family::Renyi] {
                let rule = standard_decision(&clean).rule;
                for ub in fano_upper_bounds(&clean, a, fam, &rule).unwrap() {
                    prop_assert!(ub.value < 1e-6);
                }
            }
        }
    }
}
