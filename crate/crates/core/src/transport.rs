//! Exact discrete transportation problems by successive shortest paths.
//!
//! Sizes here are small (pair laws on d² atoms, oracle instances up to 64
//! atoms), so the residual graph is kept dense and shortest paths use
//! Bellman–Ford over the bipartite structure.

use crate::error::{invalid, Error, Result};

const MODULE: &str = "transport";

/// An optimal plan together with its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    /// `plan[i][j]` is the mass moved from supply `i` to demand `j`.
    pub plan: Vec<Vec<f64>>,
}

/// Minimize `Σ c_ij x_ij` subject to row sums `supply` and column sums
/// `demand`, `x ≥ 0`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<TransportPlan> {
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Err(invalid(MODULE, "empty marginal"));
    }
    if cost.len() != n || cost.iter().any(|r| r.len() != m) {
        return Err(invalid(MODULE, format!("cost matrix must be {n}x{m}")));
    }
    if supply.iter().chain(demand).any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(invalid(MODULE, "marginals must be finite and nonnegative"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(invalid(MODULE, "cost matrix has non-finite entries"));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    let scale = total_s.max(total_d).max(1.0);
    if (total_s - total_d).abs() > 1e-12 * scale {
        return Err(invalid(
            MODULE,
            format!("marginal mismatch: supply {total_s} vs demand {total_d}"),
        ));
    }
    let eps = 1e-15 * scale;
    // Relaxations below this are rounding noise; accepting them can close
    // zero-cost residual cycles in the predecessor tree.
    let cost_scale = cost.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs()));
    let dist_tol = 1e-12 * (1.0 + cost_scale);

    let mut res_s: Vec<f64> = supply.to_vec();
    let mut res_d: Vec<f64> = demand.to_vec();
    let mut x = vec![vec![0.0; m]; n];
    let max_rounds = 4 * (n * m + n + m) + 16;

    for _ in 0..max_rounds {
        let remaining: f64 = res_d.iter().sum::<f64>().min(res_s.iter().sum::<f64>());
        if remaining <= 1e-14 * scale || res_s.iter().all(|s| *s <= eps) || res_d.iter().all(|d| *d <= eps) {
            break;
        }
        // Distances from the virtual source; sources with spare supply start at 0.
        let mut dist_s: Vec<f64> = res_s.iter().map(|s| if *s > eps { 0.0 } else { f64::INFINITY }).collect();
        let mut dist_d = vec![f64::INFINITY; m];
        let mut pred_s: Vec<Option<usize>> = vec![None; n];
        let mut pred_d: Vec<usize> = vec![usize::MAX; m];
        for _ in 0..(n + m + 1) {
            let mut changed = false;
            for i in 0..n {
                if dist_s[i].is_infinite() {
                    continue;
                }
                for j in 0..m {
                    let cand = dist_s[i] + cost[i][j];
                    if cand < dist_d[j] - dist_tol {
                        dist_d[j] = cand;
                        pred_d[j] = i;
                        changed = true;
                    }
                }
            }
            for j in 0..m {
                if dist_d[j].is_infinite() {
                    continue;
                }
                for i in 0..n {
                    if x[i][j] > eps {
                        let cand = dist_d[j] - cost[i][j];
                        if cand < dist_s[i] - dist_tol {
                            dist_s[i] = cand;
                            pred_s[i] = Some(j);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let target = (0..m)
            .filter(|&j| res_d[j] > eps && dist_d[j].is_finite())
            .min_by(|&a, &b| dist_d[a].total_cmp(&dist_d[b]));
        let Some(mut j) = target else {
            return Err(Error::Invariant {
                module: MODULE,
                msg: "no augmenting path although mass remains".into(),
            });
        };
        // Walk back to find the bottleneck.
        let mut amount = res_d[j];
        let mut path: Vec<(usize, usize, bool)> = Vec::new();
        let mut guard = 0;
        loop {
            let i = pred_d[j];
            path.push((i, j, true));
            match pred_s[i] {
                Some(j_prev) => {
                    amount = amount.min(x[i][j_prev]);
                    path.push((i, j_prev, false));
                    j = j_prev;
                }
                None => {
                    amount = amount.min(res_s[i]);
                    break;
                }
            }
            guard += 1;
            if guard > n + m + 1 {
                return Err(Error::Invariant {
                    module: MODULE,
                    msg: "cycle in shortest-path tree".into(),
                });
            }
        }
        let (first_i, _, _) = *path.last().expect("path nonempty");
        let last_j = path[0].1;
        res_d[last_j] -= amount;
        res_s[first_i] -= amount;
        for (i, jj, forward) in path {
            if forward {
                x[i][jj] += amount;
            } else {
                x[i][jj] -= amount;
                if x[i][jj] < eps {
                    x[i][jj] = 0.0;
                }
            }
        }
    }
    let cost_total = x
        .iter()
        .zip(cost)
        .map(|(row, c)| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    Ok(TransportPlan {
        cost: cost_total,
        plan: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_prefers_diagonal() {
        let c = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let t = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap();
        assert_relative_eq!(t.cost, 0.0);
        let t = solve_transport(&[0.7, 0.3], &[0.4, 0.6], &c).unwrap();
        assert_relative_eq!(t.cost, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn needs_rerouting() {
        // Greedy cheapest-first would pay 1 + 100; optimum is 2 + 2.
        let c = vec![vec![1.0, 2.0], vec![2.0, 100.0]];
        let t = solve_transport(&[1.0, 1.0], &[1.0, 1.0], &c).unwrap();
        assert_relative_eq!(t.cost, 4.0, epsilon = 1e-12);
        for r in &t.plan {
            assert_relative_eq!(r.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatch_rejected() {
        let c = vec![vec![0.0]];
        assert!(solve_transport(&[1.0], &[0.5], &c).is_err());
    }
}
