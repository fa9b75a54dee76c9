//! Earth Mover's Distance between equal-size clouds.
//!
//! `emd_exact` solves the assignment problem with the Hungarian algorithm
//! (shortest augmenting paths, O(n³)) and returns the optimal bijection as a
//! witness. `emd_approx` runs a forward auction with epsilon scaling; its
//! result is a feasible matching whose mean cost exceeds the optimum by at
//! most `epsilon`.
//!
//! Costs are plain Euclidean distances and the returned value is the *mean*
//! over matched pairs, so values are comparable across cloud sizes.

use crate::geometry::PointCloud;

use super::MetricError;

/// Largest cloud size accepted by the exact solver; larger instances must go
/// through [`emd_approx`].
pub const EXACT_EMD_CAP: usize = 512;

/// Optimal matching witness: `permutation[i]` is the target index assigned
/// to source point `i`, and `total_cost` is the sum of matched Euclidean
/// distances.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentPlan {
    pub permutation: Vec<usize>,
    pub total_cost: f64,
}

impl AssignmentPlan {
    /// Recompute the matched-pair cost sum from coordinates.
    pub fn cost_against(&self, source: &PointCloud, target: &PointCloud) -> f64 {
        self.permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| source[i].dist(target[j]))
            .sum()
    }
}

fn check_sizes(p: &PointCloud, q: &PointCloud) -> Result<usize, MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::SizeMismatch {
            n: p.len(),
            m: q.len(),
        });
    }
    Ok(p.len())
}

/// Minimum mean matched-pair Euclidean distance over all bijections,
/// with the optimal bijection as witness.
pub fn emd_exact(p: &PointCloud, q: &PointCloud) -> Result<(f64, AssignmentPlan), MetricError> {
    let n = check_sizes(p, q)?;
    if n > EXACT_EMD_CAP {
        return Err(MetricError::TooLarge {
            n,
            cap: EXACT_EMD_CAP,
        });
    }

    let mut cost = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = p[i].dist(q[j]);
        }
    }

    let permutation = hungarian(n, &cost);
    let mut plan = AssignmentPlan {
        permutation,
        total_cost: 0.0,
    };
    plan.total_cost = plan.cost_against(p, q);
    let mean = plan.total_cost / n as f64;
    Ok((mean, plan))
}

/// Hungarian algorithm via shortest augmenting paths over a dense row-major
/// cost matrix. Returns, for each row `i`, the column assigned to it.
fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    // Potentials for rows/columns; column n is a virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // row_of[j] = row currently assigned to column j (n = unassigned marker).
    let mut row_of = vec![n; n + 1];
    let mut prev_col = vec![0usize; n + 1];

    for i in 0..n {
        row_of[n] = i;
        let mut j_cur = n;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];

        loop {
            used[j_cur] = true;
            let i_cur = row_of[j_cur];
            let mut delta = f64::INFINITY;
            let mut j_next = n;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i_cur * n + j] - u[i_cur] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    prev_col[j] = j_cur;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j_next = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j_cur = j_next;
            if row_of[j_cur] == n {
                break;
            }
        }

        // Augment along the found path.
        while j_cur != n {
            let j_prev = prev_col[j_cur];
            row_of[j_cur] = row_of[j_prev];
            j_cur = j_prev;
        }
    }

    let mut assignment = vec![n; n];
    for j in 0..n {
        assignment[row_of[j]] = j;
    }
    assignment
}

/// Auction-based approximation of [`emd_exact`].
///
/// The returned mean cost lies within `epsilon` above the exact optimum
/// (epsilon-complementary slackness gives a total-cost gap of at most
/// `n * eps_final`, and the final round runs at `eps_final = epsilon`).
pub fn emd_approx(p: &PointCloud, q: &PointCloud, epsilon: f64) -> Result<f64, MetricError> {
    let n = check_sizes(p, q)?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(MetricError::NonPositiveEpsilon(epsilon));
    }
    if n == 1 {
        return Ok(p[0].dist(q[0]));
    }

    // Dense cost matrix, row-major over (person, object).
    let mut cost = vec![0.0f64; n * n];
    let mut cost_max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let c = p[i].dist(q[j]);
            cost[i * n + j] = c;
            if c > cost_max {
                cost_max = c;
            }
        }
    }

    let mut prices = vec![0.0f64; n];
    let mut assigned_to = vec![usize::MAX; n]; // person -> object
    let mut owner = vec![usize::MAX; n]; // object -> person

    // Epsilon scaling: start coarse, divide until the requested accuracy.
    let scale_div = 8.0;
    let mut eps = (cost_max / 4.0).max(epsilon);
    let mut bids: u64 = 0;
    let bid_cap: u64 = 200_000_000 / n.max(1) as u64 + 1_000_000;

    loop {
        assigned_to.fill(usize::MAX);
        owner.fill(usize::MAX);
        let mut pending: Vec<usize> = (0..n).rev().collect();

        while let Some(person) = pending.pop() {
            bids += 1;
            if bids > bid_cap {
                return Err(MetricError::NonConvergence { iterations: bids });
            }
            let row = &cost[person * n..(person + 1) * n];
            // Best and second-best object by cost + price.
            let mut best_j = 0usize;
            let mut best_v = f64::INFINITY;
            let mut second_v = f64::INFINITY;
            for (j, (&c, &pr)) in row.iter().zip(prices.iter()).enumerate() {
                let v = c + pr;
                if v < best_v {
                    second_v = best_v;
                    best_v = v;
                    best_j = j;
                } else if v < second_v {
                    second_v = v;
                }
            }
            if !second_v.is_finite() {
                second_v = best_v;
            }
            prices[best_j] += second_v - best_v + eps;
            if owner[best_j] != usize::MAX {
                let displaced = owner[best_j];
                assigned_to[displaced] = usize::MAX;
                pending.push(displaced);
            }
            owner[best_j] = person;
            assigned_to[person] = best_j;
        }

        if eps <= epsilon {
            break;
        }
        eps = (eps / scale_div).max(epsilon);
    }

    let total: f64 = assigned_to
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(points: Vec<Point3>) -> PointCloud {
        PointCloud::new(points).unwrap()
    }

    fn random_cloud(n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        cloud(
            (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random::<f64>(),
                        rng.random::<f64>(),
                        rng.random::<f64>(),
                    )
                })
                .collect(),
        )
    }

    /// Exhaustive minimum over all bijections (test oracle, n <= 8).
    fn brute_force_emd(p: &PointCloud, q: &PointCloud) -> f64 {
        let n = p.len();
        let mut indices: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut indices, 0, &mut |perm| {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| p[i].dist(q[j])).sum();
            if total < best {
                best = total;
            }
        });
        best / n as f64
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn identical_clouds_have_zero_emd_and_identity_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_cloud(16, &mut rng);
        let (value, plan) = emd_exact(&p, &p).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(plan.permutation, (0..16).collect::<Vec<_>>());
        assert_eq!(plan.total_cost, 0.0);
    }

    #[test]
    fn multiset_equal_clouds_match_with_swap() {
        let p = cloud(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)]);
        let q = cloud(vec![Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 0.0, 0.0)]);
        let (value, plan) = emd_exact(&p, &q).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(plan.permutation, vec![1, 0]);
    }

    #[test]
    fn exact_matches_brute_force_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=8 {
            for _ in 0..8 {
                let p = random_cloud(n, &mut rng);
                let q = random_cloud(n, &mut rng);
                let (value, plan) = emd_exact(&p, &q).unwrap();
                let expect = brute_force_emd(&p, &q);
                assert!((value - expect).abs() < 1e-12, "n={n}: {value} vs {expect}");
                // The witness must be a bijection whose cost matches.
                let mut seen = vec![false; n];
                for &j in &plan.permutation {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
                assert!((plan.cost_against(&p, &q) - plan.total_cost).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_cloud(4, &mut rng);
        let q = random_cloud(5, &mut rng);
        assert!(matches!(
            emd_exact(&p, &q),
            Err(MetricError::SizeMismatch { n: 4, m: 5 })
        ));
        assert!(matches!(
            emd_approx(&p, &q, 1e-3),
            Err(MetricError::SizeMismatch { n: 4, m: 5 })
        ));
    }

    #[test]
    fn oversized_exact_instances_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_cloud(EXACT_EMD_CAP + 1, &mut rng);
        let q = random_cloud(EXACT_EMD_CAP + 1, &mut rng);
        assert!(matches!(
            emd_exact(&p, &q),
            Err(MetricError::TooLarge { .. })
        ));
    }

    #[test]
    fn approx_is_exact_plus_bounded_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &eps in &[1e-1, 1e-2, 1e-3] {
            for _ in 0..5 {
                let p = random_cloud(32, &mut rng);
                let q = random_cloud(32, &mut rng);
                let (exact, _) = emd_exact(&p, &q).unwrap();
                let approx = emd_approx(&p, &q, eps).unwrap();
                assert!(approx >= exact - 1e-9, "approx below optimum");
                assert!(
                    approx - exact <= eps + 1e-9,
                    "gap {} exceeds eps {eps}",
                    approx - exact
                );
            }
        }
    }

    #[test]
    fn approx_of_identical_clouds_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_cloud(64, &mut rng);
        let value = emd_approx(&p, &p, 1e-2).unwrap();
        assert!(value <= 1e-2);
        // With matching supports the auction should land on the zero matching.
        assert_eq!(value, 0.0);
    }

    #[test]
    fn approx_rejects_nonpositive_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_cloud(4, &mut rng);
        assert!(matches!(
            emd_approx(&p, &p, 0.0),
            Err(MetricError::NonPositiveEpsilon(_))
        ));
    }

    #[test]
    fn single_point_clouds() {
        let p = cloud(vec![Point3::new(0.0, 0.0, 0.0)]);
        let q = cloud(vec![Point3::new(3.0, 4.0, 0.0)]);
        let (value, plan) = emd_exact(&p, &q).unwrap();
        assert_eq!(value, 5.0);
        assert_eq!(plan.permutation, vec![0]);
        assert_eq!(emd_approx(&p, &q, 1e-6).unwrap(), 5.0);
    }
}
