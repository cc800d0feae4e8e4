use super::TriggerProfile;
use crate::error::{Error, Result};
use crate::game_tree::{GameTree, SequencePolicy};
use crate::scalar::Real;

/// Solves `(D - Q) x = f` where `Q ≥ 0` holds the off-diagonal magnitudes (its diagonal is
/// ignored) and every column of `D - Q` sums to `margin > 0`. Elimination in the
/// Grassmann-Taksar-Heyman style: pivots are rebuilt from column margins and off-diagonal
/// sums, so no step subtracts and the solution is nonnegative for `f ≥ 0`.
fn solve_m_matrix<R: Real>(mut q: Vec<Vec<R>>, margin: R, mut f: Vec<R>) -> Option<Vec<R>> {
    let n = f.len();
    let mut s = vec![margin; n];
    let mut pivot = vec![R::zero(); n];
    for j in 0..n {
        let d = (j + 1..n).fold(s[j], |acc, i| acc + q[i][j]);
        if !(d > R::zero()) {
            return None;
        }
        pivot[j] = d;
        for i in j + 1..n {
            let factor = q[i][j] / d;
            if factor == R::zero() {
                continue;
            }
            f[i] = f[i] + factor * f[j];
            for k in j + 1..n {
                if k != i {
                    q[i][k] = q[i][k] + factor * q[j][k];
                }
            }
        }
        for k in j + 1..n {
            s[k] = s[k] + q[j][k] * s[j] / d;
        }
    }
    let mut x = vec![R::zero(); n];
    for j in (0..n).rev() {
        let acc = (j + 1..n).fold(f[j], |acc, k| acc + q[j][k] * x[k]);
        x[j] = acc / pivot[j];
    }
    Some(x)
}

/// Stationary distribution of an irreducible row-stochastic `p` by GTH reduction.
fn gth_stationary<R: Real>(mut p: Vec<Vec<R>>) -> Option<Vec<R>> {
    let n = p.len();
    let mut s = vec![R::zero(); n];
    for k in (1..n).rev() {
        let sk = (0..k).fold(R::zero(), |acc, j| acc + p[k][j]);
        if !(sk > R::zero()) {
            return None;
        }
        s[k] = sk;
        for i in 0..k {
            let factor = p[i][k] / sk;
            if factor == R::zero() {
                continue;
            }
            for j in 0..k {
                p[i][j] = p[i][j] + factor * p[k][j];
            }
        }
    }
    let mut pi = vec![R::zero(); n];
    pi[0] = R::one();
    for k in 1..n {
        pi[k] = (0..k).fold(R::zero(), |acc, i| acc + pi[i] * p[i][k]) / s[k];
    }
    let total: R = pi.iter().copied().sum();
    Some(pi.into_iter().map(|v| v / total).collect())
}

/// Stationary distribution of the row-stochastic `q`, supported on one closed class.
fn stationary<R: Real>(q: &[Vec<R>]) -> Option<Vec<R>> {
    let n = q.len();
    let reach_from = |i: usize| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![i];
        seen[i] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if q[u][v] > R::zero() && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    let reach: Vec<Vec<bool>> = (0..n).map(reach_from).collect();
    let root = (0..n).find(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i]))?;
    let class: Vec<usize> = (0..n).filter(|&j| reach[root][j]).collect();
    let sub: Vec<Vec<R>> = class.iter().map(|&r| class.iter().map(|&c| q[r][c]).collect()).collect();
    let nu_c = gth_stationary(sub)?;
    let mut nu = vec![R::zero(); n];
    for (&i, &v) in class.iter().zip(&nu_c) {
        nu[i] = v;
    }
    Some(nu)
}

/// `‖φ μ - μ‖_∞`.
pub fn residual<R: Real>(tree: &GameTree, profile: &TriggerProfile<R>, mu: &[R]) -> R {
    profile
        .apply(tree, mu)
        .iter()
        .zip(mu)
        .fold(R::zero(), |m, (&a, &b)| m.max((a - b).abs()))
}

/// Policy `μ` with `φ(λ, m) μ = μ`.
///
/// Infosets are solved top-down. At infoset `x` the unknowns are `μ(x, ·)`; triggers at
/// strict ancestors contribute a known inflow, triggers at `x` mix mass between its
/// actions and triggers on the history of `x` drain it. The local balance equations form an
/// M-matrix system whose solution is rescaled to the reach of `x`.
pub fn fixed_point<R: Real>(tree: &GameTree, profile: &TriggerProfile<R>) -> Result<SequencePolicy<R>> {
    let n_act = tree.num_actions();
    let lam = &profile.lambda;
    let mut mu = SequencePolicy::zeros(tree, None);
    for x in 0..tree.num_infosets() {
        let reach = mu.reach(tree, x);
        if reach <= R::zero() {
            continue;
        }
        let drain: R = tree.history(x).iter().map(|&k| lam[k]).sum();
        let seqs = tree.seqs_of(x);
        let mut inflow = vec![R::zero(); n_act];
        for &h in tree.history(x) {
            let anc = h / n_act;
            for k in tree.seqs_of(anc) {
                let fired = lam[k] * mu.values[k];
                if fired == R::zero() {
                    continue;
                }
                for (a, s) in seqs.clone().enumerate() {
                    inflow[a] = inflow[a] + fired * profile.m[k].values[s];
                }
            }
        }
        let local = |a: usize, b: usize| profile.m[x * n_act + b].values[x * n_act + a];
        let solved = if drain > R::zero() {
            // Off-diagonal magnitudes λ_b m_b(a | x); every column then sums to the drain.
            let q: Vec<Vec<R>> = (0..n_act)
                .map(|a| (0..n_act).map(|b| if a == b { R::zero() } else { lam[x * n_act + b] * local(a, b) }).collect())
                .collect();
            solve_m_matrix(q, drain, inflow).map(|v| {
                let total: R = v.iter().copied().sum();
                v.into_iter().map(|u| u / total * reach).collect()
            })
        } else if let Some(a) = (0..n_act).find(|&a| lam[x * n_act + a] == R::zero()) {
            let mut v = vec![R::zero(); n_act];
            v[a] = reach;
            Some(v)
        } else {
            let q: Vec<Vec<R>> = (0..n_act)
                .map(|b| (0..n_act).map(|a| local(a, b)).collect())
                .collect();
            stationary(&q).map(|nu| {
                let w: Vec<R> = nu.iter().enumerate().map(|(a, &v)| v / lam[x * n_act + a]).collect();
                let total: R = w.iter().copied().sum();
                w.into_iter().map(|v| v / total * reach).collect()
            })
        };
        let local_mu = solved.ok_or(Error::FixedPoint { residual: f64::NAN })?;
        for (s, v) in seqs.zip(local_mu) {
            mu.values[s] = v.max(R::zero());
        }
    }
    let tol = R::of(R::RESIDUAL_TOL);
    let res = residual(tree, profile, &mu.values);
    if res <= tol {
        return Ok(mu);
    }
    let averaged = cesaro(tree, profile, &mu, 50);
    let res_avg = residual(tree, profile, &averaged.values);
    if res_avg <= tol {
        return Ok(averaged);
    }
    Err(Error::FixedPoint {
        residual: res.min(res_avg).as_f64(),
    })
}

/// Average of `φ^j μ` for `j = 0..steps`.
fn cesaro<R: Real>(tree: &GameTree, profile: &TriggerProfile<R>, start: &SequencePolicy<R>, steps: usize) -> SequencePolicy<R> {
    let mut cur = start.values.clone();
    let mut acc = cur.clone();
    for _ in 1..steps {
        cur = profile.apply(tree, &cur);
        for (a, &c) in acc.iter_mut().zip(&cur) {
            *a = *a + c;
        }
    }
    let n = R::of_usize(steps);
    SequencePolicy {
        values: acc.into_iter().map(|v| v / n).collect(),
        root: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_tree::random_tree;
    use crate::game_tree::tree::fixtures::single;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_profile_is_uniform() {
        let t = single();
        let p = TriggerProfile::<f64>::uniform(&t);
        let mu = fixed_point(&t, &p).unwrap();
        assert!((mu.values[0] - 0.5).abs() < 1e-15 && (mu.values[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_example() {
        let t = single();
        let mut p = TriggerProfile::<f64>::uniform(&t);
        p.lambda = vec![1.0, 0.0];
        p.m[0].values = vec![0.0, 1.0];
        assert_eq!(fixed_point(&t, &p).unwrap().values, vec![0.0, 1.0]);
    }

    #[test]
    fn residual_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..40 {
            let t = random_tree(seed, 1 + (seed as usize % 4), 2, 2 + (seed as usize % 2), 10_000).unwrap();
            for _ in 0..5 {
                let p: TriggerProfile = TriggerProfile::random(&t, &mut rng);
                let mu = fixed_point(&t, &p).unwrap();
                assert!(residual(&t, &p, &mu.values) <= 1e-10);
                assert!(mu.violation(&t) <= 1e-10);
            }
        }
    }

    #[test]
    fn f32_solve() {
        let t = random_tree(3, 3, 2, 2, 10_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p: TriggerProfile<f32> = TriggerProfile::random(&t, &mut rng);
        let mu = fixed_point(&t, &p).unwrap();
        assert!(residual(&t, &p, &mu.values) <= 1e-4);
    }

    #[test]
    fn reducible_local_chain() {
        // Both local triggers fire into themselves: any split is a fixed point.
        let t = single();
        let mut p = TriggerProfile::<f64>::uniform(&t);
        p.m[0].values = vec![1.0, 0.0];
        p.m[1].values = vec![0.0, 1.0];
        let mu = fixed_point(&t, &p).unwrap();
        assert!(residual(&t, &p, &mu.values) <= 1e-12);
    }
}
