//! End-to-end self checks: recursions against enumeration, equivalent algorithm forms,
//! variational characterizations, balancing identities, fixed-point residuals, the
//! online-to-batch identity and estimator statistics.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::regret::efce_gap;
use super::run::{run_self_play, Cadence, RunOptions};
use crate::error::Result;
use crate::feedback::{
    adaptive_estimator, assemble_adaptive_matrix, densify, expected_loss, ix_estimator, sample_trajectory, DenseMatrix,
    LossMatrix,
};
use crate::game_tree::{
    descendant_counts, kuhn_poker, random_env, random_policy, random_tree, seq_to_behavioral, BalancedPolicies, EfgGame,
    GameTree, SequencePolicy,
};
use crate::learners::{default_hyper, Algorithm, DilatedOmd, Feedback, FeedbackMode, Hyper, Learner, PhiHedge, TriggerOmd, VertexMwu};
use crate::partition::{
    brute_force_kernel, brute_force_trigger, brute_force_vertex, kernel_log, log_partition_balanced, log_partition_trigger,
    log_partition_vertex, trigger_dilated_entropy, Scaling,
};
use crate::trigger_set::{
    enumerate_policies, enumerate_subtree_policies, enumerate_trigger_vertices, num_trigger_vertices, residual, TriggerProfile,
};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}. {}: {}", self.criterion, self.name, self.detail)
    }
}

fn report(criterion: u8, name: &'static str, outcome: Result<(bool, String)>) -> CheckReport {
    match outcome {
        Ok((passed, detail)) => CheckReport { criterion, name, passed, detail },
        Err(e) => CheckReport { criterion, name, passed: false, detail: format!("error: {e}") },
    }
}

/// Relative error with a unit floor on the denominator.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest trigger-vertex count the enumeration checks accept.
pub const ORACLE_CAP: usize = 10_000;

/// Trees small enough for enumeration: random trees of depth one to three and both player
/// views of Kuhn poker.
pub fn oracle_games() -> Result<Vec<(String, GameTree)>> {
    let mut games = Vec::new();
    let shapes = [(1, 3, 2), (1, 2, 3), (2, 2, 2), (2, 3, 2), (2, 2, 3), (3, 2, 2), (3, 2, 2), (3, 1, 3), (3, 2, 2), (2, 3, 3)];
    let mut seed = 0;
    for (layers, branching, actions) in shapes {
        loop {
            seed += 1;
            let t = random_tree(seed, layers, branching, actions, 10_000)?;
            if num_trigger_vertices(&t) <= ORACLE_CAP {
                games.push((format!("random(seed={seed},H={layers},A={actions})"), t));
                break;
            }
        }
    }
    let kuhn = EfgGame::new(kuhn_poker())?;
    for v in &kuhn.views {
        games.push((format!("kuhn-player{}", v.player), v.tree.clone()));
    }
    Ok(games)
}

fn random_matrix<G: Rng>(n: usize, rng: &mut G) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rng.random::<f64>());
        }
    }
    m
}

fn random_vec<G: Rng>(n: usize, scale: f64, rng: &mut G) -> Vec<f64> {
    (0..n).map(|_| scale * rng.random::<f64>()).collect()
}

/// Recursive log-partition values and gradients against enumeration.
pub fn check_log_partition(inputs: usize) -> CheckReport {
    report(1, "log-partition recursions match enumeration", (|| {
        let mut worst: f64 = 0.0;
        let games = oracle_games()?;
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for (_, t) in &games {
            let n = t.num_sequences();
            let phis = enumerate_trigger_vertices::<f64>(t, ORACLE_CAP)?;
            let verts = enumerate_policies::<f64>(t, ORACLE_CAP * 10)?;
            let subtree: Vec<Vec<SequencePolicy>> =
                (0..t.num_infosets()).map(|x| enumerate_subtree_policies(t, x, ORACLE_CAP * 10)).collect::<Result<_>>()?;
            for _ in 0..inputs {
                let m = random_matrix(n, &mut rng);
                let g = log_partition_trigger(t, &m)?;
                let (bv, bp) = brute_force_trigger(t, &phis, &m)?;
                worst = worst.max(rel_err(g.value, bv));
                let ga = g.state.profile(t).to_matrix(t);
                let gb = bp.to_matrix(t);
                worst = worst.max(ga.max_abs_diff(&gb));
                let l = random_vec(n, 2.0, &mut rng);
                let (vv, vmu) = log_partition_vertex(t, &l)?;
                let (bvv, bmu) = brute_force_vertex(&verts, &l)?;
                worst = worst.max(rel_err(vv, bvv)).max(max_diff(&vmu.values, &bmu.values));
                let b: Vec<f64> = random_vec(n, 2.0, &mut rng).iter().map(|v| (-v).exp()).collect();
                let k = kernel_log(t, &b)?;
                for x in 0..t.num_infosets() {
                    let brute = brute_force_kernel(&subtree[x], &b);
                    worst = worst.max((k[x].exp() - brute).abs() / brute);
                }
            }
        }
        Ok((worst <= 1e-9, format!("{} games x {inputs} inputs, worst relative error {worst:.2e}", games.len())))
    })())
}

/// Random nonnegative loss matrices, alternating dense rank-one and sparse columns.
fn random_loss_matrix<G: Rng>(t: &GameTree, step: usize, rng: &mut G) -> LossMatrix {
    let n = t.num_sequences();
    if step % 2 == 0 {
        let mu: SequencePolicy = random_policy(t, None, rng);
        LossMatrix::RankOne { loss: random_vec(n, 1.0, rng), policy: mu.values }
    } else {
        let mut columns = vec![Vec::new(); n];
        for _ in 0..3 {
            let k = rng.random_range(0..n);
            let rows: Vec<(usize, f64)> = (0..t.horizon()).map(|_| (rng.random_range(0..n), rng.random::<f64>())).collect();
            columns[k] = rows;
        }
        // Deduplicate rows within a column by summing.
        for col in columns.iter_mut() {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        LossMatrix::Columns { dim: n, columns }
    }
}

/// Largest difference between learner pairs over the run, and the largest fixed-point residual.
pub fn equivalence_runs(steps: usize, sequences: usize) -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    let games: Vec<GameTree> = oracle_games()?
        .into_iter()
        .map(|(_, t)| t)
        .filter(|t| num_trigger_vertices(t) <= 2_000)
        .take(4)
        .collect();
    for (gi, t) in games.iter().enumerate() {
        let tree = Arc::new(t.clone());
        let n = t.num_sequences();
        for sq in 0..sequences {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000 * gi as u64 + sq as u64);
            let hp = Hyper::new(0.3, 0.0);
            let mut hedge = PhiHedge::new(tree.clone(), hp.clone())?;
            let mut ftrl = TriggerOmd::new(tree.clone(), Algorithm::EfceOmd, hp.clone())?;
            let mut inc = TriggerOmd::new(tree.clone(), Algorithm::EfceOmdInc, hp.clone())?;
            let mut bal = TriggerOmd::new(tree.clone(), Algorithm::BalancedEfceOmd, hp.clone())?;
            let mut bal_inc = TriggerOmd::new(tree.clone(), Algorithm::BalancedEfceOmdInc, hp.clone())?;
            let mut mwu = VertexMwu::new(tree.clone(), hp.clone())?;
            let mut dil = DilatedOmd::new(tree.clone(), Algorithm::DilatedOmd, hp.clone())?;
            let mut dil_inc = DilatedOmd::new(tree.clone(), Algorithm::DilatedOmdInc, hp.clone())?;
            for step in 0..steps {
                let l = random_vec(n, 1.0, &mut rng);
                hedge.observe(Feedback::Full(&l))?;
                ftrl.observe(Feedback::Full(&l))?;
                let m = random_loss_matrix(t, step, &mut rng);
                inc.step_matrix(&LossMatrix::RankOne { loss: l.clone(), policy: inc.policy().values.clone() })?;
                bal.step_matrix(&m)?;
                bal_inc.step_matrix(&m)?;
                for v in [&mut mwu as &mut dyn Learner<f64>, &mut dil, &mut dil_inc] {
                    v.observe(Feedback::Full(&l))?;
                }
                worst = worst
                    .max(max_diff(&hedge.policy().values, &ftrl.policy().values))
                    .max(max_diff(&ftrl.policy().values, &inc.policy().values))
                    .max(ftrl.state().max_abs_diff(inc.state()))
                    .max(bal.state().max_abs_diff(bal_inc.state()))
                    .max(max_diff(&bal.policy().values, &bal_inc.policy().values))
                    .max(max_diff(&mwu.policy().values, &dil.policy().values))
                    .max(max_diff(&dil.policy().values, &dil_inc.policy().values));
                for l in [&hedge as &dyn Learner<f64>, &ftrl, &inc, &bal, &bal_inc] {
                    max_res = max_res.max(residual(t, l.profile().expect("trigger learner"), &l.policy().values));
                }
            }
        }
    }
    Ok((worst, max_res))
}

pub fn check_equivalences(steps: usize, sequences: usize) -> (CheckReport, f64) {
    let mut res = f64::NAN;
    let r = report(2, "equivalent algorithm forms agree", (|| {
        let (worst, max_res) = equivalence_runs(steps, sequences)?;
        res = max_res;
        Ok((worst <= 1e-8, format!("{steps} steps x {sequences} sequences, worst difference {worst:.2e}")))
    })());
    (r, res)
}

/// The leader iterate minimizes the regularized objective over random profiles.
pub fn check_variational(steps: usize, samples: usize) -> CheckReport {
    report(3, "leader iterates minimize the regularized objective", (|| {
        let mut worst_margin = f64::INFINITY;
        for (gi, (_, t)) in oracle_games()?.iter().enumerate().take(6) {
            let tree = Arc::new(t.clone());
            let bp = BalancedPolicies::new(t, &descendant_counts(t));
            let scalings = [(Algorithm::EfceOmd, Scaling::unit()), (Algorithm::BalancedEfceOmd, Scaling::balanced(t, &bp)?)];
            for (algo, scaling) in scalings {
                let eta = 0.4;
                let mut l = TriggerOmd::new(tree.clone(), algo, Hyper::new(eta, 0.0))?;
                let mut cum = DenseMatrix::zeros(t.num_sequences());
                let mut rng = ChaCha8Rng::seed_from_u64(7 + gi as u64);
                for step in 0..steps {
                    let obj = |p: &TriggerProfile| -> Result<f64> { Ok(eta * p.inner(t, &cum) + trigger_dilated_entropy(t, p, &scaling)?) };
                    let best = obj(l.profile().expect("trigger learner"))?;
                    for _ in 0..samples {
                        let p: TriggerProfile = TriggerProfile::random(t, &mut rng);
                        worst_margin = worst_margin.min(obj(&p)? - best);
                    }
                    let m = random_loss_matrix(t, step, &mut rng);
                    cum.add_scaled(&m, 1.0)?;
                    l.step_matrix(&m)?;
                }
            }
        }
        Ok((worst_margin >= -1e-9, format!("smallest margin {worst_margin:.3e}")))
    })())
}

/// Balancing identity, closed form of the balanced function at zero, and the reach floor.
pub fn check_balancing(trees: usize, policies: usize) -> CheckReport {
    report(4, "balancing and closed-form identities", (|| {
        let mut worst: f64 = 0.0;
        let mut floor_ok = true;
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for seed in 0..trees as u64 {
            let t = random_tree(500 + seed, 1 + seed as usize % 4, 2, 2 + seed as usize % 2, 10_000)?;
            let counts = descendant_counts(&t);
            let bp = BalancedPolicies::<f64>::new(&t, &counts);
            let a = t.num_actions() as f64;
            for h in 0..t.horizon() {
                let xh = t.layer(h).len() as f64;
                for &x in t.layer(h) {
                    for s in t.seqs_of(x) {
                        floor_ok &= bp.sequence(h).values[s] >= 1.0 / (xh * a) - 1e-15;
                    }
                }
            }
            for _ in 0..policies {
                let mu: SequencePolicy = random_policy(&t, None, &mut rng);
                for h in 0..t.horizon() {
                    let sum: f64 = t.layer(h).iter().flat_map(|&x| t.seqs_of(x)).map(|s| mu.values[s] / bp.sequence(h).values[s]).sum();
                    worst = worst.max(rel_err(sum, t.layer(h).len() as f64 * a));
                }
            }
            let xa = t.num_sequences() as f64;
            let closed = xa
                * (0..t.num_sequences())
                    .map(|k| {
                        let x_g = t.split_seq(k).0;
                        counts.subtree_size[x_g] as f64 * a * a.ln() / xa
                    })
                    .map(f64::exp)
                    .sum::<f64>()
                    .ln();
            let g = log_partition_balanced(&t, &DenseMatrix::zeros(t.num_sequences()), &Scaling::balanced(&t, &bp)?)?;
            worst = worst.max(rel_err(g.value, closed));
        }
        Ok((worst <= 1e-9 && floor_ok, format!("{trees} trees, worst relative error {worst:.2e}, reach floor {}", if floor_ok { "holds" } else { "violated" })))
    })())
}

pub fn check_fixed_point(max_residual: f64) -> CheckReport {
    report(5, "fixed-point residuals", Ok((max_residual <= 1e-10, format!("largest residual {max_residual:.2e}"))))
}

/// Full-feedback self-play on Kuhn poker: gap of the average correlated policy against the
/// largest average trigger regret.
pub fn check_online_to_batch(episodes: usize) -> CheckReport {
    report(6, "online-to-batch identity", (|| {
        let game = EfgGame::new(kuhn_poker())?;
        let mut learners: Vec<Box<dyn Learner<f64>>> = game
            .views
            .iter()
            .map(|v| {
                let tree = Arc::new(v.tree.clone());
                let hp = default_hyper(&tree, Algorithm::EfceOmd, FeedbackMode::Full, episodes, 0.05, 2.0);
                Ok(Box::new(TriggerOmd::new(tree, Algorithm::EfceOmd, hp)?) as Box<dyn Learner<f64>>)
            })
            .collect::<Result<_>>()?;
        let opts = RunOptions { keep_policies: true, cadence: Cadence::Every(episodes), ..RunOptions::new(episodes, FeedbackMode::Full, 0) };
        let h = run_self_play(&game, &mut learners, &opts)?;
        let t = episodes as f64;
        let max_reg = h
            .players
            .iter()
            .zip(&game.views)
            .map(|(p, v)| p.tracker.trigger_regret(&v.tree) / t)
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = efce_gap(&game, &h.profiles)?;
        let diff = (gap - max_reg).abs();
        Ok((diff <= 1e-10 && h.max_utility_sum <= 1e-10, format!("T = {episodes}, gap {gap:.6e}, max regret / T {max_reg:.6e}, difference {diff:.1e}")))
    })())
}

/// Estimator domination, the `⟨μ, ℓ̃⟩ ≤ H` bound and Monte-Carlo means at 3σ.
pub fn check_feedback(episodes: usize) -> CheckReport {
    report(9, "estimator statistics", (|| {
        let t = random_tree(77, 3, 2, 2, 10_000)?;
        let n = t.num_sequences();
        let h = t.horizon() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let env = random_env(&t, &mut rng);
        let mu: SequencePolicy = random_policy(&t, None, &mut rng);
        let mu_b = seq_to_behavioral(&t, &mu)?;
        let profile: TriggerProfile = TriggerProfile::random(&t, &mut rng);
        let m: Vec<Vec<f64>> = profile.m.iter().map(|p| p.values.clone()).collect();
        let bp = BalancedPolicies::<f64>::new(&t, &descendant_counts(&t));
        let star: Vec<f64> = (0..n).map(|s| bp.own_layer_reach(&t, s)).collect();
        let loss: Vec<f64> = expected_loss(&t, &env);
        let gamma = 0.1;
        // Conditional means of the adaptive matrix columns.
        let expect_col = |k: usize, s: usize| -> f64 {
            let x_g = t.split_seq(k).0;
            let trig = if t.in_subtree(t.split_seq(s).0, x_g) { mu.values[k] * m[k][s] } else { 0.0 };
            mu.values[k] * loss[s] * mu.values[s] / (mu.values[s] + gamma * (star[s] + trig))
        };
        let mut sum0 = vec![0.0; n];
        let mut sq0 = vec![0.0; n];
        let mut sum_g = vec![vec![0.0; n]; n];
        let mut sq_g = vec![vec![0.0; n]; n];
        let mut dominated = true;
        let mut bound_ok = true;
        for _ in 0..episodes {
            let traj = sample_trajectory(&t, &env, &mu_b, &mut rng);
            let plain = densify(n, &ix_estimator(&t, &traj, &mu.values, 0.0)?);
            bound_ok &= mu.dot(&plain) <= h + 1e-9;
            let ix = densify(n, &ix_estimator(&t, &traj, &mu.values, gamma)?);
            bound_ok &= mu.dot(&ix) <= h + 1e-9;
            for s in 0..n {
                sum0[s] += plain[s];
                sq0[s] += plain[s] * plain[s];
            }
            let fam = adaptive_estimator(&t, &traj, &mu.values, &m, &star, gamma)?;
            let star_only = adaptive_estimator(&t, &traj, &mu.values, &vec![vec![0.0; n]; n], &star, gamma)?;
            for (a, b) in fam.iter().zip(&star_only) {
                for (&(_, va), &(_, vb)) in a.iter().zip(b) {
                    dominated &= va <= vb;
                }
            }
            let mat = assemble_adaptive_matrix(&fam, &mu.values)?;
            for k in 0..n {
                for &(s, v) in &mat.column(k) {
                    sum_g[k][s] += v;
                    sq_g[k][s] += v * v;
                }
            }
        }
        let nf = episodes as f64;
        let within = |sum: f64, sq: f64, target: f64| -> bool {
            let mean = sum / nf;
            let var = (sq / nf - mean * mean).max(0.0);
            (mean - target).abs() <= 3.0 * (var / nf).sqrt() + 1e-12
        };
        let mut unbiased = 0;
        let mut support = 0;
        let mut rescaled = 0;
        let mut total_g = 0;
        for s in 0..n {
            // Unbiasedness holds on the support of the played policy only.
            if mu.values[s] > 0.0 {
                support += 1;
                unbiased += usize::from(within(sum0[s], sq0[s], loss[s]));
            }
            for k in 0..n {
                if mu.values[k] > 0.0 {
                    total_g += 1;
                    rescaled += usize::from(within(sum_g[k][s], sq_g[k][s], expect_col(k, s)));
                }
            }
        }
        let frac0 = unbiased as f64 / support as f64;
        let frac_g = rescaled as f64 / total_g as f64;
        // At 3σ roughly 0.3% of entries fall outside by chance.
        let passed = dominated && bound_ok && frac0 >= 0.99 && frac_g >= 0.99;
        Ok((
            passed,
            format!(
                "{episodes} episodes: domination {dominated}, loss bound {bound_ok}, unbiased within 3σ {unbiased}/{support}, rescaled within 3σ {rescaled}/{total_g}"
            ),
        ))
    })())
}

/// Criteria 1 to 6 and 9 at full size.
pub fn verify_all() -> Vec<CheckReport> {
    let (eq, res) = check_equivalences(200, 20);
    vec![
        check_log_partition(100),
        eq,
        check_variational(50, 100),
        check_balancing(20, 50),
        check_fixed_point(res),
        check_online_to_batch(4096),
        check_feedback(100_000),
    ]
}
