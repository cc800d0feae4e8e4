use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::MatrixView;
use crate::game_tree::{behavioral_to_seq, BalancedPolicies, BehavioralPolicy, GameTree};
use crate::scalar::{softmax_into, Real};
use crate::trigger_set::TriggerProfile;

/// Outer temperature and inner per-(trigger infoset, infoset) weights of the trigger
/// log-partition recursion. `unit()` gives the plain function, `balanced()` the version
/// rescaled by balanced exploration policies.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling<R = f64> {
    outer: R,
    /// `weights[x_g][x]` for `x ⪰ x_g`; `None` means every weight is one.
    weights: Option<Vec<Vec<R>>>,
}

impl<R: Real> Scaling<R> {
    pub fn unit() -> Self {
        Scaling {
            outer: R::one(),
            weights: None,
        }
    }

    /// Outer scale `X A` and inner weights `μ^{⋆,h}_{g:h}(x, a)` with `h` the layer of `x`.
    /// Fails if a weight depends on the action at `x`.
    pub fn balanced(tree: &GameTree, policies: &BalancedPolicies<R>) -> Result<Self> {
        let n = tree.num_infosets();
        let mut weights = vec![vec![R::zero(); n]; n];
        for x_g in 0..n {
            for &x in tree.subtree(x_g) {
                let w0 = policies.path_weight(tree, x_g, x, 0);
                for a in 1..tree.num_actions() {
                    let wa = policies.path_weight(tree, x_g, x, a);
                    if (wa - w0).abs() > R::epsilon() * R::of(16.0) * w0 {
                        return Err(Error::InvalidGameFile(format!(
                            "balanced weight at `{}` depends on the action",
                            tree.name(x)
                        )));
                    }
                }
                if w0 <= R::zero() {
                    return Err(Error::InvalidGameFile(format!("zero balanced weight at `{}`", tree.name(x))));
                }
                weights[x_g][x] = w0;
            }
        }
        Ok(Scaling {
            outer: R::of_usize(tree.num_sequences()),
            weights: Some(weights),
        })
    }

    pub fn custom(outer: R, weights: Option<Vec<Vec<R>>>) -> Self {
        Scaling { outer, weights }
    }

    pub fn outer(&self) -> R {
        self.outer
    }

    #[inline]
    pub fn weight(&self, x_g: usize, x: usize) -> R {
        self.weights.as_ref().map_or(R::one(), |w| w[x_g][x])
    }
}

/// `(λ, m)` with `m` kept in behavioral form, one full-length vector per trigger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct TriggerState<R = f64> {
    pub lambda: Vec<R>,
    pub m: Vec<BehavioralPolicy<R>>,
}

impl<R: Real> TriggerState<R> {
    /// Sequence-form profile with `m[k]` rooted at the infoset of `k`.
    pub fn profile(&self, tree: &GameTree) -> TriggerProfile<R> {
        TriggerProfile {
            lambda: self.lambda.clone(),
            m: self
                .m
                .iter()
                .enumerate()
                .map(|(k, b)| behavioral_to_seq(tree, b, Some(tree.split_seq(k).0)).expect("softmax rows are on the simplex"))
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        let mut d = R::zero();
        for (a, b) in self.lambda.iter().zip(&other.lambda) {
            d = d.max((*a - *b).abs());
        }
        for (p, q) in self.m.iter().zip(&other.m) {
            for (a, b) in p.probs.iter().zip(&q.probs) {
                d = d.max((*a - *b).abs());
            }
        }
        d
    }
}

/// Gradient data of the trigger log-partition function at one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TriggerGradient<R = f64> {
    pub value: R,
    pub state: TriggerState<R>,
    /// `inner[k][x]` = `F_{k, x}` for `x ⪰` the infoset of `k`, zero elsewhere.
    pub inner: Vec<Vec<R>>,
    /// Per-trigger outer exponents `-⟨I - E_{⪰k}, M⟩ + F_{k, x_g}`.
    pub outer_terms: Vec<R>,
}

/// `Σ_{i ⪰ k} M_ii` for every sequence `k`.
pub(crate) fn descendant_diag_sums<R: Real>(tree: &GameTree, mat: &impl MatrixView<R>) -> Vec<R> {
    let mut below_infoset = vec![R::zero(); tree.num_infosets()];
    let mut out = vec![R::zero(); tree.num_sequences()];
    for x in (0..tree.num_infosets()).rev() {
        let mut total = R::zero();
        for s in tree.seqs_of(x) {
            let v = tree.children(s).iter().fold(mat.at(s, s), |acc, &c| acc + below_infoset[c]);
            out[s] = v;
            total = total + v;
        }
        below_infoset[x] = total;
    }
    out
}

/// Bottom-up recursion for trigger `k` over the subtree of its infoset:
/// `F_x = (1/w) log Σ_a prior(a|x) exp(w (-η M[(x,a), k] + Σ_c F_c))`, writing `F` into
/// `inner` and the normalized softmax into `m`.
fn trigger_recursion<R: Real>(
    tree: &GameTree,
    k: usize,
    mat: &impl MatrixView<R>,
    eta: R,
    scaling: &Scaling<R>,
    prior: Option<&BehavioralPolicy<R>>,
    inner: &mut [R],
    m: &mut BehavioralPolicy<R>,
) {
    let x_g = tree.split_seq(k).0;
    let n_act = tree.num_actions();
    let mut logits = vec![R::zero(); n_act];
    for &x in tree.subtree(x_g).iter().rev() {
        let w = scaling.weight(x_g, x);
        for (a, s) in tree.seqs_of(x).enumerate() {
            let below = tree.children(s).iter().fold(R::zero(), |acc, &c| acc + inner[c]);
            let mut l = w * (below - eta * mat.at(s, k));
            if let Some(p) = prior {
                l = l + p.probs[s].ln();
            }
            logits[a] = l;
        }
        inner[x] = softmax_into(&logits, &mut m.probs[tree.seqs_of(x)]) / w;
    }
}

fn check_finite<R: Real>(mat: &impl MatrixView<R>) -> Result<()> {
    for i in 0..mat.dim() {
        for j in 0..mat.dim() {
            if mat.at(i, j).is_nan() {
                return Err(Error::NonFinite("loss matrix"));
            }
        }
    }
    Ok(())
}

/// Scaled trigger log-partition function at `η M` and its gradient `(λ, m)`.
pub fn log_partition_scaled<R: Real>(tree: &GameTree, mat: &impl MatrixView<R>, eta: R, scaling: &Scaling<R>) -> Result<TriggerGradient<R>> {
    let n = tree.num_sequences();
    if mat.dim() != n {
        return Err(Error::Dimension { expected: n, got: mat.dim() });
    }
    check_finite(mat)?;
    let trace = mat.trace();
    let diag_below = descendant_diag_sums(tree, mat);
    let mut inner = vec![vec![R::zero(); tree.num_infosets()]; n];
    let mut m = vec![BehavioralPolicy::uniform(tree); n];
    let mut outer_terms = vec![R::zero(); n];
    for k in 0..n {
        trigger_recursion(tree, k, mat, eta, scaling, None, &mut inner[k], &mut m[k]);
        let x_g = tree.split_seq(k).0;
        outer_terms[k] = -eta * (trace - diag_below[k]) + inner[k][x_g];
    }
    let s = scaling.outer();
    let scaled: Vec<R> = outer_terms.iter().map(|&z| z / s).collect();
    let mut lambda = vec![R::zero(); n];
    let value = s * softmax_into(&scaled, &mut lambda);
    if !value.is_finite() {
        return Err(Error::NonFinite("log-partition value"));
    }
    Ok(TriggerGradient {
        value,
        state: TriggerState { lambda, m },
        inner,
        outer_terms,
    })
}

/// `F^Tr(M)` and `-∇F^Tr(M) = φ(λ, m)`.
pub fn log_partition_trigger<R: Real>(tree: &GameTree, mat: &impl MatrixView<R>) -> Result<TriggerGradient<R>> {
    log_partition_scaled(tree, mat, R::one(), &Scaling::unit())
}

/// Balanced variant with outer scale `X A` and balanced inner weights.
pub fn log_partition_balanced<R: Real>(tree: &GameTree, mat: &impl MatrixView<R>, scaling: &Scaling<R>) -> Result<TriggerGradient<R>> {
    log_partition_scaled(tree, mat, R::one(), scaling)
}

/// One multiplicative step from `state` with the increment `η M`: every trigger's
/// subtree policy is reweighted by the one-step recursion and `λ` by its outer exponent.
/// Returns the one-step values `F̃_{k, x}`. Triggers whose column of `M` is zero keep `m`
/// untouched.
pub fn incremental_update<R: Real>(
    tree: &GameTree,
    state: &mut TriggerState<R>,
    mat: &impl MatrixView<R>,
    eta: R,
    scaling: &Scaling<R>,
) -> Result<Vec<Vec<R>>> {
    let n = tree.num_sequences();
    if mat.dim() != n {
        return Err(Error::Dimension { expected: n, got: mat.dim() });
    }
    let trace = mat.trace();
    let diag_below = descendant_diag_sums(tree, mat);
    let mut inner = vec![vec![R::zero(); tree.num_infosets()]; n];
    let s = scaling.outer();
    let mut logits = vec![R::zero(); n];
    for k in 0..n {
        let x_g = tree.split_seq(k).0;
        if !mat.column_is_zero(k) {
            let prior = state.m[k].clone();
            trigger_recursion(tree, k, mat, eta, scaling, Some(&prior), &mut inner[k], &mut state.m[k]);
        }
        let z = -eta * (trace - diag_below[k]) + inner[k][x_g];
        logits[k] = state.lambda[k].ln() + z / s;
    }
    if !softmax_into(&logits, &mut state.lambda).is_finite() {
        return Err(Error::NonFinite("trigger weights"));
    }
    Ok(inner)
}
