//! Finite soft-tree ensembles: forward pass, analytic parameter
//! gradients, and the empirical tangent kernel.
//!
//! Every tree is a perfect binary tree of depth `d`. Internal nodes are
//! indexed 1..=N in breadth-first order, so node `n` has children `2n`
//! and `2n + 1` and ancestry is plain index arithmetic — extending the
//! numbering one more level places leaf `l` (0-based) at index `2^d + l`,
//! and repeated halving walks its root path. A sample reaches a leaf with
//! the product of the split probabilities along that path, and the
//! ensemble output is the probability-weighted leaf sum averaged over
//! trees with a `1/sqrt(M)` scale.
//!
//! Under the oblivious structure all nodes at the same depth level of a
//! tree share one weight vector (leaves stay independent), so a tree
//! carries `d` split rules instead of `2^d - 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::InputMatrix;
use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, KernelSpec, Provenance};
use crate::linalg::SymmetricMatrix;
use crate::rng::CounterRng;
use crate::special::{decision, decision_slope};

/// Shape of one perfect binary tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeTopology {
    depth: usize,
}

impl TreeTopology {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 || depth > 40 {
            return Err(Error::InvalidArgument("tree depth must be in 1..=40"));
        }
        Ok(TreeTopology { depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of internal nodes, `2^d - 1`.
    pub fn internal_count(&self) -> usize {
        (1 << self.depth) - 1
    }

    /// Number of leaves, `2^d`.
    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    /// Depth level of a 1-based node index (root is level 0).
    pub fn level_of(node: usize) -> usize {
        debug_assert!(node >= 1);
        (usize::BITS - 1 - node.leading_zeros()) as usize
    }

    /// Root-to-leaf path of a 0-based leaf index as `(node, went_left)`
    /// pairs, one per level.
    pub fn path(&self, leaf: usize) -> impl Iterator<Item = (usize, bool)> {
        debug_assert!(leaf < self.leaf_count());
        let extended = self.leaf_count() + leaf;
        (1..=self.depth).rev().map(move |shift| {
            let node = extended >> shift;
            let went_left = (extended >> (shift - 1)) & 1 == 0;
            (node, went_left)
        })
    }

    /// Whether `leaf` lies in the left subtree of `node` (`Some(true)`),
    /// its right subtree (`Some(false)`), or neither (`None`).
    pub fn relation(&self, node: usize, leaf: usize) -> Option<bool> {
        self.path(leaf).find(|&(n, _)| n == node).map(|(_, left)| left)
    }
}

/// Weight-sharing scheme of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeStructure {
    /// Every internal node has its own split rule.
    Vanilla,
    /// Split rules are shared across each depth level of a tree.
    Oblivious,
}

/// M soft perfect binary trees under NTK initialization: all split
/// weights and leaf values are i.i.d. standard normal and the ensemble
/// output carries a `1/sqrt(M)` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftTreeEnsemble {
    trees: usize,
    topology: TreeTopology,
    alpha: f64,
    structure: TreeStructure,
    features: usize,
    seed: u64,
    /// Per tree: one weight vector per slot (node for vanilla, level for
    /// oblivious), `trees * slots * features` values.
    weights: Vec<f64>,
    /// Per tree: one value per leaf, `trees * leaf_count` values.
    leaves: Vec<f64>,
}

impl SoftTreeEnsemble {
    /// Draws a vanilla ensemble at NTK initialization. Each tree fills its
    /// parameters from its own split of the seed stream.
    pub fn new_random(
        trees: usize,
        depth: usize,
        alpha: f64,
        features: usize,
        seed: u64,
    ) -> Result<Self> {
        if trees == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one tree"));
        }
        if features == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one feature"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidSpec("alpha must be positive and finite"));
        }
        let topology = TreeTopology::new(depth)?;
        let slots = topology.internal_count();
        let leaf_count = topology.leaf_count();
        let root = CounterRng::new(seed);
        let mut weights = Vec::with_capacity(trees * slots * features);
        let mut leaves = Vec::with_capacity(trees * leaf_count);
        for m in 0..trees {
            let mut rng = root.split(m as u64);
            for _ in 0..slots * features {
                weights.push(rng.next_gaussian());
            }
            for _ in 0..leaf_count {
                leaves.push(rng.next_gaussian());
            }
        }
        Ok(SoftTreeEnsemble {
            trees,
            topology,
            alpha,
            structure: TreeStructure::Vanilla,
            features,
            seed,
            weights,
            leaves,
        })
    }

    /// Rebuilds an ensemble from serialized parts, e.g. an experiment
    /// snapshot. `weights` is `trees * slots * features` long (slots as in
    /// [`weight_slots`](Self::weight_slots) for the given structure) and
    /// `leaves` is `trees * 2^depth` long.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        trees: usize,
        depth: usize,
        alpha: f64,
        structure: TreeStructure,
        features: usize,
        seed: u64,
        weights: Vec<f64>,
        leaves: Vec<f64>,
    ) -> Result<Self> {
        if trees == 0 || features == 0 {
            return Err(Error::InvalidArgument("ensemble needs trees and features"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidSpec("alpha must be positive and finite"));
        }
        let topology = TreeTopology::new(depth)?;
        let slots = match structure {
            TreeStructure::Vanilla => topology.internal_count(),
            TreeStructure::Oblivious => depth,
        };
        if weights.len() != trees * slots * features {
            return Err(Error::DimensionMismatch {
                expected: trees * slots * features,
                found: weights.len(),
            });
        }
        if leaves.len() != trees * topology.leaf_count() {
            return Err(Error::DimensionMismatch {
                expected: trees * topology.leaf_count(),
                found: leaves.len(),
            });
        }
        Ok(SoftTreeEnsemble { trees, topology, alpha, structure, features, seed, weights, leaves })
    }

    /// Raw weight storage, `trees * slots * features` values.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Raw leaf storage, `trees * leaf_count` values.
    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }

    pub fn trees(&self) -> usize {
        self.trees
    }

    pub fn topology(&self) -> TreeTopology {
        self.topology
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn structure(&self) -> TreeStructure {
        self.structure
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Weight slots per tree: one per internal node, or one per level when
    /// oblivious.
    pub fn weight_slots(&self) -> usize {
        match self.structure {
            TreeStructure::Vanilla => self.topology.internal_count(),
            TreeStructure::Oblivious => self.topology.depth(),
        }
    }

    #[inline]
    fn slot_of_node(&self, node: usize) -> usize {
        match self.structure {
            TreeStructure::Vanilla => node - 1,
            TreeStructure::Oblivious => TreeTopology::level_of(node),
        }
    }

    /// Split weight vector of `slot` in tree `m`.
    pub fn weight(&self, tree: usize, slot: usize) -> &[f64] {
        let base = (tree * self.weight_slots() + slot) * self.features;
        &self.weights[base..base + self.features]
    }

    /// Leaf values of tree `m`.
    pub fn tree_leaves(&self, tree: usize) -> &[f64] {
        let l = self.topology.leaf_count();
        &self.leaves[tree * l..(tree + 1) * l]
    }

    /// Total number of trainable parameters
    /// `M (slots * F + leaf_count)`.
    pub fn param_count(&self) -> usize {
        self.trees * self.tree_param_count()
    }

    fn tree_param_count(&self) -> usize {
        self.weight_slots() * self.features + self.topology.leaf_count()
    }

    /// Flattens all trainable parameters. Layout: trees in order, each as
    /// its weight slots (slot-major, feature-minor) followed by its leaf
    /// values. Round-trips losslessly with [`set_params`](Self::set_params).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        let slots = self.weight_slots();
        let leaf_count = self.topology.leaf_count();
        for m in 0..self.trees {
            let wbase = m * slots * self.features;
            out.extend_from_slice(&self.weights[wbase..wbase + slots * self.features]);
            out.extend_from_slice(&self.leaves[m * leaf_count..(m + 1) * leaf_count]);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                found: params.len(),
            });
        }
        let slots = self.weight_slots();
        let leaf_count = self.topology.leaf_count();
        let per_tree = self.tree_param_count();
        for m in 0..self.trees {
            let block = &params[m * per_tree..(m + 1) * per_tree];
            let wbase = m * slots * self.features;
            self.weights[wbase..wbase + slots * self.features]
                .copy_from_slice(&block[..slots * self.features]);
            self.leaves[m * leaf_count..(m + 1) * leaf_count]
                .copy_from_slice(&block[slots * self.features..]);
        }
        Ok(())
    }

    fn check_features(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features {
            return Err(Error::DimensionMismatch { expected: self.features, found: x.len() });
        }
        Ok(())
    }

    /// Split probabilities of tree `m` for input `x`, one per weight slot.
    fn slot_decisions(&self, tree: usize, x: &[f64]) -> Vec<f64> {
        (0..self.weight_slots())
            .map(|slot| {
                let pre: f64 = self.weight(tree, slot).iter().zip(x).map(|(w, v)| w * v).sum();
                decision(self.alpha, pre)
            })
            .collect()
    }

    /// Probability that `x` reaches `leaf` of tree `m`: the product of
    /// going-left / going-right probabilities along the root path.
    pub fn leaf_probability(&self, tree: usize, leaf: usize, x: &[f64]) -> Result<f64> {
        self.check_features(x)?;
        if leaf >= self.topology.leaf_count() {
            return Err(Error::InvalidArgument("leaf index out of range"));
        }
        let g = self.slot_decisions(tree, x);
        let mut mu = 1.0;
        for (node, went_left) in self.topology.path(leaf) {
            let gv = g[self.slot_of_node(node)];
            mu *= if went_left { gv } else { 1.0 - gv };
        }
        Ok(mu)
    }

    /// Ensemble output for one sample.
    pub fn forward_one(&self, x: &[f64]) -> Result<f64> {
        self.check_features(x)?;
        let leaf_count = self.topology.leaf_count();
        let mut total = 0.0;
        for m in 0..self.trees {
            let g = self.slot_decisions(m, x);
            let pi = self.tree_leaves(m);
            let mut tree_out = 0.0;
            for leaf in 0..leaf_count {
                let mut mu = 1.0;
                for (node, went_left) in self.topology.path(leaf) {
                    let gv = g[self.slot_of_node(node)];
                    mu *= if went_left { gv } else { 1.0 - gv };
                }
                tree_out += pi[leaf] * mu;
            }
            total += tree_out;
        }
        Ok(total / libm::sqrt(self.trees as f64))
    }

    /// Ensemble outputs for every sample.
    pub fn forward(&self, x: &InputMatrix) -> Result<Vec<f64>> {
        x.samples().map(|s| self.forward_one(s)).collect()
    }

    /// Writes the gradient of the output with respect to tree `m`'s
    /// parameters into `out` (laid out like one tree block of
    /// [`params`](Self::params)), excluding the global `1/sqrt(M)` factor.
    ///
    /// The weight gradient at node `n` is `sum_l pi_l S_{n,l} gdot_n x`,
    /// where `S_{n,l}` is the leaf-path probability with the node-`n`
    /// factor removed and a sign flip when the path leaves `n` rightward.
    /// The skipped factor is recomputed from prefix/suffix products rather
    /// than divided out, so split probabilities near zero stay harmless.
    /// Under the oblivious structure the contributions of a level's nodes
    /// accumulate onto the shared slot.
    fn tree_jacobian_into(&self, tree: usize, x: &[f64], out: &mut [f64]) {
        let depth = self.topology.depth();
        let leaf_count = self.topology.leaf_count();
        let slots = self.weight_slots();
        debug_assert_eq!(out.len(), self.tree_param_count());
        out.fill(0.0);

        let mut pre = vec![0.0; slots];
        let mut g = vec![0.0; slots];
        for slot in 0..slots {
            let p: f64 = self.weight(tree, slot).iter().zip(x).map(|(w, v)| w * v).sum();
            pre[slot] = p;
            g[slot] = decision(self.alpha, p);
        }

        let pi = self.tree_leaves(tree);
        let mut coeff = vec![0.0; slots];
        let mut factors = vec![0.0; depth];
        let mut path_slots = vec![0usize; depth];
        let mut signs = vec![1.0; depth];
        let mut prefix = vec![1.0; depth + 1];
        let mut suffix = vec![1.0; depth + 1];

        let (w_grad, leaf_grad) = out.split_at_mut(slots * self.features);
        for leaf in 0..leaf_count {
            for (k, (node, went_left)) in self.topology.path(leaf).enumerate() {
                let slot = self.slot_of_node(node);
                path_slots[k] = slot;
                factors[k] = if went_left { g[slot] } else { 1.0 - g[slot] };
                signs[k] = if went_left { 1.0 } else { -1.0 };
            }
            for k in 0..depth {
                prefix[k + 1] = prefix[k] * factors[k];
            }
            suffix[depth] = 1.0;
            for k in (0..depth).rev() {
                suffix[k] = suffix[k + 1] * factors[k];
            }
            leaf_grad[leaf] = prefix[depth];
            let pi_leaf = pi[leaf];
            for k in 0..depth {
                coeff[path_slots[k]] += pi_leaf * signs[k] * prefix[k] * suffix[k + 1];
            }
        }

        for slot in 0..slots {
            let scale = coeff[slot] * decision_slope(self.alpha, pre[slot]);
            if scale == 0.0 {
                continue;
            }
            let dst = &mut w_grad[slot * self.features..(slot + 1) * self.features];
            for (d, v) in dst.iter_mut().zip(x) {
                *d = scale * v;
            }
        }
    }

    /// Analytic gradient of the ensemble output with respect to every
    /// trainable parameter, as one flat row in [`params`](Self::params)
    /// layout.
    pub fn jacobian_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_features(x)?;
        let per_tree = self.tree_param_count();
        let mut row = vec![0.0; self.param_count()];
        let inv_sqrt_m = 1.0 / libm::sqrt(self.trees as f64);
        for m in 0..self.trees {
            let block = &mut row[m * per_tree..(m + 1) * per_tree];
            self.tree_jacobian_into(m, x, block);
            for v in block.iter_mut() {
                *v *= inv_sqrt_m;
            }
        }
        Ok(row)
    }

    /// Empirical tangent kernel: the Gram matrix of per-parameter output
    /// gradients, `K_ij = <grad f(x_i), grad f(x_j)>`.
    ///
    /// When the full N x P Jacobian fits in ten million entries it is
    /// materialized row-wise; otherwise the kernel accumulates tree by
    /// tree, which touches only one tree's parameter block at a time.
    /// Both paths produce the same sums up to rounding.
    pub fn empirical_ntk(&self, x: &InputMatrix, step: usize) -> Result<GramMatrix> {
        let n = x.len();
        if n == 0 {
            return Err(Error::InsufficientSamples { need: 1, have: 0 });
        }
        for s in x.samples() {
            self.check_features(s)?;
        }
        let p = self.param_count();
        let matrix = if n.saturating_mul(p) <= 10_000_000 {
            let rows: Vec<Vec<f64>> =
                x.samples().map(|s| self.jacobian_row(s)).collect::<Result<_>>()?;
            SymmetricMatrix::from_upper_fn(n, |i, j| {
                rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum()
            })
        } else {
            let per_tree = self.tree_param_count();
            let mut acc = SymmetricMatrix::zeros(n);
            let mut blocks = vec![0.0; n * per_tree];
            for m in 0..self.trees {
                for (i, s) in x.samples().enumerate() {
                    self.tree_jacobian_into(m, s, &mut blocks[i * per_tree..(i + 1) * per_tree]);
                }
                for i in 0..n {
                    for j in i..n {
                        let dot: f64 = blocks[i * per_tree..(i + 1) * per_tree]
                            .iter()
                            .zip(&blocks[j * per_tree..(j + 1) * per_tree])
                            .map(|(a, b)| a * b)
                            .sum();
                        acc.set_sym(i, j, acc.get(i, j) + dot);
                    }
                }
            }
            // The per-tree blocks exclude the 1/sqrt(M) factor, so the
            // accumulated kernel carries 1/M once.
            let inv_m = 1.0 / self.trees as f64;
            let mut scaled = SymmetricMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    scaled.set_sym(i, j, acc.get(i, j) * inv_m);
                }
            }
            scaled
        };
        Ok(GramMatrix {
            matrix,
            spec: KernelSpec::Tntk { depth: self.topology.depth(), alpha: self.alpha },
            provenance: Provenance::Empirical { trees: self.trees, seed: self.seed, step },
        })
    }

    /// Converts a vanilla ensemble to its oblivious counterpart: each
    /// depth level keeps the weight vector of its leftmost node, leaves
    /// are untouched.
    pub fn make_oblivious(&self) -> Result<SoftTreeEnsemble> {
        if self.structure != TreeStructure::Vanilla {
            return Err(Error::InvalidArgument("ensemble is already oblivious"));
        }
        let depth = self.topology.depth();
        let mut weights = Vec::with_capacity(self.trees * depth * self.features);
        for m in 0..self.trees {
            for level in 0..depth {
                let leftmost_node = 1 << level;
                weights.extend_from_slice(self.weight(m, leftmost_node - 1));
            }
        }
        Ok(SoftTreeEnsemble {
            trees: self.trees,
            topology: self.topology,
            alpha: self.alpha,
            structure: TreeStructure::Oblivious,
            features: self.features,
            seed: self.seed,
            weights,
            leaves: self.leaves.clone(),
        })
    }
}
