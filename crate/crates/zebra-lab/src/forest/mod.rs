//! Interaction classifier: a 100-tree random forest over the 24 segment
//! features, class-weighted against imbalance, plus the vote post-classifier
//! that extends the three base classes with idle and upright.
//!
//! Training is deterministic: rows are brought into a canonical order
//! (user id, class, feature values), every tree draws its bootstrap sample
//! and split candidates from its own seeded stream, and trees may therefore
//! be grown in parallel without changing the result.

mod io;
mod tree;
mod vote;

pub use io::{load_model, read_model_str, save_model, write_model_string, SavedModel};
pub use tree::{DecisionTree, Node};
pub use vote::{fit_vote_tree, VoteNode, VoteTreeModel};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::{FeatureVector, N_FEATURES};
use crate::interaction::{InteractionKind, ALL_CLASSES, BASE_CLASSES};
use tree::{argmax, TreeBuilder, N_BASE};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("insufficient classes: {0}")]
    InsufficientClasses(String),
    #[error("need at least two distinct users")]
    InsufficientUsers,
    #[error("model file line {0}: malformed")]
    MalformedModel(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub features: [f64; N_FEATURES],
    pub kind: InteractionKind,
    pub user_id: String,
}

/// Labeled feature rows. Sparse-flagged vectors are excluded at insertion;
/// they are still classified at prediction time, just never trained on.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    rows: Vec<TrainingRow>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row unless the vector is sparse; returns whether it was kept.
    pub fn push(&mut self, fv: &FeatureVector, kind: InteractionKind, user_id: &str) -> bool {
        if fv.sparse {
            return false;
        }
        self.rows.push(TrainingRow {
            features: fv.to_row(),
            kind,
            user_id: user_id.to_string(),
        });
        true
    }

    pub fn push_raw(&mut self, features: [f64; N_FEATURES], kind: InteractionKind, user_id: &str) {
        self.rows.push(TrainingRow {
            features,
            kind,
            user_id: user_id.to_string(),
        });
    }

    pub fn rows(&self) -> &[TrainingRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn user_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.rows.iter().map(|r| r.user_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Rows of all users except `user`.
    pub fn without_user(&self, user: &str) -> TrainingSet {
        TrainingSet {
            rows: self
                .rows
                .iter()
                .filter(|r| r.user_id != user)
                .cloned()
                .collect(),
        }
    }
}

pub const DEFAULT_N_TREES: usize = 100;
/// ⌊√24⌋ candidate features per split.
pub const DEFAULT_FEATURES_PER_SPLIT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_trees: usize,
    pub features_per_split: usize,
    /// Weight per base class, `total / (n_classes · count)`; 0 for classes
    /// absent from training.
    pub class_weights: [f64; N_BASE],
    pub train_seed: u64,
}

/// Trains the standard 100-tree forest. Rows of the extended classes (idle,
/// upright) are ignored here; they only feed [`train_vote_tree`].
pub fn train_forest(data: &TrainingSet, seed: u64) -> Result<ForestModel, ClassifierError> {
    train_forest_with(data, seed, DEFAULT_N_TREES, DEFAULT_FEATURES_PER_SPLIT)
}

pub fn train_forest_with(
    data: &TrainingSet,
    seed: u64,
    n_trees: usize,
    features_per_split: usize,
) -> Result<ForestModel, ClassifierError> {
    // Canonical row order: bootstrap indices must not depend on how the
    // caller happened to store the rows.
    let mut base: Vec<&TrainingRow> = data.rows.iter().filter(|r| r.kind.is_base()).collect();
    base.sort_by(|a, b| {
        (a.user_id.as_str(), a.kind.index())
            .cmp(&(b.user_id.as_str(), b.kind.index()))
            .then_with(|| {
                a.features
                    .iter()
                    .zip(b.features.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });

    let features: Vec<[f64; N_FEATURES]> = base.iter().map(|r| r.features).collect();
    let labels: Vec<u8> = base
        .iter()
        .map(|r| r.kind.base_index().unwrap() as u8)
        .collect();

    let mut counts = [0usize; N_BASE];
    for &l in &labels {
        counts[l as usize] += 1;
    }
    let n_classes = counts.iter().filter(|&&c| c > 0).count();
    if n_classes < 2 {
        return Err(ClassifierError::InsufficientClasses(format!(
            "{n_classes} base class(es) present, need at least 2"
        )));
    }
    let total = labels.len() as f64;
    let mut class_weights = [0.0; N_BASE];
    for (w, &c) in class_weights.iter_mut().zip(counts.iter()) {
        if c > 0 {
            *w = total / (n_classes as f64 * c as f64);
        }
    }

    let builder = TreeBuilder {
        features: &features,
        labels: &labels,
        class_weights: &class_weights,
        features_per_split,
    };
    let n = labels.len();
    let trees: Vec<DecisionTree> = (0..n_trees)
        .into_par_iter()
        .map(|tree_idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(tree_idx as u64 + 1);
            let bootstrap: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
            builder.grow(bootstrap, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_trees,
        features_per_split,
        class_weights,
        train_seed: seed,
    })
}

/// Each tree votes for its leaf's weighted-majority class; the output class
/// is the vote argmax with ties broken by the fixed class order
/// Typing < Scrolling < MKKM. Vote counts always sum to `n_trees`.
pub fn predict3(model: &ForestModel, fv: &FeatureVector) -> (InteractionKind, [u32; N_BASE]) {
    let row = fv.to_row();
    let mut votes = [0u32; N_BASE];
    for tree in &model.trees {
        votes[tree.predict(&row) as usize] += 1;
    }
    let as_f = [votes[0] as f64, votes[1] as f64, votes[2] as f64];
    (BASE_CLASSES[argmax(&as_f)], votes)
}

/// Fits the 5-class post-classifier: forest votes of every row (all five
/// classes) feed an unpruned gain-ratio decision tree.
pub fn train_vote_tree(
    forest: &ForestModel,
    data5: &TrainingSet,
) -> Result<VoteTreeModel, ClassifierError> {
    for required in [InteractionKind::Idle, InteractionKind::Upright] {
        if !data5.rows.iter().any(|r| r.kind == required) {
            return Err(ClassifierError::InsufficientClasses(format!(
                "no {required} rows for the 5-class extension"
            )));
        }
    }
    let mut rows: Vec<([f64; 3], u8)> = data5
        .rows
        .par_iter()
        .map(|r| {
            let fv = crate::features::vector_from_row(r.features, false);
            let (_, votes) = predict3(forest, &fv);
            (
                [votes[0] as f64, votes[1] as f64, votes[2] as f64],
                r.kind.index() as u8,
            )
        })
        .collect();
    // Canonical order for a deterministic tree regardless of row storage.
    rows.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.1.cmp(&b.1))
    });
    Ok(fit_vote_tree(&rows))
}

/// Applies the vote tree to the forest's vote counts.
pub fn predict5(
    forest: &ForestModel,
    vote_tree: &VoteTreeModel,
    fv: &FeatureVector,
) -> InteractionKind {
    let (_, votes) = predict3(forest, fv);
    ALL_CLASSES[vote_tree.predict(&votes) as usize]
}

/// One model per user, each trained with that user's rows left out.
pub fn leave_one_user_out(
    all: &TrainingSet,
    seed: u64,
) -> Result<Vec<(String, ForestModel)>, ClassifierError> {
    let users = all.user_ids();
    if users.len() < 2 {
        return Err(ClassifierError::InsufficientUsers);
    }
    users
        .into_iter()
        .map(|u| {
            let model = train_forest(&all.without_user(&u), seed)?;
            Ok((u, model))
        })
        .collect()
}

/// Helper mirroring `rand::seq` index sampling for tests that need to know
/// how per-tree streams are derived.
pub fn tree_rng(seed: u64, tree_idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_idx as u64 + 1);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::gaussian_training_set;

    #[test]
    fn single_class_data_is_rejected() {
        let mut data = TrainingSet::new();
        for i in 0..10 {
            data.push_raw([i as f64; N_FEATURES], InteractionKind::Typing, "u0");
        }
        assert!(matches!(
            train_forest(&data, 1),
            Err(ClassifierError::InsufficientClasses(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let data = gaussian_training_set(120, 4, 3.0, 9);
        let a = train_forest_with(&data, 7, 20, 4).unwrap();
        let b = train_forest_with(&data, 7, 20, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_order_does_not_change_the_model() {
        let data = gaussian_training_set(90, 3, 3.0, 11);
        let mut shuffled = TrainingSet::new();
        for r in data.rows().iter().rev() {
            shuffled.push_raw(r.features, r.kind, &r.user_id);
        }
        let a = train_forest_with(&data, 3, 15, 4).unwrap();
        let b = train_forest_with(&shuffled, 3, 15, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn votes_sum_to_n_trees_and_tiebreak_is_fixed() {
        let data = gaussian_training_set(120, 4, 3.0, 5);
        let model = train_forest_with(&data, 2, 25, 4).unwrap();
        let fv = crate::features::vector_from_row([0.0; N_FEATURES], false);
        let (kind, votes) = predict3(&model, &fv);
        assert_eq!(votes.iter().sum::<u32>() as usize, model.n_trees);
        let max = *votes.iter().max().unwrap();
        let first_max = BASE_CLASSES[votes.iter().position(|&v| v == max).unwrap()];
        assert_eq!(kind, first_max);
    }

    #[test]
    fn class_weights_follow_imbalance() {
        let mut data = TrainingSet::new();
        for i in 0..30 {
            data.push_raw([i as f64 * 0.01; N_FEATURES], InteractionKind::Typing, "u0");
        }
        for i in 0..10 {
            data.push_raw(
                [5.0 + i as f64 * 0.01; N_FEATURES],
                InteractionKind::Scrolling,
                "u1",
            );
        }
        let model = train_forest_with(&data, 1, 5, 4).unwrap();
        // total / (k · count): 40 / (2 · 30) and 40 / (2 · 10)
        assert!((model.class_weights[0] - 40.0 / 60.0).abs() < 1e-12);
        assert!((model.class_weights[1] - 40.0 / 20.0).abs() < 1e-12);
        assert_eq!(model.class_weights[2], 0.0);
    }

    #[test]
    fn louo_excludes_the_held_out_user() {
        let data = gaussian_training_set(200, 20, 3.0, 17);
        let models = leave_one_user_out(&data, 4).unwrap();
        assert_eq!(models.len(), 20);
        // Spot-check: retraining without the user reproduces the model.
        let (user, model) = &models[3];
        let manual = train_forest(&data.without_user(user), 4).unwrap();
        assert_eq!(*model, manual);
    }

    #[test]
    fn louo_needs_two_users() {
        let data = gaussian_training_set(40, 1, 3.0, 1);
        assert!(matches!(
            leave_one_user_out(&data, 0),
            Err(ClassifierError::InsufficientUsers)
        ));
        let data2 = gaussian_training_set(40, 2, 3.0, 1);
        assert_eq!(leave_one_user_out(&data2, 0).unwrap().len(), 2);
    }

    #[test]
    fn vote_tree_requires_extended_classes() {
        let data = gaussian_training_set(60, 2, 3.0, 3);
        let forest = train_forest_with(&data, 1, 10, 4).unwrap();
        assert!(matches!(
            train_vote_tree(&forest, &data),
            Err(ClassifierError::InsufficientClasses(_))
        ));
    }
}
