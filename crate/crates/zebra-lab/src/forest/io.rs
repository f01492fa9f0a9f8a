//! Model file: structured text serialization of the forest (and the optional
//! vote tree) that reloads to bit-identical predictions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::features::COLUMNS;
use crate::interaction::BASE_CLASSES;

use super::tree::{DecisionTree, Node, N_BASE};
use super::vote::{VoteNode, VoteTreeModel, N_ALL};
use super::{ClassifierError, ForestModel};

/// A forest plus the optional 5-class vote tree, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub forest: ForestModel,
    pub vote_tree: Option<VoteTreeModel>,
}

const HEADER: &str = "#zebra-model v1";
const CONVENTIONS: &str = "#conventions: variance=sample(n-1) kurtosis=excess-bias-corrected \
skewness=bias-corrected iqr=linear-rank autocorrelation=lag1 leaf=weighted-majority \
ties=class-order split=value<=threshold";

pub fn write_model_string(model: &SavedModel) -> String {
    let f = &model.forest;
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{CONVENTIONS}");
    let _ = writeln!(out, "n_trees={}", f.n_trees);
    let _ = writeln!(out, "features_per_split={}", f.features_per_split);
    let _ = writeln!(out, "train_seed={}", f.train_seed);
    let classes: Vec<&str> = BASE_CLASSES.iter().map(|c| c.token()).collect();
    let _ = writeln!(out, "classes={}", classes.join(" "));
    let weights: Vec<String> = f.class_weights.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "class_weights={}", weights.join(" "));
    let _ = writeln!(out, "features={}", COLUMNS.join(" "));
    for tree in &f.trees {
        let _ = writeln!(out, "tree {}", tree.nodes.len());
        for node in &tree.nodes {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "split {feature} {threshold} {left} {right}");
                }
                Node::Leaf {
                    class,
                    weighted_counts,
                } => {
                    let _ = writeln!(
                        out,
                        "leaf {class} {} {} {}",
                        weighted_counts[0], weighted_counts[1], weighted_counts[2]
                    );
                }
            }
        }
    }
    if let Some(vt) = &model.vote_tree {
        let _ = writeln!(out, "vote_tree {}", vt.nodes.len());
        for node in &vt.nodes {
            match node {
                VoteNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "vsplit {feature} {threshold} {left} {right}");
                }
                VoteNode::Leaf { class, counts } => {
                    let counts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                    let _ = writeln!(out, "vleaf {class} {}", counts.join(" "));
                }
            }
        }
    }
    let _ = writeln!(out, "end");
    out
}

pub fn read_model_str(text: &str) -> Result<SavedModel, ClassifierError> {
    let mut lines = text.lines().enumerate().peekable();
    let bad = |n: usize| ClassifierError::MalformedModel(n + 1);

    let (n0, first) = lines.next().ok_or_else(|| bad(0))?;
    if first != HEADER {
        return Err(bad(n0));
    }
    let mut n_trees = None;
    let mut features_per_split = None;
    let mut train_seed = None;
    let mut class_weights = [0.0; N_BASE];
    loop {
        let Some(&(n, line)) = lines.peek() else {
            return Err(bad(0));
        };
        if line.starts_with("tree ") {
            break;
        }
        lines.next();
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| bad(n))?;
        match key {
            "n_trees" => n_trees = Some(value.parse().map_err(|_| bad(n))?),
            "features_per_split" => features_per_split = Some(value.parse().map_err(|_| bad(n))?),
            "train_seed" => train_seed = Some(value.parse().map_err(|_| bad(n))?),
            "class_weights" => {
                let parts: Vec<&str> = value.split(' ').collect();
                if parts.len() != N_BASE {
                    return Err(bad(n));
                }
                for (w, p) in class_weights.iter_mut().zip(parts) {
                    *w = p.parse().map_err(|_| bad(n))?;
                }
            }
            "classes" | "features" => {} // informational digests
            _ => return Err(bad(n)),
        }
    }
    let n_trees = n_trees.ok_or_else(|| bad(0))?;
    let features_per_split = features_per_split.ok_or_else(|| bad(0))?;
    let train_seed = train_seed.ok_or_else(|| bad(0))?;

    let mut trees = Vec::with_capacity(n_trees);
    let mut vote_tree = None;
    while let Some((n, line)) = lines.next() {
        if line == "end" {
            let forest = ForestModel {
                trees,
                n_trees,
                features_per_split,
                class_weights,
                train_seed,
            };
            if forest.trees.len() != n_trees {
                return Err(bad(n));
            }
            return Ok(SavedModel { forest, vote_tree });
        }
        if let Some(count) = line.strip_prefix("tree ") {
            let count: usize = count.parse().map_err(|_| bad(n))?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let (m, node_line) = lines.next().ok_or_else(|| bad(n))?;
                nodes.push(parse_node(node_line).ok_or_else(|| bad(m))?);
            }
            trees.push(DecisionTree { nodes });
        } else if let Some(count) = line.strip_prefix("vote_tree ") {
            let count: usize = count.parse().map_err(|_| bad(n))?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let (m, node_line) = lines.next().ok_or_else(|| bad(n))?;
                nodes.push(parse_vote_node(node_line).ok_or_else(|| bad(m))?);
            }
            vote_tree = Some(VoteTreeModel { nodes });
        } else {
            return Err(bad(n));
        }
    }
    Err(bad(0))
}

fn parse_node(line: &str) -> Option<Node> {
    let parts: Vec<&str> = line.split(' ').collect();
    match parts.as_slice() {
        ["split", f, t, l, r] => Some(Node::Split {
            feature: f.parse().ok()?,
            threshold: t.parse().ok()?,
            left: l.parse().ok()?,
            right: r.parse().ok()?,
        }),
        ["leaf", c, w0, w1, w2] => Some(Node::Leaf {
            class: c.parse().ok()?,
            weighted_counts: [w0.parse().ok()?, w1.parse().ok()?, w2.parse().ok()?],
        }),
        _ => None,
    }
}

fn parse_vote_node(line: &str) -> Option<VoteNode> {
    let parts: Vec<&str> = line.split(' ').collect();
    match parts.as_slice() {
        ["vsplit", f, t, l, r] => Some(VoteNode::Split {
            feature: f.parse().ok()?,
            threshold: t.parse().ok()?,
            left: l.parse().ok()?,
            right: r.parse().ok()?,
        }),
        [first, rest @ ..] if *first == "vleaf" && rest.len() == 1 + N_ALL => {
            let class = rest[0].parse().ok()?;
            let mut counts = [0u32; N_ALL];
            for (c, p) in counts.iter_mut().zip(&rest[1..]) {
                *c = p.parse().ok()?;
            }
            Some(VoteNode::Leaf { class, counts })
        }
        _ => None,
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<(), ClassifierError> {
    fs::write(path, write_model_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel, ClassifierError> {
    let text = fs::read_to_string(path)?;
    read_model_str(&text)
}

#[cfg(test)]
mod tests {
    use super::super::{train_forest_with, train_vote_tree};
    use super::*;
    use crate::adversary::{gaussian_training_set, gaussian_training_set_5class};

    #[test]
    fn model_file_roundtrips_to_identical_model() {
        let data = gaussian_training_set(150, 5, 3.0, 21);
        let forest = train_forest_with(&data, 13, 12, 4).unwrap();
        let data5 = gaussian_training_set_5class(200, 5, 3.0, 22);
        let vote_tree = train_vote_tree(&forest, &data5).unwrap();
        let saved = SavedModel {
            forest,
            vote_tree: Some(vote_tree),
        };
        let text = write_model_string(&saved);
        let reloaded = read_model_str(&text).unwrap();
        assert_eq!(reloaded, saved);
        assert_eq!(write_model_string(&reloaded), text);
    }

    #[test]
    fn malformed_model_is_rejected() {
        assert!(read_model_str("not a model").is_err());
        let data = gaussian_training_set(60, 2, 3.0, 2);
        let forest = train_forest_with(&data, 1, 3, 4).unwrap();
        let text = write_model_string(&SavedModel {
            forest,
            vote_tree: None,
        });
        let truncated = &text[..text.len() / 2];
        assert!(read_model_str(truncated).is_err());
    }
}
