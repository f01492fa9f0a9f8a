//! Post-classifier for the 5-class real-time extension: an unpruned
//! entropy/gain-ratio decision tree over the forest's 3-dimensional vote
//! vector, predicting one of the five classes.

use crate::interaction::ALL_CLASSES;

pub const N_VOTE_FEATURES: usize = 3;
pub const N_ALL: usize = ALL_CLASSES.len();

#[derive(Debug, Clone, PartialEq)]
pub enum VoteNode {
    Split {
        feature: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        class: u8,
        counts: [u32; N_ALL],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoteTreeModel {
    pub nodes: Vec<VoteNode>,
}

impl VoteTreeModel {
    pub fn predict(&self, votes: &[u32; N_VOTE_FEATURES]) -> u8 {
        let row = [votes[0] as f64, votes[1] as f64, votes[2] as f64];
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                VoteNode::Leaf { class, .. } => return *class,
                VoteNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

const MIN_GAIN: f64 = 1e-12;

/// Fits the tree on (vote vector, class index) rows. Deterministic: every
/// split considers all three vote features and picks the best gain ratio.
pub fn fit_vote_tree(rows: &[([f64; N_VOTE_FEATURES], u8)]) -> VoteTreeModel {
    let mut nodes = Vec::new();
    let indices: Vec<u32> = (0..rows.len() as u32).collect();
    build(rows, &mut nodes, indices);
    VoteTreeModel { nodes }
}

fn counts_of(rows: &[([f64; N_VOTE_FEATURES], u8)], indices: &[u32]) -> [u32; N_ALL] {
    let mut counts = [0u32; N_ALL];
    for &i in indices {
        counts[rows[i as usize].1 as usize] += 1;
    }
    counts
}

fn build(rows: &[([f64; N_VOTE_FEATURES], u8)], nodes: &mut Vec<VoteNode>, indices: Vec<u32>) -> u32 {
    let counts = counts_of(rows, &indices);
    let n_present = counts.iter().filter(|&&c| c > 0).count();
    if indices.len() < 2 || n_present <= 1 {
        return push_leaf(nodes, counts);
    }
    let Some((feature, threshold)) = best_split(rows, &indices, &counts) else {
        return push_leaf(nodes, counts);
    };
    let node_id = nodes.len() as u32;
    nodes.push(VoteNode::Leaf {
        class: 0,
        counts: [0; N_ALL],
    });
    let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = indices
        .into_iter()
        .partition(|&i| rows[i as usize].0[feature as usize] <= threshold);
    let left = build(rows, nodes, left_idx);
    let right = build(rows, nodes, right_idx);
    nodes[node_id as usize] = VoteNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    node_id
}

fn best_split(
    rows: &[([f64; N_VOTE_FEATURES], u8)],
    indices: &[u32],
    parent_counts: &[u32; N_ALL],
) -> Option<(u8, f64)> {
    let n = indices.len() as f64;
    let parent_h = entropy(parent_counts, n);
    let mut best: Option<(f64, u8, f64)> = None;
    for feature in 0..N_VOTE_FEATURES {
        let mut vals: Vec<(f64, u8)> = indices
            .iter()
            .map(|&i| (rows[i as usize].0[feature], rows[i as usize].1))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0u32; N_ALL];
        for k in 0..vals.len() - 1 {
            left[vals[k].1 as usize] += 1;
            if vals[k].0 == vals[k + 1].0 {
                continue;
            }
            let left_n = (k + 1) as f64;
            let right_n = n - left_n;
            let mut right = *parent_counts;
            for (r, l) in right.iter_mut().zip(left.iter()) {
                *r -= l;
            }
            let gain =
                parent_h - (left_n * entropy(&left, left_n) + right_n * entropy(&right, right_n)) / n;
            if gain <= MIN_GAIN {
                continue;
            }
            let split_info = -(left_n / n) * (left_n / n).log2() - (right_n / n) * (right_n / n).log2();
            let ratio = gain / split_info;
            if ratio > best.map_or(MIN_GAIN, |(r, _, _)| r) {
                let (a, b) = (vals[k].0, vals[k + 1].0);
                let mut thr = 0.5 * (a + b);
                if thr >= b {
                    thr = a;
                }
                best = Some((ratio, feature as u8, thr));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn push_leaf(nodes: &mut Vec<VoteNode>, counts: [u32; N_ALL]) -> u32 {
    let mut class = 0usize;
    for (i, c) in counts.iter().enumerate().skip(1) {
        if *c > counts[class] {
            class = i;
        }
    }
    let id = nodes.len() as u32;
    nodes.push(VoteNode::Leaf {
        class: class as u8,
        counts,
    });
    id
}

fn entropy(counts: &[u32; N_ALL], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}
