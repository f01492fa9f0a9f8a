//! Fully grown binary decision trees over the 24-feature space with
//! weighted Gini splits and per-node feature subsampling.

use rand_chacha::ChaCha8Rng;

use crate::features::N_FEATURES;

pub const N_BASE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: u16,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        class: u8,
        weighted_counts: [f64; N_BASE],
    },
}

/// One tree of the forest; the root is node 0 and `value <= threshold`
/// descends left.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64; N_FEATURES]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
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

pub struct TreeBuilder<'a> {
    pub features: &'a [[f64; N_FEATURES]],
    pub labels: &'a [u8],
    pub class_weights: &'a [f64; N_BASE],
    pub features_per_split: usize,
}

const MIN_GAIN: f64 = 1e-12;

impl TreeBuilder<'_> {
    /// Grows a tree on the given sample indices: nodes split until pure or
    /// fewer than two samples remain (or no informative split exists).
    pub fn grow(&self, indices: Vec<u32>, rng: &mut ChaCha8Rng) -> DecisionTree {
        let mut nodes = Vec::new();
        self.build(&mut nodes, indices, rng);
        DecisionTree { nodes }
    }

    fn weighted_counts(&self, indices: &[u32]) -> [f64; N_BASE] {
        let mut counts = [0.0; N_BASE];
        for &i in indices {
            let c = self.labels[i as usize] as usize;
            counts[c] += self.class_weights[c];
        }
        counts
    }

    fn build(&self, nodes: &mut Vec<Node>, indices: Vec<u32>, rng: &mut ChaCha8Rng) -> u32 {
        let counts = self.weighted_counts(&indices);
        let n_present = counts.iter().filter(|&&w| w > 0.0).count();
        if indices.len() < 2 || n_present <= 1 {
            return push_leaf(nodes, counts);
        }

        let split = self.best_split(&indices, &counts, rng);
        let Some((feature, threshold)) = split else {
            return push_leaf(nodes, counts);
        };

        let node_id = nodes.len() as u32;
        nodes.push(Node::Leaf {
            class: 0,
            weighted_counts: [0.0; N_BASE],
        });
        let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = indices
            .into_iter()
            .partition(|&i| self.features[i as usize][feature as usize] <= threshold);
        let left = self.build(nodes, left_idx, rng);
        let right = self.build(nodes, right_idx, rng);
        nodes[node_id as usize] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        node_id
    }

    fn best_split(
        &self,
        indices: &[u32],
        parent_counts: &[f64; N_BASE],
        rng: &mut ChaCha8Rng,
    ) -> Option<(u16, f64)> {
        let total_w: f64 = parent_counts.iter().sum();
        let parent_imp = gini(parent_counts, total_w);
        let k = self.features_per_split.min(N_FEATURES);
        let candidates = rand::seq::index::sample(rng, N_FEATURES, k);

        let mut best: Option<(f64, u16, f64)> = None;
        let mut vals: Vec<(f64, u8)> = Vec::with_capacity(indices.len());
        for feature in candidates.iter() {
            vals.clear();
            vals.extend(
                indices
                    .iter()
                    .map(|&i| (self.features[i as usize][feature], self.labels[i as usize])),
            );
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = [0.0; N_BASE];
            let mut left_w = 0.0;
            for k in 0..vals.len() - 1 {
                let c = vals[k].1 as usize;
                left[c] += self.class_weights[c];
                left_w += self.class_weights[c];
                if vals[k].0 == vals[k + 1].0 {
                    continue;
                }
                let mut right = *parent_counts;
                for (r, l) in right.iter_mut().zip(left.iter()) {
                    *r -= l;
                }
                let right_w = total_w - left_w;
                let gain = parent_imp
                    - (left_w * gini(&left, left_w) + right_w * gini(&right, right_w)) / total_w;
                if gain > best.map_or(MIN_GAIN, |(g, _, _)| g) {
                    let (a, b) = (vals[k].0, vals[k + 1].0);
                    let mut thr = 0.5 * (a + b);
                    if thr >= b {
                        thr = a;
                    }
                    best = Some((gain, feature as u16, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn push_leaf(nodes: &mut Vec<Node>, counts: [f64; N_BASE]) -> u32 {
    let class = argmax(&counts) as u8;
    let id = nodes.len() as u32;
    nodes.push(Node::Leaf {
        class,
        weighted_counts: counts,
    });
    id
}

/// Index of the maximum; ties resolve to the lowest index, which is the
/// fixed class order Typing < Scrolling < MKKM.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn gini(counts: &[f64; N_BASE], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let mut g = 1.0;
    for c in counts {
        let p = c / total;
        g -= p * p;
    }
    g
}
