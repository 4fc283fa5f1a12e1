//! Edge merging: threshold blended similarities, read groups off the
//! connected components, and split oversized components by raising the
//! threshold internally.

use super::{similarity, EntityGraph};
use crate::anno::GroupMembers;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Similarity scale; falls back to the graph's median-distance sigma.
    pub sigma: Option<f64>,
    /// Base similarity threshold, edges survive strictly above it.
    pub theta: f64,
    /// Blend between global similarity and local score on zoomed edges:
    /// 0 keeps the global value, 1 replaces it with local evidence.
    pub beta: f64,
    pub max_group_size: usize,
    /// Threshold increment when splitting an oversized component.
    pub theta_step: f64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig { sigma: None, theta: 0.5, beta: 1.0, max_group_size: 10, theta_step: 0.05 }
    }
}

impl MergeConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.sigma {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::validation(format!("sigma {s} must be positive")));
            }
        }
        if !self.theta.is_finite() || !(0.0 < self.theta && self.theta < 1.0) {
            return Err(Error::validation(format!("theta {} outside (0, 1)", self.theta)));
        }
        if !self.beta.is_finite() || !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::validation(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.max_group_size < 2 {
            return Err(Error::validation("max_group_size must be at least 2"));
        }
        if !self.theta_step.is_finite() || self.theta_step <= 0.0 {
            return Err(Error::validation("theta_step must be positive"));
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components over `ids` and the surviving edges, each component
/// sorted, components ordered by smallest member.
fn components(ids: &[u32], edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let index: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    for &(a, b) in edges {
        uf.union(index[&a], index[&b]);
    }
    let mut by_root: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        by_root.entry(uf.find(i)).or_default().push(id);
    }
    by_root.into_values().collect()
}

/// Splits one oversized component by raising the threshold on its internal
/// edges until every piece fits or the threshold leaves (0, 1]. A component
/// that never splits is kept oversized rather than shattered.
fn split_component(
    members: Vec<u32>,
    edges: &[(u32, u32, f64)],
    theta: f64,
    config: &MergeConfig,
    out: &mut Vec<Vec<u32>>,
) {
    if members.len() <= config.max_group_size {
        out.push(members);
        return;
    }
    let next_theta = theta + config.theta_step;
    if next_theta > 1.0 {
        out.push(members);
        return;
    }
    let kept: Vec<(u32, u32)> = edges
        .iter()
        .filter(|&&(_, _, s)| s > next_theta)
        .map(|&(a, b, _)| (a, b))
        .collect();
    let member_set: BTreeSet<u32> = members.iter().copied().collect();
    for sub in components(&members, &kept) {
        let sub_set: BTreeSet<u32> = sub.iter().copied().collect();
        if sub_set.len() == member_set.len() {
            // did not split at this level; try a higher threshold on the
            // same edge set
            split_component(sub, edges, next_theta, config, out);
            continue;
        }
        let sub_edges: Vec<(u32, u32, f64)> = edges
            .iter()
            .filter(|&&(a, b, _)| sub_set.contains(&a) && sub_set.contains(&b))
            .copied()
            .collect();
        split_component(sub, &sub_edges, next_theta, config, out);
    }
}

/// Blended per-edge similarity: zoomed edges mix the local score in at
/// weight beta, all others keep the global similarity.
fn edge_similarity(
    w_global: f64,
    w_local: Option<f64>,
    zoomed: bool,
    sigma: f64,
    beta: f64,
    use_local: bool,
) -> Result<f64> {
    let global = similarity(w_global, sigma);
    if !(use_local && zoomed) {
        return Ok(global);
    }
    let local = w_local.ok_or_else(|| {
        Error::validation("zoomed edge is missing its local score")
    })?;
    Ok((1.0 - beta) * global + beta * local)
}

/// Thresholds the graph and returns the connected components of size >= 2
/// as predicted groups, numbered from 1 in order of smallest member.
/// Components above `max_group_size` are re-thresholded internally.
pub fn merge_edges(
    graph: &EntityGraph,
    config: &MergeConfig,
    use_local: bool,
) -> Result<Vec<GroupMembers>> {
    config.validate()?;
    let sigma = config.sigma.unwrap_or(graph.sigma);
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::validation(format!("similarity scale {sigma} must be positive")));
    }

    let mut scored: Vec<(u32, u32, f64)> = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let s = edge_similarity(e.w_global, e.w_local, e.zoomed, sigma, config.beta, use_local)?;
        scored.push((e.a, e.b, s));
    }

    let ids: Vec<u32> = graph.embeddings.keys().copied().collect();
    let kept: Vec<(u32, u32)> = scored
        .iter()
        .filter(|&&(_, _, s)| s > config.theta)
        .map(|&(a, b, _)| (a, b))
        .collect();

    let mut finished = Vec::new();
    for comp in components(&ids, &kept) {
        if comp.len() <= config.max_group_size {
            finished.push(comp);
            continue;
        }
        let comp_set: BTreeSet<u32> = comp.iter().copied().collect();
        let comp_edges: Vec<(u32, u32, f64)> = scored
            .iter()
            .filter(|&&(a, b, _)| comp_set.contains(&a) && comp_set.contains(&b))
            .copied()
            .collect();
        split_component(comp, &comp_edges, config.theta, config, &mut finished);
    }

    finished.retain(|c| c.len() >= 2);
    finished.sort_by_key(|c| c[0]);
    Ok(finished
        .into_iter()
        .enumerate()
        .map(|(i, members)| GroupMembers {
            group_id: (i + 1) as u32,
            members: members.into_iter().collect(),
        })
        .collect())
}
