//! Single-linkage hierarchy, condensed cluster tree and flat cluster selection.

use serde::{Deserialize, Serialize};

use crate::assignment::{ClusterAssignment, NOISE};

const MIN_LAMBDA_DISTANCE: f64 = 1e-12;

pub fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(MIN_LAMBDA_DISTANCE)
}

/// Weighted spanning-tree edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Merge `t` joins nodes `left` and `right` into node `n + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageRow {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

pub fn single_linkage(n: usize, mst: &[Edge]) -> Vec<LinkageRow> {
    let mut edges = mst.to_vec();
    edges.sort_by(|x, y| x.weight.total_cmp(&y.weight));
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut rows = Vec::with_capacity(n.saturating_sub(1));
    for (t, e) in edges.iter().enumerate() {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        let node = n + t;
        parent[ra] = node;
        parent[rb] = node;
        size[node] = size[ra] + size[rb];
        rows.push(LinkageRow { left: ra.min(rb), right: ra.max(rb), distance: e.weight, size: size[node] });
    }
    rows
}

/// A condensed-tree row: `child` (a point if `< n_points`, else a cluster)
/// leaves `parent` at density `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedRow {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub lambda_birth: f64,
    pub lambda_death: f64,
    pub size: usize,
    pub stability: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub rows: Vec<CondensedRow>,
    /// Indexed by `id - n_points`; the root is `n_points`.
    pub clusters: Vec<ClusterNode>,
}

fn leaves_under(linkage: &[LinkageRow], n: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(v) = stack.pop() {
        if v < n {
            out.push(v);
        } else {
            let r = &linkage[v - n];
            stack.push(r.right);
            stack.push(r.left);
        }
    }
    out
}

pub fn condense(linkage: &[LinkageRow], n: usize, min_cluster_size: usize) -> CondensedTree {
    let mut rows = Vec::new();
    let root_cluster = n;
    let mut next_label = n + 1;
    let mut clusters = vec![ClusterNode {
        id: root_cluster,
        parent: None,
        lambda_birth: 0.0,
        lambda_death: 0.0,
        size: n,
        stability: 0.0,
        selected: false,
    }];
    if n == 1 {
        rows.push(CondensedRow { parent: root_cluster, child: 0, lambda: 0.0, size: 1 });
    }
    let size_of = |v: usize| if v < n { 1 } else { linkage[v - n].size };

    // (linkage node, cluster it belongs to)
    let mut stack = if n >= 2 { vec![(2 * n - 2, root_cluster)] } else { vec![] };
    while let Some((node, cluster)) = stack.pop() {
        let r = linkage[node - n];
        let lambda = lambda_of(r.distance);
        let (l, rt) = (r.left, r.right);
        let (ls, rs) = (size_of(l), size_of(rt));
        let spill = |v: usize, rows: &mut Vec<CondensedRow>| {
            for p in leaves_under(linkage, n, v) {
                rows.push(CondensedRow { parent: cluster, child: p, lambda, size: 1 });
            }
        };
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for (v, s) in [(l, ls), (rt, rs)] {
                    let id = next_label;
                    next_label += 1;
                    rows.push(CondensedRow { parent: cluster, child: id, lambda, size: s });
                    clusters.push(ClusterNode {
                        id,
                        parent: Some(cluster),
                        lambda_birth: lambda,
                        lambda_death: lambda,
                        size: s,
                        stability: 0.0,
                        selected: false,
                    });
                    if v >= n {
                        stack.push((v, id));
                    } else {
                        rows.push(CondensedRow { parent: id, child: v, lambda, size: 1 });
                    }
                }
            }
            (false, false) => {
                spill(l, &mut rows);
                spill(rt, &mut rows);
            }
            (true, false) | (false, true) => {
                let (big, small) = if ls >= min_cluster_size { (l, rt) } else { (rt, l) };
                spill(small, &mut rows);
                if big >= n {
                    stack.push((big, cluster));
                } else {
                    rows.push(CondensedRow { parent: cluster, child: big, lambda, size: 1 });
                }
            }
        }
    }

    for row in &rows {
        let c = &mut clusters[row.parent - n];
        c.stability += (row.lambda - c.lambda_birth) * row.size as f64;
        c.lambda_death = c.lambda_death.max(row.lambda);
    }
    CondensedTree { n_points: n, rows, clusters }
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.n_points
    }

    pub fn node(&self, id: usize) -> &ClusterNode {
        &self.clusters[id - self.n_points]
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.clusters.iter().filter(|c| c.parent == Some(id)).map(|c| c.id).collect()
    }

    fn child_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.clusters.len()];
        for c in &self.clusters {
            if let Some(p) = c.parent {
                lists[p - self.n_points].push(c.id);
            }
        }
        lists
    }

    fn descendants(&self, lists: &[Vec<usize>], id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = lists[id - self.n_points].clone();
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(&lists[c - self.n_points]);
        }
        out
    }

    /// Excess-of-Mass selection. The root only counts when it never splits.
    pub fn select_eom(&mut self) {
        let n = self.n_points;
        let lists = self.child_lists();
        if lists[0].is_empty() {
            self.clusters[0].selected = true;
            return;
        }
        let mut best: Vec<f64> = self.clusters.iter().map(|c| c.stability).collect();
        for c in self.clusters.iter_mut().skip(1) {
            c.selected = true;
        }
        // children always carry larger ids than their parent
        for idx in (1..self.clusters.len()).rev() {
            let id = self.clusters[idx].id;
            let kids = &lists[idx];
            let child_total: f64 = kids.iter().map(|&k| best[k - n]).sum();
            if !kids.is_empty() && child_total > self.clusters[idx].stability {
                self.clusters[idx].selected = false;
                best[idx] = child_total;
            } else {
                for d in self.descendants(&lists, id) {
                    self.clusters[d - n].selected = false;
                }
            }
        }
    }

    /// Replaces every selected cluster born below distance `epsilon` by its
    /// highest ancestor that is still below `epsilon`, never the root.
    pub fn merge_epsilon(&mut self, epsilon: f64) {
        if epsilon <= 0.0 || self.clusters[0].selected {
            return;
        }
        let n = self.n_points;
        let root = self.root();
        let birth_distance = |c: &ClusterNode| 1.0 / c.lambda_birth;
        let selected: Vec<usize> = self.clusters.iter().filter(|c| c.selected).map(|c| c.id).collect();
        let mut chosen = Vec::new();
        for leaf in selected {
            let mut cur = leaf;
            if birth_distance(self.node(cur)) < epsilon {
                loop {
                    let parent = self.node(cur).parent.expect("non-root");
                    if parent == root {
                        break;
                    }
                    cur = parent;
                    if birth_distance(self.node(cur)) > epsilon {
                        break;
                    }
                }
            }
            chosen.push(cur);
        }
        for c in self.clusters.iter_mut() {
            c.selected = false;
        }
        for &c in &chosen {
            self.clusters[c - n].selected = true;
        }
        let lists = self.child_lists();
        for &c in &chosen {
            for d in self.descendants(&lists, c) {
                self.clusters[d - n].selected = false;
            }
        }
    }

    /// Each point takes the nearest selected ancestor of the cluster it left.
    pub fn labels(&self) -> ClusterAssignment {
        let n = self.n_points;
        let mut flat = vec![NOISE as i64; self.clusters.len()];
        let mut next = 0i64;
        for (idx, c) in self.clusters.iter().enumerate() {
            if c.selected {
                flat[idx] = next;
                next += 1;
            }
        }
        let owner = |mut id: usize| -> i64 {
            loop {
                let c = &self.clusters[id - n];
                if c.selected {
                    return flat[id - n];
                }
                match c.parent {
                    Some(p) => id = p,
                    None => return -1,
                }
            }
        };
        let mut raw = vec![-1i64; n];
        for row in &self.rows {
            if row.child < n {
                raw[row.child] = owner(row.parent);
            }
        }
        ClusterAssignment::from_raw(&raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(weights: &[f64]) -> Vec<Edge> {
        weights.iter().enumerate().map(|(i, &w)| Edge { a: i, b: i + 1, weight: w }).collect()
    }

    #[test]
    fn linkage_from_chain() {
        let l = single_linkage(4, &chain(&[3.0, 1.0, 2.0]));
        assert_eq!(l[0], LinkageRow { left: 1, right: 2, distance: 1.0, size: 2 });
        assert_eq!(l[1], LinkageRow { left: 3, right: 4, distance: 2.0, size: 3 });
        assert_eq!(l[2], LinkageRow { left: 0, right: 5, distance: 3.0, size: 4 });
    }

    #[test]
    fn condensed_two_groups_and_stragglers() {
        // points 0..3 tight, 3..6 tight, 6 far away
        let mst = vec![
            Edge { a: 0, b: 1, weight: 0.5 },
            Edge { a: 1, b: 2, weight: 0.5 },
            Edge { a: 3, b: 4, weight: 0.5 },
            Edge { a: 4, b: 5, weight: 0.5 },
            Edge { a: 2, b: 3, weight: 4.0 },
            Edge { a: 5, b: 6, weight: 10.0 },
        ];
        let l = single_linkage(7, &mst);
        let mut t = condense(&l, 7, 3);
        assert_eq!(t.clusters.len(), 3);
        assert_eq!(t.children(7), vec![8, 9]);
        assert_eq!(t.node(8).lambda_birth, 0.25);
        // the straggler falls out of the root
        assert!(t.rows.contains(&CondensedRow { parent: 7, child: 6, lambda: 0.1, size: 1 }));
        // each child: three points leaving at lambda 2 after birth 0.25
        assert!((t.node(8).stability - 3.0 * 1.75).abs() < 1e-12);
        t.select_eom();
        let a = t.labels();
        assert_eq!(a.labels, vec![0, 0, 0, 1, 1, 1, -1]);
    }

    #[test]
    fn root_selected_when_it_never_splits() {
        let l = single_linkage(5, &chain(&[1.0, 1.0, 1.0, 1.0]));
        let mut t = condense(&l, 5, 2);
        assert!(t.children(5).is_empty());
        t.select_eom();
        assert_eq!(t.labels().labels, vec![0; 5]);
    }

    #[test]
    fn zero_distance_lambda_is_finite() {
        assert_eq!(lambda_of(0.0), 1e12);
        assert_eq!(lambda_of(2.0), 0.5);
    }
}
