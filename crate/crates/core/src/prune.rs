//! Expert-set reconstruction from estimated neighborhoods.
//!
//! A node `s` is a knot when the intersection of its neighbors'
//! neighborhoods, `A_s = ∩_{r ∈ N_s} N_r`, is exactly `{s}`. Knots are
//! ranked by neighborhood size (descending, ties by ascending id) and knot
//! `s` with 1-based rank `i_s` is kept when `|N_s| >= i_s - 1`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::NeighborhoodMap;

/// `A_s` for one node with a nonempty neighborhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeIntersection {
    pub node: usize,
    pub intersection: BTreeSet<usize>,
    pub is_knot: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnotSet {
    /// One entry per node with a nonempty neighborhood, ascending node id.
    pub nodes: Vec<NodeIntersection>,
    /// Nodes with an empty neighborhood; never knots.
    pub isolated: Vec<usize>,
}

impl KnotSet {
    pub fn knots(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.is_knot).map(|n| n.node).collect()
    }

    pub fn intersection(&self, s: usize) -> Option<&BTreeSet<usize>> {
        self.nodes.iter().find(|n| n.node == s).map(|n| &n.intersection)
    }
}

/// Compute `A_s` for every node and mark the knots.
pub fn knot_set(nbhd: &NeighborhoodMap) -> KnotSet {
    let sets: Vec<BTreeSet<usize>> = (0..=nbhd.p())
        .map(|s| if s == 0 { BTreeSet::new() } else { nbhd.neighbor_set(s) })
        .collect();
    let mut out = KnotSet::default();
    for s in 1..=nbhd.p() {
        let mut nbrs = sets[s].iter();
        let Some(&first) = nbrs.next() else {
            out.isolated.push(s);
            continue;
        };
        let mut acc = sets[first].clone();
        for &r in nbrs {
            acc.retain(|x| sets[r].contains(x));
            if acc.is_empty() {
                break;
            }
        }
        let is_knot = acc.len() == 1 && acc.contains(&s);
        out.nodes.push(NodeIntersection {
            node: s,
            intersection: acc,
            is_knot,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotEntry {
    pub node: usize,
    pub size: usize,
    /// 1-based position in the size ordering.
    pub rank: usize,
    pub selected: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotTable {
    pub knots: Vec<KnotEntry>,
}

impl KnotTable {
    pub fn selected(&self) -> BTreeSet<usize> {
        self.knots.iter().filter(|k| k.selected).map(|k| k.node).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub expert_set: BTreeSet<usize>,
    pub table: KnotTable,
    pub flags: Vec<String>,
}

/// Rank the knots and select the experts.
pub fn reconstruct_n0(nbhd: &NeighborhoodMap) -> Reconstruction {
    let knots = knot_set(nbhd);
    let mut ranked: Vec<(usize, usize)> = knots.knots().into_iter().map(|s| (s, nbhd.size(s))).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let table = KnotTable {
        knots: ranked
            .iter()
            .enumerate()
            .map(|(i, &(node, size))| KnotEntry {
                node,
                size,
                rank: i + 1,
                selected: size >= i,
            })
            .collect(),
    };

    let mut flags = Vec::new();
    if !knots.isolated.is_empty() {
        flags.push(format!("nodes with empty neighborhoods skipped: {:?}", knots.isolated));
    }
    if table.knots.is_empty() {
        flags.push("no knots found: expert set is empty".to_owned());
    }
    let tied_at_boundary = table
        .knots
        .windows(2)
        .any(|w| w[0].size == w[1].size && w[0].selected != w[1].selected);
    if tied_at_boundary {
        flags.push("selection boundary falls inside a group of equal sizes".to_owned());
    }
    Reconstruction {
        expert_set: table.selected(),
        table,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::approximate;
    use crate::fixtures::five_expert_graph;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn reference_graph_knots() {
        let nb = approximate(&five_expert_graph()).unwrap().neighborhoods();
        let knots = knot_set(&nb);
        assert_eq!(knots.knots(), vec![1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 12, 16]);
        assert_eq!(knots.intersection(8).unwrap(), &set(&[1, 4, 8]));
        assert_eq!(knots.intersection(16).unwrap(), &set(&[16]));
    }

    #[test]
    fn reference_graph_reconstruction() {
        let nb = approximate(&five_expert_graph()).unwrap().neighborhoods();
        let r = reconstruct_n0(&nb);
        assert_eq!(r.expert_set, set(&[1, 2, 3, 4, 5]));
        let sizes: Vec<usize> = r.table.knots.iter().map(|k| k.size).collect();
        assert_eq!(sizes, vec![6, 6, 6, 5, 4, 3, 3, 3, 2, 2, 2, 2]);
        assert!(r.table.knots.iter().enumerate().all(|(i, k)| k.rank == i + 1));
    }

    #[test]
    fn empty_map_gives_flagged_empty_set() {
        let r = reconstruct_n0(&NeighborhoodMap::new(4));
        assert!(r.expert_set.is_empty());
        assert!(r.flags.iter().any(|f| f.contains("no knots")));
    }

    #[test]
    fn single_star() {
        let nb = NeighborhoodMap::from_sets(3, &[(1, vec![2, 3]), (2, vec![1]), (3, vec![1])]).unwrap();
        assert_eq!(knot_set(&nb).knots(), vec![1]);
        let r = reconstruct_n0(&nb);
        assert_eq!(r.expert_set, set(&[1]));
        assert_eq!(
            r.table.knots,
            vec![KnotEntry {
                node: 1,
                size: 2,
                rank: 1,
                selected: true
            }]
        );
    }

    #[test]
    fn relabeling_permutes_the_output() {
        let nb = approximate(&five_expert_graph()).unwrap().neighborhoods();
        let p = nb.p();
        // reverse ids: s -> p + 1 - s
        let map = |s: usize| p + 1 - s;
        let mut relabeled = NeighborhoodMap::new(p);
        for s in 1..=p {
            for (&t, &w) in nb.neighbors(s) {
                relabeled.insert(map(s), map(t), w).unwrap();
            }
        }
        let a: BTreeSet<usize> = reconstruct_n0(&nb).expert_set.into_iter().map(map).collect();
        assert_eq!(a, reconstruct_n0(&relabeled).expert_set);
    }
}
