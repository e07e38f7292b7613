//! Domain types shared by every stage of the pipeline.
//!
//! Node `0` is always the hidden true label; observed classifiers are the
//! nodes `1..=p`, and classifier `s` is stored in column `s` of a
//! [`LabelMatrix`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::half_logit;

/// Observed `{-1, +1}` outputs of `p` classifiers on `n` instances, with an
/// optional hidden-truth column.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatrix {
    n: usize,
    p: usize,
    // column-major: classifier s occupies values[(s - 1) * n..s * n]
    values: Vec<i8>,
    classifier_ids: Vec<String>,
    instance_ids: Vec<String>,
    truth: Option<Vec<i8>>,
}

fn check_spins(xs: &[i8], what: &str) -> Result<()> {
    match xs.iter().position(|&v| v != 1 && v != -1) {
        Some(i) => Err(Error::Labels(format!(
            "{what} entry {i} is {}, expected -1 or 1",
            xs[i]
        ))),
        None => Ok(()),
    }
}

impl LabelMatrix {
    /// Build from one vector per classifier, with default ids `f1..fp` and `1..n`.
    pub fn from_columns(columns: Vec<Vec<i8>>) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if n < 1 {
            return Err(Error::Labels("need at least one instance".into()));
        }
        if p < 2 {
            return Err(Error::Labels(format!("need at least two classifiers, got {p}")));
        }
        let mut values = Vec::with_capacity(n * p);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Labels(format!(
                    "classifier {} has {} entries, expected {n}",
                    j + 1,
                    col.len()
                )));
            }
            check_spins(col, &format!("classifier {}", j + 1))?;
            values.extend_from_slice(col);
        }
        Ok(LabelMatrix {
            n,
            p,
            values,
            classifier_ids: (1..=p).map(|s| format!("f{s}")).collect(),
            instance_ids: (1..=n).map(|i| i.to_string()).collect(),
            truth: None,
        })
    }

    /// Build from row vectors (one per instance).
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Labels(format!(
                    "row {i} has {} entries, expected {p}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns)
    }

    pub fn with_classifier_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.p {
            return Err(Error::Dimension {
                expected: self.p,
                found: ids.len(),
            });
        }
        let unique: BTreeSet<&String> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(Error::Labels("classifier ids must be unique".into()));
        }
        self.classifier_ids = ids;
        Ok(self)
    }

    pub fn with_instance_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: ids.len(),
            });
        }
        self.instance_ids = ids;
        Ok(self)
    }

    pub fn with_truth(mut self, truth: Vec<i8>) -> Result<Self> {
        if truth.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: truth.len(),
            });
        }
        check_spins(&truth, "truth")?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Outputs of classifier `s` (1-based node id).
    pub fn column(&self, s: usize) -> &[i8] {
        assert!(s >= 1 && s <= self.p, "classifier {s} out of range 1..={}", self.p);
        &self.values[(s - 1) * self.n..s * self.n]
    }

    pub fn get(&self, i: usize, s: usize) -> i8 {
        self.column(s)[i]
    }

    pub fn row(&self, i: usize) -> Vec<i8> {
        (1..=self.p).map(|s| self.get(i, s)).collect()
    }

    pub fn classifier_ids(&self) -> &[String] {
        &self.classifier_ids
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn truth(&self) -> Option<&[i8]> {
        self.truth.as_deref()
    }

    /// Check that every node in `nodes` names a column of this matrix.
    pub fn check_nodes(&self, nodes: &[usize]) -> Result<()> {
        match nodes.iter().find(|&&s| s == 0 || s > self.p) {
            Some(&s) => Err(Error::Structure(format!(
                "classifier {s} is not a column of a {}-classifier matrix",
                self.p
            ))),
            None => Ok(()),
        }
    }
}

/// Pairwise binary Markov random field over the hidden node 0 and the
/// observed classifiers `1..=p`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModelSpec {
    p: usize,
    theta0: f64,
    edges: BTreeMap<(usize, usize), f64>,
    experts: BTreeSet<usize>,
}

impl IsingModelSpec {
    /// Build a model whose expert set is the neighborhood of node 0.
    pub fn new(p: usize, theta0: f64, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let edges = Self::collect_edges(p, edges)?;
        let experts = edges.keys().filter(|&&(s, _)| s == 0).map(|&(_, t)| t).collect();
        Self::finish(p, theta0, edges, experts)
    }

    /// Build a model with an explicitly designated expert set.
    pub fn with_experts(
        p: usize,
        theta0: f64,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        experts: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let edges = Self::collect_edges(p, edges)?;
        Self::finish(p, theta0, edges, experts.into_iter().collect())
    }

    fn collect_edges(
        p: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<BTreeMap<(usize, usize), f64>> {
        let mut out = BTreeMap::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Structure(format!("self-edge on node {a}")));
            }
            if a > p || b > p {
                return Err(Error::Structure(format!("edge ({a},{b}) out of range for p = {p}")));
            }
            if w == 0.0 || !w.is_finite() {
                return Err(Error::Structure(format!(
                    "edge ({a},{b}) has weight {w}; stored weights must be finite and nonzero"
                )));
            }
            let key = (a.min(b), a.max(b));
            if out.insert(key, w).is_some() {
                return Err(Error::Structure(format!("edge ({},{}) listed twice", key.0, key.1)));
            }
        }
        Ok(out)
    }

    fn finish(p: usize, theta0: f64, edges: BTreeMap<(usize, usize), f64>, experts: BTreeSet<usize>) -> Result<Self> {
        if p < 1 {
            return Err(Error::Structure("need at least one observed classifier".into()));
        }
        if !theta0.is_finite() {
            return Err(Error::Structure(format!("external field {theta0} is not finite")));
        }
        if let Some(&s) = experts.iter().find(|&&s| s == 0 || s > p) {
            return Err(Error::Structure(format!("expert {s} out of range 1..={p}")));
        }
        Ok(IsingModelSpec {
            p,
            theta0,
            edges,
            experts,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// External field on node 0.
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Edges as `(s, t, weight)` with `s < t`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(s, t), &w)| (s, t, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Weight of the pair `{s, t}`, zero when absent.
    pub fn weight(&self, s: usize, t: usize) -> f64 {
        self.edges.get(&(s.min(t), s.max(t))).copied().unwrap_or(0.0)
    }

    pub fn expert_set(&self) -> &BTreeSet<usize> {
        &self.experts
    }

    /// Adjacency lists for nodes `0..=p`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.p + 1];
        for (s, t, w) in self.edges() {
            adj[s].push((t, w));
            adj[t].push((s, w));
        }
        adj
    }

    /// Degree of every node `0..=p`, counting the edge to node 0.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.p + 1];
        for &(s, t) in self.edges.keys() {
            d[s] += 1;
            d[t] += 1;
        }
        d
    }
}

/// One of the structural properties a model must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    /// Node 0 is the unique most connected node, by a margin of two.
    G1,
    /// Exactly the experts are adjacent to node 0.
    G2,
    /// No edge joins two experts.
    G3,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub property: Property,
    pub nodes: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at nodes {:?}: {}", self.property, self.nodes, self.detail)
    }
}

/// Check properties G1-G3. Returns an empty list iff all hold.
pub fn validate_model(spec: &IsingModelSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let degrees = spec.degrees();
    let d0 = degrees[0];

    let crowded: Vec<usize> = (1..=spec.p).filter(|&s| degrees[s] + 2 > d0).collect();
    if !crowded.is_empty() {
        out.push(Violation {
            property: Property::G1,
            nodes: crowded.clone(),
            detail: format!(
                "node 0 has degree {d0}; these nodes have degree above {}",
                d0 as i64 - 2
            ),
        });
    }

    let adjacent: BTreeSet<usize> = spec.edges.keys().filter(|&&(s, _)| s == 0).map(|&(_, t)| t).collect();
    let stray: Vec<usize> = adjacent.difference(&spec.experts).copied().collect();
    if !stray.is_empty() {
        out.push(Violation {
            property: Property::G2,
            nodes: stray,
            detail: "non-expert nodes adjacent to node 0".into(),
        });
    }
    let detached: Vec<usize> = spec.experts.difference(&adjacent).copied().collect();
    if !detached.is_empty() {
        out.push(Violation {
            property: Property::G2,
            nodes: detached,
            detail: "experts without an edge to node 0".into(),
        });
    }

    for &(s, t) in spec.edges.keys() {
        if s != 0 && spec.experts.contains(&s) && spec.experts.contains(&t) {
            out.push(Violation {
                property: Property::G3,
                nodes: vec![s, t],
                detail: format!("edge between experts {s} and {t}"),
            });
        }
    }
    out
}

/// Degrees of the true graph and of its node-0-marginalized approximation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeStats {
    /// Degree of node 0, i.e. the number of experts attached to it.
    pub d0: usize,
    /// Number of observed neighbors of each node, indexed by node id
    /// (entry 0 is unused). The edge to node 0 is not counted.
    pub observed_degree: Vec<usize>,
    /// Degree under the approximation, indexed by node id (entry 0 unused).
    pub tilde_degree: Vec<usize>,
    pub tilde_max: usize,
}

/// Per-node degrees: `d~_s = d_s + d_0 - 1` for experts, `d~_s = d_s` otherwise,
/// where `d_s` counts observed neighbors only.
pub fn degree_stats(spec: &IsingModelSpec) -> DegreeStats {
    let p = spec.p;
    let mut observed = vec![0; p + 1];
    let mut d0 = 0;
    for &(s, t) in spec.edges.keys() {
        if s == 0 {
            d0 += 1;
        } else {
            observed[s] += 1;
            observed[t] += 1;
        }
    }
    let tilde: Vec<usize> = (0..=p)
        .map(|s| match s {
            0 => 0,
            s if spec.experts.contains(&s) => observed[s] + d0 - 1,
            s => observed[s],
        })
        .collect();
    let tilde_max = tilde[1..].iter().copied().max().unwrap_or(0);
    DegreeStats {
        d0,
        observed_degree: observed,
        tilde_degree: tilde,
        tilde_max,
    }
}

/// Estimated neighbor sets with signed weights for nodes `1..=p`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborhoodMap {
    p: usize,
    // index 0 unused
    nbrs: Vec<BTreeMap<usize, f64>>,
}

impl NeighborhoodMap {
    pub fn new(p: usize) -> Self {
        NeighborhoodMap {
            p,
            nbrs: vec![BTreeMap::new(); p + 1],
        }
    }

    /// Record `t` as a neighbor of `s` with weight `w` (one direction only).
    pub fn insert(&mut self, s: usize, t: usize, w: f64) -> Result<()> {
        if s == 0 || t == 0 || s > self.p || t > self.p {
            return Err(Error::Structure(format!(
                "neighbor pair ({s},{t}) out of range 1..={}",
                self.p
            )));
        }
        if s == t {
            return Err(Error::Structure(format!("node {s} listed as its own neighbor")));
        }
        if w == 0.0 || !w.is_finite() {
            return Err(Error::Structure(format!(
                "neighbor weight for ({s},{t}) must be finite and nonzero"
            )));
        }
        self.nbrs[s].insert(t, w);
        Ok(())
    }

    /// Record `{s, t}` in both directions.
    pub fn insert_symmetric(&mut self, s: usize, t: usize, w: f64) -> Result<()> {
        self.insert(s, t, w)?;
        self.insert(t, s, w)
    }

    /// Build from sets of neighbor ids with unit weights.
    pub fn from_sets(p: usize, sets: &[(usize, Vec<usize>)]) -> Result<Self> {
        let mut map = NeighborhoodMap::new(p);
        for (s, set) in sets {
            for &t in set {
                map.insert(*s, t, 1.0)?;
            }
        }
        Ok(map)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn neighbors(&self, s: usize) -> &BTreeMap<usize, f64> {
        &self.nbrs[s]
    }

    pub fn neighbor_set(&self, s: usize) -> BTreeSet<usize> {
        self.nbrs[s].keys().copied().collect()
    }

    pub fn size(&self, s: usize) -> usize {
        self.nbrs[s].len()
    }

    pub fn weight(&self, s: usize, t: usize) -> Option<f64> {
        self.nbrs.get(s).and_then(|m| m.get(&t)).copied()
    }
}

/// Estimated expert set with per-expert reliabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertReport {
    pub expert_set: Vec<usize>,
    pub positive_group: Vec<usize>,
    pub negative_group: Vec<usize>,
    /// Agreement probability of each expert with the hidden label.
    pub psi_hat: BTreeMap<usize, f64>,
    pub theta0s_hat: BTreeMap<usize, f64>,
    pub theta0_hat: f64,
    pub pi_hat: f64,
}

impl ExpertReport {
    /// Derive edge weights and sign groups from agreement probabilities and the class prior.
    pub fn from_estimates(psi_hat: BTreeMap<usize, f64>, pi_hat: f64) -> Self {
        let theta0s_hat: BTreeMap<usize, f64> = psi_hat.iter().map(|(&s, &q)| (s, half_logit(q))).collect();
        let (positive_group, negative_group) = theta0s_hat.iter().partition::<Vec<_>, _>(|(_, &w)| w >= 0.0);
        ExpertReport {
            expert_set: psi_hat.keys().copied().collect(),
            positive_group: positive_group.into_iter().map(|(&s, _)| s).collect(),
            negative_group: negative_group.into_iter().map(|(&s, _)| s).collect(),
            theta0_hat: half_logit(pi_hat),
            psi_hat,
            theta0s_hat,
            pi_hat,
        }
    }
}

/// Prediction method tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bayes,
    Amv,
    Mv,
    Ds,
    Sml,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bayes, Method::Amv, Method::Sml, Method::Ds, Method::Mv];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bayes => "bayes",
            Method::Amv => "amv",
            Method::Mv => "mv",
            Method::Ds => "ds",
            Method::Sml => "sml",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bayes" => Ok(Method::Bayes),
            "amv" => Ok(Method::Amv),
            "mv" => Ok(Method::Mv),
            "ds" => Ok(Method::Ds),
            "sml" => Ok(Method::Sml),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Hard labels plus a score in `[0, 1]` per instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionResult {
    pub labels: Vec<i8>,
    pub scores: Vec<f64>,
    pub method: Method,
    /// Conditions worth surfacing to the caller (ties, fallbacks).
    pub flags: Vec<String>,
}

impl PredictionResult {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fraction of labels equal to `truth`.
    pub fn accuracy(&self, truth: &[i8]) -> f64 {
        assert_eq!(truth.len(), self.labels.len());
        let hits = self.labels.iter().zip(truth).filter(|(a, b)| a == b).count();
        hits as f64 / truth.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::five_expert_graph;

    #[test]
    fn reference_graph_is_valid() {
        let spec = five_expert_graph();
        assert_eq!(validate_model(&spec), vec![]);
        assert_eq!(
            spec.expert_set().iter().copied().collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5]
        );
    }

    #[test]
    fn edge_between_experts_breaks_g3() {
        let spec = five_expert_graph();
        let edges = spec.edges().chain([(1, 2, 0.5)]);
        let bad = IsingModelSpec::new(spec.p(), spec.theta0(), edges).unwrap();
        let g3: Vec<_> = validate_model(&bad)
            .into_iter()
            .filter(|v| v.property == Property::G3)
            .collect();
        assert_eq!(g3.len(), 1);
        assert_eq!(g3[0].nodes, vec![1, 2]);
    }

    #[test]
    fn non_expert_attached_to_hidden_node_breaks_g2() {
        let spec = five_expert_graph();
        let edges = spec.edges().chain([(0, 8, 1.0)]);
        let bad = IsingModelSpec::with_experts(spec.p(), 0.0, edges, 1..=5).unwrap();
        let v = validate_model(&bad);
        assert!(v.iter().any(|x| x.property == Property::G2 && x.nodes == vec![8]));
    }

    #[test]
    fn validation_ignores_edge_listing_order() {
        let spec = five_expert_graph();
        let mut edges: Vec<_> = spec.edges().chain([(2, 1, 0.5), (13, 4, 0.1)]).collect();
        let a = IsingModelSpec::new(spec.p(), 0.0, edges.clone()).unwrap();
        edges.reverse();
        let b = IsingModelSpec::new(spec.p(), 0.0, edges).unwrap();
        assert_eq!(validate_model(&a), validate_model(&b));
    }

    #[test]
    fn malformed_indices_are_structural_errors() {
        assert!(matches!(
            IsingModelSpec::new(3, 0.0, [(1, 4, 1.0)]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            IsingModelSpec::new(3, 0.0, [(2, 2, 1.0)]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            IsingModelSpec::new(3, 0.0, [(1, 2, 0.0)]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            IsingModelSpec::with_experts(3, 0.0, [(0, 1, 1.0)], [7]),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn degree_stats_on_reference_graph() {
        let st = degree_stats(&five_expert_graph());
        assert_eq!(st.d0, 5);
        assert_eq!(st.tilde_degree[1], 2 + 5 - 1);
        assert_eq!(st.tilde_degree[1], 6);
        // non-experts keep their own degree
        assert_eq!(st.tilde_degree[8], 3);
        assert_eq!(st.tilde_max, 6);
    }

    #[test]
    fn degree_stats_single_expert() {
        let spec = IsingModelSpec::new(1, 0.0, [(0, 1, 1.0)]).unwrap();
        assert_eq!(degree_stats(&spec).tilde_degree[1], 0);
    }

    #[test]
    fn degree_stats_non_expert_with_three_neighbors() {
        let spec = IsingModelSpec::new(4, 0.0, [(1, 2, 1.0), (1, 3, 1.0), (1, 4, 1.0)]).unwrap();
        assert_eq!(degree_stats(&spec).tilde_degree[1], 3);
    }

    #[test]
    fn label_matrix_rejects_zero_entries() {
        assert!(LabelMatrix::from_rows(&[vec![1, 0]]).is_err());
        assert!(LabelMatrix::from_rows(&[vec![1]]).is_err());
        let m = LabelMatrix::from_rows(&[vec![1, -1], vec![-1, -1]]).unwrap();
        assert!(m.clone().with_classifier_ids(vec!["a".into(), "a".into()]).is_err());
        assert_eq!(m.column(2), &[-1, -1]);
        assert_eq!(m.row(0), vec![1, -1]);
    }

    #[test]
    fn expert_report_groups_follow_weight_signs() {
        let psi = BTreeMap::from([(1, 0.9), (2, 0.2), (4, 0.5)]);
        let r = ExpertReport::from_estimates(psi, 0.5);
        assert_eq!(r.positive_group, vec![1, 4]);
        assert_eq!(r.negative_group, vec![2]);
        assert!(r.theta0_hat.abs() < 1e-15);
        assert!((r.theta0s_hat[&1] - 0.5 * 9f64.ln()).abs() < 1e-12);
    }
}
