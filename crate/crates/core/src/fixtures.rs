//! Small hand-built graphs used by tests, benchmarks and documentation.

use crate::model::IsingModelSpec;

/// Edge list of a 19-node example graph: node 0 with experts `1..=5`, a layer
/// of non-experts hanging off them (with cycles), and a detached 3-node star
/// on `{16, 17, 18}`.
pub const FIVE_EXPERT_EDGES: [(usize, usize); 21] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (0, 5),
    (1, 6),
    (1, 7),
    (3, 8),
    (2, 8),
    (5, 8),
    (3, 9),
    (6, 7),
    (5, 10),
    (6, 11),
    (9, 11),
    (10, 12),
    (10, 13),
    (12, 15),
    (11, 14),
    (16, 17),
    (16, 18),
];

/// The example graph with expert weights `+1` (expert 4 is `-1`), non-expert
/// weights of alternating sign and magnitude `0.5`, and no external field.
pub fn five_expert_graph() -> IsingModelSpec {
    let edges = FIVE_EXPERT_EDGES.iter().enumerate().map(|(k, &(s, t))| {
        let w = if s == 0 {
            if t == 4 {
                -1.0
            } else {
                1.0
            }
        } else if k % 2 == 0 {
            0.5
        } else {
            -0.5
        };
        (s, t, w)
    });
    IsingModelSpec::new(18, 0.0, edges).expect("fixture is well-formed")
}
