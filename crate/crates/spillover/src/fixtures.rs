//! Shared unit-test fixtures.

use crate::netgraph::Graph;

/// Ten-unit network with degree profile (3,4,6,5,5,3,3,4,4,3), 20 edges.
pub(crate) fn ten_unit_graph() -> Graph {
    Graph::from_edges(
        10,
        [
            (0, 1),
            (0, 2),
            (0, 4),
            (1, 2),
            (1, 3),
            (1, 9),
            (2, 3),
            (2, 4),
            (2, 5),
            (2, 8),
            (3, 4),
            (3, 5),
            (3, 6),
            (4, 5),
            (4, 7),
            (6, 7),
            (6, 8),
            (7, 8),
            (7, 9),
            (8, 9),
        ],
    )
    .unwrap()
}
