#![allow(dead_code)]

use zzsched::topology::TopologyGraph;

/// Six-vertex graph with a triangle, a quadrilateral and a pendant vertex.
/// Labels 1..6 are shifted to ids 0..5. Faces: 0 = triangle (1,2,6),
/// 1 = quadrilateral (2,3,5,6), 2 = outer face. Edge (5,4) is a bridge.
pub fn triangle_quad() -> TopologyGraph {
    let edges = vec![(0, 1), (1, 2), (2, 4), (4, 5), (0, 5), (1, 5), (3, 4)];
    let faces = vec![vec![0, 5, 4], vec![1, 2, 3, 5], vec![0, 1, 2, 6, 6, 3, 4]];
    TopologyGraph::new(6, edges, faces, vec![0.0; 7]).unwrap()
}

/// Faces of [`defect_grid`] by role.
pub struct DefectFaces {
    pub i: usize,
    pub j: usize,
    pub m: usize,
    pub s: usize,
}

pub const DEFECT_FACES: DefectFaces = DefectFaces { i: 1, j: 2, m: 6, s: 7 };

/// 3x4 grid (ids `r * 4 + c`) with diagonals (1,6) and (6,11) added and the
/// coupling (10,11) removed. Odd faces: triangles (1,2,6), (1,6,5), (6,7,11)
/// and the outer face.
pub fn defect_grid(lambda: f64) -> TopologyGraph {
    let mut edges = vec![
        (0, 1), (1, 2), (2, 3),
        (4, 5), (5, 6), (6, 7),
        (8, 9), (9, 10),
        (0, 4), (1, 5), (2, 6), (3, 7),
        (4, 8), (5, 9), (6, 10), (7, 11),
        (1, 6), (6, 11),
    ];
    edges.iter_mut().for_each(|e| *e = (e.0.min(e.1), e.0.max(e.1)));
    let id = |a: usize, b: usize| edges.iter().position(|&e| e == (a.min(b), a.max(b))).unwrap();
    let cycle = |vs: &[usize]| -> Vec<usize> {
        (0..vs.len()).map(|k| id(vs[k], vs[(k + 1) % vs.len()])).collect()
    };
    let faces = vec![
        cycle(&[0, 1, 5, 4]),
        cycle(&[1, 2, 6]),
        cycle(&[1, 6, 5]),
        cycle(&[2, 3, 7, 6]),
        cycle(&[4, 5, 9, 8]),
        cycle(&[5, 6, 10, 9]),
        cycle(&[6, 7, 11]),
        cycle(&[0, 1, 2, 3, 7, 11, 6, 10, 9, 8, 4]),
    ];
    let n = edges.len();
    TopologyGraph::new(12, edges, faces, vec![lambda; n]).unwrap()
}
