//! Spanning trees of the complete graph `K_v` as edge-index sets.

/// Index of edge `{u, w}` of `K_v` in lexicographic order of `(min, max)`.
pub fn edge_index(v: usize, u: usize, w: usize) -> usize {
    let (a, b) = if u < w { (u, w) } else { (w, u) };
    debug_assert!(b < v && a != b);
    a * v - a * (a + 1) / 2 + (b - a - 1)
}

/// Inverse of [`edge_index`].
pub fn edge_endpoints(v: usize, mut idx: usize) -> (usize, usize) {
    for a in 0..v {
        let row = v - a - 1;
        if idx < row {
            return (a, a + 1 + idx);
        }
        idx -= row;
    }
    panic!("edge index out of range for K_{v}");
}

/// Decodes a Prüfer sequence over `0..v` (length `v - 2`) into the sorted
/// edge indices of its tree. Linear time.
pub fn decode(seq: &[usize], v: usize) -> Vec<usize> {
    assert!(v >= 2 && seq.len() == v - 2, "Prüfer sequence for K_{v} must have length {}", v.saturating_sub(2));
    let mut degree = vec![1usize; v];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(v - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &s in seq {
        edges.push(edge_index(v, leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
        if degree[s] == 1 && s < ptr {
            leaf = s;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push(edge_index(v, leaf, v - 1));
    edges.sort_unstable();
    edges
}

/// True when the edge set is a spanning tree of `K_v`.
pub fn is_spanning_tree(edges: &[usize], v: usize) -> bool {
    if edges.len() != v - 1 {
        return false;
    }
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &e in edges {
        let (a, b) = edge_endpoints(v, e);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}
