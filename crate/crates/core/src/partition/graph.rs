use std::collections::VecDeque;

/// Multigraph over subdomain ids with one edge per interface component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl NeighborGraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Self {
        Self { vertex_count, edges }
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }

    /// BFS 2-coloring; each connected component starts at +1 on its smallest id.
    pub fn two_coloring(&self) -> Option<Vec<i8>> {
        let mut color = vec![0i8; self.vertex_count];
        for root in 0..self.vertex_count {
            if color[root] != 0 {
                continue;
            }
            color[root] = 1;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for w in self.neighbors(v) {
                    if color[w] == 0 {
                        color[w] = -color[v];
                        queue.push_back(w);
                    } else if color[w] == color[v] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut seen = vec![false; self.vertex_count];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
