use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Bfs,
    Dfs,
    Gbfs,
    Astar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Bfs, Algorithm::Dfs, Algorithm::Gbfs, Algorithm::Astar];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" => Some(Algorithm::Bfs),
            "dfs" => Some(Algorithm::Dfs),
            "gbfs" => Some(Algorithm::Gbfs),
            "astar" | "a*" => Some(Algorithm::Astar),
            _ => None,
        }
    }

    pub fn needs_heuristic(self) -> bool {
        matches!(self, Algorithm::Gbfs | Algorithm::Astar)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Bfs => "bfs",
            Algorithm::Dfs => "dfs",
            Algorithm::Gbfs => "gbfs",
            Algorithm::Astar => "astar",
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    key: f64,
    seq: u64,
    item: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

/// Frontier ordered by the search algorithm. Keyed lists pop the smallest key
/// first and break ties by insertion order.
#[derive(Debug)]
pub struct OpenList(Frontier);

#[derive(Debug)]
enum Frontier {
    Fifo(VecDeque<u32>),
    Lifo(Vec<u32>),
    Keyed { heap: BinaryHeap<Reverse<Entry>>, seq: u64 },
}

impl OpenList {
    pub fn new(algorithm: Algorithm) -> Self {
        OpenList(match algorithm {
            Algorithm::Bfs => Frontier::Fifo(VecDeque::new()),
            Algorithm::Dfs => Frontier::Lifo(Vec::new()),
            Algorithm::Gbfs | Algorithm::Astar => Frontier::Keyed {
                heap: BinaryHeap::new(),
                seq: 0,
            },
        })
    }

    /// `key` is ignored by BFS and DFS. Non-finite keys sort last.
    pub fn push(&mut self, item: u32, key: f64) {
        match &mut self.0 {
            Frontier::Fifo(q) => q.push_back(item),
            Frontier::Lifo(s) => s.push(item),
            Frontier::Keyed { heap, seq } => {
                let key = if key.is_finite() { key } else { f64::INFINITY };
                heap.push(Reverse(Entry { key, seq: *seq, item }));
                *seq += 1;
            }
        }
    }

    pub fn pop(&mut self) -> Option<u32> {
        match &mut self.0 {
            Frontier::Fifo(q) => q.pop_front(),
            Frontier::Lifo(s) => s.pop(),
            Frontier::Keyed { heap, .. } => heap.pop().map(|Reverse(e)| e.item),
        }
    }

    pub fn len(&self) -> usize {
        match &self.0 {
            Frontier::Fifo(q) => q.len(),
            Frontier::Lifo(s) => s.len(),
            Frontier::Keyed { heap, .. } => heap.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(mut o: OpenList) -> Vec<u32> {
        std::iter::from_fn(|| o.pop()).collect()
    }

    #[test]
    fn orders() {
        let mut bfs = OpenList::new(Algorithm::Bfs);
        let mut dfs = OpenList::new(Algorithm::Dfs);
        for i in 0..3 {
            bfs.push(i, 0.0);
            dfs.push(i, 0.0);
        }
        assert_eq!(drain(bfs), vec![0, 1, 2]);
        assert_eq!(drain(dfs), vec![2, 1, 0]);

        let mut g = OpenList::new(Algorithm::Gbfs);
        g.push(0, 2.0);
        g.push(1, 1.0);
        assert_eq!(g.pop(), Some(1));

        let mut a = OpenList::new(Algorithm::Astar);
        a.push(7, 1.0 + 1.0);
        a.push(8, 0.0 + 2.0);
        assert_eq!(drain(a), vec![7, 8]);

        let mut inf = OpenList::new(Algorithm::Gbfs);
        inf.push(0, f64::NAN);
        inf.push(1, 1e300);
        inf.push(2, f64::INFINITY);
        assert_eq!(drain(inf), vec![1, 0, 2]);
    }
}
