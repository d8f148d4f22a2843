use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Assignment of nodes to communities together with a size registry.
///
/// Community ids index `sizes`; an id with size zero is unregistered and sits
/// on the free list, from which fresh singleton communities are allocated
/// (smallest free id first, else the next id past the end).
#[derive(Clone, Debug)]
pub struct Partition {
    assignment: Vec<usize>,
    sizes: Vec<usize>,
    free: BinaryHeap<Reverse<usize>>,
    count: usize,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.assignment == other.assignment
    }
}

impl Eq for Partition {}

impl Partition {
    /// Every node alone; node `v` gets community `v`.
    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            sizes: vec![1; n],
            free: BinaryHeap::new(),
            count: n,
        }
    }

    /// All nodes in community 0.
    pub fn one_coalition(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            sizes: if n > 0 { vec![n] } else { Vec::new() },
            free: BinaryHeap::new(),
            count: usize::from(n > 0),
        }
    }

    /// Keeps the given ids. Labels are bounded to keep the registry dense.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let max = labels.iter().copied().max().map_or(0, |m| m + 1);
        if max > 4 * labels.len() + 65_536 {
            return Err(Error::InvalidParameter(format!(
                "label {} too large for {} nodes; renumber first",
                max - 1,
                labels.len()
            )));
        }
        let mut sizes = vec![0; max];
        for &l in labels {
            sizes[l] += 1;
        }
        let free = sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let count = sizes.iter().filter(|&&s| s > 0).count();
        Ok(Self {
            assignment: labels.to_vec(),
            sizes,
            free,
            count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// K, the number of non-empty communities.
    pub fn community_count(&self) -> usize {
        self.count
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn size_of(&self, c: usize) -> usize {
        self.sizes.get(c).copied().unwrap_or(0)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Upper bound (exclusive) on community ids currently in use.
    pub fn id_capacity(&self) -> usize {
        self.sizes.len()
    }

    /// Id the next fresh singleton would receive.
    pub fn next_fresh_id(&self) -> usize {
        self.free.peek().map_or(self.sizes.len(), |r| r.0)
    }

    /// Registered `(id, size)` pairs in ascending id order.
    pub fn communities(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(i, &s)| (i, s))
    }

    pub fn members(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in self.assignment.iter().enumerate() {
            out.entry(c).or_default().push(v);
        }
        out
    }

    /// Moves `v` into `target`, which is either a registered community or the
    /// fresh id. Communities that become empty are unregistered at once.
    pub fn move_node(&mut self, v: usize, target: usize) {
        let from = self.assignment[v];
        if from == target {
            return;
        }
        if self.size_of(target) == 0 {
            assert_eq!(
                target,
                self.next_fresh_id(),
                "target {target} is neither registered nor the fresh id"
            );
            if target == self.sizes.len() {
                self.sizes.push(0);
            } else {
                self.free.pop();
            }
            self.count += 1;
        }
        self.sizes[target] += 1;
        self.sizes[from] -= 1;
        if self.sizes[from] == 0 {
            self.free.push(Reverse(from));
            self.count -= 1;
        }
        self.assignment[v] = target;
    }

    /// Labels renumbered `0..K` in order of first appearance.
    pub fn compact_labels(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.sizes.len()];
        let mut next = 0;
        self.assignment
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect()
    }

    /// Same grouping with ids renumbered by first appearance.
    pub fn compacted(&self) -> Self {
        Self::from_labels(&self.compact_labels()).expect("compact labels are dense")
    }

    /// One `node_id community_id` line per node, ids renumbered by first appearance.
    pub fn to_dump(&self) -> String {
        let mut out = String::with_capacity(self.assignment.len() * 12);
        for (v, c) in self.compact_labels().into_iter().enumerate() {
            writeln!(out, "{v} {c}").unwrap();
        }
        out
    }

    pub fn read_dump(reader: impl BufRead) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parsed = (|| {
                let v = parts.next()?.parse::<usize>().ok()?;
                let c = parts.next()?.parse::<usize>().ok()?;
                parts.next().is_none().then_some((v, c))
            })();
            let (v, c) = parsed.ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `node community`, got `{line}`"),
            })?;
            pairs.push((v, c));
        }
        pairs.sort_unstable();
        if pairs.iter().enumerate().any(|(i, &(v, _))| v != i) {
            return Err(Error::Parse {
                line: 0,
                message: "node ids must cover 0..n exactly once".into(),
            });
        }
        Self::from_labels(&pairs.into_iter().map(|(_, c)| c).collect::<Vec<_>>())
    }

    /// Panics if the registry disagrees with the assignment.
    pub fn assert_consistent(&self) {
        let mut counted = vec![0usize; self.sizes.len()];
        for &c in &self.assignment {
            counted[c] += 1;
        }
        assert_eq!(counted, self.sizes, "size registry out of sync");
        assert_eq!(
            self.count,
            self.sizes.iter().filter(|&&s| s > 0).count(),
            "community count out of sync"
        );
        assert_eq!(self.sizes.iter().sum::<usize>(), self.assignment.len());
        let mut free: Vec<usize> = self.free.iter().map(|r| r.0).collect();
        free.sort_unstable();
        let empty: Vec<usize> = (0..self.sizes.len()).filter(|&i| self.sizes[i] == 0).collect();
        assert_eq!(free, empty, "free list out of sync");
    }
}
