use fixedbitset::FixedBitSet;

/// A subset of `0..n` with its size cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    bits: FixedBitSet,
    len: usize,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet {
            bits: FixedBitSet::with_capacity(n),
            len: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        VertexSet { bits, len: n }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for v in indices {
            s.insert(v);
        }
        s
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self::from_indices(mask.len(), mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
    }

    /// Universe size `n`.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, v: usize) {
        if !self.bits.put(v) {
            self.len += 1;
        }
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.bits.contains(v)
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        VertexSet {
            bits,
            len: self.universe() - self.len,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// `pi(A) = sum_{x in A} pi(x)`.
    pub fn measure(&self, pi: &[f64]) -> f64 {
        self.iter().map(|x| pi[x]).sum()
    }
}

/// Disjoint non-empty classes covering `0..n`, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    classes: Vec<VertexSet>,
}

impl Partition {
    /// Group vertices by label. Empty labels are dropped; the remaining
    /// classes keep increasing label order.
    pub fn from_labels(labels: &[u32]) -> Self {
        let n = labels.len();
        let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut sets: Vec<VertexSet> = (0..k).map(|_| VertexSet::empty(n)).collect();
        for (v, &l) in labels.iter().enumerate() {
            sets[l as usize].insert(v);
        }
        let mut remap = vec![u32::MAX; k];
        let mut classes = Vec::new();
        for (l, s) in sets.into_iter().enumerate() {
            if !s.is_empty() {
                remap[l] = classes.len() as u32;
                classes.push(s);
            }
        }
        let labels = labels.iter().map(|&l| remap[l as usize]).collect();
        Partition { labels, classes }
    }

    /// Partition from explicit classes; they must be disjoint and cover `0..n`.
    pub fn from_classes(n: usize, classes: Vec<VertexSet>) -> Option<Self> {
        let mut labels = vec![u32::MAX; n];
        let mut kept = Vec::new();
        for s in classes {
            if s.universe() != n {
                return None;
            }
            if s.is_empty() {
                continue;
            }
            for v in s.iter() {
                if labels[v] != u32::MAX {
                    return None;
                }
                labels[v] = kept.len() as u32;
            }
            kept.push(s);
        }
        if labels.contains(&u32::MAX) {
            return None;
        }
        Some(Partition {
            labels,
            classes: kept,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[VertexSet] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &VertexSet {
        &self.classes[i]
    }

    /// Class index of every vertex.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn measures(&self, pi: &[f64]) -> Vec<f64> {
        self.classes.iter().map(|c| c.measure(pi)).collect()
    }
}
