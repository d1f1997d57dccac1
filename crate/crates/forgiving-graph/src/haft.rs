//! Half-full trees (hafts).
//!
//! A haft is a rooted binary tree in which every internal node has exactly
//! two children and its left child heads a complete binary subtree holding
//! at least half of the node's leaf descendants. For every leaf count `l`
//! there is exactly one haft shape; it decomposes into complete subtrees
//! matching the binary representation of `l`, and merging hafts behaves
//! like binary addition of their leaf counts.
//!
//! This module is purely structural (no processors, no messages). The
//! distributed repair in [`crate::protocol`] is checked against it.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

/// Index of a node inside a [`Haft`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Internal,
}

/// One node of a haft. Leaves carry caller-supplied labels; internal nodes
/// carry join ids (synthetic in [`make_haft`], pool-supplied in [`merge`]).
#[derive(Debug, Clone)]
pub struct HaftNode {
    pub kind: NodeKind,
    pub label: u64,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub parent: Option<NodeId>,
    pub height: u32,
    pub leaf_count: u64,
}

/// A haft stored as an arena; `root` indexes into `nodes`.
#[derive(Debug, Clone)]
pub struct Haft {
    nodes: Vec<HaftNode>,
    root: NodeId,
}

/// Canonical structural encoding: a complete tree is its leaf count, any
/// other haft is the pair of its children's encodings. Two hafts over the
/// same number of leaves always compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaftShape {
    Complete(u64),
    Join(Box<HaftShape>, Box<HaftShape>),
}

/// Result of [`Haft::strip`]: the complete subtrees headed by the primary
/// roots, in descending leaf count, plus the join nodes that were removed.
#[derive(Debug)]
pub struct StripResult {
    pub forest: Vec<Haft>,
    pub removed: Vec<u64>,
}

/// Pool of unused node ids available as join nodes during [`merge`].
/// Stripped join nodes are pushed back before new ids are consumed.
#[derive(Debug, Default, Clone)]
pub struct SparePool {
    ids: Vec<u64>,
}

impl SparePool {
    pub fn new(ids: Vec<u64>) -> Self {
        SparePool { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn put(&mut self, id: u64) {
        self.ids.push(id);
    }

    fn take(&mut self) -> Option<u64> {
        self.ids.pop()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaftError {
    /// `make_haft` needs at least one leaf.
    EmptyLeafList,
    /// Binary decomposition of zero is undefined here.
    ZeroLeafCount,
    /// The spare pool ran out of join nodes during a merge.
    SpareDeficit { needed: usize, available: usize },
}

impl fmt::Display for HaftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaftError::EmptyLeafList => write!(f, "haft requires at least one leaf"),
            HaftError::ZeroLeafCount => write!(f, "leaf count must be positive"),
            HaftError::SpareDeficit { needed, available } => write!(
                f,
                "merge needs {needed} join nodes but only {available} are available"
            ),
        }
    }
}

/// First violated invariant reported by [`Haft::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaftViolation {
    OneChild(NodeId),
    LeafWithChildren(NodeId),
    BadLeafCount(NodeId),
    BadHeight(NodeId),
    LeftNotComplete(NodeId),
    RightLargerThanLeft(NodeId),
    BadParentLink(NodeId),
}

impl fmt::Display for HaftViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaftViolation::OneChild(n) => write!(f, "internal node {} has one child", n.0),
            HaftViolation::LeafWithChildren(n) => write!(f, "leaf {} has children", n.0),
            HaftViolation::BadLeafCount(n) => write!(f, "node {} has wrong leaf_count", n.0),
            HaftViolation::BadHeight(n) => write!(f, "node {} has wrong height", n.0),
            HaftViolation::LeftNotComplete(n) => {
                write!(f, "left child of node {} is not complete", n.0)
            }
            HaftViolation::RightLargerThanLeft(n) => {
                write!(f, "right subtree of node {} outweighs the left", n.0)
            }
            HaftViolation::BadParentLink(n) => write!(f, "node {} has a bad parent link", n.0),
        }
    }
}

/// Powers of two summing to `l`, in descending order.
pub fn binary_decomposition(l: u64) -> Result<Vec<u64>, HaftError> {
    if l == 0 {
        return Err(HaftError::ZeroLeafCount);
    }
    let mut out = Vec::new();
    for bit in (0..64).rev() {
        let p = 1u64 << bit;
        if l & p != 0 {
            out.push(p);
        }
    }
    Ok(out)
}

/// Build the unique haft over the given leaves; leaves appear left to right
/// in input order. Internal join nodes get synthetic labels.
///
/// The construction goes through the binary decomposition (complete trees
/// chained right to left), which is the route the distributed merge also
/// takes; the recursive-split definition serves as the independent oracle
/// in the tests.
pub fn make_haft(leaf_labels: &[u64]) -> Result<Haft, HaftError> {
    if leaf_labels.is_empty() {
        return Err(HaftError::EmptyLeafList);
    }
    let mut arena: Vec<HaftNode> = Vec::with_capacity(2 * leaf_labels.len() - 1);
    let mut next_join: u64 = 1 << 32;
    let powers = binary_decomposition(leaf_labels.len() as u64)?;
    let mut offset = 0usize;
    let mut tree_roots: Vec<NodeId> = Vec::with_capacity(powers.len());
    for p in &powers {
        let slice = &leaf_labels[offset..offset + *p as usize];
        tree_roots.push(build_complete(&mut arena, slice));
        offset += *p as usize;
    }
    // Chain the complete trees right to left: the larger tree is always the
    // left child of the join node.
    let mut acc = *tree_roots.last().unwrap();
    for idx in (0..tree_roots.len() - 1).rev() {
        let left = tree_roots[idx];
        acc = join(&mut arena, left, acc, next_join);
        next_join += 1;
    }
    Ok(Haft { nodes: arena, root: acc })
}

fn build_complete(arena: &mut Vec<HaftNode>, labels: &[u64]) -> NodeId {
    debug_assert!(labels.len().is_power_of_two());
    if labels.len() == 1 {
        let id = NodeId(arena.len() as u32);
        arena.push(HaftNode {
            kind: NodeKind::Leaf,
            label: labels[0],
            left: None,
            right: None,
            parent: None,
            height: 0,
            leaf_count: 1,
        });
        return id;
    }
    let half = labels.len() / 2;
    let l = build_complete(arena, &labels[..half]);
    let r = build_complete(arena, &labels[half..]);
    join_no_label(arena, l, r)
}

fn join_no_label(arena: &mut Vec<HaftNode>, l: NodeId, r: NodeId) -> NodeId {
    join(arena, l, r, 0)
}

fn join(arena: &mut Vec<HaftNode>, l: NodeId, r: NodeId, label: u64) -> NodeId {
    let id = NodeId(arena.len() as u32);
    let height = 1 + arena[l.0 as usize].height.max(arena[r.0 as usize].height);
    let leaf_count = arena[l.0 as usize].leaf_count + arena[r.0 as usize].leaf_count;
    arena.push(HaftNode {
        kind: NodeKind::Internal,
        label,
        left: Some(l),
        right: Some(r),
        parent: None,
        height,
        leaf_count,
    });
    arena[l.0 as usize].parent = Some(id);
    arena[r.0 as usize].parent = Some(id);
    id
}

impl Haft {
    /// Wrap an externally built arena (e.g. a materialized reconstruction
    /// tree) so it can be checked with [`Haft::validate`] and compared by
    /// [`Haft::shape`]. No invariants are checked here; node links must at
    /// least index into `nodes`.
    pub fn from_parts(nodes: Vec<HaftNode>, root: NodeId) -> Haft {
        assert!((root.0 as usize) < nodes.len());
        Haft { nodes, root }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &HaftNode {
        &self.nodes[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> u64 {
        self.node(self.root).leaf_count
    }

    /// Root height; equals `⌈log₂ l⌉` for `l` leaves.
    pub fn depth(&self) -> u32 {
        self.node(self.root).height
    }

    /// Leaf labels left to right.
    pub fn leaves(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.leaf_count() as usize);
        self.collect_leaves(self.root, &mut out);
        out
    }

    fn collect_leaves(&self, id: NodeId, out: &mut Vec<u64>) {
        let n = self.node(id);
        match n.kind {
            NodeKind::Leaf => out.push(n.label),
            NodeKind::Internal => {
                self.collect_leaves(n.left.unwrap(), out);
                self.collect_leaves(n.right.unwrap(), out);
            }
        }
    }

    /// A node heads a complete subtree iff its leaf count is `2^height`.
    pub fn is_complete(&self, id: NodeId) -> bool {
        let n = self.node(id);
        n.leaf_count == 1u64 << n.height
    }

    /// True iff `id` heads a complete subtree whose parent (if any) does not.
    pub fn is_primary_root(&self, id: NodeId) -> bool {
        if !self.is_complete(id) {
            return false;
        }
        match self.node(id).parent {
            None => true,
            Some(p) => !self.is_complete(p),
        }
    }

    pub fn shape(&self) -> HaftShape {
        self.shape_of(self.root)
    }

    fn shape_of(&self, id: NodeId) -> HaftShape {
        if self.is_complete(id) {
            HaftShape::Complete(self.node(id).leaf_count)
        } else {
            let n = self.node(id);
            HaftShape::Join(
                Box::new(self.shape_of(n.left.unwrap())),
                Box::new(self.shape_of(n.right.unwrap())),
            )
        }
    }

    /// Split into the complete subtrees headed by the primary roots. The
    /// removed join nodes all lie on the path from the root toward the
    /// rightmost leaf; their count is `popcount(l) - 1`.
    pub fn strip(&self) -> StripResult {
        let mut forest = Vec::new();
        let mut removed = Vec::new();
        let mut cur = self.root;
        loop {
            if self.is_complete(cur) {
                forest.push(self.extract(cur));
                break;
            }
            let n = self.node(cur);
            removed.push(n.label);
            forest.push(self.extract(n.left.unwrap()));
            cur = n.right.unwrap();
        }
        StripResult { forest, removed }
    }

    /// Copy the subtree under `top` into its own arena.
    fn extract(&self, top: NodeId) -> Haft {
        let mut arena = Vec::new();
        let root = self.copy_into(top, &mut arena);
        arena[root.0 as usize].parent = None;
        Haft { nodes: arena, root }
    }

    fn copy_into(&self, id: NodeId, arena: &mut Vec<HaftNode>) -> NodeId {
        let n = self.node(id);
        match n.kind {
            NodeKind::Leaf => {
                let new = NodeId(arena.len() as u32);
                arena.push(HaftNode { parent: None, ..n.clone() });
                new
            }
            NodeKind::Internal => {
                let l = self.copy_into(n.left.unwrap(), arena);
                let r = self.copy_into(n.right.unwrap(), arena);
                join(arena, l, r, n.label)
            }
        }
    }

    /// Check every structural invariant; `Ok` iff the tree is a haft with
    /// consistent height/leaf_count annotations.
    pub fn validate(&self) -> Result<(), HaftViolation> {
        self.validate_node(self.root)?;
        Ok(())
    }

    fn validate_node(&self, id: NodeId) -> Result<(u32, u64), HaftViolation> {
        let n = self.node(id);
        match n.kind {
            NodeKind::Leaf => {
                if n.left.is_some() || n.right.is_some() {
                    return Err(HaftViolation::LeafWithChildren(id));
                }
                if n.leaf_count != 1 {
                    return Err(HaftViolation::BadLeafCount(id));
                }
                if n.height != 0 {
                    return Err(HaftViolation::BadHeight(id));
                }
                Ok((0, 1))
            }
            NodeKind::Internal => {
                let (l, r) = match (n.left, n.right) {
                    (Some(l), Some(r)) => (l, r),
                    _ => return Err(HaftViolation::OneChild(id)),
                };
                if self.node(l).parent != Some(id) || self.node(r).parent != Some(id) {
                    return Err(HaftViolation::BadParentLink(id));
                }
                let (lh, lc) = self.validate_node(l)?;
                let (rh, rc) = self.validate_node(r)?;
                if n.leaf_count != lc + rc {
                    return Err(HaftViolation::BadLeafCount(id));
                }
                if n.height != 1 + lh.max(rh) {
                    return Err(HaftViolation::BadHeight(id));
                }
                if lc != 1u64 << lh {
                    return Err(HaftViolation::LeftNotComplete(id));
                }
                if rc > lc {
                    return Err(HaftViolation::RightLargerThanLeft(id));
                }
                Ok((n.height, n.leaf_count))
            }
        }
    }
}

/// An entry of the working list during [`merge`]: a complete tree plus the
/// arena it lives in.
struct MergeEntry {
    root: NodeId,
    leaf_count: u64,
    order_id: u64,
}

/// Merge hafts into the unique haft over the union of their leaves.
///
/// All inputs are stripped first; the freed join nodes go back to the pool
/// before new ids are consumed. Equal-sized complete trees are then paired
/// in ascending `(size, id)` order (binary-addition carries), and the final
/// distinct-size trees are chained with the larger tree as left child.
pub fn merge(hafts: &[Haft], pool: &mut SparePool) -> Result<Haft, HaftError> {
    if hafts.is_empty() {
        return Err(HaftError::EmptyLeafList);
    }
    let mut arena: Vec<HaftNode> = Vec::new();
    let mut list: Vec<MergeEntry> = Vec::new();
    for h in hafts {
        let stripped = h.strip();
        for id in stripped.removed {
            pool.put(id);
        }
        for tree in stripped.forest {
            let root = tree.copy_into(tree.root, &mut arena);
            arena[root.0 as usize].parent = None;
            let order_id = arena[root.0 as usize].label;
            list.push(MergeEntry {
                root,
                leaf_count: tree.leaf_count(),
                order_id,
            });
        }
    }
    let joins_needed = list.len() - 1;
    if pool.len() < joins_needed {
        return Err(HaftError::SpareDeficit {
            needed: joins_needed,
            available: pool.len(),
        });
    }
    list.sort_by_key(|e| (e.leaf_count, e.order_id));

    // Pairing pass: join adjacent equal sizes, reinserting the result in
    // sorted position and continuing from there so carries cascade.
    let mut i = 0;
    while i + 1 < list.len() {
        if list[i].leaf_count == list[i + 1].leaf_count {
            let a = list.remove(i);
            let b = list.remove(i);
            let label = pool.take().expect("deficit checked above");
            let root = join(&mut arena, a.root, b.root, label);
            let entry = MergeEntry {
                root,
                leaf_count: a.leaf_count + b.leaf_count,
                order_id: label,
            };
            let pos = list
                .partition_point(|e| (e.leaf_count, e.order_id) <= (entry.leaf_count, entry.order_id));
            list.insert(pos, entry);
            // Carries can create a new pair anywhere at or below the
            // insertion point; rescan from the front (the list is small).
            i = 0;
        } else {
            i += 1;
        }
    }

    // Chain pass: ascending distinct sizes, larger tree as left child.
    while list.len() > 1 {
        let a = list.remove(0);
        let b = list.remove(0);
        let label = pool.take().expect("deficit checked above");
        let root = join(&mut arena, b.root, a.root, label);
        list.insert(
            0,
            MergeEntry {
                root,
                leaf_count: a.leaf_count + b.leaf_count,
                order_id: label,
            },
        );
    }
    let root = list[0].root;
    Ok(Haft { nodes: arena, root })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prev_power_of_two(l: u64) -> u64 {
        1u64 << (63 - l.leading_zeros())
    }

    /// Independent shape oracle: recursively split `l` into the largest
    /// power of two not exceeding it, plus the remainder.
    fn brute_shape(l: u64) -> HaftShape {
        if l.is_power_of_two() {
            HaftShape::Complete(l)
        } else {
            let p = prev_power_of_two(l);
            HaftShape::Join(Box::new(HaftShape::Complete(p)), Box::new(brute_shape(l - p)))
        }
    }

    fn labels(n: u64) -> Vec<u64> {
        (0..n).collect()
    }

    fn haft(n: u64) -> Haft {
        make_haft(&labels(n)).unwrap()
    }

    #[test]
    fn single_leaf() {
        let h = haft(1);
        assert_eq!(h.depth(), 0);
        assert_eq!(h.len(), 1);
        assert_eq!(h.shape(), HaftShape::Complete(1));
    }

    #[test]
    fn eight_leaves_complete() {
        let h = haft(8);
        assert_eq!(h.depth(), 3);
        assert_eq!(h.shape(), HaftShape::Complete(8));
        assert!(h.is_primary_root(h.root()));
    }

    #[test]
    fn seven_leaves_structure() {
        // root(left = complete 4, right = root(left = complete 2, right = leaf))
        let h = haft(7);
        assert_eq!(h.depth(), 3);
        let expected = HaftShape::Join(
            Box::new(HaftShape::Complete(4)),
            Box::new(HaftShape::Join(
                Box::new(HaftShape::Complete(2)),
                Box::new(HaftShape::Complete(1)),
            )),
        );
        assert_eq!(h.shape(), expected);
        assert!(!h.is_primary_root(h.root()));
        let left = h.node(h.root()).left.unwrap();
        assert!(h.is_primary_root(left));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(make_haft(&[]), Err(HaftError::EmptyLeafList)));
    }

    #[test]
    fn depth_law() {
        assert_eq!(haft(9).depth(), 4);
        for l in 1..=256u64 {
            let expected = 64 - (l - 1).leading_zeros(); // ⌈log₂ l⌉ for l ≥ 1
            let expected = if l == 1 { 0 } else { expected };
            assert_eq!(haft(l).depth(), expected, "depth of haft({l})");
        }
    }

    #[test]
    fn decomposition_examples() {
        assert_eq!(binary_decomposition(1).unwrap(), alloc::vec![1]);
        assert_eq!(binary_decomposition(7).unwrap(), alloc::vec![4, 2, 1]);
        assert_eq!(binary_decomposition(6).unwrap(), alloc::vec![4, 2]);
        assert!(binary_decomposition(0).is_err());
    }

    #[test]
    fn strip_examples() {
        let s = haft(8).strip();
        assert_eq!(s.forest.len(), 1);
        assert!(s.removed.is_empty());

        let s = haft(7).strip();
        let sizes: Vec<u64> = s.forest.iter().map(|t| t.leaf_count()).collect();
        assert_eq!(sizes, alloc::vec![4, 2, 1]);
        assert_eq!(s.removed.len(), 2);

        let s = haft(6).strip();
        let sizes: Vec<u64> = s.forest.iter().map(|t| t.leaf_count()).collect();
        assert_eq!(sizes, alloc::vec![4, 2]);
        assert_eq!(s.removed.len(), 1);
    }

    #[test]
    fn strip_matches_decomposition() {
        for l in 1..=128u64 {
            let s = haft(l).strip();
            let sizes: Vec<u64> = s.forest.iter().map(|t| t.leaf_count()).collect();
            assert_eq!(sizes, binary_decomposition(l).unwrap());
            assert_eq!(s.removed.len() as u32, l.count_ones() - 1);
            for t in &s.forest {
                assert!(t.validate().is_ok());
            }
        }
    }

    #[test]
    fn shapes_match_brute_force() {
        for l in 1..=512u64 {
            assert_eq!(haft(l).shape(), brute_shape(l), "shape of haft({l})");
        }
    }

    #[test]
    fn leaves_keep_input_order() {
        for l in [1u64, 2, 5, 7, 12, 33] {
            assert_eq!(haft(l).leaves(), labels(l));
        }
    }

    #[test]
    fn validate_accepts_constructed() {
        for l in 1..=64u64 {
            assert!(haft(l).validate().is_ok());
        }
    }

    #[test]
    fn validate_catches_left_violation() {
        // Swap children of the root of haft(6): right subtree (4 leaves)
        // outweighs the new left (2 leaves).
        let mut h = haft(6);
        let root = h.root();
        let n = h.nodes[root.0 as usize].clone();
        h.nodes[root.0 as usize].left = n.right;
        h.nodes[root.0 as usize].right = n.left;
        assert!(matches!(
            h.validate(),
            Err(HaftViolation::LeftNotComplete(_)) | Err(HaftViolation::RightLargerThanLeft(_))
        ));
    }

    #[test]
    fn merge_two_singles() {
        let mut pool = SparePool::new(alloc::vec![99]);
        let a = make_haft(&[1]).unwrap();
        let b = make_haft(&[2]).unwrap();
        let m = merge(&[a, b], &mut pool).unwrap();
        assert_eq!(m.shape(), HaftShape::Complete(2));
        assert!(pool.is_empty());
    }

    #[test]
    fn merge_examples() {
        let mut pool = SparePool::new((1000..1100).collect());
        let m = merge(&[haft(3), haft(5)], &mut pool).unwrap();
        assert_eq!(m.shape(), haft(8).shape());
        assert_eq!(m.depth(), 3);

        let mut pool = SparePool::new((1000..1100).collect());
        let m = merge(&[haft(2), haft(4)], &mut pool).unwrap();
        assert_eq!(m.shape(), haft(6).shape());
        assert_eq!(m.depth(), 3);
        // Larger tree must sit left of the root.
        let left = m.node(m.root()).left.unwrap();
        assert_eq!(m.node(left).leaf_count, 4);
    }

    #[test]
    fn merge_deficit_reported() {
        let mut pool = SparePool::new(Vec::new());
        let err = merge(&[haft(4), haft(4)], &mut pool).unwrap_err();
        assert_eq!(err, HaftError::SpareDeficit { needed: 1, available: 0 });
    }

    #[test]
    fn merge_addition_homomorphism_sample() {
        for (a, b) in [(1u64, 1u64), (3, 5), (7, 9), (13, 19), (100, 28)] {
            let mut pool = SparePool::new((10_000..10_400).collect());
            let m = merge(&[haft(a), haft(b)], &mut pool).unwrap();
            assert_eq!(m.shape(), haft(a + b).shape(), "merge({a},{b})");
            assert!(m.validate().is_ok());
        }
    }

    #[test]
    fn internal_node_count() {
        for l in 1..=128u64 {
            let h = haft(l);
            let internals = h.nodes.iter().filter(|n| n.kind == NodeKind::Internal).count();
            assert_eq!(internals as u64, l - 1);
        }
    }

    #[test]
    fn strip_merge_idempotent_on_completes() {
        // Merging a forest of distinct-power complete trees then stripping
        // returns the same leaf counts.
        let inputs: Vec<Haft> = [8u64, 4, 1].iter().map(|&l| haft(l)).collect();
        let mut pool = SparePool::new((500..600).collect());
        let m = merge(&inputs, &mut pool).unwrap();
        let s = m.strip();
        let sizes: Vec<u64> = s.forest.iter().map(|t| t.leaf_count()).collect();
        assert_eq!(sizes, alloc::vec![8, 4, 1]);
    }

    proptest::proptest! {
        #[test]
        fn merge_of_random_inputs_validates(parts in proptest::collection::vec(1u64..40, 1..6)) {
            let inputs: Vec<Haft> = parts.iter().map(|&l| haft(l)).collect();
            let mut pool = SparePool::new((100_000..100_400).collect());
            let m = merge(&inputs, &mut pool).unwrap();
            proptest::prop_assert!(m.validate().is_ok());
            let total: u64 = parts.iter().sum();
            proptest::prop_assert_eq!(m.shape(), haft(total).shape());
        }
    }
}
