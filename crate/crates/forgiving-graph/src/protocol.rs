//! The healing protocol: per-processor edge records, reconstruction trees
//! (RTs), and the repair that runs after every deletion.
//!
//! Every processor keeps one record per incident edge of G′ (the graph of
//! all insertions, ignoring deletions). When a neighbor dies, the edge's
//! slot becomes a leaf of an RT — a haft whose internal nodes ("helpers")
//! are simulated by the processors owning the leaf slots. Deleting a
//! processor removes its leaves and helpers, splitting RTs into fragments;
//! the fragments' anchors form a temporary balanced tree BT_v and merge
//! bottom-up into a single new RT.
//!
//! The actual overlay G is read off the records: alive-alive G′ edges plus
//! the helper parent/child links. A processor that simulates a helper
//! inside an RT attaches to that RT through the helper alone (its leaf
//! slot carries no separate edge), which caps each slot's contribution to
//! the real degree at 3.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::haft::{Haft, HaftNode, NodeId, NodeKind};
use crate::netsim::{Message, MessageKind, NetSim, RecoveryStats, SimError};

pub type ProcessorId = u64;

/// Name of a G′ edge: an unordered processor pair, stored canonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub a: ProcessorId,
    pub b: ProcessorId,
}

impl EdgeKey {
    pub fn new(x: ProcessorId, y: ProcessorId) -> Self {
        if x <= y { EdgeKey { a: x, b: y } } else { EdgeKey { a: y, b: x } }
    }

    pub fn other(&self, p: ProcessorId) -> ProcessorId {
        if p == self.a { self.b } else { self.a }
    }

    pub fn touches(&self, p: ProcessorId) -> bool {
        self.a == p || self.b == p
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Real,
    Helper,
}

/// A node of G: the real leaf a processor contributes for one edge slot,
/// or the helper it simulates on that slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VirtualNodeRef {
    pub processor: ProcessorId,
    pub edge: EdgeKey,
    pub role: Role,
}

impl VirtualNodeRef {
    pub fn real(processor: ProcessorId, edge: EdgeKey) -> Self {
        VirtualNodeRef { processor, edge, role: Role::Real }
    }

    pub fn helper(processor: ProcessorId, edge: EdgeKey) -> Self {
        VirtualNodeRef { processor, edge, role: Role::Helper }
    }
}

impl fmt::Display for VirtualNodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.role {
            Role::Real => "real",
            Role::Helper => "help",
        };
        write!(f, "{}@{}{}", tag, self.processor, self.edge)
    }
}

/// Fields a helper carries (present on a record iff it simulates one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperFields {
    pub hparent: Option<VirtualNodeRef>,
    pub hleftchild: Option<VirtualNodeRef>,
    pub hrightchild: Option<VirtualNodeRef>,
    pub height: u32,
    pub childrencount: u64,
    pub representative: VirtualNodeRef,
}

/// Per-edge state a processor maintains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRecord {
    /// Node representing the other end: the neighbor's real ref while it
    /// lives, the slot's RT parent after it dies, `None` for a trivial
    /// one-leaf RT.
    pub endpoint: Option<VirtualNodeRef>,
    /// Parent of this slot's leaf in its RT; set only when the other
    /// endpoint is deleted.
    pub rt_parent: Option<VirtualNodeRef>,
    pub representative: VirtualNodeRef,
    pub helper: Option<HelperFields>,
}

impl EdgeRecord {
    pub fn hashelper(&self) -> bool {
        self.helper.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ProcessorState {
    pub id: ProcessorId,
    pub alive: bool,
    pub records: BTreeMap<EdgeKey, EdgeRecord>,
    /// Neighbor-of-neighbor table over the live part of G′: for each live
    /// neighbor, that neighbor's live neighbor set.
    pub nn_cache: BTreeMap<ProcessorId, BTreeSet<ProcessorId>>,
}

/// Adjacency snapshot used by the metrics pass. `multi_degree` counts
/// every virtual edge incident to a processor's refs (parallel edges
/// included); `adj` is deduplicated for path computations.
#[derive(Debug, Clone, Default)]
pub struct GraphView {
    pub adj: BTreeMap<ProcessorId, BTreeSet<ProcessorId>>,
    pub multi_degree: BTreeMap<ProcessorId, u64>,
}

impl GraphView {
    pub fn nodes(&self) -> impl Iterator<Item = ProcessorId> + '_ {
        self.adj.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, p: ProcessorId) -> impl Iterator<Item = ProcessorId> + '_ {
        self.adj.get(&p).into_iter().flatten().copied()
    }

    pub fn degree(&self, p: ProcessorId) -> u64 {
        self.multi_degree.get(&p).copied().unwrap_or(0)
    }

    fn touch(&mut self, p: ProcessorId) {
        self.adj.entry(p).or_default();
        self.multi_degree.entry(p).or_insert(0);
    }

    fn add_edge(&mut self, x: ProcessorId, y: ProcessorId) {
        if x == y {
            // Two refs of the same processor; collapses in the homomorphic
            // image and adds nothing to connectivity or distance.
            return;
        }
        self.adj.entry(x).or_default().insert(y);
        self.adj.entry(y).or_default().insert(x);
        *self.multi_degree.entry(x).or_insert(0) += 1;
        *self.multi_degree.entry(y).or_insert(0) += 1;
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.adj.keys().next() else { return true };
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![start];
        seen.insert(start);
        while let Some(p) = stack.pop() {
            for q in self.neighbors(p) {
                if seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        seen.len() == self.adj.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    UnknownProcessor(ProcessorId),
    DeadProcessor(ProcessorId),
    DuplicateId(ProcessorId),
    NoNeighbors(ProcessorId),
    SelfNeighbor(ProcessorId),
    /// Internal consistency failure; carries a diagnostic.
    Protocol(String),
    Sim(SimError),
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::UnknownProcessor(p) => write!(f, "unknown processor {p}"),
            ProtocolError::DeadProcessor(p) => write!(f, "processor {p} is deleted"),
            ProtocolError::DuplicateId(p) => write!(f, "processor id {p} already used"),
            ProtocolError::NoNeighbors(p) => {
                write!(f, "insert of {p} names no live neighbor in a non-empty graph")
            }
            ProtocolError::SelfNeighbor(p) => write!(f, "processor {p} lists itself as neighbor"),
            ProtocolError::Protocol(s) => write!(f, "protocol error: {s}"),
            ProtocolError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl From<SimError> for ProtocolError {
    fn from(e: SimError) -> Self {
        ProtocolError::Sim(e)
    }
}

/// One materialized RT: its haft image, plus the refs backing each arena
/// node and the leaves left to right.
pub struct RtView {
    pub root: VirtualNodeRef,
    pub haft: Haft,
    pub refs: Vec<VirtualNodeRef>,
    pub leaves: Vec<VirtualNodeRef>,
}

#[derive(Debug, Default)]
pub struct ForgivingGraph {
    procs: BTreeMap<ProcessorId, ProcessorState>,
    gprime: BTreeSet<EdgeKey>,
}

impl ForgivingGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Initialize from an edge list; all named processors start alive.
    pub fn from_edges(edges: &[(ProcessorId, ProcessorId)]) -> Result<Self, ProtocolError> {
        let mut g = Self::new();
        for &(x, y) in edges {
            if x == y {
                return Err(ProtocolError::SelfNeighbor(x));
            }
            g.procs.entry(x).or_insert_with(|| ProcessorState {
                id: x,
                alive: true,
                records: BTreeMap::new(),
                nn_cache: BTreeMap::new(),
            });
            g.procs.entry(y).or_insert_with(|| ProcessorState {
                id: y,
                alive: true,
                records: BTreeMap::new(),
                nn_cache: BTreeMap::new(),
            });
            let e = EdgeKey::new(x, y);
            if g.gprime.insert(e) {
                g.procs.get_mut(&x).unwrap().records.insert(e, fresh_record(x, e));
                g.procs.get_mut(&y).unwrap().records.insert(e, fresh_record(y, e));
            }
        }
        let ids: Vec<ProcessorId> = g.procs.keys().copied().collect();
        g.refresh_nn(ids.iter().copied());
        Ok(g)
    }

    pub fn contains(&self, p: ProcessorId) -> bool {
        self.procs.contains_key(&p)
    }

    pub fn is_alive(&self, p: ProcessorId) -> bool {
        self.procs.get(&p).map(|s| s.alive).unwrap_or(false)
    }

    pub fn live_ids(&self) -> Vec<ProcessorId> {
        self.procs.values().filter(|s| s.alive).map(|s| s.id).collect()
    }

    pub fn live_count(&self) -> usize {
        self.procs.values().filter(|s| s.alive).count()
    }

    /// |G′|: every processor ever inserted.
    pub fn gprime_count(&self) -> u64 {
        self.procs.len() as u64
    }

    pub fn gprime_degree(&self, p: ProcessorId) -> u64 {
        self.procs.get(&p).map(|s| s.records.len() as u64).unwrap_or(0)
    }

    pub fn processor(&self, p: ProcessorId) -> Option<&ProcessorState> {
        self.procs.get(&p)
    }

    pub fn record(&self, p: ProcessorId, e: EdgeKey) -> Option<&EdgeRecord> {
        self.procs.get(&p).and_then(|s| s.records.get(&e))
    }

    /// Insert a processor with the given neighbors (the adversary's
    /// choice). The id must be fresh; neighbors must be live.
    pub fn insert(&mut self, id: ProcessorId, neighbors: &[ProcessorId]) -> Result<(), ProtocolError> {
        if self.procs.contains_key(&id) {
            return Err(ProtocolError::DuplicateId(id));
        }
        let mut nbrs: BTreeSet<ProcessorId> = BTreeSet::new();
        for &x in neighbors {
            if x == id {
                return Err(ProtocolError::SelfNeighbor(id));
            }
            let st = self.procs.get(&x).ok_or(ProtocolError::UnknownProcessor(x))?;
            if !st.alive {
                return Err(ProtocolError::DeadProcessor(x));
            }
            nbrs.insert(x);
        }
        if nbrs.is_empty() && self.live_count() > 0 {
            return Err(ProtocolError::NoNeighbors(id));
        }
        self.procs.insert(
            id,
            ProcessorState { id, alive: true, records: BTreeMap::new(), nn_cache: BTreeMap::new() },
        );
        for &x in &nbrs {
            let e = EdgeKey::new(id, x);
            self.gprime.insert(e);
            self.procs.get_mut(&id).unwrap().records.insert(e, fresh_record(id, e));
            self.procs.get_mut(&x).unwrap().records.insert(e, fresh_record(x, e));
        }
        let mut affected: BTreeSet<ProcessorId> = nbrs.clone();
        affected.insert(id);
        for &x in &nbrs {
            affected.extend(self.live_gprime_neighbors(x));
        }
        self.refresh_nn(affected.into_iter());
        Ok(())
    }

    fn live_gprime_neighbors(&self, p: ProcessorId) -> Vec<ProcessorId> {
        let Some(st) = self.procs.get(&p) else { return Vec::new() };
        st.records
            .keys()
            .map(|e| e.other(p))
            .filter(|q| self.is_alive(*q))
            .collect()
    }

    fn refresh_nn<I: Iterator<Item = ProcessorId>>(&mut self, ids: I) {
        for p in ids {
            if !self.is_alive(p) {
                if let Some(st) = self.procs.get_mut(&p) {
                    st.nn_cache.clear();
                }
                continue;
            }
            let mut cache = BTreeMap::new();
            for q in self.live_gprime_neighbors(p) {
                let set: BTreeSet<ProcessorId> = self.live_gprime_neighbors(q).into_iter().collect();
                cache.insert(q, set);
            }
            self.procs.get_mut(&p).unwrap().nn_cache = cache;
        }
    }

    /// G′ at the current step: every processor ever inserted, dead or not.
    pub fn insert_only_graph(&self) -> GraphView {
        let mut view = GraphView::default();
        for p in self.procs.keys() {
            view.touch(*p);
        }
        for e in &self.gprime {
            view.add_edge(e.a, e.b);
        }
        view
    }

    /// The actual overlay G at processor level. Edges come from live-live
    /// G′ edges and from helpers' child links; a leaf slot contributes its
    /// own parent edge only when no helper sits on that slot.
    pub fn current_graph(&self) -> GraphView {
        let mut view = GraphView::default();
        for st in self.procs.values() {
            if st.alive {
                view.touch(st.id);
            }
        }
        for e in &self.gprime {
            if self.is_alive(e.a) && self.is_alive(e.b) {
                view.add_edge(e.a, e.b);
            }
        }
        for st in self.procs.values() {
            if !st.alive {
                continue;
            }
            for (e, rec) in &st.records {
                let Some(h) = &rec.helper else { continue };
                let _ = e;
                for child in [&h.hleftchild, &h.hrightchild] {
                    let Some(c) = child else { continue };
                    match c.role {
                        Role::Helper => view.add_edge(st.id, c.processor),
                        Role::Real => {
                            let attached_via_helper = self
                                .record(c.processor, c.edge)
                                .map(|r| r.hashelper())
                                .unwrap_or(false);
                            if !attached_via_helper {
                                view.add_edge(st.id, c.processor);
                            }
                        }
                    }
                }
            }
        }
        view
    }

    /// Materialize every RT: group helper refs by connectivity and build
    /// each tree as a haft arena for validation and shape comparison.
    /// Trivial one-leaf RTs (a slot with a dead endpoint and no parent)
    /// are not included.
    pub fn rts(&self) -> Vec<RtView> {
        let mut roots: Vec<VirtualNodeRef> = Vec::new();
        for st in self.procs.values() {
            if !st.alive {
                continue;
            }
            for (e, rec) in &st.records {
                if let Some(h) = &rec.helper {
                    if h.hparent.is_none() {
                        roots.push(VirtualNodeRef::helper(st.id, *e));
                    }
                }
            }
        }
        roots
            .into_iter()
            .map(|root| {
                let mut refs = Vec::new();
                let mut arena: Vec<HaftNode> = Vec::new();
                let mut leaves = Vec::new();
                let id = self.materialize(root, &mut arena, &mut refs, &mut leaves);
                RtView { root, haft: Haft::from_parts(arena, id), refs, leaves }
            })
            .collect()
    }

    fn materialize(
        &self,
        r: VirtualNodeRef,
        arena: &mut Vec<HaftNode>,
        refs: &mut Vec<VirtualNodeRef>,
        leaves: &mut Vec<VirtualNodeRef>,
    ) -> NodeId {
        match r.role {
            Role::Real => {
                let id = NodeId(arena.len() as u32);
                arena.push(HaftNode {
                    kind: NodeKind::Leaf,
                    label: r.processor,
                    left: None,
                    right: None,
                    parent: None,
                    height: 0,
                    leaf_count: 1,
                });
                refs.push(r);
                leaves.push(r);
                id
            }
            Role::Helper => {
                let h = self
                    .record(r.processor, r.edge)
                    .and_then(|rec| rec.helper.clone())
                    .unwrap_or_else(|| panic!("dangling helper ref {r}"));
                let l = h.hleftchild.expect("helper without left child");
                let rr = h.hrightchild.expect("helper without right child");
                let li = self.materialize(l, arena, refs, leaves);
                let ri = self.materialize(rr, arena, refs, leaves);
                let id = NodeId(arena.len() as u32);
                let node = HaftNode {
                    kind: NodeKind::Internal,
                    label: r.processor,
                    left: Some(li),
                    right: Some(ri),
                    parent: None,
                    height: h.height,
                    leaf_count: h.childrencount,
                };
                arena.push(node);
                arena[li.0 as usize].parent = Some(id);
                arena[ri.0 as usize].parent = Some(id);
                refs.push(r);
                id
            }
        }
    }

    /// Check every protocol invariant on the quiescent state; returns one
    /// line per violation (empty means clean).
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for st in self.procs.values() {
            if !st.alive {
                continue;
            }
            for (e, rec) in &st.records {
                let other = e.other(st.id);
                if rec.rt_parent.is_some() && self.is_alive(other) {
                    out.push(format!("{}:{e}: rt_parent set while {other} lives", st.id));
                }
                if let Some(h) = &rec.helper {
                    if self.is_alive(other) {
                        out.push(format!("{}:{e}: helper on a live edge", st.id));
                    }
                    for (tag, link) in [("left", &h.hleftchild), ("right", &h.hrightchild)] {
                        match link {
                            None => out.push(format!("{}:{e}: helper missing {tag} child", st.id)),
                            Some(c) => {
                                let back = self.parent_link_of(*c);
                                if back != Some(VirtualNodeRef::helper(st.id, *e)) {
                                    out.push(format!(
                                        "{}:{e}: {tag} child {c} does not link back",
                                        st.id
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        for rt in self.rts() {
            if let Err(v) = rt.haft.validate() {
                out.push(format!("RT at {}: {v}", rt.root));
            }
            let distinct: BTreeSet<_> = rt.leaves.iter().collect();
            if distinct.len() != rt.leaves.len() {
                out.push(format!("RT at {}: duplicate leaf refs", rt.root));
            }
            for leaf in &rt.leaves {
                if !self.is_alive(leaf.processor) {
                    out.push(format!("RT at {}: dead leaf {leaf}", rt.root));
                }
            }
            out.extend(self.check_representatives(&rt));
        }
        let g = self.current_graph();
        if !g.is_connected() {
            out.push("G disconnected".into());
        }
        for p in g.nodes() {
            let dg = g.degree(p);
            let dp = self.gprime_degree(p);
            if dg > 3 * dp {
                out.push(format!("degree bound: deg_G({p}) = {dg} > 3·{dp}"));
            }
        }
        out.extend(self.check_nn_cache());
        out
    }

    fn parent_link_of(&self, r: VirtualNodeRef) -> Option<VirtualNodeRef> {
        let rec = self.record(r.processor, r.edge)?;
        match r.role {
            Role::Real => rec.rt_parent,
            Role::Helper => rec.helper.as_ref().and_then(|h| h.hparent),
        }
    }

    /// A helper's representative must be the unique leaf slot in its
    /// subtree with no helper inside that subtree.
    fn check_representatives(&self, rt: &RtView) -> Vec<String> {
        let mut out = Vec::new();
        for r in &rt.refs {
            if r.role != Role::Helper {
                continue;
            }
            let mut leaves = Vec::new();
            let mut helpers = BTreeSet::new();
            self.scan_subtree(*r, &mut leaves, &mut helpers);
            let free: Vec<_> = leaves
                .iter()
                .filter(|l| !helpers.contains(&(l.processor, l.edge)))
                .collect();
            let rep = self
                .record(r.processor, r.edge)
                .and_then(|rec| rec.helper.as_ref())
                .map(|h| h.representative);
            match (free.as_slice(), rep) {
                ([only], Some(rep)) if **only == rep => {}
                _ => out.push(format!(
                    "representative of {r}: stored {rep:?}, free leaves {}",
                    free.len()
                )),
            }
        }
        out
    }

    fn scan_subtree(
        &self,
        r: VirtualNodeRef,
        leaves: &mut Vec<VirtualNodeRef>,
        helpers: &mut BTreeSet<(ProcessorId, EdgeKey)>,
    ) {
        match r.role {
            Role::Real => leaves.push(r),
            Role::Helper => {
                helpers.insert((r.processor, r.edge));
                if let Some(h) = self.record(r.processor, r.edge).and_then(|x| x.helper.clone()) {
                    if let Some(l) = h.hleftchild {
                        self.scan_subtree(l, leaves, helpers);
                    }
                    if let Some(rr) = h.hrightchild {
                        self.scan_subtree(rr, leaves, helpers);
                    }
                }
            }
        }
    }

    fn check_nn_cache(&self) -> Vec<String> {
        let mut out = Vec::new();
        for st in self.procs.values() {
            if !st.alive {
                continue;
            }
            let expect: BTreeSet<ProcessorId> =
                self.live_gprime_neighbors(st.id).into_iter().collect();
            let have: BTreeSet<ProcessorId> = st.nn_cache.keys().copied().collect();
            if expect != have {
                out.push(format!("nn cache of {}: wrong neighbor set", st.id));
                continue;
            }
            for (q, set) in &st.nn_cache {
                let real: BTreeSet<ProcessorId> =
                    self.live_gprime_neighbors(*q).into_iter().collect();
                if *set != real {
                    out.push(format!("nn cache of {}: stale entry for {q}", st.id));
                }
            }
        }
        out
    }

    /// Delete `v` and run the repair to quiescence through the simulator.
    pub fn delete_fix(
        &mut self,
        sim: &mut NetSim,
        v: ProcessorId,
    ) -> Result<RecoveryStats, ProtocolError> {
        let st = self.procs.get(&v).ok_or(ProtocolError::UnknownProcessor(v))?;
        if !st.alive {
            return Err(ProtocolError::DeadProcessor(v));
        }
        let d = st.records.len() as u64;
        sim.begin_recovery(v, d);
        self.repair(sim, v)?;
        let n = self.gprime_count();
        let stats = sim.finish_recovery(n)?;
        Ok(stats)
    }

    // ------------------------------------------------------------------
    // Repair internals
    // ------------------------------------------------------------------

    fn vlinks(&self, r: &VirtualNodeRef) -> Vec<VirtualNodeRef> {
        let Some(rec) = self.record(r.processor, r.edge) else { return Vec::new() };
        match r.role {
            Role::Real => rec.rt_parent.into_iter().collect(),
            Role::Helper => {
                let Some(h) = &rec.helper else { return Vec::new() };
                [h.hparent, h.hleftchild, h.hrightchild].into_iter().flatten().collect()
            }
        }
    }

    fn repair(&mut self, sim: &mut NetSim, v: ProcessorId) -> Result<(), ProtocolError> {
        // Refs that die with v: its leaf per slot, plus any helper.
        let vslots: Vec<EdgeKey> = self.procs[&v].records.keys().copied().collect();
        let mut removed: BTreeSet<VirtualNodeRef> = BTreeSet::new();
        for e in &vslots {
            removed.insert(VirtualNodeRef::real(v, *e));
            if self.procs[&v].records[e].hashelper() {
                removed.insert(VirtualNodeRef::helper(v, *e));
            }
        }

        // Closure of every RT touching a removed ref.
        let mut affected: BTreeSet<VirtualNodeRef> = BTreeSet::new();
        let mut stack: Vec<VirtualNodeRef> = removed.iter().copied().collect();
        while let Some(r) = stack.pop() {
            if !affected.insert(r) {
                continue;
            }
            for next in self.vlinks(&r) {
                if !affected.contains(&next) {
                    stack.push(next);
                }
            }
            // Parent links are mirrored by child links, so the closure is
            // symmetric without a reverse index.
        }

        // Fragments: components of the affected structure minus the
        // removed refs, plus one fresh singleton leaf per live neighbor.
        let survivors: BTreeSet<VirtualNodeRef> =
            affected.difference(&removed).copied().collect();
        let mut frag_of: BTreeMap<VirtualNodeRef, usize> = BTreeMap::new();
        let mut fragments: Vec<Vec<VirtualNodeRef>> = Vec::new();
        for &s in &survivors {
            if frag_of.contains_key(&s) {
                continue;
            }
            let idx = fragments.len();
            let mut comp = Vec::new();
            let mut st2 = alloc::vec![s];
            frag_of.insert(s, idx);
            while let Some(r) = st2.pop() {
                comp.push(r);
                for next in self.vlinks(&r) {
                    if survivors.contains(&next) && !frag_of.contains_key(&next) {
                        frag_of.insert(next, idx);
                        st2.push(next);
                    }
                }
            }
            fragments.push(comp);
        }
        for e in &vslots {
            let x = e.other(v);
            if self.is_alive(x) {
                let leaf = VirtualNodeRef::real(x, *e);
                let idx = fragments.len();
                frag_of.insert(leaf, idx);
                fragments.push(alloc::vec![leaf]);
            }
        }

        // Mirror the fragments into the repair context; records stay
        // frozen until write-back.
        let mut ctx: BTreeMap<VirtualNodeRef, RNode> = BTreeMap::new();
        for comp in &fragments {
            for &r in comp {
                let node = match r.role {
                    Role::Real => RNode {
                        parent: self.parent_link_of(r).filter(|p| !removed.contains(p)),
                        left: None,
                        right: None,
                        height: 0,
                        count: 1,
                        rep: r,
                    },
                    Role::Helper => {
                        let h = self
                            .record(r.processor, r.edge)
                            .and_then(|rec| rec.helper.clone())
                            .ok_or_else(|| {
                                ProtocolError::Protocol(format!("missing helper for {r}"))
                            })?;
                        RNode {
                            parent: h.hparent.filter(|p| !removed.contains(p)),
                            left: h.hleftchild.filter(|c| !removed.contains(c)),
                            right: h.hrightchild.filter(|c| !removed.contains(c)),
                            height: h.height,
                            count: h.childrencount,
                            rep: h.representative,
                        }
                    }
                };
                ctx.insert(r, node);
            }
        }

        // Anchors: smallest surviving ref adjacent to the removal, per
        // fragment. Singleton leaves are adjacent through their G′ edge.
        let mut candidates: BTreeSet<VirtualNodeRef> = BTreeSet::new();
        for r in &removed {
            for s in self.vlinks(r) {
                if !removed.contains(&s) {
                    candidates.insert(s);
                }
            }
        }
        for e in &vslots {
            let x = e.other(v);
            if self.is_alive(x) {
                candidates.insert(VirtualNodeRef::real(x, *e));
            }
        }

        let mut participants: Vec<Participant> = Vec::new();
        for comp in &fragments {
            let root = comp
                .iter()
                .copied()
                .find(|r| ctx[r].parent.is_none())
                .ok_or_else(|| ProtocolError::Protocol("fragment without root".into()))?;
            recount(&mut ctx, root);
            if ctx[&root].count == 0 {
                // Every leaf died with v; the leftover helpers are all
                // incomplete and simply dissolve.
                sim.note_red_removed(comp.len() as u64);
                for r in comp {
                    ctx.remove(r);
                }
                continue;
            }
            let anchor = comp
                .iter()
                .copied()
                .filter(|r| candidates.contains(r))
                .min()
                .ok_or_else(|| ProtocolError::Protocol("fragment without anchor".into()))?;
            let part = strip_participant(&mut ctx, sim, root, anchor);
            participants.push(part);
        }

        if participants.is_empty() {
            self.write_back(sim, v, &affected, None)?;
            return Ok(());
        }

        // BT_v: complete binary tree over the anchors, biggest fragments
        // first, filled in level order.
        participants.sort_by(|a, b| {
            (core::cmp::Reverse(a.leaf_total), a.anchor).cmp(&(core::cmp::Reverse(b.leaf_total), b.anchor))
        });
        for i in 1..participants.len() {
            let p = (i - 1) / 2;
            sim.add_temp_link(participants[i].anchor, participants[p].anchor);
            sim.send(
                Message {
                    src: participants[i].anchor,
                    dst: participants[p].anchor,
                    kind: MessageKind::RecordUpdate,
                    size_ids: 4,
                },
                false,
            )?;
        }
        if participants.len() > 1 {
            sim.advance_round();
        }

        // Bottom-up merging: each round, the deepest BT level folds into
        // its parents (two- or three-way haft merges, in parallel).
        let instrumented_anchors: BTreeSet<VirtualNodeRef> =
            participants.iter().map(|p| p.anchor).collect();
        while participants.len() > 1 {
            let depth = |i: usize| (i as u64 + 1).ilog2();
            let dmax = depth(participants.len() - 1);
            let first_bottom = (1usize << dmax) - 1;
            let mut schedules: Vec<Vec<Vec<Message>>> = Vec::new();
            // Children at the bottom level group under consecutive parents.
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for i in first_bottom..participants.len() {
                let p = (i - 1) / 2;
                match groups.last_mut() {
                    Some((gp, kids)) if *gp == p => kids.push(i),
                    _ => groups.push((p, alloc::vec![i])),
                }
            }
            for (p, kids) in &groups {
                let sched = self.merge_group(sim, &mut ctx, &mut participants, *p, kids, &instrumented_anchors)?;
                schedules.push(sched);
            }
            let max_rounds = schedules.iter().map(|s| s.len()).max().unwrap_or(0);
            for t in 0..max_rounds {
                for sched in &mut schedules {
                    if t < sched.len() {
                        for m in sched[t].drain(..) {
                            sim.send(m, true)?;
                        }
                    }
                }
                sim.advance_round();
            }
            participants.truncate(first_bottom);
        }

        // A lone damaged fragment still normalizes itself into a haft.
        let solo_needs_fix = match &participants[0].state {
            PState::Stripped { pieces, walk } => pieces.len() > 1 || !walk.is_empty(),
            PState::Whole { .. } => false,
        };
        if solo_needs_fix {
            let sched = self.merge_group(sim, &mut ctx, &mut participants, 0, &[], &instrumented_anchors)?;
            for round in sched {
                for m in round {
                    sim.send(m, true)?;
                }
                sim.advance_round();
            }
        }

        let final_root = match &participants[0].state {
            PState::Whole { root } => *root,
            PState::Stripped { pieces, .. } => pieces[0].root,
        };
        self.write_back(sim, v, &affected, Some((final_root, ctx)))?;
        Ok(())
    }

    /// One Haft_Merge: parent participant plus up to two children fold
    /// their primary-root lists into a single RT. Returns the message
    /// schedule (one inner vec per local round).
    fn merge_group(
        &self,
        sim: &mut NetSim,
        ctx: &mut BTreeMap<VirtualNodeRef, RNode>,
        participants: &mut [Participant],
        p: usize,
        kids: &[usize],
        anchors: &BTreeSet<VirtualNodeRef>,
    ) -> Result<Vec<Vec<Message>>, ProtocolError> {
        let mut indices = alloc::vec![p];
        indices.extend_from_slice(kids);
        // Re-strip any participant holding a whole RT from an earlier
        // round: its chain helpers go red and come out.
        for &i in &indices {
            if let PState::Whole { root } = participants[i].state {
                let anchor = participants[i].anchor;
                let part = strip_participant(ctx, sim, root, anchor);
                let old = core::mem::replace(&mut participants[i], part);
                let _ = old;
            }
        }

        // Local round schedule.
        let mut walks: Vec<Vec<(VirtualNodeRef, VirtualNodeRef)>> = Vec::new();
        let mut all_pieces: Vec<Piece> = Vec::new();
        for &i in &indices {
            let PState::Stripped { pieces, walk } = &mut participants[i].state else {
                unreachable!("stripped above")
            };
            walks.push(core::mem::take(walk));
            all_pieces.extend(pieces.iter().cloned());
        }
        // Anchor handoffs take effect before the exchange phase.
        let mut handoff_msgs: Vec<Message> = Vec::new();
        for &i in &indices {
            if let Some(new_anchor) = participants[i].handoff.take() {
                handoff_msgs.push(Message {
                    src: participants[i].anchor,
                    dst: new_anchor,
                    kind: MessageKind::AnchorHandoff,
                    size_ids: 6,
                });
                participants[i].anchor = new_anchor;
            }
        }

        let max_walk = walks.iter().map(|w| w.len()).max().unwrap_or(0);
        let mut schedule: Vec<Vec<Message>> = Vec::new();
        for t in 0..max_walk {
            let mut round = Vec::new();
            for w in &walks {
                if let Some((src, dst)) = w.get(t) {
                    round.push(Message {
                        src: *src,
                        dst: *dst,
                        kind: MessageKind::Probe,
                        size_ids: 4,
                    });
                }
            }
            schedule.push(round);
        }
        // Probe replies: each participant's piece list returns to its
        // anchor in one aggregated message.
        let mut round = Vec::new();
        for (k, &i) in indices.iter().enumerate() {
            let PState::Stripped { pieces, .. } = &participants[i].state else { unreachable!() };
            if !walks[k].is_empty() {
                round.push(Message {
                    src: pieces[0].root,
                    dst: participants[i].anchor,
                    kind: MessageKind::ProbeReply,
                    size_ids: 8 * pieces.len() as u64,
                });
            }
        }
        round.extend(handoff_msgs);
        if !round.is_empty() {
            schedule.push(round);
        }
        // Exchange: children to parent, then the combined list back.
        if !kids.is_empty() {
            let mut up = Vec::new();
            for &i in kids {
                let PState::Stripped { pieces, .. } = &participants[i].state else { unreachable!() };
                up.push(Message {
                    src: participants[i].anchor,
                    dst: participants[p].anchor,
                    kind: MessageKind::PrRootsList,
                    size_ids: 8 * pieces.len() as u64,
                });
            }
            schedule.push(up);
            let combined_size = 8 * all_pieces.len() as u64;
            let down: Vec<Message> = kids
                .iter()
                .map(|&i| Message {
                    src: participants[p].anchor,
                    dst: participants[i].anchor,
                    kind: MessageKind::PrRootsList,
                    size_ids: combined_size,
                })
                .collect();
            schedule.push(down);
        }

        // Every participant now computes the same blueprint locally.
        let (root, new_helpers) = compute_haft(ctx, &mut all_pieces)?;
        let mut recruit = Vec::new();
        let mut relink = Vec::new();
        for h in &new_helpers {
            // Mid-repair helper instrumentation: the record may still hold
            // the pre-repair helper until write-back.
            let frozen = self
                .record(h.slot.processor, h.slot.edge)
                .map(|r| r.hashelper())
                .unwrap_or(false);
            let simultaneous = 1 + frozen as u64;
            let anchored = anchors.contains(&h.slot) as u64;
            sim.note_record_helpers(simultaneous, anchored);
            recruit.push(Message {
                src: participants[p].anchor,
                dst: h.slot,
                kind: MessageKind::MergeBlueprint,
                size_ids: 10,
            });
            for child in [h.left, h.right] {
                relink.push(Message {
                    src: h.slot,
                    dst: child,
                    kind: MessageKind::RecordUpdate,
                    size_ids: 4,
                });
            }
        }
        if !recruit.is_empty() {
            schedule.push(recruit);
            schedule.push(relink);
        }
        sim.note_edges(2 * new_helpers.len() as u64, 0);

        participants[p].leaf_total = ctx[&root].count;
        participants[p].state = PState::Whole { root };
        Ok(schedule)
    }

    /// Apply the repair result to the records: clear everything the
    /// affected RTs used to store, then write the final RT (if any), mark
    /// v dead, and refresh caches.
    fn write_back(
        &mut self,
        sim: &mut NetSim,
        v: ProcessorId,
        affected: &BTreeSet<VirtualNodeRef>,
        result: Option<(VirtualNodeRef, BTreeMap<VirtualNodeRef, RNode>)>,
    ) -> Result<(), ProtocolError> {
        for r in affected {
            let Some(st) = self.procs.get_mut(&r.processor) else { continue };
            let Some(rec) = st.records.get_mut(&r.edge) else { continue };
            match r.role {
                Role::Helper => rec.helper = None,
                Role::Real => {
                    rec.rt_parent = None;
                    rec.endpoint = None;
                }
            }
        }

        let vslots: Vec<EdgeKey> = self.procs[&v].records.keys().copied().collect();
        let mut completion = 0u64;
        if let Some((root, ctx)) = result {
            let mut stack = alloc::vec![root];
            while let Some(r) = stack.pop() {
                let node = ctx
                    .get(&r)
                    .ok_or_else(|| ProtocolError::Protocol(format!("lost node {r}")))?;
                let st = self
                    .procs
                    .get_mut(&r.processor)
                    .ok_or(ProtocolError::UnknownProcessor(r.processor))?;
                let rec = st
                    .records
                    .get_mut(&r.edge)
                    .ok_or_else(|| ProtocolError::Protocol(format!("no record for {r}")))?;
                match r.role {
                    Role::Helper => {
                        rec.helper = Some(HelperFields {
                            hparent: node.parent,
                            hleftchild: node.left,
                            hrightchild: node.right,
                            height: node.height,
                            childrencount: node.count,
                            representative: node.rep,
                        });
                        if let Some(l) = node.left {
                            stack.push(l);
                        }
                        if let Some(rr) = node.right {
                            stack.push(rr);
                        }
                    }
                    Role::Real => {
                        rec.rt_parent = node.parent;
                        rec.endpoint = node.parent;
                    }
                }
            }
        }

        // The dying processor's slots on the neighbor side get retargeted
        // endpoints; one record update per G′ edge of v.
        for e in &vslots {
            let x = e.other(v);
            if self.is_alive(x) {
                let dst = VirtualNodeRef::real(x, *e);
                let src = self
                    .record(x, *e)
                    .and_then(|r| r.rt_parent)
                    .unwrap_or(dst);
                sim.send(
                    Message { src, dst, kind: MessageKind::RecordUpdate, size_ids: 4 },
                    true,
                )?;
                completion += 1;
            }
        }
        if completion > 0 {
            sim.advance_round();
        }
        sim.note_edges(0, vslots.len() as u64);

        {
            let st = self.procs.get_mut(&v).unwrap();
            st.alive = false;
            for rec in st.records.values_mut() {
                rec.helper = None;
                rec.rt_parent = None;
                rec.endpoint = None;
            }
            st.nn_cache.clear();
        }
        let mut touched: BTreeSet<ProcessorId> = BTreeSet::new();
        for e in &vslots {
            let x = e.other(v);
            touched.insert(x);
            touched.extend(self.live_gprime_neighbors(x));
        }
        touched.insert(v);
        self.refresh_nn(touched.into_iter());
        Ok(())
    }
}

fn fresh_record(owner: ProcessorId, e: EdgeKey) -> EdgeRecord {
    EdgeRecord {
        endpoint: Some(VirtualNodeRef::real(e.other(owner), e)),
        rt_parent: None,
        representative: VirtualNodeRef::real(owner, e),
        helper: None,
    }
}

/// Node of the repair context: the working copy of the affected RTs.
#[derive(Debug, Clone)]
struct RNode {
    parent: Option<VirtualNodeRef>,
    left: Option<VirtualNodeRef>,
    right: Option<VirtualNodeRef>,
    height: u32,
    count: u64,
    rep: VirtualNodeRef,
}

/// Snapshot of one primary root as circulated in the lists.
#[derive(Debug, Clone)]
struct Piece {
    root: VirtualNodeRef,
    count: u64,
    rep: VirtualNodeRef,
}

#[derive(Debug)]
enum PState {
    /// Stripped into primary-root pieces; `walk` holds the probe hops to
    /// charge when this participant first merges.
    Stripped { pieces: Vec<Piece>, walk: Vec<(VirtualNodeRef, VirtualNodeRef)> },
    /// A whole RT built by an earlier merge round.
    Whole { root: VirtualNodeRef },
}

#[derive(Debug)]
struct Participant {
    anchor: VirtualNodeRef,
    state: PState,
    handoff: Option<VirtualNodeRef>,
    leaf_total: u64,
}

/// Recompute surviving leaf counts below `root` in the context.
fn recount(ctx: &mut BTreeMap<VirtualNodeRef, RNode>, root: VirtualNodeRef) -> u64 {
    let (left, right) = {
        let n = &ctx[&root];
        (n.left, n.right)
    };
    if root.role == Role::Real {
        return 1;
    }
    let mut total = 0;
    if let Some(l) = left {
        total += recount(ctx, l);
    }
    if let Some(r) = right {
        total += recount(ctx, r);
    }
    ctx.get_mut(&root).unwrap().count = total;
    total
}

/// Strip a fragment (or a whole RT from a previous round): find its
/// primary roots, mark and remove the incomplete nodes, and record the
/// probe walk used to discover them.
fn strip_participant(
    ctx: &mut BTreeMap<VirtualNodeRef, RNode>,
    sim: &mut NetSim,
    root: VirtualNodeRef,
    anchor: VirtualNodeRef,
) -> Participant {
    recount(ctx, root);
    // Probe walk: ascend from the anchor to the root, then descend over
    // the incomplete region down to the primary-root frontier.
    let mut walk = Vec::new();
    let mut cur = anchor;
    while let Some(parent) = ctx[&cur].parent {
        walk.push((cur, parent));
        cur = parent;
    }
    debug_assert_eq!(cur, root);

    let mut pieces: Vec<Piece> = Vec::new();
    let mut red: Vec<VirtualNodeRef> = Vec::new();
    let mut stack = alloc::vec![(root, Option::<VirtualNodeRef>::None)];
    while let Some((r, parent)) = stack.pop() {
        let n = ctx[&r].clone();
        if let Some(p) = parent {
            walk.push((p, r));
        }
        let complete = n.count == 1u64 << n.height;
        if complete {
            pieces.push(Piece { root: r, count: n.count, rep: n.rep });
        } else {
            red.push(r);
            // Right child first so the left is visited first (stack order).
            if let Some(rr) = n.right {
                stack.push((rr, Some(r)));
            }
            if let Some(l) = n.left {
                stack.push((l, Some(r)));
            }
        }
    }
    let anchor_red = red.contains(&anchor);
    let handoff = if anchor_red {
        pieces
            .iter()
            .max_by(|a, b| (a.count, core::cmp::Reverse(a.root)).cmp(&(b.count, core::cmp::Reverse(b.root))))
            .map(|p| p.root)
    } else {
        None
    };
    sim.note_red_removed(red.len() as u64);
    sim.note_edges(0, 2 * red.len() as u64);
    for r in &red {
        ctx.remove(r);
    }
    for p in &pieces {
        ctx.get_mut(&p.root).unwrap().parent = None;
    }
    let leaf_total: u64 = pieces.iter().map(|p| p.count).sum();
    pieces.sort_by_key(|p| (core::cmp::Reverse(p.count), p.root));
    Participant { anchor, state: PState::Stripped { pieces, walk }, handoff, leaf_total }
}

/// A helper minted by the blueprint.
struct NewHelper {
    slot: VirtualNodeRef,
    left: VirtualNodeRef,
    right: VirtualNodeRef,
}

/// The merge blueprint: pair equal-sized complete trees in ascending
/// (size, root) order with carries cascading, then chain the remaining
/// distinct sizes with the larger tree as the left child. New helpers sit
/// on the representative slot of the first pair member (pairing) or of the
/// larger tree (chaining), and inherit the other side's representative.
fn compute_haft(
    ctx: &mut BTreeMap<VirtualNodeRef, RNode>,
    pieces: &mut Vec<Piece>,
) -> Result<(VirtualNodeRef, Vec<NewHelper>), ProtocolError> {
    let mut created = Vec::new();
    pieces.sort_by_key(|p| (p.count, p.root));
    let mut i = 0;
    while i + 1 < pieces.len() {
        if pieces[i].count == pieces[i + 1].count {
            let a = pieces.remove(i);
            let b = pieces.remove(i);
            let joined = join_pieces(ctx, &a, &b, a.rep, b.rep, &mut created)?;
            let pos = pieces
                .partition_point(|p| (p.count, p.root) <= (joined.count, joined.root));
            pieces.insert(pos, joined);
            i = 0;
        } else {
            i += 1;
        }
    }
    while pieces.len() > 1 {
        // Ascending distinct sizes: accumulate the two smallest, larger
        // tree on the left, helper on the larger tree's representative.
        let small = pieces.remove(0);
        let big = pieces.remove(0);
        let joined = join_pieces(ctx, &big, &small, big.rep, small.rep, &mut created)?;
        pieces.insert(0, joined);
    }
    Ok((pieces[0].root, created))
}

/// Create the helper joining `left` and `right` on `slot_rep`'s slot; the
/// new node's representative comes from the other side.
fn join_pieces(
    ctx: &mut BTreeMap<VirtualNodeRef, RNode>,
    left: &Piece,
    right: &Piece,
    slot_rep: VirtualNodeRef,
    inherit_rep: VirtualNodeRef,
    created: &mut Vec<NewHelper>,
) -> Result<Piece, ProtocolError> {
    let slot = VirtualNodeRef::helper(slot_rep.processor, slot_rep.edge);
    if ctx.contains_key(&slot) {
        return Err(ProtocolError::Protocol(format!(
            "representative collision: {slot} already simulates a helper"
        )));
    }
    let height = 1 + ctx[&left.root].height.max(ctx[&right.root].height);
    let count = left.count + right.count;
    ctx.insert(
        slot,
        RNode {
            parent: None,
            left: Some(left.root),
            right: Some(right.root),
            height,
            count,
            rep: inherit_rep,
        },
    );
    ctx.get_mut(&left.root).unwrap().parent = Some(slot);
    ctx.get_mut(&right.root).unwrap().parent = Some(slot);
    created.push(NewHelper { slot, left: left.root, right: right.root });
    Ok(Piece { root: slot, count, rep: inherit_rep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haft;

    fn star(n: u64) -> Vec<(u64, u64)> {
        (1..n).map(|i| (0, i)).collect()
    }

    fn sim() -> NetSim {
        NetSim::new()
    }

    #[test]
    fn fresh_graph_records() {
        let g = ForgivingGraph::from_edges(&[(1, 2)]).unwrap();
        let rec = g.record(1, EdgeKey::new(1, 2)).unwrap();
        assert!(!rec.hashelper());
        assert_eq!(rec.rt_parent, None);
        assert_eq!(rec.endpoint, Some(VirtualNodeRef::real(2, EdgeKey::new(1, 2))));
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn cycle_graph_view_matches() {
        let g = ForgivingGraph::from_edges(&[(1, 2), (2, 3), (1, 3)]).unwrap();
        let view = g.current_graph();
        assert_eq!(view.len(), 3);
        assert_eq!(view.degree(1), 2);
        assert!(view.is_connected());
    }

    #[test]
    fn insert_needs_live_neighbor() {
        let mut g = ForgivingGraph::from_edges(&[(1, 2)]).unwrap();
        assert_eq!(g.insert(3, &[]), Err(ProtocolError::NoNeighbors(3)));
        assert_eq!(g.insert(1, &[2]), Err(ProtocolError::DuplicateId(1)));
        assert!(g.insert(3, &[1, 2]).is_ok());
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn delete_degree_one() {
        let mut g = ForgivingGraph::from_edges(&[(1, 2), (2, 3)]).unwrap();
        let mut s = sim();
        let stats = g.delete_fix(&mut s, 3).unwrap();
        assert_eq!(stats.degree_d, 1);
        assert_eq!(stats.red_nodes_removed, 0);
        assert!(!g.is_alive(3));
        // The neighbor's record survives as a trivial one-leaf RT.
        let rec = g.record(2, EdgeKey::new(2, 3)).unwrap();
        assert!(!rec.hashelper());
        assert_eq!(rec.rt_parent, None);
        assert_eq!(rec.endpoint, None);
        assert!(g.check_invariants().is_empty());
        assert!(g.rts().is_empty());
    }

    #[test]
    fn delete_star_center_builds_haft4() {
        let mut g = ForgivingGraph::from_edges(&star(5)).unwrap();
        let mut s = sim();
        let stats = g.delete_fix(&mut s, 0).unwrap();
        assert_eq!(stats.degree_d, 4);
        assert!(g.check_invariants().is_empty());
        let rts = g.rts();
        assert_eq!(rts.len(), 1);
        assert_eq!(rts[0].leaves.len(), 4);
        assert_eq!(rts[0].haft.shape(), haft::make_haft(&[1, 2, 3, 4]).unwrap().shape());
        // Three helpers total; every survivor within the degree bound.
        let helpers: usize = rts[0].refs.iter().filter(|r| r.role == Role::Helper).count();
        assert_eq!(helpers, 3);
        let view = g.current_graph();
        for p in 1..5 {
            assert!(view.degree(p) <= 3, "deg({p}) = {}", view.degree(p));
        }
        assert!(view.is_connected());
    }

    #[test]
    fn delete_star_center_message_bound_example() {
        // d = 4 and n = 16 gives the instantiated bound 312.
        let mut edges = star(5);
        for i in 5..16 {
            edges.push((1, i));
        }
        let mut g = ForgivingGraph::from_edges(&edges).unwrap();
        let mut s = sim();
        let stats = g.delete_fix(&mut s, 0).unwrap();
        assert_eq!(stats.degree_d, 4);
        assert!(stats.messages_total <= 312);
    }

    #[test]
    fn repeated_deletions_merge_rts() {
        // Delete a node simulating a helper inside another RT: the RT
        // fragments and the fragments merge into one haft.
        let mut g = ForgivingGraph::from_edges(&[
            (0, 1),
            (0, 2),
            (0, 3),
            (0, 4),
            (1, 2),
            (3, 4),
            (1, 5),
        ])
        .unwrap();
        let mut s = sim();
        g.delete_fix(&mut s, 0).unwrap();
        assert!(g.check_invariants().is_empty());
        g.delete_fix(&mut s, 1).unwrap();
        assert!(g.check_invariants().is_empty(), "{:?}", g.check_invariants());
        let view = g.current_graph();
        assert!(view.is_connected());
        for p in [2u64, 3, 4, 5] {
            assert!(view.degree(p) <= 3 * g.gprime_degree(p));
        }
    }

    #[test]
    fn rt_shape_matches_merge_oracle() {
        // Star deletion: fragments are d singleton leaves; the final RT
        // shape must match the pure merge of d single-leaf hafts.
        for d in [2u64, 3, 5, 8, 11] {
            let mut g = ForgivingGraph::from_edges(&star(d + 1)).unwrap();
            let mut s = sim();
            g.delete_fix(&mut s, 0).unwrap();
            let rts = g.rts();
            if d == 1 {
                continue;
            }
            assert_eq!(rts.len(), 1);
            let expect = haft::make_haft(&(0..d).collect::<Vec<_>>()).unwrap();
            assert_eq!(rts[0].haft.shape(), expect.shape(), "d = {d}");
            assert!(rts[0].haft.validate().is_ok());
        }
    }

    #[test]
    fn deterministic_repair() {
        let run = || {
            let mut g = ForgivingGraph::from_edges(&star(9)).unwrap();
            let mut s = sim();
            let stats = g.delete_fix(&mut s, 0).unwrap();
            (stats, s.log().to_vec())
        };
        let (s1, l1) = run();
        let (s2, l2) = run();
        assert_eq!(s1, s2);
        assert_eq!(l1, l2);
        assert!(!l1.is_empty());
    }

    #[test]
    fn gprime_keeps_deleted_nodes() {
        let mut g = ForgivingGraph::from_edges(&[(1, 2), (2, 3)]).unwrap();
        let mut s = sim();
        g.delete_fix(&mut s, 2).unwrap();
        let gp = g.insert_only_graph();
        assert_eq!(gp.len(), 3);
        assert_eq!(gp.degree(2), 2);
        assert_eq!(g.gprime_count(), 3);
    }

    #[test]
    fn last_processor_deletion() {
        let mut g = ForgivingGraph::from_edges(&[(1, 2)]).unwrap();
        let mut s = sim();
        g.delete_fix(&mut s, 1).unwrap();
        g.delete_fix(&mut s, 2).unwrap();
        assert_eq!(g.live_count(), 0);
        assert!(g.current_graph().is_empty());
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn helper_count_instrumentation_bounds() {
        let mut g = ForgivingGraph::from_edges(&star(9)).unwrap();
        let mut s = sim();
        let stats = g.delete_fix(&mut s, 0).unwrap();
        assert!(stats.helpers_mid_repair_max <= 2);
        assert!(stats.anchored_helpers_max <= 1);
    }
}
