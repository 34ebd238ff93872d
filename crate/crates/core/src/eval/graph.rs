use std::collections::{BTreeSet, HashMap, HashSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::formula::{collect_refs, Reference};
use crate::model::{FieldKey, TableId, Workbook};
use crate::scope::join_constraints;

/// How a field depends on another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Same table, resolved through the row hierarchy. Also used for the
    /// local side of a join constraint, which is read the same way.
    Local,
    /// Another table: any change may affect every cell of the dependent.
    Cross,
    /// A borrowed field mirrors its source.
    Borrow,
}

/// Field-level dependencies. Edges run from a field to the fields it reads.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    edges: BTreeSet<(FieldKey, FieldKey, EdgeKind)>,
    dependents: HashMap<FieldKey, Vec<(FieldKey, EdgeKind)>>,
    order: Vec<FieldKey>,
    cyclic: HashSet<FieldKey>,
}

impl DependencyGraph {
    pub fn build(wb: &Workbook) -> Self {
        let mut edges = BTreeSet::new();
        for (ti, table) in wb.tables().iter().enumerate() {
            let tid = TableId(ti);
            for fid in (0..table.fields().len()).map(crate::model::FieldId) {
                let from = FieldKey::new(tid, fid);
                let field = table.field(fid);
                if let Some(formula) = field.formula() {
                    let Ok(expr) = formula.expr() else { continue };
                    for r in collect_refs(expr) {
                        add_reference_edges(wb, from, &r, &mut edges);
                    }
                }
            }
        }
        for b in wb.relations().borrows() {
            edges.insert((b.target, b.source, EdgeKind::Borrow));
        }

        let mut graph: DiGraph<FieldKey, ()> = DiGraph::new();
        let mut index: HashMap<FieldKey, NodeIndex> = HashMap::new();
        for (ti, table) in wb.tables().iter().enumerate() {
            for fi in 0..table.fields().len() {
                let key = FieldKey::new(TableId(ti), crate::model::FieldId(fi));
                index.insert(key, graph.add_node(key));
            }
        }
        let mut dependents: HashMap<FieldKey, Vec<(FieldKey, EdgeKind)>> = HashMap::new();
        let mut cyclic = HashSet::new();
        for &(from, to, kind) in &edges {
            graph.update_edge(index[&from], index[&to], ());
            dependents.entry(to).or_default().push((from, kind));
            if from == to {
                cyclic.insert(from);
            }
        }
        // Strongly connected components come out dependencies first.
        let mut order = Vec::with_capacity(index.len());
        for component in tarjan_scc(&graph) {
            if component.len() > 1 {
                cyclic.extend(component.iter().map(|&n| graph[n]));
            }
            let mut keys: Vec<FieldKey> = component.iter().map(|&n| graph[n]).collect();
            keys.sort();
            order.extend(keys);
        }
        DependencyGraph {
            edges,
            dependents,
            order,
            cyclic,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (FieldKey, FieldKey, EdgeKind)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Fields reading `field`, with the kind of each edge.
    pub fn dependents(&self, field: FieldKey) -> &[(FieldKey, EdgeKind)] {
        self.dependents.get(&field).map_or(&[], Vec::as_slice)
    }

    pub fn dependencies(&self, field: FieldKey) -> impl Iterator<Item = FieldKey> + '_ {
        self.edges
            .range((field, field_min(), EdgeKind::Local)..)
            .take_while(move |(f, _, _)| *f == field)
            .map(|(_, to, _)| *to)
    }

    /// Every field, dependencies before their dependents.
    pub fn order(&self) -> &[FieldKey] {
        &self.order
    }

    pub fn is_cyclic(&self, field: FieldKey) -> bool {
        self.cyclic.contains(&field)
    }

    pub fn cyclic_fields(&self) -> impl Iterator<Item = FieldKey> + '_ {
        self.order.iter().copied().filter(|f| self.cyclic.contains(f))
    }
}

fn field_min() -> FieldKey {
    FieldKey::new(TableId(0), crate::model::FieldId(0))
}

fn add_reference_edges(
    wb: &Workbook,
    from: FieldKey,
    reference: &Reference,
    edges: &mut BTreeSet<(FieldKey, FieldKey, EdgeKind)>,
) {
    let target_table = match reference.table() {
        None => Some(from.table),
        Some(name) => wb.table_id(name),
    };
    let Some(tid) = target_table else { return };
    let Some(fid) = wb.table_by_id(tid).field_id(reference.field()) else {
        return;
    };
    if tid == from.table {
        edges.insert((from, FieldKey::new(tid, fid), EdgeKind::Local));
        return;
    }
    edges.insert((from, FieldKey::new(tid, fid), EdgeKind::Cross));
    for c in join_constraints(wb, from.table, tid) {
        edges.insert((from, c.local, EdgeKind::Local));
        edges.insert((from, c.foreign, EdgeKind::Cross));
    }
}
