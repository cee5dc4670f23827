//! Moves on spectral types, equivalence classes and the degeneration graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Partition, PointType, SpectralType};

/// Default cap on the rank of types visited while closing a class.
pub const DEFAULT_RANK_CAP: usize = 40;

/// The nine three-point types carrying four accessory parameters.
pub const FOUR_ACCESSORY_THREE_POINT: [&str; 9] = [
    "211,1111,1111",
    "221,221,11111",
    "32,11111,11111",
    "222,222,2211",
    "33,2211,111111",
    "44,2222,22211",
    "44,332,11111111",
    "55,3331,22222",
    "66,444,2222211",
];

/// Four accessory parameters, four or more points.
pub const FOUR_ACCESSORY_MULTI_POINT: [&str; 4] =
    ["21,21,111,111", "31,22,22,1111", "22,22,22,211", "11,11,11,11,11"];

/// Known degeneration arrows among the four-parameter classes.
pub const EXPECTED_DEGENERATIONS: [(&str, &str); 11] = [
    ("44,332,11111111", "32,11111,11111"),
    ("66,444,2222211", "44,2222,22211"),
    ("32,11111,11111", "211,1111,1111"),
    ("33,2211,111111", "221,221,11111"),
    ("33,2211,111111", "211,1111,1111"),
    ("44,2222,22211", "222,222,2211"),
    ("211,1111,1111", "11,11,11,11,11"),
    ("211,1111,1111", "21,21,111,111"),
    ("221,221,11111", "21,21,111,111"),
    ("221,221,11111", "31,22,22,1111"),
    ("222,222,2211", "22,22,22,211"),
];

/// A chain of two-parameter classes linked by confluence.
pub const TWO_ACCESSORY_CHAIN: [&str; 3] = ["33,222,111111", "22,1111,1111", "111,111,111"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    /// Laplace transform. For a Fuchsian type, `pivot` names the point that
    /// is moved to infinity and plays the rank-1 role.
    LaplaceMove { pivot: Option<usize> },
    /// Merge points `i` and `j` into one rank-1 point.
    ConfluenceMove(usize, usize),
    /// Scalar shift of one residue; invisible at type level.
    AdditionMove,
    /// Permutation of the singular points.
    MoebiusMove,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeMove {
    pub kind: MoveKind,
    pub before: SpectralType,
    pub after: SpectralType,
}

impl TypeMove {
    /// Re-applies the move to `before` and checks that `after` is produced.
    pub fn replays(&self) -> bool {
        match &self.kind {
            MoveKind::LaplaceMove { pivot } => {
                laplace_at(&self.before, *pivot).is_ok_and(|t| t == self.after)
            }
            MoveKind::ConfluenceMove(i, j) => {
                confluence_options(&self.before, *i, *j).is_ok_and(|v| v.contains(&self.after))
            }
            MoveKind::AdditionMove | MoveKind::MoebiusMove => self.before == self.after,
        }
    }
}

/// Checks a witness chain: each move replays and hands its output to the next.
pub fn replay_witness(moves: &[TypeMove]) -> bool {
    moves.iter().all(TypeMove::replays) && moves.windows(2).all(|w| w[0].after == w[1].before)
}

fn point_contribution(m: usize, p: &PointType) -> i64 {
    let m2 = (m * m) as i64;
    match p {
        PointType::Fuchsian(part) => m2 - part.sum_of_squares() as i64,
        PointType::Irregular(blocks) => {
            let outer: i64 = blocks.iter().map(|b| (b.size() * b.size()) as i64).sum();
            let inner: i64 = blocks.iter().map(|b| b.sum_of_squares() as i64).sum();
            2 * m2 - outer - inner
        }
    }
}

/// Number of accessory parameters `(n-1)m² - Σ m_{ν,j}² + 2` of a Fuchsian
/// type with `n+1` points.
pub fn accessory_count(t: &SpectralType) -> Result<i64> {
    if !t.is_fuchsian() {
        return Err(Error::Unsupported(format!(
            "accessory count of the non-Fuchsian type {t}"
        )));
    }
    Ok(generalized_accessory_count(t))
}

/// Accessory count extended to types with rank-1 points, where such a point
/// counts for two Fuchsian ones (its outer and inner partitions).
pub fn generalized_accessory_count(t: &SpectralType) -> i64 {
    let m = t.rank();
    2 + t.points().iter().map(|p| point_contribution(m, p)).sum::<i64>() - 2 * (m * m) as i64
}

fn laplace_core(blocks: &[Partition], fuchsian: &[&Partition]) -> Result<SpectralType> {
    let m: usize = blocks.iter().map(Partition::size).sum();
    let n: usize = fuchsian.iter().map(|p| m - p.max_part()).sum();
    if n == 0 {
        return Err(Error::ShapeMismatch("image rank would be zero".into()));
    }
    let mut points = Vec::new();
    for b in blocks {
        let mj = b.size();
        if n < mj {
            return Err(Error::ShapeMismatch(format!(
                "block {b} larger than image rank {n}"
            )));
        }
        points.push(PointType::Fuchsian(if n > mj { b.with_part(n - mj) } else { b.clone() }));
    }
    let inner: Vec<Partition> = fuchsian.iter().filter_map(|p| p.without_max()).collect();
    if !inner.is_empty() {
        points.push(PointType::Irregular(inner));
    }
    SpectralType::new(n, points)
}

/// Laplace move at multiplicity level. With a rank-1 point present, `pivot`
/// must be `None` or its index; for a Fuchsian type, `pivot` selects the
/// point that becomes the single block at infinity.
pub fn laplace_at(t: &SpectralType, pivot: Option<usize>) -> Result<SpectralType> {
    let pts = t.points();
    if t.irregular_count() > 1 {
        return Err(Error::Unsupported("more than one rank-1 point".into()));
    }
    let (blocks, skip) = match (t.irregular_index(), pivot) {
        (Some(k), None) => (irregular_blocks(&pts[k]), k),
        (Some(k), Some(p)) if p == k => (irregular_blocks(&pts[k]), k),
        (Some(_), Some(p)) => {
            return Err(Error::ShapeMismatch(format!("point {p} is not the rank-1 point")));
        }
        (None, Some(p)) if p < pts.len() => (irregular_blocks(&pts[p]), p),
        (None, _) => {
            return Err(Error::ShapeMismatch(format!("no pivot point in {t}")));
        }
    };
    let fuchsian: Vec<&Partition> = pts
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, p)| match p {
            PointType::Fuchsian(q) => q,
            PointType::Irregular(_) => unreachable!("only one rank-1 point"),
        })
        .collect();
    laplace_core(&blocks, &fuchsian)
}

fn irregular_blocks(p: &PointType) -> Vec<Partition> {
    match p {
        PointType::Fuchsian(q) => vec![q.clone()],
        PointType::Irregular(b) => b.clone(),
    }
}

fn type_key(t: &SpectralType) -> (usize, String) {
    (t.rank(), t.to_string())
}

/// All Laplace images of `t`, with their pivots, in a fixed order.
pub fn laplace_images(t: &SpectralType) -> Vec<(Option<usize>, SpectralType)> {
    if t.irregular_count() > 0 {
        return laplace_at(t, None).map(|s| vec![(None, s)]).unwrap_or_default();
    }
    (0..t.points().len())
        .filter_map(|p| laplace_at(t, Some(p)).ok().map(|s| (Some(p), s)))
        .collect()
}

/// Laplace move on a type. A Fuchsian type admits one candidate per choice of
/// pivot; the image with the smallest `(rank, string)` key is returned.
pub fn laplace_on_type(t: &SpectralType) -> Result<SpectralType> {
    laplace_images(t)
        .into_iter()
        .map(|(_, s)| s)
        .min_by_key(type_key)
        .ok_or_else(|| Error::ShapeMismatch(t.to_string()))
}

/// Every way of merging Fuchsian points `i` and `j` into a rank-1 point.
pub fn confluence_options(t: &SpectralType, i: usize, j: usize) -> Result<Vec<SpectralType>> {
    let pts = t.points();
    if i == j || i >= pts.len() || j >= pts.len() {
        return Err(Error::InvalidType(format!("bad point pair ({i}, {j}) for {t}")));
    }
    if t.irregular_count() > 0 {
        return Err(Error::Unsupported(
            "confluence would create a second rank-1 point".into(),
        ));
    }
    let (PointType::Fuchsian(a), PointType::Fuchsian(b)) = (&pts[i], &pts[j]) else {
        unreachable!("Fuchsian type");
    };
    let rest: Vec<PointType> = pts
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i && k != j)
        .map(|(_, p)| p.clone())
        .collect();
    let mut out: Vec<SpectralType> = Vec::new();
    for (outer, inner) in [(a, b), (b, a)] {
        for grouping in inner.groupings_into(outer) {
            let mut points = rest.clone();
            points.push(PointType::Irregular(grouping));
            let s = SpectralType::new(t.rank(), points)?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NotARefinement(a.to_string(), b.to_string()));
    }
    out.sort_by_key(type_key);
    Ok(out)
}

/// The confluence of points `i`, `j` with the smallest resulting type.
pub fn confluence_on_type(t: &SpectralType, i: usize, j: usize) -> Result<SpectralType> {
    Ok(confluence_options(t, i, j)?.swap_remove(0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub canonical: SpectralType,
    /// Members in breadth-first order from the input type.
    pub members: Vec<SpectralType>,
    /// Moves from the input type to the canonical representative.
    pub witness: Vec<TypeMove>,
}

struct Closure {
    order: Vec<SpectralType>,
    parent: HashMap<SpectralType, (SpectralType, Option<usize>)>,
}

fn close(t: &SpectralType, rank_cap: usize) -> Closure {
    let mut order = vec![t.clone()];
    let mut parent = HashMap::new();
    let mut queue = VecDeque::from([t.clone()]);
    while let Some(x) = queue.pop_front() {
        for (pivot, y) in laplace_images(&x) {
            if y.rank() > rank_cap || y == *t || parent.contains_key(&y) {
                continue;
            }
            parent.insert(y.clone(), (x.clone(), pivot));
            order.push(y.clone());
            queue.push_back(y);
        }
    }
    Closure { order, parent }
}

impl Closure {
    fn path_to(&self, target: &SpectralType) -> Vec<TypeMove> {
        let mut moves = Vec::new();
        let mut cur = target.clone();
        while let Some((prev, pivot)) = self.parent.get(&cur) {
            moves.push(TypeMove {
                kind: MoveKind::LaplaceMove { pivot: *pivot },
                before: prev.clone(),
                after: cur.clone(),
            });
            cur = prev.clone();
        }
        moves.reverse();
        moves
    }
}

/// Closure of `t` under Laplace moves (Möbius and addition moves do not change
/// a canonical type). The representative is the Fuchsian member with the
/// smallest `(rank, string)` key, or the smallest member if none is Fuchsian.
pub fn equivalence_class_capped(t: &SpectralType, rank_cap: usize) -> EquivalenceClass {
    let cl = close(t, rank_cap.max(t.rank()));
    let fuchsian: Vec<&SpectralType> = cl.order.iter().filter(|s| s.is_fuchsian()).collect();
    let pool: Vec<&SpectralType> = if fuchsian.is_empty() {
        cl.order.iter().collect()
    } else {
        fuchsian
    };
    let canonical = (*pool.iter().min_by_key(|s| type_key(s)).expect("non-empty")).clone();
    let witness = cl.path_to(&canonical);
    EquivalenceClass {
        canonical,
        members: cl.order,
        witness,
    }
}

pub fn equivalence_class(t: &SpectralType) -> EquivalenceClass {
    equivalence_class_capped(t, DEFAULT_RANK_CAP)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationEdge {
    pub from: SpectralType,
    pub to: SpectralType,
    /// Replayable moves from `from` through one confluence to `to`.
    pub witness: Vec<TypeMove>,
    /// Implied by a longer path of edges in the graph.
    pub transitive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegenerationGraph {
    pub nodes: Vec<SpectralType>,
    pub edges: Vec<DegenerationEdge>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeStatus {
    /// A covering edge of the graph.
    Matched,
    /// Present, but implied by a longer path.
    MatchedTransitive,
    Unmatched,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeMatch {
    pub from: SpectralType,
    pub to: SpectralType,
    pub status: EdgeStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphOptions {
    pub rank_cap: usize,
    /// Also explore from classes reached by confluence, not only from seeds.
    pub expand_targets: bool,
    /// Stop expanding once this many classes are known.
    pub max_nodes: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            rank_cap: DEFAULT_RANK_CAP,
            expand_targets: false,
            max_nodes: 500,
        }
    }
}

const GRAPH_NOTE: &str = "edges come from confluence of two regular singular points only; \
degenerations of HTL canonical forms are not explored";

pub fn degeneration_graph(seeds: &[SpectralType]) -> DegenerationGraph {
    degeneration_graph_with(seeds, GraphOptions::default())
}

type ClassKey = (usize, String);

pub fn degeneration_graph_with(seeds: &[SpectralType], opts: GraphOptions) -> DegenerationGraph {
    let mut classes: BTreeMap<(usize, String), EquivalenceClass> = BTreeMap::new();
    let class_of = |t: &SpectralType, classes: &mut BTreeMap<(usize, String), EquivalenceClass>| {
        let c = equivalence_class_capped(t, opts.rank_cap);
        let key = type_key(&c.canonical);
        classes.entry(key.clone()).or_insert(c);
        key
    };
    let mut queue: VecDeque<(usize, String)> = VecDeque::new();
    let mut expanded: BTreeSet<(usize, String)> = BTreeSet::new();
    for s in seeds {
        let k = class_of(s, &mut classes);
        queue.push_back(k);
    }
    let mut raw: BTreeMap<(ClassKey, ClassKey), Vec<TypeMove>> = BTreeMap::new();
    while let Some(key) = queue.pop_front() {
        if !expanded.insert(key.clone()) {
            continue;
        }
        let rep = classes[&key].canonical.clone();
        // paths from the representative to every member
        let closure = close(&rep, opts.rank_cap.max(rep.rank()));
        for member in closure.order.iter().filter(|m| m.is_fuchsian()) {
            let npts = member.points().len();
            for i in 0..npts {
                for j in i + 1..npts {
                    let Ok(images) = confluence_options(member, i, j) else {
                        continue;
                    };
                    for image in images {
                        let target = class_of(&image, &mut classes);
                        if target == key || raw.contains_key(&(key.clone(), target.clone())) {
                            continue;
                        }
                        let mut witness = closure.path_to(member);
                        witness.push(TypeMove {
                            kind: MoveKind::ConfluenceMove(i, j),
                            before: member.clone(),
                            after: image.clone(),
                        });
                        witness.extend(equivalence_class_capped(&image, opts.rank_cap).witness);
                        raw.insert((key.clone(), target.clone()), witness);
                        if opts.expand_targets && classes.len() < opts.max_nodes {
                            queue.push_back(target);
                        }
                    }
                }
            }
        }
    }
    let node_keys: BTreeSet<(usize, String)> = expanded
        .iter()
        .cloned()
        .chain(raw.keys().map(|(_, b)| b.clone()))
        .collect();
    let nodes: Vec<SpectralType> = node_keys.iter().map(|k| classes[k].canonical.clone()).collect();
    let edges = raw
        .into_iter()
        .map(|((a, b), witness)| DegenerationEdge {
            from: classes[&a].canonical.clone(),
            to: classes[&b].canonical.clone(),
            witness,
            transitive: false,
        })
        .collect();
    let mut g = DegenerationGraph {
        nodes,
        edges,
        note: GRAPH_NOTE.to_string(),
    };
    g.mark_transitive();
    g
}

impl DegenerationGraph {
    fn mark_transitive(&mut self) {
        let idx: HashMap<&SpectralType, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[idx[&e.from]].push(idx[&e.to]);
        }
        // reach[a][b]: b reachable from a by a path of length >= 1
        let mut reach = vec![vec![false; n]; n];
        for (a, row) in reach.iter_mut().enumerate() {
            let mut stack = adj[a].clone();
            while let Some(v) = stack.pop() {
                if !row[v] {
                    row[v] = true;
                    stack.extend(adj[v].iter().copied());
                }
            }
        }
        let flags: Vec<bool> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (idx[&e.from], idx[&e.to]);
                adj[a].iter().any(|&c| c != b && reach[c][b])
            })
            .collect();
        for (e, f) in self.edges.iter_mut().zip(flags) {
            e.transitive = f;
        }
    }

    /// Subgraph on the classes of `keep`, with transitivity recomputed
    /// inside it.
    pub fn restricted_to(&self, keep: &[SpectralType]) -> DegenerationGraph {
        let keep: std::collections::HashSet<&SpectralType> = keep.iter().collect();
        let mut g = DegenerationGraph {
            nodes: self.nodes.iter().filter(|n| keep.contains(n)).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(&e.from) && keep.contains(&e.to))
                .cloned()
                .collect(),
            note: self.note.clone(),
        };
        g.mark_transitive();
        g
    }

    pub fn edge(&self, from: &SpectralType, to: &SpectralType) -> Option<&DegenerationEdge> {
        self.edges.iter().find(|e| &e.from == from && &e.to == to)
    }

    pub fn covering_edges(&self) -> Vec<&DegenerationEdge> {
        self.edges.iter().filter(|e| !e.transitive).collect()
    }

    /// Looks up each expected arrow (compared on class representatives).
    pub fn match_expected(&self, expected: &[(SpectralType, SpectralType)]) -> Vec<EdgeMatch> {
        expected
            .iter()
            .map(|(a, b)| {
                let ca = equivalence_class(a).canonical;
                let cb = equivalence_class(b).canonical;
                let status = match self.edge(&ca, &cb) {
                    Some(e) if !e.transitive => EdgeStatus::Matched,
                    Some(_) => EdgeStatus::MatchedTransitive,
                    None => EdgeStatus::Unmatched,
                };
                EdgeMatch {
                    from: a.clone(),
                    to: b.clone(),
                    status,
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph degenerations {\n  rankdir=TB;\n");
        s.push_str(&format!("  // {}\n", self.note));
        for n in &self.nodes {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        for e in &self.edges {
            let style = if e.transitive { " [style=dashed]" } else { "" };
            s.push_str(&format!("  \"{}\" -> \"{}\"{style};\n", e.from, e.to));
        }
        s.push_str("}\n");
        s
    }
}

pub fn parse_types(list: &[&str]) -> Vec<SpectralType> {
    list.iter().map(|s| s.parse().expect("built-in type")).collect()
}

pub fn expected_degenerations() -> Vec<(SpectralType, SpectralType)> {
    EXPECTED_DEGENERATIONS
        .iter()
        .map(|(a, b)| (a.parse().expect("built-in"), b.parse().expect("built-in")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> SpectralType {
        s.parse().unwrap()
    }

    #[test]
    fn accessory_examples() {
        assert_eq!(accessory_count(&t("211,1111,1111")).unwrap(), 4);
        assert_eq!(accessory_count(&t("111,111,111")).unwrap(), 2);
        assert_eq!(accessory_count(&t("11,11,11,11,11")).unwrap(), 4);
        assert!(matches!(
            accessory_count(&t("(111)(11),11111")),
            Err(Error::Unsupported(_))
        ));
        assert_eq!(generalized_accessory_count(&t("(111)(11),11111")), 4);
        assert_eq!(generalized_accessory_count(&t("(1)(1)(1)(1),211")), 4);
    }

    #[test]
    fn laplace_examples() {
        assert_eq!(laplace_on_type(&t("(111)(11),11111")).unwrap(), t("211,1111,1111"));
        assert_eq!(laplace_on_type(&t("(1)(1)(1)(1),211")).unwrap(), t("11,11,11,11,11"));
        assert_eq!(laplace_on_type(&t("211,1111,1111")).unwrap(), t("(111)(11),11111"));
    }

    #[test]
    fn confluence_examples() {
        let a = t("32,11111,11111");
        assert_eq!(confluence_on_type(&a, 0, 1).unwrap(), t("(111)(11),11111"));
        let b = t("211,1111,1111");
        assert_eq!(confluence_on_type(&b, 1, 2).unwrap(), t("(1)(1)(1)(1),211"));
        let c = t("55,3331,22222");
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(matches!(confluence_on_type(&c, i, j), Err(Error::NotARefinement(..))));
        }
    }

    #[test]
    fn classes() {
        let c = equivalence_class(&t("(111)(11),11111"));
        assert_eq!(c.canonical, t("211,1111,1111"));
        assert!(replay_witness(&c.witness));
        assert_eq!(c.witness.last().unwrap().after, c.canonical);
        assert_eq!(equivalence_class(&t("(1)(1)(1)(1),211")).canonical, t("11,11,11,11,11"));
        let k = equivalence_class(&t("111,111,111"));
        assert_eq!(k.canonical, t("111,111,111"));
        assert!(k.witness.is_empty());
    }
}
