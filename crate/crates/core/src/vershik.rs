//! Ordered diagrams, the Vershik map on prefix-plus-tail paths, extremal classes and
//! successor/predecessor sets of extremal paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, Family, VertexKey};
use crate::error::{Error, Result};

/// Levels of a symbolic tail inspected before a path is declared extremal.
pub const TAIL_HORIZON: usize = 64;
/// Cap on enumerated paths in exhaustive checks.
pub const MAX_PATHS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "kebab-case")]
pub enum OrderSpec {
    /// sources t - e_i ordered by the coordinate i
    NaturalPascal,
    LeftToRight,
    /// left-to-right into odd levels, right-to-left into even levels
    Alternating,
    /// (i-1) < 1 < 2 < ... < (i-2) < i on the edges into i
    CyclicBinfty,
    /// a permutation of the natural source order, chosen by the number of sources
    Custom { permutations: Vec<Vec<usize>> },
}

impl OrderSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "natural-pascal" | "natural" => Ok(OrderSpec::NaturalPascal),
            "left-to-right" | "ltr" => Ok(OrderSpec::LeftToRight),
            "alternating" => Ok(OrderSpec::Alternating),
            "cyclic-binfty" | "cyclic" => Ok(OrderSpec::CyclicBinfty),
            _ => {
                let body = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::invalid(format!("unknown order {s:?}")))?;
                let permutations = body
                    .split(';')
                    .map(|p| {
                        p.split(',')
                            .map(|x| x.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad permutation {p:?}"))))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(OrderSpec::Custom { permutations })
            }
        }
    }
}

/// One edge of a path: source, target and the slot among parallel edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRep(pub VertexKey, pub VertexKey, pub u64);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathStart {
    pub level: usize,
    pub vertex: VertexKey,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Tail {
    Unspecified,
    /// stays at the end vertex
    VerticalAt {
        vertex: VertexKey,
        #[serde(default)]
        slot: u64,
    },
    /// index increases by one per level
    DiagonalFrom { vertex: VertexKey },
    /// adds one at the same coordinate forever
    PascalConcentrating { coord: i64 },
    /// step j adds one at coordinate start + gap * ((offset + j) / run)
    PascalRuns {
        start: i64,
        gap: i64,
        run: u64,
        #[serde(default)]
        offset: u64,
    },
}

impl Tail {
    fn advance(&self, j: u64) -> Tail {
        match self {
            Tail::DiagonalFrom { vertex } => {
                Tail::DiagonalFrom { vertex: VertexKey::Index(vertex.index().unwrap_or(0) + j as i64) }
            }
            Tail::PascalRuns { start, gap, run, offset } => {
                Tail::PascalRuns { start: *start, gap: *gap, run: *run, offset: offset + j }
            }
            other => other.clone(),
        }
    }

    fn horizon(&self) -> usize {
        match self {
            Tail::PascalRuns { run, .. } => TAIL_HORIZON.max(3 * *run as usize + 1),
            _ => TAIL_HORIZON,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathRep {
    pub start: PathStart,
    pub edges: Vec<EdgeRep>,
    pub tail: Tail,
}

impl PathRep {
    pub fn end_level(&self) -> usize {
        self.start.level + self.edges.len()
    }

    pub fn end_vertex(&self) -> &VertexKey {
        self.edges.last().map(|e| &e.1).unwrap_or(&self.start.vertex)
    }

    /// Vertex at a level inside the prefix.
    pub fn vertex_at(&self, level: usize) -> Option<&VertexKey> {
        if level < self.start.level || level > self.end_level() {
            return None;
        }
        if level == self.start.level {
            Some(&self.start.vertex)
        } else {
            Some(&self.edges[level - self.start.level - 1].1)
        }
    }

    /// Same path with the first `depth` edges only and an unspecified tail.
    pub fn truncated(&self, depth: usize) -> PathRep {
        PathRep { start: self.start.clone(), edges: self.edges[..depth.min(self.edges.len())].to_vec(), tail: Tail::Unspecified }
    }

    pub fn label(&self) -> String {
        let mut s = format!("{}", self.start.vertex);
        for e in &self.edges {
            s.push_str(&format!(" -{}-> {}", e.2, e.1));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtremalClass {
    NotExtremal,
    MaxU,
    MaxC,
    MinU,
    MinC,
    Special,
}

impl ExtremalClass {
    pub fn is_max(self) -> bool {
        matches!(self, ExtremalClass::MaxU | ExtremalClass::MaxC | ExtremalClass::Special)
    }

    pub fn is_min(self) -> bool {
        matches!(self, ExtremalClass::MinU | ExtremalClass::MinC | ExtremalClass::Special)
    }
}

#[derive(Clone, Debug)]
pub struct OrderedDiagram {
    pub diagram: Diagram,
    pub order: OrderSpec,
}

/// Incoming edges of a vertex laid out in order: groups of parallel edges, optionally reversed.
struct Layout {
    groups: Vec<(VertexKey, u64)>,
    reversed: bool,
    total: u64,
}

impl Layout {
    fn rank(&self, src: &VertexKey, slot: u64) -> Option<u64> {
        let mut off = 0u64;
        for (s, m) in &self.groups {
            if s == src {
                if slot >= *m {
                    return None;
                }
                let pos = off + slot;
                return Some(if self.reversed { self.total - 1 - pos } else { pos });
            }
            off += m;
        }
        None
    }

    fn unrank(&self, pos: u64) -> (VertexKey, u64) {
        let mut p = if self.reversed { self.total - 1 - pos } else { pos };
        for (s, m) in &self.groups {
            if p < *m {
                return (s.clone(), p);
            }
            p -= m;
        }
        unreachable!("position within total")
    }
}

impl OrderedDiagram {
    pub fn new(diagram: Diagram, order: OrderSpec) -> Result<Self> {
        match &order {
            OrderSpec::NaturalPascal if !diagram.family().is_pascal() => {
                return Err(Error::invalid("the natural order is defined on Pascal diagrams"))
            }
            OrderSpec::CyclicBinfty if !matches!(diagram.family(), Family::Binfty) => {
                return Err(Error::invalid("the cyclic order is defined on B_∞"))
            }
            OrderSpec::Custom { permutations } => {
                for p in permutations {
                    let mut sorted = p.clone();
                    sorted.sort();
                    if sorted != (0..p.len()).collect::<Vec<_>>() {
                        return Err(Error::invalid(format!("{p:?} is not a permutation")));
                    }
                }
            }
            _ => {}
        }
        Ok(OrderedDiagram { diagram, order })
    }

    pub fn base_level(&self) -> usize {
        self.diagram.base_level()
    }

    fn layout(&self, n: usize, v: &VertexKey) -> Result<Layout> {
        let preds = self.diagram.predecessors(n, v)?;
        let mut groups: Vec<(VertexKey, u64)> =
            preds.iter().map(|(s, m)| Ok((s.clone(), Diagram::mult_u64(m)?))).collect::<Result<_>>()?;
        let mut reversed = false;
        match &self.order {
            OrderSpec::NaturalPascal | OrderSpec::LeftToRight => {}
            OrderSpec::Alternating => reversed = n % 2 == 0,
            OrderSpec::CyclicBinfty => {
                let i = v.index().unwrap_or(0);
                let key = |s: &VertexKey| {
                    let j = s.index().unwrap_or(0);
                    if i >= 3 && j == i - 1 {
                        (0, j)
                    } else if j == i {
                        (2, j)
                    } else {
                        (1, j)
                    }
                };
                groups.sort_by_key(|(s, _)| key(s));
            }
            OrderSpec::Custom { permutations } => {
                if let Some(p) = permutations.iter().find(|p| p.len() == groups.len()) {
                    groups = p.iter().map(|&k| groups[k].clone()).collect();
                }
            }
        }
        let total = groups.iter().map(|g| g.1).sum();
        Ok(Layout { groups, reversed, total })
    }

    /// Position of an edge among the edges into its target, and their number.
    pub fn edge_position(&self, n: usize, e: &EdgeRep) -> Result<(u64, u64)> {
        let l = self.layout(n, &e.1)?;
        let pos = l
            .rank(&e.0, e.2)
            .ok_or_else(|| Error::invalid(format!("no edge {} -> {} slot {} into level {n}", e.0, e.1, e.2)))?;
        Ok((pos, l.total))
    }

    pub fn is_max(&self, n: usize, e: &EdgeRep) -> Result<bool> {
        let (p, t) = self.edge_position(n, e)?;
        Ok(p + 1 == t)
    }

    pub fn is_min(&self, n: usize, e: &EdgeRep) -> Result<bool> {
        Ok(self.edge_position(n, e)?.0 == 0)
    }

    /// Next edge into the same target, n being the target level.
    pub fn successor_edge(&self, n: usize, e: &EdgeRep) -> Result<Option<EdgeRep>> {
        let l = self.layout(n, &e.1)?;
        let p = l.rank(&e.0, e.2).ok_or_else(|| Error::invalid("edge not in diagram"))?;
        if p + 1 == l.total {
            return Ok(None);
        }
        let (s, slot) = l.unrank(p + 1);
        Ok(Some(EdgeRep(s, e.1.clone(), slot)))
    }

    pub fn predecessor_edge(&self, n: usize, e: &EdgeRep) -> Result<Option<EdgeRep>> {
        let l = self.layout(n, &e.1)?;
        let p = l.rank(&e.0, e.2).ok_or_else(|| Error::invalid("edge not in diagram"))?;
        if p == 0 {
            return Ok(None);
        }
        let (s, slot) = l.unrank(p - 1);
        Ok(Some(EdgeRep(s, e.1.clone(), slot)))
    }

    fn extreme_path_to(&self, n: usize, v: &VertexKey, max: bool) -> Result<PathRep> {
        let base = self.base_level();
        let mut edges = Vec::with_capacity(n - base);
        let mut cur = v.clone();
        for level in (base + 1..=n).rev() {
            let l = self.layout(level, &cur)?;
            if l.total == 0 {
                return Err(Error::invalid(format!("vertex {cur} at level {level} has no incoming edges")));
            }
            let (s, slot) = l.unrank(if max { l.total - 1 } else { 0 });
            edges.push(EdgeRep(s.clone(), cur.clone(), slot));
            cur = s;
        }
        edges.reverse();
        Ok(PathRep { start: PathStart { level: base, vertex: cur }, edges, tail: Tail::Unspecified })
    }

    /// The unique minimal finite path from the base level to v ∈ V_n.
    pub fn minimal_path_to(&self, n: usize, v: &VertexKey) -> Result<PathRep> {
        self.extreme_path_to(n, v, false)
    }

    pub fn maximal_path_to(&self, n: usize, v: &VertexKey) -> Result<PathRep> {
        self.extreme_path_to(n, v, true)
    }

    /// Checks that the prefix composes and every edge exists.
    pub fn validate(&self, x: &PathRep) -> Result<()> {
        if x.start.level != self.base_level() {
            return Err(Error::invalid(format!("paths start at the base level {}", self.base_level())));
        }
        if !self.diagram.in_level(x.start.level, &x.start.vertex) {
            return Err(Error::invalid(format!("{} is not a base vertex", x.start.vertex)));
        }
        let mut cur = &x.start.vertex;
        for (k, e) in x.edges.iter().enumerate() {
            if &e.0 != cur {
                return Err(Error::invalid(format!("edge {k} starts at {} but the path is at {cur}", e.0)));
            }
            self.edge_position(x.start.level + k + 1, e)?;
            cur = &e.1;
        }
        match &x.tail {
            Tail::VerticalAt { vertex, .. } | Tail::DiagonalFrom { vertex } if vertex != cur => {
                Err(Error::invalid(format!("tail anchored at {vertex} but the prefix ends at {cur}")))
            }
            Tail::PascalConcentrating { .. } | Tail::PascalRuns { .. } if !self.diagram.family().is_pascal() => {
                Err(Error::invalid("Pascal tails need a Pascal diagram"))
            }
            Tail::PascalRuns { run: 0, .. } => Err(Error::invalid("run must be >= 1")),
            _ => Ok(()),
        }
    }

    /// First `count` edges of the symbolic tail; None for an unspecified tail.
    pub fn tail_edges(&self, x: &PathRep, count: usize) -> Result<Option<Vec<EdgeRep>>> {
        let mut cur = x.end_vertex().clone();
        let mut out = Vec::with_capacity(count);
        for j in 0..count {
            let (next, slot) = match &x.tail {
                Tail::Unspecified => return Ok(None),
                Tail::VerticalAt { slot, .. } => (cur.clone(), *slot),
                Tail::DiagonalFrom { .. } => (VertexKey::Index(cur.index().unwrap_or(0) + 1), 0),
                Tail::PascalConcentrating { coord } => (shift(&cur, *coord)?, 0),
                Tail::PascalRuns { start, gap, run, offset } => {
                    let c = start + gap * ((offset + j as u64) / run) as i64;
                    (shift(&cur, c)?, 0)
                }
            };
            out.push(EdgeRep(cur, next.clone(), slot));
            cur = next;
        }
        Ok(Some(out))
    }

    /// The path with its tail expanded so that the prefix has at least `depth` edges.
    pub fn materialize(&self, x: &PathRep, depth: usize) -> Result<PathRep> {
        if x.edges.len() >= depth {
            return Ok(x.clone());
        }
        let extra = depth - x.edges.len();
        let more = self
            .tail_edges(x, extra)?
            .ok_or_else(|| Error::DeepenPrefix(format!("tail unspecified beyond depth {}", x.edges.len())))?;
        let mut y = x.clone();
        y.edges.extend(more);
        y.tail = x.tail.advance(extra as u64);
        let end = y.end_vertex().clone();
        if let Tail::VerticalAt { vertex, .. } = &mut y.tail {
            *vertex = end;
        }
        Ok(y)
    }

    /// Position of the first edge that is not maximal (or minimal), looking into the tail.
    fn first_non_extreme(&self, x: &PathRep, max: bool) -> Result<std::result::Result<(PathRep, usize), String>> {
        let base = x.start.level;
        let test = |k: usize, e: &EdgeRep| -> Result<bool> {
            if max {
                self.is_max(base + k + 1, e)
            } else {
                self.is_min(base + k + 1, e)
            }
        };
        for (k, e) in x.edges.iter().enumerate() {
            if !test(k, e)? {
                return Ok(Ok((x.clone(), k)));
            }
        }
        let horizon = x.tail.horizon();
        match self.tail_edges(x, horizon)? {
            None => Err(Error::DeepenPrefix(format!(
                "every edge of the depth-{} prefix is {} and the tail is unspecified",
                x.edges.len(),
                if max { "maximal" } else { "minimal" }
            ))),
            Some(te) => {
                for (j, e) in te.iter().enumerate() {
                    if !test(x.edges.len() + j, e)? {
                        let y = self.materialize(x, x.edges.len() + j + 1)?;
                        return Ok(Ok((y, x.edges.len() + j)));
                    }
                }
                Ok(Err(format!("prefix and symbolic tail are {} over {horizon} further levels", if max { "maximal" } else { "minimal" })))
            }
        }
    }

    /// φ_B: advance the first non-maximal edge and rebuild the minimal prefix below it.
    pub fn vershik_step(&self, x: &PathRep) -> Result<PathRep> {
        self.validate(x)?;
        let (y, m) = match self.first_non_extreme(x, true)? {
            Ok(found) => found,
            Err(msg) => return Err(Error::MaximalPath(msg)),
        };
        let level = y.start.level + m + 1;
        let e = &y.edges[m];
        let next = self.successor_edge(level, e)?.expect("non-maximal edge has a successor");
        let mut out = self.minimal_path_to(level - 1, &next.0)?;
        out.edges.push(next);
        out.edges.extend_from_slice(&y.edges[m + 1..]);
        out.tail = y.tail;
        Ok(out)
    }

    /// φ_B⁻¹: retreat the first non-minimal edge and rebuild the maximal prefix below it.
    pub fn vershik_step_inverse(&self, x: &PathRep) -> Result<PathRep> {
        self.validate(x)?;
        let (y, m) = match self.first_non_extreme(x, false)? {
            Ok(found) => found,
            Err(msg) => return Err(Error::MinimalPath(msg)),
        };
        let level = y.start.level + m + 1;
        let e = &y.edges[m];
        let prev = self.predecessor_edge(level, e)?.expect("non-minimal edge has a predecessor");
        let mut out = self.maximal_path_to(level - 1, &prev.0)?;
        out.edges.push(prev);
        out.edges.extend_from_slice(&y.edges[m + 1..]);
        out.tail = y.tail;
        Ok(out)
    }

    fn prefix_flags(&self, x: &PathRep) -> Result<(bool, bool)> {
        let base = x.start.level;
        let mut all_max = true;
        let mut all_min = true;
        for (k, e) in x.edges.iter().enumerate() {
            let (p, t) = self.edge_position(base + k + 1, e)?;
            all_max &= p + 1 == t;
            all_min &= p == 0;
        }
        Ok((all_max, all_min))
    }
}

fn shift(v: &VertexKey, coord: i64) -> Result<VertexKey> {
    v.shift(coord, 1).ok_or_else(|| Error::invalid(format!("cannot add at coordinate {coord} to {v}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: ExtremalClass,
    pub prefix_maximal: bool,
    pub prefix_minimal: bool,
    pub caveat: Option<String>,
}

/// Extremal class of a path from its prefix and symbolic tail.
pub fn classify_extremal(od: &OrderedDiagram, x: &PathRep) -> Result<Classification> {
    od.validate(x)?;
    let (pmax, pmin) = od.prefix_flags(x)?;
    let h = x.tail.horizon();
    let tail = match od.tail_edges(x, h)? {
        None => {
            return Ok(Classification {
                class: ExtremalClass::NotExtremal,
                prefix_maximal: pmax,
                prefix_minimal: pmin,
                caveat: Some(format!("tail unspecified; only the depth-{} prefix was examined", x.edges.len())),
            })
        }
        Some(t) => t,
    };
    let off = x.start.level + x.edges.len();
    let (mut tmax, mut tmin) = (true, true);
    for (j, e) in tail.iter().enumerate() {
        let (p, t) = od.edge_position(off + j + 1, e)?;
        tmax &= p + 1 == t;
        tmin &= p == 0;
    }
    let is_max = pmax && tmax;
    let is_min = pmin && tmin;
    // countable classes: eventually one coordinate (Pascal) or eventually vertical or slanting
    let concentrating = !matches!(x.tail, Tail::PascalRuns { .. });
    let class = match (is_max, is_min) {
        (true, true) => ExtremalClass::Special,
        (true, false) if concentrating => ExtremalClass::MaxC,
        (true, false) => ExtremalClass::MaxU,
        (false, true) if concentrating => ExtremalClass::MinC,
        (false, true) => ExtremalClass::MinU,
        _ => ExtremalClass::NotExtremal,
    };
    let caveat = (is_max || is_min).then(|| format!("tail checked over {h} levels beyond the prefix"));
    Ok(Classification { class, prefix_maximal: pmax, prefix_minimal: pmin, caveat })
}

/// The vertical Pascal path x(i) through i·e_i, with one edge of prefix.
pub fn pascal_vertical(i: i64) -> PathRep {
    let v = VertexKey::Support(vec![(i, 1)]);
    PathRep {
        start: PathStart { level: 0, vertex: VertexKey::root() },
        edges: vec![EdgeRep(VertexKey::root(), v, 0)],
        tail: Tail::PascalConcentrating { coord: i },
    }
}

/// Vertical B_∞-type path through vertex i from the base level.
pub fn vertical_path(od: &OrderedDiagram, i: i64, depth: usize) -> Result<PathRep> {
    let base = od.base_level();
    let v = VertexKey::Index(i);
    let start = PathStart { level: base, vertex: v.clone() };
    let x = PathRep { start, edges: Vec::new(), tail: Tail::VerticalAt { vertex: v, slot: 0 } };
    od.materialize(&x, depth)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub levels: (usize, usize),
    pub prefix_depth: usize,
    /// depth-L prefixes of extremal completions present at every probed level
    pub recurrent: Vec<PathRep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccPredReport {
    pub class: ExtremalClass,
    /// theorem route; None where no closed statement is implemented
    pub succ: Option<Vec<PathRep>>,
    pub pred: Option<Vec<PathRep>>,
    pub route: String,
    pub succ_probe: Option<ProbeResult>,
    pub pred_probe: Option<ProbeResult>,
    /// theorem answer and probe agree on depth-L prefixes
    pub agrees: Option<bool>,
    pub notes: Vec<String>,
}

pub const PROBE_DEPTH: usize = 4;

/// Succ(x) for maximal x and Pred(x) for minimal x.
pub fn succ_pred(od: &OrderedDiagram, x: &PathRep) -> Result<SuccPredReport> {
    let cls = classify_extremal(od, x)?;
    if cls.class == ExtremalClass::NotExtremal {
        return Err(Error::NotExtremal(cls.caveat.unwrap_or_else(|| "neither maximal nor minimal".into())));
    }
    let mut notes = Vec::new();
    let (succ, pred, route) = theorem_route(od, x, cls.class, &mut notes)?;
    let succ_probe = if cls.class.is_max() { Some(probe(od, x, true)?) } else { None };
    let pred_probe = if cls.class.is_min() { Some(probe(od, x, false)?) } else { None };
    let cmp = |theory: &Option<Vec<PathRep>>, pr: &Option<ProbeResult>| -> Result<Option<bool>> {
        match (theory, pr) {
            (Some(t), Some(p)) => {
                let mut want: Vec<PathRep> =
                    t.iter().map(|y| od.materialize(y, p.prefix_depth).map(|z| z.truncated(p.prefix_depth))).collect::<Result<_>>()?;
                want.sort();
                want.dedup();
                Ok(Some(want == p.recurrent))
            }
            _ => Ok(None),
        }
    };
    let a = cmp(&succ, &succ_probe)?;
    let b = cmp(&pred, &pred_probe)?;
    let agrees = match (a, b) {
        (None, None) => None,
        (Some(u), None) | (None, Some(u)) => Some(u),
        (Some(u), Some(v)) => Some(u && v),
    };
    if agrees == Some(false) {
        notes.push("probe limit points differ from the theorem route".into());
    }
    Ok(SuccPredReport { class: cls.class, succ, pred, route, succ_probe, pred_probe, agrees, notes })
}

type SetPair = (Option<Vec<PathRep>>, Option<Vec<PathRep>>, String);

fn theorem_route(od: &OrderedDiagram, x: &PathRep, class: ExtremalClass, notes: &mut Vec<String>) -> Result<SetPair> {
    let d = &od.diagram;
    let pascal_natural = d.family().is_pascal()
        && !d.is_subdiagram()
        && matches!(od.order, OrderSpec::NaturalPascal | OrderSpec::LeftToRight);
    if pascal_natural {
        let coord = match &x.tail {
            Tail::PascalConcentrating { coord } => Some(*coord),
            _ => None,
        };
        let single = |c: i64| vec![pascal_vertical(c)];
        let succ = match class {
            ExtremalClass::MaxU => Some(Vec::new()),
            ExtremalClass::MaxC | ExtremalClass::Special => Some(single(coord.unwrap())),
            _ => None,
        };
        let pred = match class {
            ExtremalClass::MinU => Some(Vec::new()),
            ExtremalClass::MinC | ExtremalClass::Special => Some(single(coord.unwrap())),
            _ => None,
        };
        return Ok((succ, pred, "pascal-natural-order".into()));
    }
    match (&od.order, d.family(), d.is_subdiagram()) {
        (OrderSpec::CyclicBinfty, Family::Binfty, false) => {
            notes.push("stated as empty for every maximal and minimal path".into());
            Ok((class.is_max().then(Vec::new), class.is_min().then(Vec::new), "binfty-cyclic-order".into()))
        }
        (OrderSpec::LeftToRight, Family::Binfty, true) if d.vertex_rule().is_some() => {
            // the continuous extension sends every maximal path to the vertical path at the least vertex
            let k = d.window(d.base_level(), 1)?.vertices[0].clone();
            let z = PathRep {
                start: PathStart { level: d.base_level(), vertex: k.clone() },
                edges: Vec::new(),
                tail: Tail::VerticalAt { vertex: k, slot: 0 },
            };
            Ok((class.is_max().then(|| vec![z.clone()]), class.is_min().then(Vec::new), "band-left-to-right".into()))
        }
        _ => {
            notes.push("no closed statement for this order; probe only".into());
            Ok((None, None, "probe-only".into()))
        }
    }
}

/// Limit points of the extremal completions of successor (or predecessor) edges along x.
fn probe(od: &OrderedDiagram, x: &PathRep, max: bool) -> Result<ProbeResult> {
    let base = od.base_level();
    let span = match &x.tail {
        Tail::PascalRuns { run, .. } => 12.max(2 * *run as usize + 2),
        _ => 12,
    };
    // start past the finite part so the tail has had PROBE_DEPTH levels to build up
    let lo = base.max(x.start.level + x.edges.len()) + PROBE_DEPTH + 8;
    let hi = lo + span;
    let full = od.materialize(x, hi - base + 1)?;
    let coord_bound = full
        .edges
        .iter()
        .flat_map(|e| e.1.coords())
        .map(|c| c.unsigned_abs())
        .max()
        .unwrap_or(0)
        .max(full.edges.iter().filter_map(|e| e.1.index()).map(|i| i.unsigned_abs()).max().unwrap_or(0));
    let bound = od.diagram.truncation.bound.max(coord_bound + 3);
    let mut common: Option<BTreeSet<PathRep>> = None;
    for n in lo..hi {
        let v = full.vertex_at(n).unwrap().clone();
        let (succs, _) = od.diagram.successors(n, &v, bound)?;
        let mut found = BTreeSet::new();
        for (z, m) in succs {
            let m = Diagram::mult_u64(&m)?;
            for slot in 0..m.min(4) {
                let e = EdgeRep(v.clone(), z.clone(), slot);
                let other = if max { od.successor_edge(n + 1, &e)? } else { od.predecessor_edge(n + 1, &e)? };
                if let Some(o) = other {
                    let path = if max { od.minimal_path_to(n, &o.0)? } else { od.maximal_path_to(n, &o.0)? };
                    found.insert(path.truncated(PROBE_DEPTH));
                }
            }
        }
        common = Some(match common {
            None => found,
            Some(c) => c.intersection(&found).cloned().collect(),
        });
    }
    Ok(ProbeResult { levels: (lo, hi - 1), prefix_depth: PROBE_DEPTH, recurrent: common.unwrap_or_default().into_iter().collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopInfo {
    pub step: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub paths: Vec<PathRep>,
    pub cylinder_level: Option<usize>,
    /// visits per cylinder, keyed by the prefix label
    pub visits: BTreeMap<String, usize>,
    pub stopped: Option<StopInfo>,
}

/// Iterates φ_B from x, stopping at the first error.
pub fn orbit(od: &OrderedDiagram, x: &PathRep, steps: usize, cylinder_level: Option<usize>) -> Result<OrbitReport> {
    od.validate(x)?;
    let mut paths = vec![x.clone()];
    let mut stopped = None;
    let mut cur = x.clone();
    for step in 1..=steps {
        match od.vershik_step(&cur) {
            Ok(y) => {
                paths.push(y.clone());
                cur = y;
            }
            Err(e) => {
                stopped = Some(StopInfo { step, kind: e.kind().into(), message: e.to_string() });
                break;
            }
        }
    }
    let mut visits = BTreeMap::new();
    if let Some(l) = cylinder_level {
        let depth = l.saturating_sub(od.base_level());
        for p in &paths {
            if p.edges.len() >= depth {
                *visits.entry(p.truncated(depth).label()).or_insert(0) += 1;
            }
        }
    }
    Ok(OrbitReport { paths, cylinder_level, visits, stopped })
}

/// All paths from the base level to the window of level base + depth.
pub fn enumerate_paths(od: &OrderedDiagram, depth: usize, bound: u64) -> Result<Vec<PathRep>> {
    let base = od.base_level();
    let top = od.diagram.window(base + depth, bound)?;
    let mut out = Vec::new();
    for v in &top.vertices {
        let mut partial: Vec<Vec<EdgeRep>> = vec![Vec::new()];
        let mut ends = vec![v.clone()];
        for level in (base + 1..=base + depth).rev() {
            let mut np = Vec::new();
            let mut ne = Vec::new();
            for (p, u) in partial.iter().zip(&ends) {
                for (s, m) in od.diagram.predecessors(level, u)? {
                    for slot in 0..Diagram::mult_u64(&m)? {
                        let mut q = p.clone();
                        q.push(EdgeRep(s.clone(), u.clone(), slot));
                        np.push(q);
                        ne.push(s.clone());
                    }
                }
            }
            if np.len() + out.len() > MAX_PATHS {
                return Err(Error::invalid("window too large for exhaustive enumeration"));
            }
            partial = np;
            ends = ne;
        }
        for (mut p, s) in partial.into_iter().zip(ends) {
            p.reverse();
            out.push(PathRep { start: PathStart { level: base, vertex: s }, edges: p, tail: Tail::Unspecified });
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("window too small: no paths"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BijectionReport {
    pub depth: usize,
    pub paths: usize,
    pub non_maximal: usize,
    pub non_minimal: usize,
    pub maximal: usize,
    pub minimal: usize,
    pub injective: bool,
    pub onto_non_minimal: bool,
    pub inverse_identity: bool,
    pub bijection: bool,
    /// mixed-radix increment comparison when every level has one vertex
    pub odometer_increment: Option<bool>,
}

/// Exhaustive check that φ_B maps non-maximal prefixes one-to-one onto non-minimal ones.
pub fn bijection_check(od: &OrderedDiagram, depth: usize, bound: u64) -> Result<BijectionReport> {
    if depth == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let paths = enumerate_paths(od, depth, bound)?;
    let all: BTreeSet<PathRep> = paths.iter().cloned().collect();
    let mut images = BTreeSet::new();
    let (mut non_max, mut non_min, mut maximal, mut minimal) = (0, 0, 0, 0);
    let mut injective = true;
    let mut inverse_identity = true;
    let mut onto = true;
    for p in &paths {
        let (amax, amin) = od.prefix_flags(p)?;
        if amax {
            maximal += 1;
        } else {
            non_max += 1;
            let y = od.vershik_step(p)?;
            if !all.contains(&y) || !images.insert(y.clone()) {
                injective = false;
            }
            if od.vershik_step_inverse(&y)? != *p {
                inverse_identity = false;
            }
            if od.prefix_flags(&y)?.1 {
                onto = false;
            }
        }
        if amin {
            minimal += 1;
        } else {
            non_min += 1;
        }
    }
    onto &= images.len() == non_min;
    let single_chain = (0..=depth).all(|k| {
        od.diagram.window(od.base_level() + k, bound).map(|w| w.len() == 1).unwrap_or(false)
    });
    let odometer_increment = if single_chain { Some(odometer_matches(od, &paths)?) } else { None };
    Ok(BijectionReport {
        depth,
        paths: paths.len(),
        non_maximal: non_max,
        non_minimal: non_min,
        maximal,
        minimal,
        injective,
        onto_non_minimal: onto,
        inverse_identity,
        bijection: injective && onto && inverse_identity,
        odometer_increment,
    })
}

/// Reads slots as mixed-radix digits, least significant first, and compares φ_B with +1.
fn odometer_matches(od: &OrderedDiagram, paths: &[PathRep]) -> Result<bool> {
    let base = od.base_level();
    let radices: Vec<u64> = paths[0]
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| od.edge_position(base + k + 1, e).map(|(_, t)| t))
        .collect::<Result<_>>()?;
    let value = |p: &PathRep| -> Result<u128> {
        let mut v = 0u128;
        let mut w = 1u128;
        for (k, e) in p.edges.iter().enumerate() {
            v += od.edge_position(base + k + 1, e)?.0 as u128 * w;
            w *= radices[k] as u128;
        }
        Ok(v)
    };
    let top: u128 = radices.iter().map(|&r| r as u128).product();
    for p in paths {
        let v = value(p)?;
        match od.vershik_step(p) {
            Ok(y) => {
                if value(&y)? != v + 1 {
                    return Ok(false);
                }
            }
            Err(Error::MaximalPath(_)) | Err(Error::DeepenPrefix(_)) => {
                if v + 1 != top {
                    return Ok(false);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCount {
    pub depth: usize,
    pub lookahead: usize,
    pub maximal: Vec<PathRep>,
    pub minimal: Vec<PathRep>,
}

/// Depth-d prefixes that are maximal (minimal) and extend by maximal (minimal) edges
/// for `lookahead` further levels.
pub fn extremal_prefixes(od: &OrderedDiagram, depth: usize, bound: u64, lookahead: usize) -> Result<ExtremalCount> {
    let base = od.base_level();
    let paths = enumerate_paths(od, depth, bound)?;
    let mut maximal = Vec::new();
    let mut minimal = Vec::new();
    for p in paths {
        let (amax, amin) = od.prefix_flags(&p)?;
        if amax && extends(od, base + depth, p.end_vertex(), lookahead, bound, true)? {
            maximal.push(p.clone());
        }
        if amin && extends(od, base + depth, p.end_vertex(), lookahead, bound, false)? {
            minimal.push(p);
        }
    }
    Ok(ExtremalCount { depth, lookahead, maximal, minimal })
}

fn extends(od: &OrderedDiagram, n: usize, v: &VertexKey, steps: usize, bound: u64, max: bool) -> Result<bool> {
    if steps == 0 {
        return Ok(true);
    }
    let (succ, _) = od.diagram.successors(n, v, bound)?;
    for (z, m) in succ {
        for slot in 0..Diagram::mult_u64(&m)? {
            let e = EdgeRep(v.clone(), z.clone(), slot);
            let ok = if max { od.is_max(n + 1, &e)? } else { od.is_min(n + 1, &e)? };
            if ok && extends(od, n + 1, &z, steps - 1, bound, max)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Pascal path given by positions and counts: the first positions carry the listed counts,
/// then the tail either stays on the last position or continues in runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    pub positions: Vec<i64>,
    pub counts: Vec<u64>,
    pub tail: DescriptorTail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DescriptorTail {
    /// the last position has count ∞
    Concentrating,
    /// further positions last + k·gap, each with count `run`
    Runs { gap: i64, run: u64 },
}

impl Descriptor {
    fn check(&self) -> Result<()> {
        let want = match self.tail {
            DescriptorTail::Concentrating => self.counts.len() + 1,
            DescriptorTail::Runs { run, gap } => {
                if run == 0 || gap == 0 {
                    return Err(Error::invalid("runs need run >= 1 and gap != 0"));
                }
                self.counts.len()
            }
        };
        if self.positions.is_empty() || self.positions.len() != want {
            return Err(Error::invalid("positions and counts do not match the tail kind"));
        }
        if self.counts.contains(&0) {
            return Err(Error::invalid("counts must be positive"));
        }
        Ok(())
    }

    /// The path from the Pascal root, with the finite part as prefix.
    pub fn to_path(&self) -> Result<PathRep> {
        self.check()?;
        let mut edges = Vec::new();
        let mut cur = VertexKey::root();
        for (p, c) in self.positions.iter().zip(&self.counts) {
            for _ in 0..*c {
                let next = shift(&cur, *p)?;
                edges.push(EdgeRep(cur, next.clone(), 0));
                cur = next;
            }
        }
        let tail = match self.tail {
            DescriptorTail::Concentrating => {
                let p = *self.positions.last().unwrap();
                let next = shift(&cur, p)?;
                edges.push(EdgeRep(cur, next, 0));
                Tail::PascalConcentrating { coord: p }
            }
            DescriptorTail::Runs { gap, run } => {
                Tail::PascalRuns { start: self.positions.last().unwrap() + gap, gap, run, offset: 0 }
            }
        };
        Ok(PathRep { start: PathStart { level: 0, vertex: VertexKey::root() }, edges, tail })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FImage {
    pub descriptor: Descriptor,
    /// positions below 1 were moved to 1 (ℕ diagrams)
    pub clipped: bool,
}

/// The map f: X_max → X_min reflecting positions about the first one, i′ = 2 i_1 - i.
pub fn f_map(desc: &Descriptor, natural: bool) -> Result<FImage> {
    desc.check()?;
    let i1 = desc.positions[0];
    let mut positions: Vec<i64> = desc.positions.iter().map(|&i| 2 * i1 - i).collect();
    let mut counts = desc.counts.clone();
    let mut tail = match desc.tail {
        DescriptorTail::Concentrating => DescriptorTail::Concentrating,
        DescriptorTail::Runs { gap, run } => DescriptorTail::Runs { gap: -gap, run },
    };
    let mut clipped = false;
    if natural {
        if let Some(cut) = positions.iter().position(|&p| p < 1) {
            clipped = true;
            // every later position also lies below 1; merge them into position 1
            let finite = matches!(tail, DescriptorTail::Concentrating) && cut == positions.len() - 1;
            let runs_escape = matches!(tail, DescriptorTail::Runs { gap, .. } if gap < 0);
            positions.truncate(cut);
            positions.push(1);
            if finite || runs_escape {
                counts.truncate(cut);
                tail = DescriptorTail::Concentrating;
            } else {
                let merged: u64 = counts[cut..].iter().sum();
                counts.truncate(cut);
                counts.push(merged);
            }
        } else if let DescriptorTail::Runs { gap, .. } = tail {
            if gap < 0 {
                // runs move left and eventually cross 1
                clipped = true;
                tail = DescriptorTail::Concentrating;
                positions.push(1);
            }
        }
        // dedup a trailing 1 that was already present
        if positions.len() >= 2 && positions[positions.len() - 2] == 1 && *positions.last().unwrap() == 1 {
            positions.pop();
            if matches!(tail, DescriptorTail::Concentrating) && counts.len() == positions.len() {
                counts.pop();
            }
        }
    }
    Ok(FImage { descriptor: Descriptor { positions, counts, tail }, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_diagram, SubdiagramSpec, VertexRule};

    fn binfty(order: OrderSpec) -> OrderedDiagram {
        OrderedDiagram::new(build_diagram(Family::Binfty).unwrap(), order).unwrap()
    }

    fn band(k: i64, order: OrderSpec) -> OrderedDiagram {
        let d = build_diagram(Family::Binfty).unwrap().subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::Band { k } }).unwrap();
        OrderedDiagram::new(d, order).unwrap()
    }

    fn ip(i: i64) -> VertexKey {
        VertexKey::Index(i)
    }

    #[test]
    fn binfty_left_to_right_step() {
        let od = binfty(OrderSpec::LeftToRight);
        let x = PathRep {
            start: PathStart { level: 1, vertex: ip(2) },
            edges: vec![EdgeRep(ip(2), ip(3), 0)],
            tail: Tail::Unspecified,
        };
        let y = od.vershik_step(&x).unwrap();
        assert_eq!(y.start.vertex, ip(3));
        assert_eq!(y.edges, vec![EdgeRep(ip(3), ip(3), 0)]);
        assert_eq!(od.vershik_step_inverse(&y).unwrap(), x);
    }

    #[test]
    fn alternating_fixed_point() {
        let od = binfty(OrderSpec::Alternating);
        let z = vertical_path(&od, 1, 3).unwrap();
        assert!(matches!(od.vershik_step_inverse(&z), Err(Error::MinimalPath(_))));
        assert!(matches!(od.vershik_step(&z), Err(Error::MaximalPath(_))));
        assert_eq!(classify_extremal(&od, &z).unwrap().class, ExtremalClass::Special);
        let c = extremal_prefixes(&od, 4, 8, 2).unwrap();
        assert_eq!(c.maximal.len(), 1);
        assert_eq!(c.minimal.len(), 1);
        assert_eq!(c.maximal[0].edges.iter().all(|e| e.0 == ip(1) && e.1 == ip(1)), true);
        let b = band(2, OrderSpec::Alternating);
        let c = extremal_prefixes(&b, 4, 8, 2).unwrap();
        assert_eq!((c.maximal.len(), c.minimal.len()), (1, 1));
        assert!(c.minimal[0].edges.iter().all(|e| e.1 == ip(2)));
    }

    #[test]
    fn cyclic_deepen_prefix() {
        let od = binfty(OrderSpec::CyclicBinfty);
        let x = PathRep {
            start: PathStart { level: 1, vertex: ip(4) },
            edges: vec![EdgeRep(ip(4), ip(4), 0), EdgeRep(ip(4), ip(4), 0)],
            tail: Tail::Unspecified,
        };
        let r = orbit(&od, &x, 3, None).unwrap();
        assert_eq!(r.stopped.unwrap().kind, "deepen-prefix");
        let v = PathRep { tail: Tail::VerticalAt { vertex: ip(4), slot: 0 }, ..x };
        assert!(matches!(od.vershik_step(&v), Err(Error::MaximalPath(_))));
    }

    #[test]
    fn bijection_small_cases() {
        for od in [band(2, OrderSpec::LeftToRight), band(1, OrderSpec::Alternating)] {
            let r = bijection_check(&od, 4, 16).unwrap();
            assert!(r.bijection, "{r:?}");
        }
        let p = OrderedDiagram::new(build_diagram(Family::PascalK { k: 2 }).unwrap(), OrderSpec::NaturalPascal).unwrap();
        let r = bijection_check(&p, 4, 16).unwrap();
        assert!(r.bijection);
        assert_eq!(r.paths, 16);
        assert_eq!(r.maximal, 5);
        let odo = build_diagram(Family::OdometerIo { seq: crate::diagram::OdometerSeq::Constant { a: 2 } })
            .unwrap()
            .subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::Fixed { vertices: vec![ip(1)] } })
            .unwrap();
        let od = OrderedDiagram::new(odo, OrderSpec::LeftToRight).unwrap();
        let r = bijection_check(&od, 5, 4).unwrap();
        assert_eq!(r.paths, 32);
        assert!(r.bijection);
        assert_eq!(r.odometer_increment, Some(true));
    }

    #[test]
    fn orbit_walks_band_tower() {
        let od = band(1, OrderSpec::LeftToRight);
        let all = enumerate_paths(&od, 4, 16).unwrap();
        let top = ip(4);
        let min = od.minimal_path_to(5, &top).unwrap();
        let r = orbit(&od, &min, 1000, Some(3)).unwrap();
        let count = all.iter().filter(|p| p.end_vertex() == &top).count();
        assert_eq!(r.paths.len(), count);
        assert_eq!(r.stopped.unwrap().kind, "deepen-prefix");
    }

    #[test]
    fn pascal_minimal_path_recipe() {
        // the minimal path removes one from the first coordinate at each step
        let od = OrderedDiagram::new(build_diagram(Family::PascalZ).unwrap(), OrderSpec::NaturalPascal).unwrap();
        let t = VertexKey::pascal(&[(-1, 2), (3, 1), (4, 2)]).unwrap();
        let p = od.minimal_path_to(5, &t).unwrap();
        let firsts: Vec<i64> = p.edges.iter().map(|e| e.1.coords()[0]).collect();
        assert_eq!(p.edges[0].1, VertexKey::pascal(&[(4, 1)]).unwrap());
        assert_eq!(firsts, vec![4, 4, 3, -1, -1]);
        let q = od.maximal_path_to(5, &t).unwrap();
        assert_eq!(q.edges[0].1, VertexKey::pascal(&[(-1, 1)]).unwrap());
    }

    #[test]
    fn pascal_classes_and_succ() {
        let od = OrderedDiagram::new(build_diagram(Family::PascalZ).unwrap(), OrderSpec::NaturalPascal).unwrap();
        let c = Descriptor { positions: vec![2, 5], counts: vec![3], tail: DescriptorTail::Concentrating }.to_path().unwrap();
        let r = succ_pred(&od, &c).unwrap();
        assert_eq!(r.class, ExtremalClass::MaxC);
        assert_eq!(r.succ.as_ref().unwrap(), &vec![pascal_vertical(5)]);
        assert_eq!(r.agrees, Some(true), "{r:?}");
        let u = Descriptor { positions: vec![1], counts: vec![2], tail: DescriptorTail::Runs { gap: 1, run: 2 } }.to_path().unwrap();
        let r = succ_pred(&od, &u).unwrap();
        assert_eq!(r.class, ExtremalClass::MaxU);
        assert_eq!(r.agrees, Some(true), "{r:?}");
        let s = pascal_vertical(3);
        let r = succ_pred(&od, &s).unwrap();
        assert_eq!(r.class, ExtremalClass::Special);
        assert_eq!(r.agrees, Some(true));
        let m = Descriptor { positions: vec![4, 1], counts: vec![2], tail: DescriptorTail::Concentrating }.to_path().unwrap();
        let r = succ_pred(&od, &m).unwrap();
        assert_eq!(r.class, ExtremalClass::MinC);
        assert_eq!(r.pred.as_ref().unwrap(), &vec![pascal_vertical(1)]);
        assert_eq!(r.agrees, Some(true), "{r:?}");
    }

    #[test]
    fn f_map_classes() {
        let od = OrderedDiagram::new(build_diagram(Family::PascalZ).unwrap(), OrderSpec::NaturalPascal).unwrap();
        let d = Descriptor { positions: vec![0, 2, 3], counts: vec![1, 2], tail: DescriptorTail::Runs { gap: 2, run: 1 } };
        let f = f_map(&Descriptor { tail: DescriptorTail::Concentrating, counts: vec![1, 2], ..d.clone() }, false).unwrap();
        assert_eq!(f.descriptor.positions, vec![0, -2, -3]);
        assert_eq!(classify_extremal(&od, &f.descriptor.to_path().unwrap()).unwrap().class, ExtremalClass::MinC);
        let d = Descriptor { counts: vec![1, 2, 1], ..d };
        let g = f_map(&d, false).unwrap();
        assert_eq!(classify_extremal(&od, &g.descriptor.to_path().unwrap()).unwrap().class, ExtremalClass::MinU);
        let s = Descriptor { positions: vec![4], counts: vec![], tail: DescriptorTail::Concentrating };
        assert_eq!(f_map(&s, false).unwrap().descriptor, s);
        let n = Descriptor { positions: vec![2, 5], counts: vec![1], tail: DescriptorTail::Concentrating };
        let h = f_map(&n, true).unwrap();
        assert!(h.clipped);
        assert_eq!(h.descriptor.positions, vec![2, 1]);
    }

    #[test]
    fn json_shape() {
        let x = pascal_vertical(2);
        let v = serde_json::to_value(&x).unwrap();
        assert!(v["edges"][0].is_array());
        assert_eq!(v["tail"]["kind"], "pascal-concentrating");
        let back: PathRep = serde_json::from_value(v).unwrap();
        assert_eq!(back, x);
    }
}
