//! Vertex identities, diagram families, truncation windows and subdiagrams.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Largest window any family will enumerate.
pub const MAX_WINDOW: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexKey {
    Index(i64),
    /// Pascal multiplicity vector: strictly increasing coordinates, multiplicities ≥ 1.
    Support(Vec<(i64, u32)>),
}

impl VertexKey {
    pub fn root() -> Self {
        VertexKey::Support(Vec::new())
    }

    pub fn index(&self) -> Option<i64> {
        match self {
            VertexKey::Index(i) => Some(*i),
            _ => None,
        }
    }

    pub fn support(&self) -> Option<&[(i64, u32)]> {
        match self {
            VertexKey::Support(s) => Some(s),
            _ => None,
        }
    }

    pub fn pascal(pairs: &[(i64, u32)]) -> Result<Self> {
        let mut v: Vec<(i64, u32)> = pairs.iter().copied().filter(|&(_, m)| m > 0).collect();
        v.sort();
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!("repeated coordinate {}", w[0].0)));
            }
        }
        Ok(VertexKey::Support(v))
    }

    /// Sum of multiplicities of a Pascal key (its level).
    pub fn total(&self) -> u64 {
        match self {
            VertexKey::Support(s) => s.iter().map(|&(_, m)| m as u64).sum(),
            VertexKey::Index(_) => 0,
        }
    }

    pub fn mult(&self, coord: i64) -> u32 {
        match self {
            VertexKey::Support(s) => s.iter().find(|&&(c, _)| c == coord).map(|&(_, m)| m).unwrap_or(0),
            VertexKey::Index(_) => 0,
        }
    }

    /// Adds `delta` units to coordinate `coord` of a Pascal key.
    pub fn shift(&self, coord: i64, delta: i64) -> Option<VertexKey> {
        let s = self.support()?;
        let mut out: Vec<(i64, u32)> = Vec::with_capacity(s.len() + 1);
        let mut seen = false;
        for &(c, m) in s {
            if c == coord {
                seen = true;
                let nm = m as i64 + delta;
                if nm < 0 {
                    return None;
                }
                if nm > 0 {
                    out.push((c, nm as u32));
                }
            } else {
                out.push((c, m));
            }
        }
        if !seen {
            if delta < 0 {
                return None;
            }
            if delta > 0 {
                out.push((coord, delta as u32));
                out.sort();
            }
        }
        Some(VertexKey::Support(out))
    }

    pub fn coords(&self) -> Vec<i64> {
        self.support().map(|s| s.iter().map(|&(c, _)| c).collect()).unwrap_or_default()
    }
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexKey::Index(i) => write!(f, "{i}"),
            VertexKey::Support(s) => {
                write!(f, "[")?;
                for (k, (c, m)) in s.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "[{c},{m}]")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Rank of an integer under the zig-zag enumeration 0,1,-1,2,-2,...
pub fn zigzag(c: i64) -> u64 {
    if c > 0 {
        2 * c as u64
    } else {
        (-2 * c + 1) as u64
    }
}

/// Edge multiplicities for the odometer family B_IO.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OdometerSeq {
    /// a_n = a for every n.
    Constant { a: u64 },
    /// a_n = base^(n+1), so a_0 = base.
    Geometric { base: u64 },
    /// a_n = (n+2)^2.
    Square,
    /// a_n listed explicitly; the last entry repeats.
    Explicit { values: Vec<u64> },
    /// stationary in n, a^(i) depends on the vertex i ≥ 1; the last entry repeats.
    PerVertex { values: Vec<u64> },
}

impl OdometerSeq {
    pub fn a(&self, n: usize, i: i64) -> BigUint {
        match self {
            OdometerSeq::Constant { a } => BigUint::from(*a),
            OdometerSeq::Geometric { base } => num_traits::pow(BigUint::from(*base), n + 1),
            OdometerSeq::Square => BigUint::from(((n + 2) * (n + 2)) as u64),
            OdometerSeq::Explicit { values } => BigUint::from(values[n.min(values.len() - 1)]),
            OdometerSeq::PerVertex { values } => {
                let idx = (i.max(1) - 1) as usize;
                BigUint::from(values[idx.min(values.len() - 1)])
            }
        }
    }

    pub fn depends_on_vertex(&self) -> bool {
        matches!(self, OdometerSeq::PerVertex { .. })
    }

    fn validate(&self) -> Result<()> {
        let check = |v: u64| {
            if v < 2 {
                Err(Error::invalid(format!("odometer entries must be >= 2, got {v}")))
            } else {
                Ok(())
            }
        };
        match self {
            OdometerSeq::Constant { a } => check(*a),
            OdometerSeq::Geometric { base } => check(*base),
            OdometerSeq::Square => Ok(()),
            OdometerSeq::Explicit { values } | OdometerSeq::PerVertex { values } => {
                if values.is_empty() {
                    return Err(Error::invalid("odometer sequence is empty"));
                }
                values.iter().try_for_each(|&v| check(v))
            }
        }
    }

    /// Parses "const:2", "geometric:2", "square", "explicit:2,3,4", "per-vertex:2,3".
    pub fn parse(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<u64>> {
            tail.split(',')
                .filter(|t| !t.is_empty())
                .map(|t| t.trim().parse::<u64>().map_err(|_| Error::invalid(format!("bad odometer entry {t:?}"))))
                .collect()
        };
        let seq = match head {
            "const" | "constant" => OdometerSeq::Constant { a: first(&nums()?)? },
            "geometric" | "geom" => OdometerSeq::Geometric { base: first(&nums()?)? },
            "square" => OdometerSeq::Square,
            "explicit" => OdometerSeq::Explicit { values: nums()? },
            "per-vertex" => OdometerSeq::PerVertex { values: nums()? },
            other => return Err(Error::invalid(format!("unknown odometer sequence {other:?}"))),
        };
        seq.validate()?;
        Ok(seq)
    }
}

fn first(v: &[u64]) -> Result<u64> {
    v.first().copied().ok_or_else(|| Error::invalid("missing odometer parameter"))
}

/// One incoming-edge row of a custom diagram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomRow {
    pub target: VertexKey,
    pub sources: Vec<(VertexKey, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomSpec {
    /// vertices of level 0
    pub base: Vec<VertexKey>,
    /// rows[n] lists the incoming edges of the level n+1 vertices
    pub rows: Vec<Vec<CustomRow>>,
    #[serde(default)]
    pub stationary: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    PascalN,
    PascalZ,
    PascalK { k: u32 },
    BoundedFinite { k: u32 },
    BoundedGeneralized { k: u32 },
    OdometerIo { seq: OdometerSeq },
    Binfty,
    Custom(CustomSpec),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PascalN => "pascal-n",
            Family::PascalZ => "pascal-z",
            Family::PascalK { .. } => "pascal-k",
            Family::BoundedFinite { .. } => "bounded-finite",
            Family::BoundedGeneralized { .. } => "bounded-generalized",
            Family::OdometerIo { .. } => "odometer-io",
            Family::Binfty => "binfty",
            Family::Custom(_) => "custom",
        }
    }

    pub fn is_pascal(&self) -> bool {
        matches!(self, Family::PascalN | Family::PascalZ | Family::PascalK { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::PascalK { k } | Family::BoundedFinite { k } | Family::BoundedGeneralized { k } => {
                if *k == 0 {
                    return Err(Error::invalid("k must be >= 1"));
                }
                Ok(())
            }
            Family::OdometerIo { seq } => seq.validate(),
            Family::Custom(c) => {
                if c.base.is_empty() {
                    return Err(Error::invalid("custom diagram needs a nonempty base level"));
                }
                if c.stationary && c.rows.len() != 1 {
                    return Err(Error::invalid("stationary custom diagram declares exactly one row block"));
                }
                for (n, level) in c.rows.iter().enumerate() {
                    let mut seen = BTreeSet::new();
                    for row in level {
                        if !seen.insert(row.target.clone()) {
                            return Err(Error::invalid(format!("duplicate target {} at level {}", row.target, n + 1)));
                        }
                        if row.sources.is_empty() {
                            return Err(Error::invalid(format!("vertex {} at level {} has no predecessors", row.target, n + 1)));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexRule {
    /// W_n = {k, ..., k+n-1} inside B_∞.
    Band { k: i64 },
    /// W_n = the given vertex set at every level.
    Fixed { vertices: Vec<VertexKey> },
    /// Pascal vertices supported on the given coordinates.
    PascalCoords { coords: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// Keeps only the edges i→i and i→i+1 inside the band W_n = {k..k+n-1} of B_∞.
    BinftyPascal { k: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubdiagramSpec {
    Vertex { rule: VertexRule },
    Edge { rule: EdgeRule },
}

impl SubdiagramSpec {
    /// Parses "band:2", "fixed:1", "fixed:1,2", "coords:2,5", "edge-band:3".
    pub fn parse(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once(':').ok_or_else(|| Error::invalid(format!("bad subdiagram {s:?}")))?;
        let ints: Vec<i64> = tail
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| Error::invalid(format!("bad integer {t:?}"))))
            .collect::<Result<_>>()?;
        let one = || ints.first().copied().ok_or_else(|| Error::invalid("missing parameter"));
        Ok(match head {
            "band" => SubdiagramSpec::Vertex { rule: VertexRule::Band { k: one()? } },
            "fixed" => SubdiagramSpec::Vertex {
                rule: VertexRule::Fixed { vertices: ints.iter().map(|&i| VertexKey::Index(i)).collect() },
            },
            "coords" => SubdiagramSpec::Vertex { rule: VertexRule::PascalCoords { coords: ints } },
            "edge-band" => SubdiagramSpec::Edge { rule: EdgeRule::BinftyPascal { k: one()? } },
            other => return Err(Error::invalid(format!("unknown subdiagram kind {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub bound: u64,
    #[serde(default)]
    pub seed: Option<Vec<VertexKey>>,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { bound: 16, seed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Family(Family),
    Vertex { ambient: Box<Diagram>, rule: VertexRule },
    Edge { ambient: Box<Diagram>, rule: EdgeRule },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    kind: Kind,
    pub truncation: Truncation,
}

/// A finite slice of one level, in rank order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelWindow {
    pub level: usize,
    pub vertices: Vec<VertexKey>,
    pub ranks: Vec<u64>,
}

impl LevelWindow {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn position(&self, v: &VertexKey) -> Option<usize> {
        self.vertices.iter().position(|w| w == v)
    }

    pub fn rank_of(&self, v: &VertexKey) -> Option<u64> {
        self.position(v).map(|p| self.ranks[p])
    }
}

pub type Edges = Vec<(VertexKey, BigUint)>;

pub fn build_diagram(family: Family) -> Result<Diagram> {
    Diagram::new(family, Truncation::default())
}

pub fn build_subdiagram(ambient: &Diagram, sub: &SubdiagramSpec) -> Result<Diagram> {
    ambient.subdiagram(sub)
}

impl Diagram {
    pub fn new(family: Family, truncation: Truncation) -> Result<Self> {
        family.validate()?;
        if truncation.bound == 0 {
            return Err(Error::invalid("truncation bound must be >= 1"));
        }
        Ok(Diagram { kind: Kind::Family(family), truncation })
    }

    /// Parses the JSON schema {"family", "params", "truncation": {"bound", "seed"}}.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Spec { path: "$".into(), message: e.to_string() })?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let spec_err = |path: &str, message: String| Error::Spec { path: path.into(), message };
        let obj = v.as_object().ok_or_else(|| spec_err("$", "expected an object".into()))?;
        let family_name = obj
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| spec_err("$.family", "missing or not a string".into()))?;
        let params = obj.get("params").cloned().unwrap_or(Value::Object(Default::default()));
        let mut tagged = match params {
            Value::Object(m) => m,
            _ => return Err(spec_err("$.params", "expected an object".into())),
        };
        tagged.insert("family".into(), Value::String(family_name.to_string()));
        let family: Family = if family_name == "custom" {
            let body = tagged.clone();
            let mut inner = serde_json::Map::new();
            inner.insert("family".into(), Value::String("custom".into()));
            for (k, val) in body {
                if k != "family" {
                    inner.insert(k, val);
                }
            }
            serde_json::from_value(Value::Object(inner)).map_err(|e| spec_err("$.params", e.to_string()))?
        } else {
            serde_json::from_value(Value::Object(tagged)).map_err(|e| spec_err("$.params", e.to_string()))?
        };
        let truncation = match obj.get("truncation") {
            None => Truncation::default(),
            Some(t) => serde_json::from_value(t.clone()).map_err(|e| spec_err("$.truncation", e.to_string()))?,
        };
        let mut d = Diagram::new(family, truncation)?;
        if let Some(sub) = obj.get("subdiagram") {
            let s: SubdiagramSpec = serde_json::from_value(sub.clone()).map_err(|e| spec_err("$.subdiagram", e.to_string()))?;
            d = d.subdiagram(&s)?;
        }
        Ok(d)
    }

    pub fn family(&self) -> &Family {
        match &self.kind {
            Kind::Family(f) => f,
            Kind::Vertex { ambient, .. } | Kind::Edge { ambient, .. } => ambient.family(),
        }
    }

    pub fn ambient(&self) -> Option<&Diagram> {
        match &self.kind {
            Kind::Family(_) => None,
            Kind::Vertex { ambient, .. } | Kind::Edge { ambient, .. } => Some(ambient),
        }
    }

    pub fn is_subdiagram(&self) -> bool {
        !matches!(self.kind, Kind::Family(_))
    }

    pub fn is_vertex_subdiagram(&self) -> bool {
        matches!(self.kind, Kind::Vertex { .. })
    }

    pub fn is_edge_subdiagram(&self) -> bool {
        matches!(self.kind, Kind::Edge { .. })
    }

    pub fn vertex_rule(&self) -> Option<&VertexRule> {
        match &self.kind {
            Kind::Vertex { rule, .. } => Some(rule),
            _ => None,
        }
    }

    pub fn edge_rule(&self) -> Option<&EdgeRule> {
        match &self.kind {
            Kind::Edge { rule, .. } => Some(rule),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Family(f) => f.name().to_string(),
            Kind::Vertex { ambient, rule } => format!("{}/vertex:{:?}", ambient.describe(), rule),
            Kind::Edge { ambient, rule } => format!("{}/edge:{:?}", ambient.describe(), rule),
        }
    }

    pub fn base_level(&self) -> usize {
        match &self.kind {
            Kind::Family(Family::Binfty) => 1,
            Kind::Family(_) => 0,
            Kind::Vertex { ambient, .. } | Kind::Edge { ambient, .. } => ambient.base_level(),
        }
    }

    /// True when the incidence rows are the same at every level.
    pub fn is_stationary(&self) -> bool {
        match &self.kind {
            Kind::Family(f) => match f {
                Family::Binfty | Family::BoundedGeneralized { .. } => true,
                Family::OdometerIo { seq } => matches!(seq, OdometerSeq::Constant { .. } | OdometerSeq::PerVertex { .. }),
                Family::Custom(c) => c.stationary,
                _ => false,
            },
            _ => false,
        }
    }

    pub fn subdiagram(&self, sub: &SubdiagramSpec) -> Result<Diagram> {
        let fam = self.family().clone();
        if self.is_subdiagram() {
            return Err(Error::Unsupported("nested subdiagrams".into()));
        }
        let kind = match sub {
            SubdiagramSpec::Vertex { rule } => {
                match rule {
                    VertexRule::Band { k } => {
                        if fam != Family::Binfty {
                            return Err(Error::invalid("band subdiagram requires the B_∞ ambient"));
                        }
                        if *k < 1 {
                            return Err(Error::invalid("band start k must be >= 1"));
                        }
                    }
                    VertexRule::Fixed { vertices } => {
                        if vertices.is_empty() {
                            return Err(Error::invalid("empty W_n"));
                        }
                        match &fam {
                            Family::Binfty | Family::OdometerIo { .. } => {
                                for v in vertices {
                                    match v.index() {
                                        Some(i) if i >= 1 => {}
                                        _ => return Err(Error::invalid(format!("vertex {v} is not in every level"))),
                                    }
                                }
                            }
                            Family::BoundedGeneralized { .. } => {
                                if vertices.iter().any(|v| v.index().is_none()) {
                                    return Err(Error::invalid("expected integer vertices"));
                                }
                            }
                            _ => return Err(Error::Unsupported(format!("fixed vertex sets on {}", fam.name()))),
                        }
                    }
                    VertexRule::PascalCoords { coords } => {
                        if !fam.is_pascal() {
                            return Err(Error::invalid("coordinate subdiagram requires a Pascal ambient"));
                        }
                        if coords.is_empty() {
                            return Err(Error::invalid("empty W_n"));
                        }
                        for &c in coords {
                            if !self.coord_allowed(c) {
                                return Err(Error::invalid(format!("coordinate {c} not in the ambient")));
                            }
                        }
                    }
                }
                let mut rule = rule.clone();
                if let VertexRule::Fixed { vertices } = &mut rule {
                    vertices.sort();
                    vertices.dedup();
                }
                if let VertexRule::PascalCoords { coords } = &mut rule {
                    coords.sort();
                    coords.dedup();
                }
                Kind::Vertex { ambient: Box::new(self.clone()), rule }
            }
            SubdiagramSpec::Edge { rule } => {
                let EdgeRule::BinftyPascal { k } = rule;
                if fam != Family::Binfty {
                    return Err(Error::invalid("edge band subdiagram requires the B_∞ ambient"));
                }
                if *k < 1 {
                    return Err(Error::invalid("band start k must be >= 1"));
                }
                Kind::Edge { ambient: Box::new(self.clone()), rule: rule.clone() }
            }
        };
        Ok(Diagram { kind, truncation: self.truncation.clone() })
    }

    fn coord_allowed(&self, c: i64) -> bool {
        match self.family() {
            Family::PascalN => c >= 1,
            Family::PascalZ => true,
            Family::PascalK { k } => c >= 1 && c <= *k as i64,
            _ => false,
        }
    }

    /// Coordinates available to Pascal windows under a bound, ordered by value.
    pub fn pascal_coords(&self, bound: u64) -> Vec<i64> {
        if let Kind::Vertex { rule: VertexRule::PascalCoords { coords }, .. } = &self.kind {
            return coords.clone();
        }
        let b = bound as i64;
        match self.family() {
            Family::PascalN => (1..=b).collect(),
            Family::PascalZ => (-b..=b).collect(),
            Family::PascalK { k } => (1..=*k as i64).collect(),
            _ => Vec::new(),
        }
    }

    /// Rank a(v) of the fixed enumeration; coordinate rank for Pascal coordinates.
    pub fn coord_rank(&self, c: i64) -> u64 {
        match self.family() {
            Family::PascalZ => zigzag(c),
            _ => c.max(1) as u64,
        }
    }

    /// Is `v` a vertex of level `n`?
    pub fn in_level(&self, n: usize, v: &VertexKey) -> bool {
        if n < self.base_level() {
            return false;
        }
        match &self.kind {
            Kind::Family(f) => match (f, v) {
                (Family::PascalN | Family::PascalZ | Family::PascalK { .. }, VertexKey::Support(s)) => {
                    v.total() == n as u64
                        && s.iter().all(|&(c, m)| m >= 1 && self.coord_allowed(c))
                        && s.windows(2).all(|w| w[0].0 < w[1].0)
                }
                (Family::BoundedFinite { k }, VertexKey::Index(i)) => i.unsigned_abs() <= n as u64 * *k as u64,
                (Family::BoundedGeneralized { .. }, VertexKey::Index(_)) => true,
                (Family::OdometerIo { .. } | Family::Binfty, VertexKey::Index(i)) => *i >= 1,
                (Family::Custom(c), _) => {
                    if n == 0 {
                        c.base.contains(v)
                    } else if c.stationary {
                        c.rows[0].iter().any(|r| &r.target == v)
                    } else {
                        c.rows.get(n - 1).map(|lvl| lvl.iter().any(|r| &r.target == v)).unwrap_or(false)
                    }
                }
                _ => false,
            },
            Kind::Vertex { ambient, rule } => {
                ambient.in_level(n, v)
                    && match rule {
                        VertexRule::Band { k } => {
                            let i = v.index().unwrap_or(0);
                            i >= *k && i < *k + (n - self.base_level()) as i64 + 1
                        }
                        VertexRule::Fixed { vertices } => vertices.contains(v),
                        VertexRule::PascalCoords { coords } => v.coords().iter().all(|c| coords.contains(c)),
                    }
            }
            Kind::Edge { ambient, rule } => {
                let EdgeRule::BinftyPascal { k } = rule;
                let i = v.index().unwrap_or(0);
                ambient.in_level(n, v) && i >= *k && i < *k + (n - self.base_level()) as i64 + 1
            }
        }
    }

    fn ensure_in_level(&self, n: usize, v: &VertexKey) -> Result<()> {
        if self.in_level(n, v) {
            Ok(())
        } else {
            Err(Error::invalid(format!("{v} is not a vertex of level {n} in {}", self.describe())))
        }
    }

    /// Incoming edges r⁻¹(v) for v at level n, as sources at level n-1 with multiplicities,
    /// listed in the natural order (ascending source; Pascal: ascending removed coordinate).
    pub fn predecessors(&self, n: usize, v: &VertexKey) -> Result<Edges> {
        if let Family::Custom(c) = self.family() {
            if !c.stationary && n > c.rows.len() {
                return Err(Error::truncation(format!("custom rows for level {n} not declared"), vec![v.to_string()]));
            }
        }
        self.ensure_in_level(n, v)?;
        if n <= self.base_level() {
            return Ok(Vec::new());
        }
        let one = BigUint::one;
        match &self.kind {
            Kind::Family(f) => Ok(match f {
                Family::PascalN | Family::PascalZ | Family::PascalK { .. } => {
                    let s = v.support().unwrap();
                    s.iter().map(|&(c, _)| (v.shift(c, -1).unwrap(), one())).collect()
                }
                Family::BoundedFinite { k } => {
                    let i = v.index().unwrap();
                    let k = *k as i64;
                    let lim = (n as i64 - 1) * k;
                    ((i - k).max(-lim)..=(i + k).min(lim)).map(|w| (VertexKey::Index(w), one())).collect()
                }
                Family::BoundedGeneralized { k } => {
                    let i = v.index().unwrap();
                    let k = *k as i64;
                    ((i - k)..=(i + k)).map(|w| (VertexKey::Index(w), one())).collect()
                }
                Family::OdometerIo { seq } => {
                    let i = v.index().unwrap();
                    vec![(VertexKey::Index(i), seq.a(n - 1, i)), (VertexKey::Index(i + 1), one())]
                }
                Family::Binfty => {
                    let i = v.index().unwrap();
                    (1..=i).map(|w| (VertexKey::Index(w), one())).collect()
                }
                Family::Custom(c) => {
                    let level = if c.stationary { &c.rows[0] } else { &c.rows[n - 1] };
                    let row = level.iter().find(|r| &r.target == v).unwrap();
                    row.sources.iter().filter(|(_, m)| *m > 0).map(|(w, m)| (w.clone(), BigUint::from(*m))).collect()
                }
            }),
            Kind::Vertex { ambient, .. } => {
                let all = ambient.predecessors(n, v)?;
                Ok(all.into_iter().filter(|(w, _)| self.in_level(n - 1, w)).collect())
            }
            Kind::Edge { ambient, .. } => {
                let i = v.index().unwrap();
                let mut out = Vec::new();
                for w in [i - 1, i] {
                    let wk = VertexKey::Index(w);
                    if self.in_level(n - 1, &wk) && ambient.in_level(n - 1, &wk) {
                        out.push((wk, one()));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Ambient edges into v ∈ W_n that do not belong to the subdiagram (the rows of F̃′).
    pub fn complement_predecessors(&self, n: usize, v: &VertexKey) -> Result<Edges> {
        let ambient = self.ambient().ok_or_else(|| Error::invalid("not a subdiagram"))?;
        self.ensure_in_level(n, v)?;
        let all = ambient.predecessors(n, v)?;
        let kept = self.predecessors(n, v)?;
        let mut out = Vec::new();
        for (w, m) in all {
            let k = kept.iter().find(|(u, _)| u == &w).map(|(_, m)| m.clone()).unwrap_or_default();
            if m > k {
                out.push((w, m - k));
            }
        }
        Ok(out)
    }

    /// Outgoing edges s⁻¹(w) for w at level n, restricted to targets within `bound`.
    /// The flag is true when the returned list is the full successor set.
    pub fn successors(&self, n: usize, w: &VertexKey, bound: u64) -> Result<(Edges, bool)> {
        self.ensure_in_level(n, w)?;
        let one = BigUint::one;
        let b = bound as i64;
        match &self.kind {
            Kind::Family(f) => Ok(match f {
                Family::PascalN | Family::PascalZ | Family::PascalK { .. } => {
                    let coords = self.pascal_coords(bound);
                    let complete = matches!(f, Family::PascalK { .. });
                    (coords.iter().map(|&c| (w.shift(c, 1).unwrap(), one())).collect(), complete)
                }
                Family::BoundedFinite { k } => {
                    let i = w.index().unwrap();
                    let k = *k as i64;
                    ((i - k)..=(i + k)).map(|v| (VertexKey::Index(v), one())).collect::<Vec<_>>().pipe(|e| (e, true))
                }
                Family::BoundedGeneralized { k } => {
                    let i = w.index().unwrap();
                    let k = *k as i64;
                    ((i - k)..=(i + k)).map(|v| (VertexKey::Index(v), one())).collect::<Vec<_>>().pipe(|e| (e, true))
                }
                Family::OdometerIo { seq } => {
                    let i = w.index().unwrap();
                    let mut out = Vec::new();
                    if i >= 2 {
                        out.push((VertexKey::Index(i - 1), one()));
                    }
                    out.push((VertexKey::Index(i), seq.a(n, i)));
                    (out, true)
                }
                Family::Binfty => {
                    let i = w.index().unwrap();
                    ((i..=b.max(i)).map(|v| (VertexKey::Index(v), one())).collect(), false)
                }
                Family::Custom(c) => {
                    let level = if c.stationary { c.rows.first() } else { c.rows.get(n) };
                    match level {
                        None => {
                            return Err(Error::truncation(
                                format!("custom rows for level {} not declared", n + 1),
                                vec![w.to_string()],
                            ))
                        }
                        Some(level) => {
                            let mut out: Vec<(VertexKey, BigUint)> = Vec::new();
                            for r in level {
                                for (src, m) in &r.sources {
                                    if src == w && *m > 0 {
                                        out.push((r.target.clone(), BigUint::from(*m)));
                                    }
                                }
                            }
                            out.sort();
                            (out, true)
                        }
                    }
                }
            }),
            Kind::Vertex { ambient, .. } => {
                let bound_here = match self.vertex_rule() {
                    Some(VertexRule::Band { k }) => bound.max((*k + (n + 1 - self.base_level()) as i64) as u64),
                    Some(VertexRule::Fixed { vertices }) => {
                        bound.max(vertices.iter().filter_map(|v| v.index()).max().unwrap_or(1).unsigned_abs())
                    }
                    _ => bound,
                };
                let (all, complete) = ambient.successors(n, w, bound_here)?;
                let kept: Vec<_> = all.into_iter().filter(|(v, _)| self.in_level(n + 1, v)).collect();
                // finite W_{n+1} is fully covered by bound_here
                let complete = complete
                    || matches!(self.vertex_rule(), Some(VertexRule::Band { .. }) | Some(VertexRule::Fixed { .. }));
                Ok((kept, complete))
            }
            Kind::Edge { .. } => {
                let i = w.index().unwrap();
                let mut out = Vec::new();
                for v in [i, i + 1] {
                    let vk = VertexKey::Index(v);
                    if self.in_level(n + 1, &vk) {
                        out.push((vk, one()));
                    }
                }
                Ok((out, true))
            }
        }
    }

    /// Rank a(v) of the fixed enumeration of level n.
    pub fn rank(&self, n: usize, v: &VertexKey) -> Result<u64> {
        match v {
            VertexKey::Index(i) => Ok(match self.family() {
                Family::Binfty | Family::OdometerIo { .. } => *i as u64,
                _ => zigzag(*i),
            }),
            VertexKey::Support(_) => Ok(self.pascal_rank(n, v)),
        }
    }

    /// Counts level-n keys preceding v in the (max coordinate rank, support size, pairs) order.
    fn pascal_rank(&self, n: usize, v: &VertexKey) -> u64 {
        let (m_top, size, pairs) = self.pascal_sort_key(v);
        if size == 0 {
            return 1;
        }
        let c = |a: i64, b: i64| -> u64 {
            if a < 0 || b < 0 || b > a {
                0
            } else {
                crate::num::binomial(a as u64, b as u64).try_into().unwrap_or(u64::MAX)
            }
        };
        let n = n as i64;
        let m = m_top as i64;
        let s = size as i64;
        // keys whose largest coordinate rank is smaller
        let mut count = c(n + m - 2, n);
        // same top rank, fewer distinct coordinates
        for s2 in 1..s {
            count += c(m - 1, s2 - 1) * c(n - 1, s2 - 1);
        }
        // same top rank and size, lexicographically smaller pairs
        let mut used = 0i64;
        let mut prev_rank = 0i64;
        for p in 0..(s - 1) {
            let (rp, mp) = (pairs[p as usize].0 as i64, pairs[p as usize].1 as i64);
            let remaining = n - used;
            let after = s - p - 2;
            for r2 in (prev_rank + 1)..rp {
                for m2 in 1..remaining {
                    count += c(m - 1 - r2, after) * c(remaining - m2 - 1, after);
                }
            }
            for m2 in 1..mp {
                count += c(m - 1 - rp, after) * c(remaining - m2 - 1, after);
            }
            used += mp;
            prev_rank = rp;
        }
        count + 1
    }

    fn pascal_sort_key(&self, v: &VertexKey) -> (u64, usize, Vec<(u64, u32)>) {
        let s = v.support().unwrap_or(&[]);
        let mut pairs: Vec<(u64, u32)> = s.iter().map(|&(c, m)| (self.coord_rank(c), m)).collect();
        pairs.sort();
        (pairs.iter().map(|p| p.0).max().unwrap_or(0), s.len(), pairs)
    }

    /// All multisets of size n over `coords`.
    fn pascal_level(&self, n: usize, coords: &[i64]) -> Result<Vec<VertexKey>> {
        let count = crate::num::binomial((n + coords.len()).saturating_sub(1) as u64, n as u64);
        if count > BigUint::from(MAX_WINDOW) {
            return Err(Error::invalid(format!("Pascal window at level {n} over {} coordinates is too large", coords.len())));
        }
        let mut out = Vec::new();
        let mut cur: Vec<(i64, u32)> = Vec::new();
        fn rec(coords: &[i64], left: u32, cur: &mut Vec<(i64, u32)>, out: &mut Vec<VertexKey>) {
            if left == 0 {
                out.push(VertexKey::Support(cur.clone()));
                return;
            }
            if coords.is_empty() {
                return;
            }
            for m in (0..=left).rev() {
                if m > 0 {
                    cur.push((coords[0], m));
                }
                rec(&coords[1..], left - m, cur, out);
                if m > 0 {
                    cur.pop();
                }
            }
        }
        rec(coords, n as u32, &mut cur, &mut out);
        Ok(out)
    }

    /// Finite window of level n: the forward cone of the seed intersected with the bound,
    /// ordered by rank.
    pub fn window(&self, n: usize, bound: u64) -> Result<LevelWindow> {
        if bound == 0 {
            return Err(Error::invalid("bound must be >= 1"));
        }
        if n < self.base_level() {
            return Err(Error::invalid(format!("level {n} is below the base level {}", self.base_level())));
        }
        let b = bound as i64;
        let mut vertices: Vec<VertexKey> = match &self.kind {
            Kind::Family(f) => match f {
                Family::PascalN | Family::PascalZ | Family::PascalK { .. } => {
                    let coords = self.pascal_coords(bound);
                    self.pascal_level(n, &coords)?
                }
                Family::BoundedFinite { k } => {
                    let (lo, hi) = self.seed_range(0)?;
                    let r = n as i64 * *k as i64;
                    ((lo - r).max(-r).max(-b)..=(hi + r).min(r).min(b)).map(VertexKey::Index).collect()
                }
                Family::BoundedGeneralized { k } => {
                    let (lo, hi) = self.seed_range(0)?;
                    let r = n as i64 * *k as i64;
                    ((lo - r).max(-b)..=(hi + r).min(b)).map(VertexKey::Index).collect()
                }
                Family::OdometerIo { .. } | Family::Binfty => (1..=b).map(VertexKey::Index).collect(),
                Family::Custom(c) => {
                    if n == 0 {
                        c.base.clone()
                    } else {
                        let level = if c.stationary { c.rows.first() } else { c.rows.get(n - 1) };
                        match level {
                            Some(l) => l.iter().map(|r| r.target.clone()).collect(),
                            None => {
                                return Err(Error::truncation(format!("custom rows for level {n} not declared"), Vec::new()))
                            }
                        }
                    }
                }
            },
            Kind::Vertex { ambient, rule } => match rule {
                VertexRule::Band { k } => {
                    let len = (n - self.base_level()) as i64 + 1;
                    (*k..*k + len).map(VertexKey::Index).collect()
                }
                VertexRule::Fixed { vertices } => {
                    vertices.iter().filter(|v| ambient.in_level(n, v)).cloned().collect()
                }
                VertexRule::PascalCoords { coords } => self.pascal_level(n, coords)?,
            },
            Kind::Edge { rule, .. } => {
                let EdgeRule::BinftyPascal { k } = rule;
                let len = (n - self.base_level()) as i64 + 1;
                (*k..*k + len).map(VertexKey::Index).collect()
            }
        };
        if vertices.len() > MAX_WINDOW {
            return Err(Error::invalid("window too large"));
        }
        let mut ranked: Vec<(u64, VertexKey)> = Vec::with_capacity(vertices.len());
        if matches!(vertices.first(), Some(VertexKey::Support(_))) && self.family().is_pascal() {
            // one enumeration of the level suffices to rank every key
            let mut keyed: Vec<_> = vertices.drain(..).map(|v| (self.pascal_sort_key(&v), v)).collect();
            keyed.sort();
            let offset = self.pascal_rank_offset(n, bound, &keyed)?;
            for (pos, (_, v)) in keyed.into_iter().enumerate() {
                ranked.push((offset[pos], v));
            }
        } else {
            for v in vertices {
                ranked.push((self.rank(n, &v)?, v));
            }
            ranked.sort();
        }
        let ranks = ranked.iter().map(|r| r.0).collect();
        let vertices = ranked.into_iter().map(|r| r.1).collect();
        Ok(LevelWindow { level: n, vertices, ranks })
    }

    fn pascal_rank_offset(
        &self,
        n: usize,
        bound: u64,
        keyed: &[((u64, usize, Vec<(u64, u32)>), VertexKey)],
    ) -> Result<Vec<u64>> {
        // full windows are prefixes of the global order; restricted ones need explicit ranks
        let prefix = !matches!(self.kind, Kind::Vertex { .. });
        if prefix {
            let _ = bound;
            Ok((1..=keyed.len() as u64).collect())
        } else {
            keyed.iter().map(|(_, v)| self.rank(n, v)).collect()
        }
    }

    fn seed_range(&self, _level: usize) -> Result<(i64, i64)> {
        match &self.truncation.seed {
            None => Ok((0, 0)),
            Some(seed) => {
                let idx: Vec<i64> = seed.iter().filter_map(|v| v.index()).collect();
                if idx.is_empty() {
                    return Err(Error::invalid("seed must list integer vertices"));
                }
                Ok((*idx.iter().min().unwrap(), *idx.iter().max().unwrap()))
            }
        }
    }

    /// Upper bound on the number of incoming edges of v; used by order arithmetic.
    pub fn in_degree(&self, n: usize, v: &VertexKey) -> Result<BigUint> {
        Ok(self.predecessors(n, v)?.into_iter().fold(BigUint::zero(), |acc, (_, m)| acc + m))
    }

    /// Converts a multiplicity to u64 for slot arithmetic.
    pub fn mult_u64(m: &BigUint) -> Result<u64> {
        m.to_u64().ok_or_else(|| Error::Unsupported("edge multiplicity exceeds 64 bits".into()))
    }
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl<T> Pipe for T {}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(v: &[i64]) -> Vec<VertexKey> {
        v.iter().map(|&i| VertexKey::Index(i)).collect()
    }

    #[test]
    fn binfty_predecessors() {
        let d = build_diagram(Family::Binfty).unwrap();
        let p = d.predecessors(4, &VertexKey::Index(3)).unwrap();
        assert_eq!(p.iter().map(|e| e.0.clone()).collect::<Vec<_>>(), idx(&[1, 2, 3]));
        assert!(p.iter().all(|e| e.1 == BigUint::one()));
    }

    #[test]
    fn pascal_predecessors() {
        let d = build_diagram(Family::PascalN).unwrap();
        let t = VertexKey::pascal(&[(1, 2), (4, 1)]).unwrap();
        let p = d.predecessors(3, &t).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].0, VertexKey::pascal(&[(1, 1), (4, 1)]).unwrap());
        assert_eq!(p[1].0, VertexKey::pascal(&[(1, 2)]).unwrap());
    }

    #[test]
    fn bounded_generalized() {
        let d = build_diagram(Family::BoundedGeneralized { k: 1 }).unwrap();
        let p = d.predecessors(1, &VertexKey::Index(0)).unwrap();
        assert_eq!(p.iter().map(|e| e.0.clone()).collect::<Vec<_>>(), idx(&[-1, 0, 1]));
        let w = d.window(2, 100).unwrap();
        assert_eq!(w.vertices, idx(&[0, 1, -1, 2, -2]));
        assert_eq!(w.ranks, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn windows() {
        let d = build_diagram(Family::PascalN).unwrap();
        assert_eq!(d.window(2, 2).unwrap().len(), 3);
        let b = build_diagram(Family::Binfty).unwrap();
        assert_eq!(b.window(4, 10).unwrap().vertices, idx(&(1..=10).collect::<Vec<_>>()));
    }

    #[test]
    fn subdiagrams() {
        let b = build_diagram(Family::Binfty).unwrap();
        let band = b.subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::Band { k: 2 } }).unwrap();
        assert_eq!(band.window(3, 100).unwrap().vertices, idx(&[2, 3, 4]));
        let edge = b.subdiagram(&SubdiagramSpec::Edge { rule: EdgeRule::BinftyPascal { k: 3 } }).unwrap();
        for j in 3..6 {
            let (s, complete) = edge.successors(3, &VertexKey::Index(j), 10).unwrap();
            assert!(complete);
            assert_eq!(s.iter().map(|e| e.0.clone()).collect::<Vec<_>>(), idx(&[j, j + 1]));
        }
        let p = build_diagram(Family::PascalN).unwrap();
        let k = p.subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::PascalCoords { coords: vec![2, 5] } }).unwrap();
        assert_eq!(k.window(2, 10).unwrap().len(), 3);
    }

    #[test]
    fn pascal_rank_matches_window_position() {
        for fam in [Family::PascalN, Family::PascalZ, Family::PascalK { k: 3 }] {
            let d = build_diagram(fam).unwrap();
            for n in 0..5 {
                let w = d.window(n, 3).unwrap();
                for (pos, v) in w.vertices.iter().enumerate() {
                    assert_eq!(d.rank(n, v).unwrap(), pos as u64 + 1, "{v} at level {n}");
                }
            }
        }
    }

    #[test]
    fn custom_undeclared_level_is_truncation() {
        let c = Diagram::from_json(
            r#"{"family":"custom","params":{"base":[1],"rows":[[{"target":1,"sources":[[1,2]]}]]}}"#,
        )
        .unwrap();
        assert!(c.predecessors(2, &VertexKey::Index(1)).unwrap_err().is_truncation());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(build_diagram(Family::PascalK { k: 0 }).is_err());
        assert!(OdometerSeq::parse("const:1").is_err());
        let b = build_diagram(Family::Binfty).unwrap();
        assert!(b.subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::Fixed { vertices: vec![] } }).is_err());
    }

    #[test]
    fn json_spec() {
        let d = Diagram::from_json(r#"{"family":"bounded-generalized","params":{"k":2},"truncation":{"bound":5}}"#).unwrap();
        assert_eq!(d.family(), &Family::BoundedGeneralized { k: 2 });
        let err = Diagram::from_json(r#"{"family":"pascal-k","params":{}}"#).unwrap_err();
        assert!(matches!(err, Error::Spec { .. }));
        let c = Diagram::from_json(
            r#"{"family":"custom","params":{"base":[1,2],"rows":[[{"target":1,"sources":[[1,1],[2,1]]},{"target":2,"sources":[[1,1]]}]],"stationary":true}}"#,
        )
        .unwrap();
        assert_eq!(c.predecessors(5, &VertexKey::Index(1)).unwrap().len(), 2);
    }
}
