//! Tower heights, incidence and stochastic matrices, finite products, simplex vectors.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, EdgeRule, Family, OdometerSeq, VertexKey, VertexRule};
use crate::error::{Error, Result};
use crate::num::{self, binomial, binomial_i, multinomial, qn, Q};

/// Cap on the total number of vertices visited by a backward cone.
pub const MAX_CONE: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightEntry {
    pub vertex: VertexKey,
    #[serde(with = "num::nser")]
    pub height: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightVector {
    pub level: usize,
    pub values: Vec<HeightEntry>,
}

impl HeightVector {
    pub fn get(&self, v: &VertexKey) -> Option<&BigUint> {
        self.values.iter().find(|e| &e.vertex == v).map(|e| &e.height)
    }

    pub fn to_map(&self) -> HashMap<VertexKey, BigUint> {
        self.values.iter().map(|e| (e.vertex.clone(), e.height.clone())).collect()
    }
}

fn parallel_level<F>(vertices: &[VertexKey], f: F) -> Result<Vec<(VertexKey, BigUint)>>
where
    F: Fn(&VertexKey) -> Result<BigUint> + Sync,
{
    if vertices.len() > 64 {
        vertices.par_iter().map(|v| f(v).map(|h| (v.clone(), h))).collect()
    } else {
        vertices.iter().map(|v| f(v).map(|h| (v.clone(), h))).collect()
    }
}

/// Exact heights H^(n)_v for the given targets, by the recursion H^(n+1) = F′_n H^(n)
/// over the full backward cone of the targets.
pub fn heights(d: &Diagram, n: usize, targets: &[VertexKey]) -> Result<HeightVector> {
    let base = d.base_level();
    if n < base {
        return Err(Error::invalid(format!("level {n} is below the base level {base}")));
    }
    // cone[l - base] holds the vertices of level l needed
    let mut cones: Vec<Vec<VertexKey>> = vec![Vec::new(); n - base + 1];
    let mut preds: HashMap<(usize, VertexKey), Vec<(VertexKey, BigUint)>> = HashMap::new();
    let mut total = 0usize;
    let mut current: Vec<VertexKey> = targets.to_vec();
    current.sort();
    current.dedup();
    for l in (base..=n).rev() {
        total += current.len();
        if total > MAX_CONE {
            return Err(Error::truncation(
                format!("backward cone of level {n} exceeds {MAX_CONE} vertices"),
                current.iter().take(5).map(|v| v.to_string()).collect(),
            ));
        }
        let mut next: Vec<VertexKey> = Vec::new();
        if l > base {
            let rows: Vec<Result<(VertexKey, Vec<(VertexKey, BigUint)>)>> = if current.len() > 64 {
                current.par_iter().map(|v| d.predecessors(l, v).map(|p| (v.clone(), p))).collect()
            } else {
                current.iter().map(|v| d.predecessors(l, v).map(|p| (v.clone(), p))).collect()
            };
            for r in rows {
                let (v, p) = r?;
                if p.is_empty() {
                    return Err(Error::invalid(format!("vertex {v} at level {l} has no predecessors")));
                }
                next.extend(p.iter().map(|e| e.0.clone()));
                preds.insert((l, v), p);
            }
            next.sort();
            next.dedup();
        }
        cones[l - base] = std::mem::replace(&mut current, next);
    }
    let mut prev: HashMap<VertexKey, BigUint> = cones[0].iter().map(|v| (v.clone(), BigUint::one())).collect();
    for l in (base + 1)..=n {
        let level = &cones[l - base];
        let computed = parallel_level(level, |v| {
            let row = &preds[&(l, v.clone())];
            let mut h = BigUint::zero();
            for (w, m) in row {
                h += &prev[w] * m;
            }
            Ok(h)
        })?;
        prev = computed.into_iter().collect();
    }
    let values = targets
        .iter()
        .map(|v| HeightEntry { vertex: v.clone(), height: prev[v].clone() })
        .collect();
    Ok(HeightVector { level: n, values })
}

/// Heights of every vertex of the level-n window.
pub fn heights_window(d: &Diagram, n: usize, bound: u64) -> Result<HeightVector> {
    let w = d.window(n, bound)?;
    heights(d, n, &w.vertices)
}

/// Coefficient of x^w in (x^-k + ... + x^k)^n.
pub fn bounded_coefficient(k: u32, n: usize, w: i64) -> BigUint {
    bounded_coefficients(k, n).get(&w).cloned().unwrap_or_default()
}

/// All coefficients K^(n)_w of (x^-k + ... + x^k)^n, computed by exact polynomial powers.
pub fn bounded_coefficients(k: u32, n: usize) -> HashMap<i64, BigUint> {
    let k = k as i64;
    let mut poly: Vec<BigUint> = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); poly.len() + 2 * k as usize];
        for (i, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for j in 0..=(2 * k as usize) {
                next[i + j] += c;
            }
        }
        poly = next;
    }
    let offset = n as i64 * k;
    poly.into_iter().enumerate().map(|(i, c)| (i as i64 - offset, c)).collect()
}

/// Closed-form heights where the family provides one.
pub fn heights_closed_form(d: &Diagram, n: usize, v: &VertexKey) -> Result<BigUint> {
    if !d.in_level(n, v) {
        return Err(Error::invalid(format!("{v} is not a vertex of level {n}")));
    }
    if let Some(rule) = d.vertex_rule() {
        return match rule {
            VertexRule::Band { k } => {
                let i = v.index().unwrap();
                let big = binfty_height(i - k + 1, n);
                let small = if i - k >= 1 { binfty_height(i - k, n + 1) } else { BigUint::zero() };
                Ok(big - small)
            }
            VertexRule::PascalCoords { .. } => Ok(pascal_height(v)),
            VertexRule::Fixed { vertices } => match d.family() {
                Family::OdometerIo { seq } if vertices.len() == 1 => {
                    let i = v.index().unwrap();
                    Ok((0..n).fold(BigUint::one(), |acc, j| acc * seq.a(j, i)))
                }
                _ => Err(Error::Unsupported("closed-form heights for this fixed vertex set".into())),
            },
        };
    }
    if let Some(EdgeRule::BinftyPascal { k }) = d.edge_rule() {
        let i = v.index().unwrap();
        return Ok(binomial_i(n as i64 - 1, i - k));
    }
    match d.family() {
        Family::PascalN | Family::PascalZ | Family::PascalK { .. } => Ok(pascal_height(v)),
        Family::Binfty => Ok(binfty_height(v.index().unwrap(), n)),
        Family::BoundedFinite { k } => {
            if n == 0 {
                Ok(BigUint::one())
            } else {
                Ok(bounded_coefficient(*k, n, v.index().unwrap()))
            }
        }
        Family::BoundedGeneralized { k } => Ok(num_traits::pow(BigUint::from(2 * *k + 1), n)),
        Family::OdometerIo { seq } if !seq.depends_on_vertex() => {
            Ok((0..n).fold(BigUint::one(), |acc, j| acc * (seq.a(j, 1) + 1u32)))
        }
        other => Err(Error::Unsupported(format!("no closed-form heights for {}", other.name()))),
    }
}

/// H_i^(n) = C(i+n-2, n-1) on B_∞.
pub fn binfty_height(i: i64, n: usize) -> BigUint {
    binomial_i(i + n as i64 - 2, n as i64 - 1)
}

pub fn pascal_height(v: &VertexKey) -> BigUint {
    let parts: Vec<u64> = v.support().unwrap_or(&[]).iter().map(|&(_, m)| m as u64).collect();
    multinomial(&parts)
}

/// S_i^(k) = C(i+k-1, k).
pub fn s_number(i: i64, k: i64) -> BigUint {
    if i <= 0 || k < 0 {
        return BigUint::zero();
    }
    binomial_i(i + k - 1, k)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowEntry {
    pub vertex: VertexKey,
    #[serde(with = "num::qser")]
    pub value: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub vertex: VertexKey,
    pub entries: Vec<RowEntry>,
}

impl Row {
    pub fn sum(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, e| acc + &e.value)
    }

    pub fn get(&self, w: &VertexKey) -> Q {
        self.entries.iter().find(|e| &e.vertex == w).map(|e| e.value.clone()).unwrap_or_else(Q::zero)
    }
}

/// Row-finite matrix between two levels: rows indexed by the upper level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseRowMatrix {
    pub source_level: usize,
    pub target_level: usize,
    pub rows: Vec<Row>,
}

impl SparseRowMatrix {
    pub fn row(&self, v: &VertexKey) -> Option<&Row> {
        self.rows.iter().find(|r| &r.vertex == v)
    }

    pub fn entry(&self, v: &VertexKey, w: &VertexKey) -> Q {
        self.row(v).map(|r| r.get(w)).unwrap_or_else(Q::zero)
    }
}

/// F′_n rows: edge counts from level n into the given level-(n+1) vertices.
pub fn incidence(d: &Diagram, n: usize, rows: &[VertexKey]) -> Result<SparseRowMatrix> {
    let rows = rows
        .iter()
        .map(|v| {
            let p = d.predecessors(n + 1, v)?;
            Ok(Row { vertex: v.clone(), entries: p.into_iter().map(|(w, m)| RowEntry { vertex: w, value: qn(&m) }).collect() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseRowMatrix { source_level: n, target_level: n + 1, rows })
}

/// F_n with entries f′_vw H^(n)_w / H^(n+1)_v, heights supplied by the caller.
pub fn stochastic_from_heights(
    d: &Diagram,
    n: usize,
    rows: &[VertexKey],
    h_n: &HashMap<VertexKey, BigUint>,
    h_n1: &HashMap<VertexKey, BigUint>,
) -> Result<SparseRowMatrix> {
    let f = incidence(d, n, rows)?;
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(f.rows.len());
    for row in f.rows {
        let Some(hv) = h_n1.get(&row.vertex) else {
            missing.push(format!("level {}: {}", n + 1, row.vertex));
            continue;
        };
        let hv = qn(hv);
        let mut entries = Vec::with_capacity(row.entries.len());
        for e in row.entries {
            match h_n.get(&e.vertex) {
                Some(hw) => entries.push(RowEntry { value: e.value * qn(hw) / &hv, vertex: e.vertex }),
                None => missing.push(format!("level {n}: {}", e.vertex)),
            }
        }
        out.push(Row { vertex: row.vertex, entries });
    }
    if !missing.is_empty() {
        return Err(Error::truncation("stochastic matrix heights", missing));
    }
    Ok(SparseRowMatrix { source_level: n, target_level: n + 1, rows: out })
}

/// F_n for the given level-(n+1) rows, with exact heights.
pub fn stochastic_matrix(d: &Diagram, n: usize, rows: &[VertexKey]) -> Result<SparseRowMatrix> {
    let h_n1 = heights(d, n + 1, rows)?.to_map();
    let mut cols: Vec<VertexKey> = Vec::new();
    for v in rows {
        cols.extend(d.predecessors(n + 1, v)?.into_iter().map(|e| e.0));
    }
    cols.sort();
    cols.dedup();
    let h_n = heights(d, n, &cols)?.to_map();
    stochastic_from_heights(d, n, rows, &h_n, &h_n1)
}

/// Path counts g′^(n,m)_{vw} from every w at level n to v at level n+m.
pub fn product_row(d: &Diagram, n: usize, m: usize, v: &VertexKey) -> Result<Vec<(VertexKey, BigUint)>> {
    let mut cur: HashMap<VertexKey, BigUint> = HashMap::new();
    cur.insert(v.clone(), BigUint::one());
    for l in ((n + 1)..=(n + m)).rev() {
        let mut next: HashMap<VertexKey, BigUint> = HashMap::new();
        for (u, c) in &cur {
            for (w, mult) in d.predecessors(l, u)? {
                *next.entry(w).or_default() += c * &mult;
            }
        }
        if next.len() > MAX_CONE {
            return Err(Error::truncation("product row cone too large", vec![v.to_string()]));
        }
        cur = next;
    }
    let mut out: Vec<_> = cur.into_iter().collect();
    out.sort();
    Ok(out)
}

/// G′^(n,m) and G^(n,m) on the given level-(n+m) rows.
pub fn product_matrices(d: &Diagram, n: usize, m: usize, rows: &[VertexKey]) -> Result<(SparseRowMatrix, SparseRowMatrix)> {
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    let counted: Vec<(VertexKey, Vec<(VertexKey, BigUint)>)> = rows
        .par_iter()
        .map(|v| product_row(d, n, m, v).map(|r| (v.clone(), r)))
        .collect::<Result<_>>()?;
    let mut cols: Vec<VertexKey> = counted.iter().flat_map(|(_, r)| r.iter().map(|e| e.0.clone())).collect();
    cols.sort();
    cols.dedup();
    let h_n = heights(d, n, &cols)?.to_map();
    let h_top = heights(d, n + m, rows)?.to_map();
    let mut gp = Vec::new();
    let mut g = Vec::new();
    for (v, r) in counted {
        let hv = qn(&h_top[&v]);
        gp.push(Row { vertex: v.clone(), entries: r.iter().map(|(w, c)| RowEntry { vertex: w.clone(), value: qn(c) }).collect() });
        g.push(Row {
            vertex: v,
            entries: r.iter().map(|(w, c)| RowEntry { vertex: w.clone(), value: qn(c) * qn(&h_n[w]) / &hv }).collect(),
        });
    }
    Ok((
        SparseRowMatrix { source_level: n, target_level: n + m, rows: gp },
        SparseRowMatrix { source_level: n, target_level: n + m, rows: g },
    ))
}

/// Multiplies stochastic matrices F_{n+m-1} ⋯ F_n, restricted to the given rows.
pub fn stochastic_product(d: &Diagram, n: usize, m: usize, rows: &[VertexKey]) -> Result<SparseRowMatrix> {
    let mut out_rows = Vec::new();
    for v in rows {
        let mut cur: HashMap<VertexKey, Q> = HashMap::new();
        cur.insert(v.clone(), Q::one());
        for l in ((n + 1)..=(n + m)).rev() {
            let keys: Vec<VertexKey> = cur.keys().cloned().collect();
            let f = stochastic_matrix(d, l - 1, &keys)?;
            let mut next: HashMap<VertexKey, Q> = HashMap::new();
            for row in &f.rows {
                let c = &cur[&row.vertex];
                for e in &row.entries {
                    *next.entry(e.vertex.clone()).or_insert_with(Q::zero) += c * &e.value;
                }
            }
            cur = next;
        }
        let mut entries: Vec<RowEntry> = cur.into_iter().map(|(vertex, value)| RowEntry { vertex, value }).collect();
        entries.sort_by(|a, b| a.vertex.cmp(&b.vertex));
        out_rows.push(Row { vertex: v.clone(), entries });
    }
    Ok(SparseRowMatrix { source_level: n, target_level: n + m, rows: out_rows })
}

/// Closed forms of g′^(n,m)_{vw} where the family provides them.
pub fn product_closed_form(d: &Diagram, n: usize, m: usize, v: &VertexKey, w: &VertexKey) -> Result<BigUint> {
    if let Some(rule) = d.vertex_rule() {
        return match rule {
            VertexRule::Band { k } => {
                let (i, j) = (v.index().unwrap(), w.index().unwrap());
                Ok(band_product_entry(*k, n, m, i, j))
            }
            VertexRule::PascalCoords { .. } => Ok(pascal_product_entry(m, v, w)),
            _ => Err(Error::Unsupported("closed-form products for this subdiagram".into())),
        };
    }
    if let Some(EdgeRule::BinftyPascal { .. }) = d.edge_rule() {
        let (i, j) = (v.index().unwrap(), w.index().unwrap());
        return Ok(binomial_i(m as i64, i - j));
    }
    match d.family() {
        Family::PascalN | Family::PascalZ | Family::PascalK { .. } => Ok(pascal_product_entry(m, v, w)),
        Family::Binfty => {
            let (i, j) = (v.index().unwrap(), w.index().unwrap());
            Ok(if j > i { BigUint::zero() } else { s_number(i - j + 1, m as i64 - 1) })
        }
        Family::BoundedGeneralized { k } => Ok(bounded_coefficient(*k, m, v.index().unwrap() - w.index().unwrap())),
        Family::OdometerIo { seq: OdometerSeq::Constant { a } } => {
            let (i, j) = (v.index().unwrap(), w.index().unwrap());
            let down = j - i;
            if down < 0 || down > m as i64 {
                return Ok(BigUint::zero());
            }
            Ok(binomial(m as u64, down as u64) * num_traits::pow(BigUint::from(*a), m - down as usize))
        }
        other => Err(Error::Unsupported(format!("no closed-form products for {}", other.name()))),
    }
}

/// Number of paths from s (level n) to t (level n+m) in a Pascal diagram: m!/Π(t_i - s_i)!.
pub fn pascal_product_entry(m: usize, t: &VertexKey, s: &VertexKey) -> BigUint {
    let mut parts = Vec::new();
    for &(c, mt) in t.support().unwrap_or(&[]) {
        let ms = s.mult(c);
        if ms > mt {
            return BigUint::zero();
        }
        parts.push((mt - ms) as u64);
    }
    if s.coords().iter().any(|c| t.mult(*c) == 0) {
        return BigUint::zero();
    }
    if parts.iter().sum::<u64>() != m as u64 {
        return BigUint::zero();
    }
    multinomial(&parts)
}

/// Product entries of the band subdiagram W_n = {k..k+n-1} of B_∞ from level n to n+m.
pub fn band_product_entry(k: i64, n: usize, m: usize, i: i64, j: i64) -> BigUint {
    let n = n as i64;
    let m = m as i64;
    if j < k || j > k + n - 1 || i < k || i > k + n + m - 1 || j > i {
        return BigUint::zero();
    }
    let full = s_number(i - j + 1, m - 1);
    if i <= k + n {
        full
    } else {
        full - s_number(m + n + k - j + 1, i - k - n - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexEntry {
    pub vertex: VertexKey,
    pub rank: u64,
    #[serde(with = "num::qser")]
    pub value: Q,
}

/// Finitely supported vector of Δ^(n); entries carry their enumeration rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexVector {
    pub level: usize,
    pub entries: Vec<SimplexEntry>,
    /// set when entries were rounded to multiples of 2^-bits
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precision_bits: Option<u32>,
}

impl SimplexVector {
    pub fn new(level: usize, entries: Vec<SimplexEntry>) -> Result<Self> {
        let v = SimplexVector { level, entries, precision_bits: None };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.iter().any(|e| e.value.is_negative()) {
            return Err(Error::invalid("simplex vector has a negative entry"));
        }
        if self.sum() > Q::one() {
            return Err(Error::invalid("simplex vector sums to more than 1"));
        }
        let mut ranks: Vec<u64> = self.entries.iter().map(|e| e.rank).collect();
        ranks.sort();
        if ranks.windows(2).any(|w| w[0] == w[1]) || ranks.first() == Some(&0) {
            return Err(Error::invalid("ranks must be distinct positive integers"));
        }
        Ok(())
    }

    pub fn sum(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, e| acc + &e.value)
    }

    pub fn get(&self, v: &VertexKey) -> Q {
        self.entries.iter().find(|e| &e.vertex == v).map(|e| e.value.clone()).unwrap_or_else(Q::zero)
    }

    /// Basis vector ē^(v).
    pub fn basis(level: usize, vertex: VertexKey, rank: u64) -> Self {
        SimplexVector { level, entries: vec![SimplexEntry { vertex, rank, value: Q::one() }], precision_bits: None }
    }

    pub fn values(&self) -> Vec<Q> {
        self.entries.iter().map(|e| e.value.clone()).collect()
    }
}

/// d(x, y) = Σ_v 2^{-a(v)} |x_v - y_v|.
pub fn simplex_distance(x: &SimplexVector, y: &SimplexVector) -> Result<Q> {
    if x.level != y.level {
        return Err(Error::MismatchedWindows(format!("levels {} and {}", x.level, y.level)));
    }
    if x.entries.len() != y.entries.len()
        || x.entries.iter().zip(&y.entries).any(|(a, b)| a.vertex != b.vertex || a.rank != b.rank)
    {
        return Err(Error::MismatchedWindows("vectors are over different windows".into()));
    }
    Ok(x.entries
        .iter()
        .zip(&y.entries)
        .fold(Q::zero(), |acc, (a, b)| acc + num::pow2_neg(a.rank) * (&a.value - &b.value).abs()))
}

/// Weighted row norm |ḡ_v| = Σ_w 2^{-a(w)} f_vw.
pub fn weighted_norm(entries: &[(u64, Q)]) -> Q {
    entries.iter().fold(Q::zero(), |acc, (r, v)| acc + num::pow2_neg(*r) * v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Vanishing,
    NonVanishing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub rank: u64,
    #[serde(with = "num::qser")]
    pub norm: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub tail_start: u64,
    pub horizon: u64,
    pub norms: Vec<NormSample>,
    #[serde(with = "num::qser")]
    pub max: Q,
    #[serde(with = "num::qser")]
    pub min: Q,
    pub trend: Trend,
    pub note: String,
}

/// Sup of weighted row norms over rows with rank in [tail_start, horizon].
/// `rows` pairs a row rank with (column rank, entry) lists.
pub fn continuity_probe(rows: &[(u64, Vec<(u64, Q)>)], tail_start: u64, horizon: u64) -> Result<ContinuityReport> {
    let mut norms: Vec<NormSample> = rows
        .iter()
        .filter(|(r, _)| *r >= tail_start && *r <= horizon)
        .map(|(r, e)| NormSample { rank: *r, norm: weighted_norm(e) })
        .collect();
    norms.sort_by_key(|s| s.rank);
    if norms.is_empty() {
        return Err(Error::invalid("no rows in the probed rank range"));
    }
    let max = norms.iter().map(|s| s.norm.clone()).max().unwrap();
    let min = norms.iter().map(|s| s.norm.clone()).min().unwrap();
    // sup over the last quarter against the sup over the second quarter; the first quarter
    // is skipped since low ranks carry the coordinates of the starting vertex
    let quarter = (norms.len() / 4).max(1);
    let cut = norms.len() - quarter;
    let tail_sup = norms[cut..].iter().map(|s| s.norm.clone()).max().unwrap();
    let early = if norms.len() >= 4 { &norms[quarter..2 * quarter] } else { &norms[..] };
    let early_sup = early.iter().map(|s| s.norm.clone()).max().unwrap();
    let trend = if tail_sup * num::qi(2) <= early_sup { Trend::Vanishing } else { Trend::NonVanishing };
    Ok(ContinuityReport {
        tail_start,
        horizon,
        norms,
        max,
        min,
        trend,
        note: "finite-range certificate over the probed ranks".into(),
    })
}

/// Rows of F_n for B_∞ (or any index family) with ranks in [lo, hi].
pub fn index_probe_rows(d: &Diagram, n: usize, lo: u64, hi: u64) -> Result<Vec<(u64, Vec<(u64, Q)>)>> {
    let rows: Vec<VertexKey> = (lo..=hi).map(|i| VertexKey::Index(i as i64)).filter(|v| d.in_level(n + 1, v)).collect();
    let f = stochastic_matrix(d, n, &rows)?;
    f.rows
        .iter()
        .map(|r| {
            let entries = r.entries.iter().map(|e| Ok((d.rank(n, &e.vertex)?, e.value.clone()))).collect::<Result<_>>()?;
            Ok((d.rank(n + 1, &r.vertex)?, entries))
        })
        .collect()
}

/// Rows of F_n for a Pascal diagram along t^(i) = s + e_i, i in `coords`.
pub fn pascal_probe_rows(d: &Diagram, s: &VertexKey, coords: &[i64]) -> Result<Vec<(u64, Vec<(u64, Q)>)>> {
    let n = s.total() as usize;
    let rows: Vec<VertexKey> = coords.iter().map(|&c| s.shift(c, 1).unwrap()).collect();
    let f = stochastic_matrix(d, n, &rows)?;
    f.rows
        .iter()
        .map(|r| {
            let entries = r.entries.iter().map(|e| Ok((d.rank(n, &e.vertex)?, e.value.clone()))).collect::<Result<_>>()?;
            Ok((d.rank(n + 1, &r.vertex)?, entries))
        })
        .collect()
}

/// Exact rational from a signed big integer ratio; convenience for callers.
pub fn ratio(a: &BigUint, b: &BigUint) -> Q {
    BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_diagram, SubdiagramSpec};
    use crate::num::{q, qi};

    #[test]
    fn binfty_heights() {
        let d = build_diagram(Family::Binfty).unwrap();
        let h = heights(&d, 3, &[VertexKey::Index(2)]).unwrap();
        assert_eq!(h.values[0].height, BigUint::from(3u32));
        assert_eq!(heights_closed_form(&d, 4, &VertexKey::Index(5)).unwrap(), BigUint::from(35u32));
    }

    #[test]
    fn pascal_heights() {
        let d = build_diagram(Family::PascalN).unwrap();
        let s = VertexKey::pascal(&[(1, 2), (3, 1)]).unwrap();
        assert_eq!(heights(&d, 3, &[s.clone()]).unwrap().values[0].height, BigUint::from(3u32));
        let z = build_diagram(Family::PascalZ).unwrap();
        let s = VertexKey::pascal(&[(-1, 2), (2, 2)]).unwrap();
        assert_eq!(heights_closed_form(&z, 4, &s).unwrap(), BigUint::from(6u32));
    }

    #[test]
    fn bounded_coefficients_k1() {
        let d = build_diagram(Family::BoundedFinite { k: 1 }).unwrap();
        assert_eq!(heights_closed_form(&d, 2, &VertexKey::Index(0)).unwrap(), BigUint::from(3u32));
        assert_eq!(heights(&d, 2, &[VertexKey::Index(0)]).unwrap().values[0].height, BigUint::from(3u32));
    }

    #[test]
    fn stochastic_entries() {
        let d = build_diagram(Family::PascalN).unwrap();
        let t = VertexKey::pascal(&[(1, 2), (2, 1)]).unwrap();
        let f = stochastic_matrix(&d, 2, &[t.clone()]).unwrap();
        assert_eq!(f.entry(&t, &VertexKey::pascal(&[(1, 1), (2, 1)]).unwrap()), q(2, 3));
        let b = build_diagram(Family::Binfty).unwrap();
        let f = stochastic_matrix(&b, 1, &[VertexKey::Index(3)]).unwrap();
        assert!(f.rows[0].entries.iter().all(|e| e.value == q(1, 3)));
        let o = build_diagram(Family::OdometerIo { seq: OdometerSeq::PerVertex { values: vec![3] } }).unwrap();
        let f = stochastic_matrix(&o, 2, &[VertexKey::Index(2)]).unwrap();
        assert_eq!(f.rows[0].entries[0].value, q(3, 4));
        assert_eq!(f.rows[0].entries[1].value, q(1, 4));
    }

    #[test]
    fn products() {
        let d = build_diagram(Family::PascalN).unwrap();
        let t = VertexKey::pascal(&[(1, 2), (2, 1)]).unwrap();
        let (_, g) = product_matrices(&d, 1, 2, &[t.clone()]).unwrap();
        assert_eq!(g.entry(&t, &VertexKey::pascal(&[(1, 1)]).unwrap()), q(2, 3));
        let b = build_diagram(Family::Binfty).unwrap();
        let (gp, _) = product_matrices(&b, 2, 3, &[VertexKey::Index(3)]).unwrap();
        assert_eq!(gp.entry(&VertexKey::Index(3), &VertexKey::Index(1)), qi(6));
        let (gp1, _) = product_matrices(&b, 2, 1, &[VertexKey::Index(4)]).unwrap();
        assert_eq!(gp1.rows[0], incidence(&b, 2, &[VertexKey::Index(4)]).unwrap().rows[0]);
    }

    #[test]
    fn band_entries_match_counts() {
        let b = build_diagram(Family::Binfty).unwrap();
        for k in 1..4 {
            let band = b.subdiagram(&SubdiagramSpec::parse(&format!("band:{k}")).unwrap()).unwrap();
            for n in 1..5 {
                for m in 1..6 {
                    for v in band.window(n + m, 100).unwrap().vertices {
                        let row = product_row(&band, n, m, &v).unwrap();
                        for w in band.window(n, 100).unwrap().vertices {
                            let c = row.iter().find(|e| e.0 == w).map(|e| e.1.clone()).unwrap_or_default();
                            assert_eq!(c, product_closed_form(&band, n, m, &v, &w).unwrap(), "k={k} n={n} m={m} v={v} w={w}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn distances() {
        let e1 = SimplexVector::new(1, vec![
            SimplexEntry { vertex: VertexKey::Index(1), rank: 1, value: qi(1) },
            SimplexEntry { vertex: VertexKey::Index(2), rank: 2, value: qi(0) },
        ])
        .unwrap();
        let e2 = SimplexVector::new(1, vec![
            SimplexEntry { vertex: VertexKey::Index(1), rank: 1, value: qi(0) },
            SimplexEntry { vertex: VertexKey::Index(2), rank: 2, value: qi(1) },
        ])
        .unwrap();
        assert_eq!(simplex_distance(&e1, &e2).unwrap(), q(3, 4));
        assert_eq!(simplex_distance(&e1, &e1).unwrap(), qi(0));
        let other = SimplexVector::basis(2, VertexKey::Index(1), 1);
        assert!(simplex_distance(&e1, &other).is_err());
    }

    #[test]
    fn identity_rows_vanish() {
        let rows: Vec<(u64, Vec<(u64, Q)>)> = (1..=40).map(|r| (r, vec![(r, qi(1))])).collect();
        let rep = continuity_probe(&rows, 1, 40).unwrap();
        assert_eq!(rep.trend, Trend::Vanishing);
        assert_eq!(rep.max, q(1, 2));
    }
}
