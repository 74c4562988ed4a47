//! Inverse-limit method: normalized rows of G′^(n,m), convergence along vertex
//! sequences, and assembly of limit vectors.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, Family, LevelWindow, VertexKey};
use crate::error::{Error, Result};
use crate::linalg::{self, HeightVector, SimplexEntry, SimplexVector};
use crate::num::{self, binomial, multinomial, qi, qn, qpow, Q};

/// Consecutive steps required by the stopping rule.
pub const STABLE_STEPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum VertexSequence {
    Constant { vertex: VertexKey },
    /// i_m = round(alpha·m) + beta
    Linear {
        #[serde(with = "num::qser")]
        alpha: Q,
        beta: i64,
    },
    /// Pascal vertex of level n+m apportioning n+m according to d.
    Pascal { d: Vec<(i64, String)> },
    Explicit { vertices: Vec<VertexKey> },
}

impl VertexSequence {
    pub fn pascal(d: &[(i64, Q)]) -> Self {
        VertexSequence::Pascal { d: d.iter().map(|(c, x)| (*c, x.to_string())).collect() }
    }

    /// Parses "const:3", "linear:1/2,0", "pascal:1/2,1/2" (coordinates 1,2,...).
    pub fn parse(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "const" | "constant" => {
                let i: i64 = tail.trim().parse().map_err(|_| Error::invalid(format!("bad vertex {tail:?}")))?;
                Ok(VertexSequence::Constant { vertex: VertexKey::Index(i) })
            }
            "linear" => {
                let parts: Vec<&str> = tail.split(',').collect();
                let alpha = num::parse_rational(parts[0])?;
                let beta = parts.get(1).map(|b| b.trim().parse::<i64>()).transpose().map_err(|_| Error::invalid("bad beta"))?;
                Ok(VertexSequence::Linear { alpha, beta: beta.unwrap_or(0) })
            }
            "pascal" => {
                let d = num::parse_rational_list(tail)?;
                Ok(VertexSequence::pascal(&d.into_iter().enumerate().map(|(i, x)| (i as i64 + 1, x)).collect::<Vec<_>>()))
            }
            other => Err(Error::invalid(format!("unknown vertex sequence {other:?}"))),
        }
    }

    fn pascal_weights(&self) -> Result<Vec<(i64, Q)>> {
        match self {
            VertexSequence::Pascal { d } => d.iter().map(|(c, x)| Ok((*c, num::parse_rational(x)?))).collect(),
            _ => Ok(Vec::new()),
        }
    }

    /// The vertex v_m of level n+m.
    pub fn vertex_at(&self, d: &Diagram, n: usize, m: usize) -> Result<VertexKey> {
        let v = match self {
            VertexSequence::Constant { vertex } => vertex.clone(),
            VertexSequence::Linear { alpha, beta } => {
                let i = (alpha * qi(m as i64)).round().to_integer().to_i64().unwrap_or(i64::MAX) + beta;
                let lo = match d.family() {
                    Family::Binfty | Family::OdometerIo { .. } => 1,
                    _ => i64::MIN,
                };
                VertexKey::Index(i.max(lo))
            }
            VertexSequence::Pascal { .. } => apportion(&self.pascal_weights()?, (n + m) as u64)?,
            VertexSequence::Explicit { vertices } => vertices
                .get(m - 1)
                .cloned()
                .ok_or_else(|| Error::invalid(format!("explicit sequence has no entry for m = {m}")))?,
        };
        if !d.in_level(n + m, &v) {
            return Err(Error::invalid(format!("sequence vertex {v} is not in level {}", n + m)));
        }
        Ok(v)
    }
}

/// Largest-remainder apportionment of `total` units according to d.
pub fn apportion(d: &[(i64, Q)], total: u64) -> Result<VertexKey> {
    let sum = d.iter().fold(Q::zero(), |a, (_, x)| a + x);
    if sum != Q::one() || d.iter().any(|(_, x)| x.is_negative()) {
        return Err(Error::invalid("Pascal sequence weights must form a probability vector"));
    }
    let t = qi(total as i64);
    let mut parts: Vec<(i64, u64, Q)> = d
        .iter()
        .map(|(c, x)| {
            let exact = x * &t;
            let fl = exact.floor();
            (*c, fl.to_integer().to_u64().unwrap(), exact - fl)
        })
        .collect();
    let assigned: u64 = parts.iter().map(|p| p.1).sum();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| parts[b].2.cmp(&parts[a].2).then(parts[a].0.cmp(&parts[b].0)));
    for &i in order.iter().take((total - assigned) as usize) {
        parts[i].1 += 1;
    }
    VertexKey::pascal(&parts.iter().map(|p| (p.0, p.1 as u32)).collect::<Vec<_>>())
}

fn window_vector(w: &LevelWindow, values: impl Fn(&VertexKey) -> Q) -> SimplexVector {
    SimplexVector {
        level: w.level,
        entries: w
            .vertices
            .iter()
            .zip(&w.ranks)
            .map(|(v, r)| SimplexEntry { vertex: v.clone(), rank: *r, value: values(v) })
            .collect(),
        precision_bits: None,
    }
}

/// ȳ_v^(n,m): the row of G′^(n,m) at v, normalized by its full sum, restricted to the
/// level-n window.
pub fn normalized_row(d: &Diagram, n: usize, m: usize, v: &VertexKey, bound: u64) -> Result<SimplexVector> {
    let w = d.window(n, bound)?;
    if !d.is_subdiagram() {
        match d.family() {
            Family::Binfty => {
                let i = v.index().unwrap();
                let mm = m as i64;
                let mut vals: HashMap<i64, Q> = HashMap::new();
                let mut y = Q::new(mm.into(), (i + mm - 1).into());
                for j in 1..=i.min(bound as i64) {
                    vals.insert(j, y.clone());
                    if j < i {
                        y = y * Q::new((i - j).into(), (i - j + mm - 1).into());
                    }
                }
                return Ok(window_vector(&w, |u| vals.get(&u.index().unwrap()).cloned().unwrap_or_else(Q::zero)));
            }
            Family::PascalN | Family::PascalZ | Family::PascalK { .. } => {
                let mut row: Vec<(VertexKey, BigUint)> = Vec::new();
                let t = v.support().unwrap().to_vec();
                let mut cur: Vec<(i64, u32)> = Vec::new();
                pascal_below(&t, n as u32, &mut cur, &mut |s| {
                    let key = VertexKey::Support(s.iter().copied().filter(|p| p.1 > 0).collect());
                    let g = linalg::pascal_product_entry(m, v, &key);
                    row.push((key, g));
                });
                return normalize_counts(&w, v, row);
            }
            _ => {}
        }
    }
    let row = linalg::product_row(d, n, m, v)?;
    normalize_counts(&w, v, row)
}

fn pascal_below(t: &[(i64, u32)], left: u32, cur: &mut Vec<(i64, u32)>, f: &mut dyn FnMut(&[(i64, u32)])) {
    if t.is_empty() {
        if left == 0 {
            f(cur);
        }
        return;
    }
    let (c, mt) = t[0];
    for k in 0..=mt.min(left) {
        cur.push((c, k));
        pascal_below(&t[1..], left - k, cur, f);
        cur.pop();
    }
}

fn normalize_counts(w: &LevelWindow, v: &VertexKey, row: Vec<(VertexKey, BigUint)>) -> Result<SimplexVector> {
    let total: BigUint = row.iter().map(|e| &e.1).sum();
    if total.is_zero() {
        return Err(Error::ZeroRow(v.to_string()));
    }
    let total = qn(&total);
    let map: HashMap<VertexKey, BigUint> = row.into_iter().collect();
    Ok(window_vector(w, |u| map.get(u).map(|c| qn(c) / &total).unwrap_or_else(Q::zero)))
}

fn round_vector(v: &mut SimplexVector, bits: u32) {
    for e in &mut v.entries {
        e.value = num::round_to_bits(&e.value, bits);
    }
    v.precision_bits = Some(bits);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Converged {
    Yes,
    /// stabilized to the zero vector: no positive weighted sum
    No,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCondition {
    /// Σ y_w H_w stayed finite and positive on the window
    pub finite: bool,
    /// Σ y_w H_w stabilized within tolerance
    pub stabilized: bool,
    #[serde(with = "num::qopt")]
    pub weighted_sum: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: Converged,
    pub m_used: usize,
    pub limit: Option<SimplexVector>,
    /// successive simplex distances, as binary64 approximations
    pub distances: Vec<f64>,
    pub weighted_sums: Vec<f64>,
    pub p_condition: PCondition,
    pub trace_precision_bits: u32,
    pub note: String,
}

/// Follows ȳ_{v_m}^(n,m) for m = 1..m_max and stops once successive distances and the
/// weighted sum Σ y H both stay below `tol` for STABLE_STEPS consecutive m.
pub fn limit_along(
    d: &Diagram,
    n: usize,
    seq: &VertexSequence,
    m_max: usize,
    tol: f64,
    bound: u64,
    precision: Option<u32>,
) -> Result<ConvergenceReport> {
    if m_max == 0 {
        return Err(Error::invalid("m_max must be >= 1"));
    }
    let h = linalg::heights_window(d, n, bound)?;
    let hmap = h.to_map();
    let tol_q = Q::from_float(tol).ok_or_else(|| Error::invalid("bad tolerance"))?;
    let mut prev: Option<(SimplexVector, Q)> = None;
    let mut distances = Vec::new();
    let mut sums = Vec::new();
    let mut streak = 0usize;
    for m in 1..=m_max {
        let v = seq.vertex_at(d, n, m)?;
        let mut y = normalized_row(d, n, m, &v, bound)?;
        if let Some(bits) = precision {
            round_vector(&mut y, bits);
        }
        let s = y.entries.iter().fold(Q::zero(), |acc, e| acc + &e.value * qn(&hmap[&e.vertex]));
        sums.push(num::to_f64(&s));
        if let Some((py, ps)) = &prev {
            let dist = linalg::simplex_distance(&y, py)?;
            distances.push(num::to_f64(&dist));
            let scale = if ps.is_zero() { Q::one() } else { ps.abs() };
            let rel = (&s - ps).abs() / scale;
            if dist < tol_q && (rel < tol_q || (s.is_zero() && ps.is_zero())) {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        if streak >= STABLE_STEPS {
            let zero = s < tol_q;
            let converged = if zero { Converged::No } else { Converged::Yes };
            return Ok(ConvergenceReport {
                converged,
                m_used: m,
                limit: Some(y),
                distances,
                weighted_sums: sums,
                p_condition: PCondition { finite: !zero, stabilized: true, weighted_sum: Some(s) },
                trace_precision_bits: 53,
                note: "numerical evidence from the stopping rule, not a proof".into(),
            });
        }
        prev = Some((y, s));
    }
    let (y, s) = prev.unwrap();
    Ok(ConvergenceReport {
        converged: Converged::Inconclusive,
        m_used: m_max,
        limit: Some(y),
        distances,
        weighted_sums: sums,
        p_condition: PCondition { finite: s.is_positive(), stabilized: false, weighted_sum: Some(s) },
        trace_precision_bits: 53,
        note: "m_max reached before the stopping rule held".into(),
    })
}

/// q_w = y_w H_w / Σ_u y_u H_u (or the supplied denominator).
pub fn assemble_q(y: &SimplexVector, h: &HeightVector, denominator: Option<&Q>) -> Result<SimplexVector> {
    let hm = h.to_map();
    let mut weighted = Vec::with_capacity(y.entries.len());
    for e in &y.entries {
        let hw = hm.get(&e.vertex).ok_or_else(|| Error::truncation("assemble_q heights", vec![e.vertex.to_string()]))?;
        weighted.push(&e.value * qn(hw));
    }
    let denom = match denominator {
        Some(d) => d.clone(),
        None => weighted.iter().fold(Q::zero(), |a, x| a + x),
    };
    if !denom.is_positive() {
        return Err(Error::invalid("weighted sum Σ y H is not positive"));
    }
    let entries = y
        .entries
        .iter()
        .zip(weighted)
        .map(|(e, w)| SimplexEntry { vertex: e.vertex.clone(), rank: e.rank, value: w / &denom })
        .collect();
    SimplexVector::new(y.level, entries)
}

/// Finite convex combination of limit vectors over the same window.
pub fn convex_combination(vectors: &[SimplexVector], weights: &[Q]) -> Result<SimplexVector> {
    if vectors.is_empty() || vectors.len() != weights.len() {
        return Err(Error::invalid("need matching nonempty vectors and weights"));
    }
    if weights.iter().any(|w| w.is_negative()) || weights.iter().fold(Q::zero(), |a, w| a + w) != Q::one() {
        return Err(Error::invalid("weights must be a probability vector"));
    }
    let mut out = vectors[0].clone();
    for e in &mut out.entries {
        e.value = Q::zero();
    }
    for (v, w) in vectors.iter().zip(weights) {
        linalg::simplex_distance(&out, v)?;
        for (o, e) in out.entries.iter_mut().zip(&v.entries) {
            o.value += &e.value * w;
        }
    }
    Ok(out)
}

/// q^(n)_s(d) = n!/(s_1!⋯s_k!) · Π d_i^{s_i} over the level-n window of a Pascal diagram.
pub fn pascal_limit_vector(d: &Diagram, dvec: &[(i64, Q)], n: usize, bound: u64) -> Result<SimplexVector> {
    validate_probability(dvec)?;
    let w = d.window(n, bound)?;
    Ok(window_vector(&w, |s| pascal_weight(dvec, s) * qn(&linalg::pascal_height(s))))
}

/// Π d_i^{s_i}; zero when s uses a coordinate outside supp d.
pub fn pascal_weight(dvec: &[(i64, Q)], s: &VertexKey) -> Q {
    let mut acc = Q::one();
    for &(c, m) in s.support().unwrap_or(&[]) {
        match dvec.iter().find(|(dc, _)| *dc == c) {
            Some((_, x)) => acc *= qpow(x, m as u64),
            None => return Q::zero(),
        }
    }
    acc
}

pub fn validate_probability(dvec: &[(i64, Q)]) -> Result<()> {
    if dvec.iter().any(|(_, x)| x.is_negative()) {
        return Err(Error::invalid("negative entry in d"));
    }
    if dvec.iter().fold(Q::zero(), |a, (_, x)| a + x) > Q::one() {
        return Err(Error::invalid("d sums to more than 1"));
    }
    let mut cs: Vec<i64> = dvec.iter().map(|p| p.0).collect();
    cs.sort();
    if cs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("repeated coordinate in d"));
    }
    Ok(())
}

/// q_{a,j}^(n,∞) = a^{j-1}/(a+1)^{n+j-1} · C(n+j-2, n-1), j = 1..bound.
pub fn binfty_limit_vector(a: &Q, n: usize, bound: u64) -> Result<SimplexVector> {
    if a.is_negative() {
        return Err(Error::invalid("a must be >= 0"));
    }
    if n < 1 {
        return Err(Error::invalid("B_∞ levels start at 1"));
    }
    let entries = (1..=bound as i64)
        .map(|j| SimplexEntry { vertex: VertexKey::Index(j), rank: j as u64, value: binfty_q(a, n, j) })
        .collect();
    SimplexVector::new(n, entries)
}

pub fn binfty_q(a: &Q, n: usize, j: i64) -> Q {
    let a1 = a + Q::one();
    qpow(a, (j - 1) as u64) / qpow(&a1, (n as i64 + j - 1) as u64) * qn(&binomial((n as i64 + j - 2) as u64, (n - 1) as u64))
}

/// Σ_{j > w} q_{a,j}^(n,∞), exactly: the negative binomial tail rewritten as a finite
/// binomial sum, Σ_{s<n} C(w+n-1, s) (1-z)^s z^{w+n-1-s} with z = a/(a+1).
pub fn binfty_q_tail(a: &Q, n: usize, w: u64) -> Q {
    let z = a / (a + Q::one());
    let one_minus = Q::one() - &z;
    let trials = w + n as u64 - 1;
    (0..n as u64).fold(Q::zero(), |acc, s| {
        acc + qn(&binomial(trials, s)) * qpow(&one_minus, s) * qpow(&z, trials - s)
    })
}

/// H(n, a) = Σ_j a^{j-1}/(a+1)^{j} H_j^(n) = (1+a)^{n-1}: the weighted sum certifying P^(n).
pub fn binfty_weighted_sum_closed(a: &Q, n: usize) -> Q {
    qpow(&(a + Q::one()), (n - 1) as u64)
}

/// The same weighted sum over j = 1..w plus its exact tail.
pub fn binfty_weighted_sum(a: &Q, n: usize, w: u64) -> Q {
    let scale = qpow(&(a + Q::one()), (n - 1) as u64);
    let window: Q = (1..=w as i64).map(|j| binfty_q(a, n, j)).fold(Q::zero(), |x, y| x + y);
    (window + binfty_q_tail(a, n, w)) * scale
}

pub fn multinomial_of(s: &VertexKey) -> BigUint {
    let parts: Vec<u64> = s.support().unwrap_or(&[]).iter().map(|p| p.1 as u64).collect();
    multinomial(&parts)
}
