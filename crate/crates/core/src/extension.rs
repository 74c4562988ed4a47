//! Measure extension from subdiagrams: the series criteria, verdicts, the closed-form
//! value for μ_a on the band subdiagram, extended cylinder values, and decay probes.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{Diagram, Family, OdometerSeq, VertexKey, VertexRule};
use crate::error::{Error, Result};
use crate::limits;
use crate::linalg;
use crate::measures::{MeasureKind, TailInvariantMeasure};
use crate::num::{self, catalan, qi, qn, qpow, Q};

/// Span of trailing ratios inspected by the geometric certificate.
pub const RATIO_SPAN: usize = 8;
/// Heuristic divergence ceiling, as a multiple of the first term.
pub const CEILING_FACTOR: i64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Finite,
    Infinite,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    ClosedForm,
    GeometricTail,
    Heuristic,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecognizedForm {
    pub name: String,
    pub convergent: bool,
    pub statement: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub verdict: Verdict,
    pub basis: Basis,
    /// exact value, only from a recognized closed form
    #[serde(with = "num::qopt", skip_serializing_if = "Option::is_none", default)]
    pub value: Option<Q>,
    /// upper bound on the extension mass
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    pub first_level: usize,
    #[serde(with = "num::qser")]
    pub initial_mass: Q,
    #[serde(with = "num::qvec")]
    pub terms: Vec<Q>,
    #[serde(with = "num::qvec")]
    pub partial_sums: Vec<Q>,
    /// partial sums recomputed as Σ_{w∈W_n} H_w p_w agree with the series
    pub direct_check: bool,
    pub recognized: Option<RecognizedForm>,
    /// t_{n+1}/t_n over the computed range, binary64
    pub ratios: Vec<f64>,
    pub certified_ratio: Option<f64>,
    pub heuristic_infinite: bool,
    pub trace: Vec<String>,
}

impl ExtensionReport {
    pub fn last_sum(&self) -> &Q {
        self.partial_sums.last().unwrap_or(&self.initial_mass)
    }
}

/// Series of criterion (ii) for vertex subdiagrams, or of the edge criterion for edge
/// subdiagrams: t_n = Σ_{v∈W_{n+1}} Σ_w f̃′_vw H_w^(n) p_v^(n+1), n from the base level.
pub fn extension_series(measure: &TailInvariantMeasure, n_terms: usize) -> Result<ExtensionReport> {
    let sub = &measure.diagram;
    let ambient = sub.ambient().ok_or_else(|| Error::invalid("extension needs a measure on a subdiagram"))?;
    if n_terms == 0 {
        return Err(Error::invalid("need at least one term"));
    }
    let base = sub.base_level();
    let levels: Vec<usize> = (base..base + n_terms).collect();
    let terms: Vec<Q> = levels.par_iter().map(|&n| series_term(measure, ambient, n)).collect::<Result<_>>()?;
    let initial_mass = direct_mass(measure, ambient, base)?;
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = initial_mass.clone();
    for t in &terms {
        acc += t;
        partial_sums.push(acc.clone());
    }
    // dual route: μ̂(X̂^(n)) = Σ_{w∈W_n} H_w^(n) p_w^(n)
    let check_levels: Vec<usize> = [1usize, n_terms / 2, n_terms]
        .into_iter()
        .filter(|&k| k >= 1 && k <= n_terms && k <= 40)
        .collect();
    let mut direct_check = true;
    for k in check_levels {
        if direct_mass(measure, ambient, base + k)? != partial_sums[k - 1] {
            direct_check = false;
        }
    }
    let recognized = recognize(measure);
    Ok(decide(initial_mass, terms, partial_sums, direct_check, recognized, base, measure))
}

pub fn vertex_extension_series(measure: &TailInvariantMeasure, n_terms: usize) -> Result<ExtensionReport> {
    if !measure.diagram.is_vertex_subdiagram() {
        return Err(Error::invalid("expected a measure on a vertex subdiagram"));
    }
    extension_series(measure, n_terms)
}

pub fn edge_extension_series(measure: &TailInvariantMeasure, n_terms: usize) -> Result<ExtensionReport> {
    if !measure.diagram.is_edge_subdiagram() {
        return Err(Error::invalid("expected a measure on an edge subdiagram"));
    }
    extension_series(measure, n_terms)
}

fn series_term(measure: &TailInvariantMeasure, ambient: &Diagram, n: usize) -> Result<Q> {
    let sub = &measure.diagram;
    let top = sub.window(n + 1, u64::MAX >> 2)?;
    let mut rows: Vec<(VertexKey, Vec<(VertexKey, BigUint)>)> = Vec::new();
    let mut sources: Vec<VertexKey> = Vec::new();
    for v in &top.vertices {
        let comp = sub.complement_predecessors(n + 1, v)?;
        sources.extend(comp.iter().map(|e| e.0.clone()));
        rows.push((v.clone(), comp));
    }
    sources.sort();
    sources.dedup();
    if sources.is_empty() {
        return Ok(Q::zero());
    }
    let h = linalg::heights(ambient, n, &sources)?.to_map();
    let mut t = Q::zero();
    for (v, comp) in rows {
        if comp.is_empty() {
            continue;
        }
        let weight: BigUint = comp.iter().map(|(w, m)| m * &h[w]).sum();
        t += qn(&weight) * measure.p(n + 1, &v)?;
    }
    Ok(t)
}

/// Σ_{w∈W_n} H_w^(n) p_w^(n) with ambient heights.
fn direct_mass(measure: &TailInvariantMeasure, ambient: &Diagram, n: usize) -> Result<Q> {
    let w = measure.diagram.window(n, u64::MAX >> 2)?;
    let h = linalg::heights(ambient, n, &w.vertices)?;
    let mut acc = Q::zero();
    for e in &h.values {
        acc += qn(&e.height) * measure.p(n, &e.vertex)?;
    }
    Ok(acc)
}

fn recognize(measure: &TailInvariantMeasure) -> Option<RecognizedForm> {
    match &measure.kind {
        MeasureKind::OdometerBar { seq, .. } => {
            let (convergent, why) = match seq {
                OdometerSeq::Constant { a } => (false, format!("a_n = {a} is constant, Σ 1/a_n diverges")),
                OdometerSeq::Explicit { values } => (false, format!("a_n is eventually {}, Σ 1/a_n diverges", values.last().unwrap())),
                OdometerSeq::Geometric { base } => (true, format!("a_n = {base}^(n+1), Σ 1/a_n converges")),
                OdometerSeq::Square => (true, "a_n = (n+2)^2, Σ 1/a_n converges".to_string()),
                OdometerSeq::PerVertex { .. } => return None,
            };
            Some(RecognizedForm {
                name: "odometer-sum-inverse".into(),
                convergent,
                statement: format!("extension of the odometer measure is finite iff Σ 1/a_n < ∞; {why}"),
            })
        }
        MeasureKind::SubdiagramNuA { a, .. } if a < &Q::one() => Some(RecognizedForm {
            name: "nu-a-band".into(),
            convergent: true,
            statement: "ν_a with 0 < a < 1 on the band subdiagram extends to a finite measure".into(),
        }),
        MeasureKind::PascalEdgeNuP { .. } => Some(RecognizedForm {
            name: "nu-p-edge".into(),
            convergent: false,
            statement: "ν_p on the edge band subdiagram has an infinite extension".into(),
        }),
        _ => None,
    }
}

fn upper_bound_for(measure: &TailInvariantMeasure, n_terms: usize, last: &Q) -> Option<f64> {
    // Σ_{j≥N} 1/(j+2)^2 ≤ 1/(N+1), and the remaining product is at most exp of that sum
    if let MeasureKind::OdometerBar { seq: OdometerSeq::Square, .. } = &measure.kind {
        return Some(num::to_f64(last) * (1.0 / (n_terms as f64 + 1.0)).exp());
    }
    None
}

fn decide(
    initial_mass: Q,
    terms: Vec<Q>,
    partial_sums: Vec<Q>,
    direct_check: bool,
    recognized: Option<RecognizedForm>,
    first_level: usize,
    measure: &TailInvariantMeasure,
) -> ExtensionReport {
    let mut trace = Vec::new();
    let ratios: Vec<f64> = terms
        .windows(2)
        .map(|w| if w[0].is_zero() { f64::NAN } else { num::to_f64(&(&w[1] / &w[0])) })
        .collect();
    let exact_ratios: Vec<Option<Q>> = terms.windows(2).map(|w| if w[0].is_zero() { None } else { Some(&w[1] / &w[0]) }).collect();
    let last_sum = partial_sums.last().cloned().unwrap_or_else(|| initial_mass.clone());

    // geometric certificate: trailing ratios non-increasing and below 1
    let mut certified: Option<Q> = None;
    if exact_ratios.len() >= RATIO_SPAN {
        let span = &exact_ratios[exact_ratios.len() - RATIO_SPAN..];
        if span.iter().all(|r| r.is_some()) {
            let span: Vec<&Q> = span.iter().map(|r| r.as_ref().unwrap()).collect();
            let nonincreasing = span.windows(2).all(|w| w[1] <= w[0]);
            let r = span[0].clone();
            if nonincreasing && r < Q::one() {
                certified = Some(r);
            }
        }
    }
    if terms.iter().all(|t| t.is_zero()) {
        certified = Some(Q::zero());
    }

    // heuristic divergence: partial sums past the ceiling and no decaying ratio
    let first = terms.iter().find(|t| t.is_positive()).cloned();
    let tail_ratios: Vec<f64> = ratios.iter().rev().take(RATIO_SPAN).copied().collect();
    let heuristic_infinite = match &first {
        Some(f) => {
            last_sum > f * qi(CEILING_FACTOR) && !tail_ratios.is_empty() && tail_ratios.iter().all(|r| *r >= 1.0)
        }
        None => false,
    };

    let mut verdict = Verdict::Inconclusive;
    let mut basis = Basis::None;
    let mut bound = None;
    let value = None;
    if let Some(r) = &certified {
        let t_last = terms.last().cloned().unwrap_or_else(Q::zero);
        let b = &last_sum + if r.is_zero() { Q::zero() } else { &t_last * r / (Q::one() - r) };
        trace.push(format!(
            "last {RATIO_SPAN} term ratios are non-increasing and at most {:.6}; geometric tail bound applied",
            num::to_f64(r)
        ));
        if recognized.as_ref().map(|f| !f.convergent).unwrap_or(false) {
            trace.push("geometric certificate contradicts a recognized divergent form".into());
        } else {
            verdict = Verdict::Finite;
            basis = Basis::GeometricTail;
            bound = Some(num::to_f64(&b));
        }
    } else if let Some(form) = &recognized {
        trace.push(format!("recognized closed form: {}", form.statement));
        if form.convergent {
            verdict = Verdict::Finite;
            basis = Basis::ClosedForm;
            bound = upper_bound_for(measure, terms.len(), &last_sum);
        } else {
            verdict = Verdict::Infinite;
            basis = Basis::ClosedForm;
        }
        if heuristic_infinite {
            trace.push("partial sums also exceed the heuristic ceiling with non-decaying ratios".into());
        }
    } else if heuristic_infinite {
        verdict = Verdict::Infinite;
        basis = Basis::Heuristic;
        trace.push(format!(
            "heuristic: partial sums exceed {CEILING_FACTOR} times the first term and the last ratios are all >= 1"
        ));
    } else {
        trace.push("no certificate, recognized form or divergence evidence".into());
    }
    if !direct_check {
        trace.push("direct Σ H p recomputation disagrees with the partial sums".into());
    }
    ExtensionReport {
        verdict,
        basis,
        value,
        bound,
        first_level,
        initial_mass,
        terms,
        partial_sums,
        direct_check,
        recognized,
        ratios,
        certified_ratio: certified.map(|r| num::to_f64(&r)),
        heuristic_infinite,
        trace,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum ClosedFormCase {
    /// μ_a restricted to the path space of the band subdiagram W_n = {k..k+n-1} of B_∞
    MuAPascalEdge {
        #[serde(with = "num::qser")]
        a: Q,
        k: i64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub verdict: Verdict,
    #[serde(with = "num::qser")]
    pub value: Q,
    /// μ_{n,a} for n = 1..N by the recursion with Catalan numbers
    #[serde(with = "num::qvec")]
    pub recursion: Vec<Q>,
    /// μ_{n,a} for n = 1..N as Σ_j h_j^(n) p_{a,j}^(n) with computed band heights
    #[serde(with = "num::qvec")]
    pub direct: Vec<Q>,
    pub routes_agree: bool,
    /// μ_{N,a} - value, as binary64
    pub remainder: f64,
    #[serde(with = "num::qser")]
    pub catalan_value: Q,
    pub catalan_check: bool,
}

/// (a/(a+1))^{k-1}(1-a) for 0 < a < 1 and 0 for a ≥ 1.
pub fn mu_a_band_value(a: &Q, k: i64) -> Result<Q> {
    if !a.is_positive() || k < 1 {
        return Err(Error::invalid("need a > 0 and k >= 1"));
    }
    if a >= &Q::one() {
        return Ok(Q::zero());
    }
    Ok(qpow(&(a / (a + Q::one())), (k - 1) as u64) * (Q::one() - a))
}

/// μ_{n,a} by μ_1 = a^{k-1}/(a+1)^k and μ_{n+1} = μ_n - a^{k+n}/(a+1)^{2n+k} C_n.
pub fn mu_a_band_recursion(a: &Q, k: i64, n_max: usize) -> Vec<Q> {
    let a1 = a + Q::one();
    let mut out = Vec::with_capacity(n_max);
    let mut mu = qpow(a, (k - 1) as u64) / qpow(&a1, k as u64);
    for n in 1..=n_max {
        out.push(mu.clone());
        let step = qpow(a, (k + n as i64) as u64) / qpow(&a1, (2 * n as i64 + k) as u64) * qn(&catalan(n as u64));
        mu -= step;
    }
    out
}

/// μ_{n,a} = Σ_{j∈W_n} h_j^(n) a^{j-1}/(a+1)^{n+j-1} with band heights from the recursion.
pub fn mu_a_band_direct(a: &Q, k: i64, n_max: usize) -> Result<Vec<Q>> {
    let band = crate::diagram::build_diagram(Family::Binfty)?
        .subdiagram(&crate::diagram::SubdiagramSpec::Vertex { rule: VertexRule::Band { k } })?;
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let w = band.window(n, u64::MAX >> 2)?;
            let h = linalg::heights(&band, n, &w.vertices)?;
            Ok(h.values.iter().fold(Q::zero(), |acc, e| {
                acc + qn(&e.height) * limits_p_mu_a(a, n, e.vertex.index().unwrap())
            }))
        })
        .collect()
}

fn limits_p_mu_a(a: &Q, n: usize, j: i64) -> Q {
    qpow(a, (j - 1) as u64) / qpow(&(a + Q::one()), (n as i64 + j - 1) as u64)
}

/// C(x) = Σ C_n x^n at x = a/(a+1)^2: the root of x C^2 - C + 1 = 0 with C ≤ 2.
pub fn catalan_generating_value(a: &Q) -> Result<(Q, bool)> {
    if !a.is_positive() {
        return Err(Error::invalid("need a > 0"));
    }
    let a1 = a + Q::one();
    let x = a / (&a1 * &a1);
    let c = if a <= &Q::one() { a1.clone() } else { &a1 / a };
    let root = &x * &c * &c - &c + Q::one() == Q::zero();
    Ok((c.clone(), root && c <= qi(2)))
}

pub fn closed_form_extension(case: &ClosedFormCase, n_check: usize) -> Result<ClosedFormReport> {
    let ClosedFormCase::MuAPascalEdge { a, k } = case;
    let value = mu_a_band_value(a, *k)?;
    let recursion = mu_a_band_recursion(a, *k, n_check);
    let direct = mu_a_band_direct(a, *k, n_check)?;
    let routes_agree = recursion == direct;
    let remainder = num::to_f64(&(recursion.last().cloned().unwrap_or_else(Q::zero) - &value));
    let (catalan_value, catalan_check) = catalan_generating_value(a)?;
    Ok(ClosedFormReport { verdict: Verdict::Finite, value, recursion, direct, routes_agree, remainder, catalan_value, catalan_check })
}

/// Parses the CLI case name.
pub fn parse_case(name: &str, a: Option<Q>, k: Option<i64>) -> Result<ClosedFormCase> {
    match name {
        "mu-a-pascal-edge" => Ok(ClosedFormCase::MuAPascalEdge {
            a: a.ok_or_else(|| Error::invalid("--a is required"))?,
            k: k.ok_or_else(|| Error::invalid("--k is required"))?,
        }),
        other => Err(Error::Unsupported(format!("no closed form for case {other:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendedStatus {
    Value,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedCylinder {
    pub status: ExtendedStatus,
    #[serde(with = "num::qser")]
    pub last: Q,
    pub m_used: usize,
    /// partial value at m = 0..m_used
    #[serde(with = "num::qvec")]
    pub values: Vec<Q>,
}

/// μ̂([e]) = lim_m Σ_{v∈W_{n+m}} g′^(n,m)_vw p_v^(n+m), by forward propagation from w.
pub fn extended_cylinder_mass(
    measure: &TailInvariantMeasure,
    n: usize,
    w: &VertexKey,
    m_max: usize,
    tol: f64,
) -> Result<ExtendedCylinder> {
    let sub = &measure.diagram;
    let ambient = sub.ambient().unwrap_or(sub);
    if !ambient.in_level(n, w) {
        return Err(Error::invalid(format!("{w} is not a vertex of level {n}")));
    }
    let top_level = n + m_max;
    let is_sub = sub.is_subdiagram();
    // vertices that can still reach the subdiagram by level n + m_max
    let index_cap: Option<i64> = match (is_sub, ambient.family()) {
        (true, Family::Binfty) => Some(
            sub.window(top_level, u64::MAX >> 2)?.vertices.iter().filter_map(|v| v.index()).max().unwrap_or(1),
        ),
        _ => None,
    };
    let coords: Option<Vec<i64>> = match sub.vertex_rule() {
        Some(VertexRule::PascalCoords { coords }) => Some(coords.clone()),
        _ => None,
    };
    let bound = index_cap.map(|c| c as u64).unwrap_or(sub.truncation.bound);
    let tol_q = Q::from_float(tol).ok_or_else(|| Error::invalid("bad tolerance"))?;
    let mut counts: HashMap<VertexKey, BigUint> = HashMap::new();
    counts.insert(w.clone(), BigUint::one());
    let value_at = |level: usize, counts: &HashMap<VertexKey, BigUint>| -> Result<Q> {
        let mut acc = Q::zero();
        for (v, c) in counts {
            if sub.in_level(level, v) {
                acc += qn(c) * measure.p(level, v)?;
            }
        }
        Ok(acc)
    };
    let mut prev = value_at(n, &counts)?;
    let mut values = vec![prev.clone()];
    let mut streak = 0;
    // mass carried by successors past the bound when the measure lives on the ambient diagram
    let mut escaped = Q::zero();
    for m in 1..=m_max {
        let level = n + m;
        let mut next: HashMap<VertexKey, BigUint> = HashMap::new();
        for (u, c) in &counts {
            let (succ, complete) = ambient.successors(level - 1, u, bound)?;
            if !complete && !is_sub {
                let tail = measure.successor_tail(level - 1, u, bound).ok_or_else(|| {
                    Error::truncation("successors beyond the bound have no closed-form tail", vec![u.to_string()])
                })?;
                escaped += qn(c) * tail;
            }
            for (v, mult) in succ {
                if let Some(cap) = index_cap {
                    if v.index().unwrap_or(0) > cap {
                        continue;
                    }
                }
                if let Some(cs) = &coords {
                    if v.coords().iter().any(|c| !cs.contains(c)) {
                        continue;
                    }
                }
                *next.entry(v).or_default() += c * &mult;
            }
        }
        counts = next;
        let val = value_at(level, &counts)? + &escaped;
        values.push(val.clone());
        if (&val - &prev).abs() < tol_q {
            streak += 1;
        } else {
            streak = 0;
        }
        prev = val;
        if streak >= limits::STABLE_STEPS {
            return Ok(ExtendedCylinder { status: ExtendedStatus::Value, last: prev, m_used: m, values });
        }
    }
    Ok(ExtendedCylinder { status: ExtendedStatus::Inconclusive, last: prev, m_used: m_max, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub m: usize,
    #[serde(with = "num::nser")]
    pub k0: BigUint,
    #[serde(with = "num::qser")]
    pub ratio: Q,
    pub approx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BkDecayReport {
    pub k: u32,
    pub samples: Vec<DecaySample>,
    pub nonincreasing: bool,
    pub last: f64,
}

/// K_0^(m)/(2k+1)^m for m = 1..m_max, with the monotonicity check.
pub fn bk_decay_probe(k: u32, m_max: usize) -> Result<BkDecayReport> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let width = 2 * k as usize;
    let mut poly: Vec<BigUint> = vec![BigUint::one()];
    let mut samples = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut next = vec![BigUint::zero(); poly.len() + width];
        for (i, c) in poly.iter().enumerate() {
            for j in 0..=width {
                next[i + j] += c;
            }
        }
        poly = next;
        let k0 = poly[m * k as usize].clone();
        let ratio = qn(&k0) / qpow(&qi(2 * k as i64 + 1), m as u64);
        samples.push(DecaySample { m, approx: num::to_f64(&ratio), k0, ratio });
    }
    let nonincreasing = samples.windows(2).all(|w| w[1].ratio <= w[0].ratio);
    let last = samples.last().map(|s| s.approx).unwrap_or(f64::NAN);
    Ok(BkDecayReport { k, samples, nonincreasing, last })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupSample {
    pub m: usize,
    #[serde(with = "num::qser")]
    pub sup: Q,
    pub argmax: VertexKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionReport {
    pub column: VertexKey,
    pub samples: Vec<SupSample>,
    pub vanishing: bool,
    pub note: String,
}

/// sup_i y_{ij}^(n,m) over the level-(n+m) window for a stationary diagram; the
/// normalized rows vanishing in every column rules out probability measures.
pub fn substitution_probe(d: &Diagram, n: usize, column: &VertexKey, ms: &[usize], bound: u64) -> Result<SubstitutionReport> {
    if !d.is_stationary() {
        return Err(Error::invalid("the substitution probe needs a stationary diagram"));
    }
    let mut samples = Vec::new();
    for &m in ms {
        let rows = d.window(n + m, bound)?;
        let mut best: Option<(Q, VertexKey)> = None;
        for v in &rows.vertices {
            let y = limits::normalized_row(d, n, m, v, bound)?;
            let val = y.get(column);
            if best.as_ref().map(|b| val > b.0).unwrap_or(true) {
                best = Some((val, v.clone()));
            }
        }
        let (sup, argmax) = best.ok_or_else(|| Error::invalid("empty window"))?;
        samples.push(SupSample { m, sup, argmax });
    }
    let max = samples.iter().map(|s| s.sup.clone()).max().unwrap_or_else(Q::zero);
    let last = samples.last().map(|s| s.sup.clone()).unwrap_or_else(Q::zero);
    let vanishing = last * qi(2) <= max && !max.is_zero();
    Ok(SubstitutionReport {
        column: column.clone(),
        samples,
        vanishing,
        note: "finite-range evidence over the sampled m".into(),
    })
}
