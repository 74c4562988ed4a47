//! Tail-invariant measure families, cylinder and tower masses, invariance and
//! normalization checks, difference tables, and path sampling for μ_d.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::{build_diagram, Diagram, Family, OdometerSeq, SubdiagramSpec, VertexKey, VertexRule, EdgeRule};
use crate::error::{Error, Result};
use crate::limits;
use crate::linalg;
use crate::num::{self, parse_rational, parse_rational_list, qi, qn, qpow, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PascalVariant {
    N,
    Z,
    K(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    /// μ_d: p^(n)_s = Π d_i^{s_i}
    PascalMu { d: Vec<(i64, Q)>, variant: PascalVariant },
    /// μ_a on B_∞: p_i^(n) = a^{i-1}/(a+1)^{n+i-1}
    BinftyMuA { a: Q },
    /// ν_a on the band W_n = {k..k+n-1}
    SubdiagramNuA { a: Q, k: i64 },
    /// ν_p on the edge band B̄_k: p_i^(n+1) = p^{n+k-i}(1-p)^{i-k}
    PascalEdgeNuP { p: Q, k: i64 },
    /// the odometer measure on the single vertex i of B_IO
    OdometerBar { seq: OdometerSeq, i: i64 },
    /// explicit p-vectors; levels[j] belongs to level base+j
    Custom { levels: Vec<Vec<(VertexKey, Q)>> },
}

/// Named measure with string parameters, as read from JSON or command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub measure: String,
    #[serde(default)]
    pub a: Option<String>,
    #[serde(default)]
    pub p: Option<String>,
    /// comma-separated probability vector
    #[serde(default)]
    pub d: Option<String>,
    /// coordinates carrying d; defaults to 1..=len
    #[serde(default)]
    pub coords: Option<Vec<i64>>,
    /// "n", "z" or "k:<k>"
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub k: Option<i64>,
    #[serde(default)]
    pub seq: Option<String>,
    #[serde(default)]
    pub i: Option<i64>,
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec { path: "$".into(), message: e.to_string() })
    }

    pub fn build(&self) -> Result<TailInvariantMeasure> {
        let need_q = |v: &Option<String>, name: &str| -> Result<Q> {
            parse_rational(v.as_deref().ok_or_else(|| Error::invalid(format!("{} needs --{name}", self.measure)))?)
        };
        let need_k = || self.k.ok_or_else(|| Error::invalid(format!("{} needs --k", self.measure)));
        let kind = match self.measure.as_str() {
            "pascal-mu" => {
                let vals = parse_rational_list(self.d.as_deref().ok_or_else(|| Error::invalid("pascal-mu needs --d"))?)?;
                let coords = match &self.coords {
                    Some(c) if c.len() == vals.len() => c.clone(),
                    Some(_) => return Err(Error::invalid("coords and d differ in length")),
                    None => (1..=vals.len() as i64).collect(),
                };
                let variant = match self.variant.as_deref() {
                    None | Some("n") => PascalVariant::N,
                    Some("z") => PascalVariant::Z,
                    Some(v) => match v.strip_prefix("k:").and_then(|x| x.parse::<u32>().ok()) {
                        Some(k) => PascalVariant::K(k),
                        None => return Err(Error::invalid(format!("unknown Pascal variant {v:?}"))),
                    },
                };
                MeasureKind::PascalMu { d: coords.into_iter().zip(vals).collect(), variant }
            }
            "binfty-mu-a" | "mu-a" => MeasureKind::BinftyMuA { a: need_q(&self.a, "a")? },
            "nu-a" => MeasureKind::SubdiagramNuA { a: need_q(&self.a, "a")?, k: need_k()? },
            "nu-p" => MeasureKind::PascalEdgeNuP { p: need_q(&self.p, "p")?, k: need_k()? },
            "odometer" => MeasureKind::OdometerBar {
                seq: OdometerSeq::parse(self.seq.as_deref().ok_or_else(|| Error::invalid("odometer needs --seq"))?)?,
                i: self.i.unwrap_or(1),
            },
            other => return Err(Error::invalid(format!("unknown measure {other:?}"))),
        };
        TailInvariantMeasure::new(kind)
    }
}

#[derive(Clone, Debug)]
pub struct TailInvariantMeasure {
    pub kind: MeasureKind,
    pub diagram: Diagram,
    pub flags: Vec<String>,
    perturbation: Option<(usize, VertexKey, Q)>,
}

fn in_open_unit(x: &Q) -> bool {
    x.is_positive() && x < &Q::one()
}

impl TailInvariantMeasure {
    pub fn new(kind: MeasureKind) -> Result<Self> {
        Self::with_diagram(kind, None)
    }

    /// Custom measures need their diagram; the named families build their own.
    pub fn with_diagram(kind: MeasureKind, custom: Option<Diagram>) -> Result<Self> {
        let mut flags = Vec::new();
        let binfty = || build_diagram(Family::Binfty);
        let diagram = match &kind {
            MeasureKind::PascalMu { d, variant } => {
                limits::validate_probability(d)?;
                if d.iter().fold(Q::zero(), |a, (_, x)| a + x) != Q::one() {
                    return Err(Error::invalid("d must sum to 1"));
                }
                if d.iter().any(|(_, x)| x == &Q::one()) {
                    flags.push("d is a unit vector: μ_d is the point mass on a vertical path".into());
                }
                let fam = match variant {
                    PascalVariant::N => Family::PascalN,
                    PascalVariant::Z => Family::PascalZ,
                    PascalVariant::K(k) => Family::PascalK { k: *k },
                };
                let dg = build_diagram(fam)?;
                for (c, _) in d {
                    if !dg.in_level(1, &VertexKey::pascal(&[(*c, 1)])?) {
                        return Err(Error::invalid(format!("coordinate {c} is not available in this Pascal diagram")));
                    }
                }
                dg
            }
            MeasureKind::BinftyMuA { a } => {
                if !a.is_positive() {
                    return Err(Error::invalid("μ_a needs a > 0"));
                }
                binfty()?
            }
            MeasureKind::SubdiagramNuA { a, k } => {
                if !a.is_positive() || a > &Q::one() {
                    return Err(Error::invalid("ν_a needs 0 < a <= 1"));
                }
                if a == &Q::one() {
                    flags.push(
                        "a = 1: values are the a→1 limit of the closed form; the level sums Σ h p are reported by verify_probability"
                            .into(),
                    );
                }
                binfty()?.subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::Band { k: *k } })?
            }
            MeasureKind::PascalEdgeNuP { p, k } => {
                if !in_open_unit(p) {
                    return Err(Error::invalid("ν_p needs 0 < p < 1"));
                }
                binfty()?.subdiagram(&SubdiagramSpec::Edge { rule: EdgeRule::BinftyPascal { k: *k } })?
            }
            MeasureKind::OdometerBar { seq, i } => {
                if *i < 1 {
                    return Err(Error::invalid("odometer vertex must be >= 1"));
                }
                build_diagram(Family::OdometerIo { seq: seq.clone() })?
                    .subdiagram(&SubdiagramSpec::Vertex { rule: VertexRule::Fixed { vertices: vec![VertexKey::Index(*i)] } })?
            }
            MeasureKind::Custom { levels } => {
                let dg = custom.ok_or_else(|| Error::invalid("custom measure needs a diagram"))?;
                if levels.is_empty() {
                    return Err(Error::invalid("custom measure declares no levels"));
                }
                for lvl in levels {
                    if lvl.iter().any(|(_, x)| x.is_negative()) {
                        return Err(Error::invalid("negative measure value"));
                    }
                }
                dg
            }
        };
        Ok(TailInvariantMeasure { kind, diagram, flags, perturbation: None })
    }

    /// Adds `delta` to one value; used as a negative control for invariance checks.
    pub fn perturbed(mut self, level: usize, vertex: VertexKey, delta: Q) -> Self {
        self.perturbation = Some((level, vertex, delta));
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MeasureKind::PascalMu { .. } => "pascal-mu",
            MeasureKind::BinftyMuA { .. } => "binfty-mu",
            MeasureKind::SubdiagramNuA { .. } => "nu-a",
            MeasureKind::PascalEdgeNuP { .. } => "nu-p",
            MeasureKind::OdometerBar { .. } => "odometer-bar",
            MeasureKind::Custom { .. } => "custom",
        }
    }

    /// p^(n)_w, the measure of any cylinder ending at w; 0 outside the subdiagram.
    pub fn p(&self, n: usize, w: &VertexKey) -> Result<Q> {
        let base = self.diagram.base_level();
        if n < base {
            return Err(Error::invalid(format!("level {n} is below the base level {base}")));
        }
        let mut value = match &self.kind {
            MeasureKind::PascalMu { d, .. } => {
                if !self.diagram.in_level(n, w) {
                    return Err(Error::invalid(format!("{w} is not a vertex of level {n}")));
                }
                limits::pascal_weight(d, w)
            }
            MeasureKind::BinftyMuA { a } => {
                let i = w.index().filter(|&i| i >= 1).ok_or_else(|| Error::invalid(format!("bad B_∞ vertex {w}")))?;
                qpow(a, (i - 1) as u64) / qpow(&(a + Q::one()), (n as i64 + i - 1) as u64)
            }
            MeasureKind::SubdiagramNuA { a, k } => {
                if !self.diagram.in_level(n, w) {
                    Q::zero()
                } else {
                    nu_a_value(a, *k, n, w.index().unwrap())
                }
            }
            MeasureKind::PascalEdgeNuP { p, k } => {
                if !self.diagram.in_level(n, w) {
                    Q::zero()
                } else {
                    let i = w.index().unwrap();
                    let up = n as i64 - 1 + k - i;
                    qpow(p, up as u64) * qpow(&(Q::one() - p), (i - k) as u64)
                }
            }
            MeasureKind::OdometerBar { seq, i } => {
                if w.index() != Some(*i) {
                    Q::zero()
                } else {
                    let denom = (0..n).fold(BigUint::one(), |acc, j| acc * seq.a(j, *i));
                    Q::one() / qn(&denom)
                }
            }
            MeasureKind::Custom { levels } => {
                let lvl = levels.get(n - base).ok_or_else(|| {
                    Error::truncation(format!("custom measure has no values for level {n}"), vec![w.to_string()])
                })?;
                lvl.iter().find(|(v, _)| v == w).map(|(_, x)| x.clone()).unwrap_or_else(Q::zero)
            }
        };
        if let Some((l, v, delta)) = &self.perturbation {
            if *l == n && v == w {
                value += delta;
            }
        }
        Ok(value)
    }

    pub fn cylinder_mass(&self, n: usize, w: &VertexKey) -> Result<Q> {
        self.p(n, w)
    }

    /// q^(n)_w = H^(n)_w p^(n)_w with the heights of the measure's own diagram.
    pub fn tower_mass(&self, n: usize, w: &VertexKey) -> Result<Q> {
        let p = self.p(n, w)?;
        if p.is_zero() {
            return Ok(p);
        }
        let h = linalg::heights(&self.diagram, n, std::slice::from_ref(w))?;
        Ok(p * qn(&h.values[0].height))
    }

    /// Mass of the successors of w beyond the bound, when a closed form is known.
    pub(crate) fn successor_tail(&self, n: usize, w: &VertexKey, bound: u64) -> Option<Q> {
        match &self.kind {
            MeasureKind::BinftyMuA { a } => {
                // Σ_{i > bound} p_i^(n+1) = (a+1) p_{bound+1}^(n+1)
                let i = w.index()?;
                let first = (bound as i64 + 1).max(i);
                let p = qpow(a, (first - 1) as u64) / qpow(&(a + Q::one()), (n as i64 + first) as u64);
                Some((a + Q::one()) * p)
            }
            MeasureKind::PascalMu { d, .. } => {
                let coords = self.diagram.pascal_coords(bound);
                if d.iter().all(|(c, x)| x.is_zero() || coords.contains(c)) {
                    Some(Q::zero())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Checks p^(n)_w = Σ_v f′_vw p^(n+1)_v on every window vertex of levels n < n_max.
    pub fn verify_invariance(&self, n_max: usize, bound: u64) -> Result<InvarianceReport> {
        let base = self.diagram.base_level();
        let mut levels = Vec::new();
        for n in base..n_max {
            let window = self.diagram.window(n, bound)?;
            let checks: Vec<VertexCheck> = window
                .vertices
                .par_iter()
                .map(|w| self.check_vertex(n, w, bound))
                .collect::<Result<_>>()?;
            levels.push(LevelCheck { level: n, checks });
        }
        let count = |s: CheckStatus| levels.iter().flat_map(|l| &l.checks).filter(|c| c.status == s).count();
        let (passed, failed, skipped) = (count(CheckStatus::Pass), count(CheckStatus::Fail), count(CheckStatus::Skipped));
        Ok(InvarianceReport { measure: self.name().into(), n_max, bound, passed, failed, skipped, all_pass: failed == 0 && skipped == 0, levels })
    }

    fn check_vertex(&self, n: usize, w: &VertexKey, bound: u64) -> Result<VertexCheck> {
        let (succ, complete) = match self.diagram.successors(n, w, bound) {
            Ok(s) => s,
            Err(e) if e.is_truncation() => {
                return Ok(VertexCheck { vertex: w.clone(), status: CheckStatus::Skipped, lhs: None, rhs: None })
            }
            Err(e) => return Err(e),
        };
        let mut sum = Q::zero();
        for (v, m) in &succ {
            sum += qn(m) * self.p(n + 1, v)?;
        }
        if !complete {
            match self.successor_tail(n, w, bound) {
                Some(t) => sum += t,
                None => return Ok(VertexCheck { vertex: w.clone(), status: CheckStatus::Skipped, lhs: None, rhs: None }),
            }
        }
        let lhs = self.p(n, w)?;
        let status = if lhs == sum { CheckStatus::Pass } else { CheckStatus::Fail };
        Ok(VertexCheck { vertex: w.clone(), status, lhs: Some(lhs), rhs: Some(sum) })
    }

    /// Σ_w H^(n)_w p^(n)_w over the window plus an analytic tail when one is known.
    pub fn verify_probability(&self, n: usize, bound: u64, epsilon: Option<Q>) -> Result<ProbabilityReport> {
        let window = self.diagram.window(n, bound)?;
        let h = linalg::heights(&self.diagram, n, &window.vertices)?;
        let mut window_sum = Q::zero();
        for e in &h.values {
            window_sum += self.p(n, &e.vertex)? * qn(&e.height);
        }
        let tail = match &self.kind {
            MeasureKind::BinftyMuA { a } => Some(limits::binfty_q_tail(a, n, bound)),
            MeasureKind::PascalMu { .. } => self.successor_tail(n, &VertexKey::root(), bound),
            // the subdiagram windows are the full finite levels
            MeasureKind::SubdiagramNuA { .. } | MeasureKind::PascalEdgeNuP { .. } | MeasureKind::OdometerBar { .. } => {
                Some(Q::zero())
            }
            MeasureKind::Custom { .. } => {
                if matches!(self.diagram.family(), Family::Custom(_)) {
                    Some(Q::zero())
                } else {
                    None
                }
            }
        };
        let (status, total) = match &tail {
            Some(t) => {
                let total = &window_sum + t;
                (if total == Q::one() { ProbabilityStatus::Exact } else { ProbabilityStatus::NotOne }, Some(total))
            }
            None => match epsilon {
                Some(eps) if window_sum >= Q::one() - &eps && window_sum <= Q::one() => (ProbabilityStatus::Bounded, None),
                _ => (ProbabilityStatus::Inconclusive, None),
            },
        };
        Ok(ProbabilityReport { level: n, window_sum, tail, total, status })
    }
}

/// ν_a value at vertex j of level n: a^{j-k}/(1+a)^{n+j-k} · (1 - a^{n+k-j+1})/(1 - a).
pub fn nu_a_value(a: &Q, k: i64, n: usize, j: i64) -> Q {
    let n = n as i64;
    let geometric = if a == &Q::one() {
        qi(n + k - j + 1)
    } else {
        (Q::one() - qpow(a, (n + k - j + 1) as u64)) / (Q::one() - a)
    };
    qpow(a, (j - k) as u64) / qpow(&(a + Q::one()), (n + j - k) as u64) * geometric
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexCheck {
    pub vertex: VertexKey,
    pub status: CheckStatus,
    #[serde(with = "num::qopt")]
    pub lhs: Option<Q>,
    #[serde(with = "num::qopt")]
    pub rhs: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub level: usize,
    pub checks: Vec<VertexCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub measure: String,
    pub n_max: usize,
    pub bound: u64,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub all_pass: bool,
    pub levels: Vec<LevelCheck>,
}

impl InvarianceReport {
    pub fn failures(&self) -> Vec<(usize, VertexKey)> {
        self.levels
            .iter()
            .flat_map(|l| l.checks.iter().filter(|c| c.status == CheckStatus::Fail).map(move |c| (l.level, c.vertex.clone())))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityStatus {
    /// window sum plus exact tail equals 1
    Exact,
    /// window sum within the declared ε of 1, tail unknown
    Bounded,
    /// exact total computed and it differs from 1
    NotOne,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    pub level: usize,
    #[serde(with = "num::qser")]
    pub window_sum: Q,
    #[serde(with = "num::qopt")]
    pub tail: Option<Q>,
    #[serde(with = "num::qopt")]
    pub total: Option<Q>,
    pub status: ProbabilityStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTable {
    #[serde(with = "num::qvec")]
    pub base: Vec<Q>,
    /// rows[k][i] = [Δ^k c]_{i+1}
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub order: usize,
    #[serde(with = "num::qvec")]
    pub values: Vec<Q>,
}

impl DifferenceTable {
    pub fn get(&self, k: usize, i: usize) -> Option<&Q> {
        self.rows.get(k).and_then(|r| r.values.get(i - 1))
    }
}

/// [Δ^{k+1}c]_i = [Δ^k c]_i - [Δ^k c]_{i+1}, for k ≤ order.
pub fn difference_table(c: &[Q], order: usize) -> Result<DifferenceTable> {
    if c.len() < order + 1 {
        return Err(Error::invalid("sequence shorter than order + 1"));
    }
    let mut rows = vec![TableRow { order: 0, values: c.to_vec() }];
    for k in 1..=order {
        let prev = &rows[k - 1].values;
        let next: Vec<Q> = prev.windows(2).map(|w| &w[0] - &w[1]).collect();
        rows.push(TableRow { order: k, values: next });
    }
    Ok(DifferenceTable { base: c.to_vec(), rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub monotone: bool,
    pub order: usize,
    /// (k, i) with [Δ^k c]_i ≤ 0, i counted from 1
    pub witness: Option<(usize, usize)>,
}

/// Strict positivity of every entry of the difference table up to `order`.
pub fn is_completely_monotonic(c: &[Q], order: usize) -> Result<MonotonicityVerdict> {
    let t = difference_table(c, order)?;
    for row in &t.rows {
        if let Some(i) = row.values.iter().position(|x| !x.is_positive()) {
            return Ok(MonotonicityVerdict { monotone: false, order, witness: Some((row.order, i + 1)) });
        }
    }
    Ok(MonotonicityVerdict { monotone: true, order, witness: None })
}

/// p_n = a^{n-1}/(1+a)^{2n-2}, n = 1..len.
pub fn nu_a_sequence(a: &Q, len: usize) -> Vec<Q> {
    let x = a / qpow(&(a + Q::one()), 2);
    (0..len as u64).map(|e| qpow(&x, e)).collect()
}

/// [Δ^l p]_n = a^{n-1}(1+a+a²)^l/(1+a)^{2n+2l-2}.
pub fn nu_a_difference_closed(a: &Q, l: usize, n: usize) -> Q {
    let a1 = a + Q::one();
    let c = Q::one() + a + a * a;
    qpow(a, (n - 1) as u64) * qpow(&c, l as u64) / qpow(&a1, (2 * n + 2 * l - 2) as u64)
}

/// Moments ∫ t^n dθ_a of the atomic measure θ_a = (1+a)²/a · δ_{a/(1+a)²}.
pub fn atomic_moment(a: &Q, n: usize) -> Q {
    let a1 = a + Q::one();
    let x = a / (&a1 * &a1);
    (&a1 * &a1) / a * qpow(&x, n as u64)
}

/// p^(1)_j = a^{j-1}/(a+1)^j, j = 1..len.
pub fn mu_a_first_level(a: &Q, len: usize) -> Vec<Q> {
    let a1 = a + Q::one();
    (1..=len as u64).map(|j| qpow(a, j - 1) / qpow(&a1, j)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateStat {
    pub coord: i64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub seed: u64,
    pub depth: usize,
    pub count: usize,
    pub stats: Vec<CoordinateStat>,
    /// empirical distribution of the endpoint s^(depth), most frequent first
    pub endpoints: Vec<(VertexKey, u64)>,
    pub precision_bits: u32,
}

const CHUNK: usize = 512;

/// Samples `count` paths of μ_d up to `depth`: each step adds e_i with probability d_i.
/// Chunk j draws from ChaCha8 seeded with `seed` on stream j, so results do not depend
/// on the thread count.
pub fn sample_paths(d: &[(i64, Q)], depth: usize, count: usize, seed: u64) -> Result<SampleReport> {
    limits::validate_probability(d)?;
    if depth == 0 || count == 0 {
        return Err(Error::invalid("depth and count must be >= 1"));
    }
    if d.iter().fold(Q::zero(), |a, (_, x)| a + x) != Q::one() {
        return Err(Error::invalid("d must sum to 1"));
    }
    let coords: Vec<i64> = d.iter().map(|p| p.0).collect();
    let mut cumulative = Vec::with_capacity(d.len());
    let mut acc = Q::zero();
    for (_, x) in d {
        acc += x;
        cumulative.push(num::to_f64(&acc));
    }
    let chunks = count.div_ceil(CHUNK);
    let per_chunk: Vec<(Vec<u64>, Vec<u128>, HashMap<Vec<u32>, u64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let paths = CHUNK.min(count - c * CHUNK);
            let mut sums = vec![0u64; coords.len()];
            let mut squares = vec![0u128; coords.len()];
            let mut ends: HashMap<Vec<u32>, u64> = HashMap::new();
            for _ in 0..paths {
                let mut s = vec![0u32; coords.len()];
                for _ in 0..depth {
                    let u: f64 = rng.gen();
                    let idx = cumulative.iter().position(|&t| u < t).unwrap_or(coords.len() - 1);
                    s[idx] += 1;
                }
                for (i, &v) in s.iter().enumerate() {
                    sums[i] += v as u64;
                    squares[i] += (v as u128) * (v as u128);
                }
                *ends.entry(s).or_default() += 1;
            }
            (sums, squares, ends)
        })
        .collect();
    let mut sums = vec![0u64; coords.len()];
    let mut squares = vec![0u128; coords.len()];
    let mut ends: HashMap<Vec<u32>, u64> = HashMap::new();
    for (s, sq, e) in per_chunk {
        for i in 0..coords.len() {
            sums[i] += s[i];
            squares[i] += sq[i];
        }
        for (k, v) in e {
            *ends.entry(k).or_default() += v;
        }
    }
    let nf = count as f64;
    let df = depth as f64;
    let stats = coords
        .iter()
        .enumerate()
        .map(|(i, &coord)| {
            let mean_s = sums[i] as f64 / nf;
            let var_s = if count > 1 { (squares[i] as f64 - nf * mean_s * mean_s) / (nf - 1.0) } else { 0.0 };
            CoordinateStat { coord, mean: mean_s / df, stderr: (var_s.max(0.0) / nf).sqrt() / df }
        })
        .collect();
    let mut endpoints: Vec<(VertexKey, u64)> = ends
        .into_iter()
        .map(|(s, c)| {
            let pairs: Vec<(i64, u32)> = coords.iter().zip(&s).map(|(&c, &m)| (c, m)).collect();
            (VertexKey::pascal(&pairs).unwrap(), c)
        })
        .collect();
    endpoints.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(SampleReport { seed, depth, count, stats, endpoints, precision_bits: 53 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    fn mu_d(d: &[(i64, Q)]) -> TailInvariantMeasure {
        TailInvariantMeasure::new(MeasureKind::PascalMu { d: d.to_vec(), variant: PascalVariant::N }).unwrap()
    }

    #[test]
    fn cylinder_examples() {
        let m = mu_d(&[(1, q(1, 2)), (2, q(1, 2))]);
        assert_eq!(m.cylinder_mass(2, &VertexKey::pascal(&[(1, 1), (2, 1)]).unwrap()).unwrap(), q(1, 4));
        let mu = TailInvariantMeasure::new(MeasureKind::BinftyMuA { a: qi(1) }).unwrap();
        assert_eq!(mu.cylinder_mass(2, &VertexKey::Index(1)).unwrap(), q(1, 4));
        assert_eq!(mu.tower_mass(2, &VertexKey::Index(2)).unwrap(), q(1, 4));
        let nu = TailInvariantMeasure::new(MeasureKind::PascalEdgeNuP { p: q(1, 2), k: 4 }).unwrap();
        assert_eq!(nu.cylinder_mass(2, &VertexKey::Index(5)).unwrap(), q(1, 2));
        let nua = TailInvariantMeasure::new(MeasureKind::SubdiagramNuA { a: q(1, 2), k: 1 }).unwrap();
        assert_eq!(nua.tower_mass(1, &VertexKey::Index(1)).unwrap(), qi(1));
        let pm = mu_d(&[(1, q(1, 3)), (3, q(2, 3))]);
        assert_eq!(pm.tower_mass(1, &VertexKey::pascal(&[(3, 1)]).unwrap()).unwrap(), q(2, 3));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(TailInvariantMeasure::new(MeasureKind::BinftyMuA { a: qi(0) }).is_err());
        assert!(TailInvariantMeasure::new(MeasureKind::PascalEdgeNuP { p: qi(1), k: 1 }).is_err());
        assert!(TailInvariantMeasure::new(MeasureKind::SubdiagramNuA { a: qi(2), k: 1 }).is_err());
        assert!(TailInvariantMeasure::new(MeasureKind::PascalMu { d: vec![(1, q(1, 2))], variant: PascalVariant::N }).is_err());
    }

    #[test]
    fn invariance_and_negative_control() {
        let m = mu_d(&[(1, q(1, 3)), (2, q(2, 3))]);
        let rep = m.verify_invariance(6, 2).unwrap();
        assert!(rep.all_pass, "{:?}", rep.failures());
        let mu = TailInvariantMeasure::new(MeasureKind::BinftyMuA { a: qi(2) }).unwrap();
        assert!(mu.verify_invariance(6, 12).unwrap().all_pass);
        let bad = mu.clone().perturbed(3, VertexKey::Index(4), q(1, 1000));
        let rep = bad.verify_invariance(6, 12).unwrap();
        assert!(!rep.all_pass);
        // the perturbed value shows up as its own level and as a successor of level 2
        assert!(rep.failures().contains(&(3, VertexKey::Index(4))));
        let narrow = mu_d(&[(1, q(1, 3)), (5, q(2, 3))]).verify_invariance(3, 2).unwrap();
        assert!(narrow.skipped > 0 && !narrow.all_pass);
    }

    #[test]
    fn probability_examples() {
        let m = mu_d(&[(1, q(1, 2)), (2, q(1, 2))]);
        assert_eq!(m.verify_probability(3, 2, None).unwrap().status, ProbabilityStatus::Exact);
        let mu = TailInvariantMeasure::new(MeasureKind::BinftyMuA { a: qi(1) }).unwrap();
        let r = mu.verify_probability(2, 5, None).unwrap();
        assert_eq!(r.total, Some(qi(1)));
        let m3 = mu_d(&[(1, q(1, 5)), (2, q(1, 5)), (3, q(3, 5))]);
        assert_eq!(m3.verify_probability(5, 3, None).unwrap().status, ProbabilityStatus::Exact);
    }

    #[test]
    fn difference_examples() {
        let p = nu_a_sequence(&q(1, 2), 4);
        let t = difference_table(&p, 2).unwrap();
        assert_eq!(t.get(1, 1).unwrap(), &q(7, 9));
        let v = is_completely_monotonic(&[qi(1), qi(2), qi(1)], 2).unwrap();
        assert_eq!(v.witness, Some((1, 1)));
        let mu = mu_a_first_level(&qi(1), 12);
        assert!(is_completely_monotonic(&mu, 6).unwrap().monotone);
        let long = nu_a_sequence(&q(1, 2), 8);
        for n in 1..=8 {
            assert_eq!(long[n - 1], atomic_moment(&q(1, 2), n));
        }
    }

    #[test]
    fn sampling_deterministic() {
        let d = vec![(1, qi(1)), (2, qi(0))];
        let r = sample_paths(&d, 20, 100, 7).unwrap();
        assert_eq!(r.stats[0].mean, 1.0);
        let d = vec![(1, q(3, 10)), (2, q(7, 10))];
        let a = sample_paths(&d, 50, 2000, 11).unwrap();
        let b = sample_paths(&d, 50, 2000, 11).unwrap();
        assert_eq!(a, b);
    }
}
