//! Command-line front end. `run` returns the process exit code.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagram::{Diagram, Family, OdometerSeq, SubdiagramSpec, Truncation, VertexKey};
use crate::error::{Error, Result};
use crate::extension::{self, ClosedFormCase};
use crate::limits::{self, VertexSequence};
use crate::linalg;
use crate::measures::{self, MeasureSpec};
use crate::num::{parse_rational, parse_rational_list, Q};
use crate::vershik::{self, OrderSpec, OrderedDiagram, PathRep};

#[derive(Parser, Debug)]
#[command(name = "bratteli", version, about = "Exact computations on generalized Bratteli diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// binfty, pascal-n, pascal-z, pascal-k, bounded-finite, bounded-generalized, odometer-io
    #[arg(long)]
    pub family: Option<String>,
    /// JSON diagram spec
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// family parameter k (pascal-k, bounded-*)
    #[arg(long = "fk")]
    pub family_k: Option<u32>,
    /// odometer sequence for odometer-io, e.g. const:2
    #[arg(long = "odometer")]
    pub odometer: Option<String>,
    /// subdiagram: band:k, fixed:i, coords:a,b, edge-band:k
    #[arg(long)]
    pub sub: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub level: usize,
    #[arg(long, default_value_t = 16)]
    pub window: u64,
    #[arg(long = "m-max", default_value_t = 200)]
    pub m_max: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 128)]
    pub precision: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MeasureArgs {
    /// pascal-mu, binfty-mu-a, nu-a, nu-p, odometer
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub coords: Option<Vec<i64>>,
    /// Pascal variant: n, z or k:<k>
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub k: Option<i64>,
    /// odometer sequence, e.g. geometric:2
    #[arg(long)]
    pub seq: Option<String>,
    #[arg(long)]
    pub i: Option<i64>,
}

impl MeasureArgs {
    fn spec(&self) -> Result<MeasureSpec> {
        Ok(MeasureSpec {
            measure: self.measure.clone().ok_or_else(|| Error::invalid("--measure is required"))?,
            a: self.a.clone(),
            p: self.p.clone(),
            d: self.d.clone(),
            coords: self.coords.clone(),
            variant: self.variant.clone(),
            k: self.k,
            seq: self.seq.clone(),
            i: self.i,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct PathArgs {
    /// vertex order: natural-pascal, left-to-right, alternating, cyclic-binfty, custom:...
    #[arg(long, default_value = "left-to-right")]
    pub order: String,
    /// JSON file with a path {start, edges, tail}
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// inline JSON path
    #[arg(long = "path-json")]
    pub path_json: Option<String>,
    /// vertical path through this vertex (index families) or coordinate (Pascal)
    #[arg(long)]
    pub vertical: Option<i64>,
    /// prefix depth used with --vertical
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Heights H_v^(n) on the level window
    Heights {
        #[command(flatten)]
        common: Common,
    },
    /// Stochastic matrix F_n for the rows of the level n+1 window
    Stochastic {
        #[command(flatten)]
        common: Common,
    },
    /// Path counts G′^(n,m) and stochastic products G^(n,m)
    Product {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Limit of normalized rows along a vertex sequence
    Limits {
        #[command(flatten)]
        common: Common,
        /// const:v, linear:alpha,beta or pascal:d1,d2,...
        #[arg(long)]
        sequence: String,
    },
    /// Measure values p^(n) and tower masses on the level window
    Measure {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        measure: MeasureArgs,
    },
    /// Exact invariance check of a measure
    Invariance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 6)]
        levels: usize,
    },
    /// Total mass of a level
    Probability {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Extension of a measure from a subdiagram
    Extension {
        #[command(flatten)]
        common: Common,
        /// mu-a-pascal-edge, nu-a-band, nu-p-edge, odometer
        #[arg(long)]
        case: String,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        k: Option<i64>,
        #[arg(long)]
        seq: Option<String>,
        #[arg(long)]
        i: Option<i64>,
        #[arg(long, default_value_t = 40)]
        terms: usize,
    },
    /// Difference table and complete monotonicity
    Monotone {
        #[command(flatten)]
        common: Common,
        /// ν_a sequence parameter; or give --values
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        values: Option<String>,
        #[arg(long, default_value_t = 12)]
        len: usize,
        #[arg(long, default_value_t = 5)]
        order: usize,
    },
    /// Monte Carlo paths of μ_d
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: String,
        #[arg(long, default_value_t = 500)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
    /// One Vershik step, its inverse, or an exhaustive bijection check
    Vershik {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        path: PathArgs,
        #[arg(long)]
        inverse: bool,
        /// run the exhaustive check at this depth instead of stepping a path
        #[arg(long = "bijection-depth")]
        bijection_depth: Option<usize>,
    },
    /// Extremal class of a path, with Succ/Pred sets
    Classify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        path: PathArgs,
        #[arg(long = "succ-pred")]
        succ_pred: bool,
    },
    /// Iterated Vershik steps with cylinder visit counts
    Orbit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        path: PathArgs,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long = "cylinder-level")]
        cylinder_level: Option<usize>,
    },
    /// Weighted row norms of F_n over a rank range
    Continuity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        lo: u64,
        #[arg(long, default_value_t = 200)]
        hi: u64,
        /// Pascal base vertex as coord:mult pairs, e.g. 1:1,2:1
        #[arg(long)]
        base: Option<String>,
    },
    /// K_0^(m)/(2k+1)^m decay
    BkDecay {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
}

/// Rendered result: JSON plus an optional table for CSV output.
struct Output {
    json: Value,
    table: Option<(Vec<String>, Vec<Vec<String>>)>,
}

fn to_json<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::invalid(format!("serialization failed: {e}")))
}

fn family_from(common: &Common) -> Result<Family> {
    let name = common.family.as_deref().ok_or_else(|| Error::invalid("give --family or --spec"))?;
    let k = || common.family_k.ok_or_else(|| Error::invalid(format!("{name} needs --fk")));
    Ok(match name {
        "binfty" => Family::Binfty,
        "pascal-n" => Family::PascalN,
        "pascal-z" => Family::PascalZ,
        "pascal-k" => Family::PascalK { k: k()? },
        "bounded-finite" => Family::BoundedFinite { k: k()? },
        "bounded-generalized" => Family::BoundedGeneralized { k: k()? },
        "odometer-io" => Family::OdometerIo {
            seq: OdometerSeq::parse(common.odometer.as_deref().ok_or_else(|| Error::invalid("odometer-io needs --odometer"))?)?,
        },
        other => return Err(Error::invalid(format!("unknown family {other:?}"))),
    })
}

fn diagram_from(common: &Common) -> Result<Diagram> {
    let mut d = match &common.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Spec { path: path.display().to_string(), message: e.to_string() })?;
            Diagram::from_json(&text)?
        }
        None => Diagram::new(family_from(common)?, Truncation { bound: common.window, seed: None })?,
    };
    if let Some(s) = &common.sub {
        d = d.subdiagram(&SubdiagramSpec::parse(s)?)?;
    }
    Ok(d)
}

fn read_path(p: &PathArgs, od: &OrderedDiagram) -> Result<PathRep> {
    let text = match (&p.path, &p.path_json) {
        (Some(f), _) => {
            Some(std::fs::read_to_string(f).map_err(|e| Error::Spec { path: f.display().to_string(), message: e.to_string() })?)
        }
        (None, Some(s)) => Some(s.clone()),
        _ => None,
    };
    if let Some(t) = text {
        return serde_json::from_str(&t).map_err(|e| Error::Spec { path: "$.path".into(), message: e.to_string() });
    }
    match p.vertical {
        Some(i) if od.diagram.family().is_pascal() => od.materialize(&vershik::pascal_vertical(i), p.depth),
        Some(i) => vershik::vertical_path(od, i, p.depth),
        None => Err(Error::invalid("give --path, --path-json or --vertical")),
    }
}

fn ordered(common: &Common, p: &PathArgs) -> Result<OrderedDiagram> {
    OrderedDiagram::new(diagram_from(common)?, OrderSpec::parse(&p.order)?)
}

fn execute(cmd: &Command) -> Result<(Output, &Common)> {
    let out = match cmd {
        Command::Heights { common } => {
            let d = diagram_from(common)?;
            let h = linalg::heights_window(&d, common.level, common.window)?;
            let rows = h.values.iter().map(|e| vec![e.vertex.to_string(), e.height.to_string()]).collect();
            (Output { json: to_json(&h)?, table: Some((vec!["vertex".into(), "height".into()], rows)) }, common)
        }
        Command::Stochastic { common } => {
            let d = diagram_from(common)?;
            let rows = d.window(common.level + 1, common.window)?.vertices;
            let f = linalg::stochastic_matrix(&d, common.level, &rows)?;
            (Output { table: Some(matrix_table(&f)), json: to_json(&f)? }, common)
        }
        Command::Product { common, m } => {
            let d = diagram_from(common)?;
            let rows = d.window(common.level + m, common.window)?.vertices;
            let (g_counts, g) = linalg::product_matrices(&d, common.level, *m, &rows)?;
            let json = json!({ "counts": to_json(&g_counts)?, "stochastic": to_json(&g)? });
            (Output { table: Some(matrix_table(&g)), json }, common)
        }
        Command::Limits { common, sequence } => {
            let d = diagram_from(common)?;
            let seq = VertexSequence::parse(sequence)?;
            let r = limits::limit_along(&d, common.level, &seq, common.m_max, common.tol, common.window, Some(common.precision))?;
            let mut json = to_json(&r)?;
            json["precision_bits"] = json!(common.precision);
            (Output { json, table: None }, common)
        }
        Command::Measure { common, measure } => {
            let mu = measure.spec()?.build()?;
            let n = common.level.max(mu.diagram.base_level());
            let w = mu.diagram.window(n, common.window)?;
            let mut rows = Vec::new();
            let mut entries = Vec::new();
            for v in &w.vertices {
                let p = mu.p(n, v)?;
                let t = mu.tower_mass(n, v)?;
                rows.push(vec![v.to_string(), p.to_string(), t.to_string()]);
                entries.push(json!({ "vertex": v, "p": p.to_string(), "tower": t.to_string() }));
            }
            let json = json!({ "measure": mu.name(), "level": n, "flags": mu.flags, "values": entries });
            (Output { json, table: Some((vec!["vertex".into(), "p".into(), "tower".into()], rows)) }, common)
        }
        Command::Invariance { common, measure, levels } => {
            let mu = measure.spec()?.build()?;
            let r = mu.verify_invariance(*levels, common.window)?;
            (Output { json: to_json(&r)?, table: None }, common)
        }
        Command::Probability { common, measure, epsilon } => {
            let mu = measure.spec()?.build()?;
            let eps = epsilon.as_deref().map(parse_rational).transpose()?;
            let n = common.level.max(mu.diagram.base_level());
            let r = mu.verify_probability(n, common.window, eps)?;
            (Output { json: to_json(&r)?, table: None }, common)
        }
        Command::Extension { common, case, a, p, k, seq, i, terms } => {
            let aq = a.as_deref().map(parse_rational).transpose()?;
            let json = match case.as_str() {
                "mu-a-pascal-edge" => {
                    let c: ClosedFormCase = extension::parse_case(case, aq, *k)?;
                    to_json(&extension::closed_form_extension(&c, *terms)?)?
                }
                _ => {
                    let spec = match case.as_str() {
                        "nu-a-band" => MeasureSpec { measure: "nu-a".into(), a: a.clone(), k: *k, ..Default::default() },
                        "nu-p-edge" => MeasureSpec { measure: "nu-p".into(), p: p.clone(), k: *k, ..Default::default() },
                        "odometer" => MeasureSpec { measure: "odometer".into(), seq: seq.clone(), i: *i, ..Default::default() },
                        other => return Err(Error::invalid(format!("unknown extension case {other:?}"))),
                    };
                    to_json(&extension::extension_series(&spec.build()?, *terms)?)?
                }
            };
            (Output { json, table: None }, common)
        }
        Command::Monotone { common, a, values, len, order } => {
            let seq: Vec<Q> = match (a, values) {
                (_, Some(v)) => parse_rational_list(v)?,
                (Some(a), None) => measures::nu_a_sequence(&parse_rational(a)?, *len),
                _ => return Err(Error::invalid("give --a or --values")),
            };
            let table = measures::difference_table(&seq, *order)?;
            let verdict = measures::is_completely_monotonic(&seq, *order)?;
            let rows = table
                .rows
                .iter()
                .map(|r| std::iter::once(r.order.to_string()).chain(r.values.iter().map(|x| x.to_string())).collect())
                .collect();
            let header = std::iter::once("order".to_string()).chain((1..=seq.len()).map(|i| format!("c{i}"))).collect();
            let json = json!({ "table": to_json(&table)?, "verdict": to_json(&verdict)? });
            (Output { json, table: Some((header, rows)) }, common)
        }
        Command::Sample { common, d, depth, count } => {
            let vals = parse_rational_list(d)?;
            let dv: Vec<(i64, Q)> = (1..).zip(vals).collect();
            let r = measures::sample_paths(&dv, *depth, *count, common.seed)?;
            let rows = r.stats.iter().map(|s| vec![s.coord.to_string(), s.mean.to_string(), s.stderr.to_string()]).collect();
            (Output { json: to_json(&r)?, table: Some((vec!["coord".into(), "mean".into(), "stderr".into()], rows)) }, common)
        }
        Command::Vershik { common, path, inverse, bijection_depth } => {
            let od = ordered(common, path)?;
            let json = match bijection_depth {
                Some(depth) => to_json(&vershik::bijection_check(&od, *depth, common.window)?)?,
                None => {
                    let x = read_path(path, &od)?;
                    let y = if *inverse { od.vershik_step_inverse(&x)? } else { od.vershik_step(&x)? };
                    to_json(&y)?
                }
            };
            (Output { json, table: None }, common)
        }
        Command::Classify { common, path, succ_pred } => {
            let od = ordered(common, path)?;
            let x = read_path(path, &od)?;
            let json = if *succ_pred {
                to_json(&vershik::succ_pred(&od, &x)?)?
            } else {
                to_json(&vershik::classify_extremal(&od, &x)?)?
            };
            (Output { json, table: None }, common)
        }
        Command::Orbit { common, path, steps, cylinder_level } => {
            let od = ordered(common, path)?;
            let x = read_path(path, &od)?;
            let r = vershik::orbit(&od, &x, *steps, *cylinder_level)?;
            let rows = r.visits.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
            (Output { json: to_json(&r)?, table: Some((vec!["cylinder".into(), "visits".into()], rows)) }, common)
        }
        Command::Continuity { common, lo, hi, base } => {
            let d = diagram_from(common)?;
            let rows = match base {
                Some(b) => {
                    let s = parse_support(b)?;
                    let coords: Vec<i64> = match d.family() {
                        Family::PascalZ => (-(*hi as i64)..=*hi as i64).collect(),
                        _ => (1..=*hi as i64).collect(),
                    };
                    linalg::pascal_probe_rows(&d, &s, &coords)?
                }
                None => linalg::index_probe_rows(&d, common.level, *lo, *hi)?,
            };
            let r = linalg::continuity_probe(&rows, *lo, u64::MAX)?;
            let table = r.norms.iter().map(|s| vec![s.rank.to_string(), s.norm.to_string()]).collect();
            (Output { json: to_json(&r)?, table: Some((vec!["rank".into(), "norm".into()], table)) }, common)
        }
        Command::BkDecay { common, k } => {
            let r = extension::bk_decay_probe(*k, common.m_max)?;
            let rows = r.samples.iter().map(|s| vec![s.m.to_string(), s.ratio.to_string(), s.approx.to_string()]).collect();
            (Output { json: to_json(&r)?, table: Some((vec!["m".into(), "ratio".into(), "approx".into()], rows)) }, common)
        }
    };
    Ok(out)
}

fn parse_support(s: &str) -> Result<VertexKey> {
    let pairs = s
        .split(',')
        .map(|p| {
            let (c, m) = p.split_once(':').ok_or_else(|| Error::invalid(format!("bad support entry {p:?}")))?;
            let c = c.trim().parse::<i64>().map_err(|_| Error::invalid(format!("bad coordinate {c:?}")))?;
            let m = m.trim().parse::<u32>().map_err(|_| Error::invalid(format!("bad multiplicity {m:?}")))?;
            Ok((c, m))
        })
        .collect::<Result<Vec<_>>>()?;
    VertexKey::pascal(&pairs)
}

fn matrix_table(f: &linalg::SparseRowMatrix) -> (Vec<String>, Vec<Vec<String>>) {
    let rows = f
        .rows
        .iter()
        .flat_map(|r| r.entries.iter().map(move |e| vec![r.vertex.to_string(), e.vertex.to_string(), e.value.to_string()]))
        .collect();
    (vec!["row".into(), "column".into(), "value".into()], rows)
}

fn render(out: &Output, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).map_err(|e| Error::invalid(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let (header, rows) = out.table.as_ref().ok_or_else(|| Error::Unsupported("this command has no CSV form".into()))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).map_err(|e| Error::invalid(e.to_string()))?;
            for r in rows {
                w.write_record(r).map_err(|e| Error::invalid(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?).map_err(|e| Error::invalid(e.to_string()))
        }
    }
}

/// Exit code for an error: 2 for truncation, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_truncation() {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name), runs the command and writes the result.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = execute(&cli.command).and_then(|(out, common)| {
        let text = render(&out, common.format)?;
        match &common.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Error::invalid(format!("cannot write {}: {e}", p.display()))),
            None => stdout.write_all(text.as_bytes()).map_err(|e| Error::invalid(e.to_string())),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.kind());
            exit_code(&e)
        }
    }
}
