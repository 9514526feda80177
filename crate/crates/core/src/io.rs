//! JSON schemas for instances, states and reports, plus the canonical writer.
//!
//! Qubits are 1-based in files. Matrices are row-major arrays of `[re, im]`
//! pairs. Malformed input is reported as [`Error::Schema`] with the line and
//! column where parsing stopped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonianInstance;
use crate::linalg::{HermitianMatrix, Matrix};
use crate::marginal::{AlphaVector, ConsistencyInstance, ConsistencyPrimeInstance};
use crate::pauli::{local_pauli_set, Layout, PauliString};
use crate::state::{sort_subset_operator, validate_density, DensityMatrix, DEFAULT_DENSITY_TOL};

/// A square complex matrix as it appears in a file.
struct JsonMatrix(Matrix);

impl<'de> Deserialize<'de> for JsonMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let dim = rows.len();
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != dim) {
            return Err(de::Error::custom(format!(
                "matrix row {} has {} entries, expected {dim}",
                r + 1,
                row.len()
            )));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| Complex64::new(re, im)).collect();
        Matrix::from_vec(dim, data).map(JsonMatrix).map_err(de::Error::custom)
    }
}

struct JsonHermitian(HermitianMatrix);

impl<'de> Deserialize<'de> for JsonHermitian {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = JsonMatrix::deserialize(d)?.0;
        HermitianMatrix::new(m).map(JsonHermitian).map_err(de::Error::custom)
    }
}

struct JsonDensity(DensityMatrix);

impl<'de> Deserialize<'de> for JsonDensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let h = JsonHermitian::deserialize(d)?.0;
        accept_density(h).map(JsonDensity).map_err(de::Error::custom)
    }
}

/// Validates within the default tolerance but keeps the values as written, so
/// that reading and rewriting a file is byte-identical.
fn accept_density(h: HermitianMatrix) -> Result<DensityMatrix> {
    validate_density(h.clone(), DEFAULT_DENSITY_TOL)?;
    Ok(DensityMatrix::from_trusted(h))
}

/// A 1-based qubit list, stored 0-based in file order.
struct JsonSubset(Vec<usize>);

impl<'de> Deserialize<'de> for JsonSubset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let qubits = Vec::<usize>::deserialize(d)?;
        if qubits.contains(&0) {
            return Err(de::Error::custom("qubits are numbered from 1"));
        }
        Ok(JsonSubset(qubits.into_iter().map(|q| q - 1).collect()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    subset: JsonSubset,
    matrix: JsonHermitian,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LhDoc {
    n: usize,
    terms: Vec<TermDoc>,
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsistencyDoc {
    n: usize,
    subsets: Vec<JsonSubset>,
    marginals: Vec<JsonDensity>,
    beta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimeDoc {
    n: usize,
    subsets: Vec<JsonSubset>,
    alphas: BTreeMap<String, f64>,
    beta_prime: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    n: usize,
    matrix: JsonDensity,
}

fn parse_doc<T: de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

fn schema(context: impl std::fmt::Display, e: Error) -> Error {
    match e {
        Error::Schema(msg) => Error::Schema(format!("{context}: {msg}")),
        other => Error::Schema(format!("{context}: {other}")),
    }
}

pub fn parse_lh(text: &str) -> Result<LocalHamiltonianInstance> {
    let doc: LhDoc = parse_doc(text)?;
    let terms = doc.terms.into_iter().map(|t| (t.subset.0, t.matrix.0)).collect();
    LocalHamiltonianInstance::new(doc.n, terms, doc.a, doc.b).map_err(|e| schema("local Hamiltonian", e))
}

/// Sorts each subset, permuting its operator to match.
fn sorted_layout(n: usize, subsets: Vec<JsonSubset>, mats: Vec<DensityMatrix>) -> Result<(Layout, Vec<DensityMatrix>)> {
    if subsets.len() != mats.len() {
        return Err(Error::Schema(format!(
            "{} subsets but {} marginals",
            subsets.len(),
            mats.len()
        )));
    }
    let mut sorted_subsets = Vec::with_capacity(subsets.len());
    let mut sorted_mats = Vec::with_capacity(mats.len());
    for (i, (s, rho)) in subsets.into_iter().zip(mats).enumerate() {
        if rho.num_qubits() != s.0.len() {
            return Err(Error::Schema(format!(
                "marginal {}: acts on {} qubits but its subset has {}",
                i + 1,
                rho.num_qubits(),
                s.0.len()
            )));
        }
        let (subset, m) = sort_subset_operator(&s.0, rho.matrix().matrix()).map_err(|e| schema(format!("subset {}", i + 1), e))?;
        let rho = accept_density(HermitianMatrix::hermitian_part(&m))?;
        sorted_subsets.push(subset);
        sorted_mats.push(rho);
    }
    let layout = Layout::new(n, sorted_subsets).map_err(|e| schema("layout", e))?;
    Ok((layout, sorted_mats))
}

pub fn parse_consistency(text: &str) -> Result<ConsistencyInstance> {
    let doc: ConsistencyDoc = parse_doc(text)?;
    let (layout, marginals) = sorted_layout(doc.n, doc.subsets, doc.marginals.into_iter().map(|m| m.0).collect())?;
    ConsistencyInstance::new(layout, marginals, doc.beta).map_err(|e| schema("instance", e))
}

/// Every element of the local Pauli set must appear exactly once in `alphas`.
pub fn parse_prime(text: &str) -> Result<ConsistencyPrimeInstance> {
    let doc: PrimeDoc = parse_doc(text)?;
    let layout = Layout::new(doc.n, doc.subsets.into_iter().map(|s| s.0).collect()).map_err(|e| schema("layout", e))?;
    let basis = Arc::new(local_pauli_set(&layout));
    let mut values = vec![f64::NAN; basis.len()];
    for (key, v) in doc.alphas {
        let p: PauliString = key.parse().map_err(|e| schema(format!("alphas key {key:?}"), e))?;
        let idx = basis
            .index_of(&p)
            .ok_or_else(|| Error::Schema(format!("alphas key {key} is not in the local Pauli set")))?;
        values[idx] = v;
    }
    if let Some(idx) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Schema(format!("alphas is missing {}", basis.elements()[idx])));
    }
    let alphas = AlphaVector::new(basis, values)?;
    ConsistencyPrimeInstance::new(alphas, doc.beta_prime).map_err(|e| schema("instance", e))
}

pub fn parse_state(text: &str) -> Result<DensityMatrix> {
    let doc: StateDoc = parse_doc(text)?;
    if doc.n == 0 || doc.n > crate::pauli::MAX_QUBITS || doc.matrix.0.dim() != 1 << doc.n {
        return Err(Error::Schema(format!(
            "state matrix has dimension {} but n = {}",
            doc.matrix.0.dim(),
            doc.n
        )));
    }
    Ok(doc.matrix.0)
}

/// A consistency instance in either form.
#[derive(Clone, Debug)]
pub enum AnyConsistency {
    Trace(ConsistencyInstance),
    Prime(ConsistencyPrimeInstance),
}

/// Dispatches on the presence of `alphas` (prime form) or `marginals`.
pub fn parse_any_consistency(text: &str) -> Result<AnyConsistency> {
    let v: Value = parse_doc(text)?;
    match v.as_object() {
        Some(o) if o.contains_key("alphas") => parse_prime(text).map(AnyConsistency::Prime),
        Some(o) if o.contains_key("marginals") => parse_consistency(text).map(AnyConsistency::Trace),
        _ => Err(Error::Schema(
            "expected an object with either \"marginals\" or \"alphas\"".into(),
        )),
    }
}

/// Reads a file, naming it in errors.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn matrix_value(m: &Matrix) -> Value {
    let dim = m.dim();
    Value::Array(
        (0..dim)
            .map(|r| Value::Array((0..dim).map(|c| json!([m.get(r, c).re, m.get(r, c).im])).collect()))
            .collect(),
    )
}

fn subset_value(s: &[usize]) -> Value {
    json!(s.iter().map(|q| q + 1).collect::<Vec<_>>())
}

pub fn lh_value(lh: &LocalHamiltonianInstance) -> Value {
    let terms: Vec<Value> = lh
        .terms()
        .iter()
        .map(|t| json!({"subset": subset_value(&t.subset), "matrix": matrix_value(t.matrix.matrix())}))
        .collect();
    json!({"n": lh.num_qubits(), "terms": terms, "a": lh.a(), "b": lh.b()})
}

pub fn consistency_value(inst: &ConsistencyInstance) -> Value {
    json!({
        "n": inst.num_qubits(),
        "subsets": inst.layout().subsets().iter().map(|s| subset_value(s)).collect::<Vec<_>>(),
        "marginals": inst.marginals().iter().map(|m| matrix_value(m.matrix().matrix())).collect::<Vec<_>>(),
        "beta": inst.beta(),
    })
}

pub fn alphas_value(alphas: &AlphaVector) -> Value {
    let map: Map<String, Value> = alphas
        .basis()
        .elements()
        .iter()
        .zip(alphas.values())
        .map(|(p, v)| (p.to_string(), json!(v)))
        .collect();
    Value::Object(map)
}

pub fn prime_value(inst: &ConsistencyPrimeInstance) -> Value {
    json!({
        "n": inst.layout().num_qubits(),
        "subsets": inst.layout().subsets().iter().map(|s| subset_value(s)).collect::<Vec<_>>(),
        "alphas": alphas_value(inst.alphas()),
        "beta_prime": inst.beta_prime(),
    })
}

pub fn state_value(sigma: &DensityMatrix) -> Value {
    json!({"n": sigma.num_qubits(), "matrix": matrix_value(sigma.matrix().matrix())})
}

/// Canonical text: sorted keys, two-space indentation, floats with 17
/// significant digits in exponent form, integers verbatim, trailing LF.
/// Arrays that hold no objects and nest at most two deep stay on one line.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

/// [`to_canonical_string`] on a single line, for JSON-lines output.
pub fn to_canonical_line(v: &Value) -> String {
    let mut out = String::new();
    write_line(&mut out, v);
    out.push('\n');
    out
}

fn write_line(out: &mut String, v: &Value) {
    match v {
        Value::Array(items) => {
            out.push('[');
            for (j, x) in items.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                write_line(out, x);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (j, k) in keys.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_line(out, &map[k.as_str()]);
            }
            out.push('}');
        }
        scalar => write_value(out, scalar, 0),
    }
}

fn is_flat(v: &Value, depth: usize) -> bool {
    match v {
        Value::Object(_) => false,
        Value::Array(items) => depth < 2 && items.iter().all(|x| is_flat(x, depth + 1)),
        _ => true,
    }
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if n.is_f64() {
        let _ = write!(out, "{:.16e}", n.as_f64().expect("f64 number"));
    } else {
        let _ = write!(out, "{n}");
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', 2 * k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if is_flat(v, 0) => {
            out.push('[');
            for (j, x) in items.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (j, x) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if j + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (j, k) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_value(out, &map[k.as_str()], indent + 1);
                out.push_str(if j + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}
