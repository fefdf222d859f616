//! Text formats: graph JSON, id-keyed CSV fields and report CSV.
//!
//! Field CSV files start with a header row. Scalar files use `id,value`;
//! vector files use `id` followed by one column per component. Float cells
//! accept `inf`, `-inf` and `nan`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{PartialField, ScalarField, VectorField, VectorNorm};
use crate::graph::{MetricMeasureGraph, VertexId};
use crate::report::csv_float;
use crate::spaces::MeshSpec;

pub fn parse_graph(bytes: &[u8]) -> Result<MetricMeasureGraph> {
    MetricMeasureGraph::from_json(bytes)
}

pub fn parse_mesh_spec(bytes: &[u8]) -> Result<MeshSpec> {
    MeshSpec::from_json(bytes)
}

fn parse_float(cell: &str, line: u64) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::input(format!("line {line}: {cell:?} is not a number")))
}

fn parse_id(cell: &str, line: u64) -> Result<VertexId> {
    cell.trim()
        .parse::<VertexId>()
        .map_err(|_| Error::input(format!("line {line}: {cell:?} is not a vertex id")))
}

/// Rows of `id` plus float columns, with the header checked against `expect`
/// (`None` accepts any header whose first column is `id`).
fn parse_rows(bytes: &[u8], expect: Option<&[&str]>) -> Result<(usize, Vec<(VertexId, Vec<f64>)>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let ok = match expect {
        Some(cols) => header.len() == cols.len() && header.iter().zip(cols).all(|(h, c)| h == c),
        None => header.len() >= 2 && header[0] == "id",
    };
    if !ok {
        return Err(Error::input(format!("unexpected CSV header {header:?}")));
    }
    let width = header.len();
    let mut rows = Vec::new();
    let mut seen = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(Error::input(format!("line {line}: expected {width} columns, found {}", rec.len())));
        }
        let id = parse_id(&rec[0], line)?;
        if seen.insert(id, line).is_some() {
            return Err(Error::input(format!("line {line}: vertex {id} listed twice")));
        }
        let vals = rec.iter().skip(1).map(|c| parse_float(c, line)).collect::<Result<_>>()?;
        rows.push((id, vals));
    }
    Ok((width - 1, rows))
}

/// `id,value` rows into an id-keyed map; ids must be distinct.
pub fn parse_partial_csv(bytes: &[u8]) -> Result<PartialField> {
    let (_, rows) = parse_rows(bytes, Some(&["id", "value"]))?;
    Ok(rows.into_iter().map(|(id, v)| (id, v[0])).collect())
}

/// Boundary data: like [`parse_partial_csv`], with finite values only.
pub fn parse_boundary_csv(bytes: &[u8]) -> Result<PartialField> {
    let data = parse_partial_csv(bytes)?;
    if let Some((id, v)) = data.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::input(format!("boundary value {v} at vertex {id} is not finite")));
    }
    Ok(data)
}

/// Total scalar field: every vertex of `g` exactly once.
pub fn parse_scalar_field_csv(bytes: &[u8], g: &MetricMeasureGraph) -> Result<ScalarField> {
    let data = parse_partial_csv(bytes)?;
    if data.len() != g.vertex_count() {
        return Err(Error::input(format!("field lists {} of {} vertices", data.len(), g.vertex_count())));
    }
    ScalarField::from_partial(g, &data)
}

/// Vector field on the listed vertices; other vertices are off its support.
pub fn parse_vector_field_csv(bytes: &[u8], g: &MetricMeasureGraph, norm: VectorNorm) -> Result<VectorField> {
    let (dim, rows) = parse_rows(bytes, None)?;
    VectorField::from_partial(g, dim, norm, &rows.into_iter().collect())
}

/// `id,value` CSV of a total field in vertex order.
pub fn scalar_field_csv(g: &MetricMeasureGraph, values: &[f64]) -> String {
    let mut out = String::from("id,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", g.id(i), csv_float(*v)));
    }
    out
}

/// `id,value` CSV of id-keyed data.
pub fn partial_field_csv(data: &PartialField) -> String {
    let mut out = String::from("id,value\n");
    for (id, v) in data {
        out.push_str(&format!("{id},{}\n", csv_float(*v)));
    }
    out
}

/// CSV with one row per record, header from the field names.
pub fn rows_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
}
