//! Deterministic exports: run logs as CSV/JSON, meshes and fields as legacy
//! VTK and SVG.

use crate::adapt::AdaptiveRun;
use crate::mesh::TriMesh;
use crate::scalar::Real;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("field length {len} does not match expected {expected}")]
    LengthMismatch { len: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Formats with 6 significant digits, plain decimal where reasonable and
/// scientific otherwise; the output is deterministic for a given value.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        // trim trailing zeros but keep at least one digit
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t.is_empty() || t == "-" { "0".into() } else { t.to_string() }
    } else {
        format!("{v:.5e}")
    }
}

fn opt_to_string<T: Real>(v: Option<T>) -> String {
    v.map(|x| fmt_sig(x.to_f64().unwrap())).unwrap_or_default()
}

pub const CSV_HEADER: &str =
    "iter,n_tri,n_dof,eta_psi,eta_u,eta_total,err_psi_E,err_u_h1,err_combined,eff_psi,eff_combined,h_min";

/// Renders the per-iteration log as CSV with the fixed schema; error and
/// effectivity columns stay empty when no exact solution is attached.
pub fn run_to_csv<T: Real>(run: &AdaptiveRun<T>) -> String {
    let mut out = String::with_capacity(64 * (run.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &run.records {
        let err = r.errors.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iter,
            r.n_triangles,
            r.n_dofs,
            fmt_sig(r.eta_psi.to_f64().unwrap()),
            fmt_sig(r.eta_u.to_f64().unwrap()),
            fmt_sig(r.eta_total.to_f64().unwrap()),
            opt_to_string(err.map(|e| e.energy_psi)),
            opt_to_string(err.map(|e| e.h1_u)),
            opt_to_string(err.map(|e| e.combined)),
            opt_to_string(r.effectivity.map(|e| e.eff_psi)),
            opt_to_string(r.effectivity.map(|e| e.eff_combined)),
            fmt_sig(r.h_min.to_f64().unwrap()),
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct JsonRecord {
    iter: usize,
    n_tri: usize,
    n_dof: usize,
    eta_psi: f64,
    eta_u: f64,
    eta_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_psi_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_u_h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_combined: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eff_psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eff_combined: Option<f64>,
    h_min: f64,
}

/// Serializes the run log as pretty JSON.
pub fn run_to_json<T: Real>(run: &AdaptiveRun<T>) -> Result<String, ReportError> {
    let recs: Vec<JsonRecord> = run
        .records
        .iter()
        .map(|r| JsonRecord {
            iter: r.iter,
            n_tri: r.n_triangles,
            n_dof: r.n_dofs,
            eta_psi: r.eta_psi.to_f64().unwrap(),
            eta_u: r.eta_u.to_f64().unwrap(),
            eta_total: r.eta_total.to_f64().unwrap(),
            err_psi_e: r.errors.as_ref().map(|e| e.energy_psi.to_f64().unwrap()),
            err_u_h1: r.errors.as_ref().map(|e| e.h1_u.to_f64().unwrap()),
            err_combined: r.errors.as_ref().map(|e| e.combined.to_f64().unwrap()),
            eff_psi: r.effectivity.map(|e| e.eff_psi.to_f64().unwrap()),
            eff_combined: r.effectivity.map(|e| e.eff_combined.to_f64().unwrap()),
            h_min: r.h_min.to_f64().unwrap(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&recs)? + "\n")
}

/// Writes a legacy ASCII VTK unstructured grid with optional per-cell and
/// per-point scalar fields.
pub fn export_vtk<T: Real>(
    mesh: &TriMesh<T>,
    cell_fields: &[(&str, &[T])],
    point_fields: &[(&str, &[T])],
    path: &Path,
) -> Result<(), ReportError> {
    for (_, f) in cell_fields {
        if f.len() != mesh.n_triangles() {
            return Err(ReportError::LengthMismatch { len: f.len(), expected: mesh.n_triangles() });
        }
    }
    for (_, f) in point_fields {
        if f.len() != mesh.n_vertices() {
            return Err(ReportError::LengthMismatch { len: f.len(), expected: mesh.n_vertices() });
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("biharm mesh export\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", mesh.n_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e} 0", v[0], v[1]).unwrap();
    }
    writeln!(out, "CELLS {} {}", mesh.n_triangles(), 4 * mesh.n_triangles()).unwrap();
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_triangles()).unwrap();
    for _ in 0..mesh.n_triangles() {
        out.push_str("5\n");
    }
    if !cell_fields.is_empty() {
        writeln!(out, "CELL_DATA {}", mesh.n_triangles()).unwrap();
        for (name, field) in cell_fields {
            writeln!(out, "SCALARS {name} double 1").unwrap();
            out.push_str("LOOKUP_TABLE default\n");
            for v in *field {
                writeln!(out, "{:.17e}", v).unwrap();
            }
        }
    }
    if !point_fields.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.n_vertices()).unwrap();
        for (name, field) in point_fields {
            writeln!(out, "SCALARS {name} double 1").unwrap();
            out.push_str("LOOKUP_TABLE default\n");
            for v in *field {
                writeln!(out, "{:.17e}", v).unwrap();
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a wireframe SVG of the mesh, optionally filling each triangle by
/// the quantile rank of a per-cell scalar (dark = large).
pub fn export_svg<T: Real>(
    mesh: &TriMesh<T>,
    cell_scalar: Option<&[T]>,
    path: &Path,
) -> Result<(), ReportError> {
    if let Some(s) = cell_scalar {
        if s.len() != mesh.n_triangles() {
            return Err(ReportError::LengthMismatch { len: s.len(), expected: mesh.n_triangles() });
        }
    }
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &mesh.vertices {
        let (x, y) = (v[0].to_f64().unwrap(), v[1].to_f64().unwrap());
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    let side = 800.0;
    let scale = side / (max_x - min_x).max(max_y - min_y).max(1e-30);

    // rank-based grayscale per cell
    let shades: Option<Vec<u8>> = cell_scalar.map(|s| {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap().then(i.cmp(&j)));
        let mut shade = vec![255u8; s.len()];
        let n = s.len().max(1);
        for (rank, &i) in order.iter().enumerate() {
            let q = rank as f64 / (n - 1).max(1) as f64;
            shade[i] = (235.0 - 195.0 * q) as u8;
        }
        shade
    });

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {side} {side}\" width=\"{side}\" height=\"{side}\">"
    )
    .unwrap();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let mut pts = String::new();
        for &v in tri {
            let x = (mesh.vertices[v][0].to_f64().unwrap() - min_x) * scale;
            // flip y so the origin sits bottom-left
            let y = side - (mesh.vertices[v][1].to_f64().unwrap() - min_y) * scale;
            write!(pts, "{x:.3},{y:.3} ").unwrap();
        }
        let fill = match &shades {
            Some(s) => format!("rgb({0},{0},{0})", s[t]),
            None => "none".to_string(),
        };
        writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.4\"/>",
            pts.trim_end(),
            fill
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.15572), "1.15572");
        assert_eq!(fmt_sig(1.1557251), "1.15573"); // round at 6 digits
        assert_eq!(fmt_sig(0.000244140625), "0.000244141");
        assert_eq!(fmt_sig(6.103515625e-05), "6.10352e-5");
        assert_eq!(fmt_sig(123456789.0), "1.23457e8");
    }
}
