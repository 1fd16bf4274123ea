//! Field output: legacy VTK and CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Vtk,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtk" => Ok(Format::Vtk),
            "csv" => Ok(Format::Csv),
            other => Err(Error::config(format!("unknown export format `{other}` (vtk, csv)"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Vtk => "vtk",
            Format::Csv => "csv",
        }
    }
}

fn check(mesh: &Mesh, field: &[f64]) -> Result<()> {
    if field.len() != 2 * mesh.nodes.len() {
        return Err(Error::Dimension(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.nodes.len()
        )));
    }
    Ok(())
}

/// ASCII VTK 3.0 unstructured grid with the nodal vector `displacement`.
pub fn vtk_string(mesh: &Mesh, field: &[f64], title: &str) -> Result<String> {
    check(mesh, field)?;
    let n = mesh.nodes.len();
    let ne = mesh.elements.len();
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{}", title.lines().next().unwrap_or("")).unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {n} double").unwrap();
    for p in &mesh.nodes {
        writeln!(s, "{:.16e} {:.16e} 0", p[0], p[1]).unwrap();
    }
    writeln!(s, "CELLS {ne} {}", 4 * ne).unwrap();
    for el in &mesh.elements {
        let [a, b, c] = el.vertices;
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    writeln!(s, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        writeln!(s, "5").unwrap();
    }
    writeln!(s, "CELL_DATA {ne}").unwrap();
    writeln!(s, "SCALARS region int 1").unwrap();
    writeln!(s, "LOOKUP_TABLE default").unwrap();
    for el in &mesh.elements {
        writeln!(s, "{}", el.region).unwrap();
    }
    writeln!(s, "POINT_DATA {n}").unwrap();
    writeln!(s, "VECTORS displacement double").unwrap();
    for u in field.chunks(2) {
        writeln!(s, "{:.16e} {:.16e} 0", u[0], u[1]).unwrap();
    }
    Ok(s)
}

/// `node_id,x,y,ux,uy` with 17 significant digits.
pub fn csv_string(mesh: &Mesh, field: &[f64]) -> Result<String> {
    check(mesh, field)?;
    let mut s = String::from("node_id,x,y,ux,uy\n");
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(s, "{i},{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], field[2 * i], field[2 * i + 1]).unwrap();
    }
    Ok(s)
}

/// Rows of a displacement CSV as (node_id, [x, y], [ux, uy]).
/// One CSV row: node id, position, displacement.
pub type FieldRow = (usize, [f64; 2], [f64; 2]);

pub fn parse_field_csv(text: &str) -> Result<Vec<FieldRow>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Syntax { line: i + 1, msg: format!("expected node_id,x,y,ux,uy, got `{line}`") };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad());
        }
        let id: usize = cols[0].parse().map_err(|_| bad())?;
        let v: Vec<f64> = cols[1..].iter().map(|c| c.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        out.push((id, [v[0], v[1]], [v[2], v[3]]));
    }
    Ok(out)
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn export_field(mesh: &Mesh, field: &[f64], format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Vtk => vtk_string(mesh, field, "dislox displacement")?,
        Format::Csv => csv_string(mesh, field)?,
    };
    write_atomic(path, &text)
}
