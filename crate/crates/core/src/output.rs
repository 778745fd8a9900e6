//! Snapshot and summary writers.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::grid::{ScalarField, VectorFieldMAC};

/// Legacy ASCII VTK, `STRUCTURED_POINTS` with cell data.
pub fn write_vtk<W: Write>(
    mut w: W,
    title: &str,
    scalars: &[(&str, &ScalarField)],
    velocity: Option<&VectorFieldMAC>,
) -> Result<()> {
    let Some((_, first)) = scalars.first() else {
        return Err(crate::Error::Structural("a snapshot needs at least one scalar".into()));
    };
    let g = first.grid;
    for (_, s) in scalars {
        g.check_same(&s.grid)?;
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", g.nx + 1, g.ny + 1)?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING {:e} {:e} 1", g.hx, g.hy)?;
    writeln!(w, "CELL_DATA {}", g.n_cells())?;
    for (name, s) in scalars {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for x in &s.values {
            writeln!(w, "{x:e}")?;
        }
    }
    if let Some(v) = velocity {
        g.check_same(&v.grid)?;
        let (cu, cv) = v.cell_centered();
        writeln!(w, "VECTORS velocity double")?;
        for (a, b) in cu.values.iter().zip(&cv.values) {
            writeln!(w, "{a:e} {b:e} 0")?;
        }
    }
    Ok(())
}

pub fn save_vtk(path: &Path, title: &str, scalars: &[(&str, &ScalarField)], velocity: Option<&VectorFieldMAC>) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(f, title, scalars, velocity)
}

/// End-of-run summary.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub max_rho: f64,
    pub mass_drift: f64,
    pub min_c: f64,
    pub wall_time: f64,
    pub max_divergence: f64,
    pub negative_excursions: usize,
    pub halvings: usize,
    pub max_picard_iterations: usize,
    pub mean_kinetic: f64,
}

impl RunSummary {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
