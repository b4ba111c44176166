//! CSV writers for trajectories, particle snapshots and comparison series.
//! Numbers use Rust's shortest round-trip formatting, so identical runs
//! produce identical bytes.

use std::io::{self, Write};

use crate::grid::{Field, Geometry};
use crate::particles::{ComparisonPoint, ParticleRun};
use crate::pde::RunResult;

fn coord_header(field: &Field) -> &'static str {
    match field.grid.geometry {
        Geometry::Interval { .. } => "x",
        Geometry::Rectangle { .. } => "x,y",
        Geometry::Radial { .. } => "r",
    }
}

/// Header line `t,x,u` (or `t,x,y,v`, `t,r,u`, ...) for a field.
pub fn field_header(field: &Field) -> String {
    format!("t,{},{}", coord_header(field), field.var.name())
}

/// Rows `t,coords,value` for one field, without header.
pub fn write_field_rows<W: Write + ?Sized>(w: &mut W, t: f64, field: &Field) -> io::Result<()> {
    let two = matches!(field.grid.geometry, Geometry::Rectangle { .. });
    for (k, v) in field.values.iter().enumerate() {
        let x = field.grid.point(k);
        if two {
            writeln!(w, "{t},{},{},{v}", x[0], x[1])?;
        } else {
            writeln!(w, "{t},{},{v}", x[0])?;
        }
    }
    Ok(())
}

/// All snapshots of a run in long format.
pub fn write_snapshots_csv<W: Write>(mut w: W, result: &RunResult) -> io::Result<()> {
    let Some(first) = result.trajectory.first() else {
        return Ok(());
    };
    writeln!(w, "{}", field_header(&first.field))?;
    for s in &result.trajectory {
        write_field_rows(&mut w, s.t, &s.field)?;
    }
    Ok(())
}

/// Particle positions as `t,id,x` or `t,id,x,y`.
pub fn write_particles_csv<W: Write>(mut w: W, run: &ParticleRun) -> io::Result<()> {
    let dim = run.snapshots.first().map_or(1, |s| s.dim);
    writeln!(w, "{}", if dim == 2 { "t,id,x,y" } else { "t,id,x" })?;
    for s in &run.snapshots {
        for (i, x) in s.positions.iter().enumerate() {
            if dim == 2 {
                writeln!(w, "{},{i},{},{}", s.t, x[0], x[1])?;
            } else {
                writeln!(w, "{},{i},{}", s.t, x[0])?;
            }
        }
    }
    Ok(())
}

pub fn write_comparison_csv<W: Write>(mut w: W, points: &[ComparisonPoint]) -> io::Result<()> {
    writeln!(w, "t,l1_error")?;
    for p in points {
        writeln!(w, "{},{}", p.t, p.l1_error)?;
    }
    Ok(())
}
