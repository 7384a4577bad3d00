//! Binary PPM (P6) raster export for grids, fields and trajectories.
//!
//! Image row 0 corresponds to the maximum y of the grid so north is up.
//! Class colors: FREE green, DUCK yellow, BLOCKED black. Probability
//! rasters blend red (low) to blue (high). Trajectory overlays draw
//! full-height segments blue and ducked segments bright yellow.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::field::NeuralField;
use crate::heightmap::{CellClass, TraversabilityGrid};
use crate::planner::Trajectory;

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    assert_eq!(rgb.len(), width * height * 3);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = Vec::with_capacity(rgb.len() + 32);
    write!(out, "P6\n{width} {height}\n255\n")?;
    out.extend_from_slice(rgb);
    fs::write(path, out)?;
    Ok(())
}

pub fn class_color(class: CellClass) -> [u8; 3] {
    match class {
        CellClass::Free => [60, 200, 60],
        CellClass::Duck => [210, 190, 80],
        CellClass::Blocked => [0, 0, 0],
    }
}

fn class_pixels(tgrid: &TraversabilityGrid) -> Vec<u8> {
    let [nx, ny] = tgrid.dims;
    let mut rgb = vec![0u8; nx * ny * 3];
    for iy in 0..ny {
        for ix in 0..nx {
            let color = class_color(tgrid.cell(ix, iy).class);
            let row = ny - 1 - iy;
            let o = (row * nx + ix) * 3;
            rgb[o..o + 3].copy_from_slice(&color);
        }
    }
    rgb
}

/// Class-color raster of a traversability grid.
pub fn write_class_raster(tgrid: &TraversabilityGrid, path: &Path) -> Result<()> {
    let [nx, ny] = tgrid.dims;
    write_ppm(path, nx, ny, &class_pixels(tgrid))
}

fn prob_color(p: f64) -> [u8; 3] {
    // red = low, blue = high
    let t = p.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t) as u8;
    [lerp(200.0, 25.0), lerp(40.0, 40.0), lerp(35.0, 200.0)]
}

/// Render the field's two probability channels over its world rect at the
/// given resolution; writes `<stem>_block.ppm` and `<stem>_duck.ppm`.
pub fn write_field_rasters(field: &NeuralField, res: f64, base_path: &Path) -> Result<()> {
    let rect = field.world_rect;
    let nx = (((rect.max[0] - rect.min[0]) / res).ceil() as usize).max(1);
    let ny = (((rect.max[1] - rect.min[1]) / res).ceil() as usize).max(1);
    let mut block = vec![0u8; nx * ny * 3];
    let mut duck = vec![0u8; nx * ny * 3];
    for iy in 0..ny {
        for ix in 0..nx {
            let p = [
                rect.min[0] + (ix as f64 + 0.5) * res,
                rect.min[1] + (iy as f64 + 0.5) * res,
            ];
            let (pb, pd) = field.forward(p);
            let row = ny - 1 - iy;
            let o = (row * nx + ix) * 3;
            block[o..o + 3].copy_from_slice(&prob_color(pb));
            duck[o..o + 3].copy_from_slice(&prob_color(pd));
        }
    }
    let stem = base_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "field".into());
    let dir = base_path.parent().unwrap_or(Path::new("."));
    write_ppm(&dir.join(format!("{stem}_block.ppm")), nx, ny, &block)?;
    write_ppm(&dir.join(format!("{stem}_duck.ppm")), nx, ny, &duck)?;
    Ok(())
}

/// Class raster with the trajectory drawn over it: ducked segments yellow,
/// full-height segments blue.
pub fn write_trajectory_raster(
    tgrid: &TraversabilityGrid,
    traj: &Trajectory,
    path: &Path,
) -> Result<()> {
    let [nx, ny] = tgrid.dims;
    let mut rgb = class_pixels(tgrid);
    let ref_height = traj
        .waypoints
        .iter()
        .map(|w| w.body_height)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut paint = |ix: i64, iy: i64, color: [u8; 3]| {
        if ix < 0 || iy < 0 || ix >= nx as i64 || iy >= ny as i64 {
            return;
        }
        let row = ny - 1 - iy as usize;
        let o = (row * nx + ix as usize) * 3;
        rgb[o..o + 3].copy_from_slice(&color);
    };
    for w in traj.waypoints.windows(2) {
        let ducked = w[0].body_height < ref_height - 1e-9 || w[1].body_height < ref_height - 1e-9;
        let color = if ducked { [255, 230, 0] } else { [40, 70, 255] };
        // supersample the segment at sub-cell steps
        let a = w[0].pos();
        let b = w[1].pos();
        let steps = ((crate::geom::dist2(a, b) / (tgrid.resolution * 0.5)).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let p = [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
            let ix = crate::geom::cell_index(p[0], tgrid.origin[0], tgrid.resolution);
            let iy = crate::geom::cell_index(p[1], tgrid.origin[1], tgrid.resolution);
            paint(ix, iy, color);
        }
    }
    write_ppm(path, nx, ny, &rgb)
}
