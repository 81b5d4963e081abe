//! Placement of a grid on the PE fabric: X and Y across PEs, Z in each PE's
//! local memory.

use std::fmt;

pub const DEFAULT_FABRIC: (usize, usize) = (757, 996);
pub const DEFAULT_MARGINS: Margins = Margins {
    north: 3,
    east: 1,
    south: 4,
    west: 1,
};
pub const DEFAULT_MEMORY_BUDGET: usize = 48 * 1024;

/// Buffer PEs reserved around the active rectangle. North/south pad the
/// first fabric dimension, east/west the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Margins {
    pub north: usize,
    pub east: usize,
    pub south: usize,
    pub west: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeLayout {
    pub fabric: (usize, usize),
    pub margins: Margins,
    /// Active PE rectangle `(Nx, Ny)`; PE `(x, y)` owns grid column `[x][y][:]`.
    pub active: (usize, usize),
    pub nz: usize,
    pub elem_size: usize,
    /// Bytes of local memory available for the Z-column.
    pub memory_budget: usize,
}

impl PeLayout {
    pub fn pe_count(&self) -> usize {
        self.active.0 * self.active.1
    }

    /// Fabric coordinates of the active rectangle's origin.
    pub fn origin(&self) -> (usize, usize) {
        (self.margins.north, self.margins.west)
    }
}

/// Map logical grid extents (`[Nx, Ny]` or `[Nx, Ny, Nz]`) onto the fabric.
pub fn map_grid_to_fabric(
    extents: &[usize],
    elem_size: usize,
    fabric: (usize, usize),
    margins: Margins,
    memory_budget: usize,
) -> Result<PeLayout, String> {
    let (nx, ny, nz) = match *extents {
        [nx, ny] => (nx, ny, 1),
        [nx, ny, nz] => (nx, ny, nz),
        _ => {
            return Err(format!(
                "dataflow layout needs a 2D or 3D grid, got {} dimensions",
                extents.len()
            ))
        }
    };
    if nx + margins.north + margins.south > fabric.0 || ny + margins.east + margins.west > fabric.1
    {
        return Err(format!(
            "grid {nx}x{ny} plus margins N{}/E{}/S{}/W{} does not fit the {}x{} fabric",
            margins.north, margins.east, margins.south, margins.west, fabric.0, fabric.1
        ));
    }
    if nz * elem_size > memory_budget {
        return Err(format!(
            "Z-column of {nz} elements ({} bytes) exceeds the per-PE memory budget of {memory_budget} bytes",
            nz * elem_size
        ));
    }
    Ok(PeLayout {
        fabric,
        margins,
        active: (nx, ny),
        nz,
        elem_size,
        memory_budget,
    })
}

impl fmt::Display for PeLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fabric {} {}", self.fabric.0, self.fabric.1)?;
        writeln!(
            f,
            "margins {} {} {} {}",
            self.margins.north, self.margins.east, self.margins.south, self.margins.west
        )?;
        writeln!(f, "active {} {}", self.active.0, self.active.1)?;
        writeln!(f, "nz {}", self.nz)?;
        writeln!(f, "elem_size {}", self.elem_size)?;
        writeln!(f, "memory_budget {}", self.memory_budget)
    }
}
