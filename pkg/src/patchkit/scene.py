"""Place a layered geometry in a padded FDTD domain with port and far-field box."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import C0
from .errors import GeometryError
from .fdtd.grid import MaterialGrid
from .fdtd.solver import PortSpec
from .geometry.layout import AntennaGeometry, feed_line
from .geometry.raster import rasterize


@dataclass(frozen=True)
class Layout:
    """Domain padding in cells; PML cells are part of the padding."""

    pml: int = 10
    side: int = 8  # air between board edge and PML on x-, x+, y+
    below: int = 8  # air under the ground plane
    above: int = 14  # air over the top copper
    feed_run: int = 14  # line cells between PML and the board's feed edge
    source_offset: int = 3  # source plane, cells past the PML
    probe_offset: int = 9  # V/I sampling plane, cells past the PML
    ntff_gap: int = 5  # far-field box distance from the PML

    def pad(self) -> tuple[int, int, int, int, int, int]:
        p = self.pml
        return (p + self.side, p + self.side, p + self.feed_run, p + self.side,
                p + self.below, p + self.above)


@dataclass
class Scene:
    grid: MaterialGrid
    port: PortSpec
    ntff_box: tuple[int, int, int, int, int, int]
    layout: Layout
    # (face, (a0, a1), (b0, b1)) grid-index ranges left out of the far-field transform
    ntff_apertures: tuple = ()


def _port_for(grid: MaterialGrid, geometry: AntennaGeometry, layout: Layout) -> PortSpec:
    p = geometry.port
    k_trace = grid.planes[p.layer]
    j_src = layout.pml + layout.source_offset
    sheet = grid.sheets.get(k_trace)
    if sheet is None or not sheet[:, j_src].any():
        raise GeometryError("feed trace is not resolved at the source plane")
    cols = [i for i in range(sheet.shape[0]) if sheet[i, j_src]]
    # trace cells i_a..i_b own node columns i_a..i_b+1
    return PortSpec(
        i0=cols[0],
        i1=cols[-1] + 1,
        k_ground=grid.planes[0],
        k_trace=k_trace,
        j_source=j_src,
        j_probe=layout.pml + layout.probe_offset,
    )


def _ntff_box(grid: MaterialGrid, layout: Layout):
    nx, ny, nz = grid.shape
    g = layout.pml + layout.ntff_gap
    box = (g, nx - g, g, ny - g, g, nz - g)
    k_top = max(grid.planes)
    if not (box[4] < grid.planes[0] and box[5] > k_top):
        raise GeometryError("far-field box does not enclose the stack; increase padding")
    return box


def _feed_apertures(grid: MaterialGrid, port: PortSpec, box) -> tuple:
    """Where the feed line, its substrate and ground cross the y- face of the box."""
    nh = port.k_trace - port.k_ground
    k_top = max(grid.planes)
    slab_i = [i for i in range(grid.shape[0]) if grid.eps_r[i, box[2], port.k_ground] != 1.0
              or (port.k_ground in grid.sheets and grid.sheets[port.k_ground][i, box[2]])]
    out = []
    if slab_i:
        out.append(("y-", (slab_i[0] - 1, slab_i[-1] + 2), (port.k_ground - 1, k_top + 1)))
    m = 3 * nh
    out.append(("y-", (port.i0 - m, port.i1 + m), (port.k_ground - 1, port.k_trace + m)))
    return tuple(out)


def antenna_scene(geometry: AntennaGeometry, cell: float, layout: Layout | None = None) -> Scene:
    layout = layout or Layout()
    if layout.probe_offset >= layout.feed_run or layout.source_offset >= layout.probe_offset:
        raise GeometryError("source and probe planes must lie on the feed run, source first")
    if layout.ntff_gap >= min(layout.side, layout.below, layout.above):
        raise GeometryError("far-field box must sit between the board and the PML")
    grid = rasterize(geometry, cell, layout.pad(), extend=(True, False))
    port = _port_for(grid, geometry, layout)
    box = _ntff_box(grid, layout)
    return Scene(grid, port, box, layout, _feed_apertures(grid, port, box))


def reference_scene(geometry: AntennaGeometry, cell: float, layout: Layout | None = None) -> Scene:
    """Matched line of the same cross-section, running into the PML at both ends."""
    layout = layout or Layout()
    grid = rasterize(feed_line(geometry), cell, layout.pad(), extend=(True, True))
    return Scene(grid, _port_for(grid, geometry, layout), _ntff_box(grid, layout), layout)


def cells_per_wavelength(cell: float, f_max: float, eps_r: float = 1.0) -> float:
    return C0 / (f_max * math.sqrt(eps_r)) / cell
