"""Map a layered geometry onto the FDTD material grid."""
from __future__ import annotations

import math

import numpy as np

from ..constants import EPS0, MM, TWO_PI
from ..fdtd.grid import MaterialGrid
from .layout import AntennaGeometry, CopperLayer

RESOLUTION_CELLS = 2.0  # features narrower than this many cells draw a warning


def resolution_warnings(geometry: AntennaGeometry, cell: float) -> list[str]:
    out = []
    for name, size in geometry.min_features:
        if size < RESOLUTION_CELLS * cell:
            out.append(
                f"{name} {size / MM:.2f} mm spans {size / cell:.2f} cells at "
                f"{cell / MM:.3f} mm; feature is under-resolved"
            )
    return out


def rasterize(
    geometry: AntennaGeometry,
    cell: float,
    pad: tuple[int, int, int, int, int, int] = (0, 0, 0, 0, 0, 0),
    extend: tuple[bool, bool] = (False, False),
) -> MaterialGrid:
    """Sample the stack at cell centers.

    ``pad`` gives extra air cells ``(x-, x+, y-, y+, z-, z+)`` around the
    board; the ground plane sits ``pad[4]`` cells above the grid floor.
    ``extend`` continues substrate, ground and the feed strip through the
    -y / +y padding (used to run the line into an absorbing boundary).
    """
    if not cell > 0:
        raise ValueError("cell must be > 0")
    b = geometry.board
    px0, px1, py0, py1, pz0, pz1 = (int(v) for v in pad)
    nbx = math.ceil(b.width / cell - 1e-6)
    nby = math.ceil(b.height / cell - 1e-6)

    warnings = resolution_warnings(geometry, cell)
    k_planes, k = [], pz0
    for lay in geometry.stack.layers:
        if isinstance(lay, CopperLayer):
            k_planes.append(k)
        else:
            n = max(1, int(round(lay.thickness / cell)))
            if abs(n * cell - lay.thickness) > 1e-3 * cell:
                warnings.append(
                    f"substrate {lay.thickness / MM:.3f} mm snapped to {n} cells "
                    f"({n * cell / MM:.3f} mm)"
                )
            k += n
    nx, ny, nz = nbx + px0 + px1, nby + py0 + py1, k + pz1
    origin = (b.x0 - px0 * cell, b.y0 - py0 * cell, -pz0 * cell)
    grid = MaterialGrid.empty((nx, ny, nz), cell, origin)
    grid.warnings.extend(warnings)
    grid.planes = tuple(k_planes)

    xc = origin[0] + (np.arange(nx) + 0.5) * cell
    yc = origin[1] + (np.arange(ny) + 0.5) * cell
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    in_x = (xc >= b.x0) & (xc < b.x1)
    footprint = in_x[:, None] & ((yc >= b.y0) & (yc < b.y1))[None, :]
    ext_y = np.zeros(ny, dtype=bool)
    if extend[0]:
        ext_y |= yc < b.y0
    if extend[1]:
        ext_y |= yc >= b.y1
    footprint_ext = footprint | (in_x[:, None] & ext_y[None, :])

    p = geometry.port
    strip_x = (xc >= p.x_center - p.width / 2) & (xc < p.x_center + p.width / 2)
    strip_ext = strip_x[:, None] & ext_y[None, :]

    f_loss = geometry.f_design[0] if geometry.f_design else 0.0
    copper_idx = 0
    k = pz0
    for lay in geometry.stack.layers:
        if isinstance(lay, CopperLayer):
            if copper_idx == 0:
                mask = footprint_ext.copy()
            else:
                mask = lay.shape.contains(X, Y) & footprint
                if copper_idx == p.layer:
                    mask |= strip_ext
            if mask.any():
                grid.add_sheet(k, mask)
            copper_idx += 1
        else:
            n = max(1, int(round(lay.thickness / cell)))
            s = lay.substrate
            grid.eps_r[:, :, k : k + n][footprint_ext] = s.eps_r
            if s.loss_tangent > 0 and f_loss > 0:
                grid.sigma[:, :, k : k + n][footprint_ext] = TWO_PI * f_loss * EPS0 * s.eps_r * s.loss_tangent
            k += n
    return grid


def pec_cell_counts(grid: MaterialGrid) -> list[int]:
    """Covered cells on each copper plane, bottom to top."""
    return [int(grid.sheets[k].sum()) if k in grid.sheets else 0 for k in grid.planes]
