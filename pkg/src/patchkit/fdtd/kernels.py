"""Leapfrog update kernels (numba).

Parallelized over the x index only; every output element is written by
exactly one iteration with a fixed operation order, so results do not
depend on the thread count.
"""
import numba as nb
from numba import njit, prange


@njit(parallel=True, cache=True)
def update_h(
    Hx, Hy, Hz, Ex, Ey, Ez, ch,
    px, bx, cx, kx, py, by, cy, ky, pz, bz, cz, kz,
    psi_hxy, psi_hxz, psi_hyz, psi_hyx, psi_hzx, psi_hzy,
):
    nx = Hy.shape[0]
    ny = Hx.shape[1]
    nz = Hx.shape[2]
    # Hx (nx+1, ny, nz)
    for i in prange(nx + 1):
        for j in range(ny):
            for k in range(nz):
                dy = Ez[i, j + 1, k] - Ez[i, j, k]
                dz = Ey[i, j, k + 1] - Ey[i, j, k]
                if py[j]:
                    psi_hxy[i, j, k] = by[j] * psi_hxy[i, j, k] + cy[j] * dy
                    dy = dy * ky[j] + psi_hxy[i, j, k]
                if pz[k]:
                    psi_hxz[i, j, k] = bz[k] * psi_hxz[i, j, k] + cz[k] * dz
                    dz = dz * kz[k] + psi_hxz[i, j, k]
                Hx[i, j, k] -= ch * (dy - dz)
    # Hy (nx, ny+1, nz)
    for i in prange(nx):
        for j in range(ny + 1):
            for k in range(nz):
                dz = Ex[i, j, k + 1] - Ex[i, j, k]
                dx = Ez[i + 1, j, k] - Ez[i, j, k]
                if pz[k]:
                    psi_hyz[i, j, k] = bz[k] * psi_hyz[i, j, k] + cz[k] * dz
                    dz = dz * kz[k] + psi_hyz[i, j, k]
                if px[i]:
                    psi_hyx[i, j, k] = bx[i] * psi_hyx[i, j, k] + cx[i] * dx
                    dx = dx * kx[i] + psi_hyx[i, j, k]
                Hy[i, j, k] -= ch * (dz - dx)
    # Hz (nx, ny, nz+1)
    for i in prange(nx):
        for j in range(ny):
            for k in range(nz + 1):
                dx = Ey[i + 1, j, k] - Ey[i, j, k]
                dy = Ex[i, j + 1, k] - Ex[i, j, k]
                if px[i]:
                    psi_hzx[i, j, k] = bx[i] * psi_hzx[i, j, k] + cx[i] * dx
                    dx = dx * kx[i] + psi_hzx[i, j, k]
                if py[j]:
                    psi_hzy[i, j, k] = by[j] * psi_hzy[i, j, k] + cy[j] * dy
                    dy = dy * ky[j] + psi_hzy[i, j, k]
                Hz[i, j, k] -= ch * (dx - dy)


@njit(parallel=True, cache=True)
def update_e(
    Ex, Ey, Ez, Hx, Hy, Hz,
    mx, my, mz, ca, cb,
    px, bx, cx, kx, py, by, cy, ky, pz, bz, cz, kz,
    psi_exy, psi_exz, psi_eyz, psi_eyx, psi_ezx, psi_ezy,
    im1, jm1, i_lo, j_lo,
):
    nx = Ex.shape[0]
    ny = Ey.shape[1]
    nz = Ez.shape[2]
    # Ex (nx, ny+1, nz+1); interior j in [j_lo, ny), k in [1, nz)
    for i in prange(nx):
        for j in range(j_lo, ny):
            jj = jm1[j]
            for k in range(1, nz):
                dy = Hz[i, j, k] - Hz[i, jj, k]
                dz = Hy[i, j, k] - Hy[i, j, k - 1]
                if py[j]:
                    psi_exy[i, j, k] = by[j] * psi_exy[i, j, k] + cy[j] * dy
                    dy = dy * ky[j] + psi_exy[i, j, k]
                if pz[k]:
                    psi_exz[i, j, k] = bz[k] * psi_exz[i, j, k] + cz[k] * dz
                    dz = dz * kz[k] + psi_exz[i, j, k]
                m = mx[i, j, k]
                Ex[i, j, k] = ca[m] * Ex[i, j, k] + cb[m] * (dy - dz)
    # Ey (nx+1, ny, nz+1); i in [i_lo, nx)
    for i in prange(i_lo, nx):
        ii = im1[i]
        for j in range(ny):
            for k in range(1, nz):
                dz = Hx[i, j, k] - Hx[i, j, k - 1]
                dx = Hz[i, j, k] - Hz[ii, j, k]
                if pz[k]:
                    psi_eyz[i, j, k] = bz[k] * psi_eyz[i, j, k] + cz[k] * dz
                    dz = dz * kz[k] + psi_eyz[i, j, k]
                if px[i]:
                    psi_eyx[i, j, k] = bx[i] * psi_eyx[i, j, k] + cx[i] * dx
                    dx = dx * kx[i] + psi_eyx[i, j, k]
                m = my[i, j, k]
                Ey[i, j, k] = ca[m] * Ey[i, j, k] + cb[m] * (dz - dx)
    # Ez (nx+1, ny+1, nz)
    for i in prange(i_lo, nx):
        ii = im1[i]
        for j in range(j_lo, ny):
            jj = jm1[j]
            for k in range(nz):
                dx = Hy[i, j, k] - Hy[ii, j, k]
                dy = Hx[i, j, k] - Hx[i, jj, k]
                if px[i]:
                    psi_ezx[i, j, k] = bx[i] * psi_ezx[i, j, k] + cx[i] * dx
                    dx = dx * kx[i] + psi_ezx[i, j, k]
                if py[j]:
                    psi_ezy[i, j, k] = by[j] * psi_ezy[i, j, k] + cy[j] * dy
                    dy = dy * ky[j] + psi_ezy[i, j, k]
                m = mz[i, j, k]
                Ez[i, j, k] = ca[m] * Ez[i, j, k] + cb[m] * (dx - dy)


@njit(cache=True)
def field_energy(Ex, Ey, Ez, Hx, Hy, Hz, Gx, Gy, Gz, epsx, epsy, epsz, mu, lo, hi):
    """Sum of eps E^2 + mu H.G over components whose lower node lies in [lo, hi).

    ``G`` is H one step later, so ``H.G`` is the staggered magnetic term.
    """
    e = 0.0
    i0, j0, k0 = lo
    i1, j1, k1 = hi
    for i in range(i0, i1):
        for j in range(j0, j1):
            for k in range(k0, k1):
                e += epsx[i, j, k] * Ex[i, j, k] ** 2
                e += epsy[i, j, k] * Ey[i, j, k] ** 2
                e += epsz[i, j, k] * Ez[i, j, k] ** 2
                e += mu * (Hx[i, j, k] * Gx[i, j, k] + Hy[i, j, k] * Gy[i, j, k]
                            + Hz[i, j, k] * Gz[i, j, k])
    return 0.5 * e


def set_workers(n):
    if n is None:
        return
    n = max(1, min(int(n), nb.config.NUMBA_NUM_THREADS))
    nb.set_num_threads(n)
