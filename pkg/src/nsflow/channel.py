"""Minimal Navier-slip channel stepper for producing monitored time series.

Explicit Heun (RK2) advection-diffusion with a pressure projection after
every stage.  Walls sit on the first and last z planes; the slip condition
enters through ghost planes chosen so the discrete form of
beta u_tau = nu du_tau/dz (bottom) holds, and the kinematic condition
u3 = 0 is enforced exactly.

The projection inverts the exact composition of the scheme's central
divergence and gradient (a wide vertical stencil that splits into two
tridiagonal sublattice solves per lateral mode), zeroes the lateral-mean
vertical velocity (its continuum Leray projection in a walled channel), and
discards the unrepresentable lateral Nyquist mode.  Post-projection central
divergence is then at round-off level.

Deliberately low order and desk scale: it makes physically consistent time
series for the inequality monitors, not turbulence statistics.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError, SolverError, StepSizeError
from .fields import Grid, Snapshot, VectorField
from .geometry import HALF_SPACE, DomainSpec
from .oracle import solve_tridiagonal


def _ghost_extend(u, h, beta, nu):
    """Append ghost planes below/above the walls for all three components."""
    n1, n2, n3 = u.shape[1:]
    ext = np.empty((3, n1, n2, n3 + 2))
    ext[:, :, :, 1:-1] = u
    s = 2.0 * h * beta / nu
    for c in (0, 1):
        ext[c, :, :, 0] = u[c, :, :, 1] - s * u[c, :, :, 0]
        ext[c, :, :, -1] = u[c, :, :, -2] - s * u[c, :, :, -1]
    ext[2, :, :, 0] = -u[2, :, :, 1]
    ext[2, :, :, -1] = -u[2, :, :, -2]
    return ext


def _rhs(u, h, beta, nu):
    """-div(u x u) + nu Laplacian(u), ghost-closed at the walls."""
    ext = _ghost_extend(u, h, beta, nu)
    out = np.empty_like(u)
    inner = ext[:, :, :, 1:-1]
    for i in range(3):
        adv = np.zeros(u.shape[1:])
        for j in range(2):
            prod = inner[i] * inner[j]
            adv += (np.roll(prod, -1, axis=j) - np.roll(prod, 1, axis=j)) / (2 * h)
        prod = ext[i] * ext[2]
        adv += (prod[:, :, 2:] - prod[:, :, :-2]) / (2 * h)
        lap = np.zeros(u.shape[1:])
        for j in range(2):
            lap += (np.roll(inner[i], -1, axis=j) - 2 * inner[i]
                    + np.roll(inner[i], 1, axis=j)) / h**2
        lap += (ext[i][:, :, 2:] - 2 * inner[i] + ext[i][:, :, :-2]) / h**2
        out[i] = -adv + nu * lap
    return out


def _wide_vertical_solve(rhs_hat, k2s, h):
    """Solve (D_z^2_wide - k2s) phi = rhs per lateral mode, where D_z^2_wide is
    the central-difference composition with mirrored (Neumann) wall ghosts.

    The wide stencil couples only nodes of equal parity, so each parity class
    is an independent tridiagonal system in the stride-2 index.
    """
    n3 = rhs_hat.shape[-1]
    w = 1.0 / (4.0 * h * h)
    phi = np.empty_like(rhs_hat)
    for par in (0, 1):
        idx = np.arange(par, n3, 2)
        m = len(idx)
        shape = rhs_hat.shape[:-1] + (m,)
        diag = np.empty(shape, dtype=rhs_hat.dtype)
        lower = np.zeros_like(diag)
        upper = np.zeros_like(diag)
        diag[...] = -2.0 * w - k2s[..., None]
        lower[..., 1:] = w
        upper[..., :-1] = w
        # mirror closures: j - 2 reflects to |j - 2| and j + 2 to 2(n3-1) - j - 2
        if idx[0] - 2 < 0:
            upper[..., 0] += w          # phi_{-2} -> phi_{+2} (or phi_{-1} -> phi_{1})
        if idx[0] == 1:
            diag[..., 0] += w           # j = 1: phi_{-1} mirrors onto itself's neighbor
            upper[..., 0] -= w
        if idx[-1] + 2 > n3 - 1:
            if idx[-1] == n3 - 1:
                lower[..., -1] += w     # phi_{n3+...} mirrors to the previous node
            else:                       # idx[-1] == n3 - 2: mirror lands on itself
                diag[..., -1] += w
        phi[..., idx] = solve_tridiagonal(lower, diag, upper, rhs_hat[..., idx])
    return phi


def _vertical_mirror_gradient(phi_hat, h):
    """Central D_z with Neumann mirror ghosts; exactly zero at the walls."""
    out = np.empty_like(phi_hat)
    out[..., 1:-1] = (phi_hat[..., 2:] - phi_hat[..., :-2]) / (2 * h)
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def _vertical_odd_divergence(w_hat, h):
    """Central D_z of a field that is odd across both walls (wall values 0)."""
    out = np.empty_like(w_hat)
    out[..., 1:-1] = (w_hat[..., 2:] - w_hat[..., :-2]) / (2 * h)
    out[..., 0] = w_hat[..., 1] / h
    out[..., -1] = -w_hat[..., -2] / h
    return out


def project(u, h):
    """Leray projection onto the discretely divergence-free subspace."""
    n1, n2, n3 = u.shape[1:]
    uh = np.fft.fft2(u, axes=(1, 2))
    # unrepresentable lateral Nyquist content cannot be projected; drop it
    if n1 % 2 == 0:
        uh[:, n1 // 2, :, :] = 0.0
    if n2 % 2 == 0:
        uh[:, :, n2 // 2, :] = 0.0
    # lateral-mean vertical velocity is pure gradient in a walled channel
    uh[2, 0, 0, :] = 0.0
    uh[2, :, :, 0] = 0.0
    uh[2, :, :, -1] = 0.0

    kx = 2 * np.pi * np.fft.fftfreq(n1, d=h)
    ky = 2 * np.pi * np.fft.fftfreq(n2, d=h)
    sx = (np.sin(kx * h) / h)[:, None, None]
    sy = (np.sin(ky * h) / h)[None, :, None]
    div = 1j * sx * uh[0] + 1j * sy * uh[1] + _vertical_odd_divergence(uh[2], h)

    k2s = (sx**2 + sy**2) * np.ones((n1, n2, 1))
    solvable = k2s[:, :, 0] > 1e-14
    phi = np.zeros_like(div)
    if np.any(solvable):
        phi[solvable] = _wide_vertical_solve(div[solvable], k2s[solvable][:, 0], h)
    # the k = 0 mode needs no potential: its divergence vanished with uh[2]

    uh[0] -= 1j * sx * phi
    uh[1] -= 1j * sy * phi
    uh[2] -= _vertical_mirror_gradient(phi, h)
    out = np.fft.ifft2(uh, axes=(1, 2)).real
    out[2, :, :, 0] = 0.0
    out[2, :, :, -1] = 0.0
    return out


def central_divergence(u, h):
    """The scheme's own divergence measure (periodic lateral, odd-ghost wall)."""
    div = np.zeros(u.shape[1:])
    for j in range(2):
        div += (np.roll(u[j], -1, axis=j) - np.roll(u[j], 1, axis=j)) / (2 * h)
    div += _vertical_odd_divergence(u[2], h)
    return div


def cfl_limit(u, h, nu):
    umax = float(np.max(np.abs(u)))
    adv = h / umax if umax > 0 else np.inf
    return 0.5 * min(adv, h * h / (6.0 * nu))


def step_channel(snapshot: Snapshot, dt, n_steps, div_tol=1e-10):
    """Advance a channel snapshot; returns the series including the input.

    Raises StepSizeError when dt violates the CFL guard and SolverError when
    a projection leaves measurable divergence.
    """
    grid = snapshot.grid
    if not (grid.periodic[0] and grid.periodic[1]) or grid.periodic[2]:
        raise ParameterError("step_channel needs a laterally periodic channel grid")
    nu = snapshot.metadata.get("nu")
    beta = snapshot.metadata.get("beta")
    if not nu or not beta or nu <= 0 or beta <= 0:
        raise ParameterError("snapshot metadata must carry positive nu and beta")
    h = grid.h
    u = np.array(snapshot.u.data)
    u[2, :, :, 0] = 0.0
    u[2, :, :, -1] = 0.0
    u = project(u, h)

    series = [Snapshot(grid, VectorField(grid, u.copy()), None,
                       {**snapshot.metadata, "t": float(snapshot.metadata.get("t", 0.0))})]
    t = float(snapshot.metadata.get("t", 0.0))
    for _ in range(n_steps):
        limit = cfl_limit(u, h, nu)
        if dt > limit:
            raise StepSizeError(f"dt = {dt} exceeds the CFL limit {limit:.3e}")
        f1 = _rhs(u, h, beta, nu)
        mid = project(u + dt * f1, h)
        f2 = _rhs(mid, h, beta, nu)
        u = project(u + 0.5 * dt * (f1 + f2), h)
        resid = float(np.max(np.abs(central_divergence(u, h))))
        scale = max(1.0, float(np.max(np.abs(u))) / h)
        if resid > div_tol * scale:
            raise SolverError(f"post-projection divergence {resid:.3e}")
        t += dt
        series.append(Snapshot(grid, VectorField(grid, u.copy()), None,
                               {**snapshot.metadata, "t": t}))
    return series


# ---------------------------------------------------------------------------
# slip-mode analysis


def slip_mode_residual(lam, beta, nu, height):
    """Shooting residual for the symmetric Stokes shear mode: integrate
    U'' = -lam^2 U from the bottom Robin data and test the top condition."""
    k = beta / nu
    u_top = np.cos(lam * height) + (k / lam) * np.sin(lam * height)
    du_top = -lam * np.sin(lam * height) + k * np.cos(lam * height)
    return du_top + k * u_top


def slip_decay_rate(beta, nu, height, max_lam=None):
    """nu * lambda^2 for the slowest Navier-slip shear eigenmode, lambda the
    smallest positive root of the wall relation lam*tan(lam H / 2) = beta/nu."""
    if beta <= 0 or nu <= 0 or height <= 0:
        raise ParameterError("beta, nu, height must be positive")
    lo = 1e-8
    hi = max_lam or (np.pi / height) * 0.999
    grid = np.linspace(lo, hi, 2000)
    vals = [slip_mode_residual(l, beta, nu, height) for l in grid]
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            lam = grid[i]
            break
        if vals[i] * vals[i + 1] < 0:
            lam = brentq(slip_mode_residual, grid[i], grid[i + 1],
                         args=(beta, nu, height))
            break
    else:
        raise SolverError("no slip eigenvalue found below pi/H")
    return nu * lam * lam, lam


def shear_eigenmode(grid: Grid, beta, nu, amplitude=1.0) -> Snapshot:
    """Channel snapshot seeded with the slowest symmetric shear eigenmode."""
    height = grid.h * (grid.dims[2] - 1)
    _, lam = slip_decay_rate(beta, nu, height)
    z = grid.axis(2) - grid.origin[2]
    profile = np.cos(lam * z) + (beta / (nu * lam)) * np.sin(lam * z)
    u = np.zeros((3, *grid.dims))
    u[0] = amplitude * profile[None, None, :]
    meta = {"nu": nu, "beta": beta, "t": 0.0, "domain": DomainSpec(HALF_SPACE),
            "fixture": "shear-eigenmode", "decay_lambda": lam}
    return Snapshot(grid, VectorField(grid, u), None, meta)
