"""Structured-grid fields, discrete operators, snapshot format, and flow
fixtures.

Grids are uniform and isotropic.  Differential operators are second order:
central in the interior (or across periodic wraps) and one-sided
second-order at non-periodic edges, which keeps them exact on quadratics.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigurationError, FormatError, ParameterError,
                     UnsupportedVersionError)
from .geometry import BALL, CYLINDER, HALF_SPACE, DomainSpec

MAGIC = b"NSFSNAP1"

INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2


@dataclass(frozen=True)
class Grid:
    origin: tuple[float, float, float]
    h: float
    dims: tuple[int, int, int]
    periodic: tuple[bool, bool, bool] = (False, False, False)
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.h <= 0:
            raise ParameterError("grid spacing must be positive")
        if any(n < 3 for n in self.dims):
            raise ParameterError("need at least 3 nodes per axis")
        if self.mask is not None and self.mask.shape != tuple(self.dims):
            raise ParameterError("mask shape mismatch")

    def axis(self, i):
        return self.origin[i] + self.h * np.arange(self.dims[i])

    def meshgrid(self):
        return np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij")

    def points(self):
        """All nodes as an (N, 3) array in C order of (i, j, k)."""
        X, Y, Z = self.meshgrid()
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)

    @property
    def cell_volume(self):
        return self.h**3

    def node_mask(self):
        if self.mask is not None:
            return self.mask
        return np.zeros(self.dims, dtype=np.int8)

    def interior_weights(self):
        """Midpoint quadrature weights: cell volume on non-exterior nodes."""
        w = np.where(self.node_mask() == EXTERIOR, 0.0, self.cell_volume)
        return w

    def to_header(self):
        return {
            "origin": list(self.origin), "spacing": self.h,
            "dims": list(self.dims), "periodicity": list(self.periodic),
        }

    @classmethod
    def channel(cls, dims, h, origin=(0.0, 0.0, 0.0)):
        """Laterally periodic channel with walls on the first and last z planes."""
        mask = np.zeros(dims, dtype=np.int8)
        mask[:, :, 0] = BOUNDARY
        mask[:, :, -1] = BOUNDARY
        return cls(tuple(origin), h, tuple(dims), (True, True, False), mask)

    @classmethod
    def halfspace_slab(cls, dims, h, origin=(0.0, 0.0, 0.0), lateral_periodic=False):
        """Slab sitting on the wall z = origin_z (wall nodes flagged boundary)."""
        mask = np.zeros(dims, dtype=np.int8)
        mask[:, :, 0] = BOUNDARY
        p = (lateral_periodic, lateral_periodic, False)
        return cls(tuple(origin), h, tuple(dims), p, mask)

    @classmethod
    def periodic_box(cls, dims, h, origin=(0.0, 0.0, 0.0)):
        return cls(tuple(origin), h, tuple(dims), (True, True, True))


def _check_finite(data, what):
    if not np.all(np.isfinite(data)):
        raise ParameterError(f"{what} contains non-finite values")


@dataclass
class ScalarField:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != tuple(self.grid.dims):
            raise ParameterError("scalar field shape mismatch")
        _check_finite(self.data, "scalar field")


@dataclass
class VectorField:
    grid: Grid
    data: np.ndarray          # (3, n1, n2, n3)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (3, *self.grid.dims):
            raise ParameterError("vector field shape mismatch")
        _check_finite(self.data, "vector field")

    def component(self, i):
        return self.data[i]

    def magnitude(self):
        return np.sqrt(np.sum(self.data**2, axis=0))


@dataclass
class TensorField:
    grid: Grid
    data: np.ndarray          # (3, 3, n1, n2, n3)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (3, 3, *self.grid.dims):
            raise ParameterError("tensor field shape mismatch")
        _check_finite(self.data, "tensor field")


# ---------------------------------------------------------------------------
# differential operators


def _derivative(arr, axis, h, periodic):
    """Second-order first derivative along one axis."""
    out = np.empty_like(arr)
    if periodic:
        out[...] = (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2 * h)
        return out
    sl = [slice(None)] * arr.ndim

    def at(idx):
        s = list(sl)
        s[axis] = idx
        return tuple(s)

    out[at(slice(1, -1))] = (arr[at(slice(2, None))] - arr[at(slice(0, -2))]) / (2 * h)
    out[at(0)] = (-3 * arr[at(0)] + 4 * arr[at(1)] - arr[at(2)]) / (2 * h)
    out[at(-1)] = (3 * arr[at(-1)] - 4 * arr[at(-2)] + arr[at(-3)]) / (2 * h)
    return out


def scalar_gradient(f: ScalarField) -> VectorField:
    g = f.grid
    comps = [_derivative(f.data, i, g.h, g.periodic[i]) for i in range(3)]
    return VectorField(g, np.stack(comps))


def curl(u: VectorField) -> VectorField:
    g = u.grid
    d = lambda c, ax: _derivative(u.data[c], ax, g.h, g.periodic[ax])
    w1 = d(2, 1) - d(1, 2)
    w2 = d(0, 2) - d(2, 0)
    w3 = d(1, 0) - d(0, 1)
    return VectorField(g, np.stack([w1, w2, w3]))


def divergence(u: VectorField) -> ScalarField:
    g = u.grid
    out = sum(_derivative(u.data[i], i, g.h, g.periodic[i]) for i in range(3))
    return ScalarField(g, out)


def sym_grad(u: VectorField) -> TensorField:
    """Rate-of-strain tensor (grad u + grad u^T) / 2."""
    g = u.grid
    grad = np.empty((3, 3, *g.dims))
    for i in range(3):
        for j in range(3):
            grad[i, j] = _derivative(u.data[i], j, g.h, g.periodic[j])
    return TensorField(g, 0.5 * (grad + grad.transpose(1, 0, 2, 3, 4)))


def velocity_gradient(u: VectorField) -> TensorField:
    g = u.grid
    grad = np.empty((3, 3, *g.dims))
    for i in range(3):
        for j in range(3):
            grad[i, j] = _derivative(u.data[i], j, g.h, g.periodic[j])
    return TensorField(g, grad)


# ---------------------------------------------------------------------------
# snapshots


@dataclass
class Snapshot:
    grid: Grid
    u: VectorField
    omega: VectorField | None = None
    metadata: dict = field(default_factory=dict)

    def omega_field(self) -> VectorField:
        """Stored vorticity when it is authoritative (synthetic fixtures),
        otherwise the discrete curl of u; avoids stale derived fields."""
        if self.omega is not None and self.metadata.get("omega_authoritative", False):
            return self.omega
        if self.u is not None and np.any(self.u.data):
            return curl(self.u)
        if self.omega is not None:
            return self.omega
        return curl(self.u)

    def consistency_error(self):
        """max |omega_stored - curl u|, or None when not applicable."""
        if self.omega is None or self.metadata.get("omega_authoritative", False):
            return None
        return float(np.max(np.abs(self.omega.data - curl(self.u).data)))


def write_snapshot(snap: Snapshot, path):
    header = dict(snap.grid.to_header())
    meta = dict(snap.metadata)
    header["domain"] = meta.pop("domain").to_dict() if isinstance(
        meta.get("domain"), DomainSpec) else meta.pop("domain", None)
    header["nu"] = meta.pop("nu", None)
    header["beta"] = meta.pop("beta", None)
    header["t"] = meta.pop("t", 0.0)
    header["version"] = 1
    stored = ["u"] + (["omega"] if snap.omega is not None else [])
    header["stored_fields"] = stored
    header["extra"] = meta
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in stored:
            arr = snap.u.data if name == "u" else snap.omega.data
            for c in range(3):
                # x-fastest layout
                fh.write(np.asarray(arr[c], dtype="<f8").ravel(order="F").tobytes())


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise FormatError(f"bad magic bytes {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("version") != 1:
            raise UnsupportedVersionError(f"snapshot version {header.get('version')}")
        dims = tuple(header["dims"])
        n = dims[0] * dims[1] * dims[2]
        grid = Grid(tuple(header["origin"]), header["spacing"], dims,
                    tuple(header["periodicity"]))
        fields = {}
        for name in header["stored_fields"]:
            comps = []
            for _ in range(3):
                raw = fh.read(8 * n)
                if len(raw) != 8 * n:
                    raise FormatError("truncated field payload")
                comps.append(np.frombuffer(raw, dtype="<f8").reshape(dims, order="F"))
            fields[name] = VectorField(grid, np.stack(comps))
    meta = dict(header.get("extra", {}))
    if header.get("domain"):
        meta["domain"] = DomainSpec.from_dict(header["domain"])
    for k in ("nu", "beta", "t"):
        if header.get(k) is not None:
            meta[k] = header[k]
    return Snapshot(grid=grid, u=fields["u"], omega=fields.get("omega"), metadata=meta)


# ---------------------------------------------------------------------------
# fixtures


def generate_shear(beta, nu, u0, grid: Grid) -> Snapshot:
    """Affine wall shear U(z) = u0 (nu/beta + z): the discrete Navier residual
    beta*U(0) - nu*U'(0) vanishes identically."""
    if beta <= 0 or nu <= 0:
        raise ParameterError("beta and nu must be positive")
    _, _, Z = grid.meshgrid()
    u = np.zeros((3, *grid.dims))
    u[0] = u0 * (nu / beta + Z)
    meta = {"nu": nu, "beta": beta, "t": 0.0, "domain": DomainSpec(HALF_SPACE),
            "fixture": "shear", "u0": u0}
    return Snapshot(grid, VectorField(grid, u), None, meta)


def generate_taylor_green(grid: Grid) -> Snapshot:
    """Planar Taylor-Green cells: vorticity is everywhere parallel to e3."""
    X, Y, _ = grid.meshgrid()
    u = np.zeros((3, *grid.dims))
    u[0] = np.sin(X) * np.cos(Y)
    u[1] = -np.cos(X) * np.sin(Y)
    meta = {"nu": 1.0, "beta": 1.0, "t": 0.0, "fixture": "taylor-green"}
    return Snapshot(grid, VectorField(grid, u), None, meta)


def misalignment_rate(rho_target, extent):
    """Direction-rotation rate g such that sup over separations in (0, extent]
    of |sin(g*d)|/sqrt(d) equals rho_target."""
    if rho_target < 0:
        raise ParameterError("rho_target must be nonnegative")
    if rho_target == 0:
        return 0.0

    d = np.linspace(1e-6, extent, 4000)

    def achieved(g):
        return float(np.max(np.abs(np.sin(g * d)) / np.sqrt(d)))

    g_hi = 1.0
    while achieved(g_hi) < rho_target:
        g_hi *= 2.0
        if g_hi > 1e8:
            raise ParameterError("rho_target out of reach for this extent")
    g_lo = 0.0
    for _ in range(80):
        g_mid = 0.5 * (g_lo + g_hi)
        if achieved(g_mid) < rho_target:
            g_lo = g_mid
        else:
            g_hi = g_mid
    return 0.5 * (g_lo + g_hi)


def generate_misaligned(rho_target, grid: Grid) -> Snapshot:
    """Unit-vorticity field whose direction rotates with x1 at a rate tuned so
    the true coherence modulus equals rho_target.

    The vorticity is synthetic (not the curl of any stored velocity) and is
    marked authoritative so diagnostics consume it as-is.
    """
    extent = grid.h * (grid.dims[0] - 1)
    g = misalignment_rate(rho_target, extent)
    X, _, _ = grid.meshgrid()
    phi = g * X
    w = np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)])
    u = VectorField(grid, np.zeros((3, *grid.dims)))
    meta = {"t": 0.0, "fixture": "misaligned", "rho_target": rho_target,
            "rotation_rate": g, "omega_authoritative": True}
    return Snapshot(grid, u, VectorField(grid, w), meta)


class _GaussianProfile:
    """exp(-(s-c)^2 / (2 sigma^2)) with derivatives."""

    def __init__(self, center, sigma):
        self.c = center
        self.s = sigma

    def val(self, s):
        return np.exp(-((s - self.c) ** 2) / (2 * self.s**2))

    def d1(self, s):
        return -(s - self.c) / self.s**2 * self.val(s)

    def d2(self, s):
        return ((s - self.c) ** 2 / self.s**4 - 1.0 / self.s**2) * self.val(s)


class _WallProfile:
    """Z(z) = (z + c z^2) exp(-z^2/2), Robin-compatible at the wall:
    a Z'(0) + Z''(0) = 0 for c = -a/2; Z(0) = 0."""

    def __init__(self, a):
        self.c = -a / 2.0

    def val(self, z):
        return (z + self.c * z * z) * np.exp(-0.5 * z * z)

    def d1(self, z):
        e = np.exp(-0.5 * z * z)
        p = z + self.c * z * z
        return (1 + 2 * self.c * z) * e - z * p * e

    def d2(self, z):
        e = np.exp(-0.5 * z * z)
        p = z + self.c * z * z
        dp = 1 + 2 * self.c * z
        return (2 * self.c) * e - 2 * z * dp * e + (z * z - 1) * p * e


class _DirichletProfile:
    """Z(z) = z^2 exp(-z^2/2): Z(0) = Z'(0) = 0 (no-slip variant)."""

    def val(self, z):
        return z * z * np.exp(-0.5 * z * z)

    def d1(self, z):
        return (2 * z - z**3) * np.exp(-0.5 * z * z)

    def d2(self, z):
        return (2 - 5 * z * z + z**4) * np.exp(-0.5 * z * z)


def generate_boundary_vortex(grid: Grid, a=-1.0, dirichlet=False,
                             lateral_center=None, sigma=1.0,
                             nu=1.0, beta=None) -> Snapshot:
    """Localized solenoidal field near the wall satisfying the oblique
    boundary condition componentwise.

    Built from the vector potential A = (0, psi, 0) with separable
    psi = X(x1) Y(x2) Z(x3): u = (-dpsi/dz, 0, dpsi/dx1) is exactly
    divergence free, u3 vanishes on the wall, and Z is chosen so
    a*u1 + du1/dz = 0 there (or u1 = 0 for the Dirichlet variant).
    The analytic vorticity is stored alongside u.
    """
    if lateral_center is None:
        c1 = grid.origin[0] + 0.5 * grid.h * (grid.dims[0] - 1)
        c2 = grid.origin[1] + 0.5 * grid.h * (grid.dims[1] - 1)
    else:
        c1, c2 = lateral_center
    X = _GaussianProfile(c1, sigma)
    Y = _GaussianProfile(c2, sigma)
    Z = _DirichletProfile() if dirichlet else _WallProfile(a)

    x, y, z = grid.meshgrid()
    xv, xd1, xd2 = X.val(x), X.d1(x), X.d2(x)
    yv, yd1 = Y.val(y), Y.d1(y)
    zv, zd1, zd2 = Z.val(z), Z.d1(z), Z.d2(z)

    u = np.stack([-xv * yv * zd1, np.zeros_like(xv), xd1 * yv * zv])
    w = np.stack([
        xd1 * yd1 * zv,
        -(xd2 * yv * zv + xv * yv * zd2),
        xv * yd1 * zd1,
    ])
    meta = {
        "nu": nu, "beta": beta if beta is not None else -a * nu,
        "t": 0.0, "domain": DomainSpec(HALF_SPACE),
        "fixture": "boundary-vortex", "bc_a": (0.0 if dirichlet else a),
        "dirichlet": dirichlet, "sigma": sigma,
        "omega_analytic": True,
    }
    return Snapshot(grid, VectorField(grid, u), VectorField(grid, w), meta)
