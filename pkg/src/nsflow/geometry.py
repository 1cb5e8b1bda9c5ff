"""Domains, boundary charts, and boundary-condition algebra.

Everything here is analytic: the three admitted domains (half-space, ball,
cylindrical duct) have closed-form boundary graphs, so chart maps and their
inverses are exact.  All objects are immutable after construction and all
operations are pure functions.

Orientation conventions used throughout the package:

* the fluid occupies the side where the straightened third coordinate is
  positive, so boundary points map to ``z3' = 0`` and interior points to
  ``z3' > 0``;
* the outward unit normal ``n`` points away from the fluid; chart rotations
  map ``-n`` to the third chart axis;
* oblique-derivative vectors ``b`` are stated in straightened coordinates
  with ``b3 = +1`` (pointing into the fluid).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, OutOfChartError, ParameterError

HALF_SPACE = "half-space"
BALL = "ball"
CYLINDER = "cylinder-duct"
_KINDS = (HALF_SPACE, BALL, CYLINDER)


@dataclass(frozen=True)
class DomainSpec:
    """One of the three constant-principal-curvature domains."""

    kind: str
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if self.kind in (BALL, CYLINDER):
            if self.radius is None or self.radius <= 0:
                raise ParameterError(f"{self.kind} requires radius > 0")

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("radius"))


def principal_curvatures(domain: DomainSpec) -> tuple[float, float]:
    """(kappa1, kappa2), nonnegative convention, constant over the boundary."""
    if domain.kind == HALF_SPACE:
        return 0.0, 0.0
    if domain.kind == BALL:
        return 1.0 / domain.radius, 1.0 / domain.radius
    return 1.0 / domain.radius, 0.0


@dataclass(frozen=True)
class SurfaceGeometry:
    """Second fundamental form data in the principal frame."""

    kappa1: float
    kappa2: float

    @property
    def second_fundamental_form(self):
        return np.diag([self.kappa1, self.kappa2])

    @property
    def mean_curvature(self):
        return self.kappa1 + self.kappa2

    @property
    def norm_inf(self):
        """Pointwise operator norm of II, constant on these surfaces."""
        return max(abs(self.kappa1), abs(self.kappa2))

    @classmethod
    def of(cls, domain: DomainSpec):
        k1, k2 = principal_curvatures(domain)
        return cls(k1, k2)


def outward_normal(domain: DomainSpec, points):
    """Outward unit normal at boundary points (array of shape (..., 3))."""
    p = np.asarray(points, dtype=float)
    if domain.kind == HALF_SPACE:
        n = np.zeros_like(p)
        n[..., 2] = -1.0
        return n
    if domain.kind == BALL:
        return p / np.linalg.norm(p, axis=-1, keepdims=True)
    n = p.copy()
    n[..., 2] = 0.0
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# oblique boundary conditions


DIRICHLET = "dirichlet"
REGULAR_OBLIQUE = "regular-oblique"


@dataclass(frozen=True)
class ObliqueBC:
    """Per-component coefficients of the diagonal boundary condition
    a^(i) u^i + b^(i) . grad u^i = 0 in straightened coordinates."""

    a: tuple[float, float, float]
    b: tuple[tuple[float, float, float], ...]
    mode: tuple[str, str, str] = (REGULAR_OBLIQUE, REGULAR_OBLIQUE, DIRICHLET)

    def __post_init__(self):
        if len(self.a) != 3 or len(self.b) != 3 or len(self.mode) != 3:
            raise ParameterError("ObliqueBC needs three components")
        for i in range(3):
            if self.mode[i] == REGULAR_OBLIQUE:
                if self.a[i] > 0:
                    raise ParameterError(f"component {i}: a must be <= 0, got {self.a[i]}")
                nb = float(np.linalg.norm(self.b[i]))
                if abs(nb - 1.0) > 1e-12:
                    raise ParameterError(f"component {i}: |b| must be 1, got {nb}")
            elif self.mode[i] != DIRICHLET:
                raise ParameterError(f"component {i}: unknown mode {self.mode[i]!r}")

    def b_array(self, i):
        return np.asarray(self.b[i], dtype=float)

    def to_dict(self):
        return {"a": list(self.a), "b": [list(v) for v in self.b], "mode": list(self.mode)}


def dirichlet_bc() -> ObliqueBC:
    """All three components Dirichlet (pure image-pair kernel)."""
    z = (0.0, 0.0, 0.0)
    return ObliqueBC(a=(0.0, 0.0, 0.0), b=(z, z, z), mode=(DIRICHLET,) * 3)


def navier_to_oblique(beta, nu, kappa1, kappa2) -> ObliqueBC:
    """Reduce Navier + kinematic conditions to constant-coefficient oblique form.

    In the principal frame the tangential components obey
    (beta + nu*kappa_i) u^i + nu * d u^i / d(inward normal) = 0, which after
    dividing by nu gives a^(i) = -(beta + nu*kappa_i)/nu with unit b = e3.
    The normal component is Dirichlet (impermeable wall).
    """
    if beta <= 0 or nu <= 0:
        raise ParameterError("slip length and viscosity must be positive")
    a1 = -(beta + nu * kappa1) / nu
    a2 = -(beta + nu * kappa2) / nu
    e3 = (0.0, 0.0, 1.0)
    return ObliqueBC(
        a=(a1, a2, -1.0),
        b=(e3, e3, (0.0, 0.0, 0.0)),
        mode=(REGULAR_OBLIQUE, REGULAR_OBLIQUE, DIRICHLET),
    )


def is_regular(bc: ObliqueBC, n, tol=1e-12) -> bool:
    """True iff every oblique component has b not tangent to the boundary."""
    n = np.asarray(n, dtype=float)
    for i in range(3):
        if bc.mode[i] == REGULAR_OBLIQUE and abs(float(bc.b_array(i) @ n)) <= tol:
            return False
    return True


def bc_component_labels(bc: ObliqueBC, n, tol=1e-12):
    """Classify each component: dirichlet / neumann / oblique / tangential."""
    n = np.asarray(n, dtype=float)
    labels = []
    for i in range(3):
        if bc.mode[i] == DIRICHLET:
            labels.append("dirichlet")
            continue
        b = bc.b_array(i)
        bn = float(b @ n)
        if abs(bn) <= tol:
            labels.append("tangential")
        elif abs(abs(bn) - 1.0) <= tol and abs(bc.a[i]) <= tol:
            labels.append("neumann")
        else:
            labels.append("oblique")
    return labels


# ---------------------------------------------------------------------------
# reflection and cutoff profile


def reflect(z):
    """Mirror across the straightened boundary plane: (z1, z2, z3) -> (z1, z2, -z3)."""
    out = np.array(z, dtype=float, copy=True)
    out[..., 2] *= -1.0
    return out


def _smoothstep_quintic(t):
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _smoothstep_cubic(t):
    return t * t * (3.0 - 2.0 * t)


class CutoffProfile:
    """Nonincreasing cutoff: 1 on [0, 1/4], 0 on [3/4, inf), |zeta'| <= 4.

    The transition is a polynomial smoothstep.  The quintic variant (default)
    has max slope 15/8 over the transition, hence sup|zeta'| = 15/4; the cubic
    alternative has sup|zeta'| = 3.  Two distinct admissible profiles exist so
    tests can difference them.
    """

    def __init__(self, kind="quintic"):
        if kind not in ("quintic", "cubic"):
            raise ParameterError(f"unknown cutoff kind {kind!r}")
        self.kind = kind
        self._s = _smoothstep_quintic if kind == "quintic" else _smoothstep_cubic

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip((0.75 - r) * 2.0, 0.0, 1.0)
        out = self._s(t)
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip((0.75 - r) * 2.0, 0.0, 1.0)
        if self.kind == "quintic":
            ds = 30.0 * t * t * (t - 1.0) * (t - 1.0)
        else:
            ds = 6.0 * t * (1.0 - t)
        out = -2.0 * ds
        out = np.where((r <= 0.25) | (r >= 0.75), 0.0, out)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# boundary charts


class BoundaryChart:
    """A boundary-straightening chart.

    ``rotation`` maps world displacements into chart coordinates,
    z = rotation @ (x - center); the boundary is the graph z3 = F(z1, z2)
    there, and the straightening subtracts the graph height.  For the three
    analytic domains F is exact (no fitting).
    """

    def __init__(self, center, rotation, height_kind, height_radius=None,
                 d1=None, d2=1.0, d4=None):
        self.center = np.asarray(center, dtype=float)
        self.rotation = np.asarray(rotation, dtype=float)
        if self.rotation.shape != (3, 3):
            raise ConfigurationError("rotation must be 3x3")
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(3), atol=1e-10):
            raise ConfigurationError("rotation must be orthogonal")
        if np.linalg.det(self.rotation) < 0:
            raise ConfigurationError("rotation must have det +1")
        if height_kind not in ("flat", "sphere", "cylinder"):
            raise ConfigurationError(f"unknown height kind {height_kind!r}")
        if height_kind != "flat" and (height_radius is None or height_radius <= 0):
            raise ConfigurationError("curved height function needs a radius")
        self.height_kind = height_kind
        self.height_radius = height_radius
        self.d1 = float(d1 if d1 is not None else d2)
        self.d2 = float(d2)
        if self.d1 <= 0 or self.d2 <= 0:
            raise ConfigurationError("chart extents must be positive")
        self.d3 = min(self.d1, self.d2) / 4.0
        self.d4 = float(d4 if d4 is not None else self.d3 / 2.0)
        if self.d4 > self.d3 / 2.0 + 1e-15:
            raise ConfigurationError("d4 must not exceed d3/2")

    # -- height function -----------------------------------------------------

    def height(self, z1, z2):
        if self.height_kind == "flat":
            return np.zeros_like(np.asarray(z1, dtype=float))
        R = self.height_radius
        # outside the graph's validity disc the result is NaN, which callers
        # treat as out-of-chart
        with np.errstate(invalid="ignore"):
            if self.height_kind == "sphere":
                return R - np.sqrt(R * R - z1 * z1 - z2 * z2)
            return R - np.sqrt(R * R - z1 * z1)

    def height_grad(self, z1, z2):
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        if self.height_kind == "flat":
            return np.zeros_like(z1), np.zeros_like(z2)
        R = self.height_radius
        if self.height_kind == "sphere":
            root = np.sqrt(R * R - z1 * z1 - z2 * z2)
            return z1 / root, z2 / root
        root = np.sqrt(R * R - z1 * z1)
        return z1 / root, np.zeros_like(z2)

    # -- chart maps ------------------------------------------------------------

    def local(self, x):
        """World point(s) -> rotated chart coordinates (before straightening)."""
        x = np.asarray(x, dtype=float)
        return (x - self.center) @ self.rotation.T

    def contains(self, x, slack=1e-12):
        z = self.local(x)
        zp3 = z[..., 2] - self.height(z[..., 0], z[..., 1])
        return (
            (np.abs(z[..., 0]) <= self.d2 + slack)
            & (np.abs(z[..., 1]) <= self.d2 + slack)
            & (zp3 >= -self.d2 * 1e-9 - slack)
            & (zp3 <= 2 * self.d2 + slack)
        )

    def straighten(self, x, check=True):
        """T_b(x): flatten the boundary graph.  Boundary points map to z3' = 0."""
        z = self.local(x)
        if check and not np.all(self.contains(x)):
            raise OutOfChartError("point outside chart extents")
        zp = z.copy()
        zp[..., 2] = z[..., 2] - self.height(z[..., 0], z[..., 1])
        return zp

    def unstraighten(self, zp):
        """Exact inverse of straighten."""
        zp = np.asarray(zp, dtype=float)
        z = zp.copy()
        z[..., 2] = zp[..., 2] + self.height(zp[..., 0], zp[..., 1])
        return z @ self.rotation + self.center

    def jacobian(self, x):
        """grad T_b at x: unit-determinant product of the graph shear and the rotation."""
        z = self.local(np.asarray(x, dtype=float))
        f1, f2 = self.height_grad(z[..., 0], z[..., 1])
        shear = np.zeros(z.shape[:-1] + (3, 3))
        shear[..., 0, 0] = 1.0
        shear[..., 1, 1] = 1.0
        shear[..., 2, 2] = 1.0
        shear[..., 2, 0] = -f1
        shear[..., 2, 1] = -f2
        return shear @ self.rotation

    # -- chart distortion algebra ----------------------------------------------

    def distortion(self, x):
        """Graph distortion matrix at x: identity plus the height gradient in row 3.

        Its symmetric square I + R is what turns the straightened separation
        into the chart-coordinate one; see ``rf_vector``.
        """
        z = self.local(np.asarray(x, dtype=float))
        f1, f2 = self.height_grad(z[..., 0], z[..., 1])
        m = np.zeros(z.shape[:-1] + (3, 3))
        m[..., 0, 0] = 1.0
        m[..., 1, 1] = 1.0
        m[..., 2, 2] = 1.0
        m[..., 2, 0] = f1
        m[..., 2, 1] = f2
        return m

    def psi_sharp(self, x, y):
        """Distortion at y applied to the chart-coordinate separation."""
        xi = self.distortion(y)
        d = self.local(x) - self.local(y)
        return (xi @ xi.swapaxes(-1, -2) @ d[..., None])[..., 0]

    def psi_flat(self, x, y):
        """Distortion at x applied to the chart-coordinate separation."""
        xi = self.distortion(x)
        d = self.local(x) - self.local(y)
        return (xi @ xi.swapaxes(-1, -2) @ d[..., None])[..., 0]

    def to_dict(self):
        return {
            "center": self.center.tolist(),
            "rotation": self.rotation.ravel().tolist(),
            "height_kind": self.height_kind,
            "height_radius": self.height_radius,
            "d1": self.d1, "d2": self.d2, "d3": self.d3, "d4": self.d4,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            center=d["center"],
            rotation=np.asarray(d["rotation"]).reshape(3, 3),
            height_kind=d["height_kind"],
            height_radius=d["height_radius"],
            d1=d["d1"], d2=d["d2"], d4=d["d4"],
        )


def rf_vector(grad_f, w):
    """Quadratic distortion remainder [f1*w3, f2*w3, f1*w1 + f2*w2 + |grad f|^2 w3]."""
    f1, f2 = grad_f
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    out[..., 0] = f1 * w[..., 2]
    out[..., 1] = f2 * w[..., 2]
    out[..., 2] = f1 * w[..., 0] + f2 * w[..., 1] + (f1 * f1 + f2 * f2) * w[..., 2]
    return out


# ---------------------------------------------------------------------------
# atlas / partition of unity


def _tangent_frame(normal):
    """Orthonormal (t1, t2) with t1 x t2 = -normal, so rows (t1, t2, -n) are in SO(3)."""
    n = np.asarray(normal, dtype=float)
    seed = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = seed - (seed @ n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(-n, t1)
    return t1, t2


def _fibonacci_sphere(n):
    i = np.arange(n, dtype=float) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + 5.0**0.5) * i
    return np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)], axis=-1
    )


def _icosahedron():
    p = (1.0 + 5.0**0.5) / 2.0
    v = []
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            v += [(0.0, s1, s2 * p), (s1, s2 * p, 0.0), (s2 * p, 0.0, s1)]
    v = np.asarray(v)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sphere_centers(n):
    """Well-spread unit directions with their covering radius (max angular gap)."""
    centers = _icosahedron() if n <= 12 else _fibonacci_sphere(n)
    probes = _fibonacci_sphere(4096)
    cosines = probes @ centers.T
    gap = float(np.arccos(np.clip(cosines.max(axis=1), -1, 1)).max())
    return centers, gap


@dataclass
class PartitionOfUnity:
    """Boundary charts + interior cubes with normalized smooth weights."""

    domain: DomainSpec
    charts: list
    cube_centers: np.ndarray          # (n_cubes, 3)
    cube_halfwidth: float             # d1
    profile: CutoffProfile = field(default_factory=CutoffProfile)

    def _raw_weights(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        q = lambda t: self.profile(0.75 * np.clip(t, 0.0, None))
        cols = []
        for ch in self.charts:
            z = (pts - ch.center) @ ch.rotation.T
            zp3 = z[:, 2] - ch.height(z[:, 0], z[:, 1])
            inside = ch.contains(pts)
            w = (
                q(np.abs(z[:, 0]) / ch.d2)
                * q(np.abs(z[:, 1]) / ch.d2)
                * q(np.clip(zp3, 0.0, None) / (2 * ch.d2))
            )
            cols.append(np.where(inside, w, 0.0))
        for c in self.cube_centers:
            t = np.abs(pts - c[None, :]) / self.cube_halfwidth
            w = q(t[:, 0]) * q(t[:, 1]) * q(t[:, 2])
            cols.append(np.where(np.all(t <= 1.0, axis=1), w, 0.0))
        return np.stack(cols, axis=0) if cols else np.zeros((0, len(pts)))

    def weights(self, points):
        """chi_c(points), shape (n_members, n_points); columns sum to 1."""
        raw = self._raw_weights(points)
        total = raw.sum(axis=0)
        if np.any(total <= 0):
            raise ConfigurationError("partition of unity does not cover all points")
        return raw / total[None, :]

    @property
    def n_charts(self):
        return len(self.charts)

    def chart_weight(self, index, points):
        return self.weights(points)[index]

    def to_json(self):
        doc = {
            "domain": self.domain.to_dict(),
            "charts": [c.to_dict() for c in self.charts],
            "cube_centers": np.asarray(self.cube_centers).tolist(),
            "cube_halfwidth": self.cube_halfwidth,
            "profile": self.profile.kind,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(
            domain=DomainSpec.from_dict(doc["domain"]),
            charts=[BoundaryChart.from_dict(c) for c in doc["charts"]],
            cube_centers=np.asarray(doc["cube_centers"], dtype=float).reshape(-1, 3),
            cube_halfwidth=doc["cube_halfwidth"],
            profile=CutoffProfile(doc["profile"]),
        )


def build_atlas(domain: DomainSpec, box, chart_density=8, profile=None) -> PartitionOfUnity:
    """Cover the domain (intersected with ``box``) by boundary charts and
    interior cubes carrying a normalized partition of unity.

    ``box`` is ((x_lo, y_lo, z_lo), (x_hi, y_hi, z_hi)).  For the half-space a
    single flat chart sized to contain the whole box suffices; curved domains
    get ``chart_density`` boundary charts plus an interior cube lattice.
    """
    profile = profile or CutoffProfile()
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if np.any(hi <= lo):
        raise ConfigurationError("degenerate bounding box")

    if domain.kind == HALF_SPACE:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        d2 = 2.0 * float(max(half[0], half[1], hi[2]))
        chart = BoundaryChart(
            center=[mid[0], mid[1], 0.0], rotation=np.eye(3),
            height_kind="flat", d1=d2, d2=d2,
        )
        pou = PartitionOfUnity(domain, [chart], np.zeros((0, 3)), d2, profile)
    elif domain.kind == BALL:
        # the graph chart over the tangent plane is only valid out to a
        # lateral square of half-width 0.7 R, so a dozen well-spread charts
        # is the coarsest admissible cover; treat chart_density as a floor
        R = domain.radius
        n = max(int(chart_density), 12)
        normals, gap = _sphere_centers(n)
        d2 = 0.7 * R
        if 1.1 * R * np.sin(min(gap, np.pi / 2)) > d2:
            raise ConfigurationError("chart_density too low to cover the sphere")
        d1 = d2 / 2.0
        charts = []
        for nrm in normals:
            t1, t2 = _tangent_frame(nrm)
            rot = np.stack([t1, t2, -nrm], axis=0)
            charts.append(BoundaryChart(
                center=R * nrm, rotation=rot,
                height_kind="sphere", height_radius=R, d1=d2, d2=d2,
            ))
        centers = _cube_lattice_ball(R, d1)
        pou = PartitionOfUnity(domain, charts, centers, d1, profile)
    else:
        R = domain.radius
        z_lo, z_hi = float(lo[2]), float(hi[2])
        n_theta = max(int(chart_density), 8)
        d2 = 0.7 * R
        if 1.1 * R * np.sin(np.pi / n_theta) > d2:
            raise ConfigurationError("chart_density too low to cover the cylinder")
        d1 = d2 / 2.0
        n_z = max(1, int(np.ceil((z_hi - z_lo) / d2)))
        charts = []
        for zi in range(n_z):
            zc = z_lo + (zi + 0.5) * (z_hi - z_lo) / n_z
            for k in range(n_theta):
                th = 2.0 * np.pi * k / n_theta
                nrm = np.array([np.cos(th), np.sin(th), 0.0])
                t_az = np.array([-np.sin(th), np.cos(th), 0.0])
                rot = np.stack([t_az, np.cross(-nrm, t_az), -nrm], axis=0)
                charts.append(BoundaryChart(
                    center=[R * np.cos(th), R * np.sin(th), zc], rotation=rot,
                    height_kind="cylinder", height_radius=R, d1=d2, d2=d2,
                ))
        centers = _cube_lattice_cylinder(R, z_lo, z_hi, d1)
        pou = PartitionOfUnity(domain, charts, centers, d1, profile)

    _check_coverage(pou, lo, hi)
    return pou


def _cube_lattice_ball(R, d1):
    reach = R - d1 * (1.0 + np.sqrt(3.0))
    if reach <= 0:
        return np.zeros((0, 3))
    ax = np.arange(-reach, reach + 1e-12, d1)
    gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)
    keep = np.linalg.norm(pts, axis=1) + d1 * np.sqrt(3.0) <= R - d1
    return pts[keep]


def _cube_lattice_cylinder(R, z_lo, z_hi, d1):
    reach = R - d1 * (1.0 + np.sqrt(2.0))
    if reach <= 0 or z_hi - z_lo <= 0:
        return np.zeros((0, 3))
    ax = np.arange(-reach, reach + 1e-12, d1)
    az = np.arange(z_lo, z_hi + 1e-12, d1)
    gx, gy, gz = np.meshgrid(ax, ax, az, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)
    keep = np.linalg.norm(pts[:, :2], axis=1) + d1 * np.sqrt(2.0) <= R - d1
    return pts[keep]


def _interior_mask(domain, pts):
    if domain.kind == HALF_SPACE:
        return pts[:, 2] >= 0
    if domain.kind == BALL:
        return np.linalg.norm(pts, axis=1) <= domain.radius
    return np.linalg.norm(pts[:, :2], axis=1) <= domain.radius


def _check_coverage(pou, lo, hi, n=9):
    axes = [np.linspace(lo[i], hi[i], n) for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)
    pts = pts[_interior_mask(pou.domain, pts)]
    if len(pts) == 0:
        raise ConfigurationError("bounding box does not intersect the domain")
    raw = pou._raw_weights(pts)
    total = raw.sum(axis=0)
    if np.any(total <= 1e-300):
        frac = float(np.mean(total <= 1e-300))
        raise ConfigurationError(
            f"atlas leaves {frac:.1%} of probe points uncovered; increase chart_density"
        )


# ---------------------------------------------------------------------------
# analytic surface sampling (for curved-domain boundary quadrature)


def surface_samples(domain: DomainSpec, n, z_range=(0.0, 1.0)):
    """Quadrature sample set on the boundary surface.

    Returns (points, weights, normals, t1, t2) where t1, t2 are the principal
    tangent directions matching the (kappa1, kappa2) ordering.  Weights sum to
    the sampled surface area.
    """
    if domain.kind == BALL:
        R = domain.radius
        mu, wmu = np.polynomial.legendre.leggauss(n)
        theta = 2.0 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        MU, TH = np.meshgrid(mu, theta, indexing="ij")
        sin_phi = np.sqrt(1.0 - MU * MU)
        pts = R * np.stack([sin_phi * np.cos(TH), sin_phi * np.sin(TH), MU], axis=-1)
        w = (R * R * wmu[:, None] * (2.0 * np.pi / (2 * n))) * np.ones_like(TH)
        pts = pts.reshape(-1, 3)
        w = w.ravel()
        nrm = pts / R
        t1 = np.stack([-np.sin(TH), np.cos(TH), np.zeros_like(TH)], axis=-1).reshape(-1, 3)
        t2 = np.cross(nrm, t1)
        return pts, w, nrm, t1, t2
    if domain.kind == CYLINDER:
        R = domain.radius
        z0, z1 = z_range
        theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        z = z0 + (z1 - z0) * (np.arange(n) + 0.5) / n
        TH, Z = np.meshgrid(theta, z, indexing="ij")
        pts = np.stack([R * np.cos(TH), R * np.sin(TH), Z], axis=-1).reshape(-1, 3)
        w = np.full(pts.shape[0], R * (2.0 * np.pi / n) * ((z1 - z0) / n))
        nrm = pts.copy()
        nrm[:, 2] = 0.0
        nrm /= R
        t1 = np.stack([-nrm[:, 1], nrm[:, 0], np.zeros(len(pts))], axis=-1)
        t2 = np.tile(np.array([0.0, 0.0, 1.0]), (len(pts), 1))
        return pts, w, nrm, t1, t2
    # half-space: lattice on z = 0 over the unit square scaled by z_range
    s0, s1 = z_range
    ax = s0 + (s1 - s0) * (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([X, Y, np.zeros_like(X)], axis=-1).reshape(-1, 3)
    w = np.full(pts.shape[0], ((s1 - s0) / n) ** 2)
    nrm = np.tile(np.array([0.0, 0.0, -1.0]), (len(pts), 1))
    t1 = np.tile(np.array([1.0, 0.0, 0.0]), (len(pts), 1))
    t2 = np.tile(np.array([0.0, 1.0, 0.0]), (len(pts), 1))
    return pts, w, nrm, t1, t2
