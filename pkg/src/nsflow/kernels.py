"""Explicit half-space oblique-derivative Green kernels.

The diagonal kernel for component i is

    g_i(x, y) = (1/4pi) [ 1/|x-y| - 1/|x-y*| + c * (2 b3 / |x-y*|) Theta_i(x, y*) ]

with y* the reflection of y across the boundary plane and Theta_i the
semi-infinite oblique correction integral.  The coefficient ``c`` on the
Theta term is exposed because two candidate normalizations exist:

* ``THETA_COEFF_PAPER = -1/3`` reproduces the printed reference formula;
* ``THETA_COEFF_IMAGE = +1`` is the value derived here by the method of
  images (it reduces to the classical Neumann kernel at a = 0, b = e3,
  and is the one that satisfies the boundary condition numerically).

``verify_kernel`` measures both facts; the reconstruction layer selects a
variant explicitly and records it, so neither choice is silently baked in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateDirectionError, ConfigurationError,
                     ParameterError, SingularityError)
from .geometry import DIRICHLET, CutoffProfile, ObliqueBC, reflect
from .quadrature import CompositeGL, adaptive_panels, dyadic_breakpoints

FOUR_PI = 4.0 * np.pi
THETA_COEFF_PAPER = -1.0 / 3.0
THETA_COEFF_IMAGE = 1.0


def gamma(x, y):
    """Fundamental-solution factor 1/|x - y| (no 4pi normalization)."""
    r = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    if np.any(r == 0.0):
        raise SingularityError("gamma evaluated at coincident points")
    return 1.0 / r


@dataclass(frozen=True)
class KernelGeometry:
    """Derived quantities for a source/target pair in the upper half-space."""

    x: np.ndarray
    y: np.ndarray
    ystar: np.ndarray
    r: float
    rstar: float
    xi: np.ndarray

    @classmethod
    def of(cls, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x[2] < 0 or y[2] < 0:
            raise ParameterError("points must lie in the closed upper half-space")
        ystar = reflect(y)
        r = float(np.linalg.norm(x - y))
        rstar = float(np.linalg.norm(x - ystar))
        if r == 0.0:
            raise SingularityError("coincident target and source")
        if rstar == 0.0:
            raise SingularityError("target coincides with the reflected source")
        return cls(x=x, y=y, ystar=ystar, r=r, rstar=rstar, xi=(x - ystar) / rstar)


# ---------------------------------------------------------------------------
# Theta integral


@dataclass(frozen=True)
class ThetaQuadrature:
    """Truncation + tolerance policy for the Theta integral.

    The integral over [S, inf) is discarded; ``truncation`` picks S so the
    tail is below ``abs_tol`` using |b3|/S-type decay at a = 0 and the
    exponential factor otherwise.
    """

    abs_tol: float = 1e-10
    max_evals: int = 60_000
    truncation_override: float | None = None

    def truncation(self, a, rstar):
        if self.truncation_override is not None:
            return self.truncation_override
        alpha = a * rstar
        # integrand <= 12 e^{alpha s} / s^2 for s >= 2
        if alpha >= -1e-300:
            return max(4.0, 12.0 / self.abs_tol)
        s = max(4.0, np.log(12.0 / self.abs_tol) / -alpha)
        for _ in range(3):
            tail = 12.0 * np.exp(alpha * s) / (s * s * -alpha)
            if tail <= self.abs_tol:
                break
            s *= 1.5
        return s


DEFAULT_QUAD = ThetaQuadrature()


def _check_direction(b, xi):
    bxi = float(np.dot(b, xi))
    if bxi <= -1.0 + 1e-14:
        raise DegenerateDirectionError(
            f"<b, xi> = {bxi} makes the kernel denominator vanish at s = 1"
        )
    return bxi


def theta(a, b, x, ystar, quad: ThetaQuadrature = DEFAULT_QUAD):
    """Oblique correction integral for one (x, y*) pair by adaptive quadrature."""
    if a > 0:
        raise ParameterError("a must be <= 0")
    b = np.asarray(b, dtype=float)
    if b[2] <= 0:
        raise ParameterError("b3 must be positive")
    x = np.asarray(x, dtype=float)
    ystar = np.asarray(ystar, dtype=float)
    w = x - ystar
    rstar = float(np.linalg.norm(w))
    if rstar == 0.0:
        raise SingularityError("x coincides with the reflected source")
    xi = w / rstar
    bxi = _check_direction(b, xi)
    alpha = a * rstar

    def f(s):
        den = 1.0 + 2.0 * bxi * s + s * s
        return np.exp(alpha * s) * (xi[2] + b[2] * s) * den**-1.5

    S = quad.truncation(a, rstar)
    val, err, _ = adaptive_panels(
        f, 0.0, S, quad.abs_tol, max_evals=quad.max_evals,
        seeds=dyadic_breakpoints(S, first=0.125),
    )
    return float(val)


def theta_with_gradient(a, b, x, ystar, quad: ThetaQuadrature = DEFAULT_QUAD):
    """(Theta, grad_w Theta) where w = x - y*.

    The gradient is obtained by differentiating under the integral; the
    decay assumptions (a <= 0, b3 > 0) keep every term integrable.
    """
    if a > 0:
        raise ParameterError("a must be <= 0")
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    ystar = np.asarray(ystar, dtype=float)
    w = x - ystar
    rstar = float(np.linalg.norm(w))
    if rstar == 0.0:
        raise SingularityError("x coincides with the reflected source")
    xi = w / rstar
    bxi = _check_direction(b, xi)
    alpha = a * rstar
    db_xi = b - bxi * xi            # d<b,xi>/dw * rstar
    dxi3 = np.array([0.0, 0.0, 1.0]) - xi[2] * xi

    def f(s):
        den = 1.0 + 2.0 * bxi * s + s * s
        d32 = den**-1.5
        core = np.exp(alpha * s) * d32
        num = xi[2] + b[2] * s
        out = np.empty((4, len(np.atleast_1d(s))))
        out[0] = core * num
        for j in range(3):
            out[1 + j] = core * (
                a * s * xi[j] * num
                + dxi3[j] / rstar
                - 3.0 * s * num * db_xi[j] / (rstar * den)
            )
        return out

    S = quad.truncation(a, rstar)
    val, err, _ = adaptive_panels(
        f, 0.0, S, quad.abs_tol, max_evals=quad.max_evals,
        seeds=dyadic_breakpoints(S, first=0.125),
    )
    return float(val[0]), val[1:]


# -- vectorized evaluation for axis-aligned b = (0, 0, b3) -------------------


def _batch_rule(abs_tol, order=16):
    S = ThetaQuadrature(abs_tol=abs_tol).truncation(0.0, 1.0)
    return CompositeGL(dyadic_breakpoints(S, first=0.125), order=order)


def theta_batch(alpha, xi3, b3=1.0, rule: CompositeGL | None = None, chunk=8192):
    """Theta for many pairs at once, parameterized by alpha = a*|x-y*| <= 0
    and xi3 = (x-y*)_3 / |x-y*| in [0, 1].  Requires lateral b = 0.

    Nodes beyond the reach of the exponential factor are skipped per chunk,
    so strongly damped batches cost a fraction of the a = 0 case.
    """
    if b3 <= 0:
        raise ParameterError("b3 must be positive")
    rule = rule or _batch_rule(1e-11)
    alpha = np.asarray(alpha, dtype=float).ravel()
    xi3 = np.asarray(xi3, dtype=float).ravel()
    out = np.empty_like(alpha)
    s_all = rule.nodes
    w_all = rule.weights
    with np.errstate(under="ignore"):
        for lo in range(0, alpha.size, chunk):
            hi = min(lo + chunk, alpha.size)
            al = alpha[lo:hi, None]
            x3 = xi3[lo:hi, None]
            a_top = float(al.max())
            if a_top < -1e-12:
                s_cut = max(16.0, -50.0 / a_top)
                keep = s_all <= s_cut
                s, wq = s_all[keep], w_all[keep]
            else:
                s, wq = s_all, w_all
            den = 1.0 + 2.0 * b3 * x3 * s[None, :] + s[None, :] ** 2
            vals = np.exp(al * s[None, :]) * (x3 + b3 * s[None, :]) / (den * np.sqrt(den))
            out[lo:hi] = vals @ wq
    return out


def _tail_k1(alpha):
    """int_1^inf (e^{alpha s} - 1)/s^2 ds, the source of the alpha*log(-alpha)
    kink of Theta at alpha = 0."""
    from scipy.special import exp1

    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        e1 = np.where(alpha < 0, exp1(np.where(alpha < 0, -alpha, 1.0)), 0.0)
    return np.expm1(alpha) + alpha * e1


def _tail_k2(alpha):
    """int_1^inf (e^{alpha s} - 1)/s^3 ds."""
    from scipy.special import exp1

    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        e1 = np.where(alpha < 0, exp1(np.where(alpha < 0, -alpha, 1.0)), 0.0)
    return 0.5 * np.expm1(alpha) + 0.5 * alpha * (np.exp(alpha) + alpha * e1)


class ThetaTable:
    """Tabulated Theta(alpha, xi3) for bulk kernel summation.

    The integrand's 1/s^2 and 1/s^3 tails produce alpha*log(-alpha)-type
    behaviour near alpha = 0 that defeats direct interpolation, so those two
    universal tail integrals are subtracted analytically (they are
    exponential integrals) and only the smooth remainder is splined.
    Accuracy against the adaptive integrator is tested.
    """

    def __init__(self, b3=1.0, alpha_min=-80.0, n_alpha=512, n_xi=384, rule=None):
        from scipy.interpolate import RectBivariateSpline

        if alpha_min >= 0:
            raise ParameterError("alpha_min must be negative")
        self.b3 = float(b3)
        self.alpha_min = float(alpha_min)
        self.u_max = np.log1p(-self.alpha_min)
        u = np.linspace(0.0, self.u_max, n_alpha)
        xi3 = np.linspace(0.0, 1.0, n_xi)
        U, X = np.meshgrid(u, xi3, indexing="ij")
        alpha = -np.expm1(U)
        values = theta_batch(alpha.ravel(), X.ravel(), b3=b3, rule=rule, chunk=n_xi)
        smooth = (
            values
            - _tail_k1(alpha.ravel())
            - self._c2(X.ravel()) * _tail_k2(alpha.ravel())
        )
        self._spline = RectBivariateSpline(u, xi3, smooth.reshape(n_alpha, n_xi))

    def _c2(self, xi3):
        # coefficient of the 1/s^3 term in the large-s expansion of the integrand
        return xi3 - 3.0 * self.b3 * xi3

    def __call__(self, alpha, xi3):
        alpha = np.asarray(alpha, dtype=float)
        xi3 = np.asarray(xi3, dtype=float)
        if np.any(alpha < self.alpha_min - 1e-9):
            raise ConfigurationError("alpha below the tabulated range")
        xi3c = np.clip(xi3, 0.0, 1.0)
        u = np.log1p(np.clip(-alpha, 0.0, None))
        smooth = self._spline.ev(u.ravel(), xi3c.ravel()).reshape(alpha.shape)
        return smooth + _tail_k1(alpha) + self._c2(xi3c) * _tail_k2(alpha)


# ---------------------------------------------------------------------------
# Green's matrix


def _component_value(bc, i, geom, include_theta, theta_coeff, quad):
    base = 1.0 / geom.r - 1.0 / geom.rstar
    if bc.mode[i] == DIRICHLET or not include_theta:
        return base / FOUR_PI
    b = bc.b_array(i)
    th = theta(bc.a[i], b, geom.x, geom.ystar, quad)
    return (base + theta_coeff * (2.0 * b[2] / geom.rstar) * th) / FOUR_PI


def green(bc: ObliqueBC, x, y, include_theta=True,
          theta_coeff=THETA_COEFF_PAPER, quad: ThetaQuadrature = DEFAULT_QUAD):
    """Diagonal Green's matrix value at one point pair, as a (3, 3) array."""
    geom = KernelGeometry.of(x, y)
    vals = [_component_value(bc, i, geom, include_theta, theta_coeff, quad)
            for i in range(3)]
    return np.diag(vals)


def green_batch(bc: ObliqueBC, X, Y, include_theta=True,
                theta_coeff=THETA_COEFF_PAPER, table: ThetaTable | None = None,
                rule: CompositeGL | None = None):
    """Per-component kernel values for paired point arrays, shape (N, 3).

    Pairs with r = 0 get NaN rather than raising; bulk callers mask the
    singular cell themselves.  Oblique components require b = (0, 0, b3).
    """
    X = np.asarray(X, dtype=float).reshape(-1, 3)
    Y = np.asarray(Y, dtype=float).reshape(-1, 3)
    Ystar = reflect(Y)
    d = X - Y
    w = X - Ystar
    r = np.linalg.norm(d, axis=1)
    rstar = np.linalg.norm(w, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(r > 0, 1.0 / r, np.nan) - np.where(rstar > 0, 1.0 / rstar, np.nan)
    out = np.empty((len(X), 3))
    theta_cache = {}
    for i in range(3):
        if bc.mode[i] == DIRICHLET or not include_theta:
            out[:, i] = base / FOUR_PI
            continue
        b = bc.b_array(i)
        if abs(b[0]) > 0 or abs(b[1]) > 0:
            raise ConfigurationError("green_batch requires axis-aligned b")
        key = (bc.a[i], b[2])
        if key not in theta_cache:
            alpha = bc.a[i] * rstar
            xi3 = np.where(rstar > 0, w[:, 2] / np.where(rstar > 0, rstar, 1.0), 0.0)
            if table is not None:
                th = table(alpha, xi3)
            else:
                th = theta_batch(alpha, xi3, b3=b[2], rule=rule)
            theta_cache[key] = th
        th = theta_cache[key]
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = theta_coeff * (2.0 * b[2] / rstar) * th
        out[:, i] = (base + corr) / FOUR_PI
    return out


def grad_green(bc: ObliqueBC, x, y, wrt="x", include_theta=True,
               theta_coeff=THETA_COEFF_PAPER, quad: ThetaQuadrature = DEFAULT_QUAD):
    """Analytic gradient of each diagonal component; rows are components,
    columns the derivative direction.  ``wrt`` selects x- or y-derivatives."""
    if wrt not in ("x", "y"):
        raise ParameterError("wrt must be 'x' or 'y'")
    geom = KernelGeometry.of(x, y)
    d = geom.x - geom.y
    w = geom.x - geom.ystar
    grad_gamma_x = -d / geom.r**3          # d/dx of 1/|x-y|
    grad_image_w = -w / geom.rstar**3      # d/dw of 1/|x-y*|, w = x - y*
    mirror = np.array([1.0, 1.0, -1.0])

    out = np.empty((3, 3))
    for i in range(3):
        if bc.mode[i] == DIRICHLET or not include_theta:
            grad_w_part = -grad_image_w
        else:
            b = bc.b_array(i)
            th, dth = theta_with_gradient(bc.a[i], b, geom.x, geom.ystar, quad)
            c = theta_coeff * 2.0 * b[2]
            grad_w_part = (
                -grad_image_w
                + c * (dth / geom.rstar - th * geom.xi / geom.rstar**2)
            )
        if wrt == "x":
            out[i] = (grad_gamma_x + grad_w_part) / FOUR_PI
        else:
            # y enters through |x-y| directly and through the mirrored w
            out[i] = (-grad_gamma_x - mirror * grad_w_part) / FOUR_PI
    return out


def near_far_split(g, r, zeta: CutoffProfile, d4):
    """Cutoff split: near = g*zeta(r/d4), far = g - near (so near + far == g
    bit-exactly)."""
    if r <= 0:
        raise ParameterError("separation must be positive")
    near = g * zeta(r / d4)
    return near, g - near


@dataclass
class GreenEval:
    value: np.ndarray           # (3, 3) diagonal
    grad_x: np.ndarray          # (3, 3): rows components, columns directions
    near: np.ndarray
    far: np.ndarray


def green_eval(bc, x, y, zeta: CutoffProfile, d4, **kw) -> GreenEval:
    val = green(bc, x, y, **kw)
    gx = grad_green(bc, x, y, wrt="x", **kw)
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    near, far = near_far_split(val, r, zeta, d4)
    return GreenEval(value=val, grad_x=gx, near=near, far=far)


# ---------------------------------------------------------------------------
# self-verification


@dataclass
class KernelReport:
    variant: str
    theta_coeff: float
    fd_step: float
    max_fd_laplacian: float
    max_bc_residual: np.ndarray          # per component
    bc_fit_theta_coeff: float | None
    decay_exponent: float
    n_samples: int
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "variant": self.variant,
            "theta_coeff": self.theta_coeff,
            "fd_step": self.fd_step,
            "max_fd_laplacian": self.max_fd_laplacian,
            "max_bc_residual": list(np.asarray(self.max_bc_residual, dtype=float)),
            "bc_fit_theta_coeff": self.bc_fit_theta_coeff,
            "decay_exponent": self.decay_exponent,
            "n_samples": self.n_samples,
            "notes": self.notes,
        }


def _fd_gradient(fun, x, h):
    """Second-order FD gradient; one-sided vertically when the wall is in the way."""
    g = np.zeros(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        if x[2] - h < 0 and j == 2:
            g[j] = (-3.0 * fun(x) + 4.0 * fun(x + e) - fun(x + 2 * e)) / (2 * h)
        else:
            g[j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def verify_kernel(bc: ObliqueBC, sample=None, h=1e-3, include_theta=True,
                  theta_coeff=THETA_COEFF_PAPER, n_boundary=200,
                  quad: ThetaQuadrature = DEFAULT_QUAD, seed=0):
    """Measure PDE and boundary-condition residuals of the kernel by finite
    differences.  Residuals are reported, not asserted; they are the raw
    material for deciding between Theta normalizations."""
    rng = np.random.default_rng(seed)
    if sample is None:
        sample = []
        while len(sample) < 20:
            x = rng.uniform(-1, 1, 3)
            y = rng.uniform(-1, 1, 3)
            x[2] = rng.uniform(0.3, 1.5)
            y[2] = rng.uniform(0.3, 1.5)
            if np.linalg.norm(x - y) >= 10 * h:
                sample.append((x, y))
    for x, y in sample:
        if np.linalg.norm(np.asarray(x) - np.asarray(y)) < 10 * h:
            raise ConfigurationError("sample pair closer than 10 fd steps")

    kw = dict(include_theta=include_theta, theta_coeff=theta_coeff, quad=quad)

    def g0(i, x, y):
        return green(bc, x, y, **kw)[i, i]

    # FD Laplacian in x over the three coordinate directions
    max_lap = 0.0
    for x, y in sample:
        x = np.asarray(x, dtype=float)
        for i in range(3):
            lap = -6.0 * g0(i, x, y)
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                lap += g0(i, x + e, y) + g0(i, x - e, y)
            max_lap = max(max_lap, abs(lap / h**2))

    # boundary-condition residual at x3 = 0, and the affine fit for the
    # Theta coefficient that would zero it
    max_bc = np.zeros(3)
    num = 0.0
    den = 0.0
    fit = None
    for _ in range(n_boundary):
        x = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0])
        y = rng.uniform(-1, 1, 3)
        y[2] = rng.uniform(0.4, 1.2)
        for i in range(3):
            if bc.mode[i] == DIRICHLET:
                res = green(bc, x, y, **kw)[i, i]
                max_bc[i] = max(max_bc[i], abs(res))
                continue
            b = bc.b_array(i)
            val = green(bc, x, y, **kw)[i, i]
            grad = _fd_gradient(lambda p: green(bc, p, y, **kw)[i, i], x, h)
            res = bc.a[i] * val + float(b @ grad)
            max_bc[i] = max(max_bc[i], abs(res))
            if include_theta:
                # residual is affine in the Theta coefficient; fit the zero
                val0 = green(bc, x, y, include_theta=False, quad=quad)[i, i]
                grad0 = _fd_gradient(
                    lambda p: green(bc, p, y, include_theta=False, quad=quad)[i, i], x, h)
                r0 = bc.a[i] * val0 + float(b @ grad0)
                r1 = (res - r0) / theta_coeff
                num += -r0 * r1
                den += r1 * r1
    if include_theta and den > 0:
        fit = num / den

    # far-field decay exponent of the first diagonal component
    y0 = np.array([0.2, -0.1, 0.5])
    radii = np.geomspace(5.0, 80.0, 8)
    vals = [abs(green(bc, np.array([r, 0.3, 0.7]), y0, **kw)[0, 0]) for r in radii]
    slope = np.polyfit(np.log(radii), np.log(vals), 1)[0]

    variant = "dirichlet" if not include_theta else (
        "paper-exact" if np.isclose(theta_coeff, THETA_COEFF_PAPER) else "custom")
    return KernelReport(
        variant=variant,
        theta_coeff=theta_coeff if include_theta else 0.0,
        fd_step=h,
        max_fd_laplacian=max_lap,
        max_bc_residual=max_bc,
        bc_fit_theta_coeff=fit,
        decay_exponent=float(slope),
        n_samples=len(sample),
    )
