import numpy as np
import pytest
from scipy import integrate

from nsflow import geometry as G
from nsflow import kernels as K
from nsflow.errors import DegenerateDirectionError, ParameterError, SingularityError

E3 = np.array([0.0, 0.0, 1.0])


def halfspace_bc(beta=1.0, nu=1.0):
    return G.navier_to_oblique(beta, nu, 0.0, 0.0)


def random_pair(rng, zmin=0.1, zmax=3.0):
    x = rng.uniform(-2, 2, 3)
    y = rng.uniform(-2, 2, 3)
    x[2] = rng.uniform(zmin, zmax)
    y[2] = rng.uniform(zmin, zmax)
    return x, y


def scipy_theta(a, b, x, ystar):
    """Independent reference for the oblique correction integral."""
    w = np.asarray(x, float) - np.asarray(ystar, float)
    rs = np.linalg.norm(w)
    xi = w / rs
    bxi = float(np.dot(b, xi))
    f = lambda s: np.exp(a * rs * s) * (xi[2] + b[2] * s) / (1 + 2 * bxi * s + s * s) ** 1.5
    return integrate.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)[0]


class TestGamma:
    def test_values(self):
        assert K.gamma([0, 0, 1.0], [0, 0, 0.0]) == 1.0
        assert np.isclose(K.gamma([3.0, 4.0, 0.0], [0, 0, 0]), 0.2)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, y = random_pair(rng)
            assert K.gamma(x, y) == K.gamma(y, x)

    def test_singularity(self):
        with pytest.raises(SingularityError):
            K.gamma([1.0, 2, 3], [1.0, 2, 3])


class TestTheta:
    def test_closed_form_anchor(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            x, y = random_pair(rng)
            v = K.theta(0.0, E3, x, G.reflect(y))
            assert abs(v - 1.0) < 1e-9

    def test_frozen_exponential_case(self):
        # integrand reduces to e^{-s}/(1+s)^2; value frozen from an
        # independent high-order quadrature
        v = K.theta(-1.0, E3, np.array([0, 0, 0.5]), np.array([0, 0, -0.5]))
        assert abs(v - 0.40365263767680587) < 1e-10

    def test_strong_damping_bound(self):
        v = K.theta(-1e6, E3, np.array([0, 0, 0.5]), np.array([0, 0, -0.5]))
        assert v < 1e-5

    def test_against_library_quadrature(self):
        rng = np.random.default_rng(2)
        for _ in range(15):
            x, y = random_pair(rng)
            a = -rng.uniform(0, 5)
            b = rng.normal(size=3)
            b[2] = abs(b[2]) + 0.3
            b /= np.linalg.norm(b)
            mine = K.theta(a, b, x, G.reflect(y), K.ThetaQuadrature(abs_tol=1e-12))
            ref = scipy_theta(a, b, x, G.reflect(y))
            assert abs(mine - ref) < 1e-10

    def test_tolerance_convergence(self):
        # halving the tolerance moves the value by no more than the sum of
        # the two tolerances
        rng = np.random.default_rng(3)
        for _ in range(100):
            x, y = random_pair(rng)
            a = -rng.uniform(0, 3)
            eps = 10.0 ** -rng.uniform(6, 10)
            v1 = K.theta(a, E3, x, G.reflect(y), K.ThetaQuadrature(abs_tol=eps))
            v2 = K.theta(a, E3, x, G.reflect(y), K.ThetaQuadrature(abs_tol=eps / 2))
            assert abs(v1 - v2) <= 2 * eps

    def test_degenerate_direction_raises(self):
        # x below the reflected point makes xi = -e3 and <b, xi> = -1
        with pytest.raises(DegenerateDirectionError):
            K.theta(-1.0, E3, np.array([0, 0, 1.0]), np.array([0, 0, 2.0]))

    def test_rejects_positive_a(self):
        with pytest.raises(ParameterError):
            K.theta(0.5, E3, np.array([0, 0, 1.0]), np.array([0, 0, -1.0]))


class TestThetaBatchAndTable:
    def test_batch_matches_adaptive(self):
        rng = np.random.default_rng(4)
        alpha = -rng.uniform(0, 30, 40)
        xi3 = rng.uniform(0, 1, 40)
        batch = K.theta_batch(alpha, xi3)
        for k in range(40):
            rstar = rng.uniform(0.3, 2.0)
            w = rstar * np.array([np.sqrt(1 - xi3[k] ** 2), 0.0, xi3[k]])
            x = np.array([0.7, -0.2, max(w[2], 0) + 0.2])
            v = K.theta(alpha[k] / rstar, E3, x, x - w, K.ThetaQuadrature(abs_tol=1e-12))
            assert abs(v - batch[k]) < 1e-9

    def test_table_matches_batch(self):
        rng = np.random.default_rng(5)
        alpha = -rng.uniform(0, 60, 3000)
        xi3 = rng.uniform(0, 1, 3000)
        table = K.ThetaTable(alpha_min=-80)
        err = np.abs(table(alpha, xi3) - K.theta_batch(alpha, xi3))
        assert err.max() < 5e-7

    def test_table_alpha_zero(self):
        table = K.ThetaTable(alpha_min=-10)
        assert np.max(np.abs(table(np.zeros(7), np.linspace(0, 1, 7)) - 1.0)) < 1e-9


class TestGreen:
    def test_diagonal_structure(self):
        bc = halfspace_bc()
        g = K.green(bc, [0.1, 0.2, 0.9], [0.3, -0.1, 0.4])
        off = g - np.diag(np.diag(g))
        assert np.all(off == 0.0)

    def test_dirichlet_boundary_cancellation(self):
        bc = G.dirichlet_bc()
        rng = np.random.default_rng(6)
        for _ in range(50):
            x = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0])
            y = rng.uniform(-2, 2, 3)
            y[2] = rng.uniform(0.2, 2)
            assert np.max(np.abs(K.green(bc, x, y))) < 1e-12

    def test_neumann_limit_paper_variant(self):
        # with Theta = 1 the printed formula collapses to
        # (1/4pi)(1/r - (5/3)/r*)
        bc = G.ObliqueBC(a=(0.0, 0.0, 0.0), b=(tuple(E3),) * 2 + ((0, 0, 0),),
                         mode=("regular-oblique",) * 2 + ("dirichlet",))
        x = np.array([0.3, 0.1, 0.8])
        y = np.array([-0.2, 0.4, 0.5])
        r = np.linalg.norm(x - y)
        rs = np.linalg.norm(x - G.reflect(y))
        g = K.green(bc, x, y, theta_coeff=K.THETA_COEFF_PAPER)
        assert abs(g[0, 0] - (1 / r - (5 / 3) / rs) / (4 * np.pi)) < 1e-10

    def test_neumann_limit_image_variant(self):
        # the image-derived coefficient reproduces the classical Neumann
        # kernel (1/4pi)(1/r + 1/r*)
        bc = G.ObliqueBC(a=(0.0, 0.0, 0.0), b=(tuple(E3),) * 2 + ((0, 0, 0),),
                         mode=("regular-oblique",) * 2 + ("dirichlet",))
        x = np.array([0.3, 0.1, 0.8])
        y = np.array([-0.2, 0.4, 0.5])
        r = np.linalg.norm(x - y)
        rs = np.linalg.norm(x - G.reflect(y))
        g = K.green(bc, x, y, theta_coeff=K.THETA_COEFF_IMAGE)
        assert abs(g[0, 0] - (1 / r + 1 / rs) / (4 * np.pi)) < 1e-10

    def test_gamma_and_image_parts_symmetric(self):
        bc = G.dirichlet_bc()
        rng = np.random.default_rng(7)
        for _ in range(20):
            x, y = random_pair(rng)
            assert np.allclose(K.green(bc, x, y), K.green(bc, y, x), atol=1e-13)

    def test_far_field_decay(self):
        bc = halfspace_bc()
        y = np.array([0.0, 0.0, 0.5])
        vals = []
        for r in [20.0, 40.0, 80.0]:
            x = np.array([r, 0.0, 0.6])
            vals.append(abs(K.green(bc, x, y)[0, 0]))
        assert vals[2] < vals[1] < vals[0]
        assert vals[0] * 25 > 1e-12  # nonzero, genuinely 1/r-ish scale

    def test_batch_matches_scalar(self):
        bc = halfspace_bc(beta=2.0, nu=0.7)
        rng = np.random.default_rng(8)
        X, Y = [], []
        for _ in range(25):
            x, y = random_pair(rng)
            X.append(x)
            Y.append(y)
        X, Y = np.asarray(X), np.asarray(Y)
        for coeff in (K.THETA_COEFF_PAPER, K.THETA_COEFF_IMAGE):
            vb = K.green_batch(bc, X, Y, theta_coeff=coeff)
            for k in range(len(X)):
                gs = np.diag(K.green(bc, X[k], Y[k], theta_coeff=coeff,
                                     quad=K.ThetaQuadrature(abs_tol=1e-12)))
                assert np.max(np.abs(vb[k] - gs)) < 1e-9

    def test_singularity_raises(self):
        with pytest.raises(SingularityError):
            K.green(halfspace_bc(), [0.1, 0.2, 0.5], [0.1, 0.2, 0.5])


class TestGradGreen:
    def test_gamma_term_gradient_value(self):
        bc = G.dirichlet_bc()
        gx = K.grad_green(bc, [0.0, 0.0, 2.0], [0.0, 0.0, 1.0], wrt="x")
        # gradient of (1/4pi)(1/r) part at separation e3: -(x-y)/r^3 = (0,0,-1);
        # image part adds its own contribution, so test against the full FD
        h = 1e-5
        fd = np.zeros(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[j] = (K.green(bc, np.array([0, 0, 2.0]) + e, [0, 0, 1.0])[0, 0]
                     - K.green(bc, np.array([0, 0, 2.0]) - e, [0, 0, 1.0])[0, 0])
        fd /= 2 * h
        assert np.max(np.abs(gx[0] - fd)) < 1e-9

    @pytest.mark.parametrize("coeff", [K.THETA_COEFF_PAPER, K.THETA_COEFF_IMAGE])
    @pytest.mark.parametrize("wrt", ["x", "y"])
    def test_matches_fd_second_order(self, coeff, wrt):
        bc = halfspace_bc()
        quad = K.ThetaQuadrature(abs_tol=1e-12)
        rng = np.random.default_rng(9)
        ratios = []
        checked = 0
        while checked < 20:
            x, y = random_pair(rng, zmin=0.4, zmax=1.6)
            if np.linalg.norm(x - y) < 0.5:
                continue
            checked += 1
            an = K.grad_green(bc, x, y, wrt=wrt, theta_coeff=coeff, quad=quad)

            def fd(h):
                out = np.zeros((3, 3))
                for j in range(3):
                    e = np.zeros(3)
                    e[j] = h
                    if wrt == "x":
                        gp = K.green(bc, x + e, y, theta_coeff=coeff, quad=quad)
                        gm = K.green(bc, x - e, y, theta_coeff=coeff, quad=quad)
                    else:
                        gp = K.green(bc, x, y + e, theta_coeff=coeff, quad=quad)
                        gm = K.green(bc, x, y - e, theta_coeff=coeff, quad=quad)
                    out[:, j] = (np.diag(gp) - np.diag(gm)) / (2 * h)
                return out

            e1 = np.max(np.abs(an - fd(1e-3)))
            e2 = np.max(np.abs(an - fd(2e-3)))
            if e1 > 1e-12:
                ratios.append(e2 / e1)
            assert e1 < 1e-5
        # second-order convergence of the central differences toward the
        # analytic gradient: error(2h)/error(h) close to 4
        assert np.median(ratios) > 3.0


class TestNearFarSplit:
    def test_plateau_values(self):
        z = G.CutoffProfile()
        d4 = 1.0
        near, far = K.near_far_split(3.7, d4 / 8, z, d4)
        assert near == 3.7 and far == 0.0
        near, far = K.near_far_split(3.7, d4, z, d4)
        assert near == 0.0 and far == 3.7

    def test_sum_bit_exact(self):
        z = G.CutoffProfile()
        rng = np.random.default_rng(10)
        for _ in range(100):
            g = rng.normal()
            r = rng.uniform(0.01, 2)
            near, far = K.near_far_split(g, r, z, 1.0)
            assert near + far == g


class TestVerifyKernel:
    def test_dirichlet_residuals(self):
        rep = K.verify_kernel(G.dirichlet_bc(), include_theta=False, n_boundary=100)
        assert np.max(rep.max_bc_residual) < 1e-12
        assert rep.max_fd_laplacian < 1e-2  # h^2 * fourth derivatives at O(1) pairs
        # lateral far field of the image pair cancels to a dipole: 1/r^3
        assert -3.3 < rep.decay_exponent < -2.7

    def test_bc_fit_identifies_image_coefficient(self):
        # fitting the Theta coefficient that zeroes the boundary residual
        # recovers the image-method value +1, not the printed -1/3
        bc = halfspace_bc()
        rep = K.verify_kernel(bc, n_boundary=60, seed=3)
        assert rep.bc_fit_theta_coeff is not None
        assert abs(rep.bc_fit_theta_coeff - K.THETA_COEFF_IMAGE) < 0.02

    def test_image_variant_bc_residual_small(self):
        bc = halfspace_bc()
        rep = K.verify_kernel(bc, theta_coeff=K.THETA_COEFF_IMAGE, n_boundary=60,
                              seed=4, quad=K.ThetaQuadrature(abs_tol=1e-12))
        assert np.max(rep.max_bc_residual[:2]) < 1e-6  # fd-gradient limited

    def test_report_serializes(self):
        rep = K.verify_kernel(G.dirichlet_bc(), include_theta=False, n_boundary=10)
        d = rep.to_dict()
        assert d["variant"] == "dirichlet"
        assert len(d["max_bc_residual"]) == 3


class TestKernelGeometry:
    def test_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            x, y = random_pair(rng)
            geom = K.KernelGeometry.of(x, y)
            assert geom.rstar >= geom.r > 0
            assert abs(np.linalg.norm(geom.xi) - 1) < 1e-12
            assert geom.xi[2] >= 0
