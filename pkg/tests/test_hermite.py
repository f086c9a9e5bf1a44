"""Interpolation module tests: nodal exactness, cubic reproduction, convergence."""

import numpy as np
import pytest

from cmflow import GridSpec, HermiteField, SpectralWorkspace, project_to_hermite

TWO_PI = 2.0 * np.pi


def sample_analytic(grid, f, fx, fy, fxy):
    X, Y = grid.nodes()
    return HermiteField.from_node_data(grid, f(X, Y), fx(X, Y), fy(X, Y), fxy(X, Y))


def sin_field(grid):
    return sample_analytic(grid,
                           lambda x, y: np.sin(x),
                           lambda x, y: np.cos(x),
                           lambda x, y: np.zeros_like(x),
                           lambda x, y: np.zeros_like(x))


class TestGridSpec:
    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            GridSpec(2, 8)

    def test_negative_length_rejected(self):
        with pytest.raises(ValueError):
            GridSpec(8, 8, lx=-1.0)

    def test_spacing(self):
        g = GridSpec(8, 16)
        assert g.hx == TWO_PI / 8
        assert g.hy == TWO_PI / 16


class TestEval:
    def test_constant_reproduction(self):
        g = GridSpec(16, 16)
        c = 2.75
        fld = HermiteField.from_node_data(g, np.full(g.shape, c), np.zeros(g.shape),
                                          np.zeros(g.shape), np.zeros(g.shape))
        rng = np.random.default_rng(1)
        x = rng.uniform(-20, 20, 200)
        y = rng.uniform(-20, 20, 200)
        assert np.max(np.abs(fld.eval(x, y) - c)) < 1e-14

    def test_nodal_exactness_bitwise(self):
        g = GridSpec(64, 64)
        rng = np.random.default_rng(2)
        data = rng.standard_normal((4, 64, 64))
        fld = HermiteField(g, data)
        X, Y = g.nodes()
        vals = fld.eval(X.ravel(), Y.ravel()).reshape(g.shape)
        assert np.array_equal(vals, data[0])

    def test_cubic_reproduction_in_cell(self):
        # g(x, y) = x (2pi - x) is cubic (quadratic) in each cell; exact
        # node data reproduces it inside interior cells.
        g = GridSpec(8, 8)
        fld = sample_analytic(g,
                              lambda x, y: x * (TWO_PI - x),
                              lambda x, y: TWO_PI - 2 * x,
                              lambda x, y: np.zeros_like(x),
                              lambda x, y: np.zeros_like(x))
        xm = 1.5 * g.hx  # mid-cell, interior
        ym = 3.5 * g.hy
        exact = xm * (TWO_PI - xm)
        got = fld.eval(np.array([xm]), np.array([ym]))[0]
        assert abs(got - exact) / abs(exact) < 1e-12

    def test_smooth_field_fourth_order_value(self):
        # analytic oracle: L-inf error over a probe set under grid doubling
        rng = np.random.default_rng(6)
        px = rng.uniform(0, TWO_PI, 400)
        py = rng.uniform(0, TWO_PI, 400)
        errs = []
        for n in (32, 64, 128):
            fld = sin_field(GridSpec(n, n))
            errs.append(np.max(np.abs(fld.eval(px, py) - np.sin(px))))
        errs = np.array(errs)
        orders = np.log2(errs[:-1] / errs[1:])
        assert np.all(orders > 3.9)
        # spec example point at n=64: within O(h^4)
        fld = sin_field(GridSpec(64, 64))
        h = TWO_PI / 64
        assert abs(fld.eval(np.array([0.3]), np.array([1.1]))[0] - np.sin(0.3)) <= h**4

    def test_wrap_periodicity(self):
        g = GridSpec(32, 32)
        rng = np.random.default_rng(3)
        fld = HermiteField(g, rng.standard_normal((4, 32, 32)))
        x = rng.uniform(0, TWO_PI, 50)
        y = rng.uniform(0, TWO_PI, 50)
        base = fld.eval(x, y)
        for k, m in ((1, 0), (0, 1), (-3, 2), (7, -5)):
            shifted = fld.eval(x + k * g.lx, y + m * g.ly)
            assert np.max(np.abs(shifted - base)) < 1e-13

    def test_rejects_nonfinite(self):
        g = GridSpec(8, 8)
        fld = HermiteField.zeros(g)
        with pytest.raises(ValueError):
            fld.eval(np.array([np.nan]), np.array([0.0]))

    def test_c1_continuity_across_cell_edge(self):
        g = GridSpec(16, 16)
        rng = np.random.default_rng(4)
        fld = HermiteField(g, rng.standard_normal((4, 16, 16)))
        # approach a cell edge from both sides: value and gradient match
        xe = 5 * g.hx
        ys = np.linspace(0.1, 6.0, 7)
        eps = 1e-11
        vl, gxl, gyl = fld.eval_grad(np.full_like(ys, xe - eps), ys)
        vr, gxr, gyr = fld.eval_grad(np.full_like(ys, xe + eps), ys)
        assert np.max(np.abs(vl - vr)) < 1e-9
        assert np.max(np.abs(gxl - gxr)) < 1e-7
        assert np.max(np.abs(gyl - gyr)) < 1e-9


class TestGrad:
    def test_constant_gradient_zero(self):
        g = GridSpec(8, 8)
        fld = HermiteField.from_node_data(g, np.full(g.shape, 3.0), np.zeros(g.shape),
                                          np.zeros(g.shape), np.zeros(g.shape))
        _, gx, gy = fld.eval_grad(np.array([1.0]), np.array([2.0]))
        assert abs(gx[0]) < 1e-14 and abs(gy[0]) < 1e-14

    def test_linear_data_exact_slope(self):
        g = GridSpec(8, 8)
        a, b = 0.7, -1.3
        X, Y = g.nodes()
        fld = HermiteField.from_node_data(g, a * X + b * Y, np.full(g.shape, a),
                                          np.full(g.shape, b), np.zeros(g.shape))
        # stay inside interior cells: linear node data is only consistent there
        x = np.array([1.0, 2.2, 3.3])
        y = np.array([1.1, 2.5, 3.1])
        v, gx, gy = fld.eval_grad(x, y)
        assert np.max(np.abs(v - (a * x + b * y))) < 1e-13
        assert np.max(np.abs(gx - a)) < 1e-13
        assert np.max(np.abs(gy - b)) < 1e-13

    def test_sin_gradient_third_order(self):
        rng = np.random.default_rng(7)
        px = rng.uniform(0, TWO_PI, 400)
        py = rng.uniform(0, TWO_PI, 400)
        errs = []
        for n in (32, 64, 128):
            fld = sin_field(GridSpec(n, n))
            _, gx, gy = fld.eval_grad(px, py)
            errs.append(np.max(np.abs(gx - np.cos(px)) + np.abs(gy)))
        errs = np.array(errs)
        orders = np.log2(errs[:-1] / errs[1:])
        assert np.all(orders > 2.9)
        # spec example point at n=64: within O(h^3)
        fld = sin_field(GridSpec(64, 64))
        _, gx, gy = fld.eval_grad(np.array([0.3]), np.array([1.1]))
        h = TWO_PI / 64
        assert abs(gx[0] - np.cos(0.3)) + abs(gy[0]) <= h**3

    def test_gradient_matches_finite_difference_of_interpolant(self):
        # the gradient is the derivative of the interpolant itself
        g = GridSpec(16, 16)
        rng = np.random.default_rng(5)
        fld = HermiteField(g, rng.standard_normal((4, 16, 16)))
        x = rng.uniform(0, TWO_PI, 20)
        y = rng.uniform(0, TWO_PI, 20)
        _, gx, gy = fld.eval_grad(x, y)
        d = 1e-6
        fd_x = (fld.eval(x + d, y) - fld.eval(x - d, y)) / (2 * d)
        fd_y = (fld.eval(x, y + d) - fld.eval(x, y - d)) / (2 * d)
        assert np.max(np.abs(gx - fd_x)) < 1e-5
        assert np.max(np.abs(gy - fd_y)) < 1e-5


class TestProject:
    def test_zero_function(self):
        g = GridSpec(8, 8)
        fld = project_to_hermite(lambda x, y: np.zeros_like(x), g)
        assert np.all(fld.data == 0.0)

    def test_node_values_reproduced(self):
        g = GridSpec(32, 32)
        fld = project_to_hermite(lambda x, y: 2 * (np.cos(2 * x) + np.cos(2 * y)), g)
        X, Y = g.nodes()
        vals = fld.eval(X.ravel(), Y.ravel()).reshape(g.shape)
        assert np.array_equal(vals, fld.data[0])

    def test_shape_mismatch_rejected(self):
        g = GridSpec(8, 8)
        with pytest.raises(ValueError):
            project_to_hermite(np.zeros((4, 4)), g)

    def test_refinement_study_order(self):
        # spectral-derivative projection of exp(sin x): L-inf gap on a 4x
        # refined probe grid decays at order >= 3.9 under doubling
        fn = lambda x, y: np.exp(np.sin(x))
        errs = []
        for n in (32, 64, 128):
            g = GridSpec(n, n)
            fld = project_to_hermite(fn, g, SpectralWorkspace(g))
            probe = GridSpec(4 * n, 4 * n)
            PX, PY = probe.nodes()
            vals = fld.eval(PX.ravel(), PY.ravel())
            errs.append(np.max(np.abs(vals - fn(PX.ravel(), PY.ravel()))))
        errs = np.array(errs)
        orders = np.log2(errs[:-1] / errs[1:])
        assert np.all(orders >= 3.9)
