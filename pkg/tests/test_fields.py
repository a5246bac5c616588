"""Finite-difference calculus, the twisted Courant bracket and the
integrability detector."""

import numpy as np
import pytest

from gcverify import fiber, fields

D3_POINTS = np.array([[0.3, -0.2, 0.5], [1.0, 2.0, -1.0], [0.0, 0.1, 0.2]])


def const_one_form(chart, uv):
    out = np.zeros((len(uv), 3))
    out[:, 0] = 2.0
    out[:, 2] = -1.0
    return out


def x_dy(chart, uv):
    out = np.zeros((len(uv), 2))
    out[:, 1] = uv[:, 0]
    return out


class TestExteriorDerivative:
    def test_constant_form_killed(self):
        dv = fields.exterior_derivative(const_one_form, 1, "c", D3_POINTS)
        assert np.abs(dv).max() < 1e-12

    def test_x_dy_gives_area_form(self):
        pts = np.array([[0.2, 0.7], [-1.0, 0.4]])
        dv = fields.exterior_derivative(x_dy, 1, "c", pts, step=1e-4)
        expected = np.zeros((2, 2, 2))
        expected[:, 0, 1] = 1.0
        expected[:, 1, 0] = -1.0
        assert np.abs(dv - expected).max() < 1e-8

    def test_d_squared_scalar(self):
        def f(chart, uv):
            return np.sin(uv[:, 0]) * uv[:, 1] ** 2 + np.cos(uv[:, 2])

        df = lambda chart, uv: fields.exterior_derivative(f, 0, chart, uv)
        ddf = fields.exterior_derivative(df, 1, "c", D3_POINTS, step=1e-3)
        assert np.abs(ddf).max() < 1e-6

    def test_d_squared_one_form(self):
        def alpha(chart, uv):
            out = np.zeros((len(uv), 3))
            out[:, 0] = uv[:, 1] * uv[:, 2]
            out[:, 1] = np.exp(0.3 * uv[:, 0])
            out[:, 2] = uv[:, 0] ** 2
            return out

        da = lambda chart, uv: fields.exterior_derivative(alpha, 1, chart, uv)
        dda = fields.exterior_derivative(da, 2, "c", D3_POINTS, step=1e-3)
        assert np.abs(dda).max() < 1e-6

    def test_antisymmetry_of_output(self):
        def alpha(chart, uv):
            out = np.zeros((len(uv), 3))
            out[:, 0] = uv[:, 1] ** 2
            out[:, 1] = uv[:, 2]
            return out

        dv = fields.exterior_derivative(alpha, 1, "c", D3_POINTS)
        assert np.abs(dv + np.swapaxes(dv, 1, 2)).max() < 1e-10

    def test_convergence_order(self):
        # halving the step must cut the O(step^2) error by >= 3.5x
        def f(chart, uv):
            return np.sin(uv[:, 0] * uv[:, 1]) + uv[:, 2] ** 3

        def exact(uv):
            return np.stack([uv[:, 1] * np.cos(uv[:, 0] * uv[:, 1]),
                             uv[:, 0] * np.cos(uv[:, 0] * uv[:, 1]),
                             3 * uv[:, 2] ** 2], axis=1)

        errs = []
        for h in (1e-2, 5e-3):
            grad = fields.partial_derivatives(f, "c", D3_POINTS, step=h)
            errs.append(np.abs(grad - exact(D3_POINTS)).max())
        assert errs[0] / errs[1] >= 3.5

    def test_domain_error(self):
        def f(chart, uv):
            return np.sqrt(uv[:, 0])  # NaN for negative arguments

        with pytest.raises(fields.EvaluationError, match="non-finite"):
            fields.partial_derivatives(f, "c", np.array([[0.0, 1.0, 1.0]]))


class TestFormToMap:
    def test_interior_product_convention(self):
        # i_{dx-direction} (dx ^ dy) = dy
        m = np.array([[0.0, 1.0], [-1.0, 0.0]])
        w = fields.form_to_map(m)
        assert np.allclose(w @ np.array([1.0, 0.0]), [0.0, 1.0])
        assert np.allclose(w @ np.array([0.0, 1.0]), [-1.0, 0.0])


def sec(vec_fn=None, cov_fn=None, d=3):
    def evaluator(chart, uv):
        out = np.zeros((len(uv), 2 * d))
        if vec_fn is not None:
            out[:, :d] = vec_fn(uv)
        if cov_fn is not None:
            out[:, d:] = cov_fn(uv)
        return out
    return evaluator


class TestCourantBracket:
    def test_constant_sections_vanish(self):
        a = sec(lambda uv: np.tile([1.0, 0.0, 2.0], (len(uv), 1)),
                lambda uv: np.tile([0.5, -1.0, 0.0], (len(uv), 1)))
        br = fields.courant_bracket(a, a, None, "c", D3_POINTS)
        assert np.abs(br).max() < 1e-12

    def test_reduces_to_lie_bracket(self):
        # frozen by scripts/derive_expectations.py
        a = sec(lambda uv: np.tile([1.0, 0.0, 0.0], (len(uv), 1)))
        b = sec(lambda uv: np.stack(
            [np.zeros(len(uv)), uv[:, 0], np.zeros(len(uv))], axis=1))
        br = fields.courant_bracket(a, b, None, "c", D3_POINTS)
        expected = np.zeros((3, 6))
        expected[:, 1] = 1.0
        assert np.abs(br - expected).max() < 1e-9

    def test_twist_contraction(self):
        # frozen by scripts/derive_expectations.py
        a = sec(lambda uv: np.tile([1.0, 0.0, 0.0], (len(uv), 1)))
        b = sec(lambda uv: np.tile([0.0, 1.0, 0.0], (len(uv), 1)))

        def twist(chart, uv):
            h = np.zeros((len(uv), 3, 3, 3))
            for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                h[:, i, j, k] = 1.0
                h[:, j, i, k] = -1.0
            return h

        br = fields.courant_bracket(a, b, twist, "c", D3_POINTS)
        expected = np.zeros((3, 6))
        expected[:, 5] = 1.0
        assert np.abs(br - expected).max() < 1e-9

    def test_antisymmetry(self):
        def a(chart, uv):
            out = np.zeros((len(uv), 6))
            out[:, 0] = np.sin(uv[:, 1])
            out[:, 2] = uv[:, 0]
            out[:, 3] = uv[:, 2] ** 2
            out[:, 5] = 1.0
            return out

        def b(chart, uv):
            out = np.zeros((len(uv), 6))
            out[:, 1] = np.cos(uv[:, 0])
            out[:, 4] = uv[:, 0] * uv[:, 1]
            return out

        def twist(chart, uv):
            h = np.zeros((len(uv), 3, 3, 3))
            for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                h[:, i, j, k] = uv[:, 0]
                h[:, j, i, k] = -uv[:, 0]
            return h

        lhs = fields.courant_bracket(a, b, twist, "c", D3_POINTS)
        rhs = fields.courant_bracket(b, a, twist, "c", D3_POINTS)
        assert np.abs(lhs + rhs).max() < 1e-8

    def test_vector_part_is_lie_bracket(self):
        vx = lambda uv: np.stack([uv[:, 1] ** 2, np.sin(uv[:, 0]),
                                  np.ones(len(uv))], axis=1)
        vy = lambda uv: np.stack([uv[:, 2], uv[:, 0] * uv[:, 1],
                                  np.zeros(len(uv))], axis=1)
        a, b = sec(vx), sec(vy)
        br = fields.courant_bracket(a, b, None, "c", D3_POINTS)
        lie = fields.lie_bracket(lambda c, uv: vx(uv), lambda c, uv: vy(uv),
                                 "c", D3_POINTS)
        assert np.abs(br[:, :3] - lie).max() < 1e-8
        assert np.abs(br[:, 3:]).max() < 1e-8


def flat_product_structure(chart, uv):
    d = 4
    m = np.zeros((len(uv), d, d))
    m[:, 0, 1] = 1.0
    m[:, 1, 0] = -1.0
    m[:, 2, 3] = 1.0
    m[:, 3, 2] = -1.0
    return fiber.from_symplectic(fields.form_to_map(m))


def curved_structure(chart, uv):
    # omega = dx1^dy1 + (1+x1) dx2^dy2, not closed
    d = 4
    m = np.zeros((len(uv), d, d))
    m[:, 0, 1] = 1.0
    m[:, 1, 0] = -1.0
    m[:, 2, 3] = 1.0 + uv[:, 0]
    m[:, 3, 2] = -(1.0 + uv[:, 0])
    return fiber.from_symplectic(fields.form_to_map(m))


D4_POINTS = np.array([[0.1, 0.2, 0.3, 0.4],
                      [0.7, -0.3, 1.0, 0.5],
                      [0.25, 0.8, -0.6, 0.0]])


class TestIntegrability:
    def test_flat_structure_integrable(self):
        res = fields.integrability_residual(flat_product_structure, None,
                                            "c", D4_POINTS)
        assert res.max_residual < 1e-6
        assert len(res.skipped) == 0

    def test_non_closed_omega_detected(self):
        res = fields.integrability_residual(curved_structure, None,
                                            "c", D4_POINTS)
        assert res.max_residual > 1e-2

    def test_shifted_structure_needs_minus_db(self):
        # frozen by scripts/derive_expectations.py: shearing by a non-closed
        # b turns an untwisted structure into one integrable for H = -db
        def shifted(chart, uv):
            bmat = np.zeros((len(uv), 4, 4))
            bmat[:, 2, 3] = uv[:, 1]
            bmat[:, 3, 2] = -uv[:, 1]
            return fiber.b_shift(flat_product_structure(chart, uv),
                                 fields.form_to_map(bmat))

        def twist(sign):
            def h(chart, uv):
                out = np.zeros((len(uv), 4, 4, 4))
                for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
                    out[:, i, j, k] = sign
                    out[:, j, i, k] = -sign
                return out
            return h

        good = fields.integrability_residual(shifted, twist(-1.0), "c", D4_POINTS)
        bad = fields.integrability_residual(shifted, twist(+1.0), "c", D4_POINTS)
        assert good.max_residual < 1e-6
        assert bad.max_residual > 1e-2
