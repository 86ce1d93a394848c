"""Parser, kernel evaluation, charts and kernel algebra."""

import numpy as np
import pytest

from jetmod.kernels import (
    AffineChart,
    BinOp,
    Call,
    DomainError,
    Num,
    ParseError,
    Pow,
    Var,
    builtin_bergman,
    conjugate_by_unitary,
    diagonal_chart,
    direct_sum,
    gauge_scale,
    identity_chart,
    matrix_combination,
    parse_expression,
    parse_kernel,
    pretty,
    pullback_affine,
)
from util import rand_point, rand_unitary


class TestParser:
    def test_single_expression(self):
        spec = parse_kernel("(1 - z1*wb1)^-2.0")
        assert spec.m == 1 and spec.r == 1
        value = spec.eval_point([0.3], [0.2])[0, 0]
        assert abs(value - (1 - 0.3 * 0.2) ** -2) < 1e-14

    def test_product_kernel(self):
        spec = parse_kernel("(1-z1*wb1)^-1 * (1-z2*wb2)^-3")
        assert spec.m == 2
        z = np.array([0.1, 0.2j])
        w = np.array([0.3, -0.1])
        expect = (1 - z[0] * np.conj(w[0])) ** -1 * (1 - z[1] * np.conj(w[1])) ** -3
        assert abs(spec.eval_point(z, w)[0, 0] - expect) < 1e-14

    def test_unbalanced_paren(self):
        with pytest.raises(ParseError, match="expected"):
            parse_kernel("(1 - z1*wb2")

    def test_unknown_identifier_with_position(self):
        with pytest.raises(ParseError, match="line 1.*foo"):
            parse_expression("1 + foo")

    def test_column_position_in_file(self):
        try:
            parse_kernel("m = 1\nK[1][1] = 1 + $\n")
        except ParseError as exc:
            assert exc.line == 2
        else:
            raise AssertionError("expected a parse error")

    def test_exponent_forms(self):
        for text, expect in [("2^2", 4.0), ("2^-1", 0.5), ("(1+1)^-2.0", 0.25)]:
            spec = parse_kernel(f"m = 1\nK[1][1] = {text}\n")
            assert abs(spec.eval_point([0.0], [0.0])[0, 0] - expect) < 1e-14

    def test_exp_log(self):
        spec = parse_kernel("exp(log(2 + z1*wb1))")
        assert abs(spec.eval_point([0.5], [0.5]) - 2.25)[0, 0] < 1e-14

    def test_no_implicit_multiplication(self):
        with pytest.raises(ParseError):
            parse_expression("2 z1")

    def test_file_format(self):
        text = """
        # a rank-2 kernel on the bidisc
        m = 2
        r = 2
        label = demo
        K[1][1] = (1 - z1*wb1)^-1
        K[1][2] = 0
        K[2][1] = 0
        K[2][2] = (1 - z2*wb2)^-2
        """
        spec = parse_kernel(text)
        assert spec.r == 2 and spec.label == "demo"
        v = spec.eval_point([0.0, 0.0], [0.0, 0.0])
        assert np.allclose(v, np.eye(2))

    def test_file_format_bergman(self):
        spec = parse_kernel("m = 3\nK = bergman(1, 2, 3)\n")
        ref = builtin_bergman([1.0, 2.0, 3.0])
        z, w = rand_point(np.random.default_rng(0), 3), rand_point(np.random.default_rng(1), 3)
        assert abs(spec.eval_point(z, w) - ref.eval_point(z, w))[0, 0] < 1e-14

    def test_file_errors(self):
        with pytest.raises(ParseError, match="missing header"):
            parse_kernel("K[1][1] = 1\nr = 1\n")
        with pytest.raises(ParseError, match="missing entry"):
            parse_kernel("m = 1\nr = 2\nK[1][1] = 1\n")
        with pytest.raises(ParseError, match="out of range"):
            parse_kernel("m = 1\nK[1][1] = z2\n")
        with pytest.raises(ParseError, match="weights"):
            parse_kernel("m = 2\nK = bergman(1)\n")

    def test_round_trip_generated(self):
        rng = np.random.default_rng(7)
        ops = ["+", "-", "*", "/"]

        def rand_node(depth):
            kind = rng.integers(0, 6)
            if depth <= 0 or kind == 0:
                return Num(complex(float(np.round(rng.random(), 3)) + 1.0))
            if kind == 1:
                return Var("z", int(rng.integers(1, 3)))
            if kind == 2:
                return Var("wb", int(rng.integers(1, 3)))
            if kind == 3:
                return Pow(rand_node(depth - 1), float(rng.integers(-3, 4)))
            if kind == 4:
                return Call(("exp", "log")[rng.integers(0, 2)], rand_node(depth - 1))
            return BinOp(ops[rng.integers(0, 4)], rand_node(depth - 1), rand_node(depth - 1))

        for _ in range(40):
            node = rand_node(4)
            assert parse_expression(pretty(node)) == node


class TestBuiltins:
    def test_bergman_weights(self):
        spec = builtin_bergman([1.5])
        z = 0.4 + 0.1j
        assert abs(spec.eval_point([z], [z])[0, 0] - (1 - abs(z) ** 2) ** -1.5) < 1e-13

    def test_bergman_zero_weights(self):
        spec = builtin_bergman([0.0, 0.0])
        assert spec.eval_point([0.1, 0.2], [0.3, 0.4])[0, 0] == 1.0

    def test_bergman_negative(self):
        with pytest.raises(ValueError):
            builtin_bergman([-1.0])

    def test_gram_positive_definite(self):
        rng = np.random.default_rng(11)
        specs = [
            builtin_bergman([2.0]),
            builtin_bergman([1.0, 3.0]),
            builtin_bergman([0.5, 1.5, 2.5]),
        ]
        for spec in specs:
            for _ in range(5):
                z = rand_point(rng, spec.m, radius=0.7)
                gram = spec.eval_point(z, z)
                vals = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
                assert np.min(vals) > 0

    def test_hermitian_spot_check(self):
        builtin_bergman([1.0, 2.0]).check_hermitian()
        # deliberately broken kernel: K(z,w) = z1 is not Hermitian
        bad = parse_kernel("1 + z1")
        with pytest.raises(ValueError, match="Hermitian"):
            bad.check_hermitian()


class TestEvalJet:
    def test_bergman_first_coefficient(self):
        lam = 1.9
        spec = builtin_bergman([lam])
        jet = spec.eval_jet([0.0], [0.0], 2)
        assert abs(jet.entry(0, 0).coeff((0, 0)) - 1.0) < 1e-14
        assert abs(jet.entry(0, 0).coeff((1, 1)) - lam) < 1e-13

    def test_trunc_zero_is_plain_value(self):
        spec = builtin_bergman([1.0, 2.0])
        z, w = [0.2, 0.1], [0.05, 0.3]
        jet = spec.eval_jet(z, w, 0)
        assert np.allclose(jet.constant_term(), spec.eval_point(z, w))

    def test_hermitian_pair_symmetry(self):
        spec = builtin_bergman([1.0, 2.0])
        rng = np.random.default_rng(3)
        z, w = rand_point(rng, 2), rand_point(rng, 2)
        a = spec.eval_jet(z, w, 2)
        b = spec.eval_jet(w, z, 2)
        # d^alpha dbar^beta K(z, w) == conj(d^beta dbar^alpha K(w, z))^T
        for alpha, beta in [((1, 0), (0, 0)), ((1, 0), (0, 1)), ((0, 1), (1, 0))]:
            left = a.extract(alpha + beta)
            right = b.extract(beta + alpha)
            assert np.max(np.abs(left - right.conj().T)) < 1e-12

    def test_domain_error(self):
        spec = parse_kernel("log(z1*wb1)")
        with pytest.raises(DomainError):
            spec.eval_jet([0.0], [0.0], 1)


class TestCharts:
    def test_identity_chart_pullback(self):
        spec = builtin_bergman([1.0, 2.0])
        pulled = pullback_affine(spec, identity_chart(2, 1))
        rng = np.random.default_rng(5)
        z, w = rand_point(rng, 2), rand_point(rng, 2)
        assert np.allclose(pulled.eval_point(z, w), spec.eval_point(z, w))

    def test_pullback_commutes_with_evaluation(self):
        rng = np.random.default_rng(6)
        spec = builtin_bergman([1.0, 2.0, 1.5])
        for style in ("pairwise", "anchored"):
            chart = diagonal_chart(3, style=style)
            pulled = pullback_affine(spec, chart)
            for _ in range(5):
                u, v = rand_point(rng, 3, 0.3), rand_point(rng, 3, 0.3)
                direct = spec.eval_point(chart.apply_inverse(u), chart.apply_inverse(v))
                via = pulled.eval_point(u, v)
                assert np.max(np.abs(direct - via)) < 1e-9 * max(1.0, np.max(np.abs(direct)))

    def test_pairwise_diagonal_shape(self):
        # pulled-back product kernel: prod_i (1 - (sum_{j>=i} u_j)(conj sum))^-a_i
        weights = [1.0, 2.0, 3.0]
        chart = diagonal_chart(3, style="pairwise")
        pulled = pullback_affine(builtin_bergman(weights), chart)
        rng = np.random.default_rng(8)
        u = rand_point(rng, 3, 0.25)
        zs = np.array([u[0] + u[1] + u[2], u[1] + u[2], u[2]])
        expect = np.prod([(1 - abs(zs[i]) ** 2) ** -weights[i] for i in range(3)])
        assert abs(pulled.eval_point(u, u)[0, 0] - expect) < 1e-12 * abs(expect)

    def test_offset_chart(self):
        spec = builtin_bergman([2.0])
        chart = AffineChart.from_arrays(np.eye(1), np.array([0.3]), 1)
        pulled = pullback_affine(spec, chart)
        # K'(u, v) = K(u - 0.3, v - 0.3)
        assert abs(
            pulled.eval_point([0.35], [0.35])[0, 0]
            - spec.eval_point([0.05], [0.05])[0, 0]
        ) < 1e-13

    def test_singular_chart_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            AffineChart.from_arrays(np.zeros((2, 2)), np.zeros(2), 1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            pullback_affine(builtin_bergman([1.0]), identity_chart(2, 1))


class TestKernelAlgebra:
    def test_gauge_scale(self):
        spec = builtin_bergman([1.0, 2.0])
        psi = BinOp("+", Num(2.0), BinOp("*", Num(0.5j), Var("z", 1)))
        scaled = gauge_scale(spec, psi)
        rng = np.random.default_rng(9)
        z, w = rand_point(rng, 2), rand_point(rng, 2)
        psi_z = 2.0 + 0.5j * z[0]
        psi_w = 2.0 + 0.5j * w[0]
        expect = psi_z * spec.eval_point(z, w)[0, 0] * np.conj(psi_w)
        assert abs(scaled.eval_point(z, w)[0, 0] - expect) < 1e-13

    def test_gauge_rejects_wb(self):
        with pytest.raises(ValueError, match="holomorphic"):
            gauge_scale(builtin_bergman([1.0]), Var("wb", 1))

    def test_conjugate_by_unitary(self):
        rng = np.random.default_rng(10)
        base = direct_sum(builtin_bergman([1.0, 2.0]), builtin_bergman([2.0, 1.0]))
        u = rand_unitary(rng, 2)
        conj = conjugate_by_unitary(base, u)
        z, w = rand_point(rng, 2), rand_point(rng, 2)
        assert np.max(np.abs(
            conj.eval_point(z, w) - u @ base.eval_point(z, w) @ u.conj().T
        )) < 1e-13

    def test_matrix_combination(self):
        rng = np.random.default_rng(12)
        k1 = builtin_bergman([1.0, 2.0])
        k2 = builtin_bergman([2.0, 0.5])
        a1 = np.array([[2.0, 0.5], [0.5, 1.0]])
        a2 = np.array([[1.0, -0.25j], [0.25j, 3.0]])
        spec = matrix_combination([k1, k2], [a1, a2])
        z, w = rand_point(rng, 2), rand_point(rng, 2)
        expect = k1.eval_point(z, w)[0, 0] * a1 + k2.eval_point(z, w)[0, 0] * a2
        assert np.max(np.abs(spec.eval_point(z, w) - expect)) < 1e-13
        spec.check_hermitian()
