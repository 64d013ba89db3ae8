"""Operator assembly: measurement maps, time reversal, duality, symmetrization."""

import numpy as np
import pytest
import scipy.linalg

from heatcavity import ndmap, oracles
from heatcavity.forward import BoundaryField, TimeGrid, field_inner, field_norm
from heatcavity.geometry import CurveSpec, make_curve
from heatcavity.ndmap import (
    NoiseSpec,
    ProblemSetup,
    SpaceTimeOperator,
    add_noise,
    apply_FL,
    apply_L,
    apply_Lhat,
    apply_Lprime,
    assemble_N,
    assemble_lambda,
    gram_weights,
    lprime_from_duality,
    symmetrize,
    time_reversal,
)
from heatcavity.verify import _smooth_field


def field_on(curve, grid, values):
    return BoundaryField(curve, grid, np.asarray(values, dtype=float))


def uniform_field(curve, grid, value=1.0):
    return field_on(curve, grid, np.full((curve.M, grid.Nt), value))


@pytest.fixture(scope="module")
def no_cavity_setup():
    omega = make_curve(CurveSpec("circle", (0.0, 0.0, 1.0)), 16)
    return ProblemSetup.build(omega, None, TimeGrid(0.5, 8))


@pytest.fixture(scope="module")
def symmetric_setup():
    """Concentric pair whose node sets share the full C_16 rotation group,
    so rotation-invariance statements hold to roundoff, not merely to
    discretization error."""
    omega = make_curve(CurveSpec("circle", (0.0, 0.0, 1.0)), 16)
    cavity = make_curve(CurveSpec("circle", (0.0, 0.0, 0.35)), 16)
    return ProblemSetup.build(omega, cavity, TimeGrid(0.5, 8))


class TestGram:
    def test_gram_weights_structure(self, small_setup):
        g = gram_weights(small_setup.omega, small_setup.grid)
        want = np.repeat(small_setup.omega.weights, 8) * small_setup.grid.dt
        assert np.array_equal(g, want)
        assert np.all(g > 0)

    def test_gram_matches_field_inner(self, small_setup):
        rng = np.random.default_rng(0)
        u = field_on(small_setup.omega, small_setup.grid, rng.standard_normal((16, 8)))
        v = field_on(small_setup.omega, small_setup.grid, rng.standard_normal((16, 8)))
        g = gram_weights(small_setup.omega, small_setup.grid)
        direct = float(np.sum(g * u.flatten() * v.flatten()))
        assert direct == pytest.approx(field_inner(u, v), rel=1e-14)


class TestLambda:
    def test_zero_vector_maps_to_zero(self, small_ops):
        out = small_ops["lambda_D"].matrix @ np.zeros(16 * 8)
        assert np.all(out == 0.0)

    def test_no_cavity_assemblies_bitwise_identical(self, no_cavity_setup):
        a = assemble_lambda(no_cavity_setup, False)
        b = assemble_lambda(no_cavity_setup, False)
        assert np.array_equal(a.matrix, b.matrix)

    def test_with_cavity_requires_cavity(self, no_cavity_setup):
        with pytest.raises(ValueError):
            assemble_lambda(no_cavity_setup, True)

    def test_uniform_flux_matches_radial_oracle(self, no_cavity_setup):
        op = assemble_lambda(no_cavity_setup, False)
        f = uniform_field(no_cavity_setup.omega, no_cavity_setup.grid)
        trace = op.apply(f).values.mean(axis=0)
        want = oracles.radial_disk_trace(no_cavity_setup.grid.times)
        assert np.linalg.norm(trace - want) <= 2e-2 * np.linalg.norm(want)

    @pytest.mark.parametrize("name", ["lambda_D", "lambda_0"])
    def test_block_lower_triangular_in_time(self, small_ops, name):
        mat = small_ops[name].matrix
        nt = 8
        blocks = mat.reshape(16, nt, 16, nt)
        scale = np.abs(mat).max()
        for k_out in range(nt):
            for k_in in range(k_out + 1, nt):
                assert np.abs(blocks[:, k_out, :, k_in]).max() <= 1e-12 * scale

    def test_cavity_effect_sign_after_transient(self, bench_ops, bench_setup):
        # a nonnegative flux heats the cavity domain at least as much as
        # the intact one, up to a short startup transient
        diff = bench_ops["lambda_D"] - bench_ops["lambda_0"]
        f = uniform_field(bench_setup.omega, bench_setup.grid)
        out = (diff @ f.flatten()).reshape(32, 32)
        assert out[:, 2:].min() >= -1e-10

    def test_operator_route_matches_field_route(self, small_setup, small_ops):
        rng = np.random.default_rng(3)
        phi = _smooth_field(small_setup.omega, small_setup.grid, rng)
        via_op = small_ops["FL"].matrix @ phi.flatten()
        via_field = apply_FL(small_setup, phi).flatten()
        scale = np.abs(via_field).max()
        assert np.abs(via_op - via_field).max() <= 1e-12 * scale


class TestTimeReversal:
    def test_involution_on_fields(self, small_setup):
        rng = np.random.default_rng(1)
        f = field_on(small_setup.omega, small_setup.grid, rng.standard_normal((16, 8)))
        assert np.array_equal(time_reversal(time_reversal(f)).values, f.values)

    def test_constant_field_unchanged(self, small_setup):
        f = uniform_field(small_setup.omega, small_setup.grid, 3.5)
        assert np.array_equal(time_reversal(f).values, f.values)

    def test_index_reversal(self, small_setup):
        vals = np.tile(np.arange(8.0), (16, 1))
        f = field_on(small_setup.omega, small_setup.grid, vals)
        assert np.array_equal(time_reversal(f).values, vals[:, ::-1])

    def test_operator_conjugation_consistent(self, small_ops, small_setup):
        rng = np.random.default_rng(2)
        f = field_on(small_setup.omega, small_setup.grid, rng.standard_normal((16, 8)))
        op = small_ops["lambda_0"]
        rop = time_reversal(op)
        direct = rop.apply(f).values
        via_fields = time_reversal(op.apply(time_reversal(f))).values
        assert np.allclose(direct, via_fields, rtol=0, atol=1e-14)


class TestVirtualMeasurements:
    def test_zero_inputs(self, small_setup):
        zero_om = field_on(small_setup.omega, small_setup.grid, np.zeros((16, 8)))
        zero_cav = field_on(small_setup.cavity, small_setup.grid, np.zeros((12, 8)))
        assert np.all(apply_L(small_setup, zero_om).values == 0.0)
        assert np.all(apply_Lhat(small_setup, zero_cav).values == 0.0)
        assert np.all(apply_Lprime(small_setup, zero_cav).values == 0.0)
        assert np.all(apply_FL(small_setup, zero_om).values == 0.0)

    def test_causality_of_L(self, small_setup):
        k0 = 3
        vals = np.zeros((16, 8))
        vals[:, k0:] = 1.0
        out = apply_L(small_setup, field_on(small_setup.omega, small_setup.grid, vals))
        assert np.abs(out.values[:, :k0]).max() <= 1e-12 * np.abs(out.values).max()

    def test_anti_causality_of_Lprime(self, small_setup):
        # sources before k0 cannot influence the backward solution at or
        # after k0
        k0 = 5
        vals = np.zeros((12, 8))
        vals[:, :k0] = 1.0
        theta = field_on(small_setup.cavity, small_setup.grid, vals)
        out = apply_Lprime(small_setup, theta)
        assert np.abs(out.values[:, k0:]).max() <= 1e-12 * np.abs(out.values).max()

    def test_uniform_flux_gives_constant_cavity_trace(self, symmetric_setup):
        st = symmetric_setup
        out = apply_L(st, uniform_field(st.omega, st.grid))
        spread = np.abs(out.values - out.values[:1, :]).max()
        assert spread <= 1e-10 * np.abs(out.values).max()

    def test_uniform_FL_constant_and_single_signed(self, symmetric_setup):
        st = symmetric_setup
        out = apply_FL(st, uniform_field(st.omega, st.grid))
        spread = np.abs(out.values - out.values[:1, :]).max()
        assert spread <= 1e-10 * np.abs(out.values).max()
        # heating from outside: the transmission flux settles to one sign
        assert np.all(out.values[:, 2:] < 0.0)

    def test_FL_negative_against_L(self, small_setup):
        rng = np.random.default_rng(7)
        for _ in range(5):
            phi = _smooth_field(small_setup.omega, small_setup.grid, rng)
            lphi = apply_L(small_setup, phi)
            quad = field_inner(apply_FL(small_setup, phi), lphi)
            assert quad <= 1e-10 * field_norm(lphi) ** 2


class TestDuality:
    def test_residual_small_at_base_resolution(self, bench_setup):
        rng = np.random.default_rng(1000)
        residuals = []
        for _ in range(10):
            phi = _smooth_field(bench_setup.omega, bench_setup.grid, rng)
            theta = _smooth_field(bench_setup.cavity, bench_setup.grid, rng)
            a = field_inner(theta, apply_L(bench_setup, phi))
            b = field_inner(phi, apply_Lprime(bench_setup, theta))
            residuals.append(abs(a - b) / max(abs(a), abs(b)))
        assert float(np.median(residuals)) <= 5e-2

    def test_lprime_from_duality_is_weighted_transpose(self, small_ops, small_setup):
        L_op = small_ops["L"]
        Lp = lprime_from_duality(L_op)
        rng = np.random.default_rng(8)
        phi = _smooth_field(small_setup.omega, small_setup.grid, rng)
        theta = _smooth_field(small_setup.cavity, small_setup.grid, rng)
        a = field_inner(theta, L_op.apply(phi))
        b = field_inner(phi, Lp.apply(theta))
        assert a == pytest.approx(b, rel=1e-12)


class TestFactorization:
    def test_difference_of_maps_equals_composite(self, small_ops):
        lhs = small_ops["lambda_D"].matrix - small_ops["lambda_0"].matrix
        rhs = small_ops["Lhat"].matrix @ small_ops["FL"].matrix
        assert np.linalg.norm(lhs - rhs) <= 5e-2 * np.linalg.norm(lhs)

    def test_modified_map_equals_reversed_composite(self, small_ops, small_setup):
        nt, m = 8, 16
        rng = np.random.default_rng(4)
        phi = _smooth_field(small_setup.omega, small_setup.grid, rng)
        via_matrix = small_ops["N"].apply(phi).values
        inner = apply_FL(small_setup, phi)
        via_fields = -apply_Lprime(small_setup, inner).values
        assert np.allclose(via_matrix, via_fields, rtol=0, atol=1e-12 * np.abs(via_fields).max())

    def test_no_cavity_N_is_zero(self, no_cavity_setup):
        op = assemble_N(no_cavity_setup)
        assert np.abs(op.matrix).max() <= 1e-12

    def test_dual_consistency_of_N(self, small_ops, small_setup):
        N = small_ops["N"]
        g = N.gram_domain
        nprime = (N.matrix * g[:, None]).T / g[:, None]
        rng = np.random.default_rng(5)
        phi = rng.standard_normal(16 * 8)
        psi = rng.standard_normal(16 * 8)
        a = float(np.sum(g * (N.matrix @ phi) * psi))
        b = float(np.sum(g * phi * (nprime @ psi)))
        assert a == pytest.approx(b, rel=1e-12)


class TestSymmetrize:
    def test_already_symmetric_unchanged(self, small_setup):
        n = 16 * 8
        g = gram_weights(small_setup.omega, small_setup.grid)
        rng = np.random.default_rng(6)
        sym = rng.standard_normal((n, n))
        sym = 0.5 * (sym + sym.T)
        # build a W-selfadjoint operator: A = G^{-1/2} sym G^{1/2}
        mat = sym * (1.0 / np.sqrt(g))[:, None] * np.sqrt(g)[None, :]
        pair = (small_setup.omega, small_setup.grid)
        op = SpaceTimeOperator(mat, pair, pair, g, g)
        ntilde, S = symmetrize(op)
        assert np.linalg.norm(ntilde.matrix - mat) <= 1e-14 * np.linalg.norm(mat)
        assert np.linalg.norm(S - sym) <= 1e-13 * np.linalg.norm(sym)

    def test_S_exactly_symmetric(self, small_ops):
        _, S = symmetrize(small_ops["N"])
        assert np.linalg.norm(S - S.T) <= 1e-12 * np.linalg.norm(S)

    def test_eigenvalues_match_generalized_oracle(self, small_ops):
        from heatcavity.recon import eigendecompose

        N = small_ops["N"]
        g = N.gram_domain
        ntilde, S = symmetrize(N)
        eig = eigendecompose(S, g, 1e-8)
        # oracle: the W-eigenproblem (G Ntilde) x = lambda G x, symmetric
        # because Ntilde is W-selfadjoint
        a = np.diag(g) @ ntilde.matrix
        a = 0.5 * (a + a.T)
        lam = scipy.linalg.eigh(a, np.diag(g), eigvals_only=True)[::-1]
        assert np.allclose(eig.lambdas, lam, rtol=0, atol=1e-10 * abs(lam[0]))

    def test_non_square_rejected(self, small_ops):
        with pytest.raises(ValueError):
            symmetrize(small_ops["L"])


class TestNoise:
    def test_zero_level_identical(self, small_ops):
        out = add_noise(small_ops["N"], NoiseSpec(0.0, 9))
        assert np.array_equal(out.matrix, small_ops["N"].matrix)

    def test_same_seed_identical(self, small_ops):
        a = add_noise(small_ops["N"], NoiseSpec(1e-2, 10))
        b = add_noise(small_ops["N"], NoiseSpec(1e-2, 10))
        assert np.array_equal(a.matrix, b.matrix)

    def test_perturbation_norm_exact(self, small_ops):
        delta = 3e-3
        out = add_noise(small_ops["N"], NoiseSpec(delta, 11))
        e = out.matrix - small_ops["N"].matrix
        ratio = np.linalg.norm(e) / np.linalg.norm(small_ops["N"].matrix)
        assert ratio == pytest.approx(delta, rel=1e-12)

    def test_invalid_level_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(1.0, 0)
        with pytest.raises(ValueError):
            NoiseSpec(-0.1, 0)
