"""Tests for the discrete bulk-surface operators."""

import numpy as np
import pytest

from dynbound.discretization import Interval, Strip, build_operators
from dynbound.exceptions import GridTooSmall, ShapeMismatch


@pytest.fixture(params=[Strip(1.0, 8, 4), Strip(2.5, 12, 3), Interval(16)], ids=str)
def ops(request):
    return build_operators(request.param)


class TestVolumes:
    """Tests for weights and measures."""

    def test_strip_measures(self):
        """Test |Omega| = Lx and |Gamma| = 2 Lx on the strip."""
        ops = build_operators(Strip(2.5, 12, 3))
        assert ops.vol_omega == pytest.approx(2.5)
        assert ops.vol_gamma == pytest.approx(5.0)
        assert ops.volume == pytest.approx(7.5)
        assert ops.dim == 12 * 3 + 2 * 12
        assert ops.n_surface == 24

    def test_interval_measures(self):
        """Test |Omega| = 1 and two unit-weight end points."""
        ops = build_operators(Interval(16))
        assert ops.vol_omega == pytest.approx(1.0)
        assert ops.vol_gamma == 2.0
        assert ops.dim == 18
        np.testing.assert_array_equal(ops.weights[16:], [1.0, 1.0])
        np.testing.assert_array_equal(ops.x[16:], [0.0, 1.0])

    def test_strip_weights_with_half_cells(self):
        """Test the outer bulk rows carry the half cell next to the boundary."""
        ops = build_operators(Strip(1.0, 4, 2))
        np.testing.assert_allclose(ops.weights[:8], 0.25 * 1.5 / 3.0)
        np.testing.assert_allclose(ops.weights[8:], 0.25)
        ops = build_operators(Strip(1.0, 4, 4))
        np.testing.assert_allclose(ops.weights[:16], np.repeat([0.075, 0.05, 0.05, 0.075], 4))
        assert float(np.sum(ops.weights[:16])) == pytest.approx(1.0)

    def test_weights_positive(self, ops):
        """Test every lumped weight is positive."""
        assert np.all(ops.weights > 0)

    def test_mass_matrix(self, ops):
        """Test the mass matrix is the diagonal of the weights."""
        np.testing.assert_allclose(ops.mass.diagonal(), ops.weights)


class TestStiffness:
    """Tests for the stiffness matrix."""

    def test_symmetric(self, ops):
        """Test the stiffness is symmetric."""
        a = ops.stiffness.toarray()
        np.testing.assert_allclose(a, a.T, atol=1e-12)

    def test_constants_in_kernel(self, ops):
        """Test constants are annihilated."""
        np.testing.assert_allclose(ops.stiffness @ ops.constant(1.0), 0.0, atol=1e-10)

    def test_positive_semidefinite_with_simple_kernel(self, ops):
        """Test the only zero eigenvalue is the constant mode."""
        eigenvalues = np.linalg.eigvalsh(ops.stiffness.toarray())
        assert eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        assert eigenvalues[1] > 1e-6

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_cosine_mode_is_eigenvector(self, k):
        """Test cos(kappa x) satisfies A z = mu_h M z."""
        strip = Strip(1.0, 16, 4)
        ops = build_operators(strip)
        kappa = 2.0 * np.pi * k / strip.lx
        z = np.cos(kappa * ops.x)
        mu_h = 4.0 * np.sin(kappa * strip.hx / 2.0) ** 2 / strip.hx**2
        np.testing.assert_allclose(ops.stiffness @ z, mu_h * ops.weights * z, atol=1e-10)

    def test_strip_energy_of_height(self):
        """Test a(y, y) = Lx on the strip."""
        ops = build_operators(Strip(2.5, 12, 3))
        assert ops.a_form(ops.y, ops.y) == pytest.approx(2.5)

    def test_interval_energy_of_abscissa(self):
        """Test a(x, x) = 1 on the interval."""
        ops = build_operators(Interval(16))
        assert ops.a_form(ops.x, ops.x) == pytest.approx(1.0)

    def test_surface_laplacian_acts_on_surface(self):
        """Test the surface Laplacian touches only surface unknowns."""
        ops = build_operators(Strip(1.0, 8, 4))
        lb = ops.surface_laplacian.toarray()
        assert not np.any(lb[: ops.n_bulk])
        assert not np.any(lb[:, : ops.n_bulk])
        assert np.any(lb[ops.n_bulk :, ops.n_bulk :])

    def test_interval_has_no_surface_laplacian(self):
        """Test the interval boundary carries no tangential term."""
        ops = build_operators(Interval(8))
        assert ops.surface_laplacian.nnz == 0


class TestFields:
    """Tests for field helpers."""

    def test_join_split(self, ops):
        """Test join and split are inverse."""
        bulk = np.arange(ops.n_bulk, dtype=float)
        surface = -np.arange(ops.n_surface, dtype=float)
        b, s = ops.split(ops.join(bulk, surface))
        np.testing.assert_array_equal(b, bulk)
        np.testing.assert_array_equal(s, surface)

    def test_join_wrong_sizes(self, ops):
        """Test join rejects parts of the wrong size."""
        with pytest.raises(ShapeMismatch):
            ops.join(np.zeros(ops.n_bulk + 1), np.zeros(ops.n_surface))

    def test_check_wrong_length(self, ops):
        """Test fields of the wrong length are rejected."""
        with pytest.raises(ShapeMismatch):
            ops.mean(np.zeros(ops.dim - 1))

    def test_projection(self, ops):
        """Test the projection removes the combined mean."""
        z = np.random.default_rng(0).normal(size=ops.dim) + 3.0
        assert abs(ops.mean(ops.project(z))) < 1e-14
        assert ops.mean(ops.constant(2.0)) == pytest.approx(2.0)

    def test_integrals_add_up(self, ops):
        """Test bulk and surface integrals sum to the weighted total."""
        z = np.random.default_rng(1).normal(size=ops.dim)
        total = ops.bulk_integral(z) + ops.surface_integral(z)
        assert total == pytest.approx(ops.mean(z) * ops.volume)

    def test_norm(self, ops):
        """Test the weighted norm of a constant."""
        assert ops.norm_h(ops.constant(1.0)) == pytest.approx(np.sqrt(ops.volume))

    def test_node_ordering(self):
        """Test bulk rows first, then the bottom and top boundary rows."""
        strip = Strip(1.0, 8, 4)
        ops = build_operators(strip)
        assert ops.y[0] == pytest.approx(strip.hy)
        assert ops.x[1] == pytest.approx(strip.hx)
        np.testing.assert_array_equal(ops.y[ops.n_bulk : ops.n_bulk + 8], 0.0)
        np.testing.assert_array_equal(ops.y[ops.n_bulk + 8 :], 1.0)

    def test_fields_are_read_only(self, ops):
        """Test weights cannot be modified in place."""
        with pytest.raises(ValueError):
            ops.weights[0] = 1.0


class TestGridTooSmall:
    """Tests for minimal grids."""

    @pytest.mark.parametrize(
        "geometry", [Strip(1.0, 3, 4), Strip(1.0, 8, 1), Strip(0.0, 8, 4), Interval(1)]
    )
    def test_rejected(self, geometry):
        """Test grids below the minimum size."""
        with pytest.raises(GridTooSmall):
            build_operators(geometry)
