"""Tests for monotone graphs, their resolvents and Yosida maps."""

import numpy as np
import pytest

from dynbound.exceptions import InvalidParams, NegativeIntercept, NotAffineFarField
from dynbound.graphs import (
    FarField,
    GraphPair,
    MonotoneGraph,
    certify_growth,
    from_records,
    graph_table,
    make_preset,
    porous_clipped,
    validate_a5,
)

PRESET_CASES = [
    ("linear", {"c0": 2.0}),
    ("heleshaw_clipped", {"c0_prime": 1.0}),
    ("fast_diffusion_clipped", {"exponent": 0.5, "pieces": 32}),
    ("deadzone_jump", {"a": -0.5, "b": 1.0, "c0": 1.5, "c0_prime": 0.3}),
]


def _samples(seed, count=2000):
    rng = np.random.default_rng(seed)
    lams = 10.0 ** rng.uniform(-3.0, 0.0, count)
    rs = rng.uniform(-50.0, 50.0, count)
    return lams, rs


class TestEval:
    """Tests for pointwise evaluation."""

    def test_heleshaw_jumps(self):
        """Test the vertical segments of the clipped Hele-Shaw graph."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        assert graph.eval(1.0) == (0.0, 2.0)
        assert graph.eval(0.0) == (-1.0, 0.0)
        assert graph.eval(0.5) == (0.0, 0.0)
        assert graph.eval(-1.0) == (-2.0, -2.0)

    def test_linear(self):
        """Test the linear graph is single-valued."""
        graph = make_preset("linear", {"c0": 2.0})
        assert graph.eval(3.0) == (6.0, 6.0)

    def test_power_law_nodes(self):
        """Test the sampled power law interpolates at its nodes."""
        graph = make_preset("fast_diffusion_clipped", {"exponent": 0.5, "pieces": 32})
        lo, hi = graph.eval(0.5)
        assert lo == pytest.approx(np.sqrt(0.5), abs=1e-12)
        assert hi == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_bounds_vectorized(self):
        """Test bounds agrees with eval elementwise."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        r = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        lo, hi = graph.bounds(r)
        for k, point in enumerate(r):
            assert (lo[k], hi[k]) == graph.eval(point)


class TestResolvent:
    """Tests for the closed-form resolvent and Yosida map."""

    def test_heleshaw_inside_jump(self):
        """Test a point mapped onto a breakpoint."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        assert graph.resolvent(0.5, 2.0) == 1.0
        assert graph.yosida(0.5, 2.0) == pytest.approx(2.0)

    def test_linear_yosida(self):
        """Test the Yosida map of a linear graph is linear with slope c0/(1 + lam c0)."""
        graph = make_preset("linear", {"c0": 2.0})
        r = np.linspace(-5.0, 5.0, 11)
        np.testing.assert_allclose(graph.yosida(0.25, r), 2.0 * r / 1.5, rtol=1e-14, atol=1e-14)

    @pytest.mark.parametrize("name,params", PRESET_CASES)
    def test_matches_bisection(self, name, params):
        """Test closed form against bisection on random samples."""
        graph = make_preset(name, params)
        lams, rs = _samples(1)
        for lam, r in zip(lams, rs):
            assert abs(graph.resolvent(lam, r) - graph.resolvent_bisect(lam, r)) <= 1e-10

    @pytest.mark.parametrize("name,params", PRESET_CASES)
    def test_resolvent_identity(self, name, params):
        """Test r = J(r) + lam beta_lam(r)."""
        graph = make_preset(name, params)
        lams, rs = _samples(2)
        for lam, r in zip(lams, rs):
            total = graph.resolvent(lam, r) + lam * graph.yosida(lam, r)
            assert abs(total - r) <= 1e-12 * max(1.0, abs(r))

    @pytest.mark.parametrize("name,params", PRESET_CASES)
    def test_yosida_monotone_and_lipschitz(self, name, params):
        """Test the Yosida map is nondecreasing with Lipschitz constant 1/lam."""
        graph = make_preset(name, params)
        r = np.sort(np.random.default_rng(3).uniform(-50.0, 50.0, 4000))
        for lam in (1e-3, 0.05, 1.0):
            values = graph.yosida(lam, r)
            dv, dr = np.diff(values), np.diff(r)
            assert np.all(dv >= -1e-9)
            assert np.all(dv <= dr / lam + 1e-9)

    @pytest.mark.parametrize("name,params", PRESET_CASES)
    def test_yosida_belongs_to_graph(self, name, params):
        """Test beta_lam(r) lies in beta(J(r))."""
        graph = make_preset(name, params)
        lams, rs = _samples(4, count=500)
        for lam, r in zip(lams, rs):
            lo, hi = graph.eval(graph.resolvent(lam, r))
            value = graph.yosida(lam, r)
            assert lo - 1e-9 <= value <= hi + 1e-9

    def test_slope_matches_difference_quotient(self):
        """Test the reported slope away from region boundaries."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        lam, h = 0.5, 1e-7
        for r in (-3.0, -0.25, 0.5, 1.5, 4.0):
            quotient = (graph.yosida(lam, r + h) - graph.yosida(lam, r - h)) / (2 * h)
            assert float(graph.yosida_slope(lam, r)) == pytest.approx(quotient, abs=1e-6)

    def test_nonpositive_lambda(self):
        """Test lambda must be positive."""
        graph = make_preset("linear", {"c0": 1.0})
        with pytest.raises(InvalidParams):
            graph.resolvent(0.0, 1.0)


class TestEnvelope:
    """Tests for the Moreau-Yosida envelope and the antiderivative."""

    def test_heleshaw_antiderivative(self):
        """Test hand-integrated values of the Hele-Shaw antiderivative."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        assert graph.antiderivative(0.0) == 0.0
        assert graph.antiderivative(0.5) == pytest.approx(0.0)
        assert graph.antiderivative(2.0) == pytest.approx(2.5)
        assert graph.antiderivative(-1.0) == pytest.approx(1.5)

    @pytest.mark.parametrize("name,params", PRESET_CASES)
    def test_envelope_is_minimum(self, name, params):
        """Test the envelope against a grid minimization."""
        graph = make_preset(name, params)
        for lam in (0.01, 0.3, 1.0):
            for r in (-4.0, -0.3, 0.0, 0.7, 1.3, 6.0):
                j = graph.resolvent(lam, r)
                s = j + np.linspace(-0.5, 0.5, 20001)
                values = (r - s) ** 2 / (2 * lam) + graph.antiderivative(s)
                env = graph.envelope(lam, r)
                assert env <= float(np.min(values)) + 1e-12
                assert env >= float(np.min(values)) - 1e-6

    @pytest.mark.parametrize("name,params", PRESET_CASES)
    def test_envelope_gradient_is_yosida(self, name, params):
        """Test the envelope derivative equals the Yosida map."""
        graph = make_preset(name, params)
        lam, h = 0.2, 1e-6
        for r in (-3.3, -0.2, 0.4, 2.1):
            quotient = (graph.envelope(lam, r + h) - graph.envelope(lam, r - h)) / (2 * h)
            assert quotient == pytest.approx(graph.yosida(lam, r), abs=1e-4)

    def test_envelope_below_antiderivative(self):
        """Test phi_lambda <= phi pointwise."""
        graph = make_preset("deadzone_jump", {"a": -0.5, "b": 1.0})
        r = np.linspace(-5.0, 5.0, 101)
        assert np.all(graph.envelope(0.1, r) <= graph.antiderivative(r) + 1e-12)


class TestCertificate:
    """Tests for growth certificates."""

    def test_heleshaw_stored(self):
        """Test the closed-form certificate of the Hele-Shaw graph holds."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        cert = graph.certificate
        assert (cert.c1, cert.c2) == (0.25, 0.5)
        r = np.linspace(-20.0, 20.0, 40001)
        assert np.all(graph.antiderivative(r) >= cert.c1 * r**2 - cert.c2 - 1e-12)

    @pytest.mark.parametrize("name,params", PRESET_CASES[2:])
    def test_computed_certificate_is_exact(self, name, params):
        """Test c2 is the supremum of c1 r^2 - beta_hat."""
        graph = make_preset(name, params)
        cert = certify_growth(graph)
        assert cert.c1 == pytest.approx(graph.far_field.c0 / 4.0)
        r = np.concatenate([np.linspace(-30.0, 30.0, 600001), graph.breakpoints])
        gap = cert.c1 * r**2 - graph.antiderivative(r)
        assert float(np.max(gap)) <= cert.c2 + 1e-10
        assert float(np.max(gap)) >= cert.c2 - 1e-6

    def test_flat_far_piece(self):
        """Test a graph that is flat at -infinity has no certificate."""
        graph = MonotoneGraph([0.0], [0.0, 1.0], [0.0, 0.0], FarField(1.0, 0.0, 0.0, 1.0))
        with pytest.raises(InvalidParams):
            certify_growth(graph)


class TestShifted:
    """Tests for translated graphs."""

    def test_translation(self):
        """Test the shifted graph evaluates the base graph at r + m0."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        moved = graph.shifted(0.3)
        r = np.array([-2.0, -0.1, 0.25, 0.5, 3.0])
        lo, hi = moved.bounds(r)
        base_lo, base_hi = graph.bounds(r + 0.3)
        np.testing.assert_allclose(lo, base_lo, atol=1e-14)
        np.testing.assert_allclose(hi, base_hi, atol=1e-14)

    def test_antiderivative_anchor(self):
        """Test the shifted antiderivative vanishes at -m0."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        moved = graph.shifted(0.3)
        assert moved.antiderivative(-0.3) == pytest.approx(0.0, abs=1e-14)
        assert moved.antiderivative(1.7) == pytest.approx(graph.antiderivative(2.0))

    def test_yosida_translates(self):
        """Test the Yosida map of the shifted graph is the translated Yosida map."""
        graph = make_preset("deadzone_jump", {"a": -0.5, "b": 1.0})
        moved = graph.shifted(-0.4)
        r = np.linspace(-3.0, 3.0, 61)
        np.testing.assert_allclose(moved.yosida(0.1, r), graph.yosida(0.1, r - 0.4), atol=1e-12)

    def test_validation_uses_base(self):
        """Test the far-field validation runs on the untranslated graph."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        moved = graph.shifted(0.3).shifted(0.2)
        assert moved.base is graph
        assert moved.shift == pytest.approx(0.5)
        assert validate_a5(moved) == validate_a5(graph)
        assert moved.far_field.c0_plus == pytest.approx(1.5)

    def test_zero_shift_is_identity(self):
        """Test a zero shift returns the graph itself."""
        graph = make_preset("linear", {"c0": 1.0})
        assert graph.shifted(0.0) is graph


class TestValidate:
    """Tests for far-field validation."""

    def test_heleshaw(self):
        """Test the certified triple of the Hele-Shaw graph."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        assert validate_a5(graph) == (1.0, 1.0, 1.0)

    def test_negative_intercept(self):
        """Test the porous graph needs the relaxation flag."""
        graph = porous_clipped(pieces=16)
        with pytest.raises(NegativeIntercept):
            validate_a5(graph)
        c0, c0_prime, m0 = validate_a5(graph, relax_intercept=True)
        assert c0 == pytest.approx(2.0)
        assert c0_prime == pytest.approx(-1.0)
        assert m0 == 1.0

    def test_outer_slopes_differ(self):
        """Test outer slopes must both equal c0."""
        graph = MonotoneGraph(
            [-1.0, 1.0], [1.0, 0.0, 2.0], [0.0, 0.0, -2.0], FarField(1.0, -2.0, 0.0, 1.0)
        )
        with pytest.raises(NotAffineFarField):
            validate_a5(graph)


class TestPresets:
    """Tests for preset construction."""

    def test_unknown_preset(self):
        """Test unknown preset names are rejected."""
        with pytest.raises(InvalidParams) as exc:
            make_preset("nonexistent")
        assert "Valid presets" in str(exc.value)

    def test_bad_parameter_name(self):
        """Test unexpected parameters are rejected."""
        with pytest.raises(InvalidParams):
            make_preset("linear", {"slope": 1.0})

    @pytest.mark.parametrize(
        "name,params",
        [
            ("linear", {"c0": 0.0}),
            ("fast_diffusion_clipped", {"exponent": 1.5}),
            ("fast_diffusion_clipped", {"pieces": 7}),
            ("deadzone_jump", {"a": 0.5, "b": 1.0}),
        ],
    )
    def test_invalid_values(self, name, params):
        """Test invalid preset parameters."""
        with pytest.raises(InvalidParams):
            make_preset(name, params)

    def test_porous_requires_relax(self):
        """Test porous_clipped is only built with the relaxation flag."""
        with pytest.raises(InvalidParams):
            make_preset("porous_clipped")
        graph = make_preset("porous_clipped", {"pieces": 8}, relax_intercept=True)
        assert graph.far_field.c0_plus < 0

    def test_not_monotone(self):
        """Test a downward jump is rejected."""
        with pytest.raises(InvalidParams):
            MonotoneGraph([0.0], [1.0, 1.0], [1.0, -1.0], FarField(1.0, -1.0, 1.0, 1.0))


class TestFromRecords:
    """Tests for custom graphs."""

    def test_rebuilds_heleshaw(self):
        """Test records describing the Hele-Shaw graph reproduce it."""
        custom = from_records([(0.0, -1.0, 0.0, 0.0), (1.0, 0.0, 2.0, 1.0)], 1.0, 1.0)
        reference = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        r = np.array([-2.0, 0.0, 0.5, 1.0, 3.0])
        for a, b in zip(custom.bounds(r), reference.bounds(r)):
            np.testing.assert_allclose(a, b)
        assert validate_a5(custom) == (1.0, 1.0, 1.0)

    def test_inconsistent_records(self):
        """Test a piece that misses the next left limit."""
        with pytest.raises(InvalidParams) as exc:
            from_records([(0.0, -1.0, 0.0, 0.0), (1.0, 0.5, 2.0, 1.0)], 1.0, 1.0)
        assert "record 1" in str(exc.value)


class TestGraphPair:
    """Tests for bulk/surface graph pairs."""

    def test_single(self):
        """Test a single graph is shared."""
        pair = GraphPair.single(make_preset("linear", {"c0": 1.0}))
        assert not pair.distinct
        assert not pair.shifted(0.2).distinct
        assert pair.shared_far_field() == (1.0, 1.0)

    def test_slopes_must_match(self):
        """Test distinct far-field slopes are rejected."""
        pair = GraphPair(
            make_preset("heleshaw_clipped", {"c0_prime": 1.0}), make_preset("linear", {"c0": 2.0})
        )
        with pytest.raises(NotAffineFarField):
            pair.shared_far_field()

    def test_shared_threshold(self):
        """Test the shared threshold is the larger one."""
        pair = GraphPair(
            make_preset("deadzone_jump", {"a": -2.0, "b": 1.0}),
            make_preset("heleshaw_clipped", {"c0_prime": 0.5}),
        )
        assert pair.shared_far_field() == (1.0, 2.0)


class TestGraphTable:
    """Tests for graph tabulation."""

    def test_columns(self):
        """Test the table columns are consistent."""
        graph = make_preset("heleshaw_clipped", {"c0_prime": 1.0})
        r = np.linspace(-2.0, 3.0, 11)
        table = graph_table(graph, 0.1, r)
        assert table.shape == (11, 6)
        np.testing.assert_allclose(table[:, 0], r)
        np.testing.assert_allclose(table[:, 3] + 0.1 * table[:, 4], r, atol=1e-14)
