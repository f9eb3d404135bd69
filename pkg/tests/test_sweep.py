import math

import numpy as np
import pytest

from xydm import sweep
from xydm.errors import DomainError, NumericalError, ValidationError
from xydm.sweep import (
    Axis,
    SweepSpec,
    SweepTable,
    derivative,
    derivative_values,
    locate_extremum,
    max_curvature,
    run_sweep,
)


def j_scan(n=11, lo=0.5, hi=1.5, **kw):
    return SweepSpec(axes=(Axis("J", lo, hi, n),), **kw)


class TestSpec:
    def test_defaults_and_template(self):
        spec = j_scan(fixed={"gamma": 0.5})
        p = spec.template()
        assert (p.J, p.gamma, p.D, p.temperature) == (0.5, 0.5, 0.0, 0.0)
        assert spec.quantities == sweep.QUANTITIES

    def test_temperature_alias(self):
        spec = SweepSpec(axes=({"name": "T", "min": 0.0, "max": 1.0, "n_points": 3},))
        assert spec.axes[0].name == "temperature"
        assert spec.axes[0].column == "axis_T"

    @pytest.mark.parametrize("kw", [
        dict(axes=()),
        dict(axes=(Axis("J", 0, 1, 3), Axis("D", 0, 1, 3), Axis("gamma", 0, 1, 3))),
        dict(axes=(Axis("J", 0, 1, 3), Axis("J", 0, 1, 3))),
        dict(axes=(Axis("J", 0, 1, 3),), fixed={"J": 1.0}),
        dict(axes=(Axis("J", 0, 1, 3),), fixed={"h": 1.0}),
        dict(axes=(Axis("J", 0, 1, 3),), r=0),
        dict(axes=(Axis("J", 0, 1, 3),), quantities=("QD", "entropy")),
        dict(axes=(Axis("J", 0, 1, 3),), quantities=("C",), derivatives=(("QD", "J"),)),
        dict(axes=(Axis("J", 0, 1, 3),), derivatives=(("QD", "D"),)),
        dict(axes=(Axis("J", 0, 1, 2),), derivatives=(("QD", "J"),)),
        dict(axes=(Axis("J", 0, 1, 3),), N=5),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            SweepSpec(**kw)

    @pytest.mark.parametrize("args", [("J", 1, 0, 3), ("J", 0, 1, 0), ("J", 0, 1, 1),
                                      ("J", 0, math.inf, 3), ("B", 0, 1, 3)])
    def test_invalid_axis(self, args):
        with pytest.raises(ValidationError):
            Axis(*args)

    def test_dict_round_trip(self):
        spec = SweepSpec(axes=(Axis("J", 0.5, 1.0, 3), Axis("D", 0.0, 0.5, 2)),
                         fixed={"gamma": 0.5}, r=2, derivatives=(("QD", "J"),))
        assert SweepSpec.from_dict(spec.to_dict()) == spec

    @pytest.mark.parametrize("data", [
        {"axes": [{"name": "J", "min": 0, "max": 1, "n_points": 3}], "colour": "red"},
        {"axes": [{"name": "J", "min": 0, "max": 1, "n_points": 3, "step": 0.5}]},
        {"fixed": {"J": 1}},
    ])
    def test_from_dict_rejects_unknown(self, data):
        with pytest.raises(ValidationError):
            SweepSpec.from_dict(data)


class TestRunSweep:
    def test_single_point_at_zero_coupling(self):
        t = run_sweep(SweepSpec(axes=(Axis("J", 0.0, 0.0, 1),)), workers=1)
        assert len(t.rows) == 1
        for q in ("QD", "CC", "C"):
            assert abs(t.column(q)[0]) < 1e-10

    def test_row_major_order(self):
        spec = SweepSpec(axes=(Axis("J", 0.5, 1.0, 3), Axis("D", 0.0, 0.4, 2)), fixed={"gamma": 0.5})
        t = run_sweep(spec, workers=1)
        assert len(t.rows) == 6 and t.shape == (3, 2)
        assert t.column("axis_J").tolist() == [0.5, 0.5, 0.75, 0.75, 1.0, 1.0]
        assert t.column("axis_D").tolist() == [0.0, 0.4] * 3
        assert t.columns[:2] == ("axis_J", "axis_D")

    def test_deterministic(self):
        spec = j_scan(fixed={"gamma": 0.8, "D": 0.2}, derivatives=(("QD", "J"),))
        a, b = run_sweep(spec, workers=1), run_sweep(spec, workers=1)
        assert a == b and a.to_csv() == b.to_csv()

    def test_parallel_matches_serial(self):
        spec = j_scan(n=7, fixed={"gamma": 0.3, "temperature": 0.2})
        assert run_sweep(spec, workers=2).to_csv() == run_sweep(spec, workers=1).to_csv()

    def test_failed_point_is_isolated(self, monkeypatch):
        real = sweep.evaluate

        def flaky(p, r):
            if p.J == 1.0:
                raise NumericalError("quadrature did not converge", achieved=1e-3)
            return real(p, r)

        monkeypatch.setattr(sweep, "evaluate", flaky)
        t = run_sweep(j_scan(), workers=1)
        assert t.failures == 1
        errors = t.column("error")
        bad = int(np.flatnonzero(errors != "")[0])
        assert t.column("J")[bad] == 1.0
        assert "NumericalError" in errors[bad]
        assert math.isnan(t.column("QD")[bad])
        assert np.isfinite(np.delete(t.column("QD"), bad)).all()

    def test_quantity_subset(self):
        t = run_sweep(j_scan(n=3, quantities=("C", "QD")), workers=1)
        assert t.columns == ("axis_J", "J", "gamma", "D", "T", "r", "QD", "C", "error")

    def test_discord_below_classical_correlation(self):
        t = run_sweep(SweepSpec(axes=(Axis("J", 0.1, 2.0, 100),), fixed={"gamma": 1.0}), workers=1)
        assert np.all(t.column("QD") < t.column("CC"))

    def test_long_distance_concurrence_is_small(self):
        t = run_sweep(SweepSpec(axes=(Axis("J", 0.1, 2.0, 96),), fixed={"gamma": 0.5}, r=3),
                      workers=1)
        c = t.column("C")
        assert c.max() <= 0.05
        assert abs(t.column("J")[np.argmax(c)] - 1.0) < 0.2

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv(sweep.WORKERS_ENV, "3")
        assert sweep.default_workers() == 3
        monkeypatch.setenv(sweep.WORKERS_ENV, "many")
        with pytest.raises(ValidationError):
            sweep.default_workers()


class TestCSV:
    def test_round_trip_is_byte_identical(self):
        t = run_sweep(j_scan(n=5, fixed={"D": 0.3}, derivatives=(("C", "J"),)), workers=1)
        text = t.to_csv()
        assert SweepTable.from_csv(text).to_csv() == text
        assert "\r" not in text
        assert text.splitlines()[0].startswith("axis_J,J,gamma,D,T,r,sz")

    def test_twelve_significant_digits(self):
        t = SweepTable(("x", "r", "error"), [(1 / 3, 2, ""), (math.nan, 1, "E: boom")], {}, (2,))
        assert t.to_csv() == "x,r,error\n0.333333333333,2,\nnan,1,E: boom\n"
        assert SweepTable.from_csv(t.to_csv()).to_csv() == t.to_csv()

    def test_equality_ignores_timestamp(self):
        t = run_sweep(j_scan(n=3), workers=1)
        u = SweepTable(t.columns, list(t.rows), {**t.metadata, "timestamp": "then"}, t.shape)
        assert t == u


class TestDerivative:
    def test_polynomial(self):
        x = np.linspace(0, 1, 101)
        assert np.abs(derivative_values(x**2, x) - 2 * x).max() < 1e-3

    def test_constant(self):
        x = np.linspace(-1, 1, 21)
        assert np.abs(derivative_values(np.full_like(x, 3.7), x)).max() < 1e-12

    def test_second_order_endpoints(self):
        x = np.linspace(0, 2, 9)
        assert np.abs(derivative_values(x**2 - 3 * x, x) - (2 * x - 3)).max() < 1e-12

    @pytest.mark.parametrize("x", [np.array([0.0, 0.1, 0.3]), np.array([0.0, 0.1]),
                                   np.array([0.2, 0.1, 0.0])])
    def test_bad_grid(self, x):
        with pytest.raises(DomainError):
            derivative_values(np.zeros_like(x), x)

    def test_along_second_axis(self):
        spec = SweepSpec(axes=(Axis("J", 0.5, 1.0, 2), Axis("D", 0.0, 0.4, 5)),
                         fixed={"gamma": 0.5}, derivatives=(("MI", "D"),))
        t = run_sweep(spec, workers=1)
        mi = t.column("MI").reshape(2, 5)
        x = np.linspace(0.0, 0.4, 5)
        expected = np.array([derivative_values(row, x) for row in mi]).ravel()
        np.testing.assert_allclose(t.column("dMI/dD"), expected)
        np.testing.assert_allclose(derivative(t, "MI", "D"), expected)

    def test_not_an_axis(self):
        t = run_sweep(j_scan(n=3), workers=1)
        with pytest.raises(DomainError):
            derivative(t, "QD", "D")

    def test_critical_peak(self):
        spec = SweepSpec(axes=(Axis("J", 0.8, 1.2, 101),), fixed={"gamma": 0.8},
                         derivatives=(("QD", "J"),))
        t = run_sweep(spec, workers=1)
        peak = locate_extremum(np.abs(t.column("dQD/dJ")), t.column("axis_J"))
        assert not peak.at_boundary
        assert peak.x == pytest.approx(1.0, abs=0.02)


class TestExtremum:
    def test_parabola(self):
        x = np.linspace(0, 2.3, 8)
        e = locate_extremum(-(x - 1.0) ** 2, x)
        step = x[1] - x[0]
        assert e.x == pytest.approx(1.0, abs=step / 10)
        assert e.sharpness == pytest.approx(2.0)
        assert not e.at_boundary

    @pytest.mark.parametrize("column", [np.arange(5.0), -np.arange(5.0)])
    def test_monotone_flags_boundary(self, column):
        e = locate_extremum(column, np.arange(5.0))
        assert e.at_boundary and math.isnan(e.sharpness)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            locate_extremum([0.0, math.nan, 1.0], [0.0, 1.0, 2.0])

    def test_curvature_converges_for_smooth_column(self):
        values = [max_curvature(np.sin(x), x) for x in
                  (np.linspace(0, 3, n) for n in (31, 61, 121))]
        assert values[2] <= values[0] * 1.01

    def test_curvature_grows_at_a_kink(self):
        values = [max_curvature(np.abs(x - 0.5), x) for x in
                  (np.linspace(0, 1, n) for n in (20, 40, 80))]
        assert values[2] > 3 * values[0]
