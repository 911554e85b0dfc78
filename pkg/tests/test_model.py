"""Configuration, stability, source, and material validation behavior."""

import math

import numpy as np
import pytest

from fdtdkit.model import (
    C0,
    EPS0,
    MU0,
    MaterialGrid,
    Precision,
    SimulationConfig,
    SourceSpec,
    UnstableCourantError,
    central_difference,
    courant_bound,
    make_vacuum_materials,
    validate_stability,
)


def test_central_difference_quadratic():
    # centered stencil is exact for polynomials up to degree 2, modulo rounding
    approx = central_difference(lambda x: x * x, 1.0, 0.1)
    assert approx == pytest.approx(2.0, rel=1e-12)


def test_central_difference_cubic():
    approx = central_difference(lambda x: x**3, 1.0, 0.2)
    assert approx == pytest.approx(3.01, rel=1e-12)


def test_central_difference_rejects_bad_delta():
    with pytest.raises(ValueError):
        central_difference(math.sin, 0.0, 0.0)
    with pytest.raises(ValueError):
        central_difference(math.sin, 0.0, -0.1)


def test_courant_bounds():
    assert courant_bound(1) == 1.0
    assert courant_bound(3) == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-15)
    with pytest.raises(ValueError):
        courant_bound(2)


@pytest.mark.parametrize("dims,courant", [(1, 0.5), (1, 1.0), (3, 0.5), (3, 1.0 / math.sqrt(3.0))])
def test_validate_stability_accepts(dims, courant):
    validate_stability(dims, courant)


@pytest.mark.parametrize("dims,courant", [(1, 1.1), (3, 0.6), (1, 0.0), (1, -0.5), (1, math.inf), (1, math.nan)])
def test_validate_stability_rejects(dims, courant):
    with pytest.raises(UnstableCourantError):
        validate_stability(dims, courant)


def test_unstable_courant_error_names_the_bound():
    with pytest.raises(UnstableCourantError, match="1.0"):
        validate_stability(1, 1.5)


def test_precision_parse_and_dtype():
    assert Precision.parse("single").dtype == np.dtype(np.float32)
    assert Precision.parse("double").dtype == np.dtype(np.float64)
    assert Precision.DOUBLE.eps == np.finfo(np.float64).eps
    with pytest.raises(ValueError):
        Precision.parse("quad")


def test_source_waveform_phase():
    src = SourceSpec(location=5)
    # phase origin sits at tstart, one period spans n_lambda steps
    assert src.value_at(1, 1.0) == 0.0
    assert src.value_at(6, 1.0) == pytest.approx(1.0, rel=1e-15)
    assert src.value_at(11, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_source_location_must_be_interior():
    with pytest.raises(ValueError):
        SimulationConfig(extent=10, time_tot=1, source=SourceSpec(location=0))
    with pytest.raises(ValueError):
        SimulationConfig(extent=10, time_tot=1, source=SourceSpec(location=9))
    SimulationConfig(extent=10, time_tot=1, source=SourceSpec(location=8))


def test_plane_source_rejected_in_1d():
    with pytest.raises(ValueError):
        SimulationConfig(extent=10, time_tot=1, source=SourceSpec(location=5, plane=True))


def test_config_defaults_and_deltat():
    cfg = SimulationConfig(extent=200, time_tot=50, source=SourceSpec(location=100))
    assert cfg.dims == 1
    assert cfg.courant == 1.0
    assert cfg.deltat == 1.0
    assert cfg.cell_count == 200

    cfg3 = SimulationConfig(extent=(8, 8, 8), time_tot=5, source=SourceSpec(location=(4, 4, 4)))
    assert cfg3.dims == 3
    assert cfg3.courant == 0.5
    assert cfg3.deltat == 0.5
    assert cfg3.cell_count == 512


def test_config_rejects_unstable_courant():
    with pytest.raises(UnstableCourantError):
        SimulationConfig(extent=200, time_tot=1, source=SourceSpec(location=100), courant=1.5)
    with pytest.raises(UnstableCourantError):
        SimulationConfig(extent=(8, 8, 8), time_tot=1, source=SourceSpec(location=(4, 4, 4)), courant=0.6)


def test_config_rejects_tiny_grids():
    with pytest.raises(ValueError):
        SimulationConfig(extent=2, time_tot=1, source=SourceSpec(location=1))


def test_physical_units_constants():
    assert C0 == 299792458.0
    assert EPS0 == 8.8541878128e-12
    assert MU0 == 1.25663706212e-6
    cfg = SimulationConfig(
        extent=50, time_tot=1, source=SourceSpec(location=25), delta=1e-3, units="physical"
    )
    assert cfg.wave_speed == C0
    assert cfg.deltat == pytest.approx(1e-3 / C0, rel=1e-15)


def test_vacuum_materials_by_units():
    norm = make_vacuum_materials(10, Precision.DOUBLE, "normalized")
    assert np.all(norm.epsilon == 1.0) and np.all(norm.mu == 1.0)
    phys = make_vacuum_materials(10, Precision.DOUBLE, "physical")
    assert np.all(phys.epsilon == EPS0) and np.all(phys.mu == MU0)
    assert np.all(phys.sigma == 0.0) and np.all(phys.sigma_star == 0.0)


def test_material_grid_validation():
    ok = np.ones(5)
    with pytest.raises(ValueError):
        MaterialGrid(epsilon=np.zeros(5), mu=ok, sigma=np.zeros(5), sigma_star=np.zeros(5))
    with pytest.raises(ValueError):
        MaterialGrid(epsilon=ok, mu=ok, sigma=-np.ones(5), sigma_star=np.zeros(5))
    with pytest.raises(ValueError):
        MaterialGrid(epsilon=ok, mu=np.ones(6), sigma=np.zeros(5), sigma_star=np.zeros(5))
