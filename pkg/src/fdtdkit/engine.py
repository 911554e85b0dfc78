"""Leapfrog update kernels and the time-stepping loop.

One full step advances the state in a fixed order: write the source value
into Ez, update all H components from the current E field, then update all E
components from the just-updated H field. In 1D the two updates are::

    hy[i] = cha[i]*hy[i] + chb[i]*(ez[i+1] - ez[i])    for i in [0, xdim-1)
    ez[i] = cea[i]*ez[i] + ceb[i]*(hy[i] - hy[i-1])    for i in [1, xdim)

Cells outside those ranges lack an upwind or downwind neighbor and are frozen:
they keep their initial values forever, which makes the grid edge behave like
a perfect reflector. The 3D kernels apply the same pattern per axis, with
forward differences feeding H and backward differences feeding E.

Loss enters through semi-implicit coefficients. With ``le = sigma*dt/(2*eps)``
and ``lh = sigma_star*dt/(2*mu)``::

    cea = (1 - le)/(1 + le)        ceb = dt/(delta*eps)/(1 + le)
    cha = (1 - lh)/(1 + lh)        chb = dt/(delta*mu)/(1 + lh)

so the lossless case reduces bitwise to the plain ``dt/(delta*eps)`` and
``dt/(delta*mu)`` factors.

Kernels are pure: they read one generation and write a fresh buffer, so the
execution backend may split the index range into chunks in any order without
changing a single bit of the output (see :mod:`fdtdkit.backends`). All
arithmetic stays in the run's precision; scalar factors are cast to the array
dtype before any kernel touches them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backends import Backend, KernelPlan, StencilExecutor, execute_stencil
from .model import (
    FieldState,
    FieldState1D,
    FieldState3D,
    FloatArray,
    MaterialGrid,
    SimulationConfig,
    SourceSpec,
)

_SERIAL = Backend.serial()


@dataclass(frozen=True)
class UpdateCoefficients:
    """Per-cell update factors derived from materials and the time step."""

    cea: FloatArray
    ceb: FloatArray
    cha: FloatArray
    chb: FloatArray

    def __post_init__(self) -> None:
        shape = self.cea.shape
        dtype = self.cea.dtype
        for name in ("ceb", "cha", "chb"):
            arr = getattr(self, name)
            if arr.shape != shape or arr.dtype != dtype:
                raise ValueError(f"{name} must match cea in shape and dtype")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cea.shape

    @property
    def dtype(self) -> np.dtype:
        return self.cea.dtype

    @classmethod
    def from_materials(
        cls, materials: MaterialGrid, deltat: float, delta: float
    ) -> "UpdateCoefficients":
        """Build the semi-implicit factors; all arithmetic in the material dtype."""
        dtype = materials.dtype
        dt = dtype.type(deltat)
        dl = dtype.type(delta)
        one = dtype.type(1.0)
        two = dtype.type(2.0)

        le = materials.sigma * dt / (two * materials.epsilon)
        lh = materials.sigma_star * dt / (two * materials.mu)
        if np.any(le >= one) or np.any(lh >= one):
            raise ValueError(
                "loss too strong for the semi-implicit update at this time step; "
                "reduce sigma, sigma_star, or the Courant number"
            )
        cea = (one - le) / (one + le)
        ceb = dt / (dl * materials.epsilon) / (one + le)
        cha = (one - lh) / (one + lh)
        chb = dt / (dl * materials.mu) / (one + lh)
        return cls(cea=cea, ceb=ceb, cha=cha, chb=chb)


@dataclass(frozen=True)
class SnapshotSeries:
    """Field states collected during a run, in strictly increasing step order."""

    config: SimulationConfig
    states: tuple[FieldState, ...]

    def __post_init__(self) -> None:
        steps = self.steps
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("snapshot steps must be strictly increasing")

    @property
    def steps(self) -> tuple[int, ...]:
        return tuple(state.step for state in self.states)

    @property
    def final(self) -> FieldState:
        if not self.states:
            raise ValueError("empty snapshot series")
        return self.states[-1]


def source_value(source: SourceSpec, n: int, deltat: float, dtype: np.dtype) -> np.floating:
    """Waveform sample for step ``n``, evaluated in double and cast to ``dtype``."""
    return dtype.type(source.value_at(n, deltat))


def _write_source(ez: FloatArray, source: SourceSpec, n: int, deltat: float) -> None:
    val = source_value(source, n, deltat, ez.dtype)
    if ez.ndim == 1:
        target = source.location
    elif source.plane:
        target = (source.location[0], slice(None), slice(None))
    else:
        target = source.location
    if source.soft:
        ez[target] += val
    else:
        ez[target] = val


def inject_source(
    state: FieldState, source: SourceSpec, n: int, deltat: float
) -> FieldState:
    """Return a state with the step-``n`` source value written into Ez.

    Hard sources overwrite the target cell (or full y-z plane for a 3D plane
    source); soft sources add. Nothing else changes, including the step count.
    """
    ez = state.ez.copy()
    _write_source(ez, source, n, deltat)
    return replace(state, ez=ez)


# --- 1D kernels ---------------------------------------------------------


def _advance_hy_1d(
    ez: FloatArray,
    hy: FloatArray,
    coeff: UpdateCoefficients,
    backend: Backend,
    executor: StencilExecutor | None,
    out: FloatArray | None = None,
) -> FloatArray:
    n = hy.shape[0]
    if out is None:
        out = hy.copy()
    else:
        np.copyto(out, hy)
    cha, chb = coeff.cha, coeff.chb

    def kernel(lo: int, hi: int) -> None:
        out[lo:hi] = cha[lo:hi] * hy[lo:hi] + chb[lo:hi] * (ez[lo + 1 : hi + 1] - ez[lo:hi])

    execute_stencil(kernel, KernelPlan.for_range(0, n - 1, backend), backend, executor)
    return out


def _advance_ez_1d(
    ez: FloatArray,
    hy: FloatArray,
    coeff: UpdateCoefficients,
    backend: Backend,
    executor: StencilExecutor | None,
    out: FloatArray | None = None,
) -> FloatArray:
    n = ez.shape[0]
    if out is None:
        out = ez.copy()
    else:
        np.copyto(out, ez)
    cea, ceb = coeff.cea, coeff.ceb

    def kernel(lo: int, hi: int) -> None:
        out[lo:hi] = cea[lo:hi] * ez[lo:hi] + ceb[lo:hi] * (hy[lo:hi] - hy[lo - 1 : hi - 1])

    execute_stencil(kernel, KernelPlan.for_range(1, n, backend), backend, executor)
    return out


def update_h_1d(
    state: FieldState1D,
    coeff: UpdateCoefficients,
    backend: Backend = _SERIAL,
    executor: StencilExecutor | None = None,
) -> FieldState1D:
    """Advance Hy half a leapfrog cycle; the last cell stays frozen."""
    return replace(state, hy=_advance_hy_1d(state.ez, state.hy, coeff, backend, executor))


def update_e_1d(
    state: FieldState1D,
    coeff: UpdateCoefficients,
    backend: Backend = _SERIAL,
    executor: StencilExecutor | None = None,
) -> FieldState1D:
    """Advance Ez half a leapfrog cycle; the first cell stays frozen."""
    return replace(state, ez=_advance_ez_1d(state.ez, state.hy, coeff, backend, executor))


def step_1d(
    state: FieldState1D,
    coeff: UpdateCoefficients,
    source: SourceSpec | None,
    deltat: float,
    backend: Backend = _SERIAL,
    executor: StencilExecutor | None = None,
) -> FieldState1D:
    """One full step: source write, H update, E update, step count + 1."""
    n = state.step + 1
    ez = state.ez.copy()
    if source is not None:
        _write_source(ez, source, n, deltat)
    hy = _advance_hy_1d(ez, state.hy, coeff, backend, executor)
    ez = _advance_ez_1d(ez, hy, coeff, backend, executor)
    return FieldState1D(ez=ez, hy=hy, step=n)


# --- 3D kernels ---------------------------------------------------------
#
# Index-aligned storage; each component updates only where both of its
# difference neighbors exist, the rest stays frozen:
#
#   hx: j,k trimmed high   hy: i,k trimmed high   hz: i,j trimmed high
#   ex: j,k trimmed low    ey: i,k trimmed low    ez: i,j trimmed low


def _slab_plan(lo: int, hi: int, shape: tuple[int, int, int], backend: Backend) -> KernelPlan:
    return KernelPlan.for_range(lo, hi, backend, cells_per_index=shape[1] * shape[2])


def _advance_h_3d(
    state: FieldState3D,
    coeff: UpdateCoefficients,
    backend: Backend,
    executor: StencilExecutor | None,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    ex, ey, ez = state.ex, state.ey, state.ez
    hx, hy, hz = state.hx, state.hy, state.hz
    nx, ny, nz = ex.shape
    cha, chb = coeff.cha, coeff.chb
    hx_out, hy_out, hz_out = hx.copy(), hy.copy(), hz.copy()

    def hx_kernel(lo: int, hi: int) -> None:
        s = (slice(lo, hi), slice(0, ny - 1), slice(0, nz - 1))
        hx_out[s] = cha[s] * hx[s] + chb[s] * (
            (ey[lo:hi, : ny - 1, 1:nz] - ey[s]) - (ez[lo:hi, 1:ny, : nz - 1] - ez[s])
        )

    def hy_kernel(lo: int, hi: int) -> None:
        s = (slice(lo, hi), slice(None), slice(0, nz - 1))
        hy_out[s] = cha[s] * hy[s] + chb[s] * (
            (ez[lo + 1 : hi + 1, :, : nz - 1] - ez[s]) - (ex[lo:hi, :, 1:nz] - ex[s])
        )

    def hz_kernel(lo: int, hi: int) -> None:
        s = (slice(lo, hi), slice(0, ny - 1), slice(None))
        hz_out[s] = cha[s] * hz[s] + chb[s] * (
            (ex[lo:hi, 1:ny, :] - ex[s]) - (ey[lo + 1 : hi + 1, : ny - 1, :] - ey[s])
        )

    shape = ex.shape
    execute_stencil(hx_kernel, _slab_plan(0, nx, shape, backend), backend, executor)
    execute_stencil(hy_kernel, _slab_plan(0, nx - 1, shape, backend), backend, executor)
    execute_stencil(hz_kernel, _slab_plan(0, nx - 1, shape, backend), backend, executor)
    return hx_out, hy_out, hz_out


def _advance_e_3d(
    state: FieldState3D,
    coeff: UpdateCoefficients,
    backend: Backend,
    executor: StencilExecutor | None,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    ex, ey, ez = state.ex, state.ey, state.ez
    hx, hy, hz = state.hx, state.hy, state.hz
    nx, ny, nz = ex.shape
    cea, ceb = coeff.cea, coeff.ceb
    ex_out, ey_out, ez_out = ex.copy(), ey.copy(), ez.copy()

    def ex_kernel(lo: int, hi: int) -> None:
        s = (slice(lo, hi), slice(1, ny), slice(1, nz))
        ex_out[s] = cea[s] * ex[s] + ceb[s] * (
            (hz[s] - hz[lo:hi, : ny - 1, 1:nz]) - (hy[s] - hy[lo:hi, 1:ny, : nz - 1])
        )

    def ey_kernel(lo: int, hi: int) -> None:
        s = (slice(lo, hi), slice(None), slice(1, nz))
        ey_out[s] = cea[s] * ey[s] + ceb[s] * (
            (hx[s] - hx[lo:hi, :, : nz - 1]) - (hz[s] - hz[lo - 1 : hi - 1, :, 1:nz])
        )

    def ez_kernel(lo: int, hi: int) -> None:
        s = (slice(lo, hi), slice(1, ny), slice(None))
        ez_out[s] = cea[s] * ez[s] + ceb[s] * (
            (hy[s] - hy[lo - 1 : hi - 1, 1:ny, :]) - (hx[s] - hx[lo:hi, : ny - 1, :])
        )

    shape = ex.shape
    execute_stencil(ex_kernel, _slab_plan(0, nx, shape, backend), backend, executor)
    execute_stencil(ey_kernel, _slab_plan(1, nx, shape, backend), backend, executor)
    execute_stencil(ez_kernel, _slab_plan(1, nx, shape, backend), backend, executor)
    return ex_out, ey_out, ez_out


def update_h_3d(
    state: FieldState3D,
    coeff: UpdateCoefficients,
    backend: Backend = _SERIAL,
    executor: StencilExecutor | None = None,
) -> FieldState3D:
    """Advance Hx, Hy, Hz from the current E field (forward differences)."""
    hx, hy, hz = _advance_h_3d(state, coeff, backend, executor)
    return replace(state, hx=hx, hy=hy, hz=hz)


def update_e_3d(
    state: FieldState3D,
    coeff: UpdateCoefficients,
    backend: Backend = _SERIAL,
    executor: StencilExecutor | None = None,
) -> FieldState3D:
    """Advance Ex, Ey, Ez from the current H field (backward differences)."""
    ex, ey, ez = _advance_e_3d(state, coeff, backend, executor)
    return replace(state, ex=ex, ey=ey, ez=ez)


def step_3d(
    state: FieldState3D,
    coeff: UpdateCoefficients,
    source: SourceSpec | None,
    deltat: float,
    backend: Backend = _SERIAL,
    executor: StencilExecutor | None = None,
) -> FieldState3D:
    """One full 3D step: source write, H update, E update, step count + 1."""
    n = state.step + 1
    work = state
    if source is not None:
        ez = state.ez.copy()
        _write_source(ez, source, n, deltat)
        work = replace(state, ez=ez)
    hx, hy, hz = _advance_h_3d(work, coeff, backend, executor)
    work = replace(work, hx=hx, hy=hy, hz=hz)
    ex, ey, ez = _advance_e_3d(work, coeff, backend, executor)
    return FieldState3D(ex=ex, ey=ey, ez=ez, hx=hx, hy=hy, hz=hz, step=n)


# --- run loop -----------------------------------------------------------


def field_energy(state: FieldState, materials: MaterialGrid) -> float:
    """Energy proxy: sum of eps*Ez^2 + mu*Hy^2 (1D) or over all six components (3D).

    Not an exact discrete invariant, but monotone under loss once sources
    stop driving the grid.
    """
    if isinstance(state, FieldState1D):
        total = np.sum(materials.epsilon * state.ez**2) + np.sum(materials.mu * state.hy**2)
        return float(total)
    e_part = state.ex**2 + state.ey**2 + state.ez**2
    h_part = state.hx**2 + state.hy**2 + state.hz**2
    return float(np.sum(materials.epsilon * e_part) + np.sum(materials.mu * h_part))


def run(
    config: SimulationConfig,
    materials: MaterialGrid | None = None,
    backend: Backend = _SERIAL,
) -> SnapshotSeries:
    """Run ``config.time_tot`` steps from a zero initial state.

    Snapshots are taken every ``snapshot_every`` steps (plus the final state
    if it does not land on the cadence); ``snapshot_every = 0`` keeps only
    the final state. Each snapshot owns its arrays outright. Results are
    byte-identical across backends and worker counts.
    """
    if materials is None:
        from .model import make_vacuum_materials

        materials = make_vacuum_materials(config.extent, config.precision, config.units)
    if materials.shape != config.shape:
        raise ValueError(f"materials shape {materials.shape} != grid shape {config.shape}")
    if materials.dtype != config.precision.dtype:
        raise ValueError(
            f"materials dtype {materials.dtype} != run precision {config.precision.dtype}"
        )
    coeff = UpdateCoefficients.from_materials(materials, config.deltat, config.delta)
    stepper = step_1d if config.dims == 1 else step_3d
    if config.dims == 1:
        state: FieldState = FieldState1D.zeros(config.extent, config.precision)
    else:
        state = FieldState3D.zeros(config.extent, config.precision)

    states: list[FieldState] = []
    cadence = config.snapshot_every
    with StencilExecutor(backend) as executor:
        for n in range(1, config.time_tot + 1):
            state = stepper(state, coeff, config.source, config.deltat, backend, executor)
            if cadence and n % cadence == 0:
                states.append(state)
    if not states or states[-1].step != config.time_tot:
        states.append(state)
    return SnapshotSeries(config=config, states=tuple(states))
