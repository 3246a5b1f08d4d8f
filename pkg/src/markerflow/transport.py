"""Time integration: markers advected by their own softmax-induced velocity.

Classical RK4 with pseudo-spectral advection terms; products are 2/3-dealiased
and the mode-0 of every tendency is zeroed, so each transported field keeps
its spatial mean bit-exactly. A direct single-scalar vorticity evolution with
the identical scheme backs the closure test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gating, spectral
from .gating import MarkerSet
from .spectral import Grid

CFL_FLOOR = 1e-12


class IntegrationError(RuntimeError):
    """Non-finite values appeared during a step; carries the last good state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.5
    dt_max: float = 0.05
    t_end: float = 1.0
    save_every: int = 10
    save_interval: float | None = None

    def __post_init__(self):
        if not (0 < self.cfl <= 1):
            raise ValueError("cfl must lie in (0, 1]")
        if self.dt_max <= 0:
            raise ValueError("dt_max must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")
        if self.save_interval is not None and self.save_interval <= 0:
            raise ValueError("save_interval must be positive")


@dataclass
class SimState:
    """Marker simulation state; `mode` selects the vorticity assembly that
    drives the velocity (soft = softmax mixture, sharp = argmax levels)."""

    markers: MarkerSet
    mode: str = "soft"
    time: float = 0.0
    accumulated_gradu: float = 0.0
    step_count: int = 0
    _velocity: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.mode not in ("soft", "sharp"):
            raise ValueError(f"mode must be 'soft' or 'sharp', got {self.mode!r}")

    @property
    def grid(self) -> Grid:
        return self.markers.grid

    def vorticity(self) -> np.ndarray:
        if self.mode == "soft":
            return gating.assemble_soft_vorticity(self.markers)
        return gating.assemble_sharp_vorticity(self.markers)

    def velocity(self) -> tuple[np.ndarray, np.ndarray]:
        if self._velocity is None:
            self._velocity = spectral.velocity_from_vorticity(self.grid, self.vorticity())
        return self._velocity


def induced_velocity(s: SimState) -> tuple[np.ndarray, np.ndarray]:
    """Velocity from the state's assembled vorticity (divergence-free)."""
    return s.velocity()


def cfl_dt(u: tuple[np.ndarray, np.ndarray], ctrl: StepControl, grid: Grid,
           remaining: float | None = None) -> float:
    umax = max(float(np.abs(u[0]).max()), float(np.abs(u[1]).max()), CFL_FLOOR)
    dt = min(ctrl.dt_max, ctrl.cfl * grid.h / umax)
    if remaining is not None:
        dt = min(dt, remaining)
    return dt


def _advection_tendency(grid: Grid, u: tuple[np.ndarray, np.ndarray],
                        phi: np.ndarray) -> np.ndarray:
    """-dealias(u . grad phi) for a stack of fields, mode 0 exactly zero."""
    out = np.empty_like(phi)
    for k in range(phi.shape[0]):
        f_hat = grid.fft(phi[k])
        fx = grid.ifft(1j * grid.kx * f_hat)
        fy = grid.ifft(1j * grid.ky * f_hat)
        adv_hat = grid.fft(u[0] * fx + u[1] * fy) * grid.dealias_mask
        adv_hat[0, 0] = 0.0
        out[k] = -grid.ifft(adv_hat)
    return out


def _marker_velocity(grid: Grid, phi: np.ndarray, state: SimState):
    m = state.markers.with_phi(phi)
    if state.mode == "soft":
        omega = gating.assemble_soft_vorticity(m)
    else:
        omega = gating.assemble_sharp_vorticity(m)
    return spectral.velocity_from_vorticity(grid, omega)


def advect_step(s: SimState, dt: float) -> SimState:
    """One coupled RK4 step; the velocity is reassembled at every stage.

    The grad-u accumulator advances by the trapezoid rule on the step
    endpoints, so it is nondecreasing and additive over concatenated runs.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = s.grid
    phi0 = s.markers.phi

    u1 = s.velocity()
    k1 = _advection_tendency(grid, u1, phi0)
    u2 = _marker_velocity(grid, phi0 + 0.5 * dt * k1, s)
    k2 = _advection_tendency(grid, u2, phi0 + 0.5 * dt * k1)
    u3 = _marker_velocity(grid, phi0 + 0.5 * dt * k2, s)
    k3 = _advection_tendency(grid, u3, phi0 + 0.5 * dt * k2)
    u4 = _marker_velocity(grid, phi0 + dt * k3, s)
    k4 = _advection_tendency(grid, u4, phi0 + dt * k3)

    phi1 = phi0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(phi1)):
        raise IntegrationError(f"non-finite markers after step at t={s.time}", last_state=s)

    new = SimState(
        markers=s.markers.with_phi(phi1),
        mode=s.mode,
        time=s.time + dt,
        accumulated_gradu=s.accumulated_gradu,
        step_count=s.step_count + 1,
    )
    g0 = spectral.grad_u_sup_norm(grid, u1)
    g1 = spectral.grad_u_sup_norm(grid, new.velocity())
    new.accumulated_gradu = s.accumulated_gradu + 0.5 * dt * (g0 + g1)
    return new


def run(initial: MarkerSet, mode: str, ctrl: StepControl, hook=None):
    """Step to t_end with adaptive CFL dt, invoking `hook(state)` at the
    initial state, every `save_every` steps and at the horizon.

    Returns (final_state, records) where records collects the hook outputs
    (each merged with t / step bookkeeping). Deterministic for fixed inputs.
    """
    state = SimState(markers=initial.copy(), mode=mode)
    records = []

    def record(st):
        entry = {"t": st.time, "step": st.step_count,
                 "accumulated_gradu": st.accumulated_gradu}
        if hook is not None:
            entry.update(hook(st))
        records.append(entry)

    record(state)
    while state.time < ctrl.t_end - 1e-12:
        dt = cfl_dt(state.velocity(), ctrl, state.grid, remaining=ctrl.t_end - state.time)
        state = advect_step(state, dt)
        if state.step_count % ctrl.save_every == 0 or state.time >= ctrl.t_end - 1e-12:
            record(state)
    return state, records


def direct_step_hat(grid: Grid, omega_hat: np.ndarray, dt: float) -> np.ndarray:
    """RK4 step of d omega/dt = -u . grad omega on the spectral coefficients.

    Mode 0 of every tendency is exactly zero, so omega_hat[0,0] (the mean)
    never changes, bitwise.
    """

    def tend(w_hat):
        psi_hat = w_hat * grid.inv_k2
        u = (grid.ifft(-1j * grid.ky * psi_hat), grid.ifft(1j * grid.kx * psi_hat))
        wx = grid.ifft(1j * grid.kx * w_hat)
        wy = grid.ifft(1j * grid.ky * w_hat)
        adv_hat = grid.fft(u[0] * wx + u[1] * wy) * grid.dealias_mask
        adv_hat[0, 0] = 0.0
        return -adv_hat

    k1 = tend(omega_hat)
    k2 = tend(omega_hat + 0.5 * dt * k1)
    k3 = tend(omega_hat + 0.5 * dt * k2)
    k4 = tend(omega_hat + dt * k3)
    return omega_hat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_vorticity_direct(omega0: np.ndarray, grid: Grid, ctrl: StepControl,
                            dt: float | None = None):
    """Evolve omega as a single transported scalar under its own velocity.

    Fixed dt (default: CFL dt of the initial velocity, adjusted to land on
    t_end exactly). Returns a list of (t, omega, exact_mean) samples at the
    save cadence, always including t=0 and t_end; exact_mean is read off the
    evolved mode-0 coefficient, which advection never touches.
    """
    spectral._require_finite(omega0, "initial vorticity")
    if dt is None:
        u0 = spectral.velocity_from_vorticity(grid, omega0)
        dt = cfl_dt(u0, ctrl, grid)
    n_steps = max(1, int(np.ceil(ctrl.t_end / dt - 1e-12)))
    dt = ctrl.t_end / n_steps
    w_hat = grid.fft(np.asarray(omega0, dtype=float))
    n_sq = grid.n**2
    samples = [(0.0, np.asarray(omega0, dtype=float).copy(), w_hat[0, 0].real / n_sq)]
    for step in range(1, n_steps + 1):
        w_hat = direct_step_hat(grid, w_hat, dt)
        if not np.all(np.isfinite(w_hat)):
            raise IntegrationError(f"non-finite vorticity at step {step}")
        if step % ctrl.save_every == 0 or step == n_steps:
            samples.append((step * dt, grid.ifft(w_hat), w_hat[0, 0].real / n_sq))
    return samples
