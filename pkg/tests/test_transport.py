import numpy as np
import pytest

from markerflow import gating, presets, spectral, transport
from markerflow.gating import MarkerSet, PhaseConfig
from markerflow.spectral import Grid
from markerflow.transport import IntegrationError, SimState, StepControl


def test_step_control_validation():
    with pytest.raises(ValueError):
        StepControl(cfl=0.0)
    with pytest.raises(ValueError):
        StepControl(dt_max=-1.0)
    with pytest.raises(ValueError):
        StepControl(save_every=0)
    with pytest.raises(ValueError):
        StepControl(save_interval=0.0)


def test_cfl_dt():
    g = Grid(64)
    ctrl = StepControl(cfl=0.5, dt_max=10.0, t_end=100.0)
    u = (2.0 * np.ones((64, 64)), np.zeros((64, 64)))
    assert transport.cfl_dt(u, ctrl, g) == pytest.approx(0.5 * g.h / 2.0)
    # dt_max binds for slow flow
    u = (1e-6 * np.ones((64, 64)), np.zeros((64, 64)))
    ctrl = StepControl(cfl=0.5, dt_max=0.01, t_end=100.0)
    assert transport.cfl_dt(u, ctrl, g) == pytest.approx(0.01)


def test_shear_steady_state_is_exact():
    # phi depending on y only gives u = (U(y), 0) and zero advection tendency
    g = Grid(64)
    m = presets.build_preset("shear2", g, 40.0)
    s = SimState(m, mode="soft")
    for _ in range(5):
        s = transport.advect_step(s, 0.02)
    assert np.max(np.abs(s.markers.phi - m.phi)) == 0.0


def test_mean_of_markers_is_conserved():
    g = Grid(32)
    m = presets.build_preset("cells3", g, 20.0)
    s = SimState(m, mode="soft")
    before = m.phi.mean(axis=(1, 2))
    for _ in range(10):
        s = transport.advect_step(s, 0.02)
    after = s.markers.phi.mean(axis=(1, 2))
    assert np.max(np.abs(after - before)) < 1e-14


def test_rk4_temporal_order():
    g = Grid(64)
    m = presets.build_preset("cells3", g, 10.0)

    def advance(dt, steps):
        s = SimState(m, mode="soft")
        for _ in range(steps):
            s = transport.advect_step(s, dt)
        return s.markers.phi

    coarse = advance(0.1, 2)
    fine = advance(0.05, 4)
    finest = advance(0.025, 8)
    e1 = np.max(np.abs(coarse - finest))
    e2 = np.max(np.abs(fine - finest))
    # classical RK4: halving dt should shrink the error by about 2^4
    assert e1 / e2 > 10.0


def test_accumulated_gradu_trapezoid_steady_flow():
    # steady velocity => the trapezoid rule integrates a constant exactly
    g = Grid(64)
    m = presets.build_preset("shear2", g, 40.0)
    s = SimState(m, mode="soft")
    rate = spectral.grad_u_sup_norm(g, s.velocity())
    for _ in range(8):
        s = transport.advect_step(s, 0.05)
    assert s.accumulated_gradu == pytest.approx(8 * 0.05 * rate, rel=1e-12)


def test_run_records_times():
    g = Grid(32)
    m = presets.build_preset("cells3", g, 10.0)
    ctrl = StepControl(cfl=0.5, dt_max=0.05, t_end=0.3, save_every=2)
    final, records = transport.run(m, "soft", ctrl)
    times = [r["t"] for r in records]
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(0.3)
    assert all(t1 > t0 for t0, t1 in zip(times, times[1:]))
    assert final.time == pytest.approx(0.3)


def test_direct_step_keeps_mean_mode_bitwise():
    g = Grid(32)
    rng = np.random.default_rng(0)
    omega = rng.normal(size=(32, 32))
    w_hat = g.fft(omega)
    before = w_hat[0, 0]
    for _ in range(20):
        w_hat = transport.direct_step_hat(g, w_hat, 0.01)
    assert w_hat[0, 0] == before


def test_direct_evolution_of_steady_solution():
    # omega = cos y is a steady Euler solution (parallel shear)
    g = Grid(64)
    omega = np.cos(g.y)
    w_hat = g.fft(omega)
    for _ in range(10):
        w_hat = transport.direct_step_hat(g, w_hat, 0.02)
    assert np.max(np.abs(g.ifft(w_hat) - omega)) < 1e-12


def test_evolve_vorticity_direct_reports_exact_mean():
    g = Grid(32)
    omega = np.cos(g.x) * np.cos(g.y) + 0.25
    ctrl = StepControl(cfl=0.5, dt_max=0.02, t_end=0.1, save_every=1)
    snaps = transport.evolve_vorticity_direct(omega, g, ctrl)
    means = [m for _, _, m in snaps]
    assert all(m == means[0] for m in means)
    assert means[0] == pytest.approx(0.25)


def test_integration_error_carries_state(monkeypatch):
    g = Grid(16)
    phi = np.zeros((2, 16, 16))
    phi[0] = np.sin(g.y)
    m = MarkerSet(g, phi, PhaseConfig((1.0, -1.0), 10.0))
    s = SimState(m, mode="soft")
    monkeypatch.setattr(
        transport, "_advection_tendency",
        lambda grid, u, fields: np.full_like(phi, np.nan),
    )
    monkeypatch.setattr(
        transport, "_marker_velocity", lambda grid, fields, state: s.velocity()
    )
    with pytest.raises(IntegrationError) as err:
        transport.advect_step(s, 0.01)
    assert err.value.last_state is s
