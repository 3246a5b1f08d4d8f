import numpy as np
import pytest

from markerflow import spectral
from markerflow.spectral import FieldError, Grid


def test_grid_rejects_bad_sizes():
    for n in (0, 8, 12, 100):
        with pytest.raises(ValueError):
            Grid(n)
    Grid(16)
    Grid(256)


def test_grid_coordinates():
    g = Grid(32)
    assert g.h == pytest.approx(2 * np.pi / 32)
    # f[i, j] lives at (i*h, j*h)
    assert g.x[3, 0] == pytest.approx(3 * g.h)
    assert g.y[0, 5] == pytest.approx(5 * g.h)


def test_poisson_eigenfunctions():
    g = Grid(64)
    # -lap psi = omega with omega = cos x  =>  psi = cos x
    psi = spectral.solve_stream(g, np.cos(g.x))
    assert np.max(np.abs(psi - np.cos(g.x))) < 1e-12
    # omega = sin 2y  =>  psi = sin(2y) / 4
    psi = spectral.solve_stream(g, np.sin(2 * g.y))
    assert np.max(np.abs(psi - np.sin(2 * g.y) / 4)) < 1e-12


def test_poisson_ignores_mean():
    g = Grid(32)
    psi0 = spectral.solve_stream(g, np.cos(g.x))
    psi1 = spectral.solve_stream(g, np.cos(g.x) + 7.5)
    assert np.max(np.abs(psi0 - psi1)) < 1e-12


def test_gradient_matches_analytic():
    g = Grid(64)
    f = np.sin(3 * g.x) * np.cos(2 * g.y)
    fx, fy = spectral.gradient(g, f)
    assert np.max(np.abs(fx - 3 * np.cos(3 * g.x) * np.cos(2 * g.y))) < 1e-11
    assert np.max(np.abs(fy + 2 * np.sin(3 * g.x) * np.sin(2 * g.y))) < 1e-11


def test_gradient_matches_finite_differences():
    g = Grid(128)
    rng = np.random.default_rng(7)
    # band-limited random field so both estimates resolve it
    f_hat = np.zeros((g.n, g.n), dtype=complex)
    for kx in range(-4, 5):
        for ky in range(-4, 5):
            c = rng.normal() + 1j * rng.normal()
            f_hat[kx, ky] = c
            f_hat[-kx, -ky] = np.conj(c)
    f = np.real(np.fft.ifft2(f_hat))
    fx, fy = spectral.gradient(g, f)
    fd_x = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2 * g.h)
    fd_y = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * g.h)
    # centered differences are O(h^2); just confirm agreement at that order
    assert np.max(np.abs(fx - fd_x)) < 30 * g.h**2
    assert np.max(np.abs(fy - fd_y)) < 30 * g.h**2


def test_velocity_is_divergence_free():
    g = Grid(64)
    rng = np.random.default_rng(1)
    omega = rng.normal(size=(64, 64))
    u = spectral.velocity_from_vorticity(g, omega)
    div = spectral.divergence(g, u)
    assert np.max(np.abs(div)) < 1e-9


def test_velocity_of_shear_vorticity():
    # omega = cos x => psi = cos x => u = (-psi_y, psi_x) = (0, -sin x)
    g = Grid(64)
    u1, u2 = spectral.velocity_from_vorticity(g, np.cos(g.x))
    assert np.max(np.abs(u1)) < 1e-12
    assert np.max(np.abs(u2 + np.sin(g.x))) < 1e-12


def test_dealias_mask_two_thirds_rule():
    g = Grid(32)
    keep = int(g.dealias_mask.sum())
    modes = np.fft.fftfreq(32, d=1 / 32).astype(int)
    expected = sum(
        1
        for kx in modes
        for ky in modes
        if max(abs(kx), abs(ky)) <= 32 // 3
    )
    assert keep == expected


def test_dealias_idempotent_and_kills_high_modes():
    g = Grid(32)
    f_hat = np.ones((32, 32), dtype=complex)
    once = spectral.dealias(g, f_hat)
    assert np.array_equal(once, spectral.dealias(g, once))
    # the highest mode is removed, a low one kept
    assert once[16, 0] == 0
    assert once[1, 2] == 1


def test_grad_u_sup_norm_analytic():
    g = Grid(64)
    u = (np.sin(g.y), np.zeros_like(g.x))
    # only nonzero entry of grad u is d(u1)/dy = cos y, sup = 1
    assert spectral.grad_u_sup_norm(g, u) == pytest.approx(1.0, abs=1e-12)


def test_non_finite_input_raises():
    g = Grid(16)
    bad = np.zeros((16, 16))
    bad[3, 3] = np.nan
    with pytest.raises(FieldError):
        spectral.solve_stream(g, bad)
