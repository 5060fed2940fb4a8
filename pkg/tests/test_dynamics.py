import csv
import math

import numpy as np
import pytest

from fjquant.dynamics import (
    BFIELD,
    NEUMANN,
    DynamicsError,
    StringState,
    convergence_study,
    energy,
    init_state,
    measure_omega2,
    reverse,
    simulate,
    step,
    write_csv,
)
from fjquant.stringmodel import StringParams, eom_residual


def params(N=64, b=0.0, m=0.0, eps=None):
    return StringParams(b=b, m=m, eps=math.pi / N if eps is None else eps, N=N)


# --- state construction ------------------------------------------------------------

def test_zero_profile():
    s = init_state(params(10), "zero")
    assert not s.positions.any() and not s.velocities.any()


def test_standing_wave_sampling():
    p = params(10)
    s = init_state(p, "standing", k=1.0)
    assert np.allclose(s.positions[:, 0], np.cos(np.arange(11) * math.pi / 10))
    assert not s.positions[:, 1].any()


def test_plane_wave_velocity_uses_continuum_dispersion():
    p = params(16, m=1.0)
    s = init_state(p, "plane", k=2.0, amplitude=0.5)
    sigma = np.arange(17) * p.eps
    assert np.allclose(s.velocities[:, 0], 0.5 * math.sqrt(5.0) * np.sin(2 * sigma))


def test_custom_profile_shape_checked():
    with pytest.raises(DynamicsError):
        init_state(params(4), "custom", samples=np.zeros((4, 2)))
    with pytest.raises(DynamicsError):
        init_state(params(4), "custom")


def test_bad_profile_and_eps():
    with pytest.raises(DynamicsError):
        init_state(params(4), "square")
    with pytest.raises(DynamicsError):
        init_state(StringParams(b=0.0, m=0.0, eps=-0.1, N=4), "zero")


def test_state_shape_and_finiteness():
    p = params(4)
    with pytest.raises(DynamicsError):
        StringState(np.zeros((3, 2)), np.zeros((5, 2)), 0.0, p)
    bad = np.zeros((5, 2))
    bad[2, 1] = np.nan
    with pytest.raises(DynamicsError):
        StringState(bad, np.zeros((5, 2)), 0.0, p)


# --- stepping ----------------------------------------------------------------------

def test_zero_state_stays_zero():
    s = init_state(params(16), "zero")
    traj = simulate(s, 1000, s.params.eps / 4)
    assert not traj.positions.any()
    assert not traj.energy.any() and not traj.left_residual.any() and not traj.right_residual.any()


def test_dt_guard():
    s = init_state(params(16), "zero")
    with pytest.raises(DynamicsError):
        step(s, 2 * s.params.eps)
    with pytest.raises(DynamicsError):
        step(s, 0.0)


def test_bfield_mode_needs_nonzero_b():
    s = init_state(params(16), "zero")
    with pytest.raises(DynamicsError):
        step(s, 0.01, mode=BFIELD)


def test_standing_wave_matches_discrete_solution():
    N, k = 64, 1.0
    p = params(N)
    eps = p.eps
    s = init_state(p, "standing", k=k)
    omega = 2 / eps * math.sin(k * eps / 2)
    dt = eps / 4
    steps = int(round(2 * math.pi / omega / dt))
    traj = simulate(s, steps, dt)
    sigma = eps * np.arange(N + 1)
    exact = np.cos(k * sigma)[None, :] * np.cos(omega * traj.times)[:, None]
    assert np.max(np.abs(traj.positions[:, :, 0] - exact)) < 1e-3


def test_interior_residual_small_on_trajectory():
    p = params(64, m=1.0)
    s = init_state(p, "standing", k=1.0)
    traj = simulate(s, 200, p.eps / 4)
    worst = max(np.max(np.abs(eom_residual(traj.final, n, p))) for n in range(1, 64))
    assert worst < 1e-12  # accelerations are the stencil itself


def test_energy_conservation_free_string():
    p = params(64)
    s = init_state(p, "standing", k=1.0)
    traj = simulate(s, 10_000, p.eps / 4, every=10)
    drift = np.max(np.abs(traj.energy - traj.energy[0])) / traj.energy[0]
    assert drift < 1e-4


def test_bfield_boundary_residuals():
    p = params(32, b=0.5, m=1.0)
    s = init_state(p, "standing", k=2.0, amplitude=0.1)
    traj = simulate(s, 2000, p.eps / 4)
    assert traj.left_residual.max() < 1e-8 and traj.right_residual.max() < 1e-8
    assert np.all(np.isfinite(traj.positions)) and np.abs(traj.positions).max() < 10


def test_time_reversal():
    p = params(32, m=0.5)
    s0 = init_state(p, "plane", k=2.0)
    dt = p.eps / 4
    fwd = simulate(s0, 500, dt).final
    back = simulate(reverse(fwd), 500, dt).final
    assert np.max(np.abs(back.positions - s0.positions)) < 1e-10
    assert np.max(np.abs(-back.velocities - s0.velocities)) < 1e-10


def test_trajectory_times_increase():
    s = init_state(params(8), "standing")
    traj = simulate(s, 25, s.params.eps / 4, every=4)
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj.times) == 1 + 6 + 1  # initial, every 4th, and the last step


def test_energy_trapezoid_weights():
    p = params(4)
    s = StringState(np.zeros((5, 2)), np.ones((5, 2)), 0.0, p)
    assert energy(s) == pytest.approx(p.eps * 2 * 4)


# --- dispersion ----------------------------------------------------------------------

def test_convergence_massless_order_two():
    res = convergence_study(1.0, 0.0, [0.1, 0.05, 0.025])
    assert abs(res.observed_order - 2.0) <= 0.2


def test_convergence_massive_limit():
    res = convergence_study(1.0, 1.0, [0.1, 0.05, 0.025])
    assert res.expected_omega2 == 2.0
    assert res.errors[0] > res.errors[1] > res.errors[2]
    assert abs(res.omega2[-1] - 2.0) < 1e-3


def test_uniform_mode_frequency_is_mass():
    for eps in (0.1, 0.05):
        _, w2 = measure_omega2(0.0, 1.0, eps)
        assert w2 == pytest.approx(1.0, rel=1e-3)


def test_doubling_n_keeps_frequency():
    # same string length, twice the nodes: frequencies agree within the O(eps^2) band
    e1, w1 = measure_omega2(1.0, 1.0, 0.05)
    e2, w2 = measure_omega2(1.0, 1.0, 0.025)
    band = 2 * (1.0 / 12) * e1 ** 2  # leading error of the stencil for k = 1
    assert abs(w1 - w2) < band


def test_convergence_input_checks():
    with pytest.raises(DynamicsError):
        convergence_study(1.0, 0.0, [0.1, 0.05])
    with pytest.raises(DynamicsError):
        convergence_study(1.0, 0.0, [0.05, 0.1, 0.025])


# --- export --------------------------------------------------------------------------

def test_csv_export(tmp_path):
    s = init_state(params(4), "standing")
    traj = simulate(s, 3, s.params.eps / 4)
    tpath, dpath = write_csv(traj, tmp_path)
    rows = list(csv.reader(tpath.open()))
    assert rows[0] == ["time", "node", "X1", "X2"]
    assert len(rows) == 1 + 4 * 5
    diag = list(csv.reader(dpath.open()))
    assert diag[0] == ["time", "energy", "left_residual_norm", "right_residual_norm"]
    assert len(diag) == 1 + 4


def test_neumann_explicit_mode():
    s = init_state(params(8, b=0.3), "zero", mode=NEUMANN)
    assert simulate(s, 2, s.params.eps / 4, mode=NEUMANN).final.time > 0
