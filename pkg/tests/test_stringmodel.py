import math
from collections import Counter

import numpy as np
import pytest

from fjquant.dynamics import StringState
from fjquant.fjengine import symplectic_matrix
from fjquant.stringmodel import (
    ENDPOINT_DYNAMICAL,
    LEFT,
    RIGHT,
    SPECTATORS,
    StringModelError,
    StringParams,
    bc_substituted_x0_sector,
    b_inverse,
    b_minv,
    binv_m,
    build_discrete_action,
    build_endpoint_model,
    boundary_residual,
    eom_residual,
    hamiltonian_hx1,
)
from fjquant.symexpr import Expr, differentiate, substitute, truncate_degree

S = Expr.symbol


def X(n, mu):
    return S(f"X{n}_{mu}")


def V(n, mu):
    return S(f"Xd{n}_{mu}")


def sq(vec):
    return vec[0] * vec[0] + vec[1] * vec[1]


def state(positions, velocities=None, accelerations=None, **params):
    positions = np.asarray(positions, dtype=float)
    p = StringParams(N=positions.shape[0] - 1, **params)
    vel = np.zeros_like(positions) if velocities is None else velocities
    return StringState(positions, vel, 0.0, p, accelerations), p


# --- D2 representation ---------------------------------------------------------

def test_d2_representation():
    b = S("b")
    assert b_inverse(b)[0][1] == -1 / b
    assert binv_m(b)[0][1] == -(1 - b ** 2) / b
    assert b_minv(b)[0][1] == b / (1 - b ** 2)


# --- discrete action ---------------------------------------------------------------

def test_two_point_terms():
    eps, m, b = S("eps"), S("m"), S("b")
    L = build_discrete_action(StringParams(N=2))
    got = Counter(t.expr for t in L.restrict([0, 1]))
    d01 = [X(1, mu) - X(0, mu) for mu in (1, 2)]
    d12 = [X(2, mu) - X(1, mu) for mu in (1, 2)]

    def bterm(n, d):
        return 2 * b * (V(n, 1) * d[1] - V(n, 2) * d[0])

    expected = Counter([
        -eps * sq([V(0, 1), V(0, 2)]), -eps * sq([V(1, 1), V(1, 2)]),
        sq(d01) / eps, sq(d12) / eps,
        m ** 2 * eps * sq([X(0, 1), X(0, 2)]), m ** 2 * eps * sq([X(1, 1), X(1, 2)]),
        bterm(0, d01), bterm(1, d12),
    ])
    assert got == expected


def test_free_string_has_no_couplings():
    L = build_discrete_action(StringParams(b=0, m=0, N=3))
    assert all(t.expr.is_zero() for t in L.terms if t.kind in ("mass", "bfield"))
    assert all(not t.expr.is_zero() for t in L.terms if t.kind in ("kinetic", "gradient"))


def test_term_counts():
    L = build_discrete_action(StringParams(N=4))
    assert L.count("gradient") == 4
    assert L.count("kinetic") == L.count("mass") == L.count("bfield") == 5


def test_action_needs_two_intervals():
    with pytest.raises(StringModelError):
        StringParams(N=1)


# --- equations of motion -------------------------------------------------------------

def test_constant_configuration_massless():
    s, p = state(np.full((6, 2), 0.7), accelerations=np.zeros((6, 2)), b=0.0, m=0.0, eps=0.1)
    for n in range(6):
        assert np.allclose(eom_residual(s, n, p), 0.0)


def test_constant_configuration_mass_only_term_survives():
    # the mass term is restoring: eps*accel = force - eps m^2 X
    eps, m, c = 0.1, 2.0, np.array([0.7, -0.3])
    s, p = state(np.tile(c, (6, 1)), accelerations=np.zeros((6, 2)), b=0.0, m=m, eps=eps)
    assert np.allclose(eom_residual(s, 3, p), eps * m * m * c)


def test_discrete_plane_wave_interior_residual():
    eps, k, m, N = 0.1, 1.0, 1.0, 40
    omega2 = 4 / eps ** 2 * math.sin(k * eps / 2) ** 2 + m * m
    tau = 0.37
    n = np.arange(N + 1)
    profile = np.cos(k * eps * n) * math.cos(math.sqrt(omega2) * tau)
    pos = np.stack([profile, 0.5 * profile], axis=1)
    s, p = state(pos, accelerations=-omega2 * pos, b=0.0, m=m, eps=eps)
    worst = max(np.max(np.abs(eom_residual(s, j, p))) for j in range(1, N))
    assert worst < 1e-12


def test_eom_node_range():
    s, p = state(np.zeros((4, 2)), accelerations=np.zeros((4, 2)), b=0.0, m=0.0, eps=0.1)
    with pytest.raises(StringModelError):
        eom_residual(s, 4, p)


def test_interior_residual_converges_to_continuum():
    # smooth profile with an arbitrary acceleration field; compare residual/eps
    # with the continuum residual X_tt - X_ss + m^2 X at sigma = 1
    m, sigma0 = 0.8, 1.0
    prof = lambda s: np.exp(s / 2) * np.sin(s)  # noqa: E731
    prof_ss = lambda s: np.exp(s / 2) * (np.cos(s) - 0.75 * np.sin(s))  # noqa: E731
    acc = lambda s: np.cos(3 * s)  # noqa: E731
    errors, spacings = [], [0.1, 0.05, 0.025]
    for eps in spacings:
        N = int(round(2 / eps))
        sig = eps * np.arange(N + 1)
        pos = np.stack([prof(sig), np.zeros_like(sig)], axis=1)
        accs = np.stack([acc(sig), np.zeros_like(sig)], axis=1)
        s, p = state(pos, accelerations=accs, b=0.0, m=m, eps=eps)
        n0 = int(round(sigma0 / eps))
        discrete = eom_residual(s, n0, p)[0] / eps
        continuum = acc(sigma0) - prof_ss(sigma0) + m * m * prof(sigma0)
        errors.append(abs(discrete - continuum))
    order = np.polyfit(np.log(spacings), np.log(errors), 1)[0]
    assert abs(order - 2) < 0.1


# --- boundary conditions -------------------------------------------------------------

def test_boundary_neumann_limit():
    pos = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    s, p = state(pos, velocities=np.ones((3, 2)), b=0.0, m=0.0, eps=0.1)
    assert np.allclose(boundary_residual(s, LEFT, p), 0.0)


def test_boundary_static_state():
    pos = np.array([[0.0, 0.0], [0.3, -0.2], [1.0, 1.0]])
    s, p = state(pos, b=0.5, m=0.0, eps=0.1)
    assert np.allclose(boundary_residual(s, LEFT, p), (pos[1] - pos[0]) / 0.1)


def test_boundary_satisfied_by_construction():
    b, eps = 0.5, 0.1
    pos = np.array([[0.1, 0.2], [0.4, -0.3], [0.0, 0.0], [0.3, 0.9]])
    binv = np.array([[0.0, -1 / b], [1 / b, 0.0]])
    vel = np.zeros_like(pos)
    vel[0] = binv @ (pos[1] - pos[0]) / eps
    vel[-1] = binv @ (pos[-1] - pos[-2]) / eps
    s, p = state(pos, velocities=vel, b=b, m=0.0, eps=eps)
    assert np.allclose(boundary_residual(s, LEFT, p), 0.0, atol=1e-12)
    assert np.allclose(boundary_residual(s, RIGHT, p), 0.0, atol=1e-12)


def test_boundary_bad_tag():
    s, p = state(np.zeros((3, 2)), b=0.5, m=0.0, eps=0.1)
    with pytest.raises(StringModelError):
        boundary_residual(s, "middle", p)


def test_boundary_parity():
    rng = np.random.default_rng(3)
    pos, vel = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    s, p = state(pos, velocities=vel, b=0.7, m=0.0, eps=0.2)
    r, pr = state(pos[::-1], velocities=vel[::-1], b=-0.7, m=0.0, eps=0.2)
    assert np.allclose(boundary_residual(r, RIGHT, pr), -boundary_residual(s, LEFT, p))
    assert np.allclose(boundary_residual(r, LEFT, pr), -boundary_residual(s, RIGHT, p))


# --- endpoint reduction --------------------------------------------------------------

def test_bc_substitution_identity():
    lhs, rhs = bc_substituted_x0_sector()
    assert (lhs - rhs).is_zero()


def test_hamiltonian_free_limit():
    eps = S("eps")
    P1 = [S("P1_1"), S("P1_2")]
    d = [X(2, mu) - X(1, mu) for mu in (1, 2)]
    assert hamiltonian_hx1(StringParams(b=0, m=0)) == -sq(P1) / (2 * eps) - sq(d) / (2 * eps)


def test_hamiltonian_terms():
    eps, m, b = S("eps"), S("m"), S("b")
    P1 = [S("P1_1"), S("P1_2")]
    d = [X(2, mu) - X(1, mu) for mu in (1, 2)]
    expected = (-sq(P1) / (2 * eps) - (1 - b ** 2) * sq(d) / (2 * eps)
                + b * (P1[0] * d[1] - P1[1] * d[0]) / eps
                + m ** 2 * eps * (sq([X(0, 1), X(0, 2)]) + sq([X(1, 1), X(1, 2)])))
    assert hamiltonian_hx1(StringParams()) == expected


def test_hamiltonian_legendre_consistency():
    eps, b = S("eps"), S("b")
    H = hamiltonian_hx1(StringParams())
    d = [X(2, mu) - X(1, mu) for mu in (1, 2)]
    Bd = [b * d[1], -b * d[0]]  # (B d)_mu = B_{mu nu} d^nu
    for mu in (1, 2):
        assert differentiate(H, f"P1_{mu}") == (Bd[mu - 1] - S(f"P1_{mu}")) / eps


def test_endpoint_model_symbols():
    m = build_endpoint_model()
    assert m.symbol_names == ENDPOINT_DYNAMICAL
    assert set(SPECTATORS) <= set(m.parameter_names)
    assert {"b", "m", "eps", "alpha_prime"} <= set(m.parameter_names)
    assert m.prefactor == 1 / (4 * S("pi") * S("alpha_prime"))


def test_endpoint_one_form_entries():
    a = dict(zip(ENDPOINT_DYNAMICAL, build_endpoint_model().one_form))
    b, m = S("b"), S("m")
    c = (1 - b ** 2) / b
    assert a["X0_1"] == c * (X(2, 2) - X(0, 2)) + S("P1_1")
    assert a["X0_2"] == -c * (X(2, 1) - X(0, 1)) + S("P1_2")
    assert a["X1_1"] == S("P0_1") - m ** 2 * b * X(1, 2)
    assert a["X1_2"] == S("P0_2") + m ** 2 * b * X(1, 1)
    assert a["P0_1"] == 0 and a["P0_2"] == 0


def test_massless_substitution_commutes_with_build():
    f = symplectic_matrix(build_endpoint_model())
    f0 = symplectic_matrix(build_endpoint_model(StringParams(m=0)))
    assert all(substitute(f.entries[i][j], {"m": 0}) == f0.entries[i][j]
               for i in range(6) for j in range(6))
    assert f0["X1_1", "X1_2"] == 0


def test_truncation_only_drops_b_squared_terms():
    full = build_endpoint_model(truncate=False)
    cut = build_endpoint_model()
    # the X0 entries carry B^-1 M exactly and are never truncated
    assert full.one_form[:2] == cut.one_form[:2]
    pairs = list(zip(full.one_form[2:], cut.one_form[2:])) + [(full.potential, cut.potential)]
    for e_full, e_cut in pairs:
        assert truncate_degree(e_full, ["b"], 1) == e_cut
        diff = e_full - e_cut
        assert diff.is_zero() or all(mono.get("b", 0) >= 2 for _, mono in diff.terms())
    assert full.potential != cut.potential


def test_endpoint_model_rejects_zero_b():
    with pytest.raises(StringModelError):
        build_endpoint_model(StringParams(b=0))
