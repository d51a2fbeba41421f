import numpy as np
import pytest
from scipy.linalg import expm

from conftest import RK_FIXTURE_FIG2, dense_superoperator, model_superoperator, random_matrix
from olnqs.hilbert import unvectorize, vectorize
from olnqs.lindblad import (
    SIGMA_X,
    Liouvillian,
    LindbladModel,
    apply_adjoint_liouvillian,
    apply_liouvillian,
    build_hamiltonian,
    evolve_rk,
    maximally_mixed,
    rk4_step,
)
from olnqs.observables import mean_magnetization

UP = np.diag([1.0, 0.0]).astype(complex)
DOWN = np.diag([0.0, 1.0]).astype(complex)


def single_site(gamma=1.0):
    return Liouvillian(np.zeros((2, 2)), gamma, 1)


def test_pure_zeeman_hamiltonian():
    H = build_hamiltonian(LindbladModel(2, B=(0, 0, 1), gamma=3.0))
    np.testing.assert_array_equal(H, np.diag([2, 0, 0, -2]))


def test_two_site_bond_is_counted_twice():
    H = build_hamiltonian(LindbladModel(2, J=(1, 0, 0)))
    np.testing.assert_allclose(H, 2 * np.kron(SIGMA_X, SIGMA_X))


def test_hamiltonian_is_hermitian(fig2_model):
    H = build_hamiltonian(fig2_model)
    assert np.linalg.norm(H - H.conj().T) == 0


@pytest.mark.parametrize("bad", [dict(N=1), dict(N=3, gamma=0.0), dict(N=3, J=(1, 2))])
def test_model_validation(bad):
    with pytest.raises(ValueError):
        LindbladModel(**bad)


def test_single_site_decay():
    L = single_site()
    np.testing.assert_allclose(L.apply(UP), DOWN - UP)
    np.testing.assert_allclose(L.apply_adjoint(UP), -UP)


def test_dark_state():
    L = Liouvillian(np.zeros((8, 8)), 1.0, 3)
    rho = np.zeros((8, 8), dtype=complex)
    rho[-1, -1] = 1.0
    assert np.abs(L.apply(rho)).max() == 0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_matches_dense_superoperator(n, rng):
    H = build_hamiltonian(LindbladModel(n, (1.4, 2.0, 1.0), (-1.0, 1.0, 0.1))) if n > 1 else 0.7 * SIGMA_X
    L = Liouvillian(H, 1.3, n)
    M = dense_superoperator(H, 1.3, n)
    for hermitian in (True, False):
        rho = random_matrix(rng, 2**n, hermitian)
        assert np.abs(L.apply(rho) - unvectorize(M @ vectorize(rho))).max() < 1e-12
        assert np.abs(L.apply_adjoint(rho) - unvectorize(M.conj().T @ vectorize(rho))).max() < 1e-12


def test_adjoint_pairing(rng):
    model = LindbladModel(3, (1.4, 2.0, 1.0), (-1.0, 1.0, 0.1))
    for _ in range(20):
        a, rho = random_matrix(rng, 8), random_matrix(rng, 8)
        lhs = np.vdot(a, apply_liouvillian(rho, model))
        rhs = np.vdot(apply_adjoint_liouvillian(a, model), rho)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_identity_is_annihilated_by_adjoint(fig2_model):
    out = apply_adjoint_liouvillian(np.eye(32, dtype=complex), fig2_model)
    assert np.abs(out).max() < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_trace_annihilation_and_hermiticity(n, rng):
    model = LindbladModel(n, (1.4, 2.0, 1.0), (-1.0, 1.0, 0.1))
    rho = random_matrix(rng, 2**n, hermitian=True)
    out = apply_liouvillian(rho, model)
    assert abs(np.trace(out)) < 1e-12 * np.abs(rho).sum()
    assert np.linalg.norm(out - out.conj().T) < 1e-12 * np.linalg.norm(rho)


def test_shape_mismatch_rejected(fig2_model):
    with pytest.raises(ValueError):
        apply_liouvillian(np.eye(4), fig2_model)


def test_rk_fixed_point():
    L = Liouvillian(np.zeros((4, 4)), 1.0, 2)
    rho = np.zeros((4, 4), dtype=complex)
    rho[-1, -1] = 1.0
    np.testing.assert_array_equal(rk4_step(rho, 1e-2, L), rho)


def test_rk_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        rk4_step(np.eye(2), 0.0, single_site())


def test_single_site_exponential_decay():
    rho, pops = evolve_rk(UP, 1e-2, 300, single_site(), lambda n, t, r: (t, r[0, 0].real))
    for t, p in pops:
        assert abs(p - np.exp(-t)) < 1e-8


def test_rk_order_is_four():
    model = LindbladModel(2, (1.4, 2.0, 1.0), (-1.0, 1.0, 0.1))
    M = model_superoperator(model)
    rho0 = np.diag([1.0, 0, 0, 0]).astype(complex)
    T = 1.0
    exact = unvectorize(expm(M * T) @ vectorize(rho0))
    errors = []
    for dt in (0.1, 0.05, 0.025):
        rho, _ = evolve_rk(rho0, dt, round(T / dt), model)
        errors.append(np.linalg.norm(rho - exact))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all((orders > 3.7) & (orders < 4.3)), orders


def test_evolve_rk_bookkeeping(fig2_model):
    rho0 = maximally_mixed(5)
    rho, _ = evolve_rk(rho0, 1e-2, 0, fig2_model)
    np.testing.assert_array_equal(rho, rho0)
    calls = []
    evolve_rk(rho0, 1e-2, 7, fig2_model, lambda n, t, r: calls.append(n))
    assert calls == list(range(1, 8))
    with pytest.raises(ValueError):
        evolve_rk(np.eye(4), 1e-2, 1, fig2_model)


def test_fig2_rk_converges(fig2_model):
    L = Liouvillian.from_model(fig2_model)
    rho, mags = evolve_rk(maximally_mixed(5), 1e-2, 6000, L, lambda n, t, r: mean_magnetization(r) if n % 500 == 0 else None)
    assert np.linalg.norm(L.apply(rho)) < 1e-6
    # flat once past the transient
    late = np.array(mags[4:])
    assert np.abs(late - late[-1]).max() < 1e-3
    np.testing.assert_allclose(tuple(mean_magnetization(rho)), RK_FIXTURE_FIG2, atol=1e-12)


def test_unique_steady_state_n3():
    M = model_superoperator(LindbladModel(3, (1.4, 2.0, 1.0), (-1.0, 1.0, 0.1)))
    s = np.linalg.svd(M, compute_uv=False)
    assert s[-1] < 1e-10
    assert s[-2] > 1e-3
