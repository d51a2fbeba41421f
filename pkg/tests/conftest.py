import numpy as np
import pytest

from olnqs.lindblad import SIGMA_MINUS, LindbladModel, site_operator

FIG2 = dict(N=5, J=(1.4, 2.0, 1.0), B=(-1.0, 1.0, 0.1), gamma=1.0)
FIG5 = dict(N=4, J=(1.3, 0.1, 1.0), B=(0.7, 0.3, 0.1), gamma=1.0)


def dense_superoperator(H, gamma, n_sites):
    """Row-major vectorized Lindbladian built from Kronecker products.

    vec(A rho B) = (A kron B^T) vec(rho) for row-major vec.
    """
    dim = 2**n_sites
    eye = np.eye(dim)
    M = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for j in range(n_sites):
        Lj = site_operator(SIGMA_MINUS, j, n_sites)
        LdL = Lj.conj().T @ Lj
        M += gamma * (np.kron(Lj, Lj.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T)))
    return M


def model_superoperator(model: LindbladModel):
    from olnqs.lindblad import build_hamiltonian

    return dense_superoperator(build_hamiltonian(model), model.gamma, model.N)


def random_matrix(rng, dim, hermitian=False):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T if hermitian else a


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fig2_model():
    return LindbladModel(**FIG2)


@pytest.fixture
def fig5_model():
    return LindbladModel(**FIG5)


# Steady-state magnetization of the RK4 integrator (dt=1e-2, 6000 steps from
# the maximally mixed state), frozen after a validated run. The residual
# ||L[rho]||_F at that point is ~2e-15 for both models.
RK_FIXTURE_FIG5 = (-0.03396798900506811, 0.27833487510030186, -0.14161985050560416)
RK_FIXTURE_FIG2 = (0.09111843983699248, -0.394378553642172, -0.149609540916321)


# One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, title, passed, detail=""):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
