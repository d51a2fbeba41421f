import numpy as np
import pytest

from olnqs.ansatz import (
    LOG8,
    NumericSingularityError,
    RbmParameters,
    dense_matrix,
    evaluate,
    hidden_count,
    init_params,
    lncosh,
    load_params,
    log_elements,
    param_count,
    rbm_log_element,
    real_size,
    save_params,
    tangent_vectors,
)
from olnqs.hilbert import pair_from_index, spin_table
from olnqs.symmetry import build_group, orbit_table


def random_params(n, alpha=1.0, seed=0, scale=0.5, hermitian_c=True):
    return init_params(n, alpha, seed=seed, scale=scale, hermitian_c=hermitian_c)


@pytest.mark.parametrize(
    "n, alpha, expected",
    [(5, 1, 65), (8, 2, 296), (2, 1, 14), (3, 2, 51), (8, 1, 152)],
)
def test_param_count(n, alpha, expected):
    assert param_count(n, alpha) == expected


def test_hidden_count_rejects_fractional_units():
    assert hidden_count(2, 1.5) == 3
    with pytest.raises(ValueError, match="alpha"):
        hidden_count(3, 0.5)


def test_init_is_deterministic_and_bounded():
    p1, p2 = init_params(5, 1, seed=7), init_params(5, 1, seed=7)
    chi = p1.to_chi()
    np.testing.assert_array_equal(chi, p2.to_chi())
    assert np.abs(chi).max() <= 0.01
    assert chi.size == 125 == 2 * param_count(5, 1) - 5
    assert not np.array_equal(chi, init_params(5, 1, seed=8).to_chi())
    assert init_params(5, 1, seed=7, hermitian_c=False).n_real == 130


@pytest.mark.parametrize("hermitian_c", [True, False])
def test_chi_roundtrip(hermitian_c):
    p = init_params(3, 2, beta=1, seed=3, hermitian_c=hermitian_c)
    assert (p.M, p.L) == (6, 3)
    q = RbmParameters.from_chi(p.to_chi(), 3, 6, 3, hermitian_c)
    for name in "abcWX":
        np.testing.assert_array_equal(getattr(p, name), getattr(q, name))
    with pytest.raises(ValueError):
        p.with_chi(np.zeros(p.n_real + 1))


def test_parameter_validation():
    with pytest.raises(ValueError):
        RbmParameters(np.zeros(2), np.zeros(1), np.zeros(1), np.zeros((1, 3)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        RbmParameters(np.zeros(2), np.zeros(1), np.array([1j]), np.zeros((1, 2)), np.zeros((1, 2)))


def test_lncosh_is_stable():
    z = np.array([0.3 + 0.2j, -0.7 + 1.1j, 2.0 - 0.5j])
    np.testing.assert_allclose(np.exp(lncosh(z)), np.cosh(z), rtol=1e-14)
    big = lncosh(np.array([800.0 + 0.1j, -800.0]))
    assert np.all(np.isfinite(big))
    assert big[1].real == pytest.approx(800 - np.log(2))
    # iπ/2 is not representable, so the log is finite and very negative
    assert lncosh(np.array([0.5j * np.pi]))[0].real < -30
    with pytest.raises(NumericSingularityError):
        lncosh(np.array([np.nan + 0j]))


def test_zero_parameters_give_log8():
    p = RbmParameters.zeros(3, 3, 3)
    np.testing.assert_allclose(log_elements(p), LOG8)
    for kind in ("rbm", "invariant"):
        np.testing.assert_allclose(dense_matrix(p, kind, build_group(3)), 8.0)


def test_single_visible_bias():
    chi = np.zeros(real_size(3, 3, 3))
    chi[0] = 0.3
    p = RbmParameters.zeros(3, 3, 3).with_chi(chi)
    S = spin_table(3)
    expected = np.exp(0.3 * S[:, 0][:, None] + 0.3 * S[:, 0][None, :])
    np.testing.assert_allclose(dense_matrix(p) / 8, expected, rtol=1e-14)


def test_vectorized_matches_scalar_evaluation():
    p = random_params(3, seed=4)
    logs = log_elements(p)
    for q in (0, 5, 17, 63):
        pair = pair_from_index(q, 3)
        i, j = divmod(q, 8)
        assert np.exp(rbm_log_element(p, pair)) == pytest.approx(np.exp(logs[i, j]), rel=1e-13)


def test_hermitian_conjugation_symmetry():
    p = random_params(3, seed=2)
    rho = dense_matrix(p)
    np.testing.assert_allclose(rho, rho.conj().T, rtol=1e-13)


def test_invariant_kind_commutes_with_group():
    g = build_group(4)
    p = random_params(4, seed=1)
    rho = dense_matrix(p, "invariant", g)
    for perm in g.index_maps:
        P = np.zeros((16, 16))
        P[perm, np.arange(16)] = 1
        assert np.linalg.norm(P @ rho - rho @ P) < 1e-12 * np.linalg.norm(rho)


def test_invariant_entries_constant_on_orbits():
    g = build_group(3)
    rho = dense_matrix(random_params(3, seed=5), "invariant", g).reshape(-1)
    table = orbit_table(g)
    for o in range(table.n_orbits):
        vals = rho[table.orbit_of == o]
        assert np.ptp(vals.real) < 1e-13 and np.ptp(vals.imag) < 1e-13


def test_projection_is_idempotent():
    g = build_group(4)
    rho = dense_matrix(random_params(4, seed=6), "invariant", g)
    np.testing.assert_allclose(g.symmetrize(rho), rho, atol=1e-14)


def test_unknown_kind_and_missing_group():
    p = RbmParameters.zeros(3, 3, 3)
    with pytest.raises(ValueError):
        dense_matrix(p, "tensor")
    with pytest.raises(ValueError):
        dense_matrix(p, "invariant")


def test_zero_parameter_tangent_closed_form():
    p = RbmParameters.zeros(3, 3, 3)
    S = spin_table(3)
    O = tangent_vectors(p)
    np.testing.assert_allclose(O[0], 8 * (S[:, 0][:, None] + S[:, 0][None, :]))
    # imaginary part of a_1 enters as i(sigma_1 - eta_1)
    np.testing.assert_allclose(O[1], 8j * (S[:, 0][:, None] - S[:, 0][None, :]))


def finite_difference(params, kind, group, h=1e-5):
    chi = params.to_chi()
    out = []
    for k in range(chi.size):
        e = np.zeros_like(chi)
        e[k] = h
        plus = dense_matrix(params.with_chi(chi + e), kind, group)
        minus = dense_matrix(params.with_chi(chi - e), kind, group)
        out.append((plus - minus) / (2 * h))
    return np.array(out)


@pytest.mark.parametrize("kind", ["rbm", "invariant"])
@pytest.mark.parametrize("hermitian_c", [True, False])
def test_tangents_match_finite_differences(kind, hermitian_c):
    g = build_group(3)
    p = random_params(3, seed=11, hermitian_c=hermitian_c)
    analytic = tangent_vectors(p, kind, g)
    numeric = finite_difference(p, kind, g)
    rel = np.linalg.norm((analytic - numeric).reshape(p.n_real, -1), axis=1) / np.linalg.norm(analytic.reshape(p.n_real, -1), axis=1)
    assert rel.max() < 1e-6


def test_invariant_tangents_commute_with_group():
    g = build_group(3)
    O = tangent_vectors(random_params(3, seed=9), "invariant", g)
    for k in range(g.order):
        conj = np.stack([g.conjugate(o, k) for o in O])
        assert np.linalg.norm(conj - O) < 1e-12 * np.linalg.norm(O)


def test_evaluate_rescales_consistently():
    g = build_group(3)
    p = random_params(3, seed=12)
    ev = evaluate(p, "invariant", g)
    assert np.abs(np.exp(log_elements(p))).max() == pytest.approx(np.exp(ev.log_scale))
    np.testing.assert_allclose(ev.rho * np.exp(ev.log_scale), dense_matrix(p, "invariant", g), rtol=1e-12)
    np.testing.assert_allclose(ev.tangents * np.exp(ev.log_scale), tangent_vectors(p, "invariant", g), rtol=1e-12)
    scaled = evaluate(p, "invariant", g, scale=1e30)
    np.testing.assert_array_equal(scaled.rho, ev.rho)
    assert scaled.log_scale - ev.log_scale == pytest.approx(np.log(1e30))
    with pytest.raises(ValueError):
        evaluate(p, scale=-1.0)


def test_large_parameters_overflow_cleanly():
    chi = np.zeros(real_size(3, 3, 3))
    chi[0] = 400.0
    p = RbmParameters.zeros(3, 3, 3).with_chi(chi)
    with pytest.raises(OverflowError, match="pair"):
        dense_matrix(p)
    ev = evaluate(p)
    assert np.all(np.isfinite(ev.rho)) and np.abs(ev.rho).max() == pytest.approx(1.0)


def test_checkpoint_roundtrip(tmp_path):
    p = init_params(4, 2, beta=1, seed=21, hermitian_c=False)
    path = tmp_path / "params.json"
    save_params(path, p, seed=21)
    q, seed = load_params(path)
    assert seed == 21
    np.testing.assert_array_equal(q.to_chi(), p.to_chi())
    assert (q.M, q.L, q.hermitian_c) == (8, 4, False)
    path.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_params(path)
