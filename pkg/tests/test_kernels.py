import numpy as np
import pytest

from devinv import kernels


@pytest.fixture(scope="module")
def random_batch():
    rng = np.random.default_rng(11)
    vectors = rng.standard_normal((40, 24))
    norms = np.linalg.norm(vectors, axis=1)
    query = rng.standard_normal(24)
    return vectors, norms, query, float(np.linalg.norm(query))


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv(kernels.ENV_FLAG, "numpy")
    assert kernels.active_backend() == "numpy"
    monkeypatch.setenv(kernels.ENV_FLAG, "auto")
    assert kernels.active_backend() in ("numba", "numpy")
    monkeypatch.setenv(kernels.ENV_FLAG, "nonsense")
    with pytest.raises(ValueError):
        kernels.active_backend()


def test_explicit_override_beats_env(monkeypatch):
    monkeypatch.setenv(kernels.ENV_FLAG, "numpy")
    assert kernels.active_backend("numpy") == "numpy"


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")
def test_backends_agree(random_batch, warm_kernels):
    vectors, norms, query, qnorm = random_batch
    pw_np = kernels.pairwise_cosine(vectors, norms, backend="numpy")
    pw_nb = kernels.pairwise_cosine(vectors, norms, backend="numba")
    assert np.allclose(pw_np, pw_nb, atol=1e-12, rtol=0)

    sc_np = kernels.cosine_scores(vectors, norms, query, qnorm, backend="numpy")
    sc_nb = kernels.cosine_scores(vectors, norms, query, qnorm, backend="numba")
    assert np.allclose(sc_np, sc_nb, atol=1e-12, rtol=0)

    l2_np = kernels.l2_distances(vectors, query, backend="numpy")
    l2_nb = kernels.l2_distances(vectors, query, backend="numba")
    assert np.allclose(l2_np, l2_nb, atol=1e-12, rtol=0)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_pairwise_exact_symmetry_and_diagonal(random_batch, backend, warm_kernels):
    if backend == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    vectors, norms, _, _ = random_batch
    matrix = kernels.pairwise_cosine(vectors, norms, backend=backend)
    assert np.array_equal(matrix, matrix.T)  # mirrored, not merely close
    assert np.all(np.diag(matrix) == 1.0)
    assert matrix.min() >= -1.0 and matrix.max() <= 1.0


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_scores_clamped(backend, warm_kernels):
    if backend == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    vectors = np.array([[3.0, 4.0], [-3.0, -4.0]])  # norms exactly 5
    norms = np.linalg.norm(vectors, axis=1)
    scores = kernels.cosine_scores(vectors, norms, vectors[0], float(norms[0]),
                                   backend=backend)
    assert scores[0] == 1.0
    assert scores[1] == -1.0
