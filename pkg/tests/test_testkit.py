import numpy as np
import pytest

from cstarext import AlgebraElement, AlgebraShape
from cstarext.algebra import block_norm, operator_norm
from cstarext.errors import NotUnitary
from cstarext.extremal import cstar_extreme_classify
from cstarext.testkit import (
    RngStream,
    finite_corpus,
    haar_unitary,
    oracle_extreme_bruteforce,
    oracle_unitary_equiv,
    random_contraction,
    random_element,
    random_partial_isometry,
    random_shape,
    random_shift_contraction,
    shift_corpus,
    similarity_pair,
)
from cstarext.serialize import dump_element


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_haar_unitary_is_unitary(n):
    u = haar_unitary(n, np.random.default_rng(n))
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-10)


def test_haar_phases_are_spread():
    # the first diagonal entry of a Haar unitary has a uniformly distributed phase
    rng = np.random.default_rng(0)
    angles = np.array([np.angle(haar_unitary(3, rng)[0, 0]) for _ in range(2000)])
    hist, _ = np.histogram(angles, bins=8, range=(-np.pi, np.pi))
    assert hist.min() > 180


def test_contraction_norms():
    rng = np.random.default_rng(1)
    for n in range(1, 7):
        assert np.linalg.norm(random_contraction(n, rng), 2) <= 1 + 1e-12
    for _ in range(20):
        x = AlgebraElement(AlgebraShape.of("shift"), [random_shift_contraction(rng)])
        assert operator_norm(x) <= 1 + 1e-9


def test_partial_isometry_rank():
    v = random_partial_isometry(5, 2, np.random.default_rng(2))
    np.testing.assert_allclose(v @ v.conj().T @ v, v, atol=1e-12)
    assert np.linalg.matrix_rank(v, 1e-9) == 2


def test_rng_stream_determinism():
    a = RngStream(7).split(3).generator().standard_normal(4)
    b = RngStream(7, (3,)).generator().standard_normal(4)
    c = RngStream(7).split(4).generator().standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    with pytest.raises(ValueError):
        RngStream(-1)


def test_corpora_are_reproducible():
    assert [dump_element(x) for x in finite_corpus(5, 9)] == [dump_element(x) for x in finite_corpus(5, 9)]
    assert [dump_element(x) for x in shift_corpus(5, 9)] == [dump_element(x) for x in shift_corpus(5, 9)]


@pytest.mark.parametrize("kind", ["unitary", "extreme", "isometry_shift"])
def test_extreme_generators_are_sound(kind):
    root = RngStream(10)
    for i in range(15):
        rng = root.split(i).generator()
        x = random_element(kind, random_shape(rng, 3, 4, shift_blocks=1), rng)
        assert cstar_extreme_classify(x).is_extreme


def test_unitary_generator_is_unitary():
    rng = np.random.default_rng(11)
    x = random_element("unitary", AlgebraShape.of(3, "shift"), rng)
    for b in x.blocks:
        if isinstance(b, np.ndarray):
            np.testing.assert_allclose(b.conj().T @ b, np.eye(b.shape[0]), atol=1e-10)
        else:
            assert b.is_unitary()


@pytest.mark.parametrize("mode", ["unitary", "positive", "mixed"])
def test_similarity_pairs_intertwine(mode):
    rng = np.random.default_rng(12)
    a, b, t, got = similarity_pair(AlgebraShape.of(2, "shift"), rng, mode=mode)
    assert got == mode
    for ab, bb, tb in zip(a.blocks, b.blocks, t.blocks):
        rel = block_norm(bb @ tb - tb @ ab, 64).value / block_norm(tb, 64).value
        assert rel <= 1e-10


def test_oracle_examples():
    sh = AlgebraShape.of(2)
    rng = np.random.default_rng(13)
    assert oracle_extreme_bruteforce(AlgebraElement(sh, [haar_unitary(2, rng)]))
    assert not oracle_extreme_bruteforce(AlgebraElement(sh, [np.diag([1.0, 0.0])]))
    assert not oracle_extreme_bruteforce(AlgebraElement(sh, [0.5 * np.eye(2)]))
    # a rank-deficient partial isometry in a square block is not extreme
    assert not oracle_extreme_bruteforce(AlgebraElement(AlgebraShape.of(3), [random_partial_isometry(3, 2, rng)]))


def test_oracle_unitary_equiv():
    rng = np.random.default_rng(14)
    u = haar_unitary(3, rng)
    w = haar_unitary(3, rng)
    assert oracle_unitary_equiv(u, w @ u @ w.conj().T)
    assert not oracle_unitary_equiv(u, haar_unitary(3, rng))
    with pytest.raises(NotUnitary):
        oracle_unitary_equiv(np.eye(2) * 0.5, np.eye(2))


@pytest.mark.parametrize("seed", range(5))
def test_oracle_agrees_with_linear_test(seed):
    from cstarext.extremal import linear_extreme_test

    for i, x in enumerate(finite_corpus(100, seed)):
        assert oracle_extreme_bruteforce(x, seed=i) == linear_extreme_test(x).is_extreme


def test_corpus_digest_is_stable_across_processes():
    import hashlib
    import subprocess
    import sys

    code = (
        "import hashlib\n"
        "from cstarext.testkit import finite_corpus, shift_corpus\n"
        "from cstarext.serialize import dump_element\n"
        "h = hashlib.sha256()\n"
        "for x in finite_corpus(20, 3) + shift_corpus(10, 3):\n"
        "    h.update(dump_element(x).encode())\n"
        "print(h.hexdigest())\n"
    )
    digests = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout for _ in range(2)}
    local = hashlib.sha256()
    for x in finite_corpus(20, 3) + shift_corpus(10, 3):
        local.update(dump_element(x).encode())
    assert digests == {local.hexdigest() + "\n"}
