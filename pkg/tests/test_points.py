import random
from fractions import Fraction

import pytest

from conftest import random_affine, random_key_sequence
from rgbcrypt.errors import InvalidKeyError, KeyFileError
from rgbcrypt.points import (
    IDENTITY,
    HomogeneousPoint,
    KeyOp,
    KeySequence,
    apply_op,
    apply_sequence,
    color_count,
    compose_matrices,
    det3,
    format_keyfile,
    invert_affine,
    invert_sequence,
    matmul,
    parse_keyfile,
    translation,
)

T345 = translation(3, 4, 5)


def naive_row_times_matrix(p, m):
    row = list(p) + [1]
    return [sum(row[k] * m[k][j] for k in range(4)) for j in range(4)]


def fraction_inverse(m):
    """Gauss-Jordan over the rationals; independent of the adjugate route."""
    n = len(m)
    a = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        pv = a[col][col]
        a[col] = [v / pv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


@pytest.mark.parametrize(
    "p, expected", [((1, 0, 1), (4, 4, 6)), ((0, 6, 0), (3, 10, 5)), ((0, 5, 7), (3, 9, 12))]
)
def test_apply_op_example_translation(p, expected):
    out = apply_op(HomogeneousPoint(*p), KeyOp.mul(T345))
    assert out == expected
    assert out.w == 1


def test_identity_matrix_is_noop():
    p = HomogeneousPoint(7, -3, 12)
    assert apply_op(p, KeyOp.mul(IDENTITY)) == p
    assert apply_sequence(p, [KeyOp.mul(IDENTITY)]) == p


def test_apply_sequence_examples():
    assert apply_sequence((1, 0, 1), [KeyOp.translate(3, 4, 5), KeyOp.sub(3, 4, 5)]) == (1, 0, 1)
    assert apply_sequence((0, 6, 0), [KeyOp.add(1, 1, 1), KeyOp.add(2, 3, 4)]) == (3, 10, 5)


def test_apply_op_mul_matches_naive_oracle(rng):
    for _ in range(500):
        m = random_affine(rng)
        p = tuple(rng.randint(-1000, 1000) for _ in range(3))
        expected = naive_row_times_matrix(p, m)
        out = apply_op(HomogeneousPoint(*p), KeyOp.mul(m))
        assert list(out.row()) == expected
        assert expected[3] == 1


def test_translation_inverse():
    inv = invert_sequence([KeyOp.translate(3, 4, 5)])
    assert inv == KeySequence([KeyOp.translate(-3, -4, -5)])


def test_inverse_reverses_order():
    m = random_affine(random.Random(1))
    inv = invert_sequence([KeyOp.add(1, 2, 3), KeyOp.mul(m)])
    assert inv == KeySequence([KeyOp.mul(invert_affine(m)), KeyOp.sub(1, 2, 3)])


def test_affine_inverse_matches_rational_oracle(rng):
    for _ in range(300):
        m = random_affine(rng)
        inv = invert_affine(m)
        assert matmul(m, inv) == IDENTITY
        assert matmul(inv, m) == IDENTITY
        assert [[int(v) for v in row] for row in fraction_inverse(m)] == [list(r) for r in inv]


def test_rejects_non_unimodular():
    with pytest.raises(InvalidKeyError):
        KeyOp.mul(((2, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
    with pytest.raises(InvalidKeyError):
        KeyOp.mul(((1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
    with pytest.raises(InvalidKeyError):
        KeyOp("rot", vector=(1, 2, 3))
    with pytest.raises(InvalidKeyError):
        KeyOp("add", vector=(1, 2))


def test_exact_invertibility_random_sequences(rng):
    for _ in range(1000):
        ks = random_key_sequence(rng)
        p = tuple(rng.randint(-500, 500) for _ in range(3))
        q = apply_sequence(p, ks)
        assert q.w == 1
        assert apply_sequence(q, invert_sequence(ks)) == p


def test_unimodular_closure(rng):
    for _ in range(200):
        ks = random_key_sequence(rng)
        composed = compose_matrices(ks)
        assert det3(composed) in (1, -1)
        assert tuple(r[3] for r in composed) == (0, 0, 0, 1)
        p = tuple(rng.randint(-50, 50) for _ in range(3))
        assert apply_op(p, KeyOp.mul(composed)) == apply_sequence(p, ks)


@pytest.mark.parametrize("n, expected", [(8, 16777216), (1, 8), (3, 512)])
def test_color_count(n, expected):
    assert color_count(n) == expected


def test_keyfile_roundtrip(rng):
    for _ in range(50):
        seqs = [random_key_sequence(rng) for _ in range(rng.randint(1, 3))]
        assert parse_keyfile(format_keyfile(seqs)) == seqs


def test_keyfile_comments_and_layout():
    text = """
    # example key
    mul
    1 0 0 0
    0 1 0 0
    0 0 1 0
    3 4 5 1
    add 1 2 3
    """
    (seq,) = parse_keyfile(text)
    assert seq == KeySequence([KeyOp.mul(T345), KeyOp.add(1, 2, 3)])


@pytest.mark.parametrize(
    "text",
    [
        "",
        "add 1 2\n",
        "mul\n1 0 0 0\n0 1 0 0\n",
        "mul\n2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",  # determinant check on load
        "spin 1 2 3\n",
        "add x y z\n",
        "---\nadd 1 1 1\n",
    ],
)
def test_keyfile_errors(text):
    with pytest.raises(KeyFileError):
        parse_keyfile(text)
