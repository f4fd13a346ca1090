"""Homogeneous RGB points and the invertible key operations that move them.

Points are row vectors ``[r g b 1]``.  A ``mul`` key multiplies the point on
the right by a 4x4 affine matrix whose translation lives in the bottom row,
so the last column is always ``(0, 0, 0, 1)``.  Only unimodular linear parts
(determinant +/-1) are accepted, which keeps every inverse integral.

All arithmetic is on Python ints; coordinates never overflow.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import InvalidKeyError, KeyFileError

Matrix = tuple[tuple[int, int, int, int], ...]

IDENTITY: Matrix = (
    (1, 0, 0, 0),
    (0, 1, 0, 0),
    (0, 0, 1, 0),
    (0, 0, 0, 1),
)


class HomogeneousPoint(NamedTuple):
    r: int
    g: int
    b: int

    @property
    def w(self) -> int:
        return 1

    def row(self) -> tuple[int, int, int, int]:
        return (self.r, self.g, self.b, 1)


def color_count(n: int) -> int:
    """Number of distinct points (colors) with ``n`` bits per axis."""
    if n < 1:
        raise ValueError(f"bits per dimension must be >= 1, got {n}")
    return 1 << (3 * n)


def det3(m) -> int:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def adjugate3(m) -> list[list[int]]:
    # adj[i][j] = cofactor[j][i]
    def cof(i, j):
        rows = [r for k, r in enumerate(m[:3]) if k != i]
        a, b = [[v for k, v in enumerate(r[:3]) if k != j] for r in rows]
        return (-1) ** (i + j) * (a[0] * b[1] - a[1] * b[0])

    return [[cof(j, i) for j in range(3)] for i in range(3)]


def matmul(a, b) -> Matrix:
    n, k = len(a), len(b)
    cols = len(b[0])
    return tuple(
        tuple(sum(a[i][x] * b[x][j] for x in range(k)) for j in range(cols)) for i in range(n)
    )


def translation(dr: int, dg: int, db: int) -> Matrix:
    return IDENTITY[:3] + ((dr, dg, db, 1),)


def _as_matrix(rows) -> Matrix:
    m = tuple(tuple(int(v) for v in row) for row in rows)
    if len(m) != 4 or any(len(row) != 4 for row in m):
        raise InvalidKeyError("key matrix must be 4x4")
    return m


def check_affine_unimodular(m: Matrix) -> int:
    """Raise unless ``m`` is a homogeneous affine matrix with det(linear part) = +/-1."""
    if tuple(row[3] for row in m) != (0, 0, 0, 1):
        raise InvalidKeyError(
            f"key matrix fourth column must be (0, 0, 0, 1), got {tuple(row[3] for row in m)}"
        )
    d = det3(m)
    if d not in (1, -1):
        raise InvalidKeyError(f"key matrix is not unimodular (linear-part determinant {d})")
    return d


def invert_affine(m: Matrix) -> Matrix:
    """Exact integer inverse of a unimodular affine matrix.

    With ``p' = p A + t`` the inverse is ``p = p' A^-1 - t A^-1``; ``A^-1`` is
    the adjugate divided by the determinant, which is +/-1.
    """
    d = check_affine_unimodular(m)
    adj = adjugate3(m)
    a_inv = [[v * d for v in row] for row in adj]  # d == 1/d for d = +/-1
    t = m[3][:3]
    t_inv = [-sum(t[k] * a_inv[k][j] for k in range(3)) for j in range(3)]
    return tuple(tuple(row) + (0,) for row in a_inv) + (tuple(t_inv) + (1,),)


@dataclass(frozen=True)
class KeyOp:
    """One invertible transform: ``add``/``sub`` a vector, or ``mul`` by a matrix."""

    kind: str
    vector: tuple[int, int, int] | None = None
    matrix: Matrix | None = None

    def __post_init__(self):
        if self.kind in ("add", "sub"):
            if self.vector is None or len(self.vector) != 3:
                raise InvalidKeyError(f"{self.kind} key needs a 3-component vector")
            if self.matrix is not None:
                raise InvalidKeyError(f"{self.kind} key takes no matrix")
            object.__setattr__(self, "vector", tuple(int(v) for v in self.vector))
        elif self.kind == "mul":
            if self.matrix is None or self.vector is not None:
                raise InvalidKeyError("mul key needs exactly a 4x4 matrix")
            m = _as_matrix(self.matrix)
            check_affine_unimodular(m)
            object.__setattr__(self, "matrix", m)
        else:
            raise InvalidKeyError(f"unknown key kind {self.kind!r}")

    @classmethod
    def add(cls, dr, dg, db):
        return cls("add", vector=(dr, dg, db))

    @classmethod
    def sub(cls, dr, dg, db):
        return cls("sub", vector=(dr, dg, db))

    @classmethod
    def mul(cls, matrix):
        return cls("mul", matrix=matrix)

    @classmethod
    def translate(cls, dr, dg, db):
        return cls("mul", matrix=translation(dr, dg, db))

    def inverse(self) -> "KeyOp":
        if self.kind == "add":
            return KeyOp("sub", vector=self.vector)
        if self.kind == "sub":
            return KeyOp("add", vector=self.vector)
        return KeyOp("mul", matrix=invert_affine(self.matrix))


class KeySequence(tuple):
    """An ordered chain of :class:`KeyOp`, applied left to right."""

    def __new__(cls, ops: Iterable[KeyOp] = ()):
        ops = tuple(ops)
        for op in ops:
            if not isinstance(op, KeyOp):
                raise InvalidKeyError(f"not a KeyOp: {op!r}")
        return super().__new__(cls, ops)

    def __repr__(self):
        return f"KeySequence({list(self)!r})"

    @property
    def ops(self) -> tuple[KeyOp, ...]:
        return tuple(self)

    def to_text(self) -> str:
        return format_keyfile(self)


def apply_op(p, k: KeyOp) -> HomogeneousPoint:
    r, g, b = p[0], p[1], p[2]
    if k.kind == "add":
        dr, dg, db = k.vector
        return HomogeneousPoint(r + dr, g + dg, b + db)
    if k.kind == "sub":
        dr, dg, db = k.vector
        return HomogeneousPoint(r - dr, g - dg, b - db)
    m = k.matrix
    return HomogeneousPoint(
        r * m[0][0] + g * m[1][0] + b * m[2][0] + m[3][0],
        r * m[0][1] + g * m[1][1] + b * m[2][1] + m[3][1],
        r * m[0][2] + g * m[1][2] + b * m[2][2] + m[3][2],
    )


def apply_sequence(p, ks: Sequence[KeyOp]) -> HomogeneousPoint:
    p = HomogeneousPoint(*p[:3])
    for k in ks:
        p = apply_op(p, k)
    return p


def invert_sequence(ks: Sequence[KeyOp]) -> KeySequence:
    return KeySequence(k.inverse() for k in reversed(ks))


def compose_matrices(ks: Sequence[KeyOp]) -> Matrix:
    """Collapse a sequence into one affine matrix (add/sub become translations)."""
    m = IDENTITY
    for k in ks:
        if k.kind == "add":
            step = translation(*k.vector)
        elif k.kind == "sub":
            step = translation(*(-v for v in k.vector))
        else:
            step = k.matrix
        m = matmul(m, step)
    return m


# -- random key material ------------------------------------------------------


def random_signed_permutation(rng: random.Random) -> Matrix:
    perm = list(range(3))
    rng.shuffle(perm)
    rows = []
    for i in range(3):
        row = [0, 0, 0, 0]
        row[perm[i]] = rng.choice((1, -1))
        rows.append(tuple(row))
    return tuple(rows) + ((0, 0, 0, 1),)


def random_shear(rng: random.Random, max_factor: int = 1) -> Matrix:
    i, j = rng.sample(range(3), 2)
    rows = [list(r) for r in IDENTITY]
    rows[i][j] = rng.choice([f for f in range(-max_factor, max_factor + 1) if f])
    return tuple(tuple(r) for r in rows)


def random_unimodular(rng: random.Random, steps: int = 3, max_shear: int = 1) -> Matrix:
    """Random product of signed permutations and unit shears (linear part only)."""
    m = IDENTITY
    for _ in range(steps):
        step = random_signed_permutation(rng) if rng.random() < 0.5 else random_shear(rng, max_shear)
        m = matmul(m, step)
    return m


# -- key file format ----------------------------------------------------------
#
#   # comment
#   add a b c
#   sub a b c
#   mul
#   m00 m01 m02 m03
#   ... (four rows)
#   ---            separates sequences of a per-symbol schedule


SEQUENCE_SEPARATOR = "---"


def format_keyfile(seqs) -> str:
    """Canonical key-file text for one sequence or a list of sequences."""
    if seqs and isinstance(seqs[0], KeyOp):
        seqs = [seqs]
    blocks = []
    for seq in seqs:
        lines = []
        for op in seq:
            if op.kind == "mul":
                lines.append("mul")
                lines.extend(" ".join(str(v) for v in row) for row in op.matrix)
            else:
                lines.append(f"{op.kind} {op.vector[0]} {op.vector[1]} {op.vector[2]}")
        blocks.append("\n".join(lines))
    return f"\n{SEQUENCE_SEPARATOR}\n".join(blocks) + "\n"


def _ints(parts, lineno, count):
    if len(parts) != count:
        raise KeyFileError(f"expected {count} integers, got {len(parts)}", lineno)
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise KeyFileError(f"not an integer in {' '.join(parts)!r}", lineno) from None


def parse_keyfile(text: str) -> list[KeySequence]:
    """Parse key-file text into one or more sequences."""
    lines = [
        (n, line.split())
        for n, line in enumerate(text.splitlines(), 1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    seqs, ops = [], []
    i = 0
    while i < len(lines):
        lineno, parts = lines[i]
        word = parts[0].lower()
        i += 1
        if word == SEQUENCE_SEPARATOR:
            if not ops:
                raise KeyFileError("empty key sequence", lineno)
            seqs.append(KeySequence(ops))
            ops = []
            continue
        try:
            if word in ("add", "sub"):
                ops.append(KeyOp(word, vector=_ints(parts[1:], lineno, 3)))
            elif word == "mul":
                if len(parts) != 1:
                    raise KeyFileError("'mul' must stand alone; matrix rows follow", lineno)
                if i + 4 > len(lines):
                    raise KeyFileError("'mul' needs four matrix rows", lineno)
                rows = [_ints(p, n, 4) for n, p in lines[i : i + 4]]
                i += 4
                ops.append(KeyOp("mul", matrix=rows))
            else:
                raise KeyFileError(f"unknown key operation {parts[0]!r}", lineno)
        except KeyFileError:
            raise
        except InvalidKeyError as exc:
            raise KeyFileError(str(exc), lineno) from None
    if not ops:
        raise KeyFileError("key file contains no operations" if not seqs else "empty key sequence")
    seqs.append(KeySequence(ops))
    return seqs
