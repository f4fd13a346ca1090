"""Random key material that is always usable for every byte value.

A generated key must move all 256 symbols to non-negative coordinates and
keep each wrap-around factor within the 16-bit wire field.
"""

from __future__ import annotations

import random

from . import codec
from .framing import MAX_WAF
from .points import KeyOp, KeySequence, apply_sequence, random_unimodular

ALL_POINTS = [codec.linear_to_3d(i) for i in range(256)]
MAX_ATTEMPTS = 1000


def _shift_to_nonnegative(seq, slack=0, rng=None):
    """Translation that lifts the lowest image of any symbol to >= 0 on each axis."""
    images = [apply_sequence(p, seq) for p in ALL_POINTS]
    shift = []
    for axis in range(3):
        low = min(img[axis] for img in images)
        extra = rng.randint(0, slack) if rng and slack else 0
        shift.append(max(0, -low) + extra)
    return tuple(shift)


def max_waf(seq) -> int:
    worst = 0
    for p in ALL_POINTS:
        img = apply_sequence(p, seq)
        if min(img) < 0:
            return -1
        worst = max(worst, codec.mangle(codec.AxisTriple(*img)).waf)
    return worst


def is_wire_safe(seq) -> bool:
    return 0 <= max_waf(seq) <= MAX_WAF


def translate_key(dr: int, dg: int, db: int) -> KeySequence:
    return KeySequence([KeyOp.translate(dr, dg, db)])


def unimodular_key(rng: random.Random, steps: int = 4, slack: int = 8) -> KeySequence:
    """One ``mul`` op: a random unimodular linear part with a translation row
    chosen so every symbol lands in the non-negative octant."""
    for _ in range(MAX_ATTEMPTS):
        linear = random_unimodular(rng, steps)
        shift = _shift_to_nonnegative([KeyOp.mul(linear)], slack, rng)
        m = linear[:3] + (tuple(shift) + (1,),)
        seq = KeySequence([KeyOp.mul(m)])
        if is_wire_safe(seq):
            return seq
    raise RuntimeError("could not find a wire-safe unimodular key")


def composite_key(rng: random.Random, length: int = 3, steps: int = 3, slack: int = 8) -> KeySequence:
    """A chain of ``length`` ops mixing matrices, adds and subs, ending with
    whatever ``add`` is needed to keep the output non-negative."""
    if length < 1:
        raise ValueError("composite keys need at least one op")
    for _ in range(MAX_ATTEMPTS):
        ops = []
        for _ in range(length - 1):
            kind = rng.choice(("mul", "add", "sub"))
            if kind == "mul":
                ops.append(KeyOp.mul(random_unimodular(rng, steps)))
            else:
                ops.append(KeyOp(kind, vector=tuple(rng.randint(0, slack) for _ in range(3))))
        ops.append(KeyOp.add(*_shift_to_nonnegative(ops, slack, rng)))
        seq = KeySequence(ops)
        if is_wire_safe(seq):
            return seq
    raise RuntimeError("could not find a wire-safe composite key")


def make_key(kind: str, params=(), seed=None, **kw) -> KeySequence:
    rng = random.Random(seed)
    if kind == "translate":
        if len(params) != 3:
            raise ValueError("translate needs three integers: dr dg db")
        return translate_key(*(int(p) for p in params))
    if kind == "unimodular":
        return unimodular_key(rng, **kw)
    if kind == "composite":
        return composite_key(rng, **kw)
    raise ValueError(f"unknown key kind {kind!r}")

