import random

import pytest

from rgbcrypt.cipher import KeySchedule
from rgbcrypt.codec import linear_to_3d
from rgbcrypt.points import KeyOp, KeySequence, apply_sequence, random_unimodular

EXAMPLE_KEY = KeySequence([KeyOp.translate(3, 4, 5)])

ALL_SYMBOL_POINTS = [linear_to_3d(i) for i in range(256)]

# criterion id -> (passed, description); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def random_key_sequence(rng: random.Random, max_len=5, offset=8) -> KeySequence:
    """Random chain of translations and unimodular matrices that keeps every
    symbol non-negative (a closing ``add`` absorbs any negative excursion)."""
    length = rng.randint(1, max_len)
    ops = []
    for _ in range(length - 1):
        kind = rng.choice(("add", "sub", "mul", "translate"))
        if kind == "mul":
            ops.append(KeyOp.mul(random_unimodular(rng, rng.randint(1, 4))))
        elif kind == "translate":
            ops.append(KeyOp.translate(*(rng.randint(-offset, offset) for _ in range(3))))
        else:
            ops.append(KeyOp(kind, vector=tuple(rng.randint(0, offset) for _ in range(3))))
    images = [apply_sequence(p, ops) for p in ALL_SYMBOL_POINTS]
    lift = [max(0, -min(img[a] for img in images)) + rng.randint(0, offset) for a in range(3)]
    ops.append(KeyOp.add(*lift))
    return KeySequence(ops)


def random_schedule(rng: random.Random, per_symbol=False) -> KeySchedule:
    if per_symbol:
        return KeySchedule.cycled([random_key_sequence(rng) for _ in range(rng.randint(1, 4))])
    return KeySchedule.fixed(random_key_sequence(rng))


def random_affine(rng: random.Random, offset=50):
    m = random_unimodular(rng, rng.randint(1, 6), max_shear=3)
    return m[:3] + (tuple(rng.randint(-offset, offset) for _ in range(3)) + (1,),)


@pytest.fixture
def rng():
    return random.Random(20050707)


@pytest.fixture
def example_schedule():
    return KeySchedule.fixed(EXAMPLE_KEY)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        ok, desc = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {cid}  {desc}")

