"""Encryption and decryption of byte messages as relocated RGB points."""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import codec
from .codec import AxisTriple, MangledSymbol
from .errors import CipherError, CodecError, InvalidKeyError
from .points import (
    HomogeneousPoint,
    KeyOp,
    KeySequence,
    apply_op,
    format_keyfile,
    invert_sequence,
    translation,
)

AXES = "rgb"
FINGERPRINT_SIZE = 8

EncryptedRecord = MangledSymbol


def fingerprint(sequences: Sequence[KeySequence]) -> bytes:
    """8-byte diagnostic tag of the canonical key-file text."""
    text = format_keyfile(list(sequences))
    return hashlib.sha256(text.encode("ascii")).digest()[:FINGERPRINT_SIZE]


@dataclass(frozen=True)
class KeySchedule:
    """Which key sequence encrypts which message position.

    ``fixed`` uses one sequence everywhere; ``per_symbol`` cycles through
    ``sequences`` by position.  ``per_axis_modulo`` (bits N), when set,
    reduces every axis mod 2**N after each op; it only works with add/sub
    keys.
    """

    sequences: tuple[KeySequence, ...]
    mode: str = "fixed"
    per_axis_modulo: int | None = None

    def __post_init__(self):
        seqs = tuple(KeySequence(s) for s in self.sequences)
        object.__setattr__(self, "sequences", seqs)
        if not seqs or any(len(s) == 0 for s in seqs):
            raise InvalidKeyError("a schedule needs at least one non-empty key sequence")
        if self.mode not in ("fixed", "per_symbol"):
            raise InvalidKeyError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "fixed" and len(seqs) != 1:
            raise InvalidKeyError("fixed schedule takes exactly one key sequence")
        if self.per_axis_modulo is not None:
            if self.per_axis_modulo < 4:
                raise InvalidKeyError("per-axis modulo needs N >= 4 bits")
            if any(op.kind == "mul" for s in seqs for op in s):
                raise InvalidKeyError("per-axis modulo mode only supports add/sub keys")

    @classmethod
    def fixed(cls, seq, per_axis_modulo=None) -> "KeySchedule":
        return cls((KeySequence(seq),), "fixed", per_axis_modulo)

    @classmethod
    def cycled(cls, seqs, per_axis_modulo=None) -> "KeySchedule":
        return cls(tuple(KeySequence(s) for s in seqs), "per_symbol", per_axis_modulo)

    @classmethod
    def from_sequences(cls, seqs, per_axis_modulo=None) -> "KeySchedule":
        seqs = list(seqs)
        if len(seqs) == 1:
            return cls.fixed(seqs[0], per_axis_modulo)
        return cls.cycled(seqs, per_axis_modulo)

    def sequence_for(self, position: int) -> KeySequence:
        return self.sequences[position % len(self.sequences)]

    def inverse_sequences(self) -> tuple[KeySequence, ...]:
        return tuple(invert_sequence(s) for s in self.sequences)

    @property
    def fingerprint(self) -> bytes:
        return fingerprint(self.sequences)


@dataclass(frozen=True)
class EncryptedMessage:
    records: tuple[EncryptedRecord, ...]
    L: int = codec.L_DEFAULT
    fingerprint: bytes | None = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _run(p, seq, modulus):
    for op in seq:
        p = apply_op(p, op)
        if modulus:
            p = HomogeneousPoint(p.r % modulus, p.g % modulus, p.b % modulus)
    return p


def _check_nonnegative(p, position):
    for axis, v in zip(AXES, p):
        if v < 0:
            raise CipherError(
                f"key moves symbol at position {position} to negative {axis}={v}; "
                "choose a key with a larger translation",
                position=position,
                axis=axis,
            )


def _encrypt_symbol(byte, seq, modulus, position) -> EncryptedRecord:
    p = _run(HomogeneousPoint(*codec.linear_to_3d(byte)), seq, modulus)
    _check_nonnegative(p, position)
    return codec.mangle(AxisTriple(*p))


def encrypt(message: bytes, schedule: KeySchedule) -> EncryptedMessage:
    """Relocate every byte of ``message`` with its scheduled key and mangle the result."""
    modulus = 1 << schedule.per_axis_modulo if schedule.per_axis_modulo else 0
    n_seq = len(schedule.sequences)
    # only 256 distinct symbols exist per sequence, so memoise
    cache: dict[tuple[int, int], EncryptedRecord] = {}
    records = []
    for i, byte in enumerate(bytes(message)):
        key = (i % n_seq, byte)
        rec = cache.get(key)
        if rec is None:
            rec = _encrypt_symbol(byte, schedule.sequences[key[0]], modulus, i)
            cache[key] = rec
        records.append(rec)
    return EncryptedMessage(tuple(records), codec.L_DEFAULT, schedule.fingerprint)


def _decrypt_record(rec, inv_seq, modulus, position) -> int:
    try:
        t = codec.demangle(rec)
    except CodecError as exc:
        raise CipherError(f"record {position}: {exc}", position=position) from None
    p = _run(HomogeneousPoint(*t), inv_seq, modulus)
    for axis, v in zip(AXES, p):
        if not 0 <= v <= codec.GROUP_MASK:
            raise CipherError(
                f"record {position} reconstructs to {axis}={v}, outside [0, 7] "
                "(wrong key or corrupt record)",
                position=position,
                axis=axis,
            )
    return codec.relinearize(AxisTriple(*p)).index


def decrypt(em, schedule: KeySchedule) -> bytes:
    """Invert :func:`encrypt`.  ``em`` may also be a plain list of records."""
    if isinstance(em, EncryptedMessage):
        records = em.records
        if em.fingerprint is not None and em.fingerprint != schedule.fingerprint:
            warnings.warn(
                "key fingerprint does not match the one used for encryption",
                stacklevel=2,
            )
    else:
        records = tuple(em)
    modulus = 1 << schedule.per_axis_modulo if schedule.per_axis_modulo else 0
    inverses = schedule.inverse_sequences()
    n_seq = len(inverses)
    cache: dict[tuple[int, EncryptedRecord], int] = {}
    out = bytearray()
    for i, rec in enumerate(records):
        key = (i % n_seq, rec)
        byte = cache.get(key)
        if byte is None:
            byte = _decrypt_record(rec, inverses[key[0]], modulus, i)
            cache[key] = byte
        out.append(byte)
    return bytes(out)


def _as_step_matrix(op: KeyOp) -> np.ndarray:
    if op.kind == "add":
        m = translation(*op.vector)
    elif op.kind == "sub":
        m = translation(*(-v for v in op.vector))
    else:
        m = op.matrix
    return np.array(m, dtype=object)


def encrypt_block(message: bytes, schedule: KeySchedule) -> EncryptedMessage:
    """Block mode: stack all points into an n x 4 matrix and move them together.

    Produces exactly what :func:`encrypt` produces for a fixed schedule.
    """
    if schedule.mode != "fixed":
        raise CipherError("block mode needs a fixed (single-sequence) schedule")
    message = bytes(message)
    if not message:
        return EncryptedMessage((), codec.L_DEFAULT, schedule.fingerprint)
    modulus = 1 << schedule.per_axis_modulo if schedule.per_axis_modulo else 0
    # object dtype keeps Python's unbounded ints
    block = np.array([codec.linear_to_3d(b) + (1,) for b in message], dtype=object)
    for op in schedule.sequences[0]:
        block = block.dot(_as_step_matrix(op))
        if modulus:
            block[:, :3] %= modulus
    records = []
    for i, row in enumerate(block):
        p = tuple(int(v) for v in row[:3])
        _check_nonnegative(p, i)
        records.append(codec.mangle(AxisTriple(*p)))
    return EncryptedMessage(tuple(records), codec.L_DEFAULT, schedule.fingerprint)
