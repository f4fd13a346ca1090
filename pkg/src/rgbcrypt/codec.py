"""Symbol codec: 8-bit symbols, mod-2^L arithmetic, the 9-bit split into
three 3-bit axis groups, and the wrap-around / bits-per-axis "mangling" used
to flatten a relocated point back into one L-bit residue.

Everything here is a pure function over immutable values.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import NamedTuple, Union

from .errors import CodecError

L_DEFAULT = 8
GROUP_BITS = 3
GROUP_MASK = (1 << GROUP_BITS) - 1
MIN_AXIS_BITS = 3

_MOD_OPS = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
}


def _check_width(L: int) -> None:
    if L != L_DEFAULT:
        raise CodecError(f"unsupported bit-width L={L}; only L=8 is supported")


@dataclass(frozen=True)
class Symbol:
    """One member of the 256-symbol set, identified by its index/code."""

    index: int
    L: int = L_DEFAULT

    def __post_init__(self):
        if self.L < 1:
            raise CodecError(f"bit-width must be positive, got {self.L}")
        if not 0 <= self.index < (1 << self.L):
            raise CodecError(f"symbol index {self.index} outside [0, {(1 << self.L) - 1}]")

    def __int__(self):
        return self.index

    @classmethod
    def from_char(cls, ch: str) -> "Symbol":
        return cls(ord(ch))

    def bits(self) -> str:
        return format(self.index, f"0{self.L}b")


SymbolLike = Union[Symbol, int]


def _as_symbol(s: SymbolLike) -> Symbol:
    return s if isinstance(s, Symbol) else Symbol(int(s))


class AxisTriple(NamedTuple):
    """Non-negative (r, g, b) axis coordinates."""

    r: int
    g: int
    b: int


class Bpa(NamedTuple):
    """Bits-per-axis: how many bits each of r, g, b occupies in a packed value."""

    t_r: int
    t_g: int
    t_b: int

    @property
    def total(self) -> int:
        return self.t_r + self.t_g + self.t_b

    def validate(self) -> "Bpa":
        if min(self) < MIN_AXIS_BITS:
            raise CodecError(f"bits-per-axis component below {MIN_AXIS_BITS}: {tuple(self)}")
        return self

    def __str__(self):
        return f"{self.t_r},{self.t_g},{self.t_b}"


@dataclass(frozen=True)
class MangledSymbol:
    """An L-bit residue plus the bookkeeping needed to rebuild the packed value.

    ``waf * 2**L + residue`` is the packed bits integer; ``bpa`` says how to
    split it back into three axis fields.
    """

    residue: int
    waf: int
    bpa: Bpa
    L: int = L_DEFAULT

    def __post_init__(self):
        if not 0 <= self.residue < (1 << self.L):
            raise CodecError(f"residue {self.residue} outside [0, {(1 << self.L) - 1}]")
        if self.waf < 0:
            raise CodecError(f"negative wrap-around factor {self.waf}")
        object.__setattr__(self, "bpa", Bpa(*self.bpa).validate())

    @property
    def packed(self) -> int:
        return (self.waf << self.L) | self.residue


def mod_op(a: int, b: int, op: str, L: int = L_DEFAULT) -> int:
    """Integer (carry-based) ``a op b`` wrapped to ``[0, 2**L)``.

    Note: 170 * 241 gives 10 here.  Some write-ups of this scheme quote the
    product as 2 (``00000010``); no standard arithmetic reproduces that, so
    it is not honoured.
    """
    try:
        fn = _MOD_OPS[op]
    except KeyError:
        raise CodecError(f"unknown operator {op!r}") from None
    return fn(a, b) % (1 << L)


def linear_to_3d(s: SymbolLike) -> AxisTriple:
    """Split a symbol into three 3-bit groups.

    A zero bit is prepended on the MSB side so the 8-bit code becomes nine
    bits, read MSB-first as r | g | b.
    """
    s = _as_symbol(s)
    _check_width(s.L)
    v = s.index  # the prepended bit is 0, so the 9-bit value equals the index
    return AxisTriple((v >> 6) & GROUP_MASK, (v >> 3) & GROUP_MASK, v & GROUP_MASK)


def relinearize(t: AxisTriple) -> Symbol:
    for axis, value in zip("rgb", t):
        if not 0 <= value <= GROUP_MASK:
            raise CodecError(f"axis {axis}={value} outside 3-bit range")
    v = (t[0] << 6) | (t[1] << 3) | t[2]
    # drop the symmetry bit
    return Symbol(v & 0xFF)


def compute_bpa(t: AxisTriple) -> Bpa:
    if min(t) < 0:
        raise CodecError(f"negative axis value in {tuple(t)}")
    return Bpa(*(max(MIN_AXIS_BITS, int(v).bit_length()) for v in t))


def pack_axes(t: AxisTriple, bpa: Bpa) -> int:
    r, g, b = t
    return (((r << bpa.t_g) | g) << bpa.t_b) | b


def mangle(t: AxisTriple, L: int = L_DEFAULT) -> MangledSymbol:
    _check_width(L)
    bpa = compute_bpa(t)
    packed = pack_axes(t, bpa)
    waf, residue = divmod(packed, 1 << L)
    return MangledSymbol(residue, waf, bpa, L)


def demangle(m: MangledSymbol, L: int = L_DEFAULT) -> AxisTriple:
    _check_width(L)
    bpa = m.bpa
    packed = m.waf * (1 << L) + m.residue
    if packed.bit_length() > bpa.total:
        raise CodecError(
            f"corrupt record: packed value needs {packed.bit_length()} bits "
            f"but bits-per-axis {bpa} only allows {bpa.total}"
        )
    b = packed & ((1 << bpa.t_b) - 1)
    packed >>= bpa.t_b
    g = packed & ((1 << bpa.t_g) - 1)
    r = packed >> bpa.t_g
    return AxisTriple(r, g, b)


def polynomial_view(s: SymbolLike) -> str:
    """Render the code as a polynomial over x, e.g. 0b10110100 -> 'x^7 + x^5 + x^4 + x^2'."""
    v = int(s)
    if v == 0:
        return "0"
    terms = []
    for k in range(v.bit_length() - 1, -1, -1):
        if v >> k & 1:
            terms.append("1" if k == 0 else "x" if k == 1 else f"x^{k}")
    return " + ".join(terms)


def base_view(s: SymbolLike, base: str) -> str:
    v = int(s)
    if base in ("hex", 16):
        return format(v, "X")
    if base in ("octal", "oct", 8):
        return format(v, "o")
    raise CodecError(f"unsupported base {base!r}")
