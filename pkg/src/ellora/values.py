"""Program values and finite sorts.

Values are immutable and hashable: bool, int, Fraction, tuples, arrays
(ArrVal), finite maps (MapVal) and finite sets (frozenset).  Every program
variable carries a declared sort; sorts know how to enumerate, size and
default their carrier so that quantifiers, state grids and the falsifier can
enumerate exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction


class ValueError_(Exception):
    """A malformed value (bad JSON encoding, wrong shape)."""


# ---------------------------------------------------------------------------
# Compound values


@dataclass(frozen=True)
class ArrVal:
    """Fixed-length array indexed from `base` (inclusive)."""

    base: int
    items: tuple

    def get(self, i: int):
        if not (self.base <= i < self.base + len(self.items)):
            raise IndexError(f"array index {i} outside [{self.base}..{self.base + len(self.items) - 1}]")
        return self.items[i - self.base]

    def set(self, i: int, v) -> "ArrVal":
        if not (self.base <= i < self.base + len(self.items)):
            raise IndexError(f"array index {i} outside [{self.base}..{self.base + len(self.items) - 1}]")
        k = i - self.base
        return ArrVal(self.base, self.items[:k] + (v,) + self.items[k + 1 :])

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class MapVal:
    """Immutable finite partial map; items kept sorted by key for hashing."""

    items: tuple = ()

    @staticmethod
    def from_pairs(pairs) -> "MapVal":
        d = {}
        for k, v in pairs:
            d[k] = v
        return MapVal(tuple(sorted(d.items(), key=lambda kv: value_key(kv[0]))))

    def get(self, k):
        for k2, v in self.items:
            if k2 == k:
                return v
        raise KeyError(k)

    def has(self, k) -> bool:
        return any(k2 == k for k2, _ in self.items)

    def set(self, k, v) -> "MapVal":
        return MapVal.from_pairs(tuple(self.items) + ((k, v),))

    def keys(self):
        return tuple(k for k, _ in self.items)

    def values(self):
        return tuple(v for _, v in self.items)

    def __len__(self):
        return len(self.items)


# ---------------------------------------------------------------------------
# Canonical ordering over values (used for byte-stable serialization)

_RANK = {bool: 0, int: 1, Fraction: 1, tuple: 2, ArrVal: 3, frozenset: 4, MapVal: 5}


def value_key(v):
    """Total deterministic order key across all value kinds."""
    t = type(v)
    if t is bool:
        return (0, 0, v)
    if t is int or t is Fraction:
        return (1, 0, Fraction(v))
    if t is tuple:
        return (2, len(v), tuple(value_key(x) for x in v))
    if t is ArrVal:
        return (3, len(v.items), v.base, tuple(value_key(x) for x in v.items))
    if t is frozenset:
        return (4, len(v), tuple(sorted(value_key(x) for x in v)))
    if t is MapVal:
        return (5, len(v.items), tuple((value_key(k), value_key(x)) for k, x in v.items))
    raise ValueError_(f"not a program value: {v!r}")


def is_value(v) -> bool:
    t = type(v)
    if t in (bool, int, Fraction):
        return True
    if t is tuple:
        return all(is_value(x) for x in v)
    if t is ArrVal:
        return all(is_value(x) for x in v.items)
    if t is frozenset:
        return all(is_value(x) for x in v)
    if t is MapVal:
        return all(is_value(k) and is_value(x) for k, x in v.items)
    return False


# ---------------------------------------------------------------------------
# Sorts


class Sort:
    def contains(self, v) -> bool:
        raise NotImplementedError

    def size(self):
        """Number of inhabitants, or None when infinite."""
        raise NotImplementedError

    def values(self):
        """Deterministic enumeration of all inhabitants (finite sorts only)."""
        raise NotImplementedError

    def default(self):
        raise NotImplementedError

    def is_finite(self) -> bool:
        return self.size() is not None


@dataclass(frozen=True)
class BoolSort(Sort):
    def contains(self, v):
        return type(v) is bool

    def size(self):
        return 2

    def values(self):
        yield False
        yield True

    def default(self):
        return False

    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class IntRangeSort(Sort):
    lo: int
    hi: int

    def contains(self, v):
        return type(v) is int and self.lo <= v <= self.hi

    def size(self):
        return max(0, self.hi - self.lo + 1)

    def values(self):
        return iter(range(self.lo, self.hi + 1))

    def default(self):
        return self.lo

    def __str__(self):
        return f"int[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class IntSort(Sort):
    """Unbounded integers.  Declarable, but flagged InfiniteDomain by the
    well-formedness check; enumeration is not available."""

    def contains(self, v):
        return type(v) is int

    def size(self):
        return None

    def values(self):
        raise ValueError_("cannot enumerate unbounded int sort")

    def default(self):
        return 0

    def __str__(self):
        return "int"


@dataclass(frozen=True)
class ArraySort(Sort):
    lo: int
    hi: int
    elem: Sort

    def length(self):
        return self.hi - self.lo + 1

    def contains(self, v):
        return (
            type(v) is ArrVal
            and v.base == self.lo
            and len(v.items) == self.length()
            and all(self.elem.contains(x) for x in v.items)
        )

    def size(self):
        n = self.elem.size()
        return None if n is None else n ** self.length()

    def values(self):
        for combo in itertools.product(list(self.elem.values()), repeat=self.length()):
            yield ArrVal(self.lo, combo)

    def default(self):
        return ArrVal(self.lo, tuple(self.elem.default() for _ in range(self.length())))

    def __str__(self):
        return f"array[{self.lo}..{self.hi}] of {self.elem}"


@dataclass(frozen=True)
class MapSort(Sort):
    """Partial finite maps from key sort to value sort."""

    key: Sort
    val: Sort

    def contains(self, v):
        return (
            type(v) is MapVal
            and all(self.key.contains(k) and self.val.contains(x) for k, x in v.items)
        )

    def size(self):
        nk, nv = self.key.size(), self.val.size()
        if nk is None or nv is None:
            return None
        return (nv + 1) ** nk

    def values(self):
        keys = list(self.key.values())
        vals = [None] + list(self.val.values())
        for combo in itertools.product(vals, repeat=len(keys)):
            yield MapVal.from_pairs((k, v) for k, v in zip(keys, combo) if v is not None)

    def default(self):
        return MapVal()

    def __str__(self):
        return f"map[{self.key} => {self.val}]"


@dataclass(frozen=True)
class SetSort(Sort):
    elem: Sort

    def contains(self, v):
        return type(v) is frozenset and all(self.elem.contains(x) for x in v)

    def size(self):
        n = self.elem.size()
        return None if n is None else 2 ** n

    def values(self):
        elems = list(self.elem.values())
        for mask in range(2 ** len(elems)):
            yield frozenset(e for i, e in enumerate(elems) if mask >> i & 1)

    def default(self):
        return frozenset()

    def __str__(self):
        return f"set[{self.elem}]"


@dataclass(frozen=True)
class TupleSort(Sort):
    elems: tuple

    def contains(self, v):
        return (
            type(v) is tuple
            and len(v) == len(self.elems)
            and all(s.contains(x) for s, x in zip(self.elems, v))
        )

    def size(self):
        total = 1
        for s in self.elems:
            n = s.size()
            if n is None:
                return None
            total *= n
        return total

    def values(self):
        for combo in itertools.product(*(list(s.values()) for s in self.elems)):
            yield combo

    def default(self):
        return tuple(s.default() for s in self.elems)

    def __str__(self):
        return "tuple(" + ", ".join(str(s) for s in self.elems) + ")"


# ---------------------------------------------------------------------------
# Rationals and JSON encodings


def parse_rat(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def fmt_rat(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def value_to_json(v):
    t = type(v)
    if t is bool or t is int:
        return v
    if t is Fraction:
        return f"{v.numerator}/{v.denominator}"
    if t is tuple:
        return {"tuple": [value_to_json(x) for x in v]}
    if t is ArrVal:
        return {"array": [value_to_json(x) for x in v.items], "base": v.base}
    if t is frozenset:
        return {"set": [value_to_json(x) for x in sorted(v, key=value_key)]}
    if t is MapVal:
        return {"map": [[value_to_json(k), value_to_json(x)] for k, x in v.items]}
    raise ValueError_(f"not a program value: {v!r}")


def value_from_json(j):
    if isinstance(j, bool) or isinstance(j, int):
        return j
    if isinstance(j, str):
        return parse_rat(j)
    if isinstance(j, dict):
        if "tuple" in j:
            return tuple(value_from_json(x) for x in j["tuple"])
        if "array" in j:
            return ArrVal(j.get("base", 0), tuple(value_from_json(x) for x in j["array"]))
        if "set" in j:
            return frozenset(value_from_json(x) for x in j["set"])
        if "map" in j:
            return MapVal.from_pairs((value_from_json(k), value_from_json(v)) for k, v in j["map"])
    raise ValueError_(f"bad value encoding: {j!r}")
