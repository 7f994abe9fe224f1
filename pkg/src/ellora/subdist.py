"""Exact finite-support sub-distributions over program states.

A sub-distribution maps outcomes to positive rational masses with total
weight at most one; the missing mass models abort and non-termination.
All arithmetic is exact (fractions.Fraction), zero-mass entries are pruned,
and values are immutable, so structural equality of distributions is
decidable and safe to share across workers.
"""

from __future__ import annotations

from fractions import Fraction

from .values import fmt_rat, parse_rat, value_key, value_from_json, value_to_json


class WeightOverflowError(Exception):
    """Sum of weights exceeded 1 (an ill-formed additive split)."""


class State:
    """Immutable variable-to-value binding, hashable for use as an outcome."""

    __slots__ = ("_items", "_dict", "_hash")

    def __init__(self, bindings):
        if isinstance(bindings, State):
            items = bindings._items
        elif isinstance(bindings, dict):
            items = tuple(sorted(bindings.items()))
        else:
            items = tuple(sorted(bindings))
        self._items = items
        self._dict = dict(items)
        self._hash = hash(items)

    def get(self, name):
        return self._dict[name]

    def has(self, name) -> bool:
        return name in self._dict

    def set(self, name, value) -> "State":
        d = dict(self._dict)
        d[name] = value
        return State(d)

    def set_many(self, updates: dict) -> "State":
        d = dict(self._dict)
        d.update(updates)
        return State(d)

    def restrict(self, names) -> "State":
        keep = set(names)
        return State({k: v for k, v in self._items if k in keep})

    def vars(self):
        return tuple(k for k, _ in self._items)

    def as_dict(self) -> dict:
        return dict(self._items)

    def items(self):
        return self._items

    def __eq__(self, other):
        return isinstance(other, State) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"State({inner})"


def _outcome_key(a):
    if isinstance(a, State):
        return tuple((k, value_key(v)) for k, v in a.items())
    return value_key(a)


class SubDist:
    """Finite-support sub-distribution.  Treat as immutable."""

    __slots__ = ("_mass", "_weight")

    def __init__(self, mass=None):
        m = {}
        w = Fraction(0)
        if mass:
            for a, q in mass.items() if isinstance(mass, dict) else mass:
                q = Fraction(q)
                if q < 0:
                    raise WeightOverflowError(f"negative mass {q}")
                if q == 0:
                    continue
                w += q
                m[a] = m.get(a, Fraction(0)) + q
        if w > 1:
            raise WeightOverflowError(f"total mass {w} exceeds 1")
        self._mass = m
        self._weight = w

    # -- construction -------------------------------------------------------

    @staticmethod
    def dirac(a) -> "SubDist":
        return SubDist({a: Fraction(1)})

    @staticmethod
    def null() -> "SubDist":
        return SubDist()

    @staticmethod
    def from_pairs(pairs) -> "SubDist":
        d = {}
        for a, q in pairs:
            d[a] = d.get(a, Fraction(0)) + Fraction(q)
        return SubDist(d)

    # -- observation --------------------------------------------------------

    def mass(self, a) -> Fraction:
        return self._mass.get(a, Fraction(0))

    def weight(self) -> Fraction:
        return self._weight

    def support(self):
        return sorted(self._mass.keys(), key=_outcome_key)

    def items(self):
        return [(a, self._mass[a]) for a in self.support()]

    def is_null(self) -> bool:
        return not self._mass

    def __len__(self):
        return len(self._mass)

    def __eq__(self, other):
        return isinstance(other, SubDist) and self._mass == other._mass

    def __hash__(self):
        return hash(frozenset(self._mass.items()))

    def __repr__(self):
        inner = ", ".join(f"{a!r}: {fmt_rat(q)}" for a, q in self.items())
        return "SubDist({%s})" % inner

    # -- algebra ------------------------------------------------------------

    def bind(self, f) -> "SubDist":
        """Monadic bind: mass of b is sum over a of mass(a) * f(a)(b)."""
        out = {}
        for a, q in self._mass.items():
            for b, r in f(a)._mass.items():
                out[b] = out.get(b, Fraction(0)) + q * r
        return SubDist(out)

    def add(self, other: "SubDist") -> "SubDist":
        if self._weight + other._weight > 1:
            raise WeightOverflowError(
                f"weights {self._weight} + {other._weight} exceed 1"
            )
        out = dict(self._mass)
        for a, q in other._mass.items():
            out[a] = out.get(a, Fraction(0)) + q
        return SubDist(out)

    def scale(self, c) -> "SubDist":
        c = Fraction(c)
        if c < 0:
            raise WeightOverflowError(f"negative scale {c}")
        return SubDist({a: q * c for a, q in self._mass.items()})

    def restrict(self, pred) -> "SubDist":
        return SubDist({a: q for a, q in self._mass.items() if pred(a)})

    def leq(self, other: "SubDist") -> bool:
        return all(q <= other.mass(a) for a, q in self._mass.items())

    def map(self, f) -> "SubDist":
        return self.bind(lambda a: SubDist.dirac(f(a)))

    def project(self, names) -> "SubDist":
        """Marginal over the given variables (states only); weight preserved."""
        names = tuple(names)
        for a in self._mass:
            if not isinstance(a, State):
                raise TypeError("project applies to state distributions")
            missing = [n for n in names if not a.has(n)]
            if missing:
                raise KeyError(f"projection variables not bound: {missing}")
        return self.map(lambda m: m.restrict(names))

    def pr(self, pred) -> Fraction:
        """Probability of an event: total mass where pred holds."""
        return sum((q for a, q in self._mass.items() if pred(a)), Fraction(0))

    def expect(self, f) -> Fraction:
        """Exact expectation of a rational-valued function of the outcome."""
        return sum((q * Fraction(f(a)) for a, q in self._mass.items()), Fraction(0))


def dirac(a) -> SubDist:
    return SubDist.dirac(a)


def null() -> SubDist:
    return SubDist.null()


# ---------------------------------------------------------------------------
# JSON (states sorted canonically; masses as exact "num/den" strings)


def dist_to_json(d: SubDist) -> list:
    out = []
    for a, q in d.items():
        if not isinstance(a, State):
            raise TypeError("only state distributions serialize to JSON")
        out.append(
            {
                "state": {k: value_to_json(v) for k, v in a.items()},
                "mass": fmt_rat(q),
            }
        )
    return out


def dist_from_json(j) -> SubDist:
    pairs = []
    for entry in j:
        st = State({k: value_from_json(v) for k, v in entry["state"].items()})
        pairs.append((st, parse_rat(entry["mass"])))
    return SubDist.from_pairs(pairs)
