import random
from fractions import Fraction

import pytest

from ellora.subdist import State, SubDist, WeightOverflowError, dirac, dist_from_json, dist_to_json, null


def st(**kw):
    return State(kw)


class TestBasics:
    def test_dirac(self):
        m = st(x=0)
        d = dirac(m)
        assert d.mass(m) == 1
        assert d.weight() == 1
        assert d.support() == [m]

    def test_null(self):
        assert null().weight() == 0
        assert null().support() == []
        mu = SubDist({st(x=1): Fraction(1, 2)})
        assert null().add(mu) == mu
        assert null().bind(lambda m: dirac(m)) == null()

    def test_zero_mass_pruned(self):
        d = SubDist({st(x=0): Fraction(0), st(x=1): Fraction(1, 3)})
        assert len(d) == 1

    def test_weight_cap(self):
        with pytest.raises(WeightOverflowError):
            SubDist({st(x=0): Fraction(2, 3), st(x=1): Fraction(1, 2)})

    def test_add_pointwise(self):
        m = st(x=0)
        a = SubDist({m: Fraction(1, 3)})
        assert a.add(a).mass(m) == Fraction(2, 3)

    def test_add_overflow(self):
        a = SubDist({st(x=0): Fraction(2, 3)})
        with pytest.raises(WeightOverflowError):
            a.add(a)


class TestBind:
    def test_left_identity(self):
        m = st(x=0)
        f = lambda s: dirac(s.set("x", s.get("x") + 1))
        assert dirac(m).bind(f) == f(m)

    def test_right_identity(self):
        mu = SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 4)})
        assert mu.bind(dirac) == mu

    def test_weighted_sum(self):
        mu = SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 2)})
        out = mu.bind(lambda s: dirac(s.set("x", s.get("x") + 1)))
        assert out == SubDist({st(x=1): Fraction(1, 2), st(x=2): Fraction(1, 2)})

    def test_weight_never_increases(self):
        mu = SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 2)})
        out = mu.bind(lambda s: null() if s.get("x") == 0 else dirac(s))
        assert out.weight() <= mu.weight()


class TestRestrictLeqProject:
    def test_restrict(self):
        mu = SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 2)})
        assert mu.restrict(lambda m: True) == mu
        assert mu.restrict(lambda m: False) == null()
        assert mu.restrict(lambda m: m.get("x") == 0) == SubDist({st(x=0): Fraction(1, 2)})

    def test_restrict_split_reconstruction(self):
        mu = SubDist({st(x=i): Fraction(1, 4) for i in range(4)})
        e = lambda m: m.get("x") % 2 == 0
        assert mu.restrict(e).add(mu.restrict(lambda m: not e(m))) == mu

    def test_leq(self):
        mu = SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 2)})
        assert null().leq(mu)
        assert mu.restrict(lambda m: m.get("x") == 0).leq(mu)
        a = SubDist({st(x=0): Fraction(1, 2)})
        b = SubDist({st(x=0): Fraction(1, 3)})
        assert not a.leq(b)

    def test_project_marginal(self):
        mu = SubDist(
            {State({"x": 0, "y": 0}): Fraction(1, 2), State({"x": 0, "y": 1}): Fraction(1, 2)}
        )
        assert mu.project(["x"]) == dirac(st(x=0))
        assert mu.project(["x", "y"]) == mu
        assert mu.project(["y"]).weight() == mu.weight()


class TestJson:
    def test_round_trip(self):
        mu = SubDist(
            {State({"x": 0, "b": True}): Fraction(1, 3), State({"x": 2, "b": False}): Fraction(1, 6)}
        )
        j = dist_to_json(mu)
        assert mu == dist_from_json(j)
        assert all(entry["mass"].count("/") <= 1 for entry in j)

    def test_byte_stable_order(self):
        import json

        a = SubDist({st(x=2): Fraction(1, 4), st(x=1): Fraction(1, 4)})
        b = SubDist({st(x=1): Fraction(1, 4), st(x=2): Fraction(1, 4)})
        assert json.dumps(dist_to_json(a)) == json.dumps(dist_to_json(b))


def _random_dist(rng, n_states=4, var="x"):
    cuts = sorted(rng.randint(0, 24) for _ in range(n_states))
    total = rng.randint(0, 24)
    masses = {}
    prev = 0
    for i, c in enumerate(cuts):
        masses[State({var: i})] = Fraction(min(c, total) - min(prev, total), 24)
        prev = c
    return SubDist(masses)


class TestPropertyStyle:
    """Seeded randomized checks of the algebra laws (small, fast versions;
    the acceptance suite runs the large ones)."""

    def test_order_rigidity(self):
        rng = random.Random(7)
        for _ in range(500):
            mu2 = _random_dist(rng)
            if mu2.weight() != 1:
                continue
            mu1 = mu2
            assert mu1.leq(mu2) and mu1 == mu2

    def test_linearity_of_bind(self):
        rng = random.Random(8)
        f = lambda s: dirac(s.set("x", (s.get("x") * 2) % 5))
        for _ in range(300):
            a = _random_dist(rng).scale(Fraction(1, 2))
            b = _random_dist(rng).scale(Fraction(1, 2))
            assert a.add(b).bind(f) == a.bind(f).add(b.bind(f))

    def test_bind_weight_monotone(self):
        rng = random.Random(9)
        for _ in range(300):
            mu = _random_dist(rng)
            out = mu.bind(lambda s: null() if s.get("x") == 2 else dirac(s))
            assert out.weight() <= mu.weight()
