"""Smoke test for the okounkov extension module.

Build first:  pip install --no-build-isolation ./crates/py
"""

import json
import math
import tempfile
from fractions import Fraction

import okounkov


def ln_binom(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def main():
    p1 = okounkov.Bundle(projective=1)
    assert p1.dim == 1
    assert p1.basis_size(7) == 8
    assert p1.level_basis(2) == [[0], [1], [2]]
    assert Fraction(p1.body_volume()) == 1

    # Fubini-Study Gram matrix is diagonal with entries 1/((m+1) binom(m, b))
    m = 6
    expected = 0.5 * sum(math.log(m + 1) + ln_binom(m, b) for b in range(m + 1))
    assert abs(p1.deg_h0(m) - expected) < 1e-8, (p1.deg_h0(m), expected)

    # a weight at p = 2 shifts F by an exact multiple of log 2
    w = okounkov.Bundle(projective=1, weights=[(2, [([1], 0), ([-1], 1)])])
    diff = w.f_total(4, [2]) - p1.f_total(4, [2])
    assert abs(diff + 2 * math.log(2)) < 1e-12, diff

    tri = okounkov.Bundle(vertices=[[0, 0], [2, 0], [0, 1]])
    assert Fraction(tri.body_volume()) == 1
    assert sorted(map(tuple, tri.okounkov_body())) == [("0", "0"), ("0", "1"), ("2", "0")]

    c = dict((a[0], v) for a, v in p1.chebyshev(4, [1, 2, 4, 8]))
    # c(1/2) = -(1/2)log 2: entropy of the midpoint of the segment
    assert abs(c[0.5] + 0.5 * math.log(2)) < 1e-2, c[0.5]

    two = p1.multiple(2)
    assert two.basis_size(3) == 7
    assert p1.tensor(p1).basis_size(3) == 7

    assert okounkov.validate('{"series": {"projective": 1}}') == []
    assert okounkov.validate('{"series": {"projective": 0}, "extra": 1}')

    with tempfile.TemporaryDirectory() as out:
        cfg = json.dumps({"series": {"projective": 1}, "max_level": 40})
        verdicts = dict(okounkov.run(cfg, out, checks=["riemann_roch", "fundamental_identity"]))
        assert verdicts == {"fundamental_identity": "PASS", "riemann_roch": "PASS"}, verdicts

    print("smoke test ok:", p1)


if __name__ == "__main__":
    main()
