"""Exact-arithmetic tests for the cord ring, including the golden trefoil algebra."""

import pytest
from hypothesis import given, settings, strategies as st

from cordalg.errors import GrammarError, SelfReference
from cordalg.pipeline import compare, simplify
from cordalg.ring import (
    AlgebraElement as A,
    Presentation,
    commutation_move,
    framing_transform,
    normalize_relation,
    parse,
    reduce_modulo,
    relations_equivalent,
    serialize,
)

L = A.lam
U = A.mu
G = A.gen


# ---------------------------------------------------------------------------
# golden data: the eleven trefoil boundary values and the unknot pair,
# computed independently by hand from the flow pictures (frozen here), plus
# the expected simplified presentations.
# ---------------------------------------------------------------------------

TREFOIL_D = {
    "S_s": "-s_s + u s_t l^-1 u^-2",
    "S_t": "-s_t + l u^2 s_s u^-1",
    "k11_s": "1 - u - u^2 s_t l^-1 u^-2 + u s_t l^-1 u^-2 - u s_t l^-1 u^-1"
             " - u s_t s_s s_t l^-1 u^-2",
    "k11_t": "-1 + u + l u^2 s_s u^-2 + l u s_s u^-1 - l u^2 s_s u^-1"
             " + l u^2 s_s u^-1 s_t u^-1 s_s u^-1",
    "k12_s": "-u s_s + 1 - u + u s_t u^-1 s_s u^-1",
    "k12_t": "s_t u^-1 - 1 + u + u s_t s_s u^-1",
    "k21_s": "u s_s - l^-1 + l^-1 u + u^2 s_s s_t l^-1 u^-2 + u s_s u s_t l^-1 u^-2"
             " - u s_s s_t l^-1 u^-2 + u s_s s_t l^-1 u^-1 + u s_s s_t s_s s_t l^-1 u^-2",
    "k21_t": "-s_t u^-1 + l - l u + l u^2 s_s u^-1 s_t u^-2 + l u^2 s_s u^-2 s_t u^-1"
             " + l u s_s u^-1 s_t u^-1 - l u^2 s_s u^-1 s_t u^-1"
             " + l u^2 s_s u^-1 s_t u^-1 s_s u^-1 s_t u^-1",
    "k22_s": "1 - u - u^2 s_s u^-1 + u s_s u^-1 - u s_s - u s_s s_t s_s u^-1",
    "k22_t": "-1 + u + u s_t u^-2 + s_t u^-1 - u s_t u^-1 + u s_t u^-1 s_s u^-1 s_t u^-1",
}

TREFOIL_FINAL = [
    "s l u^6 - l u^6 s",
    "1 - u - s + l u^5 s u^-3 s u^-1",
    "-1 + u + l u^4 s u^-2 + l u^5 s u^-2 s u^-1",
]

UNKNOT_D = ["1 - u - l^-1 + l^-1 u", "-1 + u + l - l u"]
UNKNOT_FINAL = "1 - u - l + l u"  # (l-1)(u-1)


# ---------------------------------------------------------------------------
# multiplication and normal form
# ---------------------------------------------------------------------------

def test_mul_central_units():
    assert L() * U() * L(-1) == U()


def test_mul_fuses_boundary_monomials():
    lhs = U(2) * G("s_s") * U(-1)
    rhs = U() * G("s_t")
    assert serialize(lhs * rhs) == "u^2 s_s s_t"


def test_mul_distributes():
    one_minus_u = A.one() - U()
    sq = one_minus_u * one_minus_u
    assert sq == A.one() - 2 * U() + U(2)


def test_scalar_zero_and_unit():
    x = parse("u s_t l^-1 u^-3")
    assert x * A.one() == x
    assert x + A.zero() == x
    assert x - x == A.zero()
    assert (x * 0).is_zero()


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------

def test_substitute_kills_commutator_pair():
    # s_t -> l u^4 s_s u^-2 applied to the first transformed trefoil relation
    rel = parse("-u^-1 s_s + u s_t l^-1 u^-4")
    rule = {"s_t": parse("l u^4 s_s u^-2")}
    out = rel.substitute(rule)
    # -u^-1 s_s + l u^5 s_s l^-1 u^-6, a unit-conjugated commutator, not zero
    assert not out.is_zero()
    assert normalize_relation(out) == parse("s_s l u^6 - l u^6 s_s")


def test_substitute_identity_rule():
    x = parse(TREFOIL_D["k11_s"])
    assert x.substitute({"s_s": G("s_s")}) == x


def test_substitute_self_reference_rejected():
    with pytest.raises(SelfReference):
        G("a").substitute({"a": G("a") * G("b") + A.one()})


def test_substitute_unit_conjugation_allowed():
    # framing-change rules rescale a generator by unit monomials
    assert G("a").substitute({"a": U(-1) * G("a")}) == U(-1) * G("a")


def test_monomial_map_lambda_to_lambda_mu3():
    x = (A.one() - U()) * L(-1)
    out = x.map_monomials(lambda m: (m[0], m[1] + 3 * m[0]))
    assert out == (A.one() - U()) * L(-1) * U(-3)


# ---------------------------------------------------------------------------
# framing transform
# ---------------------------------------------------------------------------

def _trefoil_rules():
    return [("s_s", U(-1) * G("s_s")), ("s_t", G("s_t") * U())]


def test_framing_transform_matches_paper_eq5():
    p = Presentation(["s_s", "s_t"], [parse(TREFOIL_D["S_s"])])
    q = framing_transform(p, 3, _trefoil_rules())
    assert q.relations[0] == parse("-u^-1 s_s + u s_t l^-1 u^-4")


def test_framing_transform_trivial():
    p = Presentation(["s_s"], [parse("s_s - 1")])
    q = framing_transform(p, 0, [])
    assert q.relations[0] == p.relations[0]


def test_framing_transform_round_trip():
    rel = parse(TREFOIL_D["k21_t"])
    p = Presentation(["s_s", "s_t"], [rel])
    fwd = framing_transform(p, 3, _trefoil_rules())
    back = framing_transform(fwd, -3, [("s_s", U() * G("s_s")), ("s_t", G("s_t") * U(-1))])
    assert back.relations[0] == rel


# ---------------------------------------------------------------------------
# serialize / parse
# ---------------------------------------------------------------------------

def test_serialize_one_minus_u():
    assert serialize(A.one() - U()) == "1 - u"


def test_parse_accepts_dots_as_separators():
    assert parse("u.s_t.l^-1 u^-3") == U() * G("s_t") * L(-1) * U(-3)


def test_parse_rejects_garbage():
    with pytest.raises(GrammarError):
        parse("u ^^ s")
    with pytest.raises(GrammarError):
        parse("")


@st.composite
def elements(draw):
    gens = ("a", "b", "s_s")
    n_terms = draw(st.integers(0, 5))
    out = A.zero()
    for _ in range(n_terms):
        coeff = draw(st.integers(-9, 9))
        k = draw(st.integers(0, 3))
        monos = [
            (draw(st.integers(-4, 4)), draw(st.integers(-4, 4)))
            for _ in range(k + 1)
        ]
        labels = [draw(st.sampled_from(gens)) for _ in range(k)]
        out = out + A.from_word(monos, labels, coeff)
    return out


@settings(max_examples=1000, deadline=None)
@given(elements())
def test_serialize_parse_round_trip(x):
    assert parse(serialize(x)) == x


@settings(max_examples=1000, deadline=None)
@given(elements(), elements(), elements())
def test_ring_axioms(x, y, z):
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (y + z) * x == y * x + z * x
    assert x * A.one() == x and A.one() * x == x


@settings(max_examples=200, deadline=None)
@given(elements())
def test_units_central_among_themselves(x):
    assert L() * U() == U() * L()
    assert L() * L(-1) == A.one()
    assert (L(2) * U(-3)) * x == L(2) * (U(-3) * x)


@settings(max_examples=300, deadline=None)
@given(elements(), elements())
def test_substitute_is_homomorphism(x, y):
    rule = {"a": U() * G("c") * L(-1) + A.one()}
    assert (x * y).substitute(rule) == x.substitute(rule) * y.substitute(rule)


# ---------------------------------------------------------------------------
# normalization, equivalence, reduction
# ---------------------------------------------------------------------------

def test_normalize_unknot_relation_to_paper_form():
    assert normalize_relation(parse(UNKNOT_D[0])) == parse(UNKNOT_FINAL)
    assert normalize_relation(parse(UNKNOT_D[1])) == parse(UNKNOT_FINAL)


def test_commutation_move_detection():
    cm = commutation_move(parse("s_s l u^6 - l u^6 s_s"))
    assert cm == ("s_s", (1, 6), (1, 6))
    assert commutation_move(parse("1 - u")) is None


def test_normalize_is_idempotent_on_goldens():
    for text in list(TREFOIL_D.values()) + UNKNOT_D + TREFOIL_FINAL:
        r = normalize_relation(parse(text))
        assert normalize_relation(r) == r


def test_relations_equivalent_up_to_units_and_sign():
    r = parse(TREFOIL_D["k12_s"])
    conj = -(U(2) * r * L(-1) * U())
    assert relations_equivalent(r, conj)
    assert not relations_equivalent(r, parse(TREFOIL_D["k12_t"]))


def test_reduce_modulo_drops_second_unknot_relation():
    r1 = normalize_relation(parse(UNKNOT_D[0]))
    assert reduce_modulo(parse(UNKNOT_D[1]), [r1]).is_zero()


# ---------------------------------------------------------------------------
# the golden algebra pipeline: paper values -> final presentations
# ---------------------------------------------------------------------------

def test_unknot_presentation_simplifies_to_golden():
    p = Presentation([], [parse(t) for t in UNKNOT_D])
    out = simplify(p)
    assert out.generators == []
    assert len(out.relations) == 1
    assert out.relations[0] == parse(UNKNOT_FINAL)


def test_trefoil_presentation_simplifies_to_golden():
    p = Presentation(["s_s", "s_t"], [parse(t) for t in TREFOIL_D.values()])
    q = framing_transform(p, 3, _trefoil_rules())
    out = simplify(q)
    assert out.generators == ["s"]
    got = sorted(serialize(r) for r in out.relations)
    assert got == sorted(TREFOIL_FINAL)


def test_compare_verdicts():
    p = Presentation([], [parse(t) for t in UNKNOT_D])
    assert compare(p, p) == "identical"
    q = Presentation([], [parse(UNKNOT_FINAL)])
    assert compare(p, q) == "identical-after-simplify"
    tre = simplify(
        framing_transform(
            Presentation(["s_s", "s_t"], [parse(t) for t in TREFOIL_D.values()]),
            3,
            _trefoil_rules(),
        )
    )
    assert compare(tre, simplify(q)) == "inconclusive"
