import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubicartin.fields import (
    CubicField,
    EnumerationConfig,
    FieldTable,
    _isomorphic,
    count_prediction,
    dedekind_max_at,
    enumerate_fields,
    export_table,
    field_disc,
    ingest_table,
    is_irreducible,
    poly_disc,
    splitting_type,
    splitting_type_poly,
)
from cubicartin.local import weight_C, weight_K


# ---------------------------------------------------------------------------
# polynomial basics

def test_poly_disc_examples():
    assert poly_disc((0, -1, -1)) == -23
    assert poly_disc((0, 0, 1)) == -27
    assert poly_disc((0, -3, 1)) == 81
    assert poly_disc((-1, -2, -8)) == -2012  # 2^2 * (-503)


def test_is_irreducible():
    assert is_irreducible((0, -1, -1))
    assert is_irreducible((-1, -2, -8))
    assert not is_irreducible((0, 0, -8))  # root 2
    assert not is_irreducible((1, 1, 1))  # root -1
    assert not is_irreducible((0, -4, 0))  # root 0


FIELD_DISCS = [
    ((0, -1, -1), -23),
    ((0, -1, 1), -23),  # x -> -x image of the first
    ((0, 1, -1), -31),
    ((0, 0, -2), -108),
    ((0, 0, -3), -243),
    ((0, 0, -10), -300),  # index 3: poly disc -2700
    ((-1, -2, -8), -503),  # index 2 at the common index divisor
    ((0, -3, 1), 81),  # cyclic
]


@pytest.mark.parametrize("poly,disc", FIELD_DISCS)
def test_field_disc(poly, disc):
    assert field_disc(poly) == disc


def test_field_disc_rejects_reducible():
    with pytest.raises(ValueError, match="reducible"):
        field_disc((0, 0, -8))


def test_dedekind_max_at():
    r2 = dedekind_max_at((-1, -2, -8), 2)
    assert (r2.maximal, r2.index_valuation_removed) == (False, 1)
    r3 = dedekind_max_at((-1, -2, -8), 3)
    assert (r3.maximal, r3.index_valuation_removed) == (True, 0)
    r5 = dedekind_max_at((-1, -10, 17), 5)
    assert (r5.maximal, r5.index_valuation_removed) == (False, 1)
    with pytest.raises(ValueError):
        dedekind_max_at((0, -1, -1), 4)


# ---------------------------------------------------------------------------
# splitting types

# (a2, a1, a0, p, tag), all verified against an independent maximal-order
# factorization before being frozen; includes ramified and index-divisor rows
SPLITTING_ORACLE = [
    (1, -9, 38, 2, "21"), (0, 23, 4, 2, "21"), (1, -3, 29, 2, "121"),
    (-1, -21, 59, 5, "3"), (-1, -18, -43, 2, "3"), (-1, -19, 21, 3, "21"),
    (0, -6, 17, 2, "21"), (1, 22, 5, 7, "3"), (0, 7, -43, 2, "3"),
    (0, -3, 39, 2, "3"), (0, -27, -55, 2, "3"), (-1, 5, 50, 2, "21"),
    (-1, -29, -58, 11, "21"), (-1, -26, 15, 13, "111"), (-1, 22, -51, 2, "3"),
    (0, 28, -1, 11, "121"), (1, 1, -49, 5, "111"), (-1, -5, -20, 2, "21"),
    (1, 26, -25, 3, "121"), (0, 8, 27, 7, "3"), (0, 14, -39, 13, "111"),
    (-1, 22, -51, 13, "3"), (-1, -8, -34, 5, "21"), (-1, 5, 15, 2, "121"),
    (0, -17, -8, 3, "21"), (1, 8, 14, 2, "121"), (0, 23, 27, 3, "111"),
    (1, 26, 48, 5, "3"), (-1, 10, -44, 13, "3"), (1, -23, 19, 3, "21"),
    (-1, -14, -48, 5, "3"), (0, -1, -14, 3, "3"), (-1, -27, -48, 13, "3"),
    (1, -4, -44, 2, "121"), (-1, 29, 15, 11, "111"), (1, -21, -44, 2, "21"),
    (1, 5, 28, 3, "3"), (0, 29, 21, 5, "21"), (-1, 3, -36, 2, "21"),
    (-1, 19, -9, 3, "121"), (1, 17, 30, 3, "21"), (0, 21, -28, 5, "21"),
    (1, -15, 39, 3, "121"), (-1, -8, 38, 3, "21"), (0, 2, -31, 2, "21"),
    (1, 14, -32, 7, "3"), (-1, 7, 39, 2, "13"), (1, -23, -26, 3, "21"),
    (1, 16, -11, 5, "3"), (1, 5, 19, 3, "3"), (-1, 5, -3, 2, "13"),
    (-1, 9, -40, 3, "21"), (0, 22, 36, 11, "21"), (1, 3, -15, 2, "13"),
    (0, -26, 9, 3, "21"), (-1, 11, 21, 13, "21"), (-1, 0, 24, 2, "121"),
    (-1, -16, -38, 3, "111"), (0, 27, -43, 3, "13"), (0, 30, 50, 3, "121"),
    (1, 17, 37, 2, "121"), (0, 0, 5, 3, "13"),
]


def test_splitting_type_oracle():
    for b, c, d, p, tag in SPLITTING_ORACLE:
        assert splitting_type_poly((b, c, d), p) == tag, (b, c, d, p)


def test_splitting_common_index_divisor():
    # 2 divides the index of every generator, yet splits completely
    f = (-1, -2, -8)
    assert splitting_type_poly(f, 2) == "111"
    assert splitting_type_poly(f, 3) == "3"
    assert splitting_type_poly(f, 5) == "21"
    assert splitting_type_poly(f, 503) == "121"


def test_splitting_pure_cubic():
    f = (0, 0, -2)  # disc -108
    assert splitting_type_poly(f, 2) == "13"
    assert splitting_type_poly(f, 3) == "13"
    assert splitting_type_poly(f, 5) == "21"
    assert splitting_type_poly(f, 31) == "111"  # 2 is a cube mod 31
    g = (0, 0, -10)  # disc -300: tame quadratic ramification at 3
    assert splitting_type_poly(g, 3) == "121"
    assert splitting_type_poly(g, 2) == "13"
    assert splitting_type_poly(g, 5) == "13"


X3_X_1_FINGERPRINT = {
    2: "3", 3: "3", 5: "21", 7: "21", 11: "21", 13: "3", 17: "21", 19: "21",
    23: "121", 29: "3", 31: "3", 37: "21", 41: "3", 43: "21", 47: "3",
}


def test_splitting_type_field_fingerprint():
    table = enumerate_fields("-", 600)
    f23 = next(f for f in table.fields if f.disc == -23)
    assert f23.fingerprint  # enumerated tables carry the p < 200 fingerprint
    for p, tag in X3_X_1_FINGERPRINT.items():
        assert splitting_type(f23, p) == tag
    # beyond the fingerprint, falls back to the polynomial route
    assert splitting_type(f23, 211) == splitting_type_poly(f23.poly, 211)
    bare = CubicField(disc=-23, poly=(0, -1, -1))
    for p, tag in X3_X_1_FINGERPRINT.items():
        assert splitting_type(bare, p) == tag


# ---------------------------------------------------------------------------
# isomorphism

def test_isomorphic():
    assert _isomorphic((0, -1, -1), (0, -1, -1))
    assert _isomorphic((0, -1, -1), (0, -1, 1))  # x -> -x
    assert _isomorphic((0, -1, -1), (-1, -10, 17))  # index-5 generator
    assert not _isomorphic((0, -1, -1), (0, 1, -1))  # disc -23 vs -31
    assert not _isomorphic((0, 0, -2), (0, 0, -3))


# ---------------------------------------------------------------------------
# enumeration

MINUS_DISCS_600 = [
    -23, -31, -44, -59, -76, -83, -87, -104, -107, -108, -116, -135, -139,
    -140, -152, -172, -175, -199, -200, -204, -211, -212, -216, -231, -239,
    -243, -244, -247, -255, -268, -283, -300, -307, -324, -327, -331, -335,
    -339, -351, -356, -364, -367, -379, -411, -419, -424, -431, -436, -439,
    -440, -451, -459, -460, -472, -484, -491, -492, -499, -503, -515, -516,
    -519, -524, -527, -543, -547, -563, -567, -588,
]

PLUS_DISCS_1300 = [
    148, 229, 257, 316, 321, 404, 469, 473, 564, 568, 621, 697, 733, 756,
    761, 785, 788, 837, 892, 940, 985, 993, 1016, 1076, 1101, 1129, 1229,
    1257,
]


@pytest.fixture(scope="module")
def table_minus_600():
    return enumerate_fields("-", 600)


def test_enumerate_minus(table_minus_600):
    discs = [f.disc for f in table_minus_600.fields]
    assert discs == MINUS_DISCS_600
    assert sum(1 for d in discs if d > -300) == 31
    table_minus_600.validate()


def test_enumerate_plus():
    table = enumerate_fields("+", 1300)
    discs = [f.disc for f in table.fields]
    assert discs == PLUS_DISCS_1300
    assert sum(1 for d in discs if d < 1000) == 22
    table.validate()


def test_enumerate_counts_track_prediction():
    # measured once and pinned; the 10% band is the correctness assertion
    nm = len(enumerate_fields("-", 10000).fields)
    np_ = len(enumerate_fields("+", 10000).fields)
    assert nm == 1520
    assert np_ == 366
    pm = count_prediction("-", 10000)
    pp = count_prediction("+", 10000)
    assert abs(nm / (pm["main"] + pm["secondary"]) - 1) < 0.10
    assert abs(np_ / (pp["main"] + pp["secondary"]) - 1) < 0.10


def test_enumerate_field_invariants(table_minus_600):
    for f in table_minus_600.fields:
        assert f.disc % 4 in (0, 1)
        pd = poly_disc(f.poly)
        assert pd % f.disc == 0
        ratio = pd // f.disc
        assert math.isqrt(ratio) ** 2 == ratio
    # ramification at p >= 5 is visible in the discriminant
    for f in table_minus_600.fields[:25]:
        for p in (5, 7, 11, 13):
            tag = splitting_type(f, p)
            if f.disc % p == 0:
                assert tag in ("121", "13")
            else:
                assert tag in ("111", "21", "3")
    # fingerprints agree with the direct polynomial computation
    prs = (2, 3, 5, 7, 11, 13)
    for f in table_minus_600.fields[::7]:
        for pos, p in enumerate(prs):
            assert f.fingerprint[pos] == splitting_type_poly(f.poly, p)


def test_enumerate_validations():
    with pytest.raises(ValueError, match="signature"):
        enumerate_fields("x", 100)
    with pytest.raises(ValueError, match="at least 2"):
        enumerate_fields("-", 1)
    with pytest.raises(ValueError, match="ceiling"):
        enumerate_fields("-", 600, EnumerationConfig(ceiling=500))


def test_table_validate_errors(table_minus_600):
    good = table_minus_600.fields
    with pytest.raises(ValueError, match="wrong sign"):
        FieldTable("+", 600, list(good)).validate()
    with pytest.raises(ValueError, match="not sorted"):
        FieldTable("-", 600, [good[1], good[0]]).validate()
    with pytest.raises(ValueError, match=">= bound"):
        FieldTable("-", 23, [good[0]]).validate()
    with pytest.raises(ValueError, match="signature"):
        FieldTable("minus", 600, []).validate()


def test_cubic_field_validate():
    with pytest.raises(ValueError, match="reducible"):
        CubicField(disc=-23, poly=(0, 0, -8)).validate()
    with pytest.raises(ValueError, match="not 0,1 mod 4"):
        CubicField(disc=-25, poly=(0, -1, -1)).validate()
    with pytest.raises(ValueError, match="Galois"):
        CubicField(disc=81, poly=(0, -3, 1)).validate()
    with pytest.raises(ValueError, match="not a multiple"):
        CubicField(disc=-31, poly=(0, -1, -1)).validate()
    with pytest.raises(ValueError, match="fingerprint"):
        CubicField(disc=-23, poly=(0, -1, -1), fingerprint=("2",)).validate()


# ---------------------------------------------------------------------------
# persistence

def test_export_ingest_roundtrip(table_minus_600, tmp_path):
    plain = tmp_path / "minus.csv"
    export_table(table_minus_600, plain)
    text1 = plain.read_text()
    assert text1.startswith("disc,a2,a1,a0\n-23,")
    back = ingest_table(plain)
    assert [f.disc for f in back.fields] == MINUS_DISCS_600
    assert [f.poly for f in back.fields] == [f.poly for f in table_minus_600.fields]
    export_table(back, plain)
    assert plain.read_text() == text1  # byte-stable round trip

    tagged = tmp_path / "minus_fp.csv"
    export_table(table_minus_600, tagged, fingerprints=True)
    text2 = tagged.read_text()
    back2 = ingest_table(tagged)
    assert [f.fingerprint for f in back2.fields] == [
        f.fingerprint for f in table_minus_600.fields
    ]
    export_table(back2, tagged, fingerprints=True)
    assert tagged.read_text() == text2


@pytest.mark.parametrize(
    "body,msg",
    [
        ("a2,a1,a0\n", "line 1"),
        ("disc,a2,a1,a0\n-23,0,-1,-1\n\n-31,0,1,-1\n", "line 3: blank"),
        ("disc,a2,a1,a0\n-23,0,-1\n", "line 2: expected 4 columns"),
        ("disc,a2,a1,a0\n-23,0,-1,o\n", "line 2"),
        ("disc,a2,a1,a0,p2\n-23,0,-1,-1,2\n", "line 2: unknown splitting tag"),
        ("disc,a2,a1,a0\n-27,0,0,-8\n", "reducible"),
        ("disc,a2,a1,a0\n-31,0,-1,-1\n", "stored disc -31 but field disc -23"),
        ("disc,a2,a1,a0\n-23,0,-1,-1\n-23,-1,-10,17\n", "isomorphic"),
        ("disc,a2,a1,a0\n", "no fields"),
    ],
)
def test_ingest_rejects_malformed(tmp_path, body, msg):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValueError, match=msg):
        ingest_table(path)


# ---------------------------------------------------------------------------
# count predictions

# (X, signature) -> (main, main + secondary)
PREDICTED_COUNTS = {
    (10_000, "+"): (693.26, 375.08),
    (10_000, "-"): (2079.77, 1528.67),
    (50_000, "+"): (3466.28, 2249.69),
    (50_000, "-"): (10398.84, 8291.64),
    (100_000, "+"): (6932.56, 4764.84),
    (100_000, "-"): (20797.68, 17043.08),
    (1_000_000, "+"): (69325.61, 54557.09),
    (1_000_000, "-"): (207976.84, 182397.01),
}


@pytest.mark.parametrize("key,want", sorted(PREDICTED_COUNTS.items()))
def test_count_prediction_values(key, want):
    X, sig = key
    pred = count_prediction(sig, X)
    assert pred["main"] == pytest.approx(want[0], abs=0.02)
    assert pred["main"] + pred["secondary"] == pytest.approx(want[1], abs=0.02)


def test_count_prediction_local_spec():
    base = count_prediction("-", 10_000)
    split2 = count_prediction("-", 10_000, {2: "111"})
    assert split2["main"] == pytest.approx(base["main"] * 2 / 21, rel=1e-12)
    k2 = float(weight_K(2)["111"])
    assert split2["secondary"] == pytest.approx(base["secondary"] * k2, rel=1e-12)
    both = count_prediction("+", 10_000, {2: "111", 3: "21"})
    c = float(weight_C(2)["111"] * weight_C(3)["21"])
    assert both["main"] == pytest.approx(count_prediction("+", 10_000)["main"] * c, rel=1e-12)


def test_count_prediction_validations():
    with pytest.raises(ValueError, match="signature"):
        count_prediction("0", 100.0)
    with pytest.raises(ValueError, match="not prime"):
        count_prediction("-", 100.0, {4: "111"})
    with pytest.raises(ValueError, match="unknown splitting tag"):
        count_prediction("-", 100.0, {2: "z"})


# ---------------------------------------------------------------------------
# independent cross-checks (sympy is a test-only dependency)

def _sympy_tag(T, p):
    from sympy.polys.numberfields.primes import prime_decomp

    primes = prime_decomp(p, T)
    if len(primes) == 3:
        return "111"
    if len(primes) == 1:
        return "3" if primes[0].f == 3 else "13"
    return "121" if any(q.e == 2 for q in primes) else "21"


def test_against_sympy_maximal_orders():
    import random

    from sympy import Poly, Symbol, ZZ
    from sympy.polys.numberfields.basis import round_two

    x = Symbol("x")
    rng = random.Random(20240817)
    polys = [(0, 0, -2), (0, 0, -10), (0, 0, -17), (-1, -2, -8)]
    while len(polys) < 28:
        cand = (rng.randint(-3, 3), rng.randint(-30, 30), rng.randint(-30, 30))
        if is_irreducible(cand):
            polys.append(cand)
    for b, c, d in polys:
        T = Poly(x**3 + b * x**2 + c * x + d, x, domain=ZZ)
        _, dk = round_two(T)
        assert field_disc((b, c, d)) == int(dk), (b, c, d)
        index_sq = poly_disc((b, c, d)) // int(dk)
        for p in (2, 3, 5, 7):
            if index_sq % p == 0:
                # sympy's prime_decomp is unreliable at index divisors; those
                # rows are pinned in SPLITTING_ORACLE instead
                continue
            assert splitting_type_poly((b, c, d), p) == _sympy_tag(T, p), (b, c, d, p)


@given(
    b=st.integers(-4, 4),
    c=st.integers(-25, 25),
    d=st.integers(-40, 40),
)
@settings(max_examples=80, deadline=None)
def test_field_disc_divides_poly_disc(b, c, d):
    poly = (b, c, d)
    if not is_irreducible(poly):
        return
    disc = field_disc(poly)
    pd = poly_disc(poly)
    assert disc % 4 in (0, 1)
    assert pd % disc == 0
    ratio = pd // disc
    assert ratio > 0 and math.isqrt(ratio) ** 2 == ratio
