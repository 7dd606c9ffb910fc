import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlnclab import kernels
from rlnclab.engine import (
    CoefficientAssignment,
    CoefficientSetMismatch,
    ErasurePattern,
    NotButterfly,
    butterfly_code,
    code_from_indices,
    decoding_report,
    propagate,
    rank,
    sample_code,
    structural_factorization_check,
)
from rlnclab.field import field_create
from rlnclab.network import make_network
from rlnclab.rng import RandomStream


def kernel_vec(kt, cid):
    return kt.as_indices(cid)


# -- sampling -------------------------------------------------------------------


def test_sample_code_has_twelve_entries(butterfly, gf2):
    assert len(sample_code(butterfly, gf2, RandomStream(0))) == 12


def test_sample_code_is_reproducible(butterfly, gf5):
    a = sample_code(butterfly, gf5, RandomStream(77))
    b = sample_code(butterfly, gf5, RandomStream(77))
    assert a.entries == b.entries


def test_source_kernel_invertible_fraction(butterfly, gf2):
    rng = RandomStream(5)
    n = 10**5
    hits = 0
    for _ in range(n):
        c = sample_code(butterfly, gf2, rng)
        det = c[("d1", "e1")] * c[("d2", "e2")] - c[("d1", "e2")] * c[("d2", "e1")]
        hits += bool(det)
    sigma = np.sqrt(3 / 8 * 5 / 8 / n)
    assert abs(hits / n - 3 / 8) < 5 * sigma


# -- propagation ----------------------------------------------------------------


def test_propagate_identity_source_all_ones(butterfly, gf2):
    kt = propagate(butterfly, butterfly_code(gf2))
    assert kernel_vec(kt, "e3") == (1, 0)
    assert kernel_vec(kt, "e6") == (0, 1)
    for e in ("e7", "e8", "e9"):
        assert kernel_vec(kt, e) == (1, 1)
    assert kernel_vec(kt, "d1") == (1, 0) and kernel_vec(kt, "d2") == (0, 1)


def test_propagate_with_e5_erased(butterfly, gf2):
    kt = propagate(butterfly, butterfly_code(gf2), ErasurePattern.of("e5"))
    assert kernel_vec(kt, "e5") == (0, 0)
    assert kernel_vec(kt, "e7") == (1, 0)
    assert kernel_vec(kt, "e8") == (1, 0) and kernel_vec(kt, "e9") == (1, 0)


def test_propagate_all_erased(butterfly, gf3):
    code = sample_code(butterfly, gf3, RandomStream(1))
    kt = propagate(butterfly, code, ErasurePattern(frozenset(c.id for c in butterfly.real_channels)))
    assert all(kernel_vec(kt, c.id) == (0, 0) for c in butterfly.real_channels)


def test_propagate_rejects_foreign_code(butterfly, gf2):
    code = CoefficientAssignment({("d1", "e1"): gf2(1)}, gf2)
    with pytest.raises(CoefficientSetMismatch):
        propagate(butterfly, code)


def test_kernels_match_hand_expanded_expressions(butterfly, gf5):
    code = sample_code(butterfly, gf5, RandomStream(11))
    k = lambda a, b: code[(a, b)]  # noqa: E731
    kt = propagate(butterfly, code)
    f1 = (k("d1", "e1"), k("d2", "e1"))
    f2 = (k("d1", "e2"), k("d2", "e2"))
    f7 = tuple(x * k("e1", "e4") * k("e4", "e7") + y * k("e2", "e5") * k("e5", "e7") for x, y in zip(f1, f2))
    assert kt["e1"] == f1 and kt["e2"] == f2
    assert kt["e3"] == tuple(x * k("e1", "e3") for x in f1)
    assert kt["e7"] == f7
    assert kt["e9"] == tuple(x * k("e7", "e9") for x in f7)


# -- decoding -------------------------------------------------------------------


def test_decoding_identity_example(butterfly, gf2):
    rep = decoding_report(butterfly, propagate(butterfly, butterfly_code(gf2)))
    assert rep["t1"].columns == ("e3", "e8") and rep["t2"].columns == ("e6", "e9")
    assert rep["t1"].rank == 2 and rep["t2"].rank == 2
    assert rep.all_succeed


def test_decoding_all_zero(butterfly, gf3):
    code = butterfly_code(gf3, source_kernel=((0, 0), (0, 0)), default=0)
    rep = decoding_report(butterfly, propagate(butterfly, code))
    assert all(d.rank == 0 and not d.success for d in rep.sinks.values())


def test_decoding_e5_erased(butterfly, gf2):
    rep = decoding_report(butterfly, propagate(butterfly, butterfly_code(gf2), ErasurePattern.of("e5")))
    assert rep["t1"].rank == 1 and not rep["t1"].success
    assert rep["t2"].success


def test_rank_examples(gf3):
    f = gf3
    m = lambda rows: [[f(x) for x in r] for r in rows]  # noqa: E731
    assert rank(m([[1, 2], [2, 1]])) == 1  # second row = 2 * first mod 3
    assert rank(m([[1, 0, 1], [0, 1, 1]])) == 2
    assert rank(m([[0, 0], [0, 0]])) == 0


def _brute_rank(rows, f):
    """Largest k such that some k x k minor is nonzero (determinant by permutations)."""
    n_r, n_c = len(rows), len(rows[0])
    for k in range(min(n_r, n_c), 0, -1):
        for rs in itertools.combinations(range(n_r), k):
            for cs in itertools.combinations(range(n_c), k):
                det = f(0)
                for perm in itertools.permutations(range(k)):
                    sign = 1
                    for i in range(k):
                        for j in range(i + 1, k):
                            if perm[i] > perm[j]:
                                sign = -sign
                    term = f.from_index(1) if sign > 0 else -f.from_index(1)
                    for i in range(k):
                        term = term * rows[rs[i]][cs[perm[i]]]
                    det = det + term
                if det:
                    return k
    return 0


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([(2, 1), (3, 1), (2, 2), (5, 1), (3, 2)]), st.data())
def test_rank_matches_minor_oracle(pm, data):
    f = field_create(*pm)
    r = data.draw(st.integers(1, 3))
    c = data.draw(st.integers(1, 4))
    rows = [[f.from_index(data.draw(st.integers(0, f.order - 1))) for _ in range(c)] for _ in range(r)]
    assert rank(rows) == _brute_rank(rows, f)
    # column permutation does not change rank
    perm = data.draw(st.permutations(range(c)))
    assert rank([[row[j] for j in perm] for row in rows]) == rank(rows)


# -- structural factorization ---------------------------------------------------


def test_factorization_identity_example(butterfly, gf2):
    code = butterfly_code(gf2)
    assert structural_factorization_check(code)
    k = lambda a, b: code[(a, b)].value  # noqa: E731
    b1 = [[k("e1", "e3"), k("e1", "e4") * k("e4", "e7") * k("e7", "e8")], [0, k("e2", "e5") * k("e5", "e7") * k("e7", "e8")]]
    assert b1 == [[1, 1], [0, 1]]


def test_factorization_all_gf2_codes(butterfly, gf2):
    for digits in itertools.product(range(2), repeat=12):
        assert structural_factorization_check(code_from_indices(butterfly, gf2, digits))


def test_factorization_random_gf3(butterfly, gf3):
    rng = RandomStream(31)
    for _ in range(10**4):
        assert structural_factorization_check(sample_code(butterfly, gf3, rng))


def test_factorization_rejects_other_networks(gf2):
    spec = make_network(["s", "t"], [("e1", "s", "t"), ("e2", "s", "t")], "s", ["t"], 2)
    with pytest.raises(NotButterfly):
        structural_factorization_check(sample_code(spec, gf2, RandomStream(0)))


# -- properties checked over whole code spaces ----------------------------------


@pytest.fixture(scope="module")
def gf2_outcomes(butterfly, gf2):
    """Success bitmasks for every GF(2) code (4096) under every erasure pattern (512)."""
    prog = kernels.compile_network(butterfly)
    codes = np.array(list(itertools.product(range(2), repeat=12)))[:, ::-1]
    n_codes = len(codes)
    coeffs = np.repeat(codes, 512, axis=0)
    masks = np.tile(np.arange(512, dtype=np.int64), n_codes)
    out = kernels.batch_outcomes(prog, gf2, coeffs, masks).reshape(n_codes, 512)
    return prog, out


def test_erasure_irrelevance_exhaustive(gf2_outcomes):
    prog, out = gf2_outcomes
    bit = {cid: i for i, cid in enumerate(prog.real_ids)}
    masks = np.arange(512)
    for sink_bit, irrelevant in ((0, ("e4", "e6", "e9")), (1, ("e3", "e5", "e8"))):
        ok = (out >> sink_bit) & 1
        for e in irrelevant:
            toggled = masks ^ (1 << bit[e])
            assert np.array_equal(ok, ok[:, toggled]), e


def test_erasure_monotonicity_exhaustive(gf2_outcomes):
    _, out = gf2_outcomes
    masks = np.arange(512)
    for b in range(9):
        grow = masks[(masks >> b) & 1 == 0]
        for s in range(2):
            before = (out[:, grow] >> s) & 1
            after = (out[:, grow | (1 << b)] >> s) & 1
            assert np.all(after <= before)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_scaling_k13_is_harmless(butterfly, q):
    f = field_create(*{2: (2, 1), 3: (3, 1), 4: (2, 2)}[q])
    prog = kernels.compile_network(butterfly)
    k13 = butterfly.adjacent_pairs().index(("e1", "e3"))
    rng = RandomStream(q)
    base = rng.integers(q, size=(4000, 12))
    ref = kernels.batch_outcomes(prog, f, base) & 1
    for c in range(1, q):
        scaled = base.copy()
        scaled[:, k13] = f.tables.mul[c, scaled[:, k13]]
        assert np.array_equal(kernels.batch_outcomes(prog, f, scaled) & 1, ref)


# -- reference engine vs bulk kernels on random networks -------------------------


@st.composite
def coded_networks(draw):
    n = draw(st.integers(3, 6))
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) for _ in range(draw(st.integers(0, 2)))]
    if not edges:
        edges = [(0, n - 1)]
    chans = [(f"e{k + 1}", f"v{a}", f"v{b}") for k, (a, b) in enumerate(edges)]
    reachable = {0}
    for a, b in edges:
        if a in reachable:
            reachable.add(b)
    sinks = sorted(reachable - {0}) or [n - 1]
    sinks = draw(st.lists(st.sampled_from(sinks), min_size=1, max_size=3, unique=True))
    rate = draw(st.integers(1, 3))
    spec = make_network([f"v{i}" for i in range(n)], chans, "v0", [f"v{s}" for s in sinks], rate)
    pm = draw(st.sampled_from([(2, 1), (3, 1), (2, 2), (5, 1), (3, 2)]))
    return spec, field_create(*pm), draw(st.integers(0, 2**32))


@settings(max_examples=120, deadline=None)
@given(coded_networks())
def test_reference_engine_agrees_with_kernels(case):
    spec, f, seed = case
    prog = kernels.compile_network(spec)
    rng = RandomStream(seed)
    coeffs = rng.integers(f.order, size=(6, prog.n_pairs))
    masks = rng.integers(1 << prog.n_real, size=6)
    for name in kernels.available_backends():
        got = kernels.batch_outcomes(prog, f, coeffs, masks, backend=name)
        for t in range(6):
            erased = [cid for b, cid in enumerate(prog.real_ids) if int(masks[t]) >> b & 1]
            rep = decoding_report(spec, propagate(spec, code_from_indices(spec, f, coeffs[t]), ErasurePattern.of(*erased)))
            want = sum(1 << s for s, sink in enumerate(spec.sinks) if rep[sink].success)
            assert got[t] == want, name
