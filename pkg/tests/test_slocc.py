import math

import jsonschema
import numpy as np
import pytest

from conftest import random_scheme
from sloccgen import catalog
from sloccgen.detlike import Statistics
from sloccgen.errors import DimensionMismatch, OddNUnsupported, UnsupportedClass, VanishingState
from sloccgen.scheme import DeformedQubit, Scheme, UP, DOWN, string_to_config
from sloccgen.slocc import (
    STATE_SCHEMA,
    PostSelectedState,
    align_phase,
    cluster_stabilizer_check,
    fidelity,
    genuine_threshold,
    make_target,
    pauli_expectation,
    post_select,
    self_overlap,
    state_from_dict,
    state_to_dict,
)

B, F = Statistics.BOSON, Statistics.FERMION


def test_complete_w_three_bosons():
    out = post_select(catalog.w_complete(3, B))
    assert out.probability == pytest.approx(2 / 9, abs=1e-12)
    for cfg in ("udd", "dud", "ddu"):
        assert out.amplitude(cfg) == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert sum(abs(a) ** 2 for a in out.amps.values()) == pytest.approx(1)


def test_complete_w_three_fermions_vanishes():
    with pytest.raises(VanishingState):
        post_select(catalog.w_complete(3, F))


def test_ghz_four_bosons():
    out = post_select(catalog.ghz_scheme(4, B))
    assert out.probability == pytest.approx(1 / 8, abs=1e-12)
    assert abs(out.amplitude("uuuu")) == pytest.approx(1 / math.sqrt(2))
    assert abs(out.amplitude("dddd")) == pytest.approx(1 / math.sqrt(2))


def test_fidelity_examples():
    t = make_target("w", 4)
    assert fidelity(PostSelectedState(4, B, t.vector * 3, 9.0, 10.0), t) == pytest.approx(1)
    assert fidelity(post_select(catalog.w_qft(4, B)), t) == pytest.approx(0, abs=1e-12)
    assert fidelity(post_select(catalog.w_chain4(B)), t) == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        fidelity(post_select(catalog.w_complete(3, B)), t)


def test_thresholds():
    assert genuine_threshold("w", 4) == pytest.approx(3 / 4)
    assert genuine_threshold("dicke", 4) == pytest.approx(2 / 3)
    for n in (3, 4, 7):
        assert genuine_threshold("ghz", n) == 0.5
    assert genuine_threshold("cluster", 6) == 0.5
    with pytest.raises(OddNUnsupported):
        genuine_threshold("dicke", 5)
    with pytest.raises(UnsupportedClass):
        genuine_threshold("graph", 4)


def test_targets():
    w = make_target("w", 3)
    assert sorted(w.amps) == sorted(string_to_config(c) for c in ("udd", "dud", "ddu"))
    assert all(a == pytest.approx(1 / math.sqrt(3)) for a in w.amps.values())
    d = make_target("dicke", 4)
    assert len(d.amps) == 6 and all(a == pytest.approx(1 / math.sqrt(6)) for a in d.amps.values())
    g = make_target("ghz", 2)
    assert set(g.amps) == {string_to_config("uu"), string_to_config("dd")}
    c = make_target("cluster", 4)
    assert len(c.amps) == 4
    with pytest.raises(OddNUnsupported):
        make_target("cluster", 5)


def test_cluster_stabilizer_check():
    class Wrap:
        def __init__(self, t):
            self.vector, self.n = t.vector, t.n

    for n in (4, 6, 8):
        vals = cluster_stabilizer_check(Wrap(make_target("cluster", n)))
        assert all(abs(abs(v) - 1) < 1e-12 for v in vals)
    ghz = cluster_stabilizer_check(Wrap(make_target("ghz", 4)))
    assert min(abs(v) for v in ghz) < 1
    uniform = np.full(16, 0.25)
    vals = [pauli_expectation(uniform, 4, {0: "X", 1: "Z"}), pauli_expectation(uniform, 4, {2: "X"})]
    assert all(-1 <= v <= 1 for v in vals)


@pytest.mark.parametrize("n", [4, 6])
@pytest.mark.parametrize("stats", [B, F])
def test_cluster_scheme_outputs_are_stabilized(n, stats):
    vals = cluster_stabilizer_check(post_select(catalog.cluster_scheme(n, stats)))
    assert all(abs(abs(v) - 1) < 1e-10 for v in vals)


def test_orthogonal_qubits_have_unit_nu():
    s = Scheme(2, (DeformedQubit(0, {(0, UP): 1}), DeformedQubit(1, {(1, DOWN): 1})), F)
    assert self_overlap(s) == 1.0
    out = post_select(s)
    assert out.probability == 1.0


@pytest.mark.parametrize("stats", [B, F])
def test_probability_in_unit_interval(rng, stats):
    for n in (2, 3, 4):
        for _ in range(333):
            s = random_scheme(rng, n, stats)
            try:
                p = post_select(s).probability
            except VanishingState:
                continue
            assert -1e-12 <= p <= 1 + 1e-12


@pytest.mark.parametrize("stats", [B, F])
def test_qubit_swap_invariance(rng, stats):
    for _ in range(30):
        s = random_scheme(rng, 4, stats, density=0.8)
        a = post_select(s)
        b = post_select(s.permuted([1, 0, 2, 3]))
        assert b.probability == pytest.approx(a.probability, abs=1e-12)
        np.testing.assert_allclose(b.vector, stats.eta * a.vector, atol=1e-10)


@pytest.mark.parametrize("stats", [B, F])
def test_local_phase_is_global(rng, stats):
    for _ in range(30):
        s = random_scheme(rng, 3, stats, density=0.8)
        t = s.tensor.copy()
        t[1] *= np.exp(0.7j)
        a = post_select(s)
        b = post_select(Scheme.from_array(t, stats))
        assert b.probability == pytest.approx(a.probability, abs=1e-12)
        np.testing.assert_allclose(align_phase(b.vector), align_phase(a.vector), atol=1e-10)


def test_state_json_round_trip():
    out = post_select(catalog.dicke_star4(F))
    d = state_to_dict(out)
    jsonschema.validate(d, STATE_SCHEMA)
    back = state_from_dict(d)
    np.testing.assert_allclose(back.vector, out.vector, atol=1e-15)
    assert back.probability == pytest.approx(out.probability)
