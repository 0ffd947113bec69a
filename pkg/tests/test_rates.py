import math

import pytest
from hypothesis import assume, given, strategies as st

from decoyrate.channel import DetectorParams, LinkParams, SourceParams, build_yield_table
from decoyrate.mathkernel import binary_entropy
from decoyrate.rates import (
    ECInefficiency,
    RateInputs,
    rate_gllp,
    rate_ideal_single_photon,
    rate_koashi,
    rate_no_decoy_baseline,
)


@st.composite
def rate_inputs(draw):
    Q = draw(st.floats(1e-9, 1.0))
    q0 = draw(st.floats(0.0, 1.0))
    q1 = draw(st.floats(0.0, 1.0 - q0))
    return RateInputs(
        Q=Q,
        E=draw(st.floats(0.0, 0.5)),
        Q0=q0 * Q,
        Q1=q1 * Q,
        e1=draw(st.floats(0.0, 0.5)),
        f_ec=draw(st.floats(1.0, 2.0)),
        multi_frac=draw(st.floats(0.0, 1.0)),
    )


def test_perfect_single_photon_channel():
    inp = RateInputs(Q=0.01, E=0.0, Q0=0.0, Q1=0.01, e1=0.0, f_ec=1.0)
    assert rate_koashi(inp).G == 0.01
    assert rate_gllp(inp).G == 0.01


def test_gllp_without_untagged_photons_is_non_positive():
    inp = RateInputs(Q=0.01, E=0.05, Q0=0.002, Q1=0.0, e1=0.0, f_ec=1.22)
    assert rate_gllp(inp).G == pytest.approx(-0.01 * 1.22 * binary_entropy(0.05), rel=1e-15)


def test_koashi_positive_at_20km():
    t = build_yield_table(SourceParams(0.5), LinkParams(length_km=20), DetectorParams())
    inp = RateInputs(Q=t.Q, E=t.E, Q0=t.Q0, Q1=t.Q1, e1=t.e1, f_ec=1.22)
    assert rate_koashi(inp).G > 0


@given(rate_inputs())
def test_koashi_minus_gllp_is_vacuum_gain(inp):
    diff = rate_koashi(inp).G - rate_gllp(inp).G
    assert abs(diff - inp.Q0) <= 1e-12 * inp.Q


@given(rate_inputs())
def test_breakdown_sums(inp):
    for fn in (rate_koashi, rate_gllp, rate_no_decoy_baseline):
        b = fn(inp)
        assert b.G == pytest.approx(-b.ec_cost + b.vacuum_credit + b.single_photon_term, abs=1e-15 * inp.Q)


@given(rate_inputs())
def test_entropy_linkage(inp):
    b = rate_koashi(inp)
    assert 0.0 <= b.entropy_H <= 1.0 + 1e-15
    assert abs(b.G - inp.Q * (1 - b.entropy_H - inp.f_ec * binary_entropy(inp.E))) <= 1e-12 * inp.Q


@given(rate_inputs(), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_koashi_monotone_in_error_rates(inp, a, b):
    lo, hi = sorted((a, b))
    def G(**kw):
        return rate_koashi(RateInputs(**{**inp.__dict__, **kw})).G
    assert G(E=hi) <= G(E=lo)
    assert G(e1=hi) <= G(e1=lo)


@given(rate_inputs(), st.floats(0.0, 1.0))
def test_koashi_monotone_in_gains(inp, frac):
    room = inp.Q - inp.Q0 - inp.Q1
    assume(room > 0)
    more0 = RateInputs(**{**inp.__dict__, "Q0": inp.Q0 + frac * room})
    more1 = RateInputs(**{**inp.__dict__, "Q1": inp.Q1 + frac * room})
    assert rate_koashi(more0).G >= rate_koashi(inp).G
    assert rate_koashi(more1).G >= rate_koashi(inp).G


def test_ideal_examples():
    assert rate_ideal_single_photon(0.02, 0.0, 1.0).G == 0.02
    assert rate_ideal_single_photon(0.02, 0.5, 1.0).G < 0


def test_no_decoy_examples():
    inp = RateInputs(Q=0.01, E=0.0, f_ec=1.0, multi_frac=0.0)
    assert rate_no_decoy_baseline(inp).G == 0.01
    tagged = RateInputs(Q=0.01, E=0.02, f_ec=1.0, multi_frac=1.0)
    b = rate_no_decoy_baseline(tagged)
    assert b.G <= 0 and b.single_photon_term == 0.0


def test_no_decoy_claims_nothing_past_half_error():
    # E / (1 - multi_frac) = 0.6: without a cutoff 1 - h(0.6) > 0 would be credited
    b = rate_no_decoy_baseline(RateInputs(Q=0.01, E=0.3, f_ec=1.0, multi_frac=0.5))
    assert b.single_photon_term == 0.0


@given(rate_inputs())
def test_no_decoy_reduces_to_ideal_without_multiphotons(inp):
    nd = rate_no_decoy_baseline(RateInputs(**{**inp.__dict__, "multi_frac": 0.0}))
    ideal = rate_ideal_single_photon(inp.Q, inp.E, inp.f_ec)
    assert nd.G == pytest.approx(ideal.G, abs=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [dict(Q=0.1, E=0.6 + 0.5), dict(Q=0.1, E=0.1, Q0=0.08, Q1=0.05), dict(Q=0.1, E=0.1, f_ec=0.9)],
)
def test_rate_inputs_validation(kwargs):
    with pytest.raises(ValueError):
        RateInputs(**kwargs)


def test_ec_inefficiency_table():
    f = ECInefficiency(1.22, [[0.0, 1.1], [0.03, 1.2], [0.05, 1.3]])
    assert f(0.01) == 1.1
    assert f(0.03) == 1.2
    assert f(0.2) == 1.3
    assert ECInefficiency(1.16)(0.4) == 1.16
    with pytest.raises(ValueError):
        ECInefficiency(1.22, [[0.0, 0.9]])
