import math

import numpy as np
import pytest

from decoyrate.channel import DetectorParams, LinkParams, SourceParams, build_yield_table
from decoyrate.montecarlo import (
    MAX_PULSES,
    TallyReport,
    compare_to_analytic,
    iter_outcomes,
    simulate_decoy_session,
    simulate_run,
)
from decoyrate import montecarlo

GYS = DetectorParams()
NOISELESS = DetectorParams(0.045, 0.0, 0.0)


def test_nothing_clicks_without_light_or_dark_counts():
    t = simulate_run(SourceParams(0.0), LinkParams(), NOISELESS, 100_000, seed=1)
    assert t.detected == 0 and t.sifted_detections == 0


def test_dark_counts_give_random_bits():
    det = DetectorParams(0.045, 0.01, 0.01)
    t = simulate_run(SourceParams(0.0), LinkParams(), det, 2_000_000, seed=2)
    assert abs(t.E - 0.5) <= 4 * math.sqrt(0.25 / t.sifted_detections)


def test_agrees_with_analytic_model_at_20km():
    src, link = SourceParams(0.5), LinkParams(length_km=20.0)
    t = simulate_run(src, link, GYS, 10**7, seed=20)
    rep = compare_to_analytic(t, build_yield_table(src, link, GYS))
    assert rep.passed, rep.z


def test_deterministic_for_fixed_seed():
    args = (SourceParams(0.5), LinkParams(length_km=5.0), GYS, 300_000)
    assert simulate_run(*args, seed=9) == simulate_run(*args, seed=9)
    assert simulate_run(*args, seed=9) != simulate_run(*args, seed=10)


def test_sharding_and_workers_do_not_change_results(monkeypatch):
    monkeypatch.setattr(montecarlo, "SHARD_PULSES", 1 << 16)
    args = (SourceParams(0.5), LinkParams(length_km=5.0), GYS, 300_000)
    assert simulate_run(*args, seed=4, workers=1) == simulate_run(*args, seed=4, workers=3)


def test_merge_is_associative_and_commutative():
    src, link = SourceParams(0.5), LinkParams()
    a, b, c = (simulate_run(src, link, GYS, 50_000, seed=s) for s in (1, 2, 3))
    assert (a + b) + c == a + (b + c)
    assert (a + b).to_dict() == (b + a).to_dict() | {"seed": None}


def test_sifted_fraction_is_half():
    t = simulate_run(SourceParams(0.5), LinkParams(), GYS, 2_000_000, seed=5)
    frac = t.sifted_detections / t.detected
    assert abs(frac - 0.5) <= 4 * math.sqrt(0.25 / t.detected)


def test_vacuum_yield_matches_dark_count():
    det = DetectorParams.from_combined_dark(0.045, 1e-3)
    mu = 0.5
    t = simulate_run(SourceParams(mu), LinkParams(), det, 4_000_000, seed=6)
    trials = 0.5 * t.emitted_n[0]
    y0_hat = t.detections_n[0] / trials
    assert abs(y0_hat - det.d) <= 4 * math.sqrt(det.d / trials)


def test_double_clicks():
    outs = list(iter_outcomes(SourceParams(0.3), LinkParams(), NOISELESS, 200_000, seed=7))
    assert not any(o.double_click for o in outs if o.n_emitted <= 1)
    assert all(not o.double_click for o in outs if o.result == "failure")
    bright = DetectorParams(1.0, 0.0, 0.0)
    t = simulate_run(SourceParams(3.0), LinkParams(e_mis=0.1), bright, 200_000, seed=7)
    assert t.double_clicks > 0


def test_outcomes_are_consistent_with_tally():
    src, link = SourceParams(0.5), LinkParams()
    outs = list(iter_outcomes(src, link, GYS, 100_000, seed=8))
    sifted = [o for o in outs if o.result != "failure" and o.alice_basis == o.bob_basis]
    errors = [o for o in sifted if o.result != f"bit{o.alice_bit}"]
    assert 0 < len(errors) < len(sifted)
    assert {o.alice_basis for o in outs} == {"Z", "X"}


def test_standard_error_scales_as_inverse_sqrt():
    src, link = SourceParams(0.5), LinkParams()
    spreads = []
    for n in (20_000, 80_000, 320_000):
        q = [simulate_run(src, link, GYS, n, seed=s).Q for s in range(150)]
        spreads.append(np.std(q, ddof=1))
    # quadrupling the pulses halves the spread; 150 seeds give ~6% error per spread
    for a, b in zip(spreads, spreads[1:]):
        assert 1.5 < a / b < 2.6


def test_pass_rate_over_seeds():
    src, link = SourceParams(0.5), LinkParams(length_km=20.0)
    table = build_yield_table(src, link, GYS)
    passes = sum(compare_to_analytic(simulate_run(src, link, GYS, 10**6, s), table).passed for s in range(100))
    assert passes >= 99


def test_model_mismatch_is_flagged():
    src, link = SourceParams(0.5), LinkParams(length_km=20.0, e_mis=0.033)
    t = simulate_run(src, link, GYS, 10**6, seed=12)
    rep = compare_to_analytic(t, build_yield_table(src, LinkParams(length_km=20.0, e_mis=0.066), GYS))
    assert not rep.passed and "E" in rep.failed


def test_empty_tally_is_insufficient():
    rep = compare_to_analytic(TallyReport(), build_yield_table(SourceParams(0.5), LinkParams(), GYS))
    assert rep.insufficient and not rep.passed


def test_pulse_cap_and_minimum():
    with pytest.raises(MemoryError):
        simulate_run(SourceParams(0.5), LinkParams(), GYS, MAX_PULSES + 1, seed=0)
    with pytest.raises(ValueError):
        simulate_run(SourceParams(0.5), LinkParams(), GYS, 0, seed=0)


def test_decoy_session_streams():
    link = LinkParams(length_km=10.0)
    a = simulate_decoy_session([0.5, 0.05, 0.0], link, GYS, 200_000, seed=1)
    b = simulate_decoy_session([0.5, 0.05, 0.0], link, GYS, 200_000, seed=1)
    assert a == b
    # each intensity draws from its own stream
    c = simulate_decoy_session([0.05], link, GYS, 200_000, seed=1)
    assert c[0] != a[1]
    vac = simulate_decoy_session([0.0], link, GYS, 10**7, seed=2)[0]
    assert abs(vac.Q_mu - 0.5 * GYS.d) <= 4 * math.sqrt(0.5 * GYS.d / 10**7)
    with pytest.raises(ValueError):
        simulate_decoy_session([], link, GYS, 10, seed=0)


def test_tally_round_trip():
    t = simulate_run(SourceParams(0.5), LinkParams(), GYS, 50_000, seed=1)
    assert TallyReport.from_dict(t.to_dict()) == t
