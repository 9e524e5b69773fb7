"""Harness-level tests: batch recording, named checks, study wiring.

The load-bearing test here is the replay equivalence: the flag/size
arrays recorded by record_batches, replayed through the array kernel
with the same seed, must reproduce the full engine's sample slot for
slot. That equality is what lets the big statistical studies run on the
kernel and still count as evidence about the engine.
"""

from __future__ import annotations

import numpy as np
import pytest

from joinsample.config import packaged_query
from joinsample.datagen import fk_events, uniform_events
from joinsample.engine import Engine
from joinsample.kernels import run_batched
from joinsample.validate import (NAMED_CHECKS, delta_equivalence_study,
                                 final_results, grouping_study, hub_stream,
                                 propagation_study, record_batches,
                                 rswp_density_study, run_named_checks,
                                 spread_flags, stop_count_study, stop_layouts,
                                 uniform_instance, uniformity_report)

ALL_SHAPES = ("two_table", "line3", "line4", "star3", "wide_middle",
              "hub_chains", "triangle", "dumbbell", "fk_chain")


def small_stream(shape, n=60, dom=6, seed=11):
    query = packaged_query(shape)
    gen = fk_events if shape == "fk_chain" else uniform_events
    return query, gen(query, n, dom, seed)


@pytest.mark.parametrize("shape", ALL_SHAPES)
def test_replay_matches_engine(shape):
    query, events = small_stream(shape)
    rec = record_batches(query, events)
    cum = np.zeros(len(rec.flags) + 1, dtype=np.int64)
    np.cumsum(rec.flags, out=cum[1:])
    for k, seed in [(3, 5), (9, 41)]:
        eng = Engine(query, k, seed)
        for rel, vals in events:
            eng.feed(rel, vals)
        positions, counters = run_batched(rec.flags, rec.sizes, k, seed)
        replayed = [rec.reals[cum[p]] for p in positions]
        assert replayed == eng.snapshot()["samples"]
        r = eng.reservoir
        assert counters["next_calls"] == r.next_calls
        assert counters["skip_calls"] == r.skip_calls
        assert counters["skip_stops"] == r.skip_stops
        assert counters["dummy_hits"] == r.dummy_hits
        assert counters["replacements"] == r.replacements
        assert int(rec.sizes.sum()) == eng.join_size_total


def test_record_totals_and_prefix():
    query, events = small_stream("line3")
    rec = record_batches(query, events)
    assert len(rec.flags) == int(rec.sizes.sum())
    assert int(rec.flags.sum()) == len(rec.reals)
    assert rec.real_prefix[-1] == len(rec.reals)
    assert len(rec.event_batches) == len(events)
    assert rec.event_batches[-1] == len(rec.sizes)
    assert set(rec.reals) == final_results(query, events)


def test_checkpoints_for_fractions():
    query, events = small_stream("line3")
    rec = record_batches(query, events)
    cps = rec.checkpoints_for((0.25, 0.5, 1.0))
    assert cps == sorted(cps)
    assert cps[-1] == len(rec.sizes)
    assert rec.reals_at(cps[-1]) == len(rec.reals)


def test_uniformity_report_shape():
    query, events = small_stream("two_table", n=30, dom=4, seed=3)
    rec = record_batches(query, events)
    rep = uniformity_report(rec, k=5, trials=4000, seed=99)
    assert rep["df"] == rep["m"][-1] or rep["m"][-1] <= 5
    assert len(rep["checkpoints"]) == 3
    assert rep["ok"]


def test_uniform_instance_band():
    for shape, (lo, hi) in [("two_table", (25, 60)), ("triangle", (6, 40))]:
        query = packaged_query(shape)
        events = uniform_instance(shape, seed=5)
        m = len(final_results(query, events))
        assert lo <= m <= hi


def test_stop_layouts():
    dense, alternating, sparse = (stop_layouts(200)[name]
                                  for name in ("dense", "alternating",
                                               "sparse"))
    assert int(dense.sum()) == 200
    assert int(alternating.sum()) == 100
    assert int(sparse.sum()) == 2
    assert alternating[0] == 1 and alternating[1] == 0


def test_spread_flags_positions():
    flags = spread_flags(10, 0.3)
    assert np.flatnonzero(flags).tolist() == [3, 6, 9]
    assert int(spread_flags(500, 1.0).sum()) == 500
    assert int(spread_flags(500, 0.0).sum()) == 0


def test_named_check_registry():
    assert sorted(NAMED_CHECKS) == [
        "batch_concat_quarter", "batch_histogram", "batch_split_equivalence",
        "classic_inclusion_small", "density_alternating",
        "dumbbell_sim_counts", "fk_chain_collapse", "ghd_disjointness",
        "index_first_insert", "mutation_detection", "oracle_self_consistency",
        "overcount_line3_100", "propagation_bound_2000",
        "rebucket_doublings", "rswp_all_real_inclusion",
        "rswp_alternating_inclusion", "rswp_density_ratio",
        "skip_geometric_mean", "stop_formula_alternating",
        "stream_round_trip", "sweep_matches_delta", "triangle_closing_edge",
        "uniformity_full_coverage", "uniformity_line3_small",
        "update_time_tail", "visited_vs_b2",
    ]


def test_named_checks_all_pass_reduced():
    results = run_named_checks(scale=0.02)
    assert len(results) == len(NAMED_CHECKS)
    failing = [r.line() for r in results if not r.ok]
    assert not failing, failing


def test_unknown_check_name():
    with pytest.raises(ValueError):
        run_named_checks(["no_such_check"])


def test_delta_equivalence_reduced():
    rep = delta_equivalence_study(streams=3, seed=2024)
    assert rep["ok"]
    for shape, dr in rep["reports"].items():
        assert dr.mismatches == 0, shape
        assert dr.duplicate_results == 0, shape
        assert dr.size_mismatches == 0, shape
        assert dr.density_violations == 0, shape


def test_stop_count_reduced():
    rep = stop_count_study(n=5000, k=100, trials=300, seed=8)
    assert rep["ok"]
    for row in rep["rows"].values():
        assert row["rel_err"] <= 0.05
        assert row["measured_next"] == row["fill_next"]


def test_propagation_reduced():
    rep = propagation_study(sizes=(800,))
    assert rep["ok"]
    row = rep["rows"][0]
    assert row["total"] <= row["bound"]
    assert row["max_event"] >= 1


def test_grouping_reduced():
    rep = grouping_study(trials=1500)
    assert rep["support_equal"]
    assert rep["ratio"] >= 5.0
    assert rep["p_value"] > 0.001


def test_hub_stream_is_duplicate_free():
    events = hub_stream()
    assert len(events) == len(set(events))


def test_density_study_reduced():
    rep = rswp_density_study(n=4000, k=50, trials=5,
                             densities=(0.0, 0.5, 1.0))
    assert rep["ok"]
    visited = [row["visited"] for row in rep["rows"]]
    assert visited[0] == 4000
    assert visited[2] < visited[1] < visited[0]
