import dataclasses

import pytest
from hypothesis import given, strategies as st

from ggmcomposite import bench
from ggmcomposite.bench import FRONTIER_FIELDS, BenchSpec, FrontierPoint, mean_sd, run_bench, summarize


def non_timing(points):
    return [tuple(getattr(pt, f) for f in FRONTIER_FIELDS) for pt in points]


def point(method="m", seed=0, kl=1.0, edges=3, ms=5.0, selected=True, index=0):
    return FrontierPoint(method, seed, index, edges, kl, 0.0, ms, selected, "h")


def test_spec_validation():
    for bad in (dict(seeds=()), dict(n=3), dict(p=1), dict(methods=("lasso",)), dict(connectivity="weird"),
                dict(rho_grid_size=0), dict(steps=-1)):
        with pytest.raises(ValueError):
            BenchSpec(**{"p": 10, "n": 20, **bad})
    with pytest.raises(ValueError):
        point(kl=-0.1)


def test_single_nodewise_point():
    pts = run_bench(BenchSpec(8, 20, methods=("nodewise_init",)))
    assert len(pts) == 1 and pts[0].selected and pts[0].kl_truth >= 0


def test_all_methods_share_data_and_are_deterministic():
    spec = BenchSpec(10, 25, "medium", seeds=(0, 1), rho_grid_size=6, steps=5)
    a, b = run_bench(spec), run_bench(spec)
    assert non_timing(a) == non_timing(b)
    for seed in (0, 1):
        mine = [pt for pt in a if pt.seed == seed]
        assert {pt.method for pt in mine} == set(bench.METHODS)
        assert len({pt.data_hash for pt in mine}) == 1
        for method in bench.METHODS:
            assert sum(pt.selected for pt in mine if pt.method == method) == 1
    comp = [pt for pt in a if pt.method == "composite" and pt.seed == 0]
    assert [pt.edge_count for pt in comp] == sorted(pt.edge_count for pt in comp) and len(comp) == 6


def test_thread_invariance():
    spec = BenchSpec(8, 20, seeds=(3, 4, 5, 6), rho_grid_size=4, steps=3)
    assert non_timing(run_bench(spec, 1)) == non_timing(run_bench(spec, 4))


def test_glasso_selected_is_min_kl():
    pts = run_bench(BenchSpec(8, 20, methods=("glasso_path",), rho_grid_size=8))
    best = min(pts, key=lambda pt: (pt.kl_truth, pt.index))
    assert best.selected


def test_failing_seed_is_skipped(monkeypatch, caplog):
    real = bench.run_seed

    def flaky(spec, seed):
        if seed == 1:
            raise RuntimeError("synthetic failure")
        return real(spec, seed)

    monkeypatch.setattr(bench, "run_seed", flaky)
    pts = run_bench(BenchSpec(6, 20, seeds=(0, 1, 2), methods=("nodewise_init",)))
    assert [pt.seed for pt in pts] == [0, 2]
    assert "seed 1 failed" in caplog.text


def test_summary_single_point():
    (row,) = summarize([point(kl=0.7, edges=4, ms=3.0)])
    assert row["kl_mean"] == 0.7 and row["kl_sd"] == 0 and row["edges_mean"] == 4 and row["wall_ms_sd"] == 0


def test_summary_population_sd():
    (row,) = summarize([point(seed=0, kl=2.0 - 0.5), point(seed=1, kl=2.0 + 0.5)])
    assert row["kl_mean"] == pytest.approx(2.0) and row["kl_sd"] == pytest.approx(0.5)
    assert row["count"] == 2


def test_summary_selected_only_and_time_once_per_seed():
    pts = [point(kl=1.0, ms=10.0), point(kl=9.0, ms=10.0, selected=False, index=1), point(seed=1, kl=3.0, ms=30.0)]
    (row,) = summarize(pts)
    assert row["kl_mean"] == pytest.approx(2.0) and row["wall_ms_mean"] == pytest.approx(20.0)
    (row,) = summarize(pts, selected_only=False)
    assert row["count"] == 3 and row["kl_mean"] == pytest.approx(13.0 / 3)
    with pytest.raises(ValueError):
        summarize([])


@given(st.lists(st.floats(0, 1e3), min_size=100, max_size=100))
def test_mean_sd_two_pass_oracle(values):
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    m, s = mean_sd(values)
    assert m == pytest.approx(mean, rel=1e-12, abs=1e-12)
    assert s == pytest.approx(var ** 0.5, rel=1e-9, abs=1e-9)


def test_frontier_fields_exclude_timing():
    assert "wall_time_ms" not in FRONTIER_FIELDS
    assert set(FRONTIER_FIELDS) < {f.name for f in dataclasses.fields(FrontierPoint)}
