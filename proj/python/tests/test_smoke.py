import math

import numpy as np
import pytest

import eqd

SQUARE = "rational1d: num=[1,0,0] den=[0,0,1]"
CHEBYSHEV = "rational1d: num=[1,0,-2] den=[0,0,1]"


def test_degrees_of_product_map():
    d = eqd.degrees(eqd.DynMap.parse("product2d: p=[1,0,0.3] q=[1,0.1,0]"))
    assert d["d_t"] == 4
    assert d["d_list"] == pytest.approx([1.0, 2.0, 4.0])


def test_monomial_hypothesis():
    ok, margin = eqd.check_hypothesis(eqd.DynMap.monomial(3, 1, 1, 2))
    assert ok and margin > 0
    ok, _ = eqd.check_hypothesis(eqd.DynMap.monomial(2, 1, 1, 1))
    assert not ok


def test_fiber_of_square_map():
    f = eqd.DynMap.parse(SQUARE)
    fb = eqd.fiber(f, [4, 1])
    roots = sorted((p["point"][0] / p["point"][1] for p in fb["points"]), key=lambda z: z.real)
    assert sum(p["multiplicity"] for p in fb["points"]) == 2
    assert [r.real for r in roots] == pytest.approx([-2, 2])


def test_parse_error_is_typed():
    with pytest.raises(eqd.ParseError):
        eqd.DynMap.parse("rational1d: num=[1,0")
    with pytest.raises(eqd.EqdError):
        eqd.Observable.parse("bump([1,1], )")


def test_tree_is_roots_of_unity():
    s = eqd.pullback_tree(eqd.DynMap.parse(SQUARE), [1, 1], 6)
    z = s.points[:, 0] / s.points[:, 1]
    assert len(s) == 64
    assert np.allclose(z**64, 1.0, atol=1e-9)


def test_backward_sample_is_deterministic_and_on_circle():
    f = eqd.DynMap.parse(SQUARE)
    a = eqd.sample(f, [0.5, 1], N=500, seed=3)
    b = eqd.sample(f, [0.5, 1], N=500, seed=3, workers=2)
    assert np.array_equal(a.points, b.points)
    z = a.points[:, 0] / a.points[:, 1]
    assert np.max(np.abs(np.abs(z) - 1)) < 1e-6


def test_sample_text_round_trip():
    s = eqd.sample(eqd.DynMap.parse(CHEBYSHEV), [0.5, 1], N=50, seed=1)
    t = eqd.SampleSet.from_text(s.to_text())
    assert np.array_equal(s.points, t.points)


def test_integrate_and_decompose_agree():
    f = eqd.DynMap.parse(CHEBYSHEV)
    mu = eqd.sample(f, [0.5, 1], N=4000, seed=2)
    m = eqd.integrate(mu, "dist_to([1,1])")
    tr = eqd.decompose(f, "dist_to([1,1])", N=6, nodes=2000, seed=2)
    assert len(tr.c) == 7
    assert abs(m["mean"] - tr.c_phi) < 4 * math.hypot(m["std_err"], tr.c_phi_std_err)


def test_correlations_decay_and_fit():
    f = eqd.DynMap.parse(SQUARE)
    mu = eqd.sample(f, [0.5, 1], N=5000, seed=4)
    series = eqd.correlation_series(f, mu, "dist_to([1,1])", "dist_to([1,1])", 6)
    assert [e["n"] for e in series] == list(range(7))
    assert abs(series[4]["corr"]) < abs(series[0]["corr"])
    fit = eqd.decay_fit(series, 0)
    assert fit["insufficient_signal"] or fit["rate"] > 0


def test_green_kubo_and_clt():
    f = eqd.DynMap.parse(SQUARE)
    mu = eqd.sample(f, [0.5, 1], N=5000, seed=5)
    gk = eqd.green_kubo(f, mu, "chordal_re(0,1)", n_max=3)
    assert gk["sigma2"] == pytest.approx(0.5, abs=5 * gk["std_err"] + 0.02)
    r = eqd.clt(f, mu, "chordal_re(0,1)", n_block=100, trajectories=400, seed=5, reference_sigma2=0.5)
    assert len(r["trajectory_stats"]) == 400
    assert not r["degenerate"]


def test_observable_evaluation_and_star_norm():
    phi = eqd.Observable.parse("chordal_re(0,1)")
    assert phi([1, 1]) == pytest.approx(1.0)
    assert phi.kind == "smooth"
    assert eqd.star_norm(phi, 20000) == pytest.approx(math.sqrt(4 * math.pi / 3), rel=0.02)
