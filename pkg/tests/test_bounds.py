import math

import pytest

from tail_angular.bounds import (
    BoundInputs,
    bound_classification,
    bound_truncated,
    bound_untruncated,
    compute_delta,
    delta_for_confidence,
    framing_gap,
    framing_gap_truncated,
    side_conditions,
    vc_dim_heuristic,
)


def _inputs(**kw):
    base = dict(n=100_000, k=100, d=2, delta=0.5, rho=0.1, tau=0.2)
    base.update(kw)
    return BoundInputs(**base)


def test_delta_worked_example():
    ln6 = math.log(6)
    expect = math.sqrt(ln6 / 10) + ln6 / 100
    assert compute_delta(_inputs()) == pytest.approx(expect, rel=1e-12)
    assert compute_delta(_inputs()) == pytest.approx(0.44121, abs=5e-6)


def test_delta_zero_constant():
    assert compute_delta(_inputs(C=0.0)) == 0.0


def test_delta_decreasing_in_k():
    vals = [compute_delta(_inputs(k=k)) for k in range(10, 2000, 37)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_gap_worked_examples():
    expect = (4 + 3 * (math.log(2 / 3) + math.log(100) + 1)) * 0.01
    assert framing_gap(2, 1.0, 0.01) == pytest.approx(expect, rel=1e-12)
    assert framing_gap(2, 1.0, 0.01) == pytest.approx(0.19599, abs=5e-6)
    trunc = (10 / 9) * framing_gap_truncated(2, 1.0, 0.01, 10.0)
    assert trunc == pytest.approx((10 / 9) * (0.08 + 0.03 * math.log(10)), rel=1e-12)
    assert trunc == pytest.approx(0.16564, abs=5e-6)


def test_truncated_gap_large_M_limit():
    D, d, c = 0.01, 2, 1.0
    M = 1e6
    lim = 4 * d * D + 3 * c * D * math.log(d / (3 * c * D)) + 3 * c * D
    got = M / (M - 1) * framing_gap_truncated(d, c, D, M)
    assert got == pytest.approx(lim, rel=1e-5)
    # same shape as the untruncated gap, up to an extra 2 d Delta
    assert got == pytest.approx(framing_gap(d, c, D) + 2 * d * D, rel=1e-5)


def test_report_decomposition():
    rep = bound_untruncated(_inputs(bias=0.01, vc_dim=4))
    assert rep.total == pytest.approx(rep.bias_term + rep.error_term + rep.gap_term, rel=1e-15)
    assert min(rep.delta_term, rep.error_term, rep.gap_term, rep.bias_term) >= 0
    r0 = 1 + 1 / 100_000 - 1 / 100
    assert rep.r_minus == pytest.approx(r0 - rep.delta_term)
    assert rep.r_plus == pytest.approx(r0 + rep.delta_term)
    d = rep.to_dict()
    assert d["kind"] == "bound shape" and isinstance(d["violations"], list)


def test_gap_only_when_error_vanishes():
    inp = _inputs(C=0.0, vc_dim=0.0)
    rep = bound_untruncated(inp)
    assert rep.total == rep.gap_term == 0.0
    rep = bound_untruncated(_inputs(vc_dim=0.0, C=1.0))
    assert rep.error_term == pytest.approx(math.log(6) / 100)


def test_side_conditions_flagged_not_raised():
    rep = bound_untruncated(_inputs())
    assert "Delta < (1 - 1/k) ^ 1/(3c)" in rep.violations
    ok = side_conditions(BoundInputs(n=10**8, k=10**5, d=2, delta=0.05, rho=0.05, tau=0.1))
    assert all(ok.values())


def test_total_non_increasing_in_k():
    prev = math.inf
    for k in range(2000, 200_000, 5000):
        inp = BoundInputs(n=10**8, k=k, d=3, delta=0.05, rho=0.05, tau=0.1, vc_dim=5)
        rep = bound_untruncated(inp)
        if rep.violations:
            continue
        assert rep.total <= prev
        prev = rep.total


def test_rate_ratio_stabilises():
    ratios = []
    for k in (10**4, 10**5, 10**6, 10**7):
        inp = BoundInputs(n=100 * k, k=k, d=2, delta=0.05, rho=0.05, tau=0.1, vc_dim=4)
        ratios.append(bound_untruncated(inp).total / (math.log(k) / math.sqrt(k)))
    assert abs(ratios[-1] - ratios[-2]) / ratios[-1] < 0.01


def test_truncated_vs_untruncated_shape():
    for e in range(2, 7):
        k = 10**e
        common = dict(n=100 * k, k=k, d=2, delta=0.05, rho=0.05, tau=0.1, vc_dim=4)
        u = bound_untruncated(BoundInputs(**common))
        t = bound_truncated(BoundInputs(M=math.sqrt(k), **common))
        assert 0.3 <= t.total / u.total <= 3
        assert t.truncated and not u.truncated


def test_truncated_scales_bias():
    t = bound_truncated(_inputs(M=2.0, bias=0.1))
    assert t.bias_term == pytest.approx(0.2)
    with pytest.raises(ValueError):
        bound_truncated(_inputs())


def test_classification_bound():
    inp = _inputs(vc_dim=3, bias=0.02)
    value, conf = bound_classification(inp)
    assert value == 2 * bound_untruncated(inp).total
    assert conf == pytest.approx(1 - 0.5 * 4 / 3)
    assert delta_for_confidence(0.95, 2) == pytest.approx(0.0375)


def test_vc_heuristic():
    assert vc_dim_heuristic(3) == 5
    assert vc_dim_heuristic(3, 4) == 20


@pytest.mark.parametrize("bad", [dict(delta=0.0), dict(delta=1.0), dict(rho=0.0), dict(M=1.0), dict(d=1), dict(k=0)])
def test_input_validation(bad):
    with pytest.raises(ValueError):
        _inputs(**bad)
