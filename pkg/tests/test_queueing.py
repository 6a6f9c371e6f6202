import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pathrev import queueing as Q
from pathrev.protocol.simulator import SimConfig, run_simulation


def generator_stationary(n, lam, mu):
    """Solve pi Q = 0 for the birth-death generator directly (no product form)."""
    m = n + 1
    a = [[Fraction(0)] * (m + 1) for _ in range(m)]
    for k in range(m):
        up = (n - k) * lam if k < n else 0
        down = mu if k > 0 else 0
        # column k of Q^T gets the out-rates of state k
        a[k][k] -= up + down
        if k < n:
            a[k + 1][k] += up
        if k > 0:
            a[k - 1][k] += down
    a[-1] = [Fraction(1)] * (m + 1)
    for c in range(m):
        p = next(r for r in range(c, m) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        a[c] = [x / a[c][c] for x in a[c]]
        for r in range(m):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [a[k][m] for k in range(m)]


@pytest.mark.parametrize("n,rho", [(1, Fraction(1, 2)), (3, Fraction(1, 5)), (6, Fraction(4, 5)),
                                   (8, Fraction(3, 2))])
def test_product_form_against_generator(n, rho):
    m = Q.QueueModel.from_rho(n, rho, sigma=Fraction(2), delta=Fraction(1, 10))
    assert list(Q.state_probabilities(m).probs) == generator_stationary(n, m.lam, m.mu)


def test_spot_values():
    m = Q.QueueModel(3, Fraction(1, 5), 1, Fraction(1, 10))
    d = Q.state_probabilities(m)
    assert d.probs == (Fraction(125, 236), Fraction(75, 236), Fraction(15, 118), Fraction(3, 118))
    assert Q.waiting_time_k(m, 0) == Fraction(1, 5)
    assert Q.waiting_time_k(m, 2) == Fraction(11, 10) + Fraction(1, 2)
    assert Q.worst_case_waiting(m) == 2 * Fraction(11, 10) + Fraction(1, 2)


@given(st.integers(1, 15), st.fractions(Fraction(1, 50), Fraction(5), max_denominator=100),
       st.fractions(Fraction(1, 10), Fraction(5), max_denominator=100),
       st.fractions(Fraction(0), Fraction(3), max_denominator=100))
@settings(max_examples=40, deadline=None)
def test_exact_identities(n, rho, sigma, delta):
    m = Q.QueueModel.from_rho(n, rho, sigma, delta)
    d = Q.state_probabilities(m)
    assert sum(d.probs) == 1
    for k in range(n):
        assert d.probs[k + 1] / d.probs[k] == (n - k) * rho
    assert Q.expected_waiting(m, d) == Q.expected_waiting_direct(m, d)
    # the empty-queue wait 2*delta can exceed the worst-case formula when
    # delta > 1.5 sigma, so the mean is bounded by the largest w_k instead
    top = max(Q.waiting_time_k(m, k) for k in range(n))
    assert 0 <= Q.expected_waiting(m, d) <= top
    if n >= 2 and delta <= Fraction(3, 2) * sigma:
        assert Q.expected_waiting(m, d) <= Q.worst_case_waiting(m)


def test_float_path_matches_exact():
    exact = Q.QueueModel(40, Fraction(1, 80), 1, Fraction(1, 4))
    flt = Q.QueueModel(40, 1 / 80, 1.0, 0.25)
    assert Q.expected_waiting(flt) == pytest.approx(float(Q.expected_waiting(exact)), rel=1e-12)


def test_float_path_large_n_does_not_overflow():
    m = Q.QueueModel(400, 0.002, 1.0, 0.1)
    d = Q.state_probabilities(m)
    assert math.isclose(sum(d.probs), 1.0, rel_tol=1e-12)


def test_bound_needs_rho_below_one():
    with pytest.raises(Q.QueueError):
        Q.asymptotic_waiting_bound(Q.QueueModel.from_rho(10, 1.2))
    assert Q.evaluate(Q.QueueModel.from_rho(10, 1.2))["asymptotic_bound"] is None


def test_o_term_small():
    _, o = Q.asymptotic_waiting_bound(Q.QueueModel.from_rho(30, 0.5))
    assert 0 < o < 1e-20


def test_waiting_time_k_range():
    m = Q.QueueModel(3, 1, 1, 1)
    with pytest.raises(Q.QueueError):
        Q.waiting_time_k(m, 3)


@pytest.mark.parametrize("kw", [dict(n=0, lam=1, sigma=1, delta=0),
                                dict(n=2, lam=0, sigma=1, delta=0),
                                dict(n=2, lam=1, sigma=1, delta=-1)])
def test_bad_models(kw):
    with pytest.raises(Q.QueueError):
        Q.QueueModel(**kw)


def test_closed_form_identity_grid():
    pts = [(n, Fraction(r, 10), 1, Fraction(1, 2)) for n in (2, 5) for r in (1, 9)]
    assert all(c.equal and c.discrepancy == 0 for c in Q.closed_form_identity(pts))


def test_evaluate_keys_and_exact_strings():
    out = Q.evaluate(Q.QueueModel(3, Fraction(1, 5), 1, Fraction(1, 10)))
    assert out["rho"] == "1/5" and out["wbar"] == out["wbar_direct_sum"]
    assert set(out) >= {"P", "nbar", "wbar", "wbar_direct_sum", "worst_case", "asymptotic_bound"}


def test_compare_rejects_mismatched_runs():
    m = Q.QueueModel(4, 0.2, 1.0, 0.1)
    seq = run_simulation(SimConfig(n=4, requests=50, seed=0))
    with pytest.raises(Q.QueueError):
        Q.compare_with_simulation(m, seq)
    jitter = run_simulation(SimConfig(n=4, mode="poisson", lam=0.2, delay=(0.05, 0.1),
                                      requests=50, seed=0))
    with pytest.raises(Q.QueueError):
        Q.compare_with_simulation(m, jitter)


def test_compare_reports_gap():
    m = Q.QueueModel(4, 0.2, 1.0, 0.1)
    sim = run_simulation(SimConfig(n=4, mode="poisson", lam=0.2, sigma=1.0, delay=0.1,
                                   requests=3000, seed=2))
    c = Q.compare_with_simulation(m, sim)
    d = c.as_dict()
    assert d["gap"] == pytest.approx(c.empirical - c.analytic)
    assert c.samples == 3000
