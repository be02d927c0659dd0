"""Acceptance suite: one test per criterion, each with its tolerance and time budget.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (and directly when this file is run as a script).
"""

import math
import time

import numpy as np
import pytest

from bethe_perm.analysis import bounds_report, classify_vertex, regular_bethe_bound, sinkhorn
from bethe_perm.covers import (
    LiftSpec,
    check_lift_bethe_identity,
    check_lift_conjectures,
    degree_M_bethe_exact,
    twobytwo_degree_M_closed,
)
from bethe_perm.energy import (
    S_func,
    bethe_entropy,
    bethe_free_energy,
    grad_bethe_free_energy,
    special_kappa,
)
from bethe_perm.exact import perm_bruteforce, perm_ryser
from bethe_perm.fw import frac_bethe_permanent
from bethe_perm.matrix_io import permutation_matrix
from bethe_perm.spa import MessageState, beliefs, init_messages, pseudo_dual, run_spa, spa_iterate

from .conftest import ACCEPTANCE_LINES


class Criterion:
    """Context manager that times a criterion and records its verdict."""

    def __init__(self, number: int, title: str, budget_s: float):
        self.number, self.title, self.budget = number, title, budget_s
        self.detail = ""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        over = elapsed > self.budget
        ok = exc_type is None and not over
        note = self.detail
        if over:
            note = f"{note}; runtime {elapsed:.1f}s exceeds {self.budget:.0f}s".lstrip("; ")
        elif exc_type is not None:
            note = f"{note}; {exc_type.__name__}: {exc}".lstrip("; ")
        line = f"{'PASS' if ok else 'FAIL'} criterion {self.number:2d}: {self.title} ({elapsed:.2f}s) {note}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        if exc_type is None and over:
            raise AssertionError(line)
        return False


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def log_rel_err(log_a: float, log_b: float) -> float:
    return abs(math.expm1(log_a - log_b))


def test_01_oracle_equivalence():
    with Criterion(1, "Ryser equals brute force on 100 random matrices", 10) as c:
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 9))
            a = rng.uniform(size=(n, n))
            worst = max(worst, log_rel_err(perm_ryser(a).log, perm_bruteforce(a).log))
        c.detail = f"max rel err {worst:.1e}"
        assert worst <= 1e-10


def test_02_two_by_two_closed_form():
    with Criterion(2, "SPA on 2x2 equals max diagonal product", 5) as c:
        rng = np.random.default_rng(102)
        worst = 0.0
        for _ in range(100):
            th = rng.uniform(size=(2, 2))
            expected = max(th[0, 0] * th[1, 1], th[0, 1] * th[1, 0])
            worst = max(worst, rel_err(run_spa(th).perm_bethe, expected))
        c.detail = f"max rel err {worst:.1e}"
        assert worst <= 1e-6


def test_03_worked_example_chain():
    with Criterion(3, "[[3,1],[1,3]]: 10 >= 9 >= 729/256", 1) as c:
        th = np.array([[3.0, 1.0], [1.0, 3.0]])
        rep = bounds_report(th)
        c.detail = f"perm={rep.perm:.6g} perm_B={rep.perm_bethe:.9g} bound={rep.regular_bound:.6g}"
        assert rel_err(rep.perm, 10.0) <= 1e-12
        assert rel_err(rep.perm_bethe, 9.0) <= 1e-6
        assert regular_bethe_bound(2, 4).value == pytest.approx(729 / 256, rel=1e-15)
        assert rep.regular_bound == pytest.approx(2.848, abs=5e-4)
        assert rep.gurvits_ok and rep.conjecture_ok and rep.chain_ok


def test_04_all_ones():
    with Criterion(4, "all-ones Bethe permanent and perm/perm_B ratio", 30) as c:
        worst_val, worst_ratio = 0.0, 0.0
        for n in range(2, 11):
            closed = n * math.log(n) + n * (n - 1) * math.log(1 - 1 / n)
            res = run_spa(np.ones((n, n)))
            worst_val = max(worst_val, log_rel_err(res.log_perm_bethe.log, closed))
            if n >= 6:
                ratio = math.exp(math.lgamma(n + 1) - res.log_perm_bethe.log)
                worst_ratio = max(worst_ratio, rel_err(ratio, math.sqrt(2 * math.pi * n / math.e)))
        c.detail = f"value rel err {worst_val:.1e}, ratio dev {worst_ratio:.3f}"
        assert worst_val <= 1e-6
        assert worst_ratio <= 0.10


def test_05_degree_M():
    with Criterion(5, "degree-M Bethe permanents of 2x2 matrices", 60) as c:
        worst_ones = 0.0
        for M in range(1, 8):
            v = degree_M_bethe_exact(np.ones((2, 2)), M)
            worst_ones = max(worst_ones, abs(v.log - math.log(M + 1) / M))
        assert degree_M_bethe_exact(np.ones((2, 2)), 2).value == pytest.approx(math.sqrt(3), rel=1e-10)
        assert degree_M_bethe_exact(np.ones((2, 2)), 3).value == pytest.approx(4 ** (1 / 3), rel=1e-10)
        rng = np.random.default_rng(105)
        worst_gen = 0.0
        for _ in range(5):
            th = rng.uniform(size=(2, 2))
            for M in range(1, 6):
                worst_gen = max(worst_gen, log_rel_err(degree_M_bethe_exact(th, M).log,
                                                       twobytwo_degree_M_closed(th, M).log))
        c.detail = f"all-ones log err {worst_ones:.1e}, closed-form rel err {worst_gen:.1e}"
        assert worst_ones <= 1e-10
        assert worst_gen <= 1e-10


def test_06_gurvits_bound():
    with Criterion(6, "perm/perm_B >= 1 on 500 random matrices", 300) as c:
        rng = np.random.default_rng(106)
        worst = math.inf
        for _ in range(500):
            n = int(rng.integers(2, 11))
            th = rng.uniform(size=(n, n))
            worst = min(worst, math.exp(perm_ryser(th).log - run_spa(th).log_perm_bethe.log))
        c.detail = f"min ratio {worst:.6f}"
        assert worst >= 1 - 1e-9


def test_07_kron_equality_case():
    with Criterion(7, "I (x) ones(2): perm/perm_B = sqrt(2)^n", 10) as c:
        worst = 0.0
        for n in (2, 4, 6, 8):
            th = np.kron(np.eye(n // 2), np.ones((2, 2)))
            log_ratio = perm_ryser(th).log - run_spa(th).log_perm_bethe.log
            worst = max(worst, log_rel_err(log_ratio, n * 0.5 * math.log(2)))
        c.detail = f"max rel err {worst:.1e}"
        assert worst <= 1e-6


def test_08_lift_identity():
    with Criterion(8, "perm_B of a lift equals perm_B^M", 120) as c:
        rng = np.random.default_rng(108)
        worst = 0.0
        for _ in range(20):
            n, M = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            th = rng.uniform(size=(n, n))
            worst = max(worst, check_lift_bethe_identity(th, LiftSpec.random(n, M, rng)).rel_err)
        c.detail = f"max rel err {worst:.1e}"
        assert worst <= 1e-5


def test_09_lift_conjecture_all_ones():
    with Criterion(9, "no lift of all-ones exceeds perm^M", 120) as c:
        total = 0
        checked = 0
        for n, M in [(2, 2), (2, 3), (2, 4), (2, 5), (3, 2)]:
            res = check_lift_conjectures(np.ones((n, n)), M, mode="enumerate")
            total += res.violations
            checked += res.lifts_checked
        c.detail = f"{checked} lifts, {total} violations"
        assert total == 0


def test_10_fractional_special_kappa():
    with Criterion(10, "fractional permanent with special kappa", 120) as c:
        worst = 0.0
        for n in range(2, 9):
            closed = (n + 0.5) * math.log(n) + (n - 0.5) * (n - 1) * math.log(1 - 1 / n)
            worst = max(worst, log_rel_err(frac_bethe_permanent(np.ones((n, n)), special_kappa(n)).log, closed))
        two = frac_bethe_permanent(np.ones((2, 2)), special_kappa(2)).value
        ratios = []
        for n in range(2, 21):
            frac = frac_bethe_permanent(np.ones((n, n)), special_kappa(n)).log
            ratios.append(math.exp(perm_ryser(np.ones((n, n))).log - frac))
        monotone = all(a >= b for a, b in zip(ratios, ratios[1:]))
        tail_ok = all(0.85 <= r <= 1.0 for r in ratios[8:])
        c.detail = f"closed-form rel err {worst:.1e}, n=2 value {two:.12g}, ratio(20)={ratios[-1]:.4f}"
        assert worst <= 1e-4
        assert two == pytest.approx(2.0, rel=1e-12)
        assert monotone and tail_ok
        assert ratios[-1] > math.sqrt(2 * math.pi) / math.e


def _decay_fit(trace: list[float]) -> tuple[float, float]:
    """Least-squares fit of log e_t = a - nu t over the last 50 points above the noise floor."""
    f = np.asarray(trace)
    final = math.exp(-f[-1])
    err = np.abs(np.exp(-f) - final) / final
    idx = np.flatnonzero(err > 1e-12)[-50:]
    y = np.log(err[idx])
    x = idx.astype(float)
    design = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return -float(coef[1]), r2


def test_11_convergence_decay():
    with Criterion(11, "pseudo-dual error decays exponentially", 60) as c:
        rng = np.random.default_rng(111)
        min_nu, min_r2 = math.inf, math.inf
        for _ in range(20):
            n = int(rng.integers(4, 9))
            res = run_spa(rng.uniform(size=(n, n)))
            assert res.method == "spa"
            nu, r2 = _decay_fit(res.pseudo_dual_trace)
            min_nu, min_r2 = min(min_nu, nu), min(min_r2, r2)
        c.detail = f"min nu {min_nu:.3f}, min R^2 {min_r2:.4f}"
        assert min_nu > 0
        assert min_r2 >= 0.9


def _random_ds(rng, n):
    return sinkhorn(rng.uniform(0.01, 1, (n, n)), tol=1e-13).theta_prime


def test_12_property_suites():
    with Criterion(12, "entropy concavity, convexity, gradient and gauge properties", 60) as c:
        rng = np.random.default_rng(112)
        for _ in range(1000):
            n = int(rng.integers(3, 6))
            a, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            assert S_func((a + b) / 2) >= (S_func(a) + S_func(b)) / 2 - 1e-12
        for _ in range(500):
            n = int(rng.integers(2, 7))
            th = rng.uniform(0.05, 1, (n, n))
            g1, g2 = _random_ds(rng, n), _random_ds(rng, n)
            assert bethe_entropy(g1) >= -1e-12
            mid = bethe_free_energy((g1 + g2) / 2, th)
            assert mid <= (bethe_free_energy(g1, th) + bethe_free_energy(g2, th)) / 2 + 1e-12
        worst_grad = 0.0
        h = 1e-6
        for _ in range(20):
            n = int(rng.integers(2, 6))
            th = rng.uniform(0.1, 2, (n, n))
            g = _random_ds(rng, n)
            grad = grad_bethe_free_energy(g, th)
            for idx in np.ndindex(g.shape):
                e = np.zeros_like(g)
                e[idx] = h
                # the energy is a sum of entrywise terms; evaluate it off the polytope directly
                fd = (_entrywise_free_energy(g + e, th) - _entrywise_free_energy(g - e, th)) / (2 * h)
                worst_grad = max(worst_grad, abs(fd - grad[idx]))
        worst_gauge = 0.0
        for _ in range(20):
            n = int(rng.integers(2, 7))
            th = rng.uniform(0.05, 1, (n, n))
            st = init_messages(th)
            for _ in range(3):
                st = spa_iterate(st, th, gauge=False)
            cst = float(np.exp(rng.uniform(-3, 3)))
            scaled = MessageState(st.v_left * cst, st.v_right / cst, st.iteration)
            worst_gauge = max(worst_gauge, float(np.max(np.abs(beliefs(st, th)[0] - beliefs(scaled, th)[0]))),
                              abs(pseudo_dual(st, th) - pseudo_dual(scaled, th)))
        c.detail = f"grad err {worst_grad:.1e}, gauge err {worst_gauge:.1e}"
        assert worst_grad <= 1e-5
        assert worst_gauge <= 1e-12


def _entrywise_free_energy(g, th):
    return float(np.sum(-g * np.log(th) + g * np.log(g) - (1 - g) * np.log(1 - g)))


def test_13_vertex_classification():
    with Criterion(13, "rho < 1 vertices match SPA; all-ones minimum is interior", 60) as c:
        rng = np.random.default_rng(113)
        max_rho = 0.0
        for _ in range(50):
            n = int(rng.integers(3, 9))
            th = rng.uniform(size=(n, n))
            th[np.arange(n), rng.permutation(n)] *= 100
            vc = classify_vertex(th)
            max_rho = max(max_rho, vc.rho)
            assert vc.verdict == "unique_minimum"
            assert np.array_equal(np.round(run_spa(th).gamma), permutation_matrix(vc.sigma))
        for n in range(3, 7):
            vc = classify_vertex(np.ones((n, n)))
            g = run_spa(np.ones((n, n))).gamma
            assert vc.verdict == "not_minimum" and vc.rho == pytest.approx(n - 1, rel=1e-9)
            assert np.all(g > 1e-3) and np.all(g < 1 - 1e-3)
        c.detail = f"max rho on dominant set {max_rho:.3f}"


def test_14_sinkhorn():
    with Criterion(14, "Sinkhorn is doubly stochastic and preserves the permanent", 30) as c:
        rng = np.random.default_rng(114)
        worst_ds, worst_perm = 0.0, 0.0
        for _ in range(50):
            n = int(rng.integers(1, 9))
            th = rng.uniform(0.01, 1, (n, n))
            r = sinkhorn(th)
            tp = r.theta_prime
            worst_ds = max(worst_ds, float(np.max(np.abs(tp.sum(axis=0) - 1))),
                           float(np.max(np.abs(tp.sum(axis=1) - 1))))
            lhs = perm_ryser(th).log
            rhs = float(np.log(r.d1).sum() + np.log(r.d2).sum()) + perm_ryser(tp).log
            worst_perm = max(worst_perm, log_rel_err(lhs, rhs))
        c.detail = f"row/col dev {worst_ds:.1e}, perm rel err {worst_perm:.1e}"
        assert worst_ds <= 1e-10
        assert worst_perm <= 1e-8


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
