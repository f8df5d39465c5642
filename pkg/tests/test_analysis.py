import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zenotransport.amplitudes import Bob, CycleConfig, Pol, QubitAmplitudes
from zenotransport.analysis import (
    CSV_COLUMNS,
    ModuleResponse,
    effective_cnot_matrix,
    effective_transport_vector,
    efficiency_closed_form,
    fidelity_closed_form,
    overlap_fidelity,
    recursion_eps_eta,
    recursion_module_response,
    recursion_trajectory,
    sweep,
)
from zenotransport.cqze import H_MODULE, cqze_outer_run, michelson_run
from zenotransport.dualcnot import Branch
from zenotransport.protocol import BranchPolicy, run_transport
from conftest import R2


def efficiency_oracle(m, n, a2, b2):
    tm, tn = math.pi / (2 * m), math.pi / (2 * n)
    ms = np.arange(1, m + 1)
    return (1 - a2 * math.sin(tm) ** 2) ** m * np.prod((1 - b2 * np.sin(ms * tm) ** 2 * math.sin(tn) ** 2) ** n)


def recursion_oracle(m, n):
    c, s = math.cos(math.pi / (2 * m)), math.sin(math.pi / (2 * m))
    kk = math.cos(math.pi / (2 * n)) ** n
    return np.linalg.matrix_power(np.array([[c, -s * kk], [s, c * kk]]), m) @ np.array([1.0, 0.0])


class TestEfficiency:
    @pytest.mark.parametrize("m", [1, 2, 7, 50])
    def test_pass_only(self, m):
        assert efficiency_closed_form(m, 33, 1, 0) == pytest.approx(math.cos(math.pi / (2 * m)) ** (2 * m), abs=1e-12)

    @pytest.mark.parametrize("n", [1, 4, 100])
    def test_single_outer_cycle_block(self, n):
        assert efficiency_closed_form(1, n, 0, 1) == pytest.approx(math.cos(math.pi / (2 * n)) ** (2 * n), abs=1e-14)

    def test_headline_value(self):
        assert efficiency_closed_form(50, 1250, R2, R2) == pytest.approx(0.95, abs=0.005)

    @settings(max_examples=50)
    @given(st.integers(1, 80), st.integers(1, 2000), st.floats(0, 1))
    def test_matches_vectorized_oracle(self, m, n, a2):
        a, b = math.sqrt(a2), math.sqrt(1 - a2)
        assert efficiency_closed_form(m, n, a, b) == pytest.approx(efficiency_oracle(m, n, a2, 1 - a2), rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("m,n", [(10, 100), (25, 320), (50, 1250)])
    def test_agrees_with_step_simulation(self, m, n):
        s, _ = cqze_outer_run(QubitAmplitudes(R2, R2), m, n, record=False)
        assert abs(s.live_norm() - efficiency_closed_form(m, n, R2, R2)) < 0.01

    def test_complex_amplitudes_use_moduli(self):
        assert efficiency_closed_form(9, 40, 0.6j, -0.8) == efficiency_closed_form(9, 40, 0.6, 0.8)


class TestRecursion:
    def test_initial_conditions(self):
        r0 = recursion_trajectory(5, 9)[0]
        assert (r0.eps, r0.eta, r0.m) == (1.0, 0.0, 0)

    @pytest.mark.parametrize("n", [1, 7, 1000])
    def test_single_cycle(self, n):
        r = recursion_eps_eta(1, n)
        assert abs(r.eps) < 1e-15 and r.eta == pytest.approx(1.0, abs=1e-15)

    def test_large_n_limit(self):
        r = recursion_eps_eta(10, 10**5)
        assert abs(r.eta - 1) < 1e-3 and abs(r.eps) < 1e-3

    @pytest.mark.parametrize("m,n", [(4, 6), (10, 40), (3, 1)])
    def test_matches_michelson_block_branch(self, m, n):
        _, h = michelson_run(Pol.H, QubitAmplitudes(0, 1), CycleConfig(m, n))
        snap = h.states[-1]
        r = recursion_eps_eta(m, n)
        assert snap.amp(Bob.BLOCK, H_MODULE.outer) == pytest.approx(r.eps, abs=1e-12)
        assert snap.amp(Bob.BLOCK, H_MODULE.inner) == pytest.approx(r.eta, abs=1e-12)

    @settings(max_examples=100)
    @given(st.integers(1, 200), st.integers(1, 5000))
    def test_matches_matrix_power(self, m, n):
        r = recursion_eps_eta(m, n)
        assert np.allclose([r.eps, r.eta], recursion_oracle(m, n), atol=1e-12)

    @settings(max_examples=100)
    @given(st.integers(1, 200), st.integers(1, 5000))
    def test_attrition(self, m, n):
        norms = [s.eps ** 2 + s.eta ** 2 for s in recursion_trajectory(m, n)]
        assert norms[0] == 1.0
        assert all(b <= a + 1e-15 for a, b in zip(norms, norms[1:]))


def idealized_vector(m, n, q, branch):
    """Effective model with round-1 wrong exit dropped and eta not attenuated by the last chain."""
    cfg = CycleConfig(m, n)
    r = recursion_eps_eta(m, n)
    p = math.cos(cfg.theta_m) ** m
    u1 = effective_cnot_matrix(ModuleResponse(p, 0.0, 0.0, r.eta))
    u2 = effective_cnot_matrix(ModuleResponse(p, 0.0, r.eps, r.eta))
    return effective_transport_vector(u1, u2, q, branch)


class TestFidelity:
    def test_verbatim_value(self):
        # independent hand evaluation of the closed form, main branch = upper signs
        m, n = 25, 320
        r = recursion_oracle(m, n)
        p = math.cos(math.pi / 50) ** 25
        expect = (0.25 * p * (p + r[1] + r[0]) + 0.25 * r[1] * (p + r[1] - r[0])) ** 2
        assert fidelity_closed_form(m, n, R2, R2) == pytest.approx(expect, abs=1e-12)
        assert fidelity_closed_form(m, n, R2, R2) == pytest.approx(0.82663, abs=1e-5)

    def test_asymptotic_limit(self):
        assert fidelity_closed_form(200, 10**5, R2, R2) == pytest.approx(1, abs=0.02)

    @pytest.mark.parametrize("branch", [Branch.MAIN, Branch.D0])
    @pytest.mark.parametrize("m,n,a", [(5, 20, R2), (10, 80, R2), (15, 300, R2), (5, 50, 1.0), (8, 33, 0.6)])
    def test_closed_form_is_idealized_overlap(self, branch, m, n, a):
        # Sign resolution check: the closed form is reproduced exactly on each branch by the
        # effective-gate model once the two finite-N corrections are switched off.
        q = QubitAmplitudes(a, math.sqrt(1 - a * a))
        ideal = overlap_fidelity(idealized_vector(m, n, q, branch), q, branch)
        assert fidelity_closed_form(m, n, q.a0, q.a1, branch) == pytest.approx(ideal, abs=1e-12)

    @pytest.mark.parametrize("m,n,gap", [(5, 20, 0.06096), (10, 80, 0.02250), (15, 300, 0.00727), (5, 50, 0.01234)])
    def test_simulation_gap_is_measured(self, m, n, gap):
        a = 1.0 if (m, n) == (5, 50) else R2
        q = QubitAmplitudes(a, math.sqrt(1 - a * a))
        sim = run_transport(q, CycleConfig(m, n), BranchPolicy.MAIN, record=False).overlap_fidelity
        assert fidelity_closed_form(m, n, q.a0, q.a1) - sim == pytest.approx(gap, abs=1e-4)


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestSweep:
    def test_efficiency_surface(self):
        g = sweep(range(5, 80, 5), range(100, 1600, 100), sim_cost_cap=0)
        surf = g.closed_form_surface()
        assert (np.diff(surf, axis=1) >= 0).all()
        assert surf.max() > 0.95
        assert g.cells[(75, 1500)].closed_form > g.cells[(75, 100)].closed_form
        assert g.cells[(50, 1000)].closed_form == pytest.approx(efficiency_closed_form(50, 1000, R2, R2))

    def test_fidelity_surface(self):
        g = sweep(range(1, 16), range(10, 310, 10), quantity="fidelity", sim_cost_cap=0)
        assert g.cells[(15, 300)].closed_form > g.cells[(15, 50)].closed_form

    def test_single_cell(self):
        g = sweep([50], [1250], sim_cost_cap=10**5)
        header, rows = read_csv(g.to_csv())
        assert tuple(header) == CSV_COLUMNS and len(rows) == 1
        assert float(rows[0][5]) == pytest.approx(0.95, abs=0.005)
        assert float(rows[0][6]) == pytest.approx(0.95, abs=0.005) and rows[0][7] == "0"

    def test_cost_cap_marks_skips(self):
        g = sweep([2, 40], [10, 30], sim_cost_cap=100)
        _, rows = read_csv(g.to_csv())
        assert len(rows) == 4
        for r in rows:
            skipped = int(r[0]) * int(r[1]) > 100
            assert r[7] == str(int(skipped))
            assert (r[6] == "") == skipped and r[5] != ""

    def test_parallel_matches_serial(self):
        kw = dict(m_values=[2, 3, 5], n_values=[4, 9], quantity="fidelity")
        assert sweep(**kw, jobs=3).to_csv() == sweep(**kw, jobs=1).to_csv()

    def test_bad_input(self):
        with pytest.raises(ValueError):
            sweep([], [3])
        with pytest.raises(ValueError):
            sweep([3], [3], quantity="entropy")
