import numpy as np
import pytest

from zenotransport.amplitudes import (
    LONG_RUN_TOL,
    Bob,
    ContractViolation,
    CycleConfig,
    JointState,
    Path,
    PhotonMode,
    Pol,
    QubitAmplitudes,
    total_norm,
)
from zenotransport.analysis import effective_cnot_matrix, recursion_module_response, simulated_module_response
from zenotransport.dualcnot import (
    ALICE_H,
    ALICE_V,
    Branch,
    Splitter,
    dual_cqze_cnot,
    dual_cqze_cnot_state,
    ideal_cnot_output,
    infidelity,
    split_input,
    trace_distance_pure,
)
from conftest import R2, random_qubit

UH, UV = PhotonMode(Path.UPPER, Pol.H), PhotonMode(Path.UPPER, Pol.V)
LH, LV = PhotonMode(Path.LOWER, Pol.H), PhotonMode(Path.LOWER, Pol.V)
Z_PHOTON = np.diag([1, -1, 1, -1])


def path_vector(state, path):
    return state.two_qubit_vector(path)


class TestSplitter:
    def test_pbs_routes_h_up(self):
        s = JointState.product(QubitAmplitudes(1, 0), {ALICE_H: 1.0})
        split_input(s, Splitter.PBS)
        assert s.amp(Bob.PASS, UH) == 1 and s.live_norm() == 1

    def test_pbs_routes_v_down(self):
        s = JointState.product(QubitAmplitudes(1, 0), {ALICE_H: 0.6, ALICE_V: 0.8})
        split_input(s, Splitter.PBS)
        assert s.amp(Bob.PASS, UH) == pytest.approx(0.6) and s.amp(Bob.PASS, LV) == pytest.approx(0.8)

    def test_bs50_reproduces_recombination(self):
        # lam |nw>|upper> + mu |sw>|lower>, with |nw>, |sw> the module exit states
        alpha, beta, lam, mu = 0.6, 0.8, 0.28, 0.96j
        nw = np.array([alpha, 0, 0, beta])   # a|pass,H> + b|block,V>
        sw = np.array([0, alpha, beta, 0])   # a|pass,V> + b|block,H>
        s = JointState()
        for i, (b, p) in enumerate((b, p) for b in Bob for p in (Pol.H, Pol.V)):
            if nw[i]:
                s.amps[(b, PhotonMode(Path.UPPER, p))] = complex(lam * nw[i])
            if sw[i]:
                s.amps[(b, PhotonMode(Path.LOWER, p))] = complex(mu * sw[i])
        split_input(s, Splitter.BS50)
        assert np.allclose(path_vector(s, Path.LOWER), R2 * (lam * nw + mu * sw), atol=1e-15)
        assert np.allclose(path_vector(s, Path.UPPER), R2 * (lam * nw - mu * sw), atol=1e-15)

    def test_bs50_twice_exchanges_paths(self):
        # A pi/4 path rotation squares to a full transfer, not to the identity.
        s = JointState.product(QubitAmplitudes(1, 0), {UH: 0.6, LV: 0.8})
        split_input(s, Splitter.BS50)
        split_input(s, Splitter.BS50)
        assert s.amp(Bob.PASS, LH) == pytest.approx(0.6, abs=1e-12)
        assert s.amp(Bob.PASS, UV) == pytest.approx(-0.8, abs=1e-12)
        assert abs(s.amp(Bob.PASS, UH)) < 1e-12 and abs(s.amp(Bob.PASS, LV)) < 1e-12

    def test_pbs_exit_needs_one_path(self):
        s = JointState.product(QubitAmplitudes(1, 0), {ALICE_H: R2, ALICE_V: R2})
        with pytest.raises(ContractViolation):
            dual_cqze_cnot_state(s, CycleConfig(2, 3), Splitter.PBS)

    def test_pbs_rejects_stray_path(self):
        s = JointState.product(QubitAmplitudes(1, 0), {PhotonMode(Path.CHANNEL): 1.0})
        with pytest.raises(ContractViolation):
            split_input(s, Splitter.PBS)


class TestGateAction:
    def test_effective_oracle_finite(self):
        cfg = CycleConfig(40, 1000)
        bob, photon = QubitAmplitudes(0.6, 0.8), QubitAmplitudes(0.8, 0.6j)
        out = dual_cqze_cnot(photon, bob, cfg, record=False)
        u = effective_cnot_matrix(recursion_module_response(cfg))
        psi = np.kron(bob.vector, photon.vector)
        for branch, pre in ((Branch.MAIN, np.eye(4)), (Branch.D0, Z_PHOTON)):
            expect = R2 * u @ pre @ psi
            got = out[branch].unnormalized.two_qubit_vector()
            assert np.allclose(got, expect, atol=1e-12)

    def test_distance_to_ideal_cnot(self):
        # finite-N wrong-exit leakage sets this distance; see the decisions ledger
        cfg = CycleConfig(40, 1000)
        bob, photon = QubitAmplitudes(0.6, 0.8), QubitAmplitudes(0.8, 0.6j)
        main = dual_cqze_cnot(photon, bob, cfg, record=False)[Branch.MAIN]
        d = trace_distance_pure(main.output_vector(), ideal_cnot_output(photon, bob))
        assert d == pytest.approx(0.0130, abs=5e-4)
        assert infidelity(main.output_vector(), ideal_cnot_output(photon, bob)) < 1e-3

    def test_module_responses_agree(self):
        for m, n in ((1, 1), (3, 5), (12, 60)):
            a = simulated_module_response(CycleConfig(m, n))
            b = recursion_module_response(CycleConfig(m, n))
            assert np.allclose([a.pass_correct, a.pass_wrong, a.block_wrong, a.block_correct],
                               [b.pass_correct, b.pass_wrong, b.block_wrong, b.block_correct], atol=1e-12)

    @pytest.mark.parametrize("bob,expect", [((1, 0), [1, 0, 0, 0]), ((0, 1), [0, 0, 0, 1])])
    def test_truth_table_h_photon(self, bob, expect):
        out = dual_cqze_cnot(QubitAmplitudes(1, 0), QubitAmplitudes(*bob), CycleConfig(100, 5000), record=False)
        for o in out.values():
            assert abs(np.vdot(expect, o.output_vector())) ** 2 >= 0.999

    def test_random_pairs(self, rng):
        cfg = CycleConfig(100, 5000)
        for _ in range(3):
            ph, bob = random_qubit(rng), random_qubit(rng)
            main = dual_cqze_cnot(ph, bob, cfg, record=False)[Branch.MAIN]
            assert infidelity(main.output_vector(), ideal_cnot_output(ph, bob)) < 1e-3

    def test_bell_state(self):
        out = dual_cqze_cnot(QubitAmplitudes(1, 0), QubitAmplitudes(R2, R2), CycleConfig(100, 5000), record=False)
        bell = np.array([R2, 0, 0, R2])
        assert abs(np.vdot(bell, out[Branch.MAIN].output_vector())) ** 2 >= 0.999


class TestBranches:
    @pytest.mark.parametrize("m,n", [(3, 4), (10, 40)])
    def test_d0_is_z_on_photon_input(self, m, n):
        bob, photon = QubitAmplitudes(0.6, 0.8j), QubitAmplitudes(0.28, -0.96)
        out = dual_cqze_cnot(photon, bob, CycleConfig(m, n), record=False)
        flipped = dual_cqze_cnot(QubitAmplitudes(photon.a0, -photon.a1), bob, CycleConfig(m, n), record=False)
        assert np.allclose(out[Branch.D0].unnormalized.two_qubit_vector(),
                           flipped[Branch.MAIN].unnormalized.two_qubit_vector(), atol=1e-15)

    def test_h_photon_branches_identical(self):
        out = dual_cqze_cnot(QubitAmplitudes(1, 0), QubitAmplitudes(R2, R2), CycleConfig(6, 20), record=False)
        main, d0 = out[Branch.MAIN], out[Branch.D0]
        assert np.allclose(main.output_vector(), d0.output_vector(), atol=1e-15)
        survival = main.unnormalized.live_norm() + d0.unnormalized.live_norm()
        assert main.probability == pytest.approx(survival / 2, abs=1e-12)
        assert main.probability == pytest.approx(d0.probability, abs=1e-12)

    @pytest.mark.parametrize("m,n", [(10, 40), (100, 5000)])
    def test_branch_probability_gap(self, m, n):
        # P_main - P_d0 = 4 |beta|^2 eta eps Re(lam mu*): only the wrong exit breaks the 50:50 split
        bob, photon = QubitAmplitudes(R2, R2), QubitAmplitudes(R2, R2)
        out = dual_cqze_cnot(photon, bob, CycleConfig(m, n), record=False)
        r = recursion_module_response(CycleConfig(m, n))
        gap = 4 * abs(bob.a1) ** 2 * r.block_correct * r.block_wrong * (photon.a0 * photon.a1.conjugate()).real
        assert out[Branch.MAIN].probability - out[Branch.D0].probability == pytest.approx(gap, abs=1e-12)
        if m == 100:
            assert abs(gap) < 1e-2

    def test_probability_accounting(self, rng):
        ph, bob = random_qubit(rng), random_qubit(rng)
        out = dual_cqze_cnot(ph, bob, CycleConfig(15, 70))
        total = sum(o.probability for o in out.values()) + out[Branch.MAIN].loss_probability
        assert total == pytest.approx(1, abs=LONG_RUN_TOL)
        for o in out.values():
            assert abs(total_norm(o.state) - 1) < 1e-12 and o.state.renormalized
            assert o.history is out[Branch.MAIN].history and len(o.history) == 15 * 71

    def test_input_untouched(self):
        s = JointState.product(QubitAmplitudes(R2, R2), {ALICE_H: 1.0})
        before = dict(s.amps)
        dual_cqze_cnot_state(s, CycleConfig(2, 2))
        assert s.amps == before
