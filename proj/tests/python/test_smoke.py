"""Smoke tests for the python bindings: thin checks that the C++ core is
reachable and numerically sane through the module surface."""

import json
import math
import os

import numpy as np
import pytest

import pcgsim


def test_compose_and_embed():
    space = pcgsim.compose([pcgsim.ModeSpec("q1", 2), pcgsim.ModeSpec("q2", 2),
                            pcgsim.ModeSpec("p", 3)])
    assert space.total_dim() == 12
    z = np.diag([1.0, -1.0]).astype(complex)
    op = pcgsim.embed(space, "q1", z)
    assert op.is_hermitian()
    assert np.allclose(np.diag(op.matrix)[:6], 1.0)


def test_ladder_and_eig():
    b = pcgsim.ladder(4)
    comm = b @ b.T - b.T @ b
    assert np.allclose(np.diag(comm)[:3], 1.0)
    evals, evecs = pcgsim.eig_hermitian(np.array([[0, 1], [1, 0]], dtype=complex))
    assert np.allclose(evals, [-1.0, 1.0])


def test_ideal_gates():
    u = pcgsim.pcf_unitary(2, 0.0)
    assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)
    ghz = pcgsim.ghz_target(4)
    pcp = pcgsim.pcp_unitary(4, math.pi / 2)
    plus = np.full(16, 0.25, dtype=complex)
    assert abs(abs(np.vdot(ghz, pcp @ plus)) - 1.0) < 1e-12

    k0, k1 = pcgsim.parity_kraus(2)
    completeness = k0.conj().T @ k0 + k1.conj().T @ k1
    ground = np.zeros((8, 8))
    ground[::2, ::2] = np.eye(4)
    assert np.allclose(completeness, ground, atol=1e-14)


def test_pulse_calibration():
    amp = pcgsim.calibrate_pi_amplitude(25.0, 0.5)
    assert amp == pytest.approx(math.pi / 18.75)
    env = pcgsim.Envelope(25.0, 0.5, amp)
    ts = np.linspace(0.0, 25.0, 20001)
    area = np.trapezoid([pcgsim.tukey(t, env) for t in ts], ts)
    assert area == pytest.approx(math.pi, abs=1e-6)


def test_small_gate_channel():
    model = pcgsim.DeviceModel(2, g_mhz=-250.0, alpha_mhz=-100.0)
    model.set_noise(40.0, 40.0)
    prog = pcgsim.pcf_program_2q(model, 25.0, 0.5, 0.0, pcgsim.Scheme.ADVANCED, 0.02)
    chan = pcgsim.simulate_channel(model, prog, dt=0.02, threads=2)
    chan = pcgsim.frame_correction(chan, model, prog)
    fidelity = pcgsim.process_fidelity(pcgsim.choi(chan), pcgsim.pcf_unitary(2, 0.0))
    assert fidelity > 0.98
    assert chan.average_leakage() < 0.02


def test_circuit_spectrum():
    params = pcgsim.CircuitParams.reference_two_qubit()
    eff = pcgsim.device_spectrum(params, pcgsim.SpectrumMethod.RWA)
    assert eff.omega_ancilla_ghz == pytest.approx(9.88, abs=0.05)
    assert all(g < 0 for g in eff.g_ghz)


def test_run_experiment_roundtrip(tmp_path):
    config = {
        "experiment": "spectrum",
        "circuit": {
            "n_qubits": 2,
            "c_qubit_fF": [22, 22],
            "c_ancilla_fF": 19,
            "c_junction_fF": [4, 4],
            "ej_ghz": [10, 11],
            "flux_sweep": [0.0],
        },
        "run": {"seed": 5, "methods": ["rwa"]},
    }
    out = tmp_path / "spectrum.csv"
    written = pcgsim.run_experiment_json(json.dumps(config), str(out))
    assert os.path.exists(written)
    text = open(written).read()
    assert "# config-digest:" in text
    assert "rwa" in text
