import math
import os
import pathlib

import numpy as np
import pytest

import qkde

ROOT = pathlib.Path(os.environ.get("QKDE_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def test_kernel_basics():
    k = qkde.quantum_kernel(qubits=3, layers=2, hea_depth=2)
    assert k.is_quantum
    assert k(0.4, 0.4) == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= qkde.kernel_value(k, 0.1, 0.9) <= 1.0 + 1e-12
    assert qkde.kernel_value(k, 0.1, 0.9) == pytest.approx(qkde.kernel_value(k, 0.9, 0.1), abs=1e-14)


def test_product_map_matches_closed_form():
    coeffs = [0.5, 1.0, 1.5]
    k = qkde.product_kernel(coeffs)
    for n, m in [(0, 0), (1, 0), (1, 1), (2, 2)]:
        got = qkde.kernel_derivative(k, n, m, 0.3, -0.8)
        assert got == pytest.approx(qkde.product_map_closed_form(coeffs, 0.3, -0.8, n, m), abs=1e-10)
    assert abs(qkde.kernel_value(qkde.product_kernel([0.5]), 2 * math.pi, 0.0)) < 1e-15


def test_derivative_methods_agree():
    k = qkde.quantum_kernel(qubits=3, layers=2, hea_depth=2)
    ins = qkde.kernel_derivative(k, 1, 1, 0.2, 0.7)
    assert qkde.kernel_derivative(k, 1, 1, 0.2, 0.7, method="shift") == pytest.approx(ins, abs=1e-9)
    assert qkde.kernel_derivative(k, 1, 1, 0.2, 0.7, method="finite_diff") == pytest.approx(ins, abs=1e-6)
    with pytest.raises(qkde.ConfigError):
        qkde.kernel_derivative(k, 1, 1, 0.2, 0.7, method="bogus")


def test_gram_is_symmetric_psd():
    k = qkde.rbf_kernel(0.3)
    g = qkde.gram(k, list(np.linspace(0, 1, 12)))
    assert g.shape == (12, 12)
    assert np.allclose(g, g.T)
    assert np.linalg.eigvalsh(g).min() > -1e-10


def test_shot_estimate_close_and_deterministic():
    k = qkde.quantum_kernel(qubits=3, layers=2, hea_depth=2)
    exact = qkde.kernel_value(k, 0.1, 0.9)
    a = qkde.estimate_kernel(k, 0.1, 0.9, shots=200_000, seed=3, estimator="swap")
    assert a == qkde.estimate_kernel(k, 0.1, 0.9, shots=200_000, seed=3, estimator="swap")
    assert abs(a - exact) < 0.01
    with pytest.raises(qkde.UsageError):
        qkde.estimate_kernel(qkde.rbf_kernel(0.2), 0.0, 1.0, shots=10)


def test_regression_fit_and_predict():
    k = qkde.rbf_kernel(0.5)
    x = [0.0, 0.6, 1.3]
    f = np.array([1.0, -0.4, 0.25])
    fit = qkde.fit_regression(k, x, f, epochs=20)
    pred = qkde.predict(k, x, fit["alpha"], fit["bias"], x)
    assert np.max(np.abs(pred - f)) < 1e-6


def test_reference_solution():
    r = qkde.reference_solution("linear_fading_oscillator", [0.0, 0.5])
    assert r["f"][0] == 1.0
    assert r["f"][1] == pytest.approx(math.exp(-1.0) * math.cos(10.0), abs=1e-14)
    d = qkde.reference_solution("duffing", [0.0, 0.5])
    assert d["f"][0] == 1.0 and d["f_prime"][0] == 1.0
    with pytest.raises(qkde.ConfigError):
        qkde.reference_solution("nope", [0.0])
    assert "duffing" in qkde.problem_names()


def test_run_config_text():
    text = """
[experiment]
method = mmr
problem = linear_fading_oscillator
output_density = 4
[kernel]
type = rbf
sigma = 0.2
[grid]
count = 12
"""
    r = qkde.run_config_text(text)
    sol = r["solution"]
    assert r["columns"] == ["x", "f", "f_prime", "residual", "reference", "norm_error"]
    assert sol.shape == (45, 6)
    assert r["max_norm_error"] == pytest.approx(np.max(np.abs(sol[:, 5])))
    assert r["summary"]["status"] == "ok"
    assert "config.kernel.sigma=0.2" in r["summary_text"]
    assert "sigma = 0.2" in qkde.canonical_config(text)
    with pytest.raises(qkde.ConfigError):
        qkde.run_config_text("[kernel]\ntype = banana\n")


def test_run_config_file_bundled_regression():
    r = qkde.run_config_file(str(ROOT / "configs" / "regression_mmr.cfg"))
    assert r["final_loss"] < 1e-8
    assert len(r["history"]) <= 3
    with pytest.raises(qkde.IoError):
        qkde.run_config_file(str(ROOT / "configs" / "missing.cfg"))
