import json
import math

import numpy as np
import pytest

import cavphase as cp


def test_spectrum_and_couplings():
    assert cp.bessel_j0_zero(1) == pytest.approx(2.404825557695773, abs=1e-12)
    assert cp.eigenenergy("spherical", 2) == pytest.approx(2 * math.pi**2, rel=1e-14)
    eta = cp.coupling_matrix("spherical", 6)
    assert eta.shape == (6, 6)
    assert np.abs(eta + eta.T).max() < 1e-9
    # eta_21 = -(-1)^{n+k} 2 n k / (n^2 - k^2) for the sphere
    assert eta[1, 0] == pytest.approx(4.0 / 3.0, rel=1e-9)


def test_evolve_conserves_norm():
    out = cp.evolve(t_end=5.0, steps_per_period=64, basis_size=8, stride=16)
    assert out["t"].shape == out["energy"].shape
    assert np.abs(out["norm"] - 1.0).max() < 1e-8
    assert out["coeffs"].shape[1] == 8
    assert np.allclose(np.sum(np.abs(out["coeffs"]) ** 2, axis=1), 1.0, atol=1e-8)


def test_predicted_peaks_include_fundamental():
    peaks = cp.predicted_peaks(lo=12.0, hi=12.6, max_order=1)
    assert any(p["n"] == 2 and p["N"] == 1 and abs(p["omega"] - 12.3459) < 1e-3 for p in peaks)


def test_spin_cyclic_beta0():
    q = 100
    alpha = math.asin(1.0 / q)
    out = cp.spin_phases(alpha, q=q)
    wrapped = math.remainder(out["beta0"] + (q - 1) * math.pi, 2 * math.pi)
    assert abs(wrapped) < 1e-9


def test_errors_are_mapped():
    with pytest.raises(ValueError):
        cp.evolve(epsilon=1.5)
    with pytest.raises(cp.ConfigError):
        cp.run_config("no_such_key = 1\n", "unused")


def test_run_config_writes_manifest(tmp_path):
    out = cp.run_config("command = spin\nspin.alpha = 0.3\n", str(tmp_path))
    assert out["exit_code"] == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["hash"] == out["hash"]
    first = (tmp_path / "spin.csv").read_text().splitlines()[0]
    assert first == "# manifest=" + out["hash"]
