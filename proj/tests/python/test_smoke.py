import os
import subprocess

import numpy as np
import pytest

aerovio = pytest.importorskip("aerovio")


def test_toy_qp():
    r = aerovio.minimize_qp(2 * np.eye(2), np.array([-6.0, -8.0]), np.array([[1.0, 1.0]]), np.array([5.0]))
    assert r["status"] == "Converged"
    assert np.allclose(r["s"], [2.0, 3.0], atol=1e-8)
    assert r["lambda"][0] == pytest.approx(2.0, abs=1e-8)


def test_random_qp_matches_kkt():
    rng = np.random.default_rng(3)
    n, m = 12, 5
    M = rng.standard_normal((n, n))
    H = M.T @ M / n + 0.1 * np.eye(n)
    c = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    K = np.block([[H, A.T], [A, np.zeros((m, m))]])
    oracle = np.linalg.solve(K, np.concatenate([-c, b]))[:n]
    r = aerovio.minimize_qp(H, c, A, b, tol_pg=1e-10)
    assert np.linalg.norm(r["s"] - oracle) <= 1e-6 * (1 + np.linalg.norm(oracle))


def test_range_quartic():
    r = aerovio.minimize_range(np.array([[1.0, -1.0]]), np.array([0.0]), np.zeros(2), 25.0, np.array([4.0, 4.0]))
    assert np.allclose(r["s"], [5 / np.sqrt(2)] * 2, atol=1e-8)


def test_projector_and_reduce():
    A = np.array([[1.0, 2.0, 0.0]])
    P = aerovio.build_projector(A)
    assert np.allclose(P @ P, P)
    assert np.allclose(P @ A.T, 0)
    with pytest.raises(aerovio.RankDeficientError):
        aerovio.build_projector(np.array([[1.0, 1.0], [2.0, 2.0]]))
    R, r = aerovio.reduce(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]), np.array([1.0, 2.0]))
    assert R.shape == (1, 3)
    s = np.array([0.5, 0.5, 7.0])
    assert np.allclose(R @ s, r)


def test_short_noiseless_simulation():
    r = aerovio.simulate(seed=2, duration=30, climb_rate=1.0, noise=False)
    assert r["frames"] == 31
    assert r["failed_frames"] == 0
    assert r["final_err_m"] <= 1e-3


@pytest.mark.skipif("AEROVIO_CLI" not in os.environ, reason="CLI path not given")
def test_cli_solve(tmp_path):
    problem = tmp_path / "p.txt"
    problem.write_text("2 1\n1 1\n5\nquadratic\n2 0\n0 2\n-6 -8\n")
    out = subprocess.run([os.environ["AEROVIO_CLI"], "solve", str(problem)], capture_output=True, text=True)
    assert out.returncode == 0
    assert "s*: 2.000000 3.000000" in out.stdout
