import os
from pathlib import Path

import numpy as np
import pytest

import onebit

DATA = Path(os.environ.get("ONEBIT_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
FIXTURE = DATA / "obmnet_qpsk_K4_N32_L10.txt"


def test_constellation_unit_energy():
    for mod in ("qpsk", "16qam"):
        pts = np.asarray(onebit.constellation(mod))
        assert np.isclose(np.mean(np.abs(pts) ** 2), 1.0)


def test_transmit_outputs_are_one_bit():
    h = onebit.sample_channel(2, 8, seed=3)
    x = onebit.random_symbols("qpsk", 2, seed=4)
    out = onebit.transmit(h, x, 0.1, seed=5)
    assert set(np.unique(out["y"].real)) <= {-1.0, 1.0}
    assert set(np.unique(out["y"].imag)) <= {-1.0, 1.0}


def test_bussgang_identity():
    h = onebit.sample_channel(3, 10, seed=11)
    n0 = 0.3
    b = onebit.bussgang_model(h, n0)
    a = b["effective_channel"]
    lhs = a @ a.conj().T + b["noise_cov"]
    rhs = onebit.arcsine_law(onebit.received_covariance(h, n0))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_zf_combiner_inverts_channel():
    h = onebit.sample_channel(2, 8, seed=1)
    w = onebit.combiner("ZF", h, 0.1)
    assert np.allclose(w @ h, np.eye(2))


def test_noiseless_linear_detection():
    h = onebit.sample_channel(2, 32, seed=2)
    x = onebit.random_symbols("qpsk", 2, seed=9)
    y = onebit.transmit(h, x, 1e-4, seed=10)["y"]
    soft, symbols = onebit.detect_linear("BZF", h, 1e-4, y)
    assert np.isclose(np.linalg.norm(soft) ** 2, 2.0)
    assert np.allclose(symbols, x)


def test_log_phi_matches_cdf():
    for t in (-3.0, 0.0, 2.5):
        assert np.isclose(onebit.log_phi(t), np.log(onebit.normal_cdf(t)))
    assert onebit.log_phi(-40.0) < -800


def test_robust_gradient_finite_difference():
    hc = onebit.sample_channel(2, 8, seed=6)
    x0 = onebit.random_symbols("qpsk", 2, seed=7)
    h = onebit.lift_matrix(hc)
    y = onebit.lift_vector(onebit.transmit(hc, x0, 0.2, seed=8)["y"])
    x = np.array([0.3, -0.2, 0.5, 0.1])
    g = onebit.robust_gradient(x, h, y, 5.0)
    step = 1e-6
    fd = np.array([
        (onebit.robust_ml_objective(x + step * e, h, y, 5.0)
         - onebit.robust_ml_objective(x - step * e, h, y, 5.0)) / (2 * step)
        for e in np.eye(4)
    ])
    assert np.allclose(g, fd, rtol=1e-6, atol=1e-8)


def test_nearest_vectors_match_brute_force():
    soft = np.array([0.1, -0.5, -0.3, 0.8])
    gamma = onebit.default_gamma("qpsk")
    fast = onebit.nearest_vectors(soft, gamma, 4)
    slow = onebit.brute_force_top_m(soft, gamma, 4)
    assert len(fast) == 4
    for a, b in zip(fast, slow):
        assert np.array_equal(a, b)


def test_nn_search_uses_objective():
    soft = np.array([0.1, -0.5, -0.3, 0.8])
    target = np.array([-1.0, -1.0, 1.0, 1.0]) / np.sqrt(2)
    best, cost, visited = onebit.nn_search(
        soft, onebit.default_gamma("qpsk"), 4, lambda v: float(np.sum((v - target) ** 2)))
    assert len(visited) == 4
    assert cost == min(float(np.sum((v - target) ** 2)) for v in visited)


def test_obmnet_fixture_detects_noiseless():
    p = onebit.load_params(FIXTURE)
    assert (p.users, p.antennas, p.layers, p.modulation) == (4, 32, 10, "qpsk")
    h = onebit.sample_channel(4, 32, seed=21)
    xs = [onebit.random_symbols("qpsk", 4, seed=s) for s in range(5)]
    y = np.column_stack([onebit.lift_vector(onebit.transmit(h, x, 1e-3, seed=40 + i)["y"])
                         for i, x in enumerate(xs)])
    decided = onebit.obmnet_detect(p, onebit.lift_matrix(h), y)
    truth = np.column_stack([onebit.lift_vector(x) for x in xs])
    assert np.mean(decided == truth) > 0.95
    soft = onebit.obmnet_soft(p, onebit.lift_matrix(h), y)
    assert np.allclose(np.linalg.norm(soft, axis=0), 2.0)


def test_params_round_trip(tmp_path):
    p = onebit.load_params(FIXTURE)
    out = tmp_path / "p.txt"
    onebit.save_params(p, out)
    assert out.read_text().splitlines()[0] == "obmnet v1 qpsk K=4 N=32 L=10"
    assert onebit.load_params(out).alphas == p.alphas


def test_short_training_run():
    p = onebit.train("qpsk", 2, 8, 3, {"num_batches": 20, "batch_size": 50, "seed": 3})
    assert p.layers == 3 and p.batches == 20


def test_run_ber_rows_and_csv():
    cfg = {"K": 2, "N": 16, "modulation": "qpsk", "snr_db": [0, 10],
           "receiver": ["MRC", "BMMSE"], "stage2_M": [2], "trials": 200, "seed": 5}
    rows = onebit.run_ber(cfg)
    assert len(rows) == 2 * 2 * 2
    assert {(r["stage"], r["M"]) for r in rows} == {(1, 1), (2, 2)}
    assert all(0.0 <= r["ber"] <= 1.0 and r["trials"] == 200 for r in rows)
    csv = onebit.ber_csv(cfg)
    lines = csv.split("\n")
    assert lines[0] == "# seed=5"
    assert lines[1] == "snr_db,receiver,stage,M,trials,bit_errors,ber,mean_detect_time_s"
    assert "\r" not in csv


def test_config_errors_raise_value_error():
    with pytest.raises(onebit.ConfigError, match="tau"):
        onebit.run_ber({"K": 2, "N": 16, "modulation": "qpsk", "snr_db": 10, "receiver": "MRC", "trials": 10,
                        "csi": "perturbed", "tau": 1.5})
    with pytest.raises(ValueError):
        onebit.run_ber("K = 2\nN = 16\nmodulation = qpsk\nsnr_db = 10\nreceiver = NOPE\ntrials = 10\n")
