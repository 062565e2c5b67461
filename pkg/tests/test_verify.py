import numpy as np
import pytest

import zoslice.verify as vf
from zoslice.bench import load_spec, run_experiment
from zoslice.cli import main
from zoslice.directions import DirectionMatrix


def test_cli_verify_battery_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "12/12 properties passed" in out
    assert "FAIL" not in out


def test_haar_check_catches_missing_sign_correction(monkeypatch):
    # raw QR output is not Haar: LAPACK's Householder convention ties the
    # column signs to the leading entries, so the entry means shift away
    # from zero while V V' (and every second-moment statistic) is unchanged
    def raw_qr(rng, d, m):
        G = rng.standard_normal((d, m))
        Q, _ = np.linalg.qr(G)
        return DirectionMatrix.dense(Q)

    vf.check_haar_first_moment()
    monkeypatch.setattr(vf, "sample_uniform_stiefel", raw_qr)
    with pytest.raises(AssertionError, match="first moment"):
        vf.check_haar_first_moment()


def test_battery_reports_failure_count(monkeypatch):
    lines = []
    monkeypatch.setattr(
        vf, "CHECKS", [("boom", lambda: (_ for _ in ()).throw(AssertionError("nope")))]
    )
    failures = vf.run_battery(out=lines.append)
    assert failures == 1
    assert any(line.startswith("FAIL") for line in lines)


def test_pilot_preconditioning_recorded(tmp_path):
    spec = load_spec(
        "custom",
        {
            "target": {"kind": "gaussian", "variances": [1.0, 25.0]},
            "kernels": ["rwm", "rs-mala"],
            "m": [2],
            "iterations": 600,
            "chunk_size": None,
            "precondition": "pilot-diag",
        },
    )
    code, manifest = run_experiment(spec, tmp_path)
    assert code == 0
    assert manifest["precondition"]["mode"] == "pilot-diag"
    assert manifest["precondition"]["pilot_seed"] is not None
    assert all(c["status"] == "ok" for c in manifest["cells"])
