import json
import subprocess
import sys

import numpy as np
import pytest

from smaxwell.cli import bundled, main
from smaxwell.config import ConfigError, RunConfig, load_config
from smaxwell.fieldio import read_field, write_field
from smaxwell.fields import GridSpec, OneForm, ScalarField, gradient

SMALL = {"grid": {"n": 4, "m": 4, "L": 4.0}, "seed": {"radius": 3.5}}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_bundled_config_loads():
    cfg = load_config(bundled("n4m8.json"))
    assert cfg.grid == GridSpec(4, 8, 4.0)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [
    {"grid": {"n": 4, "m": 7, "L": 4.0}},
    {"grid": {"n": 2, "m": 8, "L": 4.0}},
    {"nonlinearity": {"p": 6.0, "q": 3.0}},
    {"seed": {"radius": 9.0}},
    {"seed": {"amplitudes": [1.0]}},
    {"outer": {"max_sweeps": 0}},
    {"inner": {"nonsense": 1}},
    {"colour": "blue"},
    [1, 2],
])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_solve_exit_codes(tmp_path, capsys):
    assert main(["solve", "--config", write_cfg(tmp_path, {"grid": {"n": 4, "m": 7, "L": 4.0}}),
                 "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["solve", "--config", write_cfg(tmp_path, SMALL)]) == 2  # no output directory


def test_solve_small_grid_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["solve", "--config", write_cfg(tmp_path, SMALL), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["j_value"] > 0 and rep["flags"] == [] and rep["rng_seed"] == 0
    u, w, A = (read_field(out / f) for f in ("u.bin", "w.bin", "A.bin"))
    assert isinstance(u, OneForm) and isinstance(w, ScalarField)
    assert np.allclose(A.components, (u + gradient(w)).components, atol=1e-12)
    assert (out / "trace.csv").read_text().startswith("sweep,path_max,grad_norm,step")


def test_max_sweeps_one_exits_3_and_still_writes(tmp_path):
    cfg = dict(SMALL, outer={"max_sweeps": 1})
    out = tmp_path / "run"
    assert main(["solve", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 3
    rep = json.loads((out / "report.json").read_text())
    assert "not_converged" in rep["flags"]
    assert (out / "u.bin").exists()


def test_verify_exit_codes(capsys):
    assert main(["verify", "--suite", "calculus"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("suite,check,passed,value,threshold,detail")
    assert "FAIL" not in out
    assert main(["verify", "--suite", "nope"]) == 2


def test_verify_failed_check_exits_1(capsys):
    # the Omega-split upper bound is violated on random fields
    assert main(["verify", "--suite", "orlicz"]) == 1
    assert "sandwich_upper" in capsys.readouterr().err


def test_norm_of_bundled_four_site_dump(capsys):
    assert main(["norm", "--field", str(bundled("four_site.bin"))]) == 0
    first = capsys.readouterr().out.splitlines()[0].split()
    assert float(first[1]) == pytest.approx(2.0554230613178675, rel=1e-12)
    assert float(first[0]) <= float(first[1])


def test_norm_of_zero_dump(tmp_path, capsys):
    path = tmp_path / "z.bin"
    write_field(path, ScalarField.zeros(GridSpec(2, 4, 1.0)))
    assert main(["norm", "--field", str(path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "0 0 0"


def test_norm_malformed_dumps(tmp_path):
    path = tmp_path / "t.bin"
    write_field(path, ScalarField(np.ones((4, 4)), GridSpec(2, 4, 1.0)))
    path.write_bytes(path.read_bytes()[:-3])
    assert main(["norm", "--field", str(path)]) == 2
    assert main(["norm", "--field", str(tmp_path / "missing.bin")]) == 2
    good = tmp_path / "g.bin"
    write_field(good, ScalarField(np.ones((4, 4)), GridSpec(2, 4, 1.0)))
    assert main(["norm", "--field", str(good), "--p", "7", "--q", "3"]) == 2


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "smaxwell", "verify", "--suite", "nope"],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "unknown suite" in res.stderr
