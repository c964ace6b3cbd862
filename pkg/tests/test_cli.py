import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pixelveil.cli import main
from pixelveil.image import Image, load_image, sample_image, save_image
from pixelveil.metrics import mse, ssim_full
from pixelveil.pixel import PixelMechanismConfig, exponential_obfuscate


@pytest.fixture
def pgm32(tmp_path, rng):
    path = tmp_path / "in.pgm"
    save_image(Image(rng.integers(0, 256, (32, 32)).astype(float)), path)
    return path


@pytest.fixture
def ppm(tmp_path, rng):
    path = tmp_path / "in.ppm"
    save_image(Image(rng.integers(0, 256, (20, 22, 3)).astype(float)), path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


class TestObfuscate:
    def test_exp_ledger(self, capsys, pgm32, tmp_path):
        out = tmp_path / "o.pgm"
        code, stdout, _ = run(capsys, "obfuscate", "--mechanism", "exp", "--epsilon", 500, "--pixelize", 2,
                              "--seed", 1, pgm32, out)
        assert code == 0 and out.exists()
        led = json.loads(stdout)
        assert abs(led["total"] - 500) <= 1e-9
        assert led["applications"] == 25 and led["remainder_values"] == 31
        assert load_image(out).shape == (32, 32, 1)

    def test_laplace_rgb(self, capsys, ppm, tmp_path):
        out = tmp_path / "o.png"
        code, stdout, _ = run(capsys, "obfuscate", "--mechanism", "laplace", "--epsilon", 1e6,
                              "--sensitive-pixels", 100, "--blur", "--seed", 0, ppm, out)
        assert code == 0
        led = json.loads(stdout)
        assert led["scale"] == pytest.approx(255 * 100 * 3 / 1e6)
        assert led["blur"] is True

    def test_byte_identical(self, capsys, pgm32, tmp_path):
        outs = [tmp_path / "a.pgm", tmp_path / "b.pgm"]
        for o in outs:
            assert run(capsys, "obfuscate", "--epsilon", 2000, "--seed", 9, pgm32, o)[0] == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_matches_library(self, capsys, pgm32, tmp_path):
        out = tmp_path / "o.png"
        run(capsys, "obfuscate", "--epsilon", 2000, "--seed", 9, pgm32, out)
        expected = exponential_obfuscate(load_image(pgm32), PixelMechanismConfig(epsilon=2000, seed=9))
        np.testing.assert_array_equal(load_image(out).data, np.floor(expected.data + 0.5))

    @pytest.mark.parametrize(
        "flags, name",
        [
            (["--epsilon", "0"], "--epsilon"),
            (["--epsilon", "-3"], "--epsilon"),
            (["--epsilon", "1", "--pixelize", "0"], "--pixelize"),
            (["--epsilon", "1", "--levels", "1"], "--levels"),
            (["--epsilon", "1", "--seed", "-1"], "--seed"),
            (["--epsilon", "1", "--window", "5"], "tractab"),
        ],
    )
    def test_usage_errors(self, capsys, pgm32, tmp_path, flags, name):
        argv = ["obfuscate", *flags]
        if "--seed" not in flags:
            argv += ["--seed", "1"]
        code, _, err = run(capsys, *argv, pgm32, tmp_path / "o.pgm")
        assert code == 2
        assert name in err and "usage" in err

    def test_missing_input(self, capsys, tmp_path):
        code, _, err = run(capsys, "obfuscate", "--epsilon", 1, "--seed", 1, tmp_path / "nope.pgm", tmp_path / "o.pgm")
        assert code == 1 and "nope.pgm" in err

    def test_bad_output_format(self, capsys, ppm, tmp_path):
        code, _, _ = run(capsys, "obfuscate", "--epsilon", 1, "--seed", 1, ppm, tmp_path / "o.pgm")
        assert code == 1

    def test_missing_seed_is_usage_error(self, pgm32, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["obfuscate", "--epsilon", "1", str(pgm32), str(tmp_path / "o.pgm")])
        assert exc.value.code == 2


class TestMetrics:
    def test_identity(self, capsys, pgm32):
        code, out, _ = run(capsys, "metrics", "--ssim", "--mse", pgm32, pgm32)
        assert code == 0
        assert json.loads(out) == {"ssim": 1.0, "mse": 0.0}

    def test_matches_library(self, capsys, pgm32, tmp_path):
        other = tmp_path / "o.pgm"
        run(capsys, "obfuscate", "--epsilon", 1e4, "--seed", 2, pgm32, other)
        code, out, _ = run(capsys, "metrics", pgm32, other)
        got = json.loads(out)
        a, b = load_image(pgm32), load_image(other)
        assert got == {"ssim": ssim_full(a, b), "mse": mse(a, b)}

    def test_only_mse(self, capsys, pgm32):
        assert json.loads(run(capsys, "metrics", "--mse", pgm32, pgm32)[1]) == {"mse": 0.0}

    def test_mismatch(self, capsys, pgm32, ppm):
        code, _, err = run(capsys, "metrics", pgm32, ppm)
        assert code == 1 and "32x32x1" in err and "22x20x3" in err


class TestVectorCommands:
    def test_obfuscate(self, capsys, tmp_path):
        src = write_json(tmp_path / "v.json", {"ranges": [[0, 1], [-5, 5]], "vectors": [[0.5, 0.0], [0.1, 4.0]]})
        out = tmp_path / "o.json"
        code, stdout, _ = run(capsys, "vector", "obfuscate", "--epsilon", 1e12, "--seed", 3, src, out)
        assert code == 0
        doc = json.loads(out.read_text())
        np.testing.assert_allclose(doc["vectors"], [[0.5, 0.0], [0.1, 4.0]], atol=1e-3)
        bounds = json.loads(stdout)["bounds"]
        assert [r["d"] for r in bounds] == [0.001, 0.01, 0.1, 1.0]
        assert bounds[0]["bound"] is None and bounds[0]["eps_d"] == 1e9
        again = tmp_path / "p.json"
        run(capsys, "vector", "obfuscate", "--epsilon", 1e12, "--seed", 3, src, again)
        assert again.read_bytes() == out.read_bytes()

    def test_ksame_identical(self, capsys, tmp_path):
        src = write_json(tmp_path / "v.json", {"ranges": [[0, 1]] * 2, "vectors": [[0.2, 0.7]] * 4})
        out = tmp_path / "o.json"
        assert run(capsys, "vector", "ksame", "--k", 2, src, out)[0] == 0
        assert json.loads(out.read_text())["vectors"] == [[0.2, 0.7]] * 4

    def test_attack_identical(self, capsys, tmp_path):
        doc = {"ranges": [[0, 1]], "vectors": [[0.1], [0.2], [0.8], [0.9]], "ids": ["a", "b", "c", "d"]}
        a = write_json(tmp_path / "a.json", doc)
        ids = write_json(tmp_path / "ids.json", ["a", "c"])
        code, out, _ = run(capsys, "vector", "attack", "--k", 2, a, a, ids)
        assert code == 0
        rep = json.loads(out)
        assert rep["violations"] == 0 and rep["min"] == 2

    def test_attack_violation(self, capsys, tmp_path):
        a = write_json(tmp_path / "a.json", {"ranges": [[0, 1]], "vectors": [[0.1], [0.15], [0.8], [0.85]], "ids": [1, 2, 3, 4]})
        b = write_json(tmp_path / "b.json", {"ranges": [[0, 1]], "vectors": [[0.1], [0.8], [0.15], [0.85]], "ids": [1, 2, 3, 4]})
        ids = write_json(tmp_path / "ids.json", {"ids": [1]})
        rep = json.loads(run(capsys, "vector", "attack", "--k", 2, a, b, ids)[1])
        assert rep["min"] == 1 and rep["violations"] == 1

    def test_schema_error(self, capsys, tmp_path):
        bad = write_json(tmp_path / "v.json", {"vectors": [[1]]})
        code, _, err = run(capsys, "vector", "ksame", "--k", 1, bad, tmp_path / "o.json")
        assert code == 2 and "'ranges'" in err

    def test_approx(self, capsys, tmp_path):
        g = write_json(tmp_path / "g.json", {"ranges": [[-10, 10]] * 3, "vectors": [[1, 2, 3], [0, 1, -1]]})
        t = write_json(tmp_path / "t.json", {"ranges": [[-10, 10]] * 3, "vectors": [[0, 1, -1]]})
        out = tmp_path / "o.json"
        assert run(capsys, "approx", "--gallery", g, "--target", t, out)[0] == 0
        doc = json.loads(out.read_text())
        assert doc["objective"] < 1e-6 and doc["status"] == "optimal"
        np.testing.assert_allclose(doc["weights"], [0, 1], atol=1e-7)
        np.testing.assert_allclose(doc["synthesized"], [0, 1, -1], atol=1e-7)

    def test_approx_dimension_mismatch(self, capsys, tmp_path):
        g = write_json(tmp_path / "g.json", {"ranges": [[0, 1]] * 2, "vectors": [[0, 1]]})
        t = write_json(tmp_path / "t.json", {"ranges": [[0, 1]] * 3, "vectors": [[0, 1, 0]]})
        assert run(capsys, "approx", "--gallery", g, "--target", t, tmp_path / "o.json")[0] == 2


def test_module_entry_point(tmp_path):
    path = tmp_path / "s.pgm"
    save_image(sample_image(), path)
    res = subprocess.run([sys.executable, "-m", "pixelveil", "metrics", str(path), str(path)],
                         capture_output=True, text=True, env=os.environ.copy())
    assert res.returncode == 0 and json.loads(res.stdout)["ssim"] == 1.0
