import json

import pytest

from hyperbolize.cli import main


def run(argv):
    return main(argv)


@pytest.fixture(scope="module")
def map433(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "m433.hyp"
    code = run([
        "solve", "--from", "*333", "--to", "4,3,3",
        "--delta", "0.015", "--tol", "1e-9", "--out", str(path),
    ])
    assert code == 0
    return path


def test_solve_rejects_euclidean_target(capsys):
    assert run(["solve", "--from", "*333", "--to", "3,3,3"]) == 3
    assert "not hyperbolic" in capsys.readouterr().err


def test_solve_rejects_unknown_signature(capsys):
    assert run(["solve", "--from", "p9", "--to", "4,3,3"]) == 3


def test_solve_accepts_alias_732(tmp_path):
    out = tmp_path / "m732.hyp"
    code = run([
        "solve", "--from", "p6m", "--to", "7,3,2",
        "--delta", "0.009", "--tol", "1e-8", "--out", str(out),
    ])
    assert code == 0
    assert out.exists()


def test_solve_nonconvergence_exit(tmp_path):
    out = tmp_path / "bad.hyp"
    code = run([
        "solve", "--from", "*333", "--to", "4,3,3",
        "--delta", "0.02", "--tol", "0", "--max-sweeps", "5", "--out", str(out),
    ])
    assert code == 4


def test_p1_without_rectangle_unsupported(capsys):
    assert run(["solve", "--from", "p1", "--to", "3,2,3,2"]) == 3
    assert "two-parameter" in capsys.readouterr().err


def test_p1_with_rectangle_assertion(tmp_path):
    out = tmp_path / "p1.hyp"
    code = run([
        "solve", "--from", "p1", "--to", "3,2,3,2", "--rectangular-cell",
        "--modulus", "0.4", "--delta", "0.04", "--tol", "1e-7", "--out", str(out),
    ])
    assert code == 0


def test_verify_passes(map433, capsys):
    assert run(["verify", str(map433)]) == 0
    out = capsys.readouterr().out
    assert "rho" in out and "PASS" in out


def test_verify_missing_file():
    assert run(["verify", "/tmp/definitely-not-here.hyp"]) == 2


def test_verify_tampered_file(map433, tmp_path, capsys):
    blob = bytearray(map433.read_bytes())
    blob[len(blob) // 2] ^= 0x5A
    bad = tmp_path / "bad.hyp"
    bad.write_bytes(bytes(blob))
    assert run(["verify", str(bad)]) == 2
    assert "checksum" in capsys.readouterr().err


def test_verify_oversize_cap(map433, capsys):
    assert run(["verify", str(map433), "--cap", "10"]) == 5
    assert "too large" in capsys.readouterr().err


def test_render_and_reproducibility(map433, tmp_path, capsys):
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    args = ["render", str(map433), "--ornament", "checkerboard",
            "--resolution", "128", "--word-cap", "60", "--check-samples", "400"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert "symmetry check" in capsys.readouterr().out


def test_render_grid_ornament(map433, tmp_path):
    out = tmp_path / "grid.png"
    code = run(["render", str(map433), "--ornament", "grid",
                "--resolution", "96", "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_render_missing_map():
    assert run(["render", "/tmp/missing.hyp", "--out", "/tmp/x.png"]) == 2


def test_render_raster_ornament(map433, tmp_path):
    import numpy as np

    from hyperbolize.renderer import write_png

    src = tmp_path / "src.png"
    rng = np.random.default_rng(0)
    write_png(src, rng.uniform(0, 1, (32, 32, 3)))
    out = tmp_path / "raster.png"
    code = run(["render", str(map433), "--ornament", str(src),
                "--resolution", "96", "--out", str(out)])
    assert code == 0


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "from": "*333", "to": "4,3,3", "delta": 0.05,
        "tol": 1e-7, "out": str(tmp_path / "cfg.hyp"),
    }))
    # flag overrides the config's too-coarse delta
    code = run(["solve", "--config", str(cfg), "--delta", "0.02"])
    assert code == 0
    assert (tmp_path / "cfg.hyp").exists()


def test_modulus_search_square(tmp_path, capsys):
    out = tmp_path / "quad.hyp"
    code = run([
        "modulus", "--from", "pmm", "--to", "3,2,3,2",
        "--aspect", "1.0", "--delta", "0.035", "--tol", "5e-3", "--out", str(out),
    ])
    assert code == 0
    assert "t_star" in capsys.readouterr().out
    assert out.exists()


def test_modulus_rejects_triangle_supergroup(capsys):
    assert run(["modulus", "--from", "*333", "--to", "4,3,3,3"]) == 3
