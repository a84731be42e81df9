import numpy as np
import pytest

from hyperbolize.geometry import euclidean_triangle, hyperbolic_triangle
from hyperbolize.mapfile import MapFileError, load_map, save_map
from hyperbolize.solver import solve


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    te = euclidean_triangle(3, 3, 3)
    th = hyperbolic_triangle(4, 3, 3)
    st, rep = solve(th, te, 0.02, tol=1e-9, max_sweeps=100_000)
    path = tmp_path_factory.mktemp("maps") / "m.hyp"
    save_map(path, st, rep.converged, "*333", "*333", (4, 3, 3))
    return st, rep, path


def test_roundtrip_lossless(solved):
    st, rep, path = solved
    st2, meta = load_map(path)
    assert np.array_equal(st.index, st2.index)
    assert np.array_equal(st.p, st2.p)  # bit-exact
    assert meta.converged
    assert meta.target_orders == (4, 3, 3)
    assert meta.m == st.size
    assert meta.delta == st.delta


def test_checksum_detects_tampering(solved, tmp_path):
    _, _, path = solved
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    bad = tmp_path / "tampered.hyp"
    bad.write_bytes(bytes(blob))
    with pytest.raises(MapFileError, match="checksum failure"):
        load_map(bad)


def test_rejects_non_map_file(tmp_path):
    path = tmp_path / "junk.hyp"
    path.write_bytes(b"this is not a map file at all")
    with pytest.raises(MapFileError, match="not a map file"):
        load_map(path)


def test_truncated_file(solved, tmp_path):
    _, _, path = solved
    blob = path.read_bytes()
    cut = tmp_path / "cut.hyp"
    cut.write_bytes(blob[: len(blob) - 9])
    with pytest.raises(MapFileError):
        load_map(cut)
