import struct

import numpy as np
import pytest

from krerank.core import EmbeddingSet, RankedResult
from krerank.errors import AsymmetryWarning, BadMagic, NonFiniteValue, NotSquare, TruncatedFile
from krerank.io import (
    load_distance_matrix,
    load_features,
    load_rankings,
    read_krf,
    save_distance_matrix,
    save_features,
    save_features_csv,
    save_rankings,
)


def f32_set(rng, n=6, d=3):
    data = rng.normal(size=(n, d)).astype(np.float32).astype(np.float64)
    return EmbeddingSet(data, rng.integers(0, 9, n), rng.integers(0, 3, n))


def krf_bytes(rows, ids=None, cams=None):
    rows = np.asarray(rows, dtype="<f4")
    flags = (ids is not None) | ((cams is not None) << 1)
    out = struct.pack("<4sIII", b"KRF1", rows.shape[0], rows.shape[1], flags) + rows.tobytes()
    if ids is not None:
        out += np.asarray(ids, "<i4").tobytes()
    if cams is not None:
        out += np.asarray(cams, "<i4").tobytes()
    return out


def test_hand_built_file(tmp_path):
    path = tmp_path / "a.krf"
    path.write_bytes(krf_bytes([[1, 2, 3], [4, 5, 6]], ids=[10, 11]))
    es = load_features(path)
    assert es.data.shape == (2, 3)
    assert es.data.tolist() == [[1, 2, 3], [4, 5, 6]]
    assert es.ids.tolist() == [10, 11]
    assert es.cams.tolist() == [-1, -1]


def test_round_trip_bit_exact(tmp_path, rng):
    es = f32_set(rng)
    path = tmp_path / "x.krf"
    save_features(path, es)
    back = load_features(path)
    assert back.data.tobytes() == es.data.tobytes()
    assert (back.ids == es.ids).all() and (back.cams == es.cams).all()
    again = tmp_path / "y.krf"
    save_features(again, back)
    assert again.read_bytes() == path.read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.krf"
    path.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(BadMagic):
        load_features(path)


@pytest.mark.parametrize("cut", [1, 5, 13])
def test_truncated(cut):
    raw = krf_bytes([[1, 2], [3, 4]], ids=[0, 1], cams=[0, 0])
    with pytest.raises(TruncatedFile):
        read_krf(raw[:-cut])


def test_trailing_bytes_rejected():
    with pytest.raises(TruncatedFile):
        read_krf(krf_bytes([[1, 2]]) + b"\0")


def test_nan_payload():
    with pytest.raises(NonFiniteValue) as exc:
        read_krf(krf_bytes([[1, 2], [3, np.inf], [0, 0]]))
    assert exc.value.row == 1


def test_csv_features(tmp_path, rng):
    es = f32_set(rng)
    path = tmp_path / "f.csv"
    save_features_csv(path, es)
    back = load_features(path)
    assert back.data.tobytes() == es.data.tobytes()
    assert back.ids.tolist() == es.ids.tolist()


def test_csv_without_labels(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("f0,f1\n1,2\n3,4\n")
    es = load_features(path)
    assert es.data.tolist() == [[1, 2], [3, 4]]
    assert es.ids.tolist() == [0, 1]


def test_csv_nan_row(tmp_path):
    lines = ["f0,f1,id,cam"] + [f"{i},{i},{i},0" for i in range(7)] + ["nan,1,7,0", "1,1,8,0"]
    path = tmp_path / "f.csv"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(NonFiniteValue) as exc:
        load_features(path)
    assert exc.value.row == 7


class TestDistanceFiles:
    def test_symmetric_csv(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,1,2\n1,0,3\n2,3,0\n")
        d = load_distance_matrix(path, 1)
        assert d.values.tolist() == [[0, 1, 2], [1, 0, 3], [2, 3, 0]]
        assert d.n_probe == 1

    def test_not_square(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,1,2,3\n1,0,3,4\n2,3,0,5\n")
        with pytest.raises(NotSquare):
            load_distance_matrix(path, 1)

    def test_symmetrized_with_warning(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,1.001,2\n1,0,3\n2,3,0\n")
        with pytest.warns(AsymmetryWarning):
            d = load_distance_matrix(path, 1)
        assert d.values[0, 1] == d.values[1, 0] == (1.001 + 1) / 2
        assert (d.values == d.values.T).all()

    def test_non_finite(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,1\ninf,0\n")
        with pytest.raises(NonFiniteValue) as exc:
            load_distance_matrix(path, 1)
        assert exc.value.row == 1

    @pytest.mark.parametrize("suffix", [".csv", ".npy"])
    def test_round_trip(self, tmp_path, rng, suffix):
        from krerank.distance import pairwise_distance

        d = pairwise_distance(EmbeddingSet(rng.normal(size=(7, 2))), n_probe=2)
        path = tmp_path / f"d{suffix}"
        save_distance_matrix(path, d)
        assert load_distance_matrix(path, 2).values.tobytes() == d.values.tobytes()


def test_rankings_round_trip(tmp_path, rng):
    results = [
        RankedResult(p, rng.permutation(5), np.sort(rng.random(5))) for p in range(3)
    ]
    path = tmp_path / "r.csv"
    save_rankings(path, results)
    back = load_rankings(path)
    for a, b in zip(results, back):
        assert a.probe_index == b.probe_index
        assert a.order.tolist() == b.order.tolist()
        assert a.distances.tobytes() == b.distances.tobytes()
    assert path.read_text().splitlines()[0] == "probe_index,rank,gallery_index,final_distance"
