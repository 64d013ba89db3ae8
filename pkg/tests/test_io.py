"""Artifact formats: bit-exact round trips and malformed-input rejection."""

import numpy as np
import pytest

from heatcavity import io as hio
from heatcavity.recon import IndicatorGrid, ProbePoint

TRICKY = np.array([0.1, 1.0 / 3.0, -1e308, 1e-300, 0.35, 0.0, -2.5e-17, 7.0])


class TestFormatFloat:
    def test_round_trips_doubles_exactly(self):
        for x in TRICKY:
            assert float(hio.format_float(x)) == x

    def test_shortest_forms(self):
        assert hio.format_float(7.0) == "7"
        assert hio.format_float(0.5) == "0.5"


class TestStop1:
    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(5)
        mat = rng.standard_normal((6, 8)) * 10.0 ** rng.integers(-12, 12, (6, 8))
        path = tmp_path / "op.stop1"
        hio.write_stop1(path, mat, M=2, Nt=4, T=0.5)
        back, header = hio.read_stop1(path)
        assert np.array_equal(back, mat)
        assert header == {"rows": 6, "cols": 8, "M": 2, "Nt": 4, "T": 0.5}

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            hio.write_stop1(tmp_path / "x.stop1", np.arange(4.0), M=1, Nt=4, T=1.0)

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.stop1"
        path.write_text("NOPE 2 2 1 2 0.5\n1 2\n3 4\n")
        with pytest.raises(hio.FormatError, match="not a STOP1 header"):
            hio.read_stop1(path)

    def test_rejects_truncated_body(self, tmp_path):
        path = tmp_path / "short.stop1"
        path.write_text("STOP1 3 2 1 2 0.5\n1 2\n3 4\n")
        with pytest.raises(hio.FormatError, match="expected 3x2"):
            hio.read_stop1(path)

    def test_rejects_short_header(self, tmp_path):
        path = tmp_path / "hdr.stop1"
        path.write_text("STOP1 2 2\n1 2\n3 4\n")
        with pytest.raises(hio.FormatError):
            hio.read_stop1(path)


class TestGram:
    def test_round_trip_bitwise(self, tmp_path):
        gram = np.array([0.1, 2.0, 1.0 / 3.0, 1e-12])
        path = tmp_path / "g.gram"
        hio.write_gram(path, gram)
        assert np.array_equal(hio.read_gram(path), gram)

    def test_rejects_nonpositive(self, tmp_path):
        path = tmp_path / "g.gram"
        path.write_text("1.0\n0.0\n2.0\n")
        with pytest.raises(hio.FormatError, match="positive"):
            hio.read_gram(path)

    def test_rejects_matrix_shaped(self, tmp_path):
        path = tmp_path / "g.gram"
        path.write_text("1.0 2.0\n3.0 4.0\n")
        with pytest.raises(hio.FormatError):
            hio.read_gram(path)


class TestSpectrumCsv:
    def test_round_trip_bitwise(self, tmp_path):
        lams = np.array([3.0, 1.0 / 7.0, 1e-15, -2e-18])
        path = tmp_path / "spectrum.csv"
        hio.write_spectrum_csv(path, lams)
        assert np.array_equal(hio.read_spectrum_csv(path), lams)
        lines = path.read_text().splitlines()
        assert lines[0] == "n,lambda"
        assert lines[1].startswith("1,")

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "spectrum.csv"
        path.write_text("idx,val\n1,2.0\n")
        with pytest.raises(hio.FormatError, match="header"):
            hio.read_spectrum_csv(path)


class TestIndicatorCsv:
    def fake_grid(self):
        pts = [ProbePoint((0.1, -0.2), 0.25), ProbePoint((1.0 / 3.0, 0.7), 0.25)]
        return IndicatorGrid(
            points=pts,
            values=np.array([2.5, np.inf]),
            normalized=np.array([1.0, 0.125]),
            mask=np.array([True, False]),
            truth=np.array([False, True]),
        )

    def test_round_trip(self, tmp_path):
        grid = self.fake_grid()
        path = tmp_path / "indicator.csv"
        hio.write_indicator_csv(path, grid)
        back = hio.read_indicator_csv(path)
        assert np.array_equal(back["y1"], [0.1, 1.0 / 3.0])
        assert np.array_equal(back["y2"], [-0.2, 0.7])
        assert np.array_equal(back["s"], [0.25, 0.25])
        assert np.array_equal(back["W"], grid.values)
        assert np.array_equal(back["normalized"], grid.normalized)
        assert np.array_equal(back["mask"], grid.mask)
        assert np.array_equal(back["truth"], grid.truth)

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "indicator.csv"
        path.write_text("x,y\n1,2\n")
        with pytest.raises(hio.FormatError, match="header"):
            hio.read_indicator_csv(path)

    def test_rejects_short_row(self, tmp_path):
        path = tmp_path / "indicator.csv"
        path.write_text("y1,y2,s,W,normalized,mask,truth\n1,2,3\n")
        with pytest.raises(hio.FormatError, match="malformed"):
            hio.read_indicator_csv(path)


class TestKeyValue:
    def test_round_trip(self, tmp_path):
        record = {"omega_kind": "circle", "Nt": 32, "T": hio.format_float(0.5)}
        path = tmp_path / "meta.txt"
        hio.write_kv(path, record)
        back = hio.read_kv(path)
        assert back == {"omega_kind": "circle", "Nt": "32", "T": "0.5"}

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("# a comment\n\nkey=value\n   # indented comment\n")
        assert hio.read_kv(path) == {"key": "value"}

    def test_equals_in_value_kept(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("expr=a=b\n")
        assert hio.read_kv(path) == {"expr": "a=b"}

    def test_whitespace_stripped(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("  key  =  value  \n")
        assert hio.read_kv(path) == {"key": "value"}

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("just a line\n")
        with pytest.raises(hio.FormatError, match="key=value"):
            hio.read_kv(path)

    def test_unwritable_key_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            hio.write_kv(tmp_path / "m.txt", {"a=b": 1})
        with pytest.raises(ValueError):
            hio.write_kv(tmp_path / "m.txt", {"a": "x\ny"})
