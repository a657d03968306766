import hashlib
import json
import os

import numpy as np
import pytest

from eeht import datagen
from eeht.cli import main
from eeht.linalg import as_array


def _digest(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = main(["synth", "--d", "6", "--n", "24", "--r", "3",
                 "--nu", "0.0", "--seed", "7", "--out", str(out)])
    assert code == 0
    return out


class TestSynth:
    def test_file_census(self, synth_dir):
        names = sorted(os.listdir(synth_dir))
        assert names == ["A.dmat", "H.dmat", "V.dmat", "W.dmat",
                         "manifest.json", "pure.json"]

    def test_nu_zero_noise_file(self, synth_dir):
        V = as_array(datagen.read_matrix(synth_dir / "V.dmat"))
        assert not V.any()

    def test_manifest_contents(self, synth_dir):
        manifest = json.load(open(synth_dir / "manifest.json"))
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 7
        assert manifest["parameters"]["n"] == 24
        assert "total" in manifest["timings"]

    def test_rerun_identical_digest(self, synth_dir, tmp_path):
        again = tmp_path / "again"
        assert main(["synth", "--d", "6", "--n", "24", "--r", "3",
                     "--nu", "0.0", "--seed", "7", "--out", str(again)]) == 0
        assert _digest(synth_dir / "A.dmat") == _digest(again / "A.dmat")


class TestExtract:
    def test_eeht_a_recovers_pure_set(self, synth_dir, tmp_path):
        out = tmp_path / "idx.json"
        code = main(["extract", "--input", str(synth_dir / "A.dmat"),
                     "--r", "3", "--method", "eeht-a", "--lambda", "2",
                     "--mu", "4", "--out", str(out)])
        assert code == 0
        payload = json.load(open(out))
        pure = datagen.read_indices(synth_dir / "pure.json")
        assert sorted(payload["indices"]) == sorted(pure)
        assert payload["objective"] == pytest.approx(0.0, abs=1e-6)
        assert payload["rounds"]

    def test_spa_same_set(self, synth_dir, tmp_path):
        out = tmp_path / "spa.json"
        code = main(["extract", "--input", str(synth_dir / "A.dmat"),
                     "--r", "3", "--method", "spa", "--out", str(out)])
        assert code == 0
        payload = json.load(open(out))
        pure = datagen.read_indices(synth_dir / "pure.json")
        assert sorted(payload["indices"]) == sorted(pure)

    def test_urban_scale_flags_accepted(self, tmp_path):
        big = tmp_path / "big"
        assert main(["synth", "--d", "8", "--n", "400", "--r", "3",
                     "--nu", "0.1", "--seed", "1", "--out", str(big)]) == 0
        out = tmp_path / "u.json"
        code = main(["extract", "--input", str(big / "A.dmat"),
                     "--r", "3", "--method", "eeht-b", "--lambda", "50",
                     "--mu", "300", "--out", str(out)])
        assert code == 0


class TestEval:
    def test_noiseless_zeros_and_swap_invariance(self, synth_dir, tmp_path):
        idx = tmp_path / "idx.json"
        datagen.write_indices(
            idx, datagen.read_indices(synth_dir / "pure.json"))
        out = tmp_path / "report.csv"
        code = main(["eval", "--est", str(idx),
                     "--input", str(synth_dir / "A.dmat"),
                     "--refs", str(synth_dir / "W.dmat"),
                     "--out", str(out)])
        assert code == 0
        lines = open(out).read().strip().splitlines()
        assert lines[0] == "endmember,column,reference,mrsa_x100"
        avg = float(lines[-1].split(",")[-1])
        assert avg == pytest.approx(0.0, abs=1e-5)

        # swapping the reference column order leaves the average unchanged
        W = as_array(datagen.read_matrix(synth_dir / "W.dmat"))
        swapped = tmp_path / "Wsw.dmat"
        datagen.write_matrix(swapped, W[:, ::-1])
        out2 = tmp_path / "report2.csv"
        assert main(["eval", "--est", str(idx),
                     "--input", str(synth_dir / "A.dmat"),
                     "--refs", str(swapped), "--out", str(out2)]) == 0
        avg2 = float(open(out2).read().strip().splitlines()[-1].split(",")[-1])
        assert avg2 == pytest.approx(avg, abs=1e-9)


class TestAbundanceCmd:
    def test_column_sums_and_maps(self, synth_dir, tmp_path):
        idx = tmp_path / "idx.json"
        datagen.write_indices(
            idx, datagen.read_indices(synth_dir / "pure.json"))
        out = tmp_path / "H.dmat"
        maps = tmp_path / "maps"
        code = main(["abundance", "--input", str(synth_dir / "A.dmat"),
                     "--indices", str(idx), "--width", "6", "--height", "4",
                     "--out", str(out), "--maps", str(maps)])
        assert code == 0
        H = as_array(datagen.read_matrix(out))
        assert np.allclose(np.sum(H, axis=0), 1.0, atol=1e-8)
        pgms = sorted(os.listdir(maps))
        assert len(pgms) == 3 and all(p.endswith(".pgm") for p in pgms)


class TestDensityCmd:
    def test_outputs(self, synth_dir, tmp_path):
        hist = tmp_path / "hist.csv"
        keep = tmp_path / "keep.json"
        code = main(["density", "--input", str(synth_dir / "A.dmat"),
                     "--phi", "0.4", "--omega", "0.0",
                     "--hist", str(hist), "--keep", str(keep)])
        assert code == 0
        kept = datagen.read_indices(keep)
        assert kept == list(range(24))      # omega 0 keeps everything
        rows = open(hist).read().strip().splitlines()[1:]
        assert sum(int(r.split(",")[2]) for r in rows) == 24


class TestBench:
    def test_csv_layout_and_objective_gap(self, tmp_path):
        out = tmp_path / "timings.csv"
        code = main(["bench", "--sizes", "20,30", "--d", "6", "--r", "2",
                     "--nu", "0.2", "--trials", "1", "--lambda", "2",
                     "--mu", "3", "--seed", "0", "--out", str(out)])
        assert code == 0
        lines = open(out).read().strip().splitlines()
        assert lines[0].startswith("n,")
        assert len(lines) == 3              # header + one row per size
        for line in lines[1:]:
            gap = float(line.split(",")[-1])
            assert gap <= 1e-6


class TestExitCodes:
    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["extract", "--r", "3"])
        assert err.value.code == 2
        capsys.readouterr()

    def test_numerical_failure(self, tmp_path, capsys):
        bad = tmp_path / "bad.dmat"
        bad.write_bytes(b"JUNKJUNKJUNK")
        code = main(["extract", "--input", str(bad), "--r", "2",
                     "--method", "spa", "--out", str(tmp_path / "o.json")])
        assert code == 1
        capsys.readouterr()
