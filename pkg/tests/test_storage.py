import sqlite3

import numpy as np
import pandas as pd
import pytest

from src.core.hashing import ContentHasher
from src.database.connection import RegistryConnection
from src.database.migrations import Migration
from src.hamiltonians.builder import CouplingMatrix
from src.models.run import Artifact, Run
from src.utils.io import (
    atomic_write,
    canonical_json,
    read_couplings,
    read_csv,
    read_json,
    write_couplings,
    write_csv,
    write_json,
)


@pytest.fixture
def registry(tmp_path):
    db = RegistryConnection(tmp_path / "registry.sqlite")
    yield db
    db.close()


class TestArtifactFiles:

    def test_float_format(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", {"t": [0.0, 0.1], "re": [0.5, -1.25e-3]})
        lines = path.read_text().splitlines()
        assert lines[0] == "t,re"
        assert lines[2] == "1.000000000000e-01,-1.250000000000e-03"

    def test_empty_frame_keeps_header(self, tmp_path):
        path = write_csv(tmp_path / "empty.csv", pd.DataFrame(), columns=["a", "b"])
        assert path.read_text() == "a,b\n"

    def test_atomic_write_replaces_without_leftovers(self, tmp_path):
        target = tmp_path / "sub" / "file.txt"
        atomic_write(target, "first")
        atomic_write(target, b"second")
        assert target.read_text() == "second"
        assert [p.name for p in target.parent.iterdir()] == ["file.txt"]

    def test_canonical_json_is_key_sorted(self, tmp_path):
        text = canonical_json({"b": np.float64(1.5), "a": np.arange(2), "c": np.bool_(True)})
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert text.endswith("\n")
        path = write_json(tmp_path / "x.json", {"b": 1, "a": [1, 2]})
        assert read_json(path) == {"a": [1, 2], "b": 1}

    def test_json_rejects_unknown_types(self):
        with pytest.raises(TypeError):
            canonical_json({"x": object()})

    def test_missing_artifact(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_csv(tmp_path / "none.csv")
        with pytest.raises(FileNotFoundError):
            read_json(tmp_path / "none.json")

    def test_couplings_file(self, tmp_path):
        Jxx = np.array([[0, 1.0, 0.25], [1.0, 0, -0.5], [0.25, -0.5, 0]])
        Jzz = np.array([[0, 2.0, 0], [2.0, 0, 0], [0, 0, 0]])
        path = write_couplings(tmp_path / "couplings.csv", CouplingMatrix(Jxx=Jxx, Jzz=Jzz))
        table = read_csv(path)
        assert list(table.columns) == ["i", "j", "Jxx", "Jzz"]
        assert len(table) == 3
        restored = read_couplings(path)
        np.testing.assert_array_equal(restored.Jxx, Jxx)
        np.testing.assert_array_equal(restored.Jzz, Jzz)

    def test_couplings_reject_diagonal(self, tmp_path):
        path = write_csv(tmp_path / "bad.csv", {"i": [1], "j": [1], "Jxx": [0.5], "Jzz": [0.0]})
        with pytest.raises(ValueError):
            read_couplings(path)


class TestHashing:

    def test_blob_hash_matches_git(self):
        assert ContentHasher.blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        assert ContentHasher.blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"

    def test_sha256(self):
        assert ContentHasher.sha256("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"

    def test_file_hash(self, tmp_path):
        path = atomic_write(tmp_path / "h.txt", "hello\n")
        assert ContentHasher.file_hash(path) == ContentHasher.blob_hash("hello\n")


class TestRegistry:

    def test_run_lifecycle(self, registry, tmp_path):
        runs = Run(registry)
        run_id = runs.start("spectrum", "abc", tmp_path / "out")
        assert runs.read(run_id)["status"] == "running"
        assert runs.latest() is None
        runs.finish(run_id, 1.5)
        record = runs.read(run_id)
        assert record["status"] == "ok"
        assert record["wall_time"] == 1.5
        assert runs.latest("spectrum")["id"] == run_id
        assert runs.latest("dynamics") is None

    def test_failed_run(self, registry, tmp_path):
        runs = Run(registry)
        run_id = runs.start("zeromode", "def", tmp_path)
        runs.fail(run_id, 0.1, "сбой")
        assert runs.read(run_id)["message"] == "сбой"
        assert runs.with_config("def")[0]["status"] == "failed"
        assert not runs.update(run_id + 100, {"status": "ok"})

    def test_artifacts(self, registry, tmp_path):
        run_id = Run(registry).start("dynamics", "h", tmp_path)
        artifacts = Artifact(registry)
        artifacts.register(run_id, "ttc_z1.csv", "series", "0" * 40)
        artifacts.register(run_id, "fft_z1.csv", "spectrum", "1" * 40)
        assert [a["path"] for a in artifacts.for_run(run_id)] == ["fft_z1.csv", "ttc_z1.csv"]
        assert len(artifacts.for_run(run_id, "series")) == 1
        with pytest.raises(sqlite3.IntegrityError):
            artifacts.register(run_id, "ttc_z1.csv", "series", "2" * 40)

    def test_transaction_rolls_back(self, registry, tmp_path):
        runs = Run(registry)
        with pytest.raises(RuntimeError):
            with registry.transaction():
                runs.start("spectrum", "x", tmp_path)
                raise RuntimeError("стоп")
        assert runs.count() == 0

    def test_migrations_are_idempotent(self, registry):
        migration = Migration(registry)
        migration.run_all()
        assert migration.applied_versions() == [1, 2]
