"""On-disk experiment store for one problem dimension.

Layout under the store root::

    manifest.json
    suite.json
    traj/f{fid}_a{alg}.json          run index for one (function, algorithm)
    traj/f{fid}_a{alg}_r{run}.bin    run-length encoded best-so-far trace
    eaf/f{fid}_a{alg}.bin            |B| x |E| little-endian float64
    eaf/f{fid}_a{alg}.json           sidecar with grids and run count
    features/{kind}.csv
    features/standardizer_{kind}.json
    portfolios/{name}.json
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .eaf import EafMatrix
from .errors import ConfigError, FormatError, NotFoundError
from .features import FeatureVector, Standardizer
from .optim import AlgorithmId, RunTrajectory
from .portfolio import Portfolio
from .suite import Suite

FORMAT_VERSION = 1
_TRAJ_MAGIC = b"KPTJ"
_TRAJ_HEADER = struct.Struct("<4sIQQ")
_SEGMENT = np.dtype([("value", "<f8"), ("count", "<u8")])


def atomic_write(path: Path, data: bytes | str):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_trace(values: np.ndarray) -> bytes:
    """Run-length encode a float64 array; runs compare bit patterns."""
    values = np.ascontiguousarray(values, dtype="<f8")
    bits = values.view("<u8")
    starts = np.flatnonzero(np.concatenate(([True], bits[1:] != bits[:-1]))) if values.size else np.array([], int)
    counts = np.diff(np.append(starts, values.size))
    seg = np.empty(starts.size, dtype=_SEGMENT)
    seg["value"] = values[starts]
    seg["count"] = counts
    return _TRAJ_HEADER.pack(_TRAJ_MAGIC, FORMAT_VERSION, values.size, starts.size) + seg.tobytes()


def decode_trace(blob: bytes) -> np.ndarray:
    if len(blob) < _TRAJ_HEADER.size:
        raise FormatError("trajectory file shorter than its header")
    magic, version, length, n_seg = _TRAJ_HEADER.unpack_from(blob)
    if magic != _TRAJ_MAGIC:
        raise FormatError("not a trajectory file")
    if version != FORMAT_VERSION:
        raise FormatError(f"trajectory format version {version}, expected {FORMAT_VERSION}")
    body = blob[_TRAJ_HEADER.size:]
    if len(body) != n_seg * _SEGMENT.itemsize:
        raise FormatError("trajectory segment table does not match its header")
    seg = np.frombuffer(body, dtype=_SEGMENT)
    if int(seg["count"].sum()) != length:
        raise FormatError("trajectory run lengths do not add up to the stated length")
    return np.repeat(seg["value"], seg["count"].astype(np.int64)).astype(np.float64)


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def _key(function_id, algorithm_id) -> str:
    return f"f{int(function_id):05d}_a{int(algorithm_id)}"


class ExperimentStore:
    """Persisted artifacts for one dimension; also serves as an EAF source."""

    def __init__(self, root, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest
        self._eaf_cache: dict[tuple[int, int], EafMatrix] = {}

    # -- manifest -----------------------------------------------------------------
    @classmethod
    def open(cls, root, manifest: dict | None = None) -> "ExperimentStore":
        """Open (or create, when ``manifest`` is given) a store.

        An existing store whose config hash differs from ``manifest`` is refused.
        """
        root = Path(root)
        path = root / "manifest.json"
        if path.exists():
            existing = cls._read_manifest(path)
            if manifest is not None and existing.get("config_hash") != manifest.get("config_hash"):
                raise ConfigError(
                    f"store at {root} was built with config {existing.get('config_hash')}, "
                    f"refusing to reuse it for config {manifest.get('config_hash')}")
            return cls(root, existing)
        if manifest is None:
            raise NotFoundError(f"no experiment store at {root}")
        manifest = {"format_version": FORMAT_VERSION, **manifest}
        atomic_write(path, json.dumps(manifest, indent=1, sort_keys=True))
        return cls(root, manifest)

    @staticmethod
    def _read_manifest(path: Path) -> dict:
        try:
            doc = json.loads(path.read_text())
        except ValueError as exc:
            raise FormatError(f"unreadable manifest {path}: {exc}") from exc
        if doc.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"manifest format_version {doc.get('format_version')}, expected {FORMAT_VERSION}")
        return doc

    def _read(self, path: Path, what: str) -> bytes:
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFoundError(f"{what} not found ({path})") from None

    # -- suite --------------------------------------------------------------------
    def put_suite(self, suite: Suite):
        atomic_write(self.root / "suite.json", suite.to_json())

    def get_suite(self) -> Suite:
        return Suite.from_json(self._read(self.root / "suite.json", "suite").decode())

    def has_suite(self) -> bool:
        return (self.root / "suite.json").exists()

    # -- trajectories -------------------------------------------------------------
    def put_trajectories(self, function_id, algorithm_id, trajectories):
        key = _key(function_id, algorithm_id)
        runs = []
        for t in sorted(trajectories, key=lambda t: t.run_index):
            if (t.function_id, int(t.algorithm_id)) != (int(function_id), int(algorithm_id)):
                raise ValueError("trajectory key mismatch")
            name = f"{key}_r{t.run_index:03d}.bin"
            atomic_write(self.root / "traj" / name, encode_trace(t.best_so_far))
            runs.append({"run_index": t.run_index, "seed": str(t.seed), "file": name, "length": t.budget})
        index = {"function_id": int(function_id), "algorithm": AlgorithmId(int(algorithm_id)).name,
                 "runs": runs}
        # the index is written last and marks the key as complete
        atomic_write(self.root / "traj" / f"{key}.json", json.dumps(index, indent=1))

    def has_trajectories(self, function_id, algorithm_id) -> bool:
        return (self.root / "traj" / f"{_key(function_id, algorithm_id)}.json").exists()

    def get_trajectories(self, function_id, algorithm_id) -> list[RunTrajectory]:
        key = _key(function_id, algorithm_id)
        raw = self._read(self.root / "traj" / f"{key}.json", f"trajectories for {key}")
        try:
            index = json.loads(raw)
            entries = [(int(r["run_index"]), int(r["seed"]), r["file"], int(r["length"])) for r in index["runs"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"malformed trajectory index {key}: {exc}") from exc
        out = []
        for run_index, seed, name, length in entries:
            trace = decode_trace(self._read(self.root / "traj" / name, f"trajectory {name}"))
            if trace.size != length:
                raise FormatError(f"{name}: {trace.size} entries, index says {length}")
            trace.setflags(write=False)
            out.append(RunTrajectory(int(function_id), AlgorithmId(int(algorithm_id)), run_index, seed, trace))
        return out

    # -- EAF ----------------------------------------------------------------------
    def put_eaf(self, m: EafMatrix):
        key = _key(m.function_id, m.algorithm_id)
        atomic_write(self.root / "eaf" / f"{key}.bin", np.ascontiguousarray(m.values, dtype="<f8").tobytes())
        sidecar = {"function_id": int(m.function_id), "algorithm_id": int(m.algorithm_id),
                   "n_runs": int(m.n_runs), "B": [int(b) for b in m.budgets],
                   "E": [float(e) for e in m.targets]}
        atomic_write(self.root / "eaf" / f"{key}.json", json.dumps(sidecar))
        self._eaf_cache[(int(m.function_id), int(m.algorithm_id))] = m

    def has_eaf(self, function_id, algorithm_id) -> bool:
        return (self.root / "eaf" / f"{_key(function_id, algorithm_id)}.json").exists()

    def get_eaf(self, function_id, algorithm_id) -> EafMatrix:
        ck = (int(function_id), int(algorithm_id))
        if ck in self._eaf_cache:
            return self._eaf_cache[ck]
        key = _key(function_id, algorithm_id)
        side_raw = self._read(self.root / "eaf" / f"{key}.json", f"EAF matrix {key}")
        blob = self._read(self.root / "eaf" / f"{key}.bin", f"EAF matrix {key}")
        try:
            side = json.loads(side_raw)
            budgets = np.array(side["B"], dtype=np.int64)
            targets = np.array(side["E"], dtype=np.float64)
            n_runs = int(side["n_runs"])
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"malformed EAF sidecar {key}: {exc}") from exc
        if len(blob) != budgets.size * targets.size * 8:
            raise FormatError(f"EAF payload {key} has {len(blob)} bytes, expected "
                              f"{budgets.size * targets.size * 8}")
        values = np.frombuffer(blob, dtype="<f8").reshape(budgets.size, targets.size).astype(np.float64)
        for arr in (values, budgets, targets):
            arr.setflags(write=False)
        m = EafMatrix(int(function_id), AlgorithmId(int(algorithm_id)), values, n_runs, budgets, targets)
        self._eaf_cache[ck] = m
        return m

    # -- features -----------------------------------------------------------------
    def put_features(self, kind: str, names, vectors):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["function_id", *names])
        for v in sorted(vectors, key=lambda v: v.function_id):
            w.writerow([v.function_id, *(repr(float(x)) for x in v.values)])
        atomic_write(self.root / "features" / f"{kind}.csv", buf.getvalue())

    def has_features(self, kind: str) -> bool:
        return (self.root / "features" / f"{kind}.csv").exists()

    def get_features(self, kind: str) -> dict[int, FeatureVector]:
        text = self._read(self.root / "features" / f"{kind}.csv", f"{kind} features").decode()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0] != "function_id":
            raise FormatError(f"{kind}.csv lacks its header row")
        width = len(rows[0])
        out = {}
        try:
            for r in rows[1:]:
                if len(r) != width:
                    raise FormatError(f"{kind}.csv row for function {r[0] if r else '?'} has {len(r)} fields")
                out[int(r[0])] = FeatureVector(int(r[0]), np.array([float(x) for x in r[1:]]), kind)
        except ValueError as exc:
            raise FormatError(f"{kind}.csv: {exc}") from exc
        return out

    def feature_names(self, kind: str) -> list[str]:
        text = self._read(self.root / "features" / f"{kind}.csv", f"{kind} features").decode()
        return next(csv.reader(io.StringIO(text)))[1:]

    def put_standardizer(self, kind: str, s: Standardizer):
        atomic_write(self.root / "features" / f"standardizer_{kind}.json", s.to_json())

    def get_standardizer(self, kind: str) -> Standardizer:
        return Standardizer.from_json(
            self._read(self.root / "features" / f"standardizer_{kind}.json", f"{kind} standardizer").decode())

    # -- portfolios ---------------------------------------------------------------
    def put_portfolio(self, name: str, p: Portfolio):
        atomic_write(self.root / "portfolios" / f"{name}.json", json.dumps(p.to_dict(), indent=1))

    def get_portfolio(self, name: str) -> Portfolio:
        raw = self._read(self.root / "portfolios" / f"{name}.json", f"portfolio {name}")
        try:
            doc = json.loads(raw)
        except ValueError as exc:
            raise FormatError(f"portfolio {name}: {exc}") from exc
        return Portfolio.from_dict(doc)
