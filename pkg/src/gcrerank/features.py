"""Feature matrices, per-sample metadata and the GCRF on-disk format.

A GCRF file is little-endian: the magic ``b"GCRF"``, a u32 version (1),
u64 ``n``, u64 ``d`` and then ``n*d`` float32 values in row-major order.
Sample metadata lives in a companion CSV (``<stem>.csv``) with header
``index,identity,camera,tracklet,split``.
"""

from __future__ import annotations

import csv
import enum
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, GCRError, IoFailure, MalformedHeader, NonFiniteValue

MAGIC = b"GCRF"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
MANIFEST_FIELDS = ("index", "identity", "camera", "tracklet", "split")

JUNK = -1
NO_TRACKLET = -1
NORM_EPS = 1e-12


class Split(enum.IntEnum):
    QUERY = 0
    GALLERY = 1


class MalformedManifest(GCRError):
    pass


@dataclass(frozen=True)
class SampleMeta:
    """Columnar per-row metadata.

    ``identity`` is -1 for junk/distractor rows and ``tracklet`` is -1 when
    the row does not belong to a tracklet (image tasks).
    """

    identity: np.ndarray
    camera: np.ndarray
    tracklet: np.ndarray
    split: np.ndarray

    def __post_init__(self):
        cols = {}
        for name in ("identity", "camera", "tracklet", "split"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            cols[name] = arr
            object.__setattr__(self, name, arr)
        n = len(cols["identity"])
        if any(len(c) != n for c in cols.values()):
            raise DimensionMismatch("metadata columns differ in length")
        if np.any(cols["camera"] < 0):
            raise ValueError("camera ids must be >= 0")
        if np.any(cols["tracklet"] < NO_TRACKLET):
            raise ValueError("tracklet ids must be >= 0 or -1")
        if not np.all(np.isin(cols["split"], (Split.QUERY, Split.GALLERY))):
            raise ValueError("split must be QUERY or GALLERY")
        _check_tracklets(cols["tracklet"], cols["identity"], cols["camera"])

    def __len__(self):
        return len(self.identity)

    @classmethod
    def default(cls, n):
        """Metadata for ``n`` anonymous gallery rows on camera 0."""
        zeros = np.zeros(n, dtype=np.int64)
        return cls(
            identity=np.full(n, JUNK),
            camera=zeros,
            tracklet=np.full(n, NO_TRACKLET),
            split=np.full(n, int(Split.GALLERY)),
        )

    def take(self, idx):
        idx = np.asarray(idx)
        return SampleMeta(self.identity[idx], self.camera[idx], self.tracklet[idx], self.split[idx])

    @property
    def is_query(self):
        return self.split == Split.QUERY

    @property
    def has_tracklets(self):
        return bool(np.any(self.tracklet >= 0))


def _check_tracklets(tracklet, identity, camera):
    mask = tracklet >= 0
    if not np.any(mask):
        return
    t = tracklet[mask]
    pairs = np.unique(np.stack([t, identity[mask], camera[mask]], axis=1), axis=0)
    if len(np.unique(pairs[:, 0])) != len(pairs):
        raise ValueError("a tracklet must map to exactly one identity and one camera")


@dataclass(frozen=True)
class FeatureSet:
    """``n`` float32 feature vectors of dimension ``d`` with metadata."""

    data: np.ndarray
    meta: SampleMeta = None
    normalized: bool = field(default=False)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatch(f"expected a non-empty n x d matrix, got shape {data.shape}")
        bad = np.argwhere(~np.isfinite(data))
        if len(bad):
            raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))
        meta = self.meta if self.meta is not None else SampleMeta.default(data.shape[0])
        if len(meta) != data.shape[0]:
            raise DimensionMismatch(f"metadata has {len(meta)} rows, features have {data.shape[0]}")
        if self.normalized:
            norms = np.linalg.norm(data.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-4):
                raise ValueError("normalized flag set but rows are not unit length")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "meta", meta)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    def with_data(self, data, normalized=False):
        """Same metadata, new feature matrix (cast to float32)."""
        return FeatureSet(np.asarray(data, dtype=np.float32), self.meta, normalized)

    def take(self, idx):
        idx = np.asarray(idx)
        return FeatureSet(self.data[idx], self.meta.take(idx), self.normalized)


def normalize_array(x, eps=NORM_EPS):
    """Row-wise ``x / max(||x||, eps)`` in float64; zero rows stay zero."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    return x / np.maximum(norms, eps)[:, None]


def normalize_rows(fs: FeatureSet) -> FeatureSet:
    out = normalize_array(fs.data).astype(np.float32)
    # zero rows cannot be unit length, so the flag is only set when it holds
    norms = np.linalg.norm(out.astype(np.float64), axis=1)
    return FeatureSet(out, fs.meta, normalized=bool(np.all(np.abs(norms - 1.0) <= 1e-4)))


def manifest_path(path) -> Path:
    return Path(path).with_suffix(".csv")


def save_features(fs: FeatureSet, path, manifest=None) -> None:
    path = Path(path)
    manifest = Path(manifest) if manifest is not None else manifest_path(path)
    payload = np.ascontiguousarray(fs.data, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, fs.n, fs.d))
            fh.write(payload)
        write_manifest(fs.meta, manifest)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def write_manifest(meta: SampleMeta, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for i in range(len(meta)):
            writer.writerow(
                [
                    i,
                    int(meta.identity[i]),
                    int(meta.camera[i]),
                    int(meta.tracklet[i]),
                    Split(meta.split[i]).name.lower(),
                ]
            )


def read_manifest(path, n) -> SampleMeta:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
                raise MalformedManifest(f"manifest header must be {','.join(MANIFEST_FIELDS)}")
            rows = list(reader)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if len(rows) != n:
        raise DimensionMismatch(f"manifest has {len(rows)} rows, feature file declares n={n}")
    cols = np.full((4, n), -2, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for row in rows:
        try:
            i = int(row["index"])
            split = Split[row["split"].strip().upper()]
            values = (int(row["identity"]), int(row["camera"]), int(row["tracklet"]), int(split))
        except (KeyError, ValueError) as exc:
            raise MalformedManifest(f"bad manifest row {row}") from exc
        if not 0 <= i < n or seen[i]:
            raise DimensionMismatch(f"manifest index {i} is out of range or repeated")
        seen[i] = True
        cols[:, i] = values
    try:
        return SampleMeta(*cols)
    except ValueError as exc:
        raise MalformedManifest(str(exc)) from exc


def read_gcrf(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if len(raw) < _HEADER.size:
        raise MalformedHeader("file shorter than header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}")
    if version != VERSION:
        raise MalformedHeader(f"unsupported version {version}")
    if n < 1 or d < 1:
        raise MalformedHeader(f"empty matrix n={n}, d={d}")
    if len(raw) - _HEADER.size != n * d * 4:
        raise MalformedHeader(
            f"payload is {len(raw) - _HEADER.size} bytes, header declares {n * d * 4}"
        )
    return np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d).astype(np.float32)


def load_features(path, manifest=None) -> FeatureSet:
    data = read_gcrf(path)
    bad = np.argwhere(~np.isfinite(data))
    if len(bad):
        raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))
    manifest = Path(manifest) if manifest is not None else manifest_path(path)
    meta = read_manifest(manifest, data.shape[0])
    zero = np.flatnonzero(~np.any(data != 0, axis=1))
    if len(zero):
        warnings.warn(f"{len(zero)} zero-vector rows (first at {zero[0]})", stacklevel=2)
    return FeatureSet(data, meta)
