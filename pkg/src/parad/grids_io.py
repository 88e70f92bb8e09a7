"""Sampled-array container and the PATGRID1 file format.

Layout: 8-byte magic ``PATGRID1``, 4-byte little-endian header length, a UTF-8
JSON header ``{dtype, shape, axes, meta}`` and the raw row-major payload
(``f64le`` or interleaved ``c128le``).
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"PATGRID1"
_DTYPES = {"f64le": np.dtype("<f8"), "c128le": np.dtype("<c16")}


class GridFormatError(ValueError):
    """Raised for malformed PATGRID1 files or inconsistent arrays."""


@dataclass
class Axis:
    name: str
    start: float = 0.0
    step: float = 1.0
    values: np.ndarray | None = None

    @classmethod
    def uniform(cls, name, start, step):
        if not step > 0:
            raise GridFormatError(f"axis {name!r}: uniform step must be > 0")
        return cls(name=name, start=float(start), step=float(step))

    @classmethod
    def explicit(cls, name, values):
        return cls(name=name, values=np.asarray(values, dtype=float))

    @property
    def is_uniform(self):
        return self.values is None

    def coords(self, n):
        if self.is_uniform:
            return self.start + self.step * np.arange(n)
        return np.asarray(self.values)

    def to_json(self):
        if self.is_uniform:
            return {"name": self.name, "kind": "uniform", "start": self.start, "step": self.step}
        return {"name": self.name, "kind": "explicit", "values": [float(v) for v in self.values]}

    @classmethod
    def from_json(cls, d):
        kind = d.get("kind")
        if kind == "uniform":
            return cls.uniform(d["name"], d["start"], d["step"])
        if kind == "explicit":
            return cls.explicit(d["name"], d["values"])
        raise GridFormatError(f"unknown axis kind {kind!r}")

    def __eq__(self, other):
        if not isinstance(other, Axis):
            return NotImplemented
        if self.name != other.name or self.is_uniform != other.is_uniform:
            return False
        if self.is_uniform:
            return self.start == other.start and self.step == other.step
        return np.array_equal(self.values, other.values)


@dataclass
class GridArray:
    """N-dimensional sample array with one named axis per dimension."""

    data: np.ndarray
    axes: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.dtype.kind not in "fc":
            self.data = self.data.astype(float)
        if len(self.axes) != self.data.ndim:
            raise GridFormatError(
                f"{len(self.axes)} axes given for a {self.data.ndim}-dimensional array")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise GridFormatError(f"axis names must be unique, got {names}")
        for ax, n in zip(self.axes, self.data.shape):
            if not ax.is_uniform and len(ax.values) != n:
                raise GridFormatError(f"axis {ax.name!r} has {len(ax.values)} values for length {n}")
        self.meta = {str(k): str(v) for k, v in self.meta.items()}

    @property
    def shape(self):
        return self.data.shape

    def coords(self, name):
        i = self.axis_index(name)
        return self.axes[i].coords(self.data.shape[i])

    def axis_index(self, name):
        for i, ax in enumerate(self.axes):
            if ax.name == name:
                return i
        raise KeyError(name)

    def like(self, data, meta=None):
        """Same axes, new data (and optionally updated meta)."""
        m = dict(self.meta)
        if meta:
            m.update(meta)
        return GridArray(data=data, axes=list(self.axes), meta=m)

    def __eq__(self, other):
        if not isinstance(other, GridArray):
            return NotImplemented
        return (self.data.dtype == other.data.dtype
                and self.data.shape == other.data.shape
                and self.axes == other.axes
                and self.meta == other.meta
                and self.data.tobytes() == other.data.tobytes())


def write_grid(path, array):
    data = array.data
    if np.iscomplexobj(data):
        dtype_name, payload = "c128le", np.ascontiguousarray(data, dtype=_DTYPES["c128le"])
    else:
        dtype_name, payload = "f64le", np.ascontiguousarray(data, dtype=_DTYPES["f64le"])
    header = {
        "dtype": dtype_name,
        "shape": [int(n) for n in data.shape],
        "axes": [ax.to_json() for ax in array.axes],
        "meta": dict(array.meta),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(hbytes)))
        fh.write(hbytes)
        fh.write(payload.tobytes(order="C"))


def read_grid(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:8] != MAGIC:
        raise GridFormatError(f"{path}: bad magic, not a PATGRID1 file")
    (hlen,) = struct.unpack("<I", blob[8:12])
    if 12 + hlen > len(blob):
        raise GridFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12:12 + hlen].decode("utf-8"))
        dtype = _DTYPES[header["dtype"]]
        shape = tuple(int(n) for n in header["shape"])
        axes = [Axis.from_json(a) for a in header["axes"]]
        meta = header.get("meta", {})
    except (ValueError, KeyError, TypeError) as exc:
        raise GridFormatError(f"{path}: malformed header ({exc})") from exc
    if any(n <= 0 for n in shape):
        raise GridFormatError(f"{path}: shape entries must be positive")
    payload = blob[12 + hlen:]
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != expected:
        raise GridFormatError(
            f"{path}: payload has {len(payload)} bytes, shape {shape} needs {expected}")
    data = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return GridArray(data=data.astype(dtype.newbyteorder("="), copy=True), axes=axes, meta=meta)
