"""Constant-size per-cluster statistics.

A cluster is summarized by d+1 count-min sketches of first moments (one
for the edge structure, one per side type), the exact running sums of
squared masses per component, the member count and the last-update
timestamp. Absorbing a graph touches each sketch once; merging two bundles
is cell-wise sketch addition plus scalar sums with the later timestamp
winning, and equals absorbing both member sets sequentially.

The accessor surface (``second_moment`` / ``first_moments`` /
``self_product`` / ``cross_product``) is shared with the exact backend in
``exact.py`` so distance code runs unchanged against either.
"""

from __future__ import annotations

import struct

import numpy as np

from .model import ComponentView, GraphObject, StreamSchema, graph_views
from .sketch import CountMinSketch, SketchConfig

_MAGIC = b"CST1"
_VERSION = 1
_HEADER = struct.Struct("<4sBIQq")


class ClusterStats:
    __slots__ = ("sketches", "second_moments", "n", "t_last")

    def __init__(self, sketches, second_moments, n, t_last):
        self.sketches: list[CountMinSketch] = sketches
        self.second_moments: np.ndarray = second_moments
        self.n: int = n
        self.t_last: int = t_last

    @classmethod
    def empty(cls, config: SketchConfig, d: int) -> "ClusterStats":
        """All-zero bundle with n == 0; an identity element for merge."""
        if d < 0:
            raise ValueError("d must be >= 0")
        return cls(
            sketches=[CountMinSketch(config) for _ in range(d + 1)],
            second_moments=np.zeros(d + 1, dtype=np.float64),
            n=0,
            t_last=0,
        )

    @classmethod
    def singleton(
        cls, g: GraphObject, now: int, config: SketchConfig, schema: StreamSchema
    ) -> "ClusterStats":
        out = cls.empty(config, schema.d)
        out.absorb(g, now, schema)
        return out

    @property
    def d(self) -> int:
        return len(self.sketches) - 1

    @property
    def er(self) -> float:
        return float(self.second_moments[0])

    @property
    def sr(self) -> np.ndarray:
        return self.second_moments[1:]

    # -- updates -----------------------------------------------------------

    def absorb(self, g: GraphObject, now: int, schema: StreamSchema) -> None:
        self.absorb_views(graph_views(g, schema), now)

    def absorb_views(self, views: list[ComponentView], now: int) -> None:
        if len(views) != len(self.sketches):
            raise ValueError("component count mismatch with schema")
        if now < 0:
            raise ValueError("timestamp must be nonnegative")
        for comp, view in enumerate(views):
            if view.keys:
                self.sketches[comp].update_many(view.keys, view.values)
                self.second_moments[comp] += view.sq_sum
        self.n += 1
        self.t_last = max(self.t_last, now)

    @classmethod
    def merge(cls, a: "ClusterStats", b: "ClusterStats") -> "ClusterStats":
        if a.d != b.d:
            raise ValueError("component count mismatch")
        return cls(
            sketches=[sa.merge(sb) for sa, sb in zip(a.sketches, b.sketches)],
            second_moments=a.second_moments + b.second_moments,
            n=a.n + b.n,
            t_last=max(a.t_last, b.t_last),
        )

    # -- accessor surface shared with the exact backend ---------------------

    def second_moment(self, comp: int) -> float:
        return float(self.second_moments[comp])

    def first_moments(self, comp: int, keys) -> np.ndarray:
        """Point estimates of aggregated key masses (overestimates)."""
        return self.sketches[comp].estimate_many(keys)

    def self_product(self, comp: int) -> float:
        """Estimate of the sum of squared aggregated masses in component."""
        return self.sketches[comp].self_inner_product()

    def cross_product(self, comp: int, other) -> float:
        """Estimate of the inner product of aggregated masses with another
        bundle's same component."""
        return self.sketches[comp].inner_product(other.sketches[comp])

    # -- serialization -------------------------------------------------------

    def to_bytes(self) -> bytes:
        parts = [_HEADER.pack(_MAGIC, _VERSION, self.d, self.n, self.t_last)]
        parts.append(self.second_moments.astype("<f8", copy=False).tobytes())
        for sk in self.sketches:
            blob = sk.to_bytes()
            parts.append(struct.pack("<I", len(blob)))
            parts.append(blob)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClusterStats":
        magic, version, d, n, t_last = _HEADER.unpack_from(data, 0)
        if magic != _MAGIC:
            raise ValueError("bad cluster stats magic")
        if version != _VERSION:
            raise ValueError(f"unsupported cluster stats version {version}")
        off = _HEADER.size
        moments = np.frombuffer(data, dtype="<f8", count=d + 1, offset=off).copy()
        off += (d + 1) * 8
        sketches = []
        for _ in range(d + 1):
            (blob_len,) = struct.unpack_from("<I", data, off)
            off += 4
            sketches.append(CountMinSketch.from_bytes(data[off : off + blob_len]))
            off += blob_len
        return cls(sketches=sketches, second_moments=moments, n=n, t_last=t_last)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterStats):
            return NotImplemented
        return (
            self.n == other.n
            and self.t_last == other.t_last
            and np.array_equal(self.second_moments, other.second_moments)
            and all(sa == sb for sa, sb in zip(self.sketches, other.sketches))
        )

    def __repr__(self) -> str:
        return f"ClusterStats(n={self.n}, d={self.d}, t_last={self.t_last})"
