"""Exact reference backend mirroring the sketched statistics.

Keeps full key/value maps per component instead of sketches, so every
first moment, self product and cross product is exact. Memory grows with
the number of distinct keys; this backend exists for differential testing
and small runs, not for unbounded streams. With ``keep_members=True`` the
bundle also retains per-member component views so aggregate quantities can
be recomputed directly from the membership for identity checks.
"""

from __future__ import annotations

import struct

import numpy as np

from .model import ComponentView, GraphObject, StreamSchema, graph_views

_MAGIC = b"XST1"
_VERSION = 1
_HEADER = struct.Struct("<4sBIQq")


class ExactClusterStats:
    __slots__ = ("maps", "second_moments", "n", "t_last", "members", "_self_cache")

    def __init__(self, maps, second_moments, n, t_last, members=None):
        self.maps: list[dict[bytes, float]] = maps
        self.second_moments: np.ndarray = second_moments
        self.n: int = n
        self.t_last: int = t_last
        self.members: list[list[ComponentView]] | None = members
        self._self_cache: list[float | None] = [None] * len(maps)

    @classmethod
    def empty(cls, d: int, keep_members: bool = False) -> "ExactClusterStats":
        if d < 0:
            raise ValueError("d must be >= 0")
        return cls(
            maps=[{} for _ in range(d + 1)],
            second_moments=np.zeros(d + 1, dtype=np.float64),
            n=0,
            t_last=0,
            members=[] if keep_members else None,
        )

    @classmethod
    def singleton(
        cls, g: GraphObject, now: int, schema: StreamSchema, keep_members: bool = False
    ) -> "ExactClusterStats":
        out = cls.empty(schema.d, keep_members=keep_members)
        out.absorb(g, now, schema)
        return out

    @property
    def d(self) -> int:
        return len(self.maps) - 1

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
        if len(views) != len(self.maps):
            raise ValueError("component count mismatch with schema")
        if now < 0:
            raise ValueError("timestamp must be nonnegative")
        for comp, view in enumerate(views):
            if not view.keys:
                continue
            m = self.maps[comp]
            for key, value in zip(view.keys, view.values):
                m[key] = m.get(key, 0.0) + float(value)
            self.second_moments[comp] += view.sq_sum
            self._self_cache[comp] = None
        if self.members is not None:
            self.members.append(views)
        self.n += 1
        self.t_last = max(self.t_last, now)

    @classmethod
    def merge(cls, a: "ExactClusterStats", b: "ExactClusterStats") -> "ExactClusterStats":
        if a.d != b.d:
            raise ValueError("component count mismatch")
        maps = []
        for ma, mb in zip(a.maps, b.maps):
            merged = dict(ma)
            for key, value in mb.items():
                merged[key] = merged.get(key, 0.0) + value
            maps.append(merged)
        members = None
        if a.members is not None and b.members is not None:
            members = list(a.members) + list(b.members)
        return cls(
            maps=maps,
            second_moments=a.second_moments + b.second_moments,
            n=a.n + b.n,
            t_last=max(a.t_last, b.t_last),
            members=members,
        )

    # -- accessor surface shared with the sketch backend --------------------

    def second_moment(self, comp: int) -> float:
        return float(self.second_moments[comp])

    def first_moments(self, comp: int, keys) -> np.ndarray:
        m = self.maps[comp]
        return np.fromiter((m.get(k, 0.0) for k in keys), np.float64, count=len(keys))

    def self_product(self, comp: int) -> float:
        cached = self._self_cache[comp]
        if cached is None:
            cached = sum(v * v for v in self.maps[comp].values())
            self._self_cache[comp] = cached
        return cached

    def cross_product(self, comp: int, other: "ExactClusterStats") -> float:
        a, b = self.maps[comp], other.maps[comp]
        if len(b) < len(a):
            a, b = b, a
        return sum(v * b.get(k, 0.0) for k, v in a.items())

    # -- member-level recomputation (testing aid) ----------------------------

    def members_intra_sq(self, comp: int) -> float:
        """Sum over members of squared distance to the component centroid,
        computed directly from retained member views."""
        if self.members is None:
            raise ValueError("bundle was built without keep_members")
        if self.n < 1:
            raise ValueError("empty cluster")
        centroid = {k: v / self.n for k, v in self.maps[comp].items()}
        centroid_sq = sum(c * c for c in centroid.values())
        total = 0.0
        for views in self.members:
            view = views[comp]
            part = centroid_sq
            for key, value in zip(view.keys, view.values):
                c = centroid.get(key, 0.0)
                part += (value - c) ** 2 - c * c
            total += part
        return total

    # -- serialization -------------------------------------------------------

    def to_bytes(self) -> bytes:
        parts = [_HEADER.pack(_MAGIC, _VERSION, self.d, self.n, self.t_last)]
        parts.append(self.second_moments.astype("<f8", copy=False).tobytes())
        for m in self.maps:
            parts.append(struct.pack("<Q", len(m)))
            for key, value in m.items():
                parts.append(struct.pack("<I", len(key)))
                parts.append(key)
                parts.append(struct.pack("<d", value))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ExactClusterStats":
        magic, version, d, n, t_last = _HEADER.unpack_from(data, 0)
        if magic != _MAGIC:
            raise ValueError("bad exact stats magic")
        if version != _VERSION:
            raise ValueError(f"unsupported exact stats version {version}")
        off = _HEADER.size
        moments = np.frombuffer(data, dtype="<f8", count=d + 1, offset=off).copy()
        off += (d + 1) * 8
        maps: list[dict[bytes, float]] = []
        for _ in range(d + 1):
            (entries,) = struct.unpack_from("<Q", data, off)
            off += 8
            m: dict[bytes, float] = {}
            for _ in range(entries):
                (klen,) = struct.unpack_from("<I", data, off)
                off += 4
                key = bytes(data[off : off + klen])
                off += klen
                (value,) = struct.unpack_from("<d", data, off)
                off += 8
                m[key] = value
            maps.append(m)
        return cls(maps=maps, second_moments=moments, n=n, t_last=t_last)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactClusterStats):
            return NotImplemented
        return (
            self.n == other.n
            and self.t_last == other.t_last
            and np.array_equal(self.second_moments, other.second_moments)
            and self.maps == other.maps
        )

    def __repr__(self) -> str:
        return f"ExactClusterStats(n={self.n}, d={self.d}, t_last={self.t_last})"
