#!/usr/bin/env python3
"""
Coalitions, utility tables and Shapley vectors.

A coalition is a bitmask over client indices 0..N-1 (bit i set = client i
participates). A utility table stores one value per mask in a dense array of
length 2^N; entry 0 is the empty coalition and is fixed at 0.

Two utility kinds exist:
    performance   macro AUROC of the coalition model - 0.5
    bias          macro AUROC(subgroup A) - macro AUROC(subgroup B) for one attribute
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

# 2^25 - 1 coalitions is the enumeration limit
MAX_PLAYERS = 25
FORMAT_VERSION = 1


class ValuationError(ValueError):
    """Utility table or valuation inputs are incomplete or inconsistent."""


class GuardExceededError(ValuationError):
    """Too many clients for a back-end without an explicit override."""


class UtilityKind(str, Enum):
    PERFORMANCE = "performance"
    BIAS = "bias"


@dataclass(frozen=True)
class Utility:
    """A utility function: the kind plus, for bias, the attribute compared."""
    kind: UtilityKind = UtilityKind.PERFORMANCE
    attribute: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", UtilityKind(self.kind))
        if self.kind is UtilityKind.BIAS and self.attribute is None:
            object.__setattr__(self, "attribute", "sex")
        if self.kind is UtilityKind.PERFORMANCE:
            object.__setattr__(self, "attribute", None)

    @property
    def key(self) -> str:
        return self.kind.value if self.attribute is None else f"{self.kind.value}:{self.attribute}"

    @classmethod
    def parse(cls, key: "str | Utility | UtilityKind") -> "Utility":
        if isinstance(key, Utility):
            return key
        if isinstance(key, UtilityKind):
            return cls(key)
        kind, _, attribute = str(key).partition(":")
        return cls(UtilityKind(kind), attribute or None)


PERFORMANCE = Utility(UtilityKind.PERFORMANCE)
SEX_BIAS = Utility(UtilityKind.BIAS, "sex")
AGE_BIAS = Utility(UtilityKind.BIAS, "age")


def check_players(n_players: int) -> None:
    if not 1 <= n_players <= MAX_PLAYERS:
        raise ValuationError(f"coalition enumeration supports 1..{MAX_PLAYERS} clients, got {n_players}")


def all_coalitions(n_players: int) -> range:
    """Every non-empty coalition mask, in increasing order."""
    check_players(n_players)
    return range(1, 1 << n_players)


def members(mask: int) -> list[int]:
    return [i for i in range(int(mask).bit_length()) if (mask >> i) & 1]


def coalition_sizes(n_players: int) -> np.ndarray:
    """|S| for every mask 0..2^N - 1."""
    masks = np.arange(1 << n_players)
    sizes = np.zeros(1 << n_players, dtype=np.int64)
    for i in range(n_players):
        sizes += (masks >> i) & 1
    return sizes


@dataclass
class UtilityTable:
    utility: Utility
    n_players: int
    values: np.ndarray                  # (2^N,), NaN = not evaluated, entry 0 = 0
    client_ids: list[str] = field(default_factory=list)
    timings: np.ndarray | None = None   # seconds per coalition, same indexing

    def __post_init__(self):
        check_players(self.n_players)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (1 << self.n_players,):
            raise ValuationError(f"table for {self.n_players} clients needs {1 << self.n_players} entries, got {values.shape}")
        values = values.copy()
        values[0] = 0.0
        self.values = values
        if not self.client_ids:
            self.client_ids = [f"client-{i + 1}" for i in range(self.n_players)]

    @classmethod
    def empty(cls, utility: Utility, n_players: int, client_ids: Sequence[str] = ()) -> "UtilityTable":
        check_players(n_players)
        return cls(utility, n_players, np.full(1 << n_players, np.nan), list(client_ids))

    @classmethod
    def from_mapping(cls, utility: Utility, n_players: int, mapping: Mapping[int, float],
                     client_ids: Sequence[str] = ()) -> "UtilityTable":
        table = cls.empty(utility, n_players, client_ids)
        for mask, value in mapping.items():
            table[mask] = value
        return table

    @property
    def kind(self) -> UtilityKind:
        return self.utility.kind

    @property
    def grand_utility(self) -> float:
        return float(self.values[-1])

    def __getitem__(self, mask: int) -> float:
        return float(self.values[mask])

    def __setitem__(self, mask: int, value: float) -> None:
        if not 1 <= mask < len(self.values):
            raise ValuationError(f"coalition mask {mask} outside 1..{len(self.values) - 1}")
        self.values[mask] = value

    def __len__(self) -> int:
        """Number of evaluated non-empty coalitions."""
        return int(np.sum(~np.isnan(self.values[1:])))

    def __iter__(self) -> Iterator[tuple[int, float]]:
        for mask in all_coalitions(self.n_players):
            yield mask, float(self.values[mask])

    def missing(self) -> list[int]:
        return [int(m) + 1 for m in np.flatnonzero(np.isnan(self.values[1:]))]

    def require_complete(self) -> "UtilityTable":
        missing = self.missing()
        if missing:
            shown = ", ".join(str(m) for m in missing[:20])
            more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
            raise ValuationError(f"{self.utility.key} table lacks {len(missing)} coalitions: {shown}{more}")
        return self

    def to_dict(self) -> dict:
        payload = {
            "format_version": FORMAT_VERSION,
            "utility": self.utility.key,
            "n_players": self.n_players,
            "client_ids": list(self.client_ids),
            "values": {str(mask): value for mask, value in self if not np.isnan(value)},
        }
        if self.timings is not None:
            payload["timings"] = {str(m): float(self.timings[m]) for m in all_coalitions(self.n_players)}
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "UtilityTable":
        if payload.get("format_version") != FORMAT_VERSION:
            raise ValuationError(f"unsupported utility table version {payload.get('format_version')}")
        n = int(payload["n_players"])
        table = cls.from_mapping(
            Utility.parse(payload["utility"]), n,
            {int(k): float(v) for k, v in payload["values"].items()},
            payload.get("client_ids", ()),
        )
        if "timings" in payload:
            timings = np.zeros(1 << n)
            for k, v in payload["timings"].items():
                timings[int(k)] = float(v)
            table.timings = timings
        return table

    def save_json(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    @classmethod
    def load_json(cls, path: Path) -> "UtilityTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ShapleyVector:
    utility: Utility
    values: np.ndarray
    grand_utility: float
    client_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not self.client_ids:
            self.client_ids = [f"client-{i + 1}" for i in range(len(self.values))]
        if len(self.client_ids) != len(self.values):
            raise ValuationError(f"{len(self.values)} values for {len(self.client_ids)} clients")

    @property
    def kind(self) -> UtilityKind:
        return self.utility.kind

    @property
    def n_players(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])

    def as_dict(self) -> dict[str, float]:
        return {cid: float(v) for cid, v in zip(self.client_ids, self.values)}

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "utility": self.utility.key,
            "grand_utility": self.grand_utility,
            "client_ids": list(self.client_ids),
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ShapleyVector":
        if payload.get("format_version") != FORMAT_VERSION:
            raise ValuationError(f"unsupported Shapley vector version {payload.get('format_version')}")
        return cls(Utility.parse(payload["utility"]), np.array(payload["values"]),
                   float(payload["grand_utility"]), list(payload["client_ids"]))
