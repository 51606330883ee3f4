"""Rating-log ingestion and a deterministic synthetic corpus generator.

A ratings file holds one ``user_id<sep>item_id<sep>rating<sep>timestamp``
record per line (UTF-8), with the separator auto-detected among tab, comma
and ``::``. A non-numeric first row is treated as a header and skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, ParseError, RangeError

_DELIMITERS = ("::", "\t", ",")


@dataclass
class RatingsTable:
    """Validated rating records with stable first-appearance index maps."""

    records: list[tuple[int, int, float, int]] = field(default_factory=list)
    user_index: dict[int, int] = field(default_factory=dict)
    item_index: dict[int, int] = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return len(self.user_index)

    @property
    def n_items(self) -> int:
        return len(self.item_index)

    def __len__(self):
        return len(self.records)

    def serialize(self, delimiter: str = "\t") -> str:
        lines = []
        for user, item, rating, ts in self.records:
            r = str(int(rating)) if float(rating).is_integer() else repr(rating)
            lines.append(delimiter.join([str(user), str(item), r, str(ts)]))
        return "\n".join(lines) + "\n"


def _detect_delimiter(line: str) -> str:
    for d in _DELIMITERS:
        if d in line:
            return d
    raise ParseError(f"line 1: no known delimiter (tab, comma or '::') in {line!r}")


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str) and "\n" not in source and Path(source).exists():
        return Path(source).read_text(encoding="utf-8")
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    if isinstance(source, str):
        return source
    raise ParseError(f"unsupported ratings source {type(source)!r}")


def ingest_ratings(source, delimiter: str | None = None) -> RatingsTable:
    """Parse and validate a ratings log.

    Raises ParseError (naming the line) on malformed records or duplicate
    (user, item, timestamp) triples, RangeError outside the 5-star scale,
    and EmptyDataset when no records survive.
    """
    text = _read_text(source)
    table = RatingsTable()
    seen: set[tuple[int, int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if delimiter is None:
            delimiter = _detect_delimiter(line)
        fields = line.split(delimiter)
        if lineno == 1 and not _all_numeric(fields):
            continue  # header row
        if len(fields) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(fields)}")
        try:
            user, item = int(fields[0]), int(fields[1])
            rating = float(fields[2])
            ts = int(fields[3])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric field in {line!r}") from None
        if not 1.0 <= rating <= 5.0:
            raise RangeError(f"line {lineno}: rating {rating} outside [1, 5]")
        key = (user, item, ts)
        if key in seen:
            raise ParseError(f"line {lineno}: duplicate (user, item, timestamp) {key}")
        seen.add(key)
        if user not in table.user_index:
            table.user_index[user] = len(table.user_index)
        if item not in table.item_index:
            table.item_index[item] = len(table.item_index)
        table.records.append((user, item, rating, ts))
    if not table.records:
        raise EmptyDataset("ratings source contained no records")
    return table


def generate_ratings_text(
    n_users: int = 943,
    n_items: int = 1682,
    n_records: int = 100_000,
    seed: int = 0,
    min_per_user: int = 20,
    latent_dim: int = 6,
) -> str:
    """Deterministic tab-separated corpus in the MovieLens-100k file shape.

    Ratings come from a low-rank latent model plus noise, so factorization
    models can fit the data well; every user gets at least ``min_per_user``
    records and no (user, item) pair repeats.
    """
    if n_records < n_users * min_per_user:
        raise ValueError("n_records too small for the per-user minimum")
    if n_records > n_users * n_items:
        raise ValueError("n_records exceeds distinct (user, item) pairs")
    rng = np.random.default_rng(seed)
    u = rng.normal(0.0, 0.55, size=(n_users, latent_dim))
    v = rng.normal(0.0, 0.55, size=(n_items, latent_dim))
    user_bias = rng.normal(0.0, 0.25, size=n_users)
    item_bias = rng.normal(0.0, 0.25, size=n_items)

    counts = np.full(n_users, min_per_user, dtype=np.int64)
    extra = n_records - counts.sum()
    weights = rng.random(n_users) + 0.1
    shares = np.floor(extra * weights / weights.sum()).astype(np.int64)
    shares = np.minimum(shares, n_items - min_per_user)
    counts += shares
    short = n_records - counts.sum()
    order = rng.permutation(n_users)
    for uid in order:
        if short == 0:
            break
        room = n_items - counts[uid]
        take = min(room, short)
        counts[uid] += take
        short -= take
    assert counts.sum() == n_records

    lines = []
    ts_base = 880_000_000
    for uid in range(n_users):
        items = rng.choice(n_items, size=counts[uid], replace=False)
        scores = 3.55 + user_bias[uid] + item_bias[items] + v[items] @ u[uid]
        scores += rng.normal(0.0, 0.45, size=len(items))
        stars = np.clip(np.rint(scores), 1, 5).astype(np.int64)
        stamps = ts_base + rng.integers(0, 20_000_000, size=len(items))
        for item, star, ts in zip(items, stars, stamps):
            lines.append(f"{uid + 1}\t{item + 1}\t{star}\t{ts}")
    return "\n".join(lines) + "\n"


def write_synthetic_movielens(path, **kwargs) -> Path:
    path = Path(path)
    path.write_text(generate_ratings_text(**kwargs), encoding="utf-8")
    return path
