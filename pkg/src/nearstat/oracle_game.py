"""The query/reply protocol between first-order algorithms and oracles.

A game is a fixed budget of T sequential queries.  The algorithm side is an
:class:`AlgorithmDescriptor` (a declared class tag plus a factory for
per-game query policies); the oracle side is any callable mapping a query
vector to a :class:`~nearstat.zoo.FirstOrderReply`.  Transcripts record the
full interaction and serialize to JSON lines for replay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from nearstat.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    OracleFailure,
)
from nearstat.vectorspace import as_vector
from nearstat.zoo import FirstOrderReply, Oracle

CLASS_DETERMINISTIC = "deterministic"
CLASS_LINEAR_SPAN = "linear_span"
CLASS_RANDOMIZED = "randomized"


@dataclass
class Transcript:
    """Ordered record of one oracle game."""

    T: int
    d: int
    entries: list[tuple[np.ndarray, FirstOrderReply]] = field(default_factory=list)

    def append(self, query: np.ndarray, reply: FirstOrderReply) -> None:
        if len(self.entries) >= self.T:
            raise DegenerateInputError("transcript already holds T entries")
        if query.shape != (self.d,) or reply.subgrad.shape != (self.d,):
            raise DimensionMismatchError("entry dimension does not match the game")
        self.entries.append((query, reply))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def queries(self) -> list[np.ndarray]:
        return [q for q, _ in self.entries]

    @property
    def replies(self) -> list[FirstOrderReply]:
        return [r for _, r in self.entries]

    def to_jsonl(self) -> str:
        lines = []
        for i, (q, r) in enumerate(self.entries, start=1):
            lines.append(
                json.dumps(
                    {
                        "index": i,
                        "query": q.tolist(),
                        "value": r.value,
                        "subgrad": r.subgrad.tolist(),
                        "differentiable": r.differentiable,
                    }
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, T: int | None = None) -> "Transcript":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            raise DegenerateInputError("empty transcript document")
        d = len(rows[0]["query"])
        t = cls(T=T if T is not None else len(rows), d=d)
        for row in rows:
            reply = FirstOrderReply(row["value"], np.array(row["subgrad"], dtype=float), row["differentiable"])
            t.append(np.array(row["query"], dtype=float), reply)
        return t


class QueryPolicy:
    """Per-game algorithm state: produces the next query from the history."""

    def next_query(self, entries: list[tuple[np.ndarray, FirstOrderReply]]) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class AlgorithmDescriptor:
    """A named algorithm with declared oracle-game class membership.

    ``factory(d, rng)`` returns a fresh :class:`QueryPolicy` for one game;
    deterministic and linear-span algorithms must ignore ``rng``.
    """

    name: str
    class_tag: str
    params: dict
    factory: Callable[[int, np.random.Generator | None], QueryPolicy]

    def __post_init__(self):
        if self.class_tag not in (CLASS_DETERMINISTIC, CLASS_LINEAR_SPAN, CLASS_RANDOMIZED):
            raise DegenerateInputError(f"unknown class tag {self.class_tag!r}")

    def fresh_policy(self, d: int, rng: np.random.Generator | None = None) -> QueryPolicy:
        return self.factory(d, rng)


def play(
    algorithm: AlgorithmDescriptor,
    oracle: Oracle,
    T: int,
    d: int,
    rng: np.random.Generator | None = None,
) -> Transcript:
    """Run one game of exactly T queries and return the transcript."""
    if T < 1 or d < 1:
        raise DegenerateInputError("need T >= 1 and d >= 1")
    policy = algorithm.fresh_policy(d, rng)
    transcript = Transcript(T=T, d=d)
    for _ in range(T):
        x = as_vector(policy.next_query(transcript.entries))
        if x.shape != (d,):
            raise DimensionMismatchError("algorithm produced a query of wrong dimension")
        try:
            reply = oracle(x)
        except Exception as exc:
            raise OracleFailure(f"oracle failed on query {x!r}: {exc}", query=x) from exc
        transcript.append(x, reply)
    return transcript


def validate_span(transcript: Transcript, tol: float = 1e-8) -> tuple[bool, int | None]:
    """Check x1 = 0 and x_t in span(g_1..g_(t-1)) up to a residual tolerance.

    The tolerance is relative to ``||x_t||`` when that norm exceeds 1,
    absolute otherwise.  Returns ``(ok, first_violating_index)`` with
    1-based indices.
    """
    if len(transcript) == 0:
        raise DegenerateInputError("empty transcript")
    basis: list[np.ndarray] = []
    for t, (x, reply) in enumerate(transcript.entries, start=1):
        xn = np.linalg.norm(x)
        if t == 1:
            if xn > tol:
                return False, 1
        else:
            r = x.copy()
            for _ in range(2):
                for u in basis:
                    r -= (u @ r) * u
            if np.linalg.norm(r) > tol * max(1.0, xn):
                return False, t
        g = reply.subgrad.copy()
        for _ in range(2):
            for u in basis:
                g -= (u @ g) * u
        gn = np.linalg.norm(g)
        if gn > 1e-14 * max(1.0, np.linalg.norm(reply.subgrad)):
            basis.append(g / gn)
    return True, None


def min_distance_to(transcript: Transcript, target) -> float:
    """Minimum Euclidean distance from any recorded query to ``target``."""
    if len(transcript) == 0:
        raise DegenerateInputError("empty transcript")
    target = as_vector(target)
    if target.shape != (transcript.d,):
        raise DimensionMismatchError("target dimension does not match the game")
    return min(float(np.linalg.norm(q - target)) for q in transcript.queries)
