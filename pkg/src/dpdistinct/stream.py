"""Turnstile streams and exact (non-private) oracles.

A stream is a sequence of sparse update batches over items 1..d.  Each batch
holds (item, delta) pairs with delta in {-1, +1} and no repeated item.  Two
models are supported:

* ``general``: per-item prefix sums are unconstrained integers; an item is
  present iff its prefix sum is positive.
* ``likes``: every prefix sum must stay in {0, 1} (insert only if absent,
  delete only if present).

This module also provides the exact distinct-count oracle, the flippancy
summary (how often each item's presence indicator flips, with the indicator
defined to be 0 before the stream starts), the difference sequence of the
distinct count, and the ``.dstream`` text format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ModelViolationError, ParameterError, StreamFormatError

UpdateBatch = list[tuple[int, int]]

GENERAL = "general"
LIKES = "likes"
_MODELS = (GENERAL, LIKES)


@dataclass
class Stream:
    """A turnstile input stream.

    ``T`` is the declared length bound; ``batches`` may be shorter, in which
    case the missing suffix is all-zero.
    """

    d: int
    T: int
    model: str
    batches: list[UpdateBatch] = field(default_factory=list)

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"dimension d must be >= 1, got {self.d}")
        if self.T < 0:
            raise ParameterError(f"length bound T must be >= 0, got {self.T}")
        if self.model not in _MODELS:
            raise ParameterError(f"unknown model {self.model!r}")
        if len(self.batches) > self.T:
            raise StreamFormatError(
                f"stream has {len(self.batches)} batches but declares T={self.T}"
            )

    @property
    def length(self) -> int:
        return len(self.batches)


@dataclass
class CounterState:
    """Per-item running sums plus the live distinct count.

    ``q`` is maintained incrementally and always equals ``|{i : c[i] > 0}|``.
    Update cost is proportional to the batch size only.
    """

    d: int
    c: list[int] = field(default_factory=list)
    q: int = 0
    t: int = 0

    def __post_init__(self):
        if not self.c:
            self.c = [0] * self.d
        elif len(self.c) != self.d:
            raise StreamFormatError("initial counts length does not match d")
        else:
            self.q = sum(1 for v in self.c if v > 0)

    def copy(self) -> "CounterState":
        return CounterState(self.d, list(self.c), self.q, self.t)


@dataclass
class FlippancySummary:
    total_K: int
    max_w: int
    per_item: list[int]


@dataclass
class ValidationReport:
    ok: bool
    violation: tuple[int, int] | None  # (item, time) of first likes violation
    singleton: bool


def check_batch(batch: UpdateBatch, d: int) -> None:
    """Reject out-of-range item ids, bad deltas, and duplicate items."""
    seen = set()
    for item, delta in batch:
        if not 1 <= item <= d:
            raise StreamFormatError(f"item id {item} outside [1, {d}]")
        if delta not in (-1, 1):
            raise StreamFormatError(f"delta must be -1 or +1, got {delta}")
        if item in seen:
            raise StreamFormatError(f"item {item} appears twice in one batch")
        seen.add(item)


def apply_batch(state: CounterState, batch: UpdateBatch) -> CounterState:
    """Apply one update batch in place; returns the same state object."""
    check_batch(batch, state.d)
    c = state.c
    for item, delta in batch:
        old = c[item - 1]
        new = old + delta
        c[item - 1] = new
        state.q += (new > 0) - (old > 0)
    state.t += 1
    return state


def distinct_count(state: CounterState) -> int:
    return state.q


def distinct_counts(stream: Stream) -> list[int]:
    """Exact CountDistinct value after every batch."""
    state = CounterState(stream.d)
    out = []
    for batch in stream.batches:
        apply_batch(state, batch)
        out.append(state.q)
    return out


def total_flippancy(stream: Stream) -> FlippancySummary:
    """Count presence-indicator flips per item, with f^0 = 0.

    A flip at time t means the indicator 1(prefix_sum > 0) differs from its
    value at t-1.  The first insertion of an item therefore counts.
    """
    report = validate(stream)
    if not report.ok:
        item, t = report.violation
        raise ModelViolationError(
            f"likes-model violation for item {item} at time {t}"
        )
    sums = [0] * stream.d
    present = [False] * stream.d
    flips = [0] * stream.d
    for batch in stream.batches:
        check_batch(batch, stream.d)
        for item, delta in batch:
            i = item - 1
            sums[i] += delta
            now = sums[i] > 0
            if now != present[i]:
                flips[i] += 1
                present[i] = now
    return FlippancySummary(
        total_K=sum(flips),
        max_w=max(flips) if flips else 0,
        per_item=flips,
    )


def diff_sequence(stream: Stream) -> list[int]:
    """First differences of the distinct count, with CountDistinct^0 = 0."""
    counts = distinct_counts(stream)
    prev = 0
    out = []
    for q in counts:
        out.append(q - prev)
        prev = q
    return out


def validate(stream: Stream) -> ValidationReport:
    """Check model constraints; never raises for a well-formed stream.

    In the likes model the first (item, time) whose prefix sum leaves {0, 1}
    is reported.  General-model streams are always ok.  The singleton flag
    records whether every batch carries at most one update.
    """
    sums = [0] * stream.d
    singleton = True
    violation = None
    for t, batch in enumerate(stream.batches, start=1):
        check_batch(batch, stream.d)
        if len(batch) > 1:
            singleton = False
        for item, delta in batch:
            sums[item - 1] += delta
            if (
                stream.model == LIKES
                and violation is None
                and sums[item - 1] not in (0, 1)
            ):
                violation = (item, t)
    return ValidationReport(ok=violation is None, violation=violation, singleton=singleton)


def require_valid(stream: Stream) -> None:
    report = validate(stream)
    if not report.ok:
        item, t = report.violation
        raise ModelViolationError(
            f"likes-model violation for item {item} at time {t}"
        )


# --- .dstream text format -------------------------------------------------
#
# line 1:       dstream 1 <d> <T> <general|likes>
# lines 2..T+1: space-separated "<item>:<+1|-1>" tokens; empty line = no-op


def dumps(stream: Stream) -> str:
    lines = [f"dstream 1 {stream.d} {stream.T} {stream.model}"]
    for batch in stream.batches:
        lines.append(" ".join(f"{item}:{delta:+d}" for item, delta in batch))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Stream:
    lines = text.splitlines()
    if not lines:
        raise StreamFormatError("empty .dstream input")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "dstream" or header[1] != "1":
        raise StreamFormatError(f"bad .dstream header: {lines[0]!r}")
    try:
        d, T = int(header[2]), int(header[3])
    except ValueError:
        raise StreamFormatError(f"non-integer d/T in header: {lines[0]!r}")
    model = header[4]
    if model not in _MODELS:
        raise StreamFormatError(f"unknown model {model!r} in header")
    data_lines = lines[1:]
    if len(data_lines) > T:
        raise StreamFormatError(
            f"{len(data_lines)} data lines exceed declared T={T}"
        )
    batches: list[UpdateBatch] = []
    for lineno, line in enumerate(data_lines, start=2):
        batch: UpdateBatch = []
        for token in line.split():
            item_s, _, delta_s = token.partition(":")
            try:
                item, delta = int(item_s), int(delta_s)
            except ValueError:
                raise StreamFormatError(f"bad token {token!r} on line {lineno}")
            batch.append((item, delta))
        try:
            check_batch(batch, d)
        except StreamFormatError as exc:
            raise StreamFormatError(f"line {lineno}: {exc}")
        batches.append(batch)
    return Stream(d=d, T=T, model=model, batches=batches)


def write_file(stream: Stream, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(stream))


def read_file(path) -> Stream:
    with open(path) as fh:
        return loads(fh.read())
