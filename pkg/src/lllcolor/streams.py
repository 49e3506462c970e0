"""Constraint streams: indexable families of finite sets or partial words
with a point-locality oracle, plus the sparsity validation they must pass
before coloring.

The sparsity hypothesis is that at most ``2**(q*m)`` constraints of size
``m`` pass through any single position, for all ``m >= M``.  That bound is
checked exactly: ``count <= 2**(q*m)`` with ``q = a/d`` is decided as
``count**d <= 2**(a*m)`` in integer arithmetic.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .errors import (
    InsufficientHorizonError,
    InvalidInputError,
    InvalidParameterError,
    ParseError,
    StreamIntegrityError,
)
from .lll import frac_str, parse_frac
from .rng import u64

KIND_SETS = "sets"
KIND_PARTIALS = "partials"


@dataclass(frozen=True)
class PartialWord:
    """A finite partial function N -> 2: sorted domain plus aligned bits."""

    id: int
    dom: tuple[int, ...]
    vals: tuple[int, ...]

    def __post_init__(self):
        dom = tuple(self.dom)
        vals = tuple(int(v) for v in self.vals)
        if not dom:
            raise InvalidInputError(f"word {self.id}: domain must be nonempty")
        if list(dom) != sorted(set(dom)):
            raise InvalidInputError(f"word {self.id}: domain must be sorted, duplicate-free")
        if len(vals) != len(dom):
            raise InvalidInputError(f"word {self.id}: {len(vals)} values for {len(dom)} positions")
        if any(v not in (0, 1) for v in vals):
            raise InvalidInputError(f"word {self.id}: values must be bits")
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "vals", vals)

    @property
    def size(self) -> int:
        return len(self.dom)


@dataclass
class ConstraintStream:
    """A finite, indexable constraint family with a locality oracle.

    ``locality(m, n)`` lists exactly the indices whose item has size ``m``
    and touches position ``n``.  Builders install a procedural oracle; when
    none is present it is derived from the enumeration itself.  The two
    routes are cross-checked by :func:`validate_sparsity`.
    """

    kind: str
    M: int
    q: Fraction
    items: tuple
    provenance: tuple | None = None
    locality_fn: Callable[[int, int], tuple[int, ...]] | None = field(
        default=None, compare=False, repr=False
    )
    _doms: tuple = field(init=False, default=(), compare=False, repr=False)
    _index: dict | None = field(init=False, default=None, compare=False, repr=False)
    _fp: str | None = field(init=False, default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in (KIND_SETS, KIND_PARTIALS):
            raise InvalidParameterError(f"unknown stream kind {self.kind!r}")
        if self.M < 1:
            raise InvalidParameterError("M must be at least 1")
        q = Fraction(self.q)
        if not 0 < q < 1:
            raise InvalidParameterError(f"q must lie in (0, 1), got {q}")
        self.q = q
        items = []
        doms = []
        for j, item in enumerate(self.items):
            if self.kind == KIND_SETS:
                if not isinstance(item, frozenset):
                    item = frozenset(item)
                dom = tuple(sorted(item))
            else:
                if not isinstance(item, PartialWord):
                    raise InvalidInputError(f"item {j}: partials stream needs PartialWord items")
                if item.id != j:
                    raise InvalidInputError(f"item {j}: word id {item.id} must equal its index")
                dom = item.dom
            if len(dom) < self.M:
                raise StreamIntegrityError(
                    f"item {j} has size {len(dom)} below the minimum {self.M}", witness=(j,)
                )
            items.append(item)
            doms.append(dom)
        object.__setattr__(self, "items", tuple(items))
        self._doms = tuple(doms)
        if self.provenance is not None:
            prov = tuple(tuple(p) for p in self.provenance)
            if len(prov) != len(items):
                raise InvalidInputError("provenance length must match item count")
            self.provenance = prov

    def __len__(self) -> int:
        return len(self.items)

    def has_index(self, j: int) -> bool:
        return 0 <= j < len(self.items)

    def item(self, j: int):
        return self.items[j]

    def dom(self, j: int) -> tuple[int, ...]:
        return self._doms[j]

    def size(self, j: int) -> int:
        return len(self._doms[j])

    def sizes_present(self) -> tuple[int, ...]:
        return tuple(sorted({len(d) for d in self._doms}))

    def locality(self, m: int, n: int) -> tuple[int, ...]:
        if self.locality_fn is not None:
            return self.locality_fn(m, n)
        if self._index is None:
            index: dict[tuple[int, int], list[int]] = {}
            for j, dom in enumerate(self._doms):
                for pos in dom:
                    index.setdefault((len(dom), pos), []).append(j)
            self._index = {key: tuple(v) for key, v in index.items()}
        return self._index.get((m, n), ())

    def fingerprint(self) -> str:
        if self._fp is None:
            digest = hashlib.sha256(format_manifest(self).encode("utf-8")).hexdigest()
            self._fp = digest[:16]
        return self._fp


def sets_to_partials(stream: ConstraintStream) -> ConstraintStream:
    """Expand each set F_j into its two constant words 2j (all-0) and
    2j+1 (all-1).

    Doubling the indices costs one unit in the point-count exponent, which
    is absorbed by raising q to ``q' = (q+1)/2`` provided
    ``1 + q*m <= q'*m`` for every ``m >= M``; the least admissible M is
    reported when the given one is too small.
    """
    if stream.kind != KIND_SETS:
        raise InvalidInputError("sets_to_partials needs a sets stream")
    q_prime = (stream.q + 1) / 2
    least = math.ceil(1 / (q_prime - stream.q))
    if stream.M < least:
        raise InvalidParameterError(
            f"M={stream.M} cannot absorb the index doubling at q={stream.q}; "
            f"least admissible M is {least}",
            least_valid=least,
        )
    words = []
    prov = []
    for j in range(len(stream)):
        dom = stream.dom(j)
        words.append(PartialWord(2 * j, dom, (0,) * len(dom)))
        words.append(PartialWord(2 * j + 1, dom, (1,) * len(dom)))
        if stream.provenance is not None:
            prov.extend([stream.provenance[j], stream.provenance[j]])
    base = stream.locality

    def doubled(m: int, n: int) -> tuple[int, ...]:
        out = []
        for j in base(m, n):
            out.extend((2 * j, 2 * j + 1))
        return tuple(sorted(out))

    return ConstraintStream(
        KIND_PARTIALS,
        stream.M,
        q_prime,
        tuple(words),
        tuple(prov) if stream.provenance is not None else None,
        doubled,
    )


def _int_nth_root(x: int, d: int) -> int:
    """Largest r with r**d <= x, exact for arbitrarily large x."""
    if x < 0 or d < 1:
        raise InvalidParameterError("nth root needs x >= 0 and d >= 1")
    if d == 1 or x < 2:
        return x
    if d == 2:
        return math.isqrt(x)
    r = 1 << -(-x.bit_length() // d)
    while True:
        nr = ((d - 1) * r + x // r ** (d - 1)) // d
        if nr >= r:
            break
        r = nr
    while r**d > x:
        r -= 1
    while (r + 1) ** d <= x:
        r += 1
    return r


def point_bound(q: Fraction, m: int) -> int:
    """Largest integer count with ``count <= 2**(q*m)``, decided exactly."""
    q = Fraction(q)
    return _int_nth_root(1 << (q.numerator * m), q.denominator)


@dataclass
class SparsityReport:
    """Outcome of a sparsity sweep: exact per-point counts per size, the
    cells violating or approaching the bound, and how much of the locality
    oracle was cross-checked against the enumeration."""

    window: int
    M: int
    q: Fraction
    counts: dict[int, list[int]]
    violations: tuple[tuple[int, int, int, int], ...]
    near: tuple[tuple[int, int, int, int], ...]
    cross_check: str
    cells_checked: int
    max_size_seen: int
    items_in_window: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary_json(self) -> str:
        import json

        payload = {
            "ok": self.ok,
            "window": self.window,
            "M": self.M,
            "q": frac_str(self.q),
            "items_in_window": self.items_in_window,
            "max_size_seen": self.max_size_seen,
            "violations": [list(v) for v in self.violations],
            "near_bound": [list(v) for v in self.near],
            "cross_check": self.cross_check,
            "cells_checked": self.cells_checked,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _chosen_cells(
    counts: dict[int, list[int]], window: int, mode: str, per_size: int
) -> list[tuple[int, int]]:
    cells: list[tuple[int, int]] = []
    for m in sorted(counts):
        arr = counts[m]
        nonzero = [n for n, c in enumerate(arr) if c]
        if mode == "full":
            cells.extend((m, n) for n in nonzero)
        elif nonzero:
            picks = {nonzero[0], nonzero[-1], max(nonzero, key=lambda n: (arr[n], -n))}
            stride = max(1, len(nonzero) // per_size)
            picks.update(nonzero[::stride][:per_size])
            cells.extend((m, n) for n in sorted(picks))
        for probe in (0, window // 2, window - 1):
            if arr[probe] == 0:
                cells.append((m, probe))
    return sorted(set(cells))


def validate_sparsity(
    stream: ConstraintStream,
    window: int,
    *,
    cross_check: str = "auto",
    sample_per_size: int = 12,
) -> SparsityReport:
    """Check the point bound ``count <= 2**(q*m)`` over the window and
    cross-check the locality oracle against the enumeration.

    Counts come from one pass over the enumerated items, so the bound check
    is complete for every cell with ``m <= window`` and ``n < window``.
    The locality cross-check runs on every nonzero cell when the window is
    small ("full"), otherwise on a deterministic stratified sample plus
    zero-count probes ("sampled"); any disagreement raises
    ``StreamIntegrityError`` with a ``(j, m, n)`` witness.
    """
    if window < 1:
        raise InvalidParameterError("window must be at least 1")
    if cross_check not in ("auto", "full", "sampled"):
        raise InvalidParameterError(f"unknown cross_check mode {cross_check!r}")
    counts: dict[int, list[int]] = {}
    relevant: list[int] = []
    max_size = 0
    for j in range(len(stream)):
        m = stream.size(j)
        max_size = max(max_size, m)
        if m > window:
            continue
        pos = [n for n in stream.dom(j) if n < window]
        if not pos:
            continue
        arr = counts.get(m)
        if arr is None:
            arr = counts[m] = [0] * window
        for n in pos:
            arr[n] += 1
        relevant.append(j)

    bounds = {m: point_bound(stream.q, m) for m in counts}
    violations = []
    near = []
    total_nonzero = 0
    for m in sorted(counts):
        arr = counts[m]
        bound = bounds[m]
        for n, c in enumerate(arr):
            if not c:
                continue
            total_nonzero += 1
            if c > bound:
                violations.append((m, n, c, bound))
            elif 2 * c > bound:
                near.append((m, n, c, bound))

    if cross_check == "auto":
        mode = "full" if total_nonzero <= 20000 else "sampled"
    else:
        mode = cross_check
    cells = _chosen_cells(counts, window, mode, sample_per_size)
    want: dict[tuple[int, int], list[int]] = {cell: [] for cell in cells}
    for j in relevant:
        m = stream.size(j)
        for n in stream.dom(j):
            if n < window and (m, n) in want:
                want[(m, n)].append(j)
    for m, n in cells:
        got = tuple(stream.locality(m, n))
        expect = tuple(want[(m, n)])
        if got != expect:
            diff = sorted(set(got).symmetric_difference(expect))
            witness_j = diff[0] if diff else -1
            raise StreamIntegrityError(
                f"locality({m}, {n}) returned {list(got)} but the enumeration "
                f"holds {list(expect)}",
                witness=(witness_j, m, n),
            )

    return SparsityReport(
        window=window,
        M=stream.M,
        q=stream.q,
        counts=counts,
        violations=tuple(violations),
        near=tuple(near),
        cross_check=mode,
        cells_checked=len(cells),
        max_size_seen=max_size,
        items_in_window=len(relevant),
    )


def gen_sets_stream(
    seed: int,
    count: int,
    window: int,
    M: int,
    *,
    q: Fraction = Fraction(1, 2),
    spread: int = 8,
) -> ConstraintStream:
    """Deterministic scattered set family for tests and experiments:
    ``count`` distinct sets, sizes in ``[M, M+spread]``, inside ``[0, window)``."""
    if count < 0 or M < 1:
        raise InvalidParameterError("count must be >= 0 and M >= 1")
    if window < 4 * (M + spread):
        raise InvalidParameterError("window too small for the requested sizes")
    items: list[frozenset[int]] = []
    seen: set[frozenset[int]] = set()
    attempt = 0
    for j in range(count):
        while True:
            size = M + u64(seed, 9100, j, attempt) % (spread + 1)
            elems: set[int] = set()
            k = 0
            while len(elems) < size:
                elems.add(u64(seed, 9200, j, attempt, k) % window)
                k += 1
            attempt += 1
            fs = frozenset(elems)
            if fs not in seen:
                seen.add(fs)
                items.append(fs)
                break
    return ConstraintStream(KIND_SETS, M, q, tuple(items))


@dataclass(frozen=True)
class Coloring:
    """A committed prefix of an infinite 2-coloring.

    ``bits`` holds exactly the committed prefix; re-running the producer
    with a larger horizon reproduces these bits verbatim.
    """

    bits: str
    committed_len: int
    seed: int
    stream_fingerprint: str
    n0: int
    phases: int

    def __post_init__(self):
        if self.committed_len > len(self.bits):
            raise InvalidInputError("committed_len exceeds available bits")
        if any(ch not in "01" for ch in self.bits):
            raise InvalidInputError("coloring bits must be 0/1 characters")

    def bit(self, n: int) -> int:
        if not 0 <= n < self.committed_len:
            raise InsufficientHorizonError(
                f"position {n} is beyond the committed prefix of length {self.committed_len}"
            )
        return ord(self.bits[n]) - 48


def format_coloring(coloring: Coloring) -> str:
    lines = [
        f"# stream {coloring.stream_fingerprint}",
        f"# phases {coloring.n0} {coloring.phases}",
        f"coloring {coloring.committed_len} {coloring.seed}",
    ]
    bits = coloring.bits[: coloring.committed_len]
    for start in range(0, len(bits), 64):
        lines.append(bits[start : start + 64])
    return "\n".join(lines) + "\n"


def parse_coloring(text: str) -> Coloring:
    fingerprint = ""
    n0 = 0
    phases = 0
    committed = None
    seed = 0
    chunks: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            toks = line[1:].split()
            if toks[:1] == ["stream"] and len(toks) == 2:
                fingerprint = toks[1]
            elif toks[:1] == ["phases"] and len(toks) == 3:
                n0, phases = int(toks[1]), int(toks[2])
            continue
        toks = line.split()
        if toks[0] == "coloring":
            try:
                committed, seed = int(toks[1]), int(toks[2])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {lineno}: malformed coloring header") from exc
        else:
            chunks.append(line)
    if committed is None:
        raise ParseError("missing coloring header")
    bits = "".join(chunks)
    if len(bits) != committed:
        raise ParseError(f"header declares {committed} bits, found {len(bits)}")
    return Coloring(bits, committed, seed, fingerprint, n0, phases)


def format_manifest(stream: ConstraintStream) -> str:
    lines = [f"stream {stream.kind} M {stream.M} q {frac_str(stream.q)}"]
    for j in range(len(stream)):
        if stream.provenance is not None:
            i, s = stream.provenance[j]
            lines.append(f"# by {i} at {s}")
        dom = stream.dom(j)
        lines.append(f"item {j} {len(dom)} " + " ".join(str(n) for n in dom))
        if stream.kind == KIND_PARTIALS:
            lines.append("bits " + " ".join(str(v) for v in stream.item(j).vals))
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> ConstraintStream:
    kind = None
    M = None
    q = None
    doms: list[tuple[int, ...]] = []
    bits: list[tuple[int, ...] | None] = []
    prov: list[tuple[int, int] | None] = []
    pending_prov: tuple[int, int] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            toks = line[1:].split()
            if len(toks) == 4 and toks[0] == "by" and toks[2] == "at":
                pending_prov = (int(toks[1]), int(toks[3]))
            continue
        toks = line.split()
        try:
            if toks[0] == "stream":
                kind = toks[1]
                if toks[2] != "M" or toks[4] != "q":
                    raise ParseError(f"line {lineno}: malformed stream header")
                M = int(toks[3])
                q = parse_frac(toks[5])
            elif toks[0] == "item":
                j, k = int(toks[1]), int(toks[2])
                if j != len(doms):
                    raise ParseError(f"line {lineno}: item index {j} out of order")
                dom = tuple(int(t) for t in toks[3:])
                if len(dom) != k:
                    raise ParseError(f"line {lineno}: item arity mismatch")
                doms.append(dom)
                bits.append(None)
                prov.append(pending_prov)
                pending_prov = None
            elif toks[0] == "bits":
                if not doms or bits[-1] is not None:
                    raise ParseError(f"line {lineno}: stray bits record")
                bits[-1] = tuple(int(t) for t in toks[1:])
            else:
                raise ParseError(f"line {lineno}: unknown record {toks[0]!r}")
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: malformed record {raw!r}") from exc
    if kind is None or M is None or q is None:
        raise ParseError("missing stream header")
    items: list = []
    for j, dom in enumerate(doms):
        if kind == KIND_PARTIALS:
            if bits[j] is None:
                raise ParseError(f"item {j}: partials stream item lacks bits")
            items.append(PartialWord(j, dom, bits[j]))
        else:
            if bits[j] is not None:
                raise ParseError(f"item {j}: sets stream item carries bits")
            items.append(frozenset(dom))
    provenance = tuple(p for p in prov) if all(p is not None for p in prov) and prov else None
    return ConstraintStream(kind, M, q, tuple(items), provenance)
