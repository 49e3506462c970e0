"""Phase-committed online 2-coloring against a sparse constraint stream.

Windows double: N_k = n0 * 2**k with n0 = max(64, 4M).  Phase k gathers
every constraint whose domain fits inside [0, N_k), drops those already
satisfied by committed bits, restricts the rest to their uncommitted
positions ("all uncommitted positions disagree" is the bad event), and runs
the deterministic resampler over fair bits on the uncommitted region with a
phase-keyed seed.  On quiescence the prefix [0, N_{k-1}) commits; bits in
[N_{k-1}, N_k) stay resampleable for one more phase so straddling
constraints keep a wide uncommitted margin.

Positions never touched by any constraint default to 0, so an empty stream
yields the all-zero prefix.  A constraint whose uncommitted restriction
becomes unsatisfiable, a pair of constraints pinning one bit both ways, or
a resampling budget blow-up all raise ConstructionFailureError: the
strategy is honest about the rare cases it cannot finish.
"""

from __future__ import annotations

import math
from bisect import bisect_left

from .errors import (
    ConstructionFailureError,
    InvalidParameterError,
    LLLColorError,
    NonConvergenceError,
    UnsatisfiableEventError,
    WrongStreamError,
)
from .lll import Event, _trusted_event, default_budget, fair_bit, solve_moser_tardos
from .rng import derive_seed
from .streams import KIND_SETS, Coloring, ConstraintStream

_ZERO = ord("0")


def phase_base(M: int) -> int:
    """First window size n0 = max(64, 4M)."""
    return max(64, 4 * M)


def _row_cache_get(cache: dict, size: int, bit: int) -> tuple[int, ...]:
    key = (size, bit)
    row = cache.get(key)
    if row is None:
        row = cache[key] = (bit,) * size
    return row


def _phase_events(
    stream: ConstraintStream,
    committed: bytearray,
    window: int,
    resolved: bytearray,
    doms: list[tuple[int, ...]],
    maxs: list[int],
    phase: int,
    row_cache: dict,
) -> list[Event]:
    """Restricted bad events for every unresolved constraint inside the window."""
    events: list[Event] = []
    pinned: dict[int, tuple[int, int]] = {}
    prefix = len(committed)
    is_sets = stream.kind == KIND_SETS
    for j in range(len(stream)):
        if resolved[j] or maxs[j] >= window:
            continue
        dom = doms[j]
        cut = bisect_left(dom, prefix)
        if is_sets:
            saw0 = saw1 = False
            for n in dom[:cut]:
                if committed[n] == _ZERO:
                    saw0 = True
                else:
                    saw1 = True
                if saw0 and saw1:
                    break
            if saw0 and saw1:
                resolved[j] = 1
                continue
            tail = dom[cut:]
            if not tail:
                raise ConstructionFailureError(
                    phase, (j,), "constraint committed single-colored"
                )
            if saw0:
                rows = (_row_cache_get(row_cache, len(tail), 0),)
            elif saw1:
                rows = (_row_cache_get(row_cache, len(tail), 1),)
            else:
                rows = (
                    _row_cache_get(row_cache, len(tail), 0),
                    _row_cache_get(row_cache, len(tail), 1),
                )
        else:
            word = stream.item(j)
            agreed = False
            for pos in range(cut):
                if committed[dom[pos]] - _ZERO == word.vals[pos]:
                    agreed = True
                    break
            if agreed:
                resolved[j] = 1
                continue
            tail = dom[cut:]
            if not tail:
                raise ConstructionFailureError(
                    phase, (j,), "constraint disagreed on every committed position"
                )
            rows = (tuple(1 - word.vals[pos] for pos in range(cut, len(dom))),)
        if len(tail) == 1:
            if len(rows) == 2:
                raise ConstructionFailureError(
                    phase, (j,), "single uncommitted position forced both ways"
                )
            forced = 1 - rows[0][0]
            prior = pinned.get(tail[0])
            if prior is not None and prior[0] != forced:
                raise ConstructionFailureError(
                    phase,
                    (prior[1], j),
                    f"constraints pin position {tail[0]} to opposite bits",
                )
            pinned[tail[0]] = (forced, j)
        # tail is a slice of a sorted duplicate-free domain and rows are
        # canonical, so the trusted constructor is safe here.
        events.append(_trusted_event(j, tail, rows))
    return events


def color_prefix(stream: ConstraintStream, horizon: int, seed: int) -> Coloring:
    """Commit a prefix of length >= horizon on which every constraint whose
    domain fits inside the committed region is met: every partial word
    agrees with the coloring somewhere, every set receives both colors.

    Deterministic in (stream, seed); callers are expected to have passed
    validate_sparsity over the horizon window first.
    """
    if horizon < 1:
        raise InvalidParameterError("horizon must be at least 1")
    n0 = phase_base(stream.M)
    slack = math.ceil(1 / (1 - stream.q))
    committed = bytearray()
    resolved = bytearray(len(stream))
    doms = [stream.dom(j) for j in range(len(stream))]
    maxs = [d[-1] for d in doms]
    row_cache: dict = {}
    k = 1
    while len(committed) < horizon:
        window = n0 << k
        target = n0 << (k - 1)
        events = _phase_events(stream, committed, window, resolved, doms, maxs, k, row_cache)
        assignment: dict[int, int] = {}
        if events:
            var_ids = sorted({n for e in events for n in e.vbl})
            variables = [fair_bit(n) for n in var_ids]
            budget = default_budget(len(events)) * slack
            try:
                result = solve_moser_tardos(
                    events, variables, derive_seed(seed, k), budget, validate=False
                )
            except UnsatisfiableEventError as exc:
                raise ConstructionFailureError(
                    k, (exc.event_id,), "restricted constraint forbids its whole cube"
                ) from exc
            except NonConvergenceError as exc:
                raise ConstructionFailureError(
                    k,
                    tuple(exc.violated),
                    f"resampling budget exhausted after {exc.resamplings} steps",
                ) from exc
            assignment = dict(result.values)
        prefix = len(committed)
        for n in range(prefix, target):
            committed.append(_ZERO + assignment.get(n, 0))
        k += 1
    bits = committed.decode("ascii")
    return Coloring(bits, len(bits), seed, stream.fingerprint(), n0, k - 1)


def extend_coloring(
    coloring: Coloring, stream: ConstraintStream, new_horizon: int
) -> Coloring:
    """Re-run the phase schedule to a larger horizon; the input's committed
    bits are reproduced exactly or the extension fails loudly."""
    if coloring.stream_fingerprint != stream.fingerprint():
        raise WrongStreamError(
            f"coloring was built against stream {coloring.stream_fingerprint}, "
            f"not {stream.fingerprint()}"
        )
    if new_horizon <= coloring.committed_len:
        raise InvalidParameterError("new horizon must exceed the committed length")
    out = color_prefix(stream, new_horizon, coloring.seed)
    if not out.bits.startswith(coloring.bits[: coloring.committed_len]):
        raise LLLColorError("prefix stability violated; this is a bug")
    return out
