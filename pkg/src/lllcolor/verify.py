"""Independent oracles and audits.

Everything here re-derives its verdicts from first principles: homogeneity
is checked by scanning pairs, subset search is exhaustive backtracking, the
probability sanity check is honest Monte Carlo, and the solution audit
re-walks every emitted constraint of a pipeline and inspects the coloring
bits directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    InsufficientHorizonError,
    InvalidInputError,
    InvalidParameterError,
    WrongStreamError,
)
from .hindman import (
    MODE_CE,
    MODE_SIGMA2,
    AdditionLike,
    StagedFamily,
    _member_scan,
    build_image_stream,
    build_translate_stream,
)
from .rng import u64
from .streams import Coloring, ConstraintStream, SparsityReport


def is_homogeneous(H, fn: AdditionLike, coloring: Coloring) -> bool:
    """True iff all pair values of H share one color; needs |H| >= 2 and
    every pair value inside the committed prefix."""
    elems = sorted(H)
    if len(elems) < 2:
        raise InvalidInputError("homogeneity needs at least two elements")
    first: int | None = None
    for ai, x in enumerate(elems):
        for y in elems[ai + 1 :]:
            value = fn.pair(x, y)
            if value >= coloring.committed_len:
                raise InsufficientHorizonError(
                    f"pair value {value} lies beyond the committed prefix"
                )
            bit = coloring.bit(value)
            if first is None:
                first = bit
            elif bit != first:
                return False
    return True


def find_homogeneous_subset(
    window: int, fn: AdditionLike, coloring: Coloring, target_size: int
):
    """Lexicographically least homogeneous subset of [0, window) of the given
    size, or None; exhaustive backtracking, not a heuristic."""
    if target_size < 1:
        raise InvalidParameterError("target size must be positive")
    if window < target_size:
        return None
    if target_size == 1:
        return (0,)
    color_of: dict[tuple[int, int], int] = {}
    for x in range(window):
        for y in range(x + 1, window):
            value = fn.pair(x, y)
            if value >= coloring.committed_len:
                raise InsufficientHorizonError(
                    f"pair value {value} lies beyond the committed prefix"
                )
            color_of[(x, y)] = coloring.bit(value)

    def extend(chosen: list[int], color: int | None, start: int):
        if len(chosen) == target_size:
            return tuple(chosen)
        for x in range(start, window):
            if window - x < target_size - len(chosen):
                break
            col = color
            ok = True
            for y in chosen:
                bit = color_of[(y, x)]
                if col is None:
                    col = bit
                elif bit != col:
                    ok = False
                    break
            if ok:
                found = extend(chosen + [x], col, x + 1)
                if found is not None:
                    return found
        return None

    return extend([], None, 0)


@dataclass(frozen=True)
class MemberVerdict:
    member: int
    bound: int
    stabilized: bool
    vacuous: bool
    elements: tuple[int, ...]
    stable_since: int | None
    first_emission: int | None
    translates_checked: int
    violations: tuple[tuple[int, tuple[int, ...]], ...]


@dataclass(frozen=True)
class AuditReport:
    """Per-member verdicts tying a coloring back to the enumerated family it
    was built against: no audited translate may be single-colored, so no
    candidate set extends to a solution witnessed inside the audited
    region."""

    mode: str
    bound_rule: str
    guard: int
    horizon: int
    members: tuple[MemberVerdict, ...]
    translates_checked: int
    violations_total: int

    @property
    def ok(self) -> bool:
        return self.violations_total == 0

    def to_json(self) -> str:
        payload = {
            "mode": self.mode,
            "bound_rule": self.bound_rule,
            "guard": self.guard,
            "horizon": self.horizon,
            "translates_checked": self.translates_checked,
            "violations_total": self.violations_total,
            "ok": self.ok,
            "members": [
                {
                    "member": v.member,
                    "bound": v.bound,
                    "stabilized": v.stabilized,
                    "vacuous": v.vacuous,
                    "elements": list(v.elements),
                    "stable_since": v.stable_since,
                    "first_emission": v.first_emission,
                    "translates_checked": v.translates_checked,
                    "violations": [[s, list(pos)] for s, pos in v.violations],
                }
                for v in self.members
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def audit_solution(
    coloring: Coloring,
    family: StagedFamily,
    fn: AdditionLike,
    M: int,
    mode: str,
    guard: int,
    *,
    stream: ConstraintStream | None = None,
    q: Fraction = Fraction(1, 2),
) -> AuditReport:
    """Re-check every emitted constraint of a pipeline against the coloring.

    For each member whose candidate set is defined (translate mode) or has
    settled by the final stage (image mode), every emitted set lying fully
    inside [guard, committed_len) must carry both colors.  Members that never
    reach their size threshold get a vacuous verdict: they are already
    smaller than the reported bound.
    """
    if not 0 <= guard < coloring.committed_len:
        raise InvalidParameterError("guard must lie inside the committed prefix")
    if mode == "comp":
        if family.mode != MODE_CE:
            raise WrongStreamError("translate audits require a ce-mode family")
        if fn.name != "sum":
            raise WrongStreamError("translate audits run over the sum pair function")
        built = stream if stream is not None else build_translate_stream(family, M, q)
        b = 1
        bound_rule = "M+i"
    elif mode == "main":
        if family.mode != MODE_SIGMA2:
            raise WrongStreamError("image audits require a sigma2-mode family")
        built = stream if stream is not None else build_image_stream(family, fn, M, q)
        b = fn.mult_bound
        bound_rule = f"{b}*(M+i)"
    else:
        raise InvalidParameterError(f"unknown audit mode {mode!r}")
    if built.fingerprint() != coloring.stream_fingerprint:
        raise WrongStreamError("coloring was produced against a different stream")
    if built.provenance is None:
        raise WrongStreamError("audited stream lacks emission provenance")

    by_member: dict[int, list[int]] = {}
    for j, (i, _s) in enumerate(built.provenance):
        by_member.setdefault(i, []).append(j)

    verdicts: list[MemberVerdict] = []
    total_checked = 0
    total_violations = 0
    for i in range(family.count):
        k = (M + i) if mode == "comp" else b * (M + i)
        final_sel: frozenset[int] = frozenset()
        final_since = 0
        for _s, selection, since in _member_scan(family, i, k):
            final_sel, final_since = selection, since
        if mode == "comp":
            defined = bool(final_sel)
            active_from = None
            if defined:
                for s, selection, _ in _member_scan(family, i, k):
                    if selection:
                        active_from = s
                        break
        else:
            defined = bool(final_sel)
            active_from = final_since if defined else None
        if not defined:
            verdicts.append(
                MemberVerdict(i, k, False, True, (), None, None, 0, ()))
            continue
        checked = 0
        violations: list[tuple[int, tuple[int, ...]]] = []
        first_emission = None
        for j in by_member.get(i, ()):
            stage = built.provenance[j][1]
            if stage < active_from:
                continue
            positions = built.dom(j)
            if first_emission is None or stage < first_emission:
                first_emission = stage
            if positions[0] < guard or positions[-1] >= coloring.committed_len:
                continue
            checked += 1
            colors = {coloring.bits[n] for n in positions}
            if len(colors) == 1:
                violations.append((stage, positions))
        total_checked += checked
        total_violations += len(violations)
        verdicts.append(
            MemberVerdict(
                i,
                k,
                True,
                False,
                tuple(sorted(final_sel)),
                active_from,
                first_emission,
                checked,
                tuple(violations),
            )
        )
    return AuditReport(
        mode=mode,
        bound_rule=bound_rule,
        guard=guard,
        horizon=coloring.committed_len,
        members=tuple(verdicts),
        translates_checked=total_checked,
        violations_total=total_violations,
    )


def monte_carlo_homogeneity(f_size: int, trials: int, seed: int) -> Fraction:
    """Fraction of uniformly random 2-colorings of an f_size-set that are
    constant; deterministic in the seed."""
    if f_size < 1:
        raise InvalidParameterError("set size must be positive")
    if trials < 1:
        raise InvalidParameterError("trials must be positive")
    hits = 0
    if f_size <= 64:
        mask = (1 << f_size) - 1
        for t in range(trials):
            word = u64(seed, 71, t) & mask
            if word == 0 or word == mask:
                hits += 1
    else:
        words = -(-f_size // 64)
        for t in range(trials):
            bits = 0
            for w in range(words):
                bits |= u64(seed, 71, t, w) << (64 * w)
            bits &= (1 << f_size) - 1
            if bits == 0 or bits == (1 << f_size) - 1:
                hits += 1
    return Fraction(hits, trials)


def sparsity_counts_csv(report: SparsityReport) -> str:
    """Per-(size, position) nonzero counts, one row each, for plotting."""
    lines = ["m,n,count"]
    for m in sorted(report.counts):
        arr = report.counts[m]
        for n, c in enumerate(arr):
            if c:
                lines.append(f"{m},{n},{c}")
    return "\n".join(lines) + "\n"
