"""Addition-like pair functions, staged set enumerations, and the stream
builders that defeat every enumerated candidate set by translation or by
pair-function images.

A staged family mocks an enumeration of sets: ``member_at(i, s)`` is the
finite approximation of member i at stage s, monotone in "ce" mode and
freely churning in "sigma2" mode (membership means eventual permanent
presence).  From a family the two builders emit constraint streams:

* translate streams: once member i has shown ``M + i`` elements, every
  translate of that prefix by s joins the stream;
* image streams: at each stage the ``b*(M+i)`` longest-tenured elements
  form a candidate set whose pair-function image at the current stage is
  emitted, provided the image clears the member's stability start and
  every image emitted from earlier, pre-stability stages.

Both builders install a procedural point-locality oracle whose counts stay
within the sparsity budget checked by ``validate_sparsity``.

The warm-up demos live here too: the delayed-alternation coloring that
defeats a single announced difference, and the exhaustive two-member
pigeonhole obstruction.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .errors import (
    InvalidInputError,
    InvalidParameterError,
    ParseError,
    StreamIntegrityError,
)
from .rng import u64
from .streams import KIND_SETS, ConstraintStream

MODE_CE = "ce"
MODE_SIGMA2 = "sigma2"


@dataclass(frozen=True)
class AdditionLike:
    """A symmetric pair function with a growth witness and a uniform
    multiplicity bound.

    ``pair(x, y)`` is defined for x != y and symmetric; ``y > growth(x, n)``
    implies ``pair(x, y) > n``; for fixed x at most ``mult_bound`` values z
    share any one value ``pair(x, z)``.
    """

    name: str
    pair: Callable[[int, int], int]
    growth: Callable[[int, int], int]
    mult_bound: int


def builtin_addition_like(name: str) -> AdditionLike:
    """The two canonical pair functions: ``sum`` and ``absdiff``."""
    if name == "sum":
        return AdditionLike("sum", lambda x, y: x + y, lambda x, n: n, 1)
    if name == "absdiff":
        return AdditionLike("absdiff", lambda x, y: abs(x - y), lambda x, n: x + n, 2)
    raise InvalidParameterError(f"unknown addition-like function {name!r}")


def pair_image(fn: AdditionLike, base: frozenset[int] | set[int], y: int) -> frozenset[int]:
    """The image {pair(x, y) : x in base}; y must avoid the base set."""
    if y in base:
        raise InvalidInputError(f"image point {y} lies inside the base set")
    return frozenset(fn.pair(x, y) for x in base)


@dataclass(frozen=True)
class StagedFamily:
    """Stagewise approximations of ``count`` enumerated sets.

    ``changes[i]`` lists (stage, full set) change points; between change
    points membership is constant.  Every element obeys the convention
    x < stage at the stage it appears.  ce mode additionally requires
    monotone growth.
    """

    mode: str
    count: int
    stage_count: int
    changes: tuple[tuple[tuple[int, frozenset[int]], ...], ...]

    def __post_init__(self):
        if self.mode not in (MODE_CE, MODE_SIGMA2):
            raise InvalidParameterError(f"unknown family mode {self.mode!r}")
        if self.count != len(self.changes):
            raise InvalidInputError("one change list per member required")
        if self.stage_count < 1:
            raise InvalidParameterError("stage_count must be at least 1")
        canon = []
        for i, points in enumerate(self.changes):
            pts = tuple((int(s), frozenset(p)) for s, p in points)
            prev_stage = -1
            prev_set: frozenset[int] = frozenset()
            for s, members in pts:
                if not 0 <= s < self.stage_count:
                    raise InvalidInputError(f"member {i}: change stage {s} out of range")
                if s <= prev_stage:
                    raise InvalidInputError(f"member {i}: change stages must increase")
                for x in members:
                    if x < 0 or x >= s:
                        raise StreamIntegrityError(
                            f"member {i}: element {x} present at stage {s} violates x < s",
                            witness=(i, s, x),
                        )
                if self.mode == MODE_CE and not prev_set <= members:
                    raise InvalidInputError(f"member {i}: ce families must grow monotonically")
                prev_stage, prev_set = s, members
            canon.append(pts)
        object.__setattr__(self, "changes", tuple(canon))

    def member_at(self, i: int, s: int) -> frozenset[int]:
        if not 0 <= i < self.count:
            raise InvalidParameterError(f"member {i} out of range")
        if not 0 <= s < self.stage_count:
            raise InvalidParameterError(f"stage {s} out of range")
        points = self.changes[i]
        pos = bisect_right(points, s, key=lambda pt: pt[0])
        return points[pos - 1][1] if pos else frozenset()


@dataclass(frozen=True)
class CandidateState:
    """The stage-s candidate subset of one member: its longest-tenured
    elements (ties by value), or empty below the size threshold."""

    member: int
    stage: int
    elements: frozenset[int]
    stable_since: int | None


def _member_scan(
    family: StagedFamily, i: int, k: int
) -> Iterator[tuple[int, frozenset[int], int]]:
    """Yield (stage, selection, selection-change stage) for one member.

    The selection keeps the k longest-tenured present elements, ordering by
    (tenure start, value); tenure resets when an element leaves and
    re-enters.  Selections are recomputed only at membership change points.
    """
    points = family.changes[i]
    ci = 0
    present: frozenset[int] = frozenset()
    tenure: dict[int, int] = {}
    selection: frozenset[int] = frozenset()
    since = 0
    for s in range(family.stage_count):
        if ci < len(points) and points[ci][0] == s:
            incoming = points[ci][1]
            ci += 1
            for x in incoming - present:
                tenure[x] = s
            for x in present - incoming:
                del tenure[x]
            present = incoming
            if len(present) < k:
                chosen: frozenset[int] = frozenset()
            else:
                ranked = sorted(present, key=lambda x: (tenure[x], x))
                chosen = frozenset(ranked[:k])
            if chosen != selection:
                selection = chosen
                since = s
        yield s, selection, since


def candidate_state(
    family: StagedFamily, fn: AdditionLike, M: int, i: int, s: int
) -> CandidateState:
    """Candidate set of member i at stage s: the first ``M + i`` elements in
    enumeration order for ce families, the ``mult_bound * (M + i)``
    longest-tenured ones for sigma2 families."""
    if not 0 <= i < family.count:
        raise InvalidParameterError(f"member {i} out of range")
    if not 0 <= s < family.stage_count:
        raise InvalidParameterError(f"stage {s} out of range")
    k = (M + i) if family.mode == MODE_CE else fn.mult_bound * (M + i)
    for stage, selection, since in _member_scan(family, i, k):
        if stage == s:
            return CandidateState(i, s, selection, since if selection else None)
    raise AssertionError("unreachable")


def choose_M(b: int, q: Fraction, mode: str) -> int:
    """Least M such that the size-m point-count ceiling stays below
    ``2**(q*m)`` for all m >= M: ceiling m in translate ("comp") mode,
    ``b * m**2`` in image ("main") mode.

    Verified by exact integer comparisons up to the point where the
    exponential's growth ratio dominates the polynomial's, then by
    induction; combined with the set-to-word doubling floor so the result
    is usable by sets_to_partials at the same q.
    """
    if b < 1:
        raise InvalidParameterError("multiplicity bound must be at least 1")
    q = Fraction(q)
    if not 0 < q < 1:
        raise InvalidParameterError(f"q must lie in (0, 1), got {q}")
    if mode not in ("comp", "main"):
        raise InvalidParameterError(f"unknown mode {mode!r}")
    a, d = q.numerator, q.denominator
    exp = 1 if mode == "comp" else 2
    coef = 1 if mode == "comp" else b

    def holds(m: int) -> bool:
        return (coef * m**exp) ** d <= 1 << (a * m)

    dominated = 1
    while (dominated + 1) ** (exp * d) > (1 << a) * dominated ** (exp * d):
        dominated += 1
    top = dominated
    while not holds(top):
        top += 1
    last_fail = 0
    for m in range(1, top + 1):
        if not holds(m):
            last_fail = m
    doubling_floor = math.ceil(Fraction(2, 1 - q))
    return max(last_fail + 1, doubling_floor)


def cantor_pair(i: int, s: int) -> int:
    t = i + s
    return t * (t + 1) // 2 + s


def cantor_unpair(p: int) -> tuple[int, int]:
    t = (math.isqrt(8 * p + 1) - 1) // 2
    s = p - t * (t + 1) // 2
    return t - s, s


def _diagonal_pairs(count: int, stage_count: int) -> Iterator[tuple[int, int]]:
    # (i, s) in ascending Cantor index over the finite rectangle.
    for total in range(count + stage_count - 1):
        for s in range(total + 1):
            i = total - s
            if i < count and s < stage_count:
                yield i, s


def build_translate_stream(
    family: StagedFamily, M: int, q: Fraction = Fraction(1, 2)
) -> ConstraintStream:
    """Translates of enumeration prefixes, in diagonal pairing order.

    Member i contributes once it has enumerated ``M + i`` elements; from its
    defining stage onward every translate prefix+s joins the stream.  The
    locality oracle inverts n = x + s over the member's elements, so at most
    m translates of size m pass through any point.
    """
    if family.mode != MODE_CE:
        raise InvalidInputError("translate streams require a ce-mode family")
    q = Fraction(q)
    least = choose_M(1, q, "comp")
    if M < least:
        raise InvalidParameterError(
            f"M={M} violates the size arithmetic; least valid M is {least}",
            least_valid=least,
        )
    count, stages = family.count, family.stage_count
    base: list[tuple[frozenset[int], int] | None] = []
    for i in range(count):
        found = None
        for s, selection, _ in _member_scan(family, i, M + i):
            if selection:
                found = (selection, s)
                break
        base.append(found)

    items: list[frozenset[int]] = []
    prov: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    seen: set[frozenset[int]] = set()
    for i, s in _diagonal_pairs(count, stages):
        got = base[i]
        if got is None or s < got[1]:
            continue
        translate = frozenset(x + s for x in got[0])
        if translate in seen:
            continue
        seen.add(translate)
        index[(i, s)] = len(items)
        prov.append((i, s))
        items.append(translate)

    def locality(m: int, n: int) -> tuple[int, ...]:
        i = m - M
        if i < 0 or i >= count or base[i] is None:
            return ()
        elements, defined = base[i]
        hits = []
        for x in elements:
            s = n - x
            if defined <= s < stages:
                j = index.get((i, s))
                if j is not None:
                    hits.append(j)
        return tuple(sorted(hits))

    return ConstraintStream(KIND_SETS, M, q, tuple(items), tuple(prov), locality)


def build_image_stream(
    family: StagedFamily, fn: AdditionLike, M: int, q: Fraction = Fraction(1, 2)
) -> ConstraintStream:
    """Pair-function images of sigma2 candidate sets, gated for freshness.

    At pair (i, s) with a nonempty candidate set E and stability start s0,
    the image F = {pair(x, s) : x in E} is emitted iff min F > s0 and min F
    exceeds every image value emitted by this member from stages before s0.
    The gating keeps per-point counts within ``b * m**2`` items of size m and
    makes the locality oracle computable from the growth witness: beyond the
    stage bound it yields, images are too large to contain the queried point.
    """
    if family.mode != MODE_SIGMA2:
        raise InvalidInputError("image streams require a sigma2-mode family")
    q = Fraction(q)
    least = choose_M(fn.mult_bound, q, "main")
    if M < least:
        raise InvalidParameterError(
            f"M={M} violates the size arithmetic for b={fn.mult_bound}; "
            f"least valid M is {least}",
            least_valid=least,
        )
    b = fn.mult_bound
    count, stages = family.count, family.stage_count

    selections: list[list[frozenset[int]]] = []
    stable_from: list[list[int]] = []
    min_image: list[list[int | None]] = []
    running_max: list[list[int | None]] = []
    for i in range(count):
        sel_row: list[frozenset[int]] = []
        since_row: list[int] = []
        mins: list[int | None] = []
        runmax: list[int | None] = []
        run: int | None = None
        for s, selection, since in _member_scan(family, i, b * (M + i)):
            sel_row.append(selection)
            since_row.append(since)
            if selection:
                values = [fn.pair(x, s) for x in selection]
                mins.append(min(values))
                peak = max(values)
                run = peak if run is None else max(run, peak)
            else:
                mins.append(None)
            runmax.append(run)
        selections.append(sel_row)
        stable_from.append(since_row)
        min_image.append(mins)
        running_max.append(runmax)

    items: list[frozenset[int]] = []
    prov: list[tuple[int, int]] = []
    records: list[list[tuple[int, int]]] = [[] for _ in range(count)]
    seen: dict[frozenset[int], int] = {}
    for i, s in _diagonal_pairs(count, stages):
        selection = selections[i][s]
        if not selection:
            continue
        s0 = stable_from[i][s]
        lo = min_image[i][s]
        if lo <= s0:
            continue
        prior = running_max[i][s0 - 1] if s0 > 0 else None
        if prior is not None and lo <= prior:
            continue
        image = frozenset(fn.pair(x, s) for x in selection)
        if len(image) < M + i:
            raise StreamIntegrityError(
                f"image of member {i} at stage {s} has {len(image)} values; "
                f"multiplicity bound {b} promises at least {M + i}",
                witness=(i, s),
            )
        j = seen.get(image)
        if j is None:
            j = len(items)
            seen[image] = j
            items.append(image)
            prov.append((i, s))
        records[i].append((s, j))

    sizes = [len(f) for f in items]
    member_sizes = [frozenset(sizes[j] for _, j in recs) for recs in records]

    def locality(m: int, n: int) -> tuple[int, ...]:
        if m < M:
            return ()
        out: set[int] = set()
        for i in range(min(m - M, count - 1) + 1):
            recs = records[i]
            if not recs or m not in member_sizes[i]:
                continue
            if n < stages:
                selection = selections[i][n]
                if selection:
                    bound = max(n, max(fn.growth(x, n) for x in selection)) + 1
                else:
                    bound = n + 1
                bound = min(bound, stages)
            else:
                bound = stages
            for t, j in recs:
                if t >= bound:
                    break
                if sizes[j] == m and n in items[j]:
                    out.add(j)
        return tuple(sorted(out))

    return ConstraintStream(KIND_SETS, M, q, tuple(items), tuple(prov), locality)


def baseline_coloring(a: int, b: int, announce_stage: int, horizon: int) -> str:
    """Delayed-alternation coloring defeating translates of {a, b}.

    Bits are 0 until both the announcement stage and the difference
    d = b - a have passed; afterwards c(s) = 1 - c(s - d), so c(a + s) and
    c(b + s) differ for every s past announce_stage + d with b + s inside
    the horizon.
    """
    if not 0 <= a < b:
        raise InvalidParameterError("need 0 <= a < b")
    d = b - a
    if horizon <= announce_stage + 2 * d:
        raise InvalidParameterError("horizon must exceed announce_stage + 2*(b - a)")
    bits = []
    for s in range(horizon):
        if s < announce_stage or s < d:
            bits.append("0")
        else:
            bits.append("1" if bits[s - d] == "0" else "0")
    return "".join(bits)


@dataclass(frozen=True)
class PigeonholeReport:
    """Exhaustive account of the two-member obstruction with candidate pairs
    {0,1} and {0,2}.

    The triple of translates (pair0+s, pair0+(s+1), pair1+s) covers all
    three position pairs of {s, s+1, s+2}, so two colors force one translate
    homogeneous; the naive triple (pair0+s, pair1+s, pair1+(s+1)) admits
    avoiding patterns, which are listed verbatim.
    """

    max_s: int
    forced_triple_holds: bool
    forced_counterexamples: tuple[str, ...]
    naive_counterexamples: tuple[str, ...]

    @property
    def some_member_recurs(self) -> bool:
        # One of the two members has a homogeneous translate at every s,
        # hence at infinitely many s.
        return self.forced_triple_holds


def pigeonhole_check(max_s: int) -> PigeonholeReport:
    """Check every 2-coloring window against both obstruction triples."""
    if max_s < 0:
        raise InvalidParameterError("max_s must be nonnegative")
    forced_bad: set[str] = set()
    naive_bad: set[str] = set()
    for s in range(max_s + 1):
        width = s + 4
        for mask in range(1 << width):
            c = [(mask >> pos) & 1 for pos in range(width)]
            forced = c[s] == c[s + 1] or c[s + 1] == c[s + 2] or c[s] == c[s + 2]
            if not forced:
                forced_bad.add("".join(str(v) for v in c[s : s + 3]))
            naive = c[s] == c[s + 1] or c[s] == c[s + 2] or c[s + 1] == c[s + 3]
            if not naive:
                naive_bad.add("".join(str(v) for v in c[s : s + 4]))
    return PigeonholeReport(
        max_s=max_s,
        forced_triple_holds=not forced_bad,
        forced_counterexamples=tuple(sorted(forced_bad)),
        naive_counterexamples=tuple(sorted(naive_bad)),
    )


def gen_family(
    seed: int,
    count: int,
    stage_count: int,
    mode: str,
    target_sizes: Sequence[int],
    *,
    rate: int = 2,
    churn_cutoff: int | None = None,
    max_mind_changes: int = 3,
    unstable_members: Sequence[int] = (),
) -> StagedFamily:
    """Deterministic mock enumeration family.

    ``target_sizes[i]`` is the membership size member i is guaranteed to
    reach (and, in sigma2 mode, to hold permanently unless listed in
    ``unstable_members``).  ce mode enumerates elements one way, never
    retracting; sigma2 mode gives each element at most ``max_mind_changes``
    membership toggles, all before ``churn_cutoff`` for stable members, so
    their candidate sets settle early in the stage range.
    """
    if count < 1 or stage_count < 1:
        raise InvalidParameterError("count and stage_count must be at least 1")
    if len(target_sizes) != count:
        raise InvalidParameterError("need one target size per member")
    if mode not in (MODE_CE, MODE_SIGMA2):
        raise InvalidParameterError(f"unknown family mode {mode!r}")
    if rate < 1:
        raise InvalidParameterError("rate must be at least 1")
    unstable = set(unstable_members)

    members: list[tuple[tuple[int, frozenset[int]], ...]] = []
    for i in range(count):
        need = int(target_sizes[i])
        if need < 1:
            raise InvalidParameterError(f"member {i}: target size must be positive")
        span = need + 16
        values: list[int] = []
        seen: set[int] = set()
        t = 0
        while len(values) < need + (0 if mode == MODE_CE else min(6, max(2, need // 8))):
            v = u64(seed, 11, i, t) % span
            t += 1
            if v not in seen:
                seen.add(v)
                values.append(v)

        timeline: dict[int, list[int]] = {}

        def toggle(stage: int, value: int) -> None:
            timeline.setdefault(stage, []).append(value)

        if mode == MODE_CE:
            for jx, v in enumerate(values[:need]):
                entry = max(v + 1, 1 + jx // rate)
                if entry >= stage_count:
                    raise InvalidParameterError(
                        f"member {i}: stage_count {stage_count} too small for "
                        f"target size {need} (entry stage {entry})"
                    )
                toggle(entry, v)
        else:
            if churn_cutoff is not None:
                cutoff = churn_cutoff
            else:
                cutoff = max(2, stage_count // 4, span + 4)
            if cutoff > stage_count:
                raise InvalidParameterError("churn cutoff exceeds the stage range")
            if span + 2 >= cutoff:
                raise InvalidParameterError(
                    f"member {i}: churn cutoff {cutoff} too small for value span "
                    f"{span}; raise stage_count"
                )
            if cutoff + span >= stage_count // 2:
                # stabilization plus image clearance must finish before the
                # top half of the stage range
                raise InvalidParameterError(
                    f"member {i}: stage_count {stage_count} leaves no room past "
                    f"churn; raise it to at least {4 * span + 18}"
                )
            core = values[:need]
            for jx, v in enumerate(values):
                entry = v + 1 + u64(seed, 13, i, jx) % (cutoff - 1 - v)
                flips = u64(seed, 17, i, jx) % (max_mind_changes + 1)
                flips = min(flips, max(0, cutoff - entry - 1))
                if jx < need and flips % 2 == 1:
                    # core elements must end (and stay) present
                    flips -= 1
                toggle(entry, v)
                prev = entry
                for fx in range(flips):
                    gap = 1 + u64(seed, 19, i, jx, fx) % max(1, (cutoff - prev - 1) // max(1, flips - fx))
                    stage = prev + gap
                    if stage >= cutoff:
                        break
                    toggle(stage, v)
                    prev = stage
            if i in unstable:
                victim = core[0]
                leave = (stage_count * 3) // 5
                comeback = (stage_count * 4) // 5
                if comeback > leave >= cutoff:
                    toggle(leave, victim)
                    toggle(comeback, victim)

        present: set[int] = set()
        points: list[tuple[int, frozenset[int]]] = []
        for stage in sorted(timeline):
            for v in timeline[stage]:
                if v in present:
                    present.discard(v)
                else:
                    present.add(v)
            points.append((stage, frozenset(present)))
        members.append(tuple(points))
    return StagedFamily(mode, count, stage_count, tuple(members))


def format_family(family: StagedFamily) -> str:
    lines = [f"family {family.mode} {family.count} {family.stage_count}"]
    for i in range(family.count):
        for stage, members in family.changes[i]:
            elems = " ".join(str(x) for x in sorted(members))
            lines.append(f"at {i} {stage} {elems}".rstrip())
    return "\n".join(lines) + "\n"


def parse_family(text: str) -> StagedFamily:
    mode = None
    count = None
    stage_count = None
    per_member: dict[int, list[tuple[int, frozenset[int]]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        try:
            if toks[0] == "family":
                mode, count, stage_count = toks[1], int(toks[2]), int(toks[3])
            elif toks[0] == "at":
                i, s = int(toks[1]), int(toks[2])
                members = frozenset(int(t) for t in toks[3:])
                per_member.setdefault(i, []).append((s, members))
            else:
                raise ParseError(f"line {lineno}: unknown record {toks[0]!r}")
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: malformed record {raw!r}") from exc
    if mode is None or count is None or stage_count is None:
        raise ParseError("missing family header")
    changes = tuple(tuple(per_member.get(i, [])) for i in range(count))
    return StagedFamily(mode, count, stage_count, changes)
