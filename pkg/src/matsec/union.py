"""Unions of matroids: independence with witness partitions, rank, span,
covering numbers, and the subset/flat characterizations used to cross-check
them.

The general route is breadth-first search over the standard exchange digraph
(an arc from x to y in part j means "y can leave part j and x can take its
place"); applying the exchanges along a shortest path keeps every part
independent. Unions whose members are all uniform, or all partition matroids
over the same blocks, collapse to a single uniform/partition matroid and are
served by O(1) counting instead; the exhaustive cross-checks in the test
suite compare both routes.
"""

from __future__ import annotations

import bisect
from collections import deque

from .matroids import (
    GroundSet,
    Matroid,
    MatroidError,
    PartitionMatroid,
    UniformMatroid,
    enumerate_flats,
)

NASH_WILLIAMS_LIMIT = 16
MIN_FORMULA_LIMIT = 20


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class UnionOracle:
    """Union of member matroids over one shared ground set.

    ``k_fold(M, k)`` builds the k-copies special case. Mode detection picks a
    closed-form strategy where one exists:

    * all members uniform  -> the union is uniform with the summed cap;
    * all members partition matroids with identical blocks -> the union is a
      partition matroid with per-block summed caps;
    * anything else        -> augmenting-path machinery.
    """

    def __init__(self, members) -> None:
        members = tuple(members)
        if not members:
            raise MatroidError("union needs at least one member matroid")
        ground = members[0].ground
        for m in members:
            if m.ground is not ground:
                raise MatroidError("all union members must share one GroundSet")
        self.members = members
        self.ground: GroundSet = ground
        self.k = len(members)

        self.mode = "general"
        self.total_cap = 0
        self.block_of = None
        self.block_caps = None
        if all(isinstance(m, UniformMatroid) for m in members):
            self.mode = "uniform"
            self.total_cap = sum(m.cap for m in members)
        elif all(isinstance(m, PartitionMatroid) for m in members):
            first = members[0]
            if all(m.blocks == first.blocks for m in members[1:]):
                self.mode = "partition"
                self.block_of = first.block_of
                self.block_caps = [
                    sum(m.caps[b] for m in members) for b in range(len(first.blocks))
                ]

    # -- closed-form helpers -------------------------------------------------

    def _block_counts(self, s) -> list[int]:
        counts = [0] * len(self.block_caps)
        for e in s:
            counts[self.block_of[e]] += 1
        return counts

    # -- queries ---------------------------------------------------------------

    def rank(self, elements) -> int:
        """Size of a maximum union-independent subset."""
        s = self.ground.check_elements(elements)
        if self.mode == "uniform":
            return min(len(s), self.total_cap)
        if self.mode == "partition":
            return sum(min(c, cap) for c, cap in zip(self._block_counts(s), self.block_caps))
        cert, _failed = self.certificate_for(s)
        return len(cert.covered)

    def is_independent(self, elements) -> bool:
        s = self.ground.check_elements(elements)
        return self.rank(s) == len(s)

    def span_contains(self, elements, i: int) -> bool:
        """True iff adding ``i`` does not raise the union rank."""
        s = self.ground.check_elements(elements)
        i = int(i)
        self.ground.check_elements((i,))
        if i in s:
            return True
        if self.mode == "uniform":
            return len(s) >= self.total_cap
        if self.mode == "partition":
            b = int(self.block_of[i])
            return sum(1 for e in s if self.block_of[e] == b) >= self.block_caps[b]
        cert, _failed = self.certificate_for(s)
        return not cert.can_insert(i)

    def improves(self, elements, i: int) -> bool:
        """True iff ``i`` enters the union max-weight basis of the set + i,
        i.e. i is outside the union span of the strictly-heavier part."""
        s = self.ground.check_elements(elements)
        i = int(i)
        self.ground.check_elements((i,))
        if i in s:
            raise MatroidError(f"element {i} is already in the set")
        key = self.ground.key
        heavier = frozenset(j for j in s if key(j) > key(i))
        return not self.span_contains(heavier, i)

    def max_weight_basis(self, elements) -> frozenset[int]:
        s = self.ground.check_elements(elements)
        ordered = self.ground.sort_desc(s)
        if self.mode == "uniform":
            return frozenset(ordered[: self.total_cap])
        if self.mode == "partition":
            taken = [0] * len(self.block_caps)
            picked = []
            for e in ordered:
                b = int(self.block_of[e])
                if taken[b] < self.block_caps[b]:
                    taken[b] += 1
                    picked.append(e)
            return frozenset(picked)
        cert = self.empty_certificate()
        for e in ordered:
            cert.insert(e)
        return frozenset(cert.covered)

    # -- certificates ------------------------------------------------------------

    def empty_certificate(self) -> "PartitionCertificate":
        return PartitionCertificate(self)

    def certificate_for(self, elements) -> tuple["PartitionCertificate", list[int]]:
        """Insert elements in decreasing weight order; returns the certificate
        and the (possibly empty) list of elements it could not cover."""
        s = self.ground.check_elements(elements)
        cert = self.empty_certificate()
        failed: list[int] = []
        for e in self.ground.sort_desc(s):
            if not cert.insert(e):
                failed.append(e)
        return cert, failed

    def describe(self) -> dict:
        return {"k": self.k, "members": [m.describe() for m in self.members]}


def k_fold(matroid: Matroid, k: int) -> UnionOracle:
    """The union of ``k`` copies of one matroid."""
    if k < 1:
        raise MatroidError("fold count must be >= 1")
    return UnionOracle((matroid,) * k)


class PartitionCertificate:
    """Witness partition: part i is independent in member matroid i.

    Mutable and exclusively owned by its caller; the underlying oracle is
    shared and never modified.
    """

    def __init__(self, oracle: UnionOracle) -> None:
        self.oracle = oracle
        self.parts: list[set[int]] = [set() for _ in range(oracle.k)]
        self.part_of: dict[int, int] = {}
        self.covered: set[int] = set()
        if oracle.mode == "uniform":
            self._fill_ptr = 0
        elif oracle.mode == "partition":
            # per-block pointer to the first member with remaining block room
            self._blk_ptr = [0] * len(oracle.block_caps)
            self._blk_total = [0] * len(oracle.block_caps)
            self._blk_used = [
                [0] * len(oracle.block_caps) for _ in range(oracle.k)
            ]

    def copy(self) -> "PartitionCertificate":
        dup = PartitionCertificate.__new__(PartitionCertificate)
        dup.oracle = self.oracle
        dup.parts = [set(p) for p in self.parts]
        dup.part_of = dict(self.part_of)
        dup.covered = set(self.covered)
        if self.oracle.mode == "uniform":
            dup._fill_ptr = self._fill_ptr
        elif self.oracle.mode == "partition":
            dup._blk_ptr = list(self._blk_ptr)
            dup._blk_total = list(self._blk_total)
            dup._blk_used = [list(row) for row in self._blk_used]
        return dup

    # -- closed-form modes ----------------------------------------------------

    def _uniform_insert(self, i: int, apply: bool) -> bool:
        if len(self.covered) >= self.oracle.total_cap:
            return False
        if apply:
            members = self.oracle.members
            while len(self.parts[self._fill_ptr]) >= members[self._fill_ptr].cap:
                self._fill_ptr += 1
            self.parts[self._fill_ptr].add(i)
            self.part_of[i] = self._fill_ptr
        return True

    def _partition_insert(self, i: int, apply: bool) -> bool:
        oracle = self.oracle
        b = int(oracle.block_of[i])
        if self._blk_total[b] >= oracle.block_caps[b]:
            return False
        if apply:
            j = self._blk_ptr[b]
            while self._blk_used[j][b] >= oracle.members[j].caps[b]:
                j += 1
            self._blk_ptr[b] = j
            self._blk_used[j][b] += 1
            self._blk_total[b] += 1
            self.parts[j].add(i)
            self.part_of[i] = j
        return True

    # -- public interface ---------------------------------------------------------

    def can_insert(self, i: int) -> bool:
        """Non-mutating: would ``covered + {i}`` still be union-independent?"""
        i = int(i)
        if i in self.covered:
            raise MatroidError(f"element {i} is already covered")
        if self.oracle.mode == "uniform":
            return self._uniform_insert(i, apply=False)
        if self.oracle.mode == "partition":
            return self._partition_insert(i, apply=False)
        return _augment(self.oracle.members, self.parts, self.part_of, i, apply=False)[0]

    def insert(self, i: int) -> bool:
        """Grow the certificate by ``i``; False (and no change) if the grown
        set would be dependent in the union."""
        i = int(i)
        if i in self.covered:
            raise MatroidError(f"element {i} is already covered")
        if self.oracle.mode == "uniform":
            ok = self._uniform_insert(i, apply=True)
        elif self.oracle.mode == "partition":
            ok = self._partition_insert(i, apply=True)
        else:
            ok, _ = _augment(self.oracle.members, self.parts, self.part_of, i, apply=True)
        if ok:
            self.covered.add(i)
        return ok

    def failure_witness(self, i: int) -> frozenset[int]:
        """For an uninsertable ``i``: a set R (containing i) certifying
        dependence, with sum_j rank_j(R) < |R|."""
        i = int(i)
        if self.oracle.mode == "uniform":
            return frozenset(self.covered | {i})
        if self.oracle.mode == "partition":
            b = int(self.oracle.block_of[i])
            blocked = {e for e in self.covered if self.oracle.block_of[e] == b}
            return frozenset(blocked | {i})
        ok, reached = _augment(self.oracle.members, self.parts, self.part_of, i, apply=False)
        if ok:
            raise MatroidError(f"element {i} is insertable; no failure witness")
        return frozenset(reached)

    def validate(self) -> bool:
        """Part-by-part re-check against the member oracles."""
        seen: set[int] = set()
        for j, part in enumerate(self.parts):
            if part & seen:
                return False
            seen |= part
            if not self.oracle.members[j]._indep(frozenset(part)):
                return False
        return seen == self.covered

    def parts_sorted(self) -> list[list[int]]:
        return [sorted(p) for p in self.parts]

    def as_dict(self) -> dict:
        return {"parts": self.parts_sorted()}


def _augment(members, parts, part_of, x: int, apply: bool) -> tuple[bool, set[int]]:
    """Shortest augmenting path search in the exchange digraph.

    Returns (success, reached). On success with ``apply=True`` the exchanges
    are executed; on failure ``reached`` is the set of elements reachable from
    ``x``, which certifies dependence (every part's trace on it is spanning).
    """
    k = len(parts)
    prev: dict[int, int | None] = {x: None}
    prev_part: dict[int, int] = {}
    queue = deque((x,))
    while queue:
        u = queue.popleft()
        part_of_u = part_of.get(u, -1)
        # try to finish: some part accepts u outright
        for j in range(k):
            if j == part_of_u:
                continue
            if members[j]._indep(frozenset(parts[j] | {u})):
                if apply:
                    _apply_path(parts, part_of, prev, prev_part, u, j)
                return True, set(prev)
        # otherwise expand exchange arcs u -> y
        for j in range(k):
            if j == part_of_u:
                continue
            base = parts[j]
            for y in sorted(base):
                if y in prev:
                    continue
                if members[j]._indep(frozenset((base - {y}) | {u})):
                    prev[y] = u
                    prev_part[y] = j
                    queue.append(y)
    return False, set(prev)


def _apply_path(parts, part_of, prev, prev_part, tail: int, finish_part: int) -> None:
    # tail enters finish_part; walking back, each node leaves the part it was
    # reached through and its predecessor enters it.
    moves: list[tuple[int, int]] = [(tail, finish_part)]
    node = tail
    while prev[node] is not None:
        pred = prev[node]
        moves.append((pred, prev_part[node]))
        node = pred
    for elem, dest in moves:
        src = part_of.get(elem)
        if src is not None:
            parts[src].discard(elem)
        parts[dest].add(elem)
        part_of[elem] = dest


# -- operation-style wrappers ---------------------------------------------------


def union_insert(cert: PartitionCertificate, i: int) -> bool:
    """Insert ``i`` into a certificate (augmenting if needed)."""
    return cert.insert(i)


def union_is_independent(oracle: UnionOracle, elements):
    """(True, certificate) or (False, witness-set R with sum rank_j(R) < |R|)."""
    s = oracle.ground.check_elements(elements)
    cert = oracle.empty_certificate()
    for e in oracle.ground.sort_desc(s):
        if not cert.insert(e):
            return False, cert.failure_witness(e)
    return True, cert


def union_rank(oracle: UnionOracle, elements) -> int:
    return oracle.rank(elements)


def union_span_contains(oracle: UnionOracle, elements, i: int) -> bool:
    return oracle.span_contains(elements, i)


def union_rank_min_formula(oracle: UnionOracle, elements) -> int:
    """Exhaustive evaluation of min over T of |S - T| + sum_j rank_j(T);
    verification oracle only."""
    s = sorted(oracle.ground.check_elements(elements))
    if len(s) > MIN_FORMULA_LIMIT:
        raise MatroidError(f"min-formula evaluation limited to |S| <= {MIN_FORMULA_LIMIT}")
    best = len(s)  # T = empty
    for mask in range(1, 1 << len(s)):
        t = frozenset(s[b] for b in range(len(s)) if mask >> b & 1)
        value = len(s) - len(t) + sum(m._rank(t) for m in oracle.members)
        if value < best:
            best = value
    return best


class ImprovesIndex:
    """Answers many improves(sample, i) queries against one fixed sample,
    w.r.t. a union oracle.

    For closed-form union modes a query is a heavier-count lookup. For the
    general mode the sample is inserted in decreasing weight order once, with
    a part-assignment snapshot per prefix; a query replays the snapshot for
    i's heavier prefix and runs one insertion probe.
    """

    def __init__(self, oracle: UnionOracle, sample) -> None:
        self.oracle = oracle
        ground = oracle.ground
        ordered = ground.sort_desc(ground.check_elements(sample))
        self._keys_asc = [ground.key(e) for e in reversed(ordered)]
        if oracle.mode == "uniform":
            return
        if oracle.mode == "partition":
            self._block_keys_asc = [[] for _ in oracle.block_caps]
            for e in reversed(ordered):
                self._block_keys_asc[oracle.block_of[e]].append(ground.key(e))
            return
        # general mode: snapshots[t] = partition of the max independent subset
        # of the t heaviest sample elements
        cert = oracle.empty_certificate()
        snapshots = [dict(cert.part_of)]
        for e in ordered:
            cert.insert(e)
            snapshots.append(dict(cert.part_of))
        self._snapshots = snapshots
        self._cert_cache: dict[int, tuple[list[set[int]], dict[int, int]]] = {}

    def _heavier_count(self, i: int) -> int:
        return len(self._keys_asc) - bisect.bisect_right(self._keys_asc, self.oracle.ground.key(i))

    def improves(self, i: int) -> bool:
        oracle = self.oracle
        i = int(i)
        if oracle.mode == "uniform":
            return self._heavier_count(i) < oracle.total_cap
        if oracle.mode == "partition":
            b = int(oracle.block_of[i])
            keys = self._block_keys_asc[b]
            heavier_in_block = len(keys) - bisect.bisect_right(keys, oracle.ground.key(i))
            return heavier_in_block < oracle.block_caps[b]
        t = self._heavier_count(i)
        state = self._cert_cache.get(t)
        if state is None:
            part_of = dict(self._snapshots[t])
            parts: list[set[int]] = [set() for _ in range(oracle.k)]
            for e, j in part_of.items():
                parts[j].add(e)
            state = (parts, part_of)
            self._cert_cache[t] = state
        parts, part_of = state
        ok, _ = _augment(oracle.members, parts, part_of, i, apply=False)
        return ok


# -- covering numbers ------------------------------------------------------------


def covering_number(matroid: Matroid, elements, return_certificate: bool = False):
    """Smallest r such that the set splits into r independent parts.

    Searches r = 1, 2, ... incrementally, carrying the partial certificate
    across increments (a valid partition into r parts is a valid starting
    state for r+1).
    """
    s = matroid.ground.check_elements(elements)
    if not s:
        return (0, []) if return_certificate else 0
    for e in sorted(s):
        if not matroid._indep(frozenset((e,))):
            raise MatroidError(f"element {e} is a loop; covering number undefined")

    if isinstance(matroid, UniformMatroid):
        r = _ceil_div(len(s), matroid.cap)
        if not return_certificate:
            return r
        ordered = matroid.ground.sort_desc(s)
        parts = [set(ordered[j::r]) for j in range(r)]
        return r, [sorted(p) for p in parts]
    if isinstance(matroid, PartitionMatroid):
        counts = [0] * len(matroid.blocks)
        for e in s:
            counts[matroid.block_of[e]] += 1
        r = max(
            _ceil_div(c, matroid.caps[b]) for b, c in enumerate(counts) if c
        )
        if not return_certificate:
            return r
        parts: list[set[int]] = [set() for _ in range(r)]
        used = [[0] * len(matroid.blocks) for _ in range(r)]
        for e in matroid.ground.sort_desc(s):
            b = int(matroid.block_of[e])
            j = next(j for j in range(r) if used[j][b] < matroid.caps[b])
            parts[j].add(e)
            used[j][b] += 1
        return r, [sorted(p) for p in parts]

    parts = []
    part_of: dict[int, int] = {}
    uncovered = matroid.ground.sort_desc(s)
    members: list[Matroid] = []
    while uncovered:
        parts.append(set())
        members.append(matroid)
        still: list[int] = []
        for e in uncovered:
            ok, _ = _augment(members, parts, part_of, e, apply=True)
            if not ok:
                still.append(e)
        uncovered = still
    r = len(parts)
    if not return_certificate:
        return r
    return r, [sorted(p) for p in parts]


def nash_williams_value(matroid: Matroid, elements, return_witness: bool = False):
    """max over nonempty T of ceil(|T| / rank(T)), by exhaustive subset scan."""
    s = sorted(matroid.ground.check_elements(elements))
    if not s:
        raise MatroidError("value undefined for the empty set")
    if len(s) > NASH_WILLIAMS_LIMIT:
        raise MatroidError(f"subset scan limited to |S| <= {NASH_WILLIAMS_LIMIT}")
    for e in s:
        if not matroid._indep(frozenset((e,))):
            raise MatroidError(f"element {e} is a loop")
    best = 0
    witness: frozenset[int] = frozenset()
    for mask in range(1, 1 << len(s)):
        t = frozenset(s[b] for b in range(len(s)) if mask >> b & 1)
        value = _ceil_div(len(t), matroid._rank(t))
        if value > best:
            best = value
            witness = t
    return (best, witness) if return_witness else best


def flats_cover_bound(matroid: Matroid, elements, return_witness: bool = False):
    """max over flats F of positive rank of ceil(|S ∩ F| / rank(F))."""
    s = matroid.ground.check_elements(elements)
    if not s:
        raise MatroidError("value undefined for the empty set")
    for e in sorted(s):
        if not matroid._indep(frozenset((e,))):
            raise MatroidError(f"element {e} is a loop")
    best = 0
    witness: frozenset[int] = frozenset()
    for flat, rank in enumerate_flats(matroid):
        if rank == 0:
            continue
        value = _ceil_div(len(s & flat), rank)
        if value > best:
            best = value
            witness = flat
    return (best, witness) if return_witness else best
