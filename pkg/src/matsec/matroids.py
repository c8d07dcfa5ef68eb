"""Weighted ground sets and matroid independence oracles.

Elements are integers ``0..n-1`` over a shared :class:`GroundSet`. Oracles are
immutable after construction; every query builds its own scratch state (union
find forests, row-reduction workspaces), so one oracle instance can be shared
freely across threads and concurrent trials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AXIOM_CHECK_LIMIT = 8
FLAT_ENUMERATION_LIMIT = 16

_SMALL_PRIMES = {
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
    151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227,
    229, 233, 239, 241, 251, 257,
}


class MatroidError(ValueError):
    """Invalid construction or misuse of a matroid oracle."""


class GroundSet:
    """Elements 0..n-1 with strictly positive weights.

    Weight comparisons go through :meth:`key`, which breaks exact ties in
    favor of the lower label, so the induced order is always a strict total
    order even if a caller supplies tied weights.
    """

    __slots__ = ("n", "weights", "_distinct")

    def __init__(self, weights) -> None:
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise MatroidError("weights must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(w)) or bool(np.any(w <= 0.0)):
            raise MatroidError("weights must be finite and strictly positive")
        self.n = int(w.size)
        self.weights = w
        self.weights.setflags(write=False)
        self._distinct = bool(np.unique(w).size == w.size)

    def has_distinct_weights(self) -> bool:
        return self._distinct

    def key(self, i: int) -> tuple[float, int]:
        """Strict total order on elements: larger key = effectively heavier."""
        return (float(self.weights[i]), -i)

    def heavier(self, i: int, j: int) -> bool:
        return self.key(i) > self.key(j)

    def sort_desc(self, elements) -> list[int]:
        return sorted(elements, key=self.key, reverse=True)

    def weight(self, elements) -> float:
        idx = sorted(elements)
        if not idx:
            return 0.0
        return float(np.sum(self.weights[idx]))

    def check_elements(self, elements) -> frozenset[int]:
        s = frozenset(elements)
        for i in s:
            if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n):
                raise MatroidError(f"element label {i!r} out of range 0..{self.n - 1}")
        return frozenset(int(i) for i in s)

    def __repr__(self) -> str:
        return f"GroundSet(n={self.n})"


class Matroid:
    """Independence oracle base class bound to a ground set.

    Subclasses implement ``_indep`` and may override ``_rank`` / ``_span``
    with faster exact routines. Public methods validate element labels.
    """

    kind = "abstract"

    def __init__(self, ground: GroundSet) -> None:
        self.ground = ground

    @property
    def n(self) -> int:
        return self.ground.n

    # -- public, validating interface ------------------------------------

    def is_independent(self, elements) -> bool:
        return self._indep(self.ground.check_elements(elements))

    def rank(self, elements) -> int:
        return self._rank(self.ground.check_elements(elements))

    def span(self, elements) -> frozenset[int]:
        return self._span(self.ground.check_elements(elements))

    # -- implementation hooks ---------------------------------------------

    def _indep(self, s: frozenset[int]) -> bool:
        raise NotImplementedError

    def _rank(self, s: frozenset[int]) -> int:
        # Greedy is exact for matroids (exchange property).
        picked: set[int] = set()
        for e in sorted(s):
            if self._indep(frozenset(picked | {e})):
                picked.add(e)
        return len(picked)

    def _span(self, s: frozenset[int]) -> frozenset[int]:
        r = self._rank(s)
        out = set(s)
        for i in range(self.n):
            if i not in out and self._rank(s | {i}) == r:
                out.add(i)
        return frozenset(out)

    def _reject_loops(self) -> None:
        for i in range(self.n):
            if not self._indep(frozenset((i,))):
                raise MatroidError(
                    f"element {i} is a loop; loopless matroids are required"
                )

    def _parallel_classes(self) -> list[list[int]]:
        # Quadratic pairwise fallback; concrete kinds override with O(n) grouping.
        parent = list(range(self.n))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self._rank(frozenset((i, j))) == 1:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[rj] = ri
        groups: dict[int, list[int]] = {}
        for i in range(self.n):
            groups.setdefault(find(i), []).append(i)
        return [groups[r] for r in sorted(groups)]

    def describe(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class UniformMatroid(Matroid):
    """Independent iff the set has at most ``cap`` elements."""

    kind = "uniform"

    def __init__(self, ground: GroundSet, cap: int) -> None:
        super().__init__(ground)
        if not isinstance(cap, (int, np.integer)) or cap < 1:
            raise MatroidError("uniform cap must be a positive integer (cap=0 would make every element a loop)")
        self.cap = int(cap)

    def _indep(self, s: frozenset[int]) -> bool:
        return len(s) <= self.cap

    def _rank(self, s: frozenset[int]) -> int:
        return min(len(s), self.cap)

    def _span(self, s: frozenset[int]) -> frozenset[int]:
        if len(s) >= self.cap:
            return frozenset(range(self.n))
        return s

    def _parallel_classes(self) -> list[list[int]]:
        if self.cap == 1:
            return [list(range(self.n))]
        return [[i] for i in range(self.n)]

    def describe(self) -> dict:
        return {"kind": "uniform", "n": self.n, "cap": self.cap}


class PartitionMatroid(Matroid):
    """Independent iff each block contributes at most its cap."""

    kind = "partition"

    def __init__(self, ground: GroundSet, blocks, caps) -> None:
        super().__init__(ground)
        blocks = [sorted(int(e) for e in b) for b in blocks]
        caps = [int(c) for c in caps]
        if len(blocks) != len(caps):
            raise MatroidError("blocks and caps must have equal length")
        if any(c < 1 for c in caps):
            raise MatroidError("block caps must be positive (a zero-cap block is all loops)")
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise MatroidError("empty block")
            for e in b:
                if not 0 <= e < self.n or e in seen:
                    raise MatroidError("blocks must partition 0..n-1 exactly")
                seen.add(e)
        if len(seen) != self.n:
            raise MatroidError("blocks must cover all elements")
        self.blocks = [tuple(b) for b in blocks]
        self.caps = tuple(caps)
        block_of = np.empty(self.n, dtype=np.int64)
        for bi, b in enumerate(blocks):
            for e in b:
                block_of[e] = bi
        self.block_of = block_of
        self.block_of.setflags(write=False)

    def _counts(self, s) -> np.ndarray:
        counts = np.zeros(len(self.blocks), dtype=np.int64)
        for e in s:
            counts[self.block_of[e]] += 1
        return counts

    def _indep(self, s: frozenset[int]) -> bool:
        counts = self._counts(s)
        return bool(np.all(counts <= np.asarray(self.caps)))

    def _rank(self, s: frozenset[int]) -> int:
        counts = self._counts(s)
        return int(np.minimum(counts, np.asarray(self.caps)).sum())

    def _span(self, s: frozenset[int]) -> frozenset[int]:
        counts = self._counts(s)
        out = set(s)
        for bi, b in enumerate(self.blocks):
            if counts[bi] >= self.caps[bi]:
                out.update(b)
        return frozenset(out)

    def _parallel_classes(self) -> list[list[int]]:
        classes: list[list[int]] = []
        for bi, b in enumerate(self.blocks):
            if self.caps[bi] == 1:
                classes.append(list(b))
            else:
                classes.extend([e] for e in b)
        return classes

    def describe(self) -> dict:
        return {
            "kind": "partition",
            "n": self.n,
            "blocks": [list(b) for b in self.blocks],
            "caps": list(self.caps),
        }


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


class GraphicMatroid(Matroid):
    """Edges of a multigraph; independent iff the edge set is a forest."""

    kind = "graphic"

    def __init__(self, ground: GroundSet, num_vertices: int, edges) -> None:
        super().__init__(ground)
        edges = [(int(u), int(v)) for u, v in edges]
        if len(edges) != self.n:
            raise MatroidError("need exactly one edge per ground-set element")
        for u, v in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise MatroidError("edge endpoint out of vertex range")
            if u == v:
                raise MatroidError("self-loop edge is a matroid loop; rejected")
        self.num_vertices = int(num_vertices)
        self.edges = tuple(edges)

    def _indep(self, s: frozenset[int]) -> bool:
        uf = _UnionFind(self.num_vertices)
        for e in s:
            u, v = self.edges[e]
            if not uf.union(u, v):
                return False
        return True

    def _rank(self, s: frozenset[int]) -> int:
        uf = _UnionFind(self.num_vertices)
        r = 0
        for e in sorted(s):
            u, v = self.edges[e]
            if uf.union(u, v):
                r += 1
        return r

    def _span(self, s: frozenset[int]) -> frozenset[int]:
        uf = _UnionFind(self.num_vertices)
        for e in s:
            u, v = self.edges[e]
            uf.union(u, v)
        out = set(s)
        for i in range(self.n):
            if i not in out:
                u, v = self.edges[i]
                if uf.find(u) == uf.find(v):
                    out.add(i)
        return frozenset(out)

    def _parallel_classes(self) -> list[list[int]]:
        groups: dict[tuple[int, int], list[int]] = {}
        for i, (u, v) in enumerate(self.edges):
            groups.setdefault((min(u, v), max(u, v)), []).append(i)
        return [groups[key] for key in sorted(groups)]

    def describe(self) -> dict:
        return {
            "kind": "graphic",
            "n": self.n,
            "vertices": self.num_vertices,
            "edges": [list(e) for e in self.edges],
        }


class LinearMatroid(Matroid):
    """Columns of a matrix over a prime field F_p, p <= 257."""

    kind = "linear"

    def __init__(self, ground: GroundSet, matrix, p: int) -> None:
        super().__init__(ground)
        if int(p) not in _SMALL_PRIMES:
            raise MatroidError("field order must be a prime <= 257")
        self.p = int(p)
        m = np.asarray(matrix, dtype=np.int64) % self.p
        if m.ndim != 2 or m.shape[1] != self.n:
            raise MatroidError("matrix must have one column per element")
        self.matrix = m
        self.matrix.setflags(write=False)
        for i in range(self.n):
            if not m[:, i].any():
                raise MatroidError(f"zero column {i} is a loop; rejected")

    def _basis_insert(self, basis: dict[int, np.ndarray], vec: np.ndarray) -> bool:
        """Reduce ``vec`` against the basis; on new pivot, store and return True."""
        p = self.p
        v = vec.copy()
        for piv, row in basis.items():
            c = int(v[piv])
            if c:
                v = (v - c * row) % p
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return False
        piv = int(nz[0])
        inv = pow(int(v[piv]), p - 2, p)
        basis[piv] = (v * inv) % p
        return True

    def _indep(self, s: frozenset[int]) -> bool:
        basis: dict[int, np.ndarray] = {}
        for e in sorted(s):
            if not self._basis_insert(basis, self.matrix[:, e]):
                return False
        return True

    def _rank(self, s: frozenset[int]) -> int:
        basis: dict[int, np.ndarray] = {}
        r = 0
        for e in sorted(s):
            if self._basis_insert(basis, self.matrix[:, e]):
                r += 1
        return r

    def _span(self, s: frozenset[int]) -> frozenset[int]:
        basis: dict[int, np.ndarray] = {}
        for e in sorted(s):
            self._basis_insert(basis, self.matrix[:, e])
        out = set(s)
        for i in range(self.n):
            if i not in out:
                v = self.matrix[:, i].copy()
                for piv, row in basis.items():
                    c = int(v[piv])
                    if c:
                        v = (v - c * row) % self.p
                if not v.any():
                    out.add(i)
        return frozenset(out)

    def _parallel_classes(self) -> list[list[int]]:
        groups: dict[tuple, list[int]] = {}
        for i in range(self.n):
            col = self.matrix[:, i]
            lead = int(col[np.flatnonzero(col)[0]])
            canon = tuple(int(x) for x in (col * pow(lead, self.p - 2, self.p)) % self.p)
            groups.setdefault(canon, []).append(i)
        return [groups[key] for key in sorted(groups)]

    def describe(self) -> dict:
        return {
            "kind": "linear",
            "n": self.n,
            "field": self.p,
            "matrix": self.matrix.tolist(),
        }


class ExplicitMatroid(Matroid):
    """Table-driven oracle over an explicit list of independent sets.

    With ``strict=False`` the table is stored as given, without the empty-set
    or looplessness checks, so deliberately broken set families can be fed to
    the axiom checker.
    """

    kind = "explicit"

    def __init__(self, ground: GroundSet, independent_sets, strict: bool = True) -> None:
        super().__init__(ground)
        if self.n > 20:
            raise MatroidError("explicit tables are only supported for n <= 20")
        masks: set[int] = set()
        table: list[frozenset[int]] = []
        for s in independent_sets:
            fs = self.ground.check_elements(s)
            mask = 0
            for e in fs:
                mask |= 1 << e
            if mask not in masks:
                masks.add(mask)
                table.append(fs)
        self._masks = masks
        self.independent_sets = tuple(sorted(table, key=lambda t: (len(t), sorted(t))))
        if strict:
            if 0 not in masks:
                raise MatroidError("explicit table must contain the empty set")
            self._reject_loops()

    def _indep(self, s: frozenset[int]) -> bool:
        mask = 0
        for e in s:
            mask |= 1 << e
        return mask in self._masks

    def describe(self) -> dict:
        return {
            "kind": "explicit",
            "n": self.n,
            "independent": [sorted(s) for s in self.independent_sets],
        }


# -- weight-aware operations ----------------------------------------------


def max_weight_basis(matroid: Matroid, elements) -> frozenset[int]:
    """Greedy max-weight independent subset of ``elements`` (unique under the
    strict effective weight order)."""
    s = matroid.ground.check_elements(elements)
    picked: set[int] = set()
    for e in matroid.ground.sort_desc(s):
        if matroid._indep(frozenset(picked | {e})):
            picked.add(e)
    return frozenset(picked)


def improves(matroid: Matroid, elements, i: int) -> bool:
    """True iff ``i`` enters the max-weight basis of ``elements + {i}``.

    Evaluated as: i is not spanned by the strictly-heavier part of the set.
    """
    s = matroid.ground.check_elements(elements)
    i = int(i)
    matroid.ground.check_elements((i,))
    if i in s:
        raise MatroidError(f"element {i} is already in the set")
    key = matroid.ground.key
    heavier = frozenset(j for j in s if key(j) > key(i))
    return matroid._rank(heavier | {i}) > matroid._rank(heavier)


# -- flats ------------------------------------------------------------------


@dataclass(frozen=True)
class FlatList:
    """Complete list of flats with their ranks, sorted by (rank, elements)."""

    flats: tuple[frozenset[int], ...]
    ranks: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.flats)

    def __iter__(self):
        return iter(zip(self.flats, self.ranks))


def enumerate_flats(matroid: Matroid) -> FlatList:
    """All flats, found by closing covers level by level up the flat lattice.

    Every rank-(r+1) flat is the span of (rank-r flat + one element), so the
    breadth-first sweep is complete. Guarded to n <= 16.
    """
    n = matroid.n
    if n > FLAT_ENUMERATION_LIMIT:
        raise MatroidError(f"flat enumeration limited to n <= {FLAT_ENUMERATION_LIMIT}")
    bottom = matroid._span(frozenset())
    ranks: dict[frozenset[int], int] = {bottom: 0}
    frontier = [bottom]
    while frontier:
        nxt: list[frozenset[int]] = []
        for flat in frontier:
            base_rank = ranks[flat]
            for i in range(n):
                if i in flat:
                    continue
                grown = matroid._span(flat | {i})
                if grown not in ranks:
                    ranks[grown] = base_rank + 1
                    nxt.append(grown)
        frontier = nxt
    ordered = sorted(ranks, key=lambda f: (ranks[f], sorted(f)))
    return FlatList(tuple(ordered), tuple(ranks[f] for f in ordered))


# -- axiom checking -----------------------------------------------------------


@dataclass(frozen=True)
class AxiomReport:
    """Result of the exhaustive matroid axiom check (n <= 8)."""

    passed: bool
    empty_set_ok: bool
    downward_closed: bool
    augmentation_ok: bool
    violation: str | None = None
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "empty_set_ok": self.empty_set_ok,
            "downward_closed": self.downward_closed,
            "augmentation_ok": self.augmentation_ok,
            "violation": self.violation,
            "witness": [list(w) for w in self.witness] if self.witness else None,
        }


def _mask_to_tuple(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def check_axioms(matroid: Matroid) -> AxiomReport:
    """Exhaustively verify empty-set membership, downward closure and
    augmentation; reports a witness pair on the first failure."""
    n = matroid.n
    if n > AXIOM_CHECK_LIMIT:
        raise MatroidError(f"axiom check limited to n <= {AXIOM_CHECK_LIMIT}")
    indep = [matroid._indep(frozenset(_mask_to_tuple(m, n))) for m in range(1 << n)]

    if not indep[0]:
        return AxiomReport(False, False, True, True, "empty set not independent", ((), ()))

    for m in range(1 << n):
        if not indep[m]:
            continue
        for i in range(n):
            if m >> i & 1 and not indep[m & ~(1 << i)]:
                return AxiomReport(
                    False, True, False, True,
                    "downward-closure violated",
                    (_mask_to_tuple(m & ~(1 << i), n), _mask_to_tuple(m, n)),
                )

    by_size: dict[int, list[int]] = {}
    for m in range(1 << n):
        if indep[m]:
            by_size.setdefault(bin(m).count("1"), []).append(m)
    for small_size in sorted(by_size):
        for big_size in sorted(by_size):
            if big_size <= small_size:
                continue
            for sm in by_size[small_size]:
                for bg in by_size[big_size]:
                    extra = bg & ~sm
                    if extra == 0:
                        continue
                    ok = False
                    e = extra
                    while e:
                        bit = e & -e
                        if indep[sm | bit]:
                            ok = True
                            break
                        e ^= bit
                    if not ok:
                        return AxiomReport(
                            False, True, True, False,
                            "augmentation violated",
                            (_mask_to_tuple(sm, n), _mask_to_tuple(bg, n)),
                        )
    return AxiomReport(True, True, True, True)


def parallel_class_count(matroid: Matroid) -> int:
    """Number of classes under the parallel relation (both singletons and the
    pair have rank 1). Requires a loopless matroid."""
    return len(matroid._parallel_classes())


# -- construction from serialized descriptions --------------------------------


def complete_graph_edges(num_vertices: int) -> list[tuple[int, int]]:
    return [(u, v) for u in range(num_vertices) for v in range(u + 1, num_vertices)]


def matroid_from_dict(ground: GroundSet, spec: dict) -> Matroid:
    """Build an oracle from its ``describe()`` dictionary (static kinds only;
    randomized generator specs are expanded by the harness first)."""
    kind = spec.get("kind")
    if kind == "uniform":
        return UniformMatroid(ground, spec["cap"])
    if kind == "partition":
        return PartitionMatroid(ground, spec["blocks"], spec["caps"])
    if kind == "graphic":
        return GraphicMatroid(ground, spec["vertices"], spec["edges"])
    if kind == "linear":
        return LinearMatroid(ground, spec["matrix"], spec["field"])
    if kind == "explicit":
        return ExplicitMatroid(ground, spec["independent"])
    raise MatroidError(f"unknown matroid kind {kind!r}")
