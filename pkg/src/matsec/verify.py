"""Self-verification suites: oracle axioms, the improvement/span equivalence,
the three-way covering-number identity, and the union-rank min-formula, all
cross-checked exhaustively at small n and on sampled instances at n <= 12.

These are the checks behind the ``verify`` endpoint/subcommand; the test
suite runs them too, so a library bug and a verification miss would have to
coincide to slip through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matroids import (
    ExplicitMatroid,
    GraphicMatroid,
    GroundSet,
    LinearMatroid,
    Matroid,
    PartitionMatroid,
    UniformMatroid,
    check_axioms,
    complete_graph_edges,
    improves,
    matroid_from_dict,
    max_weight_basis,
)
from .union import (
    UnionOracle,
    covering_number,
    flats_cover_bound,
    k_fold,
    nash_williams_value,
    union_is_independent,
    union_rank,
    union_rank_min_formula,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    counterexample: dict | None = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "counterexample": self.counterexample,
        }


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.as_dict() for c in self.checks]}


def _ground(n: int, seed: int) -> GroundSet:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    return GroundSet(1.0 - rng.random(n))


def builtin_zoo(seed: int = 0) -> list[tuple[str, Matroid]]:
    """Deterministic small instances covering every concrete oracle kind."""
    zoo: list[tuple[str, Matroid]] = []
    zoo.append(("uniform-5-1", UniformMatroid(_ground(5, seed), 1)))
    zoo.append(("uniform-6-2", UniformMatroid(_ground(6, seed + 1), 2)))
    zoo.append(("uniform-8-3", UniformMatroid(_ground(8, seed + 2), 3)))
    zoo.append((
        "partition-6",
        PartitionMatroid(_ground(6, seed + 3), [[0, 1, 2], [3, 4, 5]], [1, 2]),
    ))
    zoo.append((
        "partition-8",
        PartitionMatroid(
            _ground(8, seed + 4), [[0, 1], [2, 3], [4, 5], [6, 7]], [1, 1, 1, 1]
        ),
    ))
    zoo.append((
        "graphic-K4",
        GraphicMatroid(_ground(6, seed + 5), 4, complete_graph_edges(4)),
    ))
    zoo.append((
        "graphic-doubled-triangle",
        GraphicMatroid(_ground(4, seed + 6), 3, [(0, 1), (1, 2), (0, 2), (0, 1)]),
    ))
    zoo.append((
        "linear-F2",
        LinearMatroid(
            _ground(6, seed + 7),
            [[1, 0, 0, 1, 1, 0], [0, 1, 0, 1, 0, 1], [0, 0, 1, 0, 1, 1]],
            2,
        ),
    ))
    zoo.append((
        "linear-F5",
        LinearMatroid(_ground(5, seed + 8), [[1, 2, 3, 4, 1], [0, 1, 1, 2, 4]], 5),
    ))
    probe_ground = _ground(6, seed + 9)
    probe = LinearMatroid(
        probe_ground,
        [[1, 0, 1, 2, 0, 1], [0, 1, 1, 0, 2, 2], [0, 0, 0, 1, 1, 1]],
        3,
    )
    table = [
        sorted(i for i in range(6) if mask >> i & 1)
        for mask in range(1 << 6)
        if probe._indep(frozenset(i for i in range(6) if mask >> i & 1))
    ]
    zoo.append(("explicit-from-F3", ExplicitMatroid(probe_ground, table)))
    return zoo


def _random_small_matroid(rng: np.random.Generator, n_lo: int = 9, n_hi: int = 12) -> Matroid:
    n = int(rng.integers(n_lo, n_hi + 1))
    ground = GroundSet(1.0 - rng.random(n))
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return UniformMatroid(ground, int(rng.integers(1, max(2, n // 2))))
    if kind == 1:
        num_blocks = int(rng.integers(2, 5))
        labels = rng.permutation(n)
        cuts = sorted(rng.choice(np.arange(1, n), size=num_blocks - 1, replace=False))
        blocks, start = [], 0
        for cut in list(cuts) + [n]:
            blocks.append([int(e) for e in labels[start:cut]])
            start = cut
        caps = [int(rng.integers(1, 3)) for _ in blocks]
        return PartitionMatroid(ground, blocks, caps)
    if kind == 2:
        # random connected-ish multigraph with n edges on few vertices
        v = int(rng.integers(3, 6))
        edges = []
        for _ in range(n):
            a = int(rng.integers(0, v))
            b = int(rng.integers(0, v - 1))
            if b >= a:
                b += 1
            edges.append((a, b))
        return GraphicMatroid(ground, v, edges)
    rows = int(rng.integers(2, 5))
    p = int(rng.choice([2, 3, 5]))
    cols = []
    for _ in range(n):
        col = rng.integers(0, p, size=rows)
        while not col.any():
            col = rng.integers(0, p, size=rows)
        cols.append(col)
    return LinearMatroid(ground, np.stack(cols, axis=1), p)


def _subsets(n: int):
    for mask in range(1 << n):
        yield frozenset(i for i in range(n) if mask >> i & 1)


def check_zoo_axioms(zoo) -> CheckResult:
    for label, matroid in zoo:
        report = check_axioms(matroid)
        if not report.passed:
            return CheckResult(
                "axioms", False, f"{label}: {report.violation}",
                {"matroid": matroid.describe(), **report.as_dict()},
            )
    return CheckResult("axioms", True, f"{len(zoo)} oracles pass the exhaustive axiom check")


def check_zoo_fact1(zoo) -> CheckResult:
    """Span-based improvement test vs. direct max-weight-basis membership."""
    total = 0
    for label, matroid in zoo:
        n = matroid.n
        for s in _subsets(n):
            for i in range(n):
                if i in s:
                    continue
                via_span = improves(matroid, s, i)
                via_opt = i in max_weight_basis(matroid, s | {i})
                total += 1
                if via_span != via_opt:
                    return CheckResult(
                        "fact1", False,
                        f"{label}: disagreement at S={sorted(s)}, i={i}",
                        {"matroid": matroid.describe(), "S": sorted(s), "i": i,
                         "span_route": via_span, "basis_route": via_opt},
                    )
    return CheckResult("fact1", True, f"{total} (S, i) pairs agree across both routes")


def _three_way(label: str, matroid: Matroid, s: frozenset) -> CheckResult | None:
    phi, parts = covering_number(matroid, s, return_certificate=True)
    nw = nash_williams_value(matroid, s)
    fl = flats_cover_bound(matroid, s)
    if not (phi == nw == fl):
        return CheckResult(
            "three-way-covering", False,
            f"{label}: phi={phi}, subset-max={nw}, flat-max={fl} at S={sorted(s)}",
            {"matroid": matroid.describe(), "S": sorted(s),
             "covering_number": phi, "nash_williams": nw, "flats_bound": fl},
        )
    recovered = sorted(e for part in parts for e in part)
    if recovered != sorted(s) or any(
        not matroid.is_independent(part) for part in parts
    ):
        return CheckResult(
            "three-way-covering", False,
            f"{label}: invalid witness partition at S={sorted(s)}",
            {"matroid": matroid.describe(), "S": sorted(s), "parts": parts},
        )
    return None


def check_zoo_three_way(zoo) -> CheckResult:
    total = 0
    for label, matroid in zoo:
        for s in _subsets(matroid.n):
            if not s:
                continue
            bad = _three_way(label, matroid, s)
            if bad is not None:
                return bad
            total += 1
    return CheckResult(
        "three-way-covering", True,
        f"{total} subsets: covering number, subset max, and flat max all agree",
    )


def check_sampled_three_way(seed: int, pairs: int) -> CheckResult:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 23]))
    done = 0
    while done < pairs:
        matroid = _random_small_matroid(rng)
        n = matroid.n
        size = int(rng.integers(1, n + 1))
        s = frozenset(int(e) for e in rng.choice(n, size=size, replace=False))
        bad = _three_way(f"sampled-{done}", matroid, s)
        if bad is not None:
            return bad
        done += 1
    return CheckResult(
        "three-way-covering-sampled", True,
        f"{done} sampled (matroid, S) pairs at n <= 12 agree",
    )


def _union_combos(seed: int):
    g6 = _ground(6, seed + 31)
    k4 = GraphicMatroid(g6, 4, complete_graph_edges(4))
    u1 = UniformMatroid(g6, 1)
    u2 = UniformMatroid(g6, 2)
    part = PartitionMatroid(g6, [[0, 1, 2], [3, 4, 5]], [1, 1])
    lin = LinearMatroid(
        g6, [[1, 0, 1, 1, 0, 1], [0, 1, 1, 0, 1, 1], [0, 0, 0, 1, 1, 1]], 2
    )
    yield "graphic-k1", UnionOracle([k4])
    yield "graphic-x2", UnionOracle([k4, k4])
    yield "uniform-mix", UnionOracle([u1, u2])
    yield "graphic+uniform", UnionOracle([k4, u1])
    yield "partition+uniform", UnionOracle([part, u1])
    yield "linear-x2", UnionOracle([lin, lin])
    yield "partition-x2", UnionOracle([part, part])


def check_union_min_formula(seed: int) -> CheckResult:
    total = 0
    for label, oracle in _union_combos(seed):
        n = oracle.ground.n
        for s in _subsets(n):
            got = union_rank(oracle, s)
            want = union_rank_min_formula(oracle, s)
            total += 1
            if got != want:
                return CheckResult(
                    "union-min-formula", False,
                    f"{label}: rank {got} != min-formula {want} at S={sorted(s)}",
                    {"members": oracle.describe(), "S": sorted(s),
                     "union_rank": got, "min_formula": want},
                )
    return CheckResult(
        "union-min-formula", True,
        f"{total} subsets across member mixes match the min-formula rank",
    )


def check_union_certificates(seed: int) -> CheckResult:
    checked = 0
    for label, oracle in _union_combos(seed):
        n = oracle.ground.n
        for s in _subsets(n):
            independent, payload = union_is_independent(oracle, s)
            if independent:
                cert = payload
                if not cert.validate():
                    return CheckResult(
                        "union-certificates", False,
                        f"{label}: invalid success certificate at S={sorted(s)}",
                        {"members": oracle.describe(), "S": sorted(s),
                         "parts": cert.parts_sorted()},
                    )
            else:
                witness = payload
                total_rank = sum(m.rank(witness) for m in oracle.members)
                if total_rank >= len(witness):
                    return CheckResult(
                        "union-certificates", False,
                        f"{label}: failure witness not rank-deficient at S={sorted(s)}",
                        {"members": oracle.describe(), "S": sorted(s),
                         "witness": sorted(witness), "rank_sum": total_rank},
                    )
            checked += 1
    return CheckResult(
        "union-certificates", True,
        f"{checked} certificates/witnesses validated part by part",
    )


def check_k1_identity(seed: int, cases: int = 50) -> CheckResult:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 41]))
    for c in range(cases):
        matroid = _random_small_matroid(rng)
        n = matroid.n
        size = int(rng.integers(0, n + 1))
        s = frozenset(int(e) for e in rng.choice(n, size=size, replace=False))
        got = k_fold(matroid, 1).rank(s)
        want = matroid.rank(s)
        if got != want:
            return CheckResult(
                "k1-identity", False,
                f"case {c}: 1-fold union rank {got} != member rank {want}",
                {"matroid": matroid.describe(), "S": sorted(s)},
            )
    return CheckResult("k1-identity", True, f"{cases} random (M, S): 1-fold union equals the member oracle")


def check_mutant_canary() -> CheckResult:
    """The axiom checker must catch deliberately broken set families."""
    g2 = GroundSet([2.0, 1.0])
    downward_mutant = ExplicitMatroid(g2, [[], [0], [0, 1]], strict=False)
    report = check_axioms(downward_mutant)
    if report.passed or report.downward_closed:
        return CheckResult(
            "mutant-canary", False,
            "checker missed a downward-closure violation",
            {"matroid": downward_mutant.describe(), **report.as_dict()},
        )
    g3 = GroundSet([3.0, 2.0, 1.0])
    augmentation_mutant = ExplicitMatroid(
        g3, [[], [0], [1], [2], [0, 1]], strict=False
    )
    report = check_axioms(augmentation_mutant)
    if report.passed or report.augmentation_ok:
        return CheckResult(
            "mutant-canary", False,
            "checker missed an augmentation violation",
            {"matroid": augmentation_mutant.describe(), **report.as_dict()},
        )
    return CheckResult("mutant-canary", True, "checker reports witnesses for both injected mutants")


def run_verification(seed: int = 0, sampled_pairs: int = 100) -> VerifyReport:
    zoo = builtin_zoo(seed)
    report = VerifyReport()
    report.checks.append(check_zoo_axioms(zoo))
    report.checks.append(check_zoo_fact1(zoo))
    report.checks.append(check_zoo_three_way(zoo))
    report.checks.append(check_sampled_three_way(seed, sampled_pairs))
    report.checks.append(check_union_min_formula(seed))
    report.checks.append(check_union_certificates(seed))
    report.checks.append(check_k1_identity(seed))
    report.checks.append(check_mutant_canary())
    return report
