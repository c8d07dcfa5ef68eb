"""Instance generation, offline benchmarks, Monte Carlo trial orchestration,
and estimators for the subsample/improve tail events and expectations.

Everything is reproducible from (spec, seed): per-trial random streams are
keyed by (master seed, trial index), so results do not depend on how trials
are scheduled across worker processes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from io import StringIO
from time import perf_counter

import csv as csv_mod

import numpy as np
from scipy.stats import beta as beta_dist

from .matroids import (
    GroundSet,
    Matroid,
    PartitionMatroid,
    UniformMatroid,
    complete_graph_edges,
    matroid_from_dict,
    parallel_class_count,
)
from .secretary import (
    PlanFallback,
    TrialRecord,
    plan_phases,
    run_accept_all,
    run_dynkin,
    run_greedy_improving,
    run_naive_threshold,
    run_phased,
    subsample_eps,
)
from .union import ImprovesIndex, UnionOracle, covering_number, k_fold

EXACT_LEMMA_LIMIT = 14
_LEMMA_BATCH = 4096
_WEIGHT_REDRAW_ATTEMPTS = 100


class SpecError(ValueError):
    """Invalid instance specification."""


class LemmaParamError(ValueError):
    """Estimator parameters outside the admissible (p, r) region."""


# -- instance specification ---------------------------------------------------


@dataclass
class InstanceSpec:
    """Serializable description of one experiment instance.

    ``matroid`` follows the oracle ``describe()`` schema, optionally with
    randomized generator forms (``complete``/``gnp`` graphs, random linear or
    explicit tables) that get expanded deterministically from ``seed``.
    ``weights`` is either an explicit list or a generator dict.
    """

    matroid: dict
    weights: dict | list
    k: int
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        if not isinstance(data, dict):
            raise SpecError("instance spec must be a JSON object")
        try:
            matroid = dict(data["matroid"])
            k = int(data["k"])
        except KeyError as exc:
            raise SpecError(f"instance spec missing field {exc}") from exc
        weights = data.get("weights", {"generator": "uniform"})
        if not isinstance(weights, (dict, list)):
            raise SpecError("weights must be a list or a generator object")
        return cls(matroid=matroid, weights=weights, k=k, seed=int(data.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"matroid": self.matroid, "weights": self.weights, "k": self.k, "seed": self.seed}


def load_instance_spec(source: str) -> InstanceSpec:
    """Parse an inline JSON object or read it from a file path."""
    text = source.strip()
    if not text.startswith("{"):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        return InstanceSpec.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid instance JSON: {exc}") from exc


def _resolve_matroid_spec(spec: dict, rng: np.random.Generator) -> dict:
    """Expand randomized generator forms into a static describe()-style dict."""
    kind = spec.get("kind")
    if kind == "uniform":
        return {"kind": "uniform", "n": int(spec["n"]), "cap": int(spec["cap"])}
    if kind == "partition":
        if "blocks" in spec:
            return {
                "kind": "partition",
                "n": sum(len(b) for b in spec["blocks"]),
                "blocks": [list(b) for b in spec["blocks"]],
                "caps": [int(c) for c in spec["caps"]],
            }
        n = int(spec["n"])
        num_blocks = int(spec["num_blocks"])
        if n % num_blocks:
            raise SpecError("n must be divisible by num_blocks")
        size = n // num_blocks
        blocks = [list(range(b * size, (b + 1) * size)) for b in range(num_blocks)]
        cap = int(spec.get("cap", 1))
        return {"kind": "partition", "n": n, "blocks": blocks, "caps": [cap] * num_blocks}
    if kind == "graphic":
        if "edges" in spec:
            edges = [list(e) for e in spec["edges"]]
            vertices = int(spec["vertices"])
        elif "complete" in spec:
            vertices = int(spec["complete"])
            edges = [list(e) for e in complete_graph_edges(vertices)]
        elif "gnp" in spec:
            vertices = int(spec["gnp"]["vertices"])
            p_edge = float(spec["gnp"]["p"])
            edges = [
                [u, v]
                for u, v in complete_graph_edges(vertices)
                if rng.random() < p_edge
            ]
            if not edges:
                raise SpecError("random graph came out empty; raise p or vertices")
        else:
            raise SpecError("graphic spec needs edges, complete, or gnp")
        return {"kind": "graphic", "n": len(edges), "vertices": vertices, "edges": edges}
    if kind == "linear":
        p = int(spec["field"])
        if "matrix" in spec:
            matrix = [list(row) for row in spec["matrix"]]
            return {"kind": "linear", "n": len(matrix[0]), "field": p, "matrix": matrix}
        rows, n = int(spec["rows"]), int(spec["n"])
        cols = []
        for _ in range(n):
            col = rng.integers(0, p, size=rows)
            while not col.any():
                col = rng.integers(0, p, size=rows)
            cols.append(col)
        matrix = np.stack(cols, axis=1).tolist()
        return {"kind": "linear", "n": n, "field": p, "matrix": matrix}
    if kind == "explicit":
        if "independent" in spec:
            sets = [list(s) for s in spec["independent"]]
            n = int(spec["n"]) if "n" in spec else (max((max(s) for s in sets if s), default=-1) + 1)
            return {"kind": "explicit", "n": n, "independent": sets}
        # random small matroid via a random linear representation
        n = int(spec["n"])
        if n > 10:
            raise SpecError("random explicit matroids limited to n <= 10")
        rank = int(spec.get("rank", 3))
        p = int(spec.get("field", 5))
        inner = _resolve_matroid_spec({"kind": "linear", "rows": rank, "n": n, "field": p}, rng)
        probe = matroid_from_dict(GroundSet(np.arange(1, n + 1, dtype=float)), inner)
        sets = [
            sorted(i for i in range(n) if mask >> i & 1)
            for mask in range(1 << n)
            if probe._indep(frozenset(i for i in range(n) if mask >> i & 1))
        ]
        return {"kind": "explicit", "n": n, "independent": sets}
    raise SpecError(f"unknown matroid kind {kind!r}")


def _generate_weights(n: int, weights_spec, rng: np.random.Generator) -> np.ndarray:
    if isinstance(weights_spec, list):
        w = np.asarray(weights_spec, dtype=np.float64)
        if w.size != n:
            raise SpecError(f"explicit weights have length {w.size}, expected {n}")
        return w
    generator = weights_spec.get("generator", "uniform")
    if generator == "uniform":
        # i.i.d. uniform(0, 1]; redraw on the (measure-zero) event of a tie
        for _ in range(_WEIGHT_REDRAW_ATTEMPTS):
            w = 1.0 - rng.random(n)
            if np.unique(w).size == n:
                return w
        raise SpecError("tie-rejection exhausted while drawing weights")
    if generator == "exp_scale":
        # Adversarial stand-in: geometric scale weights base^-j, randomly
        # assigned to elements. The originally cited hard distribution is not
        # constructive, so this is a documented substitute.
        base = float(weights_spec.get("base", 2.0))
        if base <= 1.0:
            raise SpecError("exp_scale base must exceed 1")
        if (n - 1) * math.log2(base) > 1000:
            raise SpecError("exp_scale underflows for this (n, base)")
        ladder = base ** -np.arange(n, dtype=np.float64)
        return ladder[rng.permutation(n)]
    raise SpecError(f"unknown weight generator {generator!r}")


@dataclass
class ResolvedInstance:
    ground: GroundSet
    matroid: Matroid
    k: int
    resolved_matroid: dict


def resolve_instance(spec: InstanceSpec) -> ResolvedInstance:
    rng_matroid = np.random.default_rng(np.random.SeedSequence([spec.seed & 0xFFFFFFFF, 0]))
    rng_weights = np.random.default_rng(np.random.SeedSequence([spec.seed & 0xFFFFFFFF, 1]))
    static = _resolve_matroid_spec(spec.matroid, rng_matroid)
    n = int(static["n"])
    weights_spec = spec.weights
    if isinstance(weights_spec, dict) and "seed" in weights_spec:
        rng_weights = np.random.default_rng(
            np.random.SeedSequence([int(weights_spec["seed"]) & 0xFFFFFFFF, 1])
        )
    weights = _generate_weights(n, weights_spec, rng_weights)
    ground = GroundSet(weights)
    matroid = matroid_from_dict(ground, static)
    if spec.k < 1:
        raise SpecError("k must be >= 1")
    return ResolvedInstance(ground=ground, matroid=matroid, k=spec.k, resolved_matroid=static)


def generate_instance(spec: InstanceSpec, rng: np.random.Generator | None = None):
    """(ground, matroid, k) for a spec; deterministic in (spec, seed).

    ``rng`` is accepted for signature compatibility but the build is keyed to
    the spec's own seed so a spec always expands to the same instance.
    """
    inst = resolve_instance(spec)
    return inst.ground, inst.matroid, inst.k


def generate_hard_union(k: int, eps: float, m: int, *, seed: int = 0, base: float = 2.0):
    """Heterogeneous hard-instance family: a partition matroid with 2k/eps
    singleton-cap blocks of size m, unioned with k copies of the 1-uniform
    matroid. Weights use the exp_scale stand-in distribution."""
    if eps <= 0 or m < 1 or k < 1:
        raise SpecError("need eps > 0, m >= 1, k >= 1")
    num_blocks = int(round(2 * k / eps))
    if num_blocks < 1:
        raise SpecError("2k/eps rounds below 1")
    n = num_blocks * m
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 2]))
    weights = _generate_weights(n, {"generator": "exp_scale", "base": base}, rng)
    ground = GroundSet(weights)
    blocks = [list(range(b * m, (b + 1) * m)) for b in range(num_blocks)]
    partition = PartitionMatroid(ground, blocks, [1] * num_blocks)
    members = [partition] + [UniformMatroid(ground, 1) for _ in range(k)]
    return ground, UnionOracle(members)


def offline_opt(ground: GroundSet, matroid: Matroid, k: int) -> tuple[frozenset[int], float]:
    """Max-weight basis of the whole ground set in the k-fold union."""
    basis = k_fold(matroid, k).max_weight_basis(range(ground.n))
    return basis, ground.weight(basis)


# -- Monte Carlo trials --------------------------------------------------------


ALGORITHM_IDS = ("alg1", "dynkin", "naive_threshold", "greedy_improving", "accept_all")


@dataclass
class Aggregate:
    algorithm: str
    n: int
    k: int
    matroid_kind: str
    trials: int
    mean_ratio: float
    se: float
    min_ratio: float
    max_ratio: float
    phi_max: int
    seed: int
    mode: str
    wall_s: float

    def csv_row(self) -> list:
        return [
            self.algorithm, self.n, self.k, self.matroid_kind, self.trials,
            self.mean_ratio, self.se, self.min_ratio, self.max_ratio,
            self.phi_max, self.seed,
        ]

    def row_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "k": self.k,
            "matroid_kind": self.matroid_kind,
            "trials": self.trials,
            "mean_ratio": self.mean_ratio,
            "se": self.se,
            "min": self.min_ratio,
            "max": self.max_ratio,
            "phi_max": self.phi_max,
            "seed": self.seed,
            "mode": self.mode,
        }


@dataclass
class TrialsResult:
    aggregates: list[Aggregate]
    fallback_notes: list[str] = field(default_factory=list)
    records: list[dict] | None = None


def _run_one_algorithm(algorithm: str, ground, matroid, k, order, rng, *,
                       opt_weight, c_override, nsim_mode, naive_eps, trace) -> TrialRecord:
    if algorithm == "alg1":
        return run_phased(
            ground, matroid, k, order, rng,
            c_override=c_override, nsim_mode=nsim_mode,
            opt_weight=opt_weight, trace=trace,
        )
    if algorithm == "dynkin":
        return run_dynkin(ground, order, matroid=matroid, k=k, opt_weight=opt_weight)
    if algorithm == "naive_threshold":
        return run_naive_threshold(ground, k, naive_eps, order, opt_weight=opt_weight)
    if algorithm == "greedy_improving":
        return run_greedy_improving(ground, matroid, k, order, opt_weight=opt_weight)
    if algorithm == "accept_all":
        return run_accept_all(ground, matroid, k, order, opt_weight=opt_weight)
    raise SpecError(f"unknown algorithm {algorithm!r}")


def _trial_range(args) -> list[list[tuple[float, int]]]:
    (ground, matroid, k, algorithms, seed, t_lo, t_hi, opt_weight,
     c_override, nsim_mode, naive_eps) = args
    out: list[list[tuple[float, int]]] = []
    for t in range(t_lo, t_hi):
        order = np.random.default_rng(np.random.SeedSequence([seed, t, 0])).permutation(ground.n)
        row: list[tuple[float, int]] = []
        for ai, algorithm in enumerate(algorithms):
            rng = np.random.default_rng(np.random.SeedSequence([seed, t, 1 + ai]))
            rec = _run_one_algorithm(
                algorithm, ground, matroid, k, order, rng,
                opt_weight=opt_weight, c_override=c_override,
                nsim_mode=nsim_mode, naive_eps=naive_eps, trace=False,
            )
            row.append((rec.ratio, rec.phi))
        out.append(row)
    return out


def run_trials(ground: GroundSet, matroid: Matroid, k: int, algorithms, trials: int,
               seed: int, *, c_override: float | None = None, nsim_mode: bool = False,
               naive_eps: float = 0.1, jobs: int = 1, trace: bool = False) -> TrialsResult:
    """Paired-permutation Monte Carlo: every algorithm in a trial sees the same
    arrival order; streams are keyed by (seed, trial, algorithm) so output is
    identical for any job count."""
    if trials < 1:
        raise SpecError("trials must be >= 1")
    algorithms = list(algorithms)
    for algorithm in algorithms:
        if algorithm not in ALGORITHM_IDS:
            raise SpecError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHM_IDS}")
    if "naive_threshold" in algorithms and not (
        isinstance(matroid, UniformMatroid) and matroid.cap == 1
    ):
        raise SpecError("naive_threshold requires a 1-uniform matroid (k-uniform feasibility)")

    notes: list[str] = []
    if "alg1" in algorithms:
        if k >= ground.n:
            notes.append(f"k={k} >= n={ground.n}: alg1 runs in accept-all mode")
        else:
            n_eff = parallel_class_count(matroid) if nsim_mode else None
            plan = plan_phases(ground.n, k, c_override, n_eff=n_eff)
            if isinstance(plan, PlanFallback):
                notes.append(f"k={k}: plan fallback -> greedy_improving ({plan.reason})")

    _opt_set, opt_weight = offline_opt(ground, matroid, k)

    started = perf_counter()
    rows: list[list[tuple[float, int]]] = []
    records: list[dict] | None = [] if trace else None
    if trace:
        jobs = 1  # traced runs stay sequential so records arrive in trial order
    if jobs <= 1 or trials == 1:
        for t in range(trials):
            order = np.random.default_rng(np.random.SeedSequence([seed, t, 0])).permutation(ground.n)
            row = []
            for ai, algorithm in enumerate(algorithms):
                rng = np.random.default_rng(np.random.SeedSequence([seed, t, 1 + ai]))
                rec = _run_one_algorithm(
                    algorithm, ground, matroid, k, order, rng,
                    opt_weight=opt_weight, c_override=c_override,
                    nsim_mode=nsim_mode, naive_eps=naive_eps, trace=trace,
                )
                row.append((rec.ratio, rec.phi))
                if records is not None:
                    records.append(rec.to_dict())
            rows.append(row)
    else:
        chunk = max(1, -(-trials // jobs))
        tasks = [
            (ground, matroid, k, algorithms, seed, lo, min(lo + chunk, trials),
             opt_weight, c_override, nsim_mode, naive_eps)
            for lo in range(0, trials, chunk)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_trial_range, tasks):
                rows.extend(part)
    wall = perf_counter() - started

    aggregates = []
    for ai, algorithm in enumerate(algorithms):
        ratios = np.array([row[ai][0] for row in rows], dtype=np.float64)
        phis = [row[ai][1] for row in rows]
        se = float(np.std(ratios, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        mode = "phased"
        if algorithm == "alg1":
            mode = "accept_all" if k >= ground.n else (
                "fallback_greedy" if any("fallback" in note for note in notes) else "phased"
            )
        aggregates.append(Aggregate(
            algorithm=algorithm,
            n=ground.n,
            k=k,
            matroid_kind=matroid.kind,
            trials=trials,
            mean_ratio=float(np.mean(ratios)),
            se=se,
            min_ratio=float(np.min(ratios)),
            max_ratio=float(np.max(ratios)),
            phi_max=int(max(phis)),
            seed=seed,
            mode=mode,
            wall_s=wall,
        ))
    return TrialsResult(aggregates=aggregates, fallback_notes=notes, records=records)


# -- lemma estimators ------------------------------------------------------------


@dataclass
class LemmaEstimate:
    """Monte Carlo (or exact) estimates for one (p, r) cell."""

    n: int
    k: int
    p: float
    r: int
    C: float
    trials: int
    mode: str  # "mc" or "exact"
    tail_T_threshold: float
    tail_S_threshold: float
    tail_T_freq: float | None
    tail_T_lo: float | None
    tail_T_hi: float | None
    tail_S_freq: float | None
    tail_S_lo: float | None
    tail_S_hi: float | None
    mean_wT: float
    se_wT: float | None
    mean_wS: float
    se_wS: float | None
    mean_wSplus: float
    se_wSplus: float | None
    exact_equal: bool | None = None

    def row_dict(self) -> dict:
        return {
            "p": self.p, "r": self.r, "k": self.k, "C": self.C,
            "trials": self.trials, "mode": self.mode,
            "tail_T_freq": self.tail_T_freq,
            "tail_T_lo": self.tail_T_lo, "tail_T_hi": self.tail_T_hi,
            "tail_S_freq": self.tail_S_freq,
            "tail_S_lo": self.tail_S_lo, "tail_S_hi": self.tail_S_hi,
            "mean_wT": self.mean_wT, "se_wT": self.se_wT,
            "mean_wS": self.mean_wS, "se_wS": self.se_wS,
            "mean_wSplus": self.mean_wSplus, "se_wSplus": self.se_wSplus,
            "exact_equal": self.exact_equal,
        }


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval."""
    if trials < 1:
        raise LemmaParamError("trials must be >= 1")
    alpha = 1.0 - level
    lo = 0.0 if successes == 0 else float(beta_dist.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta_dist.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def _check_lemma_params(n: int, k: int, p: float, r: int, C: float) -> tuple[float, float]:
    if n < 2:
        raise LemmaParamError("need n >= 2")
    log2_n = math.log2(n)
    eps_k = subsample_eps(C, log2_n, k)
    if not (eps_k <= p <= 0.5):
        raise LemmaParamError(f"p={p} outside [eps(k)={eps_k:.6g}, 1/2]")
    eps_pk = subsample_eps(C, log2_n, p * k)
    if r < (1.0 + eps_pk) * p * k:
        raise LemmaParamError(
            f"r={r} below (1+eps(pk))*pk = {(1.0 + eps_pk) * p * k:.6g}"
        )
    eps_r = subsample_eps(C, log2_n, r)
    return (1.0 + eps_r) * r, (1.0 + eps_pk) * p * k


def exact_improving_means(ground: GroundSet, matroid: Matroid, r: int,
                          p: Fraction) -> tuple[Fraction, Fraction]:
    """Exact E[w(T*)] and E[w(S*)] by exhausting, per element, the outcome
    subspace of its strictly-heavier prefix (membership of an element in
    either set depends on nothing else).

    The two expectations are computed through different membership routes --
    T* goes through the span characterization of improvement, S* through
    greedy max-weight-basis membership -- so their exact equality is a real
    cross-check, not an identity of the code path.
    """
    n = ground.n
    if n > EXACT_LEMMA_LIMIT:
        raise LemmaParamError(f"exact enumeration limited to n <= {EXACT_LEMMA_LIMIT}")
    oracle = k_fold(matroid, r)
    desc = ground.sort_desc(range(n))
    expect_T = Fraction(0)
    expect_S = Fraction(0)
    one = Fraction(1)
    for pos, elem in enumerate(desc):
        heavier = desc[:pos]
        q_T = Fraction(0)
        q_S = Fraction(0)
        for mask in range(1 << pos):
            subset = frozenset(heavier[b] for b in range(pos) if mask >> b & 1)
            prob = p ** len(subset) * (one - p) ** (pos - len(subset))
            if not oracle.span_contains(subset, elem):
                q_T += prob
            if elem in oracle.max_weight_basis(subset | {elem}):
                q_S += prob
        w = Fraction(float(ground.weights[elem]))
        expect_T += w * p * q_T
        expect_S += w * p * q_S
    return expect_T, expect_S


def estimate_lemmas(ground: GroundSet, matroid: Matroid, k: int, p: float, r: int,
                    trials: int, seed: int, *, C: float, exact: bool = False,
                    force_general: bool = False) -> LemmaEstimate:
    """One (p, r) cell of the subsample experiment.

    Per trial, each element joins S with probability p and T with probability
    p (via the X ~ Ber(2p), Y ~ Ber(1/2) split); T* is the subset of T
    improving S w.r.t. the r-fold union, S* the union max-weight basis of S,
    and S+ the intersection of S with the overall k-fold optimum. Records the
    covering-number tail frequencies of T* and S+ with exact binomial
    intervals, and the three weight means with their standard errors.
    """
    n = ground.n
    tail_T_threshold, tail_S_threshold = _check_lemma_params(n, k, p, r, C)

    opt_set, _opt_w = offline_opt(ground, matroid, k)

    if exact:
        p_frac = Fraction(p)
        expect_T, expect_S = exact_improving_means(ground, matroid, r, p_frac)
        expect_Splus = p_frac * sum((Fraction(float(ground.weights[i])) for i in sorted(opt_set)), Fraction(0))
        return LemmaEstimate(
            n=n, k=k, p=p, r=r, C=C, trials=0, mode="exact",
            tail_T_threshold=tail_T_threshold, tail_S_threshold=tail_S_threshold,
            tail_T_freq=None, tail_T_lo=None, tail_T_hi=None,
            tail_S_freq=None, tail_S_lo=None, tail_S_hi=None,
            mean_wT=float(expect_T), se_wT=None,
            mean_wS=float(expect_S), se_wS=None,
            mean_wSplus=float(expect_Splus), se_wSplus=None,
            exact_equal=(expect_T == expect_S),
        )

    if trials < 2:
        raise LemmaParamError("Monte Carlo mode needs trials >= 2")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 3]))
    weights = ground.weights
    uniform_fast = (
        isinstance(matroid, UniformMatroid)
        and ground.has_distinct_weights()
        and not force_general
    )
    two_p = 2.0 * p

    if uniform_fast:
        desc_idx = np.argsort(-weights, kind="stable")
        inv_desc = np.empty(n, dtype=np.int64)
        inv_desc[desc_idx] = np.arange(n)
        w_desc = weights[desc_idx]
        opt_mask_desc = np.zeros(n, dtype=bool)
        if opt_set:
            opt_mask_desc[inv_desc[sorted(opt_set)]] = True
        cap = matroid.cap
        cap_r = r * cap
    else:
        oracle_r = k_fold(matroid, r)

    wT_parts, wS_parts, wSplus_parts = [], [], []
    tail_T_hits = 0
    tail_S_hits = 0
    done = 0
    while done < trials:
        bsz = min(_LEMMA_BATCH, trials - done)
        X = rng.random((bsz, n)) < two_p
        Y = rng.random((bsz, n)) < 0.5
        if uniform_fast:
            S = (X & Y)[:, desc_idx]
            T = (X & ~Y)[:, desc_idx]
            prefix_S = np.cumsum(S, axis=1) - S
            improve = prefix_S < cap_r
            t_star = T & improve
            s_star = S & improve
            s_plus = S & opt_mask_desc
            wT_parts.append(t_star @ w_desc)
            wS_parts.append(s_star @ w_desc)
            wSplus_parts.append(s_plus @ w_desc)
            phi_T = -(-t_star.sum(axis=1) // cap)
            phi_Splus = -(-s_plus.sum(axis=1) // cap)
            tail_T_hits += int(np.count_nonzero(phi_T >= tail_T_threshold))
            tail_S_hits += int(np.count_nonzero(phi_Splus >= tail_S_threshold))
        else:
            wT_row = np.empty(bsz)
            wS_row = np.empty(bsz)
            wSplus_row = np.empty(bsz)
            for b in range(bsz):
                s_set = frozenset(int(i) for i in np.nonzero(X[b] & Y[b])[0])
                t_set = [int(i) for i in np.nonzero(X[b] & ~Y[b])[0]]
                improver = ImprovesIndex(oracle_r, s_set)
                t_star = [i for i in t_set if improver.improves(i)]
                s_star = oracle_r.max_weight_basis(s_set)
                s_plus = s_set & opt_set
                wT_row[b] = ground.weight(t_star)
                wS_row[b] = ground.weight(s_star)
                wSplus_row[b] = ground.weight(s_plus)
                if covering_number(matroid, t_star) >= tail_T_threshold:
                    tail_T_hits += 1
                if covering_number(matroid, s_plus) >= tail_S_threshold:
                    tail_S_hits += 1
            wT_parts.append(wT_row)
            wS_parts.append(wS_row)
            wSplus_parts.append(wSplus_row)
        done += bsz

    wT = np.concatenate(wT_parts)
    wS = np.concatenate(wS_parts)
    wSplus = np.concatenate(wSplus_parts)
    t_lo, t_hi = clopper_pearson(tail_T_hits, trials)
    s_lo, s_hi = clopper_pearson(tail_S_hits, trials)
    root_t = math.sqrt(trials)
    return LemmaEstimate(
        n=n, k=k, p=p, r=r, C=C, trials=trials, mode="mc",
        tail_T_threshold=tail_T_threshold, tail_S_threshold=tail_S_threshold,
        tail_T_freq=tail_T_hits / trials, tail_T_lo=t_lo, tail_T_hi=t_hi,
        tail_S_freq=tail_S_hits / trials, tail_S_lo=s_lo, tail_S_hi=s_hi,
        mean_wT=float(np.mean(wT)), se_wT=float(np.std(wT, ddof=1) / root_t),
        mean_wS=float(np.mean(wS)), se_wS=float(np.std(wS, ddof=1) / root_t),
        mean_wSplus=float(np.mean(wSplus)), se_wSplus=float(np.std(wSplus, ddof=1) / root_t),
    )


# -- output rendering --------------------------------------------------------------


RESULTS_COLUMNS = [
    "algorithm", "n", "k", "matroid_kind", "trials", "mean_ratio", "se",
    "min", "max", "phi_max", "seed",
]

LEMMAS_COLUMNS = [
    "p", "r", "k", "C", "trials", "mode",
    "tail_T_freq", "tail_T_lo", "tail_T_hi",
    "tail_S_freq", "tail_S_lo", "tail_S_hi",
    "mean_wT", "se_wT", "mean_wS", "se_wS", "mean_wSplus", "se_wSplus",
    "exact_equal",
]


def _render_csv(columns: list[str], rows: list[dict], config: dict) -> str:
    buf = StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv_mod.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])
    return buf.getvalue()


def render_results_csv(aggregates: list[Aggregate], config: dict) -> str:
    return _render_csv(RESULTS_COLUMNS, [a.row_dict() for a in aggregates], config)


def render_lemmas_csv(estimates: list[LemmaEstimate], config: dict) -> str:
    return _render_csv(LEMMAS_COLUMNS, [e.row_dict() for e in estimates], config)


def render_json_mirror(rows: list[dict], config: dict) -> str:
    return json.dumps({"config": config, "rows": rows}, sort_keys=True, indent=2) + "\n"


def format_summary(aggregates: list[Aggregate]) -> str:
    header = f"{'algorithm':<18} {'n':>7} {'k':>6} {'kind':<10} {'trials':>6} {'mean':>8} {'se':>8} {'phi_max':>7}"
    lines = [header, "-" * len(header)]
    for a in aggregates:
        lines.append(
            f"{a.algorithm:<18} {a.n:>7} {a.k:>6} {a.matroid_kind:<10} {a.trials:>6} "
            f"{a.mean_ratio:>8.4f} {a.se:>8.4f} {a.phi_max:>7}"
        )
    return "\n".join(lines)
