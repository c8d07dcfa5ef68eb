"""Online selection: the phased threshold algorithm over k-fold matroid
unions, plus the classical single-choice rule, a cardinality threshold rule,
and a greedy improving baseline.

Every run owns all of its mutable state; oracles are shared read-only. The
random draws of a run follow a fixed protocol (one multinomial for the phase
sizes, then per phase one coin vector for the resample pass and one for the
new arrivals), so a record is reproducible from (instance, order, seed) alone
and identical across the vectorized and generic execution paths.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .matroids import GroundSet, Matroid, MatroidError, UniformMatroid, parallel_class_count
from .union import ImprovesIndex, covering_number, k_fold


class PlanError(ValueError):
    """Invalid phase-plan parameters."""


class FeasibilityError(RuntimeError):
    """A completed run violated its covering-number budget (hard failure)."""


@dataclass(frozen=True)
class PlanFallback:
    """Signal that no valid phase schedule exists for (n, k, C); the runner
    should use a baseline instead."""

    reason: str


@dataclass(frozen=True)
class PhasePlan:
    """Doubling schedule of per-phase capacities and subsampling rates.

    ``capacities[l]`` is the phase-(l+1) covering budget used by the improve
    condition, ``acceptance_caps[l]`` the (floored) span-condition budget, and
    ``sample_rates[l]`` the Bernoulli rate for both the resample pass and the
    new arrivals. ``feasibility_sum`` is sum((1+eps_l) * r_l), asserted < k at
    construction.
    """

    n: int
    k: int
    C: float
    L: int
    eps_k: float
    capacities: tuple[int, ...]
    eps_caps: tuple[float, ...]
    acceptance_caps: tuple[int, ...]
    sample_rates: tuple[float, ...]
    feasibility_sum: float
    experimental: bool
    n_eff: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "C": self.C,
            "L": self.L,
            "eps_k": self.eps_k,
            "capacities": list(self.capacities),
            "eps_caps": list(self.eps_caps),
            "acceptance_caps": list(self.acceptance_caps),
            "sample_rates": list(self.sample_rates),
            "feasibility_sum": self.feasibility_sum,
            "experimental": self.experimental,
            "n_eff": self.n_eff,
        }


def subsample_eps(C: float, log2_n: float, x: float) -> float:
    """The schedule's rate function: C * sqrt(log2(n) / x)."""
    return C * math.sqrt(log2_n / x)


def build_plan(n: int, k: int, C: float, L: int, *, experimental: bool, n_eff: int | None = None) -> PhasePlan:
    """Evaluate the schedule at explicit (C, L); raises PlanError if any phase
    is degenerate or the feasibility sum reaches k."""
    if n < 2 or k < 1 or L < 1 or C <= 0:
        raise PlanError("need n >= 2, k >= 1, L >= 1, C > 0")
    n_eff = n if n_eff is None else int(n_eff)
    if n_eff < 2:
        raise PlanError("effective ground size must be >= 2 for the log term")
    log2_n = math.log2(n_eff)
    capacities = [int(math.floor(2.0 ** (l - L - 1) * k)) for l in range(1, L + 1)]
    if capacities[0] < 1:
        raise PlanError(f"first phase capacity floor(2^-{L} * {k}) is zero")
    eps_caps = [subsample_eps(C, log2_n, r) for r in capacities]
    if any(e >= 1.0 for e in eps_caps):
        raise PlanError("subsampling rate 1 - eps(r_l) would be non-positive")
    feasibility_sum = sum((1.0 + e) * r for e, r in zip(eps_caps, capacities))
    if not feasibility_sum < k:
        raise PlanError(
            f"feasibility sum {feasibility_sum:.6g} does not stay below k={k}"
        )
    return PhasePlan(
        n=n,
        k=k,
        C=float(C),
        L=int(L),
        eps_k=subsample_eps(C, log2_n, k),
        capacities=tuple(capacities),
        eps_caps=tuple(eps_caps),
        acceptance_caps=tuple(int(math.floor((1.0 + e) * r)) for e, r in zip(eps_caps, capacities)),
        sample_rates=tuple(1.0 - e for e in eps_caps),
        feasibility_sum=feasibility_sum,
        experimental=experimental,
        n_eff=n_eff,
    )


def plan_phases(n: int, k: int, C_override: float | None = None, *, n_eff: int | None = None):
    """Build the phase schedule for (n, k) or return a :class:`PlanFallback`.

    Without an override, scans L = 1, 2, ... for the constant
    C = sqrt(k / log2(n)) / 2^(L+2) to land in [10, 20] (all logs base 2);
    below that range no positive integer L exists and a fallback is signaled.
    With an override, any C > 0 is accepted and L is rounded half-up to the
    nearest positive integer (experimental mode).
    """
    if k <= 0:
        raise PlanError("k must be positive")
    if n < 2:
        raise PlanError("need at least two elements")
    if k > n:
        raise PlanError("k exceeds n; accept every feasible element instead of planning")
    n_eff = n if n_eff is None else int(n_eff)
    if n_eff < 2:
        raise PlanError("effective ground size must be >= 2")
    log2_n = math.log2(n_eff)

    if C_override is None:
        base = math.sqrt(k / log2_n)
        if base / 8.0 < 10.0:
            return PlanFallback(
                reason=(
                    f"k={k} is below the proof threshold for n_eff={n_eff}: "
                    "no integer L >= 1 puts C in [10, 20]"
                )
            )
        L = 1
        while base / 2.0 ** (L + 2) > 20.0:
            L += 1
        C = base / 2.0 ** (L + 2)
        return build_plan(n, k, C, L, experimental=False, n_eff=n_eff)

    C = float(C_override)
    if C <= 0:
        raise PlanError("C override must be positive")
    eps_k = subsample_eps(C, log2_n, k)
    if eps_k <= 0:
        raise PlanError("eps(k) must be positive")
    L = max(1, int(math.floor(math.log2(1.0 / eps_k) - 2.0 + 0.5)))
    try:
        return build_plan(n, k, C, L, experimental=True, n_eff=n_eff)
    except PlanError as exc:
        return PlanFallback(reason=f"experimental constants rejected: {exc}")


def phase_size_probs(L: int) -> np.ndarray:
    """Ball-in-bin probabilities 2^(max(1, l) - L - 1) for bins 0..L.

    All entries are exact binary powers, so they sum to exactly 1.0.
    """
    if L < 1:
        raise PlanError("need at least one phase")
    return np.array([2.0 ** (max(1, l) - L - 1) for l in range(L + 1)])


def draw_phase_sizes(n: int, L: int, rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise PlanError("n must be non-negative")
    return rng.multinomial(n, phase_size_probs(L))


def sample_phase_sizes(plan: PhasePlan, rng: np.random.Generator) -> np.ndarray:
    """Counts (Z_0, ..., Z_L); always sums to n."""
    return draw_phase_sizes(plan.n, plan.L, rng)


@dataclass
class PhaseTrace:
    capacity: int
    acceptance_cap: int
    sample_rate: float
    sample: list[int]
    eligible: list[int]
    accepted: list[int]

    def as_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "acceptance_cap": self.acceptance_cap,
            "sample_rate": self.sample_rate,
            "sample": self.sample,
            "eligible": self.eligible,
            "accepted": self.accepted,
        }


@dataclass
class TrialRecord:
    """One simulated run: what arrived, what was accepted, and how it scored."""

    algorithm: str
    n: int
    k: int
    order: np.ndarray
    accepted: list[int]
    per_phase: list[list[int]]
    weight: float
    opt_weight: float | None
    phi: int
    mode: str = "phased"
    phase_sizes: list[int] = field(default_factory=list)
    traces: list[PhaseTrace] | None = None

    @property
    def ratio(self) -> float | None:
        if self.opt_weight is None or self.opt_weight <= 0:
            return None
        return self.weight / self.opt_weight

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "k": self.k,
            "mode": self.mode,
            "order": [int(i) for i in self.order],
            "accepted": list(self.accepted),
            "per_phase": [list(p) for p in self.per_phase],
            "phase_sizes": list(self.phase_sizes),
            "weight": self.weight,
            "opt_weight": self.opt_weight,
            "phi": self.phi,
            "traces": [t.as_dict() for t in self.traces] if self.traces is not None else None,
        }


def _check_order(ground: GroundSet, order) -> np.ndarray:
    arr = np.asarray(order, dtype=np.int64)
    if arr.shape != (ground.n,) or not np.array_equal(np.sort(arr), np.arange(ground.n)):
        raise MatroidError("order must be a permutation of 0..n-1")
    return arr


def _finish_record(ground, matroid, k, algorithm, order, accepted, per_phase, *,
                   opt_weight, mode, phase_sizes=None, traces=None,
                   enforce_budget=True) -> TrialRecord:
    phi = covering_number(matroid, accepted)
    if enforce_budget and phi > k:
        raise FeasibilityError(
            f"accepted set has covering number {phi} > k={k}; budget violated"
        )
    return TrialRecord(
        algorithm=algorithm,
        n=ground.n,
        k=k,
        order=order,
        accepted=list(accepted),
        per_phase=[list(p) for p in per_phase],
        weight=ground.weight(accepted),
        opt_weight=opt_weight,
        phi=phi,
        mode=mode,
        phase_sizes=list(phase_sizes) if phase_sizes is not None else [],
        traces=traces,
    )


def run_algorithm1(ground: GroundSet, matroid: Matroid, k: int, order, rng: np.random.Generator,
                   plan: PhasePlan, *, opt_weight: float | None = None,
                   trace: bool = False) -> TrialRecord:
    """Replay the phased algorithm over one arrival order.

    Observation prefix of Z_0 arrivals; then per phase l: a fresh Bernoulli
    (1 - eps(r_l)) resampling of everything observed so far forms the sample,
    and each of the next Z_l arrivals is kept with the same rate and accepted
    iff it improves the sample w.r.t. the r_l-fold union and stays outside the
    floor((1+eps)r_l)-fold union span of the phase's accepted set.
    """
    order = _check_order(ground, order)
    if plan.n != ground.n or plan.k != k:
        raise PlanError("plan was built for a different (n, k)")
    weights = ground.weights
    uniform_fast = isinstance(matroid, UniformMatroid) and ground.has_distinct_weights()

    sizes = sample_phase_sizes(plan, rng)
    pos = int(sizes[0])
    per_phase: list[list[int]] = []
    traces: list[PhaseTrace] | None = [] if trace else None

    for l in range(plan.L):
        rate = plan.sample_rates[l]
        r_l = plan.capacities[l]
        q_l = plan.acceptance_caps[l]
        observed = order[:pos]
        arrivals = order[pos: pos + int(sizes[l + 1])]
        resample_coins = rng.random(observed.size)
        arrival_coins = rng.random(arrivals.size)
        sample = observed[resample_coins < rate]

        if uniform_fast:
            cap_r = r_l * matroid.cap
            cap_q = q_l * matroid.cap
            sample_w = np.sort(weights[sample])
            heavier = sample.size - np.searchsorted(sample_w, weights[arrivals], side="right")
            eligible_mask = arrival_coins < rate
            candidate = eligible_mask & (heavier < cap_r)
            accepted_mask = candidate & (np.cumsum(candidate) <= cap_q)
            accepted_l = [int(e) for e in arrivals[accepted_mask]]
            eligible_l = [int(e) for e in arrivals[eligible_mask]]
        else:
            improver = ImprovesIndex(k_fold(matroid, r_l), sample)
            accept_cert = k_fold(matroid, q_l).empty_certificate()
            accepted_l = []
            eligible_l = []
            for arrival, coin in zip(arrivals, arrival_coins):
                if coin >= rate:
                    continue
                i = int(arrival)
                eligible_l.append(i)
                if improver.improves(i) and accept_cert.can_insert(i):
                    accept_cert.insert(i)
                    accepted_l.append(i)

        per_phase.append(accepted_l)
        if traces is not None:
            traces.append(PhaseTrace(
                capacity=r_l,
                acceptance_cap=q_l,
                sample_rate=rate,
                sample=[int(e) for e in sample],
                eligible=eligible_l,
                accepted=list(accepted_l),
            ))
        pos += int(sizes[l + 1])

    accepted = [e for phase in per_phase for e in phase]
    return _finish_record(
        ground, matroid, k, "alg1", order, accepted, per_phase,
        opt_weight=opt_weight, mode="phased",
        phase_sizes=[int(z) for z in sizes], traces=traces,
    )


def run_accept_all(ground: GroundSet, matroid: Matroid, k: int, order, *,
                   opt_weight: float | None = None) -> TrialRecord:
    """Accept every arrival whose acceptance keeps the set union-independent.

    This is the k >= n regime (everything fits and the result is the offline
    max-weight basis) but it is also a usable greedy baseline for any k.
    """
    order = _check_order(ground, order)
    cert = k_fold(matroid, k).empty_certificate()
    accepted = []
    for arrival in order:
        if cert.insert(int(arrival)):
            accepted.append(int(arrival))
    return _finish_record(
        ground, matroid, k, "accept_all", order, accepted, [accepted],
        opt_weight=opt_weight, mode="accept_all",
    )


def run_dynkin(ground: GroundSet, order, *, matroid: Matroid | None = None,
               k: int | None = None, opt_weight: float | None = None) -> TrialRecord:
    """Classical single-choice rule: observe floor(n/e) arrivals, then accept
    the first arrival beating everything seen before it."""
    order = _check_order(ground, order)
    n = ground.n
    window = int(math.floor(n / math.e))
    key = ground.key
    best = None
    accepted: list[int] = []
    for t, arrival in enumerate(order):
        i = int(arrival)
        if t >= window and (best is None or key(i) > best):
            accepted.append(i)
            break
        if best is None or key(i) > best:
            best = key(i)
    phi_matroid = matroid if matroid is not None else UniformMatroid(ground, 1)
    budget = k if k is not None else 1
    return _finish_record(
        ground, phi_matroid, budget, "dynkin", order, accepted, [accepted],
        opt_weight=opt_weight, mode="dynkin",
    )


def run_naive_threshold(ground: GroundSet, k: int, eps: float, order, *,
                        opt_weight: float | None = None) -> TrialRecord:
    """Cardinality-budget threshold rule (k-uniform feasibility): observe the
    first ceil(eps*n) arrivals, set the bar at the ceil(eps*k)-th highest
    observed weight, then take everything above the bar until k accepts."""
    order = _check_order(ground, order)
    if not 0.0 < eps < 1.0:
        raise MatroidError("eps must lie in (0, 1)")
    if k < 1:
        raise MatroidError("k must be positive")
    n = ground.n
    window = int(math.ceil(eps * n))
    need = int(math.ceil(eps * k))
    key = ground.key
    observed_keys = sorted((key(int(i)) for i in order[:window]), reverse=True)
    threshold = observed_keys[need - 1] if len(observed_keys) >= need else None
    accepted: list[int] = []
    for arrival in order[window:]:
        if len(accepted) >= k:
            break
        i = int(arrival)
        if threshold is None or key(i) > threshold:
            accepted.append(i)
    return _finish_record(
        ground, UniformMatroid(ground, 1), k, "naive_threshold", order, accepted,
        [accepted], opt_weight=opt_weight, mode="naive_threshold",
    )


def run_greedy_improving(ground: GroundSet, matroid: Matroid, k: int, order, *,
                         opt_weight: float | None = None) -> TrialRecord:
    """Fallback baseline for sub-threshold k: after a half-length observation
    window, accept an arrival iff it improves everything seen so far w.r.t.
    the k-fold union and the accepted set stays union-independent."""
    order = _check_order(ground, order)
    n = ground.n
    window = n // 2
    oracle = k_fold(matroid, k)
    accept_cert = oracle.empty_certificate()
    key = ground.key
    accepted: list[int] = []
    uniform_fast = oracle.mode == "uniform"
    seen_keys: list[tuple[float, int]] = []
    arrived: list[int] = []
    for t, arrival in enumerate(order):
        i = int(arrival)
        if t >= window:
            if uniform_fast:
                heavier = len(seen_keys) - bisect.bisect_right(seen_keys, key(i))
                ok = heavier < oracle.total_cap
            else:
                heavier_elems = [j for j in arrived if key(j) > key(i)]
                prefix_cert, _ = oracle.certificate_for(heavier_elems)
                ok = prefix_cert.can_insert(i)
            if ok and accept_cert.can_insert(i):
                accept_cert.insert(i)
                accepted.append(i)
        if uniform_fast:
            bisect.insort(seen_keys, key(i))
        else:
            arrived.append(i)
    return _finish_record(
        ground, matroid, k, "greedy_improving", order, accepted, [accepted],
        opt_weight=opt_weight, mode="fallback_greedy",
    )


def run_phased(ground: GroundSet, matroid: Matroid, k: int, order, rng: np.random.Generator, *,
               c_override: float | None = None, nsim_mode: bool = False,
               opt_weight: float | None = None, trace: bool = False) -> TrialRecord:
    """Dispatch for the phased algorithm: accept-all when k >= n, fallback
    baseline when no valid schedule exists, the phased run otherwise."""
    if k >= ground.n:
        return run_accept_all(ground, matroid, k, order, opt_weight=opt_weight)
    n_eff = parallel_class_count(matroid) if nsim_mode else None
    if n_eff is not None and n_eff < 2:
        raise PlanError("parallel-class count < 2 degenerates the schedule; disable nsim mode")
    plan = plan_phases(ground.n, k, c_override, n_eff=n_eff)
    if isinstance(plan, PlanFallback):
        return run_greedy_improving(ground, matroid, k, order, opt_weight=opt_weight)
    return run_algorithm1(ground, matroid, k, order, rng, plan, opt_weight=opt_weight, trace=trace)
