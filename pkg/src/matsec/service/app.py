"""FastAPI service wrapping the simulator.

The CLI talks to these endpoints (in-process by default), so every workflow
— verification, simulation, lemma estimation, covering-number reports — has a
single implementation here. Embedded configs carry only replay-relevant
fields (never job counts or output paths), so rendered CSV bytes are
identical for any execution parallelism.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..harness import (
    LemmaParamError,
    SpecError,
    estimate_lemmas,
    offline_opt,
    render_json_mirror,
    render_lemmas_csv,
    render_results_csv,
    resolve_instance,
    run_trials,
)
from ..matroids import MatroidError, parallel_class_count
from ..secretary import FeasibilityError, PlanError
from ..union import (
    NASH_WILLIAMS_LIMIT,
    covering_number,
    flats_cover_bound,
    k_fold,
    nash_williams_value,
)
from ..matroids import FLAT_ENUMERATION_LIMIT
from .schemas import (
    AggregateRowModel,
    BenchRequest,
    BenchResponse,
    CheckModel,
    CoverRequest,
    CoverResponse,
    LemmaRowModel,
    LemmasRequest,
    LemmasResponse,
    SimulateRequest,
    SimulateResponse,
    VerifyRequest,
    VerifyResponse,
)
from ..verify import run_verification

_CONFIG_ERRORS = (SpecError, LemmaParamError, PlanError, MatroidError, ValueError)


def create_app() -> FastAPI:
    app = FastAPI(title="matsec", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/verify", response_model=VerifyResponse)
    def post_verify(req: VerifyRequest) -> VerifyResponse:
        report = run_verification(seed=req.seed, sampled_pairs=req.sampled_pairs)
        config = {"command": "verify", "seed": req.seed, "sampled_pairs": req.sampled_pairs}
        return VerifyResponse(
            ok=report.ok,
            checks=[CheckModel(**c.as_dict()) for c in report.checks],
            config=config,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def post_simulate(req: SimulateRequest) -> SimulateResponse:
        try:
            spec = req.instance.to_spec()
            inst = resolve_instance(spec)
            ks = list(req.k_grid) if req.k_grid else [inst.k]
            config = {
                "command": "simulate",
                "instance": {
                    "matroid": inst.resolved_matroid,
                    "weights": spec.weights,
                    "seed": spec.seed,
                },
                "k_grid": ks,
                "algorithms": list(req.algorithms),
                "trials": req.trials,
                "seed": req.seed,
                "constants": req.constants.as_config(),
                "naive_eps": req.naive_eps,
                "nsim_mode": req.nsim_mode,
            }
            aggregates = []
            fallbacks: list[str] = []
            traces: list[dict] | None = [] if req.trace else None
            for k in ks:
                result = run_trials(
                    inst.ground, inst.matroid, k, req.algorithms, req.trials,
                    req.seed, c_override=req.constants.c_override,
                    nsim_mode=req.nsim_mode, naive_eps=req.naive_eps,
                    jobs=req.jobs, trace=req.trace,
                )
                aggregates.extend(result.aggregates)
                fallbacks.extend(result.fallback_notes)
                if traces is not None and result.records is not None:
                    traces.extend(result.records)
        except FeasibilityError as exc:
            raise HTTPException(status_code=500, detail=f"feasibility-violation: {exc}")
        except _CONFIG_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        rows = [AggregateRowModel(**a.row_dict()) for a in aggregates]
        return SimulateResponse(
            rows=rows,
            fallbacks=fallbacks,
            csv=render_results_csv(aggregates, config),
            json_mirror=render_json_mirror([a.row_dict() for a in aggregates], config),
            config=config,
            traces=traces,
        )

    @app.post("/lemmas", response_model=LemmasResponse)
    def post_lemmas(req: LemmasRequest) -> LemmasResponse:
        try:
            spec = req.instance.to_spec()
            inst = resolve_instance(spec)
        except _CONFIG_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        config = {
            "command": "lemmas",
            "instance": {
                "matroid": inst.resolved_matroid,
                "weights": spec.weights,
                "seed": spec.seed,
            },
            "k": inst.k,
            "C": req.C,
            "p": list(req.p),
            "r": list(req.r),
            "trials": req.trials,
            "seed": req.seed,
            "exact": req.exact,
        }
        estimates = []
        cell_errors: list[str] = []
        for p in req.p:
            for r in req.r:
                try:
                    estimates.append(estimate_lemmas(
                        inst.ground, inst.matroid, inst.k, p, r,
                        req.trials, req.seed, C=req.C, exact=req.exact,
                    ))
                except (LemmaParamError, MatroidError) as exc:
                    cell_errors.append(f"p={p}, r={r}: {exc}")
        if not estimates and cell_errors:
            raise HTTPException(status_code=400, detail="; ".join(cell_errors))
        return LemmasResponse(
            rows=[LemmaRowModel(**e.row_dict()) for e in estimates],
            cell_errors=cell_errors,
            csv=render_lemmas_csv(estimates, config),
            json_mirror=render_json_mirror([e.row_dict() for e in estimates], config),
            config=config,
        )

    @app.post("/cover", response_model=CoverResponse)
    def post_cover(req: CoverRequest) -> CoverResponse:
        try:
            spec = req.instance.to_spec()
            inst = resolve_instance(spec)
            subset = (
                frozenset(req.subset)
                if req.subset is not None
                else frozenset(range(inst.ground.n))
            )
            phi, parts = covering_number(inst.matroid, subset, return_certificate=True)
            nash_value = nash_witness = None
            if 0 < len(subset) <= NASH_WILLIAMS_LIMIT:
                nash_value, witness = nash_williams_value(inst.matroid, subset, return_witness=True)
                nash_witness = sorted(witness)
            flat_value = flat_witness = None
            if subset and inst.ground.n <= FLAT_ENUMERATION_LIMIT:
                flat_value, fwitness = flats_cover_bound(inst.matroid, subset, return_witness=True)
                flat_witness = sorted(fwitness)
        except _CONFIG_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        config = {
            "command": "cover",
            "instance": {
                "matroid": inst.resolved_matroid,
                "weights": spec.weights,
                "seed": spec.seed,
            },
            "subset": sorted(subset),
        }
        return CoverResponse(
            phi=phi,
            parts=parts,
            nash_value=nash_value,
            nash_witness=nash_witness,
            flat_value=flat_value,
            flat_witness=flat_witness,
            config=config,
        )

    @app.post("/bench", response_model=BenchResponse)
    def post_bench(req: BenchRequest) -> BenchResponse:
        try:
            spec = req.instance.to_spec()
            inst = resolve_instance(spec)
            opt_set, opt_weight = offline_opt(inst.ground, inst.matroid, inst.k)
            full_rank = k_fold(inst.matroid, inst.k).rank(range(inst.ground.n))
            phi_opt = covering_number(inst.matroid, opt_set)
            classes = parallel_class_count(inst.matroid)
        except _CONFIG_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        config = {
            "command": "bench",
            "instance": {
                "matroid": inst.resolved_matroid,
                "weights": spec.weights,
                "seed": spec.seed,
            },
            "k": inst.k,
        }
        return BenchResponse(
            n=inst.ground.n,
            k=inst.k,
            matroid_kind=inst.matroid.kind,
            opt_size=len(opt_set),
            opt_weight=opt_weight,
            union_rank_full=full_rank,
            phi_opt=phi_opt,
            parallel_classes=classes,
            config=config,
        )

    return app


app = create_app()
