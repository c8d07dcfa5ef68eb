"""Pydantic request/response models for the simulation service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field, model_validator

from ..harness import InstanceSpec


class InstanceModel(BaseModel):
    """Wire form of an instance spec; see README for the matroid/weights schema."""

    matroid: dict[str, Any]
    weights: list[float] | dict[str, Any] = Field(default_factory=lambda: {"generator": "uniform"})
    k: int
    seed: int = 0

    def to_spec(self) -> InstanceSpec:
        return InstanceSpec.from_dict(self.model_dump())


class ConstantsModel(BaseModel):
    """Schedule constants: proof mode searches C in [10, 20]; experimental mode
    accepts any positive C and is flagged in the output config."""

    mode: Literal["proof", "experimental"] = "proof"
    C: float | None = None

    @model_validator(mode="after")
    def _require_c_for_experimental(self) -> "ConstantsModel":
        if self.mode == "experimental":
            if self.C is None or self.C <= 0:
                raise ValueError("experimental mode needs a positive C")
        return self

    @property
    def c_override(self) -> float | None:
        return self.C if self.mode == "experimental" else None

    def as_config(self) -> dict:
        return {"mode": self.mode, "C": self.C}


class SimulateRequest(BaseModel):
    instance: InstanceModel
    algorithms: list[str] = Field(default_factory=lambda: ["alg1"])
    trials: int = 100
    seed: int = 0
    k_grid: list[int] | None = None
    constants: ConstantsModel = Field(default_factory=ConstantsModel)
    naive_eps: float = 0.1
    jobs: int = 1
    trace: bool = False
    nsim_mode: bool = False


class AggregateRowModel(BaseModel):
    algorithm: str
    n: int
    k: int
    matroid_kind: str
    trials: int
    mean_ratio: float
    se: float
    min: float
    max: float
    phi_max: int
    seed: int
    mode: str


class SimulateResponse(BaseModel):
    rows: list[AggregateRowModel]
    fallbacks: list[str]
    csv: str
    json_mirror: str
    config: dict[str, Any]
    traces: list[dict] | None = None


class VerifyRequest(BaseModel):
    seed: int = 0
    sampled_pairs: int = 100


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str
    counterexample: dict | None = None


class VerifyResponse(BaseModel):
    ok: bool
    checks: list[CheckModel]
    config: dict[str, Any]


class LemmasRequest(BaseModel):
    instance: InstanceModel
    C: float
    p: list[float]
    r: list[int]
    trials: int = 10000
    seed: int = 0
    exact: bool = False


class LemmaRowModel(BaseModel):
    p: float
    r: int
    k: int
    C: float
    trials: int
    mode: str
    tail_T_freq: float | None = None
    tail_T_lo: float | None = None
    tail_T_hi: float | None = None
    tail_S_freq: float | None = None
    tail_S_lo: float | None = None
    tail_S_hi: float | None = None
    mean_wT: float
    se_wT: float | None = None
    mean_wS: float
    se_wS: float | None = None
    mean_wSplus: float
    se_wSplus: float | None = None
    exact_equal: bool | None = None


class LemmasResponse(BaseModel):
    rows: list[LemmaRowModel]
    cell_errors: list[str]
    csv: str
    json_mirror: str
    config: dict[str, Any]


class CoverRequest(BaseModel):
    instance: InstanceModel
    subset: list[int] | None = None


class CoverResponse(BaseModel):
    phi: int
    parts: list[list[int]]
    nash_value: int | None = None
    nash_witness: list[int] | None = None
    flat_value: int | None = None
    flat_witness: list[int] | None = None
    config: dict[str, Any]


class BenchRequest(BaseModel):
    instance: InstanceModel


class BenchResponse(BaseModel):
    n: int
    k: int
    matroid_kind: str
    opt_size: int
    opt_weight: float
    union_rank_full: int
    phi_opt: int
    parallel_classes: int
    config: dict[str, Any]
