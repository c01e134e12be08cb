import hashlib
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from models.errors import ScenarioError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# Scenario sections
class KernelSpec(_Strict):
    family: Literal["constant", "cosine", "skew"] = Field("constant", description="Parametric family of beta(x, theta)")
    params: Dict[str, float] = Field(default_factory=dict, description="Family parameters (value | mean, amplitude)")
    b: float = Field(1.0, gt=0, description="Declared lower bound of beta")
    B: float = Field(1.0, gt=0, description="Declared upper bound of beta")


class ProfileSpec(_Strict):
    family: Literal["constant", "trig"] = Field("constant", description="Periodic profile family")
    params: Dict[str, object] = Field(
        default_factory=lambda: {"value": 1.0}, description="value | mean, sin: [...], cos: [...]"
    )


class ReactionSpec(_Strict):
    family: Literal["logistic", "weighted_logistic", "linear", "quadratic"] = Field(
        "logistic", description="Reaction family F(x, s)"
    )
    params: Dict[str, object] = Field(default_factory=dict, description="omega profile or linear rate")


class GridSpec(_Strict):
    L: Optional[float] = Field(None, description="Truncation radius of the box [-L, L]^d; planned from the run when omitted")
    n_box: Optional[int] = Field(None, description="Points per axis on the box; planned with L")
    n_cell: int = Field(16, description="Points per axis on the periodic cell")
    h_target: float = Field(0.1, gt=0, description="Largest box spacing accepted by the grid plan")

    @model_validator(mode="after")
    def _planned_together(self) -> "GridSpec":
        if (self.L is None) != (self.n_box is None):
            raise ValueError("grid.L and grid.n_box are given together or both planned")
        return self


class InitialSpec(_Strict):
    center: float = Field(0.0, description="Raised-cosine bump center")
    width: float = Field(1.0, gt=0, description="Raised-cosine half width")
    height: float = Field(0.5, gt=0, description="Raised-cosine peak value")


class RunSpec(_Strict):
    T: float = Field(14.0, gt=0, description="Final time")
    dt: float = Field(0.01, gt=0, description="Time step")
    snap_every: float = Field(0.25, gt=0, description="Snapshot cadence")
    backend: Literal["quadrature", "spectral"] = Field("spectral", description="Operator backend")
    pad_factor: int = Field(2, ge=1, description="Zero-padding factor of the spectral backend")
    initial: InitialSpec = Field(default_factory=InitialSpec)


class EigenSpec(_Strict):
    cell_n: int = Field(128, ge=32, description="Cell resolution")
    tol: float = Field(1e-10, ge=1e-12, description="Residual tolerance")
    method: Literal["inverse", "dense"] = Field("inverse", description="Solver")


class FrontSpec(_Strict):
    levels: Tuple[float, ...] = Field((0.25, 0.5, 0.75), description="Front levels c")
    fit_window: Optional[Tuple[float, float]] = Field(None, description="[t_a, t_b]; default [3/|lambda1|, T]")


class VerifySpec(_Strict):
    a_list: Tuple[float, ...] = Field((1.0, 0.5, 0.25, 0.1), description="dilations a for the scaling checks")
    gamma: Optional[float] = Field(None, description="weight exponent of the bilinear check; default mid-window")
    chi: ProfileSpec = Field(
        default_factory=lambda: ProfileSpec(family="trig", params={"mean": 2.0, "cos": [1.0]})
    )
    epsilon: float = Field(0.25, gt=0, le=1, description="Sandwich scale")
    eps_list: Tuple[float, ...] = Field((0.5, 0.25, 0.125), description="Convergence report scales")
    heat_T_list: Tuple[float, ...] = Field((0.5, 1.0, 2.0), description="Heat-kernel times")
    probe_radii: Tuple[float, ...] = Field((0.0, 1.0, 5.0, 20.0, 50.0), description="Heat-kernel probes")
    probes: int = Field(10000, ge=1, description="Sandwich probe count")


class ScenarioConfig(_Strict):
    dimension: Literal[1, 2] = Field(1, description="Spatial dimension")
    alpha: float = Field(..., description="Stable exponent")
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    media: ProfileSpec = Field(default_factory=ProfileSpec)
    reaction: ReactionSpec = Field(default_factory=ReactionSpec)
    grid: GridSpec
    run: RunSpec = Field(default_factory=RunSpec)
    eigen: EigenSpec = Field(default_factory=EigenSpec)
    front: FrontSpec = Field(default_factory=FrontSpec)
    verify: VerifySpec = Field(default_factory=VerifySpec)

    @field_validator("alpha")
    @classmethod
    def _alpha_window(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"alpha={value} violates α ∈ (0,1)")
        return value

    @model_validator(mode="after")
    def _bounds_ordered(self) -> "ScenarioConfig":
        if self.kernel.b > self.kernel.B:
            raise ValueError("kernel bounds require b ≤ B")
        return self


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def parse_scenario(document: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(document)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ScenarioError(first.get("msg", "invalid value"), field_path=_field_path(first)) from exc


def load_scenario(path: Path) -> ScenarioConfig:
    try:
        document = orjson.loads(Path(path).read_bytes())
    except (OSError, orjson.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", field_path=str(path)) from exc
    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a JSON object", field_path=str(path))
    return parse_scenario(document)


def config_hash(config: ScenarioConfig) -> str:
    canonical = orjson.dumps(config.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(canonical).hexdigest()


def mid_window_gamma(alpha: float) -> float:
    lo, hi = gamma_window(alpha)
    return 0.5 * (lo + hi)


def gamma_window(alpha: float) -> Tuple[float, float]:
    """Admissible gamma interval of the K-tilde estimate: [0, 2a) or (2a-1, 1)."""
    if alpha < 0.5:
        return 0.0, 2.0 * alpha
    return 2.0 * alpha - 1.0, 1.0


def levels_list(spec: FrontSpec) -> List[float]:
    return sorted(float(c) for c in spec.levels)
