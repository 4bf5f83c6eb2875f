"""YAML run configuration, validated with pydantic (unknown keys are rejected)."""

from __future__ import annotations

from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .distributions import F_FAMILIES, FDist
from .errors import ConfigError
from .geometry import Domain
from .kernels import FAMILIES, CovKernel
from .mcmc import SamplerConfig
from .pointprocess import FORMS, Intensity
from .priors import PRIOR_KINDS, Prior, PriorSpec, default_theta_f_priors, default_theta_g_priors


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainCfg(_Strict):
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def build(self):
        return Domain(self.x_min, self.x_max, self.y_min, self.y_max)


class KernelCfg(_Strict):
    """Kernel values; in ``fit`` any left unset start from method-of-moments estimates."""

    family: Literal[FAMILIES] = "exponential"
    mean: Optional[float] = None
    sigma2: Optional[float] = Field(None, gt=0)
    phi: Optional[float] = Field(None, gt=0)
    tau2: Optional[float] = Field(None, ge=0)

    def values(self):
        return {k: v for k, v in self.model_dump().items() if k != "family" and v is not None}

    def build(self):
        missing = [k for k in ("mean", "sigma2", "phi", "tau2") if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"kernel parameters {missing} are required here")
        return CovKernel(self.family, self.sigma2, self.phi, self.tau2, self.mean)


class FCfg(_Strict):
    family: Literal[F_FAMILIES] = "skew_normal"
    alpha: float = 0.0
    nu: Optional[float] = Field(None, gt=2)
    kernel: Optional[KernelCfg] = None  # None: share the base kernel

    @model_validator(mode="after")
    def _check(self):
        if self.family in ("student_t", "skew_t") and self.nu is None:
            raise ValueError(f"{self.family} needs nu")
        if self.family == "student_t" and self.alpha != 0:
            raise ValueError("student_t has no skewness; alpha must be 0")
        return self


class IntensityCfg(_Strict):
    kind: Literal["homogeneous", "parametric"] = "homogeneous"
    rate: Optional[float] = Field(None, ge=0)
    form: Optional[str] = None
    params: dict[str, float] = Field(default_factory=dict)
    lambda_bar: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "parametric" and self.form not in FORMS:
            raise ValueError(f"parametric intensity needs form in {sorted(FORMS)}")
        return self

    def build(self, default_rate=1.0):
        if self.kind == "homogeneous":
            return Intensity.homogeneous(default_rate if self.rate is None else self.rate)
        return Intensity.parametric(self.form, lambda_bar=self.lambda_bar, **self.params)


class PriorCfg(_Strict):
    kind: str
    params: dict[str, float] = Field(default_factory=dict)

    @field_validator("kind")
    @classmethod
    def _kind(cls, v):
        if v not in PRIOR_KINDS:
            raise ValueError(f"prior kind must be one of {sorted(PRIOR_KINDS)}")
        return v

    def build(self):
        return Prior(self.kind, dict(self.params))


class LambdaPriorCfg(_Strict):
    shape: float = Field(2.0, gt=0)
    rate: float = Field(1.0, gt=0)


class PriorsCfg(_Strict):
    lambda_: LambdaPriorCfg = Field(default_factory=LambdaPriorCfg, alias="lambda")
    theta_g: dict[str, PriorCfg] = Field(default_factory=dict)
    theta_f: dict[str, PriorCfg] = Field(default_factory=dict)
    theta_lambda: dict[str, PriorCfg] = Field(default_factory=dict)

    def build(self):
        g = default_theta_g_priors()
        g.update({k: v.build() for k, v in self.theta_g.items()})
        f = default_theta_f_priors()
        f.update({k: v.build() for k, v in self.theta_f.items()})
        return PriorSpec(
            self.lambda_.shape, self.lambda_.rate, g, f, {k: v.build() for k, v in self.theta_lambda.items()}
        )


class ModelCfg(_Strict):
    domain: DomainCfg = Field(default_factory=DomainCfg)
    kernel: KernelCfg = Field(default_factory=KernelCfg)
    f: FCfg = Field(default_factory=FCfg)
    intensity: IntensityCfg = Field(default_factory=IntensityCfg)
    priors: PriorsCfg = Field(default_factory=PriorsCfg)

    def build_f(self, kernel):
        fk = kernel if self.f.kernel is None else self.f.kernel.build()
        return FDist(self.f.family, fk, alpha=self.f.alpha, nu=self.f.nu)


class McmcCfg(_Strict):
    iterations: int = Field(2000, ge=0)
    burn_in: int = Field(1000, ge=0)
    thin: int = Field(1, ge=1)
    chains: int = Field(2, ge=1)
    seed: int = 0
    K: Optional[int] = Field(None, ge=1)
    M: int = Field(100, ge=1)
    theta_mode: Literal["shared", "separate"] = "shared"
    update_theta_g: list[str] = Field(default_factory=lambda: ["mean", "sigma2", "phi"])
    update_theta_f: list[str] = Field(default_factory=lambda: ["alpha"])
    update_lambda: bool = True
    update_n: bool = True
    reuse_inverses: bool = True
    nngp: bool = False
    mesh_resolution: int = Field(20, ge=2)
    m: int = Field(15, ge=1)
    debug: bool = False
    proposal_reference: Literal["current", "window_average"] = "current"

    def build(self):
        try:
            return SamplerConfig(
                iterations=self.iterations, burn_in=self.burn_in, thin=self.thin, K=self.K, M=self.M,
                theta_mode=self.theta_mode, update_theta_g=tuple(self.update_theta_g),
                update_theta_f=tuple(self.update_theta_f), update_lambda=self.update_lambda,
                update_n=self.update_n, reuse_inverses=self.reuse_inverses, nngp=self.nngp,
                mesh_resolution=self.mesh_resolution, m=self.m, debug=self.debug,
                proposal_reference=self.proposal_reference,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


class FunctionalCfg(_Strict):
    integrand: Literal["identity", "square", "indicator_above", "constant"] = "identity"
    threshold: Optional[float] = None
    c: Optional[float] = None
    strata: int = Field(1, ge=1)
    points: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.integrand == "indicator_above" and self.threshold is None:
            raise ValueError("indicator_above needs threshold")
        if self.integrand == "constant" and self.c is None:
            raise ValueError("constant needs c")
        return self

    def params(self):
        if self.integrand == "indicator_above":
            return {"threshold": self.threshold}
        if self.integrand == "constant":
            return {"c": self.c}
        return {}


class PredictCfg(_Strict):
    sites: list[tuple[float, float]] = Field(default_factory=list)
    functionals: list[FunctionalCfg] = Field(default_factory=list)
    quantiles: list[float] = Field(default_factory=lambda: [0.025, 0.5, 0.975])


class GridCfg(_Strict):
    low: float = -4.0
    high: float = 4.0
    points: int = Field(201, ge=2)


class SimulateCfg(_Strict):
    replicates: int = Field(1000, ge=1)
    sites: list[tuple[float, float]] = Field(default_factory=list)
    lambdas: list[float] = Field(default_factory=list)
    density_replicates: int = Field(2000, ge=10)
    grid: GridCfg = Field(default_factory=GridCfg)


class IoCfg(_Strict):
    data: Optional[str] = None
    output_dir: str = "pogamp_out"


class RunConfig(_Strict):
    model: ModelCfg = Field(default_factory=ModelCfg)
    mcmc: McmcCfg = Field(default_factory=McmcCfg)
    predict: PredictCfg = Field(default_factory=PredictCfg)
    simulate: SimulateCfg = Field(default_factory=SimulateCfg)
    io: IoCfg = Field(default_factory=IoCfg)


def parse_config(text):
    """Validate YAML text into a :class:`RunConfig`; raises :class:`ConfigError`."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("the configuration must be a mapping")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
