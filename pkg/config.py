"""
Central configuration for the Lagrangian stress lab.
Numerical defaults are read from environment variables with fallbacks;
per-run settings come from a JSON run file parsed by load_run_config().
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from errors import ConfigError

logger = logging.getLogger(__name__)

# ── Grid ───────────────────────────────────────────────────────────
DEFAULT_DIMENSION = int(os.getenv("LAB_DIMENSION", "2"))
DEFAULT_POINTS = int(os.getenv("LAB_POINTS", "32"))

# "spline" (cubic periodic) or "trig" (trigonometric, spectrally exact)
INTERPOLATION_METHOD = os.getenv("LAB_INTERPOLATION", "spline")
TRIG_INTERPOLATION_CHUNK = 512

# ── Physics ────────────────────────────────────────────────────────
VISCOSITY = float(os.getenv("LAB_VISCOSITY", "1.0"))

# ── Lagrangian maps ────────────────────────────────────────────────
INVERSION_TOL = 1e-10
INVERSION_MAX_ITER = 50
# surrogate for 1/2 <= |grad_a X| <= 3/2
MAX_DISPLACEMENT_GRADIENT = 0.5
CHORD_ARC_SLACK = 0.02

# ── Fixed point ────────────────────────────────────────────────────
FIXED_POINT_TOL = 1e-8
FIXED_POINT_MAX_ITER = 50

# ── Verification ───────────────────────────────────────────────────
BOUND_SLACK = 0.10
DEFAULT_T_SWEEP = [0.2, 0.1, 0.05, 0.025]
DEFAULT_EPSILONS = [1e-2, 5e-3, 2.5e-3]
# checks run side by side in a thread pool
VERIFY_WORKERS = int(os.getenv("LAB_VERIFY_WORKERS", "4"))

# ── Output ─────────────────────────────────────────────────────────
OUTPUT_DIR = os.getenv("LAB_OUTPUT_DIR", "runs")
CONFIG_VERSION = 1
RESOLVED_CONFIG_NAME = "config.resolved.json"

MODELS = ("oldroyd-b", "mhd")
BRANCHES = ("stokes", "navier-stokes")
PRESETS = ("zero", "single-mode", "taylor-green", "rough-envelope")
STENCILS = ("dyadic", "all")


@dataclass
class RunConfig:
    """Everything one solve / verify / compare invocation needs."""

    version: int = CONFIG_VERSION
    # grid
    d: int = DEFAULT_DIMENSION
    n: int = DEFAULT_POINTS
    L: float = 6.283185307179586
    interpolation: str = INTERPOLATION_METHOD
    # time
    T: float = 0.1
    M: int = 16
    # norms
    alpha: float = 0.5
    beta: float = 0.75
    p: float = 2.0
    stencil: str = "dyadic"
    # solver
    branch: str = "stokes"
    model: str = "oldroyd-b"
    relaxation_rate: float = 1.0
    coupling: float = 1.0
    nu: float = VISCOSITY
    gamma: float | None = None
    tol_fp: float = FIXED_POINT_TOL
    max_iter: int = FIXED_POINT_MAX_ITER
    delta: float | None = None
    # initial data
    u0_preset: str = "taylor-green"
    sigma0_preset: str = "single-mode"
    u0_amplitude: float = 0.1
    sigma0_amplitude: float = 0.1
    seed: int = 0
    # sweeps
    T_sweep: list = field(default_factory=lambda: list(DEFAULT_T_SWEEP))
    epsilons: list = field(default_factory=lambda: list(DEFAULT_EPSILONS))
    refinements: list = field(default_factory=list)
    substeps: int = 1
    # bookkeeping
    output_dir: str = OUTPUT_DIR
    allow_out_of_range: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def out_of_range(self) -> list[str]:
        """Names of parameters outside 0<alpha<1, 1/2<beta<1, 1<p<inf."""
        flagged = []
        if not 0 < self.alpha < 1:
            flagged.append("alpha")
        if not 0.5 < self.beta < 1:
            flagged.append("beta")
        if not self.p > 1:
            flagged.append("p")
        return flagged


def _validate(cfg: RunConfig) -> None:
    if cfg.version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {cfg.version!r}")
    if cfg.d not in (2, 3):
        raise ConfigError("d must be 2 or 3")
    if cfg.n < 8 or cfg.n % 2:
        raise ConfigError("n must be even and >= 8")
    if cfg.L <= 0 or cfg.T <= 0 or cfg.M < 1 or cfg.nu <= 0:
        raise ConfigError("L, T, nu must be positive and M >= 1")
    if cfg.tol_fp <= 0 or cfg.max_iter < 1:
        raise ConfigError("tol_fp must be positive and max_iter >= 1")
    if cfg.gamma is not None and cfg.gamma <= 0:
        raise ConfigError("gamma must be positive")
    if cfg.model not in MODELS:
        raise ConfigError(f"unknown model {cfg.model!r}; expected one of {MODELS}")
    if cfg.branch not in BRANCHES:
        raise ConfigError(f"unknown branch {cfg.branch!r}; expected one of {BRANCHES}")
    if cfg.interpolation not in ("spline", "trig"):
        raise ConfigError("interpolation must be 'spline' or 'trig'")
    if cfg.stencil not in STENCILS:
        raise ConfigError(f"stencil must be one of {STENCILS}")
    for key in ("u0_preset", "sigma0_preset"):
        if getattr(cfg, key) not in PRESETS:
            raise ConfigError(f"{key} must be one of {PRESETS}")
    if not 0 < cfg.alpha <= 1 or not 0 < cfg.beta <= 1 or cfg.p < 1:
        raise ConfigError("alpha, beta must lie in (0,1] and p >= 1")

    flagged = cfg.out_of_range()
    if flagged and not cfg.allow_out_of_range:
        raise ConfigError(
            f"parameters outside the admissible ranges: {', '.join(flagged)} "
            "(set allow_out_of_range to run anyway)"
        )
    if flagged:
        logger.warning("running with out-of-range parameters: %s", ", ".join(flagged))


def load_run_config(path: str | os.PathLike | None = None,
                    out_dir: str | None = None,
                    seed: int | None = None) -> RunConfig:
    """
    Parse a JSON run file. Unknown keys are rejected.
    *out_dir* and *seed* override the file (CLI flags).
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")

    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "version" not in raw and path is not None:
        raise ConfigError("config is missing the 'version' field")

    try:
        cfg = RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if out_dir is not None:
        cfg.output_dir = out_dir
    if seed is not None:
        cfg.seed = seed
    _validate(cfg)
    return cfg
