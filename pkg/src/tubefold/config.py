"""YAML experiment configurations with line-numbered diagnostics.

A config has a required ``module`` section and optional per-command
sections. Unknown keys are rejected at every level. Lengths may be written
as numbers or as ``sqrt(<number>)``.
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
import yaml

from .errors import ConfigError, DomainError
from .geometry import INFINITE
from .maps import ModuleSpec, StepSpec

_SCALARS = yaml.constructor.SafeConstructor()
_SQRT = re.compile(r"^\s*sqrt\(\s*([0-9.eE+-]+)\s*\)\s*$")


class _Node:
    """Plain value plus the 1-based line it came from."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _convert(node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", k.start_mark.line + 1)
            out[key] = _convert(v)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert(v) for v in node.value], line)
    return _Node(_SCALARS.construct_object(node), line)


def _section(node: _Node, allowed: dict, where: str) -> dict:
    """Validate keys of a mapping node; ``allowed`` maps key -> required."""
    if not isinstance(node.value, dict):
        raise ConfigError(f"{where} must be a mapping", node.line)
    for key, sub in node.value.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}", sub.line)
    for key, required in allowed.items():
        if required and key not in node.value:
            raise ConfigError(f"missing required key {key!r} in {where}", node.line)
    return node.value


def _number(node: _Node, what: str, positive=False, allow_inf=False) -> float:
    v = node.value
    if isinstance(v, str):
        m = _SQRT.match(v)
        if m:
            v = math.sqrt(float(m.group(1)))
        elif allow_inf and v.strip().lower() in ("inf", "infinite", "infinity"):
            v = math.inf
        else:
            raise ConfigError(f"{what}: expected a number, got {v!r}", node.line)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{what}: expected a number, got {v!r}", node.line)
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ConfigError(f"{what}: must be finite", node.line)
    if positive and not v > 0:
        raise ConfigError(f"{what}: must be positive, got {v!r}", node.line)
    return v


def _integer(node: _Node, what: str, minimum: int | None = None) -> int:
    v = node.value
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{what}: expected an integer, got {v!r}", node.line)
    if minimum is not None and v < minimum:
        raise ConfigError(f"{what}: must be >= {minimum}, got {v}", node.line)
    return v


def _pair(node: _Node, what: str) -> tuple[float, float]:
    if not isinstance(node.value, list) or len(node.value) != 2:
        raise ConfigError(f"{what}: expected a two-element list", node.line)
    a, b = (_number(x, what) for x in node.value)
    return a, b


def _range(node: _Node, what: str) -> tuple[float, float]:
    a, b = _pair(node, what)
    if not a < b:
        raise ConfigError(f"{what}: lower bound must be below upper bound", node.line)
    return a, b


# -- command sections ------------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    n_theta: int = 50
    n_action: int = 20
    theta_range: tuple[float, float] = (-math.pi, math.pi)
    action_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class FreqProfileConfig:
    samples: int = 400
    n_seed: int = 400
    I_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class PortraitConfig:
    grid: GridConfig = GridConfig()
    steps: int = 1000


@dataclass(frozen=True)
class OrbitConfig:
    initial: tuple[float, float] = (0.0, 0.3)
    steps: int = 1000


@dataclass(frozen=True)
class GenfunConfig:
    step: int = 0
    samples: int = 20
    I_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class AttractorConfig:
    grid: GridConfig = GridConfig(6, 5)
    steps: int = 10_000
    burn_in: int = 1000


@dataclass(frozen=True)
class ReconstructConfig:
    initial: tuple[float, float] = (0.0, 0.3)
    rings: int = 10
    N: int | None = None


@dataclass(frozen=True)
class ValidateConfig:
    samples: int = 1000
    point: tuple[float, float] = (0.3, 0.35)
    convergence_N: tuple[int, ...] = tuple(1000 * 2 ** k for k in range(11))


@dataclass
class ExperimentConfig:
    module: ModuleSpec
    name: str = "experiment"
    seed: int = 0
    freq_profile: FreqProfileConfig = field(default_factory=FreqProfileConfig)
    portrait: PortraitConfig = field(default_factory=PortraitConfig)
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    genfun: GenfunConfig = field(default_factory=GenfunConfig)
    attractor: AttractorConfig = field(default_factory=AttractorConfig)
    reconstruct: ReconstructConfig = field(default_factory=ReconstructConfig)
    validate: ValidateConfig = field(default_factory=ValidateConfig)
    sha256: str = ""
    source: str | None = None


def _grid(node, where, default: GridConfig) -> GridConfig:
    d = _section(node, {"n_theta": False, "n_action": False, "theta_range": False,
                        "action_range": False}, where)
    return GridConfig(
        _integer(d["n_theta"], f"{where}.n_theta", 1) if "n_theta" in d else default.n_theta,
        _integer(d["n_action"], f"{where}.n_action", 1) if "n_action" in d else default.n_action,
        _range(d["theta_range"], f"{where}.theta_range") if "theta_range" in d else default.theta_range,
        _range(d["action_range"], f"{where}.action_range") if "action_range" in d else default.action_range,
    )


def _module(node: _Node) -> ModuleSpec:
    d = _section(node, {"N": True, "steps": True, "s": True, "mu": True}, "module")
    N = _number(d["N"], "module.N", positive=True, allow_inf=True)
    if not math.isinf(N) and (N != int(N) or N <= 2):
        raise ConfigError("module.N must be an integer > 2 or 'inf'", d["N"].line)
    N = INFINITE if math.isinf(N) else int(N)
    if not isinstance(d["steps"].value, list) or not d["steps"].value:
        raise ConfigError("module.steps must be a nonempty list", d["steps"].line)
    raw = []
    for i, st in enumerate(d["steps"].value):
        where = f"module.steps[{i}]"
        sd = _section(st, {"lengths": True, "sigma": True, "k": False, "swap_lr": False}, where)
        ln = sd["lengths"]
        if not isinstance(ln.value, list) or len(ln.value) != 3:
            raise ConfigError(f"{where}.lengths: expected [l_L, l_M, l_R]", ln.line)
        lengths = tuple(_number(x, f"{where}.lengths", positive=True) for x in ln.value)
        sig = sd["sigma"].value
        if sig not in ("M", "V"):
            raise ConfigError(f"{where}.sigma must be 'M' or 'V', got {sig!r}", sd["sigma"].line)
        k = _integer(sd["k"], f"{where}.k", 0) if "k" in sd else 0
        if k > 1:
            raise ConfigError(f"{where}.k must be 0 or 1", sd["k"].line)
        swap = None
        if "swap_lr" in sd:
            swap = sd["swap_lr"].value
            if not isinstance(swap, bool):
                raise ConfigError(f"{where}.swap_lr must be true or false", sd["swap_lr"].line)
        raw.append((lengths, sig, k, swap, st.line))
    m = len(raw)
    steps = []
    for i, (lengths, sig, k, swap, line) in enumerate(raw):
        expected = bool(raw[(i - 1) % m][2])
        if swap is None:
            swap = expected
        elif swap != expected:
            raise ConfigError(f"module.steps[{i}].swap_lr must be {str(expected).lower()} "
                              f"since the previous step has k={int(expected)}", line)
        steps.append(StepSpec(*lengths, sigma=sig, k=k, swap_lr=swap))
    s = _number(d["s"], "module.s", positive=True)
    mu = _number(d["mu"], "module.mu")
    try:
        return ModuleSpec(N, tuple(steps), s, mu)
    except DomainError as exc:
        raise ConfigError(str(exc), node.line) from None


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    """Parse and validate config text."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if root is None:
        raise ConfigError("empty config", 1)
    top = _convert(root)
    d = _section(top, {"name": False, "seed": False, "module": True, "freq_profile": False,
                       "portrait": False, "orbit": False, "genfun": False,
                       "attractor": False, "reconstruct": False, "validate": False}, "config")
    cfg = ExperimentConfig(module=_module(d["module"]))
    cfg.sha256 = hashlib.sha256(text.encode()).hexdigest()
    cfg.source = source
    if "name" in d:
        cfg.name = str(d["name"].value)
    if "seed" in d:
        cfg.seed = _integer(d["seed"], "seed", 0)

    if "freq_profile" in d:
        f = _section(d["freq_profile"], {"samples": False, "n_seed": False, "I_range": False},
                     "freq_profile")
        cfg.freq_profile = FreqProfileConfig(
            _integer(f["samples"], "freq_profile.samples", 2) if "samples" in f else 400,
            _integer(f["n_seed"], "freq_profile.n_seed", 2) if "n_seed" in f else 400,
            _range(f["I_range"], "freq_profile.I_range") if "I_range" in f else None)
    if "portrait" in d:
        p = _section(d["portrait"], {"grid": False, "steps": False}, "portrait")
        cfg.portrait = PortraitConfig(
            _grid(p["grid"], "portrait.grid", GridConfig()) if "grid" in p else GridConfig(),
            _integer(p["steps"], "portrait.steps", 1) if "steps" in p else 1000)
    if "orbit" in d:
        o = _section(d["orbit"], {"initial": True, "steps": False}, "orbit")
        cfg.orbit = OrbitConfig(_pair(o["initial"], "orbit.initial"),
                                _integer(o["steps"], "orbit.steps", 1) if "steps" in o else 1000)
    if "genfun" in d:
        g = _section(d["genfun"], {"step": False, "samples": False, "I_range": False}, "genfun")
        step = _integer(g["step"], "genfun.step", 0) if "step" in g else 0
        if step >= cfg.module.m:
            raise ConfigError(f"genfun.step must be < {cfg.module.m}", g["step"].line)
        cfg.genfun = GenfunConfig(step,
                                  _integer(g["samples"], "genfun.samples", 2) if "samples" in g else 20,
                                  _range(g["I_range"], "genfun.I_range") if "I_range" in g else None)
    if "attractor" in d:
        a = _section(d["attractor"], {"grid": False, "steps": False, "burn_in": False}, "attractor")
        default = AttractorConfig()
        cfg.attractor = AttractorConfig(
            _grid(a["grid"], "attractor.grid", default.grid) if "grid" in a else default.grid,
            _integer(a["steps"], "attractor.steps", 1) if "steps" in a else default.steps,
            _integer(a["burn_in"], "attractor.burn_in", 0) if "burn_in" in a else default.burn_in)
    if "reconstruct" in d:
        r = _section(d["reconstruct"], {"initial": True, "rings": False, "N": False}, "reconstruct")
        cfg.reconstruct = ReconstructConfig(
            _pair(r["initial"], "reconstruct.initial"),
            _integer(r["rings"], "reconstruct.rings", 0) if "rings" in r else 10,
            _integer(r["N"], "reconstruct.N", 3) if "N" in r else None)
    if "validate" in d:
        v = _section(d["validate"], {"samples": False, "point": False, "convergence_N": False},
                     "validate")
        default = ValidateConfig()
        conv = default.convergence_N
        if "convergence_N" in v:
            node = v["convergence_N"]
            if not isinstance(node.value, list) or len(node.value) < 2:
                raise ConfigError("validate.convergence_N: need at least two values", node.line)
            conv = tuple(_integer(x, "validate.convergence_N", 3) for x in node.value)
        cfg.validate = ValidateConfig(
            _integer(v["samples"], "validate.samples", 1) if "samples" in v else default.samples,
            _pair(v["point"], "validate.point") if "point" in v else default.point,
            conv)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read a config file; all diagnostics carry line numbers."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


CONFIG_DIR = Path(__file__).parent / "configs"


def shipped_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``'experiment1'``."""
    p = CONFIG_DIR / f"{name}.yaml"
    if not p.exists():
        raise FileNotFoundError(p)
    return p
