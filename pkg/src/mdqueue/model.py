"""Model parameters, validation, and the n-th system under MD scaling.

A model is a critically loaded multi-class G/G/1 queue (sum of rho_i equal 1)
together with second-order rate perturbations tilde_lambda, tilde_mu and a
scaling sequence b_n = n^a, 0 < a < 1/2.  The n-th system runs at rates

    lambda_n_i = n*lambda_i + b_n*sqrt(n)*tilde_lambda_i,
    mu_n_i     = n*mu_i     + b_n*sqrt(n)*tilde_mu_i,

queue lengths are viewed through X_i/(b_n*sqrt(n)), and buffers hold
b_n*sqrt(n)*D_i jobs.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

DIST_KINDS = ("exponential", "uniform", "deterministic", "gamma")


class ConfigError(ValueError):
    """Raised for malformed config files; message cites the offending key."""


def dist_variance_issue(kind, var):
    """None if the named unit-mean distribution can have this variance."""
    if kind not in DIST_KINDS:
        return f"unknown distribution {kind!r}"
    if kind == "exponential" and abs(var - 1.0) > 1e-12:
        return "exponential has variance 1"
    if kind == "uniform" and not var < 1.0 / 3.0:
        return "uniform on [1-c,1+c] needs variance < 1/3"
    if kind == "deterministic" and var != 0.0:
        return "deterministic has variance 0"
    if kind == "gamma" and not var > 0.0:
        return "gamma needs positive variance"
    return None


@dataclass(frozen=True)
class ClassParams:
    """First/second-order rates, buffer, and costs for one job class."""

    lam: float
    mu: float
    var_ia: float
    var_st: float
    tilde_lam: float = 0.0
    tilde_mu: float = 0.0
    D: float = 1.0
    hbar: float = 1.0
    rbar: float = 1.0
    ia_dist: str = "exponential"
    st_dist: str = "exponential"


@dataclass(frozen=True)
class ModelParams:
    """Full model; classes are relabeled on construction so that
    hbar_1*mu_1 >= hbar_2*mu_2 >= ... (stable sort)."""

    classes: tuple
    x0: tuple
    scaling_exponent: float = 0.3

    def __post_init__(self):
        cl = tuple(self.classes)
        x0 = tuple(float(x) for x in self.x0)
        if len(x0) != len(cl):
            raise ValueError("x0 must have one entry per class")
        order = sorted(range(len(cl)), key=lambda i: -cl[i].hbar * cl[i].mu)
        object.__setattr__(self, "classes", tuple(cl[i] for i in order))
        object.__setattr__(self, "x0", tuple(x0[i] for i in order))

    @property
    def I(self):
        return len(self.classes)

    @property
    def rho(self):
        return np.array([c.lam / c.mu for c in self.classes])

    @property
    def theta(self):
        return np.array([1.0 / c.mu for c in self.classes])


@dataclass(frozen=True)
class NthSystem:
    """The n-th prelimit system: exact rates, integer buffers and state."""

    n: int
    b_n: float
    bsn: float          # b_n * sqrt(n)
    lambda_n: np.ndarray
    mu_n: np.ndarray
    theta_n: np.ndarray
    D_n: float
    X0: np.ndarray      # int64 initial queue lengths
    cap: np.ndarray     # int64 buffer capacities floor(bsn * D_i)
    params: ModelParams = field(repr=False)

    @property
    def I(self):
        return len(self.lambda_n)

    @property
    def b_sq(self):
        return self.b_n * self.b_n


@dataclass
class ValidationReport:
    checks: list  # (name, ok, detail)

    @property
    def ok(self):
        return all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [(name, detail) for name, ok, detail in self.checks if not ok]


def validate(params):
    """Report-style check of every standing assumption; never raises."""
    checks = []

    def add(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    for i, c in enumerate(params.classes, start=1):
        pos = (c.lam > 0 and c.mu > 0 and c.var_ia > 0 and c.var_st > 0
               and c.D > 0 and c.hbar > 0 and c.rbar > 0)
        add(f"class {i} positivity", pos,
            "" if pos else "lam, mu, variances, D, hbar, rbar must all be > 0")
        for label, kind, var in (("ia", c.ia_dist, c.var_ia), ("st", c.st_dist, c.var_st)):
            issue = dist_variance_issue(kind, var)
            add(f"class {i} {label}_dist", issue is None, issue or "")

    load = float(np.sum(params.rho))
    add("critical load", abs(load - 1.0) <= 1e-12, f"sum rho = {load:.15g}")

    hm = [c.hbar * c.mu for c in params.classes]
    add("labeling", all(hm[i] >= hm[i + 1] for i in range(len(hm) - 1)),
        "classes must satisfy hbar_i*mu_i nonincreasing")

    a = params.scaling_exponent
    add("scaling exponent", 0.0 < a < 0.5, f"a = {a} not in (0, 1/2)")

    ok_x0 = all(0.0 <= x <= c.D for x, c in zip(params.x0, params.classes))
    add("initial state", ok_x0, "" if ok_x0 else "x0 must lie in [0, D] per class")

    return ValidationReport(checks)


def instantiate(params, n):
    """Build the n-th system; exact first/second-order rate composition."""
    if not isinstance(n, (int, np.integer)) or n <= 0:
        raise ValueError("n must be a positive integer")
    a = params.scaling_exponent
    b_n = float(n) ** a
    bsn = b_n * math.sqrt(n)
    lam = np.array([c.lam for c in params.classes])
    mu = np.array([c.mu for c in params.classes])
    tl = np.array([c.tilde_lam for c in params.classes])
    tm = np.array([c.tilde_mu for c in params.classes])
    lambda_n = n * lam + bsn * tl
    mu_n = n * mu + bsn * tm
    if np.any(lambda_n <= 0) or np.any(mu_n <= 0):
        raise ValueError(f"n = {n} too small: a second-order term makes a rate nonpositive")
    theta_n = n / mu_n
    D = np.array([c.D for c in params.classes])
    x0 = np.asarray(params.x0)
    return NthSystem(
        n=int(n),
        b_n=b_n,
        bsn=bsn,
        lambda_n=lambda_n,
        mu_n=mu_n,
        theta_n=theta_n,
        D_n=float(np.dot(theta_n, D)),
        X0=np.rint(bsn * x0).astype(np.int64),
        cap=np.floor(bsn * D).astype(np.int64),
        params=params,
    )


# ---------------------------------------------------------------------------
# config files

_CLASS_KEYS = {
    "lambda": ("lam", True),
    "mu": ("mu", True),
    "var_ia": ("var_ia", True),
    "var_st": ("var_st", True),
    "tilde_lambda": ("tilde_lam", False),
    "tilde_mu": ("tilde_mu", False),
    "D": ("D", True),
    "hbar": ("hbar", True),
    "rbar": ("rbar", True),
}


def _num(obj, key_path):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{key_path}: expected a number, got {obj!r}")
    return float(obj)


def _parse_class(d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    kw = {}
    for key, (attr, required) in _CLASS_KEYS.items():
        if key in d:
            kw[attr] = _num(d[key], f"{where}.{key}")
        elif required:
            raise ConfigError(f"{where}.{key}: missing required key")
    for key in ("ia_dist", "st_dist"):
        if key in d:
            kind = d[key]
            if kind not in DIST_KINDS:
                raise ConfigError(f"{where}.{key}: unknown distribution {kind!r}, "
                                  f"expected one of {', '.join(DIST_KINDS)}")
            kw[key] = kind
    unknown = set(d) - set(_CLASS_KEYS) - {"ia_dist", "st_dist"}
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown key")
    return ClassParams(**kw)


def params_from_dict(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("top level: expected an object")
    unknown = set(cfg) - {"classes", "x0", "scaling_exponent"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    if "classes" not in cfg:
        raise ConfigError("classes: missing required key")
    if not isinstance(cfg["classes"], list) or not cfg["classes"]:
        raise ConfigError("classes: expected a nonempty list")
    classes = [_parse_class(c, f"classes[{i}]") for i, c in enumerate(cfg["classes"])]
    if "x0" not in cfg:
        raise ConfigError("x0: missing required key")
    x0 = cfg["x0"]
    if not isinstance(x0, list) or len(x0) != len(classes):
        raise ConfigError("x0: expected a list with one entry per class")
    x0 = [_num(v, f"x0[{i}]") for i, v in enumerate(x0)]
    kw = {}
    if "scaling_exponent" in cfg:
        kw["scaling_exponent"] = _num(cfg["scaling_exponent"], "scaling_exponent")
    return ModelParams(classes=tuple(classes), x0=tuple(x0), **kw)


def load_config(path):
    """Parse a JSON model config; raises ConfigError citing the bad key."""
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return params_from_dict(cfg)


def with_x0(params, x0):
    """Copy of params with a different initial state (post-relabeling order)."""
    return replace(params, x0=tuple(float(v) for v in x0))
