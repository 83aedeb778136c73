"""Probabilistic printability scoring.

The overall success probability of a model on a technology is

    P = (1 - P_G) * prod_i (1 - P_F_i)

where P_G is the technology/application-level failure probability built from
per-characteristic defect scores, application sensitivities k and the
mesh-to-CAD area ratio QS, and each P_F_i is a sigmoid of the characteristic's
governing dimension d against the technology's critical value w:

    decreasing kinds:  P_F = (1 - 1 / (1 + exp((w - (d - eps)) * c))) * s
    increasing kinds:  P_F = (    1 / (1 + exp((w - (d - eps)) * c))) * s

The steepness c is fitted per critical value by least-squares matching the
sigmoid to a linear CDF ramp over [d_min, d_max] = [w / (10 * 2w), 2w]; the
decreasing and increasing objectives are complementary and share the same
minimizer, so one fit covers both.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FitConvergenceError, UnsupportedCharacteristicError

SCHEMA_VERSION = 1

TECHNOLOGIES = ("FDM", "BJ", "MJ")

# Critical values w_d(T, i): the dimension at which a characteristic prints
# successfully with 50% probability. Units: mm unless noted.
CRITICAL_VALUES: dict[str, dict[str, dict[str, float]]] = {
    "FDM": {
        "hole": {"diameter": 2.0},
        "pin": {"diameter": 1.8},
        "supported_wall": {"thickness": 0.8},
        "unsupported_wall": {"thickness": 0.8},
        "bridge": {"length": 10.0},
        "thin_part": {"thickness": 2.0},
        "overhang": {"angle": 45.0},          # degrees from horizontal
        "embossed": {"width": 0.6, "height": 2.0},
        "engraved": {"width": 0.5, "depth": 0.9},
    },
    "BJ": {
        "hole": {"diameter": 1.5},
        "pin": {"diameter": 2.0},
        "supported_wall": {"thickness": 2.0},
        "unsupported_wall": {"thickness": 3.0},
        "thin_part": {"thickness": 2.0},
        "overhang": {"stress": 2.78e4},       # N/m^2, max self-weight stress
        "embossed": {"width": 0.5, "height": 0.5},
        "engraved": {"width": 0.5, "depth": 0.5},
    },
    "MJ": {
        "hole": {"diameter": 0.5},
        "pin": {"diameter": 0.5},
        "supported_wall": {"thickness": 1.0},
        "unsupported_wall": {"thickness": 1.0},
        "thin_part": {"thickness": 0.5},
        "embossed": {"width": 0.8, "height": 0.5},
        "engraved": {"width": 0.5, "depth": 0.5},
    },
}

DIMENSION_UNITS = {"diameter": "mm", "thickness": "mm", "length": "mm",
                   "width": "mm", "height": "mm", "depth": "mm",
                   "angle": "deg", "stress": "N/m^2"}

# Failure probability grows with the dimension for these kinds; all others
# fail more easily as the dimension shrinks.
INCREASING_KINDS = frozenset({"overhang", "bridge"})

# The stress sigmoid for overhangs takes the dimension as-is; the predicted
# dimensional error only affects the geometry fed to the stress analysis.
EPSILON_FREE_KINDS = frozenset({"overhang"})

GLOBAL_CHARACTERISTICS = ("accuracy", "surface_texture", "abnormalities")
OPTIONAL_GLOBAL_CHARACTERISTICS = ("support_construction",)

# Defect score presets. "table-derived" backs out the value implied by the
# published per-k survival triple (1/30 per characteristic); "starred" is the
# */**/*** quality scheme (0.05 / 0.03 / 0.01).
_STAR = {"***": 0.01, "**": 0.03, "*": 0.05}
DEFECT_SCORES = {
    "table-derived": {
        tech: {c: 1.0 / 30.0 for c in GLOBAL_CHARACTERISTICS + OPTIONAL_GLOBAL_CHARACTERISTICS}
        for tech in TECHNOLOGIES
    },
    "starred": {
        "FDM": {"accuracy": _STAR["**"], "surface_texture": _STAR["*"],
                "abnormalities": _STAR["*"], "support_construction": _STAR["**"]},
        "BJ": {"accuracy": _STAR["**"], "surface_texture": _STAR["**"],
               "abnormalities": _STAR["**"], "support_construction": _STAR["***"]},
        "MJ": {"accuracy": _STAR["***"], "surface_texture": _STAR["***"],
               "abnormalities": _STAR["***"], "support_construction": _STAR["**"]},
    },
}

FIT_SAMPLES = 2048        # trapezoid nodes for the objective integral
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# -- coefficient fitting -----------------------------------------------------


def fit_bracket(w: float) -> tuple[float, float]:
    """Search bracket for the steepness coefficient, scaled by 1/w."""
    return 1e-6 / w, 1e3 / w


def fit_objective(c, w: float, n_samples: int = FIT_SAMPLES):
    """Discretized squared difference between the ramp CDF and the sigmoid.

    Vectorized over c. The decreasing-kind form is integrated; the
    increasing-kind objective equals it identically (both terms complement).
    """
    c = np.asarray(c, dtype=np.float64)
    d_max = 2.0 * w
    d_min = w / (10.0 * d_max)
    x = np.linspace(d_min, d_max, n_samples)
    ramp = (d_max - x) / (d_max - d_min)
    expo = np.clip((w - x) * (c[..., None] if c.ndim else c), -700.0, 700.0)
    sigmoid = 1.0 - 1.0 / (1.0 + np.exp(expo))
    sq = (ramp - sigmoid) ** 2
    return np.trapezoid(sq, x, axis=-1) if c.ndim else float(np.trapezoid(sq, x))


def fit_coefficient(w: float, direction: str = "decreasing",
                    n_samples: int = FIT_SAMPLES, tol: float = 1e-10,
                    max_iters: int = 200) -> float:
    """Golden-section minimization of the fit objective over the bracket.

    ``direction`` is accepted for interface symmetry; both directions share
    the minimizer. Raises FitConvergenceError if the bracket does not shrink
    to tolerance within the iteration cap.
    """
    if w <= 0:
        raise ConfigError(f"critical value must be positive, got {w}")
    if direction not in ("decreasing", "increasing"):
        raise ConfigError(f"unknown direction {direction!r}")
    lo, hi = fit_bracket(w)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = fit_objective(x1, w, n_samples)
    f2 = fit_objective(x2, w, n_samples)
    for _ in range(max_iters):
        if (hi - lo) <= tol * max(abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = fit_objective(x1, w, n_samples)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = fit_objective(x2, w, n_samples)
    raise FitConvergenceError("coefficient fit did not converge", (lo, hi))


_fit_cache: dict[tuple[float, int], float] = {}
_fit_cache_lock = threading.Lock()


def fitted_coefficient(w: float, n_samples: int = FIT_SAMPLES) -> float:
    """Compute-once cached fit_coefficient (read-mostly across threads)."""
    key = (w, n_samples)
    c = _fit_cache.get(key)
    if c is None:
        c = fit_coefficient(w, n_samples=n_samples)
        with _fit_cache_lock:
            _fit_cache.setdefault(key, c)
    return c


def probe_unimodality(w: float, grid_points: int = 10_000):
    """Count local minima of the discretized objective on a log-spaced grid.

    Diagnostic for the single-global-minimum assumption behind the bracketed
    search; comparisons ignore jitter below 1e-12 of the objective scale.
    """
    lo, hi = fit_bracket(w)
    cs = np.logspace(np.log10(lo), np.log10(hi), grid_points)
    vals = fit_objective(cs, w)
    tol = float(vals.max()) * 1e-12
    interior = (vals[1:-1] < vals[:-2] - tol) & (vals[1:-1] < vals[2:] - tol)
    count = int(interior.sum())
    argmin = float(cs[int(np.argmin(vals))])
    return count, argmin


# -- configuration types -----------------------------------------------------


@dataclass
class PartCharacteristic:
    """One local feature instance: kind, dimensions, predicted error, weight."""

    kind: str
    dimensions: dict[str, float]
    epsilon: float = 0.0
    significance: float = 1.0
    epsilon_source: str = "default"   # predicted | manual | default
    label: str = ""

    def __post_init__(self):
        if not self.dimensions:
            raise ConfigError(f"characteristic {self.kind!r}: no dimensions given")
        for name, value in self.dimensions.items():
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(
                    f"characteristic {self.kind!r}: dimension {name!r} must be "
                    f"a positive finite number"
                )
        if self.epsilon < 0:
            raise ConfigError(f"characteristic {self.kind!r}: epsilon must be >= 0")
        if not 0.0 < self.significance <= 1.0:
            raise ConfigError(
                f"characteristic {self.kind!r}: significance must be in (0, 1]"
            )
        if self.epsilon_source not in ("predicted", "manual", "default"):
            raise ConfigError(
                f"characteristic {self.kind!r}: bad epsilon_source {self.epsilon_source!r}"
            )


@dataclass
class PrintabilityConfig:
    technology: str
    sensitivity: dict[str, float]                  # k(x, A) per global characteristic
    characteristics: list[PartCharacteristic] = field(default_factory=list)
    qs: float | None = None
    mesh_area: float | None = None
    cad_area: float | None = None
    defect_preset: str = "table-derived"
    application: str = ""
    global_characteristics: tuple[str, ...] = GLOBAL_CHARACTERISTICS

    def __post_init__(self):
        if self.technology not in TECHNOLOGIES:
            raise ConfigError(f"unknown technology {self.technology!r}")
        if self.defect_preset not in DEFECT_SCORES:
            raise ConfigError(f"unknown defect preset {self.defect_preset!r}")
        for x in self.global_characteristics:
            if x not in self.sensitivity:
                raise ConfigError(f"sensitivity k missing for {x!r}")
        for x, k in self.sensitivity.items():
            if not 0.0 <= k <= 1.0:
                raise ConfigError(f"sensitivity k for {x!r} must be in [0, 1]")

    def quality_ratio(self) -> tuple[float, list[str]]:
        """QS = mesh area / CAD area; > 1 is accepted with a warning."""
        warnings = []
        if self.qs is not None:
            qs = self.qs
        elif self.mesh_area is not None and self.cad_area is not None:
            if self.cad_area <= 0:
                raise ConfigError("cad_area must be positive")
            qs = self.mesh_area / self.cad_area
        else:
            qs = 1.0
        if qs <= 0:
            raise ConfigError(f"QS must be positive, got {qs:g}")
        if qs > 1.0:
            warnings.append(
                f"QS = {qs:.6g} exceeds 1 (mesh area above CAD area); accepted as-is"
            )
        return qs, warnings


# -- probability functions ---------------------------------------------------


def lookup_critical_value(tech: str, char: PartCharacteristic):
    """Resolve (w, governing dimension name/value, direction) for a characteristic.

    Multi-dimensional kinds are governed by their smallest dimension, one
    sigmoid. Raises UnsupportedCharacteristicError for blank table cells.
    """
    if tech not in CRITICAL_VALUES:
        raise ConfigError(f"unknown technology {tech!r}")
    table = CRITICAL_VALUES[tech]
    if char.kind not in table:
        raise UnsupportedCharacteristicError(char.kind, tech)
    entry = table[char.kind]
    known = set(entry)
    given = set(char.dimensions)
    if not given <= known:
        raise ConfigError(
            f"characteristic {char.kind!r}: unknown dimension(s) "
            f"{sorted(given - known)}; expected from {sorted(known)}"
        )
    gov_name = min(char.dimensions, key=char.dimensions.get)
    direction = "increasing" if char.kind in INCREASING_KINDS else "decreasing"
    return entry[gov_name], gov_name, char.dimensions[gov_name], direction


def part_failure_prob(char: PartCharacteristic, tech: str,
                      c: float | None = None) -> float:
    """Failure probability of one part characteristic, clamped to [0, 1]."""
    w, _, d, direction = lookup_critical_value(tech, char)
    if c is None:
        c = fitted_coefficient(w)
    eps = 0.0 if char.kind in EPSILON_FREE_KINDS else char.epsilon
    expo = min(max((w - (d - eps)) * c, -700.0), 700.0)
    sig = 1.0 / (1.0 + math.exp(expo))
    p_stay = sig if direction == "decreasing" else 1.0 - sig
    p_fail = (1.0 - p_stay) * char.significance
    return min(max(p_fail, 0.0), 1.0)


def global_failure_prob(config: PrintabilityConfig):
    """Technology/application failure probability P_G with per-factor detail."""
    qs, warnings = config.quality_ratio()
    ds_table = DEFECT_SCORES[config.defect_preset][config.technology]
    survival = 1.0
    factors = []
    for x in config.global_characteristics:
        if x not in ds_table:
            raise ConfigError(f"no defect score for global characteristic {x!r}")
        ds_perfect = ds_table[x]
        k = config.sensitivity[x]
        ds_effective = 1.0 - (1.0 - ds_perfect) * qs
        term = 1.0 - ds_effective * k
        survival *= term
        factors.append({
            "characteristic": x,
            "defect_score_perfect": ds_perfect,
            "defect_score_effective": ds_effective,
            "k": k,
            "survival_factor": term,
        })
    return 1.0 - survival, {"qs": qs, "factors": factors, "warnings": warnings}


def overall_printability(config: PrintabilityConfig) -> "PrintabilityReport":
    """Score a configuration; every intermediate factor lands in the report."""
    p_g, global_detail = global_failure_prob(config)
    entries = []
    product = 1.0
    warnings = list(global_detail["warnings"])
    for char in config.characteristics:
        w, gov_name, gov_value, direction = lookup_critical_value(config.technology, char)
        c = fitted_coefficient(w)
        p_f = part_failure_prob(char, config.technology, c)
        survival = 1.0 - p_f
        product *= survival
        eps_used = 0.0 if char.kind in EPSILON_FREE_KINDS else char.epsilon
        if char.kind in EPSILON_FREE_KINDS and char.epsilon:
            warnings.append(
                f"{char.kind}: epsilon {char.epsilon:g} ignored in the sigmoid "
                "(only geometric dimensions carry the predicted error)"
            )
        if gov_name == "stress":
            warnings.append(
                "overhang stress uses the literal d_min = 0.05 fitting bracket "
                "floor despite N/m^2 units"
            )
        entries.append({
            "kind": char.kind,
            "label": char.label,
            "dimensions": dict(char.dimensions),
            "governing_dimension": gov_name,
            "governing_value": gov_value,
            "critical_value": w,
            "unit": DIMENSION_UNITS.get(gov_name, "mm"),
            "direction": direction,
            "coefficient": c,
            "epsilon": char.epsilon,
            "epsilon_used": eps_used,
            "epsilon_source": char.epsilon_source,
            "significance": char.significance,
            "failure_prob": p_f,
            "survival": survival,
        })
    overall = (1.0 - p_g) * product
    return PrintabilityReport(
        technology=config.technology,
        application=config.application,
        defect_preset=config.defect_preset,
        qs=global_detail["qs"],
        global_factors=global_detail["factors"],
        global_failure_prob=p_g,
        global_survival=1.0 - p_g,
        characteristics=entries,
        product_survival=product,
        overall=overall,
        warnings=warnings,
    )


@dataclass
class PrintabilityReport:
    technology: str
    application: str
    defect_preset: str
    qs: float
    global_factors: list[dict]
    global_failure_prob: float
    global_survival: float
    characteristics: list[dict]
    product_survival: float
    overall: float
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "technology": self.technology,
            "application": self.application,
            "defect_preset": self.defect_preset,
            "qs": self.qs,
            "global": {
                "factors": self.global_factors,
                "failure_prob": self.global_failure_prob,
                "survival": self.global_survival,
            },
            "characteristics": self.characteristics,
            "product_survival": self.product_survival,
            "overall": self.overall,
            "overall_percent": 100.0 * self.overall,
            "warnings": self.warnings,
        }


# -- JSON wire format --------------------------------------------------------


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def config_from_dict(doc: dict) -> PrintabilityConfig:
    """Parse the JSON configuration document (the CLI/service/UI wire format)."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    try:
        technology = doc["technology"]
    except KeyError:
        raise ConfigError("missing field: technology")

    app = doc.get("application", {})
    if isinstance(app, str):
        app_name, k_spec = app, doc.get("k", 1.0)
    elif isinstance(app, dict):
        app_name = app.get("name", "")
        k_spec = app.get("k", doc.get("k", 1.0))
    else:
        raise ConfigError("application must be a name or an object")
    globals_ = tuple(doc.get("global_characteristics", GLOBAL_CHARACTERISTICS))
    if isinstance(k_spec, bool) or not isinstance(k_spec, (int, float, dict)):
        raise ConfigError("application.k must be a number or a mapping")
    if isinstance(k_spec, dict):
        sensitivity = {x: _number(v, f"application.k[{x!r}]") for x, v in k_spec.items()}
    else:
        sensitivity = {x: float(k_spec) for x in globals_}

    chars = []
    for i, c in enumerate(doc.get("characteristics", [])):
        where = f"characteristics[{i}]"
        if not isinstance(c, dict):
            raise ConfigError(f"{where}: must be an object")
        try:
            kind = c["kind"]
            dims = c["dimensions"]
        except KeyError as exc:
            raise ConfigError(f"{where}: missing field {exc.args[0]!r}")
        if not isinstance(dims, dict):
            raise ConfigError(f"{where}.dimensions: must be a mapping")
        try:
            chars.append(PartCharacteristic(
                kind=kind,
                dimensions={
                    k: _number(v, f"dimensions[{k!r}]") for k, v in dims.items()
                },
                epsilon=_number(c.get("epsilon", 0.0), "epsilon"),
                significance=_number(c.get("significance", 1.0), "significance"),
                epsilon_source=c.get(
                    "epsilon_source", "manual" if "epsilon" in c else "default"
                ),
                label=c.get("label", ""),
            ))
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}")

    areas = doc.get("areas") or {}
    if not isinstance(areas, dict):
        raise ConfigError("areas must be an object with mesh/cad fields")
    qs = doc.get("qs")
    config = PrintabilityConfig(
        technology=technology,
        sensitivity=sensitivity,
        characteristics=chars,
        qs=None if qs is None else _number(qs, "qs"),
        mesh_area=None if "mesh" not in areas else _number(areas["mesh"], "areas.mesh"),
        cad_area=None if "cad" not in areas else _number(areas["cad"], "areas.cad"),
        defect_preset=doc.get("defect_preset", "table-derived"),
        application=app_name,
        global_characteristics=globals_,
    )
    # surface QS errors at parse time
    config.quality_ratio()
    return config


def config_to_dict(config: PrintabilityConfig) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "technology": config.technology,
        "application": {"name": config.application, "k": dict(config.sensitivity)},
        "defect_preset": config.defect_preset,
        "global_characteristics": list(config.global_characteristics),
        "characteristics": [
            {
                "kind": c.kind,
                "dimensions": dict(c.dimensions),
                "epsilon": c.epsilon,
                "epsilon_source": c.epsilon_source,
                "significance": c.significance,
                **({"label": c.label} if c.label else {}),
            }
            for c in config.characteristics
        ],
    }
    if config.qs is not None:
        doc["qs"] = config.qs
    if config.mesh_area is not None and config.cad_area is not None:
        doc["areas"] = {"mesh": config.mesh_area, "cad": config.cad_area}
    return doc


def critical_value_table(tech: str) -> dict:
    """The full table for one technology, with units and directions."""
    if tech not in CRITICAL_VALUES:
        raise ConfigError(f"unknown technology {tech!r}")
    out = {}
    for kind, dims in CRITICAL_VALUES[tech].items():
        out[kind] = {
            "direction": "increasing" if kind in INCREASING_KINDS else "decreasing",
            "dimensions": {
                name: {"value": w, "unit": DIMENSION_UNITS.get(name, "mm")}
                for name, w in dims.items()
            },
        }
    return out


# -- analytic overhang stress surrogate (non-normative) ----------------------

DEFAULT_POWDER_DENSITY = 1360.0   # kg/m^3, bound powder before infiltration
GRAVITY = 9.8                     # m/s^2


def cantilever_stress_surrogate(length_mm: float, width_mm: float,
                                thickness_mm: float, angle_deg: float,
                                density: float = DEFAULT_POWDER_DENSITY,
                                g: float = GRAVITY) -> float:
    """Root bending stress of a prismatic cantilever under self weight, N/m^2.

    sigma = 3 * rho * g * L^2 * cos(angle) / T for the transverse weight
    component; width cancels. This is a rough stand-in for a finite-element
    analysis of an overhang: expect geometry-dependent disagreement by a
    multiplicative factor, so treat results as relative indicators only.
    """
    if length_mm <= 0 or width_mm <= 0 or thickness_mm <= 0:
        raise ConfigError("cantilever dimensions must be positive")
    length = length_mm / 1000.0
    thickness = thickness_mm / 1000.0
    return 3.0 * density * g * length**2 * math.cos(math.radians(angle_deg)) / thickness
