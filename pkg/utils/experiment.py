"""
Experiment Runner

This module handles:
- Loading and validating JSON experiment configs
- The run pipeline: validate -> iterate -> certify -> report
- The moduli report pipeline
- Atomic, byte-reproducible output files
- Batch configs (independent experiments run concurrently)
"""

import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import jsonschema
import numpy as np

from utils import moduli
from utils.analytics import compare_certificates, summarize_trajectory, trajectory_frame
from utils.iteration import check_equivalence, check_fejer, extend_trajectory, mann_iterate
from utils.operators import (
    ConstructionRefused,
    averaged_instance,
    ball_projection,
    check_lemma2,
    from_nonexpansive,
    linear_operator,
    scaled_negation,
    zero_map,
)
from utils.rates import (
    PLAIN,
    STRICT,
    certify,
    RateOfDivergence,
    constant_schedule,
    default_b,
    harmonic_capped_schedule,
    plain_to_strict,
    rate_function,
    reparameterize,
    to_exact,
    transfer_to_nonexpansive,
)
from utils.report_generator import generate_pdf_report, generate_summary_text
from utils.settings import (
    DEFAULT_N_MAX,
    DEFAULT_PROBES,
    DEFAULT_SEED,
    DEFAULT_VALIDATION_PAIRS,
    MAX_STEPS,
    TOLERANCE,
)
from utils.spaces import HILBERT, LP, Space, as_vector, hilbert_space, lp_space, norm, sample_points

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CERTIFICATE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_INTERNAL_ERROR = 3


class ConfigError(ValueError):
    """A config file that does not match the schema; names the offending field."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


# ========================================
# CONFIG SCHEMA
# ========================================

SCHEMA_PATH = Path(__file__).resolve().parent.parent / "configs" / "schema.json"
CONFIG_SCHEMA: Dict[str, Any] = json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))

# schema fields whose defaults come from the MANN_* environment
_ENV_DEFAULTS = {
    "seed": DEFAULT_SEED,
    "n_max": DEFAULT_N_MAX,
    "probes": DEFAULT_PROBES,
    "validation_pairs": DEFAULT_VALIDATION_PAIRS,
    "tolerance": TOLERANCE,
}


def _field_path(error: jsonschema.ValidationError) -> str:
    """Dotted path of a schema violation, with [i] for list positions."""
    parts = list(error.absolute_path)
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        allowed = error.schema.get("properties", {})
        parts.append(sorted(key for key in error.instance if key not in allowed)[0])
    elif error.validator == "required" and isinstance(error.instance, dict):
        parts.append(next(key for key in error.validator_value if key not in error.instance))
    path = ""
    for part in parts:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path or "<root>"


def validate_schema(raw: Any) -> None:
    """
    Check a decoded config against configs/schema.json.

    Raises:
        ConfigError: naming the offending field
    """
    try:
        jsonschema.validate(instance=raw, schema=CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(_field_path(exc), exc.message) from exc


def _default(path: str):
    if path in _ENV_DEFAULTS:
        return _ENV_DEFAULTS[path]
    node = CONFIG_SCHEMA
    for part in path.split("."):
        node = node["properties"][part]
    return node.get("default")


def _value(raw: dict, key: str, path: str = ""):
    full = f"{path}.{key}" if path else key
    return raw[key] if key in raw else _default(full)


def _exact(value, field_path: str):
    if value is None:
        return None
    try:
        return to_exact(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(field_path, f"not a number: {value!r} ({exc})") from exc


@dataclass
class SpaceSpec:
    kind: str
    dim: int
    p: Optional[float]
    c: Optional[float]
    d: Optional[float]


@dataclass
class OperatorSpec:
    type: str
    c: Optional[Fraction] = None
    map: Optional[dict] = None
    s: Optional[Fraction] = None
    matrix: Optional[list] = None
    k: Optional[Fraction] = None


@dataclass
class ScheduleSpec:
    kind: str
    a: Fraction
    cap: Optional[Fraction]
    series: str
    k: Optional[Fraction]
    d: Optional[Fraction]


@dataclass
class ModuliSpec:
    taus: List[float]
    eps_grid: List[float]
    t_grid: List[float]
    lemma1_pairs: int
    beta_points: int
    grid_step: float
    alpha_step: float


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    space: SpaceSpec
    operator: Optional[OperatorSpec]
    schedule: Optional[ScheduleSpec]
    x0: Any
    eps_list: List[float]
    rates: List[str]
    b: Optional[float]
    n_max: int
    probes: int
    validation_pairs: int
    check_budget: int
    exhaustive: bool
    tolerance: float
    moduli: ModuliSpec
    outputs: Dict[str, Optional[str]] = field(default_factory=dict)


def _parse_space(raw: dict) -> SpaceSpec:
    p, c, d = raw.get("p"), raw.get("c"), raw.get("d")
    return SpaceSpec(
        kind=_value(raw, "kind", "space"),
        dim=int(_value(raw, "dim", "space")),
        p=None if p is None else float(p),
        c=None if c is None else float(c),
        d=None if d is None else float(d),
    )


def _parse_operator(raw: Optional[dict], required: bool) -> Optional[OperatorSpec]:
    if raw is None:
        if required:
            raise ConfigError("operator", "missing required field")
        return None
    c = _exact(raw.get("c"), "operator.c")
    s = _exact(raw.get("s"), "operator.s")
    k = _exact(raw.get("k"), "operator.k")
    if c is not None and c < 1:
        raise ConfigError("operator.c", f"must be >= 1, got {c}")
    if s is not None and not 0 < s <= 1:
        raise ConfigError("operator.s", f"must lie in (0, 1], got {s}")
    if k is not None and not 0 <= k < 1:
        raise ConfigError("operator.k", f"must lie in [0, 1), got {k}")
    return OperatorSpec(raw["type"], c=c, map=raw.get("map"), s=s, matrix=raw.get("matrix"), k=k)


def _parse_schedule(raw: Optional[dict], required: bool) -> Optional[ScheduleSpec]:
    if raw is None:
        if required:
            raise ConfigError("schedule", "missing required field")
        return None
    return ScheduleSpec(
        kind=_value(raw, "kind", "schedule"),
        a=_exact(raw["a"], "schedule.a"),
        cap=_exact(raw.get("cap"), "schedule.cap"),
        series=_value(raw, "series", "schedule"),
        k=_exact(raw.get("k"), "schedule.k"),
        d=_exact(raw.get("d"), "schedule.d"),
    )


def _floats(values) -> List[float]:
    return [float(v) for v in values]


def parse_config(raw: dict, require_run_fields: bool = True) -> ExperimentConfig:
    """
    Validate a decoded config against configs/schema.json and build an ExperimentConfig.

    Types, enums, ranges and unknown fields are the schema's; exact step
    values and fields that depend on each other are checked here.

    Raises:
        ConfigError: naming the first offending field
    """
    validate_schema(raw)

    space = _parse_space(raw.get("space", {}))
    operator = _parse_operator(raw.get("operator"), require_run_fields)
    schedule = _parse_schedule(raw.get("schedule"), require_run_fields)

    x0 = raw.get("x0")
    if x0 is None and require_run_fields:
        raise ConfigError("x0", "missing required field")
    if isinstance(x0, list) and len(x0) != space.dim:
        raise ConfigError("x0", f"expected {space.dim} numbers, got {len(x0)}")

    mod_raw = raw.get("moduli", {})
    mod = ModuliSpec(
        taus=_floats(_value(mod_raw, "taus", "moduli")),
        eps_grid=_floats(_value(mod_raw, "eps_grid", "moduli")),
        t_grid=_floats(_value(mod_raw, "t_grid", "moduli")),
        lemma1_pairs=int(_value(mod_raw, "lemma1_pairs", "moduli")),
        beta_points=int(_value(mod_raw, "beta_points", "moduli")),
        grid_step=float(_value(mod_raw, "grid_step", "moduli")),
        alpha_step=float(_value(mod_raw, "alpha_step", "moduli")),
    )
    out_raw = raw.get("outputs", {})
    outputs = {key: _value(out_raw, key, "outputs") for key in ("trajectory", "certificates", "moduli", "pdf")}

    b = _value(raw, "b")
    return ExperimentConfig(
        name=_value(raw, "name"),
        seed=int(_value(raw, "seed")),
        space=space,
        operator=operator,
        schedule=schedule,
        x0=x0,
        eps_list=_floats(_value(raw, "eps_list")),
        rates=list(_value(raw, "rates")),
        b=None if b is None else float(b),
        n_max=int(_value(raw, "n_max")),
        probes=int(_value(raw, "probes")),
        validation_pairs=int(_value(raw, "validation_pairs")),
        check_budget=int(_value(raw, "check_budget")),
        exhaustive=bool(_value(raw, "exhaustive")),
        tolerance=float(_value(raw, "tolerance")),
        moduli=mod,
        outputs=outputs,
    )


def read_config(path: Union[str, Path]) -> dict:
    """Decode a JSON config file; syntax errors become ConfigError with line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"{exc.msg} at line {exc.lineno}, column {exc.colno}") from exc


def expand_batch(raw: dict) -> List[dict]:
    """A batch config becomes one raw config per entry, merged over the shared fields."""
    if "experiments" not in raw:
        return [raw]
    entries = raw["experiments"]
    if not isinstance(entries, list) or not entries:
        raise ConfigError("experiments", "expected a non-empty list")
    shared = {k: v for k, v in raw.items() if k != "experiments"}
    merged = []
    names = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"experiments[{i}]", "expected an object")
        item = {**shared, **entry}
        item.setdefault("name", f"experiment_{i}")
        if item["name"] in names:
            raise ConfigError(f"experiments[{i}].name", f"duplicate name {item['name']!r}")
        names.add(item["name"])
        merged.append(item)
    return merged


# ========================================
# BUILDERS
# ========================================

def build_space(spec: SpaceSpec) -> Space:
    if spec.kind == HILBERT:
        return hilbert_space(spec.dim)
    return lp_space(spec.dim, spec.p, d=spec.d, c=spec.c)


def build_operator(spec: OperatorSpec, space: Space, seed: int, pairs: int):
    """
    Returns:
        tuple: (PseudocontractionInstance, k as an exact number when available)
    """
    try:
        if spec.type == "scaled_negation":
            k = (spec.c - 1) / (spec.c + 1)
            return scaled_negation(float(spec.c), space), k
        if spec.type == "from_nonexpansive":
            radius = float(spec.map.get("radius", 1.0))
            N = zero_map(space) if spec.map["type"] == "zero" else ball_projection(space, radius)
            T = from_nonexpansive(N, float(spec.s), space, np.zeros(space.dim), pairs, seed,
                                  label=spec.map["type"])
            return T, 1 - spec.s
        T = linear_operator(spec.matrix, space, None if spec.k is None else float(spec.k), pairs, seed)
        return T, spec.k if spec.k is not None else to_exact(T.k)
    except ConstructionRefused as exc:
        raise ConfigError("operator", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("operator", str(exc)) from exc


def build_schedule(spec: ScheduleSpec, k, d):
    """The strict-series schedule for (k, d), plus the plain one when series = 'plain'."""
    k = spec.k if spec.k is not None else k
    d = spec.d if spec.d is not None else d
    series = spec.series
    if spec.kind == "constant":
        make = lambda kind: constant_schedule(spec.a, k, d, kind)
    else:
        make = lambda kind: harmonic_capped_schedule(spec.a, spec.cap, k, d, kind)
    plain = make(PLAIN) if series == PLAIN else None
    return make(STRICT), plain


def build_x0(config: ExperimentConfig, space: Space) -> np.ndarray:
    if isinstance(config.x0, dict):
        radius = float(config.x0.get("radius", 10.0))
        return as_vector(space, sample_points(space, config.seed + 11, 1, radius)[0])
    return as_vector(space, config.x0)


# ========================================
# OUTPUT
# ========================================

@dataclass
class RunArtifacts:
    trajectory_csv: Optional[Path]
    certificates_json: Optional[Path]
    moduli_json: Path
    summary: str
    passed: bool
    exit_code: int
    pdf: Optional[Path] = None


def atomic_write_text(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


# ========================================
# MODULI REPORT
# ========================================

def moduli_report(space: Space, spec: ModuliSpec, probes: int, seed: int, tol: float) -> Dict:
    """Every moduli-module check for one space, as a JSON-ready dict."""
    dc = moduli.compute_dc(space.c)
    alpha_max = moduli.verify_alpha(spec.alpha_step)

    rho_rows = moduli.rho_table(space, spec.taus, probes, seed)
    for row in rho_rows:
        tau = row["tau"]
        # upper bound on rho from the dual convexity bound eps^2/(16c)
        row["lindenstrauss_upper_bound"] = moduli.lindenstrauss_check(
            tau, lambda e: moduli.delta_dual_lower_bound(space.c, e), spec.grid_step)
        if space.kind == HILBERT:
            row["lindenstrauss"] = moduli.lindenstrauss_check(tau, moduli.analytic_delta_hilbert, spec.grid_step)

    delta_rows = []
    for eps in spec.eps_grid:
        estimate = moduli.estimate_delta(space, eps, probes, seed)
        eta = float(space.eta(eps))
        delta_rows.append({
            "eps": eps,
            "estimate": estimate.to_dict(),
            "eta": eta,
            "eta_valid": estimate.value >= eta - tol,
        })

    x = sample_points(space, seed + 3, 1, 1.0)[0]
    beta_rows = []
    for t in spec.t_grid:
        values = moduli.beta_star_probe_values(space, x, t, probes, seed)
        estimate = moduli.estimate_beta_star(space, x, t, probes, seed)
        row = {"t": t, "estimate": estimate.to_dict(), "bound": space.d * t,
               "within_bound": estimate.value <= space.d * t + tol}
        if space.kind == HILBERT:
            row["max_probe_deviation_from_t"] = float(np.max(np.abs(values - t)))
        beta_rows.append(row)

    lemma1_ii = moduli.check_lemma1_ii(space, space.d, spec.lemma1_pairs, seed, tol=tol)
    lemma1_iii = moduli.check_lemma1_iii(space, space.d, spec.beta_points, min(probes, 2000), seed, tol=tol)
    smooth = moduli.check_smoothness_constant(space, space.c, spec.taus, probes, seed, tol=tol)
    dual = moduli.check_dual_inequality(space, dc.k2, spec.lemma1_pairs, seed, tol=tol)

    checks = {
        "lemma1_ii": lemma1_ii.to_dict(),
        "lemma1_iii": lemma1_iii.to_dict(),
        "smoothness_constant": smooth.to_dict(),
        "dual_inequality": dual.to_dict(),
    }
    passed = (all(c["passed"] for c in checks.values())
              and all(r["eta_valid"] for r in delta_rows)
              and all(r["within_bound"] for r in beta_rows))
    return {
        "space": space.describe(),
        "dc": dc.to_dict(),
        "alpha": {"grid_step": spec.alpha_step, "max": alpha_max, "expected": math.sqrt(2.0) - 2.0},
        "rho": rho_rows,
        "delta": delta_rows,
        "beta_star": {"x": x.tolist(), "rows": beta_rows},
        "checks": checks,
        "passed": passed,
    }


# ========================================
# PIPELINES
# ========================================

class _Extender:
    """Keeps the longest trajectory seen so certification can grow it on demand."""

    def __init__(self, trajectory, T):
        self.trajectory = trajectory
        self.T = T

    def __call__(self, n_max: int):
        self.trajectory = extend_trajectory(self.trajectory, self.T, n_max)
        return self.trajectory


def _resolve_out_dir(config: ExperimentConfig, out_dir: Optional[Union[str, Path]], raw: dict) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    return Path(raw.get("out_dir", Path("runs") / config.name))


def _execute_run(config: ExperimentConfig, out_dir: Path, pdf: bool) -> RunArtifacts:
    tol = config.tolerance
    space = build_space(config.space)
    if space.kind == LP:
        space_check = moduli.check_lemma1_ii(space, space.d, config.validation_pairs, config.seed, tol=tol)
        if not space_check.passed:
            raise ConfigError("space.d", f"declared d = {space.d} fails the Lemma 1 (ii) sample "
                                         f"(max violation {space_check.max_violation:.3e})")

    T, k_exact = build_operator(config.operator, space, config.seed, config.validation_pairs)
    d_exact = config.schedule.d if config.schedule.d is not None else to_exact(space.d)
    schedule, plain = build_schedule(config.schedule, k_exact, d_exact)
    k, d = schedule.k, schedule.d
    if float(k) < T.k - 1e-15:
        raise ConfigError("schedule.k", f"k = {k} is below the operator's k = {T.k}")
    s = float((1 - k) / d)
    x0 = build_x0(config, space)
    if space.kind == LP and any(v in ("h2", "h4") for v in config.rates):
        raise ConfigError("rates", "h2 and h4 are Hilbert-space rates")
    distance = float(norm(space, x0 - T.known_fixed_point))
    if config.b is not None and config.b < distance:
        raise ConfigError("b", f"b = {config.b:g} is below ||x0 - p|| = {distance:.6g}")
    b = config.b if config.b is not None else default_b(distance)

    lemma2 = check_lemma2(T, s, float(d), config.validation_pairs, config.seed)
    trajectory = mann_iterate(T, x0, schedule, config.n_max)
    equivalence = check_equivalence(T, x0, schedule, min(config.n_max, 1000))
    fejer_ok, fejer_index = check_fejer(trajectory, tol)

    theta_strict = RateOfDivergence.exact(schedule)
    if plain is not None:
        theta_strict = plain_to_strict(RateOfDivergence.exact(plain), k, d)
    theta_nonexp = transfer_to_nonexpansive(theta_strict)

    strict_extender = _Extender(trajectory, T)
    averaged_extender = None
    certificates = []
    for variant in config.rates:
        if variant in ("h3", "h4"):
            rate = rate_function(variant, b, k, d, space.eta, theta_strict)
            extender = strict_extender
        else:
            if averaged_extender is None:
                A = averaged_instance(T, s, float(d))
                averaged_extender = _Extender(mann_iterate(A, x0, reparameterize(schedule), config.n_max), A)
            rate = rate_function(variant, b, 0, 1, space.eta, theta_nonexp)
            extender = averaged_extender
        certificates.extend(_certify_variant(extender, rate, config, variant))

    passed = all(c.passed for c in certificates) and lemma2.passed and fejer_ok

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / config.outputs["trajectory"]
    cert_path = out_dir / config.outputs["certificates"]
    moduli_path = out_dir / config.outputs["moduli"]

    csv_text = trajectory_frame(trajectory).to_csv(index=False, lineterminator="\n", float_format="%.17g")
    report = moduli_report(space, config.moduli, config.probes, config.seed, tol)
    report["operator"] = {
        "label": T.label,
        "k": k_exact,
        "schedule": schedule.describe(),
        "b": b,
        "lemma2": lemma2.to_dict(),
        "equivalence_deviation": equivalence,
        "fejer_ok": fejer_ok,
        "fejer_first_violation": fejer_index,
        "trajectory": summarize_trajectory(trajectory),
        "observed_vs_predicted": compare_certificates(strict_extender.trajectory, [
            c for c in certificates if c.variant in ("h3", "h4")]),
    }

    atomic_write_text(csv_path, csv_text)
    atomic_write_text(cert_path, to_json([c.to_record() for c in certificates]))
    atomic_write_text(moduli_path, to_json(report))

    summary = generate_summary_text(config.name, report, certificates)
    pdf_path = None
    if pdf or config.outputs.get("pdf"):
        pdf_path = out_dir / (config.outputs.get("pdf") or "report.pdf")
        atomic_write_bytes(pdf_path, generate_pdf_report(config.name, report, certificates))

    code = EXIT_OK if passed else EXIT_CERTIFICATE_FAILURE
    logger.info("%s: %d certificates, %s", config.name, len(certificates), "all pass" if passed else "FAILURES")
    return RunArtifacts(csv_path, cert_path, moduli_path, summary, passed, code, pdf_path)


def _certify_variant(extender: _Extender, rate, config: ExperimentConfig, variant: str):
    return certify(extender.trajectory, rate, config.eps_list, config.check_budget,
                   extend=extender, max_steps=MAX_STEPS, tol=config.tolerance,
                   exhaustive=config.exhaustive, variant=variant)


def _execute_moduli(config: ExperimentConfig, out_dir: Path, pdf: bool) -> RunArtifacts:
    space = build_space(config.space)
    report = moduli_report(space, config.moduli, config.probes, config.seed, config.tolerance)
    moduli_path = out_dir / config.outputs["moduli"]
    atomic_write_text(moduli_path, to_json(report))
    summary = generate_summary_text(config.name, report, [])
    pdf_path = None
    if pdf or config.outputs.get("pdf"):
        pdf_path = out_dir / (config.outputs.get("pdf") or "report.pdf")
        atomic_write_bytes(pdf_path, generate_pdf_report(config.name, report, []))
    code = EXIT_OK if report["passed"] else EXIT_CERTIFICATE_FAILURE
    return RunArtifacts(None, None, moduli_path, summary, report["passed"], code, pdf_path)


def _load(config_path, seed: Optional[int], tolerance: Optional[float], require_run_fields: bool):
    raw = read_config(config_path) if not isinstance(config_path, dict) else config_path
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    items = []
    for entry in expand_batch(raw):
        config = parse_config(entry, require_run_fields)
        if seed is not None:
            config = replace(config, seed=int(seed))
        if tolerance is not None:
            config = replace(config, tolerance=float(tolerance))
        items.append((config, entry))
    return items, "experiments" in raw


def _dispatch(config_path, out_dir, seed, tolerance, pdf, require_run_fields, worker):
    items, is_batch = _load(config_path, seed, tolerance, require_run_fields)
    if not is_batch:
        config, entry = items[0]
        return worker(config, _resolve_out_dir(config, out_dir, entry), pdf)
    base = Path(out_dir) if out_dir is not None else None
    jobs = []
    with ThreadPoolExecutor(max_workers=min(4, len(items))) as pool:
        for config, entry in items:
            target = (base / config.name) if base is not None else _resolve_out_dir(config, None, entry)
            jobs.append(pool.submit(worker, config, target, pdf))
        return [job.result() for job in jobs]


def run_experiment(config_path, out_dir=None, seed: Optional[int] = None,
                   tolerance: Optional[float] = None, pdf: bool = False):
    """
    validate -> iterate -> certify -> report for one config (or each entry of a batch).

    Returns:
        RunArtifacts, or a list of them for batch configs

    Raises:
        ConfigError: schema violations (named field)
        StepRangeError: a step outside (0, (1-k)/d)
        DivergenceScanError: scan cap exceeded while computing theta
    """
    return _dispatch(config_path, out_dir, seed, tolerance, pdf, True, _execute_run)


def run_moduli_report(config_path, out_dir=None, seed: Optional[int] = None,
                      tolerance: Optional[float] = None, pdf: bool = False):
    """Moduli report (rho / delta / beta* grids, d_c breakdown, Lemma 1 checks) for the config's space."""
    return _dispatch(config_path, out_dir, seed, tolerance, pdf, False, _execute_moduli)
