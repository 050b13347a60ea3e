"""Experiment orchestration: configs, runners and CSV emission.

Configs are plain text, one ``key = value`` per line, ``#`` comments, dotted
keys, comma-separated lists.  Parsing is strict: unknown keys, duplicate
keys, missing required keys and malformed values are all errors naming the
offending line.  Every CSV row carries (scheme, N, h, T, seed, a, b, nbins)
so any tabulated number is traceable to its exact run; floats are emitted
with 17 significant digits, LF line endings, UTF-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import exact_law
from .ensemble import empirical_moment, histogram
from .integrators import SCHEMES, SchemeConfig, simulate
from .metrics import (F_KINDS, ErrorReport, l2_error, regression_slope,
                      relative_entropy, strong_error, weak_functional)
from .model import (CubicPerturbed, ModelSpec, Quadratic, QuadraticInteraction,
                    ZeroInteraction, build_model)
from .rng import NoiseSource
from .sensitivity import VariationDecaySummary, variation_decay_summary
from .stationary import choose_domain, reference_bin_masses, stationary_law

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENT_KINDS",
    "parse_config",
    "format_config",
    "default_config",
    "build_model_from_config",
    "emit_csv",
    "run_stationary_error",
    "run_poc",
    "run_weak_order",
    "run_strong_order",
    "run_variation_decay",
    "run_simulate",
    "WeakOrderResult",
    "StrongOrderResult",
    "PocResult",
    "VariationDecayResult",
]

EXPERIMENT_KINDS = (
    "simulate",
    "stationary-error",
    "poc",
    "weak-order",
    "strong-order",
    "variation-decay",
    "assumptions-check",
)

# stream ids separating independent uses of one seed
_REFERENCE_STREAM = 1 << 20


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view of a config file for one experiment kind."""

    kind: str
    model_u: str = "quadratic"
    model_u_curvature: float = 1.0
    model_u_eps: float = 0.01
    model_v: str = "quadratic"
    model_alpha: float = 0.5
    model_sigma: float = 0.8
    sim_n: int = 100000
    sim_h: tuple[float, ...] = (0.16,)
    sim_t: tuple[float, ...] = (8.64,)
    sim_scheme: tuple[str, ...] = ("euler", "nm")
    sim_seed: int = 0
    sim_replicates: int = 1
    hist_a: float = -1.8
    hist_b: float = 1.8
    hist_nbins: int = 72
    hist_mass_tol: float = 1e-6
    hist_domain: str = "manual"
    hist_series_every: int = 0
    init_mean: float = math.pi
    init_std: float = 1.0
    weak_reference: str = "exact"
    weak_values: str = "simulated"
    weak_f: str = "positive_part"
    weak_ref_refine: int = 8
    strong_ratio: int = 64
    poc_n_list: tuple[int, ...] = (1000, 10000, 100000)
    var_p: int = 2
    var_n_list: tuple[int, ...] = (10, 20, 40)
    var_taus: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0)
    var_h: float = 0.01
    var_samples: int = 4
    trace_every: int = 1
    out_path: str = ""
    deterministic: bool = False
    unsafe_h: bool = False


_KEY_TO_FIELD = {
    "model.u": "model_u",
    "model.u_curvature": "model_u_curvature",
    "model.u_eps": "model_u_eps",
    "model.v": "model_v",
    "model.alpha": "model_alpha",
    "model.sigma": "model_sigma",
    "sim.n": "sim_n",
    "sim.h": "sim_h",
    "sim.t": "sim_t",
    "sim.scheme": "sim_scheme",
    "sim.seed": "sim_seed",
    "sim.replicates": "sim_replicates",
    "hist.a": "hist_a",
    "hist.b": "hist_b",
    "hist.nbins": "hist_nbins",
    "hist.mass_tol": "hist_mass_tol",
    "hist.domain": "hist_domain",
    "hist.series_every": "hist_series_every",
    "init.mean": "init_mean",
    "init.std": "init_std",
    "weak.reference": "weak_reference",
    "weak.values": "weak_values",
    "weak.f": "weak_f",
    "weak.ref_refine": "weak_ref_refine",
    "strong.ratio": "strong_ratio",
    "poc.n_list": "poc_n_list",
    "var.p": "var_p",
    "var.n_list": "var_n_list",
    "var.taus": "var_taus",
    "var.h": "var_h",
    "var.samples": "var_samples",
    "trace.every": "trace_every",
    "out.path": "out_path",
}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}

_REQUIRED = {
    "simulate": ("sim.n", "sim.h", "sim.t", "sim.seed"),
    "stationary-error": ("sim.n", "sim.h", "sim.t", "sim.seed"),
    "poc": ("poc.n_list", "sim.h", "sim.t", "sim.seed"),
    "weak-order": ("sim.n", "sim.h", "sim.t", "sim.seed"),
    "strong-order": ("sim.n", "sim.h", "sim.t", "sim.seed"),
    "variation-decay": ("sim.seed",),
    "assumptions-check": (),
}

_CHOICES = {
    "model.u": ("quadratic", "cubic_perturbed"),
    "model.v": ("quadratic", "zero"),
    "hist.domain": ("manual", "auto"),
    "weak.reference": ("exact", "fine-euler"),
    "weak.values": ("simulated", "analytic"),
    "weak.f": F_KINDS,
}


def _parse_value(key: str, raw: str, kind_of_field, line_no: int):
    def fail(msg: str):
        raise ConfigError(f"line {line_no}: {msg} for key '{key}' (got '{raw}')")

    raw = raw.strip()
    if raw == "":
        fail("missing value")
    try:
        if kind_of_field is int:
            return int(raw)
        if kind_of_field is float:
            return float(raw)
        if kind_of_field is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            fail("expected a boolean")
        if kind_of_field is str:
            return raw
        if kind_of_field == tuple[float, ...]:
            return tuple(float(v) for v in raw.split(","))
        if kind_of_field == tuple[int, ...]:
            return tuple(int(v) for v in raw.split(","))
        if kind_of_field == tuple[str, ...]:
            return tuple(v.strip() for v in raw.split(","))
    except ConfigError:
        raise
    except ValueError:
        fail("malformed value")
    raise AssertionError(f"unhandled config type for {key}")


def _field_types() -> dict[str, object]:
    hints = {}
    for f in fields(ExperimentConfig):
        hints[f.name] = f.type
    # dataclass stores string annotations under `from __future__ import annotations`
    resolved = {
        "str": str, "int": int, "float": float, "bool": bool,
        "tuple[float, ...]": tuple[float, ...],
        "tuple[int, ...]": tuple[int, ...],
        "tuple[str, ...]": tuple[str, ...],
    }
    return {name: resolved[t] if isinstance(t, str) else t for name, t in hints.items()}


_FIELD_TYPES = _field_types()


def parse_config(text: str, kind: str) -> ExperimentConfig:
    """Parse ``key = value`` config text for the given experiment kind."""
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind '{kind}'")
    seen: dict[str, int] = {}
    values: dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got '{line.strip()}'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {line_no}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(
                f"line {line_no}: duplicate key '{key}' (first set on line {seen[key]})")
        seen[key] = line_no
        fname = _KEY_TO_FIELD[key]
        value = _parse_value(key, raw, _FIELD_TYPES[fname], line_no)
        if key in _CHOICES:
            allowed = _CHOICES[key]
            if value not in allowed:
                raise ConfigError(
                    f"line {line_no}: key '{key}' must be one of {allowed}, got '{value}'")
        values[fname] = value
    for req in _REQUIRED[kind]:
        if req not in seen:
            raise ConfigError(f"missing required key '{req}' for experiment '{kind}'")
    cfg = ExperimentConfig(kind=kind, **values)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ExperimentConfig) -> None:
    for scheme in cfg.sim_scheme:
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme '{scheme}' in sim.scheme")
    if any(h <= 0 for h in cfg.sim_h):
        raise ConfigError("sim.h entries must be positive")
    if any(t <= 0 for t in cfg.sim_t):
        raise ConfigError("sim.t entries must be positive")
    if cfg.kind in ("simulate", "stationary-error", "poc", "weak-order", "strong-order"):
        for t in cfg.sim_t:
            for h in cfg.sim_h:
                steps = t / h
                if abs(steps - round(steps)) > 1e-9:
                    raise ConfigError(
                        f"T={t:g} is not an integer multiple of h={h:g} "
                        f"(T/h = {steps!r}); adjust the grid")
    if cfg.sim_replicates < 1:
        raise ConfigError("sim.replicates must be >= 1")
    if cfg.hist_a >= cfg.hist_b:
        raise ConfigError("need hist.a < hist.b")
    if cfg.hist_nbins < 2:
        raise ConfigError("hist.nbins must be >= 2")
    if cfg.kind != "weak-order" and len(cfg.sim_t) > 1:
        raise ConfigError(
            f"experiment '{cfg.kind}' takes a single sim.t value, got {len(cfg.sim_t)}")
    if cfg.kind == "poc" and len(cfg.sim_h) > 1:
        raise ConfigError("the particle-count sweep fixes h; give a single sim.h")


def default_config(kind: str) -> ExperimentConfig:
    return ExperimentConfig(kind=kind)


def format_config(cfg: ExperimentConfig) -> str:
    """Emit a config file that parses back to ``cfg`` (round-trip safe)."""
    lines = [f"# mfl-sim {cfg.kind} configuration"]
    for f in fields(ExperimentConfig):
        if f.name not in _FIELD_TO_KEY:
            continue
        value = getattr(cfg, f.name)
        if value == "" or value == ():
            continue  # empty values cannot round-trip; omission means default
        if isinstance(value, tuple):
            rendered = ", ".join(_fmt(v) for v in value)
        else:
            rendered = _fmt(value)
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {rendered}")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def build_model_from_config(cfg: ExperimentConfig) -> ModelSpec:
    if cfg.model_u == "quadratic":
        u = Quadratic(cfg.model_u_curvature)
    else:
        u = CubicPerturbed(cfg.model_u_curvature, cfg.model_u_eps)
    if cfg.model_v == "quadratic":
        v = QuadraticInteraction(cfg.model_alpha)
    else:
        v = ZeroInteraction()
    return build_model(u, v, sigma=cfg.model_sigma)


def _domain(cfg: ExperimentConfig, model: ModelSpec) -> tuple[float, float]:
    if cfg.hist_domain == "auto":
        return choose_domain(stationary_law(model), cfg.hist_mass_tol)
    return cfg.hist_a, cfg.hist_b


# ---------------------------------------------------------------------------
# experiment runners


def run_stationary_error(cfg: ExperimentConfig, model: ModelSpec | None = None,
                         ) -> list[ErrorReport]:
    """Long-run density errors per (scheme, h) against the invariant law.

    Schemes at the same h share seed and stream, hence the exact same
    initial samples and Brownian increments.  With ``hist.series_every`` > 0
    a row is emitted every that many steps, giving the error-vs-time trace.
    """
    model = model or build_model_from_config(cfg)
    a, b = _domain(cfg, model)
    true_h = reference_bin_masses(stationary_law(model), a, b, cfg.hist_nbins)
    t_final = cfg.sim_t[0]
    reports: list[ErrorReport] = []
    for h in cfg.sim_h:
        steps = int(round(t_final / h))
        for scheme in cfg.sim_scheme:
            sim_cfg = SchemeConfig(
                scheme=scheme, h=h, steps=steps, n_particles=cfg.sim_n,
                seed=cfg.sim_seed, init_mean=cfg.init_mean, init_std=cfg.init_std,
                unsafe_h=cfg.unsafe_h)
            every = cfg.hist_series_every

            def snapshot(m, t, ens, every=every, steps=steps):
                if (every > 0 and m % every == 0 and m > 0) or m == steps:
                    return (t, ens.positions.copy() if m < steps else ens.positions)
                return None

            result = simulate(sim_cfg, model, observers={"snap": snapshot})
            for t, positions in result.observations["snap"]:
                proxy = histogram(positions, a, b, cfg.hist_nbins)
                reports.append(ErrorReport(
                    scheme=scheme, n=cfg.sim_n, h=h, t=t, seed=cfg.sim_seed,
                    a=a, b=b, nbins=cfg.hist_nbins,
                    entropy_error=relative_entropy(true_h, proxy),
                    l2_error=l2_error(true_h, proxy)))
    return reports


@dataclass(frozen=True)
class PocResult:
    reports: list[ErrorReport]
    l2_slopes: dict[str, float]


def run_poc(cfg: ExperimentConfig, model: ModelSpec | None = None) -> PocResult:
    """Sweep the particle count at fixed (h, T) and fit L2-error-vs-N slopes."""
    model = model or build_model_from_config(cfg)
    a, b = _domain(cfg, model)
    true_h = reference_bin_masses(stationary_law(model), a, b, cfg.hist_nbins)
    h = cfg.sim_h[0]
    t_final = cfg.sim_t[0]
    steps = int(round(t_final / h))
    reports: list[ErrorReport] = []
    for n in cfg.poc_n_list:
        for scheme in cfg.sim_scheme:
            sim_cfg = SchemeConfig(
                scheme=scheme, h=h, steps=steps, n_particles=n,
                seed=cfg.sim_seed, init_mean=cfg.init_mean, init_std=cfg.init_std,
                unsafe_h=cfg.unsafe_h)
            result = simulate(sim_cfg, model)
            proxy = histogram(result.final.positions, a, b, cfg.hist_nbins)
            reports.append(ErrorReport(
                scheme=scheme, n=n, h=h, t=t_final, seed=cfg.sim_seed,
                a=a, b=b, nbins=cfg.hist_nbins,
                entropy_error=relative_entropy(true_h, proxy),
                l2_error=l2_error(true_h, proxy)))
    slopes = {}
    for scheme in cfg.sim_scheme:
        pts = [(r.n, r.l2_error) for r in reports
               if r.scheme == scheme and r.l2_error and r.l2_error > 0]
        if len(pts) >= 2:
            slopes[scheme] = regression_slope(pts)[0]
    return PocResult(reports=reports, l2_slopes=slopes)


@dataclass(frozen=True)
class WeakOrderRow:
    scheme: str
    n: int
    h: float
    t: float
    seed: int
    replicates: int
    reference_kind: str
    values_kind: str
    weak_value: float
    reference_value: float
    weak_error: float
    exact_chain_error: float | None = None


@dataclass(frozen=True)
class WeakOrderResult:
    rows: list[WeakOrderRow]
    slopes: dict[tuple[str, float], tuple[float, float, float]]  # (scheme, T) -> fit


def run_weak_order(cfg: ExperimentConfig, model: ModelSpec | None = None,
                   ) -> WeakOrderResult:
    """Weak error of E[(1/N) sum f(X_T)] versus stepsize, per scheme and T.

    The reference (the proxy for the exact time-T value) is either

    * ``exact``: the closed-form value under the exact Gaussian marginal of
      the continuous particle system (quadratic pair only) — no fine run and
      no reference noise; or
    * ``fine-euler``: replicate-averaged standard-Euler runs at the stepsize
      ``min(h) / weak.ref_refine`` on independent noise streams.

    Scheme values are replicate-averaged simulations by default.  With
    ``weak.values = analytic`` the simulated values are replaced by the
    exact chain marginals (quadratic pair only), which is the noise-free
    limit of the same pipeline; replicate count is then irrelevant.
    Runs at different h deliberately share the per-step standardized draws
    (common random numbers across the sweep) to stabilize fitted slopes.
    """
    model = model or build_model_from_config(cfg)
    rows: list[WeakOrderRow] = []
    slopes: dict[tuple[str, float], tuple[float, float, float]] = {}
    analytic_values = cfg.weak_values == "analytic"
    init_var = cfg.init_std**2

    if (cfg.weak_reference == "exact" or analytic_values) and not _is_quadratic_pair(model):
        raise ConfigError(
            "weak.reference = exact and weak.values = analytic require the "
            "quadratic potential pair (closed-form chain laws)")

    for t_final in cfg.sim_t:
        ref_value = None
        if cfg.weak_reference == "exact":
            law = exact_law.ips_marginal(model, cfg.sim_n, t_final,
                                         cfg.init_mean, init_var)
            ref_value = exact_law.gaussian_functional_mean(
                cfg.weak_f, law.mean, law.variance)
        else:
            h_ref = min(cfg.sim_h) / cfg.weak_ref_refine
            steps_ref = int(round(t_final / h_ref))
            vals = []
            for r in range(cfg.sim_replicates):
                sim_cfg = SchemeConfig(
                    scheme="euler", h=h_ref, steps=steps_ref,
                    n_particles=cfg.sim_n, seed=cfg.sim_seed,
                    init_mean=cfg.init_mean, init_std=cfg.init_std,
                    stream=_REFERENCE_STREAM + r, unsafe_h=cfg.unsafe_h)
                vals.append(weak_functional(
                    simulate(sim_cfg, model).final.positions, cfg.weak_f))
            ref_value = float(np.mean(vals))

        for scheme in cfg.sim_scheme:
            pts = []
            for h in cfg.sim_h:
                steps = int(round(t_final / h))
                chain = exact_law.chain_marginal(
                    scheme, model, cfg.sim_n, h, steps,
                    cfg.init_mean, init_var) if _is_quadratic_pair(model) else None
                exact_chain_error = None
                if chain is not None:
                    exact_chain_error = abs(exact_law.gaussian_functional_mean(
                        cfg.weak_f, chain.mean, chain.variance) - ref_value)
                if analytic_values:
                    if chain is None:
                        raise ConfigError(
                            "weak.values = analytic requires the quadratic pair")
                    value = exact_law.gaussian_functional_mean(
                        cfg.weak_f, chain.mean, chain.variance)
                else:
                    vals = []
                    for r in range(cfg.sim_replicates):
                        sim_cfg = SchemeConfig(
                            scheme=scheme, h=h, steps=steps,
                            n_particles=cfg.sim_n, seed=cfg.sim_seed,
                            init_mean=cfg.init_mean, init_std=cfg.init_std,
                            stream=r, unsafe_h=cfg.unsafe_h)
                        vals.append(weak_functional(
                            simulate(sim_cfg, model).final.positions, cfg.weak_f))
                    value = float(np.mean(vals))
                err = abs(value - ref_value)
                rows.append(WeakOrderRow(
                    scheme=scheme, n=cfg.sim_n, h=h, t=t_final, seed=cfg.sim_seed,
                    replicates=0 if analytic_values else cfg.sim_replicates,
                    reference_kind=cfg.weak_reference,
                    values_kind=cfg.weak_values,
                    weak_value=value, reference_value=ref_value, weak_error=err,
                    exact_chain_error=exact_chain_error))
                if err > 0:
                    pts.append((h, err))
            if len(pts) >= 2:
                slopes[(scheme, t_final)] = regression_slope(pts)
    return WeakOrderResult(rows=rows, slopes=slopes)


def _is_quadratic_pair(model: ModelSpec) -> bool:
    return isinstance(model.u_kind, Quadratic) and isinstance(
        model.v_kind, (QuadraticInteraction, ZeroInteraction))


@dataclass(frozen=True)
class StrongOrderRow:
    scheme: str
    n: int
    h: float
    h_ref: float
    t: float
    seed: int
    strong_error: float


@dataclass(frozen=True)
class StrongOrderResult:
    rows: list[StrongOrderRow]
    slopes: dict[str, tuple[float, float, float]]


class _CoarseNoise:
    """Noise view aggregating ``ratio`` fine increments per coarse step."""

    def __init__(self, base: NoiseSource, ratio: int):
        self.base = base
        self.ratio = ratio

    def increments(self, n: int, step: int) -> np.ndarray:
        return self.base.coarse_increments(n, step, self.ratio)

    def initial_positions(self, n: int, mean: float, std: float) -> np.ndarray:
        return self.base.initial_positions(n, mean, std)


def run_strong_order(cfg: ExperimentConfig, model: ModelSpec | None = None,
                     ) -> StrongOrderResult:
    """Coupled coarse-vs-fine pathwise errors and fitted orders.

    For each h, the reference is a standard-Euler run at h / strong.ratio
    driven by the same Brownian path (coarse increments are sums of the fine
    ones, initial samples shared).  The error is the maximum over coarse
    grid times of the RMS particle gap.
    """
    model = model or build_model_from_config(cfg)
    ratio = cfg.strong_ratio
    t_final = cfg.sim_t[0]
    rows: list[StrongOrderRow] = []
    for scheme in cfg.sim_scheme:
        for h in cfg.sim_h:
            steps = int(round(t_final / h))
            h_ref = h / ratio
            base = NoiseSource(seed=cfg.sim_seed, h_fine=h_ref,
                               refinement_ratio=ratio)
            coarse_cfg = SchemeConfig(
                scheme=scheme, h=h, steps=steps, n_particles=cfg.sim_n,
                seed=cfg.sim_seed, init_mean=cfg.init_mean,
                init_std=cfg.init_std, unsafe_h=cfg.unsafe_h)
            record_all = {"pos": lambda m, t, ens: ens.positions.copy() if m > 0 else None}
            coarse_res = simulate(coarse_cfg, model, observers=record_all,
                                  noise=_CoarseNoise(base, ratio))
            fine_cfg = SchemeConfig(
                scheme="euler", h=h_ref, steps=steps * ratio,
                n_particles=cfg.sim_n, seed=cfg.sim_seed,
                init_mean=cfg.init_mean, init_std=cfg.init_std,
                unsafe_h=cfg.unsafe_h)
            record_coarse_times = {
                "pos": lambda m, t, ens, ratio=ratio: (
                    ens.positions.copy() if (m > 0 and m % ratio == 0) else None)}
            fine_res = simulate(fine_cfg, model, observers=record_coarse_times,
                                noise=base)
            err = strong_error(np.asarray(coarse_res.observations["pos"]),
                               np.asarray(fine_res.observations["pos"]))
            rows.append(StrongOrderRow(
                scheme=scheme, n=cfg.sim_n, h=h, h_ref=h_ref, t=t_final,
                seed=cfg.sim_seed, strong_error=err))
    slopes = {}
    for scheme in cfg.sim_scheme:
        pts = [(r.h, r.strong_error) for r in rows
               if r.scheme == scheme and r.strong_error > 0]
        if len(pts) >= 2:
            slopes[scheme] = regression_slope(pts)
    return StrongOrderResult(rows=rows, slopes=slopes)


@dataclass(frozen=True)
class VariationDecayResult:
    summaries: list[VariationDecaySummary]
    offdiag_n_power: float | None


def run_variation_decay(cfg: ExperimentConfig, model: ModelSpec | None = None,
                        ) -> VariationDecayResult:
    """First-variation decay diagnostics over an N sweep.

    Fits the power of N in the off-diagonal moment sum at the final
    requested time across ``var.n_list``.
    """
    model = model or build_model_from_config(cfg)
    summaries = [
        variation_decay_summary(
            model, mc_samples=cfg.var_samples, n=n, p=cfg.var_p,
            taus=cfg.var_taus, h=cfg.var_h, seed=cfg.sim_seed,
            init_mean=cfg.init_mean, init_std=cfg.init_std)
        for n in cfg.var_n_list
    ]
    power = None
    pts = [(s.n, s.offdiag_sums[-1]) for s in summaries if s.offdiag_sums[-1] > 0]
    if len(pts) >= 2:
        power = regression_slope(pts)[0]
    return VariationDecayResult(summaries=summaries, offdiag_n_power=power)


def run_simulate(cfg: ExperimentConfig, model: ModelSpec | None = None,
                 ) -> list[dict]:
    """Single run per (scheme, h) with a moment trace every ``trace.every`` steps."""
    model = model or build_model_from_config(cfg)
    t_final = cfg.sim_t[0]
    rows: list[dict] = []
    for h in cfg.sim_h:
        steps = int(round(t_final / h))
        for scheme in cfg.sim_scheme:
            sim_cfg = SchemeConfig(
                scheme=scheme, h=h, steps=steps, n_particles=cfg.sim_n,
                seed=cfg.sim_seed, init_mean=cfg.init_mean,
                init_std=cfg.init_std, unsafe_h=cfg.unsafe_h)
            every = max(cfg.trace_every, 1)

            def trace(m, t, ens, every=every, steps=steps):
                if m % every == 0 or m == steps:
                    x = ens.positions
                    return (m, t, float(x.mean()), empirical_moment(x, 2),
                            empirical_moment(x, 4))
                return None

            result = simulate(sim_cfg, model, observers={"trace": trace})
            for m, t, mean, m2, m4 in result.observations["trace"]:
                rows.append({"scheme": scheme, "N": cfg.sim_n, "h": h, "T": t,
                             "seed": cfg.sim_seed, "mean": mean, "m2": m2, "m4": m4})
    return rows


# ---------------------------------------------------------------------------
# CSV emission

_STATIONARY_HEADER = ["scheme", "N", "h", "T", "seed", "a", "b", "nbins",
                      "entropy_error", "l2_error"]


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_rows(header: list[str], rows: list[list], path) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_render(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def emit_csv(reports: list[ErrorReport], path) -> None:
    """Write density-error reports with the pinned stationary-error schema."""
    rows = [[r.scheme, r.n, r.h, r.t, r.seed, r.a, r.b, r.nbins,
             r.entropy_error, r.l2_error] for r in reports]
    _write_rows(_STATIONARY_HEADER, rows, path)


def emit_weak_order_csv(result: WeakOrderResult, path) -> None:
    header = ["scheme", "N", "h", "T", "seed", "replicates", "reference",
              "values", "weak_value", "reference_value", "weak_error",
              "exact_chain_error", "fitted_slope"]
    rows = []
    for r in result.rows:
        fit = result.slopes.get((r.scheme, r.t))
        rows.append([r.scheme, r.n, r.h, r.t, r.seed, r.replicates,
                     r.reference_kind, r.values_kind, r.weak_value,
                     r.reference_value, r.weak_error, r.exact_chain_error,
                     fit[0] if fit else None])
    _write_rows(header, rows, path)


def emit_strong_order_csv(result: StrongOrderResult, path) -> None:
    header = ["scheme", "N", "h", "h_ref", "T", "seed", "strong_error",
              "fitted_slope"]
    rows = []
    for r in result.rows:
        fit = result.slopes.get(r.scheme)
        rows.append([r.scheme, r.n, r.h, r.h_ref, r.t, r.seed, r.strong_error,
                     fit[0] if fit else None])
    _write_rows(header, rows, path)


def emit_poc_csv(result: PocResult, path) -> None:
    header = _STATIONARY_HEADER + ["fitted_l2_slope"]
    rows = []
    for r in result.reports:
        rows.append([r.scheme, r.n, r.h, r.t, r.seed, r.a, r.b, r.nbins,
                     r.entropy_error, r.l2_error,
                     result.l2_slopes.get(r.scheme)])
    _write_rows(header, rows, path)


def emit_variation_csv(result: VariationDecayResult, path) -> None:
    header = ["N", "p", "mc_samples", "tau", "column_sum", "offdiag_sum",
              "column_rate", "offdiag_rate", "offdiag_n_power"]
    rows = []
    for s in result.summaries:
        for tau, cs, os_ in zip(s.taus, s.column_sums, s.offdiag_sums):
            rows.append([s.n, s.p, s.mc_samples, tau, cs, os_,
                         s.column_rate, s.offdiag_rate, result.offdiag_n_power])
    _write_rows(header, rows, path)


def emit_trace_csv(rows: list[dict], path) -> None:
    header = ["scheme", "N", "h", "T", "seed", "mean", "m2", "m4"]
    _write_rows(header, [[row[k] for k in header] for row in rows], path)
