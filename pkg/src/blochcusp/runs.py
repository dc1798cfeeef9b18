"""Run configuration, per-method observable tables and the figure recipes.

Everything here returns plain dicts of numpy columns so the CLI only has to
write them out; tests call the same functions directly.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, ideal
from .errors import ConfigError
from .exact import quench_observables
from .io import write_series_csv
from .lattice import IdealModelParams, LatticeConfig, TimeSeries, derive_params
from .truncated import build_truncated, evolve_truncated_at

METHODS = ("exact", "truncated", "ideal")
N_VALUES = (1, 2, 3)
FIG1_SCENARIOS = {"a": (401, 80, 1.5), "b": (301, 75, 2.0), "c": (201, 50, 12.0)}


@dataclass
class RunConfig:
    """Resolved settings for one ``quench``/``truncated``/``ideal`` run.

    The scenario is either a ring (``n``, ``k``, ``u``, ``j``) or, for the
    truncated and ideal methods only, a bare ratio ``g_over_delta`` in reduced
    units (delta = 1). Duration is ``periods`` (units of T) or ``t_max``
    (absolute), never both.
    """

    n: int | None = None
    k: int | None = None
    u: float | None = None
    j: int = 0
    g_over_delta: float | None = None
    periods: float | None = None
    t_max: float | None = None
    samples_per_period: int = 100
    methods: tuple = ("exact", "ideal")
    m: int | None = None
    out: str = "run.csv"
    serial: bool = False
    cusps: bool = False

    @classmethod
    def keys(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        unknown = set(data) - cls.keys()
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if isinstance(self.methods, str):
            self.methods = tuple(m.strip() for m in self.methods.split(",") if m.strip())
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ConfigError("select at least one method")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods listed twice")
        ring = [self.n, self.k, self.u]
        has_ring = all(v is not None for v in ring)
        if any(v is not None for v in ring) and not has_ring:
            raise ConfigError("a ring scenario needs all of n, k and u")
        if has_ring and self.g_over_delta is not None:
            raise ConfigError("give either the ring (n, k, u) or g_over_delta, not both")
        if not has_ring and self.g_over_delta is None:
            raise ConfigError("no scenario: give n, k, u or g_over_delta")
        if not has_ring and "exact" in self.methods:
            raise ConfigError("the exact method needs a ring scenario (n, k, u)")
        if has_ring:
            self.scenario()  # LatticeConfig validation
        if self.periods is not None and self.t_max is not None:
            raise ConfigError("give either periods or t_max, not both")
        if self.periods is None and self.t_max is None:
            self.periods = 5.0
        duration = self.periods if self.periods is not None else self.t_max
        if not (math.isfinite(duration) and duration > 0):
            raise ConfigError("duration must be positive")
        if int(self.samples_per_period) != self.samples_per_period or self.samples_per_period < 2:
            raise ConfigError("samples_per_period must be an integer >= 2")
        self.samples_per_period = int(self.samples_per_period)
        if self.cusps and self.samples_per_period < analysis.MIN_SAMPLES_PER_PERIOD:
            raise ConfigError(f"cusp detection needs samples_per_period >= {analysis.MIN_SAMPLES_PER_PERIOD}")
        if "truncated" in self.methods:
            if self.m is None:
                raise ConfigError("the truncated method needs the truncation M (m)")
            if int(self.m) != self.m or self.m < 1:
                raise ConfigError("m must be a positive integer")
            self.m = int(self.m)
        return self

    def scenario(self) -> LatticeConfig | None:
        if self.n is None:
            return None
        return LatticeConfig(self.n, self.k, self.u, self.j)

    def params(self) -> IdealModelParams:
        cfg = self.scenario()
        if cfg is not None:
            return derive_params(cfg)
        return IdealModelParams.from_coupling(self.g_over_delta, 1.0)

    def times(self) -> np.ndarray:
        period = self.params().heisenberg_time
        t_end = self.periods * period if self.periods is not None else self.t_max
        return time_grid(period, t_end, self.samples_per_period)

    def output_paths(self) -> dict[str, Path]:
        out = Path(self.out)
        if len(self.methods) == 1:
            return {self.methods[0]: out}
        return {m: out.with_name(f"{out.stem}_{m}{out.suffix or '.csv'}") for m in self.methods}


def time_grid(period: float, t_end: float, samples_per_period: int) -> np.ndarray:
    """Uniform grid on ``[0, t_end]`` with ``samples_per_period`` steps per period."""
    steps = max(1, int(round(t_end / period * samples_per_period)))
    return np.linspace(0.0, t_end, steps + 1)


def _with_time(t, params, cols):
    return {"t": t, "t_over_T": t / params.heisenberg_time, **cols}


def exact_columns(cfg: LatticeConfig, t) -> dict:
    obs = quench_observables(cfg, t, n_values=N_VALUES)
    cols = {name: series.values for name, series in obs.items()}
    return _with_time(np.asarray(t, float), derive_params(cfg), cols)


def ideal_columns(params: IdealModelParams, t) -> dict:
    t = np.asarray(t, float)
    p_i, p_r, p_n = ideal.populations_closed_form(params, t, N_VALUES)
    cols = {"P_i": p_i, "P_r": p_r, "P_R": ideal.right_mover_closed_form(params, t)}
    cols.update({f"P_{n}": p for n, p in p_n.items()})
    cols["psi0"] = ideal.psi0_closed_form(params, t)
    cols["S"] = ideal.s_closed_form(params, t).value
    return _with_time(t, params, cols)


def truncated_columns(params: IdealModelParams, m_levels: int, t) -> dict:
    t = np.asarray(t, float)
    traj = evolve_truncated_at(build_truncated(params, m_levels), t)
    psi0 = traj.psi0
    weights = np.abs(traj.psi) ** 2
    others = weights.sum(axis=1) - weights[:, m_levels]
    cols = {
        "P_i": np.abs(1 + psi0) ** 2 / 4,
        "P_r": np.abs(1 - psi0) ** 2 / 4,
        "P_R": (np.abs(1 + psi0) ** 2 + others) / 4,
    }
    for n in N_VALUES:
        if n <= m_levels:
            cols[f"P_{n}"] = weights[:, m_levels + n] / 4
    cols["psi0"] = psi0
    cols["S"] = traj.s_values
    return _with_time(t, params, cols)


def method_columns(config: RunConfig, method: str, t=None) -> dict:
    t = config.times() if t is None else t
    if method == "exact":
        return exact_columns(config.scenario(), t)
    if method == "ideal":
        return ideal_columns(config.params(), t)
    if method == "truncated":
        return truncated_columns(config.params(), config.m, t)
    raise ConfigError(f"unknown method {method!r}")


def run_metadata(config: RunConfig, method: str) -> dict:
    return {
        "method": method,
        "config": dataclasses.asdict(config) | {"methods": list(config.methods)},
        "params": dataclasses.asdict(config.params()),
    }


def execute(config: RunConfig) -> dict[str, tuple[Path, dict]]:
    """Compute every requested method and write one CSV per method.

    Methods run in a thread pool unless ``config.serial``; each file is
    written atomically, and the bytes depend only on the config.
    """
    config.validate()
    t = config.times()
    paths = config.output_paths()

    def one(method):
        cols = method_columns(config, method, t)
        path = write_series_csv(paths[method], cols, run_metadata(config, method),
                                title=f"blochcusp {method}")
        return method, (path, cols)

    if config.serial or len(config.methods) == 1:
        results = [one(m) for m in config.methods]
    else:
        with ThreadPoolExecutor(max_workers=len(config.methods)) as pool:
            results = list(pool.map(one, config.methods))
    return dict(results)


@dataclass
class CuspSummary:
    label: str
    report: analysis.CuspReport
    period: float
    extra: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        rep = self.report
        head = f"{self.label}: {len(rep)} cusps"
        if rep.spacings:
            head += (f", mean spacing {rep.mean_spacing / self.period:.5f} T,"
                     f" fundamental spacing {rep.fundamental_spacing / self.period:.5f} T")
        out = [head]
        for i, (tc, tip) in enumerate(zip(rep.cusp_times, rep.tip_values)):
            res = f"  residual {rep.envelope_residuals[i]:.4f}" if rep.envelope_residuals else ""
            out.append(f"  t = {tc:.6g} ({tc / self.period:.4f} T)  value {tip:.5f}{res}")
        return out


def cusp_summaries(cols: dict, params: IdealModelParams, names=("P_i", "P_r", "P_R")) -> list[CuspSummary]:
    signs = {"P_i": 1, "P_r": -1, "P_R": 1}
    out = []
    for name in names:
        if name not in cols:
            continue
        series = TimeSeries(cols["t"], cols[name], label=name)
        rep = analysis.detect_cusps(series, params, envelope_sign=signs.get(name))
        out.append(CuspSummary(name, rep, params.heisenberg_time))
    return out


# figure recipes; each writes its CSVs under ``out_dir`` and returns summary lines


def figure1(out_dir: Path, serial: bool = False) -> list[str]:
    lines = []
    for tag, (n, k, u) in FIG1_SCENARIOS.items():
        cfg = RunConfig(n=n, k=k, u=u, periods=6, methods=("exact", "ideal"),
                        out=str(out_dir / f"fig1{tag}.csv"), serial=serial).validate()
        res = execute(cfg)
        params = cfg.params()
        lines.append(f"fig1({tag}) N={n} k_i={k} U={u}: T={params.heisenberg_time:.6g} theta={params.theta:.6g}")
        for summary in cusp_summaries(res["exact"][1], params, ("P_i", "P_r")):
            lines.extend("  " + s for s in summary.lines())
    return lines


def figure4(out_dir: Path, serial: bool = False) -> list[str]:
    cfg = RunConfig(g_over_delta=0.125, m=10, periods=5, samples_per_period=400,
                    methods=("truncated", "ideal"), out=str(out_dir / "fig4.csv"), serial=serial).validate()
    res = execute(cfg)
    params = cfg.params()
    lines = [f"fig4 M=10 g/delta=0.125: per-period mean of S vs closed form"]
    for r, (avg, pred) in enumerate(period_average_s(res["truncated"][1], params)):
        lines.append(f"  r={r}: |<S>|={abs(avg):.5f} vs {abs(pred):.5f}, "
                     f"arg diff {abs(np.angle(avg / pred)):.4f} rad")
    return lines


def period_average_s(cols: dict, params: IdealModelParams) -> list[tuple[complex, complex]]:
    """Mean of S over each complete period, paired with the closed-form value."""
    t, s = cols["t"], cols["S"]
    T = params.heisenberg_time
    out = []
    for r in range(int(math.floor(t[-1] / T + 1e-9))):
        sel = (t > r * T) & (t < (r + 1) * T)
        pred = ideal.s_closed_form(params, (r + 0.5) * T).value
        out.append((complex(np.mean(s[sel])), complex(pred)))
    return out


def figure5(out_dir: Path, serial: bool = False) -> list[str]:
    params = IdealModelParams.from_coupling(0.5, 1.0)
    t = time_grid(params.heisenberg_time, 2 * params.heisenberg_time, 1000)
    ref = np.abs(ideal.psi0_closed_form(params, t)) ** 2
    lines = ["fig5 g/delta=0.5: max | |psi0_M|^2 - |psi0_inf|^2 | over two periods"]
    for m in (5, 10, 20):
        cols = truncated_columns(params, m, t)
        abs2 = np.abs(cols["psi0"]) ** 2
        write_series_csv(out_dir / f"fig5_M{m}.csv",
                         {"t": t, "t_over_T": t / params.heisenberg_time,
                          "abs2_psi0": abs2, "abs2_psi0_ideal": ref},
                         {"params": dataclasses.asdict(params), "m": m}, title="blochcusp fig5")
        lines.append(f"  M={m}: {np.abs(abs2 - ref).max():.4f}")
    return lines


def figure6(out_dir: Path, serial: bool = False) -> list[str]:
    lines = ["fig6 exact vs closed form over 6 periods"]
    for tag, (n, k, u) in FIG1_SCENARIOS.items():
        cfg = RunConfig(n=n, k=k, u=u, periods=6, methods=("exact", "ideal"),
                        out=str(out_dir / f"fig6{tag}.csv"), serial=serial).validate()
        res = execute(cfg)
        ex, idl = res["exact"][1], res["ideal"][1]
        for name in ("P_i", "P_r"):
            rep = analysis.compare_series(TimeSeries(ex["t"], ex[name]), TimeSeries(idl["t"], idl[name]))
            lines.append(f"  ({tag}) {name}: max {rep.max_abs_error:.4f} rms {rep.rms_error:.4f}")
    return lines


def figure7(out_dir: Path, serial: bool = False) -> list[str]:
    n, k, u = FIG1_SCENARIOS["c"]
    cfg = RunConfig(n=n, k=k, u=u, periods=6, methods=("exact", "ideal"),
                    out=str(out_dir / "fig7.csv"), serial=serial).validate()
    res = execute(cfg)
    params = cfg.params()
    ex, idl = res["exact"][1], res["ideal"][1]
    lines = ["fig7 scenario (201, 50, 12)"]
    for name in ("P_1", "P_R"):
        rep = analysis.compare_series(TimeSeries(ex["t"], ex[name]), TimeSeries(idl["t"], idl[name]))
        lines.append(f"  {name}: max error {rep.max_abs_error:.4f}")
    for summary in cusp_summaries(ex, params, ("P_R",)):
        lines.extend("  " + s for s in summary.lines())
    return lines


FIGURES = {"1": figure1, "4": figure4, "5": figure5, "6": figure6, "7": figure7}
