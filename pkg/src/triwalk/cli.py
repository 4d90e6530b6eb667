"""
Command-line driver.

Subcommands ``evolve``, ``classify``, ``spectrum``, ``exponent`` and
``classical`` write CSV/JSON files into ``--out`` (default: current
directory).  Every file starts with the artifact version and the parsed
configuration; CSV files carry them as ``#`` comment lines.

Exit codes: 0 success, 2 invalid input, 3 internal consistency failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .classical import classical_series, log_growth_slope
from .coin import (
    FAST_DECAY_STATE,
    SYMMETRIC_STATE,
    CoinMatrix,
    classify,
    format_complex,
    parse_coin,
    parse_complex,
)
from .engine import BACKEND, WalkRun, evolve, step
from .lattice import full_distribution, new_localized, site_to_physical
from .recurrence import (
    DEFAULT_WINDOW,
    InsufficientDataError,
    fit_decay_exponent,
    polya_estimate,
    verdict,
)
from .spectral import (
    build_dispersion_surface,
    char_poly_residuals,
    crec_dispersion_residual,
    dispersion_consistency,
    find_stationary_points,
    grover_dispersion_residual,
)

log = logging.getLogger("triwalk")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INCONSISTENT = 3
IDENTITY_TOL = 1e-8


class InvalidInput(Exception):
    pass


@dataclasses.dataclass
class ExperimentConfig:
    command: str
    coin: str = "grover"
    init: str = "symmetric"
    steps: Optional[int] = None
    grid: int = 128
    fit_window: tuple[int, int] = DEFAULT_WINDOW
    snapshot: Optional[int] = None
    format: str = "csv"
    out: str = "."
    seed: Optional[int] = None
    threshold: float = 0.0
    no_timestamp: bool = False

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["fit_window"] = list(self.fit_window)
        return d


# -- parsing ------------------------------------------------------------------

def parse_chirality(text: str) -> np.ndarray:
    """Preset name or comma-separated complex entries, normalized if needed."""
    name = text.strip().lower()
    if name == "symmetric":
        return SYMMETRIC_STATE.copy()
    if name == "fastdecay":
        return FAST_DECAY_STATE.copy()
    try:
        psi = np.array([parse_complex(p) for p in text.split(",")], dtype=np.complex128)
    except ValueError as exc:
        raise InvalidInput(f"cannot parse chirality {text!r}: {exc}") from None
    if psi.shape != (3,):
        raise InvalidInput(f"chirality needs 3 entries, got {psi.size}")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidInput("chirality must be nonzero")
    if abs(norm - 1.0) > 1e-9:
        log.warning("chirality %s has norm %.6g; normalizing", text, norm)
    return psi / norm


def load_coin(text: str, seed: Optional[int]) -> CoinMatrix:
    """Coin preset, 9 entries, or ``@file.json`` holding a list of 9 entries."""
    spec: Any = text
    if text.startswith("@"):
        try:
            data = json.loads(Path(text[1:]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read coin file: {exc}") from None
        spec = data["coin"] if isinstance(data, dict) else data
    try:
        return parse_coin(spec, seed=seed)
    except (ValueError, KeyError) as exc:
        raise InvalidInput(str(exc)) from None


def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("fit window must be 'tmin,tmax'") from None
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError("fit window needs 0 < tmin < tmax")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values for any option")
    common.add_argument("--coin", help="grover | crec | identity | perm:<sigma> | random[:seed] | 9 entries | @file.json")
    common.add_argument("--init", help="symmetric | fastdecay | 'a,b,c' (complex entries)")
    common.add_argument("--steps", type=int, help="number of time steps T")
    common.add_argument("--grid", type=int, help="momentum grid size N")
    common.add_argument("--fit-window", type=_window, help="'tmin,tmax' for the exponent fit")
    common.add_argument("--snapshot", type=int, help="time at which to dump the full distribution")
    common.add_argument("--threshold", type=float, help="emit distribution cells with p above this")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--no-timestamp", action="store_true", default=None,
                        help="omit the generation time so outputs are byte-reproducible")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="triwalk",
        description="Three-state quantum walks on the triangular lattice.",
    )
    parser.add_argument("--version", action="version", version=f"triwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("evolve", "simulate and write p0(t) and an optional distribution snapshot"),
        ("classify", "classify a coin by its zero-diagonal structure"),
        ("spectrum", "dispersion surface, identities and stationary points"),
        ("exponent", "fit the decay exponent of p0(t) and check the verdict"),
        ("classical", "exact classical 3-way walk return series"),
    ]:
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


_DEFAULT_STEPS = {"evolve": 30, "exponent": 300, "classical": 3000}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config: {exc}") from None
        values.pop("command", None)
        if "fit_window" in values:
            values["fit_window"] = tuple(values["fit_window"])
        if isinstance(values.get("coin"), list):
            values["coin"] = ",".join(map(str, values["coin"]))
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    unknown = set(values) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(command=args.command, **values)
    if cfg.steps is None:
        cfg.steps = _DEFAULT_STEPS.get(cfg.command)
    return cfg


# -- output -------------------------------------------------------------------

def _provenance(cfg: ExperimentConfig) -> dict:
    meta = {"triwalk_version": __version__, "config": cfg.to_dict()}
    if not cfg.no_timestamp:
        meta["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def _fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, cfg: ExperimentConfig, header: Sequence[str], rows) -> Path:
    meta = _provenance(cfg)
    lines = [f"# triwalk {meta['triwalk_version']}",
             "# config: " + json.dumps(meta["config"])]
    if "generated" in meta:
        lines.append(f"# generated: {meta['generated']}")
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path: Path, cfg: ExperimentConfig, result: Any) -> Path:
    doc = _provenance(cfg)
    doc["result"] = result
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def write_table(cfg: ExperimentConfig, stem: str, header: Sequence[str], rows) -> Path:
    out = Path(cfg.out)
    rows = list(rows)
    if cfg.format == "json":
        records = [dict(zip(header, r)) for r in rows]
        return write_json(out / f"{stem}.json", cfg, records)
    return write_csv(out / f"{stem}.csv", cfg, header, rows)


# -- commands -----------------------------------------------------------------

def cmd_evolve(cfg: ExperimentConfig) -> int:
    coin = load_coin(cfg.coin, cfg.seed)
    psi = parse_chirality(cfg.init)
    if cfg.steps is None or cfg.steps < 1:
        raise InvalidInput("--steps must be at least 1")
    if cfg.snapshot is not None and not 0 <= cfg.snapshot <= cfg.steps:
        raise InvalidInput("--snapshot must lie in [0, steps]")
    _, series = evolve(WalkRun(coin, psi, cfg.steps))
    written = [write_table(cfg, "p0", ["t", "p0"], zip(series.times.tolist(), series.p0))]
    if cfg.snapshot is not None:
        state = new_localized(psi)
        for _ in range(cfg.snapshot):
            state = step(state, coin)
        rows = []
        for site, p in full_distribution(state, cfg.threshold):
            x, y = site_to_physical(site)
            rows.append((site.a, site.b, x, y, p))
        written.append(write_table(cfg, f"snapshot_t{cfg.snapshot}", ["a", "b", "x", "y", "p"], rows))
    drift = series.norm_drift()
    for p in written:
        print(p)
    if drift > 1e-9:
        log.error("norm drift %.3e exceeds 1e-9", drift)
        return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_classify(cfg: ExperimentConfig) -> int:
    coin = load_coin(cfg.coin, cfg.seed)
    result = classify(coin).to_dict()
    result["coin"] = coin.to_strings()
    print(json.dumps(result))
    write_json(Path(cfg.out) / "classify.json", cfg, result)
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    coin = load_coin(cfg.coin, cfg.seed)
    if cfg.grid < 16:
        raise InvalidInput("--grid must be at least 16")
    surface = build_dispersion_surface(coin, cfg.grid)
    report = find_stationary_points(surface)
    k1, k2 = np.meshgrid(surface.k1, surface.k2, indexing="ij")
    residuals = {name: float(r.max()) for name, r in char_poly_residuals(coin, k1, k2).items()}

    gnorm = surface.gradient_norms
    rows = (
        (surface.k1[a], surface.k2[b], *surface.phases[a, b], *gnorm[a, b])
        for a in range(surface.n) for b in range(surface.n)
    )
    header = ["k1", "k2", "omega1", "omega2", "omega3", "grad1", "grad2", "grad3"]
    out = Path(cfg.out)
    written = [write_csv(out / "dispersion.csv", cfg, header, rows)]
    result = {
        "coin": coin.to_strings(),
        "classification": classify(coin).to_dict(),
        "identity_residuals": residuals,
        "stationary": report.to_dict(),
        "flagged_nodes": int(surface.flagged.sum()),
    }
    label = coin.label
    if label in ("grover", "crec"):
        fn = grover_dispersion_residual if label == "grover" else crec_dispersion_residual
        result["closed_form_consistency"] = dispersion_consistency(fn, coin, min(cfg.grid, 64))
    written.append(write_json(out / "stationary.json", cfg, result))
    written.append(write_json(out / "flagged.json", cfg, surface.flagged_nodes()))
    for p in written:
        print(p)
    bad = {k: v for k, v in residuals.items() if v >= IDENTITY_TOL}
    if bad:
        log.error("characteristic-polynomial identities violated: %s", bad)
        return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_exponent(cfg: ExperimentConfig) -> int:
    coin = load_coin(cfg.coin, cfg.seed)
    psi = parse_chirality(cfg.init)
    t_min, t_max = cfg.fit_window
    if cfg.steps is None or cfg.steps < t_max:
        raise InvalidInput(f"--steps ({cfg.steps}) must reach the fit window end {t_max}")
    _, series = evolve(WalkRun(coin, psi, cfg.steps))
    classification = classify(coin)
    fit = None
    try:
        fit = fit_decay_exponent(series, t_min, t_max)
    except InsufficientDataError as exc:
        if classification.verdict.value != "TrivialGeneralizedPermutation":
            raise InvalidInput(str(exc)) from None
    polya = polya_estimate(series, fit)
    report = verdict(classification, fit, series)
    result = {
        "coin": coin.to_strings(),
        "init": [format_complex(z) for z in psi],
        "classification": classification.to_dict(),
        "exponent": fit.exponent if fit else None,
        "stderr": fit.stderr if fit else None,
        "r2": fit.r_squared if fit else None,
        "window": [t_min, t_max],
        "polya_partial": polya.partial_value,
        "horizon": polya.horizon,
        "polya_hint": polya.verdict_hint,
        "verdict": report.to_dict(),
        "norm_drift": series.norm_drift(),
    }
    print(json.dumps(result))
    write_json(Path(cfg.out) / "exponent.json", cfg, result)
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def cmd_classical(cfg: ExperimentConfig) -> int:
    if cfg.steps is None or cfg.steps < 3:
        raise InvalidInput("--steps must be at least 3")
    rows = [
        (r.t, r.p0_float, r.stirling if r.t else float("nan"),
         r.relative_error if r.t else float("nan"), r.partial_sum, r.polya_partial)
        for r in classical_series(cfg.steps)
    ]
    header = ["t", "p0_exact_float", "stirling", "relative_error", "partial_sum", "polya_partial"]
    print(write_table(cfg, "classical", header, rows))
    if cfg.steps > 300:
        log.info("S_T log-growth slope over [300, %d]: %.6f", cfg.steps,
                 log_growth_slope(300, cfg.steps))
    return EXIT_OK


COMMANDS = {
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "spectrum": cmd_spectrum,
    "exponent": cmd_exponent,
    "classical": cmd_classical,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = config_from_args(args)
        if cfg.format not in ("csv", "json"):
            raise InvalidInput(f"unknown format {cfg.format!r}")
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        log.info("kernel backend: %s", BACKEND)
        return COMMANDS[cfg.command](cfg)
    except InvalidInput as exc:
        print(f"triwalk: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
