"""Command-line entry point: data ingestion, configuration, run orchestration,
and bit-stable text outputs.

Three commands cover the bundled models::

    gsbps density data.csv --binwidth 0.1 --K 20 --r 2 --out results/
    gsbps binom   data.csv --K 8 --r 2 --out results/
    gsbps negbin  data.csv --K 30 --r 2 --M 5000 --out results/

plus ``gsbps rerun results/manifest.json`` to reproduce a previous run.
Every run writes fit.csv, summary.json and manifest.json (and chain.csv with
--dump-chain) into the output directory; given the same seed and build the
fit.csv bytes are identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .basis import make_knots
from .diagnostics import density_estimate, fitted_curve, geweke, posterior_summary
from .errors import (
    DataValidationError,
    GsbpsError,
    InvalidParameterError,
    NumericFailureError,
)
from .gibbs import Chain, GsbpsConfig, run_chains
from .targets import (
    BinomialData,
    BinomialModel,
    CountSeriesData,
    HistogramData,
    NegBinModel,
    PoissonModel,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

# paper-faithful prior and chain-length defaults per command
COMMAND_DEFAULTS = {
    "density": dict(a_delta=1e-4, b_delta=1e-4, M=15000, burnin=5000),
    "binom": dict(a_delta=1e-4, b_delta=1e-4, M=15000, burnin=5000),
    "negbin": dict(a_delta=10.0, b_delta=10.0, M=5000, burnin=1000),
}
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run byte-for-byte on the same build."""

    command: str
    input_path: str
    output_dir: str
    config: GsbpsConfig
    binwidth: Optional[float]
    bins: Optional[int]
    chains: int
    dump_chain: bool
    created_utc: str
    versions: dict

    def to_json(self) -> str:
        d = asdict(self)
        d["config"] = asdict(self.config)
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        d["config"] = GsbpsConfig(**d["config"])
        return cls(**d)


# ---------------------------------------------------------------------------
# CSV ingestion


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as err:
        raise DataValidationError(f"cannot read {path}: {err}") from err
    if not rows:
        raise DataValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def _column(header, rows, name, path, required=True):
    if name not in header:
        if required:
            raise DataValidationError(f"{path}: missing required column {name!r}")
        return None
    j = header.index(name)
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        line = i + 2  # header is line 1
        if len(row) != len(header):
            raise DataValidationError(f"{path}: line {line}: ragged row")
        try:
            out[i] = float(row[j])
        except ValueError as err:
            raise DataValidationError(
                f"{path}: line {line}: non-numeric value {row[j]!r} in column {name!r}"
            ) from err
    return out


def bin_samples(
    samples: np.ndarray, binwidth: Optional[float] = None, bins: Optional[int] = None
) -> HistogramData:
    """Equal-width binning of raw samples; half-open bins, last bin closed."""
    if (binwidth is None) == (bins is None):
        raise InvalidParameterError("give exactly one of binwidth or bins")
    samples = np.asarray(samples, dtype=float)
    lo, hi = float(samples.min()), float(samples.max())
    if hi <= lo:
        raise DataValidationError("samples have zero range; cannot bin")
    if binwidth is not None:
        if binwidth <= 0:
            raise InvalidParameterError(f"binwidth must be positive, got {binwidth}")
        n = max(1, math.ceil((hi - lo) / binwidth - 1e-9))
    else:
        if bins < 1:
            raise InvalidParameterError(f"bins must be >= 1, got {bins}")
        n = bins
        binwidth = (hi - lo) / n
    # half-open bins, last bin closed; the 1e-9 nudge keeps points that sit on
    # a bin edge (up to float rounding) in the right-hand bin
    idx = np.floor((samples - lo) / binwidth + 1e-9).astype(int)
    counts = np.bincount(np.minimum(idx, n - 1), minlength=n)
    midpoints = lo + binwidth * (np.arange(n) + 0.5)
    return HistogramData(midpoints, counts, binwidth)


def ingest_density(path, binwidth: Optional[float] = None, bins: Optional[int] = None) -> HistogramData:
    """Read raw samples (column x) or a pre-binned histogram (midpoint,count)."""
    header, rows = _read_csv(path)
    if "midpoint" in header and "count" in header:
        mids = _column(header, rows, "midpoint", path)
        counts = _column(header, rows, "count", path)
        if np.any(counts < 0):
            bad = int(np.flatnonzero(counts < 0)[0]) + 2
            raise DataValidationError(f"{path}: line {bad}: negative count")
        if len(mids) < 2:
            raise DataValidationError(f"{path}: need at least two bins")
        width = float(mids[1] - mids[0])
        return HistogramData(mids, counts, width)
    samples = _column(header, rows, "x", path)
    return bin_samples(samples, binwidth=binwidth, bins=bins)


def ingest_binom(path) -> BinomialData:
    header, rows = _read_csv(path)
    x = _column(header, rows, "x", path)
    y = _column(header, rows, "y", path)
    m = _column(header, rows, "m", path)
    return BinomialData(x, y, m)


def ingest_counts(path) -> CountSeriesData:
    header, rows = _read_csv(path)
    y = _column(header, rows, "y", path)
    x = _column(header, rows, "x", path, required=False)
    return CountSeriesData(y=y, x=x)


# ---------------------------------------------------------------------------
# model assembly


def build_model(command: str, data, K: int):
    if command == "density":
        lo, hi = data.support
        kv = make_knots(lo, hi, K)
        return PoissonModel(data, _design(data.midpoints, kv)), kv
    if command == "binom":
        kv = make_knots(float(data.x.min()), float(data.x.max()), K)
        return BinomialModel(data, _design(data.x, kv)), kv
    if command == "negbin":
        kv = make_knots(float(data.x.min()), float(data.x.max()), K)
        return NegBinModel(data, _design(data.x, kv)), kv
    raise InvalidParameterError(f"unknown command {command!r}")


def _design(xs, kv):
    from .basis import design_matrix

    return design_matrix(xs, kv)


# ---------------------------------------------------------------------------
# output writing


def _write_curve(path: Path, curve) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,estimate,lo95,hi95\n")
        for x, e, lo, hi in zip(curve.grid, curve.estimate, curve.lo95, curve.hi95):
            fh.write(
                ",".join(FLOAT_FMT % v for v in (x, e, lo, hi)) + "\n"
            )


def _write_chain(path: Path, chain: Chain) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(chain.names) + "\n")
        for row in chain.draws:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def _summarize(command, chain: Chain, n_obs, runtime, n_chains) -> dict:
    summ = posterior_summary(chain)
    try:
        z = geweke(chain)
        pass_rate = float(np.mean([abs(v) < 1.96 for v in z.values()]))
    except InvalidParameterError:  # chain too short for the Geweke windows
        z, pass_rate = {}, None
    hyper = {}
    for name in ("lambda", "delta", "rho"):
        if name in chain.names:
            s = summ[name]
            hyper[name] = {
                "mean": s.mean, "sd": s.sd, "q2_5": s.q2_5, "q50": s.q50, "q97_5": s.q97_5,
            }
    return {
        "command": command,
        "seed": chain.config.seed,
        "runtime_seconds": runtime,
        "n_observations": int(n_obs),
        "chains": int(n_chains),
        "config": asdict(chain.config),
        "hyperparameters": hyper,
        "geweke_z": {k: float(v) for k, v in z.items()},
        "geweke_pass_rate": pass_rate,
    }


def _pool(chains: list[Chain]) -> Chain:
    """Post-burn-in draws of several chains as one burned-in pseudo-chain."""
    rows = np.vstack([c.post_burnin() for c in chains])
    cfg = replace(chains[0].config, M=rows.shape[0], burnin=0)
    return Chain(
        rows,
        chains[0].names,
        cfg,
        np.concatenate([c.logpost_trace[c.config.burnin :] for c in chains]),
        np.concatenate([c.ars_eval_counts[c.config.burnin :] for c in chains]),
        sum(c.wall_time for c in chains),
    )


def _curve_for(command, chain, kv, data):
    if command == "density":
        raw = fitted_curve(chain, kv, "log")
        return density_estimate(raw, data.support)
    if command == "binom":
        return fitted_curve(chain, kv, "logit")
    return fitted_curve(chain, kv, "log")


# ---------------------------------------------------------------------------
# argument parsing


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="input CSV path")
    p.add_argument("--K", type=int, default=20, help="basis dimension (default 20)")
    p.add_argument("--r", type=int, default=2, choices=(2, 3), help="penalty order")
    p.add_argument("--M", type=int, default=None, help="chain length")
    p.add_argument("--burnin", type=int, default=None, help="burn-in length")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--adelta", type=float, default=None, help="delta prior shape")
    p.add_argument("--bdelta", type=float, default=None, help="delta prior rate")
    p.add_argument("--nu", type=float, default=2.0)
    p.add_argument("--arho", type=float, default=1e-4, help="rho prior shape (negbin)")
    p.add_argument("--brho", type=float, default=1e-4, help="rho prior rate (negbin)")
    p.add_argument("--lambda0", type=float, default=1.0, help="initial penalty parameter")
    p.add_argument("--grid-size", type=int, default=100, help="Griddy-Gibbs grid points")
    p.add_argument("--cf", type=float, default=float(np.log(0.01)), help="grid tail threshold")
    p.add_argument("--ars-c", type=float, default=2.0, help="hull half-width in sigmas")
    p.add_argument("--ars-L", type=int, default=5, help="initial hull abscissae")
    p.add_argument("--eps", type=float, default=1e-6, help="penalty ridge perturbation")
    p.add_argument("--out", default="gsbps_out", help="output directory")
    p.add_argument("--chains", type=int, default=1, help="independent chains")
    p.add_argument("--dump-chain", action="store_true", help="also write chain.csv")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsbps", description="Gibbs sampler for Bayesian P-splines"
    )
    parser.add_argument("--version", action="version", version=f"gsbps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_density = sub.add_parser("density", help="Poisson histogram smoothing")
    _add_sampler_flags(p_density)
    p_density.add_argument("--binwidth", type=float, default=None, help="bin width for raw samples")
    p_density.add_argument("--bins", type=int, default=None, help="bin count for raw samples")

    p_binom = sub.add_parser("binom", help="Binomial regression (columns x,y,m)")
    _add_sampler_flags(p_binom)

    p_negbin = sub.add_parser("negbin", help="Negative-Binomial count smoothing (column y)")
    _add_sampler_flags(p_negbin)

    p_rerun = sub.add_parser("rerun", help="reproduce a run from its manifest.json")
    p_rerun.add_argument("manifest", help="path to manifest.json")
    return parser


def _config_from_args(command: str, args) -> GsbpsConfig:
    d = COMMAND_DEFAULTS[command]
    return GsbpsConfig(
        K=args.K,
        r=args.r,
        M=args.M if args.M is not None else d["M"],
        burnin=args.burnin if args.burnin is not None else d["burnin"],
        eps=args.eps,
        nu=args.nu,
        a_delta=args.adelta if args.adelta is not None else d["a_delta"],
        b_delta=args.bdelta if args.bdelta is not None else d["b_delta"],
        a_rho=args.arho,
        b_rho=args.brho,
        lambda0=args.lambda0,
        ars_c=args.ars_c,
        ars_L=args.ars_L,
        grid_size=args.grid_size,
        c_f=args.cf,
        seed=args.seed,
    )


# ---------------------------------------------------------------------------
# run orchestration


def execute(manifest: RunManifest) -> int:
    command, cfg = manifest.command, manifest.config
    if command == "density":
        data = ingest_density(manifest.input_path, manifest.binwidth, manifest.bins)
        n_obs = len(data.counts)
    elif command == "binom":
        data = ingest_binom(manifest.input_path)
        n_obs = len(data.y)
    else:
        data = ingest_counts(manifest.input_path)
        n_obs = len(data.y)
    model, kv = build_model(command, data, cfg.K)

    start = time.perf_counter()
    chains = run_chains(model, cfg, n_chains=manifest.chains)
    runtime = time.perf_counter() - start

    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    for i, chain in enumerate(chains):
        target_dir = out if manifest.chains == 1 else out / f"chain_{i:02d}"
        target_dir.mkdir(parents=True, exist_ok=True)
        _write_curve(target_dir / "fit.csv", _curve_for(command, chain, kv, data))
        summary = _summarize(command, chain, n_obs, chain.wall_time, 1)
        (target_dir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
        )
        if manifest.dump_chain:
            _write_chain(target_dir / "chain.csv", chain)

    if manifest.chains > 1:  # merged outputs from the pooled draws
        pooled = _pool(chains)
        _write_curve(out / "fit.csv", _curve_for(command, pooled, kv, data))
        summary = _summarize(command, pooled, n_obs, runtime, manifest.chains)
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
        )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return EXIT_OK


def run(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "rerun":
            manifest = RunManifest.from_json(Path(args.manifest).read_text(encoding="utf-8"))
            manifest = replace(
                manifest, created_utc=_now(), versions=_versions()
            )
            return execute(manifest)
        binwidth = getattr(args, "binwidth", None)
        bins = getattr(args, "bins", None)
        manifest = RunManifest(
            command=args.command,
            input_path=str(Path(args.input).resolve()),
            output_dir=str(Path(args.out)),
            config=_config_from_args(args.command, args),
            binwidth=binwidth,
            bins=bins,
            chains=args.chains,
            dump_chain=args.dump_chain,
            created_utc=_now(),
            versions=_versions(),
        )
        return execute(manifest)
    except (NumericFailureError, GsbpsError, OSError, ValueError) as err:
        print(
            json.dumps({"error": type(err).__name__, "message": str(err)}),
            file=sys.stderr,
        )
        if isinstance(err, (DataValidationError, OSError)):
            return EXIT_DATA
        if isinstance(err, InvalidParameterError):
            return EXIT_USAGE
        return EXIT_NUMERIC


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _versions() -> dict:
    return {
        "gsbps": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    }


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
