"""Command-line entry point: field tables, densities, L-values, experiments.

Exit codes: 0 success; 1 domain error (parameters outside a module's
contract); 2 invariant violation (a computed report failed its own
consistency checks, or the self-test found a broken identity); 64 usage
(unknown flags, malformed values, missing required parameters).

Configuration precedence is flags > JSON config file (--config) > defaults,
and the resolved configuration is embedded verbatim in every artifact.
Outputs carry no timestamps and all randomness is counter-based, so a rerun
with identical arguments is byte-identical -- including under different
--threads values, since every reduction runs in a fixed order.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments as exp
from . import local
from .density import build_density, cdf
from .euler import ProductConfig, evaluate
from .fields import count_prediction, enumerate_fields, export_table, ingest_table
from .lvalues import evaluate_field, export_results
from .primes import sieve

USAGE_EXIT = 64

_DENSITY_KIND = {"C": "C_script", "K": "K_script",
                 "Cstar": "C_plain", "Kstar": "K_plain"}
_EULER_KINDS = ("F", "G", "Fstar", "Gstar")


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract is 64
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    signature: str | None = None
    X: int | None = None
    sigma: float | None = None
    z: list = field(default_factory=list)
    Y: float | None = None
    P: int | None = None
    points: int | None = None
    seed: int = 0
    infile: str | None = None
    outfile: str | None = None
    precision_bits: int = 53
    kind: str | None = None
    case: str = "I"

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["z"] = [[zr, zi] for zr, zi in self.z]
        return d

    def z_values(self) -> list[complex]:
        return [complex(zr, zi) for zr, zi in self.z]


_CONFIG_KEYS = {
    "signature": "signature", "X": "X", "x": "X", "sigma": "sigma", "z": "z",
    "Y": "Y", "y": "Y", "P": "P", "p": "P", "points": "points", "seed": "seed",
    "in": "infile", "out": "outfile", "precision-bits": "precision_bits",
    "precision_bits": "precision_bits", "kind": "kind", "case": "case",
    "threads": "threads",
}


def _parse_z(token) -> tuple[float, float]:
    if isinstance(token, (list, tuple)) and len(token) == 2:
        return float(token[0]), float(token[1])
    parts = str(token).split(",")
    try:
        if len(parts) == 1:
            return float(parts[0]), 0.0
        if len(parts) == 2:
            return float(parts[0]), float(parts[1])
    except ValueError:
        pass
    raise _Usage(f"cannot parse z value {token!r}; expected 're,im'")


def _resolve(ns: argparse.Namespace) -> RunConfig:
    file_conf: dict = {}
    if ns.config:
        raw = json.loads(Path(ns.config).read_text())
        if not isinstance(raw, dict):
            raise _Usage("config file must hold a JSON object")
        for key, value in raw.items():
            dest = _CONFIG_KEYS.get(key)
            if dest is None:
                raise _Usage(f"unknown config key {key!r}")
            if dest != "threads":
                file_conf[dest] = value
    cfg = RunConfig(command=ns.command)
    for name in ("signature", "X", "sigma", "Y", "P", "points", "seed",
                 "infile", "outfile", "precision_bits", "kind", "case"):
        flag = getattr(ns, name, None)
        value = flag if flag is not None else file_conf.get(name)
        if value is not None:
            setattr(cfg, name, value)
    z_raw = ns.z if ns.z is not None else file_conf.get("z")
    if z_raw is not None:
        if isinstance(z_raw, (str, bytes)):
            z_raw = [z_raw]
        cfg.z = [list(_parse_z(t)) for t in z_raw]
    if cfg.signature in ("plus", "minus"):
        cfg.signature = "+" if cfg.signature == "plus" else "-"
    if cfg.X is not None:
        cfg.X = int(cfg.X)
    if cfg.sigma is not None:
        cfg.sigma = float(cfg.sigma)
    if cfg.Y is not None:
        cfg.Y = float(cfg.Y)
    for name in ("P", "points", "seed", "precision_bits"):
        if getattr(cfg, name) is not None:
            setattr(cfg, name, int(getattr(cfg, name)))
    return cfg


def _need(cfg: RunConfig, *names):
    for name in names:
        if getattr(cfg, name) in (None, []):
            flag = {"infile": "--in", "outfile": "--out"}.get(name, f"--{name}")
            raise _Usage(f"{cfg.command} requires {flag}")


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _emit(cfg: RunConfig, text: str, summary: str) -> None:
    if cfg.outfile:
        Path(cfg.outfile).write_text(text if text.endswith("\n") else text + "\n")
        print(summary)
    else:
        print(text)


def _wants_csv(cfg: RunConfig) -> bool:
    return bool(cfg.outfile) and cfg.outfile.lower().endswith(".csv")


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _table(cfg: RunConfig):
    if cfg.infile:
        table = ingest_table(cfg.infile)
        if cfg.signature and table.signature != cfg.signature:
            raise ValueError(
                f"ingested table has signature {table.signature!r}, "
                f"flags asked for {cfg.signature!r}")
        return table
    _need(cfg, "signature", "X")
    return enumerate_fields(cfg.signature, cfg.X)


def _cmd_enumerate(cfg: RunConfig) -> int:
    table = _table(cfg)
    pred = count_prediction(table.signature, table.X_bound)
    if cfg.outfile:
        export_table(table, cfg.outfile)
    print(f"enumerate signature={table.signature} X={table.X_bound} "
          f"fields={len(table.fields)} "
          f"predicted={pred['main'] + pred['secondary']:.2f}")
    return 0


def _cmd_ingest(cfg: RunConfig) -> int:
    _need(cfg, "infile")
    table = ingest_table(cfg.infile)
    if cfg.outfile:
        export_table(table, cfg.outfile)
    print(f"ingest signature={table.signature} X={table.X_bound} "
          f"fields={len(table.fields)} valid=yes")
    return 0


def _cmd_density(cfg: RunConfig) -> int:
    _need(cfg, "kind")
    kind = _DENSITY_KIND.get(cfg.kind, cfg.kind)
    sigma = cfg.sigma if cfg.sigma is not None else 1.0
    grid = build_density(kind, sigma, n_points=cfg.points or 1 << 16,
                         prime_cutoff=cfg.P)
    c = cdf(grid)
    text = _csv("x,value", zip(grid.xs().tolist(), grid.values.tolist()))
    _emit(cfg, text, f"density kind={kind} sigma={sigma:g} "
                     f"mass={grid.mass():.9f} points={len(grid.values)} "
                     f"median={c.quantile(0.5):.6f}")
    return 0


def _cmd_euler(cfg: RunConfig) -> int:
    _need(cfg, "kind", "sigma")
    if cfg.kind not in _EULER_KINDS:
        raise _Usage(f"--kind must be one of {_EULER_KINDS}")
    z = cfg.z_values()[0] if cfg.z else 0j
    pconf = None
    if cfg.P is not None or cfg.precision_bits != 53:
        pconf = ProductConfig(prime_cutoff=cfg.P or 100_000,
                              precision_bits=cfg.precision_bits)
    res = evaluate(cfg.kind, cfg.sigma, z, pconf)
    doc = {"experiment": "euler", "config": cfg.as_dict(),
           "kind": cfg.kind, "sigma": cfg.sigma, "z": [z.real, z.imag],
           "value": [res.value.real, res.value.imag],
           "tail_bound": res.tail_bound}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    _emit(cfg, text, f"euler kind={cfg.kind} sigma={cfg.sigma:g} "
                     f"value={res.value:.12g} tail={res.tail_bound:.3g}")
    return 0


def _cmd_lvalue(cfg: RunConfig) -> int:
    table = _table(cfg)
    sigma = cfg.sigma if cfg.sigma is not None else 1.0
    z = cfg.z_values()[0] if cfg.z else complex(1.0)
    Y = cfg.Y if cfg.Y is not None else 5e3
    results = [evaluate_field(f, sigma, z=z, case=cfg.case, Y=Y)
               for f in table.fields]
    if cfg.outfile:
        export_results(results, cfg.outfile)
        print(f"lvalue fields={len(results)} sigma={sigma:g} z={z:g} Y={Y:g}")
    else:
        vals = np.array([r.value for r in results])
        print(f"lvalue fields={len(results)} sigma={sigma:g} z={z:g} "
              f"mean={vals.mean():.12g}")
    return 0


def _cmd_moments(cfg: RunConfig) -> int:
    table = _table(cfg)
    _need(cfg, "sigma")
    zs = cfg.z_values() or [0j, complex(1.0)]
    rep = exp.moment_experiment(table, cfg.sigma, zs, case=cfg.case,
                                Y=cfg.Y or exp.DEFAULT_TABLE_Y)
    if _wants_csv(cfg):
        text = _csv("z_re,z_im,empirical_re,empirical_im,main_re,main_im,"
                    "secondary_re,secondary_im,abs_gap",
                    ((r.z.real, r.z.imag, r.empirical.real, r.empirical.imag,
                      r.predicted_main.real, r.predicted_main.imag,
                      r.predicted_secondary.real, r.predicted_secondary.imag,
                      r.abs_gap) for r in rep.rows))
    else:
        text = exp.report_json(rep, "moments", cfg.as_dict())
    worst = max(r.abs_gap for r in rep.rows) / max(rep.field_count, 1)
    _emit(cfg, text, f"moments sigma={cfg.sigma:g} case={cfg.case} "
                     f"fields={rep.field_count} worst_gap/n={worst:.4f} "
                     f"rate={rep.asymptotic_rate:.3g}")
    return 0


def _cmd_cdf(cfg: RunConfig) -> int:
    table = _table(cfg)
    sigma = cfg.sigma if cfg.sigma is not None else 1.0
    kind = _DENSITY_KIND.get(cfg.kind or "C", cfg.kind)
    rep = exp.cdf_experiment(table, sigma, kind, Y=cfg.Y or exp.DEFAULT_TABLE_Y)
    text = exp.report_json(rep, "cdf", cfg.as_dict())
    _emit(cfg, text, f"cdf kind={kind} sigma={sigma:g} "
                     f"distance={rep.kolmogorov_distance:.4f} "
                     f"refined={rep.refined_distance:.4f} "
                     f"rate={rep.asymptotic_rate:.3g}")
    return 0


def _cmd_classnumber(cfg: RunConfig) -> int:
    table = _table(cfg)
    rep = exp.class_number_experiment(table, Y=cfg.Y or exp.DEFAULT_TABLE_Y)
    if _wants_csv(cfg):
        text = _csv("r,empirical,predicted_main,predicted_secondary",
                    ((r.r, r.empirical, r.predicted_main,
                      r.predicted_secondary) for r in rep.rows))
    else:
        text = exp.report_json(rep, "classnumber", cfg.as_dict())
    _emit(cfg, text, f"classnumber signature={rep.signature} X={rep.X} "
                     f"total={rep.total:.2f} prediction={rep.prediction:.2f} "
                     f"ratio={rep.ratio:.4f}")
    return 0


def _cmd_montecarlo(cfg: RunConfig) -> int:
    _need(cfg, "sigma")
    n = cfg.points if cfg.points is not None else 10_000
    kind = _DENSITY_KIND.get(cfg.kind or "C", cfg.kind)
    sample = exp.monte_carlo(cfg.sigma, n, seed=cfg.seed, kind=kind, P=cfg.P)
    stats = {"experiment": "montecarlo", "config": cfg.as_dict(),
             "sigma": cfg.sigma, "kind": kind, "seed": sample.seed,
             "n": int(sample.samples.size),
             "mean": float(sample.samples.mean()),
             "std": float(sample.samples.std()),
             "min": float(sample.samples.min()),
             "max": float(sample.samples.max()),
             "prime_cutoff": sample.prime_cutoff,
             "tail_variance_bound": sample.tail_variance_bound}
    if _wants_csv(cfg):
        text = _csv("sample", ((float(v),) for v in sample.samples))
    else:
        text = json.dumps(stats, sort_keys=True, separators=(",", ":"))
    _emit(cfg, text, f"montecarlo sigma={cfg.sigma:g} n={n} seed={cfg.seed} "
                     f"mean={stats['mean']:.6f} std={stats['std']:.6f}")
    return 0


def _cmd_splitfreq(cfg: RunConfig) -> int:
    table = _table(cfg)
    _need(cfg, "P")
    rep = exp.splitting_frequency_experiment(table, cfg.P)
    if _wants_csv(cfg):
        text = _csv("type,count,frequency,main_target,main_gap,"
                    "refined_target,refined_gap",
                    ((r.stype, r.count, r.frequency, r.main_target,
                      r.main_gap, r.refined_target, r.refined_gap)
                     for r in rep.rows))
    else:
        text = exp.report_json(rep, "splitfreq", cfg.as_dict())
    worst = max(r.main_gap for r in rep.rows)
    _emit(cfg, text, f"splitfreq p={rep.p} fields={rep.field_count} "
                     f"worst_gap={worst:.4f}")
    return 0


def _cmd_constant_c(cfg: RunConfig) -> int:
    cc = exp.constant_c(cfg.P or 100_000)
    doc = {"experiment": "constant-c", "config": cfg.as_dict(), **cc,
           "matching_form": "direct-product"}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    _emit(cfg, text, f"constant-c value={cc['value']:.12g} "
                     f"difference={cc['difference']:.3g}")
    return 0


def _cmd_selftest(cfg: RunConfig) -> int:
    # exact weight normalization
    for p in sieve(1000).tolist():
        total = sum(local.weight_C(p).values())
        assert total == Fraction(1), f"C-weights at p={p} sum to {total}"
        k_total = float(sum(local.weight_K(p).values()))
        assert abs(k_total - 1.0) < 1e-14, f"K-weights at p={p} sum to {k_total}"
    # truncation bound: partial-sum difference obeys the tail budget
    rng = np.random.default_rng(20240901)
    for _ in range(25):
        a = local.SPLITTING_TYPES[int(rng.integers(5))]
        z = complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
        w = rng.uniform(0, 1.0 / (8 * abs(z) + 4))
        hs = local.series_coeffs("H", a, z, N=24).values
        s12 = sum(hs[r] * w**r for r in range(13))
        s24 = sum(hs[r] * w**r for r in range(25))
        bound = 2 * (4 * abs(z) + 2) ** 12 * w**12
        assert abs(s24 - s12) <= bound + 1e-15, \
            f"truncation bound violated at a={a} z={z} w={w}"
        for r in range(25):
            assert abs(hs[r]) <= float(local.reference_H(r, 2 * abs(z))) + 1e-12
    # multiplicativity of the sieve coefficients
    splits = {p: local.SPLITTING_TYPES[p % 5] for p in sieve(200).tolist()}
    lam = {n: local.lambda_coefficient(n, splits, 1.0) for n in range(1, 200)}
    for m in range(2, 14):
        for n in range(2, 200 // m):
            if np.gcd(m, n) == 1:
                assert abs(lam[m * n] - lam[m] * lam[n]) < 1e-12, \
                    f"lambda not multiplicative at {m},{n}"
    print("selftest ok (weights, truncation bounds, multiplicativity)")
    return 0


_COMMANDS = {
    "enumerate": _cmd_enumerate,
    "ingest": _cmd_ingest,
    "density": _cmd_density,
    "euler": _cmd_euler,
    "lvalue": _cmd_lvalue,
    "moments": _cmd_moments,
    "cdf": _cmd_cdf,
    "classnumber": _cmd_classnumber,
    "montecarlo": _cmd_montecarlo,
    "splitfreq": _cmd_splitfreq,
    "constant-c": _cmd_constant_c,
    "selftest": _cmd_selftest,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="cubicartin",
                     description="Value statistics of cubic-field L-series.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} operation")
        sp.add_argument("--signature", choices=("plus", "minus", "+", "-"))
        sp.add_argument("--X", type=int)
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--z", action="append",
                        help="exponent 're,im'; repeatable")
        sp.add_argument("--Y", type=float)
        sp.add_argument("--P", type=int,
                        help="prime cutoff (splitfreq: the prime itself)")
        sp.add_argument("--points", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--in", dest="infile")
        sp.add_argument("--out", dest="outfile")
        sp.add_argument("--threads", type=int,
                        help="accepted for compatibility; all reductions "
                             "are fixed-order, results never depend on it")
        sp.add_argument("--precision-bits", dest="precision_bits", type=int)
        sp.add_argument("--config", help="JSON file mirroring the flags")
        sp.add_argument("--kind",
                        help="density/cdf/montecarlo: C, K, Cstar, Kstar; "
                             "euler: F, G, Fstar, Gstar")
        sp.add_argument("--case", choices=("I", "II"))
    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _resolve(ns)
        return _COMMANDS[ns.command](cfg)
    except _Usage as e:
        sys.stderr.write(f"usage error: {e}\n")
        return USAGE_EXIT
    except ValueError as e:
        sys.stderr.write(f"domain error: {e}\n")
        return 1
    except (ArithmeticError, AssertionError) as e:
        sys.stderr.write(f"invariant violation: {e}\n")
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
