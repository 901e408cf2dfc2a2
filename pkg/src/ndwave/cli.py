"""Command-line front end: ``ndwave {verify,product,propagate,eval,spectrum}``.

Exit codes: 0 when every check has its expected outcome, 1 on a check failure
or a guarded numerical condition, 2 on a usage or configuration error.
Settings are resolved as defaults < ``--config`` file < command-line flags, and
the resolved configuration is echoed into every JSON output.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, CoreExitedBox, DivergentProduct, NdwaveError, NyquistViolation
from .fields import PacketParams, RayGrid, export_csv, sample
from .report import CheckReport, _plain, table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PRODUCT_RTOL = 0.01
S_OFFDIAG_RATIO = 1e-3


def _default_grid() -> dict:
    return {"n_theta": 4, "n_phi": 8, "n_r": 128, "R": None, "radial": "midpoint"}


def _default_propagation() -> dict:
    from .propagate import PropagationConfig
    d = PropagationConfig().to_dict()
    d.pop("params")
    return d


def _default_products() -> dict:
    return {"s_taper": 0.04, "times": [0.0, 1.0, 5.0]}


@dataclass
class RunConfig:
    """Everything a run depends on. Serialized verbatim into each report."""

    params: dict = field(default_factory=lambda: PacketParams(1.0, 1.0, (0.0, 0.0, 0.3)).to_dict())
    grid: dict = field(default_factory=_default_grid)
    propagation: dict = field(default_factory=_default_propagation)
    products: dict = field(default_factory=_default_products)
    spectrum_n: int = 256
    suite: str = "all"
    out: str = "ndwave_out"
    seed: int = 0
    tol_scale: float = 1.0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        for k, v in d.items():
            cur = getattr(cfg, k)
            if isinstance(cur, dict):
                if not isinstance(v, dict):
                    raise ConfigError(f"{k} must be an object")
                extra = set(v) - set(cur)
                if extra:
                    raise ConfigError(f"unknown {k} keys: {sorted(extra)}")
                cur = dict(cur)
                cur.update(v)
                v = cur
            setattr(cfg, k, v)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(d)

    def validate(self):
        try:
            self.packet_params()
            self.ray_grid()
            self.propagation_config()
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(str(e)) from e
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not (isinstance(self.tol_scale, (int, float)) and self.tol_scale > 0):
            raise ConfigError("tol_scale must be positive")
        n = self.spectrum_n
        if not (isinstance(n, int) and n >= 8 and not n & (n - 1)):
            raise ConfigError(f"spectrum_n = {n} is not a power of two >= 8")
        if not self.products["s_taper"] > 0:
            raise ConfigError("products.s_taper must be positive")

    def packet_params(self) -> PacketParams:
        return PacketParams.from_dict(self.params)

    def ray_grid(self) -> RayGrid:
        g = self.grid
        n = g["n_r"]
        if not (isinstance(n, int) and n >= 2 and not n & (n - 1)):
            raise ConfigError(f"grid.n_r = {n} is not a power of two")
        return RayGrid(n_theta=g["n_theta"], n_phi=g["n_phi"], n_r=n, R=g["R"], radial=g["radial"])

    def propagation_config(self):
        from .propagate import PropagationConfig
        d = dict(self.propagation, params=self.params)
        cfg = PropagationConfig.from_dict(d)
        if cfg.N < 2 or cfg.N & (cfg.N - 1):
            raise ConfigError(f"N = {cfg.N} is not a power of two")
        return cfg

    def to_dict(self) -> dict:
        return _plain({k: getattr(self, k) for k in self.__dataclass_fields__})


# ---------------------------------------------------------------------------
# helpers


def _vector(text: str) -> list:
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected three components, got {text!r}")
    return v


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _scaled(reports, scale: float) -> list:
    if scale == 1.0:
        return list(reports)
    return [replace(r, tolerance=r.tolerance * scale) for r in reports]


def _finish(reports, cfg: RunConfig, name: str, extra: dict | None = None) -> int:
    payload = {"command": name, "config": cfg.to_dict(), "reports": [r.to_dict() for r in reports]}
    if extra:
        payload.update(extra)
    out = Path(cfg.out)
    _write_json(out / f"{name}.json", payload)
    print(table(reports))
    ok = all(r.ok for r in reports)
    print(f"{'pass' if ok else 'FAIL'}: {sum(r.ok for r in reports)}/{len(reports)} -> {out / (name + '.json')}")
    return EXIT_OK if ok else EXIT_FAIL


def resolve(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.tol_scale is not None:
        cfg.tol_scale = args.tol_scale
    if getattr(args, "suite", None) is not None:
        cfg.suite = args.suite
    if getattr(args, "n", None) is not None:
        cfg.spectrum_n = args.n
    if getattr(args, "v", None) is not None:
        cfg.params = dict(cfg.params, v=args.v)
    for key in ("L", "N", "dt", "steps"):
        val = getattr(args, key, None)
        if val is not None:
            cfg.propagation = dict(cfg.propagation, **{key: val})
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args, cfg: RunConfig) -> int:
    from .verify import SUITES, run_suite

    if cfg.suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    p = cfg.packet_params()
    reports = run_suite(cfg.suite, m=p.m, c=p.c, seed=cfg.seed, n=cfg.spectrum_n)
    return _finish(_scaled(reports, cfg.tol_scale), cfg, f"verify_{cfg.suite}")


def _s_check(phi_p: PacketParams, psi_p: PacketParams, eps: float, tol_scale: float):
    from .products import s_delta_coefficient, s_product, tapered_volume
    from .wavepacket import make_packet

    phi, psi = make_packet(phi_p), make_packet(psi_p)
    if np.allclose(phi_p.v, psi_p.v, rtol=0, atol=0):
        res = s_delta_coefficient(psi, eps)
        rep = CheckReport("s_diagonal_coefficient", res.rel_error, PRODUCT_RTOL * tol_scale,
                          {"taper": eps}, notes="diagonal value over the tapered volume vs p0 / 2")
        return res, rep
    res = s_product(phi, psi, eps)
    diag = abs(s_product(psi, psi, eps).value)
    ratio = abs(res.value) / diag
    rep = CheckReport("s_offdiagonal_ratio", ratio, S_OFFDIAG_RATIO * tol_scale,
                      {"taper": eps, "diagonal": diag, "tapered_volume": tapered_volume(eps)},
                      notes="|<psi_v'|psi_v>_S| relative to the diagonal at the same taper")
    return res, rep


def cmd_product(args, cfg: RunConfig) -> int:
    from .products import standard_product_packets

    base = cfg.packet_params()
    p1 = PacketParams(base.m, base.c, tuple(args.v1))
    p2 = PacketParams(base.m, base.c, tuple(args.v2))
    name = f"product_{args.space}"
    info = {"v1": args.v1, "v2": args.v2, "space": args.space, "t": args.t}
    try:
        if args.space == "standard":
            res = standard_product_packets(p1, p2, args.t)
            rep = CheckReport("standard_vs_analytic", res.rel_error, PRODUCT_RTOL * cfg.tol_scale,
                              {"analytic": "pi^2 / |p - p'|"})
        else:
            res, rep = _s_check(p2, p1, float(cfg.products["s_taper"]), cfg.tol_scale)
    except DivergentProduct as e:
        print(f"DivergentProduct: {e}", file=sys.stderr)
        _write_json(Path(cfg.out) / f"{name}.json",
                    {"command": name, "config": cfg.to_dict(), **info, "error": f"DivergentProduct: {e}"})
        return EXIT_FAIL
    print(res.to_json())
    return _finish([rep], cfg, name, dict(info, result=res.to_dict()))


def cmd_propagate(args, cfg: RunConfig) -> int:
    from .propagate import dispersion_contrast, nondispersion_checks, propagate

    pc = cfg.propagation_config()
    try:
        res = propagate(pc, "packet", keep_final=args.export_final)
    except (CoreExitedBox, NyquistViolation) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        _write_json(Path(cfg.out) / "propagate.json",
                    {"command": "propagate", "config": cfg.to_dict(), "error": f"{type(e).__name__}: {e}"})
        return EXIT_FAIL
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    res.write_csv(str(out / "metrics.csv"))
    if args.export_final:
        res.final.export(str(out / "final.c64"))
    reports = nondispersion_checks(res)
    if args.contrast:
        reports.append(dispersion_contrast(pc, sigma=args.sigma, packet_result=res))
    return _finish(_scaled(reports, cfg.tol_scale), cfg, "propagate", {"result": res.to_dict()})


def cmd_eval(args, cfg: RunConfig) -> int:
    from .wavepacket import make_packet

    p = cfg.packet_params()
    f = sample(make_packet(p, args.t), cfg.ray_grid())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    export_csv(f, str(out / "eval.csv"))
    _write_json(out / "eval.json", {"command": "eval", "config": cfg.to_dict(), "t": args.t,
                                    "csv": "eval.csv", "points": int(f.values.size)})
    print(f"{f.values.size} samples -> {out / 'eval.csv'}")
    return EXIT_OK


def cmd_spectrum(args, cfg: RunConfig) -> int:
    from .verify import positivity_spectrum

    rep = positivity_spectrum(args.kind, cfg.spectrum_n)
    return _finish(_scaled([rep], cfg.tol_scale), cfg, f"spectrum_{args.kind}")


# ---------------------------------------------------------------------------
# parser


def _global_flags(p: argparse.ArgumentParser, default):
    p.add_argument("--config", default=default, help="JSON RunConfig file")
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("--seed", type=int, default=default, help="seed for randomized test points")
    p.add_argument("--tol-scale", type=float, default=default, help="multiply every tolerance by this factor")


def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    parser = argparse.ArgumentParser(prog="ndwave", description=__doc__.splitlines()[0])
    _global_flags(parser, None)
    # the same flags after the subcommand; SUPPRESS keeps them from resetting earlier values
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run a check suite")
    p.add_argument("--suite", choices=SUITES + ("all",))
    p.add_argument("--n", type=int, help="matrix size for positivity and adjoint suites")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("product", parents=[common], help="inner product of two packets")
    p.add_argument("--v1", type=_vector, required=True, help="velocity of the ket, x,y,z")
    p.add_argument("--v2", type=_vector, required=True, help="velocity of the bra, x,y,z")
    p.add_argument("--space", choices=("S", "standard"), default="standard")
    p.add_argument("--t", type=float, default=0.0, help="time (standard product)")
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("propagate", parents=[common], help="free evolution on a periodic box")
    p.add_argument("--v", type=_vector, help="packet velocity")
    p.add_argument("--L", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--contrast", action="store_true", help="also evolve the Gaussian contrast packet")
    p.add_argument("--sigma", type=float, default=2.0, help="Gaussian width for --contrast")
    p.add_argument("--export-final", action="store_true", help="write the final field as complex64")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("eval", parents=[common], help="sample a packet on a ray grid to CSV")
    p.add_argument("--v", type=_vector, help="packet velocity")
    p.add_argument("--t", type=float, default=0.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectrum", parents=[common], help="Hermitian-part spectrum of a discretized operator")
    p.add_argument("--kind", choices=("l0", "r_l0_r", "S_kernel"), default="l0")
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = resolve(args)
        return args.func(args, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NdwaveError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
