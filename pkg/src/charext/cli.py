"""Command-line interface.

Subcommands
-----------
decide     look for a lattice certificate of uniqueness
construct  build and verify a second density in the non-unique regime
verify     recheck the artifacts of a previous ``construct`` run
demo       run ``decide`` and ``construct`` on either side of the threshold

Exit codes: 0 success, 1 configuration or hypothesis error, 2 inconclusive
(no certificate found), 3 verification failure.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .densities import DensitySpec, eval_density, normalize
from .errors import CharextError
from .grid import GridFunction
from .lattice import ball_certificate, find_certificate, verify_certificate
from .oracles import VERDICT_OK, ProbeSettings, Tolerances, verify_counterexample
from .perturbation import GridSettings, PerturbationParams, build_counterexample
from .spectral import forward_ft

SCHEMA = "charext-report/1"
EXIT_OK, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_FAILED = 0, 1, 2, 3
TRIANGULAR_DETERMINACY = math.pi / 2


@dataclass
class RunConfig:
    command: str
    density: str = "ball"
    sigma: float | None = None
    q: float = 2.0
    delta: float = 1.0
    n: int = 1
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    outputDir: str = "out"
    ballConvention: str = "radius"
    seed: int = 42
    tauSteps: int | None = None
    offsetSteps: int | None = None
    dumpSpectra: bool = False

    def validate(self):
        if self.command in ("decide", "construct") and not (self.sigma is not None and self.sigma > 0):
            raise ValueError("sigma must be given and positive")
        N = self.grid.get("pointsPerAxis")
        if N is not None and (N < 8 or N & (N - 1)):
            raise ValueError("--grid-points must be a power of two")
        if self.ballConvention not in ("radius", "power"):
            raise ValueError("--ball-convention must be 'radius' or 'power'")

    def density_spec(self):
        if self.density == "triangular":
            return DensitySpec.triangular()
        if self.density == "ball":
            return DensitySpec.ball(self.q, self.delta, self.n, self.ballConvention)
        if self.density.startswith("tabulated:"):
            path = Path(self.density.split(":", 1)[1]).resolve()
            return DensitySpec.tabulated(GridFunction.from_csv(path), source=path)
        raise ValueError(f"unknown density {self.density!r}")

    def grid_settings(self):
        return GridSettings(
            points_per_axis=self.grid.get("pointsPerAxis"),
            radius_factor=int(self.grid.get("radiusFactor", GridSettings.radius_factor)),
        )

    def tolerance_settings(self):
        return Tolerances.from_dict(self.tolerances)


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


# --------------------------------------------------------------------------
# commands


def ball_regime(spec, sigma):
    """Which sufficient condition, if any, covers a ball density at this sigma."""
    n, q, delta = spec.dim, spec.q, spec.radius
    root = 1.0 if math.isinf(q) else n ** (1.0 / q)
    if delta * sigma < math.pi * root:
        return "unique: lattice certificate regime (delta*sigma < pi*n^(1/q))"
    if q == 2.0 and delta * sigma > math.pi * math.sqrt(n):
        return "non-unique: counterexample regime (delta*sigma > pi*sqrt(n))"
    return "undetermined: neither sufficient condition applies"


def cmd_decide(cfg):
    spec = cfg.density_spec()
    sigma = cfg.sigma
    support = spec.support()
    default_steps = 32 if spec.dim == 1 else 16
    tau_steps = cfg.tauSteps or default_steps
    offset_steps = cfg.offsetSteps or default_steps
    cert, method = None, None
    if spec.family == "ball":
        cert = ball_certificate(spec.q, spec.radius, spec.dim, sigma)
        method = "ball recipe"
    if cert is None:
        cert = find_certificate(support, sigma, tau_steps, offset_steps)
        method = "grid search"
    report = {
        "schema": SCHEMA,
        "command": "decide",
        "density": spec.to_dict(),
        "sigma": sigma,
        "search": {"tauSteps": tau_steps, "offsetSteps": offset_steps},
        "method": method,
    }
    if spec.family == "ball":
        report["regime"] = ball_regime(spec, sigma)
    if spec.family == "triangular":
        report["crossReference"] = {
            "determinacyRadius": TRIANGULAR_DETERMINACY,
            "note": "uniqueness for the triangular density is known independently for "
                    "sigma <= pi/2; lattice certificates exist for every sigma < pi",
        }
    if cert is not None:
        check = verify_certificate(support, sigma, cert.a, cert.tau)
        report["status"] = "certificate found"
        report["certificate"] = cert.to_dict()
        report["certificateCheck"] = {"valid": check.valid, "margin": check.margin,
                                      "spacingOk": check.spacing_ok}
    else:
        report["status"] = "no certificate found"
        report["certificate"] = None
    out = Path(cfg.outputDir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "decide.json", report)
    print(f"decide: {report['status']}" + (f" a={list(cert.a)} tau={list(cert.tau)} margin={cert.margin:.6g}"
                                            if cert else ""))
    return (EXIT_OK if cert is not None else EXIT_INCONCLUSIVE), report


def dump_spectra(xi, out):
    F = forward_ft(xi)
    for k in range(xi.dim):
        # the line through the origin along axis k
        index = tuple(slice(None) if j == k else F.shape[j] // 2 for j in range(xi.dim))
        line = GridFunction((F.axes[k],), np.abs(F.values[index]))
        line.to_csv(out / f"fhat_axis_{k + 1}.csv")


def cmd_construct(cfg):
    spec = normalize(cfg.density_spec())
    grid = cfg.grid_settings()
    tol = cfg.tolerance_settings()
    probes = ProbeSettings(seed=cfg.seed)
    ce = build_counterexample(spec, cfg.sigma, grid, tolerances=tol, probes=probes)
    out = Path(cfg.outputDir)
    out.mkdir(parents=True, exist_ok=True)
    ce.xi.to_csv(out / "xi.csv")
    ce.theta.to_csv(out / "theta.csv")
    if cfg.dumpSpectra:
        dump_spectra(ce.xi, out)
    density = spec.to_dict()
    report = {
        "schema": SCHEMA,
        "command": "construct",
        "density": density,
        "sigma": cfg.sigma,
        "params": ce.params.to_dict(),
        "grid": ce.theta.meta(),
        "gridSettings": grid.to_dict(),
        "tolerances": tol.to_dict(),
        "probes": probes.to_dict(),
        "verification": ce.report.to_dict(),
    }
    write_json(out / "report.json", report)
    verdict = ce.report.verdict
    print(f"construct: {verdict}")
    return (EXIT_OK if verdict == VERDICT_OK else EXIT_FAILED), report


def cmd_verify(cfg):
    out = Path(cfg.outputDir)
    report_path, theta_path = out / "report.json", out / "theta.csv"
    for p in (report_path, theta_path):
        if not p.is_file():
            raise FileNotFoundError(f"missing {p}")
    try:
        stored = json.loads(report_path.read_text())
        spec = DensitySpec.from_dict(stored["density"], base_dir=out)
        params = PerturbationParams.from_dict(stored["params"])
        tol = Tolerances.from_dict(stored["tolerances"])
        probes = ProbeSettings.from_dict(stored["probes"])
        theta = GridFunction.from_csv(theta_path, periodic=stored["grid"]["periodic"])
        old = stored["verification"]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt report: {exc}") from exc
    fresh = verify_counterexample(spec, theta, params, probes=probes, tolerances=tol)
    problems = []
    if fresh.minTheta < -fresh.tolPos:
        problems.append(f"minTheta violation: {fresh.minTheta:.6g} < {-fresh.tolPos:.3g}")
    if fresh.verdict != old["verdict"]:
        problems.append(f"verdict changed: {old['verdict']!r} -> {fresh.verdict!r}")
    xi_path = out / "xi.csv"
    if xi_path.is_file():
        xi = GridFunction.from_csv(xi_path, periodic=theta.periodic)
        phi = eval_density(spec, theta.points())
        gap = float(np.max(np.abs(phi - theta.values - xi.values))) if xi.shape == theta.shape else math.inf
        if not gap <= 1e-12 * max(float(phi.max()), 1.0):
            problems.append(f"xi.csv inconsistent with theta.csv (max gap {gap:.3g})")
    result = {"schema": SCHEMA, "command": "verify", "verification": fresh.to_dict(),
              "storedVerdict": old["verdict"], "problems": problems}
    if problems:
        for msg in problems:
            print(f"verify: {msg}", file=sys.stderr)
        return EXIT_FAILED, result
    print(f"verify: verdict reproduced ({fresh.verdict})")
    return EXIT_OK, result


def cmd_demo(cfg):
    base = Path(cfg.outputDir)
    n, delta = cfg.n, cfg.delta
    threshold = math.pi * math.sqrt(n) / delta
    low = replace(cfg, command="decide", density="ball", q=2.0, sigma=0.95 * threshold,
                  outputDir=str(base / "decide"))
    high = replace(cfg, command="construct", density="ball", q=2.0, sigma=1.05 * threshold,
                   outputDir=str(base / "construct"))
    code_low, _ = cmd_decide(low)
    code_high, _ = cmd_construct(high)
    ok = code_low == EXIT_OK and code_high == EXIT_OK
    print(f"demo: threshold pi*sqrt(n)/delta = {threshold:.6g}; "
          f"decide below {'ok' if code_low == EXIT_OK else 'failed'}, "
          f"construct above {'ok' if code_high == EXIT_OK else 'failed'}")
    return (EXIT_OK if ok else EXIT_FAILED), None


COMMANDS = {"decide": cmd_decide, "construct": cmd_construct, "verify": cmd_verify, "demo": cmd_demo}


# --------------------------------------------------------------------------
# argument handling


def build_parser():
    parser = argparse.ArgumentParser(prog="charext", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON document with RunConfig fields")
        p.add_argument("--density", help="triangular | ball | tabulated:<csv path>")
        p.add_argument("--q", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--grid-points", type=int)
        p.add_argument("--grid-radius-factor", type=int)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--ball-convention", choices=["radius", "power"])
        p.add_argument("--tol-mass", type=float)
        p.add_argument("--tol-pos", type=float, help="relative to max phi")
        p.add_argument("--tol-band", type=float)
        p.add_argument("--tol-agree", type=float)
        p.add_argument("--tau-steps", type=int)
        p.add_argument("--offset-steps", type=int)
        p.add_argument("--dump-spectra", action="store_true", default=None)
    return parser


def config_from_args(args):
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config must be a JSON object")
    cfg = RunConfig(command=args.command)
    for key in ("density", "sigma", "q", "delta", "n", "outputDir", "ballConvention", "seed",
                "tauSteps", "offsetSteps", "dumpSpectra"):
        if key in doc:
            setattr(cfg, key, doc[key])
    cfg.grid = dict(doc.get("grid", {}))
    cfg.tolerances = dict(doc.get("tolerances", {}))
    if isinstance(cfg.q, str):
        cfg.q = float(cfg.q)
    flags = {
        "density": args.density, "sigma": args.sigma, "q": args.q, "delta": args.delta, "n": args.n,
        "outputDir": args.out, "ballConvention": args.ball_convention, "seed": args.seed,
        "tauSteps": args.tau_steps, "offsetSteps": args.offset_steps, "dumpSpectra": args.dump_spectra,
    }
    for key, val in flags.items():
        if val is not None:
            setattr(cfg, key, val)
    if args.grid_points is not None:
        cfg.grid["pointsPerAxis"] = args.grid_points
    if args.grid_radius_factor is not None:
        cfg.grid["radiusFactor"] = args.grid_radius_factor
    for name in ("mass", "pos", "band", "agree"):
        val = getattr(args, f"tol_{name}")
        if val is not None:
            cfg.tolerances[name] = val
    cfg.validate()
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, _ = COMMANDS[cfg.command](cfg)
    except (CharextError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
