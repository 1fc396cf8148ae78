"""Command-line front end.

Subcommands:
  codes     build / verify / metrics for a single code construction
  simulate  Monte Carlo frame-error + outage sweep for a scheme
  outage    outage-only sweep (no decoding; fast)
  dmg       exact tradeoff-curve breakpoints, optional comparison
  verify    run the full property suite

Experiment options can come from a flat JSON config file (--config);
explicit command-line flags override file values.  All SNR grids are in dB
on the command line (linear internally).  Data lands in CSV or JSON; when
writing to a file the report path also renders a .png figure next to it
unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import channel as ch
from . import codes as cd
from . import curves as cv
from . import report
from .montecarlo import (InsufficientErrorsError, diversity_slope,
                         monte_carlo, outage_monte_carlo)
from .strategies import SchemeConfig, max_network_rate

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


@dataclass
class ExperimentConfig:
    """Flat, JSON-serializable experiment description."""

    scheme: str = "ndsdaf"
    users: int = 3
    qam: int = 16
    code: str = "auto"
    rate_bpncu: float | None = None
    relay_rule: str = ch.RULE_OUTAGE
    delta: float = 1.0
    amplification: float = 1.0
    force_cooperation: bool = False
    snr_db: str = "10:35:5"
    trials: int = 10000
    seed: int = 1
    out: str | None = None
    format: str = "csv"
    workers: int | None = None
    plot: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def experiment_dict(self) -> dict:
        """The fields that define the experiment (hash identity); where the
        output lands and how it is rendered are excluded."""
        d = self.to_dict()
        for key in ("out", "format", "workers", "plot"):
            d.pop(key)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return ExperimentConfig(**d)

    def resolved_rate(self) -> float:
        if self.rate_bpncu is not None:
            return self.rate_bpncu
        return max_network_rate(self.scheme, self.users - 1, self.qam)

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(
            kind=self.scheme, users=self.users, m_squared=self.qam,
            rate_bpncu=self.resolved_rate(), code=self.code,
            relay_rule=self.relay_rule, delta=self.delta,
            amplification=self.amplification,
            skip_cooperation_above_r_half=not self.force_cooperation)

    def grid(self) -> list[float]:
        return parse_snr_grid(self.snr_db)


def parse_snr_grid(text: str) -> list[float]:
    """'start:stop:step' (inclusive) or a comma list of dB values."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError("need step > 0 and stop >= start")
        grid = []
        v = start
        while v <= stop + 1e-9:
            grid.append(round(v, 9))
            v += step
        return grid
    return [float(p) for p in text.split(",") if p.strip()]


# ---------------------------------------------------------------------------
# codes subcommand
# ---------------------------------------------------------------------------

def _build_codebook(args):
    const = cd.make_constellation("qam", args.qam)
    variant = args.variant
    n = args.n
    if variant == "horizontal":
        return cd.horizontally_restricted_code(n, const)
    if variant == "diagonal":
        return cd.diagonal_restricted_code(n, const)
    if variant == "integral":
        gamma = complex(args.gamma) if args.gamma else None
        return cd.integral_restriction_code(n, const, gamma)
    if variant == "m-layered":
        return cd.m_layered_code(n, args.m, const)
    if variant == "full-cda":
        return cd.full_cda_code(n, const)
    if variant == "stacked":
        return cd.horizontally_stacked_code(n, args.k, const)
    if variant == "uncoded":
        return cd.uncoded_code(const)
    raise cd.InvalidParameterError(f"unknown variant {variant!r}")


def _verify_codebook(book: cd.Codebook) -> list[tuple[str, bool, str]]:
    import numpy as np
    checks = []
    if book.generator is not None:
        defect = book.generator.unitarity_defect()
        checks.append(("generator_unitarity", defect <= cd.UNITARITY_TOL,
                       f"defect {defect:.2e}"))
    if book.gamma is not None:
        gm = cd.gamma_matrix(book.basis.shape[1], book.gamma) \
            if book.basis.shape[1] == book.T else None
        if gm is not None:
            checks.append(("gamma_unit_modulus",
                           abs(abs(book.gamma) - 1) <= 1e-12,
                           f"|gamma| = {abs(book.gamma):.12f}"))
    if book.dispersion is not None:
        worst = max(float(np.linalg.norm(a.conj().T @ a - np.eye(a.shape[1])))
                    for a in book.dispersion)
        checks.append(("dispersion_unitarity", worst <= cd.UNITARITY_TOL,
                       f"max defect {worst:.2e}"))
    expected = book.constellation.size ** book.info_symbols_per_matrix
    checks.append(("cardinality", book.size == expected,
                   f"{book.size} codewords"))
    rng = np.random.default_rng(0)
    f1 = book.constellation.points[rng.integers(
        0, book.constellation.size, book.info_symbols_per_matrix)]
    f2 = book.constellation.points[rng.integers(
        0, book.constellation.size, book.info_symbols_per_matrix)]
    lin = np.max(np.abs(book.codeword_from_symbols(f1 + f2)
                        - book.codeword_from_symbols(f1)
                        - book.codeword_from_symbols(f2)))
    checks.append(("linearity", lin <= 1e-12, f"defect {lin:.2e}"))
    if book.variant == cd.DIAGONAL and book.size <= 4096:
        metrics = cd.code_metrics(book, max_pairs=10**7)
        pd = metrics["min_product_distance"]
        checks.append(("nvd", pd >= 1.0 - cd.NVD_TOL,
                       f"min |prod dz| = {pd:.6f}"))
    elif book.size <= 4096 and book.n > 1:
        metrics = cd.code_metrics(book, max_pairs=2000)
        checks.append(("distinct_pairs", metrics["min_eigenvalue"] > 0
                       or metrics["min_product_distance"] > 0,
                       "scanned pairwise differences"))
    return checks


def cmd_codes(args) -> int:
    if args.variant == "gamma":
        gamma = complex(args.gamma) if args.gamma else cd.default_gamma(args.n)
        gm = cd.gamma_matrix(args.n, gamma)
        descriptor = cd.gamma_descriptor(gm)
        if args.action != "build":
            print("gamma supports only the build action", file=sys.stderr)
            return EXIT_USAGE
        _emit_json(descriptor, args.out)
        return EXIT_OK
    book = _build_codebook(args)
    if args.action == "build":
        _emit_json(cd.export_descriptor(book), args.out)
        return EXIT_OK
    if args.action == "verify":
        checks = _verify_codebook(book)
        ok = all(p for _, p, _ in checks)
        for name, passed, detail in checks:
            print(f"{'PASS' if passed else 'FAIL':5s} {name:24s} {detail}")
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    if args.action == "metrics":
        metrics = cd.code_metrics(book, max_pairs=args.max_pairs)
        _emit_json({"variant": book.variant, "n": book.n, "T": book.T,
                    **metrics}, args.out)
        return EXIT_OK
    print(f"unknown action {args.action!r}", file=sys.stderr)
    return EXIT_USAGE


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# simulate / outage subcommands
# ---------------------------------------------------------------------------

def _experiment_from_args(args) -> ExperimentConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    cfg = ExperimentConfig.from_dict(base)
    for name in ("scheme", "users", "qam", "code", "rate_bpncu", "relay_rule",
                 "delta", "amplification", "snr_db", "trials", "seed", "out",
                 "format", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "force_coop", False):
        cfg.force_cooperation = True
    if getattr(args, "no_plot", False):
        cfg.plot = False
    return cfg


def _summarize(batches, label: str) -> None:
    print(f"# {label}")
    print("snr_db    trials   errors      fer     outages     pout")
    for b in batches:
        print(f"{b.snr_db:6.1f} {b.trials:9d} {b.frame_errors:8d} "
              f"{b.fer:10.3e} {b.outages:9d} {b.pout:10.3e}")
    try:
        slope = diversity_slope(batches)
        print(f"diversity slope (top 15 dB window): {slope:.3f}")
    except InsufficientErrorsError as exc:
        print(f"diversity slope: not computable ({exc})")


def cmd_simulate(args) -> int:
    cfg = _experiment_from_args(args)
    scheme = cfg.scheme_config()
    batches = monte_carlo(scheme, cfg.grid(), cfg.trials, cfg.seed,
                          workers=cfg.workers)
    _summarize(batches, f"simulate {cfg.scheme} users={cfg.users} "
                        f"qam={cfg.qam} rate={cfg.resolved_rate():.4g}")
    if cfg.out:
        cfg_dict = cfg.experiment_dict()
        if cfg.format == "json":
            report.write_batches_json(cfg.out, cfg_dict, cfg.seed, batches)
        else:
            report.write_batches_csv(cfg.out, cfg_dict, cfg.seed, batches)
        if cfg.plot:
            report.render_fer_figure(report.figure_path(cfg.out),
                                     {cfg.scheme: batches},
                                     title=f"{cfg.scheme} frame error rate")
        print(f"wrote {cfg.out}")
    if getattr(args, "dump_transcript", None):
        _dump_transcript(scheme, cfg, args.dump_transcript)
    return EXIT_OK


def _dump_transcript(scheme: SchemeConfig, cfg: ExperimentConfig,
                     path: str) -> None:
    import numpy as np
    from .montecarlo import _context_for, draw_trial_inputs
    from .strategies import run_frame
    snr_db = cfg.grid()[0]
    snr = 10.0 ** (snr_db / 10.0)
    ctx = _context_for(scheme)
    coop = ch.cooperation_active(scheme, scheme.rate_bpncu, snr)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    inputs = draw_trial_inputs(scheme, ctx.size, coop, rng, 1)
    transcript = run_frame(scheme, ctx.books, inputs.realization(0),
                           inputs.noise(0), snr, int(inputs.indices[0]))
    payload = {"snr_db": snr_db, "transcript": transcript.to_json()}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    print(f"wrote transcript {path}")


def cmd_outage(args) -> int:
    cfg = _experiment_from_args(args)
    scheme = cfg.scheme_config()
    batches = outage_monte_carlo(scheme, cfg.grid(), cfg.trials, cfg.seed)
    print(f"# outage {cfg.scheme} users={cfg.users} "
          f"rate={cfg.resolved_rate():.4g}")
    print("snr_db    trials   outages     pout")
    for b in batches:
        print(f"{b.snr_db:6.1f} {b.trials:9d} {b.outages:9d} {b.pout:10.3e}")
    if cfg.out:
        cfg_dict = cfg.experiment_dict()
        if cfg.format == "json":
            report.write_batches_json(cfg.out, cfg_dict, cfg.seed, batches)
        else:
            report.write_batches_csv(cfg.out, cfg_dict, cfg.seed, batches)
        if cfg.plot:
            report.render_pout_figure(report.figure_path(cfg.out),
                                      {cfg.scheme: batches},
                                      title=f"{cfg.scheme} outage probability")
        print(f"wrote {cfg.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dmg subcommand
# ---------------------------------------------------------------------------

def _curve_from_args(family: str, args, prefix: str = "") -> cv.DmgCurve:
    def get(name, default=None):
        return getattr(args, prefix + name, None) or default

    params = {}
    if family in ("optimal", "two_product", "pep_universal", "full_perfect",
                  "ortho_approx", "alpha_scaled", "multi_antenna",
                  "pep_random"):
        params["n"] = int(get("n", 2))
    if family == "pep_random":
        params["k"] = get("k", 10)
    if family == "alpha_scaled":
        params["alpha"] = get("alpha", 1)
    if family == "multi_antenna":
        params["m"] = int(get("m", 1))
    if family == "rayleigh":
        params["n"] = int(get("n", 2))
        params["n_r"] = int(get("nr", 1))
    curve = cv.dmg_curve(family, **params)
    drop = get("rate_drop")
    if drop is not None:
        curve = cv.rate_drop_curve(curve, int(drop))
    return curve


def cmd_dmg(args) -> int:
    family = args.family.replace("-", "_")
    curve = _curve_from_args(family, args)
    curves_out = [curve]
    notes = {}
    if args.compare:
        other = _curve_from_args(args.compare.replace("-", "_"), args,
                                 prefix="compare_")
        curves_out.append(other)
        rc = cv.r_coop(curve, other)
        if rc is None:
            notes["r_coop"] = "none"
        else:
            notes["r_coop"] = str(rc)
            rate = args.rate_bpncu if args.rate_bpncu is not None else 1.0
            notes["snr_coop_linear"] = f"{cv.snr_coop(rate, rc):.6g}"
            notes["snr_coop_db"] = \
                f"{10.0 * __import__('math').log10(cv.snr_coop(rate, rc)):.4f}"
    for c in curves_out:
        print(f"{c.label}: " + " ".join(f"({r},{d})" for r, d in c.breakpoints))
    for key, value in notes.items():
        print(f"{key} = {value}")
    if args.out:
        report.write_curves_csv(args.out, curves_out, seed=0, notes=notes)
        if not args.no_plot:
            report.render_curve_figure(report.figure_path(args.out),
                                       curves_out)
        print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify subcommand
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .verify import run_all
    results = run_all(quick=args.quick, seed=args.seed)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopdiv",
        description="cooperative-diversity relay simulator and "
                    "space-time code toolbox")
    sub = parser.add_subparsers(dest="command", required=True)

    p_codes = sub.add_parser("codes", help="build/verify/measure a code")
    p_codes.add_argument("action", choices=("build", "verify", "metrics"))
    p_codes.add_argument("--variant", required=True,
                         choices=("horizontal", "diagonal", "integral",
                                  "m-layered", "full-cda", "stacked",
                                  "uncoded", "gamma"))
    p_codes.add_argument("--n", type=int, default=2)
    p_codes.add_argument("--m", type=int, default=1)
    p_codes.add_argument("--k", type=int, default=1)
    p_codes.add_argument("--qam", type=int, default=4)
    p_codes.add_argument("--gamma", type=str, default=None,
                         help="complex literal, e.g. 1j")
    p_codes.add_argument("--max-pairs", type=int, default=200000)
    p_codes.add_argument("--out", type=str, default=None)
    p_codes.set_defaults(func=cmd_codes)

    def add_experiment_flags(p):
        p.add_argument("--config", type=str, default=None,
                       help="JSON experiment file; flags override")
        p.add_argument("--scheme", type=str, default=None,
                       choices=ch.SCHEME_KINDS)
        p.add_argument("--users", type=int, default=None)
        p.add_argument("--qam", type=int, default=None)
        p.add_argument("--code", type=str, default=None,
                       choices=("auto", "diagonal", "full-echo", "integral"))
        p.add_argument("--rate-bpncu", dest="rate_bpncu", type=float,
                       default=None)
        p.add_argument("--relay-rule", dest="relay_rule", type=str,
                       default=None, choices=(ch.RULE_OUTAGE, ch.RULE_DELTA))
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--amplification", type=float, default=None)
        p.add_argument("--force-coop", action="store_true")
        p.add_argument("--snr-db", dest="snr_db", type=str, default=None,
                       help="start:stop:step or comma list, in dB")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, default=None,
                       choices=("csv", "json"))
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--no-plot", action="store_true")

    p_sim = sub.add_parser("simulate", help="frame-error + outage sweep")
    add_experiment_flags(p_sim)
    p_sim.add_argument("--dump-transcript", type=str, default=None,
                       help="debug: write one frame transcript as JSON")
    p_sim.set_defaults(func=cmd_simulate)

    p_out = sub.add_parser("outage", help="outage-only sweep")
    add_experiment_flags(p_out)
    p_out.set_defaults(func=cmd_outage)

    p_dmg = sub.add_parser("dmg", help="exact tradeoff curves")
    p_dmg.add_argument("--family", required=True)
    p_dmg.add_argument("--n", type=int, default=2)
    p_dmg.add_argument("--m", type=int, default=1)
    p_dmg.add_argument("--k", type=str, default=None)
    p_dmg.add_argument("--alpha", type=str, default=None)
    p_dmg.add_argument("--nr", type=int, default=1)
    p_dmg.add_argument("--rate-drop", dest="rate_drop", type=int, default=None)
    p_dmg.add_argument("--compare", type=str, default=None)
    p_dmg.add_argument("--compare-n", dest="compare_n", type=int, default=None)
    p_dmg.add_argument("--compare-m", dest="compare_m", type=int, default=None)
    p_dmg.add_argument("--compare-nr", dest="compare_nr", type=int,
                       default=None)
    p_dmg.add_argument("--rate-bpncu", dest="rate_bpncu", type=float,
                       default=None)
    p_dmg.add_argument("--out", type=str, default=None)
    p_dmg.add_argument("--no-plot", action="store_true")
    p_dmg.set_defaults(func=cmd_dmg)

    p_ver = sub.add_parser("verify", help="run the property suite")
    p_ver.add_argument("--quick", action="store_true")
    p_ver.add_argument("--seed", type=int, default=1234)
    p_ver.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (cd.InvalidParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
