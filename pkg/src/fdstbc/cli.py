"""Command-line front end.

Subcommands: constellation, gain, optimize, lemmas, table1, table2,
simulate.  Commands that emit CSV prefix it with '# key=value' comment
lines echoing the effective configuration, and numeric fields carry 12
significant digits; table commands add *_rounded columns for eyeball
comparison.

A JSON config file (--config) may preset options: its keys are the
long option names of the invoked subcommand.  Precedence is built-in
default < config file < explicit flag.  The default worker count for
simulate comes from the FDSTBC_WORKERS environment variable; --workers
overrides it.  The worker count never appears in output, so CSV bytes
are identical across worker counts.
"""

import argparse
import json
import math
import os
import sys

from . import constellations as cs
from . import number_theory as nt
from . import optimizer as opt
from .codes import DesignCoefficient
from .gain import coding_gain, golden_coding_gain
from .simulate import SimConfig, run_ber


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _rounded(x, sig: int = 4) -> str:
    return f"{float(x):.{sig}g}"


def parse_csv(text: str):
    """Split CSV text into (comments, header, rows).

    Comment lines start with '#' and may appear anywhere; the first
    non-comment line is the header.
    """
    comments, header, rows = [], None, []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


def _parse_r(spec: str, c) -> DesignCoefficient:
    if spec == "auto":
        return opt.optimize(c)[0]
    parts = spec.split(",")
    if len(parts) != 2:
        raise ValueError(f"--r must be 'auto' or 'u,v', got {spec!r}")
    u, v = float(parts[0]), float(parts[1])
    mod = math.hypot(u, v)
    if mod == 0.0:
        raise ValueError("--r must be nonzero")
    return DesignCoefficient(u=u / mod, v=v / mod, provenance="user")


def _parse_snr(spec: str) -> tuple:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"--snr must be 'start:step:stop', got {spec!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("--snr step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValueError("--snr grid is empty")
    return tuple(round(start + k * step, 9) for k in range(count))


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _echo(pairs):
    return [f"# {k}={v}" for k, v in pairs]


_DEFAULTS = {
    "constellation": {"norm": cs.NORM_UNIT_POWER, "emit": "report"},
    "gain": {"norm": cs.NORM_UNIT_POWER, "r": "auto", "method": "auto",
             "emit": "report"},
    "optimize": {"norm": cs.NORM_UNIT_POWER, "emit": "report"},
    "lemmas": {"sweep": "small"},
    "table1": {},
    "table2": {},
    "simulate": {"norm": cs.NORM_UNIT_POWER, "r": "auto", "decoder": "fast",
                 "snr": "0:3:21", "codewords": 10000, "seed": 1,
                 "emit": "csv"},
}


def _merge(ns: argparse.Namespace, command: str) -> dict:
    """Resolve option values: default < config file < explicit flag."""
    merged = dict(_DEFAULTS[command])
    if getattr(ns, "config", None):
        with open(ns.config) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ValueError("config file must hold a JSON object")
        allowed = set(_DEFAULTS[command]) | {
            k for k in vars(ns) if k not in ("command", "config", "out")}
        for key, val in file_cfg.items():
            if key not in allowed:
                raise ValueError(f"unknown config key {key!r} for "
                                 f"{command!r}")
            merged[key] = val
    for key, val in vars(ns).items():
        if key in ("command", "config", "out"):
            continue
        if val is not None:
            merged[key] = val
    return merged


def cmd_constellation(cfg, out):
    c = cs.constellation_by_id(cfg["name"], cfg["norm"])
    stats = (f"# min_distance={_fmt(cs.min_distance(c))}, "
             f"papr={_fmt(cs.papr(c))}, avg_power={_fmt(cs.avg_power(c))}")
    if cfg["emit"] == "csv":
        lines = _echo([("name", c.name), ("norm", c.normalization)])
        lines.append("index,re,im")
        for k, p in enumerate(c.points):
            lines.append(f"{k},{_fmt(p.real)},{_fmt(p.imag)}")
        lines.append(stats)
    else:
        lines = [f"constellation = {c.name}",
                 f"norm = {c.normalization}",
                 f"size = {len(c)}",
                 f"min_distance = {_fmt(cs.min_distance(c))}",
                 f"avg_power = {_fmt(cs.avg_power(c))}",
                 f"papr = {_fmt(cs.papr(c))}"]
        for k, p in enumerate(c.points):
            lines.append(f"point[{k}] = {_fmt(p.real)} {_fmt(p.imag)}")
    _emit(lines, out)
    return 0


def cmd_gain(cfg, out):
    c = cs.constellation_by_id(cfg["constellation"], cfg["norm"])
    r = _parse_r(cfg["r"], c)
    method = None if cfg["method"] == "auto" else cfg["method"]
    rep = coding_gain(c, r, method=method)
    wit = (rep.argmin.ds1, rep.argmin.ds2, rep.argmin.ds3, rep.argmin.ds4)
    argmin = [x for s in wit for x in (s.real, s.imag)]
    if cfg["emit"] == "csv":
        lines = _echo([("constellation", c.name), ("norm", c.normalization),
                       ("r", cfg["r"]), ("method", rep.method)])
        cols = ",".join(f"argmin{k // 2 + 1}_{'re' if k % 2 == 0 else 'im'}"
                        for k in range(8))
        lines.append(f"constellation,norm,u,v,gain,case,{cols}")
        lines.append(",".join([c.name, c.normalization, _fmt(r.u), _fmt(r.v),
                               _fmt(rep.gain), rep.case_of_argmin]
                              + [_fmt(x) for x in argmin]))
    else:
        lines = [f"constellation = {c.name}",
                 f"norm = {c.normalization}",
                 f"u = {_fmt(r.u)}",
                 f"v = {_fmt(r.v)}",
                 f"gain = {_fmt(rep.gain)}"]
        if rep.gain_exact is not None:
            lines.append(f"gain_exact = {rep.gain_exact}")
        lines += [f"case = {rep.case_of_argmin}",
                  f"case1_min = {_fmt(rep.case1_min)}",
                  f"case2_min = {_fmt(rep.case2_min)}",
                  f"case2_bound_min = {_fmt(rep.case2_bound_min)}",
                  f"method = {rep.method}",
                  "argmin = " + " ".join(_fmt(x) for x in argmin)]
    _emit(lines, out)
    return 0


def _optimize_full(c):
    """(r, gain report, case1 gain, case2 min, dominance flag)."""
    if c.integer_grid:
        r = opt.analytic_integer_optimum()[0]
        rep = coding_gain(c, r)
        dom = rep.case2_min >= rep.case1_min - 1e-12
        return r, rep, rep.case1_min, rep.case2_min, dom
    res = opt.verify_step2(c, opt.optimize_step1(c))
    rep = res.gain_report
    return (res.r_candidates[0], rep, res.case1_gain, res.case2_min,
            res.case2_dominates)


def cmd_optimize(cfg, out):
    c = cs.constellation_by_id(cfg["constellation"], cfg["norm"])
    r, rep, case1, case2, dom = _optimize_full(c)
    if cfg["emit"] == "csv":
        lines = _echo([("constellation", c.name),
                       ("norm", c.normalization)])
        lines.append("name,min_distance,u,v,gain")
        lines.append(",".join([c.name, _fmt(cs.min_distance(c)),
                               _fmt(r.u), _fmt(r.v), _fmt(rep.gain)]))
    else:
        lines = [f"constellation = {c.name}",
                 f"norm = {c.normalization}",
                 f"u = {_fmt(r.u)}",
                 f"v = {_fmt(r.v)}",
                 f"t = {_fmt(r.t)}",
                 f"gain = {_fmt(rep.gain)}"]
        if rep.gain_exact is not None:
            lines.append(f"gain_exact = {rep.gain_exact}")
        lines += [f"case1_gain = {_fmt(case1)}",
                  f"case2_min = {_fmt(case2)}",
                  f"case2_dominates = {dom}",
                  f"provenance = {r.provenance}",
                  "witness = " + " ".join(
                      _fmt(x) for s in (rep.argmin.ds1, rep.argmin.ds2,
                                        rep.argmin.ds3, rep.argmin.ds4)
                      for x in (s.real, s.imag))]
    _emit(lines, out)
    return 0


def cmd_lemmas(cfg, out):
    results = nt.run_sweeps(cfg["sweep"])
    lines = [f"sweep = {cfg['sweep']}"]
    bad = 0
    for r in results:
        tag = "PASS" if r.ok else "FAIL"
        bad += 0 if r.ok else 1
        lines.append(f"{r.label}: checked={r.checked} "
                     f"failures={r.failures} [{tag}]")
    lines.append(f"total = {len(results)} sweeps, {bad} failing")
    _emit(lines, out)
    return 0 if bad == 0 else 1


def cmd_table1(cfg, out):
    rows = []
    for m in (4, 16):
        c = cs.make_qam(m, cs.NORM_UNIT_POWER)
        rows.append(("golden", c.name, golden_coding_gain(c)))
    for ident in ("qam4", "qam16", "psk8"):
        c = cs.constellation_by_id(ident, cs.NORM_UNIT_POWER)
        r, rep = opt.optimize(c)
        rows.append(("fdstbc", c.name, rep.gain))
    lines = _echo([("norm", cs.NORM_UNIT_POWER)])
    lines.append("code,constellation,gain,gain_rounded")
    for code, name, g in rows:
        lines.append(f"{code},{name},{_fmt(g)},{_rounded(g, 3)}")
    _emit(lines, out)
    return 0


def cmd_table2(cfg, out):
    lines = _echo([("norm", cs.NORM_UNIT_POWER)])
    lines.append("apsk,min_distance,u,v,gain,"
                 "min_distance_rounded,u_rounded,v_rounded,gain_rounded")
    for ident in ("apsk8", "apsk8-grid", "apsk16", "apsk16-grid"):
        c = cs.constellation_by_id(ident, cs.NORM_UNIT_POWER)
        r, rep, _, _, _ = _optimize_full(c)
        mind = cs.min_distance(c)
        lines.append(",".join([
            c.name, _fmt(mind), _fmt(r.u), _fmt(r.v), _fmt(rep.gain),
            _rounded(mind), _rounded(r.u), _rounded(r.v),
            _rounded(rep.gain)]))
    _emit(lines, out)
    return 0


def cmd_simulate(cfg, out):
    c = cs.constellation_by_id(cfg["constellation"], cfg["norm"])
    r = _parse_r(cfg["r"], c)
    sim_cfg = SimConfig(constellation=c, r=r, decoder=cfg["decoder"],
                        snr_grid_db=_parse_snr(cfg["snr"]),
                        codewords_per_point=int(cfg["codewords"]),
                        seed=int(cfg["seed"]))
    workers = cfg.get("workers")
    if workers is None:
        env = os.environ.get("FDSTBC_WORKERS")
        workers = int(env) if env else None
    res = run_ber(sim_cfg, workers=workers)
    lines = _echo([("constellation", c.name), ("norm", c.normalization),
                   ("u", _fmt(r.u)), ("v", _fmt(r.v)),
                   ("decoder", res.decoder), ("snr", cfg["snr"]),
                   ("codewords", sim_cfg.codewords_per_point),
                   ("seed", res.seed)])
    if cfg["emit"] == "csv":
        lines.append("snr_db,codewords,bits,bit_errors,ber,decoder,seed")
        for p in res.points:
            lines.append(",".join([
                _fmt(p.snr_db), str(p.codewords), str(p.bits),
                str(p.bit_errors), _fmt(p.ber), res.decoder,
                str(res.seed)]))
    else:
        for p in res.points:
            lines.append(f"snr={_fmt(p.snr_db)} ber={_fmt(p.ber)} "
                         f"errors={p.bit_errors}/{p.bits}")
    _emit(lines, out)
    return 0


_COMMANDS = {
    "constellation": cmd_constellation,
    "gain": cmd_gain,
    "optimize": cmd_optimize,
    "lemmas": cmd_lemmas,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "simulate": cmd_simulate,
}


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="fdstbc", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file presetting options")
        p.add_argument("--out", help="write output to this path")

    p = sub.add_parser("constellation", help="list points and stats")
    p.add_argument("--name", required=True)
    p.add_argument("--norm", choices=cs.NORMALIZATIONS)
    p.add_argument("--emit", choices=("report", "csv"))
    common(p)

    p = sub.add_parser("gain", help="coding gain for a coefficient")
    p.add_argument("--constellation", required=True)
    p.add_argument("--norm", choices=cs.NORMALIZATIONS)
    p.add_argument("--r", help="'auto' or 'u,v' (normalized to |r|=1)")
    p.add_argument("--method", choices=("auto", "aggregated", "exhaustive"))
    p.add_argument("--emit", choices=("report", "csv"))
    common(p)

    p = sub.add_parser("optimize", help="best design coefficient")
    p.add_argument("--constellation", required=True)
    p.add_argument("--norm", choices=cs.NORMALIZATIONS)
    p.add_argument("--emit", choices=("report", "csv"))
    common(p)

    p = sub.add_parser("lemmas", help="integer-identity sweeps")
    p.add_argument("--sweep", choices=("small", "full"))
    common(p)

    p = sub.add_parser("table1", help="coding-gain comparison rows")
    common(p)

    p = sub.add_parser("table2", help="APSK comparison rows")
    common(p)

    p = sub.add_parser("simulate", help="Monte Carlo BER over an SNR grid")
    p.add_argument("--constellation", required=True)
    p.add_argument("--norm", choices=cs.NORMALIZATIONS)
    p.add_argument("--r", help="'auto' or 'u,v' (normalized to |r|=1)")
    p.add_argument("--decoder", choices=("ml", "fast"))
    p.add_argument("--snr", help="start:step:stop in dB")
    p.add_argument("--codewords", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--emit", choices=("report", "csv"))
    common(p)

    return top


def main(argv=None) -> int:
    ns = _build_parser().parse_args(argv)
    try:
        cfg = _merge(ns, ns.command)
        return _COMMANDS[ns.command](cfg, ns.out)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
