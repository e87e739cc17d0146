"""Command-line experiment runner.

Subcommands: ``construct``, ``threshold``, ``ber``, ``trace``, ``girth``.
Every option can also come from a flat ``key=value`` file (``--config``);
command-line values override the file, unknown keys are errors. Outputs are
self-describing: CSV files start with ``#schema=1`` and a config-hash line,
JSON outputs carry the same hash.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np

SCHEMA = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Option table: name -> (type, default, help). Names use underscores; the
# flag is the dashed form.


def _frac(s: str) -> Fraction:
    return Fraction(str(s))


def _floats(s: str) -> list[float]:
    return [float(x) for x in str(s).replace(";", ",").split(",") if x.strip()]


def _bool(s: str) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


LDPC_OPTS = {
    "spread": (str, "2,2|1,1", "edge-spreading components B_0|B_1|..., rows separated by ';'"),
    "L": (int, 50, "coupling length"),
    "M": (int, 100, "lifting factor"),
    "lift_seed": (int, 0, "seed for the circulant shifts"),
}
COMMON = {
    "seed": (int, 1, "master seed; every random stream derives from it"),
    "out": (str, "-", "output path ('-' = stdout)"),
}
OPTIONS: dict[str, dict[str, tuple[Callable, Any, str]]] = {
    "construct": {
        **COMMON, **LDPC_OPTS,
        "family": (str, "sc-ldpc", "sc-ldpc | subblock"),
        "dv": (int, 4, "subblock: variable degree"),
        "dc": (int, 8, "subblock: check degree"),
        "s": (int, 1, "subblock: coupling checks per variable"),
        "format": (str, "qc", "qc | dense"),
    },
    "girth": {
        **COMMON, **LDPC_OPTS,
        "matrix": (str, "", "QC text file from 'construct' (default: build from the options)"),
    },
    "threshold": {
        **COMMON,
        "spread": LDPC_OPTS["spread"],
        "L": LDPC_OPTS["L"],
        "rate": (str, "", "target rate after random puncturing (empty: none)"),
        "rate_reference": (str, "asymptotic", "asymptotic | design: rate the puncture fraction is computed from"),
        "window": (int, 0, "windowed-decoding window size (0: full BP)"),
        "tol": (float, 1e-5, "bisection tolerance"),
        "max_iters": (int, 100_000, "DE iteration limit"),
    },
    "ber": {
        **COMMON, **LDPC_OPTS,
        "family": (str, "sc-ldpc", "sc-ldpc | gscpcc | scscc | hscbcc | staircase"),
        "channel": (str, "bec", "bec | bsc | biawgn"),
        "sweep": (_floats, [0.40], "channel parameters (erasure prob, crossover prob or Eb/N0 dB), strictly monotone"),
        "max_frames": (int, 100, "frame limit per sweep point"),
        "target_errors": (int, 50, "stop a point after this many frame errors"),
        "rate": (str, "", "target rate after puncturing (empty: none)"),
        "rate_reference": (str, "asymptotic", "asymptotic | design"),
        "decoder": (str, "window", "sc-ldpc: bp | window | peel"),
        "window": (int, 12, "window size in positions (staircase: blocks)"),
        "iters": (int, 200, "iterations (full BP, per window)"),
        "gen": (str, "", "component generator in octal (default: [1,5/7], hscbcc [1,0,5/7;0,1,3/7])"),
        "gen_inner": (str, "", "scscc inner generator (default: --gen)"),
        "q": (int, 2, "gscpcc repetition factor"),
        "lambda_r": (_frac, Fraction(1, 3), "gscpcc repetition ratio"),
        "sigma": (int, 2, "hscbcc half-time coupling memory"),
        "m": (int, 1, "coupling memory for gscpcc/scscc"),
        "K": (int, 200, "information bits per position (turbo-like families)"),
        "joint_interleaver": (_bool, True, "one interleaver over the coupled concatenation"),
        "component": (str, "254,238,2", "staircase BCH component n,k,t"),
        "blocks": (int, 20, "staircase information blocks"),
        "threads": (int, 1, "worker processes (wall-clock only)"),
        "batch": (int, 8, "frames per scheduling batch"),
    },
    "trace": {
        **COMMON, **LDPC_OPTS,
        "eps": (float, 0.45, "erasure probability"),
        "frames": (int, 100, "number of peeling traces"),
        "stride": (int, 1, "write every stride-th peeling step"),
        "window": (int, 0, "also estimate windowed-decoding failure components (0: skip)"),
        "iters": (int, 200, "iterations per window for the failure estimate"),
        "summary": (str, "", "JSON summary path (default: <out>.json, or stderr for stdout)"),
    },
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sccodes", description="Spatially coupled code experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="key=value file; command-line options override it")
        for name, (_typ, default, help_) in opts.items():
            sp.add_argument(_flag(name), dest=name, default=None, help=f"{help_} (default: {default})")
    return p


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def resolve(cmd: str, file_vals: dict[str, str], cli_vals: dict[str, Any]) -> dict[str, Any]:
    """Defaults, then the config file, then the command line; converts and validates types."""
    opts = OPTIONS[cmd]
    unknown = sorted(set(file_vals) - set(opts))
    if unknown:
        raise ConfigError(f"unknown config keys for '{cmd}': {', '.join(unknown)}")
    cfg = {}
    for name, (typ, default, _h) in opts.items():
        raw = cli_vals.get(name)
        if raw is None:
            raw = file_vals.get(name)
        if raw is None:
            cfg[name] = default
            continue
        try:
            cfg[name] = typ(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {name}: {raw!r} ({e})") from None
    return cfg


def config_hash(cmd: str, cfg: dict) -> str:
    canon = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in cfg.items() if k not in ("out", "threads", "summary")}
    blob = json.dumps({"command": cmd, **canon}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Shared builders


def parse_spread(text: str) -> list[np.ndarray]:
    comps = []
    for comp in text.split("|"):
        rows = [[int(x) for x in r.split(",")] for r in comp.split(";") if r.strip()]
        comps.append(np.array(rows, dtype=np.int64))
    return comps


def coupled_base(cfg):
    from .chain import CoupledChainSpec
    from .protograph import build_coupled_base, edge_spread

    try:
        comps = parse_spread(cfg["spread"])
        base = sum(comps)
        chain = CoupledChainSpec(cfg["L"], len(comps) - 1)
        return build_coupled_base(edge_spread(base, comps), chain)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def puncture_rho(cfg, base) -> float:
    from .channels import puncture_fraction

    if not cfg["rate"]:
        return 0.0
    ref = {"asymptotic": base.asymptotic_rate, "design": base.design_rate}.get(cfg["rate_reference"])
    if ref is None:
        raise ConfigError(f"rate_reference must be asymptotic or design, not {cfg['rate_reference']!r}")
    try:
        return puncture_fraction(ref, Fraction(cfg["rate"]))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", newline="")


# ---------------------------------------------------------------------------
# construct / girth / threshold


def cmd_construct(cfg) -> None:
    from .protograph import SubBlockLocalitySpec, dense_text, dumps_qc, lift, subblock_construct

    if cfg["family"] == "sc-ldpc":
        base = coupled_base(cfg)
    elif cfg["family"] == "subblock":
        try:
            base = subblock_construct(SubBlockLocalitySpec(cfg["dv"], cfg["dc"], cfg["s"]), cfg["L"])
        except ValueError as e:
            raise ConfigError(str(e)) from None
    else:
        raise ConfigError(f"unknown family {cfg['family']!r}")
    if cfg["format"] not in ("qc", "dense"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    H = lift(base, cfg["M"], seed=cfg["lift_seed"])
    text = dumps_qc(H) if cfg["format"] == "qc" else dense_text(H)
    with _open_out(cfg["out"]) as fh:
        fh.write(f"# config_hash={config_hash('construct', cfg)}\n")
        fh.write(text)


def cmd_girth(cfg) -> None:
    from .protograph import girth, lift, loads_qc

    if cfg["matrix"]:
        with open(cfg["matrix"]) as fh:
            H = loads_qc(fh.read())
    else:
        H = lift(coupled_base(cfg), cfg["M"], seed=cfg["lift_seed"])
    g = girth(H)
    res = {"girth": None if g == float("inf") else int(g), "config_hash": config_hash("girth", cfg)}
    with _open_out(cfg["out"]) as fh:
        fh.write(json.dumps(res, sort_keys=True) + "\n")


def cmd_threshold(cfg) -> None:
    from .density_evolution import ProtographDE, bp_threshold, windowed_threshold

    base = coupled_base(cfg)
    rho = puncture_rho(cfg, base)
    if cfg["window"]:
        eps = windowed_threshold(base, rho, cfg["window"], tol_eps=cfg["tol"])
        iters = None
    else:
        eps = bp_threshold(base, rho, tol_eps=cfg["tol"], max_iters=cfg["max_iters"])
        iters = ProtographDE(base).run(eps, rho, cfg["max_iters"]).iterations
    res = {"epsilon_bp": round(eps, 6), "iterations": iters, "rho": rho,
           "config_hash": config_hash("threshold", cfg)}
    with _open_out(cfg["out"]) as fh:
        fh.write(json.dumps(res, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# ber


@dataclass
class FrameOutcome:
    bit_errors: int
    bits: int

    @property
    def frame_error(self) -> bool:
        return self.bit_errors > 0


class Simulator:
    """Builds the code once; ``frame(param, index)`` is a pure function of its arguments."""

    def __init__(self, cfg):
        self.cfg = cfg
        fam = cfg["family"]
        if cfg["channel"] not in ("bec", "bsc", "biawgn"):
            raise ConfigError(f"unknown channel {cfg['channel']!r}")
        builder = {"sc-ldpc": self._ldpc, "gscpcc": self._turbo, "scscc": self._turbo,
                   "hscbcc": self._turbo, "staircase": self._staircase}.get(fam)
        if builder is None:
            raise ConfigError(f"unknown family {fam!r}")
        builder()

    # -- builders --------------------------------------------------------
    def _ldpc(self):
        from .channels import make_puncture
        from .ldpc import TannerGraph
        from .protograph import lift

        cfg = self.cfg
        if cfg["decoder"] not in ("bp", "window", "peel"):
            raise ConfigError(f"unknown decoder {cfg['decoder']!r}")
        if cfg["decoder"] == "peel" and cfg["channel"] != "bec":
            raise ConfigError("the peeling decoder needs the BEC")
        base = coupled_base(cfg)
        self.m = base.m
        rho = puncture_rho(cfg, base)
        self.g = TannerGraph.from_matrix(lift(base, cfg["M"], seed=cfg["lift_seed"]))
        self.punct = make_puncture(self.g.n_vn, rho, seed=cfg["seed"]).indices
        n = self.g.n_vn
        k = int(base.design_rate * n)
        self.rate = k / (n - len(self.punct))
        self.kind = "ldpc"

    def _turbo(self):
        from .chain import CoupledChainSpec
        from .trellis import ConvCodeSpec
        from .turbo import RepetitionSpec, gscpcc_build, hscbcc_build, scscc_build

        cfg = self.cfg
        try:
            gen = cfg["gen"] or DEFAULT_GEN[cfg["family"]]
            cc = ConvCodeSpec(gen)
            if cfg["family"] == "gscpcc":
                code = gscpcc_build(RepetitionSpec(cfg["q"], cfg["lambda_r"]), cc, CoupledChainSpec(cfg["L"], cfg["m"]),
                                    cfg["K"], cfg["seed"], cfg["joint_interleaver"])
            elif cfg["family"] == "scscc":
                inner = ConvCodeSpec(cfg["gen_inner"] or gen)
                code = scscc_build(cc, inner, CoupledChainSpec(cfg["L"], cfg["m"]), cfg["K"], cfg["seed"],
                                   cfg["joint_interleaver"])
            else:
                code = hscbcc_build(cc, cfg["sigma"], cfg["L"], cfg["K"], cfg["seed"])
            self.punct = (code.puncture_for(Fraction(cfg["rate"]), cfg["rate_reference"], cfg["seed"])
                          if cfg["rate"] else np.zeros(0, np.int64))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        self.code = code
        n = len(code.tx_all)
        self.rate = code.K / (n - len(self.punct))
        self.kind = "turbo"

    def _staircase(self):
        from .zipper import StaircaseSpec

        cfg = self.cfg
        if cfg["channel"] == "bec":
            raise ConfigError("staircase decoding is hard-decision: use bsc or biawgn")
        try:
            n, k, t = (int(x) for x in cfg["component"].split(","))
            self.spec = StaircaseSpec(n, k, t, cfg["blocks"])
            self.spec.component
        except ValueError as e:
            raise ConfigError(str(e)) from None
        self.rate = float(self.spec.rate)
        self.kind = "staircase"

    # -- per frame -------------------------------------------------------
    def channel(self, param):
        from .channels import ChannelSpec

        kind = self.cfg["channel"]
        try:
            return ChannelSpec(kind, param, self.rate if kind == "biawgn" else 1.0)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def frame(self, param: float, index: int) -> FrameOutcome:
        from .channels import frame_rng, to_llr, transmit

        cfg = self.cfg
        ch = self.channel(param)
        seed = cfg["seed"]
        if self.kind == "ldpc":
            from .ldpc import WindowConfig, bp_decode, peel_decode, window_decode

            # all-zero codeword: every decoder here is symmetric
            y = transmit(np.zeros(self.g.n_vn, np.int8), ch, frame_rng(seed, index, 1))
            llr = to_llr(y, ch)
            llr[self.punct] = 0.0
            dec = cfg["decoder"]
            if dec == "peel":
                _, residual, _ = peel_decode(self.g, llr == 0, frame_rng(seed, index, 2))
                errs = int(residual.sum())
            elif dec == "bp":
                r = bp_decode(self.g, llr, cfg["iters"])
                errs = int(((r.llr < 0) | (r.llr == 0)).sum())
            else:
                r = window_decode(self.g, llr, WindowConfig(cfg["window"], cfg["iters"]), self.m)
                errs = int(((r.llr < 0) | (r.llr == 0)).sum())
            return FrameOutcome(errs, self.g.n_vn)
        if self.kind == "turbo":
            from .ldpc import WindowConfig
            from .turbo import sctc_window_decode

            code = self.code
            info = frame_rng(seed, index, 0).integers(0, 2, code.K, dtype=np.int8)
            cw = code.codeword(info)
            y = transmit(cw, ch, frame_rng(seed, index, 1))
            llr = to_llr(y, ch)
            llr[self.punct] = 0.0
            r = sctc_window_decode(code, llr, WindowConfig(min(cfg["window"], code.L), cfg["iters"]))
            return FrameOutcome(int((r.info != info).sum()), code.K)
        from .zipper import ihdd_window_decode, staircase_encode, staircase_flatten, staircase_info

        sp = self.spec
        h = sp.half
        info = frame_rng(seed, index, 0).integers(0, 2, sp.blocks * h * (sp.k - h), dtype=np.int8)
        cw = staircase_flatten(staircase_encode(sp, info, terminate=True))
        y = transmit(cw, ch, frame_rng(seed, index, 1))
        hard = (y < 0).astype(np.int8) if ch.kind == "biawgn" else y
        r = ihdd_window_decode(sp, hard, window=cfg["window"] * h, max_iters=cfg["iters"])
        est = staircase_info(sp, r.real)
        return FrameOutcome(int((est != info).sum()), len(info))


DEFAULT_GEN = {"gscpcc": "[1,5/7]", "scscc": "[1,5/7]", "hscbcc": "[1,0,5/7;0,1,3/7]"}
_SIM: Simulator | None = None


def _worker_frames(args):
    param, idx = args
    return [_SIM.frame(param, i) for i in idx]


def run_point(sim: Simulator, param: float, cfg) -> tuple[int, int, int, int]:
    """Frames in index order until ``target_errors`` frame errors or ``max_frames``.

    Batches may run in parallel, but the stopping frame is the first index at
    which the running count reaches the target, so results never depend on
    the number of workers.
    """
    global _SIM
    _SIM = sim
    max_frames, target, batch = cfg["max_frames"], cfg["target_errors"], max(1, cfg["batch"])
    threads = max(1, cfg["threads"])
    frames = fe = be = bits = 0
    start = 0
    pool = None
    if threads > 1:
        import multiprocessing as mp

        pool = ProcessPoolExecutor(threads, mp_context=mp.get_context("fork"))
    try:
        while start < max_frames and fe < target:
            chunk = [list(range(s, min(s + batch, max_frames)))
                     for s in range(start, min(start + batch * threads, max_frames), batch)]
            if pool is None:
                results = [_worker_frames((param, c)) for c in chunk]
            else:
                results = list(pool.map(_worker_frames, [(param, c) for c in chunk]))
            for outcome in (o for r in results for o in r):
                frames += 1
                be += outcome.bit_errors
                bits += outcome.bits
                fe += outcome.frame_error
                if fe >= target:
                    break
            start = chunk[-1][-1] + 1
    finally:
        if pool is not None:
            pool.shutdown()
    return frames, fe, be, bits


def cmd_ber(cfg) -> None:
    from .scaling import wilson_interval

    sweep = cfg["sweep"]
    if cfg["max_frames"] < 1:
        raise ConfigError("max_frames must be >= 1")
    if cfg["target_errors"] < 1:
        raise ConfigError("target_errors must be >= 1")
    if not sweep:
        raise ConfigError("empty sweep")
    d = np.diff(sweep)
    if len(d) and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError("sweep values must be strictly monotone")
    sim = Simulator(cfg)
    for p in sweep:
        sim.channel(p)
    h = config_hash("ber", cfg)
    with _open_out(cfg["out"]) as fh:
        fh.write(f"#schema={SCHEMA}\n#config_hash={h}\n#rate={sim.rate:.6f}\n")
        fh.write("param,frames,frame_errors,bit_errors,bits,fer,ber,ber_lo,ber_hi\n")
        for p in sweep:
            frames, fe, be, bits = run_point(sim, p, cfg)
            lo, hi = wilson_interval(be, bits)
            fh.write(f"{p:g},{frames},{fe},{be},{bits},{fe / frames:.6e},{be / bits:.6e},{lo:.6e},{hi:.6e}\n")
            fh.flush()


# ---------------------------------------------------------------------------
# trace


def cmd_trace(cfg) -> None:
    from .ldpc import TannerGraph, WindowConfig
    from .protograph import lift
    from .scaling import (NoSteadyState, collect_traces, estimate_window_failure, mean_trajectory,
                          pf_compose, steady_state_stats)

    if cfg["frames"] < 1:
        raise ConfigError("frames must be >= 1")
    if not 0.0 <= cfg["eps"] <= 1.0:
        raise ConfigError("eps outside [0, 1]")
    base = coupled_base(cfg)
    g = TannerGraph.from_matrix(lift(base, cfg["M"], seed=cfg["lift_seed"]))
    traces = collect_traces(g, cfg["eps"], cfg["frames"], cfg["seed"])
    mean, var, _ = mean_trajectory(traces)
    N = traces[0].N
    h = config_hash("trace", cfg)
    summary = {
        "config_hash": h,
        "tau0_mean": float(np.mean([t.tau0 for t in traces])),
        "tau0_var": float(np.var([t.tau0 for t in traces])),
        "successes": int(sum(t.success for t in traces)),
        "frames": len(traces),
        "pf_estimate": float(np.mean([not t.success for t in traces])),
    }
    try:
        ss = steady_state_stats(traces, min_traces=min(100, cfg["frames"]))
        summary.update(plateau_bounds=list(ss.bounds), plateau_mean=ss.mean, plateau_var=ss.var,
                       plateau_constants=ss.constants)
    except (NoSteadyState, ValueError) as e:
        summary.update(plateau_bounds=None, plateau_error=str(e))
    if cfg["window"]:
        st = estimate_window_failure(g, cfg["eps"], WindowConfig(cfg["window"], cfg["iters"]), base.m,
                                     cfg["frames"], cfg["seed"])
        summary.update(pf_window_empirical=st.pf_empirical, pf_window_composed=pf_compose(st.inputs),
                       pr_o=st.inputs.pr_o, pf1=st.inputs.pf1, pf2=st.inputs.pf2,
                       W_reduced=st.inputs.W_reduced)
    with _open_out(cfg["out"]) as fh:
        fh.write(f"#schema={SCHEMA}\n#config_hash={h}\n")
        fh.write("step,mean_r1,var_r1\n")
        for i in range(0, len(mean), max(1, cfg["stride"])):
            fh.write(f"{i / N:.6f},{mean[i]:.6e},{var[i]:.6e}\n")
    text = json.dumps(summary, sort_keys=True) + "\n"
    if cfg["summary"]:
        path = cfg["summary"]
    elif cfg["out"] != "-":
        path = cfg["out"] + ".json"
    else:
        sys.stderr.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


COMMANDS = {"construct": cmd_construct, "girth": cmd_girth, "threshold": cmd_threshold,
            "ber": cmd_ber, "trace": cmd_trace}


def run_experiment(cmd: str, cfg: dict) -> None:
    COMMANDS[cmd](cfg)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    cli_vals = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_vals = read_config(args.config) if args.config else {}
        cfg = resolve(args.command, file_vals, cli_vals)
        run_experiment(args.command, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # noqa: BLE001 - any failure inside a run maps to exit code 3
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
