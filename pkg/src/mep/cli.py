"""Command-line front end.

Subcommands: ``mask`` (dump the small-energy mask for a wav), ``attack``
(perturb one wav and write the adversarial audio plus artifacts),
``evaluate`` (synthetic-corpus comparison of attack methods), and
``selfcheck`` (built-in verification suites).

Every subcommand is deterministic given its flags and seeds.  A
``--config`` file of ``key=value`` lines supplies defaults; explicit
flags win.  Exit codes: 0 success, 1 attack or check failure, 2 usage
error.  The ``MEP_LOG_LEVEL`` environment variable sets the logging
threshold (default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import masking, matrixio, metrics, selfcheck, spectral
from .attacks import (FEATURE_PRODUCT, GRADIENT_MASK, METHODS, AttackConfig,
                      run_attack)
from .audio import read_wav, write_wav
from .corpus import CorpusSpec
from .encoder import SpeakerEncoder
from .errors import MepError
from .masking import MaskConfig
from .metrics import TrialLayout, snr
from .spectral import MelFilterbank, StftConfig

log = logging.getLogger("mep.cli")

#: Method tokens accepted by ``evaluate``; "all" expands to every attack.
EVALUATE_TOKENS = METHODS + ("baseline", "all")


class UsageError(MepError):
    """Bad flag/config combination; maps to exit code 2."""


# -- deterministic serialization ---------------------------------------------

def jsonable(obj):
    """Mirror of obj with only JSON-safe values.

    Non-finite floats become the strings "inf", "-inf", "nan" so the
    document stays parseable by strict readers and identical across
    runs.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isfinite(value):
            return value
        if math.isnan(value):
            return "nan"
        return "inf" if value > 0 else "-inf"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_json(obj))
        fh.write("\n")


# -- config file -------------------------------------------------------------

def load_config(path: str) -> dict[str, str]:
    """key=value lines; '#' starts a comment; dashes normalize to
    underscores so file keys match flag names."""
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _cast(name: str, raw: str, kind):
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise UsageError(f"config key {name}: cannot parse {raw!r}") from exc


def resolve(args, config: dict[str, str], name: str, default, kind=str,
            choices=None):
    """Effective option value: explicit flag, else config file, else default."""
    value = getattr(args, name, None)
    if value is None and name in config:
        value = _cast(name, config[name], kind)
    if value is None:
        value = default
    if choices is not None and value is not None and value not in choices:
        raise UsageError(f"option {name}: {value!r} not in {sorted(choices)}")
    return value


# -- shared option plumbing --------------------------------------------------

def _add_attack_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, default=None,
                   help="attack method (default i-mep)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="per-bin energy perturbation budget (default 0.0002)")
    p.add_argument("--iterations", type=int, default=None,
                   help="iteration count for iterative methods (default 20)")
    p.add_argument("--alpha", type=float, default=None,
                   help="step size; defaults to epsilon/iterations")
    p.add_argument("--eta-th", dest="eta_th", type=float, default=None,
                   help="masking threshold in dB below the peak (default -20)")
    p.add_argument("--mep-mode", dest="mep_mode",
                   choices=(GRADIENT_MASK, FEATURE_PRODUCT), default=None,
                   help="masked-step shaping (default gradient-mask)")
    p.add_argument("--encoder-seed", dest="encoder_seed", type=int, default=None,
                   help="seed of the encoder under attack (default 0)")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="seed for stochastic pieces (default 0)")
    p.add_argument("--out-dir", dest="out_dir", default=None,
                   help="output directory (default .)")
    p.add_argument("--format", dest="format", choices=("json", "csv"),
                   default=None, help="stdout summary format (default json)")
    p.add_argument("--config", default=None,
                   help="key=value defaults file; flags override it")


def _attack_config(args, config) -> AttackConfig:
    return AttackConfig(
        method=resolve(args, config, "method", "i-mep", str, METHODS),
        epsilon=resolve(args, config, "epsilon", 0.0002, float),
        iterations=resolve(args, config, "iterations", 20, int),
        alpha=resolve(args, config, "alpha", None, float),
        mep_mode=resolve(args, config, "mep_mode", GRADIENT_MASK, str,
                         (GRADIENT_MASK, FEATURE_PRODUCT)),
        rng_seed=resolve(args, config, "seed", 0, int),
    )


def _mask_config(args, config) -> MaskConfig:
    return MaskConfig(eta_th_db=resolve(args, config, "eta_th", -20.0, float))


def _out_dir(args, config) -> str:
    out = resolve(args, config, "out_dir", ".", str)
    os.makedirs(out, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------

def cmd_mask(args) -> int:
    config = load_config(args.config) if args.config else {}
    mask_cfg = _mask_config(args, config)
    out = _out_dir(args, config)

    wave = read_wav(args.input)
    spec = spectral.stft(wave.samples, StftConfig())
    result = masking.build_mask(spectral.power(spec), mask_cfg)

    mask_path = os.path.join(out, "mask.mepm")
    matrixio.save_matrix(result.mask, mask_path)
    masked_fraction = 1.0 - result.kept_fraction
    print(f"x_peak: {result.x_peak:.9e}")
    print(f"x_th: {result.x_th:.9e}")
    print(f"masked_fraction: {masked_fraction:.6f}")
    print(f"wrote {mask_path}")
    return 0


def cmd_attack(args) -> int:
    config = load_config(args.config) if args.config else {}
    attack_cfg = _attack_config(args, config)
    mask_cfg = _mask_config(args, config)
    out = _out_dir(args, config)
    stft_cfg = StftConfig()
    fb = MelFilterbank(config=stft_cfg)
    enc = SpeakerEncoder(seed=resolve(args, config, "encoder_seed", 0, int))

    wave = read_wav(args.input)
    target = None
    if args.target is not None:
        target = enc.embed_wave(read_wav(args.target).samples, fb, stft_cfg)

    result = run_attack(wave, enc, attack_cfg, fb, target=target,
                        mask_cfg=mask_cfg, stft_cfg=stft_cfg)

    wav_path = os.path.join(out, "adversarial.wav")
    delta_path = os.path.join(out, "delta.mepm")
    report_path = os.path.join(out, "attack.json")
    write_wav(result.wave, wav_path)
    matrixio.save_matrix(result.delta, delta_path)

    summary = {
        "method": attack_cfg.method,
        "epsilon": attack_cfg.epsilon,
        "iterations": attack_cfg.iterations,
        "alpha": attack_cfg.step_size,
        "eta_th": mask_cfg.eta_th_db,
        "loss_trace": list(result.loss_trace),
        "snr_db": snr(wave.samples, result.wave.samples),
        "delta_linf": float(np.max(np.abs(result.delta))),
    }
    write_json(report_path, summary)

    print(f"method: {attack_cfg.method}")
    print(f"loss: {result.loss_trace[0]:.6f} -> {result.loss_trace[-1]:.6f}")
    print(f"snr_db: {summary['snr_db']:.4f}"
          if math.isfinite(summary["snr_db"]) else "snr_db: inf")
    print(f"delta_linf: {summary['delta_linf']:.9e}")
    print(f"wrote {wav_path}, {delta_path}, {report_path}")
    return 0


def _parse_methods(raw: str) -> list[str]:
    tokens = [t.strip() for t in raw.split(",") if t.strip()]
    if not tokens:
        raise UsageError("empty --methods list")
    for t in tokens:
        if t not in EVALUATE_TOKENS:
            raise UsageError(f"unknown method {t!r}; valid: {EVALUATE_TOKENS}")
    methods: list[str] = []
    for t in tokens:
        expansion = METHODS if t == "all" else (t,) if t != "baseline" else ()
        for m in expansion:
            if m not in methods:
                methods.append(m)
    return methods


def _report_csv(report: metrics.MetricReport) -> str:
    """Method comparison table; baseline row first, blank cells where a
    column does not apply."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "epsilon", "iterations", "eta_th",
                     "snr_db_mean", "lsd_db_mean", "eer_percent"])
    writer.writerow(["baseline", "", "", "", "", "",
                     f"{report.baseline_eer_percent:.6f}"])
    for row in report.rows:
        writer.writerow([
            row.method,
            f"{row.epsilon:.9g}",
            str(row.iterations),
            f"{row.eta_th:.9g}",
            f"{row.snr_db_mean:.6f}" if math.isfinite(row.snr_db_mean) else "inf",
            f"{row.lsd_db_mean:.6f}",
            f"{row.eer_percent:.6f}",
        ])
    return buf.getvalue()


def cmd_evaluate(args) -> int:
    config = load_config(args.config) if args.config else {}
    attack_cfg = _attack_config(args, config)
    mask_cfg = _mask_config(args, config)
    out = _out_dir(args, config)
    methods = _parse_methods(resolve(args, config, "methods", "all", str))

    spec = CorpusSpec(
        n_speakers=resolve(args, config, "speakers", 8, int),
        utterances_per_speaker=resolve(args, config, "utterances", 10, int),
        duration=resolve(args, config, "duration", 1.0, float),
        seed=resolve(args, config, "seed", 0, int),
    )
    enc = SpeakerEncoder(seed=resolve(args, config, "encoder_seed", 0, int))
    fb = MelFilterbank(config=StftConfig())

    log.info("evaluating %d methods on %d speakers x %d utterances",
             len(methods), spec.n_speakers, spec.utterances_per_speaker)
    report = metrics.evaluate_attack(spec, methods, enc, fb, attack_cfg,
                                     mask_cfg, TrialLayout())

    json_path = os.path.join(out, "report.json")
    csv_path = os.path.join(out, "report.csv")
    write_json(json_path, report.as_dict())
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_report_csv(report))

    if resolve(args, config, "format", "json", str, ("json", "csv")) == "csv":
        sys.stdout.write(_report_csv(report))
    else:
        sys.stdout.write(dump_json(report.as_dict()) + "\n")
    print(f"wrote {json_path}, {csv_path}", file=sys.stderr)
    return 0


def cmd_selfcheck(args) -> int:
    results = selfcheck.run_all(seed=args.seed if args.seed is not None else 0)
    all_ok = True
    for suite in results:
        print(suite.summary())
        for failure in suite.failures:
            print(f"  {failure}")
        all_ok = all_ok and suite.ok
    print("selfcheck: " + ("ok" if all_ok else "FAILED"))
    return 0 if all_ok else 1


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mep",
        description="Energy-masked adversarial perturbations for a toy "
                    "speaker-embedding model.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_mask = sub.add_parser("mask", help="dump the small-energy mask of a wav")
    p_mask.add_argument("input", help="input wav (16 kHz mono)")
    p_mask.add_argument("--eta-th", dest="eta_th", type=float, default=None)
    _add_common_flags(p_mask)
    p_mask.set_defaults(func=cmd_mask)

    p_att = sub.add_parser("attack", help="perturb one wav")
    p_att.add_argument("input", help="input wav (16 kHz mono)")
    p_att.add_argument("--target", default=None,
                       help="wav whose embedding is the push-away target "
                            "(default: the input's own)")
    _add_attack_flags(p_att)
    _add_common_flags(p_att)
    p_att.set_defaults(func=cmd_attack)

    p_eval = sub.add_parser("evaluate",
                            help="compare methods on a synthetic corpus")
    p_eval.add_argument("--methods", default=None,
                        help="comma list of methods, 'baseline', or 'all'")
    p_eval.add_argument("--speakers", type=int, default=None)
    p_eval.add_argument("--utterances", type=int, default=None)
    p_eval.add_argument("--duration", type=float, default=None)
    _add_attack_flags(p_eval)
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_check = sub.add_parser("selfcheck", help="run built-in verification suites")
    p_check.add_argument("--seed", type=int, default=None)
    p_check.set_defaults(func=cmd_selfcheck)

    return parser


def _configure_logging() -> None:
    name = os.environ.get("MEP_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except MepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
