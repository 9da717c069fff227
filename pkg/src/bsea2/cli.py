"""Command-line workbench: every capability behind one entry point.

Exit codes: 0 success, 1 domain error (the structured error name goes to
stderr), 2 usage error. All stochastic subcommands take an explicit --seed
and reports are byte-identical across reruns with identical flags; an
optional --stamp flag adds a wall-clock field to the metadata, which golden
comparisons must exclude.
"""
import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, attack, classifier, randomness
from .bits import bits_to_bytes, bytes_to_bits, hex_byte, hex_word, parse_hex
from .cipher import (InstanceSpec, SecretKey, encrypt, key_setup, keystream,
                     load_spec, random_key)
from .errors import Bsea2Error, WrongLength
from .plaintext import (DEFAULT_MODEL, PlaintextModel, estimate_p0)


def _spec_from_args(args) -> InstanceSpec:
    spec = load_spec(args.spec)
    f0 = getattr(args, "f0", None)
    if f0 is not None:
        word = parse_hex(f0)
        if word != spec.f0:
            spec = InstanceSpec(f"{spec.name}+f0", spec.polynomials, word)
    return spec


def _meta(args, spec: InstanceSpec) -> dict:
    meta = {"tool_version": __version__,
            "spec": spec.to_json_dict(),
            "spec_fingerprint": spec.fingerprint()}
    if getattr(args, "stamp", False):
        meta["created"] = datetime.now(timezone.utc).isoformat()
    return meta


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _emit_json(args, payload: dict) -> None:
    _emit(args, json.dumps(payload, indent=2) + "\n")


def _read_key(args, spec: InstanceSpec) -> SecretKey:
    if args.key:
        text = args.key
    else:
        with open(args.key_file) as fh:
            text = fh.read().strip()
    return SecretKey.from_hex(text, spec.key_bits)


def _load_sample_bits(path: str, nbits: int | None) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    bits = bytes_to_bits(data)
    if nbits is None:
        try:
            with open(path + ".meta.json") as fh:
                nbits = json.load(fh)["bits"]
        except FileNotFoundError:
            nbits = bits.size
    if nbits > bits.size:
        raise WrongLength(f"{path} holds {bits.size} bits, need {nbits}")
    return bits[:nbits]


# ---------------------------------------------------------------- keygen

def _cmd_keygen(args) -> int:
    spec = _spec_from_args(args)
    rng = np.random.default_rng(args.seed)
    report = classifier.partition_keys(spec)
    if args.key_class == "any":
        kprimes = classifier.attackable_kprimes(spec)
    else:
        rows = {row.label: row for row in report.rows}
        if args.key_class not in rows:
            raise Bsea2Error(
                f"spec has no class {args.key_class}; available: "
                f"{', '.join(rows)}")
        kprimes = rows[args.key_class].kprimes
    kprime = int(rng.choice(np.array(kprimes)))
    key = random_key(spec, rng, kprime=kprime)
    row = report.row_for(kprime)
    if args.format == "json":
        _emit_json(args, {
            "key": key.to_hex(),
            "kprime": hex_byte(kprime),
            "class": row.label,
            "exponent": row.exponent,
            "seed": args.seed,
            "meta": _meta(args, spec),
        })
    else:
        _emit(args, key.to_hex())
    return 0


# ------------------------------------------------- keystream / encrypt

def _cmd_keystream(args) -> int:
    spec = _spec_from_args(args)
    key = _read_key(args, spec)
    bits = keystream(key_setup(spec, key), args.nbits)
    with open(args.out, "wb") as fh:
        fh.write(bits_to_bytes(bits))
    if args.nbits % 8:
        with open(args.out + ".meta.json", "w") as fh:
            json.dump({"bits": args.nbits}, fh)
    print(f"wrote {args.nbits} keystream bits to {args.out}",
          file=sys.stderr)
    return 0


def _cmd_encrypt(args) -> int:
    spec = _spec_from_args(args)
    key = _read_key(args, spec)
    with open(args.infile, "rb") as fh:
        data = fh.read()
    out_bits = encrypt(key_setup(spec, key), bytes_to_bits(data))
    with open(args.out, "wb") as fh:
        fh.write(bits_to_bytes(out_bits))
    print(f"processed {len(data)} bytes -> {args.out}", file=sys.stderr)
    return 0


# ------------------------------------------------- spectrum / classify

def _parse_kprime(text: str) -> int:
    value = parse_hex(text)
    if not 0 <= value <= 0xFF:
        raise Bsea2Error(f"K' must be an 8-bit value, got {text}")
    return value


def _cmd_spectrum(args) -> int:
    spec = _spec_from_args(args)
    kprime = _parse_kprime(args.kprime)
    model = PlaintextModel(p0=args.p0) if args.p0 is not None else DEFAULT_MODEL
    report = classifier.spectrum_report(spec, kprime, model)
    report["meta"] = _meta(args, spec)
    if args.format == "json":
        _emit_json(args, report)
        return 0
    lines = [
        f"f0       = {report['f0']}",
        f"K'       = {report['kprime']}",
        f"f        = {report['f']}",
        f"walsh(f) = ({', '.join(map(str, report['walsh_f']))})",
        f"walsh(g) = ({', '.join(map(str, report['walsh_g']))})",
        f"keystream distinguisher: {'yes' if report['distinguisher'] else 'no'}",
        "usable masks (g):",
    ]
    for m in report["usable_masks"]:
        regs = ",".join(f"R{r}" for r in m["registers"])
        extra = (f"  p'={m['p_prime']:.4f}" if "p_prime" in m else "")
        lines.append(f"  u={m['mask_bits']} ({regs:<8}) chi={m['chi']:+d} "
                     f"p={m['p']:.4f}{extra}")
    if report["plan"] is not None:
        plan = report["plan"]
        lines.append(f"plan: max exponent 2^{plan['max_exponent']}")
        for st in plan["stages"]:
            regs = ",".join(f"R{r}" for r in st["targets"])
            lines.append(
                f"  stage u={st['mask_bits']} targets [{regs}] "
                f"2^{st['exponent']} known {st['known']}")
    else:
        lines.append(f"plan: UNATTACKABLE {report['error']['uncovered']}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_classify(args) -> int:
    spec = _spec_from_args(args)
    kprime = _parse_kprime(args.kprime)
    report = classifier.partition_keys(spec)
    row = report.row_for(kprime)
    plan = report.plans[kprime]
    payload = {
        "kprime": hex_byte(kprime),
        "class": row.label,
        "exponent": row.exponent,
        "plan": (classifier.plan_to_dict(plan, spec.degrees)
                 if plan is not None else None),
        "meta": _meta(args, spec),
    }
    if args.format == "json":
        _emit_json(args, payload)
    else:
        comp = f"2^{row.exponent}" if row.exponent is not None else "none"
        _emit(args, f"K' {hex_byte(kprime)}: class {row.label} "
                    f"(complexity {comp})\n")
    return 0


# ------------------------------------------------------------ partition

def _cmd_partition(args) -> int:
    spec = _spec_from_args(args)
    report = classifier.partition_keys(spec)
    payload = classifier.report_to_json_dict(report, spec)
    payload["meta"] = _meta(args, spec)
    if args.format == "json":
        _emit_json(args, payload)
        return 0
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["class", "complexity", "example_kprime",
                         "example_spectrum", "count", "fraction"])
        for row in report.rows:
            comp = f"2^{row.exponent}" if row.exponent is not None else "none"
            spec_txt = " ".join(f"{v:+d}" for v in row.example_spectrum)
            writer.writerow([row.label, comp, hex_byte(row.example_kprime),
                             spec_txt, row.count, f"{row.fraction:.4f}"])
        _emit(args, buf.getvalue())
        return 0
    lines = [f"f0 = {hex_word(report.f0)}"]
    for row in report.rows:
        comp = f"2^{row.exponent}" if row.exponent is not None else "unattackable"
        lines.append(f"{row.label:<13} {comp:<7} count {row.count:>3} "
                     f"fraction {row.fraction:.4f} example "
                     f"{hex_byte(row.example_kprime)}")
    if report.diff_vs_paper is not None:
        lines.append("diff vs published reference counts:")
        for d in report.diff_vs_paper:
            exp = f"2^{d['exponent']}" if d["exponent"] is not None else "unatt."
            lines.append(f"  {exp:<7} ours {d['ours']:>3} "
                         f"reference {d['reference']:>3} delta {d['delta']:+d}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


# --------------------------------------------------------------- attack

def _cmd_attack(args) -> int:
    spec = _spec_from_args(args)
    bits = _load_sample_bits(args.ciphertext, args.bits)
    if args.corpus:
        with open(args.corpus, "rb") as fh:
            model = estimate_p0(fh.read(), source=args.corpus)
    elif args.p0 is not None:
        model = PlaintextModel(p0=args.p0, source="cli")
    else:
        model = DEFAULT_MODEL
    sample = attack.CiphertextSample(bits=bits, model=model, spec=spec)

    def progress(info):
        if isinstance(info, dict):
            eta = f", eta {info['eta_s']}s" if info.get("eta_s") else ""
            print(f"  stage mask {info['mask']:04b} 2^{info['exponent']} "
                  f"{info['states_per_sec'] or '?'} states/s{eta}",
                  file=sys.stderr)
        else:
            print(f"  K' {hex_byte(info.kprime)}: {info.status}",
                  file=sys.stderr)

    payload = {
        "sample_bits": int(bits.size),
        "p0": model.p0,
        "retention_k": args.retention,
        "budget_exponent": args.budget,
        "seed": args.seed,
        "meta": _meta(args, spec),
    }
    if args.kprime is not None:
        kprime = _parse_kprime(args.kprime)
        plan = classifier.plan_attack(spec, kprime)
        try:
            result = attack.run_plan(
                sample, plan, k=args.retention, budget=args.budget,
                threads=args.threads, progress=progress)
            payload["mode"] = "single"
            payload["transcript"] = result.transcript
            payload["recovered_key"] = result.candidates[0].key.to_hex()
        except attack.EmptyBeam as exc:
            print(f"error: EmptyBeam: {exc}", file=sys.stderr)
            payload["mode"] = "single"
            payload["transcript"] = exc.transcript
            payload["recovered_key"] = None
    else:
        result = attack.run_parallel_instances(
            sample, k=args.retention, budget=args.budget,
            threads=args.threads, stop_on_success=not args.exhaustive,
            progress=progress)
        payload["mode"] = "all-256"
        payload["recovered_key"] = (result.best.key.to_hex()
                                    if result.best else None)
        if result.best is not None:
            payload["winner"] = {
                "kprime": hex_byte(result.best.kprime),
                "transcript": result.transcripts[result.best.kprime],
            }
        payload["statuses"] = [
            {
                "kprime": hex_byte(st.kprime),
                "exponent": st.exponent,
                "status": st.status,
                "attempt": st.attempt,
            }
            for st in result.statuses
        ]
    _emit_json(args, payload)
    return 0 if payload["recovered_key"] else 1


# ----------------------------------------------------------------- fips

def _cmd_fips(args) -> int:
    spec = _spec_from_args(args)
    nbits = randomness.thresholds()["stream_bits"]
    if not args.infile and not args.key and not args.key_file:
        print("usage error: fips needs --in FILE or --key/--key-file",
              file=sys.stderr)
        return 2
    if args.infile:
        bits = _load_sample_bits(args.infile, None)
        if bits.size < nbits:
            raise WrongLength(f"{args.infile} holds {bits.size} bits, "
                              f"battery needs {nbits}")
        bits = bits[:nbits]
    else:
        key = _read_key(args, spec)
        bits = keystream(key_setup(spec, key), nbits)
    res = randomness.fips_battery(bits)
    payload = res.to_dict()
    payload["meta"] = _meta(args, spec)
    if args.format == "json":
        _emit_json(args, payload)
    else:
        lines = [
            f"monobit : ones={res.monobit[0]}  "
            f"{'pass' if res.monobit[1] else 'FAIL'}",
            f"poker   : X={res.poker[0]:.3f}  "
            f"{'pass' if res.poker[1] else 'FAIL'}",
            f"runs    : {'pass' if res.runs[1] else 'FAIL'}",
            f"long run: max={res.long_run[0]}  "
            f"{'pass' if res.long_run[1] else 'FAIL'}",
            f"all     : {'pass' if res.all_pass else 'FAIL'}",
        ]
        _emit(args, "\n".join(lines) + "\n")
    return 0 if res.all_pass else 1


def _cmd_passrates(args) -> int:
    spec = _spec_from_args(args)
    data = randomness.batch_pass_rates(spec, args.keys, args.seed)
    data["meta"] = _meta(args, spec)
    if args.format == "json":
        _emit_json(args, data)
        return 0
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["class", "exponent", "n", "monobit_rate",
                         "poker_rate", "runs_rate", "long_run_rate",
                         "all_pass_rate", "ci_low", "ci_high"])
        for row in data["rows"] + [data["overall"]]:
            writer.writerow([
                row["class"], row["exponent"], row["n"],
                f"{row['monobit_rate']:.4f}", f"{row['poker_rate']:.4f}",
                f"{row['runs_rate']:.4f}", f"{row['long_run_rate']:.4f}",
                f"{row['all_pass_rate']:.4f}",
                f"{row['all_pass_ci95'][0]:.4f}",
                f"{row['all_pass_ci95'][1]:.4f}",
            ])
        _emit(args, buf.getvalue())
        return 0
    lines = []
    for row in data["rows"] + [data["overall"]]:
        lo, hi = row["all_pass_ci95"]
        lines.append(f"{row['class']:<13} n={row['n']:>5} all-pass "
                     f"{row['all_pass_rate']:.3f} (95% CI {lo:.3f}-{hi:.3f})")
    lines.append(f"reference all-pass rate {data['reference_all_pass_rate']}"
                 f" delta {data['reference_delta']:+.3f}"
                 f"{'  [FLAGGED]' if data['reference_flagged'] else ''}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------- parser

def _add_spec_arg(p, default="default"):
    p.add_argument("--spec", default=default,
                   help="instance: default, mini, or a spec JSON file")


def _add_key_args(p):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--key", help="key as hex characters")
    group.add_argument("--key-file", help="file holding the hex key")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bsea2",
        description="Build-and-break workbench for the BSEA-2 stream cipher")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="sample a key from an attack class")
    _add_spec_arg(p)
    p.add_argument("--f0", help="override the spec's initial truth table")
    p.add_argument("--class", dest="key_class", default="any",
                   help="class label from partition (default: any attackable)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("keystream", help="write raw keystream bits")
    _add_spec_arg(p)
    _add_key_args(p)
    p.add_argument("--nbits", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_keystream, f0=None)

    for name in ("encrypt", "decrypt"):
        p = sub.add_parser(name, help=f"{name} a file (XOR keystream)")
        _add_spec_arg(p)
        _add_key_args(p)
        p.add_argument("--in", dest="infile", required=True)
        p.add_argument("--out", required=True)
        p.set_defaults(func=_cmd_encrypt, f0=None)

    p = sub.add_parser("spectrum",
                       help="masked table, Walsh spectra, usable masks, plan")
    _add_spec_arg(p)
    p.add_argument("--f0", help="override the spec's initial truth table")
    p.add_argument("--kprime", required=True)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("classify", help="attack class of one K'")
    _add_spec_arg(p)
    p.add_argument("--f0")
    p.add_argument("--kprime", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("partition", help="classify all 256 K' values")
    _add_spec_arg(p)
    p.add_argument("--f0")
    p.add_argument("--format", choices=["text", "json", "csv"],
                   default="text")
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("attack", help="run the ciphertext-only attack")
    _add_spec_arg(p)
    p.add_argument("--f0")
    p.add_argument("--ciphertext", required=True)
    p.add_argument("--bits", type=int, default=None,
                   help="bit-precise sample length (default: whole file)")
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--corpus", help="estimate p0 from this byte corpus")
    p.add_argument("--kprime", default=None,
                   help="attack a single K' instance (default: all 256)")
    p.add_argument("--seed", type=int, default=None,
                   help="recorded in the transcript (the attack itself is "
                        "deterministic)")
    p.add_argument("--exhaustive", action="store_true",
                   help="do not stop at the first successful tier")
    p.add_argument("--retention", type=int, default=attack.DEFAULT_RETENTION)
    p.add_argument("--budget", type=int,
                   default=attack.DEFAULT_BUDGET_EXPONENT,
                   help="refuse stages above 2^budget joint states")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("fips", help="FIPS 140-2 battery over 20,000 bits")
    _add_spec_arg(p)
    p.add_argument("--in", dest="infile")
    p.add_argument("--key")
    p.add_argument("--key-file")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_fips, f0=None)

    p = sub.add_parser("passrates",
                       help="FIPS pass rates over sampled keys, by class")
    _add_spec_arg(p)
    p.add_argument("--keys", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["text", "json", "csv"],
                   default="text")
    p.add_argument("--out")
    p.add_argument("--stamp", action="store_true")
    p.set_defaults(func=_cmd_passrates, f0=None)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Bsea2Error as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
