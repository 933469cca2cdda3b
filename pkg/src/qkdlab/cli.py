"""Command-line front end.

Subcommands:
  simulate    run sessions (with optional attacks) and emit per-trial CSV
  bounds      evaluate the counting-bound chain and secrecy rate
  attack-eval evaluate a coherent attack state from a file
  equivalence compare direct and pair-based protocol constructions

A scenario JSON file (``--scenario``) overrides flags field by field.
All randomness derives from ``--seed`` through per-trial counter-based
streams, so a scenario re-run reproduces its outputs byte for byte.
Exit codes: 0 on success, 2 for configuration errors, 3 for quantities
outside a bound's validity regime.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .adversary import (
    CoherentAttack,
    InterceptResend,
    NoAttack,
    SubstituteAttack,
    TestPlan,
    axis_averaged_passing_probability,
    conditional_ancilla_state,
    eve_info_bound,
)
from .bounds import RegimeError, atypical_dim_chain, eve_info_upper, secrecy_lower_bound
from .channel import ChannelModel, fidelity_from_epsilon
from .errors import ConfigError
from .postprocess import distill_key
from .protocol import (
    SessionConfig,
    epr_bb84_equivalence_check,
    run_bb84_session,
    run_epr_session,
)
from .qstate import MeasurementAxis, random_axes
from .rng import stream

CSV_COLUMNS = (
    "trial",
    "verdict",
    "error_count",
    "m",
    "qber_estimate",
    "sifted_len",
    "final_len",
    "leaked_bits",
    "eve_holevo_bits",
)

SCENARIO_FIELDS = {
    "name",
    "protocol",
    "n",
    "m",
    "fidelity",
    "epsilon",
    "omega",
    "attack",
    "attack_file",
    "trials",
    "seed",
    "c",
    "threshold_mode",
    "kprime",
    "theta",
    "out",
    "summary",
    "transcript",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run key-agreement sessions")
    sim.add_argument("--protocol", choices=("epr", "bb84"), default="epr")
    sim.add_argument("--n", type=int, default=1000, help="pairs/photons per session")
    sim.add_argument("--m", type=int, default=100, help="test sample size (epr)")
    sim.add_argument("--fidelity", type=float, default=None)
    sim.add_argument("--epsilon", type=float, default=None, help="channel error rate")
    sim.add_argument("--omega", type=float, default=0.5, help="diagonal-basis probability")
    sim.add_argument("--attack", default="none",
                     help="none | intercept_resend[:policy] | substitute:FRACTION | coherent")
    sim.add_argument("--attack-file", dest="attack_file", default=None)
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--c", type=float, default=1.0, help="window width coefficient")
    sim.add_argument("--threshold-mode", dest="threshold_mode",
                     choices=("window", "two_epsilon"), default="two_epsilon")
    sim.add_argument("--kprime", type=float, default=10.0)
    sim.add_argument("--theta", type=float, default=0.0)
    sim.add_argument("--out", default=None, help="per-trial CSV path (default stdout)")
    sim.add_argument("--summary", default=None, help="summary JSON path")
    sim.add_argument("--transcript", default=None, help="JSONL transcript of trial 0")
    sim.add_argument("--scenario", default=None, help="JSON file overriding flags")
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bounds", help="counting bounds and secrecy rate")
    bnd.add_argument("--n", type=int, default=None)
    bnd.add_argument("--epsilon", type=float, default=None)
    bnd.add_argument("--kprime", type=float, default=10.0)
    bnd.add_argument("--theta", type=float, default=0.0)
    bnd.add_argument("--grid-n", dest="grid_n", default=None, help="comma list of N values")
    bnd.add_argument("--grid-eps", dest="grid_eps", default=None, help="comma list of eps values")
    bnd.add_argument("--out", default=None, help="CSV path for grid mode")
    bnd.add_argument("--summary", default=None)
    bnd.set_defaults(func=cmd_bounds)

    atk = sub.add_parser("attack-eval", help="evaluate a coherent attack file")
    atk.add_argument("--attack-file", dest="attack_file", required=True)
    atk.add_argument("--m", type=int, required=True, help="tested pairs per plan")
    atk.add_argument("--epsilon", type=float, default=None)
    atk.add_argument("--theta", type=float, default=0.0)
    atk.add_argument("--axis-samples", dest="axis_samples", type=int, default=1000)
    atk.add_argument("--seed", type=int, default=0)
    atk.add_argument("--accept-lo", dest="accept_lo", type=int, default=0)
    atk.add_argument("--accept-hi", dest="accept_hi", type=int, default=0)
    atk.add_argument("--summary", default=None)
    atk.set_defaults(func=cmd_attack_eval)

    eqv = sub.add_parser("equivalence", help="direct vs pair-based construction")
    eqv.add_argument("--n", type=int, default=20000)
    eqv.add_argument("--fidelity", type=float, default=1.0)
    eqv.add_argument("--omega", type=float, default=0.5)
    eqv.add_argument("--seed", type=int, default=0)
    eqv.add_argument("--summary", default=None)
    eqv.set_defaults(func=cmd_equivalence)
    return parser


def _apply_scenario(args: argparse.Namespace) -> None:
    if not args.scenario:
        return
    try:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("scenario file must hold a JSON object")
    for key, value in data.items():
        if key not in SCENARIO_FIELDS:
            raise ConfigError(f"unknown scenario field {key!r}")
        if key != "name":
            setattr(args, key, value)


def _load_attack_file(path) -> CoherentAttack:
    try:
        return CoherentAttack.from_file(path)
    except OSError as exc:
        raise ConfigError(f"cannot read attack file: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad attack file {path}: {exc}") from exc


def _parse_attack(spec, attack_file):
    if isinstance(spec, dict):
        kind = spec.get("kind", "none")
        if kind == "none":
            return NoAttack()
        if kind == "intercept_resend":
            return InterceptResend(policy=spec.get("policy", "random"))
        if kind == "substitute":
            if "fraction" not in spec:
                raise ConfigError("substitute attack needs a 'fraction' field")
            weights = spec.get("label_weights", (1 / 3, 1 / 3, 1 / 3))
            return SubstituteAttack(fraction=float(spec["fraction"]),
                                    label_weights=tuple(weights))
        if kind == "coherent":
            path = spec.get("file", attack_file)
            if not path:
                raise ConfigError("coherent attack needs an attack file")
            return _load_attack_file(path)
        raise ConfigError(f"unknown attack kind {kind!r}")
    spec = str(spec)
    if spec == "none":
        return NoAttack()
    if spec.startswith("intercept_resend"):
        _, _, policy = spec.partition(":")
        return InterceptResend(policy=policy or "random")
    if spec.startswith("substitute"):
        _, sep, fraction = spec.partition(":")
        if not sep:
            raise ConfigError("substitute attack needs a fraction, e.g. substitute:0.02")
        try:
            return SubstituteAttack(fraction=float(fraction))
        except ValueError as exc:
            raise ConfigError(f"bad substitution fraction {fraction!r}") from exc
    if spec == "coherent":
        if not attack_file:
            raise ConfigError("--attack coherent requires --attack-file")
        return _load_attack_file(attack_file)
    raise ConfigError(f"unknown attack {spec!r}")


def _resolve_channel(fidelity, epsilon) -> ChannelModel:
    if fidelity is not None and epsilon is not None:
        raise ConfigError("give either fidelity or epsilon, not both")
    if epsilon is not None:
        return ChannelModel(fidelity_from_epsilon(float(epsilon)))
    return ChannelModel(1.0 if fidelity is None else float(fidelity))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_simulate(args: argparse.Namespace) -> int:
    _apply_scenario(args)
    if args.trials < 1:
        raise ConfigError(f"trials must be positive, got {args.trials}")
    chan = _resolve_channel(args.fidelity, args.epsilon)
    attack = _parse_attack(args.attack, args.attack_file)
    config = SessionConfig(
        n_pairs=args.n,
        test_size=args.m,
        expected_error=chan.epsilon,
        window_coeff=args.c,
        omega=args.omega,
        threshold_mode=args.threshold_mode,
        seed=args.seed,
    )
    run = run_epr_session if args.protocol == "epr" else run_bb84_session

    rows = []
    sifted_fractions = []
    first_transcript = None
    for trial in range(args.trials):
        transcript = run(config, chan, attack, stream(args.seed, trial))
        if trial == 0:
            first_transcript = transcript
        sifted_fractions.append(transcript.sifted_fraction)
        final_len = 0
        leaked = 0
        if (
            transcript.accepted
            and transcript.sifted_key_a.size > 0
            and transcript.error_rate_estimate < 0.25
        ):
            result = distill_key(
                transcript.sifted_key_a,
                transcript.sifted_key_b,
                transcript.error_rate_estimate,
                stream(args.seed, trial, 1),
                kprime=args.kprime,
            )
            final_len, leaked = result.final_length, result.leaked_bits
        rows.append(
            {
                "trial": trial,
                "verdict": transcript.verdict,
                "error_count": transcript.observed_error_count,
                "m": transcript.test_size,
                "qber_estimate": transcript.error_rate_estimate,
                "sifted_len": int(transcript.sifted_key_a.size),
                "final_len": final_len,
                "leaked_bits": leaked,
                "eve_holevo_bits": transcript.eve_holevo_bits,
            }
        )

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())

    if args.summary:
        accepted = [r for r in rows if r["verdict"] == "accepted"]
        summary = {
            "protocol": args.protocol,
            "trials": args.trials,
            "n": args.n,
            "m": args.m,
            "fidelity": chan.fidelity,
            "epsilon_expected": chan.epsilon,
            "omega": args.omega,
            "threshold_mode": args.threshold_mode,
            "attack": args.attack if isinstance(args.attack, str) else dict(args.attack),
            "seed": args.seed,
            "kprime": args.kprime,
            "accept_rate": len(accepted) / args.trials,
            "mean_qber_estimate": float(np.mean([r["qber_estimate"] for r in rows])),
            "mean_sifted_fraction": float(np.mean(sifted_fractions)),
            "mean_final_len": float(np.mean([r["final_len"] for r in rows])),
            "mean_leaked_bits": float(np.mean([r["leaked_bits"] for r in rows])),
        }
        with open(args.summary, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.transcript and first_transcript is not None:
        first_transcript.write_jsonl(args.transcript)
    return 0


def cmd_bounds(args: argparse.Namespace) -> int:
    if args.grid_n or args.grid_eps:
        if not (args.grid_n and args.grid_eps and args.out):
            raise ConfigError("grid mode needs --grid-n, --grid-eps and --out")
        try:
            ns = [int(x) for x in args.grid_n.split(",") if x.strip()]
            epss = [float(x) for x in args.grid_eps.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad grid value: {exc}") from exc
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["n_pairs", "epsilon", "in_regime", "threshold", "log2_exact",
                 "log2_l1", "log2_l2", "log2_l3", "log2_l4", "log2_l5", "mu",
                 "implied_k", "chain_holds", "secrecy_lower_bound"]
            )
            for n in ns:
                for eps in epss:
                    try:
                        rep = atypical_dim_chain(n, eps)
                    except RegimeError:
                        writer.writerow([n, repr(eps), "false"] + [""] * 11)
                        continue
                    writer.writerow(
                        [n, repr(eps), "true", rep.threshold, repr(rep.log2_exact),
                         repr(rep.log2_l1), repr(rep.log2_l2), repr(rep.log2_l3),
                         repr(rep.log2_l4), repr(rep.log2_l5), repr(rep.mu),
                         repr(rep.implied_k), str(rep.chain_holds()).lower(),
                         repr(secrecy_lower_bound(eps, args.kprime))]
                    )
        return 0
    if args.n is None or args.epsilon is None:
        raise ConfigError("single-point mode needs --n and --epsilon")
    report = atypical_dim_chain(args.n, args.epsilon)
    payload = report.to_dict()
    payload["eve_info_upper"] = eve_info_upper(args.n, args.epsilon, args.theta)
    payload["secrecy_lower_bound"] = secrecy_lower_bound(args.epsilon, args.kprime)
    payload["kprime"] = args.kprime
    payload["theta"] = args.theta
    _emit_json(payload, args.summary)
    return 0


def cmd_attack_eval(args: argparse.Namespace) -> int:
    attack = _load_attack_file(args.attack_file)
    rng = stream(args.seed)
    mean, stderr = axis_averaged_passing_probability(
        attack,
        args.m,
        rng,
        n_samples=args.axis_samples,
        accept=(args.accept_lo, args.accept_hi),
    )
    plan_rng = stream(args.seed, 1)
    indices = tuple(
        int(i) for i in np.sort(plan_rng.choice(attack.n_pairs, size=args.m, replace=False))
    )
    plan = TestPlan(
        indices=indices,
        axes=tuple(MeasurementAxis.from_array(v) for v in random_axes(args.m, plan_rng)),
        accept_lo=args.accept_lo,
        accept_hi=args.accept_hi,
    )
    try:
        holevo = eve_info_bound(conditional_ancilla_state(attack, plan))
    except ValueError:
        holevo = None
    payload = {
        "n_pairs": attack.n_pairs,
        "ancilla_dim": attack.ancilla_dim,
        "m": args.m,
        "accept_interval": [args.accept_lo, args.accept_hi],
        "axis_samples": args.axis_samples,
        "passing_mean": mean,
        "passing_stderr": stderr,
        "holevo_bits_sample_plan": holevo,
    }
    if args.epsilon is not None:
        upper = eve_info_upper(attack.n_pairs, args.epsilon, args.theta)
        payload["eve_info_upper"] = upper
        payload["holevo_within_upper"] = None if holevo is None else holevo <= upper + 1e-9
    _emit_json(payload, args.summary)
    return 0


def cmd_equivalence(args: argparse.Namespace) -> int:
    report = epr_bb84_equivalence_check(args.n, args.fidelity, args.omega, stream(args.seed))
    _emit_json(report.to_dict(), args.summary)
    return 0


def _emit_json(payload: dict, path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
