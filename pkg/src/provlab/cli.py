"""Command-line interface.

Exit codes form the tool's contract and are shared by ``validate`` and the
corpus index: 0 accepted (with or without redaction), 2 rejected,
3 unverifiable, 4 malformed or unreadable input, 5 differential divergence.

The workspace directory comes from ``--workspace`` or the
``PROVLAB_WORKSPACE`` environment variable.  All clocks are explicit
(``--at`` takes an epoch integer or an ISO-8601 UTC stamp); nothing reads
the wall clock, so every invocation is reproducible.
"""

from __future__ import annotations

import argparse
import os
import sys
import time as _time
from datetime import datetime, timezone
from pathlib import Path

from .attacks import (
    ATTACK_MATRIX,
    attack_exclusion_mutate,
    attack_expiry_timewarp,
    attack_sign_with_revoked,
    attack_strip_manifest,
    attack_timestamp_replace,
)
from .container import parse_asset, serialize_asset
from .corpus import (
    BACKDATE_DELTA,
    FAKE_GPS,
    REVOKE_AT,
    REVOKED_VALIDATION_TIME,
    TIMEWARP_VALIDATION_TIME,
    build_corpus,
    tree_digest,
    verify_corpus,
)
from .errors import ProvenanceError
from .signer import (
    DEFAULT_VALIDATION_TIME,
    SCENARIOS,
    SignerConfig,
    build_scenario_content,
    format_gps,
    make_fixture,
    scenario_identity,
)
from .statusservice import run_status_service
from .timestamp import archival_extend
from .trust import decode_revocation_list
from .validator import (
    ValidationPolicy,
    exit_code_for,
    hardened_policy,
    parse_policy_text,
    render_differential,
    render_report,
    spec_policy,
    validate,
    validate_differential,
)
from .workspace import T0, Workspace

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_UNVERIFIABLE = 3
EXIT_MALFORMED = 4
EXIT_DIVERGENT = 5


def parse_time(text: str) -> int:
    """Epoch seconds from an integer literal or ISO-8601 UTC stamp."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"cannot parse time {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return int(stamp.timestamp())


def _workspace(args: argparse.Namespace) -> Workspace:
    root = args.workspace or os.environ.get("PROVLAB_WORKSPACE")
    if not root:
        raise ProvenanceError("no workspace: pass --workspace or set PROVLAB_WORKSPACE")
    return Workspace.load(root)


def _resolve_policy(args: argparse.Namespace, workspace: Workspace, which: str = "policy") -> ValidationPolicy:
    name = getattr(args, which.replace("-", "_"))
    at = parse_time(args.at) if args.at else DEFAULT_VALIDATION_TIME
    crl = None
    if getattr(args, "crl", None):
        crl = decode_revocation_list(Path(args.crl).read_bytes())
    endpoint = None
    if getattr(args, "status_endpoint", None):
        host, _, port = args.status_endpoint.rpartition(":")
        endpoint = (host, int(port))

    if name == "spec":
        return spec_policy(workspace.trust, at)
    if name == "hardened":
        # the workspace authority's live revocation state, unless overridden
        if crl is None:
            crl = workspace.signing.generate_crl()
        return hardened_policy(workspace.trust, at, crl=crl, status_endpoint=endpoint)

    path = Path(name)
    if not path.is_file():
        raise ProvenanceError(f"policy {name!r} is not a preset or a readable file")
    fields = parse_policy_text(path.read_text())
    if "crl_file" in fields:
        crl_path = (path.parent / str(fields.pop("crl_file"))).resolve()
        crl = decode_revocation_list(crl_path.read_bytes())
    if "validation_time" in fields and not args.at:
        at = int(fields.pop("validation_time"))
    else:
        fields.pop("validation_time", None)
    fields.setdefault("name", path.stem)
    return ValidationPolicy(
        trust=workspace.trust, validation_time=at, crl=crl,
        status_endpoint=fields.pop("status_endpoint", endpoint), **fields,  # type: ignore[arg-type]
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_init(args: argparse.Namespace) -> int:
    root = args.workspace or os.environ.get("PROVLAB_WORKSPACE")
    if not root:
        raise ProvenanceError("no workspace: pass --workspace or set PROVLAB_WORKSPACE")
    workspace = Workspace.initialize(root, args.seed)
    print(f"workspace initialised at {workspace.root} (seed {workspace.seed})")
    print(f"trust anchors: {', '.join(c.subject for c in workspace.trust.anchors)}")
    return EXIT_OK


def cmd_sign(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    fixture = make_fixture(workspace, args.scenario, args.seed)
    print(f"scenario: {fixture.scenario.name} ({fixture.scenario.description})")
    print(f"original: {fixture.original_path}")
    print(f"signed:   {fixture.asset_path}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    policy = _resolve_policy(args, workspace)
    try:
        data = Path(args.asset).read_bytes()
    except OSError as exc:
        print(f"error: cannot read {args.asset}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    report = validate(data, policy)
    sys.stdout.write(render_report(report, args.format))
    return exit_code_for(report)


def cmd_diff(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    policy_a = _resolve_policy(args, workspace, "policy-a")
    policy_b = _resolve_policy(args, workspace, "policy-b")
    try:
        data = Path(args.asset).read_bytes()
    except OSError as exc:
        print(f"error: cannot read {args.asset}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    diff = validate_differential(data, policy_a, policy_b)
    sys.stdout.write(render_differential(diff))
    return diff.exit_code


def cmd_attack(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    scenario_name = args.scenario
    if scenario_name not in ATTACK_MATRIX.get(args.name, ()):
        raise ProvenanceError(
            f"attack {args.name!r} does not apply to scenario {scenario_name!r}"
        )
    if args.input:
        asset = parse_asset(Path(args.input).read_bytes())
    else:
        asset_path = workspace.fixtures_dir / scenario_name / "asset.pvl"
        if not asset_path.is_file():
            make_fixture(workspace, scenario_name)
        asset = parse_asset(asset_path.read_bytes())

    if args.name == "timestamp-replace":
        at = parse_time(args.time) if args.time else T0 - BACKDATE_DELTA
        outcome = attack_timestamp_replace(asset, workspace.tsa(), at, workspace.trust)
    elif args.name == "exclusion-mutate":
        payload = (args.payload or format_gps(*FAKE_GPS)).encode("ascii")
        outcome = attack_exclusion_mutate(asset, args.label, payload)
    elif args.name == "sign-with-revoked":
        scenario = SCENARIOS[scenario_name]
        content, assertions, generator = build_scenario_content(scenario, workspace.seed)
        identity = scenario_identity(workspace, scenario)
        config = SignerConfig(
            generator_name=generator,
            key=identity.key,
            chain=identity.chain,
            binding_mode=scenario.binding_mode,
            exclude_labels=scenario.exclude_labels,
            tsa=workspace.tsa(),
            clock=workspace.clock,
        )
        outcome = attack_sign_with_revoked(
            content, assertions, config, workspace.signing,
            REVOKE_AT, REVOKED_VALIDATION_TIME,
        )
        workspace.save()
    elif args.name == "expiry-timewarp":
        at = parse_time(args.time) if args.time else TIMEWARP_VALIDATION_TIME
        outcome = attack_expiry_timewarp(asset, at)
    elif args.name == "strip-manifest":
        outcome = attack_strip_manifest(asset)
    else:
        raise ProvenanceError(f"unknown attack {args.name!r}")

    out = Path(args.out) if args.out else (
        workspace.root / "attacks" / f"{scenario_name}--{outcome.name}.pvl"
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(serialize_asset(outcome.mutated))
    print(f"attack: {outcome.name}")
    print(f"notes: {outcome.notes}")
    print(f"mutated asset: {out}")
    if outcome.validation_time is not None:
        print(f"validate at: {outcome.validation_time}")
    for preset, verdict in outcome.expected.items():
        print(f"expected under {preset}: {verdict.value}")
    return EXIT_OK


def cmd_corpus(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    entries = build_corpus(workspace)
    print(f"corpus: {len(entries)} entries under {workspace.corpus_dir}")
    print(f"tree digest: {tree_digest(workspace.corpus_dir)}")
    if args.check:
        problems = verify_corpus(workspace)
        for problem in problems:
            print(f"MISMATCH: {problem}", file=sys.stderr)
        if problems:
            return 1
        print("all corpus entries match their expected verdicts")
    return EXIT_OK


def cmd_extend(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    asset = parse_asset(Path(args.asset).read_bytes())
    at = parse_time(args.at) if args.at else workspace.clock
    extended = archival_extend(asset, workspace.tsa(), clock=at)
    out = Path(args.out) if args.out else Path(args.asset)
    out.write_bytes(serialize_asset(extended))
    print(f"archival token appended at {at}; written to {out}")
    return EXIT_OK


def cmd_serve_status(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    service = run_status_service(workspace.signing, args.host, args.port)
    host, port = service.endpoint
    print(f"{host}:{port}", flush=True)
    try:
        if args.duration is not None:
            _time.sleep(args.duration)
        else:
            while True:
                _time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    print(f"served {len(service.query_log)} queries")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provlab",
        description="content-provenance laboratory: sign, attack, and validate assets",
    )
    parser.add_argument(
        "--workspace", help="workspace directory (default: $PROVLAB_WORKSPACE)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a seeded workspace")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("sign", help="build and sign a scenario fixture")
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("validate", help="validate an asset under a policy")
    p.add_argument("asset")
    p.add_argument("--policy", default="spec", help="spec, hardened, or a policy file")
    p.add_argument("--at", help="validation time (epoch seconds or ISO-8601)")
    p.add_argument("--format", choices=("human", "structured"), default="human")
    p.add_argument("--crl", help="revocation list file")
    p.add_argument("--status-endpoint", help="host:port of a status service")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("diff", help="validate under two policies and compare")
    p.add_argument("asset")
    p.add_argument("--policy-a", default="spec", dest="policy_a")
    p.add_argument("--policy-b", default="hardened", dest="policy_b")
    p.add_argument("--at", help="validation time (epoch seconds or ISO-8601)")
    p.add_argument("--crl", help="revocation list file")
    p.add_argument("--status-endpoint", help="host:port of a status service")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("attack", help="apply an attack to a fixture asset")
    p.add_argument("name", choices=sorted(ATTACK_MATRIX))
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p.add_argument("--input", help="asset file (default: the scenario fixture)")
    p.add_argument("--out", help="output path for the mutated asset")
    p.add_argument("--time", help="attack-specific time (token time / warp target)")
    p.add_argument("--label", default="meta.gps", help="segment label to mutate")
    p.add_argument("--payload", help="replacement text for exclusion-mutate")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("corpus", help="build the full fixture + attack corpus")
    p.add_argument("--check", action="store_true", help="re-validate against the index")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("extend", help="append an archival timestamp token")
    p.add_argument("asset")
    p.add_argument("--at", help="token time (epoch seconds or ISO-8601)")
    p.add_argument("--out", help="output path (default: in place)")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("serve-status", help="run the certificate status service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--duration", type=float, default=None, help="seconds to serve")
    p.set_defaults(func=cmd_serve_status)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProvenanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
