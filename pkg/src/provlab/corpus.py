"""Reproducible corpus: honest fixtures plus every applicable attack.

``build_corpus`` generates, under ``<workspace>/corpus/``, one directory per
entry (``<scenario>`` for the honest signing, ``<scenario>--<attack>`` for a
mutated variant), a shared revocation list snapshot, and ``index.json``
recording each entry's expected verdict and exit code under both policy
presets.  Everything derives from the workspace seed, so two runs with the
same seed produce byte-identical trees.

The expected verdicts in the index come from the attack toolkit's hand-written
expectations (and a small table for the honest entries), never from running
the validator — ``verify_corpus`` exists precisely to compare the two.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .attacks import (
    ATTACK_MATRIX,
    AttackOutcome,
    attack_exclusion_mutate,
    attack_expiry_timewarp,
    attack_sign_with_revoked,
    attack_strip_manifest,
    attack_timestamp_replace,
)
from .container import Asset, serialize_asset
from .crypto import digest
from .errors import WorkspaceError
from .signer import (
    DEFAULT_VALIDATION_TIME,
    SCENARIOS,
    Fixture,
    SignerConfig,
    build_scenario_content,
    format_gps,
    make_fixture,
    scenario_identity,
)
from .timestamp import archival_extend
from .trust import RevocationList, decode_revocation_list, encode_revocation_list
from .validator import (
    ValidationPolicy,
    Verdict,
    exit_code_for,
    hardened_policy,
    spec_policy,
    validate,
)
from .workspace import DAY, T0, YEAR, Workspace

CORPUS_SCHEMA = "prov-corpus/1"
CRL_FILENAME = "crl.bin"

# trip parameters for the attacked corpus entries
BACKDATE_DELTA = 10 * YEAR
REVOKE_AT = T0 + 30 * DAY
REVOKED_VALIDATION_TIME = T0 + 210 * DAY
ARCHIVAL_EXTEND_AT = T0 + 15 * DAY
TIMEWARP_VALIDATION_TIME = T0 + YEAR
FAKE_GPS = (48.8584, 2.2945)  # nowhere near any seeded fixture coordinate

# verdict each honest (unattacked) entry should earn at the default time
_HONEST_EXPECTED = {
    "honest": {"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
    "gps-excluded": {"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
    "revocable": {"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
    "short-lived-cert": {"spec": Verdict.ACCEPTED, "hardened": Verdict.ACCEPTED},
    "unbound-timestamp": {"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
    "bound-timestamp": {"spec": Verdict.ACCEPTED, "hardened": Verdict.ACCEPTED},
}

_EXIT_BY_VERDICT = {
    Verdict.ACCEPTED: 0,
    Verdict.ACCEPTED_WITH_REDACTION: 0,
    Verdict.REJECTED: 2,
    Verdict.UNVERIFIABLE: 3,
}


@dataclass(frozen=True)
class CorpusEntry:
    path: str  # asset path relative to the workspace root
    scenario: str
    attack: str | None
    intended_policy: str
    validation_time: int
    expected: dict[str, str]  # preset name -> verdict value
    expected_exit: dict[str, int]
    notes: str

    def to_record(self) -> dict:
        return {
            "path": self.path,
            "scenario": self.scenario,
            "attack": self.attack or "none",
            "intended_policy": self.intended_policy,
            "validation_time": self.validation_time,
            "expected": self.expected,
            "expected_exit": self.expected_exit,
            "notes": self.notes,
        }

    @classmethod
    def from_record(cls, record: dict) -> "CorpusEntry":
        attack = record["attack"]
        return cls(
            path=record["path"],
            scenario=record["scenario"],
            attack=None if attack == "none" else attack,
            intended_policy=record["intended_policy"],
            validation_time=record["validation_time"],
            expected=dict(record["expected"]),
            expected_exit={k: int(v) for k, v in record["expected_exit"].items()},
            notes=record["notes"],
        )


def _entry(
    workspace: Workspace,
    asset: Asset,
    scenario_name: str,
    attack: str | None,
    expected: dict[str, Verdict],
    notes: str,
    validation_time: int | None,
) -> CorpusEntry:
    dirname = scenario_name if attack is None else f"{scenario_name}--{attack}"
    directory = workspace.corpus_dir / dirname
    directory.mkdir(parents=True, exist_ok=True)
    asset_path = directory / "asset.pvl"
    asset_path.write_bytes(serialize_asset(asset))
    return CorpusEntry(
        path=str(asset_path.relative_to(workspace.root)),
        scenario=scenario_name,
        attack=attack,
        intended_policy=SCENARIOS[scenario_name].intended_policy,
        validation_time=validation_time
        if validation_time is not None
        else DEFAULT_VALIDATION_TIME,
        expected={name: verdict.value for name, verdict in expected.items()},
        expected_exit={name: _EXIT_BY_VERDICT[verdict] for name, verdict in expected.items()},
        notes=notes,
    )


def _attacked_entry(
    workspace: Workspace, scenario_name: str, outcome: AttackOutcome
) -> CorpusEntry:
    return _entry(
        workspace,
        outcome.mutated,
        scenario_name,
        outcome.name,
        outcome.expected,
        outcome.notes,
        outcome.validation_time,
    )


def build_corpus(workspace: Workspace) -> list[CorpusEntry]:
    """Generate the full corpus tree and return its entries."""
    fixtures: dict[str, Fixture] = {
        name: make_fixture(workspace, name) for name in SCENARIOS
    }
    entries: list[CorpusEntry] = []
    tsa = workspace.tsa()

    # --- attacked variants ------------------------------------------------
    for name in ATTACK_MATRIX["timestamp-replace"]:
        fixture = fixtures[name]
        outcome = attack_timestamp_replace(
            fixture.signed, tsa, T0 - BACKDATE_DELTA, workspace.trust
        )
        entries.append(_attacked_entry(workspace, name, outcome))

    for name in ATTACK_MATRIX["exclusion-mutate"]:
        fixture = fixtures[name]
        payload = format_gps(*FAKE_GPS).encode("ascii")
        outcome = attack_exclusion_mutate(fixture.signed, "meta.gps", payload)
        entries.append(_attacked_entry(workspace, name, outcome))

    for name in ATTACK_MATRIX["sign-with-revoked"]:
        scenario = SCENARIOS[name]
        content, assertions, generator = build_scenario_content(scenario, workspace.seed)
        identity = scenario_identity(workspace, scenario)
        config = SignerConfig(
            generator_name=generator,
            key=identity.key,
            chain=identity.chain,
            binding_mode=scenario.binding_mode,
            exclude_labels=scenario.exclude_labels,
            tsa=tsa,
            clock=workspace.clock,
        )
        outcome = attack_sign_with_revoked(
            content,
            assertions,
            config,
            workspace.signing,
            REVOKE_AT,
            REVOKED_VALIDATION_TIME,
        )
        if serialize_asset(outcome.mutated) != serialize_asset(fixtures[name].signed):
            raise WorkspaceError(
                f"re-signing scenario {name!r} did not reproduce its fixture"
            )
        entries.append(_attacked_entry(workspace, name, outcome))

    for name in ATTACK_MATRIX["expiry-timewarp"]:
        fixture = fixtures[name]
        extended = archival_extend(fixture.signed, tsa, clock=ARCHIVAL_EXTEND_AT)
        outcome = attack_expiry_timewarp(extended, TIMEWARP_VALIDATION_TIME)
        entries.append(_attacked_entry(workspace, name, outcome))

    for name in ATTACK_MATRIX["strip-manifest"]:
        outcome = attack_strip_manifest(fixtures[name].signed)
        entries.append(_attacked_entry(workspace, name, outcome))

    # --- honest entries (after attacks: revocation state is now final) ----
    for name, fixture in fixtures.items():
        entries.append(
            _entry(
                workspace,
                fixture.signed,
                name,
                None,
                _HONEST_EXPECTED[name],
                SCENARIOS[name].description,
                None,
            )
        )

    # snapshot the revocation list that hardened validation will consult
    workspace.save()
    crl = workspace.signing.generate_crl()
    (workspace.corpus_dir / CRL_FILENAME).write_bytes(encode_revocation_list(crl))

    entries.sort(key=lambda e: e.path)
    index = {
        "schema": CORPUS_SCHEMA,
        "seed": workspace.seed,
        "default_validation_time": DEFAULT_VALIDATION_TIME,
        "crl": str((workspace.corpus_dir / CRL_FILENAME).relative_to(workspace.root)),
        "entries": [entry.to_record() for entry in entries],
    }
    (workspace.corpus_dir / "index.json").write_text(
        json.dumps(index, sort_keys=True, indent=2) + "\n"
    )
    return entries


def load_corpus(workspace_root: Path | str) -> tuple[list[CorpusEntry], RevocationList]:
    root = Path(workspace_root)
    index_path = root / "corpus" / "index.json"
    if not index_path.is_file():
        raise WorkspaceError(f"no corpus index at {index_path}")
    index = json.loads(index_path.read_text())
    if index.get("schema") != CORPUS_SCHEMA:
        raise WorkspaceError(f"unknown corpus schema {index.get('schema')!r}")
    entries = [CorpusEntry.from_record(r) for r in index["entries"]]
    crl = decode_revocation_list((root / index["crl"]).read_bytes())
    return entries, crl


def entry_policies(
    workspace: Workspace, entry: CorpusEntry, crl: RevocationList
) -> dict[str, ValidationPolicy]:
    return {
        "spec": spec_policy(workspace.trust, entry.validation_time),
        "hardened": hardened_policy(workspace.trust, entry.validation_time, crl=crl),
    }


def verify_corpus(workspace: Workspace) -> list[str]:
    """Validate every entry under both presets; return expectation mismatches."""
    entries, crl = load_corpus(workspace.root)
    problems: list[str] = []
    for entry in entries:
        data = (workspace.root / entry.path).read_bytes()
        for preset, policy in entry_policies(workspace, entry, crl).items():
            report = validate(data, policy)
            if report.verdict.value != entry.expected[preset]:
                problems.append(
                    f"{entry.path} under {preset}: expected {entry.expected[preset]}, "
                    f"got {report.verdict.value}"
                )
            elif exit_code_for(report) != entry.expected_exit[preset]:
                problems.append(
                    f"{entry.path} under {preset}: expected exit "
                    f"{entry.expected_exit[preset]}, got {exit_code_for(report)}"
                )
    return problems


def tree_digest(root: Path | str) -> str:
    """Hex digest over every file (relative path + contents) under ``root``.

    Deterministic directory fingerprint used to confirm that two corpus
    builds from the same seed are byte-identical.
    """
    root = Path(root)
    leaves = []
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = str(path.relative_to(root)).encode()
        leaves.append(digest(rel) + digest(path.read_bytes()))
    return digest(b"".join(leaves)).hex()
