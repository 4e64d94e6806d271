import json
import logging
from pathlib import Path

from core.exceptions import IoError, MissingGroundTruth

from .collusion import collusion_closure, table_conformance
from .linking import anonymity_sets, link_by_lifetime, score_linkage

logger = logging.getLogger(__name__)


def analyze(transcript, snapshots=None, coalitions=(), table=False) -> dict:
    chains = link_by_lifetime(transcript)
    report = {
        "observations": len(transcript.observations),
        "chains": len(chains),
        "longest_chain": max((len(c) for c in chains), default=0),
        "anonymity_sets": {str(t): n for t, n in anonymity_sets(transcript).items()},
    }
    try:
        report["linkage"] = score_linkage(chains, transcript).as_dict()
    except MissingGroundTruth:
        report["linkage"] = None
    if snapshots is not None:
        report["collusion"] = [collusion_closure(c, snapshots).summary() for c in coalitions]
        if table:
            report["table"] = table_conformance(snapshots)
    return report


def write_report(report: dict, path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"não foi possível gravar {path}: {exc}") from exc
    logger.info("relatório de privacidade em %s", path)
