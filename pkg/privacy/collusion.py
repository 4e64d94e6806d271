"""
O que uma coalizão de autoridades honestas-mas-curiosas consegue derivar
juntando apenas as tabelas que cada uma guarda.

Junções possíveis: pseudônimo -> ticket (PCA), ticket -> veículo (LTCA que
emitiu o ticket), n-tkt -> f-tkt (LTCA estrangeira que fez a troca). O
digest do ticket não abre sem o Rnd, que ninguém guarda, então não serve de
chave de junção.
"""
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from core.encoding import decode_tagged
from core.exceptions import DecodeError, SnapshotMissing
from ltca.snapshot import LtcaSnapshot
from pca.snapshot import PcaSnapshot

Key = tuple[str, int]

_TOKEN = re.compile(r"^(LTCA|PCA)_([A-Z]+)(\d*)$")

# Linhas da tabela de conhecimento: coalizão -> deriva ligações veículo <-> pseudônimo?
TABLE_ROWS = (
    (("LTCA_A",), False),
    (("PCA_A",), False),
    (("LTCA_A", "PCA_A"), True),
    (("LTCA_A", "LTCA_B"), False),
    (("PCA_A", "PCA_B"), False),
    (("LTCA_A", "LTCA_B", "PCA_A", "PCA_B"), True),
)


@dataclass(frozen=True)
class KnowledgeSet:
    entities: frozenset = frozenset()
    identities: frozenset = frozenset()
    intervals: frozenset = frozenset()
    ticket_links: frozenset = frozenset()
    exchange_links: frozenset = frozenset()
    id_links: frozenset = frozenset()

    FACTS = ("identities", "intervals", "ticket_links", "exchange_links", "id_links")

    @property
    def links_identities(self) -> bool:
        return bool(self.id_links)

    def request_groups(self) -> dict[Key, set[Key]]:
        """Pseudônimos agrupados pelo ticket que os pediu (tudo o que uma PCA sozinha sabe)."""
        groups = defaultdict(set)
        for pseudonym, ticket in self.ticket_links:
            groups[ticket].add(pseudonym)
        return dict(groups)

    def issubset(self, other: "KnowledgeSet") -> bool:
        return all(getattr(self, name) <= getattr(other, name) for name in self.FACTS)

    def union_facts(self, other: "KnowledgeSet") -> "KnowledgeSet":
        return KnowledgeSet(
            self.entities | other.entities,
            **{name: getattr(self, name) | getattr(other, name) for name in self.FACTS},
        )

    def summary(self) -> dict:
        return {
            "entities": sorted(self.entities),
            "identities": len(self.identities),
            "intervals": len(self.intervals),
            "ticket_links": len(self.ticket_links),
            "request_groups": len(self.request_groups()),
            "exchange_links": len(self.exchange_links),
            "id_links": len(self.id_links),
            "links_identities": self.links_identities,
        }


@dataclass
class SnapshotSet:
    ltcas: dict[str, LtcaSnapshot] = field(default_factory=dict)
    pcas: dict[str, PcaSnapshot] = field(default_factory=dict)

    def add(self, snapshot) -> None:
        target = self.ltcas if isinstance(snapshot, LtcaSnapshot) else self.pcas
        target[snapshot.ca_id] = snapshot

    @classmethod
    def load(cls, directory) -> "SnapshotSet":
        snapshots = cls()
        for path in sorted(Path(directory).glob("*.snap")):
            try:
                snapshots.add(decode_tagged(path.read_bytes()))
            except DecodeError as exc:
                raise SnapshotMissing(f"{path}: {exc}") from exc
        return snapshots

    def resolve(self, token: str) -> set[str]:
        """LTCA_A = LTCA do domínio A; PCA_A = todas as PCAs de A; PCA_A1 = a primeira delas."""
        if token in self.ltcas or token in self.pcas:
            return {token}
        match = _TOKEN.match(token)
        if match is None:
            raise SnapshotMissing(f"entidade desconhecida: {token}")
        kind, domain, index = match.groups()
        pool = self.ltcas if kind == "LTCA" else self.pcas
        ids = sorted(ca_id for ca_id, snap in pool.items() if snap.domain == domain)
        if index:
            position = int(index) - 1
            ids = ids[position:position + 1] if position >= 0 else []
        if not ids:
            raise SnapshotMissing(f"nenhum snapshot para {token}")
        return set(ids)


def collusion_closure(entities, snapshots: SnapshotSet) -> KnowledgeSet:
    """
    :param entities: CaIds ou tokens (LTCA_A, PCA_A, PCA_A1).
    :raises SnapshotMissing: se alguma entidade não tem snapshot.
    """
    ids = set()
    for token in entities:
        ids |= snapshots.resolve(token)
    ltcas = [snapshots.ltcas[i] for i in sorted(ids) if i in snapshots.ltcas]
    pcas = [snapshots.pcas[i] for i in sorted(ids) if i in snapshots.pcas]

    identities = set()
    intervals = set()
    owner_of_ticket: dict[Key, str] = {}
    exchange_links = set()
    for snap in ltcas:
        identities.update(snap.subjects)
        for row in snap.tickets:
            intervals.add((row.subject_id, row.interval.start, row.interval.end))
            owner_of_ticket[(snap.ca_id, row.ticket_serial)] = row.subject_id
        for row in snap.exchanges:
            exchange_links.add(((snap.ca_id, row.ticket_serial), (row.ftkt_issuer, row.ftkt_serial)))
    home_of = dict(exchange_links)

    ticket_links = set()
    for snap in pcas:
        usage_of = {(u.ticket_issuer, u.ticket_serial) for u in snap.usages}
        for row in snap.pseudonyms:
            ticket = (row.ticket_issuer, row.ticket_serial)
            if ticket in usage_of:
                ticket_links.add(((snap.ca_id, row.serial), ticket))

    id_links = set()
    for pseudonym, ticket in ticket_links:
        subject = owner_of_ticket.get(ticket)
        if subject is None and ticket in home_of:
            subject = owner_of_ticket.get(home_of[ticket])
        if subject is not None:
            id_links.add((subject, pseudonym))

    return KnowledgeSet(
        frozenset(ids),
        frozenset(identities),
        frozenset(intervals),
        frozenset(ticket_links),
        frozenset(exchange_links),
        frozenset(id_links),
    )


def table_conformance(snapshots: SnapshotSet) -> list[dict]:
    """
    Confere cada linha da tabela de conhecimento contra os snapshots: as
    coalizões que não derivam ligações também não podem saber mais do que a
    união do que cada membro sabe sozinho.
    """
    rows = []
    for coalition, expects_links in TABLE_ROWS:
        closure = collusion_closure(coalition, snapshots)
        singles = [collusion_closure((token,), snapshots) for token in coalition]
        union = singles[0]
        for single in singles[1:]:
            union = union.union_facts(single)
        if expects_links:
            ok = closure.links_identities
        else:
            ok = not closure.links_identities and closure.issubset(union)
        rows.append({
            "coalition": list(coalition),
            "expects_links": expects_links,
            "links_identities": closure.links_identities,
            "conforms": ok,
            "knowledge": closure.summary(),
        })
    return rows
