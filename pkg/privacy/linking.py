"""
Ataque do observador por tempos de vida: um pseudônimo que termina em t
é ligado ao que começa em t quando ambos são os únicos naquele instante.
"""
from collections import defaultdict
from dataclasses import asdict, dataclass

from core.exceptions import MissingGroundTruth

from .transcript import Transcript

Key = tuple[str, int]


def link_by_lifetime(transcript: Transcript) -> list[tuple[Key, ...]]:
    """Partição determinística dos pseudônimos em cadeias."""
    starts = defaultdict(list)
    ends = defaultdict(list)
    for obs in transcript.observations:
        starts[obs.interval.start].append(obs)
        ends[obs.interval.end].append(obs)

    successor: dict[Key, Key] = {}
    for t, ending in ends.items():
        starting = starts.get(t, [])
        if len(ending) == 1 and len(starting) == 1:
            successor[ending[0].key] = starting[0].key

    has_predecessor = set(successor.values())
    chains = []
    for obs in transcript.observations:
        if obs.key in has_predecessor:
            continue
        chain = [obs.key]
        while chain[-1] in successor:
            chain.append(successor[chain[-1]])
        chains.append(tuple(chain))
    return chains


@dataclass(frozen=True)
class LinkageScore:
    proposed_links: int
    correct_links: int
    true_links: int
    precision: float | None
    recall: float | None
    mean_anonymity_set: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def true_links(transcript: Transcript) -> set[tuple[Key, Key]]:
    """Pares consecutivos de pseudônimos de um mesmo veículo."""
    owners = transcript.owners()
    by_subject = defaultdict(list)
    for obs in transcript.observations:
        if obs.key in owners:
            by_subject[owners[obs.key]].append(obs)
    pairs = set()
    for seq in by_subject.values():
        seq.sort(key=lambda o: o.interval.start)
        pairs.update((a.key, b.key) for a, b in zip(seq, seq[1:]))
    return pairs


def anonymity_sets(transcript: Transcript) -> dict[int, int]:
    """Para cada instante de troca, quantos pseudônimos começam nele."""
    sizes = defaultdict(int)
    for obs in transcript.observations:
        sizes[obs.interval.start] += 1
    return dict(sorted(sizes.items()))


def score_linkage(partition, transcript: Transcript) -> LinkageScore:
    """
    Precisão = ligações corretas / propostas; revocação = corretas / pares
    consecutivos verdadeiros. Indefinidas (None) quando o denominador é zero.

    :raises MissingGroundTruth: se o transcript não traz os donos.
    """
    if not transcript.ground_truth:
        raise MissingGroundTruth()
    proposed = {(a, b) for chain in partition for a, b in zip(chain, chain[1:])}
    truth = true_links(transcript)
    correct = len(proposed & truth)
    sizes = list(anonymity_sets(transcript).values())
    return LinkageScore(
        proposed_links=len(proposed),
        correct_links=correct,
        true_links=len(truth),
        precision=correct / len(proposed) if proposed else None,
        recall=correct / len(truth) if truth else None,
        mean_anonymity_set=sum(sizes) / len(sizes) if sizes else None,
    )
