"""Transcript de um observador: pseudônimos vistos no ar e, à parte, o dono verdadeiro de cada um."""
from dataclasses import dataclass

from core.credentials import CA_ID, INTERVAL, Interval
from core.encoding import U64, Canonical, Seq, Str, Struct, register_tag


@dataclass(frozen=True)
class Observation(Canonical):
    serial: int
    issuer: str
    interval: Interval

    __layout__ = (("serial", U64), ("issuer", CA_ID), ("interval", INTERVAL))

    @property
    def key(self) -> tuple[str, int]:
        return (self.issuer, self.serial)


@dataclass(frozen=True)
class Owner(Canonical):
    serial: int
    issuer: str
    subject_id: str

    __layout__ = (("serial", U64), ("issuer", CA_ID), ("subject_id", Str(nonempty=True)))


@register_tag
@dataclass(frozen=True)
class Transcript(Canonical):
    observations: tuple[Observation, ...]
    ground_truth: tuple[Owner, ...] = ()

    __tag__ = b"TRN1"
    __layout__ = (
        ("observations", Seq(Struct(Observation))),
        ("ground_truth", Seq(Struct(Owner))),
    )

    def __post_init__(self):
        observations = tuple(sorted(self.observations, key=lambda o: (o.interval.start, o.issuer, o.serial)))
        object.__setattr__(self, "observations", observations)
        object.__setattr__(self, "ground_truth", tuple(sorted(self.ground_truth, key=lambda o: (o.issuer, o.serial))))

    def owners(self) -> dict[tuple[str, int], str]:
        return {(o.issuer, o.serial): o.subject_id for o in self.ground_truth}

    @classmethod
    def from_events(cls, events) -> "Transcript":
        """Monta o transcript a partir dos eventos de emissão dos veículos."""
        events = list(events)
        return cls(
            tuple(Observation(e.serial, e.issuer, e.interval) for e in events),
            tuple(Owner(e.serial, e.issuer, e.subject_id) for e in events),
        )

    def without_ground_truth(self) -> "Transcript":
        return Transcript(self.observations)
