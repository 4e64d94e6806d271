"""
Relógios das autoridades e dos veículos.

Todo serviço recebe um relógio em vez de chamar `time.time()` diretamente;
assim os testes controlam o tempo e o harness pode comprimi-lo.
"""
import threading
import time


class SystemClock:
    def now(self) -> int:
        return int(time.time())


class ManualClock:
    """Relógio de teste: só anda quando mandado."""

    def __init__(self, start: int = 0):
        self._now = start
        self._lock = threading.Lock()

    def now(self) -> int:
        with self._lock:
            return self._now

    def set(self, value: int) -> None:
        with self._lock:
            self._now = value

    def advance(self, seconds: int) -> int:
        with self._lock:
            self._now += seconds
            return self._now


class ScaledClock:
    """
    Tempo de cenário: `origin` + segundos de parede × `scale`.
    Com scale=60, um minuto de cenário passa a cada segundo real.
    """

    def __init__(self, origin: int = 0, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("time_scale precisa ser positivo")
        self.origin = origin
        self.scale = scale
        self._t0 = time.monotonic()

    def now(self) -> int:
        return self.origin + int((time.monotonic() - self._t0) * self.scale)

    def wall_seconds_until(self, scenario_time: float) -> float:
        due = self._t0 + (scenario_time - self.origin) / self.scale
        return max(0.0, due - time.monotonic())
