"""
Codificação canônica: a base sobre a qual toda assinatura é calculada.

Regras: campos na ordem de declaração; inteiros sem sinal big-endian de
largura fixa; byte strings e strings com prefixo u32 de tamanho; sequências
com prefixo u32 de contagem; opcionais com um byte de presença; sem padding.

Cada tipo codificável declara `__layout__`, uma tupla de (nome, codec).
Arquivos em disco usam a mesma codificação precedida de uma tag de 4 bytes.
"""
import struct
from dataclasses import fields
from typing import Any, ClassVar

from .exceptions import DecodeError

MAX_ITEMS = 1 << 24


class Reader:
    def __init__(self, data: bytes):
        self._data = memoryview(bytes(data))
        self._pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError("fim inesperado dos dados")
        chunk = self._data[self._pos:self._pos + n].tobytes()
        self._pos += n
        return chunk

    def at_end(self) -> bool:
        return self._pos == len(self._data)


class Codec:
    def write(self, out: bytearray, value: Any) -> None:
        raise NotImplementedError

    def read(self, reader: Reader) -> Any:
        raise NotImplementedError


class _UInt(Codec):
    def __init__(self, fmt: str, bits: int):
        self._struct = struct.Struct(fmt)
        self._max = (1 << bits) - 1

    def write(self, out, value):
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= self._max:
            raise ValueError(f"inteiro fora da faixa: {value!r}")
        out += self._struct.pack(value)

    def read(self, reader):
        return self._struct.unpack(reader.take(self._struct.size))[0]


U8 = _UInt(">B", 8)
U16 = _UInt(">H", 16)
U32 = _UInt(">I", 32)
U64 = _UInt(">Q", 64)


class _Bool(Codec):
    def write(self, out, value):
        out.append(1 if value else 0)

    def read(self, reader):
        flag = reader.take(1)[0]
        if flag > 1:
            raise DecodeError("booleano inválido")
        return flag == 1


BOOL = _Bool()


class Bytes(Codec):
    """Byte string com prefixo u32; `size` fixa o tamanho exigido."""

    def __init__(self, size: int | None = None):
        self.size = size

    def write(self, out, value):
        value = bytes(value)
        if self.size is not None and len(value) != self.size:
            raise ValueError(f"esperados {self.size} bytes, recebidos {len(value)}")
        out += struct.pack(">I", len(value))
        out += value

    def read(self, reader):
        length = U32.read(reader)
        if self.size is not None and length != self.size:
            raise DecodeError(f"tamanho {length} onde {self.size} era exigido")
        return reader.take(length)


BYTES = Bytes()


class Str(Codec):
    def __init__(self, max_bytes: int | None = None, nonempty: bool = False):
        self.max_bytes = max_bytes
        self.nonempty = nonempty

    def write(self, out, value):
        raw = value.encode("utf-8")
        if self.max_bytes is not None and len(raw) > self.max_bytes:
            raise ValueError("string longa demais")
        if self.nonempty and not raw:
            raise ValueError("string vazia")
        BYTES.write(out, raw)

    def read(self, reader):
        raw = BYTES.read(reader)
        if self.max_bytes is not None and len(raw) > self.max_bytes:
            raise DecodeError("string longa demais")
        if self.nonempty and not raw:
            raise DecodeError("string vazia")
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("UTF-8 inválido") from exc


STR = Str()


class Seq(Codec):
    def __init__(self, item: Codec):
        self.item = item

    def write(self, out, value):
        items = list(value)
        U32.write(out, len(items))
        for item in items:
            self.item.write(out, item)

    def read(self, reader):
        count = U32.read(reader)
        if count > MAX_ITEMS:
            raise DecodeError("sequência longa demais")
        return tuple(self.item.read(reader) for _ in range(count))


class Maybe(Codec):
    def __init__(self, inner: Codec):
        self.inner = inner

    def write(self, out, value):
        if value is None:
            out.append(0)
        else:
            out.append(1)
            self.inner.write(out, value)

    def read(self, reader):
        flag = reader.take(1)[0]
        if flag == 0:
            return None
        if flag != 1:
            raise DecodeError("marcador de opcional inválido")
        return self.inner.read(reader)


class EnumCodec(Codec):
    def __init__(self, enum_cls, width: Codec = U8):
        self.enum_cls = enum_cls
        self.width = width

    def write(self, out, value):
        self.width.write(out, int(value))

    def read(self, reader):
        raw = self.width.read(reader)
        try:
            return self.enum_cls(raw)
        except ValueError as exc:
            raise DecodeError(f"valor {raw} inválido para {self.enum_cls.__name__}") from exc


class Struct(Codec):
    def __init__(self, cls):
        self.cls = cls

    def write(self, out, value):
        if not isinstance(value, self.cls):
            raise ValueError(f"esperado {self.cls.__name__}, recebido {type(value).__name__}")
        _write_fields(out, value, self.cls.__layout__)

    def read(self, reader):
        return _read_struct(reader, self.cls)


class Canonical:
    """Mixin dos dataclasses codificáveis."""

    __layout__: ClassVar[tuple]
    __tag__: ClassVar[bytes | None] = None


def _write_fields(out: bytearray, obj, layout) -> None:
    for name, codec in layout:
        codec.write(out, getattr(obj, name))


def _read_struct(reader: Reader, cls):
    values = {name: codec.read(reader) for name, codec in cls.__layout__}
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"{cls.__name__} inválido: {exc}") from exc


def canonical_encode(obj) -> bytes:
    out = bytearray()
    try:
        _write_fields(out, obj, type(obj).__layout__)
    except (ValueError, TypeError, AttributeError, struct.error) as exc:
        raise ValueError(f"não é possível codificar {type(obj).__name__}: {exc}") from exc
    return bytes(out)


def canonical_decode(data: bytes, cls):
    reader = Reader(data)
    obj = _read_struct(reader, cls)
    if not reader.at_end():
        raise DecodeError("bytes sobrando após a estrutura")
    return obj


def tbs_bytes(obj, exclude: str = "signature") -> bytes:
    """Bytes a assinar: a codificação de todos os campos anteriores à assinatura."""
    out = bytearray()
    _write_fields(out, obj, tuple((n, c) for n, c in type(obj).__layout__ if n != exclude))
    return bytes(out)


_TAGS: dict[bytes, type] = {}


def register_tag(cls):
    if cls.__tag__ is None or len(cls.__tag__) != 4:
        raise ValueError(f"{cls.__name__} precisa de uma tag de 4 bytes")
    _TAGS[cls.__tag__] = cls
    return cls


def encode_tagged(obj) -> bytes:
    return type(obj).__tag__ + canonical_encode(obj)


def decode_tagged(data: bytes, expected: type | None = None):
    if len(data) < 4:
        raise DecodeError("arquivo curto demais")
    cls = _TAGS.get(bytes(data[:4]))
    if cls is None:
        raise DecodeError(f"tag desconhecida {bytes(data[:4])!r}")
    if expected is not None and cls is not expected:
        raise DecodeError(f"esperado {expected.__name__}, arquivo contém {cls.__name__}")
    return canonical_decode(data[4:], cls)


def layout_field_names(cls) -> tuple[str, ...]:
    """Nomes de campo na ordem de codificação (usado nos testes de esquema)."""
    names = tuple(name for name, _ in cls.__layout__)
    declared = tuple(f.name for f in fields(cls))
    assert set(names) == set(declared), f"{cls.__name__}: layout e dataclass divergem"
    return names
