import random
import struct
from pathlib import Path

import pytest
from django.core.management import call_command
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import T0
from core import crypto, hosting
from core.channels import Channel, LocalTransport, WireRequest
from core.clock import ManualClock, ScaledClock
from core.credentials import (
    Interval,
    LongTermCertificate,
    Role,
    Ticket,
    TrustAnchor,
    TrustStore,
    ValidationResult,
    csr_tbs,
    make_csr,
    sign_credential,
    signature_valid,
    validate_chain,
    verify_pop,
)
from core.encoding import canonical_decode, canonical_encode, decode_tagged, encode_tagged, tbs_bytes
from core.exceptions import (
    DecodeError,
    FrameError,
    PolicyInvalid,
    ReplayedNonce,
    ResponseInvalid,
    ServiceUnavailable,
    StaleTimestamp,
    Unauthorized,
    UnsupportedMessage,
    error_from_code,
)
from core.messages import ErrorBody
from core.models import SerialCounter
from core.policy import load_policy
from core.topology import Topology, build_material
from core.wire import (
    HEADER_SIZE,
    NONCE_MODULUS,
    Envelope,
    Freshness,
    MsgType,
    NonceCache,
    check_freshness,
    deframe,
    frame,
    respond,
)
from directory.messages import DirectoryQuery, DirectoryResult
from ltca.messages import TicketRequest, TicketResponse

TESTDATA = Path(__file__).parent / 'testdata'
TOPOLOGIA_EXEMPLO = Path(__file__).resolve().parent.parent / 'docs' / 'topology.example.json'

RCA = crypto.generate_keypair(b"rca")
LTCA = crypto.generate_keypair(b"ltca")
TRUST = TrustStore((
    TrustAnchor("rca-x", RCA.public, Role.RCA, None, "X"),
    TrustAnchor("ltca-x", LTCA.public, Role.LTCA, "rca-x", "X"),
))


def ticket_assinado(start=T0, end=T0 + 3600, issuer="ltca-x", keypair=LTCA):
    return sign_credential(Ticket(1, b"\x01" * 32, Interval(start, end), end, issuer), keypair)


# --- criptografia ---

def test_hash_bind_vetor_de_referencia():
    digest = crypto.hash_bind("pca-se-1", bytes(32))
    assert digest.hex() == "2a9c4039144dc6ea5bdbc7746bf3390e6a38e25acddcf0615d7f2ce1a3bbae71"


def test_hash_bind_rejeita_entradas_invalidas():
    with pytest.raises(ValueError):
        crypto.hash_bind("", bytes(32))
    with pytest.raises(ValueError):
        crypto.hash_bind("pca", bytes(31))


def test_hash_bind_separa_destinos():
    rnd = crypto.random_rnd()
    assert crypto.hash_bind("pca-a-1", rnd) != crypto.hash_bind("pca-a-2", rnd)


def test_assinatura_tem_largura_fixa_e_verifica():
    kp = crypto.generate_keypair()
    sig = kp.sign(b"mensagem")
    assert len(kp.public) == crypto.PUBLIC_KEY_SIZE
    assert len(sig) == crypto.SIGNATURE_SIZE
    assert crypto.verify(kp.public, b"mensagem", sig)
    assert not crypto.verify(kp.public, b"mensagem!", sig)


def test_verify_nunca_lanca_com_entrada_malformada():
    assert not crypto.verify(b"lixo", b"m", b"\x00" * 64)
    assert not crypto.verify(LTCA.public, b"m", b"curta")
    assert not crypto.verify(b"\x04" + b"\x00" * 64, b"m", b"\x00" * 64)


def test_chave_de_semente_e_reprodutivel():
    assert crypto.generate_keypair(b"s").public == crypto.generate_keypair(b"s").public
    assert crypto.generate_keypair(b"s").public != crypto.generate_keypair(b"t").public


def test_pem_ida_e_volta(tmp_path):
    kp = crypto.generate_keypair()
    assert crypto.load_private_key(crypto.dump_private_key(kp)).public == kp.public


def test_prova_de_posse():
    kp = crypto.generate_keypair()
    csr = make_csr(kp)
    assert verify_pop(csr)
    outro = crypto.generate_keypair()
    assert not verify_pop(type(csr)(public_key=outro.public, pop_signature=csr.pop_signature))


def test_prova_de_posse_assina_a_chave_com_prefixo_de_tamanho():
    kp = crypto.generate_keypair()
    csr = make_csr(kp)
    assert csr_tbs(csr) == struct.pack(">I", len(kp.public)) + kp.public
    assert crypto.verify(kp.public, csr_tbs(csr), csr.pop_signature)
    assert not crypto.verify(kp.public, kp.public, csr.pop_signature)
    # Assinatura sobre a chave crua não vale como prova de posse.
    crua = type(csr)(public_key=kp.public, pop_signature=kp.sign(kp.public))
    assert not verify_pop(crua)


# --- codificação canônica ---

def test_ticket_dourado_bate_byte_a_byte():
    ticket = Ticket(1, b"\xab" * 32, Interval(0, 3600), 3600, "ltca-se", b"Z" * 64)
    golden = (TESTDATA / 'golden_ticket.bin').read_bytes()
    assert encode_tagged(ticket) == golden
    assert decode_tagged(golden, Ticket) == ticket


def test_tbs_nao_inclui_a_assinatura():
    ticket = ticket_assinado()
    sem = Ticket(ticket.serial, ticket.target_digest, ticket.interval, ticket.tkt_expiry, ticket.issuer)
    assert tbs_bytes(ticket) == tbs_bytes(sem)
    assert canonical_encode(ticket) != canonical_encode(sem)


def test_decode_rejeita_truncado_e_sobra():
    raw = canonical_encode(ticket_assinado())
    with pytest.raises(DecodeError):
        canonical_decode(raw[:-1], Ticket)
    with pytest.raises(DecodeError):
        canonical_decode(raw + b"\x00", Ticket)


def test_decode_tagged_confere_o_tipo():
    raw = encode_tagged(ticket_assinado())
    with pytest.raises(DecodeError):
        decode_tagged(raw, LongTermCertificate)
    with pytest.raises(DecodeError):
        decode_tagged(b"XXXX" + raw[4:])


@settings(max_examples=1000, deadline=None)
@given(data=st.data())
def test_qualquer_byte_alterado_invalida_o_ticket(data):
    raw = bytearray(canonical_encode(ticket_assinado()))
    pos = data.draw(st.integers(0, len(raw) - 1))
    raw[pos] ^= data.draw(st.integers(1, 255))
    try:
        mutated = canonical_decode(bytes(raw), Ticket)
    except DecodeError:
        return
    assert validate_chain(mutated, TRUST, T0 + 10) is not ValidationResult.VALID


@settings(max_examples=100, deadline=None)
@given(start=st.integers(0, 2**40), length=st.integers(1, 10**6), step=st.sampled_from([60, 300, 3600]))
def test_snap_outward_contem_e_alinha(start, length, step):
    interval = Interval(start, start + length)
    snapped = interval.snap_outward(step)
    assert interval.within(snapped)
    assert snapped.start % step == 0 and snapped.end % step == 0
    assert snapped.length - interval.length < 2 * step


# --- credenciais ---

def test_intervalo_vazio_e_recusado():
    with pytest.raises(ValueError):
        Interval(10, 10)


def test_validate_chain_cobre_todos_os_resultados():
    ticket = ticket_assinado()
    assert validate_chain(ticket, TRUST, T0 + 1) is ValidationResult.VALID
    assert validate_chain(ticket, TRUST, T0 - 1) is ValidationResult.NOT_YET_VALID
    assert validate_chain(ticket, TRUST, T0 + 3600) is ValidationResult.EXPIRED
    assert validate_chain(ticket_assinado(issuer="ltca-y"), TRUST, T0 + 1) is ValidationResult.UNKNOWN_ISSUER
    forjado = ticket_assinado(keypair=crypto.generate_keypair())
    assert validate_chain(forjado, TRUST, T0 + 1) is ValidationResult.BAD_SIGNATURE


def test_trust_store_exige_cadeia_ate_a_rca():
    with pytest.raises(ValueError):
        TrustStore((TrustAnchor("ltca-x", LTCA.public, Role.LTCA, "rca-x", "X"),))


def test_trust_store_with_anchor_devolve_copia():
    nova = TrustAnchor("pca-x", crypto.generate_keypair(b"p").public, Role.PCA, "rca-x", "X")
    atualizado = TRUST.with_anchor(nova)
    assert TRUST.get("pca-x") is None
    assert atualizado.has_role("pca-x", Role.PCA)


def test_ltc_assinado_confere():
    kp = crypto.generate_keypair()
    ltc = sign_credential(LongTermCertificate(3, "v1", kp.public, Interval(T0, T0 + 10), "ltca-x"), LTCA)
    assert signature_valid(ltc, LTCA.public)
    assert decode_tagged(encode_tagged(ltc)) == ltc


# --- protocolo de fio ---

def test_frame_e_deframe():
    env = Envelope(MsgType.TICKET_REQ, 42, T0, b"abc")
    raw = frame(env)
    assert len(raw) == HEADER_SIZE + 3
    assert deframe(raw) == env


@pytest.mark.parametrize("mutate", [
    lambda raw: b"XPKI" + raw[4:],
    lambda raw: raw[:4] + b"\x02" + raw[5:],
    lambda raw: raw[:-1],
    lambda raw: raw[:10],
])
def test_deframe_recusa_frames_invalidos(mutate):
    raw = frame(Envelope(MsgType.TICKET_REQ, 1, T0, b"abc"))
    with pytest.raises(FrameError):
        deframe(mutate(raw))


def test_resposta_usa_nonce_mais_um_com_volta():
    env = Envelope(MsgType.CRL_REQ, NONCE_MODULUS - 1, T0)
    res = respond(env, b"", T0)
    assert res.nonce == 0
    assert res.msg_type == MsgType.CRL_RES


def test_frescor_recusa_timestamp_velho_e_nonce_repetido():
    clock = ManualClock(T0)
    cache = NonceCache(600, clock)
    env = Envelope(MsgType.CRL_REQ, 7, T0)
    assert check_freshness(Envelope(MsgType.CRL_REQ, 8, T0 - 301), T0, cache) is Freshness.STALE_TIMESTAMP
    assert check_freshness(env, T0, cache) is Freshness.ACCEPT
    assert check_freshness(env, T0, cache) is Freshness.REPLAYED_NONCE


def test_cache_de_nonces_esquece_depois_da_retencao():
    clock = ManualClock(T0)
    cache = NonceCache(600, clock)
    assert cache.check_and_insert(1)
    clock.advance(601)
    assert cache.check_and_insert(1)


def test_cache_de_nonces_cheio_recusa_sem_esquecer():
    clock = ManualClock(T0)
    cache = NonceCache(600, clock, maxsize=3)
    assert all(cache.check_and_insert(n) for n in (1, 2, 3))
    with pytest.raises(ServiceUnavailable):
        cache.check_and_insert(4)
    # Nenhum nonce da janela foi despejado para abrir espaço.
    assert not cache.check_and_insert(1)
    assert len(cache) == 3
    clock.advance(601)
    assert cache.check_and_insert(4)
    assert cache.check_and_insert(1)


def test_familia_de_resolucao_fica_em_0x20_a_0x25():
    familia = [t for t in MsgType if t.name.startswith(("RESOLVE_", "REVOKE_"))]
    assert len(familia) == 6
    assert sorted(familia) == list(range(0x20, 0x26))


def test_deframe_so_devolve_envelope_ou_frame_error():
    rng = random.Random(2024)
    valido = frame(Envelope(MsgType.PSNYM_REQ, 99, T0, bytes(range(40))))
    aceitos = 0
    for _ in range(100_000):
        if rng.random() < 0.5:
            raw = bytearray(valido)
            for _ in range(rng.randint(1, 4)):
                raw[rng.randrange(len(raw))] = rng.randrange(256)
            raw = bytes(raw[:rng.randint(0, len(raw) + 1)])
        else:
            raw = rng.randbytes(rng.randint(0, 80))
        try:
            env = deframe(raw)
        except FrameError:
            continue
        assert isinstance(env, Envelope)
        assert len(raw) == HEADER_SIZE + len(env.payload)
        aceitos += 1
    assert aceitos > 0


def test_erro_reconstruido_pelo_codigo():
    exc = error_from_code(ReplayedNonce.code, "de novo")
    assert isinstance(exc, ReplayedNonce)
    assert str(exc) == "de novo"


# --- canal e despacho ---

def _consulta(implantacao, nonce=5):
    env = Envelope(MsgType.DIR_REQ, nonce, implantacao.clock.now(), canonical_encode(DirectoryQuery(ca_id="ltca-a")))
    return WireRequest(frame(env))


def test_canal_consulta_e_verifica_resposta(implantacao):
    result = implantacao.directory_client().lookup("pca-a-1")
    assert result.role == Role.PCA
    assert result.associations == ("ltca-a",)


def test_frame_repetido_vira_replayed_nonce(implantacao):
    request = _consulta(implantacao)
    first = deframe(implantacao.transport.exchange("directory", request).frame)
    second = deframe(implantacao.transport.exchange("directory", request).frame)
    assert first.msg_type == MsgType.DIR_RES
    assert second.msg_type == MsgType.ERR
    assert canonical_decode(second.payload, ErrorBody).code == ReplayedNonce.code


def test_canal_relanca_erro_do_servidor(implantacao):
    channel = Channel(implantacao.transport, "directory", implantacao.trust.key_of("directory"), implantacao.clock)
    with pytest.raises(StaleTimestamp):
        channel.call(MsgType.DIR_REQ, DirectoryQuery(ca_id="ltca-a"), DirectoryResult, timestamp=T0 - 1000)
    with pytest.raises(UnsupportedMessage):
        channel.call(MsgType.CRL_REQ, DirectoryQuery(ca_id="ltca-a"), DirectoryResult)


def test_canal_recusa_resposta_de_outra_chave(implantacao):
    channel = Channel(implantacao.transport, "directory", implantacao.trust.key_of("ltca-a"), implantacao.clock)
    with pytest.raises(ResponseInvalid):
        channel.call(MsgType.DIR_REQ, DirectoryQuery(ca_id="ltca-a"), DirectoryResult)


def test_rota_mutua_exige_prova_do_cliente(implantacao):
    channel = Channel(implantacao.transport, "ltca-a", implantacao.trust.key_of("ltca-a"), implantacao.clock)
    kp = crypto.generate_keypair()
    ltc = LongTermCertificate(1, "v", kp.public, Interval(T0, T0 + 10), "ltca-a", b"\x00" * 64)
    body = TicketRequest(b"\x00" * 32, Interval(T0, T0 + 3600), ltc)
    with pytest.raises(Unauthorized):
        channel.call(MsgType.TICKET_REQ, body, TicketResponse)


def test_transporte_local_derrubado_nao_responde(implantacao):
    transport = implantacao.transport
    transport.crash("directory")
    assert not transport.is_up("directory")
    with pytest.raises(ServiceUnavailable):
        implantacao.directory_client().lookup("ltca-a")
    transport.restore("directory")
    assert implantacao.directory_client().lookup("ltca-a").ca_id == "ltca-a"


@pytest.mark.django_db
def test_binding_http_serve_o_frame_assinado(client, implantacao):
    endpoint = implantacao.endpoints["directory"]
    hosting.register_endpoint(endpoint)
    try:
        request = _consulta(implantacao, nonce=99)
        response = client.post('/wire/directory/', data=request.frame, content_type='application/octet-stream')
        assert response.status_code == 200
        signature = bytes.fromhex(response['X-Vpki-Server-Signature'])
        assert crypto.verify(implantacao.trust.key_of("directory"), response.content, signature)
        assert deframe(response.content).nonce == 100
        assert client.post('/wire/ninguem/', data=b"", content_type='application/octet-stream').status_code == 404
    finally:
        hosting.unregister_endpoint("directory")


# --- persistência, relógios, política, topologia ---

@pytest.mark.django_db
def test_contador_de_series_em_classes_de_residuo():
    pares = SerialCounter.allocate("pca-x", "pseudonym", count=3, offset=0, stride=2)
    impares = SerialCounter.allocate("pca-x", "pseudonym", count=3, offset=1, stride=2)
    assert all(s % 2 == 0 for s in pares)
    assert all(s % 2 == 1 for s in impares)
    assert SerialCounter.allocate("pca-x", "pseudonym", count=1, offset=0, stride=2)[0] > max(pares)


def test_relogio_escalado_anda_mais_rapido():
    clock = ScaledClock(origin=T0, scale=1000.0)
    assert clock.now() >= T0
    assert clock.wall_seconds_until(T0 + 1000) <= 1.0
    with pytest.raises(ValueError):
        ScaledClock(scale=0)


def test_politica_invalida(tmp_path):
    path = tmp_path / 'policy.json'
    path.write_text('{"ticket_interval_seconds": 1000, "pseudonym_lifetime_seconds": 300}')
    with pytest.raises(PolicyInvalid):
        load_policy(path)
    path.write_text('nada de json')
    with pytest.raises(PolicyInvalid):
        load_policy(path)
    with pytest.raises(PolicyInvalid):
        load_policy(tmp_path / 'nao-existe.json')


def test_politica_valida(tmp_path):
    path = tmp_path / 'policy.json'
    path.write_text('{"ticket_interval_seconds": 3600, "pseudonym_lifetime_seconds": 300}')
    policy = load_policy(path)
    assert policy.slots_per_ticket == 12


def test_topologia_recusa_ids_repetidos():
    raw = TOPOLOGIA_EXEMPLO.read_text().replace('"pca-b-1"', '"pca-a-1"')
    with pytest.raises(ValueError):
        Topology.model_validate_json(raw)


def test_material_tem_uma_ancora_por_autoridade():
    topology = Topology.model_validate_json(TOPOLOGIA_EXEMPLO.read_text())
    material = build_material(topology, seed=3)
    assert set(material.keys) == {a.ca_id for a in material.trust.anchors}
    assert material.trust.get("pca-b-1").parent == "rca-b"
    assert build_material(topology, seed=3).trust == material.trust


def test_bootstrap_grava_chaves_trust_store_e_manifesto(tmp_path):
    call_command('bootstrap_deployment', str(TOPOLOGIA_EXEMPLO), out=str(tmp_path), seed=1)
    trust = decode_tagged((tmp_path / 'truststore.bin').read_bytes(), TrustStore)
    assert trust.has_role("ra-b", Role.RA)
    assert (tmp_path / 'keys' / 'ltca-a.pem').exists()
    assert (tmp_path / 'manifest.bin').exists()
    assert load_policy(tmp_path / 'policy-A.json').pseudonym_lifetime_seconds == 300
