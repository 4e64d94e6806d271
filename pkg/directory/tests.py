from dataclasses import replace

import pytest

from conftest import novo_veiculo
from core.credentials import Role
from core.encoding import encode_tagged
from core.exceptions import BadSignature, NotFound, ResponseInvalid

from .client import DirectoryClient
from .manifest import DirectoryEntry, DirectoryManifest, build_manifest, manifest_valid
from .messages import DirectoryResult
from .services import Directory


@pytest.fixture
def manifesto(implantacao):
    keypair = implantacao.material.keys['directory']
    return build_manifest(implantacao.topology, implantacao.trust, keypair, issued_at=0), keypair.public


def test_manifesto_assinado_cobre_todas_as_autoridades(implantacao, manifesto):
    manifest, key = manifesto
    assert manifest_valid(manifest, key)
    assert {e.ca_id for e in manifest.entries} == {a.ca_id for a in implantacao.trust.anchors}


def test_associacoes_por_dominio(implantacao):
    client = implantacao.directory_client()
    assert client.lookup('ltca-a').associations == ('pca-a-1',)
    assert client.lookup('pca-b-1').associations == ('ltca-b',)
    assert client.lookup('ra-a').associations == ('ltca-a', 'pca-a-1')
    assert client.lookup('rca-a').associations == ()


def test_entrada_traz_o_certificado_da_autoridade(implantacao):
    entry = implantacao.directory_client().lookup('pca-a-1')
    assert entry.role == Role.PCA
    assert entry.domain == 'A'
    assert entry.public_key == implantacao.trust.key_of('pca-a-1')
    assert entry.anchor.parent == 'rca-a'


def test_listagem_por_dominio_e_papel(implantacao):
    client = implantacao.directory_client()
    assert [e.ca_id for e in client.list_by_domain('B', Role.PCA)] == ['pca-b-1']
    assert {e.ca_id for e in client.list_by_domain('A')} == {'rca-a', 'ltca-a', 'pca-a-1', 'ra-a'}
    assert client.list_by_domain('Z') == []


def test_entrada_desconhecida(implantacao):
    with pytest.raises(NotFound):
        implantacao.directory_client().lookup('pca-z-9')


def test_manifesto_adulterado_e_recusado(manifesto):
    manifest, key = manifesto
    adulterada = replace(manifest.entries[0], address='http://10.0.0.66:9999')
    outros = tuple(e for e in manifest.entries if e.ca_id != adulterada.ca_id)
    forjado = replace(manifest, entries=outros + (adulterada,))
    with pytest.raises(BadSignature):
        Directory(forjado, key)


def test_manifesto_com_associacao_desconhecida():
    entry = DirectoryEntry('pca-x', Role.PCA, b'', associations=('ltca-fantasma',))
    with pytest.raises(ValueError):
        DirectoryManifest('directory', 0, (entry,))


def test_manifesto_lido_do_arquivo(tmp_path, manifesto):
    manifest, key = manifesto
    path = tmp_path / 'manifest.bin'
    path.write_bytes(encode_tagged(manifest))
    directory = Directory.from_file(path, key)
    assert directory.lookup('directory').role == Role.DIRECTORY


class CanalFalso:
    """Devolve sempre o mesmo resultado, como um diretório comprometido."""

    def __init__(self, result, server_key):
        self.result = result
        self.server_key = server_key

    def call(self, msg_type, body, response_cls):
        return self.result


def test_cliente_recusa_entrada_sem_assinatura_do_diretorio(manifesto):
    manifest, key = manifesto
    entry = replace(manifest.entries[0], signature=b'\x00' * 64)
    client = DirectoryClient(CanalFalso(DirectoryResult((entry,)), key))
    with pytest.raises(ResponseInvalid):
        client.lookup(entry.ca_id)


def test_cliente_recusa_entrada_fora_do_filtro(manifesto):
    manifest, key = manifesto
    entry = next(e for e in manifest.entries if e.domain == 'B')
    client = DirectoryClient(CanalFalso(DirectoryResult((entry,)), key))
    with pytest.raises(ResponseInvalid):
        client.list_by_domain('A')


def test_veiculo_descobre_pcas_pelo_diretorio(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-dir', enroll=False)
    veiculo.directory = implantacao.directory_client()
    assert veiculo.pcas_of('B') == ['pca-b-1']
