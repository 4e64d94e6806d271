from django.http import Http404, HttpResponse, HttpResponseBadRequest
from django.views.decorators.csrf import csrf_exempt
from django.views.decorators.http import require_POST

from . import hosting
from .channels import CLIENT_KEY_HEADER, CLIENT_PROOF_HEADER, SERVER_SIGNATURE_HEADER, WireRequest


def _hex_header(request, name):
    value = request.headers.get(name)
    return bytes.fromhex(value) if value else None


@csrf_exempt
@require_POST
def wire_endpoint(request, ca_id):
    """Binding HTTP do protocolo: o corpo é o frame, a resposta é o frame assinado."""
    endpoint = hosting.get_endpoint(ca_id)
    if endpoint is None:
        raise Http404(f"Nenhuma autoridade {ca_id} neste servidor.")
    try:
        wire_request = WireRequest(
            frame=request.body,
            client_key=_hex_header(request, CLIENT_KEY_HEADER),
            client_proof=_hex_header(request, CLIENT_PROOF_HEADER),
        )
    except ValueError:
        return HttpResponseBadRequest("Cabeçalhos X-Vpki-* malformados.")
    response = endpoint.handle(wire_request)
    reply = HttpResponse(response.frame, content_type='application/octet-stream')
    reply[SERVER_SIGNATURE_HEADER] = response.server_signature.hex()
    return reply
