from django.contrib import admin
from django.urls import path

from core.views import wire_endpoint

urlpatterns = [
    path('admin/', admin.site.urls),
    # Binding HTTP do protocolo binário: um POST por troca requisição/resposta.
    path('wire/<str:ca_id>/', wire_endpoint, name='wire'),
]
