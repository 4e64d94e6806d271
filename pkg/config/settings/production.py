import os
import dj_database_url
from .base import *

DEBUG = False

ALLOWED_HOSTS = [host for host in os.getenv('VPKI_ALLOWED_HOSTS', '').split(',') if host]

# Configurações de segurança para produção
# O TLS (mútuo para tickets, só servidor para o resto) termina no proxy na frente do gunicorn.
SECURE_PROXY_SSL_HEADER = ('HTTP_X_FORWARDED_PROTO', 'https')

if os.getenv('DATABASE_URL'):
    DATABASES = {
        'default': dj_database_url.config(conn_max_age=600, ssl_require=True)
    }

STATIC_ROOT = BASE_DIR / 'staticfiles'

STORAGES = {
    "default": {
        "BACKEND": "django.core.files.storage.FileSystemStorage",
    },
    # WhiteNoise serve os arquivos estáticos do admin.
    "staticfiles": {
        "BACKEND": "whitenoise.storage.CompressedManifestStaticFilesStorage",
    },
}

# Configuração de LOGGING para vermos os erros em produção
LOGGING['loggers']['django'] = {
    'handlers': ['console'],
    'level': 'ERROR',
    'propagate': True,
}
