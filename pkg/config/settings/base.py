# config/settings/base.py
import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent

# DEBUG e ALLOWED_HOSTS ficam nos arquivos de cada ambiente
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'fallback_insecure_key')

# Lista de aplicativos instalados (comum a todos os ambientes)
INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    # Nossos Apps
    'core.apps.CoreConfig',
    'ltca.apps.LtcaConfig',
    'pca.apps.PcaConfig',
    'ra.apps.RaConfig',
    'directory.apps.DirectoryConfig',
    'vehicle.apps.VehicleConfig',
    'sim.apps.SimConfig',
    'privacy.apps.PrivacyConfig',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'whitenoise.middleware.WhiteNoiseMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'config.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'config.wsgi.application'

# Banco de dados (pode ser sobrescrito no production.py).
# IMMEDIATE faz cada transaction.atomic() pegar o lock de escrita logo no BEGIN:
# o teste de sobreposição de tickets e o insert ficam serializados.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('VPKI_STATE_PATH', BASE_DIR / 'db.sqlite3'),
        'OPTIONS': {
            'transaction_mode': 'IMMEDIATE',
            'timeout': 30,
            'init_command': 'PRAGMA journal_mode=WAL;',
        },
    }
}

LANGUAGE_CODE = 'pt-br'
TIME_ZONE = 'America/Sao_Paulo'
USE_TZ = True

STATIC_URL = '/static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# --- Parâmetros da VPKI ---
VPKI_CLOCK_SKEW_SECONDS = int(os.getenv('VPKI_CLOCK_SKEW_SECONDS', '300'))
VPKI_NONCE_RETENTION_SECONDS = int(os.getenv('VPKI_NONCE_RETENTION_SECONDS', str(2 * VPKI_CLOCK_SKEW_SECONDS)))
VPKI_NONCE_CACHE_SIZE = int(os.getenv('VPKI_NONCE_CACHE_SIZE', '1000000'))
VPKI_MAX_BATCH = int(os.getenv('VPKI_MAX_BATCH', '1000'))
VPKI_KEY_DIR = Path(os.getenv('VPKI_KEY_DIR', BASE_DIR / 'deployment'))
VPKI_LOG_LEVEL = os.getenv('VPKI_LOG_LEVEL', 'INFO')

# Um logger por app; os módulos usam logging.getLogger(__name__)
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'vpki': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'vpki',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': VPKI_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'ltca', 'pca', 'ra', 'directory', 'vehicle', 'sim', 'privacy')
    },
}
