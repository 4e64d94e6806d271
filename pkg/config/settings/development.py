# config/settings/development.py
from .base import *

DEBUG = True

ALLOWED_HOSTS = ['localhost', '127.0.0.1', 'testserver']

# Os testes com threads (concorrência no ledger) precisam de um arquivo de banco,
# não do banco em memória.
DATABASES['default']['TEST'] = {'NAME': BASE_DIR / 'test_db.sqlite3'}
