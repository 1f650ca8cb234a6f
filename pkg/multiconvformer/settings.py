import os
import sys
from pathlib import Path

from django.core.management.utils import get_random_secret_key
from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent.parent

# Carrega variáveis do arquivo .env se ele existir
dotenv_path = os.path.join(BASE_DIR, ".env")
if os.path.exists(dotenv_path):
    load_dotenv(dotenv_path)

# --- Configurações de Segurança e Debug ---
SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY")
DEBUG_STRING = os.environ.get("DJANGO_DEBUG", "False")
DEBUG = DEBUG_STRING.lower() in ("true", "1", "t")

if not SECRET_KEY:
    if DEBUG:
        print(
            "AVISO DE DESENVOLVIMENTO: DJANGO_SECRET_KEY não definida, usando uma chave de fallback. Defina no .env!",
            file=sys.stderr,
        )
        SECRET_KEY = "django-insecure-multiconvformer-chave-local-apenas-para-debug"
    else:
        # Sem sessões nem banco: chave efêmera.
        SECRET_KEY = get_random_secret_key()

ALLOWED_HOSTS = []

# --- Configurações de Aplicação ---
# Sem banco de dados: todos os artefatos (datasets, checkpoints, relatórios) são arquivos.
DATABASES = {}

INSTALLED_APPS = [
    "apps.autodiff",
    "apps.layers",
    "apps.attention",
    "apps.multiconv",
    "apps.encoder",
    "apps.ctc",
    "apps.analysis",
    "apps.harness",
]

# --- Configurações Numéricas ---
MULTICONV_TRAIN_DTYPE = os.environ.get("MULTICONV_TRAIN_DTYPE", "float32")
MULTICONV_OUTPUT_ROOT = Path(os.environ.get("MULTICONV_OUTPUT_ROOT", BASE_DIR / "runs"))
MULTICONV_DEFAULT_SEED = int(os.environ.get("MULTICONV_DEFAULT_SEED", "0"))
MULTICONV_GRADCHECK_CONFIGS = int(os.environ.get("MULTICONV_GRADCHECK_CONFIGS", "100"))
MULTICONV_LOG_LEVEL = os.environ.get("MULTICONV_LOG_LEVEL") or ("DEBUG" if DEBUG else "INFO")

# --- Configurações de Internacionalização ---
LANGUAGE_CODE = "pt-br"
TIME_ZONE = "America/Sao_Paulo"
USE_I18N = True
USE_TZ = True

# --- Configurações de Logging ---
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {"format": "{levelname} {name}: {message}", "style": "{"},
    },
    "handlers": {
        "console": {
            "level": MULTICONV_LOG_LEVEL,
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
        "apps": {
            "handlers": ["console"],
            "level": MULTICONV_LOG_LEVEL,
            "propagate": False,
        },
        "core": {
            "handlers": ["console"],
            "level": MULTICONV_LOG_LEVEL,
            "propagate": False,
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
}
