import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "multiconvformer.settings")
django.setup()
