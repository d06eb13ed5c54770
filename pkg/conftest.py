import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "orbitalcontrol.settings")
django.setup()
