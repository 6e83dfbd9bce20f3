import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'spectral_lab.settings')
django.setup()
